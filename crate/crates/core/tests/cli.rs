use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sgwc::classify::{LabeledDataset, OvaSvmModel};
use sgwc::bof::Codebook;
use sgwc::shapes;

fn sgwc(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgwc"))
        .args(args)
        .env("SGWC_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn benchmark(dir: &Path) -> PathBuf {
    shapes::write_benchmark(&dir.join("meshes"), 4, 9).unwrap()
}

fn common_flags<'a>(manifest: &'a str, out: &'a str) -> Vec<&'a str> {
    vec!["--manifest", manifest, "--output-dir", out, "--eigen-count", "30", "--vocabulary-size", "8", "--repetitions", "3"]
}

#[test]
fn every_verb_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = benchmark(dir.path());
    let out = dir.path().join("out");
    let cache = dir.path().join("cache");
    let (manifest, out_s) = (manifest.to_str().unwrap(), out.to_str().unwrap());
    let flags = common_flags(manifest, out_s);

    for verb in ["describe", "vocab", "encode", "train", "evaluate"] {
        let mut args = vec![verb];
        args.extend(&flags);
        let o = sgwc(&args, &cache);
        assert!(o.status.success(), "{verb}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["store.json", "stages.json", "frame_bounds.csv", "report.json", "confusion.csv", "accuracy.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(Codebook::read(&out.join("vocab.bin")).unwrap().k(), 8);
    let ds = LabeledDataset::read(&out.join("dataset.bin")).unwrap();
    assert_eq!((ds.dim(), ds.len(), ds.class_count()), (64, 12, 3));
    assert_eq!(OvaSvmModel::read(&out.join("model.bin")).unwrap().class_count(), 3);
    assert!(cache.join("eigen").read_dir().unwrap().count() >= 12);

    let o = sgwc(&["report", out_s], &cache);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("mean"));
}

#[test]
fn sweep_writes_one_cell_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = benchmark(dir.path());
    let out = dir.path().join("out");
    let mut args = vec!["sweep"];
    let (manifest, out_s) = (manifest.to_str().unwrap(), out.to_str().unwrap());
    args.extend(common_flags(manifest, out_s));
    args.extend(["--sweep-epsilons", "0.05,0.5", "--sweep-vocabulary-sizes", "4,8"]);
    let o = sgwc(&args, &dir.path().join("cache"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn exit_codes_distinguish_partial_failure_and_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = benchmark(dir.path());
    let mut text = std::fs::read_to_string(&manifest).unwrap();
    std::fs::write(dir.path().join("meshes/broken.off"), "OFF\n1 0 0\n0 0 0\n").unwrap();
    text.push_str("broken.off,sphere\n");
    std::fs::write(&manifest, text).unwrap();
    let out = dir.path().join("out");
    let cache = dir.path().join("cache");
    let mut args = vec!["evaluate"];
    args.extend(common_flags(manifest.to_str().unwrap(), out.to_str().unwrap()));
    let o = sgwc(&args, &cache);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("report.json").exists());

    let o = sgwc(&["describe", "--manifest", "/nonexistent/manifest.csv"], &cache);
    assert_eq!(o.status.code(), Some(1));
    let o = sgwc(&["evaluate", "--manifest", manifest.to_str().unwrap(), "--descriptor", "nope"], &cache);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = benchmark(dir.path());
    let out = dir.path().join("out");
    let config = dir.path().join("config.json");
    let json = serde_json::json!({
        "manifest": manifest,
        "eigen_count": 30,
        "descriptor": "shape-dna",
        "repetitions": 2,
        "output_dir": dir.path().join("ignored"),
    });
    std::fs::write(&config, json.to_string()).unwrap();
    let o = sgwc(
        &["evaluate", "--config", config.to_str().unwrap(), "--output-dir", out.to_str().unwrap()],
        &dir.path().join("cache"),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["feature_dim"], 10);
    assert_eq!(report["repetitions"].as_array().unwrap().len(), 2);
    assert!(!dir.path().join("ignored").exists());
}
