use std::io::{BufRead, Write};
use std::path::Path;

use super::{Mesh, Point3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("off") => Ok(MeshFormat::Off),
            Some("obj") => Ok(MeshFormat::Obj),
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer mesh format from {}",
                path.display()
            ))),
        }
    }
}

pub fn load_mesh(source: impl BufRead, format: MeshFormat) -> Result<Mesh> {
    match format {
        MeshFormat::Off => parse_off(source),
        MeshFormat::Obj => parse_obj(source),
    }
}

pub fn read_mesh(text: &str, format: MeshFormat) -> Result<Mesh> {
    load_mesh(text.as_bytes(), format)
}

/// Non-empty, comment-stripped lines paired with their 1-based line number.
fn content_lines(source: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    source
        .lines()
        .enumerate()
        .filter_map(|(n, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(line) => {
                let body = line.split('#').next().unwrap_or("").trim();
                (!body.is_empty()).then(|| Ok((n + 1, body.to_string())))
            }
        })
}

fn parse_num<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from {token:?}"),
    })
}

fn parse_point<'a>(mut tokens: impl Iterator<Item = &'a str>, line: usize) -> Result<Point3> {
    let mut p = [0.0f64; 3];
    for c in &mut p {
        let tok = tokens.next().ok_or(Error::Parse {
            line,
            msg: "expected three coordinates".into(),
        })?;
        *c = parse_num(tok, line, "coordinate")?;
        if !c.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("non-finite coordinate {tok:?}"),
            });
        }
    }
    Ok(p)
}

fn fan(polygon: &[usize], line: usize, out: &mut Vec<[usize; 3]>) -> Result<()> {
    if polygon.len() < 3 {
        return Err(Error::Parse {
            line,
            msg: format!("face has {} vertices, need at least 3", polygon.len()),
        });
    }
    for w in 1..polygon.len() - 1 {
        out.push([polygon[0], polygon[w], polygon[w + 1]]);
    }
    Ok(())
}

fn parse_off(source: impl BufRead) -> Result<Mesh> {
    let mut lines = content_lines(source);
    let eof = |what: &str| Error::Parse {
        line: 0,
        msg: format!("unexpected end of file while reading {what}"),
    };

    let (line, header) = lines.next().ok_or_else(|| eof("header"))??;
    let mut counts_text = None;
    if let Some(rest) = header.strip_prefix("OFF") {
        if !rest.trim().is_empty() {
            counts_text = Some((line, rest.trim().to_string()));
        }
    } else {
        return Err(Error::Parse {
            line,
            msg: format!("expected OFF header, found {header:?}"),
        });
    }
    let (line, counts) = match counts_text {
        Some(c) => c,
        None => lines.next().ok_or_else(|| eof("counts"))??,
    };
    let mut tok = counts.split_whitespace();
    let mut next_count = |what: &str| -> Result<usize> {
        let t = tok.next().ok_or(Error::Parse {
            line,
            msg: format!("missing {what} count"),
        })?;
        parse_num(t, line, what)
    };
    let nv = next_count("vertex")?;
    let nf = next_count("face")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, text) = lines.next().ok_or_else(|| eof("vertices"))??;
        vertices.push(parse_point(text.split_whitespace(), line)?);
    }

    let mut triangles = Vec::with_capacity(nf);
    let mut polygon = Vec::new();
    for _ in 0..nf {
        let (line, text) = lines.next().ok_or_else(|| eof("faces"))??;
        let mut tok = text.split_whitespace();
        let n: usize = parse_num(tok.next().unwrap_or(""), line, "face size")?;
        polygon.clear();
        for _ in 0..n {
            let t = tok.next().ok_or(Error::Parse {
                line,
                msg: format!("face declares {n} vertices but lists fewer"),
            })?;
            let index: i64 = parse_num(t, line, "vertex index")?;
            if index < 0 || index as usize >= nv {
                return Err(Error::IndexOutOfRange {
                    line,
                    index,
                    count: nv,
                });
            }
            polygon.push(index as usize);
        }
        // Anything after the indices (per-face colour) is ignored.
        fan(&polygon, line, &mut triangles)?;
    }
    Mesh::new(vertices, triangles)
}

fn parse_obj(source: impl BufRead) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for entry in content_lines(source) {
        let (line, text) = entry?;
        let mut tok = text.split_whitespace();
        match tok.next() {
            Some("v") => vertices.push(parse_point(tok, line)?),
            Some("f") => {
                let refs = tok
                    .map(|t| parse_num::<i64>(t.split('/').next().unwrap_or(""), line, "vertex index"))
                    .collect::<Result<Vec<_>>>()?;
                faces.push((line, refs));
            }
            // vn, vt, groups, materials: geometry only.
            _ => {}
        }
    }

    let count = vertices.len();
    let mut triangles = Vec::with_capacity(faces.len());
    let mut polygon = Vec::new();
    for (line, refs) in faces {
        polygon.clear();
        for index in refs {
            let resolved = match index {
                i if i > 0 => i - 1,
                i if i < 0 => count as i64 + i,
                _ => -1,
            };
            if resolved < 0 || resolved as usize >= count {
                return Err(Error::IndexOutOfRange { line, index, count });
            }
            polygon.push(resolved as usize);
        }
        fan(&polygon, line, &mut triangles)?;
    }
    Mesh::new(vertices, triangles)
}

/// Writes the mesh as ASCII OFF with round-trip exact coordinates.
pub fn write_off(mesh: &Mesh, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} {}", mesh.vertex_count(), mesh.triangles().len(), mesh.edges().len())?;
    for v in mesh.vertices() {
        writeln!(out, "{:?} {:?} {:?}", v[0], v[1], v[2])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}
