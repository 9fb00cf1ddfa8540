//! Little-endian binary helpers shared by the cache and model file formats.
//!
//! Every file starts with a 16-byte header: an 8-byte ASCII magic, a `u32`
//! format version and four reserved zero bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub fn write_header(w: &mut impl Write, magic: &[u8; 8]) -> Result<()> {
    w.write_all(magic)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(0)?;
    Ok(())
}

pub fn read_header(r: &mut impl Read, magic: &[u8; 8]) -> Result<()> {
    let mut found = [0u8; 8];
    r.read_exact(&mut found)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&found)
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    r.read_u32::<LittleEndian>()?;
    Ok(())
}

pub fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    Ok(w.write_u64::<LittleEndian>(v)?)
}

pub fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(r.read_u64::<LittleEndian>()?)
}

/// Reads a `u64` count and rejects values that could not be a real size.
pub fn read_len(r: &mut impl Read) -> Result<usize> {
    let v = read_u64(r)?;
    if v > (1 << 40) {
        return Err(Error::Format(format!("implausible length {v}")));
    }
    Ok(v as usize)
}

pub fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_f64::<LittleEndian>(v)?)
}

pub fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(r.read_f64::<LittleEndian>()?)
}

pub fn write_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    r.read_f64_into::<LittleEndian>(&mut out)?;
    Ok(out)
}

pub fn write_string(w: &mut impl Write, s: &str) -> Result<()> {
    write_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_string(r: &mut impl Read) -> Result<String> {
    let n = read_len(r)?;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so concurrent readers never observe a partial file.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut BufWriter<&mut File>) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).at(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::from(e).at(dir))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::from(e.error).at(path))?;
    Ok(())
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::from(e).at(path))
}

/// A dense matrix file: header, row and column counts, column-major values.
pub fn write_matrix(path: &Path, magic: &[u8; 8], m: &nalgebra::DMatrix<f64>) -> Result<()> {
    write_atomic(path, |w| {
        write_header(w, magic)?;
        write_u64(w, m.nrows() as u64)?;
        write_u64(w, m.ncols() as u64)?;
        write_f64s(w, m.as_slice())
    })
}

pub fn read_matrix(path: &Path, magic: &[u8; 8]) -> Result<nalgebra::DMatrix<f64>> {
    let read = || -> Result<nalgebra::DMatrix<f64>> {
        let mut r = open(path)?;
        read_header(&mut r, magic)?;
        let rows = read_len(&mut r)?;
        let cols = read_len(&mut r)?;
        Ok(nalgebra::DMatrix::from_vec(rows, cols, read_f64s(&mut r, rows * cols)?))
    };
    read().map_err(|e| match e {
        e @ Error::File { .. } => e,
        e => e.at(path),
    })
}
