//! Field snapshot files.
//!
//! Layout: a text header of `key=value` lines (`format-version`, `field-name`,
//! `d`, `N_axis`, `L_box`, `time`, `component-shape`, `endianness`) closed by
//! a line `end-header`, followed by the physical-space samples as
//! little-endian `f64`, component after component, each in row-major grid order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{RealField, Shape, SpectralField};
use crate::grid::Grid;

pub const FORMAT_VERSION: &str = "1";
const END: &str = "end-header";
const REQUIRED: [&str; 8] = ["format-version", "field-name", "d", "N_axis", "L_box", "time", "component-shape", "endianness"];

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field_name: String,
    pub time: f64,
    pub field: SpectralField,
}

pub fn write_snapshot<W: Write>(w: W, name: &str, time: f64, field: &SpectralField) -> Result<()> {
    write_snapshot_with(w, name, time, field, &[])
}

/// As [`write_snapshot`], with extra `key=value` header lines after the
/// required ones. Readers ignore keys they do not know.
pub fn write_snapshot_with<W: Write>(
    mut w: W,
    name: &str,
    time: f64,
    field: &SpectralField,
    extra: &[(&str, &str)],
) -> Result<()> {
    let bad = |s: &str| s.contains('\n') || s.contains('=');
    if bad(name) {
        return Err(Error::Snapshot(format!("invalid field name '{name}'")));
    }
    if let Some((k, v)) = extra.iter().find(|(k, v)| bad(k) || v.contains('\n') || *k == END) {
        return Err(Error::Snapshot(format!("invalid header entry '{k}={v}'")));
    }
    let g = field.grid();
    writeln!(w, "format-version={FORMAT_VERSION}")?;
    writeln!(w, "field-name={name}")?;
    writeln!(w, "d={}", g.dim())?;
    writeln!(w, "N_axis={}", g.n())?;
    writeln!(w, "L_box={:?}", g.l_box())?;
    writeln!(w, "time={time:?}")?;
    writeln!(w, "component-shape={}", field.shape())?;
    writeln!(w, "endianness=little")?;
    for (k, v) in extra {
        writeln!(w, "{k}={v}")?;
    }
    writeln!(w, "{END}")?;
    let mut buf = Vec::with_capacity(field.n_components() * g.len() * 8);
    for comp in field.physical() {
        for v in comp {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save(path: &Path, name: &str, time: f64, field: &SpectralField) -> Result<()> {
    save_with(path, name, time, field, &[])
}

pub fn save_with(path: &Path, name: &str, time: f64, field: &SpectralField, extra: &[(&str, &str)]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_snapshot_with(&mut w, name, time, field, extra)?;
    w.flush()?;
    Ok(())
}

/// Parsed header of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub field_name: String,
    pub dim: usize,
    pub n_axis: usize,
    pub l_box: f64,
    pub time: f64,
    pub shape: Shape,
    /// Header keys beyond the required ones, in sorted order.
    pub extra: BTreeMap<String, String>,
}

fn split_header(bytes: &[u8]) -> Result<(HashMap<String, String>, usize)> {
    let mut keys = HashMap::new();
    let mut pos = 0;
    loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Snapshot("header not terminated".into()))?;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::Snapshot("header is not UTF-8".into()))?;
        pos += nl + 1;
        if line == END {
            return Ok((keys, pos));
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Snapshot(format!("malformed header line '{line}'")))?;
        keys.insert(k.to_string(), v.to_string());
    }
}

fn parse_header(keys: &HashMap<String, String>) -> Result<Header> {
    let get = |k: &str| keys.get(k).ok_or_else(|| Error::Snapshot(format!("missing header key '{k}'")));
    let version = get("format-version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Snapshot(format!("unsupported format-version '{version}'")));
    }
    let endianness = get("endianness")?;
    if endianness != "little" {
        return Err(Error::Snapshot(format!("unsupported endianness '{endianness}'")));
    }
    let num = |k: &str| -> Result<f64> {
        get(k)?.parse::<f64>().map_err(|_| Error::Snapshot(format!("bad value for '{k}'")))
    };
    let int = |k: &str| -> Result<usize> {
        get(k)?.parse::<usize>().map_err(|_| Error::Snapshot(format!("bad value for '{k}'")))
    };
    Ok(Header {
        field_name: get("field-name")?.clone(),
        dim: int("d")?,
        n_axis: int("N_axis")?,
        l_box: num("L_box")?,
        time: num("time")?,
        shape: get("component-shape")?.parse()?,
        extra: keys
            .iter()
            .filter(|(k, _)| !REQUIRED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
    })
}

pub fn read_header_bytes(bytes: &[u8]) -> Result<(Header, usize)> {
    let (keys, offset) = split_header(bytes)?;
    Ok((parse_header(&keys)?, offset))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let (h, offset) = read_header_bytes(&bytes)?;
    let grid: Arc<Grid> = Grid::new(h.dim, h.n_axis, h.l_box)?;
    let body = &bytes[offset..];
    let expected = h.shape.size() * grid.len() * 8;
    if body.len() != expected {
        return Err(Error::Snapshot(format!(
            "payload has {} bytes, expected {expected}",
            body.len()
        )));
    }
    let mut data = Vec::with_capacity(h.shape.size());
    for comp in body.chunks_exact(grid.len() * 8) {
        data.push(
            comp.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect(),
        );
    }
    let field = RealField::new(&grid, h.shape.clone(), data)?.to_spectral();
    Ok(Snapshot {
        field_name: h.field_name,
        time: h.time,
        field,
    })
}

pub fn load(path: &Path) -> Result<Snapshot> {
    read_snapshot(fs::File::open(path)?)
}
