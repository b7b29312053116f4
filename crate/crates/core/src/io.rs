//! File formats: raw fields with a JSON header, diagram and polyline CSV,
//! JSON reports.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::morse::Filament;
use crate::persistence::{PersistenceDiagram, PersistencePair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

pub const LAYOUT: &str = "x-fastest";

/// JSON header describing a raw little-endian value file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dims: Vec<usize>,
    pub dtype: Dtype,
    pub layout: String,
}

/// The raw file next to a header: same stem, `.raw` extension.
pub fn raw_path(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

pub fn read_header(header_path: &Path) -> Result<FieldHeader> {
    Ok(serde_json::from_reader(BufReader::new(File::open(header_path)?))?)
}

pub fn read_field(header_path: &Path) -> Result<ScalarField> {
    let header = read_header(header_path)?;
    if header.layout != LAYOUT {
        return Err(Error::InvalidInput(format!(
            "unsupported layout {:?}, expected {LAYOUT:?}",
            header.layout
        )));
    }
    if header.dims.is_empty() || header.dims.len() > 3 || header.dims.contains(&0) {
        return Err(Error::InvalidInput(format!("bad dims {:?}", header.dims)));
    }
    let mut bytes = Vec::new();
    File::open(raw_path(header_path))?.read_to_end(&mut bytes)?;
    let n: usize = header.dims.iter().product();
    if bytes.len() != n * header.dtype.size() {
        return Err(Error::InvalidInput(format!(
            "raw file has {} bytes, expected {} values of {} bytes",
            bytes.len(),
            n,
            header.dtype.size()
        )));
    }
    let values = match header.dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes"))))
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect(),
    };
    ScalarField::new(&header.dims, values)
}

pub fn write_field(header_path: &Path, field: &ScalarField, dtype: Dtype) -> Result<()> {
    let header = FieldHeader {
        dims: field.dims().to_vec(),
        dtype,
        layout: LAYOUT.to_string(),
    };
    let mut raw = BufWriter::new(File::create(raw_path(header_path))?);
    for &x in field.values() {
        match dtype {
            Dtype::F32 => raw.write_all(&(x as f32).to_le_bytes())?,
            Dtype::F64 => raw.write_all(&x.to_le_bytes())?,
        }
    }
    raw.flush()?;
    let mut h = BufWriter::new(File::create(header_path)?);
    serde_json::to_writer_pretty(&mut h, &header)?;
    h.write_all(b"\n")?;
    h.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct DiagramRow {
    dim: u8,
    birth: f64,
    death: f64,
    birth_vertex: u32,
    death_vertex: u32,
    finite: u8,
}

pub fn write_diagram<W: Write>(out: W, d: &PersistenceDiagram) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in d.pairs() {
        w.serialize(DiagramRow {
            dim: p.dim,
            birth: p.birth,
            death: p.death,
            birth_vertex: p.birth_vertex,
            death_vertex: p.death_vertex,
            finite: u8::from(p.finite),
        })?;
    }
    if d.is_empty() {
        w.write_record(["dim", "birth", "death", "birthVertex", "deathVertex", "finite"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagram<R: Read>(input: R) -> Result<PersistenceDiagram> {
    let mut r = csv::Reader::from_reader(input);
    let mut pairs = Vec::new();
    for row in r.deserialize() {
        let row: DiagramRow = row?;
        if row.finite > 1 || !row.birth.is_finite() || !row.death.is_finite() {
            return Err(Error::InvalidInput(format!("bad diagram row {row:?}")));
        }
        pairs.push(PersistencePair {
            dim: row.dim,
            birth_simplex: None,
            death_simplex: None,
            birth_vertex: row.birth_vertex,
            death_vertex: row.death_vertex,
            birth: row.birth,
            death: row.death,
            finite: row.finite == 1,
        });
    }
    Ok(PersistenceDiagram::new(pairs))
}

pub fn save_diagram(path: &Path, d: &PersistenceDiagram) -> Result<()> {
    write_diagram(BufWriter::new(File::create(path)?), d)
}

pub fn load_diagram(path: &Path) -> Result<PersistenceDiagram> {
    read_diagram(BufReader::new(File::open(path)?))
}

pub fn write_polylines<W: Write>(out: W, filaments: &[Filament]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["polylineId", "x", "y", "z"])?;
    for (id, f) in filaments.iter().enumerate() {
        for p in &f.points {
            w.write_record([id.to_string(), p[0].to_string(), p[1].to_string(), p[2].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
