//! Field files: a one-line JSON header followed by little-endian `f64`
//! samples, or a CSV table whose first line carries the same header.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{GridSpec, ScalarField, VectorField};
use crate::error::{FracError, Result};
use crate::scalar::Real;

pub const FIELD_FORMAT: &str = "fracvar-field";
pub const FIELD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub half_width: f64,
    pub m: usize,
    pub components: usize,
    pub support_radius: Option<f64>,
    /// "scalar" or "vector"; a 1D vector field also has one component.
    pub kind: String,
}

impl FieldHeader {
    fn new<T: Real>(spec: &GridSpec<T>, kind: &str, components: usize, support: Option<T>) -> Self {
        Self {
            format: FIELD_FORMAT.to_string(),
            version: FIELD_VERSION,
            n: spec.n(),
            half_width: spec.half_width().as_f64(),
            m: spec.m(),
            components,
            support_radius: support.map(Real::as_f64),
            kind: kind.to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.format != FIELD_FORMAT {
            return Err(FracError::Format(format!("unknown field format '{}'", self.format)));
        }
        if self.version != FIELD_VERSION {
            return Err(FracError::Schema {
                expected: FIELD_VERSION,
                found: self.version,
            });
        }
        Ok(())
    }

    pub fn grid<T: Real>(&self) -> Result<GridSpec<T>> {
        GridSpec::new(self.n, T::lit(self.half_width), self.m)
    }
}

/// A field read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData<T> {
    Scalar(ScalarField<T>),
    Vector(VectorField<T>),
}

impl<T: Real> FieldData<T> {
    fn header(&self) -> FieldHeader {
        match self {
            FieldData::Scalar(f) => FieldHeader::new(f.spec(), "scalar", 1, f.support_radius()),
            FieldData::Vector(v) => FieldHeader::new(v.spec(), "vector", v.spec().n(), v.support_radius()),
        }
    }

    fn columns(&self) -> Vec<&[T]> {
        match self {
            FieldData::Scalar(f) => vec![f.values()],
            FieldData::Vector(v) => v.components().iter().map(Vec::as_slice).collect(),
        }
    }

    fn assemble(header: &FieldHeader, columns: Vec<Vec<T>>) -> Result<Self> {
        let spec = header.grid::<T>()?;
        let support = header.support_radius.map(T::lit);
        if columns.len() != header.components {
            return Err(FracError::Format("column count does not match header".into()));
        }
        match header.kind.as_str() {
            "scalar" if columns.len() == 1 => {
                let col = columns.into_iter().next().expect("one column");
                Ok(FieldData::Scalar(ScalarField::new(spec, col, support)?))
            }
            "vector" => Ok(FieldData::Vector(VectorField::new(spec, columns, support)?)),
            other => Err(FracError::Format(format!("unknown field kind '{other}'"))),
        }
    }
}

/// Writes the binary form.
pub fn write_binary<T: Real, W: Write>(out: &mut W, field: &FieldData<T>) -> Result<()> {
    let header = field.header();
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for col in field.columns() {
        for v in col {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads the binary form.
pub fn read_binary<T: Real, R: BufRead>(input: &mut R) -> Result<FieldData<T>> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    header.validate()?;
    let spec = header.grid::<T>()?;
    let mut columns = Vec::with_capacity(header.components);
    let mut buf = [0u8; 8];
    for _ in 0..header.components {
        let mut col = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            input.read_exact(&mut buf)?;
            col.push(T::lit(f64::from_le_bytes(buf)));
        }
        columns.push(col);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(FracError::Format("trailing bytes after field data".into()));
    }
    FieldData::assemble(&header, columns)
}

/// Writes the CSV form: `# {header}` then one row per node with coordinates
/// followed by the field components.
pub fn write_csv<T: Real, W: Write>(out: &mut W, field: &FieldData<T>) -> Result<()> {
    let header = field.header();
    writeln!(out, "# {}", serde_json::to_string(&header)?)?;
    let spec = header.grid::<T>()?;
    let coord_names = if spec.n() == 1 { vec!["x"] } else { vec!["x", "y"] };
    let mut names: Vec<String> = coord_names.iter().map(|s| s.to_string()).collect();
    for k in 0..header.components {
        names.push(format!("v{k}"));
    }
    writeln!(out, "{}", names.join(","))?;
    let cols = field.columns();
    for i in 0..spec.len() {
        let p = spec.node(i);
        let mut row: Vec<String> = (0..spec.n()).map(|k| format!("{}", p[k].as_f64())).collect();
        for c in &cols {
            row.push(format!("{}", c[i].as_f64()));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads the CSV form.
pub fn read_csv<T: Real, R: BufRead>(input: &mut R) -> Result<FieldData<T>> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| FracError::Format("empty field file".into()))??;
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| FracError::Format("missing field header line".into()))?;
    let header: FieldHeader = serde_json::from_str(json)?;
    header.validate()?;
    let spec = header.grid::<T>()?;
    lines
        .next()
        .ok_or_else(|| FracError::Format("missing column names".into()))??;
    let mut columns = vec![Vec::with_capacity(spec.len()); header.components];
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != spec.n() + header.components {
            return Err(FracError::Format(format!("malformed row '{line}'")));
        }
        for (k, cell) in cells[spec.n()..].iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|e| FracError::Format(format!("bad number '{cell}': {e}")))?;
            columns[k].push(T::lit(v));
        }
    }
    if columns.iter().any(|c| c.len() != spec.len()) {
        return Err(FracError::Format("row count does not match grid".into()));
    }
    FieldData::assemble(&header, columns)
}
