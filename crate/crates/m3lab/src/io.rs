//! MFLD1 field files and CSV export.
//!
//! A file is one ASCII header line `MFLD1 <nx> <ny> <ncomp> <lx> <ly>\n`
//! followed by `nx*ny*ncomp` little-endian `f64` values, y outer, x inner,
//! components interleaved per point.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{ComplexField, Grid2, ScalarField, VectorField3};

/// Raw multi-component field as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Mfld {
    pub grid: Grid2,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl Mfld {
    pub fn new(grid: Grid2, ncomp: usize, data: Vec<f64>) -> Result<Self> {
        if ncomp == 0 || data.len() != grid.len() * ncomp {
            return Err(Error::Shape(format!(
                "MFLD1 expects {} values for ncomp = {ncomp}, got {}",
                grid.len() * ncomp,
                data.len()
            )));
        }
        Ok(Self { grid, ncomp, data })
    }

    /// Interleave scalar component fields.
    pub fn from_components(components: &[&ScalarField]) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::Shape("no components".into()))?;
        let grid = first.grid;
        for c in components {
            c.check_grid(&grid)?;
        }
        let mut data = Vec::with_capacity(grid.len() * components.len());
        for n in 0..grid.len() {
            for c in components {
                data.push(c.data[n]);
            }
        }
        Self::new(grid, components.len(), data)
    }

    pub fn component(&self, c: usize) -> ScalarField {
        let data = self.data.iter().skip(c).step_by(self.ncomp).copied().collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn from_vector(v: &VectorField3) -> Self {
        let data = v.data.iter().flat_map(|p| p.iter().copied()).collect();
        Self { grid: v.grid, ncomp: 3, data }
    }

    /// Components `offset..offset+3` as a vector field.
    pub fn vector(&self, offset: usize) -> Result<VectorField3> {
        if offset + 3 > self.ncomp {
            return Err(Error::Shape(format!("no vector at offset {offset} in ncomp = {}", self.ncomp)));
        }
        let data = self
            .data
            .chunks(self.ncomp)
            .map(|p| [p[offset], p[offset + 1], p[offset + 2]])
            .collect();
        Ok(VectorField3 { grid: self.grid, data })
    }

    /// Components `offset, offset+1` as the real and imaginary parts of a
    /// complex field.
    pub fn complex(&self, offset: usize) -> Result<ComplexField> {
        if offset + 2 > self.ncomp {
            return Err(Error::Shape(format!("no complex pair at offset {offset}")));
        }
        let data = self
            .data
            .chunks(self.ncomp)
            .map(|p| num_complex::Complex64::new(p[offset], p[offset + 1]))
            .collect();
        Ok(ComplexField { grid: self.grid, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "MFLD1 {} {} {} {:?} {:?}\n",
            self.grid.nx, self.grid.ny, self.ncomp, self.grid.lx, self.grid.ly
        );
        let mut out = Vec::with_capacity(header.len() + 8 * self.data.len());
        out.extend_from_slice(header.as_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("missing MFLD1 header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format("header is not ASCII".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 6 || parts[0] != "MFLD1" {
            return Err(Error::Format(format!("bad header '{header}'")));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad integer '{s}'")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad length '{s}'")));
        let grid = Grid2::new(num(parts[1])?, num(parts[2])?, real(parts[4])?, real(parts[5])?)?;
        let ncomp = num(parts[3])?;
        let body = &bytes[nl + 1..];
        let expected = grid.len() * ncomp * 8;
        if body.len() != expected {
            return Err(Error::Format(format!("expected {expected} data bytes, found {}", body.len())));
        }
        let data: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("MFLD1 payload"));
        }
        Self::new(grid, ncomp, data)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// CSV with columns `x,y,c0,...`; only for up to four components.
    pub fn to_csv(&self) -> Result<String> {
        if self.ncomp > 4 {
            return Err(Error::Format(format!("CSV export supports ncomp <= 4, got {}", self.ncomp)));
        }
        let mut s = String::from("x,y");
        for c in 0..self.ncomp {
            s.push_str(&format!(",c{c}"));
        }
        s.push('\n');
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                s.push_str(&format!("{:?},{:?}", self.grid.x(i), self.grid.y(j)));
                let n = self.grid.idx(i, j) * self.ncomp;
                for v in &self.data[n..n + self.ncomp] {
                    s.push_str(&format!(",{v:?}"));
                }
                s.push('\n');
            }
        }
        Ok(s)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_csv()?.as_bytes())?;
        Ok(())
    }
}
