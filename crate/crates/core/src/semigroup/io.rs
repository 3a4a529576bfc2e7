//! Binary lattice functions and the eigendecomposition cache.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::eigen::Spectrum;
use super::lattice::DiscreteGenerator;
use crate::error::{CdError, Result};

const FUNCTION_MAGIC: &[u8; 4] = b"CDLF";
const SPECTRUM_MAGIC: &[u8; 4] = b"CDEG";
const CACHE_VERSION: &str = "cdcalc-eig-1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LatticeHeader {
    pub label: String,
    pub dims: Vec<usize>,
    pub lengths: Vec<f64>,
    pub lower: Vec<f64>,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    pub header: LatticeHeader,
    pub values: Vec<f64>,
    pub mass: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(g: &DiscreteGenerator, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.len() {
            return Err(CdError::DimensionMismatch { expected: g.len(), found: values.len() });
        }
        let (dims, lengths, lower) = match &g.geometry {
            Some(geo) => (geo.points.clone(), geo.lengths.clone(), geo.lower.clone()),
            None => (vec![g.len()], vec![], vec![]),
        };
        Ok(Self {
            header: LatticeHeader { label: g.label.clone(), dims, lengths, lower, len: g.len() },
            values,
            mass: g.mass.clone(),
        })
    }

    /// Layout: magic, little-endian `u64` header length, JSON header, then the
    /// values and the masses as little-endian `f64`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(FUNCTION_MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for v in self.values.iter().chain(&self.mass) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FUNCTION_MAGIC {
            return Err(CdError::InvalidParameter("not a lattice function file".into()));
        }
        let hlen = read_u64(&mut r)? as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let header: LatticeHeader = serde_json::from_slice(&hbuf)?;
        let values = read_f64s(&mut r, header.len)?;
        let mass = read_f64s(&mut r, header.len)?;
        Ok(Self { header, values, mass })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect())
}

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("CDCALC_CACHE").filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// FNV-1a over the operator itself, so any change in assembly invalidates entries.
pub fn cache_key(g: &DiscreteGenerator, modes: Option<usize>) -> u64 {
    let mut h = fnv1a(CACHE_VERSION.as_bytes(), 0xcbf29ce484222325);
    h = fnv1a(g.label.as_bytes(), h);
    h = fnv1a(&(modes.unwrap_or(0) as u64).to_le_bytes(), h);
    h = fnv1a(&(g.len() as u64).to_le_bytes(), h);
    for i in &g.stiffness.indices {
        h = fnv1a(&(*i as u64).to_le_bytes(), h);
    }
    for v in g.stiffness.values.iter().chain(&g.mass) {
        h = fnv1a(&v.to_le_bytes(), h);
    }
    h
}

pub fn write_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SPECTRUM_MAGIC)?;
    let (n, k) = (s.vectors.nrows(), s.vectors.ncols());
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(k as u64).to_le_bytes())?;
    w.write_all(&[s.complete as u8])?;
    for v in s.eigenvalues.iter().chain(&s.residuals) {
        w.write_all(&v.to_le_bytes())?;
    }
    for c in 0..k {
        for r in 0..n {
            w.write_all(&s.vectors[(r, c)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum(path: &Path, expected_n: usize) -> Result<Spectrum> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SPECTRUM_MAGIC {
        return Err(CdError::InvalidParameter("not a spectrum cache file".into()));
    }
    let n = read_u64(&mut r)? as usize;
    let k = read_u64(&mut r)? as usize;
    if n != expected_n {
        return Err(CdError::DimensionMismatch { expected: expected_n, found: n });
    }
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let eigenvalues = read_f64s(&mut r, k)?;
    let residuals = read_f64s(&mut r, k)?;
    let flat = read_f64s(&mut r, n * k)?;
    let vectors = Mat::<f64>::from_fn(n, k, |i, j| flat[j * n + i]);
    Ok(Spectrum { eigenvalues, vectors, residuals, complete: flag[0] == 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, PeriodicLatticeSpec};
    use crate::semigroup::build_generator;

    #[test]
    fn lattice_function_round_trip() {
        let e = models::heisenberg(1).unwrap();
        let g = build_generator(&PeriodicLatticeSpec::uniform(&e, 4)).unwrap();
        let f = LatticeFunction::new(&g, (0..g.len()).map(|i| i as f64 * 0.25 - 3.0).collect()).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"CDLF");
        assert_eq!(LatticeFunction::read_from(&buf[..]).unwrap(), f);
        assert!(LatticeFunction::read_from(&b"XXXX"[..]).is_err());
    }
}
