//! Seeded test functions on lattices.
//!
//! Box lattices get trigonometric polynomials of degree at most 3 per axis in
//! the periodic angles of the box. The su2 lattice gets polynomials of degree at
//! most 3 in the ambient coordinates `(a, b, c, d)` of the unit quaternion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CdError, Result};
use crate::models::{self, LatticeKind};
use crate::semigroup::DiscreteGenerator;
use crate::symbolic::{FloatPoly, ScalarField};

pub const MAX_DEGREE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Raw polynomials scaled to sup norm 1.
    Plain,
    /// `exp(s g)` with `g` plain and `s` uniform in `[0.5, 1.5]`.
    Positive,
    /// Plain functions minus their mass mean.
    MeanZero,
}

/// Ambient point of the unit quaternion with Hopf coordinates `(eta, xi1, xi2)`.
pub fn hopf_to_ambient(x: &[f64]) -> [f64; 4] {
    let (e, a, b) = (x[0], x[1], x[2]);
    [e.cos() * a.cos(), e.cos() * a.sin(), e.sin() * b.cos(), e.sin() * b.sin()]
}

fn lattice_kind(g: &DiscreteGenerator) -> Result<LatticeKind> {
    let spec = g
        .spec
        .as_ref()
        .ok_or_else(|| CdError::InvalidParameter("test families need a lattice built from a model".into()))?;
    Ok(models::lookup(&spec.model)?.lattice)
}

fn trig(g: &DiscreteGenerator, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let geo = g.geometry.as_ref().ok_or_else(|| CdError::InvalidParameter("lattice has no geometry".into()))?;
    let dim = geo.dim();
    let mut modes: Vec<(Vec<i32>, f64, f64)> = Vec::new();
    let mut k = vec![-MAX_DEGREE; dim];
    loop {
        let k2: i32 = k.iter().map(|v| v * v).sum();
        let damp = 1.0 / (1.0 + k2 as f64);
        modes.push((k.clone(), rng.gen_range(-1.0..1.0) * damp, rng.gen_range(-1.0..1.0) * damp));
        let mut axis = 0;
        while axis < dim {
            k[axis] += 1;
            if k[axis] <= MAX_DEGREE {
                break;
            }
            k[axis] = -MAX_DEGREE;
            axis += 1;
        }
        if axis == dim {
            break;
        }
    }
    Ok(geo
        .coordinates()
        .iter()
        .map(|x| {
            let theta: Vec<f64> = (0..dim)
                .map(|i| 2.0 * std::f64::consts::PI * (x[i] - geo.lower[i]) / geo.lengths[i])
                .collect();
            modes
                .iter()
                .map(|(k, a, b)| {
                    let phase: f64 = k.iter().zip(&theta).map(|(ki, th)| *ki as f64 * th).sum();
                    a * phase.cos() + b * phase.sin()
                })
                .sum()
        })
        .collect())
}

fn ambient(g: &DiscreteGenerator, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut poly = ScalarField::random(4, MAX_DEGREE as u32, rng);
    while poly.degree().unwrap_or(0) == 0 {
        poly = ScalarField::random(4, MAX_DEGREE as u32, rng);
    }
    let fp = FloatPoly::from(&poly);
    g.coordinates().iter().map(|x| fp.eval(&hopf_to_ambient(x))).collect()
}

/// `count` functions from the family of `g`'s model, reproducible from `seed`.
pub fn test_family(g: &DiscreteGenerator, kind: FamilyKind, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let lk = lattice_kind(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut f = match lk {
            LatticeKind::WrappedPolynomial => trig(g, &mut rng)?,
            LatticeKind::Su2Hopf => ambient(g, &mut rng),
        };
        if kind == FamilyKind::MeanZero {
            let m = g.mean(&f);
            f.iter_mut().for_each(|v| *v -= m);
        }
        let sup = f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if !(sup > 1e-12) {
            continue;
        }
        f.iter_mut().for_each(|v| *v /= sup);
        if kind == FamilyKind::Positive {
            let s: f64 = rng.gen_range(0.5..1.5);
            f.iter_mut().for_each(|v| *v = (s * *v).exp());
        }
        out.push(f);
    }
    Ok(out)
}
