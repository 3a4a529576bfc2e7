//! Dilation checks on the Heisenberg group: the improved Sobolev ratio on a
//! family of dilated lattices, and the four scale-invariant assertions of the
//! volume / kernel / Nash / isoperimetric equivalence, each reported separately.

use serde::{Deserialize, Serialize};

use super::{at, families, sobolev_ratio, FamilyKind, InequalityReport, LatticeSemigroup, Sweep, DILATION_TOLERANCE};
use crate::certify::CdParams;
use crate::error::{CdError, Result};
use crate::geometry::{self, CandidateSet};
use crate::models::{self, PeriodicLatticeSpec};
use crate::quadrature;
use crate::semigroup::heisenberg_heat_kernel;

/// Lattices `delta_{1/lambda}(box)` with the same point counts, so that node `i`
/// of every member is the image of node `i` of the `lambda = 1` box and
/// `f o delta_lambda` is the same vector on every member.
pub fn dilation_family(
    model: &str,
    base_lengths: &[f64],
    points: &[usize],
    lambdas: &[f64],
) -> Result<Vec<(f64, LatticeSemigroup)>> {
    let entry = models::lookup(model)?;
    let weights = entry
        .dilation
        .clone()
        .ok_or_else(|| CdError::InvalidParameter(format!("model {model} has no dilations")))?;
    if weights.len() != base_lengths.len() {
        return Err(CdError::DimensionMismatch { expected: weights.len(), found: base_lengths.len() });
    }
    lambdas
        .iter()
        .map(|&l| {
            if !(l > 0.0 && l.is_finite()) {
                return Err(CdError::InvalidParameter(format!("dilation factor must be positive, got {l}")));
            }
            let lengths = base_lengths.iter().zip(&weights).map(|(a, &w)| a / l.powi(w as i32)).collect();
            let spec = PeriodicLatticeSpec::new(model, lengths, points.to_vec());
            Ok((l, LatticeSemigroup::new(&spec, None)?))
        })
        .collect()
}

/// `R(f o delta_lambda) / R(f)` over a mean-zero family, with `R` the improved
/// Sobolev ratio. The reference member is the one with `lambda = 1`.
#[allow(clippy::too_many_arguments)]
pub fn check_improved_sobolev(
    members: &[(f64, LatticeSemigroup)],
    params: &CdParams,
    p: f64,
    q: f64,
    count: usize,
    seed: u64,
    ts: &[f64],
    tol: f64,
) -> Result<InequalityReport> {
    let reference = members
        .iter()
        .position(|(l, _)| *l == 1.0)
        .ok_or_else(|| CdError::InvalidParameter("dilation family needs the member lambda = 1".into()))?;
    let ratios: Vec<Vec<f64>> = members
        .iter()
        .map(|(_, s)| {
            let fs = families::test_family(s.g(), FamilyKind::MeanZero, count, seed)?;
            fs.iter().map(|f| sobolev_ratio(s, f, p, q, ts).map(|r| r.ratio)).collect()
        })
        .collect::<Result<_>>()?;
    let mut sweep = Sweep::default();
    for (m, (lambda, _)) in members.iter().enumerate() {
        for j in 0..count {
            let (r, r0) = (ratios[m][j], ratios[reference][j]);
            sweep.record_value((r / r0 - 1.0).abs(), at(Some(j), None, None, None, r, r0));
        }
        let mean = ratios[m].iter().sum::<f64>() / count as f64;
        sweep.detail(format!("mean_ratio[{lambda}]"), mean);
    }
    Ok(sweep.finish("improved-sobolev-dilation", params, Some(seed), tol))
}

/// `q = p (1 + r / D)`, the exponent with `1/q = 1/p - r/(q D)`.
pub fn nash_exponent(p: f64, r: f64, homogeneous_dim: f64) -> f64 {
    p * (1.0 + r / homogeneous_dim)
}

fn check_nash_exponents(p: f64, q: f64, r: f64, dim: f64) -> Result<()> {
    if !(p >= 1.0 && r >= 1.0 && dim > 0.0 && q > p) {
        return Err(CdError::InvalidParameter(format!("need 1 <= p < q, r >= 1, D > 0; got p={p}, q={q}, r={r}, D={dim}")));
    }
    let gap = 1.0 / q - (1.0 / p - r / (q * dim));
    if gap.abs() > 1e-12 {
        return Err(CdError::InvalidParameter(format!(
            "exponents violate 1/q = 1/p - r/(qD): p={p}, q={q}, r={r}, D={dim}; expected q = {}",
            nash_exponent(p, r, dim)
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub homogeneous_dim: f64,
    pub radii: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub segments: usize,
    pub kernel_times: Vec<f64>,
    pub scales: Vec<f64>,
}

impl EquivalenceConfig {
    pub fn heisenberg(seed: u64) -> Self {
        Self {
            p: 2.0,
            q: 3.0,
            r: 2.0,
            homogeneous_dim: 4.0,
            radii: vec![0.25, 0.5, 1.0, 2.0],
            samples: 100_000,
            seed,
            segments: 16,
            kernel_times: super::log_grid(0.05, 1.0, 8),
            scales: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

pub const VOLUME_TOLERANCE: f64 = 0.10;
pub const SLOPE_TOLERANCE: f64 = 0.2;
pub const KERNEL_TOLERANCE: f64 = 0.05;
pub const ISOPERIMETRIC_TOLERANCE: f64 = 0.02;

/// `exp(-1 / (1 - u^2))` on `[0, 1)` and its derivative.
fn bump(u: f64) -> (f64, f64) {
    if u >= 1.0 {
        return (0.0, 0.0);
    }
    let w = 1.0 - u * u;
    let v = (-1.0 / w).exp();
    (v, -2.0 * u / (w * w) * v)
}

/// Norms of `f = phi(N / R)` on the group. In gauge coordinates
/// `r = s sqrt(cos sigma)`, `z = s^2 sin(sigma) / 4`, Haar measure is
/// `(s^3 / 4) ds dsigma dphi` and `Gamma(N) = cos sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialNorms {
    pub radius: f64,
    pub lq: f64,
    pub lr: f64,
    pub grad_p: f64,
}

pub fn radial_bump_norms(radius: f64, p: f64, q: f64, r: f64) -> RadialNorms {
    use std::f64::consts::{FRAC_PI_2, PI};
    let panels = 64;
    let radial = |e: f64, grad: bool| {
        quadrature::integrate(
            |s: f64| {
                let (v, dv) = bump(s / radius);
                let val = if grad { (dv / radius).abs() } else { v.abs() };
                val.powf(e) * s * s * s / 4.0
            },
            0.0,
            radius,
            panels,
        )
    };
    let angular = |e: f64| quadrature::integrate(|s: f64| s.cos().max(0.0).powf(e), -FRAC_PI_2, FRAC_PI_2, panels);
    let norm = |e: f64| (2.0 * PI * PI * radial(e, false)).powf(1.0 / e);
    RadialNorms {
        radius,
        lq: norm(q),
        lr: norm(r),
        grad_p: (2.0 * PI * radial(p, true) * angular(p / 2.0)).powf(1.0 / p),
    }
}

/// Scale-invariant quantities of the Heisenberg group, each as its own report:
/// `mu(B(0, r)) / r^D` and the log-log slope, `p(0, 0, t) t^{D/2}`, the Nash
/// ratio `||f||_q / (||sqrt Gamma f||_p^{p/q} ||f||_r^{1 - p/q})` along dilations,
/// and `mu(E)^{(D-1)/D} / P(E)` along dilations.
pub fn check_equivalence_chain(cfg: &EquivalenceConfig, params: &CdParams) -> Result<Vec<InequalityReport>> {
    check_nash_exponents(cfg.p, cfg.q, cfg.r, cfg.homogeneous_dim)?;
    let dim = cfg.homogeneous_dim;
    if cfg.radii.len() < 2 || cfg.scales.is_empty() || cfg.kernel_times.is_empty() {
        return Err(CdError::InvalidParameter("equivalence checks need two radii, a scale, and a time".into()));
    }
    let seed = Some(cfg.seed);
    let mut out = Vec::new();

    let volumes: Vec<geometry::VolumeEstimate> = cfg
        .radii
        .iter()
        .map(|&r| geometry::ball_volume(r, cfg.samples, cfg.seed, cfg.segments))
        .collect::<Result<_>>()?;
    let normalized: Vec<f64> = volumes.iter().map(|v| v.value / v.r.powf(dim)).collect();
    let mean = normalized.iter().sum::<f64>() / normalized.len() as f64;
    let mut sweep = Sweep::default();
    for (v, n) in volumes.iter().zip(&normalized) {
        sweep.record_value((n / mean - 1.0).abs(), at(None, None, None, None, *n, mean));
        sweep.detail(format!("volume[{}]", v.r), v.value);
        if v.failures > 0 {
            sweep.note(format!("{} samples at r = {} had no converged path", v.failures, v.r));
        }
    }
    sweep.detail("volume_constant", mean);
    out.push(sweep.finish("equivalence-volume", params, seed, VOLUME_TOLERANCE));

    let pts: Vec<(f64, f64)> = volumes.iter().map(|v| (v.r, v.value)).collect();
    let slope = geometry::log_log_slope(&pts)?;
    let mut sweep = Sweep::default();
    sweep.record_value((slope - dim).abs(), at(None, None, None, None, slope, dim));
    sweep.detail("slope", slope);
    out.push(sweep.finish("equivalence-volume-slope", params, seed, SLOPE_TOLERANCE));

    let scaled: Vec<f64> = cfg
        .kernel_times
        .iter()
        .map(|&t| heisenberg_heat_kernel(t, 0.0, 0.0, 0.0).map(|k| k * t.powf(dim / 2.0)))
        .collect::<Result<_>>()?;
    let mut sweep = Sweep::default();
    for (&t, &k) in cfg.kernel_times.iter().zip(&scaled) {
        sweep.record_value((k / scaled[0] - 1.0).abs(), at(None, Some(t), None, None, k, scaled[0]));
    }
    sweep.detail("kernel_constant", scaled[0]);
    out.push(sweep.finish("equivalence-kernel", params, None, KERNEL_TOLERANCE));

    let theta = cfg.p / cfg.q;
    let nash = |n: &RadialNorms| n.lq / (n.grad_p.powf(theta) * n.lr.powf(1.0 - theta));
    let base = nash(&radial_bump_norms(1.0, cfg.p, cfg.q, cfg.r));
    let mut sweep = Sweep::default();
    for &l in &cfg.scales {
        let v = nash(&radial_bump_norms(l, cfg.p, cfg.q, cfg.r));
        sweep.record_value((v / base - 1.0).abs(), at(None, None, Some(cfg.q), None, v, base));
        sweep.detail(format!("nash_ratio[{l}]"), v);
    }
    out.push(sweep.finish("equivalence-nash", params, None, DILATION_TOLERANCE));

    let bases = [
        CandidateSet::GaugeBall { radius: 1.0 },
        CandidateSet::Tube { rho: 0.6, half_height: 0.4 },
        CandidateSet::Box { a: 0.5, c: 0.3 },
    ];
    let mut sweep = Sweep::default();
    for (j, set) in bases.iter().enumerate() {
        let r0 = geometry::horizontal_perimeter(set)?.isoperimetric_ratio(dim);
        for &l in &cfg.scales {
            let r = geometry::horizontal_perimeter(&set.dilate(l))?.isoperimetric_ratio(dim);
            sweep.record_value((r / r0 - 1.0).abs(), at(Some(j), None, None, None, r, r0));
        }
        sweep.detail(format!("isoperimetric_ratio[{j}]"), r0);
    }
    out.push(sweep.finish("equivalence-isoperimetric", params, None, ISOPERIMETRIC_TOLERANCE));
    Ok(out)
}
