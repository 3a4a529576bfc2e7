//! Checks of the heat-semigroup inequalities implied by `CD(rho1, rho2, kappa, d)`
//! on lattice semigroups.
//!
//! A sweep evaluates `LHS` and `RHS` at every tested `(f, t, x)` and reports the
//! largest `(LHS - RHS) / (1 + |RHS|)`; positive values are violations. Invariance
//! checks report the largest relative deviation from the reference instead.

pub mod constants;
pub mod families;
pub mod scaling;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::certify::CdParams;
use crate::error::{CdError, Result};
use crate::geometry;
use crate::models::{self, LatticeKind, PeriodicLatticeSpec};
use crate::semigroup::{build_generator, lp_norm, DiscreteGenerator, HeatOperator};

pub use constants::Regime;
pub use families::{hopf_to_ambient, test_family, FamilyKind};
pub use scaling::{check_equivalence_chain, check_improved_sobolev, dilation_family, EquivalenceConfig};

pub const DEFAULT_TOLERANCE: f64 = 0.02;
pub const ULTRACONTRACTIVE_TOLERANCE: f64 = 0.05;
pub const DILATION_TOLERANCE: f64 = 0.05;
/// Largest accepted `max R / min R` over a random improved-Sobolev family.
pub const SOBOLEV_BAND: f64 = 10.0;
/// Norm exponents swept by default.
pub const DEFAULT_NORMS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
/// Eigenvalues of `-L` below this count as the constant mode.
pub const ZERO_MODE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub function: Option<usize>,
    pub t: Option<f64>,
    pub norm: Option<NormExp>,
    pub point: Option<Vec<f64>>,
    #[serde(with = "crate::extended")]
    pub lhs: f64,
    #[serde(with = "crate::extended")]
    pub rhs: f64,
}

/// A norm exponent in `[1, inf]`, serialized as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormExp(#[serde(with = "crate::extended")] pub f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detail {
    pub name: String,
    #[serde(with = "crate::extended")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub params: CdParams,
    pub seed: Option<u64>,
    pub witnesses: usize,
    #[serde(with = "crate::extended")]
    pub max_violation: f64,
    pub worst_case: Option<WorstCase>,
    pub tolerance: f64,
    pub pass: bool,
    pub details: Vec<Detail>,
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub fn detail(&self, name: &str) -> Option<f64> {
        self.details.iter().find(|d| d.name == name).map(|d| d.value)
    }
}

/// Running maximum of relative violations.
#[derive(Clone, Debug)]
pub struct Sweep {
    max: f64,
    worst: Option<WorstCase>,
    count: usize,
    details: Vec<Detail>,
    notes: Vec<String>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, worst: None, count: 0, details: vec![], notes: vec![] }
    }
}

impl Sweep {
    pub fn record(&mut self, lhs: f64, rhs: f64, at: WorstCase) {
        let v = (lhs - rhs) / (1.0 + rhs.abs());
        self.record_value(if v.is_nan() { f64::INFINITY } else { v }, at);
    }

    pub fn record_value(&mut self, v: f64, at: WorstCase) {
        self.count += 1;
        if v > self.max || self.worst.is_none() {
            self.max = v;
            self.worst = Some(at);
        }
    }

    pub fn detail(&mut self, name: impl Into<String>, value: f64) {
        self.details.push(Detail { name: name.into(), value });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn finish(self, name: &str, params: &CdParams, seed: Option<u64>, tolerance: f64) -> InequalityReport {
        InequalityReport {
            name: name.into(),
            params: *params,
            seed,
            witnesses: self.count,
            max_violation: self.max,
            worst_case: self.worst,
            tolerance,
            pass: self.max <= tolerance,
            details: self.details,
            notes: self.notes,
        }
    }
}

fn at(function: Option<usize>, t: Option<f64>, norm: Option<f64>, point: Option<Vec<f64>>, lhs: f64, rhs: f64) -> WorstCase {
    WorstCase { function, t, norm: norm.map(NormExp), point, lhs, rhs }
}

/// A lattice generator with its spectral heat semigroup.
#[derive(Clone, Debug)]
pub struct LatticeSemigroup {
    pub kind: LatticeKind,
    pub generator: DiscreteGenerator,
    pub heat: HeatOperator,
}

impl LatticeSemigroup {
    pub fn new(spec: &PeriodicLatticeSpec, modes: Option<usize>) -> Result<Self> {
        let generator = build_generator(spec)?;
        let heat = HeatOperator::new(&generator, modes)?;
        Ok(Self { kind: models::lookup(&spec.model)?.lattice, generator, heat })
    }

    pub fn g(&self) -> &DiscreteGenerator {
        &self.generator
    }

    /// `P_t f` for every `t` and `f`, indexed `[t][f]`.
    pub fn heat_batch(&self, fs: &[Vec<f64>], ts: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        let proj = self.heat.project(fs)?;
        ts.iter().map(|&t| self.heat.evaluate(&proj, t)).collect()
    }

    fn point(&self, i: usize) -> Option<Vec<f64>> {
        self.generator.geometry.as_ref().map(|g| g.coordinate(i))
    }

    /// `lambda_1`, the smallest eigenvalue of `-L` above [`ZERO_MODE`].
    pub fn spectral_gap(&self) -> Result<f64> {
        self.heat
            .spectrum
            .neg_eigenvalues()
            .into_iter()
            .find(|&l| l > ZERO_MODE)
            .ok_or_else(|| CdError::Eigensolver("no nonzero eigenvalue among the computed modes".into()))
    }

    fn grad_norm(&self, f: &[f64], pn: f64) -> f64 {
        let g = self.generator.gamma(f);
        let root: Vec<f64> = g.iter().map(|v| v.max(0.0).sqrt()).collect();
        lp_norm(&root, &self.generator.mass, pn)
    }
}

/// `n` logarithmically spaced times in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn require_positive_functions(fs: &[Vec<f64>]) -> Result<()> {
    for (j, f) in fs.iter().enumerate() {
        if f.iter().any(|&v| !(v > 0.0)) {
            return Err(CdError::InvalidParameter(format!("test function {j} is not strictly positive")));
        }
    }
    Ok(())
}

fn check_norms(norms: &[f64]) -> Result<()> {
    norms.iter().try_for_each(|&n| constants::check_norm(n))
}

/// Pointwise Li-Yau inequality `Gamma(ln P_t f) <= alpha L P_t f / P_t f + beta`
/// with the constants of `regime`.
pub fn check_li_yau(
    s: &LatticeSemigroup,
    p: &CdParams,
    regime: Regime,
    fs: &[Vec<f64>],
    ts: &[f64],
) -> Result<Sweep> {
    require_positive_functions(fs)?;
    let coeffs: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| match regime {
            Regime::Zero => constants::li_yau_zero(p, t),
            Regime::Positive => constants::li_yau_positive(p, t),
        })
        .collect::<Result<_>>()?;
    let g = s.g();
    let mut sweep = Sweep::default();
    let batch = s.heat_batch(fs, ts)?;
    for (ti, (&t, us)) in ts.iter().zip(&batch).enumerate() {
        let (alpha, beta) = coeffs[ti];
        for (j, u) in us.iter().enumerate() {
            if let Some(i) = u.iter().position(|&v| !(v > 0.0)) {
                sweep.note(format!("P_t f lost positivity for function {j} at t = {t}"));
                sweep.record_value(f64::INFINITY, at(Some(j), Some(t), None, s.point(i), f64::INFINITY, 0.0));
                continue;
            }
            let ln: Vec<f64> = u.iter().map(|v| v.ln()).collect();
            let lhs = g.gamma(&ln);
            let lu = g.apply(u);
            let (mut worst, mut wi, mut wl, mut wr) = (f64::NEG_INFINITY, 0, 0.0, 0.0);
            for i in 0..u.len() {
                let rhs = alpha * lu[i] / u[i] + beta;
                let v = (lhs[i] - rhs) / (1.0 + rhs.abs());
                if v > worst {
                    (worst, wi, wl, wr) = (v, i, lhs[i], rhs);
                }
            }
            sweep.record(wl, wr, at(Some(j), Some(t), None, s.point(wi), wl, wr));
        }
    }
    Ok(sweep)
}

pub fn check_li_yau_zero(
    s: &LatticeSemigroup,
    p: &CdParams,
    fs: &[Vec<f64>],
    ts: &[f64],
    seed: Option<u64>,
    tol: f64,
) -> Result<InequalityReport> {
    Ok(check_li_yau(s, p, Regime::Zero, fs, ts)?.finish("li-yau-zero", p, seed, tol))
}

pub fn check_li_yau_positive(
    s: &LatticeSemigroup,
    p: &CdParams,
    fs: &[Vec<f64>],
    ts: &[f64],
    seed: Option<u64>,
    tol: f64,
) -> Result<InequalityReport> {
    constants::require_positive(p)?;
    Ok(check_li_yau(s, p, Regime::Positive, fs, ts)?.finish("li-yau-positive", p, seed, tol))
}

/// `||sqrt Gamma(P_t f)||_pn <= C(t) ||f||_pn`.
#[allow(clippy::too_many_arguments)]
pub fn check_gradient_bounds(
    s: &LatticeSemigroup,
    p: &CdParams,
    regime: Regime,
    fs: &[Vec<f64>],
    ts: &[f64],
    norms: &[f64],
    seed: Option<u64>,
    tol: f64,
) -> Result<InequalityReport> {
    check_norms(norms)?;
    let batch = s.heat_batch(fs, ts)?;
    let mut sweep = Sweep::default();
    for (&t, us) in ts.iter().zip(&batch) {
        for &pn in norms {
            let c = constants::gradient_bound(p, regime, pn, t)?;
            for (j, (f, u)) in fs.iter().zip(us).enumerate() {
                let lhs = s.grad_norm(u, pn);
                let rhs = c * lp_norm(f, &s.g().mass, pn);
                sweep.record(lhs, rhs, at(Some(j), Some(t), Some(pn), None, lhs, rhs));
            }
        }
    }
    let name = match regime {
        Regime::Zero => "gradient-bound-zero",
        Regime::Positive => "gradient-bound-positive",
    };
    Ok(sweep.finish(name, p, seed, tol))
}

/// Pointwise `Gamma(P_t f) <= gamma(t) (P_t f^2 - (P_t f)^2)`.
pub fn check_reverse_poincare(
    s: &LatticeSemigroup,
    p: &CdParams,
    fs: &[Vec<f64>],
    ts: &[f64],
    seed: Option<u64>,
    tol: f64,
) -> Result<InequalityReport> {
    constants::require_positive(p)?;
    let gammas: Vec<f64> = ts.iter().map(|&t| constants::reverse_poincare(p, t)).collect::<Result<_>>()?;
    let mut all: Vec<Vec<f64>> = fs.to_vec();
    all.extend(fs.iter().map(|f| f.iter().map(|v| v * v).collect::<Vec<f64>>()));
    let batch = s.heat_batch(&all, ts)?;
    let nf = fs.len();
    let mut sweep = Sweep::default();
    let mut min_var = f64::INFINITY;
    for (ti, &t) in ts.iter().enumerate() {
        for j in 0..nf {
            let u = &batch[ti][j];
            let u2 = &batch[ti][nf + j];
            let lhs = s.g().gamma(u);
            let (mut worst, mut wi, mut wl, mut wr) = (f64::NEG_INFINITY, 0, 0.0, 0.0);
            for i in 0..u.len() {
                let var = u2[i] - u[i] * u[i];
                min_var = min_var.min(var);
                let rhs = gammas[ti] * var;
                let v = (lhs[i] - rhs) / (1.0 + rhs.abs());
                if v > worst {
                    (worst, wi, wl, wr) = (v, i, lhs[i], rhs);
                }
            }
            sweep.record(wl, wr, at(Some(j), Some(t), None, s.point(wi), wl, wr));
        }
    }
    sweep.detail("min_variance", min_var);
    if min_var < -1e-8 {
        sweep.note(format!("P_t f^2 - (P_t f)^2 reached {min_var:.3e}; the lattice semigroup is not Markov"));
    }
    Ok(sweep.finish("reverse-poincare", p, seed, tol))
}

/// `||f - P_t f||_pn <= C(t) ||sqrt Gamma(f)||_pn`.
#[allow(clippy::too_many_arguments)]
pub fn check_pseudo_poincare(
    s: &LatticeSemigroup,
    p: &CdParams,
    regime: Regime,
    fs: &[Vec<f64>],
    ts: &[f64],
    norms: &[f64],
    dual: bool,
    seed: Option<u64>,
    tol: f64,
) -> Result<InequalityReport> {
    check_norms(norms)?;
    let batch = s.heat_batch(fs, ts)?;
    let mass = &s.g().mass;
    let mut sweep = Sweep::default();
    for (&t, us) in ts.iter().zip(&batch) {
        for &pn in norms {
            let c = constants::pseudo_poincare(p, regime, pn, t, dual)?;
            for (j, (f, u)) in fs.iter().zip(us).enumerate() {
                let diff: Vec<f64> = f.iter().zip(u).map(|(a, b)| a - b).collect();
                let lhs = lp_norm(&diff, mass, pn);
                let rhs = c * s.grad_norm(f, pn);
                sweep.record(lhs, rhs, at(Some(j), Some(t), Some(pn), None, lhs, rhs));
            }
        }
    }
    if dual {
        sweep.note("p >= 2 branch evaluated with the conjugate exponent");
    }
    let name = match regime {
        Regime::Zero => "pseudo-poincare-zero",
        Regime::Positive => "pseudo-poincare-positive",
    };
    Ok(sweep.finish(name, p, seed, tol))
}

/// `||f - f_M||_pn <= C_pn ||sqrt Gamma(f)||_pn`, plus the spectral form
/// `lambda_1 >= 1 / C_2^2`.
pub fn check_poincare(
    s: &LatticeSemigroup,
    p: &CdParams,
    fs: &[Vec<f64>],
    norms: &[f64],
    seed: Option<u64>,
    tol: f64,
) -> Result<InequalityReport> {
    check_norms(norms)?;
    let g = s.g();
    let mut sweep = Sweep::default();
    for &pn in norms {
        let c = constants::poincare(p, pn)?;
        for (j, f) in fs.iter().enumerate() {
            let m = g.mean(f);
            let centered: Vec<f64> = f.iter().map(|v| v - m).collect();
            let lhs = lp_norm(&centered, &g.mass, pn);
            let rhs = c * s.grad_norm(f, pn);
            sweep.record(lhs, rhs, at(Some(j), None, Some(pn), None, lhs, rhs));
        }
    }
    let c2 = constants::poincare(p, 2.0)?;
    let lambda1 = s.spectral_gap()?;
    let bound = 1.0 / (c2 * c2);
    sweep.record(bound, lambda1, at(None, None, Some(2.0), None, bound, lambda1));
    sweep.detail("lambda1", lambda1);
    sweep.detail("inverse_c2_squared", bound);
    Ok(sweep.finish("poincare", p, seed, tol))
}

/// Eigenvector form of the `pn < 2`, `rho1 = 0` pseudo-Poincare bound:
/// `1 - e^{-lambda t} <= sqrt((2 + 4 kappa/rho2) t) sqrt(lambda)` for every
/// eigenvalue `lambda` of `-L`. Exact, so the tolerance is zero.
pub fn pseudo_poincare_spectral(eigs: &[f64], p: &CdParams, ts: &[f64]) -> Result<InequalityReport> {
    let mut sweep = Sweep::default();
    for &t in ts {
        let c = constants::pseudo_poincare(p, Regime::Zero, 1.0, t, false)?;
        for &l in eigs {
            let l = l.max(0.0);
            let lhs = -(-l * t).exp_m1();
            let rhs = c * l.sqrt();
            sweep.record(lhs, rhs, at(None, Some(t), Some(2.0), None, lhs, rhs));
        }
    }
    sweep.detail("eigenvalues", eigs.len() as f64);
    Ok(sweep.finish("pseudo-poincare-spectral", p, None, 0.0))
}

/// Eigenvector form of the `pn = 2`, `rho1 = 0` gradient bound:
/// `sqrt(lambda) e^{-lambda t} <= sqrt((1 + 2 kappa/rho2) / 2t)`.
pub fn gradient_spectral(eigs: &[f64], p: &CdParams, ts: &[f64]) -> Result<InequalityReport> {
    let mut sweep = Sweep::default();
    for &t in ts {
        let c = constants::gradient_bound(p, Regime::Zero, 2.0, t)?;
        for &l in eigs {
            let l = l.max(0.0);
            let lhs = l.sqrt() * (-l * t).exp();
            sweep.record(lhs, c, at(None, Some(t), Some(2.0), None, lhs, c));
        }
    }
    Ok(sweep.finish("gradient-bound-spectral", p, None, 0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub alpha: f64,
    #[serde(with = "crate::extended")]
    pub value: f64,
    pub t_grid: Vec<f64>,
    /// Time of the supremum, after refinement between grid neighbours.
    pub t_star: Option<f64>,
    /// The supremum sits at a grid end, so `value` only bounds the norm from below.
    pub lower_bound: bool,
}

/// `sup_t t^{-alpha/2} ||P_t f||_inf` over `ts`, refined by golden-section search
/// around the best grid time. A non-vanishing constant mode makes the norm infinite.
pub fn besov_norm(s: &LatticeSemigroup, f: &[f64], alpha: f64, ts: &[f64]) -> Result<BesovNorm> {
    if !(alpha < 0.0) {
        return Err(CdError::InvalidParameter(format!("Besov exponent must be negative, got {alpha}")));
    }
    if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CdError::InvalidParameter("t grid must be positive and increasing".into()));
    }
    let spec = &s.heat.spectrum;
    let proj = s.heat.project(&[f.to_vec()])?;
    let k = proj.coeffs.nrows();
    let fsup = f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let constant: f64 = (0..k)
        .filter(|&r| -spec.eigenvalues[r] <= ZERO_MODE)
        .map(|r| {
            let v = &spec.vectors;
            let vmax = (0..v.nrows()).fold(0.0f64, |a, i| a.max(v[(i, r)].abs()));
            proj.coeffs[(r, 0)].abs() * vmax
        })
        .sum();
    if constant > 1e-10 * fsup.max(f64::MIN_POSITIVE) {
        return Ok(BesovNorm { alpha, value: f64::INFINITY, t_grid: ts.to_vec(), t_star: None, lower_bound: false });
    }
    let weight = |t: f64| t.powf(-alpha / 2.0);
    let scaled = Mat::<f64>::from_fn(k, ts.len(), |r, c| proj.coeffs[(r, 0)] * (spec.eigenvalues[r] * ts[c]).exp());
    let vals = &spec.vectors * &scaled;
    let sup_at = |c: usize| (0..vals.nrows()).fold(0.0f64, |a, i| a.max(vals[(i, c)].abs()));
    let grid: Vec<f64> = (0..ts.len()).map(|c| weight(ts[c]) * sup_at(c)).collect();
    let best = (0..grid.len()).fold(0, |b, c| if grid[c] > grid[b] { c } else { b });
    let lower_bound = best == 0 || best + 1 == grid.len();
    if lower_bound {
        return Ok(BesovNorm { alpha, value: grid[best], t_grid: ts.to_vec(), t_star: Some(ts[best]), lower_bound });
    }
    let eval = |t: f64| -> Result<f64> {
        let u = s.heat.evaluate(&proj, t)?;
        Ok(weight(t) * u[0].iter().fold(0.0f64, |a, b| a.max(b.abs())))
    };
    let (mut a, mut b) = (ts[best - 1].ln(), ts[best + 1].ln());
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = eval(x1.exp())?;
    let mut f2 = eval(x2.exp())?;
    for _ in 0..60 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = eval(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = eval(x2.exp())?;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let (tv, fv) = if f1 >= f2 { (x1.exp(), f1) } else { (x2.exp(), f2) };
    let (t_star, value) = if fv >= grid[best] { (tv, fv) } else { (ts[best], grid[best]) };
    Ok(BesovNorm { alpha, value, t_grid: ts.to_vec(), t_star: Some(t_star), lower_bound })
}

/// `R(f) = ||f||_q / (||sqrt Gamma f||_p^theta ||f||_B^{1 - theta})`, `theta = p/q`,
/// with the Besov exponent `theta / (theta - 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevRatio {
    #[serde(with = "crate::extended")]
    pub ratio: f64,
    pub lq: f64,
    pub grad_p: f64,
    pub besov: BesovNorm,
    /// The Besov norm is infinite and the inequality says nothing.
    pub vacuous: bool,
}

pub fn sobolev_ratio(s: &LatticeSemigroup, f: &[f64], p: f64, q: f64, ts: &[f64]) -> Result<SobolevRatio> {
    if !(p >= 1.0 && q > p && q.is_finite()) {
        return Err(CdError::InvalidParameter(format!("need 1 <= p < q < inf, got p = {p}, q = {q}")));
    }
    let theta = p / q;
    let besov = besov_norm(s, f, theta / (theta - 1.0), ts)?;
    let lq = lp_norm(f, &s.g().mass, q);
    let grad_p = s.grad_norm(f, p);
    let vacuous = besov.value.is_infinite();
    let ratio = if vacuous { 0.0 } else { lq / (grad_p.powf(theta) * besov.value.powf(1.0 - theta)) };
    Ok(SobolevRatio { ratio, lq, grad_p, besov, vacuous })
}

/// Invariance of `R` along a family indexed by `lambda`; the first member is the
/// reference. Vacuous members are reported and skipped.
pub fn check_ratio_invariance(
    name: &str,
    p: &CdParams,
    members: &[(f64, f64)],
    seed: Option<u64>,
    tol: f64,
) -> Result<InequalityReport> {
    let (_, reference) = *members
        .first()
        .ok_or_else(|| CdError::InvalidParameter("empty family".into()))?;
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(CdError::InvalidParameter(format!("reference ratio must be positive, got {reference}")));
    }
    let mut sweep = Sweep::default();
    for (j, &(lambda, r)) in members.iter().enumerate() {
        let dev = (r / reference - 1.0).abs();
        sweep.record_value(dev, at(Some(j), None, None, None, r, reference));
        sweep.detail(format!("ratio[{lambda}]"), r);
    }
    Ok(sweep.finish(name, p, seed, tol))
}

/// Boundedness of `R` over a random family: `max R / min R <= band`.
pub fn check_sobolev_band(p: &CdParams, ratios: &[f64], seed: Option<u64>, band: f64) -> Result<InequalityReport> {
    let live: Vec<f64> = ratios.iter().copied().filter(|r| *r > 0.0 && r.is_finite()).collect();
    if live.is_empty() {
        return Err(CdError::InvalidParameter("no non-vacuous ratio in the family".into()));
    }
    let lo = live.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = live.iter().copied().fold(0.0, f64::max);
    let mut sweep = Sweep::default();
    sweep.record(hi / lo, band, at(None, None, None, None, hi / lo, band));
    sweep.detail("min_ratio", lo);
    sweep.detail("max_ratio", hi);
    sweep.detail("vacuous", (ratios.len() - live.len()) as f64);
    Ok(sweep.finish("improved-sobolev-band", p, seed, 0.0))
}

/// `lambda_1 >= rho1 rho2 / ((d - 1)/d rho2 + kappa)`, compared with the lattice
/// spectrum. When `certified_rho1` is given and `p.rho1` exceeds it, the report
/// fails regardless of the margin.
pub fn check_lichnerowicz(s: &LatticeSemigroup, p: &CdParams, certified_rho1: Option<f64>) -> Result<InequalityReport> {
    let bound = constants::lichnerowicz(p)?;
    let lambda1 = s.spectral_gap()?;
    let mut sweep = Sweep::default();
    sweep.record(bound, lambda1, at(None, None, None, None, bound, lambda1));
    sweep.detail("lambda1", lambda1);
    sweep.detail("bound", bound);
    sweep.detail("margin", lambda1 - bound);
    let mut uncertified = false;
    if let Some(c) = certified_rho1 {
        sweep.detail("certified_rho1", c);
        if p.rho1 > c + 1e-12 {
            uncertified = true;
            sweep.note(format!("rho1 = {} exceeds the certified value {c}", p.rho1));
        }
    }
    let mut r = sweep.finish("lichnerowicz", p, None, 0.0);
    r.pass &= !uncertified;
    Ok(r)
}

/// A set with its measure (normalized) and horizontal perimeter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateMeasure {
    pub name: String,
    pub measure: f64,
    pub perimeter: f64,
}

/// Closed-form su2 candidates: geodesic balls about the identity,
/// `mu = (r - sin r cos r)/pi`, `P = sin^2 r / 4`, and Hopf tubes `{eta < eta0}`,
/// `mu = sin^2 eta0`, `P = sin(2 eta0)/2`.
pub fn su2_candidates() -> Vec<CandidateMeasure> {
    let mut out = Vec::new();
    for k in 1..=16 {
        let r = std::f64::consts::PI * k as f64 / 16.0;
        out.push(CandidateMeasure {
            name: format!("cap r={r:.4}"),
            measure: (r - r.sin() * r.cos()) / std::f64::consts::PI,
            perimeter: r.sin().powi(2) / 4.0,
        });
    }
    for k in 1..16 {
        let e = std::f64::consts::FRAC_PI_2 * k as f64 / 16.0;
        out.push(CandidateMeasure {
            name: format!("tube eta0={e:.4}"),
            measure: e.sin().powi(2),
            perimeter: 0.5 * (2.0 * e).sin(),
        });
    }
    out
}

/// Lattice indicator candidates on the su2 lattice: Hopf slabs, half-spaces in
/// `xi1`, and caps `{a >= cos r}` in the ambient chart, with discrete perimeters.
pub fn su2_lattice_candidates(s: &LatticeSemigroup) -> Result<Vec<CandidateMeasure>> {
    if s.kind != LatticeKind::Su2Hopf {
        return Err(CdError::InvalidParameter("su2 lattice candidates need the su2 lattice".into()));
    }
    let g = s.g();
    let coords = g.coordinates();
    let mut sets: Vec<(String, Vec<f64>)> = Vec::new();
    let dims = g.geometry.as_ref().map(|geo| geo.points[0]).unwrap_or(1);
    for k in 1..dims {
        let e0 = std::f64::consts::FRAC_PI_2 * k as f64 / dims as f64;
        sets.push((format!("slab eta<{e0:.4}"), coords.iter().map(|x| (x[0] < e0) as u8 as f64).collect()));
    }
    sets.push(("half xi1<pi".into(), coords.iter().map(|x| (x[1] < std::f64::consts::PI) as u8 as f64).collect()));
    for k in 1..=8 {
        let r = std::f64::consts::PI * k as f64 / 8.0;
        let c = r.cos();
        sets.push((format!("cap r={r:.4}"), coords.iter().map(|x| (hopf_to_ambient(x)[0] >= c) as u8 as f64).collect()));
    }
    let mut out = Vec::new();
    for (name, ind) in sets {
        let measure = g.inner(&ind, &vec![1.0; ind.len()]);
        if measure <= 0.0 {
            continue;
        }
        out.push(CandidateMeasure { name, measure, perimeter: geometry::lattice_perimeter(g, &ind)? });
    }
    Ok(out)
}

/// `P(E)/mu(E) >= (1/2) sqrt(rho1/2) / (1 + 2 kappa/rho2)` for every candidate
/// with `mu(E) <= 1/2`, and `mu(E)(1 - mu(E)) <= K P(E)` for all of them.
pub fn check_cheeger(
    p: &CdParams,
    candidates: &[CandidateMeasure],
    total_measure: f64,
    tol: f64,
) -> Result<InequalityReport> {
    if (total_measure - 1.0).abs() > 1e-9 {
        return Err(CdError::InvalidParameter(format!("Cheeger checks need a normalized measure, total is {total_measure}")));
    }
    let bound = constants::cheeger(p)?;
    let k = constants::cheeger_product(p)?;
    let mut sweep = Sweep::default();
    let mut best_ratio = f64::INFINITY;
    for (j, c) in candidates.iter().enumerate() {
        let prod = c.measure * (1.0 - c.measure);
        let rhs = k * c.perimeter;
        sweep.record(prod, rhs, at(Some(j), None, None, None, prod, rhs));
        if c.measure <= 0.5 + 1e-12 && c.measure > 0.0 {
            let ratio = c.perimeter / c.measure;
            best_ratio = best_ratio.min(ratio);
            sweep.record(bound, ratio, at(Some(j), None, None, None, bound, ratio));
        }
    }
    sweep.detail("cheeger_bound", bound);
    sweep.detail("min_ratio", best_ratio);
    Ok(sweep.finish("cheeger", p, None, tol))
}

/// `p(x, x, t) <= (1 - e^{-2 rho1 rho2 t / 3(rho2 + kappa)})^{-(d/2)(1 + 3 kappa/2 rho2)}`
/// at every node, for a normalized measure.
pub fn check_ultracontractivity(s: &LatticeSemigroup, p: &CdParams, ts: &[f64], tol: f64) -> Result<InequalityReport> {
    let total = s.g().total_mass();
    if (total - 1.0).abs() > 1e-9 {
        return Err(CdError::InvalidParameter(format!("ultracontractivity needs a normalized measure, total is {total}")));
    }
    let mut sweep = Sweep::default();
    let mut maxima = Vec::with_capacity(ts.len());
    for &t in ts {
        let bound = constants::ultracontractive(p, t)?;
        let diag = s.heat.kernel_diag(t)?;
        let (i, &m) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| CdError::InvalidParameter("empty lattice".into()))?;
        maxima.push(m);
        sweep.record(m, bound, at(None, Some(t), None, s.point(i), m, bound));
    }
    if ts.len() >= 2 && maxima[0] > 0.0 && maxima[1] > 0.0 {
        let slope = -(maxima[1].ln() - maxima[0].ln()) / (ts[1].ln() - ts[0].ln());
        sweep.detail("small_t_exponent", slope);
    }
    sweep.detail("bound_exponent", constants::ultracontractive_exponent(p));
    Ok(sweep.finish("ultracontractivity", p, None, tol))
}

#[cfg(test)]
mod tests;
