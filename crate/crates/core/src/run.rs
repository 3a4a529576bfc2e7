//! Declarative runs: a JSON config names a model, a CD parameter source, a
//! lattice and a seed; the run certifies the parameters and executes the
//! requested inequality checks.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{CdCertifier, CdParams, CertificateReport, NuSample, DEFAULT_PSD_TOL};
use crate::error::{CdError, Result};
use crate::inequalities::{self as ineq, constants, FamilyKind, InequalityReport, LatticeSemigroup, Regime};
use crate::models::{self, LatticeKind, ModelCatalogEntry, PeriodicLatticeSpec};
use crate::report::RunReport;
use crate::semigroup::eigen::DENSE_LIMIT;

/// Where the CD parameters of a run come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParamSource {
    /// The catalog's reference parameters.
    Reference,
    /// `rho1` from bisection on the certifier, the rest given.
    Maximize { rho2: f64, kappa: f64, d: f64 },
    Explicit { rho1: f64, rho2: f64, kappa: f64, d: f64 },
}

impl Default for ParamSource {
    fn default() -> Self {
        ParamSource::Reference
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    LiYau,
    GradientBounds,
    ReversePoincare,
    PseudoPoincare,
    Poincare,
    BesovSobolev,
    Lichnerowicz,
    Cheeger,
    Ultracontractive,
    Equivalence,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::LiYau,
        Check::GradientBounds,
        Check::ReversePoincare,
        Check::PseudoPoincare,
        Check::Poincare,
        Check::BesovSobolev,
        Check::Lichnerowicz,
        Check::Cheeger,
        Check::Ultracontractive,
        Check::Equivalence,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }

    pub fn parse(s: &str) -> Result<Check> {
        let alias = match s {
            "ultracontractivity" => "ultracontractive",
            "gradient" | "gradient-bound" => "gradient-bounds",
            "improved-sobolev" => "besov-sobolev",
            other => other,
        };
        serde_json::from_value(serde_json::Value::String(alias.into()))
            .map_err(|_| CdError::InvalidParameter(format!("unknown inequality `{s}`")))
    }

    /// Checks that only exist for `rho1 > 0`.
    pub fn needs_positive(self) -> bool {
        matches!(self, Check::ReversePoincare | Check::Poincare | Check::Lichnerowicz | Check::Cheeger | Check::Ultracontractive)
    }
}

fn default_n() -> usize {
    12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Points per axis unless `points` is given.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { n: default_n(), points: None, lengths: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "Tolerances::sweep")]
    pub sweep: f64,
    #[serde(default = "Tolerances::ultracontractive")]
    pub ultracontractive: f64,
    #[serde(default = "Tolerances::dilation")]
    pub dilation: f64,
    #[serde(default = "Tolerances::band")]
    pub sobolev_band: f64,
}

impl Tolerances {
    fn sweep() -> f64 {
        ineq::DEFAULT_TOLERANCE
    }
    fn ultracontractive() -> f64 {
        ineq::ULTRACONTRACTIVE_TOLERANCE
    }
    fn dilation() -> f64 {
        ineq::DILATION_TOLERANCE
    }
    fn band() -> f64 {
        ineq::SOBOLEV_BAND
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sweep: Self::sweep(),
            ultracontractive: Self::ultracontractive(),
            dilation: Self::dilation(),
            sobolev_band: Self::band(),
        }
    }
}

fn default_functions() -> usize {
    50
}
fn default_times() -> usize {
    12
}
fn default_random_points() -> usize {
    10
}
fn default_volume_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default)]
    pub params: ParamSource,
    #[serde(default)]
    pub lattice: LatticeConfig,
    /// Mandatory: every random choice of the run derives from it.
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Checks to run; all applicable ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<Vec<Check>>,
    #[serde(default = "default_functions")]
    pub functions: usize,
    #[serde(default = "default_times")]
    pub times: usize,
    /// Random base points added to the certification grid.
    #[serde(default = "default_random_points")]
    pub certify_points: usize,
    #[serde(default = "default_volume_samples")]
    pub volume_samples: usize,
    /// Evaluate the `p >= 2` pseudo-Poincare branch with the conjugate exponent.
    #[serde(default)]
    pub dual_exponent: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(model: impl Into<String>, seed: u64) -> Self {
        Self {
            model: model.into(),
            params: ParamSource::Reference,
            lattice: LatticeConfig::default(),
            seed,
            tolerances: Tolerances::default(),
            inequalities: None,
            functions: default_functions(),
            times: default_times(),
            certify_points: default_random_points(),
            volume_samples: default_volume_samples(),
            dual_exponent: false,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.functions == 0 || self.times == 0 {
            return Err(CdError::InvalidParameter("functions and times must be positive".into()));
        }
        let t = &self.tolerances;
        if [t.sweep, t.ultracontractive, t.dilation, t.sobolev_band].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(CdError::InvalidParameter("tolerances must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// The lattice for `entry`, capped at the dense eigensolver limit because the
    /// sweeps use the full spectrum.
    pub fn lattice_spec(&self, entry: &ModelCatalogEntry) -> PeriodicLatticeSpec {
        let dim = entry.default_lengths.len();
        let points = self.lattice.points.clone().unwrap_or_else(|| vec![self.lattice.n; dim]);
        let lengths = self.lattice.lengths.clone().unwrap_or_else(|| entry.default_lengths.clone());
        let mut spec = PeriodicLatticeSpec::new(entry.name.clone(), lengths, points);
        spec.cap = DENSE_LIMIT;
        spec
    }
}

/// Certification of the run's parameters on the catalog grid plus seeded points.
pub fn certify(entry: &ModelCatalogEntry, cfg: &RunConfig) -> Result<(CdParams, CertificateReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points = entry.sample_points(cfg.certify_points, &mut rng);
    let mut cert = CdCertifier::new(&entry.model)?;
    cert.set_points(&points)?;
    let nus = NuSample::default_grid();
    let params = match &cfg.params {
        ParamSource::Reference => entry
            .reference_cd
            .ok_or_else(|| CdError::InvalidParameter(format!("model {} has no reference parameters", entry.name)))?,
        ParamSource::Maximize { rho2, kappa, d } => {
            let rho1 = cert.maximize_rho1(*rho2, *kappa, *d, &nus, DEFAULT_PSD_TOL)?;
            CdParams::new(rho1, *rho2, *kappa, *d)?
        }
        ParamSource::Explicit { rho1, rho2, kappa, d } => CdParams::new(*rho1, *rho2, *kappa, *d)?,
    };
    let report = cert.verify_cached(&params, &nus, DEFAULT_PSD_TOL)?;
    Ok((params, report))
}

pub fn certification_row(c: &CertificateReport) -> InequalityReport {
    let worst = c.cells.iter().min_by(|a, b| a.min_eig.total_cmp(&b.min_eig));
    let max_violation = worst.map_or(f64::NEG_INFINITY, |w| -w.min_eig);
    let mut notes = Vec::new();
    if let Some(w) = &c.witness {
        notes.push(format!("witness {} at {:?}, defect {:.6e}, confirmed {}", w.polynomial, w.point, w.defect, w.confirmed));
    }
    InequalityReport {
        name: "certify".into(),
        params: c.params,
        seed: None,
        witnesses: c.cells.len(),
        max_violation,
        worst_case: worst.map(|w| ineq::WorstCase {
            function: None,
            t: None,
            norm: None,
            point: Some(w.point.clone()),
            lhs: -w.min_eig,
            rhs: 0.0,
        }),
        tolerance: c.grid.tol,
        pass: c.verdict,
        details: vec![],
        notes,
    }
}

/// `rho1` that positive-regime checks may rely on: the catalog reference, or the
/// certifier's maximum when the catalog has none.
fn certified_rho1(entry: &ModelCatalogEntry, cfg: &RunConfig, params: &CdParams) -> Result<f64> {
    if let Some(r) = entry.reference_cd {
        return Ok(r.rho1);
    }
    match cfg.params {
        ParamSource::Maximize { .. } => Ok(params.rho1),
        _ => {
            let mut probe = cfg.clone();
            probe.params = ParamSource::Maximize { rho2: params.rho2, kappa: params.kappa, d: params.d };
            Ok(certify(entry, &probe)?.0.rho1)
        }
    }
}

fn applicable(check: Check, entry: &ModelCatalogEntry, positive: bool) -> std::result::Result<(), String> {
    if check.needs_positive() && !positive {
        return Err(format!("{} needs a certified rho1 > 0", check.name()));
    }
    match check {
        Check::Cheeger if entry.lattice != LatticeKind::Su2Hopf => {
            Err("cheeger candidates are only available on the su2 lattice".into())
        }
        Check::Equivalence if entry.name != "heisenberg-1" => {
            Err("the equivalence checks use the first Heisenberg group".into())
        }
        _ => Ok(()),
    }
}

/// Execute a run. Explicitly requested checks that do not apply are errors;
/// with the default selection they are listed as skipped.
pub fn execute(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let entry = models::lookup(&cfg.model)?;
    let spec = cfg.lattice_spec(&entry);
    spec.validate()?;
    let (params, cert) = certify(&entry, cfg)?;
    let certified = certified_rho1(&entry, cfg, &params)?;
    let positive = params.rho1 > 0.0 && certified > 0.0;

    let mut skipped = Vec::new();
    let checks: Vec<Check> = match &cfg.inequalities {
        Some(list) => {
            for &c in list {
                applicable(c, &entry, positive).map_err(CdError::Regime)?;
            }
            list.clone()
        }
        None => Check::ALL
            .into_iter()
            .filter(|&c| match applicable(c, &entry, positive) {
                Ok(()) => true,
                Err(why) => {
                    skipped.push(why);
                    false
                }
            })
            .collect(),
    };

    let mut reports = vec![certification_row(&cert)];
    let needs_lattice = checks.iter().any(|c| *c != Check::Equivalence);
    let s = if needs_lattice { Some(LatticeSemigroup::new(&spec, None)?) } else { None };
    for check in checks {
        match (check, &s) {
            (Check::Equivalence, _) => {
                let mut ec = ineq::EquivalenceConfig::heisenberg(cfg.seed);
                ec.samples = cfg.volume_samples;
                reports.extend(ineq::check_equivalence_chain(&ec, &params)?);
            }
            (_, Some(s)) => reports.extend(lattice_check(check, s, &entry, &spec, cfg, &params, certified, positive)?),
            (_, None) => unreachable!("lattice built whenever a lattice check is requested"),
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(RunReport { config: cfg.clone(), params, certified_rho1: certified, reports, skipped, pass })
}

/// Time grid shared by the sweeps.
fn sweep_grid(cfg: &RunConfig) -> Vec<f64> {
    ineq::log_grid(0.05, 5.0, cfg.times)
}

#[allow(clippy::too_many_arguments)]
fn lattice_check(
    check: Check,
    s: &LatticeSemigroup,
    entry: &ModelCatalogEntry,
    spec: &PeriodicLatticeSpec,
    cfg: &RunConfig,
    p: &CdParams,
    certified: f64,
    positive: bool,
) -> Result<Vec<InequalityReport>> {
    let seed = cfg.seed;
    let tol = cfg.tolerances.sweep;
    let ts = sweep_grid(cfg);
    let family = |kind| ineq::test_family(s.g(), kind, cfg.functions, seed);
    let eigs = || s.heat.spectrum.neg_eigenvalues();
    let finite_norms: Vec<f64> = ineq::DEFAULT_NORMS.iter().copied().filter(|n| n.is_finite()).collect();
    let mut out = Vec::new();
    match check {
        Check::LiYau => {
            let fs = family(FamilyKind::Positive)?;
            if p.rho1 >= 0.0 {
                out.push(ineq::check_li_yau_zero(s, p, &fs, &ts, Some(seed), tol)?);
            }
            if positive {
                out.push(ineq::check_li_yau_positive(s, p, &fs, &ts, Some(seed), tol)?);
            }
        }
        Check::GradientBounds => {
            let fs = family(FamilyKind::Plain)?;
            if p.rho1 >= 0.0 {
                out.push(ineq::check_gradient_bounds(s, p, Regime::Zero, &fs, &ts, &ineq::DEFAULT_NORMS, Some(seed), tol)?);
                out.push(ineq::gradient_spectral(&eigs(), p, &ts)?);
            }
            if positive {
                out.push(ineq::check_gradient_bounds(s, p, Regime::Positive, &fs, &ts, &ineq::DEFAULT_NORMS, Some(seed), tol)?);
            }
        }
        Check::PseudoPoincare => {
            let fs = family(FamilyKind::Plain)?;
            if p.rho1 >= 0.0 {
                out.push(ineq::check_pseudo_poincare(
                    s,
                    p,
                    Regime::Zero,
                    &fs,
                    &ts,
                    &finite_norms,
                    cfg.dual_exponent,
                    Some(seed),
                    tol,
                )?);
                out.push(ineq::pseudo_poincare_spectral(&eigs(), p, &ts)?);
            }
            if positive {
                out.push(ineq::check_pseudo_poincare(
                    s,
                    p,
                    Regime::Positive,
                    &fs,
                    &ts,
                    &finite_norms,
                    false,
                    Some(seed),
                    tol,
                )?);
            }
        }
        Check::ReversePoincare => {
            let fs = family(FamilyKind::Plain)?;
            out.push(ineq::check_reverse_poincare(s, p, &fs, &ineq::log_grid(0.1, 3.0, cfg.times), Some(seed), tol)?);
        }
        Check::Poincare => {
            let fs = family(FamilyKind::MeanZero)?;
            out.push(ineq::check_poincare(s, p, &fs, &finite_norms, Some(seed), tol)?);
        }
        Check::BesovSobolev => {
            let bt = ineq::log_grid(1e-3, 1e3, 61);
            let count = cfg.functions.min(20);
            let fs = ineq::test_family(s.g(), FamilyKind::MeanZero, count, seed)?;
            let ratios: Vec<f64> =
                fs.iter().map(|f| ineq::sobolev_ratio(s, f, 2.0, 4.0, &bt).map(|r| r.ratio)).collect::<Result<_>>()?;
            out.push(ineq::check_sobolev_band(p, &ratios, Some(seed), cfg.tolerances.sobolev_band)?);
            if entry.dilation.is_some() && entry.lattice == LatticeKind::WrappedPolynomial {
                let fam = ineq::dilation_family(&entry.name, &spec.lengths, &spec.points, &[0.25, 0.5, 1.0, 2.0, 4.0])?;
                out.push(ineq::check_improved_sobolev(&fam, p, 2.0, 4.0, count, seed, &bt, cfg.tolerances.dilation)?);
            }
        }
        Check::Lichnerowicz => out.push(ineq::check_lichnerowicz(s, p, Some(certified))?),
        Check::Cheeger => {
            let mut cands = ineq::su2_candidates();
            cands.extend(ineq::su2_lattice_candidates(s)?);
            out.push(ineq::check_cheeger(p, &cands, s.g().total_mass(), tol)?);
        }
        Check::Ultracontractive => {
            out.push(ineq::check_ultracontractivity(s, p, &ineq::log_grid(0.1, 10.0, cfg.times), cfg.tolerances.ultracontractive)?)
        }
        Check::Equivalence => unreachable!("handled without a lattice"),
    }
    if out.is_empty() {
        constants::require_nonnegative(p)?;
    }
    Ok(out)
}
