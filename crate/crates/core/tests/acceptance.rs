//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.
//!
//! Run alone with `cargo test -p cdcalc --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cdcalc::certify::{CdCertifier, CdParams, NuSample, DEFAULT_PSD_TOL};
use cdcalc::inequalities::{self as ineq, constants, scaling, FamilyKind, LatticeSemigroup};
use cdcalc::models::{self, PeriodicLatticeSpec, SU2_CERTIFIED_RHO1};
use cdcalc::semigroup::{build_generator, krylov_heat, heisenberg_heat_kernel};
use cdcalc::symbolic::{jet_exponents, rat, rat_to_f64, Rational, ScalarField};

const SEED: u64 = 42;
const SWEEP_TOL: f64 = 0.02;
const ULTRA_TOL: f64 = 0.05;
const DILATION_TOL: f64 = 0.05;
const JET_TOL: f64 = 1e-10;
const RHO1_TOL: f64 = 1e-4;
const STOCHASTIC_TOL: f64 = 1e-10;
const SEMIGROUP_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-10;
const SLOPE_TOL: f64 = 0.2;
const KERNEL_TOL: f64 = 0.05;
const ISOPERIMETRIC_TOL: f64 = 0.02;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check<'a> = Box<dyn FnOnce(&mut Shared) -> Result<Outcome, String> + 'a>;

/// Lattices and certified values reused by several criteria.
#[derive(Default)]
struct Shared {
    heisenberg16: Option<LatticeSemigroup>,
    su2_16: Option<LatticeSemigroup>,
    su2_rho1: Option<f64>,
}

impl Shared {
    fn heisenberg16(&mut self) -> Result<&LatticeSemigroup, String> {
        if self.heisenberg16.is_none() {
            let entry = models::lookup("heisenberg-1").map_err(err)?;
            self.heisenberg16 = Some(LatticeSemigroup::new(&PeriodicLatticeSpec::uniform(&entry, 16), None).map_err(err)?);
        }
        Ok(self.heisenberg16.as_ref().unwrap())
    }

    fn su2_16(&mut self) -> Result<&LatticeSemigroup, String> {
        if self.su2_16.is_none() {
            let entry = models::lookup("su2").map_err(err)?;
            self.su2_16 = Some(LatticeSemigroup::new(&PeriodicLatticeSpec::uniform(&entry, 16), None).map_err(err)?);
        }
        Ok(self.su2_16.as_ref().unwrap())
    }

    fn su2_rho1(&mut self) -> Result<f64, String> {
        if self.su2_rho1.is_none() {
            self.su2_rho1 = Some(maximize_su2()?);
        }
        Ok(self.su2_rho1.unwrap())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn heisenberg_params() -> CdParams {
    CdParams::new(0.0, 0.5, 1.0, 2.0).unwrap()
}

fn su2_params(rho1: f64) -> CdParams {
    CdParams::new(rho1, 0.5, 1.0, 2.0).unwrap()
}

fn maximize_su2() -> Result<f64, String> {
    let entry = models::lookup("su2").map_err(err)?;
    let mut cert = CdCertifier::new(&entry.model).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    cert.set_points(&entry.sample_points(10, &mut rng)).map_err(err)?;
    cert.maximize_rho1(0.5, 1.0, 2.0, &NuSample::default_grid(), DEFAULT_PSD_TOL).map_err(err)
}

fn certification_heisenberg(_: &mut Shared) -> Result<Outcome, String> {
    let start = Instant::now();
    let entry = models::lookup("heisenberg-1").map_err(err)?;
    let mut cert = CdCertifier::new(&entry.model).map_err(err)?;
    let points = entry.sample_points(0, &mut ChaCha8Rng::seed_from_u64(SEED));
    let finite = 13;
    let nus = NuSample::grid(-6, 6);
    let n_finite = nus.iter().filter(|n| matches!(n, NuSample::Finite(_))).count();
    let rho1 = {
        cert.set_points(&points).map_err(err)?;
        cert.maximize_rho1(0.5, 1.0, 2.0, &nus, DEFAULT_PSD_TOL).map_err(err)?
    };
    let report = cert.verify_cd(&heisenberg_params(), &points, &nus, DEFAULT_PSD_TOL).map_err(err)?;
    let elapsed = start.elapsed();
    let pass = points.len() == 27
        && n_finite == finite
        && rho1.abs() <= RHO1_TOL
        && report.verdict
        && elapsed < Duration::from_secs(60);
    Ok(outcome(
        pass,
        format!(
            "max rho1 = {rho1:.3e}, CD(0, 1/2, 1, 2) on {} points x {n_finite} nu plus 0+ and inf: {}, {:.1} s",
            points.len(),
            report.verdict,
            elapsed.as_secs_f64()
        ),
    ))
}

fn certification_su2(shared: &mut Shared) -> Result<Outcome, String> {
    let first = shared.su2_rho1()?;
    let second = maximize_su2()?;
    let pass = first > 0.0 && (first - second).abs() <= RHO1_TOL && (first - SU2_CERTIFIED_RHO1).abs() <= RHO1_TOL;
    Ok(outcome(pass, format!("max rho1 = {first:.6} twice = {second:.6}, regression constant {SU2_CERTIFIED_RHO1}")))
}

fn random_rational<R: Rng>(rng: &mut R, lo: i64, hi: i64, den: i64) -> Rational {
    rat(rng.gen_range(lo..=hi), den)
}

fn jet_soundness(_: &mut Shared) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let catalog = models::catalog().map_err(err)?;
    let certifiers: Vec<CdCertifier> = catalog.iter().map(|e| CdCertifier::new(&e.model)).collect::<Result<_, _>>().map_err(err)?;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let entry = &catalog[k % catalog.len()];
        let cert = &certifiers[k % catalog.len()];
        let n = entry.model.chart_dim();
        if cert.basis() != jet_exponents(n).as_slice() {
            return Ok(outcome(false, format!("{} jet basis is not the degree 1-2 monomial basis", entry.name)));
        }
        let f = ScalarField::random(n, 4, &mut rng);
        let x0: Vec<Rational> = if entry.name == "su2" {
            models::sphere_point(random_rational(&mut rng, -8, 8, 4), random_rational(&mut rng, -8, 8, 4), random_rational(&mut rng, -8, 8, 4))
        } else {
            (0..n).map(|_| random_rational(&mut rng, -8, 8, 8)).collect()
        };
        let rho1 = random_rational(&mut rng, -8, 8, 4);
        let rho2 = random_rational(&mut rng, 1, 8, 4);
        let kappa = random_rational(&mut rng, 0, 8, 4);
        let d = random_rational(&mut rng, 1, 12, 2);
        let nu = rat(1, 1) * rat(2, 1).pow(rng.gen_range(-4i32..=4));
        let exact = entry.model.cd_defect(&f, &rho1, &rho2, &kappa, &d, &nu).map_err(err)?.eval(&x0);
        let params = CdParams::new(rat_to_f64(&rho1), rat_to_f64(&rho2), rat_to_f64(&kappa), rat_to_f64(&d)).map_err(err)?;
        let form = cert.jet_form(&x0, &params, rat_to_f64(&nu)).map_err(err)?;
        let jet: Vec<f64> = f.two_jet(&x0).iter().map(rat_to_f64).collect();
        let exact = rat_to_f64(&exact);
        let diff = (form.matrix.quad(&jet) - exact).abs() / exact.abs().max(1.0);
        worst = worst.max(diff);
    }
    Ok(outcome(worst <= JET_TOL, format!("100 degree-4 polynomials, max |jet - symbolic| / max(1, |symbolic|) = {worst:.2e}")))
}

fn symbolic_oracles(_: &mut Shared) -> Result<Outcome, String> {
    let h = models::heisenberg(1).map_err(err)?.model;
    let c = |i: usize| ScalarField::coordinate(3, i);
    let z = c(2);
    let expected_gamma = (&(&c(0) * &c(0)) + &(&c(1) * &c(1))).scale(&rat(1, 4));
    let gamma_ok = h.gamma(&z, &z).map_err(err)? == expected_gamma;
    let gamma2_ok = h.gamma2(&z).map_err(err)? == ScalarField::constant(3, rat(1, 2));
    let lap_ok = h.laplacian(&z).map_err(err)?.is_zero();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut h2_failures = Vec::new();
    for entry in models::catalog().map_err(err)? {
        let n = entry.model.chart_dim();
        let bad = (0..100).filter(|_| !entry.model.check_h2(&ScalarField::random(n, 3, &mut rng))).count();
        if bad > 0 {
            h2_failures.push(format!("{}: {bad}", entry.name));
        }
    }
    let pass = gamma_ok && gamma2_ok && lap_ok && h2_failures.is_empty();
    Ok(outcome(
        pass,
        format!(
            "Gamma(z) {gamma_ok}, Gamma2(z) {gamma2_ok}, Lz {lap_ok}, Gamma-GammaZ commutation failures [{}] over 100 polynomials x {} models",
            h2_failures.join(", "),
            models::CATALOG_NAMES.len()
        ),
    ))
}

fn random_function(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn semigroup_axioms(shared: &mut Shared) -> Result<Outcome, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut lines = Vec::new();
    let mut pass = true;
    for which in ["heisenberg-1", "su2"] {
        let s = if which == "su2" { shared.su2_16()? } else { shared.heisenberg16()? };
        let g = s.g();
        let n = g.len();
        let ones = vec![1.0; n];
        let mut stoch = 0.0f64;
        let mut group = 0.0f64;
        for &(t, u) in &[(0.1, 0.2), (0.5, 1.5), (2.0, 3.0)] {
            stoch = stoch.max(max_diff(&s.heat.apply(&ones, t).map_err(err)?.values, &ones));
            let f = random_function(n, &mut rng);
            let direct = s.heat.apply(&f, t + u).map_err(err)?.values;
            let composed = s.heat.apply(&s.heat.apply(&f, u).map_err(err)?.values, t).map_err(err)?.values;
            group = group.max(max_diff(&direct, &composed));
        }
        let mut energy = 0.0f64;
        for _ in 0..5 {
            let f = random_function(n, &mut rng);
            let minus_lf: Vec<f64> = g.apply(&f).iter().map(|v| -v).collect();
            let lhs = g.inner(&f, &minus_lf);
            let rhs = g.difference_energy(&f);
            energy = energy.max((lhs - rhs).abs() / rhs.max(1.0));
        }
        pass &= n == 4096 && stoch <= STOCHASTIC_TOL && group <= SEMIGROUP_TOL && energy <= ENERGY_TOL;
        lines.push(format!("{which} 16^3: |P1-1| {stoch:.1e}, |P(t+s)-PtPs| {group:.1e}, energy {energy:.1e}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    Ok(outcome(pass, format!("{}; {:.1} s", lines.join("; "), elapsed.as_secs_f64())))
}

fn li_yau(shared: &mut Shared) -> Result<Outcome, String> {
    let ts = ineq::log_grid(0.05, 5.0, 12);
    let h = shared.heisenberg16()?;
    let fs = ineq::test_family(h.g(), FamilyKind::Positive, 50, SEED).map_err(err)?;
    let zero = ineq::check_li_yau_zero(h, &heisenberg_params(), &fs, &ts, Some(SEED), SWEEP_TOL).map_err(err)?;
    let rho1 = shared.su2_rho1()?;
    let s = shared.su2_16()?;
    let fs = ineq::test_family(s.g(), FamilyKind::Positive, 50, SEED).map_err(err)?;
    let positive = ineq::check_li_yau_positive(s, &su2_params(rho1), &fs, &ts, Some(SEED), SWEEP_TOL).map_err(err)?;
    let pass = zero.pass && positive.pass && zero.tolerance == SWEEP_TOL && positive.tolerance == SWEEP_TOL;
    Ok(outcome(
        pass,
        format!(
            "heisenberg zero-curvature form {:+.3e}, su2 positive form {:+.3e} (50 functions, 12 times, tol {SWEEP_TOL})",
            zero.max_violation, positive.max_violation
        ),
    ))
}

fn lichnerowicz(shared: &mut Shared) -> Result<Outcome, String> {
    let rho1 = shared.su2_rho1()?;
    let s = shared.su2_16()?;
    let report = ineq::check_lichnerowicz(s, &su2_params(rho1), Some(rho1)).map_err(err)?;
    let margin = report.detail("margin").unwrap_or(f64::NAN);
    let lambda1 = report.detail("lambda1").unwrap_or(f64::NAN);
    // kappa = 0 reduces to rho1 d / (d - 1).
    let mut exact = true;
    for (r1, r2, d) in [(rat(1, 1), rat(1, 2), rat(2, 1)), (rat(3, 7), rat(5, 3), rat(9, 2)), (rat(-2, 5), rat(1, 9), rat(3, 1))] {
        let got = constants::lichnerowicz_exact(&r1, &r2, &rat(0, 1), &d).map_err(err)?;
        exact &= got == &r1 * &d / (&d - &rat(1, 1));
    }
    let pass = report.pass && margin > 0.0 && exact;
    Ok(outcome(pass, format!("su2 16^3 lambda1 = {lambda1:.5}, margin {margin:.5} with rho1 = {rho1:.6}; kappa = 0 exact: {exact}")))
}

fn pseudo_poincare_spectral(shared: &mut Shared) -> Result<Outcome, String> {
    let h = shared.heisenberg16()?;
    let eigs = h.heat.spectrum.neg_eigenvalues();
    let p = heisenberg_params();
    let ts = ineq::log_grid(1e-3, 1e3, 25);
    let report = ineq::pseudo_poincare_spectral(&eigs, &p, &ts).map_err(err)?;
    let mut brute = 0usize;
    for &t in &ts {
        let c = ((2.0 + 4.0 * p.kappa / p.rho2) * t).sqrt();
        brute += eigs.iter().filter(|&&l| -(-l.max(0.0) * t).exp_m1() > c * l.max(0.0).sqrt()).count();
    }
    let pass = eigs.len() == h.g().len() && report.pass && brute == 0;
    Ok(outcome(pass, format!("{} eigenvalues x {} times, max margin {:+.3e}, brute-force violations {brute}", eigs.len(), ts.len(), report.max_violation)))
}

fn metric_side(_: &mut Shared) -> Result<Outcome, String> {
    let start = Instant::now();
    let cfg = scaling::EquivalenceConfig::heisenberg(SEED);
    let reports = scaling::check_equivalence_chain(&cfg, &heisenberg_params()).map_err(err)?;
    let find = |name: &str| reports.iter().find(|r| r.name == name).ok_or(format!("missing {name}"));
    let slope = find("equivalence-volume-slope")?;
    let kernel = find("equivalence-kernel")?;
    let iso = find("equivalence-isoperimetric")?;
    let slope_value = slope.detail("slope").unwrap_or(f64::NAN);
    let kernel_constant = kernel.detail("kernel_constant").unwrap_or(f64::NAN);

    // Lattice heat kernel on a large box against the explicit kernel at t = 1.
    let spec = PeriodicLatticeSpec::new("heisenberg-1", vec![6.0, 6.0, 3.0], vec![32, 32, 48]);
    let g = build_generator(&spec).map_err(err)?;
    let coords = g.coordinates();
    let origin = (0..g.len())
        .min_by(|&a, &b| coords[a].iter().map(|x| x * x).sum::<f64>().total_cmp(&coords[b].iter().map(|x| x * x).sum::<f64>()))
        .ok_or("empty lattice")?;
    let mut delta = vec![0.0; g.len()];
    delta[origin] = 1.0 / g.mass[origin];
    let lattice = krylov_heat(&g, &delta, 1.0, 1e-10).map_err(err)?.values[origin];
    let explicit = heisenberg_heat_kernel(1.0, 0.0, 0.0, 0.0).map_err(err)?;
    let lattice_ratio = lattice / explicit;

    let elapsed = start.elapsed();
    let pass = cfg.radii == [0.25, 0.5, 1.0, 2.0]
        && cfg.samples == 100_000
        && (slope_value - 4.0).abs() <= SLOPE_TOL
        && kernel.max_violation <= KERNEL_TOL
        && (kernel_constant - 1.0 / 16.0).abs() <= KERNEL_TOL / 16.0
        && (lattice_ratio - 1.0).abs() <= KERNEL_TOL
        && iso.max_violation <= ISOPERIMETRIC_TOL
        && elapsed < Duration::from_secs(600);
    Ok(outcome(
        pass,
        format!(
            "slope {slope_value:.4}, p(0,0,t) t^2 = {kernel_constant:.5} (spread {:.1e}), lattice/explicit at t=1 {lattice_ratio:.4}, isoperimetric spread {:.1e}, {:.1} s",
            kernel.max_violation,
            iso.max_violation,
            elapsed.as_secs_f64()
        ),
    ))
}

fn cheeger_ultracontractive(shared: &mut Shared) -> Result<Outcome, String> {
    let rho1 = shared.su2_rho1()?;
    let p = su2_params(rho1);
    let s = shared.su2_16()?;
    let mut candidates = ineq::su2_candidates();
    candidates.extend(ineq::su2_lattice_candidates(s).map_err(err)?);
    let cheeger = ineq::check_cheeger(&p, &candidates, s.g().total_mass(), SWEEP_TOL).map_err(err)?;
    let ultra = ineq::check_ultracontractivity(s, &p, &ineq::log_grid(0.1, 10.0, 12), ULTRA_TOL).map_err(err)?;
    let pass = cheeger.pass && ultra.pass;
    Ok(outcome(
        pass,
        format!(
            "{} candidates, min P/mu {:.4} vs bound {:.4}; ultracontractive margin {:+.3e} on t in [0.1, 10]",
            candidates.len(),
            cheeger.detail("min_ratio").unwrap_or(f64::NAN),
            cheeger.detail("cheeger_bound").unwrap_or(f64::NAN),
            ultra.max_violation
        ),
    ))
}

fn improved_sobolev(_: &mut Shared) -> Result<Outcome, String> {
    let tau = 2.0 * std::f64::consts::PI;
    let lambdas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let family = scaling::dilation_family("heisenberg-1", &[tau, tau, tau], &[12, 12, 12], &lambdas).map_err(err)?;
    let r = scaling::check_improved_sobolev(&family, &heisenberg_params(), 2.0, 4.0, 20, SEED, &ineq::log_grid(1e-3, 1e3, 61), DILATION_TOL)
        .map_err(err)?;
    Ok(outcome(r.pass, format!("max |R(f o delta)/R(f) - 1| = {:.2e} over lambda {lambdas:?}", r.max_violation)))
}

fn reproducible_run(_: &mut Shared) -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "model": "su2",
  "seed": 7,
  "lattice": { "n": 12 },
  "functions": 20,
  "inequalities": ["li-yau", "pseudo-poincare", "lichnerowicz", "cheeger", "ultracontractive"]
}
"#,
    )
    .map_err(err)?;
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_cdcalc"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .env_remove("CDCALC_CACHE")
            .output()
            .map_err(err)?;
        if !status.status.success() {
            return Ok(outcome(false, format!("run {k} exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr))));
        }
        csvs.push(std::fs::read(out.with_extension("csv")).map_err(err)?);
    }
    let rows = String::from_utf8_lossy(&csvs[0]).lines().count().saturating_sub(1);
    Ok(outcome(csvs[0] == csvs[1] && rows > 0, format!("{rows} rows, byte-identical: {}", csvs[0] == csvs[1])))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Check)> = vec![
        ("CD certification, Heisenberg", Box::new(certification_heisenberg)),
        ("CD certification, su2", Box::new(certification_su2)),
        ("jet-reduction soundness", Box::new(jet_soundness)),
        ("symbolic oracles", Box::new(symbolic_oracles)),
        ("semigroup axioms", Box::new(semigroup_axioms)),
        ("Li-Yau sweeps", Box::new(li_yau)),
        ("Lichnerowicz consistency", Box::new(lichnerowicz)),
        ("pseudo-Poincare spectral reduction", Box::new(pseudo_poincare_spectral)),
        ("metric side on H3", Box::new(metric_side)),
        ("Cheeger and ultracontractivity", Box::new(cheeger_ultracontractive)),
        ("improved Sobolev scale invariance", Box::new(improved_sobolev)),
        ("reproducible run", Box::new(reproducible_run)),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(|| check(&mut shared)));
        let o = match result {
            Ok(Ok(o)) => o,
            Ok(Err(e)) => outcome(false, format!("error: {e}")),
            Err(_) => outcome(false, "panicked"),
        };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:2} {} {name}: {} [{:.1} s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria fail");
        ExitCode::FAILURE
    }
}
