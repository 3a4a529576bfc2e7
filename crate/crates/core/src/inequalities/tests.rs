use super::constants::*;
use super::families::{test_family, FamilyKind};
use super::*;
use crate::quadrature;
use crate::symbolic::rat;

fn params(rho1: f64, rho2: f64, kappa: f64, d: f64) -> CdParams {
    CdParams { rho1, rho2, kappa, d }
}

#[test]
fn upper_constants_grow_with_kappa() {
    let ks = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
    for t in [0.1, 1.0, 5.0] {
        for w in ks.windows(2) {
            let (lo, hi) = (params(1.0, 0.5, w[0], 2.0), params(1.0, 0.5, w[1], 2.0));
            for pn in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
                for regime in [Regime::Zero, Regime::Positive] {
                    assert!(gradient_bound(&lo, regime, pn, t).unwrap() <= gradient_bound(&hi, regime, pn, t).unwrap() + 1e-15);
                    if regime == Regime::Positive && pn < 2.0 || regime == Regime::Zero {
                        assert!(
                            pseudo_poincare(&lo, regime, pn, t, false).unwrap()
                                <= pseudo_poincare(&hi, regime, pn, t, false).unwrap() + 1e-15
                        );
                    }
                }
            }
            assert!(ultracontractive(&lo, t).unwrap() <= ultracontractive(&hi, t).unwrap());
            assert!(lichnerowicz(&lo).unwrap() >= lichnerowicz(&hi).unwrap());
            assert!(cheeger(&lo).unwrap() >= cheeger(&hi).unwrap());
        }
    }
}

#[test]
fn li_yau_beta_matches_gradient_form() {
    for (k, t) in [(0.0, 0.3), (1.0, 1.0), (2.5, 4.0)] {
        let p = params(0.7, 0.5, k, 3.0);
        let (a1, b1) = li_yau_positive(&p, t).unwrap();
        let (a2, b2) = gradient_coefficients(&p, t).unwrap();
        assert!((a1 - a2).abs() < 1e-14 * a1);
        assert!((b1 - b2).abs() < 1e-12 * b1);
    }
}

#[test]
fn positive_pseudo_poincare_integrates_gradient_rates() {
    // C(t) for pn < 2 is int_0^t sqrt(gamma), and for pn >= 2 it is int_0^t sqrt(beta).
    // Both integrands blow up like s^{-1/2}; substitute s = u^2.
    let p = params(1.0, 0.5, 1.0, 2.0);
    for t in [0.2f64, 1.0, 3.0] {
        let g = quadrature::integrate(|u: f64| 2.0 * u * reverse_poincare(&p, u * u).unwrap().sqrt(), 0.0, t.sqrt(), 64);
        let b = quadrature::integrate(|u: f64| 2.0 * u * gradient_coefficients(&p, u * u).unwrap().1.sqrt(), 0.0, t.sqrt(), 64);
        let c1 = pseudo_poincare(&p, Regime::Positive, 1.0, t, false).unwrap();
        let c2 = pseudo_poincare(&p, Regime::Positive, 2.0, t, false).unwrap();
        assert!((g - c1).abs() < 1e-9 * c1, "{g} vs {c1}");
        assert!((b - c2).abs() < 1e-9 * c2, "{b} vs {c2}");
    }
}

#[test]
fn poincare_is_the_long_time_limit() {
    let p = params(1.0, 0.5, 1.0, 2.0);
    for pn in [1.0, 2.0] {
        let lim = pseudo_poincare(&p, Regime::Positive, pn, 200.0, false).unwrap();
        assert!((lim - poincare(&p, pn).unwrap()).abs() < 1e-12);
    }
    assert!(poincare(&p, f64::INFINITY).is_err());
}

#[test]
fn lichnerowicz_reduces_to_the_riemannian_formula() {
    let one = rat(1, 1);
    let zero = rat(0, 1);
    for d in 2..8i64 {
        for r in [rat(1, 3), rat(2, 1), rat(7, 5)] {
            let got = lichnerowicz_exact(&r, &one, &zero, &rat(d, 1)).unwrap();
            assert_eq!(got, &r * rat(d, d - 1));
        }
    }
}

#[test]
fn regimes_are_enforced() {
    let p = params(0.0, 0.5, 1.0, 2.0);
    assert!(matches!(li_yau_positive(&p, 1.0), Err(CdError::Regime(_))));
    assert!(matches!(reverse_poincare(&p, 1.0), Err(CdError::Regime(_))));
    assert!(matches!(cheeger(&p), Err(CdError::Regime(_))));
    assert!(li_yau_zero(&params(-1.0, 0.5, 1.0, 2.0), 1.0).is_err());
    assert!(gradient_bound(&p, Regime::Zero, 0.5, 1.0).is_err());
    assert!(li_yau_zero(&p, 0.0).is_err());
    assert_eq!(pseudo_poincare(&p, Regime::Zero, 1.0, 0.0, false).unwrap(), 0.0);
}

#[test]
fn conjugate_exponents() {
    assert_eq!(conjugate(2.0), 2.0);
    assert_eq!(conjugate(1.0), f64::INFINITY);
    assert_eq!(conjugate(f64::INFINITY), 1.0);
    assert!((conjugate(4.0) - 4.0 / 3.0).abs() < 1e-15);
}

#[test]
fn sweep_scores_relative_violation() {
    let mut s = Sweep::default();
    s.record(1.0, 2.0, at(None, None, None, None, 1.0, 2.0));
    s.record(3.0, 1.0, at(Some(4), None, None, None, 3.0, 1.0));
    let r = s.finish("x", &params(0.0, 1.0, 0.0, 2.0), Some(1), 0.02);
    assert!((r.max_violation - 1.0).abs() < 1e-15);
    assert!(!r.pass);
    assert_eq!(r.worst_case.unwrap().function, Some(4));
    let mut s = Sweep::default();
    s.record(f64::NAN, 1.0, at(None, None, None, None, f64::NAN, 1.0));
    assert!(s.finish("y", &params(0.0, 1.0, 0.0, 2.0), None, 0.02).max_violation.is_infinite());
}

fn heis(n: usize) -> LatticeSemigroup {
    let e = models::lookup("heisenberg-1").unwrap();
    LatticeSemigroup::new(&PeriodicLatticeSpec::uniform(&e, n), None).unwrap()
}

fn su2(n: usize) -> (LatticeSemigroup, CdParams) {
    let e = models::lookup("su2").unwrap();
    (LatticeSemigroup::new(&PeriodicLatticeSpec::uniform(&e, n), None).unwrap(), e.reference_cd.unwrap())
}

#[test]
fn families_are_seeded_and_shaped() {
    let s = heis(6);
    let a = test_family(s.g(), FamilyKind::Positive, 3, 9).unwrap();
    assert_eq!(a, test_family(s.g(), FamilyKind::Positive, 3, 9).unwrap());
    assert_ne!(a, test_family(s.g(), FamilyKind::Positive, 3, 10).unwrap());
    assert!(a.iter().flatten().all(|&v| v > 0.0));
    for f in test_family(s.g(), FamilyKind::MeanZero, 3, 9).unwrap() {
        assert!(s.g().mean(&f).abs() < 1e-12);
        assert!((f.iter().fold(0.0f64, |m, v| m.max(v.abs())) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn constant_functions_are_trivial() {
    let s = heis(6);
    let p = params(0.0, 0.5, 1.0, 2.0);
    let one = vec![vec![1.0; s.g().len()]];
    let ts = log_grid(0.1, 2.0, 4);
    let r = check_li_yau_zero(&s, &p, &one, &ts, None, DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass && r.max_violation < 0.0);
    let r = check_gradient_bounds(&s, &p, Regime::Zero, &one, &ts, &DEFAULT_NORMS, None, DEFAULT_TOLERANCE).unwrap();
    assert!(r.worst_case.unwrap().lhs < 1e-6);
    let r = check_pseudo_poincare(&s, &p, Regime::Zero, &one, &[0.0], &[1.0, 2.0], false, None, DEFAULT_TOLERANCE).unwrap();
    assert!(r.pass);
    assert!(check_li_yau_zero(&s, &p, &[vec![0.0; s.g().len()]], &ts, None, 0.02).is_err());
}

#[test]
fn heisenberg_zero_regime_sweeps() {
    let s = heis(8);
    let p = params(0.0, 0.5, 1.0, 2.0);
    let ts = log_grid(0.05, 5.0, 6);
    let pos = test_family(s.g(), FamilyKind::Positive, 6, 3).unwrap();
    let plain = test_family(s.g(), FamilyKind::Plain, 6, 3).unwrap();
    assert!(check_li_yau_zero(&s, &p, &pos, &ts, Some(3), DEFAULT_TOLERANCE).unwrap().pass);
    assert!(check_gradient_bounds(&s, &p, Regime::Zero, &plain, &ts, &DEFAULT_NORMS, Some(3), DEFAULT_TOLERANCE).unwrap().pass);
    let norms = [1.0, 1.5, 2.0, 4.0];
    assert!(check_pseudo_poincare(&s, &p, Regime::Zero, &plain, &ts, &norms, false, Some(3), DEFAULT_TOLERANCE).unwrap().pass);
    let eigs = s.heat.spectrum.neg_eigenvalues();
    assert!(pseudo_poincare_spectral(&eigs, &p, &ts).unwrap().pass);
    assert!(gradient_spectral(&eigs, &p, &ts).unwrap().pass);
}

#[test]
fn printed_infinity_pseudo_poincare_is_violated() {
    // At pn = inf the printed zero-regime constant has an infinite denominator.
    let s = heis(6);
    let p = params(0.0, 0.5, 1.0, 2.0);
    let plain = test_family(s.g(), FamilyKind::Plain, 2, 1).unwrap();
    let r = check_pseudo_poincare(&s, &p, Regime::Zero, &plain, &[1.0], &[f64::INFINITY], false, None, DEFAULT_TOLERANCE)
        .unwrap();
    assert_eq!(r.worst_case.unwrap().rhs, 0.0);
    assert!(!r.pass);
    let r = check_pseudo_poincare(&s, &p, Regime::Zero, &plain, &[1.0], &[f64::INFINITY], true, None, DEFAULT_TOLERANCE)
        .unwrap();
    assert!(r.pass);
}

#[test]
fn su2_positive_regime_sweeps() {
    let (s, p) = su2(10);
    let ts = log_grid(0.1, 5.0, 6);
    let pos = test_family(s.g(), FamilyKind::Positive, 6, 5).unwrap();
    let plain = test_family(s.g(), FamilyKind::Plain, 6, 5).unwrap();
    let mz = test_family(s.g(), FamilyKind::MeanZero, 6, 5).unwrap();
    assert!(check_li_yau_positive(&s, &p, &pos, &ts, Some(5), DEFAULT_TOLERANCE).unwrap().pass);
    assert!(check_gradient_bounds(&s, &p, Regime::Positive, &plain, &ts, &DEFAULT_NORMS, Some(5), DEFAULT_TOLERANCE).unwrap().pass);
    let norms = [1.0, 1.5, 2.0, 4.0];
    assert!(check_pseudo_poincare(&s, &p, Regime::Positive, &plain, &ts, &norms, false, Some(5), DEFAULT_TOLERANCE).unwrap().pass);
    assert!(check_poincare(&s, &p, &mz, &norms, Some(5), DEFAULT_TOLERANCE).unwrap().pass);
    let l = check_lichnerowicz(&s, &p, Some(crate::models::SU2_CERTIFIED_RHO1)).unwrap();
    assert!(l.pass && l.detail("margin").unwrap() > 0.0);
    let over = check_lichnerowicz(&s, &params(1.5, 0.5, 1.0, 2.0), Some(crate::models::SU2_CERTIFIED_RHO1)).unwrap();
    assert!(!over.pass);
}

#[test]
fn reverse_poincare_improves_under_refinement() {
    // The one-sided scheme is not Markov, so the lattice variance can dip below
    // zero at small t. The defect shrinks as the lattice is refined.
    let mut at_small = Vec::new();
    for n in [10, 14] {
        let (s, p) = su2(n);
        let plain = test_family(s.g(), FamilyKind::Plain, 20, 42).unwrap();
        let r = check_reverse_poincare(&s, &p, &plain, &log_grid(0.1, 3.0, 8), Some(42), DEFAULT_TOLERANCE).unwrap();
        at_small.push(r.max_violation);
        if n == 14 {
            let late = check_reverse_poincare(&s, &p, &plain, &log_grid(1.0, 3.0, 4), Some(42), DEFAULT_TOLERANCE).unwrap();
            assert!(late.pass, "{}", late.max_violation);
        }
    }
    assert!(at_small[1] < at_small[0], "{at_small:?}");
}

#[test]
fn su2_candidate_closed_forms() {
    use std::f64::consts::PI;
    let c = su2_candidates();
    let half = c.iter().find(|c| c.name.starts_with("cap r=1.5708")).unwrap();
    assert!((half.measure - 0.5).abs() < 1e-12 && (half.perimeter - 0.25).abs() < 1e-12);
    // cap measure is the normalized Haar volume of a geodesic ball: integrate sin^2 / (pi/2)
    for cand in c.iter().filter(|c| c.name.starts_with("cap")) {
        let r: f64 = cand.name[6..].parse().unwrap();
        let v = quadrature::integrate(|s: f64| s.sin().powi(2), 0.0, r, 32) * 2.0 / PI;
        assert!((v - cand.measure).abs() < 1e-3, "{} {v}", cand.name);
    }
}

#[test]
fn su2_lattice_perimeters_approach_continuum() {
    let (s, p) = su2(16);
    let cands = su2_lattice_candidates(&s).unwrap();
    let half = cands.iter().find(|c| c.name == "half xi1<pi").unwrap();
    assert!((half.measure - 0.5).abs() < 1e-9);
    let slab = cands.iter().find(|c| c.name.starts_with("slab")).unwrap();
    let e0: f64 = slab.name[9..].parse().unwrap();
    let exact = 0.5 * (2.0 * e0).sin();
    assert!((slab.perimeter - exact).abs() < 0.05 * exact, "{} vs {exact}", slab.perimeter);
    let mut all = su2_candidates();
    all.extend(cands);
    assert!(check_cheeger(&p, &all, 1.0, DEFAULT_TOLERANCE).unwrap().pass);
}

#[test]
fn ultracontractive_bound_on_su2() {
    let (s, p) = su2(10);
    let r = check_ultracontractivity(&s, &p, &log_grid(0.1, 10.0, 8), ULTRACONTRACTIVE_TOLERANCE).unwrap();
    assert!(r.pass, "{}", r.max_violation);
    assert!(r.detail("small_t_exponent").unwrap() < r.detail("bound_exponent").unwrap());
}

#[test]
fn besov_norm_of_eigenvector() {
    // For an eigenvector with eigenvalue -l, sup_t t^{-a/2} e^{-l t} sits at t = -a/(2l).
    let s = heis(6);
    let spec = &s.heat.spectrum;
    let r = (0..spec.eigenvalues.len()).find(|&r| -spec.eigenvalues[r] > 0.5).unwrap();
    let l = -spec.eigenvalues[r];
    let f: Vec<f64> = (0..s.g().len()).map(|i| spec.vectors[(i, r)]).collect();
    let sup = f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let alpha = -1.0;
    let b = besov_norm(&s, &f, alpha, &log_grid(0.01, 100.0, 30)).unwrap();
    let ts = -alpha / (2.0 * l);
    let exact = ts.powf(-alpha / 2.0) * (-l * ts).exp() * sup;
    assert!(!b.lower_bound);
    assert!((b.value - exact).abs() < 1e-6 * exact, "{} vs {exact}", b.value);
    assert!((b.t_star.unwrap() - ts).abs() < 1e-4 * ts);
    let c = besov_norm(&s, &vec![1.0; s.g().len()], alpha, &log_grid(0.01, 100.0, 30)).unwrap();
    assert!(c.value.is_infinite());
    let v = sobolev_ratio(&s, &vec![1.0; s.g().len()], 2.0, 4.0, &log_grid(0.01, 100.0, 30)).unwrap();
    assert!(v.vacuous);
}

#[test]
fn ratio_invariance_report() {
    let p = params(0.0, 0.5, 1.0, 2.0);
    let r = check_ratio_invariance("x", &p, &[(1.0, 2.0), (2.0, 2.02), (4.0, 1.99)], None, 0.05).unwrap();
    assert!(r.pass && (r.max_violation - 0.01).abs() < 1e-12);
    let r = check_ratio_invariance("x", &p, &[(1.0, 2.0), (2.0, 2.5)], None, 0.05).unwrap();
    assert!(!r.pass);
}
