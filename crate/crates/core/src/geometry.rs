//! Metric side of the three-dimensional Heisenberg group
//! `X = d_x - (y/2) d_z`, `Y = d_y + (x/2) d_z`: Carnot-Caratheodory distance by
//! control optimization, Monte Carlo ball volumes, and horizontal perimeters of
//! parametrized sets. Also the discrete perimeter of lattice indicators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CdError, Result};
use crate::quadrature;
use crate::semigroup::DiscreteGenerator;

pub const DEFAULT_SEGMENTS: usize = 32;
pub const ENDPOINT_TOL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 200;
pub const MAX_SAMPLES: usize = 100_000_000;

pub type Point = [f64; 3];

/// `(x, y, z)(x', y', z') = (x + x', y + y', z + z' + (x y' - y x')/2)`.
pub fn group_mul(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])]
}

pub fn group_inv(a: &Point) -> Point {
    [-a[0], -a[1], -a[2]]
}

pub fn dilate(lambda: f64, a: &Point) -> Point {
    [lambda * a[0], lambda * a[1], lambda * lambda * a[2]]
}

/// Koranyi gauge `((x^2 + y^2)^2 + 16 z^2)^{1/4}`. Its horizontal gradient has
/// length `r / N <= 1`, so it is 1-Lipschitz for the CC distance.
pub fn koranyi_gauge(a: &Point) -> f64 {
    let r2 = a[0] * a[0] + a[1] * a[1];
    (r2 * r2 + 16.0 * a[2] * a[2]).sqrt().sqrt()
}

/// Horizontal segment with constant control `(a, b)` followed for `duration`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub control: [f64; 2],
    pub duration: f64,
}

/// Piecewise-constant horizontal path, stored at unit speed so that it is subunit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalPath {
    pub segments: Vec<Segment>,
}

impl HorizontalPath {
    /// Exact endpoint: along a segment, `z` gains `(x b - y a) tau / 2`.
    pub fn endpoint(&self, start: &Point) -> Point {
        let mut p = *start;
        for s in &self.segments {
            let (a, b) = (s.control[0], s.control[1]);
            p[2] += 0.5 * s.duration * (p[0] * b - p[1] * a);
            p[0] += s.duration * a;
            p[1] += s.duration * b;
        }
        p
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.duration * s.control[0].hypot(s.control[1])).sum()
    }

    pub fn is_subunit(&self) -> bool {
        self.segments.iter().all(|s| s.control[0].hypot(s.control[1]) <= 1.0 + 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    /// Length of the best path found, an upper bound on the distance.
    pub upper: f64,
    /// Largest value of 1-Lipschitz test functions, a lower bound.
    pub lower: f64,
    pub residual: f64,
    pub segments: usize,
    pub starts: usize,
    pub path: HorizontalPath,
}

/// Controls `u` on `k` equal segments of `[0, 1]`: endpoint and its Jacobian.
fn endpoint_and_jacobian(u: &[f64], k: usize) -> (Point, Vec<[f64; 3]>) {
    let tau = 1.0 / k as f64;
    let mut xs = Vec::with_capacity(k + 1);
    let mut p = [0.0; 3];
    xs.push(p);
    for i in 0..k {
        let (a, b) = (u[2 * i], u[2 * i + 1]);
        p[2] += 0.5 * tau * (p[0] * b - p[1] * a);
        p[0] += tau * a;
        p[1] += tau * b;
        xs.push(p);
    }
    let end = p;
    let mut jac = vec![[0.0; 3]; 2 * k];
    for i in 0..k {
        let (xi, yi) = (xs[i][0], xs[i][1]);
        let (xn, yn) = (xs[i + 1][0], xs[i + 1][1]);
        jac[2 * i] = [tau, 0.0, 0.5 * tau * (end[1] - yn - yi)];
        jac[2 * i + 1] = [0.0, tau, 0.5 * tau * (xi - (end[0] - xn))];
    }
    (end, jac)
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    if !(det.abs() > 1e-14 * scale.powi(3)) {
        return None;
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut mc = m;
        for row in 0..3 {
            mc[row][c] = r[row];
        }
        out[c] = (mc[0][0] * (mc[1][1] * mc[2][2] - mc[1][2] * mc[2][1])
            - mc[0][1] * (mc[1][0] * mc[2][2] - mc[1][2] * mc[2][0])
            + mc[0][2] * (mc[1][0] * mc[2][1] - mc[1][1] * mc[2][0]))
            / det;
    }
    Some(out)
}

fn residual_norm(end: &Point, target: &Point) -> f64 {
    ((end[0] - target[0]).powi(2) + (end[1] - target[1]).powi(2) + (end[2] - target[2]).powi(2)).sqrt()
}

/// Minimum-norm Gauss-Newton: each step solves `min |u'|` subject to the
/// linearized endpoint condition, so fixed points satisfy `u = J^T lambda`, the
/// first-order condition for least energy among controls reaching `target`.
fn gauss_newton(mut u: Vec<f64>, k: usize, target: &Point) -> (Vec<f64>, f64) {
    let (mut end, mut jac) = endpoint_and_jacobian(&u, k);
    let mut res = residual_norm(&end, target);
    for _ in 0..MAX_ITERATIONS {
        let mut jjt = [[0.0; 3]; 3];
        let mut ju = [0.0; 3];
        for (col, ui) in jac.iter().zip(&u) {
            for r in 0..3 {
                ju[r] += col[r] * ui;
                for c in 0..3 {
                    jjt[r][c] += col[r] * col[c];
                }
            }
        }
        let rhs = [target[0] - end[0] + ju[0], target[1] - end[1] + ju[1], target[2] - end[2] + ju[2]];
        let Some(lam) = solve3(jjt, rhs) else { break };
        let proposal: Vec<f64> = jac.iter().map(|col| col[0] * lam[0] + col[1] * lam[1] + col[2] * lam[2]).collect();
        let mut step = 1.0;
        let mut accepted = false;
        let mut next = u.clone();
        let mut next_eval = (end, jac.clone());
        let mut next_res = res;
        for _ in 0..30 {
            for (n, (a, b)) in next.iter_mut().zip(u.iter().zip(&proposal)) {
                *n = a + step * (b - a);
            }
            next_eval = endpoint_and_jacobian(&next, k);
            next_res = residual_norm(&next_eval.0, target);
            if next_res < res || (res < 1e-12 && next_res < 1e-11) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        let moved = next.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let size = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        u = next;
        (end, jac) = next_eval;
        res = next_res;
        if res < 1e-13 * (1.0 + size) && moved < 1e-11 * (1.0 + size) {
            break;
        }
    }
    (u, res)
}

/// Rotating controls: a path turning by `turn` at constant speed `speed`,
/// starting in direction `phi0`.
fn rotating_start(k: usize, speed: f64, phi0: f64, turn: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(2 * k);
    for i in 0..k {
        let phi = phi0 + turn * (i as f64 + 0.5) / k as f64;
        u.push(speed * phi.cos());
        u.push(speed * phi.sin());
    }
    u
}

fn starts(target: &Point, k: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let r = target[0].hypot(target[1]);
    let sign = if target[2] < 0.0 { -1.0 } else { 1.0 };
    let chord = target[1].atan2(target[0]);
    let scale = koranyi_gauge(target).max(r);
    let mut out = Vec::new();
    for turn in [0.25, 0.5, 1.0, 1.5, 1.9] {
        let turn = sign * turn * PI;
        let speed = scale * (1.0 + turn.abs() / PI);
        out.push(rotating_start(k, speed, chord - turn / 2.0, turn));
    }
    for j in 0..4 {
        let phi0 = j as f64 * PI / 2.0;
        out.push(rotating_start(k, 2.0 * scale, phi0, sign * 2.0 * PI));
    }
    out
}

/// Whether some optimized path from the origin reaches `target` with length at
/// most `r`. Stops at the first start that succeeds.
fn within(target: &Point, k: usize, r: f64) -> Result<bool> {
    let mut worst_res = 0.0f64;
    let mut converged = false;
    for u0 in starts(target, k) {
        let (u, res) = gauss_newton(u0, k, target);
        if res > ENDPOINT_TOL {
            worst_res = worst_res.max(res);
            continue;
        }
        converged = true;
        if u.chunks(2).map(|c| c[0].hypot(c[1])).sum::<f64>() / k as f64 <= r {
            return Ok(true);
        }
    }
    if converged {
        Ok(false)
    } else {
        Err(CdError::Optimizer { residual: worst_res })
    }
}

/// Best path from the origin to `target` with `k` control segments.
fn optimize(target: &Point, k: usize) -> Result<(HorizontalPath, f64, usize)> {
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut worst_res = 0.0f64;
    let candidates = starts(target, k);
    let n = candidates.len();
    for u0 in candidates {
        let (u, res) = gauss_newton(u0, k, target);
        if res > ENDPOINT_TOL {
            worst_res = worst_res.max(res);
            continue;
        }
        let len: f64 = u.chunks(2).map(|c| c[0].hypot(c[1])).sum::<f64>() / k as f64;
        if best.as_ref().map_or(true, |b| len < b.0) {
            best = Some((len, u, res));
        }
    }
    let (_, u, res) = best.ok_or(CdError::Optimizer { residual: worst_res })?;
    let tau = 1.0 / k as f64;
    let segments = u
        .chunks(2)
        .filter_map(|c| {
            let speed = c[0].hypot(c[1]);
            (speed > 0.0).then(|| Segment { control: [c[0] / speed, c[1] / speed], duration: tau * speed })
        })
        .collect();
    Ok((HorizontalPath { segments }, res, n))
}

/// Lower bound from 1-Lipschitz functions: horizontal linear functions and the
/// gauge, both left-translated to `x`.
pub fn lipschitz_lower_bound(x: &Point, y: &Point) -> f64 {
    let g = group_mul(&group_inv(x), y);
    g[0].hypot(g[1]).max(koranyi_gauge(&g))
}

/// Upper bound on `d(x, y)` from optimized subunit paths with `k` segments.
pub fn cc_distance(x: &Point, y: &Point, k: usize) -> Result<DistanceResult> {
    if k < 4 {
        return Err(CdError::InvalidParameter(format!("need at least 4 segments, got {k}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CdError::InvalidParameter("points must be finite".into()));
    }
    let target = group_mul(&group_inv(x), y);
    let lower = lipschitz_lower_bound(x, y);
    if target.iter().all(|v| *v == 0.0) {
        return Ok(DistanceResult {
            upper: 0.0,
            lower,
            residual: 0.0,
            segments: k,
            starts: 0,
            path: HorizontalPath { segments: vec![] },
        });
    }
    let (path, residual, n) = optimize(&target, k)?;
    Ok(DistanceResult { upper: path.length(), lower, residual, segments: k, starts: n, path })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub r: f64,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub inside: usize,
    /// Samples whose distance could not be bounded; counted as outside.
    pub failures: usize,
    pub box_volume: f64,
    pub seed: u64,
}

/// Uniform point of the box `[-r, r]^2 x [-r^2/2pi, r^2/2pi]` for sample `i`,
/// drawn from a counter position of the ChaCha stream so that any evaluation
/// order gives the same points.
fn sample_point(seed: u64, stream: u64, i: u64, r: f64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(6 * i as u128);
    let zmax = r * r / (2.0 * std::f64::consts::PI);
    [r * (2.0 * rng.gen::<f64>() - 1.0), r * (2.0 * rng.gen::<f64>() - 1.0), zmax * (2.0 * rng.gen::<f64>() - 1.0)]
}

/// Monte Carlo volume of `B(0, r)` using the upper-bound distance, hence an
/// estimate of a lower bound. Every point with `d <= r` has `|z| <= r^2/2pi`
/// (half-disk bound), so the sampling box contains the ball.
pub fn ball_volume(r: f64, samples: usize, seed: u64, k: usize) -> Result<VolumeEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(CdError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    if samples == 0 || samples > MAX_SAMPLES {
        return Err(CdError::SampleBudget(format!("{samples} samples requested, allowed 1..={MAX_SAMPLES}")));
    }
    let stream = r.to_bits();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(samples);
    let chunk = samples.div_ceil(threads);
    let counts: Vec<(usize, usize)> = std::thread::scope(|sc| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                sc.spawn(move || {
                    let (mut inside, mut failures) = (0usize, 0usize);
                    for i in (t * chunk)..((t + 1) * chunk).min(samples) {
                        let p = sample_point(seed, stream, i as u64, r);
                        if p[0].hypot(p[1]) > r || koranyi_gauge(&p) > r {
                            continue;
                        }
                        match within(&p, k, r) {
                            Ok(hit) => inside += hit as usize,
                            Err(_) => failures += 1,
                        }
                    }
                    (inside, failures)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("volume worker panicked")).collect()
    });
    let inside: usize = counts.iter().map(|c| c.0).sum();
    let failures: usize = counts.iter().map(|c| c.1).sum();
    let box_volume = 4.0 * r * r * r * r / std::f64::consts::PI;
    let frac = inside as f64 / samples as f64;
    Ok(VolumeEstimate {
        r,
        value: box_volume * frac,
        stderr: box_volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
        samples,
        inside,
        failures,
        box_volume,
        seed,
    })
}

/// Least-squares slope of `ln V` against `ln r`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(r, v)| *r > 0.0 && *v > 0.0).map(|(r, v)| (r.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return Err(CdError::InvalidParameter("slope needs two positive points".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Candidate sets with piecewise smooth boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CandidateSet {
    /// `{N <= radius}` for the Koranyi gauge.
    GaugeBall { radius: f64 },
    /// `{x^2 + y^2 <= rho^2, |z| <= half_height}`.
    Tube { rho: f64, half_height: f64 },
    /// `[-a, a]^2 x [-c, c]`.
    Box { a: f64, c: f64 },
}

/// One boundary patch `p(u, v)` over `[u0, u1] x [v0, v1]`, oriented outward.
#[derive(Clone, Copy, Debug)]
enum Patch {
    /// Gauge sphere `r = R sqrt(cos s)`, `z = R^2 sin(s)/4`, `s = u`, `phi = v`;
    /// tangents are returned as `(p_v, p_u)` to keep the normal outward.
    GaugeSphere { radius: f64 },
    /// Cylinder side at radius `rho`, `phi = u`, `z = v`.
    Cylinder { rho: f64 },
    /// Horizontal disk at height `z` in polar coordinates `(u, v) = (r, phi)`.
    Disk { z: f64, up: bool },
    /// Plane patch `origin + u e1 + v e2`.
    Plane { origin: Point, e1: Point, e2: Point },
}

impl Patch {
    /// `(p, p_u, p_v)`.
    fn eval(&self, u: f64, v: f64) -> (Point, Point, Point) {
        match *self {
            Patch::GaugeSphere { radius } => {
                let (s, phi) = (u, v);
                let c = s.cos().max(0.0);
                let r = radius * c.sqrt();
                // d r / d s = -R sin s / (2 sqrt(cos s)); the product r r_s stays finite.
                let rs = if c > 0.0 { -radius * s.sin() / (2.0 * c.sqrt()) } else { 0.0 };
                let z = radius * radius * s.sin() / 4.0;
                let zs = radius * radius * s.cos() / 4.0;
                (
                    [r * phi.cos(), r * phi.sin(), z],
                    [-r * phi.sin(), r * phi.cos(), 0.0],
                    [rs * phi.cos(), rs * phi.sin(), zs],
                )
            }
            Patch::Cylinder { rho } => {
                let (phi, z) = (u, v);
                ([rho * phi.cos(), rho * phi.sin(), z], [-rho * phi.sin(), rho * phi.cos(), 0.0], [0.0, 0.0, 1.0])
            }
            Patch::Disk { z, up } => {
                let (r, phi) = (u, v);
                let pu = [phi.cos(), phi.sin(), 0.0];
                let pv = [-r * phi.sin(), r * phi.cos(), 0.0];
                if up {
                    ([r * phi.cos(), r * phi.sin(), z], pu, pv)
                } else {
                    ([r * phi.cos(), r * phi.sin(), z], pv, pu)
                }
            }
            Patch::Plane { origin, e1, e2 } => {
                ([origin[0] + u * e1[0] + v * e2[0], origin[1] + u * e1[1] + v * e2[1], origin[2] + u * e1[2] + v * e2[2]], e1, e2)
            }
        }
    }
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl CandidateSet {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CandidateSet::GaugeBall { radius } => radius > 0.0 && radius.is_finite(),
            CandidateSet::Tube { rho, half_height } => rho > 0.0 && half_height > 0.0 && rho.is_finite() && half_height.is_finite(),
            CandidateSet::Box { a, c } => a > 0.0 && c > 0.0 && a.is_finite() && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(CdError::InvalidParameter(format!("degenerate candidate set {self:?}")))
        }
    }

    /// The image under the dilation `delta_lambda`.
    pub fn dilate(&self, lambda: f64) -> Self {
        match *self {
            CandidateSet::GaugeBall { radius } => CandidateSet::GaugeBall { radius: lambda * radius },
            CandidateSet::Tube { rho, half_height } => {
                CandidateSet::Tube { rho: lambda * rho, half_height: lambda * lambda * half_height }
            }
            CandidateSet::Box { a, c } => CandidateSet::Box { a: lambda * a, c: lambda * lambda * c },
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            CandidateSet::GaugeBall { radius } => koranyi_gauge(p) <= radius,
            CandidateSet::Tube { rho, half_height } => p[0].hypot(p[1]) <= rho && p[2].abs() <= half_height,
            CandidateSet::Box { a, c } => p[0].abs() <= a && p[1].abs() <= a && p[2].abs() <= c,
        }
    }

    /// Axis-aligned box containing the set.
    pub fn bounding_box(&self) -> (Point, Point) {
        match *self {
            CandidateSet::GaugeBall { radius } => {
                let zm = radius * radius / 4.0;
                ([-radius, -radius, -zm], [radius, radius, zm])
            }
            CandidateSet::Tube { rho, half_height } => ([-rho, -rho, -half_height], [rho, rho, half_height]),
            CandidateSet::Box { a, c } => ([-a, -a, -c], [a, a, c]),
        }
    }

    fn patches(&self) -> Vec<(Patch, (f64, f64), (f64, f64))> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let full = (0.0, 2.0 * PI);
        match *self {
            CandidateSet::GaugeBall { radius } => vec![(Patch::GaugeSphere { radius }, (-FRAC_PI_2, FRAC_PI_2), full)],
            CandidateSet::Tube { rho, half_height } => vec![
                (Patch::Cylinder { rho }, full, (-half_height, half_height)),
                (Patch::Disk { z: half_height, up: true }, (0.0, rho), full),
                (Patch::Disk { z: -half_height, up: false }, (0.0, rho), full),
            ],
            CandidateSet::Box { a, c } => {
                let ex = [1.0, 0.0, 0.0];
                let ey = [0.0, 1.0, 0.0];
                let ez = [0.0, 0.0, 1.0];
                let side = |o: Point, e1: Point, e2: Point, u: (f64, f64), v: (f64, f64)| (Patch::Plane { origin: o, e1, e2 }, u, v);
                vec![
                    side([a, 0.0, 0.0], ey, ez, (-a, a), (-c, c)),
                    side([-a, 0.0, 0.0], ez, ey, (-c, c), (-a, a)),
                    side([0.0, a, 0.0], ez, ex, (-c, c), (-a, a)),
                    side([0.0, -a, 0.0], ex, ez, (-a, a), (-c, c)),
                    side([0.0, 0.0, c], ex, ey, (-a, a), (-a, a)),
                    side([0.0, 0.0, -c], ey, ex, (-a, a), (-a, a)),
                ]
            }
        }
    }

    /// `(horizontal perimeter, volume)` with `panels` Gauss panels per direction.
    /// The perimeter integrand is `sqrt(<X, n>^2 + <Y, n>^2)` with
    /// `n = p_u x p_v`; the volume is `(1/3) int p . n`.
    fn integrals(&self, panels: usize) -> (f64, f64) {
        let mut per = 0.0;
        let mut vol = 0.0;
        for (patch, (u0, u1), (v0, v1)) in self.patches() {
            let ru = quadrature::composite_rule(u0, u1, panels);
            let rv = quadrature::composite_rule(v0, v1, panels);
            for &(u, wu) in &ru {
                for &(v, wv) in &rv {
                    let (p, pu, pv) = patch.eval(u, v);
                    let n = cross(&pu, &pv);
                    let xn = n[0] - 0.5 * p[1] * n[2];
                    let yn = n[1] + 0.5 * p[0] * n[2];
                    per += wu * wv * xn.hypot(yn);
                    vol += wu * wv * (p[0] * n[0] + p[1] * n[1] + p[2] * n[2]) / 3.0;
                }
            }
        }
        (per, vol)
    }

    /// Horizontal perimeter and enclosed volume, doubling the resolution until two
    /// successive values agree to `rel` (at most `max_panels` panels).
    pub fn perimeter_and_volume(&self, rel: f64, max_panels: usize) -> Result<PerimeterEstimate> {
        self.validate()?;
        let mut panels = 4;
        let mut prev = self.integrals(panels);
        while panels < max_panels {
            panels *= 2;
            let next = self.integrals(panels);
            if (next.0 - prev.0).abs() <= rel * next.0.abs() && (next.1 - prev.1).abs() <= rel * next.1.abs() {
                return Ok(PerimeterEstimate {
                    set: *self,
                    perimeter: next.0,
                    volume: next.1,
                    panels,
                    change: (next.0 - prev.0).abs() / next.0.abs(),
                });
            }
            prev = next;
        }
        Err(CdError::Quadrature(format!("perimeter of {self:?} not converged at {panels} panels")))
    }

    /// Monte Carlo volume from uniform samples of the bounding box.
    pub fn monte_carlo_volume(&self, samples: usize, seed: u64) -> Result<(f64, f64)> {
        if samples == 0 || samples > MAX_SAMPLES {
            return Err(CdError::SampleBudget(format!("{samples} samples requested")));
        }
        let (lo, hi) = self.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inside = 0usize;
        for _ in 0..samples {
            let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1]), rng.gen_range(lo[2]..hi[2])];
            inside += self.contains(&p) as usize;
        }
        let bv = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
        let frac = inside as f64 / samples as f64;
        Ok((bv * frac, bv * (frac * (1.0 - frac) / samples as f64).sqrt()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerimeterEstimate {
    pub set: CandidateSet,
    pub perimeter: f64,
    pub volume: f64,
    pub panels: usize,
    /// Relative change of the perimeter at the last doubling.
    pub change: f64,
}

impl PerimeterEstimate {
    /// `mu(E)^{(D-1)/D} / P(E)`.
    pub fn isoperimetric_ratio(&self, homogeneous_dim: f64) -> f64 {
        self.volume.powf((homogeneous_dim - 1.0) / homogeneous_dim) / self.perimeter
    }
}

pub const PERIMETER_REL_TOL: f64 = 1e-3;
pub const MAX_PANELS: usize = 512;

pub fn horizontal_perimeter(set: &CandidateSet) -> Result<PerimeterEstimate> {
    set.perimeter_and_volume(PERIMETER_REL_TOL, MAX_PANELS)
}

/// Discrete horizontal perimeter of a lattice function, averaging forward and
/// backward differences: `(1/2) sum_dir sum_x sqrt(m(x) sum_k w_k(x) (D_k f)(x)^2)`.
pub fn lattice_perimeter(g: &DiscreteGenerator, f: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(CdError::DimensionMismatch { expected: g.len(), found: f.len() });
    }
    if g.differences.is_empty() {
        return Err(CdError::InvalidParameter("generator has no difference operators".into()));
    }
    let mut total = 0.0;
    for forward in [true, false] {
        let mut acc = vec![0.0; g.len()];
        for d in g.differences.iter().filter(|d| d.forward == forward) {
            let df = d.op.matvec(f);
            for i in 0..acc.len() {
                acc[i] += d.weight[i] * df[i] * df[i];
            }
        }
        total += 0.5 * acc.iter().zip(&g.mass).map(|(a, m)| (a * m).sqrt()).sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_law() {
        let a = [0.3, -1.2, 0.7];
        let b = [-0.5, 0.4, 2.0];
        let c = [1.1, 0.2, -0.3];
        let l = group_mul(&group_mul(&a, &b), &c);
        let r = group_mul(&a, &group_mul(&b, &c));
        assert!(l.iter().zip(&r).all(|(x, y)| (x - y).abs() < 1e-14));
        assert_eq!(group_mul(&a, &group_inv(&a)), [0.0, 0.0, 0.0]);
        let d = dilate(2.0, &group_mul(&a, &b));
        let e = group_mul(&dilate(2.0, &a), &dilate(2.0, &b));
        assert!(d.iter().zip(&e).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn horizontal_segment() {
        let r = cc_distance(&[0.0; 3], &[1.0, 0.0, 0.0], 8).unwrap();
        assert!((r.upper - 1.0).abs() < 1e-9);
        assert!((r.lower - 1.0).abs() < 1e-12);
        assert!(r.path.is_subunit());
        let end = r.path.endpoint(&[0.0; 3]);
        assert!(residual_norm(&end, &[1.0, 0.0, 0.0]) < 1e-8);
        assert!(cc_distance(&[0.0; 3], &[1.0, 0.0, 0.0], 3).is_err());
    }

    #[test]
    fn jacobian_matches_differences() {
        let k = 6;
        let u: Vec<f64> = (0..2 * k).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let (_, jac) = endpoint_and_jacobian(&u, k);
        for j in 0..2 * k {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += 1e-6;
            um[j] -= 1e-6;
            let (ep, _) = endpoint_and_jacobian(&up, k);
            let (em, _) = endpoint_and_jacobian(&um, k);
            for r in 0..3 {
                assert!(((ep[r] - em[r]) / 2e-6 - jac[j][r]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gauge_ball_closed_forms() {
        let e = horizontal_perimeter(&CandidateSet::GaugeBall { radius: 1.0 }).unwrap();
        let v = std::f64::consts::PI.powi(2) / 8.0;
        assert!((e.volume - v).abs() < 2e-3 * v);
        // P = (pi/2) int_{-pi/2}^{pi/2} sqrt(cos s) ds
        let p = std::f64::consts::FRAC_PI_2
            * quadrature::integrate(|s: f64| s.cos().max(0.0).sqrt(), -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 4096);
        assert!((e.perimeter - p).abs() < 2e-3 * p, "{} vs {p}", e.perimeter);
    }

    #[test]
    fn tube_closed_forms() {
        let (rho, h) = (0.7, 1.3);
        let e = horizontal_perimeter(&CandidateSet::Tube { rho, half_height: h }).unwrap();
        let pi = std::f64::consts::PI;
        assert!((e.perimeter - (4.0 * pi * rho * h + 2.0 * pi * rho.powi(3) / 3.0)).abs() < 1e-9);
        assert!((e.volume - 2.0 * pi * rho * rho * h).abs() < 1e-9);
    }

    #[test]
    fn box_volume() {
        let e = horizontal_perimeter(&CandidateSet::Box { a: 0.5, c: 0.25 }).unwrap();
        assert!((e.volume - 0.5).abs() < 1e-12);
        assert!(e.perimeter > 4.0 * 1.0 * 0.5);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.5, 1.0, 2.0].iter().map(|&r| (r, 3.0 * r * r * r * r)).collect();
        assert!((log_log_slope(&pts).unwrap() - 4.0).abs() < 1e-12);
    }
}
