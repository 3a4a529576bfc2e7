//! Built-in sub-Riemannian models and their periodic lattice descriptions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::CdParams;
use crate::error::{CdError, Result};
use crate::symbolic::{rat, Rational, ScalarField, SubRiemannianModel, VectorField};

pub const DEFAULT_LATTICE_CAP: usize = 250_000;

/// Regression constant: largest rho1 certified for `su2` at `(rho2, kappa, d) = (1/2, 1, 2)`.
pub const SU2_CERTIFIED_RHO1: f64 = 1.0;

/// Where certification points live.
#[derive(Clone, Debug, PartialEq)]
pub enum PointDomain {
    /// Axis-aligned box `[lower, upper]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// The unit sphere in the four-dimensional ambient chart.
    Sphere3,
}

/// How a model is turned into a periodic lattice operator.
#[derive(Clone, Debug, PartialEq)]
pub enum LatticeKind {
    /// Polynomial frame with coefficients wrapped into the box `[-L/2, L/2)`.
    WrappedPolynomial,
    /// Hopf coordinates `(eta, xi1, xi2)` on the three-sphere.
    Su2Hopf,
}

#[derive(Clone, Debug)]
pub struct ModelCatalogEntry {
    pub name: String,
    pub model: SubRiemannianModel,
    pub homogeneous_dim: Option<u32>,
    pub reference_cd: Option<CdParams>,
    pub dilation: Option<Vec<u32>>,
    pub domain: PointDomain,
    pub lattice: LatticeKind,
    /// Box lengths used when a lattice is requested without explicit lengths.
    pub default_lengths: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PeriodicLatticeSpec {
    pub model: String,
    pub lengths: Vec<f64>,
    pub points: Vec<usize>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_LATTICE_CAP
}

impl PeriodicLatticeSpec {
    pub fn new(model: impl Into<String>, lengths: Vec<f64>, points: Vec<usize>) -> Self {
        Self { model: model.into(), lengths, points, cap: DEFAULT_LATTICE_CAP }
    }

    /// `n` points per axis over the model's default box.
    pub fn uniform(entry: &ModelCatalogEntry, n: usize) -> Self {
        let dim = entry.default_lengths.len();
        Self::new(entry.name.clone(), entry.default_lengths.clone(), vec![n; dim])
    }

    pub fn total_points(&self) -> usize {
        self.points.iter().product()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.lengths.iter().zip(&self.points).map(|(l, &n)| l / n as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() != self.points.len() {
            return Err(CdError::DimensionMismatch { expected: self.lengths.len(), found: self.points.len() });
        }
        if self.lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) || self.points.iter().any(|&n| n == 0) {
            return Err(CdError::InvalidParameter("lattice lengths and point counts must be positive".into()));
        }
        let total = self.total_points();
        if total > self.cap {
            return Err(CdError::SizeCap { requested: total, cap: self.cap });
        }
        Ok(())
    }
}

impl ModelCatalogEntry {
    /// Base points for certification: a `3^n` grid over the domain (or a fixed
    /// rational set on the sphere) followed by `random` seeded points.
    pub fn sample_points<R: Rng + ?Sized>(&self, random: usize, rng: &mut R) -> Vec<Vec<Rational>> {
        let mut pts = Vec::new();
        match &self.domain {
            PointDomain::Box { lower, upper } => {
                let n = lower.len();
                let total = 3usize.pow(n as u32);
                if total <= 729 {
                    for idx in 0..total {
                        let mut k = idx;
                        let mut p = Vec::with_capacity(n);
                        for i in 0..n {
                            let s = (k % 3) as i64;
                            k /= 3;
                            let lo = dyadic(lower[i]);
                            let hi = dyadic(upper[i]);
                            p.push(&lo + (&hi - &lo) * rat(s, 2));
                        }
                        pts.push(p);
                    }
                }
                for _ in 0..random {
                    pts.push(
                        (0..n).map(|i| dyadic(lower[i] + (upper[i] - lower[i]) * rng.gen::<f64>())).collect(),
                    );
                }
            }
            PointDomain::Sphere3 => {
                for s in [-1i64, 0, 1] {
                    for t in [-1i64, 0, 1] {
                        for u in [-1i64, 0, 1] {
                            pts.push(sphere_point(rat(s, 2), rat(t, 3), rat(u, 1)));
                        }
                    }
                }
                for _ in 0..random {
                    let mut r = || rat(rng.gen_range(-64i64..=64), 32);
                    pts.push(sphere_point(r(), r(), r()));
                }
            }
        }
        pts
    }
}

/// A float rounded to 2^-20 so that the base point has a short exact representation.
fn dyadic(x: f64) -> Rational {
    rat((x * 1048576.0).round() as i64, 1048576)
}

/// Inverse stereographic projection: `(1 - s, 2u, 2v, 2w) / (1 + s)` with `s = u^2+v^2+w^2`.
pub fn sphere_point(u: Rational, v: Rational, w: Rational) -> Vec<Rational> {
    let s = &u * &u + &v * &v + &w * &w;
    let one = Rational::from_integer(1.into());
    let den = &one + &s;
    let two = rat(2, 1);
    vec![(&one - &s) / &den, &two * &u / &den, &two * &v / &den, &two * &w / &den]
}

fn coord(n: usize, i: usize) -> ScalarField {
    ScalarField::coordinate(n, i)
}

fn field_from(n: usize, comps: Vec<(usize, ScalarField)>) -> VectorField {
    let mut c = vec![ScalarField::zero(n); n];
    for (i, p) in comps {
        c[i] = &c[i] + &p;
    }
    VectorField::new(c).expect("dimensions are consistent by construction")
}

/// Heisenberg group of topological dimension `2n+1` in the symmetric frame.
pub fn heisenberg(n: usize) -> Result<ModelCatalogEntry> {
    if n == 0 {
        return Err(CdError::InvalidParameter("heisenberg needs n >= 1".into()));
    }
    let dim = 2 * n + 1;
    let zi = 2 * n;
    let half = rat(1, 2);
    let mut horizontal = Vec::with_capacity(2 * n);
    for i in 0..n {
        horizontal.push(field_from(dim, vec![(i, ScalarField::one(dim)), (zi, coord(dim, n + i).scale(&-half.clone()))]));
    }
    for i in 0..n {
        horizontal.push(field_from(dim, vec![(n + i, ScalarField::one(dim)), (zi, coord(dim, i).scale(&half))]));
    }
    let model = SubRiemannianModel::new(format!("heisenberg-{n}"), horizontal, vec![VectorField::partial(dim, zi)], None)?;
    let mut dilation = vec![1; dim];
    dilation[zi] = 2;
    Ok(ModelCatalogEntry {
        name: format!("heisenberg-{n}"),
        model,
        homogeneous_dim: Some(2 * n as u32 + 2),
        reference_cd: Some(CdParams::new(0.0, n as f64 / 2.0, 1.0, 2.0 * n as f64)?),
        dilation: Some(dilation),
        domain: PointDomain::Box { lower: vec![-1.0; dim], upper: vec![1.0; dim] },
        lattice: LatticeKind::WrappedPolynomial,
        default_lengths: vec![2.0 * std::f64::consts::PI; dim],
    })
}

/// SU(2) in the ambient chart `q = (a, b, c, d)` of the unit quaternions, with
/// left-invariant fields `X = q j / 2`, `Y = q k / 2`, `Z = q i / 2`.
pub fn su2() -> Result<ModelCatalogEntry> {
    let n = 4;
    let h = rat(1, 2);
    let q = |i: usize| coord(n, i).scale(&h);
    let neg = |i: usize| coord(n, i).scale(&rat(-1, 2));
    // q i = (-b, a, d, -c), q j = (-c, -d, a, b), q k = (-d, c, -b, a)
    let x = VectorField::new(vec![neg(2), neg(3), q(0), q(1)])?;
    let y = VectorField::new(vec![neg(3), q(2), neg(1), q(0)])?;
    let z = VectorField::new(vec![neg(1), q(0), q(3), neg(2)])?;
    let model = SubRiemannianModel::new("su2", vec![x, y], vec![z], None)?;
    Ok(ModelCatalogEntry {
        name: "su2".into(),
        model,
        homogeneous_dim: None,
        reference_cd: Some(CdParams::new(SU2_CERTIFIED_RHO1, 0.5, 1.0, 2.0)?),
        dilation: None,
        domain: PointDomain::Sphere3,
        lattice: LatticeKind::Su2Hopf,
        default_lengths: vec![std::f64::consts::FRAC_PI_2, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI],
    })
}

/// Step-two Carnot group in exponential coordinates `(x_1..x_m, z_1..z_k)` with
/// `[X_i, X_j] = sum_k structure[k][i][j] Z_k`.
pub fn step2_carnot(m: usize, structure: &[Vec<Vec<Rational>>]) -> Result<ModelCatalogEntry> {
    let k = structure.len();
    if m < 2 || k == 0 {
        return Err(CdError::InvalidParameter("need m >= 2 and at least one vertical direction".into()));
    }
    for table in structure {
        if table.len() != m || table.iter().any(|row| row.len() != m) {
            return Err(CdError::InvalidParameter(format!("structure tables must be {m}x{m}")));
        }
        for i in 0..m {
            for j in 0..m {
                if table[i][j] != -table[j][i].clone() {
                    return Err(CdError::InvalidParameter("structure table is not antisymmetric".into()));
                }
            }
        }
    }
    let dim = m + k;
    let mut horizontal = Vec::with_capacity(m);
    for i in 0..m {
        let mut comps = vec![(i, ScalarField::one(dim))];
        for (kk, table) in structure.iter().enumerate() {
            let mut a = ScalarField::zero(dim);
            for j in 0..m {
                a = &a + &coord(dim, j).scale(&(&table[i][j] * rat(-1, 2)));
            }
            comps.push((m + kk, a));
        }
        horizontal.push(field_from(dim, comps));
    }
    let vertical = (0..k).map(|kk| VectorField::partial(dim, m + kk)).collect();
    let name = format!("carnot-{m}");
    let model = SubRiemannianModel::new(name.clone(), horizontal, vertical, None)?;
    for a in model.horizontal() {
        for b in model.horizontal() {
            let ab = a.commutator(b)?;
            for c in model.horizontal() {
                if !c.commutator(&ab)?.is_zero() {
                    return Err(CdError::InvalidParameter("brackets do not close at step two".into()));
                }
            }
        }
    }
    let mut dilation = vec![1; dim];
    for w in dilation.iter_mut().skip(m) {
        *w = 2;
    }
    Ok(ModelCatalogEntry {
        name,
        model,
        homogeneous_dim: Some((m + 2 * k) as u32),
        reference_cd: None,
        dilation: Some(dilation),
        domain: PointDomain::Box { lower: vec![-1.0; dim], upper: vec![1.0; dim] },
        lattice: LatticeKind::WrappedPolynomial,
        default_lengths: vec![2.0 * std::f64::consts::PI; dim],
    })
}

/// The catalog's three-generator example: `[X_1, X_2] = Z_1`, `[X_1, X_3] = Z_2`.
pub fn carnot3() -> Result<ModelCatalogEntry> {
    let z = || vec![vec![rat(0, 1); 3]; 3];
    let mut t1 = z();
    t1[0][1] = rat(1, 1);
    t1[1][0] = rat(-1, 1);
    let mut t2 = z();
    t2[0][2] = rat(1, 1);
    t2[2][0] = rat(-1, 1);
    let mut e = step2_carnot(3, &[t1, t2])?;
    e.reference_cd = Some(CdParams::new(0.0, CARNOT3_RHO2, CARNOT3_KAPPA, CARNOT3_DIM)?);
    Ok(e)
}

pub const CARNOT3_RHO2: f64 = 0.5;
/// With `kappa = 1` no rho1 above -64 survives the `nu = 2^-6` cell.
pub const CARNOT3_KAPPA: f64 = 2.0;
pub const CARNOT3_DIM: f64 = 3.0;

/// Flat torus: `L` is the Euclidean Laplacian, no vertical directions.
pub fn torus(n: usize) -> Result<ModelCatalogEntry> {
    if n == 0 {
        return Err(CdError::InvalidParameter("torus needs n >= 1".into()));
    }
    let horizontal = (0..n).map(|i| VectorField::partial(n, i)).collect();
    let model = SubRiemannianModel::new(format!("torus-{n}"), horizontal, vec![], None)?;
    Ok(ModelCatalogEntry {
        name: format!("torus-{n}"),
        model,
        homogeneous_dim: Some(n as u32),
        reference_cd: Some(CdParams::new(0.0, 1.0, 0.0, n as f64)?),
        dilation: Some(vec![1; n]),
        domain: PointDomain::Box { lower: vec![-1.0; n], upper: vec![1.0; n] },
        lattice: LatticeKind::WrappedPolynomial,
        default_lengths: vec![2.0 * std::f64::consts::PI; n],
    })
}

/// Names listed by `models list`.
pub const CATALOG_NAMES: [&str; 5] = ["heisenberg-1", "heisenberg-2", "su2", "carnot-3", "torus-2"];

pub fn catalog() -> Result<Vec<ModelCatalogEntry>> {
    CATALOG_NAMES.iter().map(|n| lookup(n)).collect()
}

/// Resolve a model name; `heisenberg-N` and `torus-N` accept any `N >= 1`.
pub fn lookup(name: &str) -> Result<ModelCatalogEntry> {
    let parse = |prefix: &str| -> Option<usize> { name.strip_prefix(prefix).and_then(|s| s.parse().ok()) };
    if name == "su2" {
        return su2();
    }
    if name == "carnot-3" {
        return carnot3();
    }
    if let Some(n) = parse("heisenberg-").filter(|&n| n >= 1) {
        return heisenberg(n);
    }
    if let Some(n) = parse("torus-").filter(|&n| n >= 1) {
        return torus(n);
    }
    Err(CdError::UnknownModel(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn heisenberg_shapes() {
        let h1 = heisenberg(1).unwrap();
        assert_eq!(h1.model.chart_dim(), 3);
        assert_eq!(h1.homogeneous_dim, Some(4));
        let cd = h1.reference_cd.unwrap();
        assert_eq!((cd.rho1, cd.rho2, cd.kappa, cd.d), (0.0, 0.5, 1.0, 2.0));
        let h2 = heisenberg(2).unwrap();
        assert_eq!(h2.model.chart_dim(), 5);
        let b = h2.model.horizontal()[0].commutator(&h2.model.horizontal()[2]).unwrap();
        assert_eq!(b, VectorField::partial(5, 4));
        assert!(heisenberg(0).is_err());
    }

    #[test]
    fn su2_brackets() {
        let e = su2().unwrap();
        let (x, y) = (&e.model.horizontal()[0], &e.model.horizontal()[1]);
        let z = &e.model.vertical()[0];
        assert_eq!(&x.commutator(y).unwrap(), z);
        assert_eq!(&y.commutator(z).unwrap(), x);
        assert_eq!(&z.commutator(x).unwrap(), y);
    }

    #[test]
    fn sphere_points_are_on_sphere() {
        let e = su2().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in e.sample_points(10, &mut rng) {
            let s: Rational = p.iter().map(|c| c * c).sum();
            assert_eq!(s, rat(1, 1));
        }
    }

    #[test]
    fn carnot_two_generators_matches_heisenberg() {
        let t = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(-1, 1), rat(0, 1)]];
        let c = step2_carnot(2, &[t]).unwrap();
        let h = heisenberg(1).unwrap();
        assert_eq!(c.model.horizontal(), h.model.horizontal());
        assert_eq!(c.model.vertical(), h.model.vertical());
    }

    #[test]
    fn carnot_rejects_bad_tables() {
        let t = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
        assert!(step2_carnot(2, &[t]).is_err());
    }

    #[test]
    fn heisenberg_dilation_covariance() {
        let e = heisenberg(1).unwrap();
        let w = e.dilation.clone().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lam = rat(3, 2);
        for _ in 0..10 {
            let f = ScalarField::random(3, 3, &mut rng);
            let lhs = e.model.laplacian(&f.dilate(&lam, &w)).unwrap();
            let rhs = e.model.laplacian(&f).unwrap().dilate(&lam, &w).scale(&(&lam * &lam));
            assert_eq!(lhs, rhs);
            let g = e.model.gamma(&f.dilate(&lam, &w), &f.dilate(&lam, &w)).unwrap();
            let g2 = e.model.gamma(&f, &f).unwrap().dilate(&lam, &w).scale(&(&lam * &lam));
            assert_eq!(g, g2);
        }
    }

    #[test]
    fn lookup_names() {
        for n in CATALOG_NAMES {
            assert_eq!(lookup(n).unwrap().name, n);
        }
        assert!(matches!(lookup("nope"), Err(CdError::UnknownModel(_))));
    }

    #[test]
    fn lattice_cap_enforced() {
        let e = heisenberg(1).unwrap();
        let mut s = PeriodicLatticeSpec::uniform(&e, 100);
        assert!(matches!(s.validate(), Err(CdError::SizeCap { .. })));
        s.points = vec![16; 3];
        s.validate().unwrap();
    }
}
