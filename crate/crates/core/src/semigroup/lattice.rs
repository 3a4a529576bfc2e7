//! Periodic lattice discretization of `L = sum_i X_i^2`.

use std::f64::consts::FRAC_PI_2;

use super::sparse::Csr;
use crate::error::{CdError, Result};
use crate::models::{self, LatticeKind, ModelCatalogEntry, PeriodicLatticeSpec};
use crate::symbolic::FloatPoly;

/// Node positions `lower_i + (j + offset_i) h_i`, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGeometry {
    pub points: Vec<usize>,
    pub lengths: Vec<f64>,
    pub lower: Vec<f64>,
    pub offset: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl LatticeGeometry {
    pub fn new(points: Vec<usize>, lengths: Vec<f64>, lower: Vec<f64>, offset: Vec<f64>) -> Self {
        let spacing = lengths.iter().zip(&points).map(|(l, &n)| l / n as f64).collect();
        Self { points, lengths, lower, offset, spacing }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            out[i] = idx % self.points[i];
            idx /= self.points[i];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.points).fold(0, |acc, (&j, &n)| acc * n + j)
    }

    pub fn neighbor(&self, idx: usize, axis: usize, step: i64) -> usize {
        let mut m = self.multi_index(idx);
        let n = self.points[axis] as i64;
        m[axis] = ((m[axis] as i64 + step).rem_euclid(n)) as usize;
        self.flat_index(&m)
    }

    pub fn coordinate(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(i, &j)| self.lower[i] + (j as f64 + self.offset[i]) * self.spacing[i])
            .collect()
    }

    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.coordinate(i)).collect()
    }
}

/// How coefficients and the density are evaluated on a lattice.
pub trait LatticeFrame {
    fn dim(&self) -> usize;
    fn num_fields(&self) -> usize;
    /// Components of field `k` at `x` (which may lie outside the fundamental box).
    fn coefficients(&self, k: usize, x: &[f64]) -> Vec<f64>;
    /// Density of the reference measure with respect to the coordinate volume.
    fn density(&self, x: &[f64]) -> f64;
    /// Whether the mass is rescaled to total one.
    fn normalized(&self) -> bool;
}

/// Polynomial frame evaluated at coordinates wrapped into the periodic box.
pub struct WrappedPolynomialFrame {
    fields: Vec<Vec<FloatPoly>>,
    lower: Vec<f64>,
    lengths: Vec<f64>,
}

impl WrappedPolynomialFrame {
    pub fn new(entry: &ModelCatalogEntry, lower: Vec<f64>, lengths: Vec<f64>) -> Self {
        let fields = entry
            .model
            .horizontal()
            .iter()
            .map(|f| f.components().iter().map(FloatPoly::from).collect())
            .collect();
        Self { fields, lower, lengths }
    }

    fn wrap(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.lengths))
            .map(|(&v, (&lo, &l))| lo + (v - lo).rem_euclid(l))
            .collect()
    }
}

impl LatticeFrame for WrappedPolynomialFrame {
    fn dim(&self) -> usize {
        self.lower.len()
    }
    fn num_fields(&self) -> usize {
        self.fields.len()
    }
    fn coefficients(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let w = self.wrap(x);
        self.fields[k].iter().map(|p| if p.is_zero() { 0.0 } else { p.eval(&w) }).collect()
    }
    fn density(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn normalized(&self) -> bool {
        false
    }
}

/// SU(2) in Hopf coordinates `q = (cos eta e^{i xi1}, sin eta e^{i xi2})`. The
/// horizontal frame is `(1/2) d_eta` and `(1/2)(tan eta d_xi1 + cot eta d_xi2)`,
/// the Haar density is `sin eta cos eta`.
pub struct Su2HopfFrame;

impl LatticeFrame for Su2HopfFrame {
    fn dim(&self) -> usize {
        3
    }
    fn num_fields(&self) -> usize {
        2
    }
    fn coefficients(&self, k: usize, x: &[f64]) -> Vec<f64> {
        match k {
            0 => vec![0.5, 0.0, 0.0],
            _ => {
                let e = x[0];
                vec![0.0, 0.5 * e.tan(), 0.5 / e.tan()]
            }
        }
    }
    fn density(&self, x: &[f64]) -> f64 {
        let e = x[0];
        if e <= 0.0 || (FRAC_PI_2 - e).abs() < 1e-12 || e >= FRAC_PI_2 {
            0.0
        } else {
            e.sin() * e.cos()
        }
    }
    fn normalized(&self) -> bool {
        true
    }
}

/// One-sided difference along a field: `D f(x) = sum_i a^i(x +- h_i e_i / 2) (+-)(f(x +- h_i e_i) - f(x)) / h_i`.
#[derive(Clone, Debug)]
pub struct Difference {
    pub field: usize,
    pub forward: bool,
    pub op: Csr,
    /// Quadrature weight of each edge bundle, the measure of the cell times the
    /// mean density over its active midpoints.
    pub weight: Vec<f64>,
}

/// Sparse approximation of `L` together with the mass of each node.
#[derive(Clone, Debug)]
pub struct DiscreteGenerator {
    pub label: String,
    pub spec: Option<PeriodicLatticeSpec>,
    pub geometry: Option<LatticeGeometry>,
    /// `K = sum over fields and directions of D^T W D / 2`.
    pub stiffness: Csr,
    pub mass: Vec<f64>,
    /// `L = -M^{-1} K`.
    pub generator: Csr,
    pub differences: Vec<Difference>,
}

pub fn build_generator(spec: &PeriodicLatticeSpec) -> Result<DiscreteGenerator> {
    spec.validate()?;
    let entry = models::lookup(&spec.model)?;
    let dim = entry.default_lengths.len();
    if spec.lengths.len() != dim {
        return Err(CdError::DimensionMismatch { expected: dim, found: spec.lengths.len() });
    }
    match entry.lattice {
        LatticeKind::WrappedPolynomial => {
            let lower: Vec<f64> = spec.lengths.iter().map(|l| -0.5 * l).collect();
            let geom = LatticeGeometry::new(spec.points.clone(), spec.lengths.clone(), lower.clone(), vec![0.0; dim]);
            let frame = WrappedPolynomialFrame::new(&entry, lower, spec.lengths.clone());
            assemble(&entry.name, Some(spec.clone()), geom, &frame)
        }
        LatticeKind::Su2Hopf => {
            let lengths = entry.default_lengths.clone();
            if spec.lengths.iter().zip(&lengths).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(CdError::InvalidParameter(
                    "the su2 lattice is fixed to (pi/2, 2pi, 2pi) in Hopf coordinates".into(),
                ));
            }
            let geom = LatticeGeometry::new(spec.points.clone(), lengths, vec![0.0; 3], vec![0.5, 0.0, 0.0]);
            assemble(&entry.name, Some(spec.clone()), geom, &Su2HopfFrame)
        }
    }
}

pub fn assemble(
    label: &str,
    spec: Option<PeriodicLatticeSpec>,
    geom: LatticeGeometry,
    frame: &dyn LatticeFrame,
) -> Result<DiscreteGenerator> {
    if frame.dim() != geom.dim() {
        return Err(CdError::DimensionMismatch { expected: geom.dim(), found: frame.dim() });
    }
    let n = geom.len();
    let cell = geom.cell_volume();
    let mut mass: Vec<f64> = (0..n).map(|i| frame.density(&geom.coordinate(i)) * cell).collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(CdError::InvalidParameter("lattice has zero total mass".into()));
    }
    let norm = if frame.normalized() { total } else { 1.0 };
    for m in mass.iter_mut() {
        *m /= norm;
    }
    if mass.iter().any(|&m| m <= 0.0) {
        return Err(CdError::InvalidParameter("every lattice node needs positive mass".into()));
    }

    let mut differences = Vec::with_capacity(2 * frame.num_fields());
    let mut k_trip: Vec<(usize, usize, f64)> = Vec::new();
    for field in 0..frame.num_fields() {
        for forward in [true, false] {
            let s = if forward { 1.0 } else { -1.0 };
            let mut trip = Vec::new();
            let mut weight = vec![0.0; n];
            for p in 0..n {
                let x = geom.coordinate(p);
                let mut dens = 0.0;
                let mut active = 0;
                let mut diag = 0.0;
                let mut row: Vec<(usize, f64)> = Vec::new();
                for axis in 0..geom.dim() {
                    let mut mid = x.clone();
                    mid[axis] += 0.5 * s * geom.spacing[axis];
                    let a = frame.coefficients(field, &mid)[axis];
                    if a == 0.0 {
                        continue;
                    }
                    let c = a / geom.spacing[axis];
                    let nb = geom.neighbor(p, axis, if forward { 1 } else { -1 });
                    row.push((nb, s * c));
                    diag -= s * c;
                    dens += frame.density(&mid);
                    active += 1;
                }
                if active == 0 {
                    continue;
                }
                weight[p] = dens / active as f64 * cell / norm;
                trip.push((p, p, diag));
                for (nb, v) in row {
                    trip.push((p, nb, v));
                }
            }
            let op = Csr::from_triplets(n, n, trip);
            for p in 0..n {
                let w = weight[p];
                if w == 0.0 {
                    continue;
                }
                let entries: Vec<(usize, f64)> = op.row(p).collect();
                for &(i, di) in &entries {
                    for &(j, dj) in &entries {
                        k_trip.push((i, j, 0.5 * w * (di * dj)));
                    }
                }
            }
            differences.push(Difference { field, forward, op, weight });
        }
    }
    let stiffness = Csr::from_triplets(n, n, k_trip);
    let generator = scaled_generator(&stiffness, &mass);
    Ok(DiscreteGenerator { label: label.to_string(), spec, geometry: Some(geom), stiffness, mass, generator, differences })
}

fn scaled_generator(k: &Csr, mass: &[f64]) -> Csr {
    let mut g = k.clone();
    for i in 0..g.nrows {
        for idx in g.indptr[i]..g.indptr[i + 1] {
            g.values[idx] = -g.values[idx] / mass[i];
        }
    }
    g
}

impl DiscreteGenerator {
    /// A generator from a symmetric stiffness matrix and positive masses, without
    /// a difference structure.
    pub fn from_parts(label: &str, stiffness: Csr, mass: Vec<f64>) -> Result<Self> {
        if stiffness.nrows != mass.len() || stiffness.ncols != mass.len() {
            return Err(CdError::DimensionMismatch { expected: mass.len(), found: stiffness.nrows });
        }
        if mass.iter().any(|&m| !(m > 0.0)) {
            return Err(CdError::InvalidParameter("masses must be positive".into()));
        }
        let generator = scaled_generator(&stiffness, &mass);
        Ok(Self { label: label.into(), spec: None, geometry: None, stiffness, mass, generator, differences: vec![] })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.generator.matvec(f)
    }

    /// `<f, -L f>` in the mass inner product.
    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        dot(f, &self.stiffness.matvec(f))
    }

    /// `sum over difference operators of ||D f||^2_w / 2`.
    pub fn difference_energy(&self, f: &[f64]) -> f64 {
        self.differences
            .iter()
            .map(|d| {
                let df = d.op.matvec(f);
                0.5 * df.iter().zip(&d.weight).map(|(v, w)| w * v * v).sum::<f64>()
            })
            .sum()
    }

    /// Discrete carré du champ, `Gamma_h(f)(x) = (1/2) sum (w/m)(D f)^2`, so that
    /// `sum_x m Gamma_h(f) = <f, -L f>`.
    pub fn gamma(&self, f: &[f64]) -> Vec<f64> {
        self.gamma_bilinear(f, f)
    }

    pub fn gamma_bilinear(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for d in &self.differences {
            let df = d.op.matvec(f);
            let dg = d.op.matvec(g);
            for i in 0..out.len() {
                out[i] += 0.5 * d.weight[i] / self.mass[i] * df[i] * dg[i];
            }
        }
        out
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.mass).map(|((a, b), m)| a * b * m).sum()
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.mass).map(|(a, m)| a * m).sum::<f64>() / self.total_mass()
    }

    /// Mass-weighted `L^p` norm; `p = inf` gives the maximum.
    pub fn norm(&self, f: &[f64], p: f64) -> f64 {
        lp_norm(f, &self.mass, p)
    }

    /// Largest row sum of `|L 1|`.
    pub fn max_row_sum(&self) -> f64 {
        self.apply(&vec![1.0; self.len()]).iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        self.geometry.as_ref().map(|g| g.coordinates()).unwrap_or_default()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn lp_norm(f: &[f64], mass: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        f.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    } else {
        f.iter().zip(mass).map(|(v, m)| m * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = LatticeGeometry::new(vec![3, 4, 5], vec![1.0; 3], vec![0.0; 3], vec![0.0; 3]);
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.neighbor(0, 2, -1), 4);
    }

    #[test]
    fn heisenberg_invariants() {
        let e = models::heisenberg(1).unwrap();
        let g = build_generator(&PeriodicLatticeSpec::uniform(&e, 8)).unwrap();
        assert!(g.max_row_sum() < 1e-10);
        assert!(g.stiffness.asymmetry() < 1e-12);
        let f: Vec<f64> = g.coordinates().iter().map(|x| (x[0] + 2.0 * x[2]).sin()).collect();
        assert!(g.dirichlet(&f) > 0.0);
        assert!((g.dirichlet(&f) - g.difference_energy(&f)).abs() < 1e-10 * g.dirichlet(&f));
        let gam: f64 = g.gamma(&f).iter().zip(&g.mass).map(|(a, m)| a * m).sum();
        assert!((gam - g.dirichlet(&f)).abs() < 1e-10 * g.dirichlet(&f));
    }

    #[test]
    fn su2_mass_is_normalized() {
        let e = models::su2().unwrap();
        let g = build_generator(&PeriodicLatticeSpec::uniform(&e, 6)).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        assert!(g.max_row_sum() < 1e-10);
    }

    #[test]
    fn size_cap() {
        let e = models::heisenberg(1).unwrap();
        let mut s = PeriodicLatticeSpec::uniform(&e, 8);
        s.cap = 100;
        assert!(matches!(build_generator(&s), Err(CdError::SizeCap { .. })));
    }
}
