//! Pointwise certification of the curvature-dimension inequality through the
//! quadratic form it induces on 2-jets.

use std::fmt;

use faer::{Mat, Side};
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CdError, Result};
use crate::symbolic::{
    centered_monomial, f64_to_rat, jet_exponents, rat, rat_to_f64, Rational, ScalarField, SubRiemannianModel,
};

pub const DEFAULT_PSD_TOL: f64 = 1e-9;
pub const DEFAULT_NU_EXPONENTS: (i32, i32) = (-6, 6);
pub const BISECTION_WIDTH: f64 = 1e-6;
const INITIAL_BRACKET: f64 = 1024.0;
const MAX_DOUBLINGS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdParams {
    pub rho1: f64,
    pub rho2: f64,
    pub kappa: f64,
    pub d: f64,
}

impl CdParams {
    pub fn new(rho1: f64, rho2: f64, kappa: f64, d: f64) -> Result<Self> {
        let p = Self { rho1, rho2, kappa, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho1.is_finite() {
            return Err(CdError::InvalidParameter("rho1 must be finite".into()));
        }
        if !(self.rho2 > 0.0 && self.rho2.is_finite()) {
            return Err(CdError::InvalidParameter(format!("rho2 must be positive, got {}", self.rho2)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(CdError::InvalidParameter(format!("kappa must be nonnegative, got {}", self.kappa)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(CdError::InvalidParameter(format!("d must lie in (0, inf), got {}", self.d)));
        }
        Ok(())
    }

    pub fn with_rho1(&self, rho1: f64) -> Self {
        Self { rho1, ..*self }
    }
}

/// A value of the free parameter `nu`, including the two limits that close the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NuSample {
    Finite(f64),
    ZeroPlus,
    Infinity,
}

impl NuSample {
    /// `{2^k : lo <= k <= hi}` bracketed by `0+` and `inf`.
    pub fn grid(lo: i32, hi: i32) -> Vec<NuSample> {
        let mut v = vec![NuSample::ZeroPlus];
        v.extend((lo..=hi).map(|k| NuSample::Finite(2f64.powi(k))));
        v.push(NuSample::Infinity);
        v
    }

    pub fn default_grid() -> Vec<NuSample> {
        Self::grid(DEFAULT_NU_EXPONENTS.0, DEFAULT_NU_EXPONENTS.1)
    }
}

impl fmt::Display for NuSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NuSample::Finite(v) => write!(f, "{v}"),
            NuSample::ZeroPlus => write!(f, "0+"),
            NuSample::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for NuSample {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NuSample::Finite(v) => s.serialize_f64(*v),
            NuSample::ZeroPlus => s.serialize_str("0+"),
            NuSample::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NuSample {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v > 0.0 && v.is_finite() => Ok(NuSample::Finite(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("nu must be positive, got {v}"))),
            Raw::Str(s) if s == "0+" => Ok(NuSample::ZeroPlus),
            Raw::Str(s) if s == "inf" => Ok(NuSample::Infinity),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unknown nu `{s}`"))),
        }
    }
}

/// Dense symmetric matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Self { n, data: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn axpy(&mut self, a: f64, other: &SymMatrix) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn quad(&self, c: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += c[i] * self.data[i * n + j] * c[j];
            }
        }
        s
    }

    /// `K^T self K` for the columns of `k`.
    fn project(&self, k: &[Vec<f64>]) -> SymMatrix {
        let r = k.len();
        let mut out = SymMatrix::zeros(r);
        for a in 0..r {
            for b in 0..r {
                let mut s = 0.0;
                for i in 0..self.n {
                    for j in 0..self.n {
                        s += k[a][i] * self.data[i * self.n + j] * k[b][j];
                    }
                }
                out.data[a * r + b] = s;
            }
        }
        out
    }
}

/// Ascending eigenvalues and matching eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: &SymMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(CdError::Eigensolver("matrix has non-finite entries".into()));
    }
    if m.n == 0 {
        return Ok((vec![], vec![]));
    }
    let a = Mat::<f64>::from_fn(m.n, m.n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|err| CdError::Eigensolver(format!("{err:?}")))?;
    let s = e.S().column_vector();
    let u = e.U();
    let mut pairs: Vec<(f64, Vec<f64>)> =
        (0..m.n).map(|k| (s[k], (0..m.n).map(|i| u[(i, k)]).collect())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

fn spectral_radius(eig: &[f64]) -> f64 {
    eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Smallest eigenvalue `>= -tol (1 + spectral radius)`.
pub fn is_psd(m: &SymMatrix, tol: f64) -> Result<bool> {
    let (eig, _) = sym_eigen(m)?;
    Ok(eig.first().map_or(true, |&l| l >= -tol * (1.0 + spectral_radius(&eig))))
}

/// The five exact bilinear ingredients of the CD form on the jet basis at a point.
#[derive(Clone, Debug)]
pub struct PointComponents {
    pub point: Vec<Rational>,
    pub gamma2: SymMatrix,
    pub gamma2_z: SymMatrix,
    pub lap_sq: SymMatrix,
    pub gamma: SymMatrix,
    pub gamma_z: SymMatrix,
}

impl PointComponents {
    /// `Gamma_2 + nu Gamma_2^Z - (1/d) (Lf)^2 - (rho1 - kappa/nu) Gamma - rho2 Gamma^Z`.
    pub fn form(&self, p: &CdParams, nu: f64) -> SymMatrix {
        let mut m = self.gamma2.clone();
        m.axpy(nu, &self.gamma2_z);
        m.axpy(-1.0 / p.d, &self.lap_sq);
        m.axpy(-(p.rho1 - p.kappa / nu), &self.gamma);
        m.axpy(-p.rho2, &self.gamma_z);
        m
    }

    /// The part of the form that survives both limits of `nu`.
    fn limit_part(&self, p: &CdParams) -> SymMatrix {
        let mut m = self.gamma2.clone();
        m.axpy(-1.0 / p.d, &self.lap_sq);
        m.axpy(-p.rho1, &self.gamma);
        m.axpy(-p.rho2, &self.gamma_z);
        m
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetQuadraticForm {
    pub point: Vec<f64>,
    pub basis: Vec<Vec<u32>>,
    pub matrix: SymMatrix,
    pub nu: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellResult {
    pub point_index: usize,
    pub point: Vec<f64>,
    pub nu: NuSample,
    pub min_eig: f64,
    pub psd: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub nu: NuSample,
    /// The violating test function in the chart coordinates `x0, x1, ...`.
    pub polynomial: String,
    /// Exact value of the CD defect of the witness at the point, as a float.
    pub defect: f64,
    /// Whether direct symbolic evaluation confirms the violation.
    pub confirmed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    pub points: Vec<Vec<f64>>,
    pub nus: Vec<NuSample>,
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub model: String,
    pub params: CdParams,
    pub grid: Grid,
    pub cells: Vec<CellResult>,
    pub verdict: bool,
    pub witness: Option<Witness>,
}

/// Exact symbolic data for one model; per-point components are cached.
pub struct CdCertifier {
    model: SubRiemannianModel,
    basis: Vec<Vec<u32>>,
    /// `[component][i][j]` over the uncentered monomial basis.
    poly_matrices: [Vec<Vec<ScalarField>>; 5],
    points: Vec<PointComponents>,
}

impl CdCertifier {
    pub fn new(model: &SubRiemannianModel) -> Result<Self> {
        let n = model.chart_dim();
        let basis = jet_exponents(n);
        let monos: Vec<ScalarField> =
            basis.iter().map(|e| ScalarField::monomial(e.clone(), rat(1, 1))).collect();
        let laps: Vec<ScalarField> = monos.iter().map(|m| model.laplacian(m)).collect::<Result<_>>()?;
        let b = basis.len();
        let empty = || vec![vec![ScalarField::zero(n); b]; b];
        let mut mats = [empty(), empty(), empty(), empty(), empty()];
        for i in 0..b {
            for j in i..b {
                let entries = [
                    model.gamma2_bilinear(&monos[i], &monos[j])?,
                    model.gamma2_z_bilinear(&monos[i], &monos[j])?,
                    &laps[i] * &laps[j],
                    model.gamma(&monos[i], &monos[j])?,
                    model.gamma_z(&monos[i], &monos[j])?,
                ];
                for (k, e) in entries.into_iter().enumerate() {
                    mats[k][j][i] = e.clone();
                    mats[k][i][j] = e;
                }
            }
        }
        Ok(Self { model: model.clone(), basis, poly_matrices: mats, points: Vec::new() })
    }

    pub fn model(&self) -> &SubRiemannianModel {
        &self.model
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    /// Exact components at `x0`, in the centered monomial basis.
    pub fn components_at(&self, x0: &[Rational]) -> Result<PointComponents> {
        let n = self.model.chart_dim();
        if x0.len() != n {
            return Err(CdError::DimensionMismatch { expected: n, found: x0.len() });
        }
        let b = self.basis.len();
        // Row a of t: coefficients of the centered monomial a in the uncentered basis.
        let t: Vec<Vec<(usize, Rational)>> = self
            .basis
            .iter()
            .map(|alpha| {
                let cm = centered_monomial(alpha, x0);
                self.basis
                    .iter()
                    .enumerate()
                    .filter_map(|(j, e)| {
                        let c = cm.coefficient(e);
                        (!c.is_zero()).then_some((j, c))
                    })
                    .collect()
            })
            .collect();
        let convert = |k: usize| -> SymMatrix {
            let vals: Vec<Vec<Rational>> =
                self.poly_matrices[k].iter().map(|row| row.iter().map(|p| p.eval(x0)).collect()).collect();
            let mut out = SymMatrix::zeros(b);
            for a in 0..b {
                for c in a..b {
                    let mut s = Rational::zero();
                    for (i, ti) in &t[a] {
                        for (j, tj) in &t[c] {
                            s += ti * &vals[*i][*j] * tj;
                        }
                    }
                    let v = rat_to_f64(&s);
                    out.data[a * b + c] = v;
                    out.data[c * b + a] = v;
                }
            }
            out
        };
        Ok(PointComponents {
            point: x0.to_vec(),
            gamma2: convert(0),
            gamma2_z: convert(1),
            lap_sq: convert(2),
            gamma: convert(3),
            gamma_z: convert(4),
        })
    }

    /// Compute and cache the components for a point set, replacing any previous set.
    pub fn set_points(&mut self, points: &[Vec<Rational>]) -> Result<()> {
        self.points = points.iter().map(|p| self.components_at(p)).collect::<Result<_>>()?;
        Ok(())
    }

    pub fn cached_points(&self) -> &[PointComponents] {
        &self.points
    }

    pub fn jet_form(&self, x0: &[Rational], p: &CdParams, nu: f64) -> Result<JetQuadraticForm> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(CdError::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        p.validate()?;
        let comps = self.components_at(x0)?;
        Ok(JetQuadraticForm {
            point: x0.iter().map(rat_to_f64).collect(),
            basis: self.basis.clone(),
            matrix: comps.form(p, nu),
            nu,
        })
    }

    /// Smallest eigenvalue of the relevant form for one cell, its PSD verdict and
    /// a violating coefficient vector when there is one.
    pub fn cell(pc: &PointComponents, p: &CdParams, nu: NuSample, tol: f64) -> Result<(f64, bool, Vec<f64>)> {
        match nu {
            NuSample::Finite(v) => {
                let m = pc.form(p, v);
                let (eig, vecs) = sym_eigen(&m)?;
                let psd = eig[0] >= -tol * (1.0 + spectral_radius(&eig));
                Ok((eig[0], psd, vecs[0].clone()))
            }
            NuSample::Infinity => {
                let (beig, bvecs) = sym_eigen(&pc.gamma2_z)?;
                let bscale = 1.0 + spectral_radius(&beig);
                if beig[0] < -tol * bscale {
                    return Ok((beig[0], false, bvecs[0].clone()));
                }
                let kernel: Vec<Vec<f64>> = beig
                    .iter()
                    .zip(&bvecs)
                    .filter(|(l, _)| l.abs() <= tol.max(1e-12) * bscale)
                    .map(|(_, v)| v.clone())
                    .collect();
                Self::restricted(&pc.limit_part(p), &kernel, tol)
            }
            NuSample::ZeroPlus => {
                let a = pc.limit_part(p);
                if p.kappa > 0.0 {
                    let (geig, gvecs) = sym_eigen(&pc.gamma)?;
                    let gscale = 1.0 + spectral_radius(&geig);
                    let kernel: Vec<Vec<f64>> = geig
                        .iter()
                        .zip(&gvecs)
                        .filter(|(l, _)| l.abs() <= tol.max(1e-12) * gscale)
                        .map(|(_, v)| v.clone())
                        .collect();
                    Self::restricted(&a, &kernel, tol)
                } else {
                    let (eig, vecs) = sym_eigen(&a)?;
                    let psd = eig[0] >= -tol * (1.0 + spectral_radius(&eig));
                    Ok((eig[0], psd, vecs[0].clone()))
                }
            }
        }
    }

    fn restricted(a: &SymMatrix, kernel: &[Vec<f64>], tol: f64) -> Result<(f64, bool, Vec<f64>)> {
        if kernel.is_empty() {
            return Ok((0.0, true, vec![0.0; a.n]));
        }
        let pa = a.project(kernel);
        let (eig, vecs) = sym_eigen(&pa)?;
        let full_eig = sym_eigen(a)?.0;
        let psd = eig[0] >= -tol * (1.0 + spectral_radius(&full_eig));
        let mut c = vec![0.0; a.n];
        for (w, k) in vecs[0].iter().zip(kernel) {
            for (ci, ki) in c.iter_mut().zip(k) {
                *ci += w * ki;
            }
        }
        Ok((eig[0], psd, c))
    }

    /// Check every cached point against every `nu` sample.
    pub fn verify_cached(&self, p: &CdParams, nus: &[NuSample], tol: f64) -> Result<CertificateReport> {
        p.validate()?;
        if self.points.is_empty() || nus.is_empty() {
            return Err(CdError::InvalidParameter("point and nu grids must be nonempty".into()));
        }
        let mut cells = Vec::with_capacity(self.points.len() * nus.len());
        let mut worst: Option<(f64, usize, NuSample, Vec<f64>)> = None;
        for (pi, pc) in self.points.iter().enumerate() {
            let point: Vec<f64> = pc.point.iter().map(rat_to_f64).collect();
            for &nu in nus {
                let (min_eig, psd, vec) = Self::cell(pc, p, nu, tol)?;
                if !psd && worst.as_ref().map_or(true, |w| min_eig < w.0) {
                    worst = Some((min_eig, pi, nu, vec));
                }
                cells.push(CellResult { point_index: pi, point: point.clone(), nu, min_eig, psd });
            }
        }
        let witness = match worst {
            Some((_, pi, nu, vec)) => Some(self.witness(&self.points[pi].point, p, nu, &vec)?),
            None => None,
        };
        Ok(CertificateReport {
            model: self.model.label.clone(),
            params: *p,
            grid: Grid {
                points: self.points.iter().map(|pc| pc.point.iter().map(rat_to_f64).collect()).collect(),
                nus: nus.to_vec(),
                tol,
            },
            verdict: cells.iter().all(|c| c.psd),
            cells,
            witness,
        })
    }

    /// Verdict only, stopping at the first failing cell.
    pub fn passes(&self, p: &CdParams, nus: &[NuSample], tol: f64) -> Result<bool> {
        for pc in &self.points {
            for &nu in nus {
                if !Self::cell(pc, p, nu, tol)?.1 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn verify_cd(
        &mut self,
        p: &CdParams,
        points: &[Vec<Rational>],
        nus: &[NuSample],
        tol: f64,
    ) -> Result<CertificateReport> {
        self.set_points(points)?;
        self.verify_cached(p, nus, tol)
    }

    /// Render a coefficient vector as a polynomial and evaluate its CD defect exactly.
    /// Limit cells are probed at `nu = 2^20` and `2^-20`.
    pub fn witness(&self, x0: &[Rational], p: &CdParams, nu: NuSample, coeffs: &[f64]) -> Result<Witness> {
        let n = self.model.chart_dim();
        let scale = coeffs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut f = ScalarField::zero(n);
        for (alpha, &c) in self.basis.iter().zip(coeffs) {
            let c = if scale > 0.0 { c / scale } else { c };
            if c.abs() < 1e-14 {
                continue;
            }
            f = &f + &centered_monomial(alpha, x0).scale(&f64_to_rat(c)?);
        }
        let nu_val = match nu {
            NuSample::Finite(v) => f64_to_rat(v)?,
            NuSample::Infinity => rat(1 << 20, 1),
            NuSample::ZeroPlus => rat(1, 1 << 20),
        };
        let defect = self
            .model
            .cd_defect(&f, &f64_to_rat(p.rho1)?, &f64_to_rat(p.rho2)?, &f64_to_rat(p.kappa)?, &f64_to_rat(p.d)?, &nu_val)?
            .eval(x0);
        Ok(Witness {
            point: x0.iter().map(rat_to_f64).collect(),
            nu,
            polynomial: f.to_string(),
            defect: rat_to_f64(&defect),
            confirmed: defect < Rational::zero(),
        })
    }

    /// Largest `rho1` certified on the cached points, by doubling and bisection.
    pub fn maximize_rho1(&self, rho2: f64, kappa: f64, d: f64, nus: &[NuSample], tol: f64) -> Result<f64> {
        let base = CdParams::new(0.0, rho2, kappa, d)?;
        let pass = |r: f64| self.passes(&base.with_rho1(r), nus, tol);
        let mut lo = -INITIAL_BRACKET;
        let mut hi = INITIAL_BRACKET;
        let mut k = 0;
        while !pass(lo)? {
            hi = lo;
            lo *= 2.0;
            k += 1;
            if k > MAX_DOUBLINGS {
                return Err(CdError::NoCertifiedRho1 { lo, hi: INITIAL_BRACKET });
            }
        }
        k = 0;
        while pass(hi)? {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > MAX_DOUBLINGS {
                return Ok(lo);
            }
        }
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if pass(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn psd_examples() {
        assert!(is_psd(&SymMatrix::identity(3), 0.0).unwrap());
        assert!(!is_psd(&SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]), 0.0).unwrap());
        assert!(is_psd(&SymMatrix::zeros(4), 0.0).unwrap());
        let bad = SymMatrix::from_rows(&[vec![f64::NAN]]);
        assert!(is_psd(&bad, 1e-9).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(CdParams::new(0.0, 0.0, 1.0, 2.0).is_err());
        assert!(CdParams::new(0.0, 1.0, -1.0, 2.0).is_err());
        assert!(CdParams::new(0.0, 1.0, 1.0, f64::INFINITY).is_err());
        assert!(CdParams::new(-3.0, 1.0, 0.0, 2.0).is_ok());
    }

    #[test]
    fn nu_serialization() {
        let g = NuSample::grid(-1, 1);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"["0+",0.5,1.0,2.0,"inf"]"#);
        let back: Vec<NuSample> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn heisenberg_origin_form() {
        let e = models::heisenberg(1).unwrap();
        let c = CdCertifier::new(&e.model).unwrap();
        let origin = vec![rat(0, 1); 3];
        let p = CdParams::new(0.0, 0.5, 1.0, 2.0).unwrap();
        let f = c.jet_form(&origin, &p, 1.0).unwrap();
        assert_eq!(f.matrix.n, 9);
        assert!(is_psd(&f.matrix, DEFAULT_PSD_TOL).unwrap());
        assert!(c.jet_form(&origin, &p, 0.0).is_err());
    }

    #[test]
    fn very_negative_rho1_on_linear_function() {
        let e = models::heisenberg(1).unwrap();
        let c = CdCertifier::new(&e.model).unwrap();
        let origin = vec![rat(0, 1); 3];
        let p = CdParams::new(-1e6, 0.5, 1.0, 2.0).unwrap();
        let f = c.jet_form(&origin, &p, 1e3).unwrap();
        // basis index 0 is the centered coordinate x
        let v = f.matrix.quad(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((v - (1e6 + 1e-3)).abs() < 1e-6);
    }

    #[test]
    fn small_kappa_gives_confirmed_witness() {
        let e = models::heisenberg(1).unwrap();
        let mut c = CdCertifier::new(&e.model).unwrap();
        let p = CdParams::new(0.0, 0.5, 0.5, 2.0).unwrap();
        let r = c.verify_cd(&p, &[vec![rat(0, 1); 3]], &NuSample::default_grid(), DEFAULT_PSD_TOL).unwrap();
        assert!(!r.verdict);
        assert!(r.witness.unwrap().confirmed);
    }
}
