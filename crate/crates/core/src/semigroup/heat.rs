//! Spectral heat semigroup `P_t = e^{tL}`.

use faer::Mat;

use super::eigen::{self, Spectrum};
use super::io;
use super::lattice::DiscreteGenerator;
use crate::error::{CdError, Result};

#[derive(Clone, Debug)]
pub struct HeatOperator {
    pub spectrum: Spectrum,
    pub mass: Vec<f64>,
}

/// Spectral coefficients of a batch of lattice functions.
#[derive(Clone, Debug)]
pub struct Projection {
    /// `modes x batch`.
    pub coeffs: Mat<f64>,
    /// Mass-weighted `L^2` norm of the part of each function outside the computed modes.
    pub tail: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct HeatResult {
    pub values: Vec<f64>,
    /// `L^2` bound on the error from truncated modes.
    pub residual: f64,
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CdError::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    Ok(())
}

impl HeatOperator {
    /// Decompose `g`, reusing `CDCALC_CACHE` when set.
    pub fn new(g: &DiscreteGenerator, modes: Option<usize>) -> Result<Self> {
        let spectrum = match io::cache_dir() {
            Some(dir) => {
                let key = io::cache_key(g, modes);
                let path = dir.join(format!("{key:016x}.cdeig"));
                match io::read_spectrum(&path, g.len()) {
                    Ok(s) => s,
                    Err(_) => {
                        let s = eigen::compute(g, modes)?;
                        std::fs::create_dir_all(&dir)?;
                        io::write_spectrum(&path, &s)?;
                        s
                    }
                }
            }
            None => eigen::compute(g, modes)?,
        };
        Ok(Self { spectrum, mass: g.mass.clone() })
    }

    pub fn from_spectrum(spectrum: Spectrum, mass: Vec<f64>) -> Self {
        Self { spectrum, mass }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.spectrum.len()
    }

    /// The `k` smallest eigenvalues of `-L`.
    pub fn spectrum(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.modes() {
            return Err(CdError::InvalidParameter(format!("requested {k} eigenvalues, {} available", self.modes())));
        }
        Ok(self.spectrum.eigenvalues[..k].iter().map(|l| -l).collect())
    }

    pub fn project(&self, fs: &[Vec<f64>]) -> Result<Projection> {
        let n = self.len();
        let b = fs.len();
        if let Some(f) = fs.iter().find(|f| f.len() != n) {
            return Err(CdError::DimensionMismatch { expected: n, found: f.len() });
        }
        let weighted = Mat::<f64>::from_fn(n, b, |i, j| fs[j][i] * self.mass[i]);
        let coeffs = self.spectrum.vectors.transpose() * &weighted;
        let tail = (0..b)
            .map(|j| {
                let total: f64 = fs[j].iter().zip(&self.mass).map(|(v, m)| m * v * v).sum();
                let kept: f64 = (0..coeffs.nrows()).map(|k| coeffs[(k, j)].powi(2)).sum();
                if self.spectrum.complete {
                    0.0
                } else {
                    (total - kept).max(0.0).sqrt()
                }
            })
            .collect();
        Ok(Projection { coeffs, tail })
    }

    /// `P_t` applied to every function of a projection.
    pub fn evaluate(&self, p: &Projection, t: f64) -> Result<Vec<Vec<f64>>> {
        check_time(t)?;
        let k = p.coeffs.nrows();
        let b = p.coeffs.ncols();
        let scaled = Mat::<f64>::from_fn(k, b, |r, c| p.coeffs[(r, c)] * (self.spectrum.eigenvalues[r] * t).exp());
        let out = &self.spectrum.vectors * &scaled;
        Ok((0..b).map(|c| (0..out.nrows()).map(|r| out[(r, c)]).collect()).collect())
    }

    pub fn truncation_bound(&self, p: &Projection, t: f64) -> Vec<f64> {
        let last = self.spectrum.eigenvalues.last().copied().unwrap_or(0.0);
        p.tail.iter().map(|r| r * (last * t).exp()).collect()
    }

    pub fn apply(&self, f: &[f64], t: f64) -> Result<HeatResult> {
        check_time(t)?;
        let p = self.project(&[f.to_vec()])?;
        let residual = self.truncation_bound(&p, t)[0];
        let values = self.evaluate(&p, t)?.pop().unwrap_or_default();
        Ok(HeatResult { values, residual })
    }

    /// `p(x, x, t)` for the kernel relative to the lattice mass.
    pub fn kernel_diag(&self, t: f64) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(CdError::InvalidParameter(format!("kernel diagonal needs t > 0, got {t}")));
        }
        let w: Vec<f64> = self.spectrum.eigenvalues.iter().map(|l| (l * t).exp()).collect();
        let v = &self.spectrum.vectors;
        Ok((0..v.nrows())
            .map(|i| (0..v.ncols()).map(|k| w[k] * v[(i, k)] * v[(i, k)]).sum())
            .collect())
    }

    pub fn kernel(&self, x: usize, y: usize, t: f64) -> Result<f64> {
        check_time(t)?;
        let v = &self.spectrum.vectors;
        Ok((0..v.ncols()).map(|k| (self.spectrum.eigenvalues[k] * t).exp() * v[(x, k)] * v[(y, k)]).sum())
    }
}

/// `P_t f` by a Lanczos approximation of the matrix exponential, for lattices
/// too large to diagonalize. The Krylov space grows until two successive sizes
/// agree to `tol` in the mass norm.
pub fn krylov_heat(g: &DiscreteGenerator, f: &[f64], t: f64, tol: f64) -> Result<HeatResult> {
    check_time(t)?;
    let n = g.len();
    if f.len() != n {
        return Err(CdError::DimensionMismatch { expected: n, found: f.len() });
    }
    let sq: Vec<f64> = g.mass.iter().map(|m| m.sqrt()).collect();
    // Work with A = M^{-1/2} K M^{-1/2} and v = M^{1/2} f, so that P_t f = M^{-1/2} e^{-tA} v.
    let v0: Vec<f64> = f.iter().zip(&sq).map(|(a, s)| a * s).collect();
    let beta0 = super::lattice::dot(&v0, &v0).sqrt();
    if beta0 == 0.0 || t == 0.0 {
        return Ok(HeatResult { values: f.to_vec(), residual: 0.0 });
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&sq).map(|(a, s)| a / s).collect();
        let mut z = g.stiffness.matvec(&y);
        for (zi, s) in z.iter_mut().zip(&sq) {
            *zi /= s;
        }
        z
    };
    let mut basis = vec![v0.iter().map(|v| v / beta0).collect::<Vec<f64>>()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let max_dim = n.min(1500);
    loop {
        let j = alpha.len();
        let mut w = apply(&basis[j]);
        let a = super::lattice::dot(&w, &basis[j]);
        for b in &basis {
            let c = super::lattice::dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        alpha.push(a);
        let b = super::lattice::dot(&w, &w).sqrt();
        let m = alpha.len();
        let exhausted = b < 1e-13 * beta0 || m >= max_dim;
        if m % 10 == 0 || exhausted {
            let tri = Mat::<f64>::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let evd = tri
                .self_adjoint_eigen(faer::Side::Lower)
                .map_err(|e| CdError::Eigensolver(format!("{e:?}")))?;
            let s = evd.S().column_vector();
            let u = evd.U();
            let coef: Vec<f64> = (0..m)
                .map(|r| (0..m).map(|k| u[(r, k)] * (-t * s[k]).exp() * u[(0, k)]).sum::<f64>() * beta0)
                .collect();
            let mut y = vec![0.0; n];
            for (c, bvec) in coef.iter().zip(&basis) {
                for (yi, bi) in y.iter_mut().zip(bvec) {
                    *yi += c * bi;
                }
            }
            if let Some(p) = &prev {
                let diff = p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let norm = super::lattice::dot(&y, &y).sqrt();
                if diff <= tol * norm || exhausted {
                    let values = y.iter().zip(&sq).map(|(a, s)| a / s).collect();
                    return Ok(HeatResult { values, residual: diff });
                }
            } else if exhausted {
                let values = y.iter().zip(&sq).map(|(a, s)| a / s).collect();
                return Ok(HeatResult { values, residual: 0.0 });
            }
            prev = Some(y);
        }
        if exhausted {
            return Err(CdError::Eigensolver("Krylov exponential did not converge".into()));
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}
