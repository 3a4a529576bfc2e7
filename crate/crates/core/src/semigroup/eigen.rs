//! Eigendecomposition of `-L` in the mass inner product.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lattice::{dot, DiscreteGenerator};
use crate::error::{CdError, Result};

pub const DENSE_LIMIT: usize = 5000;
pub const DEFAULT_ITERATIVE_MODES: usize = 512;

/// Eigenpairs of `L`: `eigenvalues[k] <= 0` nonincreasing, columns of `vectors`
/// orthonormal for the mass inner product.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub vectors: Mat<f64>,
    /// `||A v - mu v||` for each pair of the symmetrized matrix `A = M^{-1/2} K M^{-1/2}`.
    pub residuals: Vec<f64>,
    /// Whether all `N` modes are present.
    pub complete: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues of `-L`, ascending.
    pub fn neg_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| -l).collect()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, k)]).collect()
    }
}

fn sym_matvec(g: &DiscreteGenerator, inv_sqrt: &[f64], x: &[f64]) -> Vec<f64> {
    let y: Vec<f64> = x.iter().zip(inv_sqrt).map(|(a, s)| a * s).collect();
    let mut z = g.stiffness.matvec(&y);
    for (zi, s) in z.iter_mut().zip(inv_sqrt) {
        *zi *= s;
    }
    z
}

/// Flip each column so that its first entry above a relative threshold is positive.
fn fix_signs(v: &mut Mat<f64>) {
    for k in 0..v.ncols() {
        let max = (0..v.nrows()).fold(0.0f64, |a, i| a.max(v[(i, k)].abs()));
        let first = (0..v.nrows()).find(|&i| v[(i, k)].abs() > 1e-8 * max);
        if let Some(i) = first {
            if v[(i, k)] < 0.0 {
                for r in 0..v.nrows() {
                    v[(r, k)] = -v[(r, k)];
                }
            }
        }
    }
}

/// Full dense decomposition.
pub fn dense(g: &DiscreteGenerator) -> Result<Spectrum> {
    let n = g.len();
    if n == 0 {
        return Err(CdError::Eigensolver("empty generator".into()));
    }
    let inv_sqrt: Vec<f64> = g.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in g.stiffness.row(i) {
            a[(i, j)] += 0.5 * v * inv_sqrt[i] * inv_sqrt[j];
            a[(j, i)] += 0.5 * v * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    if (0..n).any(|i| (0..n).any(|j| !a[(i, j)].is_finite())) {
        return Err(CdError::Eigensolver("non-finite matrix entries".into()));
    }
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| CdError::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[x].total_cmp(&s[y]));
    let mut vectors = Mat::<f64>::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for (c, &k) in order.iter().enumerate() {
        let v: Vec<f64> = (0..n).map(|i| u[(i, k)]).collect();
        let av = sym_matvec(g, &inv_sqrt, &v);
        residuals.push(av.iter().zip(&v).map(|(a, b)| (a - s[k] * b).powi(2)).sum::<f64>().sqrt());
        for i in 0..n {
            vectors[(i, c)] = v[i] * inv_sqrt[i];
        }
        eigenvalues.push(-s[k]);
    }
    fix_signs(&mut vectors);
    Ok(Spectrum { eigenvalues, vectors, residuals, complete: true })
}

/// Conjugate gradients for `(A + shift I) x = b` with `A` the symmetrized stiffness.
fn cg_solve(g: &DiscreteGenerator, inv_sqrt: &[f64], shift: f64, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut rr = dot(&r, &r);
    for _ in 0..(10 * n).max(1000) {
        if rr.sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let mut ap = sym_matvec(g, inv_sqrt, &p);
        for (a, pi) in ap.iter_mut().zip(&p) {
            *a += shift * pi;
        }
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(CdError::Eigensolver(format!("conjugate gradients stalled at residual {:.3e}", rr.sqrt() / bnorm)))
}

/// The `k` smallest eigenpairs of `-L` by shift-and-invert Lanczos with full
/// reorthogonalization. The Krylov space grows until every requested pair has
/// residual below `tol (1 + mu)`.
pub fn lanczos(g: &DiscreteGenerator, k: usize, shift: f64, tol: f64) -> Result<Spectrum> {
    let n = g.len();
    if k == 0 || k > n {
        return Err(CdError::InvalidParameter(format!("requested {k} modes of {n}")));
    }
    if !(shift > 0.0) {
        return Err(CdError::InvalidParameter("shift must be positive".into()));
    }
    let inv_sqrt: Vec<f64> = g.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut m = (2 * k + 20).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    loop {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let nrm = dot(&start, &start).sqrt();
        basis.push(start.iter().map(|v| v / nrm).collect());
        for j in 0..m {
            let mut w = cg_solve(g, &inv_sqrt, shift, &basis[j], 1e-13)?;
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let b = dot(&w, &w).sqrt();
            if j + 1 == m || b < 1e-14 {
                break;
            }
            basis.push(w.iter().map(|v| v / b).collect());
        }
        // Rayleigh-Ritz with A itself on the Krylov basis of its inverse.
        let dimk = basis.len();
        let mut h = Mat::<f64>::zeros(dimk, dimk);
        let images: Vec<Vec<f64>> = basis.iter().map(|b| sym_matvec(g, &inv_sqrt, b)).collect();
        for i in 0..dimk {
            for j in 0..=i {
                let v = dot(&basis[i], &images[j]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| CdError::Eigensolver(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let y = evd.U();
        let mut order: Vec<usize> = (0..dimk).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        let take = k.min(dimk);
        let mut vectors = Mat::<f64>::zeros(n, take);
        let mut eigenvalues = Vec::with_capacity(take);
        let mut residuals = Vec::with_capacity(take);
        let mut converged = true;
        for (c, &idx) in order.iter().take(take).enumerate() {
            let mut v = vec![0.0; n];
            let mut av = vec![0.0; n];
            for (r, (b, img)) in basis.iter().zip(&images).enumerate() {
                let coef = y[(r, idx)];
                for i in 0..n {
                    v[i] += coef * b[i];
                    av[i] += coef * img[i];
                }
            }
            let res = av.iter().zip(&v).map(|(a, b)| (a - s[idx] * b).powi(2)).sum::<f64>().sqrt();
            if res > tol * (1.0 + s[idx].abs()) {
                converged = false;
            }
            residuals.push(res);
            eigenvalues.push(-s[idx]);
            for i in 0..n {
                vectors[(i, c)] = v[i] * inv_sqrt[i];
            }
        }
        if converged && take == k {
            fix_signs(&mut vectors);
            return Ok(Spectrum { eigenvalues, vectors, residuals, complete: k == n });
        }
        if m >= n {
            let worst = residuals.iter().fold(0.0f64, |a, &b| a.max(b));
            return Err(CdError::Eigensolver(format!("Lanczos did not converge, worst residual {worst:.3e}")));
        }
        m = (m + k + 20).min(n);
    }
}

/// Dense for small lattices, otherwise `k` iterative modes.
pub fn compute(g: &DiscreteGenerator, k: Option<usize>) -> Result<Spectrum> {
    if g.len() <= DENSE_LIMIT {
        let mut s = dense(g)?;
        if let Some(k) = k {
            if k < s.len() {
                s.eigenvalues.truncate(k);
                s.residuals.truncate(k);
                s.vectors = s.vectors.subcols(0, k).to_owned();
                s.complete = false;
            }
        }
        Ok(s)
    } else {
        lanczos(g, k.unwrap_or(DEFAULT_ITERATIVE_MODES).min(g.len()), 1.0, 1e-8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::sparse::Csr;

    fn ring(n: usize, len: f64) -> DiscreteGenerator {
        let h = len / n as f64;
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let w = h / (h * h);
            t.push((i, i, w));
            t.push((j, j, w));
            t.push((i, j, -w));
            t.push((j, i, -w));
        }
        DiscreteGenerator::from_parts("ring", Csr::from_triplets(n, n, t), vec![h; n]).unwrap()
    }

    #[test]
    fn dense_ring_matches_fourier() {
        let n = 16;
        let g = ring(n, 2.0 * std::f64::consts::PI);
        let s = dense(&g).unwrap();
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut expected: Vec<f64> =
            (0..n).map(|k| (2.0 / h * (k as f64 * h / 2.0).sin()).powi(2)).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in s.neg_eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        for k in 0..n {
            let v = s.vector(k);
            assert!((g.inner(&v, &v) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let g = ring(200, 2.0 * std::f64::consts::PI);
        let d = dense(&g).unwrap();
        let l = lanczos(&g, 7, 1.0, 1e-9).unwrap();
        for k in 0..7 {
            assert!((d.eigenvalues[k] - l.eigenvalues[k]).abs() < 1e-8);
        }
    }
}
