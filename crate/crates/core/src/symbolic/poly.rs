//! Multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{CdError, Result};

pub type Rational = BigRational;

/// Shorthand for the rational `num / den`.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational image of a finite float.
pub fn f64_to_rat(x: f64) -> Result<Rational> {
    BigRational::from_float(x)
        .ok_or_else(|| CdError::InvalidParameter(format!("non-finite value {x}")))
}

/// A polynomial in `dim` variables, stored as exponent multi-index -> coefficient.
///
/// Zero coefficients are never stored, so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ScalarField {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl ScalarField {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Rational::one())
    }

    /// The coordinate function `x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        assert!(i < dim, "coordinate {i} out of range for dimension {dim}");
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(e, Rational::one())
    }

    pub fn monomial(exponents: Vec<u32>, c: Rational) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(CdError::DimensionMismatch { expected: dim, found: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Rational {
        self.terms.get(exponents).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(CdError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * BigInt::from(e[i]));
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = Self::zero(self.dim);
        if s.is_zero() {
            return out;
        }
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.dim);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.dim, "evaluation point has the wrong dimension");
        let mut powers: Vec<Vec<Rational>> = vec![vec![Rational::one()]; self.dim];
        let mut sum = Rational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize;
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap() * &x[i];
                    powers[i].push(next);
                }
                if k > 0 {
                    term *= &powers[i][k];
                }
            }
            sum += term;
        }
        sum
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "evaluation point has the wrong dimension");
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = rat_to_f64(c);
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        v *= x[i].powi(k as i32);
                    }
                }
                v
            })
            .sum()
    }

    /// `x -> f(lambda^{w_1} x_1, ..., lambda^{w_n} x_n)`.
    pub fn dilate(&self, lambda: &Rational, weights: &[u32]) -> Self {
        assert_eq!(weights.len(), self.dim);
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            let w: u32 = e.iter().zip(weights).map(|(a, b)| a * b).sum();
            out.add_term(e.clone(), c * num_traits::pow(lambda.clone(), w as usize));
        }
        out
    }

    /// `phi(self)` for the univariate polynomial `phi = sum_k coeffs[k] t^k`.
    pub fn compose_univariate(&self, coeffs: &[Rational]) -> Self {
        let mut out = Self::zero(self.dim);
        for c in coeffs.iter().rev() {
            out = &(&out * self) + &Self::constant(self.dim, c.clone());
        }
        out
    }

    /// Taylor coefficients of order 1 and 2 at `x0`, in the order of
    /// [`jet_exponents`]: `d^alpha f(x0) / alpha!`.
    pub fn two_jet(&self, x0: &[Rational]) -> Vec<Rational> {
        jet_exponents(self.dim)
            .into_iter()
            .map(|alpha| {
                let mut d = self.clone();
                let mut fact = Rational::one();
                for (i, &k) in alpha.iter().enumerate() {
                    for j in 0..k {
                        d = d.derivative(i);
                        fact *= BigInt::from(j + 1);
                    }
                }
                d.eval(x0) / fact
            })
            .collect()
    }

    /// Uniformly random polynomial of total degree at most `degree` with small
    /// rational coefficients. About half of the admissible monomials are present.
    pub fn random<R: Rng + ?Sized>(dim: usize, degree: u32, rng: &mut R) -> Self {
        let mut out = Self::zero(dim);
        for e in exponents_up_to(dim, degree) {
            if rng.gen_bool(0.5) {
                let num = rng.gen_range(-4i64..=4);
                let den = rng.gen_range(1i64..=3);
                out.add_term(e, rat(num, den));
            }
        }
        out
    }
}

/// All exponent vectors of total degree `<= degree`, graded then lexicographic.
pub fn exponents_up_to(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut cur = vec![0u32; dim];
        fill_exponents(&mut cur, 0, total, &mut out);
    }
    out
}

fn fill_exponents(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    if cur.is_empty() {
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        fill_exponents(cur, pos + 1, remaining - k, out);
    }
    cur[pos] = 0;
}

/// Multi-indices of degree 1 and 2, the basis of non-constant 2-jets:
/// `n + n(n+1)/2` entries.
pub fn jet_exponents(dim: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(dim + dim * (dim + 1) / 2);
    for i in 0..dim {
        let mut e = vec![0; dim];
        e[i] = 1;
        out.push(e);
    }
    for i in 0..dim {
        for j in i..dim {
            let mut e = vec![0; dim];
            e[i] += 1;
            e[j] += 1;
            out.push(e);
        }
    }
    out
}

/// `prod_i (x_i - x0_i)^{alpha_i}`.
pub fn centered_monomial(alpha: &[u32], x0: &[Rational]) -> ScalarField {
    let dim = alpha.len();
    let mut out = ScalarField::one(dim);
    for (i, &k) in alpha.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let shifted = &ScalarField::coordinate(dim, i) - &ScalarField::constant(dim, x0[i].clone());
        out = &out * &shifted.pow(k);
    }
    out
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = ScalarField::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(&-Rational::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: ScalarField) -> ScalarField {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let is_const = e.iter().all(|&k| k == 0);
            if !a.is_one() || is_const {
                write!(f, "{a}")?;
            }
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "x{i}")?,
                    _ => write!(f, "x{i}^{k}")?,
                }
            }
        }
        Ok(())
    }
}

/// A polynomial compiled for fast floating-point evaluation.
#[derive(Clone, Debug)]
pub struct FloatPoly {
    dim: usize,
    terms: Vec<(Vec<i32>, f64)>,
}

impl FloatPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (&k, &xi)| if k == 0 { acc } else { acc * xi.powi(k) }))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl From<&ScalarField> for FloatPoly {
    fn from(p: &ScalarField) -> Self {
        FloatPoly {
            dim: p.dim,
            terms: p
                .terms
                .iter()
                .map(|(e, c)| (e.iter().map(|&k| k as i32).collect(), rat_to_f64(c)))
                .collect(),
        }
    }
}
