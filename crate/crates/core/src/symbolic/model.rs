//! Vector fields and the carré du champ calculus of a sub-Riemannian frame.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{rat, Rational, ScalarField};
use crate::error::{CdError, Result};

/// `sum_i components[i] * d/dx_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(CdError::InvalidParameter("vector field needs at least one component".into()));
        }
        for c in &components {
            if c.dim() != n {
                return Err(CdError::DimensionMismatch { expected: n, found: c.dim() });
            }
        }
        Ok(Self { components })
    }

    /// The coordinate field `d/dx_i`.
    pub fn partial(dim: usize, i: usize) -> Self {
        let mut components = vec![ScalarField::zero(dim); dim];
        components[i] = ScalarField::one(dim);
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.dim() != self.dim() {
            return Err(CdError::DimensionMismatch { expected: self.dim(), found: f.dim() });
        }
        let mut out = ScalarField::zero(self.dim());
        for (i, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.derivative(i);
            if !d.is_zero() {
                out = &out + &(c * &d);
            }
        }
        Ok(out)
    }

    /// Lie bracket `[self, other] = self other - other self`.
    pub fn commutator(&self, other: &VectorField) -> Result<VectorField> {
        if other.dim() != self.dim() {
            return Err(CdError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let components = (0..self.dim())
            .map(|i| Ok(&self.apply(&other.components[i])? - &other.apply(&self.components[i])?))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { components })
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(ScalarField::is_zero)
    }

    pub fn scale(&self, s: &Rational) -> VectorField {
        VectorField { components: self.components.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        if other.dim() != self.dim() {
            return Err(CdError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(VectorField {
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        })
    }
}

/// A horizontal frame `X_1..X_m`, a vertical frame `Z_1..Z_k` and an optional
/// first-order drift, on a polynomial chart of dimension `chart_dim`.
///
/// The operator is `L = sum_i X_i^2 + drift`, `Gamma` comes from the horizontal
/// frame and `Gamma^Z(f, g) = sum_k Z_k f Z_k g`.
#[derive(Clone, Debug)]
pub struct SubRiemannianModel {
    pub label: String,
    chart_dim: usize,
    horizontal: Vec<VectorField>,
    vertical: Vec<VectorField>,
    drift: Option<VectorField>,
}

impl SubRiemannianModel {
    pub fn new(
        label: impl Into<String>,
        horizontal: Vec<VectorField>,
        vertical: Vec<VectorField>,
        drift: Option<VectorField>,
    ) -> Result<Self> {
        let first = horizontal
            .first()
            .ok_or_else(|| CdError::InvalidParameter("horizontal frame must be nonempty".into()))?;
        let chart_dim = first.dim();
        for v in horizontal.iter().chain(&vertical).chain(drift.iter()) {
            if v.dim() != chart_dim {
                return Err(CdError::DimensionMismatch { expected: chart_dim, found: v.dim() });
            }
        }
        Ok(Self { label: label.into(), chart_dim, horizontal, vertical, drift })
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn horizontal(&self) -> &[VectorField] {
        &self.horizontal
    }

    pub fn vertical(&self) -> &[VectorField] {
        &self.vertical
    }

    pub fn drift(&self) -> Option<&VectorField> {
        self.drift.as_ref()
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.dim() != self.chart_dim {
            return Err(CdError::DimensionMismatch { expected: self.chart_dim, found: f.dim() });
        }
        Ok(())
    }

    pub fn laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let mut out = ScalarField::zero(self.chart_dim);
        for x in &self.horizontal {
            out = &out + &x.apply(&x.apply(f)?)?;
        }
        if let Some(d) = &self.drift {
            out = &out + &d.apply(f)?;
        }
        Ok(out)
    }

    fn frame_form(&self, frame: &[VectorField], f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        self.check(g)?;
        let mut out = ScalarField::zero(self.chart_dim);
        for x in frame {
            let xf = x.apply(f)?;
            if xf.is_zero() {
                continue;
            }
            out = &out + &(&xf * &x.apply(g)?);
        }
        Ok(out)
    }

    /// `sum_i X_i f X_i g`, without the cross-check against the definition.
    pub fn gamma_frame(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.frame_form(&self.horizontal, f, g)
    }

    /// `(L(fg) - f Lg - g Lf) / 2`.
    pub fn gamma_definition(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        self.check(g)?;
        let lfg = self.laplacian(&(f * g))?;
        let d = &(&lfg - &(f * &self.laplacian(g)?)) - &(g * &self.laplacian(f)?);
        Ok(d.scale(&rat(1, 2)))
    }

    /// Carré du champ, computed from the frame and checked against the definition.
    pub fn gamma(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        let by_frame = self.gamma_frame(f, g)?;
        let by_def = self.gamma_definition(f, g)?;
        if by_frame != by_def {
            return Err(CdError::Inconsistent(format!(
                "Gamma from the frame ({by_frame}) differs from the definition ({by_def})"
            )));
        }
        Ok(by_frame)
    }

    pub fn gamma_z(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.frame_form(&self.vertical, f, g)
    }

    /// Bilinear `Gamma_2(f, g) = (L Gamma(f,g) - Gamma(f, Lg) - Gamma(g, Lf)) / 2`.
    pub fn gamma2_bilinear(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.iterated(f, g, |a, b| self.gamma_frame(a, b))
    }

    pub fn gamma2_z_bilinear(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.iterated(f, g, |a, b| self.gamma_z(a, b))
    }

    fn iterated<F>(&self, f: &ScalarField, g: &ScalarField, form: F) -> Result<ScalarField>
    where
        F: Fn(&ScalarField, &ScalarField) -> Result<ScalarField>,
    {
        let lf = self.laplacian(f)?;
        let lg = self.laplacian(g)?;
        let a = self.laplacian(&form(f, g)?)?;
        let b = form(f, &lg)?;
        let c = form(g, &lf)?;
        Ok((&(&a - &b) - &c).scale(&rat(1, 2)))
    }

    pub fn gamma2(&self, f: &ScalarField) -> Result<ScalarField> {
        self.gamma2_bilinear(f, f)
    }

    pub fn gamma2_z(&self, f: &ScalarField) -> Result<ScalarField> {
        self.gamma2_z_bilinear(f, f)
    }

    /// `Gamma(f, Gamma^Z(f)) == Gamma^Z(f, Gamma(f))` as polynomials.
    pub fn check_h2(&self, f: &ScalarField) -> bool {
        let lhs = self.gamma_z(f, f).and_then(|gz| self.gamma_frame(f, &gz));
        let rhs = self.gamma_frame(f, f).and_then(|g| self.gamma_z(f, &g));
        match (lhs, rhs) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }

    /// Value of `Gamma_2 + nu Gamma_2^Z - (Lf)^2/d - (rho1 - kappa/nu) Gamma - rho2 Gamma^Z`
    /// as an exact polynomial; CD holds for `f` at `x` iff it is nonnegative there.
    pub fn cd_defect(
        &self,
        f: &ScalarField,
        rho1: &Rational,
        rho2: &Rational,
        kappa: &Rational,
        d: &Rational,
        nu: &Rational,
    ) -> Result<ScalarField> {
        if nu <= &Rational::zero() || d <= &Rational::zero() {
            return Err(CdError::InvalidParameter("nu and d must be positive".into()));
        }
        let lf = self.laplacian(f)?;
        let mut out = &self.gamma2(f)? + &self.gamma2_z(f)?.scale(nu);
        out = &out - &(&lf * &lf).scale(&(Rational::one() / d));
        out = &out - &self.gamma_frame(f, f)?.scale(&(rho1 - kappa / nu));
        out = &out - &self.gamma_z(f, f)?.scale(rho2);
        Ok(out)
    }

    /// Exact check that `L` is symmetric for Lebesgue measure on `[-1,1]^n`,
    /// tested on `b f` and `b g` where `b = prod (1 - x_i^2)^2` vanishes to second
    /// order on the boundary.
    pub fn lebesgue_symmetric_on(&self, f: &ScalarField, g: &ScalarField) -> Result<bool> {
        let n = self.chart_dim;
        let mut bump = ScalarField::one(n);
        for i in 0..n {
            let xi = ScalarField::coordinate(n, i);
            let w = &ScalarField::one(n) - &(&xi * &xi);
            bump = &bump * &(&w * &w);
        }
        let bf = &bump * f;
        let bg = &bump * g;
        let lhs = box_integral(&(&bf * &self.laplacian(&bg)?));
        let rhs = box_integral(&(&bg * &self.laplacian(&bf)?));
        Ok(lhs == rhs)
    }
}

/// Exact integral of a polynomial over `[-1, 1]^n`.
pub fn box_integral(p: &ScalarField) -> Rational {
    let mut sum = Rational::zero();
    for (e, c) in p.terms() {
        if e.iter().any(|k| k % 2 == 1) {
            continue;
        }
        let mut term = c.clone();
        for &k in e {
            term *= rat(2, k as i64 + 1);
        }
        sum += term;
    }
    sum
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub exponents: Vec<u32>,
    pub numerator: i64,
    pub denominator: i64,
}

/// On-disk model format: every field is a list of `chart_dim` polynomials.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelJson {
    #[serde(default)]
    pub label: Option<String>,
    pub chart_dim: usize,
    pub horizontal: Vec<Vec<Vec<TermJson>>>,
    #[serde(default)]
    pub vertical: Vec<Vec<Vec<TermJson>>>,
}

fn poly_from_json(dim: usize, terms: &[TermJson]) -> Result<ScalarField> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        if t.denominator == 0 {
            return Err(CdError::InvalidParameter("zero denominator in model file".into()));
        }
        out.push((t.exponents.clone(), rat(t.numerator, t.denominator)));
    }
    ScalarField::from_terms(dim, out)
}

fn poly_to_json(p: &ScalarField) -> Result<Vec<TermJson>> {
    use num_traits::ToPrimitive;
    p.terms()
        .map(|(e, c)| {
            let numerator = c.numer().to_i64();
            let denominator = c.denom().to_i64();
            match (numerator, denominator) {
                (Some(numerator), Some(denominator)) => {
                    Ok(TermJson { exponents: e.clone(), numerator, denominator })
                }
                _ => Err(CdError::InvalidParameter(format!("coefficient {c} does not fit in i64"))),
            }
        })
        .collect()
}

impl ModelJson {
    pub fn to_model(&self) -> Result<SubRiemannianModel> {
        let n = self.chart_dim;
        let field = |comps: &Vec<Vec<TermJson>>| -> Result<VectorField> {
            if comps.len() != n {
                return Err(CdError::DimensionMismatch { expected: n, found: comps.len() });
            }
            VectorField::new(comps.iter().map(|t| poly_from_json(n, t)).collect::<Result<_>>()?)
        };
        let horizontal = self.horizontal.iter().map(field).collect::<Result<Vec<_>>>()?;
        let vertical = self.vertical.iter().map(field).collect::<Result<Vec<_>>>()?;
        let label = self.label.clone().unwrap_or_else(|| "custom".into());
        SubRiemannianModel::new(label, horizontal, vertical, None)
    }

    pub fn from_model(m: &SubRiemannianModel) -> Result<Self> {
        let field = |v: &VectorField| -> Result<Vec<Vec<TermJson>>> {
            v.components().iter().map(poly_to_json).collect()
        };
        Ok(ModelJson {
            label: Some(m.label.clone()),
            chart_dim: m.chart_dim(),
            horizontal: m.horizontal().iter().map(field).collect::<Result<_>>()?,
            vertical: m.vertical().iter().map(field).collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: usize) -> ScalarField {
        ScalarField::coordinate(3, i)
    }

    fn h3() -> SubRiemannianModel {
        let half = rat(1, 2);
        let x = VectorField::new(vec![ScalarField::one(3), ScalarField::zero(3), (-&c(1)).scale(&half)]).unwrap();
        let y = VectorField::new(vec![ScalarField::zero(3), ScalarField::one(3), c(0).scale(&half)]).unwrap();
        SubRiemannianModel::new("h3", vec![x, y], vec![VectorField::partial(3, 2)], None).unwrap()
    }

    #[test]
    fn apply_examples() {
        let m = h3();
        let x = &m.horizontal()[0];
        assert_eq!(x.apply(&c(0)).unwrap(), ScalarField::one(3));
        assert_eq!(x.apply(&c(2)).unwrap(), c(1).scale(&rat(-1, 2)));
        assert!(x.apply(&ScalarField::constant(3, rat(5, 1))).unwrap().is_zero());
        assert!(x.apply(&ScalarField::coordinate(2, 0)).is_err());
    }

    #[test]
    fn heisenberg_gamma_calculus() {
        let m = h3();
        let z = c(2);
        assert!(m.laplacian(&z).unwrap().is_zero());
        assert_eq!(m.laplacian(&(&c(0) * &c(0))).unwrap(), ScalarField::constant(3, rat(2, 1)));
        assert_eq!(m.gamma(&c(0), &c(0)).unwrap(), ScalarField::one(3));
        let r2 = &(&c(0) * &c(0)) + &(&c(1) * &c(1));
        assert_eq!(m.gamma(&z, &z).unwrap(), r2.scale(&rat(1, 4)));
        assert_eq!(m.gamma_z(&z, &z).unwrap(), ScalarField::one(3));
        assert!(m.gamma2(&c(0)).unwrap().is_zero());
        assert_eq!(m.gamma2(&z).unwrap(), ScalarField::constant(3, rat(1, 2)));
        assert!(m.gamma2(&ScalarField::one(3)).unwrap().is_zero());
    }

    #[test]
    fn bracket_of_heisenberg_frame_is_vertical() {
        let m = h3();
        let b = m.horizontal()[0].commutator(&m.horizontal()[1]).unwrap();
        assert_eq!(b, VectorField::partial(3, 2));
    }

    #[test]
    fn h2_holds_on_heisenberg_and_fails_when_broken() {
        let m = h3();
        assert!(m.check_h2(&(&c(0) + &c(2))));
        let broken_z = VectorField::new(vec![ScalarField::zero(3), c(0), ScalarField::zero(3)]).unwrap();
        let broken = SubRiemannianModel::new("broken", m.horizontal().to_vec(), vec![broken_z], None).unwrap();
        let found = crate::symbolic::poly::exponents_up_to(3, 2)
            .into_iter()
            .any(|e| !broken.check_h2(&ScalarField::monomial(e, rat(1, 1))));
        assert!(found);
    }

    #[test]
    fn symmetric_for_lebesgue() {
        let m = h3();
        assert!(m.lebesgue_symmetric_on(&c(2), &(&c(0) * &c(1))).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let m = h3();
        let j = ModelJson::from_model(&m).unwrap();
        let text = serde_json::to_string(&j).unwrap();
        let back: ModelJson = serde_json::from_str(&text).unwrap();
        let m2 = back.to_model().unwrap();
        assert_eq!(m2.horizontal(), m.horizontal());
        assert_eq!(m2.vertical(), m.vertical());
    }

    #[test]
    fn empty_horizontal_rejected() {
        assert!(SubRiemannianModel::new("e", vec![], vec![], None).is_err());
    }
}
