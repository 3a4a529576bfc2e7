//! Closed-form heat kernel of the three-dimensional Heisenberg group for
//! `L = X^2 + Y^2`, `X = d_x - (y/2) d_z`, `Y = d_y + (x/2) d_z`:
//!
//! `p_t(x, y, z) = (1 / 4 pi^2 t^2) int_0^inf cos(u z / t) (u / sinh u) exp(-u coth(u) r^2 / 4t) du`.

use crate::error::{CdError, Result};
use crate::quadrature;
const CUTOFF: f64 = 48.0;

fn integrand(u: f64, a: f64, b: f64) -> f64 {
    let (s, c) = if u < 1e-6 {
        (1.0 - u * u / 6.0, 1.0 + u * u / 3.0)
    } else {
        (u / u.sinh(), u / u.tanh())
    };
    (a * u).cos() * s * (-c * b).exp()
}

fn composite(a: f64, b: f64, panels: usize) -> f64 {
    quadrature::integrate(|u| integrand(u, a, b), 0.0, CUTOFF, panels)
}

/// Kernel from the origin to `(x, y, z)` at time `t`, relative to Lebesgue measure.
pub fn heisenberg_heat_kernel(t: f64, x: f64, y: f64, z: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(CdError::InvalidParameter(format!("kernel needs t > 0, got {t}")));
    }
    let a = z / t;
    let b = (x * x + y * y) / (4.0 * t);
    let mut panels = ((CUTOFF * a.abs() / 2.0).ceil() as usize).max(64);
    let mut prev = composite(a, b, panels);
    for _ in 0..12 {
        panels *= 2;
        let next = composite(a, b, panels);
        if (next - prev).abs() <= 1e-12 * next.abs().max(1e-300) + 1e-300 {
            return Ok(next / (4.0 * std::f64::consts::PI.powi(2) * t * t));
        }
        prev = next;
    }
    Err(CdError::Quadrature(format!("Heisenberg kernel at t={t}, (x,y,z)=({x},{y},{z})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_closed_form() {
        for t in [0.05, 0.3, 1.0, 4.0] {
            let p = heisenberg_heat_kernel(t, 0.0, 0.0, 0.0).unwrap();
            assert!((p * 16.0 * t * t - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn off_diagonal_is_smaller() {
        let d = heisenberg_heat_kernel(0.5, 0.0, 0.0, 0.0).unwrap();
        assert!(heisenberg_heat_kernel(0.5, 0.3, 0.0, 0.0).unwrap() < d);
        assert!(heisenberg_heat_kernel(0.5, 0.0, 0.0, 0.4).unwrap() < d);
        assert!(heisenberg_heat_kernel(0.0, 0.0, 0.0, 0.0).is_err());
    }
}
