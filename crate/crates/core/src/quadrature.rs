//! Composite Gauss-Legendre quadrature.

/// Positive nodes and weights of the 8-point rule on `[-1, 1]`.
pub const GL8_NODES: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
pub const GL8_WEIGHTS: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];

/// Nodes and weights of the 8-point rule on each of `panels` equal panels of `[a, b]`.
pub fn composite_rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(8 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL8_NODES.iter().zip(&GL8_WEIGHTS) {
            out.push((mid - 0.5 * h * x, 0.5 * h * w));
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    composite_rule(a, b, panels).into_iter().map(|(x, w)| w * f(x)).sum()
}
