//! Central finite-difference gradient verification.
//!
//! Every backward pass in this engine is hand-derived, so each one is checked
//! against a numeric derivative that only ever calls the forward path.

/// Central-difference derivative of `f` with respect to each coordinate of `x`.
///
/// `f` must be a pure function of its argument; it is evaluated 2·n times.
pub fn finite_difference<F>(f: F, x: &[f64], eps: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut buf = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = buf[i];
        buf[i] = orig + eps;
        let plus = f(&buf);
        buf[i] = orig - eps;
        let minus = f(&buf);
        buf[i] = orig;
        grad.push((plus - minus) / (2.0 * eps));
    }
    grad
}

/// Relative error with a unit floor: |a - n| / max(1, |a|, |n|).
///
/// The floor keeps near-zero gradients from blowing up the ratio while still
/// holding large gradients to a true relative tolerance.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = 1.0_f64.max(analytic.abs()).max(numeric.abs());
    (analytic - numeric).abs() / denom
}

/// Largest relative error between an analytic gradient and the central
/// finite-difference gradient of `f` at `x`.
pub fn max_relative_error<F>(f: F, x: &[f64], analytic: &[f64], eps: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x.len(), analytic.len(), "gradient length mismatch");
    let numeric = finite_difference(f, x, eps);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivative() {
        // d/dx of x^2 at 3 is 6.
        let g = finite_difference(|x| x[0] * x[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn multivariate_matches_hand_gradient() {
        // f(x, y) = x*y + sin(x), grad = (y + cos(x), x)
        let f = |v: &[f64]| v[0] * v[1] + v[0].sin();
        let x = [0.7_f64, -1.3];
        let analytic = [x[1] + x[0].cos(), x[0]];
        assert!(max_relative_error(f, &x, &analytic, 1e-5) < 1e-9);
    }
}
