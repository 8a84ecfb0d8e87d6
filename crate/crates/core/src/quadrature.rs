//! Adaptive quadrature for closed-form integrands.

/// Adaptive Simpson rule on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

/// Integral over `[0, upper]` split at `scale * 2^k` breakpoints, for
/// integrands concentrated near the origin with long algebraic tails.
pub fn integrate_half_line(f: &impl Fn(f64) -> f64, upper: f64, scale: f64, tol: f64) -> f64 {
    let mut breaks = vec![0.0];
    let mut x = scale.min(upper);
    while x < upper {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.push(upper);
    let pieces = (breaks.len() - 1) as f64;
    breaks
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_and_exponential() {
        assert_abs_diff_eq!(
            adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12),
            4.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 40.0, 1e-12),
            1.0 - (-40.0f64).exp(),
            epsilon = 1e-11
        );
    }

    #[test]
    fn algebraic_tail() {
        // Integral of (1+x)^-3 over [0, 1e6].
        let exact = 0.5 * (1.0 - (1.0f64 + 1e6).powi(-2));
        let got = integrate_half_line(&|x: f64| (1.0 + x).powi(-3), 1e6, 1e-3, 1e-12);
        assert_abs_diff_eq!(got, exact, epsilon = 1e-11);
    }
}
