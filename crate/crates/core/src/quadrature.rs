//! Adaptive Simpson quadrature with a Richardson correction.

const MAX_DEPTH: u32 = 50;

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each panel is split until the two-level Simpson estimates agree to
/// `15 * tol`; the accepted value includes the Richardson term `(S2 - S1)/15`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let refined = left + right;
    let diff = refined - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return refined + diff / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `integrate` over consecutive panels `[p0, p1], [p1, p2], ...`, splitting
/// the tolerance evenly; used to put known kinks on panel edges.
pub fn integrate_pieces(f: &dyn Fn(f64) -> f64, points: &[f64], tol: f64) -> f64 {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    points
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], tol / pieces))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_smooth_functions() {
        assert!((integrate(&|x| x * x * x, 0.0, 2.0, 1e-12) - 4.0).abs() < 1e-12);
        assert!((integrate(&f64::sin, 0.0, std::f64::consts::PI, 1e-12) - 2.0).abs() < 1e-11);
        let kink = integrate_pieces(&|x: f64| x.abs(), &[-1.0, 0.0, 2.0], 1e-12);
        assert!((kink - 2.5).abs() < 1e-12);
    }
}
