//! Quadrature, bracketing root finders and one-dimensional maximization.

use crate::error::{PoaError, Result};

/// Maximum recursion depth of [`adaptive_simpson`].
const SIMPSON_MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// The absolute target is `rel_tol` times the magnitude of a coarse first estimate, with a
/// floor of `1e-300` so that identically zero integrands terminate immediately.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -adaptive_simpson(f, b, a, rel_tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // A 16-panel composite estimate sets the scale; the 3-point rule alone can vanish by accident.
    let scale = gauss_legendre_composite(&f, a, b, 16).abs().max(whole.abs());
    let tol = (rel_tol * scale).max(1e-300);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
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
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

/// Five-point Gauss-Legendre rule on `[a, b]`; exact for polynomials up to degree 9.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite five-point Gauss-Legendre rule over `panels` equal sub-intervals.
pub fn gauss_legendre_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            gauss_legendre5(f, lo, lo + h)
        })
        .sum()
}

/// Root of a function known to change sign on `[lo, hi]`, located by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Bisection on a bracket with a sign change.
///
/// Iterates until the bracket width drops below `x_tol` or the midpoint stops moving in floating
/// point. A zero at either endpoint is returned directly.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> Result<Root> {
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Root { x: lo, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, iterations: 0 });
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(PoaError::BracketFailure { lo, hi });
    }
    let mut iterations = 0;
    while iterations < 400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        iterations += 1;
        if f_mid == 0.0 {
            return Ok(Root { x: mid, iterations });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        x: 0.5 * (lo + hi),
        iterations,
    })
}

/// Smallest `x` in `[0, ∞)` with `f(x) < y` for a nonincreasing `f`, found by geometric bracket
/// expansion followed by bisection.
///
/// Where `f` jumps across `y`, the jump location is returned, which is the supporting-line
/// solution of `f(x) = y`. Returns 0 when `f(0) <= y`.
pub fn invert_nonincreasing<F: Fn(f64) -> f64>(f: F, y: f64, start: f64, upper: f64, x_tol: f64) -> f64 {
    if f(0.0) <= y {
        return 0.0;
    }
    let mut hi = if upper.is_finite() { upper } else { start.max(1e-12) };
    if !upper.is_finite() {
        let mut expansions = 0;
        while f(hi) >= y && expansions < 2000 {
            hi *= 2.0;
            expansions += 1;
        }
    } else if f(hi) >= y {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, x_tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Central finite difference with the relative step used throughout the crate.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = fd_step(x);
    // Keep both stencil points on the nonnegative half-line.
    if x - h < 0.0 {
        let h = x.max(1e-300).min(h);
        if x <= 0.0 {
            return (f(h) - f(0.0)) / h;
        }
        return (f(x + h) - f(x - h)) / (2.0 * h);
    }
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Step `max(1e-6, 1e-6 * x)`.
pub fn fd_step(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert_relative_eq!(v, std::f64::consts::E - 1.0, max_relative = 1e-11);
        let v = adaptive_simpson(|x: f64| (-x * x).exp(), 0.0, 6.0, 1e-10);
        assert_relative_eq!(v, std::f64::consts::PI.sqrt() / 2.0, max_relative = 1e-9);
        assert_eq!(adaptive_simpson(|_| 0.0, 0.0, 3.0, 1e-9), 0.0);
        assert_relative_eq!(adaptive_simpson(|x| x, 1.0, 0.0, 1e-9), -0.5, max_relative = 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_nine() {
        let p = |x: f64| x.powi(9) - 3.0 * x.powi(4) + 1.0;
        let exact = |x: f64| x.powi(10) / 10.0 - 3.0 * x.powi(5) / 5.0 + x;
        assert_relative_eq!(gauss_legendre5(p, -0.5, 2.0), exact(2.0) - exact(-0.5), max_relative = 1e-13);
    }

    #[test]
    fn bisection_finds_sqrt_two() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((root.x - std::f64::consts::SQRT_2).abs() < 1e-13);
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12), Err(PoaError::BracketFailure { .. })));
    }

    #[test]
    fn inversion_returns_jump_location() {
        let step = |x: f64| if x < 2.0 { 1.0 } else { 0.25 };
        let x = invert_nonincreasing(step, 0.5, 1.0, f64::INFINITY, 1e-13);
        assert!((x - 2.0).abs() < 1e-10);
        let x = invert_nonincreasing(|x: f64| (-x).exp(), 0.5, 1.0, f64::INFINITY, 1e-14);
        assert!((x - 2f64.ln()).abs() < 1e-12);
        assert_eq!(invert_nonincreasing(|x: f64| 1.0 - x, 1.5, 1.0, 1.0, 1e-12), 0.0);
    }

    #[test]
    fn golden_section_locates_parabola_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn central_difference_near_zero_stays_in_domain() {
        let d = central_difference(|x: f64| (-x).exp(), 1.0);
        assert!((d + (-1.0f64).exp()).abs() < 1e-9);
        let d = central_difference(|x: f64| x.sqrt().min(1.0) * 0.0 + 2.0 * x, 0.0);
        assert!((d - 2.0).abs() < 1e-9);
    }
}
