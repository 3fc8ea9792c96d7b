//! Quadrature oracles shared by the integration tests. Independent of the
//! library's own quadrature code.
#![allow(dead_code)]

use nearfield_zzb::q_function;

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `int_0^40 u Q(u) du`, piecewise so no panel is skipped early.
pub fn u_q_moment() -> f64 {
    (0..40)
        .map(|i| adaptive_simpson(&|u: f64| u * q_function(u), i as f64, i as f64 + 1.0, 1e-15))
        .sum()
}

/// `(1/T) int_0^T h int_{d_min}^{d_max - h} Q(gamma h / d^2) dd dh`.
pub fn highsnr_brute_force(gamma: f64, d_min: f64, d_max: f64) -> f64 {
    let t = d_max - d_min;
    let outer = |h: f64| {
        if h >= t {
            return 0.0;
        }
        h * adaptive_simpson(&|d: f64| q_function(gamma * h / (d * d)), d_min, d_max - h, 1e-12)
    };
    // Integrand lives on the scale d_max^2 / gamma; split there.
    let scale = d_max * d_max / gamma;
    let mut acc = 0.0;
    let mut a = 0.0;
    let mut b = scale / 8.0;
    while a < t {
        let hi = b.min(t);
        acc += adaptive_simpson(&outer, a, hi, 1e-12 * scale * scale);
        a = hi;
        b *= 2.0;
    }
    acc / t
}
