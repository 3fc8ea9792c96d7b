//! Grids and quadrature rules shared by the bound engines.

use crate::error::{Error, Result};

/// `n` equally spaced nodes on `[a, b]`, endpoints exact.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

/// `n` nodes on `[0, span]`: half geometric from `span * min_rel` upward, half
/// uniform, merged. The geometric part resolves integrands concentrated near
/// zero, the uniform part keeps the step bounded away from it.
pub fn graded_grid(span: f64, n: usize, min_rel: f64) -> Vec<f64> {
    debug_assert!(n >= 3);
    let n_geo = n / 2;
    let n_uni = n - n_geo;
    let lo = (span * min_rel).ln();
    let hi = span.ln();
    let mut grid = uniform_grid(0.0, span, n_uni.max(2));
    grid.extend((0..n_geo).map(|i| (lo + (hi - lo) * i as f64 / n_geo as f64).exp()));
    grid.sort_by(f64::total_cmp);
    grid
}

/// Composite trapezoid weights for arbitrary ascending nodes.
pub fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = 0.5 * (xs[i + 1] - xs[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
///
/// Returns the estimate once the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    const MAX_SEGMENTS: usize = 2000;
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut segments = vec![(a, b, v, e)];
    loop {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature on [{a}, {b}]: error estimate {err:e} after {MAX_SEGMENTS} segments"
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grids() {
        let g = uniform_grid(1.0, 5.0, 5);
        assert_eq!(g, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let g = graded_grid(5.0, 10, 1e-6);
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.0);
        assert_abs_diff_eq!(g[1], 5e-6, epsilon = 1e-18);
        assert_eq!(g[9], 5.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let step = g.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(step <= 5.0 / 4.0 + 1e-12);
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        let xs = [0.0, 0.1, 0.5, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert_abs_diff_eq!(trapezoid(&xs, &ys), 8.0, epsilon = 1e-14);
        let w = trapezoid_weights(&xs);
        let via_w: f64 = w.iter().zip(&ys).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(via_w, 8.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_integrates_oscillatory() {
        let v = integrate(|t: f64| (t * t).cos(), 0.0, 10.0, 1e-13, 1e-13).unwrap();
        // Fresnel-type reference: C(10 * sqrt(2/pi)) * sqrt(pi/2)
        assert_abs_diff_eq!(v, 0.601_125_184_813_447_2, epsilon = 1e-11);
        let v = integrate(|t: f64| t.exp(), 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-13);
    }
}
