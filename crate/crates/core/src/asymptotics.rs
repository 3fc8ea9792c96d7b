//! Broadside closed forms: Fresnel-integral correlation, its small-offset
//! Taylor kernel, the small-offset error probability, and the analytic
//! high-SNR ZZB integral.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::crb::PriorBox;
use crate::error::{Error, Result};
use crate::model::{q_function, ArrayConfig, PolarPosition, SnrSpec};
use crate::quad::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FresnelPair {
    pub c_value: f64,
    pub s_value: f64,
}

const ASYMPTOTIC_FROM: f64 = 6.0;

/// `C(u) = int_0^u cos(pi t^2 / 2) dt`, `S(u) = int_0^u sin(pi t^2 / 2) dt`,
/// odd in `u`.
pub fn fresnel_integrals(u: f64) -> FresnelPair {
    if u < 0.0 {
        let p = fresnel_integrals(-u);
        return FresnelPair {
            c_value: -p.c_value,
            s_value: -p.s_value,
        };
    }
    if u == f64::INFINITY {
        return FresnelPair {
            c_value: 0.5,
            s_value: 0.5,
        };
    }
    if u <= ASYMPTOTIC_FROM {
        let c = integrate(|t| (FRAC_PI_2 * t * t).cos(), 0.0, u, 1e-14, 1e-14);
        let s = integrate(|t| (FRAC_PI_2 * t * t).sin(), 0.0, u, 1e-14, 1e-14);
        // A smooth integrand on a bounded interval; GK15 never runs out of segments here.
        return FresnelPair {
            c_value: c.expect("Fresnel cosine quadrature"),
            s_value: s.expect("Fresnel sine quadrature"),
        };
    }
    // Auxiliary functions f, g by their asymptotic series in 1 / (pi u^2)^2.
    let x = PI * u * u;
    let inv2 = 1.0 / (x * x);
    let (mut f, mut g) = (0.0, 0.0);
    let (mut tf, mut tg) = (1.0, 1.0);
    for m in 0..12 {
        f += tf;
        g += tg;
        let m = m as f64;
        let nf = -tf * (4.0 * m + 1.0) * (4.0 * m + 3.0) * inv2;
        let ng = -tg * (4.0 * m + 3.0) * (4.0 * m + 5.0) * inv2;
        if nf.abs() >= tf.abs() || nf.abs() < 1e-18 {
            break;
        }
        tf = nf;
        tg = ng;
    }
    f /= PI * u;
    g /= PI * PI * u * u * u;
    let (sn, cs) = (FRAC_PI_2 * u * u).sin_cos();
    FresnelPair {
        c_value: 0.5 + f * sn - g * cs,
        s_value: 0.5 - f * cs - g * sn,
    }
}

fn broadside(p: PolarPosition) -> Result<f64> {
    if p.theta() != 0.0 {
        return Err(Error::Domain(format!(
            "closed forms are derived at broadside only (theta = {} rad requested)",
            p.theta()
        )));
    }
    Ok(p.d())
}

fn offset(h: f64) -> Result<f64> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::invalid("h", format!("{h} m is not >= 0")));
    }
    Ok(h)
}

/// Fresnel parameter of a distance offset, in the large-array form (`K delta`)
/// and with the exact aperture (`(K-1) delta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuDiagnostics {
    pub large_k: f64,
    pub exact_aperture: f64,
    /// `large_k / exact_aperture - 1`.
    pub relative_gap: f64,
}

pub fn fresnel_nu(cfg: &ArrayConfig, p: PolarPosition, h: f64) -> Result<NuDiagnostics> {
    let d = broadside(p)?;
    let h = offset(h)?;
    let z = h / (d * (d + h));
    let k = cfg.num_antennas() as f64;
    let scale = (z / (2.0 * cfg.wavelength())).sqrt() * cfg.spacing();
    let large_k = k * scale;
    let exact_aperture = (k - 1.0) * scale;
    Ok(NuDiagnostics {
        large_k,
        exact_aperture,
        relative_gap: k / (k - 1.0) - 1.0,
    })
}

/// Continuous-aperture correlation between `d` and `d + h` at broadside,
/// `sqrt(C(nu)^2 + S(nu)^2) / nu`.
pub fn rho_fresnel(cfg: &ArrayConfig, p: PolarPosition, h: f64) -> Result<f64> {
    let nu = fresnel_nu(cfg, p, h)?.large_k;
    if nu == 0.0 {
        return Ok(1.0);
    }
    let fp = fresnel_integrals(nu);
    Ok((fp.c_value.hypot(fp.s_value) / nu).min(1.0))
}

/// Second-order expansion `1 - pi^2 delta^4 K^4 h^2 / (360 lambda^2 d^4)`.
pub fn rho_taylor(cfg: &ArrayConfig, p: PolarPosition, h: f64) -> Result<f64> {
    let d = broadside(p)?;
    let h = offset(h)?;
    let k = cfg.num_antennas() as f64;
    let lambda = cfg.wavelength();
    Ok(1.0 - PI * PI * (cfg.spacing() * k).powi(4) * h * h / (360.0 * lambda * lambda * d.powi(4)))
}

/// `sqrt(K SNR pi^2 D_a^4 / (360 lambda^2))`, the slope that turns a small
/// offset `h` at distance `d` into the error-probability argument `gamma h / d^2`.
pub fn highsnr_gamma(cfg: &ArrayConfig, snr: SnrSpec) -> f64 {
    let k = cfg.num_antennas() as f64;
    (k * snr.linear() * PI * PI * cfg.aperture().powi(4)
        / (360.0 * cfg.wavelength().powi(2)))
    .sqrt()
}

/// Small-offset error probability `Q(gamma h / d^2)`.
pub fn pmin_small_h(cfg: &ArrayConfig, snr: SnrSpec, p: PolarPosition, h: f64) -> Result<f64> {
    let d = broadside(p)?;
    let h = offset(h)?;
    Ok(q_function(highsnr_gamma(cfg, snr) * h / (d * d)))
}

/// `(d_max^5 - d_min^5) / (20 gamma^2 T_d)`: the high-SNR value of
/// `(1/T_d) int_0^T_d h int Q(gamma h / d^2) dd dh` once the inner limit
/// `d_max - h` is relaxed to `d_max` and the outer limit to infinity.
pub fn highsnr_integral_closed(gamma: f64, prior: &PriorBox) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid("gamma", format!("{gamma} is not > 0")));
    }
    if !prior.is_known_angle() {
        return Err(Error::Domain("closed form needs a distance-only prior".into()));
    }
    Ok((prior.d_max().powi(5) - prior.d_min().powi(5)) / (20.0 * gamma * gamma * prior.span_d()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Power series C(u) = sum (-1)^n (pi/2)^{2n} u^{4n+1} / ((2n)! (4n+1)), likewise S.
    fn fresnel_series(u: f64) -> (f64, f64) {
        let a = FRAC_PI_2 * u * u;
        let (mut c, mut s) = (0.0, 0.0);
        let mut term = 1.0; // a^n / n!
        for n in 0..200 {
            let nf = n as f64;
            if n % 2 == 0 {
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                c += sign * term / (2.0 * nf + 1.0);
            } else {
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * term / (2.0 * nf + 1.0);
            }
            term *= a / (nf + 1.0);
        }
        (c * u, s * u)
    }

    #[test]
    fn fresnel_known_values() {
        let p = fresnel_integrals(0.0);
        assert_eq!((p.c_value, p.s_value), (0.0, 0.0));
        let p = fresnel_integrals(1.0);
        assert_abs_diff_eq!(p.c_value, 0.779_893_400_376_822_8, epsilon = 1e-12);
        assert_abs_diff_eq!(p.s_value, 0.438_259_147_390_354_8, epsilon = 1e-12);
        let p = fresnel_integrals(f64::INFINITY);
        assert_eq!((p.c_value, p.s_value), (0.5, 0.5));
        let m = fresnel_integrals(-1.0);
        assert_eq!(m.c_value, -fresnel_integrals(1.0).c_value);
    }

    #[test]
    fn fresnel_matches_series_at_small_u() {
        for &u in &[0.1, 0.5, 1.3, 2.0, 2.9] {
            let (c, s) = fresnel_series(u);
            let p = fresnel_integrals(u);
            assert_abs_diff_eq!(p.c_value, c, epsilon = 1e-10);
            assert_abs_diff_eq!(p.s_value, s, epsilon = 1e-10);
        }
    }

    #[test]
    fn fresnel_across_switchover() {
        // 30-digit references
        let table = [
            (5.9, 0.448_591_953_169_830_0, 0.516_330_691_504_153_4),
            (6.0, 0.499_531_467_855_501_1, 0.446_960_761_236_930_3),
            (6.01, 0.509_472_281_587_403_1, 0.447_900_969_796_601_5),
            (6.5, 0.481_603_459_890_964_0, 0.545_376_455_243_233_6),
            (10.0, 0.499_898_694_205_515_7, 0.468_169_978_584_882_2),
            (20.0, 0.499_987_334_972_344_4, 0.484_084_535_925_953_9),
        ];
        for (u, c, s) in table {
            let p = fresnel_integrals(u);
            assert_abs_diff_eq!(p.c_value, c, epsilon = 1e-9);
            assert_abs_diff_eq!(p.s_value, s, epsilon = 1e-9);
        }
    }

    #[test]
    fn fresnel_envelope() {
        for &u in &[5.0, 10.0, 20.0] {
            let p = fresnel_integrals(u);
            let env = 1.0 / (PI * u);
            assert!((p.c_value - 0.5).abs() <= env * 1.01);
            assert!((p.s_value - 0.5).abs() <= env * 1.01);
        }
    }

    #[test]
    fn broadside_only() {
        let cfg = ArrayConfig::half_wavelength(201, 28e9).unwrap();
        let p = PolarPosition::new(3.0, 0.1).unwrap();
        assert!(matches!(rho_fresnel(&cfg, p, 0.1), Err(Error::Domain(_))));
        assert!(matches!(rho_taylor(&cfg, p, 0.1), Err(Error::Domain(_))));
        let snr = SnrSpec::from_linear(1.0).unwrap();
        assert!(matches!(pmin_small_h(&cfg, snr, p, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_offset_limits() {
        let cfg = ArrayConfig::half_wavelength(201, 28e9).unwrap();
        let p = PolarPosition::new(3.0, 0.0).unwrap();
        assert_eq!(rho_fresnel(&cfg, p, 0.0).unwrap(), 1.0);
        assert_eq!(rho_taylor(&cfg, p, 0.0).unwrap(), 1.0);
        let snr = SnrSpec::from_linear(10.0).unwrap();
        assert_eq!(pmin_small_h(&cfg, snr, p, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn nu_diagnostics() {
        let cfg = ArrayConfig::with_aperture(21, 1.0, 28e9).unwrap();
        let p = PolarPosition::new(3.0, 0.0).unwrap();
        let nu = fresnel_nu(&cfg, p, 0.5).unwrap();
        assert_relative_eq!(nu.relative_gap, 0.05, max_relative = 1e-12);
        assert_relative_eq!(nu.large_k / nu.exact_aperture, 21.0 / 20.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_integral_reproduces_asymptote() {
        let cfg = ArrayConfig::half_wavelength(201, 28e9).unwrap();
        let snr = SnrSpec::from_linear(1.0).unwrap();
        let prior = PriorBox::known_angle(1.0, 5.0, 0.0).unwrap();
        let closed = highsnr_integral_closed(highsnr_gamma(&cfg, snr), &prior).unwrap();
        let asym = crate::zzb::zzb_highsnr_asymptote(&cfg, snr, &prior).unwrap();
        assert_relative_eq!(closed, asym, max_relative = 1e-12);
        let wide = PriorBox::from_degrees(1.0, 5.0, -10.0, 10.0).unwrap();
        assert!(highsnr_integral_closed(1.0, &wide).is_err());
    }
}
