use approx::assert_relative_eq;
use nearfield_zzb::asymptotics::*;
use nearfield_zzb::*;
use std::f64::consts::PI;

mod oracle;
use oracle::*;

const FC: f64 = 28e9;

fn half_wave_201() -> ArrayConfig {
    ArrayConfig::half_wavelength(201, FC).unwrap()
}

fn at(d: f64) -> PolarPosition {
    PolarPosition::new(d, 0.0).unwrap()
}

fn nu(cfg: &ArrayConfig, d: f64, h: f64) -> f64 {
    fresnel_nu(cfg, at(d), h).unwrap().large_k
}

#[test]
fn fresnel_integrals_against_defining_integrals() {
    for u in [0.3, 1.0, 2.5, 4.0, 5.5] {
        let c = adaptive_simpson(&|t: f64| (PI * t * t / 2.0).cos(), 0.0, u, 1e-13);
        let s = adaptive_simpson(&|t: f64| (PI * t * t / 2.0).sin(), 0.0, u, 1e-13);
        let f = fresnel_integrals(u);
        assert!((f.c_value - c).abs() < 1e-9, "C({u})");
        assert!((f.s_value - s).abs() < 1e-9, "S({u})");
    }
    let f = fresnel_integrals(1.0);
    assert!((f.c_value - 0.7798934).abs() < 1e-6);
    assert!((f.s_value - 0.4382591).abs() < 1e-6);
    let f = fresnel_integrals(0.0);
    assert_eq!((f.c_value, f.s_value), (0.0, 0.0));
    let f = fresnel_integrals(f64::INFINITY);
    assert_eq!((f.c_value, f.s_value), (0.5, 0.5));
    let g = fresnel_integrals(-1.0);
    assert_eq!(g.c_value, -fresnel_integrals(1.0).c_value);
}

#[test]
fn fresnel_bounds_and_envelope() {
    for i in 1..400 {
        let u = 0.05 * i as f64;
        let f = fresnel_integrals(u);
        assert!(f.c_value.powi(2) + f.s_value.powi(2) <= u * u + 1e-15);
        assert!(f.c_value.abs() <= 1.0 && f.s_value.abs() <= 1.0);
    }
    for u in [5.0, 10.0, 20.0] {
        let env = 1.0 / (PI * u);
        for k in 0..50 {
            let v = u + 0.02 * k as f64;
            let f = fresnel_integrals(v);
            assert!((f.c_value - 0.5).abs() <= 1.05 / (PI * v));
            assert!((f.s_value - 0.5).abs() <= 1.05 / (PI * v));
        }
        let peak = (0..200)
            .map(|k| (fresnel_integrals(u + 0.01 * k as f64).c_value - 0.5).abs())
            .fold(0.0, f64::max);
        assert!(peak > 0.8 * env, "u={u}: envelope not reached");
    }
}

#[test]
fn fresnel_correlation_tracks_exact_sum() {
    let cfg = half_wave_201();
    let rf = rho_fresnel(&cfg, at(3.0), 0.5).unwrap();
    let ex = correlation(&cfg, at(3.0), Displacement::distance(0.5)).unwrap();
    assert!((rf - ex).abs() < 0.03, "{rf} vs {ex}");
    assert_eq!(rho_fresnel(&cfg, at(3.0), 0.0).unwrap(), 1.0);
    assert_eq!(rho_taylor(&cfg, at(3.0), 0.0).unwrap(), 1.0);

    // Main lobe is monotone in nu.
    let (d, mut prev) = (3.0, 1.0);
    let mut h = 1e-4;
    while nu(&cfg, d, h) <= 1.5 {
        let r = rho_fresnel(&cfg, at(d), h).unwrap();
        assert!(r < prev);
        prev = r;
        h *= 1.05;
    }
}

#[test]
fn taylor_fresnel_exact_chain_in_small_nu_regime() {
    let cfg = half_wave_201();
    for d in [2.0, 3.0, 4.0, 5.0] {
        let mut h = 1e-4;
        while nu(&cfg, d, h) <= 0.3 {
            let t = rho_taylor(&cfg, at(d), h).unwrap();
            let f = rho_fresnel(&cfg, at(d), h).unwrap();
            let e = correlation(&cfg, at(d), Displacement::distance(h)).unwrap();
            assert!((t - f).abs() < 1e-3, "d={d} h={h}");
            assert!((t - e).abs() < 1e-2 && (f - e).abs() < 1e-2, "d={d} h={h}");
            h *= 1.3;
        }
    }
}

#[test]
fn taylor_coefficient_from_finite_differences() {
    // The Fresnel expansion drops terms of relative order (D_a / d)^2, so the
    // agreement tightens with distance.
    let cfg = half_wave_201();
    let h = 1e-3;
    let mut prev = f64::INFINITY;
    for d in [3.0, 5.0, 8.0] {
        let e = correlation(&cfg, at(d), Displacement::distance(h)).unwrap();
        let fd = (1.0 - e) / (h * h);
        let t = (1.0 - rho_taylor(&cfg, at(d), h).unwrap()) / (h * h);
        let gap = (fd / t - 1.0).abs();
        assert!(gap < prev, "d={d}: {gap}");
        if d >= 5.0 {
            assert!(gap <= 0.02, "d={d}: finite difference {fd} vs {t}");
        }
        prev = gap;
    }
}

#[test]
fn small_offset_error_probability() {
    let cfg = half_wave_201();
    let snr = SnrSpec::from_db(10.0).unwrap();
    assert_eq!(pmin_small_h(&cfg, snr, at(3.0), 0.0).unwrap(), 0.5);
    let g = highsnr_gamma(&cfg, snr);
    for d in [2.0, 3.0, 5.0] {
        let mut h = 1e-4;
        while nu(&cfg, d, h) <= 0.3 {
            let exact = pmin(&cfg, snr, at(d), Displacement::distance(h)).unwrap();
            let rho = correlation(&cfg, at(d), Displacement::distance(h)).unwrap();
            let arg_exact = (snr.total(&cfg) * (1.0 - rho)).sqrt();
            let arg_small = g * h / (d * d);
            assert!((arg_small / arg_exact - 1.0).abs() <= 0.10, "d={d} h={h}");
            assert!(exact <= 0.5);
            assert_relative_eq!(
                pmin_small_h(&cfg, snr, at(d), 2.0 * h).unwrap(),
                q_function(2.0 * arg_small),
                max_relative = 1e-12
            );
            h *= 1.5;
        }
    }
}

#[test]
fn kernel_identity_u_q_u() {
    let v = u_q_moment();
    assert!((v - 0.25).abs() < 1e-6, "{v}");
}

#[test]
fn closed_high_snr_integral_approaches_brute_force() {
    let prior = PriorBox::known_angle(1.0, 5.0, 0.0).unwrap();
    let mut prev = f64::INFINITY;
    for ratio in [50.0, 200.0, 1000.0, 4000.0] {
        let gamma = ratio * 25.0 / 4.0;
        let closed = highsnr_integral_closed(gamma, &prior).unwrap();
        let bf = highsnr_brute_force(gamma, 1.0, 5.0);
        let rel = (closed / bf - 1.0).abs();
        assert!(rel < prev, "ratio {ratio}: {rel}");
        prev = rel;
        if ratio >= 1000.0 {
            assert!(rel < 0.01, "ratio {ratio}: {rel}");
        }
    }
}

#[test]
fn closed_integral_reproduces_asymptote() {
    let cfg = ArrayConfig::with_aperture(201, 1.0, FC).unwrap();
    let prior = PriorBox::known_angle(1.0, 5.0, 0.0).unwrap();
    for db in [0.0, 17.0, 30.0] {
        let snr = SnrSpec::from_db(db).unwrap();
        let g = highsnr_gamma(&cfg, snr);
        assert_relative_eq!(
            highsnr_integral_closed(g, &prior).unwrap(),
            zzb_highsnr_asymptote(&cfg, snr, &prior).unwrap(),
            max_relative = 1e-12
        );
    }
}

#[test]
fn off_broadside_is_a_domain_error() {
    let cfg = half_wave_201();
    let p = PolarPosition::new(3.0, 0.2).unwrap();
    let snr = SnrSpec::from_db(0.0).unwrap();
    assert!(matches!(rho_fresnel(&cfg, p, 0.1), Err(Error::Domain(_))));
    assert!(matches!(rho_taylor(&cfg, p, 0.1), Err(Error::Domain(_))));
    assert!(matches!(pmin_small_h(&cfg, snr, p, 0.1), Err(Error::Domain(_))));
    let boxed = PriorBox::from_degrees(1.0, 5.0, -5.0, 5.0).unwrap();
    assert!(matches!(highsnr_integral_closed(1.0, &boxed), Err(Error::Domain(_))));
    let known = PriorBox::known_angle(1.0, 5.0, 0.0).unwrap();
    assert!(highsnr_integral_closed(0.0, &known).is_err());
}

#[test]
fn nu_diagnostics_report_aperture_gap() {
    let cfg = ArrayConfig::with_aperture(21, 1.0, FC).unwrap();
    let n = fresnel_nu(&cfg, at(3.0), 0.2).unwrap();
    assert_relative_eq!(n.large_k / n.exact_aperture, 21.0 / 20.0, max_relative = 1e-12);
    assert_relative_eq!(n.relative_gap, 0.05, max_relative = 1e-9);
}
