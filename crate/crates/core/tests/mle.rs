use nearfield_zzb::mle::*;
use nearfield_zzb::*;

const FC: f64 = 28e9;

fn k21() -> ArrayConfig {
    ArrayConfig::with_aperture(21, 1.0, FC).unwrap()
}

fn db(x: f64) -> SnrSpec {
    SnrSpec::from_db(x).unwrap()
}

fn noiseless(cfg: &ArrayConfig, p: PolarPosition) -> Observation {
    Observation {
        r: steering_vector(cfg, p),
        truth: p,
        snr: SnrSpec::from_linear(1.0).unwrap(),
        amplitude: 1.0,
    }
}

#[test]
fn noise_has_unit_power_per_element() {
    let cfg = k21();
    let zero = SnrSpec::from_linear(0.0).unwrap();
    let p = PolarPosition::new(2.0, 0.0).unwrap();
    let (mut sum, mut re, mut im, mut n) = (0.0, 0.0, 0.0, 0usize);
    for trial in 0..5000 {
        let mut rng = TrialStream::new(11, trial);
        let obs = simulate_observation(&cfg, zero, p, &mut rng);
        for z in &obs.r {
            sum += z.norm_sqr();
            re += z.re * z.re;
            im += z.im * z.im;
            n += 1;
        }
    }
    let n = n as f64;
    assert!(n >= 1e5);
    assert!((0.98..=1.02).contains(&(sum / n)), "{}", sum / n);
    assert!((re / n - 0.5).abs() < 0.01 && (im / n - 0.5).abs() < 0.01);
}

#[test]
fn simulation_is_deterministic_and_converges_to_the_signal() {
    let cfg = k21();
    let p = PolarPosition::new(3.2, 0.1).unwrap();
    let a = simulate_observation(&cfg, db(5.0), p, &mut TrialStream::new(3, 9));
    let b = simulate_observation(&cfg, db(5.0), p, &mut TrialStream::new(3, 9));
    assert_eq!(a, b);
    let c = simulate_observation(&cfg, db(5.0), p, &mut TrialStream::new(3, 10));
    assert_ne!(a.r, c.r);

    let s = steering_vector(&cfg, p);
    let obs = simulate_observation(&cfg, db(120.0), p, &mut TrialStream::new(0, 0));
    assert_eq!(obs.amplitude, 1e6);
    for (r, s) in obs.r.iter().zip(&s) {
        assert!((r / obs.amplitude - s).norm() < 1e-5);
    }
}

#[test]
fn noiseless_search_on_and_off_grid() {
    let cfg = k21();
    let prior = PriorBox::from_degrees(1.0, 5.0, -20.0, 20.0).unwrap();
    let mc = MonteCarloConfig::default();
    let grid = SearchGrid::new(&cfg, &prior, &mc).unwrap();
    let (nd, nt) = (grid.ds.len(), grid.thetas.len());
    assert_eq!((nd, nt), (512, 256));
    for (i, j) in [(0, 0), (40, 10), (nd - 1, nt - 1), (377, 132)] {
        let p = PolarPosition::new(grid.ds[i], grid.thetas[j]).unwrap();
        let est = ml_grid_search(&grid, &noiseless(&cfg, p), Refine::Off);
        assert_eq!(est.node, (i, j));
        assert_eq!((est.d, est.theta), (grid.ds[i], grid.thetas[j]));
    }

    for (d, th) in [(1.234, 0.05), (2.71, -0.2), (4.4, 0.31)] {
        let p = PolarPosition::new(d, th).unwrap();
        let obs = noiseless(&cfg, p);
        for refine in [Refine::Parabolic, Refine::Golden] {
            let est = ml_grid_search(&grid, &obs, refine);
            let (i, j) = est.node;
            let cell_d = grid.ds[(i + 1).min(nd - 1)] - grid.ds[i.saturating_sub(1)];
            let cell_t = grid.thetas[(j + 1).min(nt - 1)] - grid.thetas[j.saturating_sub(1)];
            assert!((est.d - d).abs() <= cell_d, "{refine:?} d {} vs {d}", est.d);
            assert!((est.theta - th).abs() <= cell_t, "{refine:?} theta {} vs {th}", est.theta);
            assert!(prior.contains(PolarPosition::new(est.d, est.theta).unwrap()));
        }
        let golden = ml_grid_search(&grid, &obs, Refine::Golden);
        assert!((golden.d - d).abs() < 1e-3 * d);
    }
}

#[test]
fn estimates_carry_no_information_at_zero_snr() {
    let cfg = k21();
    let prior = PriorBox::known_angle(0.0, 5.0, 0.0).unwrap();
    let mc = MonteCarloConfig {
        search_grid_d: 256,
        ..Default::default()
    };
    let grid = SearchGrid::new(&cfg, &prior, &mc).unwrap();
    let zero = SnrSpec::from_linear(0.0).unwrap();
    let n = 2000;
    let (mut truth, mut est) = (Vec::new(), Vec::new());
    for trial in 0..n {
        let mut rng = TrialStream::new(5, trial);
        let d = rng.uniform() * 5.0;
        let p = PolarPosition::new(d, 0.0).unwrap();
        let obs = simulate_observation(&cfg, zero, p, &mut rng);
        truth.push(d);
        est.push(ml_grid_search(&grid, &obs, Refine::Off).d);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mt, me) = (mean(&truth), mean(&est));
    let cov: f64 = truth.iter().zip(&est).map(|(a, b)| (a - mt) * (b - me)).sum();
    let vt: f64 = truth.iter().map(|a| (a - mt).powi(2)).sum();
    let ve: f64 = est.iter().map(|b| (b - me).powi(2)).sum();
    let r = cov / (vt * ve).sqrt();
    // Independence: sample correlation within 3 standard deviations of zero.
    assert!(r.abs() < 3.0 / (n as f64).sqrt(), "r = {r}");
}

#[test]
fn mse_sits_between_the_bounds() {
    let cfg = k21();
    let prior = PriorBox::known_angle(0.0, 5.0, 0.0).unwrap();
    let mc = MonteCarloConfig {
        num_trials: 400,
        seed: 1,
        ..Default::default()
    };
    let q = QuadratureSpec::default();
    let snrs = [db(-20.0), db(0.0), db(10.0), db(30.0)];
    let mse = monte_carlo_mse_sweep(&cfg, &snrs, &prior, &mc).unwrap();
    let zzb = zzb_distance_known_aoa_sweep(&cfg, &snrs, &prior, &q).unwrap();
    for (m, z) in mse.iter().zip(&zzb) {
        assert!(m.mse_d >= z.value - 2.0 * m.stderr_d, "mse {} zzb {}", m.mse_d, z.value);
        assert_eq!(m.trials, 400);
    }
    let top = snrs[3];
    let crb = crb_global(&cfg, top, &prior, Parameter::Distance, &q).unwrap();
    let ratio = mse[3].mse_d / crb;
    assert!((0.5..=3.0).contains(&ratio), "{ratio}");
    assert!(mse[3].grid_floor_d > 0.0);
    assert_eq!(mse[3].mse_theta, 0.0);
}

#[test]
fn single_point_matches_sweep_and_grid_reuse() {
    let cfg = k21();
    let prior = PriorBox::from_degrees(1.0, 4.0, -10.0, 10.0).unwrap();
    let mc = MonteCarloConfig {
        num_trials: 50,
        search_grid_d: 64,
        search_grid_theta: Some(32),
        seed: 8,
        ..Default::default()
    };
    let a = monte_carlo_mse(&cfg, db(10.0), &prior, &mc).unwrap();
    let b = monte_carlo_mse_sweep(&cfg, &[db(0.0), db(10.0)], &prior, &mc).unwrap();
    let grid = SearchGrid::new(&cfg, &prior, &mc).unwrap();
    let c = monte_carlo_mse_on_grid(&grid, db(10.0), &mc);
    assert_eq!(a, b[1]);
    assert_eq!(a, c);
}

#[test]
fn mse_does_not_depend_on_worker_count() {
    let cfg = k21();
    let prior = PriorBox::known_angle(0.5, 5.0, 0.0).unwrap();
    let mc = MonteCarloConfig {
        num_trials: 200,
        seed: 42,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_mse(&cfg, db(3.0), &prior, &mc).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.mse_d.to_bits(), b.mse_d.to_bits());
    assert_eq!(a.stderr_d.to_bits(), b.stderr_d.to_bits());
}

#[test]
fn config_validation() {
    let bad = [
        MonteCarloConfig {
            num_trials: 1,
            ..Default::default()
        },
        MonteCarloConfig {
            search_grid_d: 2,
            ..Default::default()
        },
        MonteCarloConfig {
            search_grid_theta: Some(0),
            ..Default::default()
        },
    ];
    for mc in bad {
        assert!(mc.validate().is_err());
    }
    let mc: MonteCarloConfig = serde_json::from_str(r#"{"num_trials": 10, "refine": "off"}"#).unwrap();
    assert_eq!(mc.refine, Refine::Off);
    assert_eq!(mc.search_grid_d, 512);
    assert!(serde_json::from_str::<MonteCarloConfig>(r#"{"trials": 10}"#).is_err());
}
