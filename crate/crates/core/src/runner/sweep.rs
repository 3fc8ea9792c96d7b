//! Evaluation of every requested engine along the SNR sweep.

use std::time::Instant;

use crate::crb::{crb_global, Parameter};
use crate::error::{Error, Result};
use crate::mle::{monte_carlo_mse_on_grid, MseEstimate, Refine, SearchGrid};
use crate::model::SnrSpec;
use crate::zzb::{
    zzb_aoa_joint_sweep, zzb_distance_joint_sweep, zzb_distance_known_aoa_sweep, zzb_highsnr_asymptote,
    ZzbResult,
};

use super::config::{Engine, PriorCase, ScenarioConfig};
use super::curve::{
    BoundCurve, PointFailure, SERIES_ASYMPTOTE, SERIES_CRB_GLOBAL, SERIES_MLE_MSE, SERIES_MLE_STDERR,
    SERIES_ZZB,
};

/// Parameters that get a curve for this prior.
fn parameters(cfg: &ScenarioConfig, case: &PriorCase) -> Vec<Parameter> {
    let has = |e| cfg.engines.contains(&e);
    let any_zzb = cfg.engines.iter().any(Engine::is_zzb);
    let mut out = Vec::new();
    if has(Engine::ZzbKnownAoa) || has(Engine::ZzbJointDistance) || !any_zzb {
        out.push(Parameter::Distance);
    }
    if !case.prior.is_known_angle() && (has(Engine::ZzbJointAoa) || !any_zzb) {
        out.push(Parameter::Aoa);
    }
    out
}

fn label(parameter: Parameter, case: &PriorCase) -> String {
    match &case.label {
        Some(l) => format!("{parameter}_{l}"),
        None => parameter.to_string(),
    }
}

struct Recorder<'a> {
    curve: &'a mut BoundCurve,
}

impl Recorder<'_> {
    fn fail_all(&mut self, series: &str, e: &Error) {
        let snrs = self.curve.snr_db.clone();
        for s in snrs {
            self.fail(series, s, e.to_string());
        }
    }

    fn fail(&mut self, series: &str, snr_db: f64, message: String) {
        self.curve.metadata.failures.push(PointFailure {
            series: series.to_string(),
            snr_db,
            message,
        });
    }
}

fn zzb_series(
    cfg: &ScenarioConfig,
    case: &PriorCase,
    parameter: Parameter,
    snrs: &[SnrSpec],
) -> Option<Result<Vec<ZzbResult>>> {
    let q = &cfg.doc.quadrature;
    let has = |e| cfg.engines.contains(&e);
    match parameter {
        Parameter::Distance if has(Engine::ZzbKnownAoa) => {
            Some(zzb_distance_known_aoa_sweep(&cfg.array, snrs, &case.prior, q))
        }
        Parameter::Distance if has(Engine::ZzbJointDistance) => {
            Some(zzb_distance_joint_sweep(&cfg.array, snrs, &case.prior, q))
        }
        Parameter::Aoa if has(Engine::ZzbJointAoa) => {
            Some(zzb_aoa_joint_sweep(&cfg.array, snrs, &case.prior, q))
        }
        _ => None,
    }
}

/// ML results per sweep point; `None` past the runtime budget.
fn run_mle(cfg: &ScenarioConfig, case: &PriorCase, snrs: &[SnrSpec]) -> Result<Vec<Option<MseEstimate>>> {
    let mc = &cfg.doc.monte_carlo;
    let grid = SearchGrid::new(&cfg.array, &case.prior, mc)?;
    let start = Instant::now();
    let mut out = Vec::with_capacity(snrs.len());
    for &s in snrs {
        let over = cfg
            .doc
            .mle_budget_s
            .is_some_and(|b| start.elapsed().as_secs_f64() > b);
        out.push(if over { None } else { Some(monte_carlo_mse_on_grid(&grid, s, mc)) });
    }
    Ok(out)
}

fn build_curve(
    cfg: &ScenarioConfig,
    case: &PriorCase,
    parameter: Parameter,
    snrs: &[SnrSpec],
    mle: Option<&Result<Vec<Option<MseEstimate>>>>,
    hash: &str,
) -> Result<BoundCurve> {
    let mut curve = BoundCurve::new(label(parameter, case), parameter, cfg.snr_db.clone());
    curve.metadata.config_hash = hash.to_string();
    curve.metadata.engine_version = format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    curve.metadata.engines = cfg.engines.iter().map(|e| e.name().to_string()).collect();
    let n = snrs.len();

    if let Some(res) = zzb_series(cfg, case, parameter, snrs) {
        match res {
            Ok(r) => {
                curve.metadata.zzb_converged = r.iter().map(|z| z.converged).collect();
                for (z, db) in r.iter().zip(&cfg.snr_db) {
                    if !z.converged {
                        curve.metadata.warnings.push(format!(
                            "zzb at {db} dB: relative change {:.3} against the half grid exceeds {}",
                            z.relative_change, cfg.doc.quadrature.convergence_target
                        ));
                    }
                }
                curve.push_series(SERIES_ZZB, r.iter().map(|z| Some(z.value)).collect())?;
            }
            Err(e) => {
                Recorder { curve: &mut curve }.fail_all(SERIES_ZZB, &e);
                curve.push_series(SERIES_ZZB, vec![None; n])?;
            }
        }
    }

    let mut crb_values = vec![None; n];
    if cfg.engines.contains(&Engine::CrbGlobal) {
        // The global CRB scales exactly as 1/SNR; average once at unit SNR.
        let unit = SnrSpec::from_linear(1.0)?;
        match crb_global(&cfg.array, unit, &case.prior, parameter, &cfg.doc.quadrature) {
            Ok(c) => {
                crb_values = snrs.iter().map(|s| Some(c / s.linear())).collect();
            }
            Err(e) => Recorder { curve: &mut curve }.fail_all(SERIES_CRB_GLOBAL, &e),
        }
        curve.push_series(SERIES_CRB_GLOBAL, crb_values.clone())?;
    }

    if cfg.engines.contains(&Engine::Asymptotes) {
        let defined = parameter == Parameter::Distance
            && case.prior.is_known_angle()
            && case.prior.theta_min() == 0.0;
        if defined {
            let mut vals = Vec::with_capacity(n);
            for (s, db) in snrs.iter().zip(&cfg.snr_db) {
                match zzb_highsnr_asymptote(&cfg.array, *s, &case.prior) {
                    Ok(v) => vals.push(Some(v)),
                    Err(e) => {
                        Recorder { curve: &mut curve }.fail(SERIES_ASYMPTOTE, *db, e.to_string());
                        vals.push(None);
                    }
                }
            }
            curve.push_series(SERIES_ASYMPTOTE, vals)?;
        } else {
            curve.metadata.warnings.push(
                "asymptote is defined for the distance bound with a known broadside angle only; series omitted"
                    .into(),
            );
        }
    }

    if let Some(res) = mle {
        match res {
            Ok(est) => {
                let pick = |m: &MseEstimate| match parameter {
                    Parameter::Distance => (m.mse_d, m.stderr_d, m.grid_floor_d),
                    Parameter::Aoa => (m.mse_theta, m.stderr_theta, m.grid_floor_theta),
                };
                let mut mse = Vec::with_capacity(n);
                let mut se = Vec::with_capacity(n);
                for (e, db) in est.iter().zip(&cfg.snr_db) {
                    match e {
                        Some(m) => {
                            let (a, b, _) = pick(m);
                            mse.push(Some(a));
                            se.push(Some(b));
                        }
                        None => {
                            Recorder { curve: &mut curve }.fail(
                                SERIES_MLE_MSE,
                                *db,
                                "runtime budget exceeded; point not simulated".into(),
                            );
                            mse.push(None);
                            se.push(None);
                        }
                    }
                }
                let floor = est.iter().flatten().map(|m| pick(m).2).fold(0.0, f64::max);
                let crb_min = crb_values.iter().flatten().copied().fold(f64::INFINITY, f64::min);
                if cfg.doc.monte_carlo.refine == Refine::Off && crb_min < floor {
                    curve.metadata.warnings.push(format!(
                        "global CRB {crb_min:.3e} {} falls below the search-grid floor {floor:.3e}; \
                         the ML curve is resolution-limited at high SNR",
                        parameter.units()
                    ));
                }
                curve.push_series(SERIES_MLE_MSE, mse)?;
                curve.push_series(SERIES_MLE_STDERR, se)?;
            }
            Err(e) => {
                Recorder { curve: &mut curve }.fail_all(SERIES_MLE_MSE, e);
                curve.push_series(SERIES_MLE_MSE, vec![None; n])?;
                curve.push_series(SERIES_MLE_STDERR, vec![None; n])?;
            }
        }
    }
    Ok(curve)
}

/// One curve per (prior case, parameter), in declaration order. Engine
/// failures are recorded in the curve metadata and leave missing points.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<Vec<BoundCurve>> {
    let snrs = cfg.snrs();
    let hash = cfg.hash();
    let mut curves = Vec::new();
    for case in &cfg.priors {
        let mle = cfg
            .engines
            .contains(&Engine::Mle)
            .then(|| run_mle(cfg, case, &snrs));
        for parameter in parameters(cfg, case) {
            curves.push(build_curve(cfg, case, parameter, &snrs, mle.as_ref(), &hash)?);
        }
    }
    Ok(curves)
}
