//! Scenario files, SNR sweeps and curve output.

mod config;
mod curve;
mod sweep;

pub use config::{
    load_config, parse_config, sweep_points, ArraySpec, Engine, PriorCase, PriorSpec, ScenarioConfig,
    ScenarioDoc, SweepSpec,
};
pub use curve::{
    detect_threshold, emit, fmt_g12, render, round12, BoundCurve, CurveMetadata, Format, PointFailure,
    Series, SERIES_ASYMPTOTE, SERIES_CRB_GLOBAL, SERIES_MLE_MSE, SERIES_MLE_STDERR, SERIES_ZZB,
};
pub use sweep::run_sweep;
