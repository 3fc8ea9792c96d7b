//! C ABI over `nearfield_zzb`.
//!
//! Every fallible call returns an [`NfzStatus`]; on failure the message is
//! kept per thread and read with [`nfz_last_error`]. Objects cross the
//! boundary as opaque handles that the caller frees with the matching
//! `*_free` function. Angles are radians and SNRs linear per antenna.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nearfield_zzb::mle::{self, GridSpacing, MonteCarloConfig, Objective, Refine};
use nearfield_zzb::runner::{self, BoundCurve, Format, ScenarioConfig};
use nearfield_zzb::{
    ArrayConfig, DeltaSearch, Displacement, Error, HGrid, Parameter, PolarPosition, PriorBox,
    QuadratureSpec, SnrSpec,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Singular = 3,
    Domain = 4,
    Conditioning = 5,
    NonConvergence = 6,
    Config = 7,
    MissingSeries = 8,
    Io = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzParameter {
    Distance = 0,
    Aoa = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzZzbKind {
    /// Distance with the angle known (zero-width angle prior).
    KnownAoa = 0,
    JointDistance = 1,
    JointAoa = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzHGrid {
    Geometric = 0,
    Uniform = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzDeltaSearch {
    Symmetric = 0,
    NonNegative = 1,
    ZeroOnly = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzRefine {
    Off = 0,
    Parabolic = 1,
    Golden = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzObjective {
    Noncoherent = 0,
    Coherent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzGridSpacing {
    Information = 0,
    Uniform = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfzFormat {
    Csv = 0,
    Json = 1,
}

/// Quadrature settings; start from `nfz_quadrature_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NfzQuadrature {
    pub n_h: usize,
    pub n_d: usize,
    pub n_theta: usize,
    pub n_dtheta: usize,
    pub convergence_target: f64,
    pub h_grid: NfzHGrid,
    pub h_min_rel: f64,
    pub delta_search: NfzDeltaSearch,
    pub candidate_refinement: u32,
    pub max_doublings: u32,
}

/// Monte Carlo settings; `search_grid_theta == 0` picks the default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NfzMonteCarlo {
    pub num_trials: usize,
    pub seed: u64,
    pub search_grid_d: usize,
    pub search_grid_theta: usize,
    pub refine: NfzRefine,
    pub objective: NfzObjective,
    pub grid_spacing: NfzGridSpacing,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NfzMse {
    pub mse_d: f64,
    pub mse_theta: f64,
    pub stderr_d: f64,
    pub stderr_theta: f64,
    pub grid_floor_d: f64,
    pub grid_floor_theta: f64,
    pub trials: usize,
    pub ties: usize,
}

pub struct NfzArray(ArrayConfig);

pub struct NfzPrior(PriorBox);

pub struct NfzScenario(ScenarioConfig);

pub struct NfzCurves(Vec<BoundCurve>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Range(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &Error) -> NfzStatus {
    match e {
        Error::Invalid { .. } => NfzStatus::InvalidArgument,
        Error::Singular(_) => NfzStatus::Singular,
        Error::Domain(_) => NfzStatus::Domain,
        Error::Conditioning(_) => NfzStatus::Conditioning,
        Error::NonConvergence(_) => NfzStatus::NonConvergence,
        Error::Config(_) | Error::Json(_) => NfzStatus::Config,
        Error::MissingSeries(_) => NfzStatus::MissingSeries,
        Error::Io { .. } => NfzStatus::Io,
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> NfzStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NfzStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            NfzStatus::NullPointer
        }
        Ok(Err(Failure::Range(msg))) => {
            set_last_error(msg);
            NfzStatus::OutOfRange
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            NfzStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(v);
    Ok(())
}

fn snr(linear: f64) -> Result<SnrSpec, Failure> {
    Ok(SnrSpec::from_linear(linear)?)
}

fn parameter(p: NfzParameter) -> Parameter {
    match p {
        NfzParameter::Distance => Parameter::Distance,
        NfzParameter::Aoa => Parameter::Aoa,
    }
}

impl From<&QuadratureSpec> for NfzQuadrature {
    fn from(q: &QuadratureSpec) -> Self {
        Self {
            n_h: q.n_h,
            n_d: q.n_d,
            n_theta: q.n_theta,
            n_dtheta: q.n_dtheta,
            convergence_target: q.convergence_target,
            h_grid: match q.h_grid {
                HGrid::Geometric => NfzHGrid::Geometric,
                HGrid::Uniform => NfzHGrid::Uniform,
            },
            h_min_rel: q.h_min_rel,
            delta_search: match q.delta_search {
                DeltaSearch::Symmetric => NfzDeltaSearch::Symmetric,
                DeltaSearch::NonNegative => NfzDeltaSearch::NonNegative,
                DeltaSearch::ZeroOnly => NfzDeltaSearch::ZeroOnly,
            },
            candidate_refinement: q.candidate_refinement,
            max_doublings: q.max_doublings,
        }
    }
}

impl From<&NfzQuadrature> for QuadratureSpec {
    fn from(q: &NfzQuadrature) -> Self {
        Self {
            n_h: q.n_h,
            n_d: q.n_d,
            n_theta: q.n_theta,
            n_dtheta: q.n_dtheta,
            convergence_target: q.convergence_target,
            h_grid: match q.h_grid {
                NfzHGrid::Geometric => HGrid::Geometric,
                NfzHGrid::Uniform => HGrid::Uniform,
            },
            h_min_rel: q.h_min_rel,
            delta_search: match q.delta_search {
                NfzDeltaSearch::Symmetric => DeltaSearch::Symmetric,
                NfzDeltaSearch::NonNegative => DeltaSearch::NonNegative,
                NfzDeltaSearch::ZeroOnly => DeltaSearch::ZeroOnly,
            },
            candidate_refinement: q.candidate_refinement,
            max_doublings: q.max_doublings,
        }
    }
}

unsafe fn quadrature(q: *const NfzQuadrature) -> QuadratureSpec {
    q.as_ref().map(QuadratureSpec::from).unwrap_or_default()
}

impl From<&MonteCarloConfig> for NfzMonteCarlo {
    fn from(m: &MonteCarloConfig) -> Self {
        Self {
            num_trials: m.num_trials,
            seed: m.seed,
            search_grid_d: m.search_grid_d,
            search_grid_theta: m.search_grid_theta.unwrap_or(0),
            refine: match m.refine {
                Refine::Off => NfzRefine::Off,
                Refine::Parabolic => NfzRefine::Parabolic,
                Refine::Golden => NfzRefine::Golden,
            },
            objective: match m.objective {
                Objective::Noncoherent => NfzObjective::Noncoherent,
                Objective::Coherent => NfzObjective::Coherent,
            },
            grid_spacing: match m.grid_spacing {
                GridSpacing::Information => NfzGridSpacing::Information,
                GridSpacing::Uniform => NfzGridSpacing::Uniform,
            },
        }
    }
}

impl From<&NfzMonteCarlo> for MonteCarloConfig {
    fn from(m: &NfzMonteCarlo) -> Self {
        Self {
            num_trials: m.num_trials,
            seed: m.seed,
            search_grid_d: m.search_grid_d,
            search_grid_theta: (m.search_grid_theta > 0).then_some(m.search_grid_theta),
            refine: match m.refine {
                NfzRefine::Off => Refine::Off,
                NfzRefine::Parabolic => Refine::Parabolic,
                NfzRefine::Golden => Refine::Golden,
            },
            objective: match m.objective {
                NfzObjective::Noncoherent => Objective::Noncoherent,
                NfzObjective::Coherent => Objective::Coherent,
            },
            grid_spacing: match m.grid_spacing {
                NfzGridSpacing::Information => GridSpacing::Information,
                NfzGridSpacing::Uniform => GridSpacing::Uniform,
            },
        }
    }
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn nfz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nfz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn nfz_quadrature_default() -> NfzQuadrature {
    NfzQuadrature::from(&QuadratureSpec::default())
}

#[no_mangle]
pub extern "C" fn nfz_monte_carlo_default() -> NfzMonteCarlo {
    NfzMonteCarlo::from(&MonteCarloConfig::default())
}

#[no_mangle]
pub unsafe extern "C" fn nfz_array_new(
    num_antennas: usize,
    spacing_m: f64,
    carrier_freq_hz: f64,
    out: *mut *mut NfzArray,
) -> NfzStatus {
    guard(|| {
        let cfg = ArrayConfig::new(num_antennas, spacing_m, carrier_freq_hz)?;
        put(out, Box::into_raw(Box::new(NfzArray(cfg))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_array_with_aperture(
    num_antennas: usize,
    aperture_m: f64,
    carrier_freq_hz: f64,
    out: *mut *mut NfzArray,
) -> NfzStatus {
    guard(|| {
        let cfg = ArrayConfig::with_aperture(num_antennas, aperture_m, carrier_freq_hz)?;
        put(out, Box::into_raw(Box::new(NfzArray(cfg))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_array_free(array: *mut NfzArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

/// Uniform prior box; equal angle limits give a known angle.
#[no_mangle]
pub unsafe extern "C" fn nfz_prior_new(
    d_min: f64,
    d_max: f64,
    theta_min: f64,
    theta_max: f64,
    out: *mut *mut NfzPrior,
) -> NfzStatus {
    guard(|| {
        let prior = PriorBox::new(d_min, d_max, theta_min, theta_max)?;
        put(out, Box::into_raw(Box::new(NfzPrior(prior))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_prior_free(prior: *mut NfzPrior) {
    if !prior.is_null() {
        drop(Box::from_raw(prior));
    }
}

#[no_mangle]
pub extern "C" fn nfz_q_function(x: f64) -> f64 {
    nearfield_zzb::q_function(x)
}

#[no_mangle]
pub unsafe extern "C" fn nfz_correlation(
    array: *const NfzArray,
    d: f64,
    theta: f64,
    delta_d: f64,
    delta_theta: f64,
    out: *mut f64,
) -> NfzStatus {
    guard(|| {
        let cfg = &get(array, "array")?.0;
        let p = PolarPosition::new(d, theta)?;
        let v = nearfield_zzb::correlation(cfg, p, Displacement::new(delta_d, delta_theta))?;
        put(out, v, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_pmin(
    array: *const NfzArray,
    snr_linear: f64,
    d: f64,
    theta: f64,
    delta_d: f64,
    delta_theta: f64,
    out: *mut f64,
) -> NfzStatus {
    guard(|| {
        let cfg = &get(array, "array")?.0;
        let p = PolarPosition::new(d, theta)?;
        let v = nearfield_zzb::pmin(cfg, snr(snr_linear)?, p, Displacement::new(delta_d, delta_theta))?;
        put(out, v, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_crb_local(
    array: *const NfzArray,
    parameter: NfzParameter,
    snr_linear: f64,
    d: f64,
    theta: f64,
    out: *mut f64,
) -> NfzStatus {
    guard(|| {
        let cfg = &get(array, "array")?.0;
        let p = PolarPosition::new(d, theta)?;
        let s = snr(snr_linear)?;
        let v = match parameter {
            NfzParameter::Distance => nearfield_zzb::crb_distance_local(cfg, s, p)?,
            NfzParameter::Aoa => nearfield_zzb::crb_aoa_local(cfg, s, p)?,
        };
        put(out, v, "out")
    })
}

/// Prior-averaged CRB. `quad` may be NULL for the defaults.
#[no_mangle]
pub unsafe extern "C" fn nfz_crb_global(
    array: *const NfzArray,
    parameter: NfzParameter,
    snr_linear: f64,
    prior: *const NfzPrior,
    quad: *const NfzQuadrature,
    out: *mut f64,
) -> NfzStatus {
    guard(|| {
        let cfg = &get(array, "array")?.0;
        let prior = &get(prior, "prior")?.0;
        let q = quadrature(quad);
        let v = nearfield_zzb::crb_global(cfg, snr(snr_linear)?, prior, self::parameter(parameter), &q)?;
        put(out, v, "out")
    })
}

/// ZZB at `n` SNRs. Writes `n` values to `values` and, unless NULL, `n`
/// convergence flags to `converged`.
#[no_mangle]
pub unsafe extern "C" fn nfz_zzb_sweep(
    array: *const NfzArray,
    kind: NfzZzbKind,
    prior: *const NfzPrior,
    snr_linear: *const f64,
    n: usize,
    quad: *const NfzQuadrature,
    values: *mut f64,
    converged: *mut bool,
) -> NfzStatus {
    guard(|| {
        let cfg = &get(array, "array")?.0;
        let prior = &get(prior, "prior")?.0;
        if n == 0 {
            return Ok(());
        }
        if snr_linear.is_null() {
            return Err(Failure::Null("snr_linear"));
        }
        if values.is_null() {
            return Err(Failure::Null("values"));
        }
        let snrs = std::slice::from_raw_parts(snr_linear, n)
            .iter()
            .map(|&s| snr(s))
            .collect::<Result<Vec<_>, _>>()?;
        let q = quadrature(quad);
        let r = match kind {
            NfzZzbKind::KnownAoa => nearfield_zzb::zzb_distance_known_aoa_sweep(cfg, &snrs, prior, &q)?,
            NfzZzbKind::JointDistance => nearfield_zzb::zzb_distance_joint_sweep(cfg, &snrs, prior, &q)?,
            NfzZzbKind::JointAoa => nearfield_zzb::zzb_aoa_joint_sweep(cfg, &snrs, prior, &q)?,
        };
        let out = std::slice::from_raw_parts_mut(values, n);
        for (o, z) in out.iter_mut().zip(&r) {
            *o = z.value;
        }
        if !converged.is_null() {
            let flags = std::slice::from_raw_parts_mut(converged, n);
            for (o, z) in flags.iter_mut().zip(&r) {
                *o = z.converged;
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_zzb_highsnr_asymptote(
    array: *const NfzArray,
    snr_linear: f64,
    prior: *const NfzPrior,
    out: *mut f64,
) -> NfzStatus {
    guard(|| {
        let cfg = &get(array, "array")?.0;
        let prior = &get(prior, "prior")?.0;
        let v = nearfield_zzb::zzb_highsnr_asymptote(cfg, snr(snr_linear)?, prior)?;
        put(out, v, "out")
    })
}

/// ML mean-squared error with truths drawn over the prior. `mc` may be NULL
/// for the defaults.
#[no_mangle]
pub unsafe extern "C" fn nfz_mle_mse(
    array: *const NfzArray,
    snr_linear: f64,
    prior: *const NfzPrior,
    mc: *const NfzMonteCarlo,
    out: *mut NfzMse,
) -> NfzStatus {
    guard(|| {
        let cfg = &get(array, "array")?.0;
        let prior = &get(prior, "prior")?.0;
        let mc = mc.as_ref().map(MonteCarloConfig::from).unwrap_or_default();
        let m = mle::monte_carlo_mse(cfg, snr(snr_linear)?, prior, &mc)?;
        put(
            out,
            NfzMse {
                mse_d: m.mse_d,
                mse_theta: m.mse_theta,
                stderr_d: m.stderr_d,
                stderr_theta: m.stderr_theta,
                grid_floor_d: m.grid_floor_d,
                grid_floor_theta: m.grid_floor_theta,
                trials: m.trials,
                ties: m.ties,
            },
            "out",
        )
    })
}

/// Parses a scenario document (UTF-8 JSON).
#[no_mangle]
pub unsafe extern "C" fn nfz_scenario_from_json(json: *const c_char, out: *mut *mut NfzScenario) -> NfzStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure::Core(Error::Config(format!("document is not UTF-8: {e}"))))?;
        let cfg = runner::parse_config(text)?;
        put(out, Box::into_raw(Box::new(NfzScenario(cfg))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_scenario_free(scenario: *mut NfzScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs every engine of the scenario. Per-point engine failures do not fail
/// the call; they are listed in each curve's metadata.
#[no_mangle]
pub unsafe extern "C" fn nfz_scenario_run(scenario: *const NfzScenario, out: *mut *mut NfzCurves) -> NfzStatus {
    guard(|| {
        let cfg = &get(scenario, "scenario")?.0;
        let curves = runner::run_sweep(cfg)?;
        put(out, Box::into_raw(Box::new(NfzCurves(curves))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_curves_free(curves: *mut NfzCurves) {
    if !curves.is_null() {
        drop(Box::from_raw(curves));
    }
}

/// Number of curves; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn nfz_curves_len(curves: *const NfzCurves) -> usize {
    curves.as_ref().map_or(0, |c| c.0.len())
}

/// True when every ZZB value of every curve met its convergence target.
#[no_mangle]
pub unsafe extern "C" fn nfz_curves_converged(curves: *const NfzCurves, out: *mut bool) -> NfzStatus {
    guard(|| {
        let c = &get(curves, "curves")?.0;
        put(out, c.iter().all(BoundCurve::is_converged), "out")
    })
}

/// Renders all curves; free the string with `nfz_string_free`.
#[no_mangle]
pub unsafe extern "C" fn nfz_curves_render(
    curves: *const NfzCurves,
    format: NfzFormat,
    out: *mut *mut c_char,
) -> NfzStatus {
    guard(|| {
        let c = &get(curves, "curves")?.0;
        let f = match format {
            NfzFormat::Csv => Format::Csv,
            NfzFormat::Json => Format::Json,
        };
        let text = CString::new(runner::render(c, f)).expect("rendered text has no nul");
        put(out, text.into_raw(), "out")
    })
}

/// SNR threshold of curve `index` in dB; `found` is false when the curve
/// never settles within `ratio` of the global CRB.
#[no_mangle]
pub unsafe extern "C" fn nfz_curves_threshold(
    curves: *const NfzCurves,
    index: usize,
    ratio: f64,
    threshold_db: *mut f64,
    found: *mut bool,
) -> NfzStatus {
    guard(|| {
        let c = &get(curves, "curves")?.0;
        let curve = c
            .get(index)
            .ok_or_else(|| Failure::Range(format!("curve index {index} out of range (have {})", c.len())))?;
        let t = runner::detect_threshold(curve, ratio)?;
        put(found, t.is_some(), "found")?;
        put(threshold_db, t.unwrap_or(f64::NAN), "threshold_db")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
