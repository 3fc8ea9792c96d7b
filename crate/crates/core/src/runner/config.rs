//! Scenario documents: a single JSON object, angles in degrees.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crb::PriorBox;
use crate::error::{Error, Result};
use crate::mle::MonteCarloConfig;
use crate::model::{ArrayConfig, SnrSpec, SPEED_OF_LIGHT};
use crate::zzb::QuadratureSpec;

/// Bound or simulation engine evaluated along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    ZzbKnownAoa,
    ZzbJointDistance,
    ZzbJointAoa,
    CrbGlobal,
    Asymptotes,
    Mle,
}

impl Engine {
    pub const ALL: [Engine; 6] = [
        Engine::ZzbKnownAoa,
        Engine::ZzbJointDistance,
        Engine::ZzbJointAoa,
        Engine::CrbGlobal,
        Engine::Asymptotes,
        Engine::Mle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::ZzbKnownAoa => "zzb_known_aoa",
            Engine::ZzbJointDistance => "zzb_joint_distance",
            Engine::ZzbJointAoa => "zzb_joint_aoa",
            Engine::CrbGlobal => "crb_global",
            Engine::Asymptotes => "asymptotes",
            Engine::Mle => "mle",
        }
    }

    pub fn is_zzb(&self) -> bool {
        matches!(self, Engine::ZzbKnownAoa | Engine::ZzbJointDistance | Engine::ZzbJointAoa)
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Engine::ALL.iter().map(|e| e.name()).collect();
                Error::Config(format!("unknown engine `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Array section as written in the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub num_antennas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_wavelengths: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_m: Option<f64>,
    pub carrier_freq_hz: f64,
}

/// Prior section. The angle is given either as a single known value, as an
/// interval, or as a list of symmetric spans `[-s, s]` (one curve per span).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub d_min_m: f64,
    pub d_max_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_min_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_spans_deg: Option<Vec<f64>>,
}

/// Per-antenna SNR sweep in dB, both ends included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

/// The document itself. Kept as parsed so it can be hashed and echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub array: ArraySpec,
    pub prior: PriorSpec,
    pub snr: SweepSpec,
    pub engines: Vec<Engine>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    /// Wall-clock budget for the ML simulation of one curve; points past it
    /// are emitted as missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mle_budget_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// One prior of the scenario with the label used for its curves.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorCase {
    pub label: Option<String>,
    pub prior: PriorBox,
    /// Half-width in degrees when the case came from a span list.
    pub span_deg: Option<f64>,
}

/// Validated scenario with derived quantities materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub doc: ScenarioDoc,
    pub array: ArrayConfig,
    pub priors: Vec<PriorCase>,
    pub snr_db: Vec<f64>,
    pub engines: Vec<Engine>,
}

/// Parses and validates a scenario from JSON text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("at `{path}`: {}", e.into_inner()))
    })?;
    ScenarioConfig::from_doc(doc)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Invalid { field, message } => {
            Error::Config(format!("{field}: {message}"))
        }
        other => other,
    }
}

/// Sweep points `start + i * step` up to and including `stop`.
pub fn sweep_points(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite()) {
        return Err(Error::Config("snr: start_db and stop_db must be finite".into()));
    }
    if start >= stop {
        return Err(Error::Config(format!(
            "snr: start_db ({start}) must be below stop_db ({stop})"
        )));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("snr: step_db ({step}) must be > 0")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(Error::Config(format!("snr: {n} sweep points; use a coarser step_db")));
    }
    // Rounded so that decimal steps print as written.
    Ok((0..n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

impl ScenarioConfig {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Self> {
        let array = build_array(&doc.array)?;
        let priors = build_priors(&doc.prior)?;
        let snr_db = sweep_points(doc.snr.start_db, doc.snr.stop_db, doc.snr.step_db)?;
        doc.quadrature.validate().map_err(config_err)?;
        doc.monte_carlo.validate().map_err(config_err)?;
        if let Some(b) = doc.mle_budget_s {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::Config(format!("mle_budget_s: {b} must be > 0")));
            }
        }
        let engines = check_engines(&doc.engines, &priors)?;
        Ok(Self {
            doc,
            array,
            priors,
            snr_db,
            engines,
        })
    }

    pub fn snrs(&self) -> Vec<SnrSpec> {
        self.snr_db
            .iter()
            .map(|&db| SnrSpec::from_db(db).expect("finite sweep point"))
            .collect()
    }

    /// SHA-256 of the canonical JSON form of the document, output path excluded.
    pub fn hash(&self) -> String {
        let doc = ScenarioDoc {
            output: None,
            ..self.doc.clone()
        };
        let canonical = serde_json::to_vec(&doc).expect("document serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Replaces the sweep by explicit points (a single point is allowed here).
    pub fn set_snr_points(&mut self, points: Vec<f64>) -> Result<()> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("snr: need at least one finite point".into()));
        }
        let step = if points.len() > 1 { points[1] - points[0] } else { 1.0 };
        self.doc.snr = SweepSpec {
            start_db: points[0],
            stop_db: points[points.len() - 1],
            step_db: step,
        };
        self.snr_db = points;
        Ok(())
    }

    pub fn with_engines(&self, engines: Vec<Engine>) -> Result<Self> {
        let mut doc = self.doc.clone();
        doc.engines = engines;
        Self::from_doc(doc)
    }
}

fn build_array(a: &ArraySpec) -> Result<ArrayConfig> {
    let given = [a.spacing_m.is_some(), a.spacing_wavelengths.is_some(), a.aperture_m.is_some()]
        .iter()
        .filter(|x| **x)
        .count();
    if given != 1 {
        return Err(Error::Config(
            "array: give exactly one of spacing_m, spacing_wavelengths or aperture_m; \
             the other follows from aperture = (K - 1) * spacing"
                .into(),
        ));
    }
    if !(a.carrier_freq_hz.is_finite() && a.carrier_freq_hz > 0.0) {
        return Err(Error::Config(format!(
            "array.carrier_freq_hz: {} must be > 0",
            a.carrier_freq_hz
        )));
    }
    let cfg = if let Some(ap) = a.aperture_m {
        ArrayConfig::with_aperture(a.num_antennas, ap, a.carrier_freq_hz)
    } else if let Some(w) = a.spacing_wavelengths {
        ArrayConfig::new(a.num_antennas, w * SPEED_OF_LIGHT / a.carrier_freq_hz, a.carrier_freq_hz)
    } else {
        ArrayConfig::new(a.num_antennas, a.spacing_m.unwrap_or_default(), a.carrier_freq_hz)
    };
    cfg.map_err(|e| Error::Config(format!("array: {e}")))
}

fn build_priors(p: &PriorSpec) -> Result<Vec<PriorCase>> {
    let forms = [
        p.theta_deg.is_some(),
        p.theta_min_deg.is_some() || p.theta_max_deg.is_some(),
        p.theta_spans_deg.is_some(),
    ]
    .iter()
    .filter(|x| **x)
    .count();
    if forms != 1 {
        return Err(Error::Config(
            "prior: give exactly one of theta_deg, theta_min_deg/theta_max_deg or theta_spans_deg".into(),
        ));
    }
    let boxed = |lo: f64, hi: f64| {
        PriorBox::from_degrees(p.d_min_m, p.d_max_m, lo, hi)
            .map_err(|e| Error::Config(format!("prior: {e}")))
    };
    if let Some(t) = p.theta_deg {
        return Ok(vec![PriorCase {
            label: None,
            prior: boxed(t, t)?,
            span_deg: None,
        }]);
    }
    if let Some(spans) = &p.theta_spans_deg {
        if spans.is_empty() {
            return Err(Error::Config("prior.theta_spans_deg: empty list".into()));
        }
        let mut out = Vec::with_capacity(spans.len());
        for &s in spans {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::Config(format!(
                    "prior.theta_spans_deg: half-width {s} must be >= 0"
                )));
            }
            let label = format!("span{}", fmt_span(s));
            if out.iter().any(|c: &PriorCase| c.label.as_deref() == Some(label.as_str())) {
                return Err(Error::Config(format!("prior.theta_spans_deg: duplicate span {s}")));
            }
            out.push(PriorCase {
                label: Some(label),
                prior: boxed(-s, s)?,
                span_deg: Some(s),
            });
        }
        return Ok(out);
    }
    match (p.theta_min_deg, p.theta_max_deg) {
        (Some(lo), Some(hi)) => Ok(vec![PriorCase {
            label: None,
            prior: boxed(lo, hi)?,
            span_deg: None,
        }]),
        _ => Err(Error::Config(
            "prior: theta_min_deg and theta_max_deg must be given together".into(),
        )),
    }
}

fn fmt_span(s: f64) -> String {
    if s.fract() == 0.0 {
        format!("{s:.0}")
    } else {
        format!("{s}").replace('.', "p")
    }
}

fn check_engines(engines: &[Engine], priors: &[PriorCase]) -> Result<Vec<Engine>> {
    if engines.is_empty() {
        return Err(Error::Config("engines: list at least one engine".into()));
    }
    let mut out = engines.to_vec();
    out.sort();
    out.dedup();
    if out.contains(&Engine::ZzbKnownAoa) && out.contains(&Engine::ZzbJointDistance) {
        return Err(Error::Config(
            "engines: zzb_known_aoa and zzb_joint_distance both fill the distance zzb series; pick one \
             (zzb_joint_distance reduces to the known-angle bound for a zero-width angle prior)"
                .into(),
        ));
    }
    if out.contains(&Engine::ZzbKnownAoa) {
        if let Some(c) = priors.iter().find(|c| !c.prior.is_known_angle()) {
            return Err(Error::Config(format!(
                "engines: zzb_known_aoa needs a known angle but the prior{} spans an interval; \
                 use zzb_joint_distance",
                c.label.as_ref().map(|l| format!(" `{l}`")).unwrap_or_default()
            )));
        }
    }
    if out.contains(&Engine::ZzbJointAoa) && priors.iter().all(|c| c.prior.is_known_angle()) {
        return Err(Error::Config(
            "engines: zzb_joint_aoa needs an angle interval in the prior".into(),
        ));
    }
    Ok(out)
}
