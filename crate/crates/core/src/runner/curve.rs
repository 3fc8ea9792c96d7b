//! Figure-ready curves and their CSV/JSON forms.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crb::Parameter;
use crate::error::{Error, Result};

pub const SERIES_ZZB: &str = "zzb";
pub const SERIES_CRB_GLOBAL: &str = "crb_global";
pub const SERIES_ASYMPTOTE: &str = "asymptote";
pub const SERIES_MLE_MSE: &str = "mle_mse";
pub const SERIES_MLE_STDERR: &str = "mle_stderr";

/// One named column; `None` marks a point whose engine failed or was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub series: String,
    pub snr_db: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveMetadata {
    /// SHA-256 of the scenario document.
    pub config_hash: String,
    pub engine_version: String,
    pub engines: Vec<String>,
    /// Per sweep point; empty when the curve has no zzb series.
    pub zzb_converged: Vec<bool>,
    pub failures: Vec<PointFailure>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub label: String,
    pub parameter: Parameter,
    /// `m^2` or `rad^2`; shared by every series.
    pub units: String,
    pub snr_db: Vec<f64>,
    pub series: Vec<Series>,
    pub metadata: CurveMetadata,
}

/// Rounds to 12 significant digits, the precision of every emitted number.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}").to_lowercase();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let mant = trim_zeros(mant.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl BoundCurve {
    pub fn new(label: impl Into<String>, parameter: Parameter, snr_db: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            parameter,
            units: parameter.units().to_string(),
            snr_db: snr_db.into_iter().map(round12).collect(),
            series: Vec::new(),
            metadata: CurveMetadata::default(),
        }
    }

    /// Appends a series, rounding its values to the emitted precision.
    pub fn push_series(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        if values.len() != self.snr_db.len() {
            return Err(Error::invalid(
                "series",
                format!("`{name}` has {} values for {} sweep points", values.len(), self.snr_db.len()),
            ));
        }
        if self.series(&name).is_some() {
            return Err(Error::invalid("series", format!("duplicate series `{name}`")));
        }
        self.series.push(Series {
            name,
            values: values.into_iter().map(|v| v.map(round12)).collect(),
        });
        Ok(())
    }

    pub fn series(&self, name: &str) -> Option<&[Option<f64>]> {
        self.series.iter().find(|s| s.name == name).map(|s| s.values.as_slice())
    }

    pub fn is_converged(&self) -> bool {
        self.metadata.zzb_converged.iter().all(|c| *c)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# curve: {}", self.label);
        let _ = writeln!(out, "# units: snr_db=dB, values={}", self.units);
        out.push_str("snr_db");
        for s in &self.series {
            out.push(',');
            out.push_str(&s.name);
        }
        out.push('\n');
        if self.series.is_empty() {
            return out;
        }
        for (i, snr) in self.snr_db.iter().enumerate() {
            out.push_str(&fmt_g12(*snr));
            for s in &self.series {
                out.push(',');
                if let Some(v) = s.values[i] {
                    out.push_str(&fmt_g12(v));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Smallest sweep SNR from which `zzb <= ratio * crb_global` holds at every
/// higher sweep point. Missing values count as not satisfied.
pub fn detect_threshold(curve: &BoundCurve, ratio: f64) -> Result<Option<f64>> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::invalid("ratio", format!("{ratio} must be > 0")));
    }
    let zzb = curve
        .series(SERIES_ZZB)
        .ok_or_else(|| Error::MissingSeries(SERIES_ZZB.into()))?;
    let crb = curve
        .series(SERIES_CRB_GLOBAL)
        .ok_or_else(|| Error::MissingSeries(SERIES_CRB_GLOBAL.into()))?;
    let mut found = None;
    for i in (0..curve.snr_db.len()).rev() {
        match (zzb[i], crb[i]) {
            (Some(z), Some(c)) if z <= ratio * c => found = Some(curve.snr_db[i]),
            _ => break,
        }
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`; expected csv or json"))),
        }
    }
}

/// Text of a whole curve set: CSV blocks separated by a blank line, or a
/// JSON array.
pub fn render(curves: &[BoundCurve], format: Format) -> String {
    match format {
        Format::Csv => curves.iter().map(|c| c.to_csv()).collect::<Vec<_>>().join("\n"),
        Format::Json => serde_json::to_string_pretty(curves).expect("curves serialize") + "\n",
    }
}

/// Writes the curves to `path`. CSV with several curves goes to one file per
/// curve, named `<stem>_<label>.csv`; JSON always goes to a single array file.
/// Returns the written paths.
pub fn emit(curves: &[BoundCurve], format: Format, path: &Path) -> Result<Vec<std::path::PathBuf>> {
    let write = |p: &Path, text: &str| -> Result<()> {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(p, text).map_err(|e| Error::io(p, e))
    };
    match format {
        Format::Json => {
            write(path, &render(curves, format))?;
            Ok(vec![path.to_path_buf()])
        }
        Format::Csv if curves.len() == 1 => {
            write(path, &curves[0].to_csv())?;
            Ok(vec![path.to_path_buf()])
        }
        Format::Csv => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("curve");
            let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
            let mut out = Vec::new();
            for c in curves {
                let p = path.with_file_name(format!("{stem}_{}.{ext}", c.label));
                write(&p, &c.to_csv())?;
                out.push(p);
            }
            Ok(out)
        }
    }
}
