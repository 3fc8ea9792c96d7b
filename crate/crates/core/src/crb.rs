//! Cramér-Rao bounds: closed-form local bounds for a near-field ULA, their
//! average over a uniform prior, and a finite-difference Fisher matrix used as
//! an independent check on the closed forms.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArrayConfig, ArrayGeometry, PolarPosition, SnrSpec};
use crate::quad::{trapezoid_weights, uniform_grid};
use crate::zzb::QuadratureSpec;

/// Estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Distance,
    Aoa,
}

impl Parameter {
    /// Unit of a mean-squared error of this parameter.
    pub fn units(&self) -> &'static str {
        match self {
            Parameter::Distance => "m^2",
            Parameter::Aoa => "rad^2",
        }
    }
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parameter::Distance => "distance",
            Parameter::Aoa => "aoa",
        })
    }
}

/// Uniform prior support `[d_min, d_max] x [theta_min, theta_max]`.
///
/// A zero-width angle interval is the known-angle prior: every angle integral
/// collapses to an evaluation at `theta_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior")]
pub struct PriorBox {
    d_min: f64,
    d_max: f64,
    theta_min: f64,
    theta_max: f64,
}

#[derive(Deserialize)]
struct RawPrior {
    d_min: f64,
    d_max: f64,
    theta_min: f64,
    theta_max: f64,
}

impl TryFrom<RawPrior> for PriorBox {
    type Error = Error;

    fn try_from(r: RawPrior) -> Result<Self> {
        PriorBox::new(r.d_min, r.d_max, r.theta_min, r.theta_max)
    }
}

impl PriorBox {
    pub fn new(d_min: f64, d_max: f64, theta_min: f64, theta_max: f64) -> Result<Self> {
        if !(d_min.is_finite() && d_min >= 0.0) {
            return Err(Error::invalid("d_min", format!("{d_min} m is not >= 0")));
        }
        if !(d_max.is_finite() && d_max > d_min) {
            return Err(Error::invalid(
                "d_max",
                format!("{d_max} m must exceed d_min = {d_min} m"),
            ));
        }
        if !(theta_min.is_finite() && theta_min > -FRAC_PI_2) {
            return Err(Error::invalid(
                "theta_min",
                format!("{theta_min} rad is not > -pi/2"),
            ));
        }
        if !(theta_max.is_finite() && theta_max < FRAC_PI_2 && theta_max >= theta_min) {
            return Err(Error::invalid(
                "theta_max",
                format!("{theta_max} rad must lie in [theta_min, pi/2)"),
            ));
        }
        Ok(Self {
            d_min,
            d_max,
            theta_min,
            theta_max,
        })
    }

    /// Distance-only prior at a known angle.
    pub fn known_angle(d_min: f64, d_max: f64, theta: f64) -> Result<Self> {
        Self::new(d_min, d_max, theta, theta)
    }

    pub fn from_degrees(d_min: f64, d_max: f64, theta_min_deg: f64, theta_max_deg: f64) -> Result<Self> {
        Self::new(d_min, d_max, theta_min_deg.to_radians(), theta_max_deg.to_radians())
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn theta_min(&self) -> f64 {
        self.theta_min
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn span_d(&self) -> f64 {
        self.d_max - self.d_min
    }

    pub fn span_theta(&self) -> f64 {
        self.theta_max - self.theta_min
    }

    pub fn is_known_angle(&self) -> bool {
        self.span_theta() == 0.0
    }

    /// Prior density on the box; for the known-angle prior, the density in `d` alone.
    pub fn density(&self) -> f64 {
        if self.is_known_angle() {
            1.0 / self.span_d()
        } else {
            1.0 / (self.span_d() * self.span_theta())
        }
    }

    pub fn span(&self, parameter: Parameter) -> f64 {
        match parameter {
            Parameter::Distance => self.span_d(),
            Parameter::Aoa => self.span_theta(),
        }
    }

    pub fn contains(&self, p: PolarPosition) -> bool {
        (self.d_min..=self.d_max).contains(&p.d())
            && (self.theta_min..=self.theta_max).contains(&p.theta())
    }
}

fn check_broadside_side(theta: f64) -> Result<f64> {
    let c = theta.cos();
    if !(c > 1e-12) {
        return Err(Error::Singular(format!(
            "theta = {theta} rad is at endfire; distance and angle are not estimable"
        )));
    }
    Ok(c)
}

fn check_snr(snr: SnrSpec) -> Result<f64> {
    if snr.linear() == 0.0 {
        return Err(Error::Singular("zero SNR carries no Fisher information".into()));
    }
    Ok(snr.linear())
}

pub(crate) fn crb_distance_raw(cfg: &ArrayConfig, snr: f64, d: f64, theta: f64) -> Result<f64> {
    let cos = check_broadside_side(theta)?;
    let k = cfg.num_antennas() as f64;
    let delta2 = cfg.spacing().powi(2);
    let lambda2 = cfg.wavelength().powi(2);
    let sin2 = theta.sin().powi(2);
    let num = 6.0 * lambda2 * d * d * (delta2 * (k * k - 4.0) * sin2 + 15.0 * d * d);
    let den = PI * PI * k * snr * cos.powi(4) * delta2 * delta2 * (k * k - 4.0) * (k * k - 1.0);
    Ok(num / den)
}

pub(crate) fn crb_aoa_raw(cfg: &ArrayConfig, snr: f64, theta: f64) -> Result<f64> {
    let cos = check_broadside_side(theta)?;
    let k = cfg.num_antennas() as f64;
    let lambda2 = cfg.wavelength().powi(2);
    Ok(3.0 * lambda2 / (2.0 * PI * PI * k * snr * cos * cos * cfg.spacing().powi(2) * (k * k - 1.0)))
}

/// Local distance CRB (m^2) under the Fresnel approximation.
pub fn crb_distance_local(cfg: &ArrayConfig, snr: SnrSpec, p: PolarPosition) -> Result<f64> {
    crb_distance_raw(cfg, check_snr(snr)?, p.d(), p.theta())
}

/// Local angle-of-arrival CRB (rad^2); independent of distance.
pub fn crb_aoa_local(cfg: &ArrayConfig, snr: SnrSpec, p: PolarPosition) -> Result<f64> {
    crb_aoa_raw(cfg, check_snr(snr)?, p.theta())
}

/// Large-array closed form of the prior-averaged distance CRB at broadside for
/// `d_min = 0`, with `spacing^4 (K^2-4)(K^2-1)` replaced by `D_a^4`.
pub fn crb_global_distance_closed(cfg: &ArrayConfig, snr: SnrSpec, d_max: f64) -> Result<f64> {
    let snr = check_snr(snr)?;
    if !(d_max.is_finite() && d_max > 0.0) {
        return Err(Error::invalid("d_max", format!("{d_max} m is not > 0")));
    }
    let k = cfg.num_antennas() as f64;
    Ok(18.0 * cfg.wavelength().powi(2) * d_max.powi(4)
        / (PI * PI * k * snr * cfg.aperture().powi(4)))
}

const CRB_GLOBAL_TOL: f64 = 1e-3;
const CRB_GLOBAL_MAX_DOUBLINGS: u32 = 12;

/// Local CRB averaged over the uniform prior (composite trapezoid, grid doubled
/// until the relative change is below 0.1%).
pub fn crb_global(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    prior: &PriorBox,
    parameter: Parameter,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let snr = check_snr(snr)?;
    let local = |d: f64, theta: f64| match parameter {
        Parameter::Distance => crb_distance_raw(cfg, snr, d, theta),
        Parameter::Aoa => crb_aoa_raw(cfg, snr, theta),
    };

    let average = |n_d: usize, n_theta: usize| -> Result<f64> {
        let ds = uniform_grid(prior.d_min(), prior.d_max(), n_d);
        let wd = trapezoid_weights(&ds);
        if prior.is_known_angle() {
            let mut acc = 0.0;
            for (d, w) in ds.iter().zip(&wd) {
                acc += w * local(*d, prior.theta_min())?;
            }
            return Ok(acc / prior.span_d());
        }
        let ts = uniform_grid(prior.theta_min(), prior.theta_max(), n_theta);
        let wt = trapezoid_weights(&ts);
        let mut acc = 0.0;
        for (d, w1) in ds.iter().zip(&wd) {
            for (t, w2) in ts.iter().zip(&wt) {
                acc += w1 * w2 * local(*d, *t)?;
            }
        }
        Ok(acc / (prior.span_d() * prior.span_theta()))
    };

    let (mut n_d, mut n_theta) = (quad.n_d.max(2), quad.n_theta.max(2));
    let mut prev = average(n_d, n_theta)?;
    for _ in 0..CRB_GLOBAL_MAX_DOUBLINGS {
        n_d = 2 * n_d - 1;
        n_theta = 2 * n_theta - 1;
        let next = average(n_d, n_theta)?;
        if (next - prev).abs() <= CRB_GLOBAL_TOL * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!(
        "global {parameter} CRB still changing after {CRB_GLOBAL_MAX_DOUBLINGS} grid doublings"
    )))
}

/// Symmetric 2x2 Fisher information over `(d, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub entries: [[f64; 2]; 2],
}

impl FisherMatrix {
    pub fn determinant(&self) -> f64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        let e = &self.entries;
        let det = self.determinant();
        let scale = (e[0][0] * e[1][1]).abs();
        if !(det.is_finite() && det > 1e-12 * scale && scale > 0.0) {
            return Err(Error::Conditioning(format!(
                "determinant {det:e} against diagonal product {scale:e}"
            )));
        }
        Ok([
            [e[1][1] / det, -e[0][1] / det],
            [-e[1][0] / det, e[0][0] / det],
        ])
    }

    /// `[J^-1]_{11}` (m^2).
    pub fn crb_distance(&self) -> Result<f64> {
        Ok(self.inverse()?[0][0])
    }

    /// `[J^-1]_{22}` (rad^2).
    pub fn crb_aoa(&self) -> Result<f64> {
        Ok(self.inverse()?[1][1])
    }
}

/// Fisher matrix from a steering vector and its two parameter derivatives.
///
/// The unknown carrier phase is a nuisance parameter: the derivatives are
/// projected onto the orthogonal complement of `s` before forming
/// `2 SNR Re{a^H b}`.
pub(crate) fn fim_from_derivatives(
    s: &[Complex64],
    ds_dd: &[Complex64],
    ds_dtheta: &[Complex64],
    snr: f64,
) -> FisherMatrix {
    let k = s.len() as f64;
    let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let sa = inner(s, ds_dd);
    let sb = inner(s, ds_dtheta);
    let projected = |a: &[Complex64], sa: Complex64, b: &[Complex64], sb: Complex64| -> f64 {
        (inner(a, b) - sa.conj() * sb / k).re
    };
    let jdd = 2.0 * snr * projected(ds_dd, sa, ds_dd, sa);
    let jdt = 2.0 * snr * projected(ds_dd, sa, ds_dtheta, sb);
    let jtt = 2.0 * snr * projected(ds_dtheta, sb, ds_dtheta, sb);
    FisherMatrix {
        entries: [[jdd, jdt], [jdt, jtt]],
    }
}

/// Fisher information of the exact spherical-wavefront model, with steering
/// derivatives taken by central finite differences (`step` relative in `d`,
/// absolute radians in `theta`).
pub fn numerical_fim(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    p: PolarPosition,
    step: f64,
) -> Result<FisherMatrix> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::invalid(
            "step",
            format!("{step} is outside [1e-7, 1e-3]"),
        ));
    }
    let geom = ArrayGeometry::new(cfg);
    let (d, theta) = (p.d(), p.theta());
    let hd = step * d;
    let ht = step;
    let s = geom.steering(d, theta.sin());
    let diff = |plus: Vec<Complex64>, minus: Vec<Complex64>, h: f64| -> Vec<Complex64> {
        plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let ds_dd = diff(
        geom.steering(d + hd, theta.sin()),
        geom.steering(d - hd, theta.sin()),
        hd,
    );
    let ds_dt = diff(
        geom.steering(d, (theta + ht).sin()),
        geom.steering(d, (theta - ht).sin()),
        ht,
    );
    let fim = fim_from_derivatives(&s, &ds_dd, &ds_dt, snr.linear());
    fim.inverse()?;
    Ok(fim)
}
