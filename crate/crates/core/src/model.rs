//! Array geometry, near-field steering vectors, waveform correlation, and the
//! binary-detection error probability that every Ziv-Zakai integral is built on.
//!
//! Angles are radians. Element abscissas are `x_k = k * spacing` for
//! `k = -(K-1)/2 ..= (K-1)/2`, with the reference element at the origin.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform linear array with an odd number of elements and a narrowband carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArrayConfig")]
pub struct ArrayConfig {
    num_antennas: usize,
    spacing: f64,
    carrier_freq: f64,
}

#[derive(Deserialize)]
struct RawArrayConfig {
    num_antennas: usize,
    spacing: f64,
    carrier_freq: f64,
}

impl TryFrom<RawArrayConfig> for ArrayConfig {
    type Error = Error;

    fn try_from(raw: RawArrayConfig) -> Result<Self> {
        ArrayConfig::new(raw.num_antennas, raw.spacing, raw.carrier_freq)
    }
}

impl ArrayConfig {
    pub fn new(num_antennas: usize, spacing: f64, carrier_freq: f64) -> Result<Self> {
        if num_antennas < 3 {
            return Err(Error::invalid(
                "num_antennas",
                format!("K = {num_antennas}; need an odd K >= 3"),
            ));
        }
        if num_antennas % 2 == 0 {
            return Err(Error::invalid(
                "num_antennas",
                format!(
                    "K = {num_antennas} is even; the array needs a central reference element, use K = {} or {}",
                    num_antennas - 1,
                    num_antennas + 1
                ),
            ));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid("spacing", format!("{spacing} m is not > 0")));
        }
        if !(carrier_freq.is_finite() && carrier_freq > 0.0) {
            return Err(Error::invalid(
                "carrier_freq",
                format!("{carrier_freq} Hz is not > 0"),
            ));
        }
        Ok(Self {
            num_antennas,
            spacing,
            carrier_freq,
        })
    }

    /// Builds the array from its aperture `D_a = (K - 1) * spacing`.
    pub fn with_aperture(num_antennas: usize, aperture: f64, carrier_freq: f64) -> Result<Self> {
        if !(aperture.is_finite() && aperture > 0.0) {
            return Err(Error::invalid("aperture", format!("{aperture} m is not > 0")));
        }
        if num_antennas < 2 {
            return Err(Error::invalid(
                "num_antennas",
                format!("K = {num_antennas}; need an odd K >= 3"),
            ));
        }
        Self::new(
            num_antennas,
            aperture / (num_antennas - 1) as f64,
            carrier_freq,
        )
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(num_antennas: usize, carrier_freq: f64) -> Result<Self> {
        Self::new(num_antennas, SPEED_OF_LIGHT / carrier_freq / 2.0, carrier_freq)
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn aperture(&self) -> f64 {
        (self.num_antennas - 1) as f64 * self.spacing
    }

    /// Largest element index, `(K - 1) / 2`.
    pub fn half_count(&self) -> i64 {
        ((self.num_antennas - 1) / 2) as i64
    }

    pub(crate) fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    fn abscissa(&self, k: i64) -> Result<f64> {
        let m = self.half_count();
        if k.abs() > m {
            return Err(Error::invalid(
                "element index",
                format!("k = {k} outside -{m}..={m}"),
            ));
        }
        Ok(k as f64 * self.spacing)
    }
}

/// Source position in polar coordinates about the reference element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPosition {
    d: f64,
    theta: f64,
}

impl PolarPosition {
    pub fn new(d: f64, theta: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid("distance", format!("d = {d} m is not > 0")));
        }
        if !(theta.is_finite() && theta.abs() < FRAC_PI_2) {
            return Err(Error::invalid(
                "angle",
                format!("theta = {theta} rad is outside (-pi/2, pi/2)"),
            ));
        }
        Ok(Self { d, theta })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `self + delta`, validated.
    pub fn displaced(&self, delta: Displacement) -> Result<Self> {
        Self::new(self.d + delta.delta_d, self.theta + delta.delta_theta)
    }
}

/// Distance/angle perturbation between two hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub delta_d: f64,
    pub delta_theta: f64,
}

impl Displacement {
    pub fn new(delta_d: f64, delta_theta: f64) -> Self {
        Self {
            delta_d,
            delta_theta,
        }
    }

    pub fn distance(h: f64) -> Self {
        Self::new(h, 0.0)
    }
}

impl std::ops::Neg for Displacement {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.delta_d, -self.delta_theta)
    }
}

/// Per-antenna signal-to-noise ratio `alpha^2 / sigma^2` (linear).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SnrSpec(f64);

impl SnrSpec {
    /// Zero is accepted: it is the no-information limit used by several checks.
    pub fn from_linear(snr: f64) -> Result<Self> {
        if !(snr.is_finite() && snr >= 0.0) {
            return Err(Error::invalid("snr", format!("{snr} is not a finite ratio >= 0")));
        }
        Ok(Self(snr))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_linear(10f64.powf(db / 10.0))
    }

    pub fn linear(&self) -> f64 {
        self.0
    }

    pub fn db(&self) -> f64 {
        10.0 * self.0.log10()
    }

    /// Array SNR `K * SNR`.
    pub fn total(&self, cfg: &ArrayConfig) -> f64 {
        cfg.num_antennas() as f64 * self.0
    }
}

/// Element abscissas in ascending order.
pub fn element_positions(cfg: &ArrayConfig) -> Vec<f64> {
    let m = cfg.half_count();
    (-m..=m).map(|k| k as f64 * cfg.spacing()).collect()
}

/// Element-to-source distance without validation; well defined at `d = 0`.
#[inline]
pub(crate) fn element_distance(x: f64, d: f64, sin_theta: f64) -> f64 {
    (d * d + x * x - 2.0 * x * d * sin_theta).max(0.0).sqrt()
}

/// Exact distance between the source and element `k`.
pub fn exact_distance(cfg: &ArrayConfig, k: i64, p: PolarPosition) -> Result<f64> {
    let x = cfg.abscissa(k)?;
    Ok(element_distance(x, p.d, p.theta.sin()))
}

/// Broadside Fresnel approximation `d + x_k^2 / (2 d)`.
pub fn fresnel_distance(cfg: &ArrayConfig, k: i64, d: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid("distance", format!("d = {d} m is not > 0")));
    }
    let x = cfg.abscissa(k)?;
    Ok(d + x * x / (2.0 * d))
}

/// Near-field steering vector, entry `k` = `exp(-j 2 pi d_k / lambda)`.
pub fn steering_vector(cfg: &ArrayConfig, p: PolarPosition) -> Vec<Complex64> {
    let geom = ArrayGeometry::new(cfg);
    geom.steering(p.d, p.theta.sin())
}

/// Normalized correlation `|s(p + delta)^H s(p)| / K`.
pub fn correlation(cfg: &ArrayConfig, p: PolarPosition, delta: Displacement) -> Result<f64> {
    let q = p.displaced(delta)?;
    let geom = ArrayGeometry::new(cfg);
    Ok(geom.correlation(p.d, p.theta.sin(), q.d, q.theta.sin()))
}

/// Gaussian tail probability `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Error probability of the optimal correlator given the array SNR `K * SNR`
/// and the normalized correlation between the two hypotheses.
pub fn pmin_from_correlation(total_snr: f64, rho: f64) -> f64 {
    q_function((total_snr * (1.0 - rho).max(0.0)).sqrt())
}

/// Minimum error probability of the binary test between `p` and `p + delta`.
pub fn pmin(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    p: PolarPosition,
    delta: Displacement,
) -> Result<f64> {
    let rho = correlation(cfg, p, delta)?;
    Ok(pmin_from_correlation(snr.total(cfg), rho))
}

/// Precomputed abscissas and wavenumber for the hot loops.
#[derive(Debug, Clone)]
pub(crate) struct ArrayGeometry {
    pub xs: Vec<f64>,
    pub wavenumber: f64,
}

impl ArrayGeometry {
    pub fn new(cfg: &ArrayConfig) -> Self {
        Self {
            xs: element_positions(cfg),
            wavenumber: cfg.wavenumber(),
        }
    }

    pub fn steering(&self, d: f64, sin_theta: f64) -> Vec<Complex64> {
        self.xs
            .iter()
            .map(|&x| Complex64::from_polar(1.0, -self.wavenumber * element_distance(x, d, sin_theta)))
            .collect()
    }

    /// Phase-difference form of the correlation; the common carrier phase
    /// never enters so there is no large-argument cancellation.
    #[inline]
    pub fn correlation(&self, d1: f64, sin1: f64, d2: f64, sin2: f64) -> f64 {
        correlation_kernel(&self.xs, self.wavenumber, d1, sin1, d2, sin2)
    }
}

// fdlibm minimax kernels on [-pi/4, pi/4].
const S1: f64 = -1.666_666_666_666_663_2e-1;
const S2: f64 = 8.333_333_333_322_489e-3;
const S3: f64 = -1.984_126_982_985_795e-4;
const S4: f64 = 2.755_731_370_707_006_8e-6;
const S5: f64 = -2.505_076_025_340_686_3e-8;
const S6: f64 = 1.589_690_995_211_55e-10;
const C1: f64 = 4.166_666_666_666_660_2e-2;
const C2: f64 = -1.388_888_888_887_411e-3;
const C3: f64 = 2.480_158_728_947_673e-5;
const C4: f64 = -2.755_731_435_139_066_3e-7;
const C5: f64 = 2.087_572_321_298_175e-9;
const C6: f64 = -1.135_964_755_778_819_5e-11;
// pi/2 split so that n * PIO2_1 is exact for |n| < 2^20.
const PIO2_1: f64 = 1.570_796_326_734_125_6;
const PIO2_2: f64 = 6.077_100_506_303_966e-11;
const PIO2_3: f64 = 2.022_266_248_711_166_5e-21;

/// `(sin x, cos x)` in one pass; the correlation kernel spends most of its
/// time here. Falls back to the library routines outside `|x| < 1e5`.
#[inline]
pub(crate) fn sin_cos(x: f64) -> (f64, f64) {
    if !(x.abs() < 1e5) {
        return x.sin_cos();
    }
    let n = (x * std::f64::consts::FRAC_2_PI).round();
    let r = ((x - n * PIO2_1) - n * PIO2_2) - n * PIO2_3;
    let z = r * r;
    let s = r + r * z * (S1 + z * (S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)))));
    let c = 1.0 - 0.5 * z + z * z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    match (n as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

#[inline]
pub(crate) fn correlation_kernel(
    xs: &[f64],
    wavenumber: f64,
    d1: f64,
    sin1: f64,
    d2: f64,
    sin2: f64,
) -> f64 {
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for &x in xs {
        let dphi = wavenumber * (element_distance(x, d2, sin2) - element_distance(x, d1, sin1));
        let (s, c) = sin_cos(dphi);
        re += c;
        im += s;
    }
    (re.hypot(im) / xs.len() as f64).min(1.0)
}
