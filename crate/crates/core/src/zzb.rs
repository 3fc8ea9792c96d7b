//! Ziv-Zakai bounds for distance and angle under a uniform prior.
//!
//! Every engine works on a whole SNR sweep at once: the correlation at a
//! quadrature node does not depend on SNR, so it is computed once and pushed
//! through the error-probability kernel for every requested SNR.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crb::{Parameter, PriorBox};
use crate::error::{Error, Result};
use crate::model::{q_function, ArrayConfig, ArrayGeometry, SnrSpec};
use crate::quad::{graded_grid, trapezoid_weights, uniform_grid};

/// Node placement for the outer offset integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HGrid {
    /// `0` plus geometric nodes from `T * h_min_rel` to `T`.
    Geometric,
    Uniform,
}

/// Candidate set for the nuisance displacement in the inner maximization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSearch {
    /// `n_dtheta` points on `[-T, T]`.
    Symmetric,
    /// `n_dtheta` points on `[0, T]`.
    NonNegative,
    /// Nuisance displacement pinned to zero.
    ZeroOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub n_h: usize,
    pub n_d: usize,
    pub n_theta: usize,
    /// Nuisance-displacement candidates; odd so zero is always included.
    pub n_dtheta: usize,
    /// Relative change between the full and half grid above which a value is
    /// flagged as not converged.
    pub convergence_target: f64,
    pub h_grid: HGrid,
    pub h_min_rel: f64,
    pub delta_search: DeltaSearch,
    /// Bisection levels spent refining the best nuisance candidates; 0 keeps
    /// the maximization on the candidate grid.
    pub candidate_refinement: u32,
    /// Extra grid doublings attempted for values that fail the convergence check.
    pub max_doublings: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_h: 256,
            n_d: 128,
            n_theta: 64,
            n_dtheta: 65,
            convergence_target: 0.01,
            h_grid: HGrid::Geometric,
            h_min_rel: 1e-6,
            delta_search: DeltaSearch::Symmetric,
            candidate_refinement: 3,
            max_doublings: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, n) in [
            ("n_h", self.n_h),
            ("n_d", self.n_d),
            ("n_theta", self.n_theta),
            ("n_dtheta", self.n_dtheta),
        ] {
            if n < 2 {
                return Err(Error::invalid(field, format!("{n} grid points; need at least 2")));
            }
        }
        if self.h_grid == HGrid::Geometric && self.n_h < 3 {
            return Err(Error::invalid("n_h", "geometric grid needs at least 3 points"));
        }
        if self.n_dtheta % 2 == 0 {
            return Err(Error::invalid(
                "n_dtheta",
                format!("{} is even; use an odd count so zero displacement is a candidate", self.n_dtheta),
            ));
        }
        if !(self.convergence_target.is_finite() && self.convergence_target > 0.0) {
            return Err(Error::invalid("convergence_target", "must be > 0"));
        }
        if !(self.h_min_rel > 0.0 && self.h_min_rel < 1.0) {
            return Err(Error::invalid("h_min_rel", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn grid(&self) -> ZzbGrid {
        ZzbGrid {
            n_h: self.n_h,
            n_d: self.n_d,
            n_theta: self.n_theta,
            n_dtheta: self.n_dtheta,
        }
    }
}

/// Grid actually used for a reported value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZzbGrid {
    pub n_h: usize,
    pub n_d: usize,
    pub n_theta: usize,
    pub n_dtheta: usize,
}

fn odd(n: usize) -> usize {
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

impl ZzbGrid {
    fn halved(&self) -> Self {
        Self {
            n_h: self.n_h.div_ceil(2).max(3),
            n_d: self.n_d.div_ceil(2).max(2),
            n_theta: self.n_theta.div_ceil(2).max(2),
            n_dtheta: odd(self.n_dtheta.div_ceil(2).max(3)),
        }
    }

    fn doubled(&self) -> Self {
        Self {
            n_h: 2 * self.n_h - 1,
            n_d: 2 * self.n_d - 1,
            n_theta: 2 * self.n_theta - 1,
            n_dtheta: 2 * self.n_dtheta - 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZzbResult {
    /// m^2 for distance, rad^2 for angle.
    pub value: f64,
    pub parameter: Parameter,
    pub converged: bool,
    /// Relative change against the coarser grid.
    pub relative_change: f64,
    pub grid: ZzbGrid,
}

#[derive(Debug, Clone, Copy)]
enum Problem {
    KnownAoa { theta: f64 },
    JointDistance,
    JointAoa,
}

impl Problem {
    fn parameter(&self) -> Parameter {
        match self {
            Problem::KnownAoa { .. } | Problem::JointDistance => Parameter::Distance,
            Problem::JointAoa => Parameter::Aoa,
        }
    }
}

// Q(8.3) < 6e-17. Dropping every term beyond it changes any bound by less than
// 6e-17 * T^2 / 2, far below the smallest value the engines report.
const Q_CUTOFF: f64 = 8.3;

// Refined candidate chains kept per level of the inner maximization.
const MAX_CHAINS: usize = 8;

struct Engine<'a> {
    geom: ArrayGeometry,
    prior: &'a PriorBox,
    quad: &'a QuadratureSpec,
    problem: Problem,
    /// Total SNR `K * snr`, ascending.
    total_snr: Vec<f64>,
}

impl Engine<'_> {
    /// Adds `w * P_min` for every SNR to `acc`.
    #[inline]
    fn accumulate(&self, rho: f64, w: f64, acc: &mut [f64]) {
        let gap = (1.0 - rho).max(0.0);
        for (a, &t) in acc.iter_mut().zip(&self.total_snr) {
            let x = (t * gap).sqrt();
            if x > Q_CUTOFF {
                break;
            }
            *a += w * q_function(x);
        }
    }

    fn outer_nodes(&self, span: f64, n: usize) -> Vec<f64> {
        match self.quad.h_grid {
            HGrid::Geometric => graded_grid(span, n, self.quad.h_min_rel),
            HGrid::Uniform => uniform_grid(0.0, span, n),
        }
    }

    fn candidates(&self, span: f64, n: usize) -> (Vec<f64>, f64) {
        match self.quad.delta_search {
            DeltaSearch::Symmetric => {
                let mut c = uniform_grid(-span, span, n);
                c[n / 2] = 0.0;
                (c, -span)
            }
            DeltaSearch::NonNegative => (uniform_grid(0.0, span, n), 0.0),
            DeltaSearch::ZeroOnly => (vec![0.0], 0.0),
        }
    }

    /// Per-SNR maximum of `eval` over the nuisance candidates, followed by
    /// bisection around the most promising local maxima. The profile in the
    /// nuisance displacement has narrow ambiguity bumps that a fixed grid can
    /// straddle.
    fn maximize<F: Fn(f64) -> Vec<f64>>(&self, span: f64, n: usize, eval: F) -> Vec<f64> {
        let (cands, lo) = self.candidates(span, n);
        let hi = span;
        let values: Vec<Vec<f64>> = cands.iter().map(|&c| eval(c)).collect();
        let n_snr = self.total_snr.len();
        let mut best = vec![0.0f64; n_snr];
        for v in &values {
            for (b, x) in best.iter_mut().zip(v) {
                *b = b.max(*x);
            }
        }
        if self.quad.candidate_refinement == 0 || cands.len() < 3 {
            return best;
        }

        // Seeds: the two largest local maxima of each SNR's profile.
        let m = cands.len();
        let mut votes = vec![0usize; m];
        for s in 0..n_snr {
            let mut peaks: Vec<usize> = (0..m)
                .filter(|&j| {
                    let left = j == 0 || values[j][s] >= values[j - 1][s];
                    let right = j + 1 == m || values[j][s] >= values[j + 1][s];
                    left && right && values[j][s] > 0.0
                })
                .collect();
            peaks.sort_by(|&a, &b| values[b][s].total_cmp(&values[a][s]).then(a.cmp(&b)));
            for &j in peaks.iter().take(2) {
                votes[j] += 1;
            }
        }
        let mut chains: Vec<(f64, Vec<f64>, usize)> = (0..m)
            .filter(|&j| votes[j] > 0)
            .map(|j| (cands[j], values[j].clone(), votes[j]))
            .collect();
        let mut step = (cands[1] - cands[0]).abs();
        for _ in 0..self.quad.candidate_refinement {
            step *= 0.5;
            chains.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.total_cmp(&b.0)));
            chains.truncate(MAX_CHAINS);
            let mut next: Vec<(f64, Vec<f64>, usize)> = Vec::new();
            for (c, vc, _) in chains {
                let mut trio = vec![(c, vc)];
                for x in [c - step, c + step] {
                    if x >= lo && x <= hi {
                        let v = eval(x);
                        for (b, y) in best.iter_mut().zip(&v) {
                            *b = b.max(*y);
                        }
                        trio.push((x, v));
                    }
                }
                let mut won = vec![0usize; trio.len()];
                for s in 0..n_snr {
                    let arg = (0..trio.len())
                        .max_by(|&a, &b| trio[a].1[s].total_cmp(&trio[b].1[s]).then(b.cmp(&a)))
                        .expect("non-empty");
                    won[arg] += 1;
                }
                for (t, w) in trio.into_iter().zip(won) {
                    if w > 0 && !next.iter().any(|e| e.0 == t.0) {
                        next.push((t.0, t.1, w));
                    }
                }
            }
            chains = next;
        }
        best
    }

    /// Inner integral at offset `h` for every SNR (not yet multiplied by `h`).
    fn inner(&self, h: f64, g: &ZzbGrid) -> Vec<f64> {
        let p = self.prior;
        let n_snr = self.total_snr.len();
        match self.problem {
            Problem::KnownAoa { theta } => {
                let mut acc = vec![0.0; n_snr];
                let hi = p.d_max() - h;
                if hi <= p.d_min() {
                    return acc;
                }
                let ds = uniform_grid(p.d_min(), hi, g.n_d);
                let ws = trapezoid_weights(&ds);
                let s = theta.sin();
                for (d, w) in ds.iter().zip(&ws) {
                    let rho = self.geom.correlation(*d, s, d + h, s);
                    self.accumulate(rho, *w, &mut acc);
                }
                acc
            }
            Problem::JointDistance => {
                let hi_d = p.d_max() - h;
                if hi_d <= p.d_min() {
                    return vec![0.0; n_snr];
                }
                let ds = uniform_grid(p.d_min(), hi_d, g.n_d);
                let wd = trapezoid_weights(&ds);
                self.maximize(p.span_theta(), g.n_dtheta, |dt| {
                    let mut acc = vec![0.0; n_snr];
                    let lo = p.theta_min().max(p.theta_min() - dt);
                    let hi = p.theta_max().min(p.theta_max() - dt);
                    if hi <= lo {
                        return acc;
                    }
                    let ts = uniform_grid(lo, hi, g.n_theta);
                    let wt = trapezoid_weights(&ts);
                    let sin1: Vec<f64> = ts.iter().map(|t| t.sin()).collect();
                    let sin2: Vec<f64> = ts.iter().map(|t| (t + dt).sin()).collect();
                    for (d, w1) in ds.iter().zip(&wd) {
                        for j in 0..ts.len() {
                            let rho = self.geom.correlation(*d, sin1[j], d + h, sin2[j]);
                            self.accumulate(rho, w1 * wt[j], &mut acc);
                        }
                    }
                    acc
                })
            }
            Problem::JointAoa => {
                let hi_t = p.theta_max() - h;
                if hi_t <= p.theta_min() {
                    return vec![0.0; n_snr];
                }
                let ts = uniform_grid(p.theta_min(), hi_t, g.n_theta);
                let wt = trapezoid_weights(&ts);
                let sin1: Vec<f64> = ts.iter().map(|t| t.sin()).collect();
                let sin2: Vec<f64> = ts.iter().map(|t| (t + h).sin()).collect();
                self.maximize(p.span_d(), g.n_dtheta, |dd| {
                    let mut acc = vec![0.0; n_snr];
                    let lo = p.d_min().max(p.d_min() - dd);
                    let hi = p.d_max().min(p.d_max() - dd);
                    if hi <= lo {
                        return acc;
                    }
                    let ds = uniform_grid(lo, hi, g.n_d);
                    let wd = trapezoid_weights(&ds);
                    for (d, w1) in ds.iter().zip(&wd) {
                        for j in 0..ts.len() {
                            let rho = self.geom.correlation(*d, sin1[j], d + dd, sin2[j]);
                            self.accumulate(rho, w1 * wt[j], &mut acc);
                        }
                    }
                    acc
                })
            }
        }
    }

    fn evaluate(&self, g: &ZzbGrid) -> Vec<f64> {
        let p = self.prior;
        let (span, norm) = match self.problem {
            Problem::KnownAoa { .. } => (p.span_d(), p.span_d()),
            Problem::JointDistance => (p.span_d(), p.span_d() * p.span_theta()),
            Problem::JointAoa => (p.span_theta(), p.span_d() * p.span_theta()),
        };
        let hs = self.outer_nodes(span, g.n_h);
        let wh = trapezoid_weights(&hs);
        // Each outer node is independent; collect preserves index order so the
        // reduction below is the same for any thread count.
        let rows: Vec<Vec<f64>> = hs.par_iter().map(|&h| self.inner(h, g)).collect();
        let mut out = vec![0.0; self.total_snr.len()];
        for ((row, h), w) in rows.iter().zip(&hs).zip(&wh) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * h * v;
            }
        }
        out.iter().map(|v| v / norm).collect()
    }
}

fn run(
    cfg: &ArrayConfig,
    snrs: &[SnrSpec],
    prior: &PriorBox,
    quad: &QuadratureSpec,
    problem: Problem,
) -> Result<Vec<ZzbResult>> {
    quad.validate()?;
    let k = cfg.num_antennas() as f64;
    let mut order: Vec<usize> = (0..snrs.len()).collect();
    order.sort_by(|&a, &b| snrs[a].linear().total_cmp(&snrs[b].linear()));
    let sorted: Vec<f64> = order.iter().map(|&i| k * snrs[i].linear()).collect();

    let mut engine = Engine {
        geom: ArrayGeometry::new(cfg),
        prior,
        quad,
        problem,
        total_snr: sorted.clone(),
    };

    let mut grid = quad.grid();
    let fine = engine.evaluate(&grid);
    let coarse = engine.evaluate(&grid.halved());
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    };
    let mut results: Vec<ZzbResult> = fine
        .iter()
        .zip(&coarse)
        .map(|(&f, &c)| {
            let r = rel(f, c);
            ZzbResult {
                value: f,
                parameter: problem.parameter(),
                converged: r <= quad.convergence_target,
                relative_change: r,
                grid,
            }
        })
        .collect();

    for _ in 0..quad.max_doublings {
        let pending: Vec<usize> = (0..results.len()).filter(|&i| !results[i].converged).collect();
        if pending.is_empty() {
            break;
        }
        grid = grid.doubled();
        engine.total_snr = pending.iter().map(|&i| sorted[i]).collect();
        let finer = engine.evaluate(&grid);
        for (&i, v) in pending.iter().zip(finer) {
            let r = rel(v, results[i].value);
            results[i] = ZzbResult {
                value: v,
                parameter: problem.parameter(),
                converged: r <= quad.convergence_target,
                relative_change: r,
                grid,
            };
        }
    }

    let mut out = results.clone();
    for (pos, &i) in order.iter().enumerate() {
        out[i] = results[pos];
    }
    Ok(out)
}

fn require_known_angle(prior: &PriorBox) -> Result<()> {
    if !prior.is_known_angle() {
        return Err(Error::invalid(
            "prior",
            "known-angle bound needs theta_min == theta_max",
        ));
    }
    Ok(())
}

/// Distance ZZB with the angle known, for every SNR in `snrs`.
pub fn zzb_distance_known_aoa_sweep(
    cfg: &ArrayConfig,
    snrs: &[SnrSpec],
    prior: &PriorBox,
    quad: &QuadratureSpec,
) -> Result<Vec<ZzbResult>> {
    require_known_angle(prior)?;
    run(cfg, snrs, prior, quad, Problem::KnownAoa { theta: prior.theta_min() })
}

pub fn zzb_distance_known_aoa(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    prior: &PriorBox,
    quad: &QuadratureSpec,
) -> Result<ZzbResult> {
    Ok(zzb_distance_known_aoa_sweep(cfg, &[snr], prior, quad)?[0])
}

/// Distance ZZB under joint distance/angle uncertainty, maximizing over the
/// angle displacement. Falls back to the known-angle bound for a zero-width
/// angle prior.
pub fn zzb_distance_joint_sweep(
    cfg: &ArrayConfig,
    snrs: &[SnrSpec],
    prior: &PriorBox,
    quad: &QuadratureSpec,
) -> Result<Vec<ZzbResult>> {
    if prior.is_known_angle() {
        return zzb_distance_known_aoa_sweep(cfg, snrs, prior, quad);
    }
    run(cfg, snrs, prior, quad, Problem::JointDistance)
}

pub fn zzb_distance_joint(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    prior: &PriorBox,
    quad: &QuadratureSpec,
) -> Result<ZzbResult> {
    Ok(zzb_distance_joint_sweep(cfg, &[snr], prior, quad)?[0])
}

/// Angle ZZB under joint uncertainty, maximizing over the distance displacement.
pub fn zzb_aoa_joint_sweep(
    cfg: &ArrayConfig,
    snrs: &[SnrSpec],
    prior: &PriorBox,
    quad: &QuadratureSpec,
) -> Result<Vec<ZzbResult>> {
    if prior.is_known_angle() {
        return Err(Error::invalid("prior", "angle bound needs theta_max > theta_min"));
    }
    run(cfg, snrs, prior, quad, Problem::JointAoa)
}

pub fn zzb_aoa_joint(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    prior: &PriorBox,
    quad: &QuadratureSpec,
) -> Result<ZzbResult> {
    Ok(zzb_aoa_joint_sweep(cfg, &[snr], prior, quad)?[0])
}

/// Zero-information limit: the prior variance `T^2 / 12`.
pub fn zzb_prior_limit(prior: &PriorBox, parameter: Parameter) -> f64 {
    prior.span(parameter).powi(2) / 12.0
}

/// High-SNR distance asymptote at broadside,
/// `18 lambda^2 (d_max^5 - d_min^5) / (pi^2 K SNR D_a^4 T_d)`.
pub fn zzb_highsnr_asymptote(cfg: &ArrayConfig, snr: SnrSpec, prior: &PriorBox) -> Result<f64> {
    if !(prior.is_known_angle() && prior.theta_min() == 0.0) {
        return Err(Error::Domain(
            "high-SNR asymptote is derived for a known broadside angle only".into(),
        ));
    }
    if snr.linear() == 0.0 {
        return Err(Error::Singular("asymptote diverges at zero SNR".into()));
    }
    let k = cfg.num_antennas() as f64;
    let lambda = cfg.wavelength();
    Ok(18.0 * lambda * lambda * (prior.d_max().powi(5) - prior.d_min().powi(5))
        / (std::f64::consts::PI.powi(2) * k * snr.linear() * cfg.aperture().powi(4) * prior.span_d()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> QuadratureSpec {
        QuadratureSpec {
            n_h: 96,
            n_d: 48,
            n_theta: 12,
            n_dtheta: 9,
            ..Default::default()
        }
    }

    #[test]
    fn validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        let bad = QuadratureSpec { n_dtheta: 64, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec { n_d: 1, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_snr_is_prior_variance() {
        let cfg = ArrayConfig::with_aperture(21, 1.0, 28e9).unwrap();
        let prior = PriorBox::known_angle(0.0, 5.0, 0.0).unwrap();
        let r = zzb_distance_known_aoa(&cfg, SnrSpec::from_linear(0.0).unwrap(), &prior, &small()).unwrap();
        assert_relative_eq!(r.value, 25.0 / 12.0, max_relative = 2e-3);
        assert!(r.converged);

        let prior = PriorBox::from_degrees(1.0, 3.0, -10.0, 10.0).unwrap();
        let r = zzb_aoa_joint(&cfg, SnrSpec::from_linear(0.0).unwrap(), &prior, &small()).unwrap();
        assert_relative_eq!(r.value, zzb_prior_limit(&prior, Parameter::Aoa), max_relative = 2e-3);
    }

    #[test]
    fn sweep_matches_single_points_in_any_order() {
        let cfg = ArrayConfig::with_aperture(21, 1.0, 28e9).unwrap();
        let prior = PriorBox::known_angle(0.0, 5.0, 0.0).unwrap();
        let snrs: Vec<SnrSpec> = [10.0, -10.0, 0.0].iter().map(|&d| SnrSpec::from_db(d).unwrap()).collect();
        let sweep = zzb_distance_known_aoa_sweep(&cfg, &snrs, &prior, &small()).unwrap();
        for (s, r) in snrs.iter().zip(&sweep) {
            let single = zzb_distance_known_aoa(&cfg, *s, &prior, &small()).unwrap();
            assert_eq!(single.value, r.value);
        }
        assert!(sweep[1].value > sweep[2].value && sweep[2].value > sweep[0].value);
    }

    #[test]
    fn asymptote_matches_closed_global_crb() {
        let cfg = ArrayConfig::with_aperture(21, 1.0, 28e9).unwrap();
        let snr = SnrSpec::from_linear(1.0).unwrap();
        let prior = PriorBox::known_angle(0.0, 5.0, 0.0).unwrap();
        let a = zzb_highsnr_asymptote(&cfg, snr, &prior).unwrap();
        let c = crate::crb::crb_global_distance_closed(&cfg, snr, 5.0).unwrap();
        assert_relative_eq!(a, c, max_relative = 1e-12);
        let off = PriorBox::known_angle(0.0, 5.0, 0.1).unwrap();
        assert!(matches!(zzb_highsnr_asymptote(&cfg, snr, &off), Err(Error::Domain(_))));
    }

    #[test]
    fn prior_limits() {
        let p = PriorBox::known_angle(1.0, 5.0, 0.0).unwrap();
        assert_relative_eq!(zzb_prior_limit(&p, Parameter::Distance), 16.0 / 12.0);
        let p = PriorBox::from_degrees(0.0, 5.0, -30.0, 30.0).unwrap();
        assert_relative_eq!(zzb_prior_limit(&p, Parameter::Aoa), 0.0914, max_relative = 1e-3);
    }
}
