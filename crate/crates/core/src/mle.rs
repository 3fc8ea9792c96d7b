//! Seeded Monte Carlo maximum-likelihood baseline.
//!
//! Trial `i` draws everything (true position, then noise) from its own
//! ChaCha8 stream `(seed, i)`, and per-trial errors are reduced in index
//! order, so results do not depend on the number of worker threads.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crb::PriorBox;
use crate::error::{Error, Result};
use crate::model::{element_distance, ArrayConfig, ArrayGeometry, PolarPosition, SnrSpec};
use crate::quad::uniform_grid;

/// Likelihood used by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `|s(p)^H r|`: carrier phase treated as unknown.
    Noncoherent,
    /// `Re{s(p)^H r}`: amplitude phase assumed known.
    Coherent,
}

/// Placement of the distance search nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    /// Equal steps in Fisher arc length; angles equally spaced in `sin(theta)`.
    Information,
    Uniform,
}

/// Local refinement around the best grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refine {
    Off,
    /// One three-point parabolic step per axis.
    Parabolic,
    /// Golden-section search per axis inside the neighbouring grid cells.
    Golden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub num_trials: usize,
    pub seed: u64,
    pub search_grid_d: usize,
    /// Defaults to 256, or 1 for a known-angle prior.
    pub search_grid_theta: Option<usize>,
    pub refine: Refine,
    pub objective: Objective,
    pub grid_spacing: GridSpacing,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            num_trials: 2000,
            seed: 0,
            search_grid_d: 512,
            search_grid_theta: None,
            refine: Refine::Golden,
            objective: Objective::Noncoherent,
            grid_spacing: GridSpacing::Information,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trials < 2 {
            return Err(Error::invalid("num_trials", "need at least 2 trials for a standard error"));
        }
        if self.search_grid_d < 3 {
            return Err(Error::invalid("search_grid_d", "need at least 3 points"));
        }
        if self.search_grid_theta == Some(0) {
            return Err(Error::invalid("search_grid_theta", "need at least 1 point"));
        }
        Ok(())
    }

    fn theta_points(&self, prior: &PriorBox) -> usize {
        if prior.is_known_angle() {
            1
        } else {
            self.search_grid_theta.unwrap_or(256).max(2)
        }
    }
}

/// Counter-based random stream for one trial.
pub struct TrialStream(ChaCha8Rng);

impl TrialStream {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self(rng)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Circular complex Gaussian with `E|z|^2 = 1` (Box-Muller, two uniforms per draw).
    pub fn complex_normal(&mut self) -> Complex64 {
        let r = (-self.uniform().ln()).sqrt();
        let (s, c) = (TAU * self.uniform()).sin_cos();
        Complex64::new(r * c, r * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub r: Vec<Complex64>,
    pub truth: PolarPosition,
    pub snr: SnrSpec,
    /// `sqrt(SNR)` with unit noise power.
    pub amplitude: f64,
}

/// `r = sqrt(SNR) s(p) + n`, noise circular Gaussian with unit power per element.
pub fn simulate_observation(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    p: PolarPosition,
    rng: &mut TrialStream,
) -> Observation {
    simulate_with(&ArrayGeometry::new(cfg), snr, p, rng)
}

fn simulate_with(geom: &ArrayGeometry, snr: SnrSpec, p: PolarPosition, rng: &mut TrialStream) -> Observation {
    let amplitude = snr.linear().sqrt();
    let r = geom
        .steering(p.d(), p.theta().sin())
        .into_iter()
        .map(|s| amplitude * s + rng.complex_normal())
        .collect();
    Observation {
        r,
        truth: p,
        snr,
        amplitude,
    }
}

// Noncoherent distance information per unit SNR at broadside-relative angle
// `sin_theta`: spread of the element path-length derivatives.
fn distance_information(xs: &[f64], d: f64, sin_theta: f64) -> f64 {
    let k = xs.len() as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for &x in xs {
        let dk = element_distance(x, d, sin_theta);
        let g = if dk == 0.0 { 1.0 } else { (d - x * sin_theta) / dk };
        m1 += g;
        m2 += g * g;
    }
    (m2 / k - (m1 / k).powi(2)).max(0.0)
}

fn information_grid(xs: &[f64], lo: f64, hi: f64, sin_theta: f64, n: usize) -> Vec<f64> {
    const AUX: usize = 16_384;
    let aux = uniform_grid(lo, hi, AUX);
    let density: Vec<f64> = aux
        .iter()
        .map(|&d| distance_information(xs, d, sin_theta).sqrt())
        .collect();
    let mut arc = vec![0.0; AUX];
    for i in 1..AUX {
        arc[i] = arc[i - 1] + 0.5 * (density[i] + density[i - 1]) * (aux[i] - aux[i - 1]);
    }
    let total = arc[AUX - 1];
    if !(total > 0.0) {
        return uniform_grid(lo, hi, n);
    }
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        if i == 0 {
            out.push(lo);
            continue;
        }
        if i == n - 1 {
            out.push(hi);
            continue;
        }
        let target = total * i as f64 / (n - 1) as f64;
        while arc[j + 1] < target {
            j += 1;
        }
        let t = (target - arc[j]) / (arc[j + 1] - arc[j]);
        out.push(aux[j] + t * (aux[j + 1] - aux[j]));
    }
    out
}

// Above this many complex entries the grid steering vectors are recomputed
// per trial instead of cached.
const STEERING_CACHE_LIMIT: usize = 1 << 24;

/// Search nodes over the prior box plus cached conjugate steering vectors.
pub struct SearchGrid {
    geom: ArrayGeometry,
    pub ds: Vec<f64>,
    pub thetas: Vec<f64>,
    cache: Option<Vec<Complex64>>,
    objective: Objective,
    prior: PriorBox,
}

impl SearchGrid {
    pub fn new(cfg: &ArrayConfig, prior: &PriorBox, mc: &MonteCarloConfig) -> Result<Self> {
        mc.validate()?;
        let geom = ArrayGeometry::new(cfg);
        let n_t = mc.theta_points(prior);
        let thetas = if n_t == 1 {
            vec![prior.theta_min()]
        } else {
            match mc.grid_spacing {
                GridSpacing::Information => {
                    uniform_grid(prior.theta_min().sin(), prior.theta_max().sin(), n_t)
                        .into_iter()
                        .map(f64::asin)
                        .collect()
                }
                GridSpacing::Uniform => uniform_grid(prior.theta_min(), prior.theta_max(), n_t),
            }
        };
        let ds = match mc.grid_spacing {
            GridSpacing::Information => {
                let mid = 0.5 * (prior.theta_min() + prior.theta_max());
                information_grid(&geom.xs, prior.d_min(), prior.d_max(), mid.sin(), mc.search_grid_d)
            }
            GridSpacing::Uniform => uniform_grid(prior.d_min(), prior.d_max(), mc.search_grid_d),
        };
        let entries = ds.len() * thetas.len() * geom.xs.len();
        let cache = (entries <= STEERING_CACHE_LIMIT).then(|| {
            let mut c = Vec::with_capacity(entries);
            for &d in &ds {
                for t in &thetas {
                    c.extend(geom.steering(d, t.sin()).into_iter().map(|z| z.conj()));
                }
            }
            c
        });
        Ok(Self {
            geom,
            ds,
            thetas,
            cache,
            objective: mc.objective,
            prior: *prior,
        })
    }

    fn score(&self, inner: Complex64) -> f64 {
        match self.objective {
            Objective::Noncoherent => inner.norm_sqr(),
            Objective::Coherent => inner.re,
        }
    }

    fn score_at(&self, d: f64, theta: f64, r: &[Complex64]) -> f64 {
        let s = theta.sin();
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, z) in self.geom.xs.iter().zip(r) {
            let phase = self.geom.wavenumber * element_distance(x, d, s);
            acc += Complex64::from_polar(1.0, phase) * z;
        }
        self.score(acc)
    }

    fn score_node(&self, i: usize, j: usize, r: &[Complex64]) -> f64 {
        let k = r.len();
        match &self.cache {
            Some(c) => {
                let off = (i * self.thetas.len() + j) * k;
                let acc: Complex64 = c[off..off + k].iter().zip(r).map(|(a, b)| a * b).sum();
                self.score(acc)
            }
            None => self.score_at(self.ds[i], self.thetas[j], r),
        }
    }

    /// Largest spacing per axis, for the `step^2 / 12` quantization floor.
    pub fn max_steps(&self) -> (f64, f64) {
        let step = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        (step(&self.ds), step(&self.thetas))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlEstimate {
    pub d: f64,
    pub theta: f64,
    pub node: (usize, usize),
    /// Another node attained the same grid maximum; the lowest index was kept.
    pub tied: bool,
}

fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let (d1, d2) = (x[1] - x[0], x[2] - x[1]);
    let (s1, s2) = ((y[1] - y[0]) / d1, (y[2] - y[1]) / d2);
    let curv = (s2 - s1) / (x[2] - x[0]);
    if !(curv < 0.0) {
        return x[1];
    }
    // Vertex of the interpolating parabola, kept inside the bracket.
    let v = 0.5 * (x[0] + x[1]) - s1 / (2.0 * curv);
    v.clamp(x[0], x[2])
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let tol = 1e-10 * (a.abs() + b.abs()).max(1e-6);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn bracket(nodes: &[f64], i: usize) -> (f64, f64) {
    (nodes[i.saturating_sub(1)], nodes[(i + 1).min(nodes.len() - 1)])
}

/// Grid-search ML estimate, optionally refined per axis inside the
/// neighbouring grid cells.
pub fn ml_grid_search(grid: &SearchGrid, obs: &Observation, refine: Refine) -> MlEstimate {
    let r = &obs.r;
    let (nd, nt) = (grid.ds.len(), grid.thetas.len());
    let mut scores = Vec::with_capacity(nd * nt);
    let (mut best, mut node, mut tied) = (f64::NEG_INFINITY, (0, 0), false);
    for i in 0..nd {
        for j in 0..nt {
            let v = grid.score_node(i, j, r);
            scores.push(v);
            if v > best {
                best = v;
                node = (i, j);
                tied = false;
            } else if v == best {
                tied = true;
            }
        }
    }
    let p = &grid.prior;
    let clamp = |d: f64, t: f64| (d.clamp(p.d_min(), p.d_max()), t.clamp(p.theta_min(), p.theta_max()));
    if refine == Refine::Off {
        let (d, theta) = clamp(grid.ds[node.0], grid.thetas[node.1]);
        return MlEstimate { d, theta, node, tied };
    }

    // Quantization can rank a grating or side lobe above the cell holding the
    // true peak, so the strongest few local maxima are refined and compared.
    let mut peaks: Vec<(usize, usize)> = Vec::new();
    for i in 0..nd {
        for j in 0..nt {
            let v = scores[i * nt + j];
            let mut is_peak = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nd as i64 || b >= nt as i64 {
                        continue;
                    }
                    if scores[a as usize * nt + b as usize] > v {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                peaks.push((i, j));
            }
        }
    }
    peaks.sort_by(|a, b| {
        scores[b.0 * nt + b.1]
            .total_cmp(&scores[a.0 * nt + a.1])
            .then(a.cmp(b))
    });
    peaks.truncate(REFINED_PEAKS);

    let mut out = (grid.ds[node.0], grid.thetas[node.1], best, node);
    for &(i, j) in &peaks {
        let (d, t) = refine_node(grid, r, i, j, scores[i * nt + j], refine);
        let (d, t) = clamp(d, t);
        let v = grid.score_at(d, t, r);
        if v > out.2 {
            out = (d, t, v, (i, j));
        }
    }
    let (d, theta) = clamp(out.0, out.1);
    MlEstimate {
        d,
        theta,
        node: out.3,
        tied,
    }
}

// Local maxima of the grid score that get refined.
const REFINED_PEAKS: usize = 4;

fn refine_node(grid: &SearchGrid, r: &[Complex64], i: usize, j: usize, at_node: f64, refine: Refine) -> (f64, f64) {
    let (mut d, mut theta) = (grid.ds[i], grid.thetas[j]);
    let angle_free = grid.thetas.len() > 1;
    match refine {
        Refine::Off => {}
        Refine::Parabolic => {
            if i > 0 && i + 1 < grid.ds.len() {
                let x = [grid.ds[i - 1], grid.ds[i], grid.ds[i + 1]];
                let y = [grid.score_node(i - 1, j, r), at_node, grid.score_node(i + 1, j, r)];
                d = parabolic_vertex(x, y);
            }
            if angle_free && j > 0 && j + 1 < grid.thetas.len() {
                let x = [grid.thetas[j - 1], grid.thetas[j], grid.thetas[j + 1]];
                let y = [grid.score_node(i, j - 1, r), at_node, grid.score_node(i, j + 1, r)];
                theta = parabolic_vertex(x, y);
            }
        }
        Refine::Golden => {
            let (dlo, dhi) = bracket(&grid.ds, i);
            let (tlo, thi) = bracket(&grid.thetas, j);
            let rounds = if angle_free { 3 } else { 1 };
            for _ in 0..rounds {
                d = golden_max(|x| grid.score_at(x, theta, r), dlo, dhi);
                if angle_free {
                    theta = golden_max(|t| grid.score_at(d, t, r), tlo, thi);
                }
            }
        }
    }
    // Never worse than the node itself.
    if grid.score_at(d, theta, r) < at_node {
        (grid.ds[i], grid.thetas[j])
    } else {
        (d, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseEstimate {
    pub mse_d: f64,
    pub mse_theta: f64,
    pub stderr_d: f64,
    pub stderr_theta: f64,
    pub trials: usize,
    /// `step^2 / 12` for the coarsest distance and angle grid cells.
    pub grid_floor_d: f64,
    pub grid_floor_theta: f64,
    pub ties: usize,
}

fn draw_truth(prior: &PriorBox, rng: &mut TrialStream) -> PolarPosition {
    let d = prior.d_min() + rng.uniform() * prior.span_d();
    let t = prior.theta_min() + rng.uniform() * prior.span_theta();
    PolarPosition::new(d, t.min(prior.theta_max())).expect("draw inside a valid prior box")
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_trials(grid: &SearchGrid, snr: SnrSpec, mc: &MonteCarloConfig) -> MseEstimate {
    let prior = grid.prior;
    let errors: Vec<(f64, f64, bool)> = (0..mc.num_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = TrialStream::new(mc.seed, trial as u64);
            let truth = draw_truth(&prior, &mut rng);
            let obs = simulate_with(&grid.geom, snr, truth, &mut rng);
            let est = ml_grid_search(grid, &obs, mc.refine);
            ((est.d - truth.d()).powi(2), (est.theta - truth.theta()).powi(2), est.tied)
        })
        .collect();
    let ed: Vec<f64> = errors.iter().map(|e| e.0).collect();
    let et: Vec<f64> = errors.iter().map(|e| e.1).collect();
    let (mse_d, stderr_d) = mean_and_stderr(&ed);
    let (mse_theta, stderr_theta) = mean_and_stderr(&et);
    let (sd, st) = grid.max_steps();
    MseEstimate {
        mse_d,
        mse_theta,
        stderr_d,
        stderr_theta,
        trials: mc.num_trials,
        grid_floor_d: sd * sd / 12.0,
        grid_floor_theta: st * st / 12.0,
        ties: errors.iter().filter(|e| e.2).count(),
    }
}

/// ML mean-squared errors with truths drawn uniformly over the prior.
pub fn monte_carlo_mse(
    cfg: &ArrayConfig,
    snr: SnrSpec,
    prior: &PriorBox,
    mc: &MonteCarloConfig,
) -> Result<MseEstimate> {
    let grid = SearchGrid::new(cfg, prior, mc)?;
    Ok(run_trials(&grid, snr, mc))
}

/// Trials against a prebuilt search grid; `grid` must come from the same prior.
pub fn monte_carlo_mse_on_grid(grid: &SearchGrid, snr: SnrSpec, mc: &MonteCarloConfig) -> MseEstimate {
    run_trials(grid, snr, mc)
}

/// Same trials (truths and noise) at every SNR; the search grid is built once.
pub fn monte_carlo_mse_sweep(
    cfg: &ArrayConfig,
    snrs: &[SnrSpec],
    prior: &PriorBox,
    mc: &MonteCarloConfig,
) -> Result<Vec<MseEstimate>> {
    let grid = SearchGrid::new(cfg, prior, mc)?;
    Ok(snrs.iter().map(|&s| run_trials(&grid, s, mc)).collect())
}
