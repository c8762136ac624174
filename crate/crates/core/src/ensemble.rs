//! Monte Carlo ensembles of seeded paths and the statistics that make the
//! long-run claims checkable: ergodic averages, two-window histograms,
//! the growth rate of `ln Y`, extinction frequency and population range.
//!
//! Paths run in parallel but are merged in path-index order, so every
//! statistic is independent of scheduling.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::conditions::{DfeBoundReport, ExtinctionReport};
use crate::integrate::{drive_path, SimConfig, SimError, EXTINCTION_FLOOR};
use crate::model::{equilibria, ModelParams, NoiseIntensities, State};
use crate::stats::{mean_and_half_width, OnlineRegression};

/// Required share of extinct paths for the extinction verdict.
pub const EXTINCTION_FRACTION_THRESHOLD: f64 = 0.95;

/// Floor on the DFE mean-square threshold when the bound itself is zero.
pub const DFE_BOUND_FLOOR: f64 = 1e-3;

const MERGE_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("all {0} paths aborted; first: {1}")]
    AllPathsAborted(usize, SimError),
    #[error("comparison window {0} holds no samples")]
    EmptyWindow(u8),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub sim: SimConfig,
    /// Statistics only accumulate for t ≥ burn_in.
    pub burn_in: f64,
    pub histogram_bins: usize,
    /// Fraction of [burn_in, t_final] assigned to the first window.
    pub window_split: f64,
}

impl EnsembleConfig {
    pub fn new(sim: SimConfig, n_paths: usize) -> Self {
        Self {
            n_paths,
            sim,
            burn_in: 0.0,
            histogram_bins: 20,
            window_split: 0.5,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.sim.violations();
        if self.n_paths == 0 {
            out.push("ensemble.n_paths must be at least 1".into());
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.sim.t_final) {
            out.push(format!(
                "ensemble.burn_in must lie in [0, t_final), got {}",
                self.burn_in
            ));
        }
        if self.histogram_bins < 2 {
            out.push(format!(
                "ensemble.histogram_bins must be at least 2, got {}",
                self.histogram_bins
            ));
        }
        if !(self.window_split > 0.0 && self.window_split < 1.0) {
            out.push(format!(
                "ensemble.window_split must lie in (0, 1), got {}",
                self.window_split
            ));
        }
        out
    }

    /// Boundary between the two comparison windows.
    pub fn split_time(&self) -> f64 {
        self.burn_in + self.window_split * (self.sim.t_final - self.burn_in)
    }
}

/// Histogram over the box [0, upper₀] × [0, upper₁] × [0, upper₂]; samples
/// outside the box land in the nearest edge bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram3 {
    bins: usize,
    upper: [f64; 3],
    counts: Vec<u64>,
    total: u64,
}

impl Histogram3 {
    pub fn new(bins: usize, upper: [f64; 3]) -> Self {
        Self {
            bins,
            upper,
            counts: vec![0; bins * bins * bins],
            total: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn upper(&self) -> [f64; 3] {
        self.upper
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn axis_bin(&self, v: f64, axis: usize) -> usize {
        let f = v / self.upper[axis] * self.bins as f64;
        if f.is_nan() || f < 0.0 {
            0
        } else {
            (f as usize).min(self.bins - 1)
        }
    }

    pub fn add(&mut self, s: &State) {
        let [i, j, k] = [
            self.axis_bin(s.x, 0),
            self.axis_bin(s.y, 1),
            self.axis_bin(s.z, 2),
        ];
        self.counts[(i * self.bins + j) * self.bins + k] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &Histogram3) {
        debug_assert_eq!(self.bins, other.bins);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    /// Normalised mass of every bin, row-major in (x, y, z).
    pub fn masses(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|c| *c as f64 / t).collect()
    }

    /// Populated bins as ((i, j, k), mass).
    pub fn nonzero(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        let b = self.bins;
        let t = self.total.max(1) as f64;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(move |(idx, c)| ([idx / (b * b), (idx / b) % b, idx % b], *c as f64 / t))
    }

    pub fn total_variation(&self, other: &Histogram3) -> f64 {
        let (a, b) = (self.masses(), other.masses());
        0.5 * a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum::<f64>()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,j,k,mass")?;
        for ([i, j, k], m) in self.nonzero() {
            writeln!(w, "{i},{j},{k},{m}")?;
        }
        w.flush()
    }
}

/// Per-axis upper edge: three times the largest of the endemic, disease-free
/// and initial coordinates.
pub fn histogram_box(p: &ModelParams, initial: &State) -> [f64; 3] {
    let eq = equilibria(p);
    let ee = eq.ee.map(|s| s.as_array()).unwrap_or([0.0; 3]);
    let dfe = eq.dfe.as_array();
    let init = initial.as_array();
    [0, 1, 2].map(|i| 3.0 * ee[i].max(dfe[i]).max(init[i]).max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub index: usize,
    /// Least-squares slope of ln Y(t) over the post-burn-in samples preceding
    /// extinction; `None` when fewer than two such samples exist.
    pub lyapunov_slope: Option<f64>,
    pub extinct_at: Option<f64>,
    pub first_nonpositive: Option<(usize, usize)>,
    pub dfe_ms: f64,
    pub ee_ms: Option<f64>,
    pub ee_ms_windows: Option<[f64; 2]>,
    pub n_min: f64,
    pub n_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub mean: f64,
    /// 95% normal-approximation half-width; NaN for a single path.
    pub half_width: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub aborted_paths: usize,
    pub aborts: Vec<(usize, SimError)>,
    pub burn_in: f64,
    pub split_time: f64,
    /// Time-and-ensemble average of (X − Λ/μ)² + Y² + Z².
    pub dfe_ms_average: f64,
    /// Same quantity centred at the endemic equilibrium, when it exists.
    pub ee_ms_average: Option<f64>,
    /// `ee_ms_average` restricted to each comparison window.
    pub ee_ms_windows: Option<[f64; 2]>,
    pub lyapunov_y: Option<LyapunovEstimate>,
    pub extinction_fraction: f64,
    pub hist_w1: Histogram3,
    pub hist_w2: Histogram3,
    pub n_min: f64,
    pub n_max: f64,
    pub paths: Vec<PathSummary>,
}

impl EnsembleStats {
    pub fn completed_paths(&self) -> usize {
        self.paths.len()
    }

    /// Per-path CSV with header `path,lyapunov_slope,extinct_at`.
    pub fn write_paths_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "path,lyapunov_slope,extinct_at")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for p in &self.paths {
            writeln!(
                w,
                "{},{},{}",
                p.index,
                opt(p.lyapunov_slope),
                opt(p.extinct_at)
            )?;
        }
        w.flush()
    }
}

/// Interval-weighted running mean.
#[derive(Debug, Clone, Copy, Default)]
struct TimeAverage {
    integral: f64,
    span: f64,
}

impl TimeAverage {
    fn push(&mut self, value: f64, width: f64) {
        self.integral += value * width;
        self.span += width;
    }

    fn mean(&self) -> Option<f64> {
        (self.span > 0.0).then(|| self.integral / self.span)
    }
}

struct PathResult {
    summary: PathSummary,
    hist: [Histogram3; 2],
}

fn run_one(
    cfg: &EnsembleConfig,
    p: &ModelParams,
    n: &NoiseIntensities,
    upper: [f64; 3],
    index: usize,
) -> Result<PathResult, SimError> {
    let eq = equilibria(p);
    let split = cfg.split_time();
    let mut hist = [
        Histogram3::new(cfg.histogram_bins, upper),
        Histogram3::new(cfg.histogram_bins, upper),
    ];
    let mut dfe_avg = TimeAverage::default();
    let mut ee_avg = [TimeAverage::default(); 2];
    let mut regression = OnlineRegression::new();
    let mut extinct = false;
    let mut n_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut prev: Option<(f64, State)> = None;

    let outcome = drive_path(&cfg.sim, p, n, index as u64, |_, t, s| {
        if let Some((t0, s0)) = prev {
            if t0 >= cfg.burn_in {
                let w = t - t0;
                dfe_avg.push(s0.distance_sq(&eq.dfe), w);
                if let Some(ee) = &eq.ee {
                    ee_avg[usize::from(t0 >= split)].push(s0.distance_sq(ee), w);
                }
            }
        }
        prev = Some((t, *s));

        if s.y < EXTINCTION_FLOOR {
            extinct = true;
        }
        if t < cfg.burn_in {
            return;
        }
        hist[usize::from(t >= split)].add(s);
        let total = s.total();
        n_range = (n_range.0.min(total), n_range.1.max(total));
        if !extinct {
            regression.push(t, s.y.ln());
        }
    })?;

    let ee_windows = eq
        .ee
        .and_then(|_| Some([ee_avg[0].mean()?, ee_avg[1].mean()?]));
    let ee_ms = eq.ee.map(|_| {
        let span = ee_avg[0].span + ee_avg[1].span;
        (ee_avg[0].integral + ee_avg[1].integral) / span
    });
    Ok(PathResult {
        summary: PathSummary {
            index,
            lyapunov_slope: regression.slope(),
            extinct_at: outcome.extinct_at,
            first_nonpositive: outcome.first_nonpositive,
            dfe_ms: dfe_avg.mean().unwrap_or(0.0),
            ee_ms,
            ee_ms_windows: ee_windows,
            n_min: n_range.0,
            n_max: n_range.1,
        },
        hist,
    })
}

/// Run `cfg.n_paths` independent paths (path `i` uses random stream `i`).
/// Aborted paths are excluded from every statistic and tallied.
pub fn run_ensemble(
    cfg: &EnsembleConfig,
    p: &ModelParams,
    n: &NoiseIntensities,
) -> Result<EnsembleStats, EnsembleError> {
    let v = cfg.violations();
    if !v.is_empty() {
        return Err(EnsembleError::InvalidConfig(v));
    }
    let upper = histogram_box(p, &cfg.sim.initial);
    let mut hist_w1 = Histogram3::new(cfg.histogram_bins, upper);
    let mut hist_w2 = Histogram3::new(cfg.histogram_bins, upper);
    let mut paths = Vec::with_capacity(cfg.n_paths);
    let mut aborts = Vec::new();

    let indices: Vec<usize> = (0..cfg.n_paths).collect();
    for chunk in indices.chunks(MERGE_CHUNK) {
        let results: Vec<_> = chunk
            .par_iter()
            .map(|i| (*i, run_one(cfg, p, n, upper, *i)))
            .collect();
        for (i, r) in results {
            match r {
                Ok(res) => {
                    hist_w1.merge(&res.hist[0]);
                    hist_w2.merge(&res.hist[1]);
                    paths.push(res.summary);
                }
                Err(e) => aborts.push((i, e)),
            }
        }
    }

    if paths.is_empty() {
        let first = aborts[0].1.clone();
        return Err(EnsembleError::AllPathsAborted(cfg.n_paths, first));
    }

    let count = paths.len() as f64;
    let mean_of = |f: &dyn Fn(&PathSummary) -> f64| paths.iter().map(f).sum::<f64>() / count;
    let dfe_ms_average = mean_of(&|s| s.dfe_ms);
    let ee_ms_average = paths[0].ee_ms.map(|_| mean_of(&|s| s.ee_ms.unwrap_or(0.0)));
    let ee_ms_windows = paths
        .iter()
        .all(|s| s.ee_ms_windows.is_some())
        .then(|| [0, 1].map(|w| mean_of(&|s| s.ee_ms_windows.map_or(0.0, |v| v[w]))));
    let slopes: Vec<f64> = paths.iter().filter_map(|s| s.lyapunov_slope).collect();
    let lyapunov_y = mean_and_half_width(&slopes).map(|(mean, half_width)| LyapunovEstimate {
        mean,
        half_width,
        n_paths: slopes.len(),
    });
    let extinct = paths.iter().filter(|s| s.extinct_at.is_some()).count();
    let n_min = paths.iter().map(|s| s.n_min).fold(f64::INFINITY, f64::min);
    let n_max = paths
        .iter()
        .map(|s| s.n_max)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(EnsembleStats {
        n_paths: cfg.n_paths,
        aborted_paths: aborts.len(),
        aborts,
        burn_in: cfg.burn_in,
        split_time: cfg.split_time(),
        dfe_ms_average,
        ee_ms_average,
        ee_ms_windows,
        lyapunov_y,
        extinction_fraction: extinct as f64 / count,
        hist_w1,
        hist_w2,
        n_min,
        n_max,
        paths,
    })
}

/// Total-variation distance between the two window histograms.
pub fn stationary_distance(stats: &EnsembleStats) -> Result<f64, EnsembleError> {
    if stats.hist_w1.total() == 0 {
        return Err(EnsembleError::EmptyWindow(1));
    }
    if stats.hist_w2.total() == 0 {
        return Err(EnsembleError::EmptyWindow(2));
    }
    Ok(stats.hist_w1.total_variation(&stats.hist_w2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inapplicable => "INAPPLICABLE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub verdict: Verdict,
    pub observed: f64,
    pub threshold: f64,
}

/// Compares the DFE mean-square average with the theoretical bound inflated
/// by `tolerance`; a zero bound uses [`DFE_BOUND_FLOOR`].
pub fn dfe_bound_check(stats: &EnsembleStats, report: &DfeBoundReport, tolerance: f64) -> Check {
    let observed = stats.dfe_ms_average;
    match report.bound_value {
        Some(bound) if report.hypotheses_hold => {
            let threshold = (bound * (1.0 + tolerance)).max(DFE_BOUND_FLOOR);
            Check {
                verdict: Verdict::from_bool(observed <= threshold),
                observed,
                threshold,
            }
        }
        _ => Check {
            verdict: Verdict::Inapplicable,
            observed,
            threshold: f64::NAN,
        },
    }
}

/// Population cap used by [`boundedness_check`]: 10 × max(N(0), Λ/μ).
pub fn population_cap(p: &ModelParams, initial: &State) -> f64 {
    10.0 * initial.total().max(p.lambda() / p.mu())
}

/// Passes when every post-burn-in total population lies in (0, cap).
/// `observed` carries n_max; n_min is in the stats.
pub fn boundedness_check(stats: &EnsembleStats, p: &ModelParams, initial: &State) -> Check {
    let threshold = population_cap(p, initial);
    Check {
        verdict: Verdict::from_bool(stats.n_min > 0.0 && stats.n_max < threshold),
        observed: stats.n_max,
        threshold,
    }
}

/// Passes when extinction is predicted and at least 95% of paths went
/// extinct with a negative mean growth rate of ln Y.
pub fn extinction_check(stats: &EnsembleStats, report: &ExtinctionReport) -> Check {
    if !report.predicts_extinction {
        return Check {
            verdict: Verdict::Inapplicable,
            observed: stats.extinction_fraction,
            threshold: EXTINCTION_FRACTION_THRESHOLD,
        };
    }
    let decaying = stats.lyapunov_y.is_some_and(|l| l.mean < 0.0);
    Check {
        verdict: Verdict::from_bool(
            decaying && stats.extinction_fraction >= EXTINCTION_FRACTION_THRESHOLD,
        ),
        observed: stats.extinction_fraction,
        threshold: EXTINCTION_FRACTION_THRESHOLD,
    }
}
