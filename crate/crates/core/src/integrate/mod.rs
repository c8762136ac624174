//! Fixed-step time integration of the SIRS system.
//!
//! Four schemes share one driver: classical Runge–Kutta for the noiseless
//! system, Euler–Maruyama, the Milstein recursion exactly as used for the
//! reference figures, and a Milstein variant whose correction terms follow
//! the actual diffusion coefficients.
//!
//! Randomness comes from a ChaCha8 generator seeded with the run seed; path
//! `i` of an ensemble uses stream `i`, so results do not depend on the order
//! in which paths are scheduled. Each step consumes ξ₁, ξ₂, ξ₃, ξ₄ in that
//! order.

mod convergence;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{drift, ModelParams, NoiseIntensities, State};

pub use convergence::{strong_convergence, ConvergenceStudy};

/// Y below this many individuals counts as extinct.
pub const EXTINCTION_FLOOR: f64 = 1e-6;

/// Brownian increments ΔB₁..ΔB₄ over one step.
pub type Increments = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Rk4,
    EulerMaruyama,
    MilsteinPaper,
    MilsteinCorrected,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Rk4,
        Scheme::EulerMaruyama,
        Scheme::MilsteinPaper,
        Scheme::MilsteinCorrected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rk4 => "rk4",
            Scheme::EulerMaruyama => "euler-maruyama",
            Scheme::MilsteinPaper => "milstein-paper",
            Scheme::MilsteinCorrected => "milstein-corrected",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self != Scheme::Rk4
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| SimError::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositivityPolicy {
    /// Leave the discrete state untouched.
    None,
    /// Project negative components to zero after each step.
    #[default]
    ClampAtZero,
}

impl PositivityPolicy {
    pub fn name(self) -> &'static str {
        match self {
            PositivityPolicy::None => "none",
            PositivityPolicy::ClampAtZero => "clamp",
        }
    }
}

impl FromStr for PositivityPolicy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(PositivityPolicy::None),
            "clamp" | "clamp-at-zero" => Ok(PositivityPolicy::ClampAtZero),
            _ => Err(SimError::InvalidConfig(format!(
                "unknown positivity policy `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("non-finite state {state} at step {step} (t = {time})")]
    NonFinite {
        step: usize,
        time: f64,
        state: State,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub initial: State,
    pub seed: u64,
    pub scheme: Scheme,
    pub positivity: PositivityPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            t_final: 400.0,
            initial: State::reference_initial(),
            seed: 0,
            scheme: Scheme::MilsteinCorrected,
            positivity: PositivityPolicy::ClampAtZero,
        }
    }
}

impl SimConfig {
    /// All violated constraints, empty when the config is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            out.push(format!(
                "sim.dt must be positive and finite, got {}",
                self.dt
            ));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            out.push(format!(
                "sim.t_final must be finite and at least dt, got {}",
                self.t_final
            ));
        }
        if !(self.initial.is_finite() && self.initial.is_admissible()) {
            out.push(format!(
                "initial state must be strictly positive, got {}",
                self.initial
            ));
        }
        if out.is_empty() && self.t_final / self.dt >= u32::MAX as f64 {
            out.push("sim.t_final / sim.dt exceeds the step limit".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(v.join("; ")))
        }
    }

    /// Number of steps, ceil(t_final / dt) up to round-off.
    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }

    /// Grid time of step `k`; the last point is exactly `t_final`.
    pub fn time_at(&self, k: usize) -> f64 {
        if k >= self.n_steps() {
            self.t_final
        } else {
            k as f64 * self.dt
        }
    }

    fn step_size(&self, k: usize, n: usize) -> f64 {
        if k + 1 < n {
            return self.dt;
        }
        let last = self.t_final - (n - 1) as f64 * self.dt;
        if (last - self.dt).abs() <= 1e-9 * self.dt {
            self.dt
        } else {
            last
        }
    }
}

/// Classical four-stage Runge–Kutta step of the noiseless system.
pub fn step_rk4(s: &State, p: &ModelParams, dt: f64) -> State {
    let at = |base: &State, k: &[f64; 3], h: f64| {
        State::new(base.x + h * k[0], base.y + h * k[1], base.z + h * k[2])
    };
    let k1 = drift(s, p);
    let k2 = drift(&at(s, &k1, dt / 2.0), p);
    let k3 = drift(&at(s, &k2, dt / 2.0), p);
    let k4 = drift(&at(s, &k3, dt), p);
    let comb = |i: usize| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    State::new(s.x + dt * comb(0), s.y + dt * comb(1), s.z + dt * comb(2))
}

fn euler_drift(s: &State, p: &ModelParams, dt: f64) -> [f64; 3] {
    let f = drift(s, p);
    [s.x + f[0] * dt, s.y + f[1] * dt, s.z + f[2] * dt]
}

/// Euler–Maruyama step driven by Brownian increments `dw`.
pub fn euler_maruyama_increment(
    s: &State,
    p: &ModelParams,
    n: &NoiseIntensities,
    dt: f64,
    dw: &Increments,
) -> State {
    let [s1, s2, s3, s4] = n.as_array();
    let [x, y, z] = euler_drift(s, p, dt);
    let xy = s.x * s.y;
    State::new(
        x + (s1 * s.x * dw[0] - s4 * xy * dw[3]),
        y + (s2 * s.y * dw[1] + s4 * xy * dw[3]),
        z + s3 * s.z * dw[2],
    )
}

/// The printed Milstein recursion driven by Brownian increments.
///
/// Both the x and y updates add `xy[σ₄ΔB₄ + ½σ₄²(ΔB₄² − Δt)]`, so the sign of
/// the σ₄ term in x is opposite to the continuous model, and the σ₄
/// correction multiplies xy rather than the derivative of the coefficient.
pub fn milstein_paper_increment(
    s: &State,
    p: &ModelParams,
    n: &NoiseIntensities,
    dt: f64,
    dw: &Increments,
) -> State {
    let [s1, s2, s3, s4] = n.as_array();
    let [x, y, z] = euler_drift(s, p, dt);
    let bracket = |sigma: f64, w: f64| sigma * w + 0.5 * sigma * sigma * (w * w - dt);
    let coupling = s.x * s.y * bracket(s4, dw[3]);
    State::new(
        x + s.x * bracket(s1, dw[0]) + coupling,
        y + s.y * bracket(s2, dw[1]) + coupling,
        z + s.z * bracket(s3, dw[2]),
    )
}

/// Milstein step for the model's own diffusion field, driven by increments.
///
/// Diagonal terms use the full generator `Lʲgʲ`; for the coupling column
/// that is `σ₄²xy(y − x)·(1, −1, 0)`. The non-commuting pairs (1,4) and (2,4)
/// contribute the symmetric half `½(Lʲgᵏ + Lᵏgʲ)ΔBⱼΔBₖ`; Lévy areas are
/// not simulated.
pub fn milstein_corrected_increment(
    s: &State,
    p: &ModelParams,
    n: &NoiseIntensities,
    dt: f64,
    dw: &Increments,
) -> State {
    let [s1, s2, s3, s4] = n.as_array();
    let [x, y, z] = euler_drift(s, p, dt);
    let bracket = |sigma: f64, w: f64| sigma * w + 0.5 * sigma * sigma * (w * w - dt);
    let xy = s.x * s.y;
    let diag4 = 0.5 * s4 * s4 * xy * (s.y - s.x) * (dw[3] * dw[3] - dt);
    let cross14 = s1 * s4 * xy * dw[0] * dw[3];
    let cross24 = s2 * s4 * xy * dw[1] * dw[3];
    let coupling_x = -s4 * xy * dw[3] + diag4 - cross14 - 0.5 * cross24;
    let coupling_y = s4 * xy * dw[3] - diag4 + 0.5 * cross14 + cross24;
    State::new(
        x + s.x * bracket(s1, dw[0]) + coupling_x,
        y + s.y * bracket(s2, dw[1]) + coupling_y,
        z + s.z * bracket(s3, dw[2]),
    )
}

fn increments_from_normals(xi: &[f64; 4], dt: f64) -> Increments {
    let sq = dt.sqrt();
    xi.map(|v| v * sq)
}

/// Euler–Maruyama step from four standard-normal draws.
pub fn step_euler_maruyama(
    s: &State,
    p: &ModelParams,
    n: &NoiseIntensities,
    dt: f64,
    xi: &[f64; 4],
) -> State {
    euler_maruyama_increment(s, p, n, dt, &increments_from_normals(xi, dt))
}

/// Printed Milstein step from four standard-normal draws.
pub fn step_milstein_paper(
    s: &State,
    p: &ModelParams,
    n: &NoiseIntensities,
    dt: f64,
    xi: &[f64; 4],
) -> State {
    milstein_paper_increment(s, p, n, dt, &increments_from_normals(xi, dt))
}

/// Corrected Milstein step from four standard-normal draws.
pub fn step_milstein_corrected(
    s: &State,
    p: &ModelParams,
    n: &NoiseIntensities,
    dt: f64,
    xi: &[f64; 4],
) -> State {
    milstein_corrected_increment(s, p, n, dt, &increments_from_normals(xi, dt))
}

/// One step of `scheme` with explicit Brownian increments (ignored by RK4).
pub fn advance(
    scheme: Scheme,
    s: &State,
    p: &ModelParams,
    n: &NoiseIntensities,
    dt: f64,
    dw: &Increments,
) -> State {
    match scheme {
        Scheme::Rk4 => step_rk4(s, p, dt),
        Scheme::EulerMaruyama => euler_maruyama_increment(s, p, n, dt, dw),
        Scheme::MilsteinPaper => milstein_paper_increment(s, p, n, dt, dw),
        Scheme::MilsteinCorrected => milstein_corrected_increment(s, p, n, dt, dw),
    }
}

/// Random stream for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normals<R: Rng>(rng: &mut R) -> [f64; 4] {
    [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ]
}

/// Events recorded while driving one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub steps: usize,
    pub final_state: State,
    /// (step index, component 0/1/2) of the first state outside the open octant.
    pub first_nonpositive: Option<(usize, usize)>,
    pub extinct_at: Option<f64>,
}

/// Drive one path, calling `observe(k, t_k, state_k)` for the initial point
/// and after every step (after the positivity policy is applied).
pub fn drive_path<F>(
    cfg: &SimConfig,
    p: &ModelParams,
    n: &NoiseIntensities,
    path_index: u64,
    mut observe: F,
) -> Result<PathOutcome, SimError>
where
    F: FnMut(usize, f64, &State),
{
    cfg.validate()?;
    let steps = cfg.n_steps();
    let mut rng = path_rng(cfg.seed, path_index);
    let mut state = cfg.initial;
    let mut outcome = PathOutcome {
        steps,
        final_state: state,
        first_nonpositive: None,
        extinct_at: None,
    };
    observe(0, 0.0, &state);

    for k in 0..steps {
        let h = cfg.step_size(k, steps);
        let dw = if cfg.scheme.is_stochastic() {
            increments_from_normals(&standard_normals(&mut rng), h)
        } else {
            [0.0; 4]
        };
        state = advance(cfg.scheme, &state, p, n, h, &dw);
        let t = cfg.time_at(k + 1);
        if !state.is_finite() {
            return Err(SimError::NonFinite {
                step: k + 1,
                time: t,
                state,
            });
        }
        if outcome.first_nonpositive.is_none() {
            if let Some(c) = state.first_nonpositive() {
                outcome.first_nonpositive = Some((k + 1, c));
            }
        }
        if cfg.positivity == PositivityPolicy::ClampAtZero {
            state = State::new(state.x.max(0.0), state.y.max(0.0), state.z.max(0.0));
        }
        if outcome.extinct_at.is_none() && state.y < EXTINCTION_FLOOR {
            outcome.extinct_at = Some(t);
        }
        observe(k + 1, t, &state);
    }
    outcome.final_state = state;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub first_nonpositive: Option<(usize, usize)>,
    pub extinct_at: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        *self
            .states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// CSV with header `t,x,y,z`, shortest round-trip decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,y,z")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(w, "{},{},{},{}", t, s.x, s.y, s.z)?;
        }
        w.flush()
    }
}

/// Simulate path 0 of `cfg`, retaining every grid point.
pub fn simulate(
    cfg: &SimConfig,
    p: &ModelParams,
    n: &NoiseIntensities,
) -> Result<Trajectory, SimError> {
    simulate_path(cfg, p, n, 0)
}

pub fn simulate_path(
    cfg: &SimConfig,
    p: &ModelParams,
    n: &NoiseIntensities,
    path_index: u64,
) -> Result<Trajectory, SimError> {
    let cap = if cfg.violations().is_empty() {
        cfg.n_steps() + 1
    } else {
        0
    };
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let outcome = drive_path(cfg, p, n, path_index, |_, t, s| {
        times.push(t);
        states.push(*s);
    })?;
    Ok(Trajectory {
        times,
        states,
        first_nonpositive: outcome.first_nonpositive,
        extinct_at: outcome.extinct_at,
    })
}
