//! Deterministic and stochastic SIRS vector fields.
//!
//! The compartments are susceptible `x`, infected `y` and recovered `z`.
//! The stochastic system perturbs each compartment with multiplicative
//! white noise and couples `x` and `y` through a fourth Brownian motion
//! acting on the incidence term:
//!
//! ```text
//! dX = (Λ + ηZ − βXY − μX) dt − σ₄XY dB₄ + σ₁X dB₁
//! dY = (βXY − (α+μ+γ)Y) dt   + σ₄XY dB₄ + σ₂Y dB₂
//! dZ = (γY − (η+μ)Z) dt                 + σ₃Z dB₃
//! ```
//!
//! Rates are per unit time and compartments are in individuals; units are
//! documented, not enforced by the types.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` must be strictly positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("noise intensity `{name}` must be non-negative and finite, got {value}")]
    NegativeNoise { name: &'static str, value: f64 },
    #[error("unknown parameter `{0}`")]
    UnknownField(String),
}

/// Names accepted by [`ModelParams::with_field`], in declaration order.
pub const PARAM_NAMES: [&str; 6] = ["lambda", "beta", "eta", "mu", "gamma", "alpha"];

/// Names accepted by [`NoiseIntensities::with_field`].
pub const NOISE_NAMES: [&str; 4] = ["sigma1", "sigma2", "sigma3", "sigma4"];

/// The six deterministic rates of the SIRS model. Every field is strictly
/// positive; invalid values are rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    beta: f64,
    eta: f64,
    mu: f64,
    gamma: f64,
    alpha: f64,
}

impl ModelParams {
    pub fn new(
        lambda: f64,
        beta: f64,
        eta: f64,
        mu: f64,
        gamma: f64,
        alpha: f64,
    ) -> Result<Self, ModelError> {
        let p = Self {
            lambda,
            beta,
            eta,
            mu,
            gamma,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reference parameter set with μ = 0.05, for which R₀ < 1.
    pub fn reference_subcritical() -> Self {
        Self::reference(0.05)
    }

    /// Reference parameter set with μ = 0.006, for which R₀ > 1.
    pub fn reference_supercritical() -> Self {
        Self::reference(0.006)
    }

    fn reference(mu: f64) -> Self {
        Self {
            lambda: 0.33,
            beta: 0.013,
            eta: 0.023,
            mu,
            gamma: 0.04,
            alpha: 0.006,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in PARAM_NAMES.iter().zip(self.as_array()) {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Every invalid field, not just the first.
    pub fn violations(
        lambda: f64,
        beta: f64,
        eta: f64,
        mu: f64,
        gamma: f64,
        alpha: f64,
    ) -> Vec<ModelError> {
        PARAM_NAMES
            .iter()
            .zip([lambda, beta, eta, mu, gamma, alpha])
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(name, value)| ModelError::NonPositive { name, value })
            .collect()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Total exit rate from the infected compartment, α + μ + γ.
    pub fn infected_exit_rate(&self) -> f64 {
        self.alpha + self.mu + self.gamma
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.lambda,
            self.beta,
            self.eta,
            self.mu,
            self.gamma,
            self.alpha,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        PARAM_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.as_array()[i])
    }

    /// Copy with one named field replaced, re-validated.
    pub fn with_field(&self, name: &str, value: f64) -> Result<Self, ModelError> {
        let mut p = *self;
        match name {
            "lambda" => p.lambda = value,
            "beta" => p.beta = value,
            "eta" => p.eta = value,
            "mu" => p.mu = value,
            "gamma" => p.gamma = value,
            "alpha" => p.alpha = value,
            _ => return Err(ModelError::UnknownField(name.to_string())),
        }
        p.validate()?;
        Ok(p)
    }

    pub fn basic_reproduction_number(&self) -> f64 {
        basic_reproduction_number(self)
    }
}

/// White-noise intensities σ₁..σ₄. All zero recovers the deterministic model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseIntensities {
    sigma: [f64; 4],
}

impl NoiseIntensities {
    pub fn new(sigma1: f64, sigma2: f64, sigma3: f64, sigma4: f64) -> Result<Self, ModelError> {
        let sigma = [sigma1, sigma2, sigma3, sigma4];
        if let Some(e) = Self::violations(sigma).into_iter().next() {
            return Err(e);
        }
        Ok(Self { sigma })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn violations(sigma: [f64; 4]) -> Vec<ModelError> {
        NOISE_NAMES
            .iter()
            .zip(sigma)
            .filter(|(_, v)| !(v.is_finite() && *v >= 0.0))
            .map(|(name, value)| ModelError::NegativeNoise { name, value })
            .collect()
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma[0]
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma[1]
    }
    pub fn sigma3(&self) -> f64 {
        self.sigma[2]
    }
    pub fn sigma4(&self) -> f64 {
        self.sigma[3]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.sigma
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.iter().all(|s| *s == 0.0)
    }

    /// Every intensity multiplied by `factor` (must be non-negative).
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let [a, b, c, d] = self.sigma.map(|s| s * factor);
        Self::new(a, b, c, d)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        NOISE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.sigma[i])
    }

    pub fn with_field(&self, name: &str, value: f64) -> Result<Self, ModelError> {
        let i = NOISE_NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| ModelError::UnknownField(name.to_string()))?;
        let mut sigma = self.sigma;
        sigma[i] = value;
        let [a, b, c, d] = sigma;
        Self::new(a, b, c, d)
    }
}

/// One point (x, y, z) of the state space. "Admissible" means strictly
/// inside the positive octant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Initial condition used by the reference simulations.
    pub const fn reference_initial() -> Self {
        Self::new(10.0, 5.0, 2.0)
    }

    pub fn is_admissible(&self) -> bool {
        self.x > 0.0 && self.y > 0.0 && self.z > 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Total population N = x + y + z.
    pub fn total(&self) -> f64 {
        self.x + self.y + self.z
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }

    /// Index (0 = x, 1 = y, 2 = z) of the first component that is not > 0.
    /// NaN counts as non-positive.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn first_nonpositive(&self) -> Option<usize> {
        self.as_array().iter().position(|v| !(*v > 0.0))
    }

    /// Squared Euclidean distance to `other`.
    pub fn distance_sq(&self, other: &State) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibria {
    /// Disease-free equilibrium (Λ/μ, 0, 0); lies on the boundary of the octant.
    pub dfe: State,
    /// Endemic equilibrium, present iff R₀ > 1.
    pub ee: Option<State>,
    pub r0: f64,
}

/// R₀ = βΛ / (μ(α+μ+γ)).
pub fn basic_reproduction_number(p: &ModelParams) -> f64 {
    (p.beta * p.lambda) / (p.mu * p.infected_exit_rate())
}

/// Disease-free and endemic equilibria of the deterministic system.
///
/// The endemic point solves the three drift equations in closed form:
/// x* = Λ/(μR₀), z* = Λγ(R₀−1) / (R₀(μγ + (μ+η)(μ+α))), y* = (μ+η)z*/γ.
/// At R₀ ≤ 1 it would sit at or outside the boundary and is reported absent.
pub fn equilibria(p: &ModelParams) -> Equilibria {
    let r0 = basic_reproduction_number(p);
    let dfe = State::new(p.lambda / p.mu, 0.0, 0.0);
    let ee = (r0 > 1.0).then(|| {
        let x = p.lambda / (p.mu * r0);
        let denom = p.mu * p.gamma + (p.mu + p.eta) * (p.mu + p.alpha);
        let z = p.lambda * p.gamma * (r0 - 1.0) / (r0 * denom);
        let y = (p.mu + p.eta) / p.gamma * z;
        State::new(x, y, z)
    });
    Equilibria { dfe, ee, r0 }
}

/// Deterministic vector field (the `dt` coefficients).
pub fn drift(s: &State, p: &ModelParams) -> [f64; 3] {
    let incidence = p.beta * s.x * s.y;
    [
        p.lambda + p.eta * s.z - incidence - p.mu * s.x,
        incidence - p.infected_exit_rate() * s.y,
        p.gamma * s.y - (p.eta + p.mu) * s.z,
    ]
}

/// Diffusion matrix: `g[i][j]` multiplies dB_j in the equation for component i.
pub fn diffusion(s: &State, n: &NoiseIntensities) -> [[f64; 4]; 3] {
    let coupling = n.sigma4() * s.x * s.y;
    [
        [n.sigma1() * s.x, 0.0, 0.0, -coupling],
        [0.0, n.sigma2() * s.y, 0.0, coupling],
        [0.0, 0.0, n.sigma3() * s.z, 0.0],
    ]
}
