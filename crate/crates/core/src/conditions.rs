//! Parametric hypotheses for stationarity, mean-square stability around the
//! disease-free equilibrium, and almost-sure extinction.
//!
//! Every inequality is evaluated strictly. Each report stores the constants it
//! was derived from so that the verdict can be recomputed by a reader.

use crate::model::{equilibria, ModelParams, NoiseIntensities, State};

/// Constants of the stationary-distribution criterion. Only defined when the
/// endemic equilibrium exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConstants {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub c_const: f64,
    /// min(D₁x*², D₂y*², D₃z*²)
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConditionReport {
    pub r0: f64,
    pub ee: Option<State>,
    /// `None` marks the criterion as inapplicable (R₀ ≤ 1, no endemic point).
    pub constants: Option<StationaryConstants>,
    pub holds: bool,
}

impl StationaryConditionReport {
    pub fn ee_defined(&self) -> bool {
        self.constants.is_some()
    }

    /// Verdict recomputed from the stored constants.
    pub fn rederive(&self) -> bool {
        self.r0 > 1.0
            && self
                .constants
                .is_some_and(|c| 0.0 < c.c_const && c.c_const < c.bound)
    }
}

/// Existence of a stationary distribution: R₀ > 1 and 0 < 𝒞 < min(DᵢXᵢ*²).
pub fn check_stationary(p: &ModelParams, n: &NoiseIntensities) -> StationaryConditionReport {
    let eq = equilibria(p);
    let constants = eq.ee.map(|ee| stationary_constants(p, n, &ee));
    let mut report = StationaryConditionReport {
        r0: eq.r0,
        ee: eq.ee,
        constants,
        holds: false,
    };
    report.holds = report.rederive();
    report
}

fn stationary_constants(p: &ModelParams, n: &NoiseIntensities, ee: &State) -> StationaryConstants {
    let (mu, alpha, beta, gamma, eta) = (p.mu(), p.alpha(), p.beta(), p.gamma(), p.eta());
    let [s1, s2, s3, s4] = n.as_array().map(|s| s * s);
    let k = 2.0 * mu + alpha;
    let kg = (gamma + k) / gamma;

    let d1 = mu / 2.0 - s1 - k * ee.y * s4 / beta;
    let d2 = mu + alpha - s2;
    let d3 = (mu * (gamma + k) + eta * k) / gamma - kg * s3;
    let c_const = s1 * ee.x * ee.x
        + (ee.y * ee.y + k / (2.0 * beta) * ee.y) * s2
        + kg * ee.z * ee.z * s3
        + k / beta * ee.x * ee.x * ee.y * s4;
    let bound = (d1 * ee.x * ee.x)
        .min(d2 * ee.y * ee.y)
        .min(d3 * ee.z * ee.z);
    StationaryConstants {
        d1,
        d2,
        d3,
        c_const,
        bound,
    }
}

/// Uniform ellipticity constant κ = min(σ₁²x*², σ₂²y*², σ₃²z*²) of the
/// generator's diffusion part near the endemic point. κ > 0 certifies the
/// non-degeneracy hypothesis.
pub fn ellipticity_kappa(n: &NoiseIntensities, ee: &State) -> f64 {
    let [s1, s2, s3, _] = n.as_array();
    let a = (s1 * ee.x).powi(2);
    let b = (s2 * ee.y).powi(2);
    let c = (s3 * ee.z).powi(2);
    a.min(b).min(c)
}

/// Mean-square bound around the disease-free equilibrium. The constant named
/// `c_min` here is unrelated to [`StationaryConstants::c_const`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfeBoundReport {
    pub r0: f64,
    /// μ/2 − σ₁², (μ+α) − σ₂²/2, ((2μ+α)(μ+η)+γμ)/γ − σ₃²
    pub margins: [f64; 3],
    pub c_min: f64,
    pub hypotheses_hold: bool,
    /// σ₁²Λ²/(c_min μ²), only when the hypotheses hold.
    pub bound_value: Option<f64>,
    /// σ₁ = 0 with the remaining hypotheses: the DFE is stochastically
    /// asymptotically stable and the bound collapses to zero.
    pub dfe_stable: bool,
}

impl DfeBoundReport {
    pub fn rederive(&self) -> bool {
        self.r0 < 1.0 && self.margins.iter().all(|m| *m > 0.0)
    }
}

pub fn check_dfe_bound(p: &ModelParams, n: &NoiseIntensities) -> DfeBoundReport {
    let (mu, alpha, gamma, eta, lambda) = (p.mu(), p.alpha(), p.gamma(), p.eta(), p.lambda());
    let [s1, s2, s3, _] = n.as_array().map(|s| s * s);
    let margins = [
        mu / 2.0 - s1,
        (mu + alpha) - s2 / 2.0,
        ((2.0 * mu + alpha) * (mu + eta) + gamma * mu) / gamma - s3,
    ];
    let c_min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let mut report = DfeBoundReport {
        r0: p.basic_reproduction_number(),
        margins,
        c_min,
        hypotheses_hold: false,
        bound_value: None,
        dfe_stable: false,
    };
    report.hypotheses_hold = report.rederive();
    if report.hypotheses_hold && c_min > 0.0 {
        let ratio = lambda / mu;
        report.bound_value = Some(s1 * ratio * ratio / c_min);
        report.dfe_stable = n.sigma1() == 0.0;
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionReport {
    /// (α+μ+γ) + σ₂²/2
    pub lhs: f64,
    /// β²/(2σ₄²); +∞ when σ₄ = 0.
    pub rhs: f64,
    /// rhs − lhs, an almost-sure upper bound on limsup ln Y(t)/t.
    pub exponent_bound: f64,
    pub predicts_extinction: bool,
}

impl ExtinctionReport {
    pub fn rhs_infinite(&self) -> bool {
        self.rhs.is_infinite()
    }

    pub fn rederive(&self) -> bool {
        self.lhs > self.rhs
    }
}

pub fn check_extinction(p: &ModelParams, n: &NoiseIntensities) -> ExtinctionReport {
    let s2 = n.sigma2() * n.sigma2();
    let s4 = n.sigma4() * n.sigma4();
    let lhs = p.infected_exit_rate() + s2 / 2.0;
    let rhs = if s4 == 0.0 {
        f64::INFINITY
    } else {
        p.beta() * p.beta() / (2.0 * s4)
    };
    ExtinctionReport {
        lhs,
        rhs,
        exponent_bound: rhs - lhs,
        predicts_extinction: lhs > rhs,
    }
}

/// Smallest σ₄ for which extinction is predicted at fixed σ₂:
/// σ₄* = β / √(2(α+μ+γ) + σ₂²). Extinction holds for σ₄ strictly above it.
pub fn extinction_sigma4_threshold(p: &ModelParams, sigma2: f64) -> f64 {
    p.beta() / (2.0 * p.infected_exit_rate() + sigma2 * sigma2).sqrt()
}
