//! Plain-text reports. Numbers use the shortest decimal that round-trips.

use std::fmt::Write as _;

use crate::conditions::{
    check_dfe_bound, check_extinction, check_stationary, ellipticity_kappa, DfeBoundReport,
    ExtinctionReport, StationaryConditionReport,
};
use crate::ensemble::{
    boundedness_check, dfe_bound_check, extinction_check, stationary_distance, Check,
    EnsembleStats, Verdict, EXTINCTION_FRACTION_THRESHOLD,
};
use crate::model::{equilibria, Equilibria, ModelParams, NoiseIntensities};

use super::config::RunSpec;

/// Relative tolerance applied to the DFE mean-square bound.
pub const DFE_BOUND_TOLERANCE: f64 = 0.1;

/// All condition checks for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSummary {
    pub equilibria: Equilibria,
    pub kappa: Option<f64>,
    pub stationary: StationaryConditionReport,
    pub dfe: DfeBoundReport,
    pub extinction: ExtinctionReport,
}

impl ConditionSummary {
    pub fn evaluate(p: &ModelParams, n: &NoiseIntensities) -> Self {
        let eq = equilibria(p);
        Self {
            equilibria: eq,
            kappa: eq.ee.map(|ee| ellipticity_kappa(n, &ee)),
            stationary: check_stationary(p, n),
            dfe: check_dfe_bound(p, n),
            extinction: check_extinction(p, n),
        }
    }
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        v.to_string()
    }
}

pub fn render_check(spec: &RunSpec, c: &ConditionSummary) -> String {
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "# sirs check").unwrap();
    if let Some(p) = &spec.preset {
        writeln!(w, "preset = {p}").unwrap();
    }
    writeln!(w, "config_hash = {}", spec.config_hash()).unwrap();
    writeln!(w, "R0 = {}", num(c.equilibria.r0)).unwrap();
    writeln!(w, "DFE = {}", c.equilibria.dfe).unwrap();
    match c.equilibria.ee {
        Some(ee) => writeln!(w, "EE = {ee}").unwrap(),
        None => writeln!(w, "EE: absent").unwrap(),
    }
    match c.kappa {
        Some(k) => writeln!(w, "kappa = {}", num(k)).unwrap(),
        None => writeln!(w, "kappa: undefined (no endemic equilibrium)").unwrap(),
    }

    writeln!(w, "\n[stationary distribution]").unwrap();
    match &c.stationary.constants {
        Some(k) => {
            writeln!(w, "D1 = {}", num(k.d1)).unwrap();
            writeln!(w, "D2 = {}", num(k.d2)).unwrap();
            writeln!(w, "D3 = {}", num(k.d3)).unwrap();
            writeln!(w, "C = {}", num(k.c_const)).unwrap();
            writeln!(w, "bound = {}", num(k.bound)).unwrap();
        }
        None => writeln!(w, "constants: EE-undefined (R0 <= 1)").unwrap(),
    }
    writeln!(
        w,
        "stationary distribution condition holds: {}",
        c.stationary.holds
    )
    .unwrap();

    writeln!(w, "\n[DFE mean-square bound]").unwrap();
    let m = c.dfe.margins;
    writeln!(w, "margins = {}, {}, {}", num(m[0]), num(m[1]), num(m[2])).unwrap();
    writeln!(w, "c_min = {}", num(c.dfe.c_min)).unwrap();
    writeln!(w, "hypotheses hold: {}", c.dfe.hypotheses_hold).unwrap();
    match c.dfe.bound_value {
        Some(b) => writeln!(w, "bound = {}", num(b)).unwrap(),
        None => writeln!(w, "bound: none").unwrap(),
    }
    if c.dfe.dfe_stable {
        writeln!(w, "DFE stochastically asymptotically stable").unwrap();
    }

    writeln!(w, "\n[extinction]").unwrap();
    writeln!(w, "lhs = {}", num(c.extinction.lhs)).unwrap();
    writeln!(w, "rhs = {}", num(c.extinction.rhs)).unwrap();
    writeln!(
        w,
        "extinction predicted: {}, exponent bound {}",
        c.extinction.predicts_extinction,
        num(c.extinction.exponent_bound)
    )
    .unwrap();
    s
}

fn verdict_line(label: &str, c: &Check) -> String {
    format!("{label}: {}", c.verdict.label())
}

pub fn render_ensemble(spec: &RunSpec, stats: &EnsembleStats) -> String {
    let c = ConditionSummary::evaluate(&spec.params, &spec.noise);
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "# sirs ensemble").unwrap();
    if let Some(p) = &spec.preset {
        writeln!(w, "preset = {p}").unwrap();
    }
    writeln!(w, "config_hash = {}", spec.config_hash()).unwrap();
    writeln!(w, "scheme = {}", spec.sim.scheme).unwrap();
    writeln!(w, "seed = {}", spec.sim.seed).unwrap();
    writeln!(w, "n_paths = {}", stats.n_paths).unwrap();
    writeln!(w, "aborted_paths = {}", stats.aborted_paths).unwrap();
    writeln!(w, "burn_in = {}", num(stats.burn_in)).unwrap();
    writeln!(w, "window_split_time = {}", num(stats.split_time)).unwrap();
    writeln!(w, "R0 = {}", num(c.equilibria.r0)).unwrap();
    writeln!(w, "dfe_ms_average = {}", num(stats.dfe_ms_average)).unwrap();
    match (stats.ee_ms_average, stats.ee_ms_windows) {
        (Some(avg), Some([a, b])) => {
            writeln!(w, "ee_ms_average = {}", num(avg)).unwrap();
            writeln!(w, "ee_ms_window1 = {}", num(a)).unwrap();
            writeln!(w, "ee_ms_window2 = {}", num(b)).unwrap();
        }
        (Some(avg), None) => writeln!(w, "ee_ms_average = {}", num(avg)).unwrap(),
        _ => writeln!(w, "ee_ms_average: undefined (no endemic equilibrium)").unwrap(),
    }
    match stats.lyapunov_y {
        Some(l) => {
            writeln!(w, "lyapunov_y_mean = {}", num(l.mean)).unwrap();
            writeln!(w, "lyapunov_y_half_width95 = {}", num(l.half_width)).unwrap();
            writeln!(w, "lyapunov_y_paths = {}", l.n_paths).unwrap();
        }
        None => writeln!(w, "lyapunov_y: undefined (fewer than two samples per path)").unwrap(),
    }
    writeln!(
        w,
        "extinction_fraction = {}",
        num(stats.extinction_fraction)
    )
    .unwrap();
    writeln!(w, "n_min = {}", num(stats.n_min)).unwrap();
    writeln!(w, "n_max = {}", num(stats.n_max)).unwrap();
    match stationary_distance(stats) {
        Ok(d) => writeln!(
            w,
            "stationary_tv_distance = {} (window split and 0.1 threshold are heuristic)",
            num(d)
        )
        .unwrap(),
        Err(e) => writeln!(w, "stationary_tv_distance: {e}").unwrap(),
    }

    writeln!(w, "\n[verdicts]").unwrap();
    let b = boundedness_check(stats, &spec.params, &spec.sim.initial);
    writeln!(
        w,
        "{}",
        verdict_line(
            &format!(
                "population bounded: n_min {} > 0 and n_max {} < {}",
                num(stats.n_min),
                num(stats.n_max),
                num(b.threshold)
            ),
            &b
        )
    )
    .unwrap();

    let d = dfe_bound_check(stats, &c.dfe, DFE_BOUND_TOLERANCE);
    if d.verdict == Verdict::Inapplicable {
        writeln!(w, "dfe_ms_average bound: INAPPLICABLE").unwrap();
    } else {
        let bound = c.dfe.bound_value.unwrap_or(0.0);
        writeln!(
            w,
            "{}",
            verdict_line(
                &format!(
                    "dfe_ms_average ≤ {} (bound {} × {})",
                    num(d.threshold),
                    num(bound),
                    1.0 + DFE_BOUND_TOLERANCE
                ),
                &d
            )
        )
        .unwrap();
    }

    let e = extinction_check(stats, &c.extinction);
    if e.verdict == Verdict::Inapplicable {
        writeln!(
            w,
            "extinction_fraction ≥ {EXTINCTION_FRACTION_THRESHOLD}: INAPPLICABLE"
        )
        .unwrap();
    } else {
        writeln!(
            w,
            "{}",
            verdict_line(
                &format!("extinction_fraction ≥ {EXTINCTION_FRACTION_THRESHOLD}"),
                &e
            )
        )
        .unwrap();
    }
    s
}
