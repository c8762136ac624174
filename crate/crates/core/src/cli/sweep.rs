//! One-axis parameter sweeps with threshold-crossing summaries.

use std::fmt::Write as _;
use std::io::Write;

use super::config::RunSpec;
use super::report::ConditionSummary;
use super::{emit, manifest, CliError};
use crate::conditions::extinction_sigma4_threshold;
use crate::ensemble::{run_ensemble, EnsembleStats};
use crate::model::{ModelParams, NoiseIntensities, NOISE_NAMES, PARAM_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<(ConditionSummary, Option<EnsembleSummary>), String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub extinction_fraction: f64,
    pub lyapunov_mean: Option<f64>,
    pub dfe_ms_average: f64,
}

impl From<&EnsembleStats> for EnsembleSummary {
    fn from(s: &EnsembleStats) -> Self {
        Self {
            extinction_fraction: s.extinction_fraction,
            lyapunov_mean: s.lyapunov_y.map(|l| l.mean),
            dfe_ms_average: s.dfe_ms_average,
        }
    }
}

/// Axis name without its `model.`/`noise.` prefix, if it names a field.
fn normalize_axis(axis: &str) -> Option<&'static str> {
    let bare = axis
        .strip_prefix("model.")
        .or_else(|| axis.strip_prefix("noise."))
        .unwrap_or(axis);
    PARAM_NAMES
        .iter()
        .chain(NOISE_NAMES.iter())
        .find(|n| **n == bare)
        .copied()
}

fn point(
    spec: &RunSpec,
    axis: &str,
    value: f64,
) -> Result<(ModelParams, NoiseIntensities), String> {
    if PARAM_NAMES.contains(&axis) {
        let p = spec
            .params
            .with_field(axis, value)
            .map_err(|e| e.to_string())?;
        Ok((p, spec.noise))
    } else {
        let n = spec
            .noise
            .with_field(axis, value)
            .map_err(|e| e.to_string())?;
        Ok((spec.params, n))
    }
}

pub fn evaluate_sweep(spec: &RunSpec, axis: &'static str, values: &[f64]) -> Vec<SweepRow> {
    values
        .iter()
        .map(|&value| {
            let outcome = point(spec, axis, value).and_then(|(p, n)| {
                let summary = ConditionSummary::evaluate(&p, &n);
                let ens = match &spec.ensemble {
                    Some(cfg) => Some(
                        run_ensemble(cfg, &p, &n)
                            .map(|s| EnsembleSummary::from(&s))
                            .map_err(|e| e.to_string())?,
                    ),
                    None => None,
                };
                Ok((summary, ens))
            });
            SweepRow { value, outcome }
        })
        .collect()
}

const HEADER: &str = "axis,value,status,r0,ee_present,kappa,stationary_holds,c_const,stationary_bound,dfe_hypotheses_hold,dfe_bound,predicts_extinction,exponent_bound,extinction_fraction,lyapunov_mean,dfe_ms_average";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(axis: &str, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    for row in rows {
        match &row.outcome {
            Ok((c, e)) => {
                let k = c.stationary.constants;
                writeln!(
                    s,
                    "{axis},{},ok,{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    row.value,
                    c.equilibria.r0,
                    c.equilibria.ee.is_some(),
                    opt(c.kappa),
                    c.stationary.holds,
                    opt(k.map(|k| k.c_const)),
                    opt(k.map(|k| k.bound)),
                    c.dfe.hypotheses_hold,
                    opt(c.dfe.bound_value),
                    c.extinction.predicts_extinction,
                    c.extinction.exponent_bound,
                    opt(e.map(|e| e.extinction_fraction)),
                    opt(e.and_then(|e| e.lyapunov_mean)),
                    opt(e.map(|e| e.dfe_ms_average)),
                )
                .unwrap();
            }
            Err(msg) => {
                let msg = msg.replace(['"', ','], " ");
                writeln!(s, "{axis},{},\"error: {msg}\",,,,,,,,,,,,,", row.value).unwrap();
            }
        }
    }
    s
}

/// Flips of each boolean verdict along the sweep, in the order given.
pub fn sweep_summary(spec: &RunSpec, axis: &str, rows: &[SweepRow]) -> String {
    type Getter = fn(&ConditionSummary) -> bool;
    let verdicts: [(&str, Getter); 4] = [
        ("ee_present", |c| c.equilibria.ee.is_some()),
        ("stationary_holds", |c| c.stationary.holds),
        ("dfe_hypotheses_hold", |c| c.dfe.hypotheses_hold),
        ("predicts_extinction", |c| c.extinction.predicts_extinction),
    ];
    let ok: Vec<(f64, &ConditionSummary)> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|(c, _)| (r.value, c)))
        .collect();
    let mut s = String::new();
    writeln!(
        s,
        "# sweep over {axis}: {} point(s), {} ok",
        rows.len(),
        ok.len()
    )
    .unwrap();
    for (name, get) in verdicts {
        let flips: Vec<String> = ok
            .windows(2)
            .filter(|w| get(w[0].1) != get(w[1].1))
            .map(|w| {
                format!(
                    "{} -> {} between {axis}={} and {axis}={}",
                    get(w[0].1),
                    get(w[1].1),
                    w[0].0,
                    w[1].0
                )
            })
            .collect();
        if flips.is_empty() {
            if let Some((_, c)) = ok.first() {
                writeln!(s, "{name}: constant {}", get(c)).unwrap();
            }
        } else {
            for f in flips {
                writeln!(s, "{name}: {f}").unwrap();
            }
        }
    }
    if axis == "sigma4" {
        let t = extinction_sigma4_threshold(&spec.params, spec.noise.sigma2());
        writeln!(s, "closed-form sigma4 extinction threshold = {t}").unwrap();
    }
    s
}

pub fn run_sweep(
    spec: &RunSpec,
    axis: &str,
    values: &[f64],
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let axis = normalize_axis(axis)
        .ok_or_else(|| CliError::Usage(format!("`{axis}` is not a model or noise parameter")))?;
    let rows = evaluate_sweep(spec, axis, values);
    let csv = sweep_csv(axis, &rows);
    let summary = sweep_summary(spec, axis, &rows);
    stdout.write_all(csv.as_bytes())?;
    stdout.write_all(summary.as_bytes())?;
    let files = vec![
        ("sweep.csv".to_string(), csv.into_bytes()),
        ("sweep_summary.txt".to_string(), summary.into_bytes()),
    ];
    let names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    let mut files = files;
    files.push((
        "manifest.txt".into(),
        manifest(spec, "sweep", &names).into_bytes(),
    ));
    emit(&spec.out_dir, files)?;
    if rows.iter().all(|r| r.outcome.is_err()) {
        return Err(CliError::Usage("no sweep point could be evaluated".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::Overrides;
    use crate::cli::presets::Preset;

    fn spec(preset: &str) -> RunSpec {
        let p = Preset::lookup(preset).unwrap();
        let map = Default::default();
        let mut s = RunSpec::resolve(Some(p), &map, &Overrides::default(), None).unwrap();
        s.ensemble = None;
        s
    }

    #[test]
    fn axis_names() {
        assert_eq!(normalize_axis("noise.sigma4"), Some("sigma4"));
        assert_eq!(normalize_axis("mu"), Some("mu"));
        assert_eq!(normalize_axis("model.sigma4"), Some("sigma4"));
        assert_eq!(normalize_axis("delta"), None);
    }

    #[test]
    fn sigma4_threshold_is_bracketed() {
        let mut s = spec("fig2");
        s.noise = NoiseIntensities::new(0.0, 0.02, 0.0, 0.0).unwrap();
        let rows = evaluate_sweep(&s, "sigma4", &[0.01, 0.03, 0.1, 0.3]);
        let summary = sweep_summary(&s, "sigma4", &rows);
        assert!(
            summary
                .contains("predicts_extinction: false -> true between sigma4=0.03 and sigma4=0.1"),
            "{summary}"
        );
        assert!(summary.contains("threshold = 0.0402"));
    }

    #[test]
    fn mu_sweep_r0_column() {
        let s = spec("fig1");
        let rows = evaluate_sweep(&s, "mu", &[0.006, 0.05]);
        let csv = sweep_csv("mu", &rows);
        let r0: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        assert!((r0[0] - 13.75).abs() < 1e-12 && (r0[1] - 0.89375).abs() < 1e-12);
    }

    #[test]
    fn invalid_point_recorded_in_row() {
        let s = spec("fig1");
        let rows = evaluate_sweep(&s, "beta", &[-1.0, 0.013]);
        assert!(rows[0].outcome.is_err());
        assert!(rows[1].outcome.is_ok());
        let csv = sweep_csv("beta", &rows);
        assert!(csv.lines().nth(1).unwrap().contains("error"));
        assert_eq!(
            csv.lines().nth(1).unwrap().split(',').count(),
            HEADER.split(',').count()
        );
    }
}
