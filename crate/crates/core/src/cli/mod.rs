//! The `sirs` command: `check`, `simulate`, `ensemble` and `sweep`.
//!
//! Exit codes: 0 on success (theorem verdicts never change it), 2 for
//! configuration or usage errors, 3 when a simulation aborts.

pub mod config;
pub mod presets;
pub mod report;
mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::ensemble::run_ensemble;
use crate::integrate::{simulate, Scheme, SimConfig};
use config::{parse_config_text, ConfigError, ConfigMap, Overrides, RunSpec};
use presets::Preset;
use report::{render_check, render_ensemble, ConditionSummary};

pub use sweep::{run_sweep, SweepRow};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "SIRS_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Abort share above which an ensemble run fails.
const MAX_ABORT_FRACTION: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "sirs",
    version,
    about = "Stochastic SIRS model: checks, simulations, ensembles and sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print R0, equilibria and every parametric condition.
    Check(CommonArgs),
    /// Write one trajectory CSV per requested scheme.
    Simulate(CommonArgs),
    /// Run a Monte Carlo ensemble and report its statistics.
    Ensemble(CommonArgs),
    /// Evaluate the checks (and optionally a small ensemble) along one axis.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Key/value config file (`model.beta = 0.013`, ...).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Figure regime preset: fig1, fig2, fig3a ... fig8b (figN = figNa).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory (overrides SIRS_OUT_DIR and output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scheme name; `simulate` accepts a comma-separated list.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Number of ensemble paths.
    #[arg(long)]
    pub paths: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Parameter to vary, e.g. `sigma4`, `noise.sigma4` or `mu`.
    #[arg(long)]
    pub sweep_axis: String,
    /// Comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep_values: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("simulation aborted: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

/// Parse `args` (including the program name) and run, returning the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match run(&cli.command, env_out, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(
    cmd: &Command,
    env_out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match cmd {
        Command::Check(a) => {
            let spec = load_spec(a, None)?;
            cmd_check(&spec, a.out.as_deref(), stdout)
        }
        Command::Simulate(a) => {
            let spec = load_spec(a, env_out)?;
            cmd_simulate(&spec, stdout)
        }
        Command::Ensemble(a) => {
            let spec = load_spec(a, env_out)?;
            cmd_ensemble(&spec, stdout)
        }
        Command::Sweep(a) => {
            let spec = load_spec(&a.common, env_out)?;
            let values = parse_values(&a.sweep_values)?;
            run_sweep(&spec, &a.sweep_axis, &values, stdout)
        }
    }
}

fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let items: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(CliError::Usage("--sweep-values lists no values".into()));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("sweep value `{s}` is not a finite number")))
        })
        .collect()
}

/// Resolve the preset, config file and flags into a validated spec.
pub fn load_spec(a: &CommonArgs, env_out: Option<PathBuf>) -> Result<RunSpec, CliError> {
    let preset = match &a.preset {
        Some(name) => Some(
            Preset::lookup(name)
                .ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?,
        ),
        None => None,
    };
    let file = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => ConfigMap::new(),
    };
    if preset.is_none() && a.config.is_none() {
        return Err(CliError::Usage(
            "pass --config <path> or --preset <name>".into(),
        ));
    }

    let mut schemes = Vec::new();
    if let Some(list) = &a.scheme {
        for name in list.split(',') {
            schemes.push(
                name.trim()
                    .parse::<Scheme>()
                    .map_err(|e| CliError::Usage(e.to_string()))?,
            );
        }
    }
    let overrides = Overrides {
        seed: a.seed,
        scheme: schemes.first().copied(),
        n_paths: a.paths,
        out_dir: a.out.clone(),
    };
    let mut spec = RunSpec::resolve(preset, &file, &overrides, env_out)?;
    if !schemes.is_empty() {
        spec.schemes = schemes;
    }
    Ok(spec)
}

pub fn cmd_check(
    spec: &RunSpec,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let summary = ConditionSummary::evaluate(&spec.params, &spec.noise);
    let text = render_check(spec, &summary);
    stdout.write_all(text.as_bytes())?;
    if let Some(dir) = out {
        write_files(dir, &[("check.txt".into(), text.into_bytes())])?;
    }
    Ok(())
}

/// Manifest: `run.*` metadata followed by the canonical config. Passing the
/// manifest back as `--config` reproduces the run.
pub fn manifest(spec: &RunSpec, command: &str, files: &[String]) -> String {
    let schemes: Vec<&str> = spec.schemes.iter().map(|s| s.name()).collect();
    let mut s = String::new();
    s.push_str(&format!(
        "run.tool = \"sirs\"\nrun.tool_version = \"{}\"\n",
        env!("CARGO_PKG_VERSION")
    ));
    s.push_str(&format!("run.command = \"{command}\"\n"));
    s.push_str(&format!(
        "run.preset = \"{}\"\n",
        spec.preset.as_deref().unwrap_or("")
    ));
    s.push_str(&format!("run.schemes = \"{}\"\n", schemes.join(",")));
    s.push_str(&format!("run.seed = \"{}\"\n", spec.sim.seed));
    s.push_str(&format!("run.config_hash = \"{}\"\n", spec.config_hash()));
    s.push_str(&format!("run.files = \"{}\"\n", files.join(",")));
    s.push_str(&spec.to_config_text());
    s
}

fn write_files(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

pub fn cmd_simulate(spec: &RunSpec, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut files = Vec::new();
    for scheme in &spec.schemes {
        let cfg = SimConfig {
            scheme: *scheme,
            ..spec.sim
        };
        let tr = simulate(&cfg, &spec.params, &spec.noise)
            .map_err(|e| CliError::Runtime(format!("{scheme}: {e}")))?;
        let mut csv = Vec::new();
        tr.write_csv(&mut csv)?;
        let name = format!("trajectory_{scheme}.csv");
        let end = tr.final_state();
        writeln!(
            stdout,
            "{scheme}: final state {end} at t = {}",
            tr.times.last().copied().unwrap_or(0.0)
        )?;
        if let Some((k, c)) = tr.first_nonpositive {
            writeln!(
                stdout,
                "{scheme}: left the positive octant at step {k} (component {})",
                ["x", "y", "z"][c]
            )?;
        }
        if let Some(t) = tr.extinct_at {
            writeln!(
                stdout,
                "{scheme}: infected below extinction floor at t = {t}"
            )?;
        }
        files.push((name, csv));
    }
    let names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    files.push((
        "manifest.txt".into(),
        manifest(spec, "simulate", &names).into_bytes(),
    ));
    write_files(&spec.out_dir, &files)?;
    writeln!(
        stdout,
        "wrote {} file(s) to {}",
        files.len(),
        spec.out_dir.display()
    )?;
    Ok(())
}

pub fn cmd_ensemble(spec: &RunSpec, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = spec.ensemble.ok_or_else(|| {
        CliError::Usage("ensemble settings missing (add ensemble.* keys or --paths)".into())
    })?;
    let stats = run_ensemble(&cfg, &spec.params, &spec.noise)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let text = render_ensemble(spec, &stats);
    stdout.write_all(text.as_bytes())?;

    let abort_share = stats.aborted_paths as f64 / stats.n_paths as f64;
    if abort_share > MAX_ABORT_FRACTION {
        return Err(CliError::Runtime(format!(
            "{} of {} paths aborted; first: {}",
            stats.aborted_paths, stats.n_paths, stats.aborts[0].1
        )));
    }

    let mut paths_csv = Vec::new();
    stats.write_paths_csv(&mut paths_csv)?;
    let mut h1 = Vec::new();
    stats.hist_w1.write_csv(&mut h1)?;
    let mut h2 = Vec::new();
    stats.hist_w2.write_csv(&mut h2)?;
    let mut files = vec![
        ("ensemble_report.txt".to_string(), text.into_bytes()),
        ("paths.csv".to_string(), paths_csv),
        ("histogram_window1.csv".to_string(), h1),
        ("histogram_window2.csv".to_string(), h2),
    ];
    let names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    files.push((
        "manifest.txt".into(),
        manifest(spec, "ensemble", &names).into_bytes(),
    ));
    write_files(&spec.out_dir, &files)?;
    Ok(())
}

/// Write `bytes` into `dir`; used by the sweep command.
pub(crate) fn emit(dir: &Path, files: Vec<(String, Vec<u8>)>) -> Result<(), CliError> {
    write_files(dir, &files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_parse() {
        assert_eq!(
            parse_values("0.01, 0.03,0.1").unwrap(),
            vec![0.01, 0.03, 0.1]
        );
        assert!(parse_values("").is_err());
        assert!(parse_values(" , ").is_err());
        assert!(parse_values("0.1,abc").is_err());
        assert!(parse_values("inf").is_err());
    }

    #[test]
    fn usage_error_without_inputs() {
        let err = load_spec(&CommonArgs::default(), None).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn unknown_preset_and_scheme() {
        let a = CommonArgs {
            preset: Some("fig42".into()),
            ..CommonArgs::default()
        };
        assert_eq!(load_spec(&a, None).unwrap_err().exit_code(), EXIT_CONFIG);
        let a = CommonArgs {
            preset: Some("fig1".into()),
            scheme: Some("rk4,leapfrog".into()),
            ..CommonArgs::default()
        };
        assert_eq!(load_spec(&a, None).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn manifest_reproduces_spec() {
        let a = CommonArgs {
            preset: Some("fig8b".into()),
            seed: Some(17),
            scheme: Some("rk4,milstein-paper".into()),
            paths: Some(5),
            ..CommonArgs::default()
        };
        let spec = load_spec(&a, None).unwrap();
        let text = manifest(&spec, "simulate", &["a.csv".into()]);
        let map = parse_config_text(&text).unwrap();
        let again = RunSpec::resolve(None, &map, &Overrides::default(), None).unwrap();
        assert_eq!(again.params, spec.params);
        assert_eq!(again.noise, spec.noise);
        assert_eq!(again.sim, spec.sim);
        assert_eq!(again.ensemble, spec.ensemble);
        assert_eq!(again.schemes, spec.schemes);
        assert_eq!(again.config_hash(), spec.config_hash());
    }
}
