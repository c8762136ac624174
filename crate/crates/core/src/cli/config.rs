//! Run configuration: flat `section.key = value` text (valid TOML dotted
//! keys), optionally layered over a named preset and command-line flags.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::presets::Preset;
use crate::ensemble::EnsembleConfig;
use crate::integrate::{PositivityPolicy, Scheme, SimConfig};
use crate::model::{ModelError, ModelParams, NoiseIntensities, State, NOISE_NAMES, PARAM_NAMES};

pub const DEFAULT_OUT_DIR: &str = "sirs-out";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

const SIM_KEYS: [&str; 8] = [
    "dt",
    "t_final",
    "x0",
    "y0",
    "z0",
    "seed",
    "scheme",
    "positivity",
];
const ENSEMBLE_KEYS: [&str; 4] = ["n_paths", "burn_in", "histogram_bins", "window_split"];

/// Keys under `run.` are manifest metadata and are accepted but not required.
const RUN_PREFIX: &str = "run.";

/// Flattened key/value pairs keyed by dotted path.
pub type ConfigMap = BTreeMap<String, toml::Value>;

pub fn parse_config_text(text: &str) -> Result<ConfigMap, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    let mut out = ConfigMap::new();
    flatten("", &toml::Value::Table(table), &mut out);
    Ok(out)
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut ConfigMap) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
    pub n_paths: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub preset: Option<String>,
    pub params: ModelParams,
    pub noise: NoiseIntensities,
    pub sim: SimConfig,
    pub ensemble: Option<EnsembleConfig>,
    pub out_dir: PathBuf,
    /// Schemes requested for `simulate`; defaults to `[sim.scheme]`.
    pub schemes: Vec<Scheme>,
}

struct Reader<'a> {
    map: &'a ConfigMap,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn float(&mut self, key: &str, default: Option<f64>) -> f64 {
        match self.map.get(key) {
            Some(toml::Value::Float(f)) => *f,
            Some(toml::Value::Integer(i)) => *i as f64,
            Some(other) => {
                self.errors
                    .push(format!("`{key}` must be a number, got {other}"));
                f64::NAN
            }
            None => default.unwrap_or_else(|| {
                self.errors.push(format!("missing key `{key}`"));
                f64::NAN
            }),
        }
    }

    fn uint(&mut self, key: &str, default: u64) -> u64 {
        match self.map.get(key) {
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(toml::Value::String(s)) => s.parse().unwrap_or_else(|_| {
                self.errors
                    .push(format!("`{key}` must be a non-negative integer, got {s:?}"));
                default
            }),
            Some(other) => {
                self.errors.push(format!(
                    "`{key}` must be a non-negative integer, got {other}"
                ));
                default
            }
            None => default,
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.map.get(key) {
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(other) => {
                self.errors
                    .push(format!("`{key}` must be a string, got {other}"));
                None
            }
            None => None,
        }
    }
}

impl RunSpec {
    /// Build and fully validate a spec. Every problem is reported, not just
    /// the first.
    pub fn resolve(
        preset: Option<&Preset>,
        file: &ConfigMap,
        overrides: &Overrides,
        env_out_dir: Option<PathBuf>,
    ) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        for key in file.keys() {
            if !is_known_key(key) {
                errors.push(format!("unknown key `{key}`"));
            }
        }

        let mut map = preset.map(Preset::config_map).unwrap_or_default();
        map.extend(file.iter().map(|(k, v)| (k.clone(), v.clone())));
        let mut r = Reader {
            map: &map,
            errors: Vec::new(),
        };

        let model: Vec<f64> = PARAM_NAMES
            .iter()
            .map(|n| r.float(&format!("model.{n}"), None))
            .collect();
        let sigma: Vec<f64> = NOISE_NAMES
            .iter()
            .map(|n| r.float(&format!("noise.{n}"), Some(0.0)))
            .collect();

        let defaults = SimConfig::default();
        let dt = r.float("sim.dt", Some(defaults.dt));
        let t_final = r.float("sim.t_final", Some(defaults.t_final));
        let initial = State::new(
            r.float("sim.x0", Some(defaults.initial.x)),
            r.float("sim.y0", Some(defaults.initial.y)),
            r.float("sim.z0", Some(defaults.initial.z)),
        );
        let seed = r.uint("sim.seed", defaults.seed);
        let scheme = match r.string("sim.scheme") {
            Some(s) => s.parse().unwrap_or_else(|e| {
                r.errors.push(format!("`sim.scheme`: {e}"));
                defaults.scheme
            }),
            None => defaults.scheme,
        };
        let positivity = match r.string("sim.positivity") {
            Some(s) => s.parse().unwrap_or_else(|e| {
                r.errors.push(format!("`sim.positivity`: {e}"));
                PositivityPolicy::default()
            }),
            None => PositivityPolicy::default(),
        };
        let schemes = match r.string("run.schemes") {
            Some(list) => list
                .split(',')
                .filter_map(|s| match s.trim().parse() {
                    Ok(sc) => Some(sc),
                    Err(e) => {
                        r.errors.push(format!("`run.schemes`: {e}"));
                        None
                    }
                })
                .collect(),
            None => Vec::new(),
        };

        let sim = SimConfig {
            dt,
            t_final,
            initial,
            seed: overrides.seed.unwrap_or(seed),
            scheme: overrides.scheme.unwrap_or(scheme),
            positivity,
        };

        let has_ensemble =
            map.keys().any(|k| k.starts_with("ensemble.")) || overrides.n_paths.is_some();
        let ensemble = has_ensemble.then(|| {
            let n_paths = r.uint("ensemble.n_paths", 100) as usize;
            let mut e = EnsembleConfig::new(sim, overrides.n_paths.unwrap_or(n_paths));
            e.burn_in = r.float("ensemble.burn_in", Some(e.burn_in));
            e.histogram_bins = r.uint("ensemble.histogram_bins", e.histogram_bins as u64) as usize;
            e.window_split = r.float("ensemble.window_split", Some(e.window_split));
            e
        });
        let file_out = r.string("output.dir").map(PathBuf::from);
        errors.append(&mut r.errors);

        errors.extend(
            ModelParams::violations(model[0], model[1], model[2], model[3], model[4], model[5])
                .into_iter()
                // NaN marks a key already reported as missing or mistyped.
                .filter(|e| !matches!(e, ModelError::NonPositive { value, .. } if value.is_nan()))
                .map(|e| e.to_string()),
        );
        errors.extend(
            NoiseIntensities::violations([sigma[0], sigma[1], sigma[2], sigma[3]])
                .into_iter()
                .map(|e| e.to_string()),
        );
        match &ensemble {
            Some(e) => errors.extend(e.violations()),
            None => errors.extend(sim.violations()),
        }
        if !errors.is_empty() {
            errors.dedup();
            return Err(ConfigError::Invalid(errors));
        }

        let params = ModelParams::new(model[0], model[1], model[2], model[3], model[4], model[5])
            .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
        let noise = NoiseIntensities::new(sigma[0], sigma[1], sigma[2], sigma[3])
            .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
        let schemes = if overrides.scheme.is_some() || schemes.is_empty() {
            vec![sim.scheme]
        } else {
            schemes
        };
        let out_dir = overrides
            .out_dir
            .clone()
            .or(env_out_dir)
            .or(file_out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        Ok(RunSpec {
            preset: preset.map(|p| p.name.to_string()),
            params,
            noise,
            sim,
            ensemble,
            out_dir,
            schemes,
        })
    }

    /// Canonical config text. Parsing it back yields the same spec.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        for (name, v) in PARAM_NAMES.iter().zip(self.params.as_array()) {
            writeln!(s, "model.{name} = {}", toml_float(v)).unwrap();
        }
        for (name, v) in NOISE_NAMES.iter().zip(self.noise.as_array()) {
            writeln!(s, "noise.{name} = {}", toml_float(v)).unwrap();
        }
        let sim = &self.sim;
        writeln!(s, "sim.dt = {}", toml_float(sim.dt)).unwrap();
        writeln!(s, "sim.t_final = {}", toml_float(sim.t_final)).unwrap();
        writeln!(s, "sim.x0 = {}", toml_float(sim.initial.x)).unwrap();
        writeln!(s, "sim.y0 = {}", toml_float(sim.initial.y)).unwrap();
        writeln!(s, "sim.z0 = {}", toml_float(sim.initial.z)).unwrap();
        writeln!(s, "sim.seed = \"{}\"", sim.seed).unwrap();
        writeln!(s, "sim.scheme = \"{}\"", sim.scheme).unwrap();
        writeln!(s, "sim.positivity = \"{}\"", sim.positivity.name()).unwrap();
        if let Some(e) = &self.ensemble {
            writeln!(s, "ensemble.n_paths = {}", e.n_paths).unwrap();
            writeln!(s, "ensemble.burn_in = {}", toml_float(e.burn_in)).unwrap();
            writeln!(s, "ensemble.histogram_bins = {}", e.histogram_bins).unwrap();
            writeln!(s, "ensemble.window_split = {}", toml_float(e.window_split)).unwrap();
        }
        s
    }

    /// SHA-256 of [`RunSpec::to_config_text`], hex encoded.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_config_text().as_bytes());
        digest.iter().fold(String::new(), |mut acc, b| {
            write!(acc, "{b:02x}").unwrap();
            acc
        })
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config_text())
    }
}

/// Shortest round-trip decimal that TOML reads back as a float.
fn toml_float(v: f64) -> String {
    let s = v.to_string();
    if s.contains(['.', 'e', 'E']) || !v.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn is_known_key(key: &str) -> bool {
    if key.starts_with(RUN_PREFIX) || key == "output.dir" {
        return true;
    }
    let Some((section, name)) = key.split_once('.') else {
        return false;
    };
    match section {
        "model" => PARAM_NAMES.contains(&name),
        "noise" => NOISE_NAMES.contains(&name),
        "sim" => SIM_KEYS.contains(&name),
        "ensemble" => ENSEMBLE_KEYS.contains(&name),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"
model.lambda = 0.33
model.beta = 0.013
model.eta = 0.023
model.mu = 0.05
model.gamma = 0.04
model.alpha = 0.006
noise.sigma4 = 0.01
sim.scheme = "milstein-paper"
"#;

    #[test]
    fn parses_dotted_and_sectioned_forms() {
        let a = parse_config_text(REFERENCE).unwrap();
        let b = parse_config_text("[model]\nbeta = 0.013\n[noise]\nsigma4 = 0.01\n").unwrap();
        assert_eq!(a["model.beta"], b["model.beta"]);
        assert_eq!(a["noise.sigma4"], b["noise.sigma4"]);
    }

    #[test]
    fn resolves_reference() {
        let map = parse_config_text(REFERENCE).unwrap();
        let spec = RunSpec::resolve(None, &map, &Overrides::default(), None).unwrap();
        assert_eq!(spec.params, ModelParams::reference_subcritical());
        assert_eq!(spec.noise.sigma4(), 0.01);
        assert_eq!(spec.sim.scheme, Scheme::MilsteinPaper);
        assert!(spec.ensemble.is_none());
        assert_eq!(spec.out_dir, PathBuf::from(DEFAULT_OUT_DIR));
    }

    #[test]
    fn missing_key_is_named() {
        let text = REFERENCE.replace("model.beta = 0.013\n", "");
        let map = parse_config_text(&text).unwrap();
        let err = RunSpec::resolve(None, &map, &Overrides::default(), None).unwrap_err();
        assert!(
            err.to_string().contains("missing key `model.beta`"),
            "{err}"
        );
    }

    #[test]
    fn every_violation_is_listed() {
        let text = format!(
            "{REFERENCE}model.gamma2 = 1\nsim.dt = -1\nnoise.sigma1 = -0.5\nensemble.n_paths = 0\n"
        )
        .replace("model.mu = 0.05", "model.mu = 0");
        let map = parse_config_text(&text).unwrap();
        let ConfigError::Invalid(v) =
            RunSpec::resolve(None, &map, &Overrides::default(), None).unwrap_err()
        else {
            panic!("expected validation error");
        };
        for needle in ["model.gamma2", "`mu`", "sim.dt", "sigma1", "n_paths"] {
            assert!(
                v.iter().any(|e| e.contains(needle)),
                "{needle} not in {v:?}"
            );
        }
    }

    #[test]
    fn canonical_text_round_trips() {
        let map = parse_config_text(&format!(
            "{REFERENCE}ensemble.n_paths = 7\nsim.seed = 18446744073709551615\n"
        ));
        // Integers above i64::MAX are not TOML; seeds that large go through strings.
        assert!(map.is_err());
        let map = parse_config_text(&format!(
            "{REFERENCE}ensemble.n_paths = 7\nsim.seed = \"18446744073709551615\"\n"
        ))
        .unwrap();
        let spec = RunSpec::resolve(None, &map, &Overrides::default(), None).unwrap();
        assert_eq!(spec.sim.seed, u64::MAX);
        let again = parse_config_text(&spec.to_config_text()).unwrap();
        let spec2 = RunSpec::resolve(None, &again, &Overrides::default(), None).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(spec.config_hash(), spec2.config_hash());
        assert_eq!(spec.config_hash().len(), 64);
    }

    #[test]
    fn overrides_take_precedence() {
        let map = parse_config_text(&format!("{REFERENCE}output.dir = \"from-file\"\n")).unwrap();
        let o = Overrides {
            seed: Some(42),
            scheme: Some(Scheme::Rk4),
            n_paths: Some(3),
            out_dir: None,
        };
        let spec = RunSpec::resolve(None, &map, &o, Some(PathBuf::from("from-env"))).unwrap();
        assert_eq!(spec.sim.seed, 42);
        assert_eq!(spec.schemes, vec![Scheme::Rk4]);
        assert_eq!(spec.ensemble.unwrap().n_paths, 3);
        assert_eq!(spec.out_dir, PathBuf::from("from-env"));
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        assert!(matches!(
            parse_config_text("model.beta = = 1"),
            Err(ConfigError::Parse(_))
        ));
    }
}
