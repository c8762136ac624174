//! Named parameterisations of the reference figure regimes.
//!
//! Seeds for the published sample paths are unknown, so a preset reproduces
//! the regime (parameters, noise, horizon, scheme), not the exact curves.
//! `figN` is shorthand for group (a) of figure N.

use super::config::ConfigMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub mu: f64,
    pub sigma: [f64; 4],
    pub description: &'static str,
}

const SUB: f64 = 0.05;
const SUPER: f64 = 0.006;

pub const PRESETS: [Preset; 14] = [
    Preset {
        name: "fig1",
        mu: SUB,
        sigma: [0.0; 4],
        description: "R0 < 1, noiseless",
    },
    Preset {
        name: "fig2",
        mu: SUPER,
        sigma: [0.0; 4],
        description: "R0 > 1, noiseless",
    },
    Preset {
        name: "fig3a",
        mu: SUB,
        sigma: [0.0, 0.0, 0.0, 0.01],
        description: "R0 < 1, coupling noise 0.01",
    },
    Preset {
        name: "fig3b",
        mu: SUB,
        sigma: [0.0, 0.0, 0.0, 0.03],
        description: "R0 < 1, coupling noise 0.03",
    },
    Preset {
        name: "fig4a",
        mu: SUPER,
        sigma: [0.0, 0.0, 0.0, 0.01],
        description: "R0 > 1, coupling noise 0.01",
    },
    Preset {
        name: "fig4b",
        mu: SUPER,
        sigma: [0.0, 0.0, 0.0, 0.03],
        description: "R0 > 1, coupling noise 0.03",
    },
    Preset {
        name: "fig5a",
        mu: SUB,
        sigma: [0.01, 0.02, 0.03, 0.0],
        description: "R0 < 1, compartment noise",
    },
    Preset {
        name: "fig5b",
        mu: SUB,
        sigma: [0.03, 0.02, 0.01, 0.0],
        description: "R0 < 1, compartment noise",
    },
    Preset {
        name: "fig6a",
        mu: SUPER,
        sigma: [0.01, 0.02, 0.03, 0.0],
        description: "R0 > 1, compartment noise",
    },
    Preset {
        name: "fig6b",
        mu: SUPER,
        sigma: [0.03, 0.02, 0.01, 0.0],
        description: "R0 > 1, compartment noise",
    },
    Preset {
        name: "fig7a",
        mu: SUB,
        sigma: [0.01, 0.02, 0.03, 0.01],
        description: "R0 < 1, all noise sources",
    },
    Preset {
        name: "fig7b",
        mu: SUB,
        sigma: [0.03, 0.02, 0.01, 0.03],
        description: "R0 < 1, all noise sources",
    },
    Preset {
        name: "fig8a",
        mu: SUPER,
        sigma: [0.01, 0.02, 0.03, 0.01],
        description: "R0 > 1, all noise sources",
    },
    Preset {
        name: "fig8b",
        mu: SUPER,
        sigma: [0.03, 0.02, 0.01, 0.03],
        description: "R0 > 1, all noise sources",
    },
];

impl Preset {
    pub fn lookup(name: &str) -> Option<&'static Preset> {
        let full = match name {
            "fig3" | "fig4" | "fig5" | "fig6" | "fig7" | "fig8" => format!("{name}a"),
            other => other.to_string(),
        };
        PRESETS.iter().find(|p| p.name == full)
    }

    pub fn config_map(&self) -> ConfigMap {
        let f = toml::Value::Float;
        let mut m = ConfigMap::new();
        for (k, v) in [
            ("model.lambda", 0.33),
            ("model.beta", 0.013),
            ("model.eta", 0.023),
            ("model.mu", self.mu),
            ("model.gamma", 0.04),
            ("model.alpha", 0.006),
            ("noise.sigma1", self.sigma[0]),
            ("noise.sigma2", self.sigma[1]),
            ("noise.sigma3", self.sigma[2]),
            ("noise.sigma4", self.sigma[3]),
            ("sim.dt", 0.1),
            ("sim.t_final", 400.0),
            ("sim.x0", 10.0),
            ("sim.y0", 5.0),
            ("sim.z0", 2.0),
            ("ensemble.burn_in", 0.0),
            ("ensemble.window_split", 0.5),
        ] {
            m.insert(k.to_string(), f(v));
        }
        m.insert(
            "sim.scheme".into(),
            toml::Value::String("milstein-paper".into()),
        );
        m.insert("ensemble.n_paths".into(), toml::Value::Integer(200));
        m.insert("ensemble.histogram_bins".into(), toml::Value::Integer(20));
        m
    }
}
