//! Run configuration: a TOML document with top-level settings and an
//! `[[experiments]]` array of tables.

use std::path::PathBuf;

use knlab_core::experiments::{Ladder, Settings};
use knlab_core::geometry::{Surface, SurfaceDescriptor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Added (wrapping) to every `random_harmonic` seed and used as the
    /// seed of the sampled checks.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// When present, every family must live on this surface.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceDescriptor>,
    /// Families used by experiments that do not list their own.
    #[serde(default = "default_families")]
    pub families: Vec<Ladder>,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub experiments: Vec<ExperimentSpec>,
}

fn default_families() -> Vec<Ladder> {
    vec![Ladder::HighestWeight]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: None,
            surface: None,
            families: default_families(),
            settings: Settings::default(),
            experiments: Vec::new(),
        }
    }
}

/// One experiment and its parameters. Which keys are accepted depends on
/// the experiment; see [`registry::REGISTRY`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coincident: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<Ladder>>,
}

impl ExperimentSpec {
    pub fn named(name: &str) -> Self {
        ExperimentSpec {
            name: name.to_string(),
            ..Default::default()
        }
    }

    /// Names of the keys that are set, in declaration order.
    pub fn keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => {$(
                if self.$f.is_some() {
                    keys.push(stringify!($f));
                }
            )*};
        }
        check!(p, ps, k_range, eps_grid, ns, slopes, lambda, lambdas, count, coincident, grid, families);
        keys
    }

    /// Fill every unset key from `defaults`.
    fn fill(&mut self, defaults: &ExperimentSpec) {
        macro_rules! fill {
            ($($f:ident),*) => {$(
                if self.$f.is_none() {
                    self.$f = defaults.$f.clone();
                }
            )*};
        }
        fill!(p, ps, k_range, eps_grid, ns, slopes, lambda, lambdas, count, coincident, grid, families);
    }
}

impl RunConfig {
    /// Parse and validate a TOML document. Errors carry the offending
    /// line and key.
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::config("config", e.to_string().trim_end()))?;
        config.validate(Some(text))?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::parse(&text).map_err(|e| match e {
            CliError::Config { path: p, message } => CliError::config(format!("{}: {p}", path.display()), message),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// Check experiment names, per-experiment keys and parameter ranges.
    /// `source`, when given, is used to point at the offending line.
    pub fn validate(&self, source: Option<&str>) -> Result<()> {
        let lines = source.map(experiment_lines).unwrap_or_default();
        let at = |i: usize| match lines.get(i) {
            Some(line) => format!("line {line}, experiments[{i}]"),
            None => format!("experiments[{i}]"),
        };
        let scale = self.settings.resolution_scale;
        if scale.is_nan() || scale <= 0.0 || scale.is_infinite() {
            return Err(CliError::config(
                "settings.resolution_scale",
                format!("must be positive and finite, got {scale}"),
            ));
        }
        if let Some(descriptor) = &self.surface {
            let surface = Surface::new(descriptor.clone()).map_err(|e| CliError::config("surface", e.to_string()))?;
            for ladder in self.all_families() {
                let field = ladder
                    .field(4)
                    .map_err(|e| CliError::config("families", e.to_string()))?;
                if field.surface().descriptor() != surface.descriptor() {
                    return Err(CliError::config(
                        "families",
                        format!("family `{}` does not live on the configured surface", ladder.label()),
                    ));
                }
            }
        }
        for (i, spec) in self.experiments.iter().enumerate() {
            let Some(info) = registry::lookup(&spec.name) else {
                return Err(CliError::config(
                    format!("{}.name", at(i)),
                    format!("unknown experiment `{}`; run `knlab list`", spec.name),
                ));
            };
            let allowed = info.defaults().keys();
            for key in spec.keys() {
                if !allowed.contains(&key) {
                    return Err(CliError::config(
                        format!("{}.{key}", at(i)),
                        format!(
                            "`{key}` is not a parameter of {} (accepted: {})",
                            spec.name,
                            if allowed.is_empty() {
                                "none".to_string()
                            } else {
                                allowed.join(", ")
                            }
                        ),
                    ));
                }
            }
            registry::check_params(spec).map_err(|(key, msg)| CliError::config(format!("{}.{key}", at(i)), msg))?;
        }
        Ok(())
    }

    fn all_families(&self) -> Vec<&Ladder> {
        let mut v: Vec<&Ladder> = self.families.iter().collect();
        for e in &self.experiments {
            v.extend(e.families.iter().flatten());
        }
        v
    }

    /// The configuration with every experiment parameter made explicit.
    pub fn resolved(&self) -> RunConfig {
        let mut out = self.clone();
        for spec in &mut out.experiments {
            if let Some(info) = registry::lookup(&spec.name) {
                let mut defaults = info.defaults();
                if defaults.families.is_some() {
                    defaults.families = Some(self.families.clone());
                }
                spec.fill(&defaults);
            }
        }
        out
    }

    /// SHA-256 of the resolved configuration without the output
    /// directory, as lowercase hex.
    pub fn hash(&self) -> String {
        let mut canonical = self.resolved();
        canonical.out = None;
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `ladder` with the run seed applied.
    pub fn seeded(&self, ladder: &Ladder) -> Ladder {
        match ladder {
            Ladder::RandomHarmonic { seed } => Ladder::RandomHarmonic {
                seed: seed.wrapping_add(self.seed),
            },
            other => other.clone(),
        }
    }
}

/// 1-based line numbers of the `[[experiments]]` headers.
fn experiment_lines(text: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with("[[experiments]]"))
        .map(|(i, _)| i + 1)
        .collect()
}
