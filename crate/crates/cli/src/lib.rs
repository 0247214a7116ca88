//! Command-line runner for the knlab experiments: TOML run
//! configurations, an experiment registry, and CSV/JSON artifacts.

pub mod app;
pub mod config;
pub mod error;
pub mod registry;
pub mod run;

pub use config::{ExperimentSpec, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, Manifest, RunOptions, RunStatus};

use knlab_core::experiments::Ladder;

/// Parses `zonal`, `highest_weight`, `torus_wave` or
/// `random_harmonic[:SEED]` (hyphens accepted for underscores).
pub fn parse_family(text: &str, default_seed: u64) -> Result<Ladder> {
    let norm = text.trim().replace('-', "_");
    let (head, seed) = match norm.split_once(':') {
        Some((h, s)) => (
            h.to_string(),
            Some(
                s.parse::<u64>()
                    .map_err(|_| CliError::config("family", format!("bad seed in `{text}`")))?,
            ),
        ),
        None => (norm.clone(), None),
    };
    let ladder = match head.as_str() {
        "zonal" => Ladder::Zonal,
        "highest_weight" => Ladder::HighestWeight,
        "torus_wave" => Ladder::TorusWave,
        "random_harmonic" => Ladder::RandomHarmonic {
            seed: seed.unwrap_or(default_seed),
        },
        _ => {
            return Err(CliError::config(
                "family",
                format!("unknown family `{text}` (zonal, highest_weight, torus_wave, random_harmonic[:SEED])"),
            ))
        }
    };
    if seed.is_some() && !matches!(ladder, Ladder::RandomHarmonic { .. }) {
        return Err(CliError::config("family", format!("`{head}` takes no seed")));
    }
    Ok(ladder)
}

/// `knlab list` output: one block per experiment, sorted by name.
pub fn listing() -> String {
    let mut out = String::new();
    for info in registry::REGISTRY {
        out.push_str(&format!("{}\n    {}\n", info.name, info.summary));
        for line in info.schema() {
            out.push_str(&format!("    {line}\n"));
        }
    }
    out
}

/// `delta(p)` table as CSV.
pub fn delta_csv() -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in knlab_core::experiments::delta_table() {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io("stdout", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests;
