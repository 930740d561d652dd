//! Run configuration: a versioned TOML file with `[spec]`, `[grid]` and
//! `[run]` sections.

use std::path::PathBuf;

use glp_core::glp::{GlpSpec, PathGrid, Sampler, SpecConfig};
use glp_core::DensityFamily;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub spec: SpecConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub run: RunSection,
}

/// Either `steps` equal steps on `[0, end]` or explicit `times`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Path CSV; stdout when absent or `-`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// JSON-lines verification report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

fn default_sampler() -> Sampler {
    Sampler::Master
}

fn default_paths() -> usize {
    1000
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            sampler: default_sampler(),
            seed: 0,
            paths: default_paths(),
            out: None,
            report: None,
        }
    }
}

/// Where the keys that semantic errors point at sit in the source.
#[derive(Deserialize)]
struct Spans {
    version: Option<toml::Spanned<toml::Value>>,
    spec: Option<toml::Spanned<toml::Value>>,
    grid: Option<toml::Spanned<toml::Value>>,
    run: Option<RunSpans>,
}

#[derive(Deserialize)]
struct RunSpans {
    sampler: Option<toml::Spanned<toml::Value>>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub spec: GlpSpec,
    pub grid: PathGrid,
    origin: String,
    sampler_line: Option<usize>,
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

fn at_line(origin: &str, line: Option<usize>, msg: impl std::fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Config(format!("{origin} at line {l}: {msg}")),
        None => CliError::Config(format!("{origin}: {msg}")),
    }
}

impl LoadedConfig {
    pub fn parse(source: &str, origin: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(source)
            .map_err(|e| at_line(origin, e.span().map(|s| line_of(source, s.start)), e.message()))?;
        let spans: Spans = toml::from_str(source).map_err(|e| at_line(origin, None, e.message()))?;
        let line = |s: Option<toml::Spanned<toml::Value>>| s.map(|s| line_of(source, s.span().start));
        if config.version != CONFIG_VERSION {
            return Err(at_line(
                origin,
                line(spans.version),
                format!("unsupported config version {} (expected {CONFIG_VERSION})", config.version),
            ));
        }
        let spec = GlpSpec::from_config(&config.spec).map_err(|e| at_line(origin, line(spans.spec), e))?;
        let grid = config.grid.build().map_err(|e| at_line(origin, line(spans.grid), e))?;
        let loaded = LoadedConfig {
            sampler_line: line(spans.run.and_then(|r| r.sampler)),
            origin: origin.to_string(),
            config,
            spec,
            grid,
        };
        loaded.check_sampler(loaded.config.run.sampler)?;
        Ok(loaded)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&source, &path.display().to_string())
    }

    /// Rejects samplers the spec cannot use.
    pub fn check_sampler(&self, sampler: Sampler) -> Result<(), CliError> {
        if sampler == Sampler::Anticipative && !matches!(self.spec.family(), DensityFamily::Brownian { .. }) {
            return Err(at_line(
                &self.origin,
                self.sampler_line,
                "the anticipative sampler requires the Brownian family",
            ));
        }
        Ok(())
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<PathGrid, String> {
        match (self.steps, &self.times) {
            (Some(steps), None) => PathGrid::uniform(steps, self.end.unwrap_or(1.0)).map_err(|e| e.to_string()),
            (None, Some(times)) if self.end.is_none() => PathGrid::new(times.clone()).map_err(|e| e.to_string()),
            _ => Err("[grid] needs either `steps` (with optional `end`) or `times`".into()),
        }
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
version = 1

[spec]
family = { kind = "brownian", sigma = 1.0 }
m = [1.0, 2.0]

[[spec.law.atoms]]
location = -2.0
mass = 0.5

[[spec.law.atoms]]
location = 2.0
mass = 0.5

[grid]
steps = 10

[run]
sampler = "anticipative"
seed = 7
paths = 10
"#;

    #[test]
    fn parses_and_round_trips() {
        let a = LoadedConfig::parse(BASE, "base").unwrap();
        assert_eq!(a.grid.len(), 11);
        let text = a.config.to_toml().unwrap();
        let b = LoadedConfig::parse(&text, "again").unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(a.spec, b.spec);
    }

    #[test]
    fn anticipative_needs_brownian_and_names_the_line() {
        let src = BASE.replace(r#"{ kind = "brownian", sigma = 1.0 }"#, r#"{ kind = "poisson" }"#).replace(
            "location = -2.0",
            "location = 1.0",
        );
        let err = LoadedConfig::parse(&src, "cfg").unwrap_err().to_string();
        let line = src.lines().position(|l| l.starts_with("sampler")).unwrap() + 1;
        assert!(err.contains(&format!("line {line}")), "{err}");
        assert!(err.contains("anticipative"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let src = BASE.replace("steps = 10", "steps = ten");
        let err = LoadedConfig::parse(&src, "cfg").unwrap_err().to_string();
        let line = src.lines().position(|l| l.starts_with("steps")).unwrap() + 1;
        assert!(err.contains(&format!("line {line}")), "{err}");
    }

    #[test]
    fn rejects_other_versions_and_ambiguous_grids() {
        assert!(LoadedConfig::parse(&BASE.replace("version = 1", "version = 2"), "cfg").is_err());
        let both = BASE.replace("steps = 10", "steps = 10\ntimes = [0.0, 0.5]");
        assert!(LoadedConfig::parse(&both, "cfg").unwrap_err().to_string().contains("[grid]"));
    }
}
