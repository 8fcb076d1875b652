//! Experiment manifests: a TOML file describing the problem, the
//! activation/range/regime grid, seeds, and optional protocol overrides.
//! Command-line flags (seed, workers, output, preset) win over the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lgc_core::walk::Regime;
use lgc_core::ActivationKind;

use crate::{CliError, CliResult};

/// Which benchmark to run: a named built-in or a custom CSV with a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Named(String),
    Custom {
        csv: PathBuf,
        schema: PathBuf,
        hidden: usize,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> String {
        match self {
            ProblemSpec::Named(n) => n.to_ascii_lowercase(),
            ProblemSpec::Custom { csv, .. } => csv
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("custom")
                .to_string(),
        }
    }
}

/// Optional overrides of the sampling protocol. Anything unset follows
/// the protocol defaults (10·m walks, 1000/100 steps, batch 100 for the
/// image problem, every-step Hessians).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub walk_count: Option<usize>,
    pub micro_steps: Option<usize>,
    pub macro_steps: Option<usize>,
    pub max_step: Option<f64>,
    pub hessian_stride: Option<usize>,
    pub hessian_cap: Option<usize>,
    pub batch_size: Option<usize>,
    pub eval_batch_cap: Option<usize>,
    pub subsample: Option<usize>,
    pub tau_abs: Option<f64>,
    pub tau_rel: Option<f64>,
    pub theta_e: Option<f64>,
    pub theta_g: Option<f64>,
    pub theta_g_median_factor: Option<f64>,
    pub link_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub problem: ProblemSpec,
    pub activations: Vec<String>,
    pub init_ranges: Vec<f64>,
    pub regimes: Vec<String>,
    #[serde(default)]
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// 0 means "all cores".
    #[serde(default)]
    pub workers: usize,
    /// auto | on | off; auto disables Hessians for the image problem.
    #[serde(default = "default_hessian")]
    pub hessian: String,
    /// csv | jsonl cloud files.
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default)]
    pub overrides: Overrides,
    /// Set by `--preset`; recorded in metadata so shrunk runs are never
    /// mistaken for protocol-scale ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

fn default_hessian() -> String {
    "auto".into()
}

fn default_format() -> String {
    "csv".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianMode {
    Auto,
    On,
    Off,
}

impl Manifest {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid manifest {}: {e}", path.display())))
    }

    pub fn activations(&self) -> CliResult<Vec<ActivationKind>> {
        self.activations
            .iter()
            .map(|s| ActivationKind::parse(s).map_err(|e| CliError::Usage(e.to_string())))
            .collect()
    }

    pub fn regimes(&self) -> CliResult<Vec<Regime>> {
        self.regimes
            .iter()
            .map(|s| Regime::parse(s).map_err(|e| CliError::Usage(e.to_string())))
            .collect()
    }

    pub fn hessian_mode(&self) -> CliResult<HessianMode> {
        match self.hessian.to_ascii_lowercase().as_str() {
            "auto" => Ok(HessianMode::Auto),
            "on" => Ok(HessianMode::On),
            "off" => Ok(HessianMode::Off),
            other => Err(CliError::Usage(format!(
                "hessian must be auto|on|off, got {other:?}"
            ))),
        }
    }

    pub fn cloud_format(&self) -> CliResult<lgc_core::cloud::CloudFormat> {
        match self.format.to_ascii_lowercase().as_str() {
            "csv" => Ok(lgc_core::cloud::CloudFormat::Csv),
            "jsonl" => Ok(lgc_core::cloud::CloudFormat::Jsonl),
            other => Err(CliError::Usage(format!(
                "format must be csv|jsonl, got {other:?}"
            ))),
        }
    }

    /// Structural validation beyond what serde enforces.
    pub fn validate(&self) -> CliResult<()> {
        if self.activations.is_empty() {
            return Err(CliError::Usage("activations must not be empty".into()));
        }
        if self.init_ranges.is_empty() {
            return Err(CliError::Usage("init_ranges must not be empty".into()));
        }
        if self.regimes.is_empty() {
            return Err(CliError::Usage("regimes must not be empty".into()));
        }
        for &a in &self.init_ranges {
            if a <= 0.0 || !a.is_finite() {
                return Err(CliError::Usage(format!(
                    "init_ranges entries must be positive half-widths, got {a}"
                )));
            }
        }
        self.activations()?;
        self.regimes()?;
        self.hessian_mode()?;
        self.cloud_format()?;
        if let ProblemSpec::Named(name) = &self.problem {
            let known = ["xor", "iris", "heart", "mnist"];
            if !known.contains(&name.to_ascii_lowercase().as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown problem {name:?} (expected one of {known:?}, or a [problem] table with csv/schema/hidden)"
                )));
            }
        }
        if let Some(steps) = self.overrides.micro_steps.or(self.overrides.macro_steps) {
            if steps == 0 {
                return Err(CliError::Usage("step overrides must be at least 1".into()));
            }
        }
        if self.overrides.walk_count == Some(0) {
            return Err(CliError::Usage("walk_count must be at least 1".into()));
        }
        Ok(())
    }

    /// Applies the desk preset: 10 walks instead of 10·m and a 2000-pattern
    /// subsample for the image problem, so the full grid runs in minutes.
    /// Step counts stay at protocol scale — the per-walk convergence is
    /// where the landscape findings live. Explicit file overrides for the
    /// same knobs are replaced (flags win over the file).
    pub fn apply_preset(&mut self, preset: &str) -> CliResult<()> {
        match preset {
            "desk" => {
                self.preset = Some("desk".into());
                self.overrides.walk_count = Some(10);
                if self.problem.name() == "mnist" {
                    self.overrides.subsample = Some(2000);
                }
                Ok(())
            }
            "full" => {
                self.preset = None;
                Ok(())
            }
            other => Err(CliError::Usage(format!(
                "unknown preset {other:?} (expected desk|full)"
            ))),
        }
    }
}

/// Environment variable naming the default dataset directory.
pub const DATA_DIR_ENV: &str = "LGC_DATA_DIR";

pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
problem = "xor"
activations = ["tanh", "relu", "elu"]
init_ranges = [1.0, 10.0]
regimes = ["micro", "macro"]
master_seed = 42
output_dir = "out"
"#;

    #[test]
    fn minimal_manifest_parses_with_defaults() {
        let m: Manifest = toml::from_str(MINIMAL).unwrap();
        m.validate().unwrap();
        assert_eq!(m.hessian, "auto");
        assert_eq!(m.format, "csv");
        assert_eq!(m.workers, 0);
        assert_eq!(m.activations().unwrap().len(), 3);
    }

    #[test]
    fn custom_problem_table_parses() {
        // Inline-table form.
        let inline = r#"
problem = { csv = "data/my.csv", schema = "data/my.schema.json", hidden = 8 }
activations = ["tanh"]
init_ranges = [1.0]
regimes = ["micro"]
output_dir = "out"
"#;
        let m: Manifest = toml::from_str(inline).unwrap();
        m.validate().unwrap();
        assert_eq!(m.problem.name(), "my");

        // Table form; the [problem] header must come after top-level keys.
        let table = r#"
activations = ["tanh"]
init_ranges = [1.0]
regimes = ["micro"]
output_dir = "out"

[problem]
csv = "data/my.csv"
schema = "data/my.schema.json"
hidden = 8
"#;
        let m: Manifest = toml::from_str(table).unwrap();
        m.validate().unwrap();
        assert_eq!(m.problem.name(), "my");
    }

    #[test]
    fn bad_fields_are_usage_errors() {
        let mut m: Manifest = toml::from_str(MINIMAL).unwrap();
        m.activations = vec!["softmax".into()];
        assert!(matches!(m.validate(), Err(CliError::Usage(_))));

        let mut m: Manifest = toml::from_str(MINIMAL).unwrap();
        m.init_ranges = vec![-1.0];
        assert!(matches!(m.validate(), Err(CliError::Usage(_))));

        let mut m: Manifest = toml::from_str(MINIMAL).unwrap();
        m.problem = ProblemSpec::Named("diabetes".into());
        assert!(matches!(m.validate(), Err(CliError::Usage(_))));

        assert!(toml::from_str::<Manifest>("problem = \"xor\"\nbogus = 1").is_err());
    }

    #[test]
    fn desk_preset_shrinks_the_protocol() {
        let mut m: Manifest = toml::from_str(MINIMAL).unwrap();
        m.apply_preset("desk").unwrap();
        assert_eq!(m.overrides.walk_count, Some(10));
        // Step counts stay at protocol scale.
        assert_eq!(m.overrides.micro_steps, None);
        assert_eq!(m.preset.as_deref(), Some("desk"));
        assert!(m.apply_preset("huge").is_err());

        let mut m: Manifest = toml::from_str(MINIMAL).unwrap();
        m.problem = ProblemSpec::Named("mnist".into());
        m.apply_preset("desk").unwrap();
        assert_eq!(m.overrides.subsample, Some(2000));
    }
}
