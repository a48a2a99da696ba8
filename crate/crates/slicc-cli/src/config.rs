//! Experiment specs: a base training config plus named variants fanned out
//! over seeds. TOML is the native format; JSON is accepted as a fallback.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use slicc_core::reward::RewardPrototype;
use slicc_core::trainer::{Algorithm, TrainConfig};

fn default_plots() -> bool {
    true
}

/// One experiment: every variant runs once per seed, into its own
/// directory under the output root.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_plots")]
    pub plots: bool,
    #[serde(default)]
    pub base: TrainConfig,
    #[serde(rename = "variant")]
    pub variants: Vec<VariantSpec>,
}

/// A named (algorithm, prototype) cell of the sweep. Unset fields fall
/// back to the base config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub name: String,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    #[serde(default)]
    pub prototype: Option<RewardPrototype>,
    pub seeds: Vec<u64>,
}

/// Variant and run directory names; keeps paths portable.
fn path_safe(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !path_safe(&self.name) {
            bail!("experiment name {:?} must be non-empty [A-Za-z0-9._-]", self.name);
        }
        if self.variants.is_empty() {
            bail!("an experiment needs at least one variant");
        }
        let mut seen = BTreeSet::new();
        for v in &self.variants {
            if !path_safe(&v.name) {
                bail!("variant name {:?} must be non-empty [A-Za-z0-9._-]", v.name);
            }
            if !seen.insert(v.name.as_str()) {
                bail!("variant name {:?} appears twice", v.name);
            }
            if v.seeds.is_empty() {
                bail!("variant {:?} has no seeds", v.name);
            }
            self.resolved(v, v.seeds[0])
                .validate()
                .with_context(|| format!("variant {:?}", v.name))?;
        }
        Ok(())
    }

    /// The full training config for one (variant, seed) run.
    pub fn resolved(&self, v: &VariantSpec, seed: u64) -> TrainConfig {
        let mut cfg = self.base.clone();
        if let Some(a) = v.algorithm {
            cfg.algorithm = a;
        }
        if let Some(p) = v.prototype {
            cfg.prototype = p;
        }
        cfg.seed = seed;
        cfg
    }
}

/// Parse a spec from disk. The extension picks the parser; anything not
/// named .json is tried as TOML first so errors carry TOML's line context.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    let spec: ExperimentSpec = if is_json {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        match toml::from_str(&text) {
            Ok(spec) => spec,
            Err(toml_err) => match serde_json::from_str(&text) {
                Ok(spec) => spec,
                Err(_) => {
                    return Err(toml_err)
                        .with_context(|| format!("parsing {}", path.display()))
                }
            },
        }
    };
    Ok(spec)
}

/// What a run directory remembers about itself; `config` alone is enough
/// to reproduce the run bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub experiment: String,
    pub variant: String,
    pub config: TrainConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "demo"

[[variant]]
name = "slicc-alpha"
seeds = [0, 1]
"#;

    #[test]
    fn minimal_toml_fills_defaults() {
        let spec: ExperimentSpec = toml::from_str(MINIMAL).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.base, TrainConfig::default());
        assert!(spec.plots);
        let cfg = spec.resolved(&spec.variants[0], 1);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.algorithm, Algorithm::Slicc);
    }

    #[test]
    fn variant_fields_override_base() {
        let text = r#"
name = "demo"

[base]
episodes = 10
hidden_dim = 8

[base.env]
horizon = 20
min_steps = 5

[[variant]]
name = "cent"
algorithm = "centralized"
prototype = "centralized_g"
seeds = [3]
"#;
        let spec: ExperimentSpec = toml::from_str(text).unwrap();
        spec.validate().unwrap();
        let cfg = spec.resolved(&spec.variants[0], 3);
        assert_eq!(cfg.algorithm, Algorithm::Centralized);
        assert_eq!(cfg.prototype, RewardPrototype::CentralizedG);
        assert_eq!(cfg.episodes, 10);
        assert_eq!(cfg.env.horizon, 20);
        // Untouched fields keep their defaults.
        assert_eq!(cfg.gamma, TrainConfig::default().gamma);
        assert_eq!(cfg.env.sigma, 0.5);
    }

    #[test]
    fn round_trip_is_identity() {
        let spec: ExperimentSpec = toml::from_str(MINIMAL).unwrap();
        let toml_text = toml::to_string(&spec).unwrap();
        let again: ExperimentSpec = toml::from_str(&toml_text).unwrap();
        assert_eq!(format!("{spec:?}"), format!("{again:?}"));
        let json_text = serde_json::to_string(&spec).unwrap();
        let again: ExperimentSpec = serde_json::from_str(&json_text).unwrap();
        assert_eq!(format!("{spec:?}"), format!("{again:?}"));
    }

    #[test]
    fn bad_specs_are_rejected() {
        let dup = r#"
name = "demo"
[[variant]]
name = "a"
seeds = [0]
[[variant]]
name = "a"
seeds = [1]
"#;
        let spec: ExperimentSpec = toml::from_str(dup).unwrap();
        assert!(spec.validate().unwrap_err().to_string().contains("twice"));

        let empty_seeds = r#"
name = "demo"
[[variant]]
name = "a"
seeds = []
"#;
        let spec: ExperimentSpec = toml::from_str(empty_seeds).unwrap();
        assert!(spec.validate().is_err());

        let no_variants = "name = \"demo\"\nvariant = []\n";
        let spec: ExperimentSpec = toml::from_str(no_variants).unwrap();
        assert!(spec.validate().is_err());

        let weird_name = r#"
name = "de mo"
[[variant]]
name = "a"
seeds = [0]
"#;
        let spec: ExperimentSpec = toml::from_str(weird_name).unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn unknown_and_missing_fields_name_themselves() {
        let typo = r#"
name = "demo"
episodez = 3
[[variant]]
name = "a"
seeds = [0]
"#;
        let err = toml::from_str::<ExperimentSpec>(typo).unwrap_err().to_string();
        assert!(err.contains("episodez"), "{err}");

        let missing = "[[variant]]\nname = \"a\"\nseeds = [0]\n";
        let err = toml::from_str::<ExperimentSpec>(missing).unwrap_err().to_string();
        assert!(err.contains("name"), "{err}");

        let bad_field = r#"
name = "demo"
[base]
gamma = "high"
[[variant]]
name = "a"
seeds = [0]
"#;
        let err = toml::from_str::<ExperimentSpec>(bad_field).unwrap_err().to_string();
        assert!(err.contains("gamma") || err.contains("invalid type"), "{err}");
    }
}
