use std::path::{Path, PathBuf};

use anyhow::Context;
use relattr::{ExperimentSettings, Method, PlaceGrid, QueryPrototypes};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Paths {
    pub train_features: PathBuf,
    pub test_features: PathBuf,
    pub models_dir: PathBuf,
    /// Report JSON destination.
    pub output: PathBuf,
    /// Optional per-trial CSV destination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_csv: Option<PathBuf>,
}

/// Contents of the `evaluate` config file. Relative paths are resolved
/// against the directory holding the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: PlaceGrid,
    pub num_trials: usize,
    pub classes_per_trial: usize,
    #[serde(default = "one")]
    pub prototypes_per_class: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    #[serde(default)]
    pub query_prototypes: QueryPrototypes,
    #[serde(default = "hundred")]
    pub max_resample_attempts: usize,
    pub paths: Paths,
}

fn one() -> usize {
    1
}

fn hundred() -> usize {
    100
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| relattr::Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.train_features,
            &mut p.test_features,
            &mut p.models_dir,
            &mut p.output,
        ] {
            *slot = base.join(&*slot);
        }
        if let Some(csv) = &mut p.trial_csv {
            *csv = base.join(&*csv);
        }
        Ok(cfg)
    }

    pub fn settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            num_trials: self.num_trials,
            classes_per_trial: self.classes_per_trial,
            prototypes_per_class: self.prototypes_per_class,
            seed: self.seed,
            methods: self.methods.clone(),
            query_prototypes: self.query_prototypes,
            max_resample_attempts: self.max_resample_attempts,
        }
    }
}

/// Parses `x_min,x_max,y_min,y_max,cols,rows`.
pub fn parse_grid(s: &str) -> Result<PlaceGrid, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err("expected x_min,x_max,y_min,y_max,cols,rows".into());
    }
    let f = |i: usize| {
        parts[i]
            .parse::<f64>()
            .map_err(|e| format!("{}: {e}", parts[i]))
    };
    let u = |i: usize| {
        parts[i]
            .parse::<u32>()
            .map_err(|e| format!("{}: {e}", parts[i]))
    };
    PlaceGrid::new((f(0)?, f(1)?), (f(2)?, f(3)?), u(4)?, u(5)?).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag() {
        let g = parse_grid("-740,130,-330,120,10,10").unwrap();
        assert_eq!(g, PlaceGrid::nclt());
        assert!(parse_grid("0,1,0,1,0,1").is_err());
        assert!(parse_grid("0,1,0,1").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(
            &path,
            r#"{"grid":{"x_range":[0,1],"y_range":[0,1],"cols":1,"rows":1},
                "num_trials":2,"classes_per_trial":1,"methods":["BRS","ABS_L1"],"seed":4,
                "paths":{"train_features":"a.csv","test_features":"/abs/b.csv",
                         "models_dir":"m","output":"r.json"}}"#,
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.paths.train_features, dir.path().join("a.csv"));
        assert_eq!(cfg.paths.test_features, PathBuf::from("/abs/b.csv"));
        assert_eq!(cfg.prototypes_per_class, 1);
        assert_eq!(cfg.settings().methods, [Method::Brs, Method::AbsL1]);
    }

    #[test]
    fn unknown_fields_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"num_trials": 1, "bogus": true}"#).unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err();
        assert!(matches!(
            err.downcast_ref::<relattr::Error>(),
            Some(relattr::Error::Config(_))
        ));
    }
}
