//! Flat `key = value` configuration files.
//!
//! Keys use the long CLI flag names without the leading dashes
//! (`input-scaling`, `learning-rate`, ...); underscores are accepted too.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pta_core::{ExperimentConfig, ModelKind, TaskKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub task: Option<TaskKind>,
    pub model: Option<ModelKind>,
    pub units: Option<usize>,
    pub input_scaling: Option<f64>,
    pub rho: Option<f64>,
    pub kappa: Option<f64>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub budget: Option<usize>,
    pub length: Option<usize>,
    pub washout: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", lineno + 1);
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

impl Overrides {
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut o = Overrides::default();
        for (k, v) in pairs {
            match k.as_str() {
                "task" => o.task = Some(parse(k, v)?),
                "model" => o.model = Some(parse(k, v)?),
                "units" => o.units = Some(parse(k, v)?),
                "input-scaling" => o.input_scaling = Some(parse(k, v)?),
                "rho" => o.rho = Some(parse(k, v)?),
                "kappa" => o.kappa = Some(parse(k, v)?),
                "repetitions" => o.repetitions = Some(parse(k, v)?),
                "seed" => o.seed = Some(parse(k, v)?),
                "epochs" => o.epochs = Some(parse(k, v)?),
                "learning-rate" => o.learning_rate = Some(parse(k, v)?),
                "momentum" => o.momentum = Some(parse(k, v)?),
                "budget" => o.budget = Some(parse(k, v)?),
                "length" => o.length = Some(parse(k, v)?),
                "washout" => o.washout = Some(parse(k, v)?),
                "out" => o.out = Some(PathBuf::from(v)),
                other => bail!("unknown configuration key `{other}`"),
            }
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let pairs = parse_pairs(&text).with_context(|| format!("parsing {}", path.display()))?;
        Self::from_pairs(&pairs).with_context(|| format!("in {}", path.display()))
    }

    /// Values set in `top` win over values in `self`.
    pub fn layered(self, top: Overrides) -> Overrides {
        Overrides {
            task: top.task.or(self.task),
            model: top.model.or(self.model),
            units: top.units.or(self.units),
            input_scaling: top.input_scaling.or(self.input_scaling),
            rho: top.rho.or(self.rho),
            kappa: top.kappa.or(self.kappa),
            repetitions: top.repetitions.or(self.repetitions),
            seed: top.seed.or(self.seed),
            epochs: top.epochs.or(self.epochs),
            learning_rate: top.learning_rate.or(self.learning_rate),
            momentum: top.momentum.or(self.momentum),
            budget: top.budget.or(self.budget),
            length: top.length.or(self.length),
            washout: top.washout.or(self.washout),
            out: top.out.or(self.out),
        }
    }

    pub fn into_config(self) -> Result<ExperimentConfig> {
        let task = self.task.ok_or_else(|| anyhow!("missing --task"))?;
        let model = self.model.ok_or_else(|| anyhow!("missing --model"))?;
        let mut cfg = ExperimentConfig::new(task, model);
        if let Some(v) = self.units {
            cfg.reservoir.n_units = v;
        }
        if let Some(v) = self.input_scaling {
            cfg.reservoir.input_scaling = v;
        }
        if let Some(v) = self.rho {
            cfg.reservoir.spectral_radius = v;
        }
        if let Some(v) = self.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = self.repetitions {
            cfg.repetitions = v;
        }
        if let Some(v) = self.seed {
            cfg.base_seed = v;
        }
        if let Some(v) = self.epochs {
            cfg.pta.max_epochs = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.pta.learning_rate = v;
        }
        if let Some(v) = self.momentum {
            cfg.pta.momentum = v;
        }
        cfg.search_budget = self.budget;
        if let Some(v) = self.length {
            cfg.series_length = v;
        }
        if let Some(v) = self.washout {
            cfg.pta.washout = v;
        }
        cfg.output_path = self.out;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_with_comments() {
        let text = "# experiment\ntask = nlm\n\ninput_scaling=0.5\nmodel = scr\n";
        let o = Overrides::from_pairs(&parse_pairs(text).unwrap()).unwrap();
        assert_eq!(o.task, Some(TaskKind::Nlm));
        assert_eq!(o.model, Some(ModelKind::Scr));
        assert_eq!(o.input_scaling, Some(0.5));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(parse_pairs("just words").is_err());
        let pairs = parse_pairs("colour = red").unwrap();
        assert!(Overrides::from_pairs(&pairs).is_err());
        let pairs = parse_pairs("units = many").unwrap();
        assert!(Overrides::from_pairs(&pairs).is_err());
    }

    #[test]
    fn cli_values_override_file_values() {
        let file = Overrides {
            task: Some(TaskKind::Mc),
            model: Some(ModelKind::Esn),
            units: Some(50),
            ..Default::default()
        };
        let cli = Overrides {
            units: Some(20),
            ..Default::default()
        };
        let cfg = file.layered(cli).into_config().unwrap();
        assert_eq!(cfg.reservoir.n_units, 20);
        assert_eq!(cfg.model, ModelKind::Esn);
    }

    #[test]
    fn missing_task_is_an_error() {
        assert!(Overrides::default().into_config().is_err());
    }
}
