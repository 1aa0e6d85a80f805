//! Flat key=value run configuration: one pair per line, `#` comments
//! and blank lines ignored. Every piece of randomness flows from the
//! single `seed` key. Unknown keys are rejected so typos surface
//! instead of silently using defaults.

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::CorpusFormat;
use crate::model::ModelConfig;
use crate::training::TrainConfig;
use crate::{Error, Result};

/// Everything a subcommand needs: dataset paths, model and optimizer
/// hyperparameters, the output directory, and the seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: CorpusFormat,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub train_parses: Option<PathBuf>,
    pub test_parses: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub val_fraction: f64,
    pub skip_misaligned: bool,
    pub model: ModelConfig,
    /// Set when the file carried an explicit `model.gat_dim`; otherwise
    /// the width tracks `2 * hidden`.
    gat_dim_explicit: bool,
    pub train: TrainConfig,
    pub model_name: String,
    pub dataset_name: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            format: CorpusFormat::Twitter,
            train_path: None,
            test_path: None,
            train_parses: None,
            test_parses: None,
            embeddings: None,
            val_fraction: 0.1,
            skip_misaligned: false,
            model: ModelConfig::default(),
            gat_dim_explicit: false,
            train: TrainConfig::default(),
            model_name: "ours".into(),
            dataset_name: "dataset".into(),
        }
    }
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got {trimmed:?}", idx + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        Self::parse_str(&fs::read_to_string(path)?)
    }

    /// File values first, then `--set key=value` overrides in order.
    pub fn from_file_with_overrides(path: &Path, overrides: &[String]) -> Result<RunConfig> {
        let mut cfg = Self::parse_str(&fs::read_to_string(path)?)?;
        cfg.apply_overrides(overrides)?;
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects key=value, got {item:?}"))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        self.finish()
    }

    /// Applies one key. Callers run [`finish`](Self::finish) afterwards.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: expected {what}, got {value:?}"));
        match key {
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "out.dir" => self.out_dir = PathBuf::from(value),
            "data.format" => self.format = value.parse()?,
            "data.train" => self.train_path = Some(PathBuf::from(value)),
            "data.test" => self.test_path = Some(PathBuf::from(value)),
            "data.parses.train" => self.train_parses = Some(PathBuf::from(value)),
            "data.parses.test" => self.test_parses = Some(PathBuf::from(value)),
            "data.embeddings" => self.embeddings = Some(PathBuf::from(value)),
            "data.val_fraction" => {
                self.val_fraction = value.parse().map_err(|_| bad("a fraction"))?
            }
            "data.skip_misaligned" => {
                self.skip_misaligned = parse_bool(value).ok_or_else(|| bad("true or false"))?
            }
            "model.emb_dim" => self.model.emb_dim = parse_count(key, value)?,
            "model.pos_dim" => self.model.pos_dim = parse_count(key, value)?,
            "model.hidden" => self.model.hidden = parse_count(key, value)?,
            "model.gat_dim" => {
                self.model.gat_dim = parse_count(key, value)?;
                self.gat_dim_explicit = true;
            }
            "model.gcn_layers" => self.model.gcn_layers = parse_count(key, value)?,
            "model.d_max" => self.model.d_max = parse_count(key, value)?,
            "model.leaky_slope" => {
                self.model.leaky_slope = value.parse().map_err(|_| bad("a float"))?
            }
            "model.mean_aggregation" => {
                self.model.mean_aggregation =
                    parse_bool(value).ok_or_else(|| bad("true or false"))?
            }
            "train.learning_rate" => {
                self.train.learning_rate = value.parse().map_err(|_| bad("a float"))?
            }
            "train.l2" => self.train.l2 = value.parse().map_err(|_| bad("a float"))?,
            "train.epochs" => self.train.epochs = parse_count(key, value)?,
            "train.beta1" => self.train.beta1 = value.parse().map_err(|_| bad("a float"))?,
            "train.beta2" => self.train.beta2 = value.parse().map_err(|_| bad("a float"))?,
            "train.epsilon" => self.train.epsilon = value.parse().map_err(|_| bad("a float"))?,
            "train.clip_norm" => {
                self.train.clip_norm = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad("a float or none"))?)
                }
            }
            "report.model" => self.model_name = value.to_string(),
            "report.dataset" => self.dataset_name = value.to_string(),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Resolves derived fields and validates ranges.
    fn finish(&mut self) -> Result<()> {
        if !self.gat_dim_explicit {
            self.model.gat_dim = 2 * self.model.hidden;
        }
        self.train.seed = self.seed;
        self.model.validate()?;
        self.train.validate()?;
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!(
                "data.val_fraction must lie in [0, 1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }

    /// Paths that must exist before a subcommand may run.
    pub fn required_paths(&self, needs_train: bool, needs_test: bool) -> Result<Vec<&Path>> {
        let mut paths: Vec<&Path> = Vec::new();
        if needs_train {
            paths.push(
                self.train_path
                    .as_deref()
                    .ok_or_else(|| Error::Config("data.train is not set".into()))?,
            );
            if let Some(p) = self.train_parses.as_deref() {
                paths.push(p);
            }
        }
        if needs_test {
            paths.push(
                self.test_path
                    .as_deref()
                    .ok_or_else(|| Error::Config("data.test is not set".into()))?,
            );
            if let Some(p) = self.test_parses.as_deref() {
                paths.push(p);
            }
        }
        if let Some(p) = self.embeddings.as_deref() {
            paths.push(p);
        }
        Ok(paths)
    }
}

fn parse_bool(value: &str) -> Option<bool> {
    match value {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a positive integer, got {value:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_gat_width_from_hidden() {
        let cfg = RunConfig::parse_str("").unwrap();
        assert_eq!(cfg.model.hidden, 300);
        assert_eq!(cfg.model.gat_dim, 600);
        let cfg = RunConfig::parse_str("model.hidden = 8\n").unwrap();
        assert_eq!(cfg.model.gat_dim, 16);
        let cfg = RunConfig::parse_str("model.hidden = 8\nmodel.gat_dim = 5\n").unwrap();
        assert_eq!(cfg.model.gat_dim, 5);
    }

    #[test]
    fn parses_comments_and_values() {
        let text = "\
# run settings
seed = 7
out.dir = runs/a

data.format = semeval
data.train = corpora/train.xml
train.epochs = 3
model.mean_aggregation = true
train.clip_norm = 5.0
";
        let cfg = RunConfig::parse_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.out_dir, PathBuf::from("runs/a"));
        assert_eq!(cfg.format, CorpusFormat::Semeval);
        assert_eq!(cfg.train.epochs, 3);
        assert!(cfg.model.mean_aggregation);
        assert_eq!(cfg.train.clip_norm, Some(5.0));
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_field() {
        match RunConfig::parse_str("mystery = 1\n") {
            Err(Error::Config(msg)) => assert!(msg.contains("mystery"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
        match RunConfig::parse_str("train.epochs = many\n") {
            Err(Error::Config(msg)) => assert!(msg.contains("train.epochs"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
        assert!(RunConfig::parse_str("train.epochs = 0\n").is_err());
        assert!(RunConfig::parse_str("model.gcn_layers = 9\n").is_err());
        assert!(RunConfig::parse_str("just a line\n").is_err());
    }

    #[test]
    fn overrides_take_precedence_per_field() {
        let mut cfg = RunConfig::parse_str("seed = 1\ntrain.epochs = 2\n").unwrap();
        cfg.apply_overrides(&["seed=9".into(), "model.hidden=4".into()])
            .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.train.epochs, 2);
        assert_eq!(cfg.model.hidden, 4);
        assert_eq!(cfg.model.gat_dim, 8);

        assert!(cfg.apply_overrides(&["nonsense".into()]).is_err());
    }

    #[test]
    fn required_paths_report_missing_keys() {
        let cfg = RunConfig::parse_str("").unwrap();
        assert!(matches!(cfg.required_paths(true, false), Err(Error::Config(_))));
        let cfg = RunConfig::parse_str("data.train = x.txt\n").unwrap();
        let paths = cfg.required_paths(true, false).unwrap();
        assert_eq!(paths, vec![Path::new("x.txt")]);
    }
}
