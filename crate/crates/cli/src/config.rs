use std::fmt;
use std::fs;
use std::path::Path;

use clap::ValueEnum;
use seqtag::bilstm::BiLstmConfig;
use seqtag::crf::TrainConfig;
use seqtag::features::FeatureConfig;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Crf,
    Bilstm,
}

impl fmt::Display for ModelArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Crf => write!(f, "crf"),
            Self::Bilstm => write!(f, "bilstm"),
        }
    }
}

/// Partial settings collected from one source (config file or flags).
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub model: Option<ModelArg>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub lowercase: Option<bool>,
    pub constrain: Option<bool>,
    pub min_freq: Option<usize>,
    pub embed_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub radius: Option<usize>,
    pub affix_max: Option<usize>,
    pub use_shape: Option<bool>,
    pub use_gazetteer: Option<bool>,
}

/// Fully resolved settings for one invocation.
///
/// Precedence while resolving: built-in defaults, then `key=value` lines from
/// the config file, then command-line flags. The learning-rate default
/// depends on the resolved model family.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelArg,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub lowercase: bool,
    pub constrain: bool,
    pub min_freq: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub radius: usize,
    pub affix_max: usize,
    pub use_shape: bool,
    pub use_gazetteer: bool,
}

fn default_learning_rate(model: ModelArg) -> f64 {
    match model {
        ModelArg::Crf => 0.1,
        ModelArg::Bilstm => 0.05,
    }
}

impl RunConfig {
    pub fn resolve(config_file: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let file = match config_file {
            Some(path) => parse_config_file(path)?,
            None => Overrides::default(),
        };
        let model = flags.model.or(file.model).unwrap_or(ModelArg::Crf);
        let pick = |flag: Option<f64>, from_file: Option<f64>, fallback: f64| {
            flag.or(from_file).unwrap_or(fallback)
        };
        let feature_defaults = FeatureConfig::default();
        let bilstm_defaults = BiLstmConfig::default();
        let train_defaults = TrainConfig::default();
        Ok(Self {
            model,
            learning_rate: pick(flags.lr, file.lr, default_learning_rate(model)),
            weight_decay: pick(
                flags.weight_decay,
                file.weight_decay,
                train_defaults.weight_decay,
            ),
            epochs: flags
                .epochs
                .or(file.epochs)
                .unwrap_or(train_defaults.epochs),
            seed: flags.seed.or(file.seed).unwrap_or(train_defaults.seed),
            lowercase: flags.lowercase.or(file.lowercase).unwrap_or(false),
            constrain: flags.constrain.or(file.constrain).unwrap_or(true),
            min_freq: flags
                .min_freq
                .or(file.min_freq)
                .unwrap_or(bilstm_defaults.min_freq),
            embed_dim: flags
                .embed_dim
                .or(file.embed_dim)
                .unwrap_or(bilstm_defaults.embed_dim),
            hidden_dim: flags
                .hidden_dim
                .or(file.hidden_dim)
                .unwrap_or(bilstm_defaults.hidden_dim),
            radius: flags
                .radius
                .or(file.radius)
                .unwrap_or(feature_defaults.radius),
            affix_max: flags
                .affix_max
                .or(file.affix_max)
                .unwrap_or(feature_defaults.affix_max),
            use_shape: flags
                .use_shape
                .or(file.use_shape)
                .unwrap_or(feature_defaults.use_shape),
            use_gazetteer: flags
                .use_gazetteer
                .or(file.use_gazetteer)
                .unwrap_or(feature_defaults.use_gazetteer),
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            seed: self.seed,
            shuffle: true,
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            radius: self.radius,
            affix_max: self.affix_max,
            use_shape: self.use_shape,
            use_gazetteer: self.use_gazetteer,
        }
    }

    pub fn bilstm_config(&self) -> BiLstmConfig {
        BiLstmConfig {
            min_freq: self.min_freq,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            seed: self.seed,
        }
    }

    /// One `key=value` line per setting, in fixed key order.
    pub fn canonical(&self) -> String {
        format!(
            "affix_max={}\nconstrain={}\nembed_dim={}\nepochs={}\nhidden_dim={}\n\
             lowercase={}\nlr={}\nmin_freq={}\nmodel={}\nradius={}\nseed={}\n\
             use_gazetteer={}\nuse_shape={}\nweight_decay={}\n",
            self.affix_max,
            self.constrain,
            self.embed_dim,
            self.epochs,
            self.hidden_dim,
            self.lowercase,
            self.learning_rate,
            self.min_freq,
            self.model,
            self.radius,
            self.seed,
            self.use_gazetteer,
            self.use_shape,
            self.weight_decay,
        )
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..12].to_string()
    }

    /// Comment line stamped onto every text output.
    pub fn header(&self) -> String {
        format!(
            "# seqtag {} seed={} config={}",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.config_hash()
        )
    }
}

fn parse_config_file(path: &Path) -> Result<Overrides, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut over = Overrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| {
            CliError::input(format!("{}:{}: {what}: `{raw}`", path.display(), idx + 1))
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "model" => {
                over.model = Some(match value {
                    "crf" => ModelArg::Crf,
                    "bilstm" => ModelArg::Bilstm,
                    _ => return Err(bad("model must be crf or bilstm")),
                })
            }
            "lr" => over.lr = Some(value.parse().map_err(|_| bad("invalid number"))?),
            "weight_decay" => {
                over.weight_decay = Some(value.parse().map_err(|_| bad("invalid number"))?)
            }
            "epochs" => over.epochs = Some(value.parse().map_err(|_| bad("invalid count"))?),
            "seed" => over.seed = Some(value.parse().map_err(|_| bad("invalid seed"))?),
            "lowercase" => {
                over.lowercase = Some(value.parse().map_err(|_| bad("expected true or false"))?)
            }
            "constrain" => {
                over.constrain = Some(value.parse().map_err(|_| bad("expected true or false"))?)
            }
            "min_freq" => over.min_freq = Some(value.parse().map_err(|_| bad("invalid count"))?),
            "embed_dim" => over.embed_dim = Some(value.parse().map_err(|_| bad("invalid count"))?),
            "hidden_dim" => {
                over.hidden_dim = Some(value.parse().map_err(|_| bad("invalid count"))?)
            }
            "radius" => over.radius = Some(value.parse().map_err(|_| bad("invalid count"))?),
            "affix_max" => over.affix_max = Some(value.parse().map_err(|_| bad("invalid count"))?),
            "use_shape" => {
                over.use_shape = Some(value.parse().map_err(|_| bad("expected true or false"))?)
            }
            "use_gazetteer" => {
                over.use_gazetteer = Some(value.parse().map_err(|_| bad("expected true or false"))?)
            }
            _ => return Err(bad("unknown key")),
        }
    }
    Ok(over)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(lines: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(lines.as_bytes()).unwrap();
        file
    }

    #[test]
    fn defaults_resolve_without_sources() {
        let rc = RunConfig::resolve(None, &Overrides::default()).unwrap();
        assert_eq!(rc.model, ModelArg::Crf);
        assert_eq!(rc.learning_rate, 0.1);
        assert_eq!(rc.weight_decay, 0.005);
        assert_eq!(rc.epochs, 3);
        assert_eq!(rc.seed, 42);
        assert!(rc.constrain);
        assert!(!rc.lowercase);
    }

    #[test]
    fn learning_rate_default_tracks_model_kind() {
        let flags = Overrides {
            model: Some(ModelArg::Bilstm),
            ..Default::default()
        };
        let rc = RunConfig::resolve(None, &flags).unwrap();
        assert_eq!(rc.learning_rate, 0.05);
    }

    #[test]
    fn file_overrides_defaults_and_flags_override_file() {
        let file = write_config("lr=0.3\nepochs=7\nseed=9\n");
        let flags = Overrides {
            epochs: Some(2),
            ..Default::default()
        };
        let rc = RunConfig::resolve(Some(file.path()), &flags).unwrap();
        assert_eq!(rc.learning_rate, 0.3);
        assert_eq!(rc.epochs, 2);
        assert_eq!(rc.seed, 9);
    }

    #[test]
    fn config_file_tolerates_comments_and_blanks() {
        let file = write_config("# tuning\n\nmodel=bilstm\nhidden_dim=8\n");
        let rc = RunConfig::resolve(Some(file.path()), &Overrides::default()).unwrap();
        assert_eq!(rc.model, ModelArg::Bilstm);
        assert_eq!(rc.hidden_dim, 8);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let file = write_config("learning_rate=0.1\n");
        let err = RunConfig::resolve(Some(file.path()), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn malformed_line_is_rejected() {
        let file = write_config("just a line\n");
        let err = RunConfig::resolve(Some(file.path()), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("expected key=value"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::resolve(None, &Overrides::default()).unwrap();
        let b = RunConfig::resolve(None, &Overrides::default()).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 12);

        let flags = Overrides {
            lr: Some(0.2),
            ..Default::default()
        };
        let c = RunConfig::resolve(None, &flags).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn header_carries_version_seed_and_hash() {
        let rc = RunConfig::resolve(None, &Overrides::default()).unwrap();
        let header = rc.header();
        assert!(header.starts_with("# seqtag "));
        assert!(header.contains(" seed=42 "));
        assert!(header.contains(&format!("config={}", rc.config_hash())));
    }
}
