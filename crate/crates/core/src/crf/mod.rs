//! Linear-chain CRF: lattice scoring, log-space forward-backward, penalized
//! likelihood and gradient, adaptive stochastic training, and constrained
//! Viterbi decoding.

mod forward_backward;
mod lattice;
mod mask;
mod train;
mod viterbi;

pub mod io;

pub use forward_backward::{log_partition, logsumexp, posterior_marginals, Marginals};
pub use lattice::{score_lattice, Lattice};
pub use mask::{transition_mask, TransitionMask};
pub(crate) use train::AdaGrad;
pub use train::{nll_and_gradient, train, CrfGradient};
pub use viterbi::viterbi_decode;

use thiserror::Error;

use crate::corpus::{Document, Sentence, TagSide};
use crate::features::{featurize, FeatureConfig, FeatureIndex, Gazetteer};
use crate::scheme::LabelScheme;

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lattice has no positions")]
    EmptyLattice,
    #[error("transition mask eliminates every path")]
    AllPathsMasked,
    #[error("non-finite loss ({value}) at epoch {epoch}, sentence {sentence}")]
    NonFiniteLoss {
        epoch: usize,
        sentence: usize,
        value: f64,
    },
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("sentence is missing gold tags")]
    MissingGold,
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
}

/// Optimizer settings shared by the CRF and BiLSTM trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            weight_decay: 0.005,
            epochs: 3,
            seed: 42,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    /// Zero learning rate is permitted (a no-op run); negatives are not.
    pub fn validate(&self) -> Result<(), CrfError> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(CrfError::InvalidConfig(
                "learning rate must be finite and nonnegative".into(),
            ));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(CrfError::InvalidConfig(
                "weight decay must be finite and nonnegative".into(),
            ));
        }
        if self.epochs < 1 {
            return Err(CrfError::InvalidConfig("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// One training/decoding example: per-position feature ids plus gold labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub features: Vec<Vec<u32>>,
    pub labels: Vec<usize>,
}

/// A linear-chain CRF over a frozen feature index.
///
/// `unary` is row-major `(feature, label)`; `transitions` is row-major
/// `(from, to)`; `begin`/`end` score the first and last label of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub scheme: LabelScheme,
    pub feature_config: FeatureConfig,
    pub gazetteer: Gazetteer,
    pub index: FeatureIndex,
    pub unary: Vec<f64>,
    pub transitions: Vec<f64>,
    pub begin: Vec<f64>,
    pub end: Vec<f64>,
}

impl CrfModel {
    /// Zero-initialized model sized to the scheme and index.
    pub fn new(
        scheme: LabelScheme,
        feature_config: FeatureConfig,
        gazetteer: Gazetteer,
        index: FeatureIndex,
    ) -> Self {
        let labels = scheme.num_tags();
        let features = index.len();
        Self {
            scheme,
            feature_config,
            gazetteer,
            index,
            unary: vec![0.0; features * labels],
            transitions: vec![0.0; labels * labels],
            begin: vec![0.0; labels],
            end: vec![0.0; labels],
        }
    }

    pub fn num_labels(&self) -> usize {
        self.scheme.num_tags()
    }

    pub fn num_features(&self) -> usize {
        self.index.len()
    }

    pub fn unary_weight(&self, feature: u32, label: usize) -> f64 {
        self.unary[feature as usize * self.num_labels() + label]
    }

    /// Feature ids for every position of a sentence, using the model's own
    /// feature pipeline.
    pub fn featurize_sentence(&self, sentence: &Sentence) -> Vec<Vec<u32>> {
        let surfaces = sentence.surfaces();
        featurize(
            &surfaces,
            &self.index,
            &self.feature_config,
            &self.gazetteer,
        )
    }

    /// Decode one sentence into tag ids.
    pub fn decode_sentence(
        &self,
        sentence: &Sentence,
        mask: Option<&TransitionMask>,
    ) -> Result<Vec<usize>, CrfError> {
        let features = self.featurize_sentence(sentence);
        let lattice = score_lattice(&features, self)?;
        let (path, _) = viterbi_decode(&lattice, mask)?;
        Ok(path)
    }
}

/// Convert gold-tagged documents into training instances.
pub fn build_instances(docs: &[Document], model: &CrfModel) -> Result<Vec<Instance>, CrfError> {
    let mut instances = Vec::new();
    for doc in docs {
        for sentence in &doc.sentences {
            if sentence.is_empty() {
                continue;
            }
            let tags = sentence.tags(TagSide::Gold).ok_or(CrfError::MissingGold)?;
            let labels = tags
                .iter()
                .map(|t| {
                    model
                        .scheme
                        .tag_index(t)
                        .ok_or_else(|| CrfError::UnknownTag(t.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            instances.push(Instance {
                features: model.featurize_sentence(sentence),
                labels,
            });
        }
    }
    Ok(instances)
}
