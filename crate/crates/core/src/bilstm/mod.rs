//! Toy-scale BiLSTM-CRF: trainable embeddings, a bidirectional LSTM encoder,
//! a per-label projection, and the CRF layer on top. Backpropagation is
//! written out by hand and held to finite-difference checks.

mod net;
mod train;

pub mod io;

pub use net::{encode, recurrent_step, DirectionTrace};
pub use train::{fit_bilstm, init_params, nll_and_gradient_bilstm, train_bilstm, BiLstmGradient};

use std::collections::HashMap;

use crate::corpus::{Document, TagSide};
use crate::crf::{viterbi_decode, CrfError, Lattice, TransitionMask};
use crate::scheme::LabelScheme;

/// Reserved id for out-of-vocabulary words.
pub const UNK_ID: usize = 0;
pub const UNK_TOKEN: &str = "<UNK>";

/// Encoder dimensions; deliberately tiny. Gradient correctness, not accuracy,
/// is this module's contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiLstmConfig {
    /// Words below this training frequency map to `<UNK>`.
    pub min_freq: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for BiLstmConfig {
    fn default() -> Self {
        Self {
            min_freq: 1,
            embed_dim: 16,
            hidden_dim: 16,
            seed: 42,
        }
    }
}

impl BiLstmConfig {
    pub fn validate(&self) -> Result<(), CrfError> {
        if self.embed_dim < 1 || self.hidden_dim < 1 {
            return Err(CrfError::InvalidConfig(
                "embedding and hidden dims must be at least 1".into(),
            ));
        }
        if self.embed_dim > 128 || self.hidden_dim > 128 {
            return Err(CrfError::InvalidConfig(
                "this encoder is toy-scale: dims are capped at 128".into(),
            ));
        }
        Ok(())
    }
}

/// Word-to-id table with `<UNK>` at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    map: HashMap<String, usize>,
    words: Vec<String>,
}

impl Vocab {
    /// Harvest from documents: words with frequency ≥ `min_freq`, ids in
    /// first-seen order after `<UNK>`.
    pub fn fit(docs: &[Document], min_freq: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for sentence in &doc.sentences {
                for token in &sentence.tokens {
                    *counts.entry(token.surface.as_str()).or_insert(0) += 1;
                }
            }
        }
        let mut vocab = Self::with_words(Vec::new());
        for doc in docs {
            for sentence in &doc.sentences {
                for token in &sentence.tokens {
                    let surface = token.surface.as_str();
                    if counts[surface] >= min_freq && !vocab.map.contains_key(surface) {
                        vocab.push(surface);
                    }
                }
            }
        }
        vocab
    }

    /// Rebuild from a word list that does not include `<UNK>`.
    pub fn with_words(words: Vec<String>) -> Self {
        let mut vocab = Self {
            map: HashMap::new(),
            words: Vec::with_capacity(words.len() + 1),
        };
        vocab.push(UNK_TOKEN);
        for word in &words {
            if !vocab.map.contains_key(word) {
                vocab.push(word);
            }
        }
        vocab
    }

    fn push(&mut self, word: &str) {
        self.map.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
    }

    pub fn id(&self, word: &str) -> usize {
        self.map.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    /// Including `<UNK>`.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Words after `<UNK>`, in id order.
    pub fn known_words(&self) -> &[String] {
        &self.words[1..]
    }
}

/// One four-gate recurrent direction. Gate rows are stacked `[i, f, g, o]`,
/// so `input` is `(4·hidden × embed)`, `recurrent` is `(4·hidden × hidden)`,
/// and `bias` has `4·hidden` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input: Vec<f64>,
    pub recurrent: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(embed_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input: vec![0.0; 4 * hidden_dim * embed_dim],
            recurrent: vec![0.0; 4 * hidden_dim * hidden_dim],
            bias: vec![0.0; 4 * hidden_dim],
        }
    }
}

/// The full parameter set. `proj` is `(2·hidden × labels)` row-major, applied
/// to the concatenated forward and backward hidden states; the CRF blocks
/// share their semantics with [`crate::crf::CrfModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmCrfModel {
    pub scheme: LabelScheme,
    pub config: BiLstmConfig,
    pub vocab: Vocab,
    pub embeddings: Vec<f64>,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub proj: Vec<f64>,
    pub proj_bias: Vec<f64>,
    pub transitions: Vec<f64>,
    pub begin: Vec<f64>,
    pub end: Vec<f64>,
}

impl BiLstmCrfModel {
    /// Zero-initialized model; [`init_params`] fills it randomly.
    pub fn zeros(scheme: LabelScheme, config: BiLstmConfig, vocab: Vocab) -> Self {
        let labels = scheme.num_tags();
        let (d, h) = (config.embed_dim, config.hidden_dim);
        Self {
            scheme,
            vocab,
            embeddings: Vec::new(),
            fwd: LstmParams::zeros(d, h),
            bwd: LstmParams::zeros(d, h),
            proj: vec![0.0; 2 * h * labels],
            proj_bias: vec![0.0; labels],
            transitions: vec![0.0; labels * labels],
            begin: vec![0.0; labels],
            end: vec![0.0; labels],
            config,
        }
        .with_sized_embeddings()
    }

    fn with_sized_embeddings(mut self) -> Self {
        self.embeddings = vec![0.0; self.vocab.len() * self.config.embed_dim];
        self
    }

    pub fn num_labels(&self) -> usize {
        self.scheme.num_tags()
    }

    /// Named views of every parameter block, in a fixed canonical order.
    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("embeddings", &self.embeddings),
            ("fwd.input", &self.fwd.input),
            ("fwd.recurrent", &self.fwd.recurrent),
            ("fwd.bias", &self.fwd.bias),
            ("bwd.input", &self.bwd.input),
            ("bwd.recurrent", &self.bwd.recurrent),
            ("bwd.bias", &self.bwd.bias),
            ("proj", &self.proj),
            ("proj_bias", &self.proj_bias),
            ("transitions", &self.transitions),
            ("begin", &self.begin),
            ("end", &self.end),
        ]
    }

    pub fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("embeddings", self.embeddings.as_mut_slice()),
            ("fwd.input", self.fwd.input.as_mut_slice()),
            ("fwd.recurrent", self.fwd.recurrent.as_mut_slice()),
            ("fwd.bias", self.fwd.bias.as_mut_slice()),
            ("bwd.input", self.bwd.input.as_mut_slice()),
            ("bwd.recurrent", self.bwd.recurrent.as_mut_slice()),
            ("bwd.bias", self.bwd.bias.as_mut_slice()),
            ("proj", self.proj.as_mut_slice()),
            ("proj_bias", self.proj_bias.as_mut_slice()),
            ("transitions", self.transitions.as_mut_slice()),
            ("begin", self.begin.as_mut_slice()),
            ("end", self.end.as_mut_slice()),
        ]
    }

    /// Map surfaces to vocabulary ids.
    pub fn word_ids(&self, surfaces: &[&str]) -> Vec<usize> {
        surfaces.iter().map(|w| self.vocab.id(w)).collect()
    }

    /// Emissions plus the model's CRF blocks as a decodable lattice.
    pub fn lattice(&self, word_ids: &[usize]) -> Result<Lattice, CrfError> {
        if word_ids.is_empty() {
            return Err(CrfError::EmptyLattice);
        }
        let emissions = encode(self, word_ids);
        Lattice::from_parts(
            word_ids.len(),
            self.num_labels(),
            emissions,
            self.transitions.clone(),
            self.begin.clone(),
            self.end.clone(),
        )
    }
}

/// One training example: vocabulary ids plus gold label ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LstmInstance {
    pub word_ids: Vec<usize>,
    pub labels: Vec<usize>,
}

/// Convert gold-tagged documents into id-space instances.
pub fn lstm_instances(
    docs: &[Document],
    scheme: &LabelScheme,
    vocab: &Vocab,
) -> Result<Vec<LstmInstance>, CrfError> {
    let mut out = Vec::new();
    for doc in docs {
        for sentence in &doc.sentences {
            if sentence.is_empty() {
                continue;
            }
            let tags = sentence.tags(TagSide::Gold).ok_or(CrfError::MissingGold)?;
            let labels = tags
                .iter()
                .map(|t| {
                    scheme
                        .tag_index(t)
                        .ok_or_else(|| CrfError::UnknownTag(t.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let word_ids = sentence
                .tokens
                .iter()
                .map(|t| vocab.id(&t.surface))
                .collect();
            out.push(LstmInstance { word_ids, labels });
        }
    }
    Ok(out)
}

/// Encode then Viterbi-decode one sentence.
pub fn decode_bilstm(
    model: &BiLstmCrfModel,
    word_ids: &[usize],
    mask: Option<&TransitionMask>,
) -> Result<Vec<usize>, CrfError> {
    let lattice = model.lattice(word_ids)?;
    let (path, _) = viterbi_decode(&lattice, mask)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_conll;

    #[test]
    fn vocab_cutoff_and_unk() {
        let text = "mix\tO\nthe\tO\nthe\tO\n\nmix\tO\nbuffer\tO\n";
        let scheme = LabelScheme::new(vec!["X".into()]).unwrap();
        let docs = parse_conll(text.as_bytes(), &scheme).unwrap();
        let vocab = Vocab::fit(&docs, 2);
        assert_eq!(vocab.id(UNK_TOKEN), UNK_ID);
        assert_ne!(vocab.id("mix"), UNK_ID);
        assert_ne!(vocab.id("the"), UNK_ID);
        assert_eq!(vocab.id("buffer"), UNK_ID);
        assert_eq!(vocab.id("never-seen"), UNK_ID);
        assert_eq!(vocab.len(), 3);

        let rebuilt = Vocab::with_words(vocab.known_words().to_vec());
        assert_eq!(vocab, rebuilt);
    }

    #[test]
    fn toy_scale_guard() {
        let config = BiLstmConfig {
            hidden_dim: 4096,
            ..BiLstmConfig::default()
        };
        assert!(config.validate().is_err());
        assert!(BiLstmConfig::default().validate().is_ok());
        let config = BiLstmConfig {
            embed_dim: 0,
            ..BiLstmConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
