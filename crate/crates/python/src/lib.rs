//! Python bindings for the seqtag toolkit.
//!
//! A corpus crosses the boundary as nested lists: a corpus is a list of
//! documents, a document is a list of sentences, and a sentence is a list
//! of `(surface, tag)` pairs where the tag may be `None`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use seqtag::bilstm::{decode_bilstm, fit_bilstm, BiLstmConfig, BiLstmCrfModel};
use seqtag::corpus::{self, BioMode, Document, Entity, Sentence, Token};
use seqtag::crf::{build_instances, train, transition_mask, CrfModel, TrainConfig, TransitionMask};
use seqtag::eval::{self, EvalReport};
use seqtag::features::{build_gazetteer, fit_index, FeatureConfig};
use seqtag::LabelScheme as CoreScheme;

type PyCorpus = Vec<Vec<Vec<(String, Option<String>)>>>;

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn io_err(err: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(err.to_string())
}

fn to_documents(corpus: PyCorpus) -> Vec<Document> {
    corpus
        .into_iter()
        .enumerate()
        .map(|(i, sentences)| {
            let sentences = sentences
                .into_iter()
                .map(|tokens| {
                    Sentence::new(
                        tokens
                            .into_iter()
                            .map(|(surface, tag)| {
                                let mut token = Token::new(surface);
                                token.gold_tag = tag;
                                token
                            })
                            .collect(),
                    )
                })
                .collect();
            Document::new(format!("doc{i}"), sentences)
        })
        .collect()
}

fn surfaces_sentence(surfaces: &[String]) -> Sentence {
    Sentence::new(surfaces.iter().map(Token::new).collect())
}

fn train_config(learning_rate: f64, weight_decay: f64, epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate,
        weight_decay,
        epochs,
        seed,
        shuffle: true,
    }
}

/// Entity types plus their BIO tag inventory.
#[pyclass(name = "LabelScheme")]
struct PyLabelScheme {
    inner: CoreScheme,
}

#[pymethods]
impl PyLabelScheme {
    #[new]
    fn new(types: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreScheme::new(types).map_err(value_err)?,
        })
    }

    /// The 18-type wet-lab protocol scheme.
    #[staticmethod]
    fn wnut() -> Self {
        Self {
            inner: CoreScheme::wnut(),
        }
    }

    fn types(&self) -> Vec<String> {
        self.inner.entity_types().to_vec()
    }

    fn num_tags(&self) -> usize {
        self.inner.num_tags()
    }

    fn tag_names(&self) -> Vec<String> {
        (0..self.inner.num_tags())
            .map(|i| self.inner.tag_name(i).to_string())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "LabelScheme({} types, {} tags)",
            self.inner.entity_types().len(),
            self.inner.num_tags()
        )
    }
}

fn decode_tags(
    scheme: &CoreScheme,
    path: Result<Vec<usize>, impl std::fmt::Display>,
) -> PyResult<Vec<String>> {
    Ok(path
        .map_err(value_err)?
        .into_iter()
        .map(|y| scheme.tag_name(y).to_string())
        .collect())
}

/// Feature-based linear-chain CRF tagger.
#[pyclass(name = "CrfTagger")]
struct PyCrfTagger {
    model: CrfModel,
    mask: TransitionMask,
    trace: Vec<f64>,
}

impl PyCrfTagger {
    fn wrap(model: CrfModel, trace: Vec<f64>) -> Self {
        let mask = transition_mask(&model.scheme);
        Self { model, mask, trace }
    }
}

#[pymethods]
impl PyCrfTagger {
    #[staticmethod]
    #[pyo3(signature = (
        corpus, scheme, *,
        learning_rate = 0.1, weight_decay = 0.005, epochs = 3, seed = 42,
        radius = 2, affix_max = 3, use_shape = true, use_gazetteer = true,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        corpus: PyCorpus,
        scheme: &PyLabelScheme,
        learning_rate: f64,
        weight_decay: f64,
        epochs: usize,
        seed: u64,
        radius: usize,
        affix_max: usize,
        use_shape: bool,
        use_gazetteer: bool,
    ) -> PyResult<Self> {
        let docs = to_documents(corpus);
        let feature_config = FeatureConfig {
            radius,
            affix_max,
            use_shape,
            use_gazetteer,
        };
        let gazetteer = build_gazetteer(&docs, &scheme.inner);
        let index = fit_index(&docs, &feature_config, &gazetteer);
        let mut model = CrfModel::new(scheme.inner.clone(), feature_config, gazetteer, index);
        let instances = build_instances(&docs, &model).map_err(value_err)?;
        let config = train_config(learning_rate, weight_decay, epochs, seed);
        let trace = train(&mut model, &instances, &config).map_err(value_err)?;
        Ok(Self::wrap(model, trace))
    }

    /// Per-epoch mean training loss from the most recent fit.
    fn loss_trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    #[pyo3(signature = (sentence, constrained = true))]
    fn tag(&self, sentence: Vec<String>, constrained: bool) -> PyResult<Vec<String>> {
        let sentence = surfaces_sentence(&sentence);
        let mask = constrained.then_some(&self.mask);
        decode_tags(
            &self.model.scheme,
            self.model.decode_sentence(&sentence, mask),
        )
    }

    fn save(&self, path: &str) -> PyResult<()> {
        seqtag::crf::io::save_model(&self.model, path.as_ref()).map_err(io_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let model = seqtag::crf::io::load_model(path.as_ref()).map_err(io_err)?;
        Ok(Self::wrap(model, Vec::new()))
    }

    fn scheme(&self) -> PyLabelScheme {
        PyLabelScheme {
            inner: self.model.scheme.clone(),
        }
    }

    fn num_features(&self) -> usize {
        self.model.num_features()
    }

    fn __repr__(&self) -> String {
        format!(
            "CrfTagger({} features, {} tags)",
            self.model.num_features(),
            self.model.num_labels()
        )
    }
}

/// Toy BiLSTM encoder feeding the same CRF output layer.
#[pyclass(name = "BilstmTagger")]
struct PyBilstmTagger {
    model: BiLstmCrfModel,
    mask: TransitionMask,
    trace: Vec<f64>,
}

impl PyBilstmTagger {
    fn wrap(model: BiLstmCrfModel, trace: Vec<f64>) -> Self {
        let mask = transition_mask(&model.scheme);
        Self { model, mask, trace }
    }
}

#[pymethods]
impl PyBilstmTagger {
    #[staticmethod]
    #[pyo3(signature = (
        corpus, scheme, *,
        learning_rate = 0.05, weight_decay = 0.005, epochs = 3, seed = 42,
        embed_dim = 16, hidden_dim = 16, min_freq = 1,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        corpus: PyCorpus,
        scheme: &PyLabelScheme,
        learning_rate: f64,
        weight_decay: f64,
        epochs: usize,
        seed: u64,
        embed_dim: usize,
        hidden_dim: usize,
        min_freq: usize,
    ) -> PyResult<Self> {
        let docs = to_documents(corpus);
        let config = BiLstmConfig {
            min_freq,
            embed_dim,
            hidden_dim,
            seed,
        };
        let train_config = train_config(learning_rate, weight_decay, epochs, seed);
        let (model, trace) =
            fit_bilstm(&docs, &scheme.inner, &config, &train_config).map_err(value_err)?;
        Ok(Self::wrap(model, trace))
    }

    fn loss_trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    #[pyo3(signature = (sentence, constrained = true))]
    fn tag(&self, sentence: Vec<String>, constrained: bool) -> PyResult<Vec<String>> {
        let surfaces: Vec<&str> = sentence.iter().map(|s| s.as_str()).collect();
        let word_ids = self.model.word_ids(&surfaces);
        let mask = constrained.then_some(&self.mask);
        decode_tags(
            &self.model.scheme,
            decode_bilstm(&self.model, &word_ids, mask),
        )
    }

    fn save(&self, path: &str) -> PyResult<()> {
        seqtag::bilstm::io::save_model(&self.model, path.as_ref()).map_err(io_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let model = seqtag::bilstm::io::load_model(path.as_ref()).map_err(io_err)?;
        Ok(Self::wrap(model, Vec::new()))
    }

    fn scheme(&self) -> PyLabelScheme {
        PyLabelScheme {
            inner: self.model.scheme.clone(),
        }
    }

    fn vocab_size(&self) -> usize {
        self.model.vocab.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "BilstmTagger({} words, {} tags)",
            self.model.vocab.len(),
            self.model.num_labels()
        )
    }
}

/// Entity-level precision, recall, and F1.
#[pyclass(name = "Evaluation")]
struct PyEvaluation {
    report: EvalReport,
}

#[pymethods]
impl PyEvaluation {
    /// Micro-averaged `(precision, recall, f1)`.
    fn micro(&self) -> (f64, f64, f64) {
        let m = self.report.micro();
        (m.precision(), m.recall(), m.f1())
    }

    fn f1(&self) -> f64 {
        self.report.micro().f1()
    }

    /// `(type, precision, recall, f1)` rows in scheme order.
    fn per_type(&self) -> Vec<(String, f64, f64, f64)> {
        let scheme = self.report.scheme().clone();
        scheme
            .entity_types()
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let s = self.report.type_score(i);
                (name.clone(), s.precision(), s.recall(), s.f1())
            })
            .collect()
    }

    /// `(type, tp, predicted, gold)` rows in scheme order.
    fn counts(&self) -> Vec<(String, usize, usize, usize)> {
        let scheme = self.report.scheme().clone();
        scheme
            .entity_types()
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let s = self.report.type_score(i);
                (name.clone(), s.tp, s.pred, s.gold)
            })
            .collect()
    }

    fn repairs(&self) -> (usize, usize) {
        (self.report.gold_repairs, self.report.pred_repairs)
    }

    /// The fixed-width report table.
    fn report(&self) -> String {
        eval::render_report(&self.report)
    }

    fn __repr__(&self) -> String {
        let m = self.report.micro();
        format!("Evaluation(F1={:.4})", m.f1())
    }
}

/// Score a predicted corpus against gold, paired by document order.
#[pyfunction]
#[pyo3(name = "evaluate")]
fn py_evaluate(gold: PyCorpus, pred: PyCorpus, scheme: &PyLabelScheme) -> PyResult<PyEvaluation> {
    let gold = to_documents(gold);
    let pred = to_documents(pred);
    let report = eval::evaluate(&gold, &pred, &scheme.inner).map_err(value_err)?;
    Ok(PyEvaluation { report })
}

/// BIO violations in a tag sequence, as `"position previous->tag"` strings.
#[pyfunction]
#[pyo3(name = "validate_bio")]
fn py_validate_bio(tags: Vec<String>, scheme: &PyLabelScheme) -> Vec<String> {
    corpus::validate_bio(&tags, &scheme.inner)
        .into_iter()
        .map(|v| v.to_string())
        .collect()
}

/// Extract `(start, end, type)` spans from a BIO tag sequence.
#[pyfunction]
#[pyo3(name = "tags_to_spans", signature = (tags, scheme, repair = true))]
fn py_tags_to_spans(
    tags: Vec<String>,
    scheme: &PyLabelScheme,
    repair: bool,
) -> PyResult<Vec<(usize, usize, String)>> {
    let mode = if repair {
        BioMode::Repair
    } else {
        BioMode::Strict
    };
    let spans = corpus::tags_to_spans(&tags, &scheme.inner, mode).map_err(value_err)?;
    Ok(spans
        .into_iter()
        .map(|e| (e.start, e.end, e.type_name))
        .collect())
}

/// Render `(start, end, type)` spans as a BIO tag sequence of `length` tags.
#[pyfunction]
#[pyo3(name = "spans_to_tags")]
fn py_spans_to_tags(
    spans: Vec<(usize, usize, String)>,
    length: usize,
    scheme: &PyLabelScheme,
) -> PyResult<Vec<String>> {
    let entities: Vec<Entity> = spans
        .into_iter()
        .map(|(start, end, ty)| Entity::new(ty, 0, start, end, ""))
        .collect();
    corpus::spans_to_tags(&entities, length, &scheme.inner).map_err(value_err)
}

/// Deterministic synthetic protocol corpus, returned as nested lists.
#[pyfunction]
#[pyo3(name = "generate_synthetic", signature = (n_docs, scheme, seed = 42))]
fn py_generate_synthetic(n_docs: usize, scheme: &PyLabelScheme, seed: u64) -> PyCorpus {
    corpus::generate_synthetic(seed, n_docs, &scheme.inner)
        .into_iter()
        .map(|doc| {
            doc.sentences
                .into_iter()
                .map(|s| {
                    s.tokens
                        .into_iter()
                        .map(|t| (t.surface, t.gold_tag))
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[pymodule]
fn seqtag_rs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyLabelScheme>()?;
    m.add_class::<PyCrfTagger>()?;
    m.add_class::<PyBilstmTagger>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_function(wrap_pyfunction!(py_evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(py_validate_bio, m)?)?;
    m.add_function(wrap_pyfunction!(py_tags_to_spans, m)?)?;
    m.add_function(wrap_pyfunction!(py_spans_to_tags, m)?)?;
    m.add_function(wrap_pyfunction!(py_generate_synthetic, m)?)?;
    Ok(())
}
