//! Entity-level exact-match scoring: per-type and micro-averaged
//! precision/recall/F1, table rendering, and report comparison.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{doc_entities, validate_bio, BioMode, CorpusError, Document, TagSide};
use crate::scheme::LabelScheme;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("tokenization mismatch: {0}")]
    TokenizationMismatch(String),
    #[error("reports use different schemes")]
    SchemeMismatch,
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Exact-match counts for one entity type (or the micro total).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TypeScore {
    pub tp: usize,
    pub pred: usize,
    pub gold: usize,
}

impl TypeScore {
    pub fn precision(&self) -> f64 {
        if self.pred == 0 {
            0.0
        } else {
            self.tp as f64 / self.pred as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.tp as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

/// Per-type scores in scheme order plus the micro-averaged total, along with
/// how many BIO violations were repaired before span extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    scheme: LabelScheme,
    per_type: Vec<TypeScore>,
    pub gold_repairs: usize,
    pub pred_repairs: usize,
}

impl EvalReport {
    pub fn from_counts(scheme: LabelScheme, per_type: Vec<TypeScore>) -> Result<Self, EvalError> {
        if per_type.len() != scheme.num_types() {
            return Err(EvalError::InvalidCounts(format!(
                "{} rows for {} types",
                per_type.len(),
                scheme.num_types()
            )));
        }
        if let Some((t, s)) = per_type
            .iter()
            .enumerate()
            .find(|(_, s)| s.tp > s.pred.min(s.gold))
        {
            return Err(EvalError::InvalidCounts(format!(
                "{}: tp {} exceeds min(pred {}, gold {})",
                scheme.type_name(t),
                s.tp,
                s.pred,
                s.gold
            )));
        }
        Ok(Self {
            scheme,
            per_type,
            gold_repairs: 0,
            pred_repairs: 0,
        })
    }

    pub fn scheme(&self) -> &LabelScheme {
        &self.scheme
    }

    /// Score of one type, by scheme type index.
    pub fn type_score(&self, type_idx: usize) -> TypeScore {
        self.per_type[type_idx]
    }

    /// Micro average: counts summed over all types.
    pub fn micro(&self) -> TypeScore {
        let mut total = TypeScore::default();
        for s in &self.per_type {
            total.tp += s.tp;
            total.pred += s.pred;
            total.gold += s.gold;
        }
        total
    }
}

fn check_tokenization(gold: &[Document], pred: &[Document]) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::TokenizationMismatch(format!(
            "{} gold documents vs {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    for (g, p) in gold.iter().zip(pred) {
        if g.sentences.len() != p.sentences.len() {
            return Err(EvalError::TokenizationMismatch(format!(
                "document {}: {} sentences vs {}",
                g.id,
                g.sentences.len(),
                p.sentences.len()
            )));
        }
        for (s, (gs, ps)) in g.sentences.iter().zip(&p.sentences).enumerate() {
            if gs.len() != ps.len() {
                return Err(EvalError::TokenizationMismatch(format!(
                    "document {}, sentence {}: {} tokens vs {}",
                    g.id,
                    s,
                    gs.len(),
                    ps.len()
                )));
            }
        }
    }
    Ok(())
}

fn count_repairs(doc: &Document, side: TagSide, scheme: &LabelScheme) -> usize {
    doc.sentences
        .iter()
        .filter_map(|s| s.tags(side))
        .map(|tags| validate_bio(&tags, scheme).len())
        .sum()
}

/// Predictions are read from a document's `pred` side when every token has
/// one, otherwise from its `gold` slot (the layout of a tagged CoNLL file).
fn pred_side(doc: &Document) -> TagSide {
    if doc.fully_tagged(TagSide::Pred) {
        TagSide::Pred
    } else {
        TagSide::Gold
    }
}

/// Score predictions against gold, paired by document order. An entity is a
/// true positive iff document, sentence, token span, and type all match.
/// Invalid BIO runs on either side are repaired before extraction and the
/// repair counts are carried on the report.
pub fn evaluate(
    gold: &[Document],
    pred: &[Document],
    scheme: &LabelScheme,
) -> Result<EvalReport, EvalError> {
    check_tokenization(gold, pred)?;
    let mut per_type = vec![TypeScore::default(); scheme.num_types()];
    let mut gold_repairs = 0;
    let mut pred_repairs = 0;

    for (gdoc, pdoc) in gold.iter().zip(pred) {
        let side = pred_side(pdoc);
        gold_repairs += count_repairs(gdoc, TagSide::Gold, scheme);
        pred_repairs += count_repairs(pdoc, side, scheme);

        let gold_entities = doc_entities(gdoc, TagSide::Gold, scheme, BioMode::Repair)?;
        let pred_entities = doc_entities(pdoc, side, scheme, BioMode::Repair)?;

        let mut gold_set = BTreeSet::new();
        for e in &gold_entities {
            let t = scheme.type_index(&e.type_name).expect("scheme type");
            per_type[t].gold += 1;
            gold_set.insert((e.sent_index, e.start, e.end, t));
        }
        for e in &pred_entities {
            let t = scheme.type_index(&e.type_name).expect("scheme type");
            per_type[t].pred += 1;
            if gold_set.contains(&(e.sent_index, e.start, e.end, t)) {
                per_type[t].tp += 1;
            }
        }
    }

    Ok(EvalReport {
        scheme: scheme.clone(),
        per_type,
        gold_repairs,
        pred_repairs,
    })
}

fn name_width(scheme: &LabelScheme) -> usize {
    (0..scheme.num_types())
        .map(|t| scheme.display_name(scheme.type_name(t)).len())
        .chain(std::iter::once(3))
        .max()
        .unwrap_or(3)
}

/// Fixed-width table: one row per type in scheme order, then `avg`, with
/// precision/recall/F1 to four decimals. Repairs, if any, are noted below.
pub fn render_report(report: &EvalReport) -> String {
    let scheme = &report.scheme;
    let w = name_width(scheme);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w$}  {:>9}  {:>9}  {:>9}",
        "", "precision", "recall", "F1"
    );
    let mut row = |name: &str, s: TypeScore| {
        let _ = writeln!(
            out,
            "{name:<w$}  {:>9.4}  {:>9.4}  {:>9.4}",
            s.precision(),
            s.recall(),
            s.f1()
        );
    };
    for t in 0..scheme.num_types() {
        row(scheme.display_name(scheme.type_name(t)), report.per_type[t]);
    }
    row("avg", report.micro());
    if report.gold_repairs + report.pred_repairs > 0 {
        let _ = writeln!(
            out,
            "note: repaired invalid BIO runs before scoring (gold: {}, pred: {})",
            report.gold_repairs, report.pred_repairs
        );
    }
    out
}

/// Line-oriented report: `type<TAB>tp<TAB>pred<TAB>gold<TAB>P<TAB>R<TAB>F1`
/// per type in scheme order, then an `avg` line. Type names are canonical
/// (no display aliases).
pub fn render_tsv(report: &EvalReport) -> String {
    let scheme = &report.scheme;
    let mut out = String::new();
    let mut row = |name: &str, s: TypeScore| {
        let _ = writeln!(
            out,
            "{name}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            s.tp,
            s.pred,
            s.gold,
            s.precision(),
            s.recall(),
            s.f1()
        );
    };
    for t in 0..scheme.num_types() {
        row(scheme.type_name(t), report.per_type[t]);
    }
    row("avg", report.micro());
    out
}

fn delta_cell(a: f64, b: f64) -> String {
    format!("{:+.2}%", (b - a) * 100.0)
}

/// Per-type metric deltas `b − a`, each cell signed and in percent (so a
/// difference of 0.0028 renders as `+0.28%`).
pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<String, EvalError> {
    if a.scheme.entity_types() != b.scheme.entity_types() {
        return Err(EvalError::SchemeMismatch);
    }
    let scheme = &a.scheme;
    let w = name_width(scheme);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w$}  {:>9}  {:>9}  {:>9}",
        "", "precision", "recall", "F1"
    );
    let mut row = |name: &str, x: TypeScore, y: TypeScore| {
        let _ = writeln!(
            out,
            "{name:<w$}  {:>9}  {:>9}  {:>9}",
            delta_cell(x.precision(), y.precision()),
            delta_cell(x.recall(), y.recall()),
            delta_cell(x.f1(), y.f1())
        );
    };
    for t in 0..scheme.num_types() {
        row(
            scheme.display_name(scheme.type_name(t)),
            a.per_type[t],
            b.per_type[t],
        );
    }
    row("avg", a.micro(), b.micro());
    Ok(out)
}
