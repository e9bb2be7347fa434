//! Tagged protocol corpora: domain types, CoNLL and BRAT parsing, BIO span
//! handling, and a deterministic synthetic generator.

mod brat;
mod conll;
mod spans;
mod synthetic;

pub use brat::{parse_brat, parse_brat_with, BratParse, BratPolicy, TokenSpan, Tokenizer};
pub use conll::{
    load_conll_corpus, load_conll_corpus_untagged, load_conll_file, parse_conll,
    parse_conll_untagged, serialize_conll, serialize_document, write_conll_corpus,
};
pub use spans::{doc_entities, spans_to_tags, tags_to_spans, validate_bio, BioMode, BioViolation};
pub use synthetic::generate_synthetic;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: expected `surface<TAB>tag`")]
    MalformedLine { line: usize },
    #[error("line {line}: unknown tag `{tag}`")]
    UnknownTag { tag: String, line: usize },
    #[error("no sentences found")]
    EmptyDocument,
    #[error("document {doc}, sentence {sentence}, token {position}: missing {side} tag")]
    MissingTag {
        doc: String,
        sentence: usize,
        position: usize,
        side: TagSide,
    },
    #[error("annotation {id}: offsets {start}..{end} out of bounds (text length {len})")]
    OffsetOutOfBounds {
        id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("annotation {id}: surface `{expected}` does not match text slice `{found}`")]
    SurfaceMismatch {
        id: String,
        expected: String,
        found: String,
    },
    #[error("annotation {id}: span boundary falls inside a token")]
    MisalignedSpan { id: String },
    #[error("position {position}: invalid BIO tag `{tag}` after `{previous}`")]
    InvalidBio {
        position: usize,
        tag: String,
        previous: String,
    },
    #[error("entities overlap at token {position}")]
    OverlappingEntities { position: usize },
    #[error("entity {type_name} {start}..{end} out of bounds for sentence of length {len}")]
    OutOfBounds {
        type_name: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which tag slot of a token an operation reads or writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagSide {
    Gold,
    Pred,
}

impl std::fmt::Display for TagSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TagSide::Gold => write!(f, "gold"),
            TagSide::Pred => write!(f, "pred"),
        }
    }
}

/// A single token with optional gold/predicted tags and character offsets
/// into the source text (populated by the BRAT parser).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub gold_tag: Option<String>,
    pub pred_tag: Option<String>,
    pub char_start: Option<usize>,
    pub char_end: Option<usize>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        Self {
            surface: surface.into(),
            gold_tag: None,
            pred_tag: None,
            char_start: None,
            char_end: None,
        }
    }

    pub fn tagged(surface: impl Into<String>, gold: impl Into<String>) -> Self {
        Self {
            gold_tag: Some(gold.into()),
            ..Self::new(surface)
        }
    }

    pub fn tag(&self, side: TagSide) -> Option<&str> {
        match side {
            TagSide::Gold => self.gold_tag.as_deref(),
            TagSide::Pred => self.pred_tag.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Tags on the given side, or `None` if any token is untagged.
    pub fn tags(&self, side: TagSide) -> Option<Vec<&str>> {
        self.tokens.iter().map(|t| t.tag(side)).collect()
    }
}

/// One protocol: an id, its sentences, and optionally the raw source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub source_text: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Self {
            id: id.into(),
            sentences,
            source_text: None,
        }
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// True when every token carries a tag on the given side.
    pub fn fully_tagged(&self, side: TagSide) -> bool {
        self.sentences
            .iter()
            .all(|s| s.tokens.iter().all(|t| t.tag(side).is_some()))
    }
}

/// A typed entity mention: a half-open token interval within one sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Entity {
    pub type_name: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl Entity {
    pub fn new(
        type_name: impl Into<String>,
        sent_index: usize,
        start: usize,
        end: usize,
        surface: impl Into<String>,
    ) -> Self {
        Self {
            type_name: type_name.into(),
            sent_index,
            start,
            end,
            surface: surface.into(),
        }
    }
}

/// Lowercase every token surface in place. Tags are untouched; idempotent.
pub fn lowercase_corpus(docs: &mut [Document]) {
    for doc in docs {
        for sentence in &mut doc.sentences {
            for token in &mut sentence.tokens {
                token.surface = token.surface.to_lowercase();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Document> {
        vec![Document::new(
            "p1",
            vec![Sentence::new(vec![
                Token::tagged("DNA", "B-Reagent"),
                Token::tagged("Extraction", "B-Method"),
            ])],
        )]
    }

    #[test]
    fn lowercase_is_idempotent_and_keeps_tags() {
        let mut docs = sample();
        lowercase_corpus(&mut docs);
        assert_eq!(docs[0].sentences[0].tokens[0].surface, "dna");
        assert_eq!(
            docs[0].sentences[0].tokens[0].gold_tag.as_deref(),
            Some("B-Reagent")
        );
        let once = docs.clone();
        lowercase_corpus(&mut docs);
        assert_eq!(docs, once);
    }

    #[test]
    fn tag_side_lookup() {
        let mut token = Token::tagged("mix", "O");
        token.pred_tag = Some("B-Action".into());
        assert_eq!(token.tag(TagSide::Gold), Some("O"));
        assert_eq!(token.tag(TagSide::Pred), Some("B-Action"));
    }
}
