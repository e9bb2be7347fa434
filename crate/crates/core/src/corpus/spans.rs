//! Conversion between BIO tag sequences and entity spans, plus validation.

use crate::scheme::{LabelScheme, TagKind};

use super::{CorpusError, Document, Entity, TagSide};

/// How to treat an `I-X` that does not continue an open `X` entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BioMode {
    /// Raise [`CorpusError::InvalidBio`].
    Strict,
    /// Promote the orphan `I-X` to `B-X` (IOB2 repair).
    #[default]
    Repair,
}

/// A position whose tag cannot follow its predecessor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BioViolation {
    pub position: usize,
    /// Tag of the previous position, or `None` at sentence start.
    pub previous: Option<String>,
    pub tag: String,
}

impl std::fmt::Display for BioViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}->{}",
            self.position,
            self.previous.as_deref().unwrap_or("<start>"),
            self.tag
        )
    }
}

fn kind_or_err(tag: &str, position: usize, scheme: &LabelScheme) -> Result<TagKind, CorpusError> {
    scheme.kind_of(tag).ok_or_else(|| CorpusError::InvalidBio {
        position,
        tag: tag.to_string(),
        previous: String::new(),
    })
}

/// Extract entities from a tag sequence. Output spans are non-overlapping
/// and sorted by start; `sent_index` is 0 and surfaces are empty (callers
/// with token access use [`doc_entities`]).
pub fn tags_to_spans<S: AsRef<str>>(
    tags: &[S],
    scheme: &LabelScheme,
    mode: BioMode,
) -> Result<Vec<Entity>, CorpusError> {
    let mut entities = Vec::new();
    // (type index, start)
    let mut open: Option<(usize, usize)> = None;
    for (pos, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        let kind = kind_or_err(tag, pos, scheme)?;
        match kind {
            TagKind::Outside => {
                if let Some((t, start)) = open.take() {
                    entities.push(Entity::new(scheme.type_name(t), 0, start, pos, ""));
                }
            }
            TagKind::Begin(t) => {
                if let Some((prev, start)) = open.take() {
                    entities.push(Entity::new(scheme.type_name(prev), 0, start, pos, ""));
                }
                open = Some((t, pos));
            }
            TagKind::Inside(t) => match open {
                Some((cur, _)) if cur == t => {}
                _ => {
                    if mode == BioMode::Strict {
                        let previous = if pos == 0 {
                            "<start>".to_string()
                        } else {
                            tags[pos - 1].as_ref().to_string()
                        };
                        return Err(CorpusError::InvalidBio {
                            position: pos,
                            tag: tag.to_string(),
                            previous,
                        });
                    }
                    // Repair: treat as B-X.
                    if let Some((prev, start)) = open.take() {
                        entities.push(Entity::new(scheme.type_name(prev), 0, start, pos, ""));
                    }
                    open = Some((t, pos));
                }
            },
        }
    }
    if let Some((t, start)) = open {
        entities.push(Entity::new(scheme.type_name(t), 0, start, tags.len(), ""));
    }
    Ok(entities)
}

/// Write entities back into a tag sequence of the given length.
pub fn spans_to_tags(
    entities: &[Entity],
    length: usize,
    scheme: &LabelScheme,
) -> Result<Vec<String>, CorpusError> {
    let mut sorted: Vec<&Entity> = entities.iter().collect();
    sorted.sort_by_key(|e| (e.start, e.end));
    let mut tags = vec![scheme.tag_name(0).to_string(); length];
    let mut last_end = 0usize;
    for entity in sorted {
        if entity.start >= entity.end || entity.end > length {
            return Err(CorpusError::OutOfBounds {
                type_name: entity.type_name.clone(),
                start: entity.start,
                end: entity.end,
                len: length,
            });
        }
        if entity.start < last_end {
            return Err(CorpusError::OverlappingEntities {
                position: entity.start,
            });
        }
        last_end = entity.end;
        let t = scheme
            .type_index(&entity.type_name)
            .ok_or_else(|| CorpusError::OutOfBounds {
                type_name: entity.type_name.clone(),
                start: entity.start,
                end: entity.end,
                len: length,
            })?;
        tags[entity.start] = scheme.tag_name(scheme.begin_tag(t)).to_string();
        for tag in tags.iter_mut().take(entity.end).skip(entity.start + 1) {
            *tag = scheme.tag_name(scheme.inside_tag(t)).to_string();
        }
    }
    Ok(tags)
}

/// List every BIO violation in a tag sequence. Empty iff the sequence is
/// valid, i.e. iff strict [`tags_to_spans`] succeeds.
pub fn validate_bio<S: AsRef<str>>(tags: &[S], scheme: &LabelScheme) -> Vec<BioViolation> {
    let mut violations = Vec::new();
    let mut open: Option<usize> = None;
    for (pos, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        let kind = match scheme.kind_of(tag) {
            Some(kind) => kind,
            None => {
                violations.push(BioViolation {
                    position: pos,
                    previous: (pos > 0).then(|| tags[pos - 1].as_ref().to_string()),
                    tag: tag.to_string(),
                });
                open = None;
                continue;
            }
        };
        match kind {
            TagKind::Outside => open = None,
            TagKind::Begin(t) => open = Some(t),
            TagKind::Inside(t) => {
                if open != Some(t) {
                    violations.push(BioViolation {
                        position: pos,
                        previous: (pos > 0).then(|| tags[pos - 1].as_ref().to_string()),
                        tag: tag.to_string(),
                    });
                }
                open = Some(t);
            }
        }
    }
    violations
}

/// Entities of a whole document, with `sent_index` and surfaces filled in.
pub fn doc_entities(
    doc: &Document,
    side: TagSide,
    scheme: &LabelScheme,
    mode: BioMode,
) -> Result<Vec<Entity>, CorpusError> {
    let mut entities = Vec::new();
    for (s, sentence) in doc.sentences.iter().enumerate() {
        let tags: Vec<&str> = sentence
            .tokens
            .iter()
            .enumerate()
            .map(|(p, token)| {
                token.tag(side).ok_or_else(|| CorpusError::MissingTag {
                    doc: doc.id.clone(),
                    sentence: s,
                    position: p,
                    side,
                })
            })
            .collect::<Result<_, _>>()?;
        for mut entity in tags_to_spans(&tags, scheme, mode)? {
            entity.sent_index = s;
            entity.surface = sentence.tokens[entity.start..entity.end]
                .iter()
                .map(|t| t.surface.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            entities.push(entity);
        }
    }
    Ok(entities)
}
