//! BRAT standoff annotations: paired `.txt`/`.ann` files, character-offset
//! alignment onto whole tokens.

use crate::scheme::LabelScheme;

use super::{CorpusError, Document, Sentence, Token};

/// A token with its half-open character-offset range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

/// Whitespace tokenizer that additionally splits leading and trailing
/// punctuation into separate tokens. Offsets count Unicode scalars.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tokenizer;

impl Tokenizer {
    /// Tokenize one line; `offset` is the line's starting character offset.
    fn tokenize_line(&self, line: &[char], offset: usize, out: &mut Vec<TokenSpan>) {
        let mut i = 0;
        while i < line.len() {
            if line[i].is_whitespace() {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < line.len() && !line[j].is_whitespace() {
                j += 1;
            }
            // [i, j) is a whitespace-delimited chunk; peel punctuation.
            let mut lo = i;
            let mut hi = j;
            while lo < hi && line[lo].is_ascii_punctuation() && hi - lo > 1 {
                out.push(span(line, offset, lo, lo + 1));
                lo += 1;
            }
            let mut trailing = Vec::new();
            while hi > lo && line[hi - 1].is_ascii_punctuation() && hi - lo > 1 {
                trailing.push(span(line, offset, hi - 1, hi));
                hi -= 1;
            }
            out.push(span(line, offset, lo, hi));
            out.extend(trailing.into_iter().rev());
            i = j;
        }
    }

    /// Split text into sentences (one per non-blank line) of [`TokenSpan`]s.
    pub fn tokenize(&self, text: &str) -> Vec<Vec<TokenSpan>> {
        let chars: Vec<char> = text.chars().collect();
        let mut sentences = Vec::new();
        let mut line_start = 0;
        for (i, &c) in chars.iter().chain(std::iter::once(&'\n')).enumerate() {
            if c == '\n' {
                let line = &chars[line_start..i.min(chars.len())];
                let mut tokens = Vec::new();
                self.tokenize_line(line, line_start, &mut tokens);
                if !tokens.is_empty() {
                    sentences.push(tokens);
                }
                line_start = i + 1;
            }
        }
        sentences
    }
}

fn span(line: &[char], offset: usize, lo: usize, hi: usize) -> TokenSpan {
    TokenSpan {
        surface: line[lo..hi].iter().collect(),
        start: offset + lo,
        end: offset + hi,
    }
}

/// How alignment failures are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BratPolicy {
    /// Alignment failures are errors.
    #[default]
    Strict,
    /// Alignment failures drop the annotation and record a warning.
    DropInvalid,
}

/// Result of parsing one BRAT pair: the document plus warnings for ignored
/// lines and discarded annotations.
#[derive(Debug, Clone)]
pub struct BratParse {
    pub document: Document,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
struct RawSpan {
    id: String,
    type_idx: usize,
    start: usize,
    end: usize,
}

/// Parse a `.txt`/`.ann` pair with the strict policy: every annotation must
/// align to whole tokens. Overlapping annotations are resolved by keeping the
/// earlier-starting (then longer) span; discards appear in `warnings`.
pub fn parse_brat(
    txt: &str,
    ann: &str,
    tokenizer: &Tokenizer,
    scheme: &LabelScheme,
) -> Result<BratParse, CorpusError> {
    parse_brat_with(txt, ann, tokenizer, scheme, BratPolicy::Strict)
}

pub fn parse_brat_with(
    txt: &str,
    ann: &str,
    tokenizer: &Tokenizer,
    scheme: &LabelScheme,
    policy: BratPolicy,
) -> Result<BratParse, CorpusError> {
    let txt = txt.strip_prefix('\u{feff}').unwrap_or(txt);
    let text_len = txt.chars().count();
    let chars: Vec<char> = txt.chars().collect();
    let mut warnings = Vec::new();

    let mut raw = Vec::new();
    for (idx, line) in ann.lines().enumerate() {
        let line_no = idx + 1;
        let line = if idx == 0 {
            line.strip_prefix('\u{feff}').unwrap_or(line)
        } else {
            line
        };
        if line.is_empty() {
            continue;
        }
        if !line.starts_with('T') {
            warnings.push(format!("line {line_no}: ignored non-entity line"));
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let id = fields.next().unwrap_or("").to_string();
        let middle = fields.next();
        let surface = fields.next();
        let (middle, surface) = match (middle, surface) {
            (Some(m), Some(s)) => (m, s),
            _ => return Err(CorpusError::MalformedLine { line: line_no }),
        };
        let parts: Vec<&str> = middle.split_whitespace().collect();
        if parts.len() != 3 || middle.contains(';') {
            // Discontinuous spans (`start end;start end`) are unsupported.
            return Err(CorpusError::MalformedLine { line: line_no });
        }
        let type_name = parts[0];
        let (start, end) = match (parts[1].parse::<usize>(), parts[2].parse::<usize>()) {
            (Ok(s), Ok(e)) => (s, e),
            _ => return Err(CorpusError::MalformedLine { line: line_no }),
        };
        let type_idx = scheme
            .type_index(type_name)
            .ok_or_else(|| CorpusError::UnknownTag {
                tag: type_name.to_string(),
                line: line_no,
            })?;
        if start >= end || end > text_len {
            return Err(CorpusError::OffsetOutOfBounds {
                id,
                start,
                end,
                len: text_len,
            });
        }
        let slice: String = chars[start..end].iter().collect();
        if slice != surface {
            return Err(CorpusError::SurfaceMismatch {
                id,
                expected: surface.to_string(),
                found: slice,
            });
        }
        raw.push(RawSpan {
            id,
            type_idx,
            start,
            end,
        });
    }

    let sentences = tokenizer.tokenize(txt);

    // Align each span to a contiguous run of whole tokens in one sentence.
    let mut aligned: Vec<(RawSpan, usize, usize, usize)> = Vec::new();
    'spans: for span in raw {
        for (s, tokens) in sentences.iter().enumerate() {
            let begin = tokens.iter().position(|t| t.start == span.start);
            let finish = tokens.iter().position(|t| t.end == span.end);
            if let (Some(b), Some(f)) = (begin, finish) {
                if b <= f {
                    aligned.push((span, s, b, f + 1));
                    continue 'spans;
                }
            }
        }
        match policy {
            BratPolicy::Strict => {
                return Err(CorpusError::MisalignedSpan { id: span.id });
            }
            BratPolicy::DropInvalid => {
                warnings.push(format!(
                    "annotation {}: span {}..{} does not align to token boundaries, dropped",
                    span.id, span.start, span.end
                ));
            }
        }
    }

    // Keep earlier-starting, then longer, spans; report the discards.
    aligned.sort_by(|a, b| {
        (a.0.start, std::cmp::Reverse(a.0.end))
            .cmp(&(b.0.start, std::cmp::Reverse(b.0.end)))
            .then_with(|| a.0.id.cmp(&b.0.id))
    });
    let mut kept: Vec<(RawSpan, usize, usize, usize)> = Vec::new();
    for cand in aligned {
        match kept.last() {
            Some(prev) if cand.0.start < prev.0.end => {
                warnings.push(format!(
                    "annotation {}: overlaps {}, dropped",
                    cand.0.id, prev.0.id
                ));
            }
            _ => kept.push(cand),
        }
    }

    let mut doc_sentences: Vec<Sentence> = sentences
        .iter()
        .map(|tokens| {
            Sentence::new(
                tokens
                    .iter()
                    .map(|t| Token {
                        surface: t.surface.clone(),
                        gold_tag: Some(scheme.tag_name(0).to_string()),
                        pred_tag: None,
                        char_start: Some(t.start),
                        char_end: Some(t.end),
                    })
                    .collect(),
            )
        })
        .collect();
    for (span, s, b, f) in kept {
        let sentence = &mut doc_sentences[s];
        sentence.tokens[b].gold_tag =
            Some(scheme.tag_name(scheme.begin_tag(span.type_idx)).to_string());
        for token in sentence.tokens[b + 1..f].iter_mut() {
            token.gold_tag = Some(
                scheme
                    .tag_name(scheme.inside_tag(span.type_idx))
                    .to_string(),
            );
        }
    }

    if doc_sentences.is_empty() {
        return Err(CorpusError::EmptyDocument);
    }
    let mut document = Document::new("doc", doc_sentences);
    document.source_text = Some(txt.to_string());
    Ok(BratParse { document, warnings })
}
