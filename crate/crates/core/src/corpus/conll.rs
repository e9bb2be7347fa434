//! CoNLL format: `surface<TAB>tag` lines, blank line between sentences,
//! one file per protocol.

use std::fs;
use std::io::BufRead;
use std::path::Path;

use crate::scheme::LabelScheme;

use super::{CorpusError, Document, Sentence, TagSide, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TagColumn {
    Required,
    Optional,
}

/// Comment lines start with `#` and carry no tab; a token line always has
/// exactly one tab.
fn is_comment(line: &str) -> bool {
    line.starts_with('#') && !line.contains('\t')
}

fn parse_impl<R: BufRead>(
    input: R,
    scheme: &LabelScheme,
    tags: TagColumn,
) -> Result<Vec<Document>, CorpusError> {
    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let mut line = line?;
        if idx == 0 {
            if let Some(stripped) = line.strip_prefix('\u{feff}') {
                line = stripped.to_string();
            }
        }
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(Sentence::new(std::mem::take(&mut current)));
            }
            continue;
        }
        if is_comment(&line) {
            continue;
        }
        let mut fields = line.split('\t');
        let surface = fields.next().unwrap_or("");
        let tag = fields.next();
        if fields.next().is_some() || surface.is_empty() {
            return Err(CorpusError::MalformedLine { line: line_no });
        }
        let gold_tag = match (tag, tags) {
            (Some(tag), _) => {
                if !scheme.contains_tag(tag) {
                    return Err(CorpusError::UnknownTag {
                        tag: tag.to_string(),
                        line: line_no,
                    });
                }
                Some(tag.to_string())
            }
            (None, TagColumn::Optional) => None,
            (None, TagColumn::Required) => {
                return Err(CorpusError::MalformedLine { line: line_no })
            }
        };
        current.push(Token {
            surface: surface.to_string(),
            gold_tag,
            pred_tag: None,
            char_start: None,
            char_end: None,
        });
    }
    if !current.is_empty() {
        sentences.push(Sentence::new(current));
    }
    if sentences.is_empty() {
        return Err(CorpusError::EmptyDocument);
    }
    Ok(vec![Document::new("doc", sentences)])
}

/// Parse one CoNLL stream into documents (a file holds exactly one protocol,
/// so the list has one element). Tokens carry gold tags; tags not in the
/// scheme are an error.
pub fn parse_conll<R: BufRead>(
    input: R,
    scheme: &LabelScheme,
) -> Result<Vec<Document>, CorpusError> {
    parse_impl(input, scheme, TagColumn::Required)
}

/// Like [`parse_conll`] but accepts surface-only lines, for tagging input.
/// Tags, when present, are still validated.
pub fn parse_conll_untagged<R: BufRead>(
    input: R,
    scheme: &LabelScheme,
) -> Result<Vec<Document>, CorpusError> {
    parse_impl(input, scheme, TagColumn::Optional)
}

/// Serialize one document; the selected tag must be present on every token.
pub fn serialize_document(doc: &Document, side: TagSide) -> Result<String, CorpusError> {
    let mut out = String::new();
    for (s, sentence) in doc.sentences.iter().enumerate() {
        if s > 0 {
            out.push('\n');
        }
        for (p, token) in sentence.tokens.iter().enumerate() {
            let tag = token.tag(side).ok_or_else(|| CorpusError::MissingTag {
                doc: doc.id.clone(),
                sentence: s,
                position: p,
                side,
            })?;
            out.push_str(&token.surface);
            out.push('\t');
            out.push_str(tag);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Serialize documents in order, separated by blank lines. Round-trips with
/// [`parse_conll`] byte-exactly for single-document canonical input.
pub fn serialize_conll(docs: &[Document], side: TagSide) -> Result<String, CorpusError> {
    let mut out = String::new();
    for (i, doc) in docs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&serialize_document(doc, side)?);
    }
    Ok(out)
}

fn load_file(path: &Path, scheme: &LabelScheme, tags: TagColumn) -> Result<Document, CorpusError> {
    let file = fs::File::open(path)?;
    let mut docs = parse_impl(std::io::BufReader::new(file), scheme, tags)?;
    let mut doc = docs.remove(0);
    doc.id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "doc".to_string());
    Ok(doc)
}

fn load_corpus(
    path: &Path,
    scheme: &LabelScheme,
    tags: TagColumn,
) -> Result<Vec<Document>, CorpusError> {
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "conll"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CorpusError::EmptyDocument);
        }
        files.iter().map(|p| load_file(p, scheme, tags)).collect()
    } else {
        Ok(vec![load_file(path, scheme, tags)?])
    }
}

/// Read one `.conll` file; the document id is the file stem.
pub fn load_conll_file(path: &Path, scheme: &LabelScheme) -> Result<Document, CorpusError> {
    load_file(path, scheme, TagColumn::Required)
}

/// Load a corpus from a single `.conll` file or a directory of them.
/// Directory entries are read in sorted name order.
pub fn load_conll_corpus(path: &Path, scheme: &LabelScheme) -> Result<Vec<Document>, CorpusError> {
    load_corpus(path, scheme, TagColumn::Required)
}

/// Like [`load_conll_corpus`], but tolerates surface-only lines.
pub fn load_conll_corpus_untagged(
    path: &Path,
    scheme: &LabelScheme,
) -> Result<Vec<Document>, CorpusError> {
    load_corpus(path, scheme, TagColumn::Optional)
}

/// Write one `.conll` file per document into `dir`, named by document id.
/// `header` is emitted as a leading comment line when given.
pub fn write_conll_corpus(
    docs: &[Document],
    dir: &Path,
    side: TagSide,
    header: Option<&str>,
) -> Result<(), CorpusError> {
    fs::create_dir_all(dir)?;
    for doc in docs {
        let body = serialize_document(doc, side)?;
        let mut text = String::new();
        if let Some(h) = header {
            text.push_str(h);
            text.push('\n');
        }
        text.push_str(&body);
        fs::write(dir.join(format!("{}.conll", doc.id)), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme() -> LabelScheme {
        LabelScheme::wnut()
    }

    #[test]
    fn parses_single_token() {
        let docs = parse_conll("dissect\tB-Action\n".as_bytes(), &scheme()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].sentences.len(), 1);
        let token = &docs[0].sentences[0].tokens[0];
        assert_eq!(token.surface, "dissect");
        assert_eq!(token.gold_tag.as_deref(), Some("B-Action"));
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(
            parse_conll("".as_bytes(), &scheme()),
            Err(CorpusError::EmptyDocument)
        ));
    }

    #[test]
    fn sentence_lengths_from_blank_lines() {
        let text = "Add\tO\n1.0\tB-Amount\nmL\tI-Amount\n\nMix\tB-Action\nwell\tO\n";
        let docs = parse_conll(text.as_bytes(), &scheme()).unwrap();
        let lengths: Vec<_> = docs[0].sentences.iter().map(Sentence::len).collect();
        assert_eq!(lengths, vec![3, 2]);
        let round = serialize_conll(&docs, TagSide::Gold).unwrap();
        assert_eq!(round, text);
    }

    #[test]
    fn unknown_tag_is_an_error() {
        let err = parse_conll("x\tB-Nope\n".as_bytes(), &scheme()).unwrap_err();
        match err {
            CorpusError::UnknownTag { tag, line } => {
                assert_eq!(tag, "B-Nope");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count_is_malformed() {
        let err = parse_conll("a\tO\tO\n".as_bytes(), &scheme()).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedLine { line: 1 }));
        let err = parse_conll("a\n".as_bytes(), &scheme()).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedLine { line: 1 }));
    }

    #[test]
    fn untagged_parse_accepts_bare_surfaces() {
        let docs = parse_conll_untagged("Add\n1.0\tB-Amount\n".as_bytes(), &scheme()).unwrap();
        let tokens = &docs[0].sentences[0].tokens;
        assert_eq!(tokens[0].gold_tag, None);
        assert_eq!(tokens[1].gold_tag.as_deref(), Some("B-Amount"));
    }

    #[test]
    fn serialize_missing_tag() {
        let doc = Document::new("d", vec![Sentence::new(vec![Token::new("x")])]);
        let err = serialize_conll(&[doc], TagSide::Gold).unwrap_err();
        assert!(matches!(err, CorpusError::MissingTag { .. }));
    }

    #[test]
    fn pred_side_serialization() {
        let mut token = Token::new("mix");
        token.pred_tag = Some("B-Action".into());
        let doc = Document::new("d", vec![Sentence::new(vec![token])]);
        let text = serialize_conll(&[doc], TagSide::Pred).unwrap();
        assert_eq!(text, "mix\tB-Action\n");
    }

    #[test]
    fn bom_and_comments_are_skipped() {
        let text = "\u{feff}# generated by a header line\ndissect\tB-Action\n";
        let docs = parse_conll(text.as_bytes(), &scheme()).unwrap();
        assert_eq!(docs[0].num_tokens(), 1);
    }
}
