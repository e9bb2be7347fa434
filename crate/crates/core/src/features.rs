//! Sparse feature extraction: word identity, shape, affixes, context windows,
//! gazetteer membership, and the freezable string-to-id index behind them.
//!
//! Feature strings are stable public identifiers (they are written into model
//! files); the grammar is versioned via [`FEATURE_GRAMMAR_VERSION`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::corpus::{doc_entities, BioMode, Document, TagSide};
use crate::scheme::LabelScheme;

/// Bumped whenever the emitted feature-string grammar changes shape.
pub const FEATURE_GRAMMAR_VERSION: &str = "feat-v1";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("gazetteer line {line}: expected `Type<TAB>phrase`")]
    MalformedGazetteer { line: usize },
    #[error("gazetteer line {line}: unknown entity type {name:?}")]
    UnknownGazetteerType { line: usize, name: String },
    #[error("duplicate feature string {0:?}")]
    DuplicateFeature(String),
}

/// Knobs for the feature templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureConfig {
    /// Context window radius; offsets in `[-radius, radius] \ {0}`.
    pub radius: usize,
    /// Longest prefix/suffix emitted.
    pub affix_max: usize,
    pub use_shape: bool,
    pub use_gazetteer: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            radius: 2,
            affix_max: 3,
            use_shape: true,
            use_gazetteer: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.affix_max < 1 {
            return Err(FeatureError::InvalidConfig(
                "affix max length must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-type lexicon of case-folded entity surface forms (token sequences).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: BTreeMap<String, GazEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct GazEntry {
    phrases: BTreeSet<Vec<String>>,
    max_len: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a phrase (case-folded here) for the given type.
    pub fn add_phrase(&mut self, type_name: &str, tokens: &[&str]) {
        if tokens.is_empty() {
            return;
        }
        let folded: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let entry = self.entries.entry(type_name.to_string()).or_default();
        entry.max_len = entry.max_len.max(folded.len());
        entry.phrases.insert(folded);
    }

    pub fn contains(&self, type_name: &str, tokens: &[&str]) -> bool {
        let folded: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        self.entries
            .get(type_name)
            .is_some_and(|e| e.phrases.contains(folded.as_slice()))
    }

    /// Number of phrases across all types.
    pub fn len(&self) -> usize {
        self.entries.values().map(|e| e.phrases.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn phrases(&self, type_name: &str) -> impl Iterator<Item = &[String]> {
        self.entries
            .get(type_name)
            .into_iter()
            .flat_map(|e| e.phrases.iter().map(Vec::as_slice))
    }

    /// Union the other gazetteer into this one.
    pub fn merge(&mut self, other: &Gazetteer) {
        for (ty, entry) in &other.entries {
            let dst = self.entries.entry(ty.clone()).or_default();
            dst.max_len = dst.max_len.max(entry.max_len);
            dst.phrases.extend(entry.phrases.iter().cloned());
        }
    }

    /// Parse `Type<TAB>phrase` lines; blank lines and `#` comments skipped.
    pub fn parse_tsv(text: &str, scheme: &LabelScheme) -> Result<Self, FeatureError> {
        let mut gaz = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (ty, phrase) = raw
                .split_once('\t')
                .ok_or(FeatureError::MalformedGazetteer { line })?;
            if scheme.type_index(ty).is_none() {
                return Err(FeatureError::UnknownGazetteerType {
                    line,
                    name: ty.to_string(),
                });
            }
            let tokens: Vec<&str> = phrase.split_whitespace().collect();
            if tokens.is_empty() {
                return Err(FeatureError::MalformedGazetteer { line });
            }
            gaz.add_phrase(ty, &tokens);
        }
        Ok(gaz)
    }

    /// Serialize back to `Type<TAB>phrase` lines in sorted order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (ty, entry) in &self.entries {
            for phrase in &entry.phrases {
                out.push_str(ty);
                out.push('\t');
                out.push_str(&phrase.join(" "));
                out.push('\n');
            }
        }
        out
    }

    /// For each type, which positions of `tokens` lie inside a greedy
    /// longest-match phrase occurrence. Scan is left to right; at each start
    /// the longest matching phrase wins and the scan resumes after it.
    pub fn cover<'a>(&'a self, tokens: &[&str]) -> Vec<(&'a str, Vec<bool>)> {
        let folded: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        self.entries
            .iter()
            .map(|(ty, entry)| {
                let mut covered = vec![false; tokens.len()];
                let mut i = 0;
                while i < tokens.len() {
                    let max = entry.max_len.min(tokens.len() - i);
                    let hit = (1..=max)
                        .rev()
                        .find(|&len| entry.phrases.contains(&folded[i..i + len]));
                    match hit {
                        Some(len) => {
                            covered[i..i + len].fill(true);
                            i += len;
                        }
                        None => i += 1,
                    }
                }
                (ty.as_str(), covered)
            })
            .collect()
    }
}

/// Harvest a gazetteer from gold entities. The caller is responsible for
/// passing only the training split. Sentences with missing or malformed gold
/// tags are skipped.
pub fn build_gazetteer(docs: &[Document], scheme: &LabelScheme) -> Gazetteer {
    let mut gaz = Gazetteer::new();
    for doc in docs {
        let entities = match doc_entities(doc, TagSide::Gold, scheme, BioMode::Repair) {
            Ok(entities) => entities,
            Err(_) => continue,
        };
        for entity in entities {
            let sentence = &doc.sentences[entity.sent_index];
            let tokens: Vec<&str> = sentence.tokens[entity.start..entity.end]
                .iter()
                .map(|t| t.surface.as_str())
                .collect();
            gaz.add_phrase(&entity.type_name, &tokens);
        }
    }
    gaz
}

/// Word shape: uppercase→`X`, lowercase→`x`, digit→`d`, other chars kept,
/// consecutive runs compressed ("1.0" → "d.d", "Add" → "Xx").
pub fn word_shape(token: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    for c in token.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if last != Some(s) {
            out.push(s);
            last = Some(s);
        }
    }
    out
}

fn is_title(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() => chars.all(|c| !c.is_uppercase()),
        _ => false,
    }
}

fn is_upper(word: &str) -> bool {
    let mut has_alpha = false;
    for c in word.chars() {
        if c.is_alphabetic() {
            has_alpha = true;
            if !c.is_uppercase() {
                return false;
            }
        }
    }
    has_alpha
}

/// Emit the feature strings for one position. Deterministic; `bias` always
/// present.
pub fn token_features(
    tokens: &[&str],
    position: usize,
    config: &FeatureConfig,
    gazetteer: &Gazetteer,
) -> Vec<String> {
    let word = tokens[position];
    let lower = word.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();

    let mut feats = vec!["bias".to_string(), format!("w0={lower}")];
    if config.use_shape {
        feats.push(format!("sh0={}", word_shape(word)));
    }
    for k in 1..=config.affix_max.min(chars.len()) {
        feats.push(format!("p{k}={}", chars[..k].iter().collect::<String>()));
    }
    for k in 1..=config.affix_max.min(chars.len()) {
        let tail: String = chars[chars.len() - k..].iter().collect();
        feats.push(format!("s{k}={tail}"));
    }
    if !word.is_empty() && word.chars().all(|c| c.is_ascii_digit()) {
        feats.push("isdigit".to_string());
    }
    if word.chars().any(|c| c.is_ascii_digit()) {
        feats.push("hasdigit".to_string());
    }
    if !word.is_empty() && word.chars().all(|c| c.is_ascii_punctuation()) {
        feats.push("ispunct".to_string());
    }
    if is_title(word) {
        feats.push("istitle".to_string());
    }
    if is_upper(word) {
        feats.push("isupper".to_string());
    }

    let radius = config.radius as isize;
    for offset in -radius..=radius {
        if offset == 0 {
            continue;
        }
        let at = position as isize + offset;
        if at < 0 {
            feats.push(format!("w{offset:+}=<BOS>"));
        } else if at >= tokens.len() as isize {
            feats.push(format!("w{offset:+}=<EOS>"));
        } else {
            let neighbor = tokens[at as usize];
            feats.push(format!("w{offset:+}={}", neighbor.to_lowercase()));
            if config.use_shape {
                feats.push(format!("sh{offset:+}={}", word_shape(neighbor)));
            }
        }
    }

    if config.use_gazetteer {
        for (ty, covered) in gazetteer.cover(tokens) {
            if covered[position] {
                feats.push(format!("gaz={ty}"));
            }
        }
    }
    feats
}

/// Bijective feature-string interner. Frozen indexes reject new strings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureIndex {
    map: HashMap<String, u32>,
    names: Vec<String>,
    frozen: bool,
}

impl FeatureIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild from a name list (deserialization); the result is frozen.
    pub fn from_names(names: Vec<String>) -> Result<Self, FeatureError> {
        let mut map = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if map.insert(name.clone(), i as u32).is_some() {
                return Err(FeatureError::DuplicateFeature(name.clone()));
            }
        }
        Ok(Self {
            map,
            names,
            frozen: true,
        })
    }

    /// Id for `name`, allocating a fresh one unless frozen. On a frozen index
    /// unseen names return `None`.
    pub fn intern(&mut self, name: &str) -> Option<u32> {
        if let Some(&id) = self.map.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.map.insert(name.to_string(), id);
        Some(id)
    }

    pub fn lookup(&self, name: &str) -> Option<u32> {
        self.map.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    /// Names in id order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Build the frozen index of every feature string the corpus emits, ids in
/// first-seen order.
pub fn fit_index(docs: &[Document], config: &FeatureConfig, gazetteer: &Gazetteer) -> FeatureIndex {
    let mut index = FeatureIndex::new();
    for doc in docs {
        for sentence in &doc.sentences {
            let surfaces = sentence.surfaces();
            for position in 0..surfaces.len() {
                for feat in token_features(&surfaces, position, config, gazetteer) {
                    index.intern(&feat);
                }
            }
        }
    }
    index.freeze();
    index
}

/// Per-position sorted, deduplicated feature ids. Strings unknown to the
/// frozen index are dropped.
pub fn featurize(
    tokens: &[&str],
    index: &FeatureIndex,
    config: &FeatureConfig,
    gazetteer: &Gazetteer,
) -> Vec<Vec<u32>> {
    debug_assert!(index.is_frozen());
    (0..tokens.len())
        .map(|position| {
            let mut ids: Vec<u32> = token_features(tokens, position, config, gazetteer)
                .iter()
                .filter_map(|f| index.lookup(f))
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_conll;

    fn wnut() -> LabelScheme {
        LabelScheme::wnut()
    }

    #[test]
    fn fig_style_sentence_features() {
        let tokens = ["Add", "1.0", "mL"];
        let feats = token_features(&tokens, 1, &FeatureConfig::default(), &Gazetteer::new());
        for expected in ["bias", "w0=1.0", "sh0=d.d", "hasdigit", "w-1=add", "w+1=ml"] {
            assert!(feats.iter().any(|f| f == expected), "missing {expected}");
        }
        assert!(!feats.iter().any(|f| f == "isdigit"));
    }

    #[test]
    fn single_token_context_is_all_boundary() {
        let feats = token_features(&["mix"], 0, &FeatureConfig::default(), &Gazetteer::new());
        for expected in ["w-2=<BOS>", "w-1=<BOS>", "w+1=<EOS>", "w+2=<EOS>"] {
            assert!(feats.iter().any(|f| f == expected), "missing {expected}");
        }
    }

    #[test]
    fn gazetteer_membership_feature() {
        let mut gaz = Gazetteer::new();
        gaz.add_phrase("Action", &["dissect"]);
        let feats = token_features(&["dissect"], 0, &FeatureConfig::default(), &gaz);
        assert!(feats.iter().any(|f| f == "gaz=Action"));
    }

    #[test]
    fn gazetteer_greedy_longest_match() {
        let mut gaz = Gazetteer::new();
        gaz.add_phrase("Reagent", &["host"]);
        gaz.add_phrase("Reagent", &["host", "culture"]);
        let cover = gaz.cover(&["add", "Host", "culture", "now"]);
        assert_eq!(cover, vec![("Reagent", vec![false, true, true, false])]);
    }

    #[test]
    fn build_gazetteer_case_folds_and_dedups() {
        let text = "DNA\tB-Reagent\n\nthe\tO\ndna\tB-Reagent\n";
        let docs = parse_conll(text.as_bytes(), &wnut()).unwrap();
        let gaz = build_gazetteer(&docs, &wnut());
        assert!(gaz.contains("Reagent", &["DNA"]));
        assert_eq!(gaz.len(), 1);
    }

    #[test]
    fn tsv_round_trip() {
        let mut gaz = Gazetteer::new();
        gaz.add_phrase("Action", &["Dissect"]);
        gaz.add_phrase("Reagent", &["host", "culture"]);
        let reparsed = Gazetteer::parse_tsv(&gaz.to_tsv(), &wnut()).unwrap();
        assert_eq!(gaz, reparsed);
        assert!(Gazetteer::parse_tsv("Nope\tword", &wnut()).is_err());
        assert!(Gazetteer::parse_tsv("no tab here", &wnut()).is_err());
    }

    #[test]
    fn shapes() {
        assert_eq!(word_shape("Add"), "Xx");
        assert_eq!(word_shape("1.0"), "d.d");
        assert_eq!(word_shape("DNA"), "X");
        assert_eq!(word_shape("mL"), "xX");
        assert_eq!(word_shape("pH7"), "xXd");
    }

    #[test]
    fn flags() {
        let cfg = FeatureConfig::default();
        let gaz = Gazetteer::new();
        let feats = |w: &str| token_features(&[w], 0, &cfg, &gaz);
        assert!(feats("5").iter().any(|f| f == "isdigit"));
        assert!(feats("(").iter().any(|f| f == "ispunct"));
        assert!(feats("Add").iter().any(|f| f == "istitle"));
        assert!(feats("DNA").iter().any(|f| f == "isupper"));
        assert!(!feats("add").iter().any(|f| f == "istitle"));
    }

    #[test]
    fn index_freeze_semantics() {
        let mut index = FeatureIndex::new();
        assert_eq!(index.intern("bias"), Some(0));
        assert_eq!(index.intern("w0=add"), Some(1));
        assert_eq!(index.intern("bias"), Some(0));
        index.freeze();
        assert_eq!(index.intern("w0=new"), None);
        assert_eq!(index.lookup("w0=add"), Some(1));
        assert_eq!(index.name(1), "w0=add");
    }

    #[test]
    fn fit_and_featurize() {
        let text = "Add\tB-Action\n1.0\tB-Amount\nmL\tI-Amount\n";
        let docs = parse_conll(text.as_bytes(), &wnut()).unwrap();
        let cfg = FeatureConfig::default();
        let gaz = build_gazetteer(&docs, &wnut());
        let index = fit_index(&docs, &cfg, &gaz);
        assert!(index.is_frozen());
        let refit = fit_index(&docs, &cfg, &gaz);
        assert_eq!(index.names(), refit.names());

        let ids = featurize(&["Add", "1.0", "mL"], &index, &cfg, &gaz);
        assert_eq!(ids.len(), 3);
        for row in &ids {
            assert!(row.windows(2).all(|w| w[0] < w[1]));
            assert!(row.contains(&index.lookup("bias").unwrap()));
        }
        let unseen = featurize(&["zzz"], &index, &cfg, &gaz);
        assert!(unseen[0].contains(&index.lookup("bias").unwrap()));
    }

    #[test]
    fn locality_within_radius() {
        let cfg = FeatureConfig::default();
        let gaz = Gazetteer::new();
        let a = ["one", "two", "three", "four", "five", "six"];
        let mut b = a;
        b[5] = "SIX";
        for position in 0..3 {
            assert_eq!(
                token_features(&a, position, &cfg, &gaz),
                token_features(&b, position, &cfg, &gaz)
            );
        }
        assert_ne!(
            token_features(&a, 4, &cfg, &gaz),
            token_features(&b, 4, &cfg, &gaz)
        );
    }
}
