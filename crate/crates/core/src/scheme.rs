//! BIO label scheme: entity types expanded into a tag inventory with integer indices.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

/// The tag string for tokens outside any entity. Always index 0.
pub const OUTSIDE: &str = "O";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("entity type list is empty")]
    Empty,
    #[error("duplicate entity type `{0}`")]
    Duplicate(String),
    #[error("invalid entity type name `{0}`")]
    InvalidName(String),
}

/// What a tag says about the token it labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagKind {
    Outside,
    /// Begins an entity of the given type index.
    Begin(usize),
    /// Continues an entity of the given type index.
    Inside(usize),
}

/// An ordered set of entity types with its derived BIO tag inventory.
///
/// Tags are laid out as `O`, then `B-X`/`I-X` pairs in entity-type order,
/// so a scheme with `n` types has `1 + 2n` tags and `O` is always index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelScheme {
    entity_types: Vec<String>,
    tags: Vec<String>,
    index: HashMap<String, usize>,
    display_aliases: BTreeMap<String, String>,
}

impl LabelScheme {
    pub fn new(entity_types: Vec<String>) -> Result<Self, SchemeError> {
        if entity_types.is_empty() {
            return Err(SchemeError::Empty);
        }
        let mut tags = Vec::with_capacity(1 + 2 * entity_types.len());
        tags.push(OUTSIDE.to_string());
        let mut seen = HashMap::new();
        for (i, name) in entity_types.iter().enumerate() {
            if name.is_empty() || name == OUTSIDE || name.contains(char::is_whitespace) {
                return Err(SchemeError::InvalidName(name.clone()));
            }
            if seen.insert(name.clone(), i).is_some() {
                return Err(SchemeError::Duplicate(name.clone()));
            }
            tags.push(format!("B-{name}"));
            tags.push(format!("I-{name}"));
        }
        let index = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            entity_types,
            tags,
            index,
            display_aliases: BTreeMap::new(),
        })
    }

    /// The 18 entity types of the wet-lab protocol corpus, with the short
    /// display aliases used in reports.
    pub fn wnut() -> Self {
        let types = [
            "Method",
            "Modifier",
            "Reagent",
            "Action",
            "Amount",
            "Device",
            "Time",
            "Speed",
            "Mention",
            "Location",
            "Numerical",
            "Temperature",
            "Size",
            "Concentration",
            "Measure-Type",
            "Generic-Measure",
            "Seal",
            "pH",
        ];
        let mut scheme = Self::new(types.iter().map(|s| s.to_string()).collect())
            .expect("builtin scheme is valid");
        scheme
            .display_aliases
            .insert("Generic-Measure".to_string(), "Measure".to_string());
        scheme
            .display_aliases
            .insert("Measure-Type".to_string(), "Type".to_string());
        scheme
    }

    pub fn entity_types(&self) -> &[String] {
        &self.entity_types
    }

    pub fn num_types(&self) -> usize {
        self.entity_types.len()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tag_name(&self, id: usize) -> &str {
        &self.tags[id]
    }

    pub fn contains_tag(&self, tag: &str) -> bool {
        self.index.contains_key(tag)
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.entity_types.iter().position(|t| t == name)
    }

    pub fn type_name(&self, type_idx: usize) -> &str {
        &self.entity_types[type_idx]
    }

    pub fn begin_tag(&self, type_idx: usize) -> usize {
        1 + 2 * type_idx
    }

    pub fn inside_tag(&self, type_idx: usize) -> usize {
        2 + 2 * type_idx
    }

    pub fn kind(&self, tag_id: usize) -> TagKind {
        if tag_id == 0 {
            TagKind::Outside
        } else if tag_id % 2 == 1 {
            TagKind::Begin((tag_id - 1) / 2)
        } else {
            TagKind::Inside((tag_id - 2) / 2)
        }
    }

    pub fn kind_of(&self, tag: &str) -> Option<TagKind> {
        self.tag_index(tag).map(|id| self.kind(id))
    }

    /// Short names used when rendering reports; types without an alias
    /// display under their own name.
    pub fn display_aliases(&self) -> &BTreeMap<String, String> {
        &self.display_aliases
    }

    pub fn set_display_alias(&mut self, type_name: &str, alias: &str) {
        self.display_aliases
            .insert(type_name.to_string(), alias.to_string());
    }

    pub fn display_name<'a>(&'a self, type_name: &'a str) -> &'a str {
        self.display_aliases
            .get(type_name)
            .map(String::as_str)
            .unwrap_or(type_name)
    }
}
