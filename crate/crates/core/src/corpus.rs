//! Parsed class and method records and the corpus that owns them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::java::{self, ParseError};
use crate::subtoken::SubToken;

/// JSON-lines schema version carried by every exported record.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    #[serde(rename = "type")]
    pub ty: String,
    pub name: String,
}

/// A call expression inside a method body, identified by simple name and
/// argument count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub name: String,
    pub args: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub id: String,
    pub name: String,
    pub name_subtokens: Vec<SubToken>,
    pub return_type: String,
    pub params: Vec<Param>,
    /// Identifier stream of the body in source order.
    pub body_tokens: Vec<String>,
    pub class_id: String,
    pub callee_sites: Vec<CallSite>,
    pub line_count: u32,
}

impl MethodRecord {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub id: String,
    pub name: String,
    pub field_names: Vec<String>,
    pub method_ids: Vec<String>,
    /// Class-level identifiers (field names, initializer identifiers,
    /// constants, nested type names) in source order. Method bodies are not
    /// part of this list.
    pub entity_names: Vec<String>,
}

/// The records parsed from one source file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParsedFile {
    pub classes: Vec<ClassRecord>,
    pub methods: Vec<MethodRecord>,
}

/// Parses one Java source file. `file` is the corpus-relative path used to
/// derive record ids.
pub fn parse_source(file: &str, text: &str) -> Result<ParsedFile, ParseError> {
    java::parse_file(file, text)
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error("method {method} refers to unknown class {class}")]
    UnknownClass { method: String, class: String },
    #[error("class {class} lists unknown method {method}")]
    UnknownMethod { class: String, method: String },
}

/// All classes and methods of a corpus, with index lookups.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub classes: Vec<ClassRecord>,
    pub methods: Vec<MethodRecord>,
    method_index: BTreeMap<String, usize>,
    class_index: BTreeMap<String, usize>,
    method_class: Vec<usize>,
}

impl Corpus {
    /// Merges parsed files. Callers pass files sorted by path so the merge
    /// is deterministic.
    pub fn from_files<I: IntoIterator<Item = ParsedFile>>(files: I) -> Result<Self, CorpusError> {
        let mut classes = Vec::new();
        let mut methods = Vec::new();
        for f in files {
            classes.extend(f.classes);
            methods.extend(f.methods);
        }
        Self::from_records(classes, methods)
    }

    pub fn from_records(
        classes: Vec<ClassRecord>,
        methods: Vec<MethodRecord>,
    ) -> Result<Self, CorpusError> {
        let mut class_index = BTreeMap::new();
        for (i, c) in classes.iter().enumerate() {
            if class_index.insert(c.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(c.id.clone()));
            }
        }
        let mut method_index = BTreeMap::new();
        let mut method_class = Vec::with_capacity(methods.len());
        for (i, m) in methods.iter().enumerate() {
            if method_index.insert(m.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(m.id.clone()));
            }
            let ci = *class_index
                .get(&m.class_id)
                .ok_or_else(|| CorpusError::UnknownClass {
                    method: m.id.clone(),
                    class: m.class_id.clone(),
                })?;
            method_class.push(ci);
        }
        for c in &classes {
            if let Some(missing) = c
                .method_ids
                .iter()
                .find(|id| !method_index.contains_key(*id))
            {
                return Err(CorpusError::UnknownMethod {
                    class: c.id.clone(),
                    method: missing.clone(),
                });
            }
        }
        Ok(Corpus {
            classes,
            methods,
            method_index,
            class_index,
            method_class,
        })
    }

    pub fn method_by_id(&self, id: &str) -> Option<usize> {
        self.method_index.get(id).copied()
    }

    pub fn class_by_id(&self, id: &str) -> Option<usize> {
        self.class_index.get(id).copied()
    }

    /// Index of the class owning method `m`.
    pub fn class_of(&self, m: usize) -> usize {
        self.method_class[m]
    }

    /// Method indices of a class in declaration order.
    pub fn class_methods(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.classes[class]
            .method_ids
            .iter()
            .filter_map(move |id| self.method_index.get(id).copied())
    }
}
