use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::returns::parse_returns_section;
use crate::catalog::schema::{AliasesFile, CatalogFile};
use crate::catalog::{Catalog, Vocabulary};
use crate::error::{Error, Result};
use crate::io;
use crate::names::QualifiedName;

pub const INDEX_FORMAT: &str = "turtletype-doc-index/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDocRecord {
    pub function: QualifiedName,
    pub returns_text: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub inferred_types: BTreeSet<QualifiedName>,
}

/// Inverted index from lowercased identifier tokens of returns sections to
/// the functions whose section contains them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DocIndex {
    postings: BTreeMap<String, BTreeSet<QualifiedName>>,
    records: BTreeMap<QualifiedName, FunctionDocRecord>,
}

/// Lowercased identifier tokens (`[A-Za-z_][A-Za-z0-9_]*`, Unicode letters
/// included). Dots, spaces and punctuation are boundaries, so `DataFrame`
/// is never found inside `pandas.DataFrames` or `MyDataFrame`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| w.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_'))
        .map(str::to_lowercase)
}

impl DocIndex {
    pub fn insert(&mut self, function: QualifiedName, returns_text: String) {
        for token in tokenize(&returns_text) {
            self.postings.entry(token).or_default().insert(function.clone());
        }
        self.records.insert(
            function.clone(),
            FunctionDocRecord {
                function,
                returns_text,
                inferred_types: BTreeSet::new(),
            },
        );
    }

    /// Functions whose returns section contains `token` (case-insensitive).
    pub fn search(&self, token: &str) -> impl Iterator<Item = &QualifiedName> {
        self.postings.get(&token.to_lowercase()).into_iter().flatten()
    }

    pub fn postings(&self) -> &BTreeMap<String, BTreeSet<QualifiedName>> {
        &self.postings
    }

    pub fn records(&self) -> impl Iterator<Item = &FunctionDocRecord> {
        self.records.values()
    }

    pub fn record(&self, function: &QualifiedName) -> Option<&FunctionDocRecord> {
        self.records.get(function)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Copies inferred candidate sets onto the records.
    pub fn annotate(&mut self, inferred: &BTreeMap<QualifiedName, BTreeSet<QualifiedName>>) {
        for (function, types) in inferred {
            if let Some(rec) = self.records.get_mut(function) {
                rec.inferred_types = types.clone();
            }
        }
    }
}

/// One record per documented catalog function.
pub fn build_index(catalog: &Catalog) -> DocIndex {
    let mut index = DocIndex::default();
    for (name, entry) in catalog.functions() {
        if entry.docstring.trim().is_empty() {
            continue;
        }
        index.insert(name.clone(), parse_returns_section(&entry.docstring));
    }
    index
}

/// On-disk index: the records, the postings, and the catalog the index was
/// built from, so inference can run from the index file alone.
#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    catalog: CatalogFile,
    aliases: AliasesFile,
    vocabulary: Vocabulary,
    records: Vec<FunctionDocRecord>,
    postings: BTreeMap<String, BTreeSet<QualifiedName>>,
}

pub fn save_index(path: &Path, index: &DocIndex, catalog: &Catalog) -> Result<()> {
    let (catalog_doc, aliases_doc) = catalog.to_documents();
    let file = IndexFile {
        format: INDEX_FORMAT.to_owned(),
        catalog: catalog_doc,
        aliases: aliases_doc,
        vocabulary: catalog.vocabulary().clone(),
        records: index.records.values().cloned().collect(),
        postings: index.postings.clone(),
    };
    io::write_json(path, &file)
}

pub fn load_index(path: &Path) -> Result<(DocIndex, Catalog)> {
    let file: IndexFile = io::read_json(path)?;
    if file.format != INDEX_FORMAT {
        return Err(Error::schema(path, "format", format!("expected {INDEX_FORMAT}, found {}", file.format)));
    }
    let catalog = Catalog::from_documents(&file.catalog, path, &file.aliases, path)?.with_vocabulary(file.vocabulary);
    let records: BTreeMap<_, _> = file.records.into_iter().map(|r| (r.function.clone(), r)).collect();
    for (token, functions) in &file.postings {
        if let Some(missing) = functions.iter().find(|f| !records.contains_key(*f)) {
            return Err(Error::schema(
                path,
                format!("postings[{token:?}]"),
                format!("{missing} has no record"),
            ));
        }
    }
    Ok((
        DocIndex {
            postings: file.postings,
            records,
        },
        catalog,
    ))
}
