//! Interchange documents produced by the catalog extractor.
//!
//! Records are kept as loose `serde_json::Value`s at the top level so that a
//! malformed record can be reported by position instead of failing the whole
//! document with a line/column.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modules: Vec<String>,
    #[serde(default)]
    pub classes: Vec<ClassRecord>,
    #[serde(default)]
    pub functions: Vec<FunctionRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub name: String,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub bases: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub name: String,
    #[serde(default)]
    pub docstring: String,
    #[serde(default)]
    pub class: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasesFile {
    #[serde(default)]
    pub aliases: Vec<AliasRecord>,
    #[serde(default)]
    pub invalid: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasRecord {
    pub alias: String,
    pub canonical: String,
}

#[derive(Deserialize)]
pub(crate) struct LooseCatalog {
    #[serde(default)]
    pub modules: Vec<serde_json::Value>,
    #[serde(default)]
    pub classes: Vec<serde_json::Value>,
    #[serde(default)]
    pub functions: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
pub(crate) struct LooseAliases {
    #[serde(default)]
    pub aliases: Vec<serde_json::Value>,
    #[serde(default)]
    pub invalid: Vec<serde_json::Value>,
}
