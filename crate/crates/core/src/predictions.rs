//! Prediction documents exchanged between stages.
//!
//! `doc_types` and `analysis_types` files share one shape; third-party
//! predictions exported to the same shape can be merged and scored too.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::names::QualifiedName;

pub const SOURCE_DOCSTRING: &str = "docstring";
pub const SOURCE_ANALYSIS: &str = "analysis";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub predictions: Vec<Prediction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub function: String,
    pub types: Vec<String>,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, usize>>,
}

/// Function → predicted type set.
pub type TypeMap = BTreeMap<QualifiedName, BTreeSet<QualifiedName>>;

impl PredictionFile {
    pub fn from_type_map(map: &TypeMap, source: &str) -> Self {
        PredictionFile {
            predictions: map
                .iter()
                .filter(|(_, types)| !types.is_empty())
                .map(|(function, types)| Prediction {
                    function: function.to_string(),
                    types: types.iter().map(|t| t.to_string()).collect(),
                    source: source.to_owned(),
                    scores: None,
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    /// Parses every name, naming the offending record on failure. Repeated
    /// functions have their type sets unioned.
    pub fn to_type_map(&self, path: &Path) -> Result<TypeMap> {
        let mut map = TypeMap::new();
        for (i, p) in self.predictions.iter().enumerate() {
            let label = format!("predictions[{i}]");
            let function = QualifiedName::parse(&p.function).map_err(|e| Error::schema(path, &label, e))?;
            let entry = map.entry(function).or_default();
            for t in &p.types {
                entry.insert(QualifiedName::parse(t).map_err(|e| Error::schema(path, &label, e))?);
            }
        }
        Ok(map)
    }
}
