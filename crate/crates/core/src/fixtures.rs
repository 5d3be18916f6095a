//! The running example: a two-script corpus reading a CSV with pandas, the
//! `read_csv` docstring, and a small catalog with `DataFrame` plus decoys.
//! Used by tests, benchmarks and the README walkthrough.

use std::path::{Path, PathBuf};

use crate::catalog::Catalog;
use crate::catalog::schema::{AliasesFile, CatalogFile};

pub const SCRIPT_1: &str = include_str!("../fixtures/running_example/corpus/script1.py");
pub const SCRIPT_2: &str = include_str!("../fixtures/running_example/corpus/script2.py");
pub const CATALOG_JSON: &str = include_str!("../fixtures/running_example/catalog.json");
pub const ALIASES_JSON: &str = include_str!("../fixtures/running_example/aliases.json");

/// Directory holding `catalog.json`, `aliases.json`, `pipeline.toml` and
/// `corpus/` for the running example.
pub fn running_example_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/running_example")
}

pub fn running_example_catalog() -> Catalog {
    let catalog: CatalogFile = serde_json::from_str(CATALOG_JSON).expect("fixture catalog parses");
    let aliases: AliasesFile = serde_json::from_str(ALIASES_JSON).expect("fixture aliases parse");
    Catalog::from_documents(&catalog, Path::new("catalog.json"), &aliases, Path::new("aliases.json"))
        .expect("fixture catalog is valid")
}

/// The raw `pandas.read_csv` docstring from the fixture catalog.
pub fn read_csv_docstring() -> String {
    let catalog: CatalogFile = serde_json::from_str(CATALOG_JSON).expect("fixture catalog parses");
    catalog
        .functions
        .into_iter()
        .find(|f| f.name == "pandas.read_csv")
        .map(|f| f.docstring)
        .unwrap_or_default()
}
