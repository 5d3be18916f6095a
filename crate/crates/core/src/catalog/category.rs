use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Evaluation axis a type name falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TypeCategory {
    Primitive,
    Builtin,
    UserClass,
    NoneType,
    Any,
    Module,
    Unknown,
}

impl TypeCategory {
    pub const ALL: [TypeCategory; 7] = [
        TypeCategory::Primitive,
        TypeCategory::NoneType,
        TypeCategory::Any,
        TypeCategory::Builtin,
        TypeCategory::UserClass,
        TypeCategory::Module,
        TypeCategory::Unknown,
    ];

    /// Column label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            TypeCategory::Primitive => "Primitive",
            TypeCategory::Builtin => "BuiltIn",
            TypeCategory::UserClass => "Class",
            TypeCategory::NoneType => "None",
            TypeCategory::Any => "Any",
            TypeCategory::Module => "Module",
            TypeCategory::Unknown => "Unknown",
        }
    }

    pub fn is_primitive_or_builtin(self) -> bool {
        matches!(self, TypeCategory::Primitive | TypeCategory::Builtin)
    }
}

impl fmt::Display for TypeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub const NONE_NAMES: [&str; 2] = ["None", "NoneType"];
pub const ANY_NAME: &str = "Any";

/// Fixed primitive and builtin vocabularies. Overridable from the pipeline
/// configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Vocabulary {
    pub primitives: BTreeSet<String>,
    pub builtins: BTreeSet<String>,
    /// Subset of the vocabulary (plus `None`) that docstring search picks
    /// up as bare words. Common English words like "set" or "object" are
    /// left out of the default.
    pub doc_words: BTreeSet<String>,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            primitives: set(&["int", "float", "bool", "str", "bytes", "complex"]),
            builtins: set(&[
                "list", "dict", "tuple", "set", "frozenset", "object", "type", "bytearray", "slice", "range",
            ]),
            doc_words: set(&[
                "int", "float", "bool", "str", "bytes", "complex", "None", "list", "dict", "tuple", "frozenset",
                "bytearray",
            ]),
        }
    }
}

impl Vocabulary {
    /// Category of a bare vocabulary word, if it is one.
    pub fn category_of(&self, name: &str) -> Option<TypeCategory> {
        if self.primitives.contains(name) {
            Some(TypeCategory::Primitive)
        } else if NONE_NAMES.contains(&name) {
            Some(TypeCategory::NoneType)
        } else if name == ANY_NAME {
            Some(TypeCategory::Any)
        } else if self.builtins.contains(name) {
            Some(TypeCategory::Builtin)
        } else {
            None
        }
    }

    /// Canonical spelling of a vocabulary name, accepting the forms the
    /// runtime and typing module report (`builtins.int`, `NoneType`,
    /// `typing.Any`).
    pub fn canonical_word(&self, name: &str) -> Option<String> {
        let bare = name
            .strip_prefix("builtins.")
            .or_else(|| name.strip_prefix("typing."))
            .unwrap_or(name);
        match self.category_of(bare)? {
            TypeCategory::NoneType => Some("None".to_owned()),
            _ => Some(bare.to_owned()),
        }
    }

    /// Doc-search word for a lowercased token, in canonical spelling.
    pub fn doc_word(&self, token: &str) -> Option<&str> {
        self.doc_words
            .iter()
            .find(|w| w.eq_ignore_ascii_case(token))
            .map(String::as_str)
    }
}
