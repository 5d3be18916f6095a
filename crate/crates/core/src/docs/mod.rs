//! Return types mined from library docstrings.
//!
//! The returns section of every documented function goes into an inverted
//! index; each catalog class is then searched for by short name, and every
//! function mentioning it gains the class as a candidate. Candidates are
//! cleansed by alias resolution, validity, same-library preference and
//! builtin precedence.

mod index;
mod returns;

use std::collections::{BTreeMap, BTreeSet};

pub use index::{build_index, load_index, save_index, tokenize, DocIndex, FunctionDocRecord, INDEX_FORMAT};
pub use returns::parse_returns_section;

use crate::catalog::{Catalog, TypeCategory};
use crate::names::QualifiedName;
use crate::predictions::TypeMap;

/// Raw candidate sets for every indexed function (possibly empty).
///
/// Every canonical class and every alias that resolves to a class is
/// searched for by its short name; the emitted candidate is the searched
/// name, unnormalized. Vocabulary words (`int`, `list`, `None`, ...) found
/// in the returns text add the bare word.
pub fn infer_doc_types(index: &DocIndex, catalog: &Catalog) -> TypeMap {
    let mut raw: TypeMap = index.records().map(|r| (r.function.clone(), BTreeSet::new())).collect();
    let class_names = catalog
        .classes()
        .map(|c| &c.name)
        .chain(catalog.class_aliases().map(|(alias, _)| alias));
    for name in class_names {
        for function in index.search(name.short_name()) {
            if let Some(set) = raw.get_mut(function) {
                set.insert(name.clone());
            }
        }
    }
    for word in &catalog.vocabulary().doc_words {
        let Ok(word_name) = QualifiedName::parse(word) else { continue };
        for function in index.search(word) {
            if let Some(set) = raw.get_mut(function) {
                set.insert(word_name.clone());
            }
        }
    }
    raw
}

/// Cleanses one function's candidates. Steps, in order:
///
/// 1. map every candidate to its canonical name;
/// 2. drop candidates that do not resolve;
/// 3. if some candidate lives in the function's own library, drop
///    candidates from other libraries that share a short name with it;
/// 4. if a primitive or builtin matched, drop user classes sharing its
///    short name (`somelib.Dict` loses to `dict`).
pub fn cleanse_candidates(
    function: &QualifiedName,
    candidates: &BTreeSet<QualifiedName>,
    catalog: &Catalog,
) -> BTreeSet<QualifiedName> {
    let mut set: BTreeSet<QualifiedName> = candidates.iter().filter_map(|c| catalog.normalize(c)).collect();

    let is_word = |c: &QualifiedName| catalog.vocabulary().canonical_word(c.as_str()).is_some();
    let library = function.library();
    let own_library_shorts: BTreeSet<String> = set
        .iter()
        .filter(|c| !is_word(c) && c.library() == library)
        .map(|c| c.short_name().to_lowercase())
        .collect();
    if !own_library_shorts.is_empty() {
        set.retain(|c| {
            is_word(c) || c.library() == library || !own_library_shorts.contains(&c.short_name().to_lowercase())
        });
    }

    let word_shorts: BTreeSet<String> = set
        .iter()
        .filter(|c| catalog.classify(c.as_str()).is_primitive_or_builtin())
        .map(|c| c.short_name().to_lowercase())
        .collect();
    if !word_shorts.is_empty() {
        set.retain(|c| {
            catalog.classify(c.as_str()) != TypeCategory::UserClass
                || !word_shorts.contains(&c.short_name().to_lowercase())
        });
    }
    set
}

/// Applies [`cleanse_candidates`] to every function; functions left with no
/// candidates are removed.
pub fn cleanse_doc_types(raw: &TypeMap, catalog: &Catalog) -> TypeMap {
    raw.iter()
        .filter_map(|(function, candidates)| {
            let set = cleanse_candidates(function, candidates, catalog);
            (!set.is_empty()).then(|| (function.clone(), set))
        })
        .collect()
}

/// Index, search and cleanse in one call.
pub fn docstring_types(catalog: &Catalog) -> TypeMap {
    let index = build_index(catalog);
    cleanse_doc_types(&infer_doc_types(&index, catalog), catalog)
}

/// Number of functions in `map` per type; used in logging summaries.
pub fn type_frequencies(map: &TypeMap) -> BTreeMap<QualifiedName, usize> {
    let mut out = BTreeMap::new();
    for t in map.values().flatten() {
        *out.entry(t.clone()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(s: &str) -> QualifiedName {
        QualifiedName::parse(s).unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<QualifiedName> {
        items.iter().map(|s| q(s)).collect()
    }

    #[test]
    fn read_csv_raw_candidates() {
        let catalog = fixtures::running_example_catalog();
        let index = build_index(&catalog);
        let raw = infer_doc_types(&index, &catalog);
        let cands = &raw[&q("pandas.read_csv")];
        assert!(cands.contains(&q("pandas.core.frame.DataFrame")));
        assert!(cands.contains(&q("pandas.io.parsers.TextParser")));
        assert!(cands.contains(&q("otherlib.frames.DataFrame")));
        let clean = cleanse_doc_types(&raw, &catalog);
        assert_eq!(
            clean[&q("pandas.read_csv")],
            set(&["pandas.core.frame.DataFrame", "pandas.io.parsers.TextParser"])
        );
    }

    #[test]
    fn bool_word() {
        let catalog = Catalog::builder().function("lib.is_ok", ":returns: bool").build().unwrap();
        let raw = infer_doc_types(&build_index(&catalog), &catalog);
        assert_eq!(raw[&q("lib.is_ok")], set(&["bool"]));
    }

    #[test]
    fn empty_returns_text_has_no_candidates() {
        let catalog = Catalog::builder()
            .class("lib.Thing", &["m"], &[])
            .function("lib.f", "Does things with a Thing.")
            .build()
            .unwrap();
        let raw = infer_doc_types(&build_index(&catalog), &catalog);
        assert!(raw[&q("lib.f")].is_empty());
        assert!(cleanse_doc_types(&raw, &catalog).is_empty());
    }

    #[test]
    fn substring_never_matches() {
        let catalog = Catalog::builder()
            .class("lib.Frame", &["m"], &[])
            .function("lib.f", ":returns: DataFrame")
            .build()
            .unwrap();
        let raw = infer_doc_types(&build_index(&catalog), &catalog);
        assert!(raw[&q("lib.f")].is_empty());
    }

    #[test]
    fn same_library_preferred() {
        let catalog = Catalog::builder()
            .class("pandas.core.frame.DataFrame", &["m"], &[])
            .class("otherlib.DataFrame", &["m"], &[])
            .build()
            .unwrap();
        let out = cleanse_candidates(
            &q("pandas.read_csv"),
            &set(&["pandas.core.frame.DataFrame", "otherlib.DataFrame"]),
            &catalog,
        );
        assert_eq!(out, set(&["pandas.core.frame.DataFrame"]));
        // without a same-library candidate nothing is dropped
        let out = cleanse_candidates(&q("thirdlib.load"), &set(&["pandas.core.frame.DataFrame", "otherlib.DataFrame"]), &catalog);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn builtin_precedence() {
        let catalog = Catalog::builder().class("somelib.Dict", &["get"], &[]).build().unwrap();
        let out = cleanse_candidates(&q("somelib.make"), &set(&["somelib.Dict", "dict"]), &catalog);
        assert_eq!(out, set(&["dict"]));
    }

    #[test]
    fn aliases_resolve_and_invalid_drop() {
        let catalog = fixtures::running_example_catalog();
        let out = cleanse_candidates(&q("pandas.read_csv"), &set(&["pandas.DataFrame"]), &catalog);
        assert_eq!(out, set(&["pandas.core.frame.DataFrame"]));
        let out = cleanse_candidates(
            &q("pandas.read_csv"),
            &set(&["pandas.core.frame.DataFrameMissing", "nowhere.Thing"]),
            &catalog,
        );
        assert!(out.is_empty());
    }

    fn cleansing_catalog() -> Catalog {
        Catalog::builder()
            .class("alpha.core.Frame", &["m"], &[])
            .class("alpha.io.Reader", &["m"], &[])
            .class("beta.Frame", &["m"], &[])
            .class("beta.Dict", &["m"], &[])
            .class("gamma.List", &["m"], &[])
            .class("gamma.frame.Frame", &["m"], &[])
            .alias("alpha.Frame", "alpha.core.Frame")
            .alias("beta.frames.Frame", "beta.Frame")
            .invalid("alpha.Broken")
            .module("gamma")
            .build()
            .unwrap()
    }

    const POOL: [&str; 14] = [
        "alpha.core.Frame", "alpha.io.Reader", "beta.Frame", "beta.Dict", "gamma.List",
        "gamma.frame.Frame", "alpha.Frame", "beta.frames.Frame", "alpha.Broken", "nowhere.X",
        "dict", "list", "int", "None",
    ];
    const OWNERS: [&str; 4] = ["alpha.load", "beta.load", "gamma.load", "delta.load"];

    proptest::proptest! {
        #[test]
        fn cleansing_is_idempotent_and_canonical(
            picks in proptest::collection::vec((0..OWNERS.len(), proptest::collection::btree_set(0..POOL.len(), 0..8)), 0..6)
        ) {
            let catalog = cleansing_catalog();
            let raw: TypeMap = picks
                .iter()
                .map(|(o, idx)| (q(OWNERS[*o]), idx.iter().map(|&i| q(POOL[i])).collect()))
                .collect();
            let once = cleanse_doc_types(&raw, &catalog);
            let twice = cleanse_doc_types(&once, &catalog);
            proptest::prop_assert_eq!(&once, &twice);
            for t in once.values().flatten() {
                proptest::prop_assert_eq!(catalog.normalize(t), Some(t.clone()));
                proptest::prop_assert!(!catalog.aliases().is_invalid(t));
            }
        }
    }
}
