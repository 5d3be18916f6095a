//! Duck typing of API return values.
//!
//! For each return path with observed methods `F`, every catalog class `C`
//! defining some of them is scored by `|F ∩ D(C)|`. The candidates are then
//! cleansed: keep the best score, collapse subtypes into supertypes present
//! in the set, keep the majority family under a common supertype, drop
//! module names, and normalize through the alias map.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::UsageMap;
use crate::catalog::{Catalog, TypeCategory};
use crate::names::QualifiedName;
use crate::predictions::{Prediction, PredictionFile, TypeMap, SOURCE_ANALYSIS};

pub const DEFAULT_MAJORITY_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateScore {
    pub class_name: QualifiedName,
    pub shared_count: usize,
    pub class_method_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisPrediction {
    pub api_path: String,
    /// `api_path` with the final `()` stripped, alias-normalized when it
    /// names a known class or function.
    pub function: String,
    pub candidates: Vec<CandidateScore>,
    pub final_types: BTreeSet<QualifiedName>,
}

/// Classes sharing at least one method with `observed`, best first: shared
/// count descending, then fewer defined methods, then name.
pub fn score_candidates<'a>(observed: impl IntoIterator<Item = &'a str>, catalog: &Catalog) -> Vec<CandidateScore> {
    let mut shared: BTreeMap<&QualifiedName, usize> = BTreeMap::new();
    let observed: BTreeSet<&str> = observed.into_iter().collect();
    for m in &observed {
        for class in catalog.classes_with_method(m).into_iter().flatten() {
            *shared.entry(class).or_insert(0) += 1;
        }
    }
    let mut out: Vec<CandidateScore> = shared
        .into_iter()
        .map(|(name, count)| CandidateScore {
            class_name: name.clone(),
            shared_count: count,
            class_method_count: catalog.class(name).map_or(0, |c| c.methods.len()),
        })
        .collect();
    out.sort_by(|a, b| {
        b.shared_count
            .cmp(&a.shared_count)
            .then(a.class_method_count.cmp(&b.class_method_count))
            .then_with(|| a.class_name.cmp(&b.class_name))
    });
    out
}

/// Step 1: only the best-scoring candidates.
pub fn keep_max_score(candidates: &[CandidateScore]) -> BTreeSet<QualifiedName> {
    let max = candidates.iter().map(|c| c.shared_count).max().unwrap_or(0);
    candidates
        .iter()
        .filter(|c| c.shared_count == max)
        .map(|c| c.class_name.clone())
        .collect()
}

/// Step 2: drop every type whose supertype is also in the set. Classes in a
/// base cycle are subtypes of each other; of those the smallest name stays.
pub fn collapse_subtypes(set: &BTreeSet<QualifiedName>, catalog: &Catalog) -> BTreeSet<QualifiedName> {
    set.iter()
        .filter(|c| {
            !set.iter().any(|d| {
                d != *c && catalog.is_subtype(c, d) && !(catalog.is_subtype(d, c) && *c < d)
            })
        })
        .cloned()
        .collect()
}

/// Step 3: when more than `threshold` of the set shares a supertype `S`
/// outside the set, keep only the subtypes of `S`. Among qualifying
/// supertypes the one covering the most members wins, then the most
/// specific, then the smallest name.
pub fn majority_supertype(set: &BTreeSet<QualifiedName>, catalog: &Catalog, threshold: f64) -> BTreeSet<QualifiedName> {
    if set.len() < 2 {
        return set.clone();
    }
    let supers: BTreeSet<QualifiedName> = set
        .iter()
        .flat_map(|c| catalog.supertypes(c))
        .filter(|s| !set.contains(s))
        .collect();
    let mut best: Option<(usize, &QualifiedName)> = None;
    for s in &supers {
        let covered = set.iter().filter(|c| catalog.is_subtype(c, s)).count();
        if (covered as f64) / (set.len() as f64) <= threshold {
            continue;
        }
        best = match best {
            Some((n, b)) if n > covered || (n == covered && !catalog.is_subtype(s, b)) => Some((n, b)),
            _ => Some((covered, s)),
        };
    }
    match best {
        Some((_, s)) => set.iter().filter(|c| catalog.is_subtype(c, s)).cloned().collect(),
        None => set.clone(),
    }
}

/// Steps 1 to 5 in order.
pub fn cleanse_analysis_types(candidates: &[CandidateScore], catalog: &Catalog, threshold: f64) -> BTreeSet<QualifiedName> {
    let set = keep_max_score(candidates);
    let set = collapse_subtypes(&set, catalog);
    let set = majority_supertype(&set, catalog, threshold);
    set.into_iter()
        .filter(|c| catalog.classify(c.as_str()) != TypeCategory::Module)
        .filter_map(|c| catalog.normalize(&c))
        .collect()
}

/// The function a return path denotes: `pandas.read_csv()` → `pandas.read_csv`.
pub fn function_of_path(api_path: &str, catalog: &Catalog) -> String {
    let stripped = api_path.strip_suffix("()").unwrap_or(api_path);
    match QualifiedName::parse(stripped) {
        Ok(q) => catalog.normalize_or_keep(&q).to_string(),
        Err(_) => stripped.to_owned(),
    }
}

/// One prediction per return path whose cleansed set is non-empty, ordered
/// by path.
pub fn duck_type_all(usages: &UsageMap, catalog: &Catalog, threshold: f64) -> Vec<AnalysisPrediction> {
    let mut out = Vec::new();
    for (path, methods) in &usages.records {
        if !path.ends_with("()") || methods.is_empty() {
            continue;
        }
        let candidates = score_candidates(methods.keys().map(String::as_str), catalog);
        let final_types = cleanse_analysis_types(&candidates, catalog, threshold);
        if final_types.is_empty() {
            continue;
        }
        out.push(AnalysisPrediction {
            api_path: path.clone(),
            function: function_of_path(path, catalog),
            candidates,
            final_types,
        });
    }
    out
}

/// Output document; predictions whose function is not a valid qualified
/// name (relative imports) are left out. Two paths denoting the same
/// function have their types unioned.
pub fn to_prediction_file(predictions: &[AnalysisPrediction]) -> PredictionFile {
    let mut merged: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for p in predictions {
        if QualifiedName::parse(&p.function).is_err() {
            log::debug!("skipping prediction for {}: not a qualified name", p.api_path);
            continue;
        }
        let scores = merged.entry(p.function.clone()).or_default();
        for t in &p.final_types {
            let shared = p
                .candidates
                .iter()
                .filter(|c| &c.class_name == t || c.class_name.short_name() == t.short_name())
                .map(|c| c.shared_count)
                .max()
                .unwrap_or(0);
            let e = scores.entry(t.to_string()).or_insert(0);
            *e = (*e).max(shared);
        }
    }
    PredictionFile {
        predictions: merged
            .into_iter()
            .map(|(function, scores)| Prediction {
                function,
                types: scores.keys().cloned().collect(),
                source: SOURCE_ANALYSIS.to_owned(),
                scores: Some(scores),
            })
            .collect(),
    }
}

pub fn to_type_map(predictions: &[AnalysisPrediction]) -> TypeMap {
    let mut map = TypeMap::new();
    for p in predictions {
        if let Ok(f) = QualifiedName::parse(&p.function) {
            map.entry(f).or_default().extend(p.final_types.iter().cloned());
        }
    }
    map
}
