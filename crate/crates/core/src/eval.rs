//! Scoring a prediction file against observed (gold) return types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, TypeCategory};
use crate::error::{Error, Result};
use crate::io;
use crate::names::QualifiedName;
use crate::predictions::TypeMap;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub function: String,
    pub types: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFile {
    pub gold: Vec<GoldRecord>,
}

/// Reads a gold file, normalizing every name through the catalog.
pub fn load_gold(path: &Path, catalog: &Catalog) -> Result<TypeMap> {
    let file: GoldFile = io::read_json(path)?;
    let mut map = TypeMap::new();
    for (i, r) in file.gold.iter().enumerate() {
        let label = format!("gold[{i}]");
        if r.types.is_empty() {
            return Err(Error::schema(path, &label, "empty type set"));
        }
        let function = QualifiedName::parse(&r.function).map_err(|e| Error::schema(path, &label, e))?;
        let entry = map.entry(catalog.normalize_or_keep(&function)).or_default();
        for t in &r.types {
            let t = QualifiedName::parse(t).map_err(|e| Error::schema(path, &label, e))?;
            entry.insert(catalog.normalize_or_keep(&t));
        }
    }
    Ok(map)
}

/// Maps function and type names to canonical form.
pub fn normalize_map(map: &TypeMap, catalog: &Catalog) -> TypeMap {
    let mut out = TypeMap::new();
    for (f, types) in map {
        out.entry(catalog.normalize_or_keep(f))
            .or_default()
            .extend(types.iter().map(|t| catalog.normalize_or_keep(t)));
    }
    out
}

/// Micro-averaged, type-level scores. Ratios are `None` when their
/// denominator is zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Recall with gold functions lacking any prediction counted as misses.
    pub recall_all: Option<f64>,
    pub matched_methods: usize,
    pub predicted_types: usize,
    pub correct_predicted: usize,
    pub gold_types: usize,
    pub recovered_gold: usize,
    pub gold_types_all: usize,
}

fn ratio(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

pub fn compute_metrics(pred: &TypeMap, gold: &TypeMap, catalog: &Catalog) -> Metrics {
    let pred = normalize_map(pred, catalog);
    let gold = normalize_map(gold, catalog);
    let mut m = Metrics::default();
    for (f, g) in &gold {
        m.gold_types_all += g.len();
        let Some(p) = pred.get(f).filter(|p| !p.is_empty()) else {
            continue;
        };
        m.matched_methods += 1;
        m.predicted_types += p.len();
        m.gold_types += g.len();
        let hits = p.intersection(g).count();
        m.correct_predicted += hits;
        m.recovered_gold += hits;
    }
    m.precision = ratio(m.correct_predicted, m.predicted_types);
    m.recall = ratio(m.recovered_gold, m.gold_types);
    m.recall_all = ratio(m.recovered_gold, m.gold_types_all);
    m.f1 = match (m.precision, m.recall) {
        (Some(p), Some(r)) if p + r == 0.0 => Some(0.0),
        (Some(p), Some(r)) => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    m
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    /// (gold category, predicted category) → count. Exact class matches are
    /// held in `class_class_correct` instead.
    pub cells: BTreeMap<(TypeCategory, TypeCategory), usize>,
    pub class_class_correct: usize,
    pub pairs: usize,
}

impl ConfusionMatrix {
    pub fn get(&self, gold: TypeCategory, predicted: TypeCategory) -> usize {
        self.cells.get(&(gold, predicted)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.cells.values().sum::<usize>() + self.class_class_correct
    }
}

/// Pairs each predicted type with the identical gold type when present,
/// otherwise with the first gold type by name, and tallies the categories.
pub fn confusion(pred: &TypeMap, gold: &TypeMap, catalog: &Catalog) -> ConfusionMatrix {
    let pred = normalize_map(pred, catalog);
    let gold = normalize_map(gold, catalog);
    let mut m = ConfusionMatrix::default();
    for (f, g) in &gold {
        let (Some(p), Some(first)) = (pred.get(f), g.first()) else {
            continue;
        };
        for t in p {
            let partner = if g.contains(t) { t } else { first };
            let gc = catalog.classify(partner.as_str());
            let pc = catalog.classify(t.as_str());
            m.pairs += 1;
            if gc == TypeCategory::UserClass && pc == TypeCategory::UserClass && partner == t {
                m.class_class_correct += 1;
            } else {
                *m.cells.entry((gc, pc)).or_insert(0) += 1;
            }
        }
    }
    m
}

#[derive(Serialize)]
struct CellRecord {
    gold: TypeCategory,
    predicted: TypeCategory,
    count: usize,
}

#[derive(Serialize)]
struct ConfusionRecord {
    cells: Vec<CellRecord>,
    class_class_correct: usize,
    pairs: usize,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    metrics: &'a Metrics,
    confusion: ConfusionRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(pred: &TypeMap, gold: &TypeMap, catalog: &Catalog) -> EvalReport {
    EvalReport {
        metrics: compute_metrics(pred, gold, catalog),
        confusion: confusion(pred, gold, catalog),
    }
}

fn fmt_ratio(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.3}"))
}

impl EvalReport {
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        io::to_json_bytes(&ReportFile {
            metrics: &self.metrics,
            confusion: ConfusionRecord {
                cells: self
                    .confusion
                    .cells
                    .iter()
                    .map(|(&(gold, predicted), &count)| CellRecord { gold, predicted, count })
                    .collect(),
                class_class_correct: self.confusion.class_class_correct,
                pairs: self.confusion.pairs,
            },
        })
    }

    pub fn render(&self) -> String {
        let m = &self.metrics;
        let mut out = String::new();
        let _ = writeln!(out, "precision {}  recall {}  f1 {}", fmt_ratio(m.precision), fmt_ratio(m.recall), fmt_ratio(m.f1));
        let _ = writeln!(out, "recall_all {}  matched_methods {}", fmt_ratio(m.recall_all), m.matched_methods);
        let used: BTreeSet<TypeCategory> = self.confusion.cells.keys().flat_map(|&(a, b)| [a, b]).collect();
        let cols: Vec<TypeCategory> = TypeCategory::ALL
            .into_iter()
            .filter(|c| !matches!(c, TypeCategory::Module | TypeCategory::Unknown) || used.contains(c))
            .collect();
        let _ = write!(out, "{:<10}", "gold\\pred");
        for c in &cols {
            let _ = write!(out, " {:>10}", c.label());
        }
        out.push('\n');
        for g in &cols {
            let _ = write!(out, "{:<10}", g.label());
            for p in &cols {
                let n = self.confusion.get(*g, *p);
                let cell = if *g == TypeCategory::UserClass && *p == TypeCategory::UserClass {
                    format!("{n} ({})", self.confusion.class_class_correct)
                } else {
                    n.to_string()
                };
                let _ = write!(out, " {cell:>10}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, &self.to_json_bytes()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> QualifiedName {
        QualifiedName::parse(s).unwrap()
    }

    fn tm(entries: &[(&str, &[&str])]) -> TypeMap {
        entries.iter().map(|(f, ts)| (q(f), ts.iter().map(|t| q(t)).collect())).collect()
    }

    fn catalog() -> Catalog {
        Catalog::builder()
            .class("lib.A", &["a"], &[])
            .class("lib.B", &["b"], &[])
            .class("lib.C", &["c"], &[])
            .class("pandas.core.frame.DataFrame", &["dropna"], &[])
            .class("numpy.bool_", &["any"], &[])
            .alias("pandas.DataFrame", "pandas.core.frame.DataFrame")
            .build()
            .unwrap()
    }

    #[test]
    fn half_right() {
        let m = compute_metrics(&tm(&[("m.f", &["lib.A", "lib.B"])]), &tm(&[("m.f", &["lib.A", "lib.C"])]), &catalog());
        assert_eq!((m.precision, m.recall, m.f1), (Some(0.5), Some(0.5), Some(0.5)));
        assert_eq!(m.matched_methods, 1);
    }

    #[test]
    fn perfect() {
        let g = tm(&[("m.f", &["lib.A"]), ("m.g", &["int", "lib.B"])]);
        let m = compute_metrics(&g, &g, &catalog());
        assert_eq!((m.precision, m.recall, m.f1, m.recall_all), (Some(1.0), Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn alias_variant_counts() {
        let c = catalog();
        let m = compute_metrics(&tm(&[("m.f", &["pandas.DataFrame"])]), &tm(&[("m.f", &["pandas.core.frame.DataFrame"])]), &c);
        assert_eq!(m.precision, Some(1.0));
        let cm = confusion(&tm(&[("m.f", &["pandas.DataFrame"])]), &tm(&[("m.f", &["pandas.core.frame.DataFrame"])]), &c);
        assert_eq!(cm.class_class_correct, 1);
    }

    #[test]
    fn no_shared_functions_is_undefined() {
        let m = compute_metrics(&tm(&[("m.f", &["lib.A"])]), &tm(&[("m.g", &["lib.A"])]), &catalog());
        assert_eq!((m.precision, m.recall, m.f1, m.matched_methods), (None, None, None, 0));
        assert_eq!(m.recall_all, Some(0.0));
        let json = String::from_utf8(evaluate(&TypeMap::new(), &TypeMap::new(), &catalog()).to_json_bytes().unwrap()).unwrap();
        assert!(json.contains("\"precision\": null"));
    }

    #[test]
    fn all_wrong_f1_zero() {
        let m = compute_metrics(&tm(&[("m.f", &["lib.A"])]), &tm(&[("m.f", &["lib.B"])]), &catalog());
        assert_eq!(m.f1, Some(0.0));
    }

    #[test]
    fn recall_all_counts_unpredicted() {
        let m = compute_metrics(&tm(&[("m.f", &["lib.A"])]), &tm(&[("m.f", &["lib.A"]), ("m.g", &["lib.B"])]), &catalog());
        assert_eq!((m.recall, m.recall_all), (Some(1.0), Some(0.5)));
    }

    #[test]
    fn confusion_examples() {
        let c = catalog();
        let cm = confusion(&tm(&[("m.f", &["Any"])]), &tm(&[("m.f", &["lib.A"])]), &c);
        assert_eq!(cm.get(TypeCategory::UserClass, TypeCategory::Any), 1);
        let cm = confusion(&tm(&[("m.f", &["bool"])]), &tm(&[("m.f", &["numpy.bool_"])]), &c);
        assert_eq!(cm.get(TypeCategory::UserClass, TypeCategory::Primitive), 1);
        let cm = confusion(&tm(&[("m.f", &["lib.A"])]), &tm(&[("m.f", &["lib.A"])]), &c);
        assert_eq!((cm.class_class_correct, cm.get(TypeCategory::UserClass, TypeCategory::UserClass)), (1, 0));
        let cm = confusion(&tm(&[("m.f", &["lib.B"])]), &tm(&[("m.f", &["lib.A"])]), &c);
        assert_eq!((cm.class_class_correct, cm.get(TypeCategory::UserClass, TypeCategory::UserClass)), (0, 1));
    }

    #[test]
    fn pairing_prefers_exact_then_first() {
        // pred lib.C against gold {lib.B, int}: first gold by name is "int"
        let cm = confusion(&tm(&[("m.f", &["lib.C", "lib.B"])]), &tm(&[("m.f", &["lib.B", "int"])]), &catalog());
        assert_eq!(cm.class_class_correct, 1);
        assert_eq!(cm.get(TypeCategory::Primitive, TypeCategory::UserClass), 1);
    }

    #[test]
    fn render_has_parenthesized_class_cell() {
        let r = evaluate(&tm(&[("m.f", &["lib.A"])]), &tm(&[("m.f", &["lib.A"])]), &catalog());
        assert!(r.render().contains("0 (1)"));
    }

    const NAMES: [&str; 10] = ["lib.A", "lib.B", "lib.C", "pandas.DataFrame", "pandas.core.frame.DataFrame", "int", "dict", "None", "Any", "numpy.bool_"];

    fn arb_map() -> impl Strategy<Value = TypeMap> {
        let f = prop::sample::select(vec!["m.f", "m.g", "m.h"]);
        let t = prop::sample::select(NAMES.to_vec());
        prop::collection::btree_map(f.prop_map(q), prop::collection::btree_set(t.prop_map(q), 1..4), 0..4)
    }

    proptest! {
        #[test]
        fn confusion_reconciles(pred in arb_map(), gold in arb_map()) {
            let c = catalog();
            let cm = confusion(&pred, &gold, &c);
            // oracle pair count: one pair per predicted (normalized) type of a shared function
            let np = normalize_map(&pred, &c);
            let ng = normalize_map(&gold, &c);
            let expected: usize = np.iter().filter(|(f, _)| ng.contains_key(*f)).map(|(_, ts)| ts.len()).sum();
            prop_assert_eq!(cm.total(), expected);
            prop_assert_eq!(cm.pairs, expected);
            let m = compute_metrics(&pred, &gold, &c);
            for x in [m.precision, m.recall, m.f1, m.recall_all].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            let self_m = compute_metrics(&pred, &pred, &c);
            if self_m.matched_methods > 0 {
                prop_assert_eq!(self_m.f1, Some(1.0));
            }
        }

        #[test]
        fn alias_renaming_invariant(pred in arb_map(), gold in arb_map()) {
            let c = catalog();
            let rename = |m: &TypeMap| -> TypeMap {
                m.iter().map(|(f, ts)| (f.clone(), ts.iter().map(|t| {
                    if t.as_str() == "pandas.core.frame.DataFrame" { q("pandas.DataFrame") } else { t.clone() }
                }).collect())).collect()
            };
            prop_assert_eq!(compute_metrics(&pred, &gold, &c), compute_metrics(&rename(&pred), &gold, &c));
            prop_assert_eq!(confusion(&pred, &gold, &c), confusion(&pred, &rename(&gold), &c));
        }
    }
}
