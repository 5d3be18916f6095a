//! The labeled dataset: docstring and analysis predictions merged into one
//! record per function, plus summary statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, TypeCategory};
use crate::error::{Error, Result};
use crate::io;
use crate::names::QualifiedName;
use crate::predictions::{PredictionFile, TypeMap, SOURCE_ANALYSIS, SOURCE_DOCSTRING};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Docstring,
    Analysis,
    Both,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Docstring => "docstring",
            Source::Analysis => "analysis",
            Source::Both => "both",
        }
    }

    fn parse(s: &str) -> Option<Source> {
        match s {
            SOURCE_DOCSTRING => Some(Source::Docstring),
            SOURCE_ANALYSIS => Some(Source::Analysis),
            "both" => Some(Source::Both),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub function: QualifiedName,
    pub types: BTreeSet<QualifiedName>,
    pub source: Source,
    /// Set only for `Both`: whether the two sources share a type.
    pub agreement: Option<bool>,
}

/// One record per function predicted by either source, sorted by function.
/// Functions in both get the union of types and an agreement flag.
pub fn merge_sources(doc: &TypeMap, analysis: &TypeMap) -> Vec<LabeledRecord> {
    let functions: BTreeSet<&QualifiedName> = doc.keys().chain(analysis.keys()).collect();
    let mut out = Vec::new();
    for f in functions {
        let d = doc.get(f).filter(|s| !s.is_empty());
        let a = analysis.get(f).filter(|s| !s.is_empty());
        let record = match (d, a) {
            (Some(d), Some(a)) => LabeledRecord {
                function: f.clone(),
                types: d.union(a).cloned().collect(),
                source: Source::Both,
                agreement: Some(d.intersection(a).next().is_some()),
            },
            (Some(d), None) => LabeledRecord {
                function: f.clone(),
                types: d.clone(),
                source: Source::Docstring,
                agreement: None,
            },
            (None, Some(a)) => LabeledRecord {
                function: f.clone(),
                types: a.clone(),
                source: Source::Analysis,
                agreement: None,
            },
            (None, None) => continue,
        };
        out.push(record);
    }
    out
}

pub fn to_jsonl(records: &[LabeledRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Internal(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, records: &[LabeledRecord]) -> Result<()> {
    io::write_atomic(path, &to_jsonl(records)?)
}

/// Reads either a line-delimited dataset or a predictions document (whose
/// records keep the source they carry).
pub fn load_records(path: &Path) -> Result<Vec<LabeledRecord>> {
    let text = io::read_text(path)?;
    if let Ok(file) = serde_json::from_str::<PredictionFile>(&text) {
        let mut out = Vec::new();
        for (i, p) in file.predictions.iter().enumerate() {
            let label = format!("predictions[{i}]");
            let source = Source::parse(&p.source)
                .ok_or_else(|| Error::schema(path, &label, format!("unknown source {:?}", p.source)))?;
            let types = p
                .types
                .iter()
                .map(|t| QualifiedName::parse(t).map_err(|e| Error::schema(path, &label, e)))
                .collect::<Result<BTreeSet<_>>>()?;
            out.push(LabeledRecord {
                function: QualifiedName::parse(&p.function).map_err(|e| Error::schema(path, &label, e))?,
                types,
                source,
                agreement: None,
            });
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LabeledRecord =
            serde_json::from_str(line).map_err(|e| Error::schema(path, format!("line {}", i + 1), e))?;
        if record.types.is_empty() {
            return Err(Error::schema(path, format!("line {}", i + 1), "empty type set"));
        }
        out.push(record);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DatasetStats {
    pub total_records: usize,
    /// Number of (function, type) pairs.
    pub total_pairs: usize,
    pub records_per_source: BTreeMap<Source, usize>,
    pub pairs_per_source: BTreeMap<Source, usize>,
    pub mean_types_per_method: BTreeMap<Source, f64>,
    pub overlap_count: usize,
    pub agreement_count: usize,
    pub category_histogram: BTreeMap<TypeCategory, usize>,
}

pub fn compute_stats(records: &[LabeledRecord], catalog: &Catalog) -> DatasetStats {
    let mut s = DatasetStats {
        total_records: records.len(),
        ..Default::default()
    };
    for r in records {
        *s.records_per_source.entry(r.source).or_insert(0) += 1;
        *s.pairs_per_source.entry(r.source).or_insert(0) += r.types.len();
        s.total_pairs += r.types.len();
        if r.source == Source::Both {
            s.overlap_count += 1;
            if r.agreement == Some(true) {
                s.agreement_count += 1;
            }
        }
        for t in &r.types {
            *s.category_histogram.entry(catalog.classify(t.as_str())).or_insert(0) += 1;
        }
    }
    for (source, n) in &s.records_per_source {
        let pairs = s.pairs_per_source[source];
        s.mean_types_per_method.insert(*source, pairs as f64 / *n as f64);
    }
    s
}

impl DatasetStats {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>10}", "source", "methods", "types", "mean");
        for source in [Source::Docstring, Source::Analysis, Source::Both] {
            let n = self.records_per_source.get(&source).copied().unwrap_or(0);
            let p = self.pairs_per_source.get(&source).copied().unwrap_or(0);
            let m = self.mean_types_per_method.get(&source).copied().unwrap_or(0.0);
            let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>10.2}", source.as_str(), n, p, m);
        }
        let _ = writeln!(out, "{:<12} {:>8} {:>8}", "total", self.total_records, self.total_pairs);
        let _ = writeln!(out, "overlap {} agreement {}", self.overlap_count, self.agreement_count);
        for (cat, n) in &self.category_histogram {
            let _ = writeln!(out, "{:<12} {:>8}", cat.label(), n);
        }
        out
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

    #[test]
    fn identical_sets_agree() {
        let r = merge_sources(&tm(&[("m.f", &["m.DataFrame"])]), &tm(&[("m.f", &["m.DataFrame"])]));
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].source, r[0].agreement), (Source::Both, Some(true)));
    }

    #[test]
    fn bool_vs_numpy_bool_disagree() {
        let r = merge_sources(&tm(&[("np.f", &["bool"])]), &tm(&[("np.f", &["numpy.bool_"])]));
        assert_eq!(r[0].agreement, Some(false));
        assert_eq!(r[0].types, [q("bool"), q("numpy.bool_")].into());
    }

    #[test]
    fn disjoint_pass_through() {
        let r = merge_sources(&tm(&[("a.f", &["int"])]), &tm(&[("b.g", &["str"])]));
        assert_eq!(r.iter().map(|r| r.source).collect::<Vec<_>>(), [Source::Docstring, Source::Analysis]);
        let stats = compute_stats(&r, &Catalog::default());
        assert_eq!(stats.overlap_count, 0);
    }

    #[test]
    fn mean_types() {
        let doc = tm(&[("a.f", &["int"]), ("a.g", &["int", "str"]), ("a.h", &["bool"]), ("a.i", &["list"])]);
        let r = merge_sources(&doc, &TypeMap::new());
        let s = compute_stats(&r, &Catalog::default());
        // 5 types over 4 methods
        assert_eq!(s.mean_types_per_method[&Source::Docstring], 5.0 / 4.0);
        assert_eq!(s.total_pairs, 5);
    }

    #[test]
    fn empty_stats() {
        let s = compute_stats(&[], &Catalog::default());
        assert_eq!(s, DatasetStats::default());
    }

    #[test]
    fn category_histogram() {
        let catalog = Catalog::builder().class("lib.A", &["m"], &[]).class("lib.B", &["m"], &[]).class("lib.C", &["m"], &[]).build().unwrap();
        let r = merge_sources(&tm(&[("x.f", &["lib.A", "lib.B"]), ("x.g", &["lib.C", "dict"])]), &TypeMap::new());
        let s = compute_stats(&r, &catalog);
        assert_eq!(s.category_histogram, [(TypeCategory::UserClass, 3), (TypeCategory::Builtin, 1)].into());
    }

    #[test]
    fn jsonl_round_trip() {
        let r = merge_sources(&tm(&[("a.f", &["int"])]), &tm(&[("a.f", &["str"]), ("b.g", &["lib.X"])]));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        write_jsonl(&p, &r).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains(r#""agreement":null"#));
        assert_eq!(load_records(&p).unwrap(), r);
    }

    fn arb_map() -> impl Strategy<Value = TypeMap> {
        let f = prop::sample::select(vec!["a.f", "a.g", "b.h", "c.i"]);
        let t = prop::sample::select(vec!["int", "str", "lib.A", "lib.B"]);
        prop::collection::btree_map(f.prop_map(q), prop::collection::btree_set(t.prop_map(q), 1..3), 0..4)
    }

    proptest! {
        #[test]
        fn merge_is_symmetric_up_to_labels(d in arb_map(), a in arb_map()) {
            let flip = |s: Source| match s {
                Source::Docstring => Source::Analysis,
                Source::Analysis => Source::Docstring,
                Source::Both => Source::Both,
            };
            let ab = merge_sources(&d, &a);
            let ba: Vec<LabeledRecord> = merge_sources(&a, &d)
                .into_iter()
                .map(|r| LabeledRecord { source: flip(r.source), ..r })
                .collect();
            prop_assert_eq!(&ab, &ba);
            let stats = compute_stats(&ab, &Catalog::default());
            prop_assert!(stats.agreement_count <= stats.overlap_count);
            prop_assert_eq!(stats.category_histogram.values().sum::<usize>(), stats.total_pairs);
        }
    }
}
