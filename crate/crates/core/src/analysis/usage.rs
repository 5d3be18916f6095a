use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io;

/// Observed method calls for one provenance path: method → number of
/// distinct (call site, receiver turtle) observations.
pub type MethodCounts = BTreeMap<String, usize>;

/// Corpus-wide map from rendered provenance path to the methods called on
/// values of that path (the `F` sets).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UsageMap {
    pub records: BTreeMap<String, MethodCounts>,
    pub files_analyzed: usize,
    pub files_failed: usize,
    pub files_truncated: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub path: String,
    pub methods: MethodCounts,
}

#[derive(Serialize, Deserialize)]
struct UsagesFile {
    files_analyzed: usize,
    files_failed: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    files_truncated: usize,
    records: Vec<UsageRecord>,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// The part of `path` up to and including its first call: the API return
/// that a derived path such as `m.f().g().h()` started from.
pub fn root_return_path(path: &str) -> Option<&str> {
    path.find("()").map(|i| &path[..i + 2])
}

impl UsageMap {
    pub fn record(&mut self, path: &str, method: &str, count: usize) {
        *self
            .records
            .entry(path.to_owned())
            .or_default()
            .entry(method.to_owned())
            .or_insert(0) += count;
    }

    pub fn methods(&self, path: &str) -> Option<&MethodCounts> {
        self.records.get(path)
    }

    pub fn merge(mut self, other: &UsageMap) -> UsageMap {
        self.merge_in(other);
        self
    }

    /// Unions method sets, adds counts and file counters.
    pub fn merge_in(&mut self, other: &UsageMap) {
        for (path, methods) in &other.records {
            let entry = self.records.entry(path.clone()).or_default();
            for (m, c) in methods {
                *entry.entry(m.clone()).or_insert(0) += c;
            }
        }
        self.files_analyzed += other.files_analyzed;
        self.files_failed += other.files_failed;
        self.files_truncated += other.files_truncated;
    }

    /// Folds every derived path (`m.f().g()`) into its root API return
    /// (`m.f()`), removing the derived records.
    pub fn fold_derived(&self) -> UsageMap {
        let mut out = UsageMap {
            records: BTreeMap::new(),
            ..self.clone()
        };
        for (path, methods) in &self.records {
            let target = root_return_path(path).unwrap_or(path);
            let entry = out.records.entry(target.to_owned()).or_default();
            for (m, c) in methods {
                *entry.entry(m.clone()).or_insert(0) += c;
            }
        }
        out
    }

    pub fn to_records(&self) -> Vec<UsageRecord> {
        self.records
            .iter()
            .map(|(path, methods)| UsageRecord {
                path: path.clone(),
                methods: methods.clone(),
            })
            .collect()
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        io::to_json_bytes(&UsagesFile {
            files_analyzed: self.files_analyzed,
            files_failed: self.files_failed,
            files_truncated: self.files_truncated,
            records: self.to_records(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, &self.to_json_bytes()?)
    }

    pub fn load(path: &Path) -> Result<UsageMap> {
        let file: UsagesFile = io::read_json(path)?;
        let mut map = UsageMap {
            files_analyzed: file.files_analyzed,
            files_failed: file.files_failed,
            files_truncated: file.files_truncated,
            ..Default::default()
        };
        for r in file.records {
            for (m, c) in r.methods {
                map.record(&r.path, &m, c);
            }
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn map(records: &[(&str, &[(&str, usize)])], files: usize) -> UsageMap {
        let mut m = UsageMap {
            files_analyzed: files,
            ..Default::default()
        };
        for (path, methods) in records {
            for (name, c) in *methods {
                m.record(path, name, *c);
            }
        }
        m
    }

    #[test]
    fn merge_unions_and_adds() {
        let a = map(&[("pandas.read_csv()", &[("dropna", 1)])], 1);
        let b = map(&[("pandas.read_csv()", &[("to_csv", 1), ("dropna", 2)])], 1);
        let m = a.merge(&b);
        assert_eq!(m.files_analyzed, 2);
        let f: Vec<_> = m.methods("pandas.read_csv()").unwrap().iter().collect();
        assert_eq!(f, [(&"dropna".to_owned(), &3), (&"to_csv".to_owned(), &1)]);
    }

    #[test]
    fn fold_derived_moves_to_root() {
        let m = map(
            &[
                ("pandas", &[("read_csv", 1)]),
                ("pandas.read_csv()", &[("dropna", 1)]),
                ("pandas.read_csv().dropna()", &[("drop", 1)]),
                ("pandas.read_csv().dropna().drop()", &[("head", 1), ("drop", 1)]),
            ],
            1,
        );
        let folded = m.fold_derived();
        assert_eq!(folded.records.len(), 2);
        let f: BTreeSet<_> = folded.methods("pandas.read_csv()").unwrap().keys().cloned().collect();
        assert_eq!(f, ["drop", "dropna", "head"].map(String::from).into());
        assert_eq!(folded.methods("pandas.read_csv()").unwrap()["drop"], 2);
        assert_eq!(root_return_path("a.b"), None);
    }

    #[test]
    fn save_load_round_trip() {
        let m = map(&[("x.f()", &[("m", 2)])], 3);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.json");
        m.save(&p).unwrap();
        assert_eq!(UsageMap::load(&p).unwrap(), m);
    }

    pub(crate) fn arb_usage_map() -> impl Strategy<Value = UsageMap> {
        let paths = prop::sample::select(vec!["a.f()", "a.g()", "b.f()", "b.f().h()", "c"]);
        let methods = prop::sample::select(vec!["m", "n", "o", "p"]);
        (prop::collection::vec((paths, methods, 1usize..4), 0..12), 0usize..5, 0usize..3).prop_map(
            |(obs, analyzed, failed)| {
                let mut m = UsageMap {
                    files_analyzed: analyzed,
                    files_failed: failed,
                    ..Default::default()
                };
                for (p, meth, c) in obs {
                    m.record(p, meth, c);
                }
                m
            },
        )
    }

    // oracle: method sets by plain set union, counts by summation
    fn oracle(maps: &[&UsageMap]) -> BTreeMap<String, BTreeMap<String, usize>> {
        let mut out: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for m in maps {
            for (p, ms) in &m.records {
                for (name, c) in ms {
                    *out.entry(p.clone()).or_default().entry(name.clone()).or_default() += c;
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn merge_algebra(a in arb_usage_map(), b in arb_usage_map(), c in arb_usage_map()) {
            prop_assert_eq!(a.clone().merge(&b), b.clone().merge(&a));
            prop_assert_eq!(a.clone().merge(&b).merge(&c), a.clone().merge(&b.clone().merge(&c)));
            prop_assert_eq!(a.clone().merge(&UsageMap::default()), a.clone());
            prop_assert_eq!(a.clone().merge(&b).records, oracle(&[&a, &b]));
        }
    }
}
