//! Seeded generators for synthetic catalogs and corpora, used by tests and
//! benchmarks.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::io;
use crate::names::QualifiedName;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Source files keyed by relative path.
pub type Files = BTreeMap<String, String>;

pub fn write_files(dir: &Path, files: &Files) -> Result<()> {
    for (name, source) in files {
        io::write_atomic(&dir.join(name), source.as_bytes())?;
    }
    Ok(())
}

fn word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

const KEYWORDS: [&str; 9] = ["assert", "except", "global", "import", "lambda", "return", "finally", "continue", "nonlocal"];

/// `n` distinct random lowercase words of length 6..9.
fn distinct_words(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(6..10);
        let w = word(rng, len);
        if !KEYWORDS.contains(&w.as_str()) && taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

pub struct ConstructorCorpus {
    pub catalog: Catalog,
    pub files: Files,
    /// Constructor function → the class it constructs.
    pub expected: BTreeMap<QualifiedName, QualifiedName>,
}

/// `classes` classes with pairwise disjoint `methods_per_class`-method
/// vocabularies, each in its own module, and one script per class that
/// constructs it and calls `calls` of its methods.
pub fn constructor_corpus(seed: u64, classes: usize, methods_per_class: usize, calls: usize) -> Result<ConstructorCorpus> {
    let mut rng = rng(seed);
    let mut taken = BTreeSet::new();
    let mut builder = Catalog::builder();
    let mut files = Files::new();
    let mut expected = BTreeMap::new();
    for i in 0..classes {
        let module = format!("synthlib.mod{i:03}");
        let class = format!("{module}.{}", capitalize(&distinct_words(&mut rng, 1, &mut taken)[0]));
        let methods = distinct_words(&mut rng, methods_per_class, &mut taken);
        let refs: Vec<&str> = methods.iter().map(String::as_str).collect();
        builder = builder.class(&class, &refs, &[]);
        let chosen: Vec<&String> = methods.choose_multiple(&mut rng, calls.min(methods.len())).collect();
        let short = class.rsplit('.').next().unwrap_or(&class);
        let mut src = format!("import {module} as m\n\nobj = m.{short}({})\n", rng.random_range(0..100));
        for (k, m) in chosen.iter().enumerate() {
            if k % 2 == 0 {
                src.push_str(&format!("obj.{m}()\n"));
            } else {
                src.push_str(&format!("result = obj.{m}('x', {k})\nprint(result)\n"));
            }
        }
        files.insert(format!("script_{i:03}.py"), src);
        let class_name = QualifiedName::parse(&class).map_err(|e| Error::Internal(e.to_string()))?;
        expected.insert(class_name.clone(), class_name);
    }
    Ok(ConstructorCorpus {
        catalog: builder.build()?,
        files,
        expected,
    })
}

const LIBS: [(&str, &[&str]); 4] = [
    ("pandas", &["read_csv", "read_json", "concat", "DataFrame"]),
    ("numpy", &["array", "zeros", "loadtxt"]),
    ("requests", &["get", "post", "Session"]),
    ("sklearn.linear_model", &["LinearRegression", "Ridge"]),
];
const METHODS: [&str; 16] = [
    "head", "dropna", "drop", "to_csv", "reshape", "sum", "mean", "json", "raise_for_status", "fit", "predict",
    "score", "close", "copy", "astype", "groupby",
];

/// A mixed corpus of `n` scripts exercising imports, helper functions,
/// branches, loops, comprehensions and chained calls. Deterministic in
/// `seed`.
pub fn random_corpus(seed: u64, n: usize) -> Files {
    let mut rng = rng(seed);
    let mut files = Files::new();
    for i in 0..n {
        let mut src = String::new();
        let count = rng.random_range(1..=3);
        let libs: Vec<&(&str, &[&str])> = LIBS.choose_multiple(&mut rng, count).collect();
        for (k, (lib, _)) in libs.iter().enumerate() {
            src.push_str(&format!("import {lib} as l{k}\n"));
        }
        src.push('\n');
        let helpers = rng.random_range(0..3);
        for h in 0..helpers {
            let m1 = METHODS.choose(&mut rng).unwrap();
            let m2 = METHODS.choose(&mut rng).unwrap();
            match rng.random_range(0..3) {
                0 => src.push_str(&format!("def helper{h}(x):\n    y = x.{m1}()\n    return y.{m2}()\n\n")),
                1 => src.push_str(&format!(
                    "def helper{h}(x, flag=True):\n    if flag:\n        x = x.{m1}()\n    else:\n        x.{m2}()\n    return x\n\n"
                )),
                _ => src.push_str(&format!(
                    "def helper{h}(x):\n    for item in x.{m1}():\n        item.{m2}()\n    return [v.{m1}() for v in x]\n\n"
                )),
            }
        }
        let statements = rng.random_range(2..8);
        for s in 0..statements {
            let k = rng.random_range(0..libs.len());
            let (_, funcs) = libs[k];
            let f = funcs.choose(&mut rng).unwrap();
            let m = METHODS.choose(&mut rng).unwrap();
            match rng.random_range(0..5) {
                0 => src.push_str(&format!("v{s} = l{k}.{f}('data{s}')\nv{s}.{m}()\n")),
                1 if helpers > 0 => {
                    let h = rng.random_range(0..helpers);
                    src.push_str(&format!("v{s} = helper{h}(l{k}.{f}())\nv{s}.{m}(axis=1)\n"));
                }
                2 => src.push_str(&format!(
                    "v{s} = l{k}.{f}()\nwhile v{s}:\n    v{s} = v{s}.{m}()\n    if len(v{s}) > {s}:\n        break\n"
                )),
                3 => src.push_str(&format!("v{s} = l{k}.{f}().{m}().{}()\n", METHODS.choose(&mut rng).unwrap())),
                _ => src.push_str(&format!(
                    "try:\n    v{s} = l{k}.{f}(x={s})\nexcept ValueError:\n    v{s} = None\nprint(v{s}.{m}())\n"
                )),
            }
        }
        files.insert(format!("dir{}/file_{i:03}.py", i % 7), src);
    }
    files
}

/// A random hierarchy of `n` classes `h.Cnn` over a small method pool,
/// with an alias `h.alias.Cnn` for every third class. Bases always point to
/// lower-numbered classes, except that `cycles` adds an occasional back edge.
pub fn random_hierarchy(seed: u64, n: usize, cycles: bool) -> Result<Catalog> {
    let mut rng = rng(seed);
    let pool = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let mut builder = Catalog::builder();
    for i in 0..n {
        let name = format!("h.C{i:02}");
        let k = rng.random_range(1..4);
        let methods: Vec<&str> = pool.choose_multiple(&mut rng, k).copied().collect();
        let mut bases = Vec::new();
        if i > 0 && rng.random_bool(0.7) {
            bases.push(format!("h.C{:02}", rng.random_range(0..i)));
            if i > 1 && rng.random_bool(0.2) {
                bases.push(format!("h.C{:02}", rng.random_range(0..i)));
            }
        }
        if cycles && i + 1 < n && rng.random_bool(0.05) {
            bases.push(format!("h.C{:02}", rng.random_range(i + 1..n)));
        }
        bases.sort();
        bases.dedup();
        let refs: Vec<&str> = bases.iter().map(String::as_str).collect();
        builder = builder.class(&name, &methods, &refs);
        if i % 3 == 0 {
            builder = builder.alias(&format!("h.alias.C{i:02}"), &name);
        }
    }
    builder.build()
}

pub struct DocFixture {
    pub catalog: Catalog,
    /// Function → the exact text placed under its returns heading.
    pub returns: BTreeMap<QualifiedName, String>,
}

const FILLER: [&str; 12] = [
    "the", "result", "object", "or", "of", "values", "containing", "parsed", "if", "when", "an", "instance",
];

/// `functions` documented functions across a few libraries whose returns
/// sections mix class short names (plain, lowercased, qualified, with
/// decorations), vocabulary words and filler. Some classes share short names
/// across libraries and some have aliases.
pub fn doc_fixture(seed: u64, functions: usize) -> Result<DocFixture> {
    let mut rng = rng(seed);
    let libs = ["alpha", "beta", "gamma", "delta"];
    let mut taken = BTreeSet::new();
    let shorts: Vec<String> = distinct_words(&mut rng, 24, &mut taken).iter().map(|w| capitalize(w)).collect();
    let mut builder = Catalog::builder();
    let mut classes = Vec::new();
    for (i, short) in shorts.iter().enumerate() {
        let lib = libs[i % libs.len()];
        let name = format!("{lib}.core.{short}");
        builder = builder.class(&name, &["m"], &[]);
        classes.push((name.clone(), short.clone()));
        // shared short name in a second library
        if i % 5 == 0 {
            let other = libs[(i + 1) % libs.len()];
            builder = builder.class(&format!("{other}.extra.{short}"), &["m"], &[]);
        }
        if i % 4 == 0 {
            builder = builder.alias(&format!("{lib}.{short}"), &name);
        }
        if i % 7 == 3 {
            builder = builder.alias(&format!("{lib}.compat.Old{short}"), &name);
        }
    }
    builder = builder.invalid(&format!("{}.core.{}", libs[0], capitalize(&word(&mut rng, 11))));
    let words = ["int", "str", "bool", "None", "list", "dict", "tuple", "float"];
    let mut returns = BTreeMap::new();
    for i in 0..functions {
        let lib = libs[rng.random_range(0..libs.len())];
        let function = format!("{lib}.api{}.func_{i:03}", i % 9);
        let mut parts: Vec<String> = Vec::new();
        for _ in 0..rng.random_range(0..6) {
            let piece = match rng.random_range(0..8) {
                0 | 1 => {
                    let (_, short) = classes.choose(&mut rng).unwrap();
                    short.clone()
                }
                2 => {
                    let (name, _) = classes.choose(&mut rng).unwrap();
                    name.clone()
                }
                3 => format!("{}s", classes.choose(&mut rng).unwrap().1),
                4 => words.choose(&mut rng).unwrap().to_string(),
                5 => format!("`{}`", classes.choose(&mut rng).unwrap().1.to_lowercase()),
                _ => FILLER.choose(&mut rng).unwrap().to_string(),
            };
            parts.push(piece);
        }
        if rng.random_bool(0.2) {
            parts.push(format!("Old{}", classes.choose(&mut rng).unwrap().1));
        }
        parts.shuffle(&mut rng);
        let text = parts.join(if rng.random_bool(0.5) { " " } else { ", " });
        let doc = if rng.random_bool(0.5) {
            format!("Do something.\n\nReturns\n-------\n{text}\n\nNotes\n-----\nInt and DataFrame appear here only.\n")
        } else {
            format!("Do something.\n\n:param x: an int\n:returns: {text}\n")
        };
        builder = builder.function(&function, if text.is_empty() { "No sections here." } else { &doc });
        let function = QualifiedName::parse(&function).map_err(|e| Error::Internal(e.to_string()))?;
        returns.insert(function, text);
    }
    Ok(DocFixture {
        catalog: builder.build()?,
        returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docs;

    #[test]
    fn constructor_corpus_is_deterministic_and_disjoint() {
        let a = constructor_corpus(7, 50, 3, 2).unwrap();
        let b = constructor_corpus(7, 50, 3, 2).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.files.len(), 50);
        assert_eq!(a.catalog.class_count(), 50);
        for (method, owners) in a.catalog.method_index() {
            assert_eq!(owners.len(), 1, "{method}");
        }
    }

    #[test]
    fn random_corpus_parses() {
        let files = random_corpus(3, 40);
        assert_eq!(files, random_corpus(3, 40));
        for (name, src) in &files {
            crate::frontend::parse_script(src, name).unwrap_or_else(|e| panic!("{name}: {e}\n{src}"));
        }
    }

    #[test]
    fn hierarchy_builds() {
        for seed in 0..20 {
            let c = random_hierarchy(seed, 20, seed % 2 == 0).unwrap();
            assert_eq!(c.class_count(), 20);
        }
    }

    #[test]
    fn doc_fixture_returns_match_parser() {
        let f = doc_fixture(11, 200).unwrap();
        assert_eq!(f.returns.len(), 200);
        let index = docs::build_index(&f.catalog);
        for (function, text) in &f.returns {
            let parsed = index.record(function).map(|r| r.returns_text.as_str()).unwrap_or("");
            assert_eq!(parsed, text, "{function}");
        }
    }
}
