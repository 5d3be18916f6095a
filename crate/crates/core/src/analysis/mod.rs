//! Call graph construction and pointer analysis with turtle semantics.
//!
//! Every value produced by an external API is a turtle: importing a module
//! creates one, reading any property of a turtle yields the same turtle, and
//! calling a method on it records the method name against the turtle's
//! provenance path and yields a fresh turtle. User functions are analyzed
//! as in an ordinary call-graph/pointer analysis; calls to builtins return
//! the turtles passed to them.

mod solver;
mod usage;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use solver::{
    analyze_script, AbstractValue, Analysis, CallEdge, ProvenancePath, Site, Turtle, TurtleId, DEFAULT_BUDGET,
};
pub use usage::{root_return_path, MethodCounts, UsageMap, UsageRecord};

use crate::error::{Error, Result};
use crate::frontend::parse_script;
use crate::io;

#[derive(Clone, Debug)]
pub struct CorpusOptions {
    pub jobs: usize,
    pub budget: usize,
    /// Collect the annotated IR listing of every file.
    pub dump_ir: bool,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            jobs: 1,
            budget: DEFAULT_BUDGET,
            dump_ir: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CorpusResult {
    pub usages: UsageMap,
    /// Concatenated annotated listings, in file order (empty unless asked for).
    pub dump: String,
    /// Files that failed to read or parse, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Every `*.py` file under `dir`, sorted by path.
pub fn python_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let meta = std::fs::metadata(dir).map_err(|source| Error::Read {
        path: dir.to_owned(),
        source,
    })?;
    if !meta.is_dir() {
        return Err(Error::Read {
            path: dir.to_owned(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a directory"),
        });
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Read {
            path: e.path().unwrap_or(dir).to_owned(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "py") {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

struct FileOutcome {
    usages: UsageMap,
    dump: String,
    failure: Option<String>,
}

fn analyze_file(path: &Path, display: &str, options: &CorpusOptions) -> FileOutcome {
    let failed = |reason: String| {
        log::warn!("{display}: {reason}");
        FileOutcome {
            usages: UsageMap {
                files_failed: 1,
                ..Default::default()
            },
            dump: String::new(),
            failure: Some(reason),
        }
    };
    let source = match io::read_text(path) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string()),
    };
    let ir = match parse_script(&source, display) {
        Ok(ir) => ir,
        Err(e) => return failed(e.to_string()),
    };
    for (what, n) in &ir.warnings {
        log::debug!("{display}: skipped {n} x {what}");
    }
    let analysis = analyze_script(&ir, options.budget);
    FileOutcome {
        usages: analysis.usage_map(),
        dump: if options.dump_ir { analysis.dump() } else { String::new() },
        failure: None,
    }
}

/// Parses and analyzes every Python file under `dir` independently, on
/// `jobs` worker threads, and folds the per-file maps. The result does not
/// depend on `jobs`.
pub fn analyze_corpus(dir: &Path, options: &CorpusOptions) -> Result<CorpusResult> {
    let files = python_files(dir)?;
    let displays: Vec<String> = files
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/"))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
    let outcomes: Vec<FileOutcome> = pool.install(|| {
        files
            .par_iter()
            .zip(displays.par_iter())
            .map(|(path, display)| analyze_file(path, display, options))
            .collect()
    });
    let mut result = CorpusResult::default();
    for (outcome, display) in outcomes.into_iter().zip(displays) {
        result.usages.merge_in(&outcome.usages);
        result.dump.push_str(&outcome.dump);
        if let Some(reason) = outcome.failure {
            result.failures.push((display, reason));
        }
    }
    log::info!(
        "analyzed {} files ({} failed, {} truncated), {} provenance paths",
        result.usages.files_analyzed,
        result.usages.files_failed,
        result.usages.files_truncated,
        result.usages.records.len()
    );
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::frontend::{Instruction, ScriptIR};
    use std::collections::BTreeSet;

    fn ir(src: &str) -> ScriptIR {
        parse_script(src, "t.py").unwrap()
    }

    fn usage(src: &str) -> UsageMap {
        analyze_script(&ir(src), DEFAULT_BUDGET).usage_map()
    }

    fn f(map: &UsageMap, path: &str) -> BTreeSet<String> {
        map.methods(path).map(|m| m.keys().cloned().collect()).unwrap_or_default()
    }

    #[test]
    fn script1_observations() {
        let m = usage(fixtures::SCRIPT_1);
        assert_eq!(f(&m, "pandas"), ["read_csv".to_owned()].into());
        assert!(f(&m, "pandas.read_csv()").contains("dropna"));
        assert!(f(&m, "pandas.read_csv().dropna()").contains("drop"));
        assert!(f(&m, "pandas.read_csv().dropna().drop()").contains("head"));
    }

    #[test]
    fn script1_interprocedural_flow() {
        let script = ir(fixtures::SCRIPT_1);
        let a = analyze_script(&script, DEFAULT_BUDGET);
        let reaching = a.param_turtles("massage_data", "data");
        assert_eq!(reaching.len(), 1);
        assert_eq!(reaching[0].path.rendered(), "pandas.read_csv()");
        // the import turtle is the first one created
        assert_eq!(a.turtle(TurtleId(1)).path.rendered(), "pandas");
        assert_ne!(reaching[0].id, TurtleId(1));
        assert!(a.call_edges().any(|e| e.caller == 0 && e.callee == 1 && e.bindings.len() == 1));
        // len(df) hands back its argument turtle, i.e. massage_data's return
        let top = script.top_level();
        let len_name = top
            .instructions()
            .find_map(|i| match i {
                Instruction::LexicalRead { target, name } if name == "len" => Some(*target),
                _ => None,
            })
            .unwrap();
        let len_call = top
            .instructions()
            .find_map(|i| match i {
                Instruction::Call { target, callee, .. } if *callee == len_name => Some(*target),
                _ => None,
            })
            .unwrap();
        let len_result = &a.value_of(0, len_call).turtles;
        assert!(!len_result.is_empty());
        assert_eq!(len_result, &a.return_value(1).turtles);
    }

    #[test]
    fn script2_to_csv() {
        let m = usage(fixtures::SCRIPT_2);
        assert_eq!(f(&m, "pandas.read_csv()"), ["to_csv".to_owned()].into());
    }

    #[test]
    fn import_only_has_no_records() {
        assert!(usage("import pandas as pd\nx = pd").records.is_empty());
    }

    #[test]
    fn merged_scripts() {
        let m = usage(fixtures::SCRIPT_1).merge(&usage(fixtures::SCRIPT_2));
        assert_eq!(f(&m, "pandas.read_csv()"), ["dropna".to_owned(), "to_csv".to_owned()].into());
        assert_eq!(m.files_analyzed, 2);
    }

    #[test]
    fn property_read_returns_same_turtle() {
        let script = ir("import m\na = m.x\nb = a.y.z\nc = b[0]");
        let a = analyze_script(&script, DEFAULT_BUDGET);
        let top = script.top_level();
        let import = a.value_of(0, crate::frontend::ValueId(1)).turtles.clone();
        for ins in top.instructions() {
            if let Instruction::PropertyRead { target, .. } | Instruction::Subscript { target, .. } = ins {
                assert!(a.value_of(0, *target).turtles.is_superset(&import));
            }
        }
    }

    #[test]
    fn each_import_site_is_a_fresh_turtle() {
        let script = ir("import pandas as a\nimport pandas as b\na.f().x()\nb.f().y()");
        let a = analyze_script(&script, DEFAULT_BUDGET);
        let m = a.usage_map();
        assert_eq!(f(&m, "pandas.f()"), ["x".to_owned(), "y".to_owned()].into());
        // two import turtles, two f() turtles, two leaf turtles
        assert_eq!(a.turtles().len(), 6);
        assert_eq!(m.methods("pandas").unwrap()["f"], 2);
    }

    #[test]
    fn chained_property_prefix() {
        let m = usage("import pandas as pd\ndf = pd.io.parsers.read_csv('x')\ndf.head()");
        assert_eq!(f(&m, "pandas.io.parsers"), ["read_csv".to_owned()].into());
        assert_eq!(f(&m, "pandas.io.parsers.read_csv()"), ["head".to_owned()].into());
    }

    #[test]
    fn loops_terminate() {
        let m = usage("import pd\nx = pd.load()\nwhile x:\n    x = x.next()\nx.close()");
        assert_eq!(f(&m, "pd.load()"), ["close".to_owned(), "next".to_owned()].into());
        assert!(f(&m, "pd.load().next()").contains("next"));
    }

    #[test]
    fn recursion_reaches_fixpoint() {
        let src = "import lib\ndef walk(n):\n    if n:\n        return walk(n.child())\n    return n\nwalk(lib.root()).done()";
        let m = usage(src);
        assert!(f(&m, "lib.root()").contains("child"));
        assert!(f(&m, "lib.root()").contains("done"));
    }

    #[test]
    fn closures_read_enclosing_bindings() {
        let src = "import requests\ndef fetch(u):\n    return requests.get(u)\nr = fetch('x')\nr.json()";
        let m = usage(src);
        assert_eq!(f(&m, "requests"), ["get".to_owned()].into());
        assert_eq!(f(&m, "requests.get()"), ["json".to_owned()].into());
    }

    #[test]
    fn budget_truncates() {
        let script = ir(fixtures::SCRIPT_1);
        let a = analyze_script(&script, 5);
        assert!(a.truncated());
        assert_eq!(a.usage_map().files_truncated, 1);
    }

    #[test]
    fn corpus_directory() {
        let dir = fixtures::running_example_dir().join("corpus");
        let r = analyze_corpus(&dir, &CorpusOptions::default()).unwrap();
        assert_eq!(r.usages.files_analyzed, 2);
        assert_eq!(f(&r.usages, "pandas.read_csv()"), ["dropna".to_owned(), "to_csv".to_owned()].into());
    }

    #[test]
    fn corpus_failures_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(analyze_corpus(dir.path(), &CorpusOptions::default()).unwrap().usages, UsageMap::default());
        std::fs::write(dir.path().join("bad.py"), "def (:\n").unwrap();
        std::fs::write(dir.path().join("good.py"), fixtures::SCRIPT_2).unwrap();
        let r = analyze_corpus(dir.path(), &CorpusOptions::default()).unwrap();
        assert_eq!((r.usages.files_analyzed, r.usages.files_failed), (1, 1));
        assert_eq!(r.failures[0].0, "bad.py");
        assert!(analyze_corpus(&dir.path().join("missing"), &CorpusOptions::default()).is_err());
    }

    #[test]
    fn dump_mentions_turtles_and_edges() {
        let script = ir(fixtures::SCRIPT_1);
        let d = analyze_script(&script, DEFAULT_BUDGET).dump();
        assert!(d.contains("v1 = import pandas ; {t1=pandas}"));
        assert!(d.contains("edge #0 v6 -> #1 massage_data [v5->v1]"));
        assert!(d.contains("turtle t2 pandas.read_csv() at #0 v5 from t1"));
    }
}
