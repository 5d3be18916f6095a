use std::collections::BTreeSet;

use turtletype::analysis::{analyze_corpus, CorpusOptions};
use turtletype::dataset::{self, Source};
use turtletype::docs;
use turtletype::ducktype::{self, DEFAULT_MAJORITY_THRESHOLD};
use turtletype::fixtures;
use turtletype::QualifiedName;

fn q(s: &str) -> QualifiedName {
    QualifiedName::parse(s).unwrap()
}

#[test]
fn both_sources_agree_on_read_csv() {
    let catalog = fixtures::running_example_catalog();
    let read_csv = q("pandas.read_csv");
    let frame = q("pandas.core.frame.DataFrame");

    let doc = docs::docstring_types(&catalog);
    assert!(doc[&read_csv].contains(&frame));
    assert!(doc[&read_csv].contains(&q("pandas.io.parsers.TextParser")));

    let corpus = analyze_corpus(&fixtures::running_example_dir().join("corpus"), &CorpusOptions::default()).unwrap();
    let f: BTreeSet<&str> = corpus.usages.methods("pandas.read_csv()").unwrap().keys().map(String::as_str).collect();
    assert_eq!(f, BTreeSet::from(["dropna", "to_csv"]));
    let predictions = ducktype::duck_type_all(&corpus.usages, &catalog, DEFAULT_MAJORITY_THRESHOLD);
    let analysis = ducktype::to_type_map(&predictions);
    assert_eq!(analysis[&read_csv], BTreeSet::from([frame.clone()]));

    let records = dataset::merge_sources(&doc, &analysis);
    let r = records.iter().find(|r| r.function == read_csv).unwrap();
    assert_eq!(r.source, Source::Both);
    assert_eq!(r.agreement, Some(true));
    let stats = dataset::compute_stats(&records, &catalog);
    assert_eq!(stats.overlap_count, 1);
    assert_eq!(stats.agreement_count, 1);
}

#[test]
fn folding_adds_derived_methods() {
    let catalog = fixtures::running_example_catalog();
    let corpus = analyze_corpus(&fixtures::running_example_dir().join("corpus"), &CorpusOptions::default()).unwrap();
    let folded = corpus.usages.fold_derived();
    let f: BTreeSet<&str> = folded.methods("pandas.read_csv()").unwrap().keys().map(String::as_str).collect();
    assert_eq!(f, BTreeSet::from(["drop", "dropna", "head", "to_csv"]));
    let analysis = ducktype::to_type_map(&ducktype::duck_type_all(&folded, &catalog, DEFAULT_MAJORITY_THRESHOLD));
    assert!(analysis[&q("pandas.read_csv")].contains(&q("pandas.core.frame.DataFrame")));
}
