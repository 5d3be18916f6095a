//! All stages end to end, writing every intermediate file to the output
//! directory.

use std::path::PathBuf;

use crate::analysis::{analyze_corpus, CorpusOptions, UsageMap};
use crate::catalog::Catalog;
use crate::config::PipelineConfig;
use crate::dataset::{self, DatasetStats, LabeledRecord};
use crate::docs;
use crate::ducktype;
use crate::error::Result;
use crate::io;
use crate::predictions::{PredictionFile, TypeMap, SOURCE_DOCSTRING};

pub const DOCS_INDEX_FILE: &str = "docs_index.json";
pub const DOC_TYPES_FILE: &str = "doc_types.json";
pub const USAGES_FILE: &str = "usages.json";
pub const ANALYSIS_TYPES_FILE: &str = "analysis_types.json";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const STATS_FILE: &str = "stats.json";

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub doc_types: TypeMap,
    pub analysis_types: TypeMap,
    pub usages: UsageMap,
    pub records: Vec<LabeledRecord>,
    pub stats: DatasetStats,
    pub output_dir: PathBuf,
}

impl PipelineOutput {
    pub fn path(&self, file: &str) -> PathBuf {
        self.output_dir.join(file)
    }
}

pub fn load_catalog(config: &PipelineConfig) -> Result<Catalog> {
    let catalog = Catalog::load(&config.catalog_path, config.aliases_path.as_deref())?;
    Ok(match &config.vocabulary {
        Some(v) => catalog.with_vocabulary(v.clone()),
        None => catalog,
    })
}

pub fn run(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let catalog = load_catalog(config)?;
    run_with_catalog(config, &catalog)
}

pub fn run_with_catalog(config: &PipelineConfig, catalog: &Catalog) -> Result<PipelineOutput> {
    let out = config.output_dir.as_path();
    let file = |name: &str| -> PathBuf { out.join(name) };

    let index = docs::build_index(catalog);
    docs::save_index(&file(DOCS_INDEX_FILE), &index, catalog)?;
    let doc_types = docs::cleanse_doc_types(&docs::infer_doc_types(&index, catalog), catalog);
    io::write_json(&file(DOC_TYPES_FILE), &PredictionFile::from_type_map(&doc_types, SOURCE_DOCSTRING))?;
    log::info!("docstrings: {} functions typed of {} indexed", doc_types.len(), index.len());

    let options = CorpusOptions {
        jobs: config.jobs,
        budget: config.instruction_budget,
        dump_ir: false,
    };
    let corpus = analyze_corpus(&config.corpus_dir, &options)?;
    let usages = if config.fold_derived {
        corpus.usages.fold_derived()
    } else {
        corpus.usages
    };
    usages.save(&file(USAGES_FILE))?;

    let predictions = ducktype::duck_type_all(&usages, catalog, config.majority_threshold);
    io::write_json(&file(ANALYSIS_TYPES_FILE), &ducktype::to_prediction_file(&predictions))?;
    let analysis_types = ducktype::to_type_map(&predictions);
    log::info!("analysis: {} functions typed", analysis_types.len());

    let records = dataset::merge_sources(&doc_types, &analysis_types);
    dataset::write_jsonl(&file(DATASET_FILE), &records)?;
    let stats = dataset::compute_stats(&records, catalog);
    io::write_json(&file(STATS_FILE), &stats)?;

    Ok(PipelineOutput {
        doc_types,
        analysis_types,
        usages,
        records,
        stats,
        output_dir: out.to_path_buf(),
    })
}
