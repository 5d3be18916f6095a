use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use turtletype::analysis::{analyze_corpus, CorpusOptions, UsageMap, DEFAULT_BUDGET};
use turtletype::config::PipelineConfig;
use turtletype::dataset;
use turtletype::docs;
use turtletype::ducktype::{self, DEFAULT_MAJORITY_THRESHOLD};
use turtletype::eval;
use turtletype::io;
use turtletype::pipeline;
use turtletype::predictions::{PredictionFile, SOURCE_DOCSTRING};
use turtletype::{Catalog, Error};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ncatalog format: classes/functions + aliases/invalid\n",
    "doc index format: turtletype-doc-index/1\n",
    "usages format: 1\n",
    "predictions format: 1\n",
    "dataset format: jsonl/1\n",
    "eval report format: 1"
);

#[derive(Parser)]
#[command(name = "turtletype", version, long_version = LONG_VERSION, about = "Return-type labels for Python APIs from docstrings and usage")]
struct Cli {
    /// Pipeline configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the external catalog extractor and validate what it wrote.
    ExtractCatalog(ExtractArgs),
    #[command(subcommand)]
    Docs(DocsCmd),
    /// Collect per-path method usage over a corpus of scripts.
    Analyze(AnalyzeArgs),
    /// Duck-type every API return path in a usages file.
    Ducktype(DucktypeArgs),
    /// Merge docstring and analysis predictions into the labeled dataset.
    Merge(MergeArgs),
    /// Summary statistics of a dataset or prediction file.
    Stats(StatsArgs),
    /// Score predictions against a gold file.
    Eval(EvalArgs),
    /// Index and infer docstrings, analyze, duck-type, merge and summarize.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum DocsCmd {
    /// Build the inverted index over returns sections.
    Index(DocsIndexArgs),
    /// Search and cleanse candidates from an index.
    Infer(DocsInferArgs),
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// File with one module name per line.
    #[arg(long)]
    modules: PathBuf,
    #[arg(long)]
    out_catalog: PathBuf,
    #[arg(long)]
    out_aliases: PathBuf,
    /// Extractor command; defaults to $TURTLETYPE_EXTRACTOR, then
    /// `python3 -m catalog_extractor`.
    #[arg(long)]
    extractor: Option<String>,
}

#[derive(Args)]
struct DocsIndexArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DocsInferArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    fold_derived: bool,
    /// Write the annotated IR of every file here.
    #[arg(long)]
    dump_ir: Option<PathBuf>,
    /// Instruction visits per file before giving up.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DucktypeArgs {
    #[arg(long)]
    usages: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    majority_threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(long)]
    doc: PathBuf,
    #[arg(long)]
    analysis: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    pred: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// Defaults to `<pred>.stats.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    fold_derived: bool,
    #[arg(long)]
    majority_threshold: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("TURTLETYPE_LOG", "info");
    env_logger::Builder::from_env(env)
        .format(|buf, record| {
            let line = serde_json::json!({
                "ts": buf.timestamp_millis().to_string(),
                "level": record.level().as_str(),
                "target": record.target(),
                "msg": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .target(env_logger::Target::Stderr)
        .init();
}

fn load_config(path: Option<&Path>) -> anyhow::Result<Option<PipelineConfig>> {
    path.map(PipelineConfig::load).transpose().map_err(Into::into)
}

fn required(flag: Option<PathBuf>, from_config: Option<PathBuf>, name: &str) -> anyhow::Result<PathBuf> {
    flag.or(from_config)
        .ok_or_else(|| Error::Config(format!("--{name} is required (or set it in --config)")).into())
}

fn catalog_from(args: &CatalogArgs, config: Option<&PipelineConfig>) -> anyhow::Result<Catalog> {
    let path = required(args.catalog.clone(), config.map(|c| c.catalog_path.clone()), "catalog")?;
    let aliases = args.aliases.clone().or_else(|| config.and_then(|c| c.aliases_path.clone()));
    let catalog = Catalog::load(&path, aliases.as_deref())?;
    let report = catalog.report();
    log::debug!("catalog {}: {:?}", path.display(), report);
    Ok(match config.and_then(|c| c.vocabulary.clone()) {
        Some(v) => catalog.with_vocabulary(v),
        None => catalog,
    })
}

fn check_threshold(t: f64) -> anyhow::Result<f64> {
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(Error::Config(format!("majority threshold must lie strictly between 0 and 1, got {t}")).into())
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = load_config(cli.config.as_deref())?;
    let config = config.as_ref();
    match cli.command {
        Cmd::ExtractCatalog(a) => extract_catalog(a),
        Cmd::Docs(DocsCmd::Index(a)) => {
            let catalog = catalog_from(&a.catalog, config)?;
            let index = docs::build_index(&catalog);
            docs::save_index(&a.out, &index, &catalog)?;
            log::info!("indexed {} documented functions", index.len());
            Ok(())
        }
        Cmd::Docs(DocsCmd::Infer(a)) => {
            let (index, catalog) = docs::load_index(&a.index)?;
            let types = docs::cleanse_doc_types(&docs::infer_doc_types(&index, &catalog), &catalog);
            io::write_json(&a.out, &PredictionFile::from_type_map(&types, SOURCE_DOCSTRING))?;
            log::info!("typed {} of {} functions", types.len(), index.len());
            Ok(())
        }
        Cmd::Analyze(a) => {
            let corpus = required(a.corpus, config.map(|c| c.corpus_dir.clone()), "corpus")?;
            let jobs = a.jobs.or(config.map(|c| c.jobs)).unwrap_or(1);
            if jobs == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()).into());
            }
            let options = CorpusOptions {
                jobs,
                budget: a.budget.or(config.map(|c| c.instruction_budget)).unwrap_or(DEFAULT_BUDGET),
                dump_ir: a.dump_ir.is_some(),
            };
            let result = analyze_corpus(&corpus, &options)?;
            let fold = a.fold_derived || config.is_some_and(|c| c.fold_derived);
            let usages: UsageMap = if fold { result.usages.fold_derived() } else { result.usages };
            usages.save(&a.out)?;
            if let Some(path) = a.dump_ir {
                io::write_atomic(&path, result.dump.as_bytes())?;
            }
            Ok(())
        }
        Cmd::Ducktype(a) => {
            let catalog = catalog_from(&a.catalog, config)?;
            let threshold = check_threshold(
                a.majority_threshold
                    .or(config.map(|c| c.majority_threshold))
                    .unwrap_or(DEFAULT_MAJORITY_THRESHOLD),
            )?;
            let usages = UsageMap::load(&a.usages)?;
            let predictions = ducktype::duck_type_all(&usages, &catalog, threshold);
            let file = ducktype::to_prediction_file(&predictions);
            log::info!("typed {} functions from {} paths", file.predictions.len(), usages.records.len());
            io::write_json(&a.out, &file)?;
            Ok(())
        }
        Cmd::Merge(a) => {
            let doc = PredictionFile::load(&a.doc)?.to_type_map(&a.doc)?;
            let analysis = PredictionFile::load(&a.analysis)?.to_type_map(&a.analysis)?;
            let records = dataset::merge_sources(&doc, &analysis);
            dataset::write_jsonl(&a.out, &records)?;
            log::info!("{} labeled functions", records.len());
            Ok(())
        }
        Cmd::Stats(a) => {
            let catalog = catalog_from(&a.catalog, config)?;
            let records = dataset::load_records(&a.pred)?;
            let stats = dataset::compute_stats(&records, &catalog);
            let out = a.out.unwrap_or_else(|| {
                let mut p = a.pred.clone().into_os_string();
                p.push(".stats.json");
                PathBuf::from(p)
            });
            io::write_json(&out, &stats)?;
            print!("{}", stats.render());
            Ok(())
        }
        Cmd::Eval(a) => {
            let catalog = catalog_from(&a.catalog, config)?;
            let pred = PredictionFile::load(&a.pred)?.to_type_map(&a.pred)?;
            let gold = eval::load_gold(&a.gold, &catalog)?;
            let report = eval::evaluate(&pred, &gold, &catalog);
            report.save(&a.out)?;
            print!("{}", report.render());
            Ok(())
        }
        Cmd::Pipeline(a) => {
            let mut c = match config {
                Some(c) => c.clone(),
                None => PipelineConfig::new(
                    required(a.catalog.catalog.clone(), None, "catalog")?,
                    required(a.corpus.clone(), None, "corpus")?,
                    required(a.out_dir.clone(), None, "out-dir")?,
                ),
            };
            if let Some(p) = a.catalog.catalog {
                c.catalog_path = p;
            }
            if let Some(p) = a.catalog.aliases {
                c.aliases_path = Some(p);
            }
            if let Some(p) = a.corpus {
                c.corpus_dir = p;
            }
            if let Some(p) = a.out_dir {
                c.output_dir = p;
            }
            if let Some(j) = a.jobs {
                c.jobs = j;
            }
            if let Some(t) = a.majority_threshold {
                c.majority_threshold = t;
            }
            if let Some(b) = a.budget {
                c.instruction_budget = b;
            }
            c.fold_derived |= a.fold_derived;
            let out = pipeline::run(&c)?;
            print!("{}", out.stats.render());
            Ok(())
        }
    }
}

fn extract_catalog(a: ExtractArgs) -> anyhow::Result<()> {
    if !a.modules.is_file() {
        return Err(Error::Read {
            path: a.modules.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        }
        .into());
    }
    let command = a
        .extractor
        .or_else(|| std::env::var("TURTLETYPE_EXTRACTOR").ok())
        .unwrap_or_else(|| "python3 -m catalog_extractor".to_owned());
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or_else(|| Error::Config("empty extractor command".into()))?;
    let status = Command::new(program)
        .args(parts)
        .arg("--modules")
        .arg(&a.modules)
        .arg("--out-catalog")
        .arg(&a.out_catalog)
        .arg("--out-aliases")
        .arg(&a.out_aliases)
        .status()
        .map_err(|e| Error::Config(format!("cannot run extractor {command:?}: {e}")))?;
    if !status.success() {
        return Err(Error::Config(format!("extractor {command:?} failed with {status}")).into());
    }
    let catalog = Catalog::load(&a.out_catalog, Some(&a.out_aliases)).context("extractor output")?;
    log::info!("extracted {} classes", catalog.class_count());
    Ok(())
}

/// The error chain joined by ": ", skipping causes whose text the previous
/// message already ends with.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(e) if e.is_input_error() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = describe(&e);
            log::error!("{msg}");
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    #[test]
    fn exit_codes() {
        let missing = anyhow!(Error::Read {
            path: "x".into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "gone")
        });
        assert_eq!(exit_code(&missing), 1);
        assert_eq!(exit_code(&anyhow!(Error::Internal("bug".into()))), 2);
        assert_eq!(exit_code(&anyhow!("other")), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
