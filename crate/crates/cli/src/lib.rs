//! The `rsst` command line: ingest → featurize → select → eval, plus
//! synthetic corpora and oracle self-checks.

pub mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rsst_core::eval::{sweep, EvalReport};
use rsst_core::featurize::{build_fvt_with, discretize, graph_features_over};
use rsst_core::oracle::{generate, run_checks, CheckReport, SynthSpec};
use rsst_core::select::{select, Selection};
use rsst_core::trace::{call_sequence, ingest_corpus, read_jsonl, read_log_lines, read_manifest, write_jsonl, FileSummary};
use rsst_core::{
    AnswerKey, CallCountRecord, Error, FeatureVectorTable, FvtOptions, Label, ParseSummary, Result, Selector, Weighting,
};
use serde::{Deserialize, Serialize};

pub use config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "rsst", version, about = "Rough-set and z-test feature selection over system-call traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the logs listed in a manifest into a JSONL record file.
    Ingest(IngestArgs),
    /// Build the TF-IDF feature table (and optionally bins and graph features).
    Featurize(FeaturizeArgs),
    /// Rank calls with one of the selectors.
    Select(SelectArgs),
    /// Cross-validate the classifier over prefixes of a selection's ranking.
    Eval(EvalArgs),
    /// Generate a synthetic corpus with planted calls and its answer key.
    Synth(SynthArgs),
    /// Compare the rough-set code against brute-force references.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for outputs not given an explicit path.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CorpusArgs {
    /// JSONL record file written by `ingest` or `synth`.
    #[arg(long, conflicts_with = "fvt")]
    pub records: Option<PathBuf>,
    /// Feature table CSV written by `featurize`.
    #[arg(long)]
    pub fvt: Option<PathBuf>,
    /// Drop calls present in fewer samples [default: 1].
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Weights for the z-test: tfidf or relfreq [default: tfidf].
    #[arg(long, value_parser = parse_weighting)]
    pub weighting: Option<Weighting>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV with header `path,label,sample_id`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Record file [default: <out-dir>/records.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parse summary [default: <out-dir>/ingest_summary.json].
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long, value_parser = parse_weighting)]
    pub weighting: Option<Weighting>,
    /// Bin count; only 4 is supported.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Feature table [default: <out-dir>/fvt.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the binned decision table here.
    #[arg(long)]
    pub bins_out: Option<PathBuf>,
    /// Manifest whose logs feed call-graph degree features.
    #[arg(long, requires = "graph_out")]
    pub graph_manifest: Option<PathBuf>,
    /// JSONL of call-graph degree features, one line per sample.
    #[arg(long, requires = "graph_manifest")]
    pub graph_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// rsst, roughset, ig, chi or su [default: rsst].
    #[arg(long, value_parser = parse_selector)]
    pub method: Option<Selector>,
    /// Significance level; sets the critical value when --z-crit is absent [default: 0.05].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Critical |z| [default: 1.96].
    #[arg(long)]
    pub z_crit: Option<f64>,
    /// Put standard deviations where the variances belong in the z statistic.
    #[arg(long)]
    pub sigma_as_stddev: bool,
    /// Keep only the first k ranked calls.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Selection report [default: <out-dir>/selection.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Selection report written by `select`.
    #[arg(long)]
    pub selection: Option<PathBuf>,
    /// Comma-separated ascending prefix lengths [default: 10, 20, ... and the full ranking].
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    /// Cross-validation folds [default: 10].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Trees per ensemble [default: 100].
    #[arg(long)]
    pub trees: Option<usize>,
    /// [default: 16]
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// [default: 2]
    #[arg(long)]
    pub min_samples_split: Option<usize>,
    /// Features drawn per split [default: floor(sqrt(d))].
    #[arg(long)]
    pub features_per_split: Option<usize>,
    /// Evaluation report [default: <out-dir>/eval.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the table layout as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Full SynthSpec JSON with explicit planted call lists.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub samples_per_class: usize,
    #[arg(long, default_value_t = 50)]
    pub vocabulary_size: usize,
    #[arg(long, default_value_t = 3)]
    pub planted_malware: usize,
    #[arg(long, default_value_t = 2)]
    pub planted_benign: usize,
    #[arg(long, default_value_t = 0.75)]
    pub effect_size: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 1.0)]
    pub base_mean: f64,
    /// Record file [default: <out-dir>/records.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Answer key [default: <out-dir>/answer_key.json].
    #[arg(long)]
    pub answer_key: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Random tables to check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_weighting(s: &str) -> std::result::Result<Weighting, String> {
    match s {
        "tfidf" => Ok(Weighting::TfIdf),
        "relfreq" => Ok(Weighting::RelFreq),
        other => Err(format!("expected tfidf or relfreq, got {other:?}")),
    }
}

fn parse_selector(s: &str) -> std::result::Result<Selector, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn base_config(common: &Common) -> Result<PipelineConfig> {
    let file = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    Ok(file.overlay(PipelineConfig {
        seed: common.seed,
        out_dir: common.out_dir.clone(),
        ..Default::default()
    }))
}

fn corpus_flags(c: &CorpusArgs) -> PipelineConfig {
    PipelineConfig {
        records: c.records.clone(),
        fvt: c.fvt.clone(),
        min_df: c.min_df,
        weighting: c.weighting,
        ..Default::default()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let unwritable = |source| Error::Unwritable {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(unwritable)?;
    }
    File::create(path).map(BufWriter::new).map_err(unwritable)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_records(path: &Path) -> Result<Vec<CallCountRecord>> {
    read_jsonl(open(path)?)
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf> {
    value
        .as_ref()
        .ok_or_else(|| Error::Config(format!("--{flag} is required (or set it in --config)")))
}

/// Feature table for selection and evaluation, plus the table the z-test
/// reads (the same table unless relative frequencies were requested).
fn load_tables(cfg: &PipelineConfig) -> Result<(FeatureVectorTable, FeatureVectorTable)> {
    let opts = cfg.fvt_options()?;
    match (&cfg.records, &cfg.fvt) {
        (Some(_), Some(_)) => Err(Error::Config("give either records or fvt, not both".into())),
        (Some(path), None) => {
            let records = read_records(path)?;
            for class in Label::ALL {
                if !records.iter().any(|r| r.label == class) {
                    return Err(Error::SingleClass);
                }
            }
            let tfidf = FvtOptions {
                weighting: Weighting::TfIdf,
                ..opts.clone()
            };
            let fvt = build_fvt_with(&records, &tfidf)?;
            let z_table = match opts.weighting {
                Weighting::TfIdf => fvt.clone(),
                Weighting::RelFreq => build_fvt_with(&records, &opts)?,
            };
            Ok((fvt, z_table))
        }
        (None, Some(path)) => {
            if opts.weighting == Weighting::RelFreq {
                return Err(Error::Config("relfreq weighting needs --records, not a feature table".into()));
            }
            let fvt = FeatureVectorTable::read_csv(open(path)?)?;
            for class in Label::ALL {
                if !fvt.labels().contains(&class) {
                    return Err(Error::SingleClass);
                }
            }
            Ok((fvt.clone(), fvt))
        }
        (None, None) => Err(Error::Config("--records or --fvt is required".into())),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestReport {
    pub config: PipelineConfig,
    pub samples: usize,
    pub totals: ParseSummary,
    pub files: Vec<FileSummary>,
}

pub fn run_ingest(args: &IngestArgs) -> Result<Vec<PathBuf>> {
    let cfg = base_config(&args.common)?.overlay(PipelineConfig {
        manifest: args.manifest.clone(),
        ..Default::default()
    });
    let manifest_path = require(&cfg.manifest, "manifest")?;
    let corpus = ingest_corpus(&read_manifest(manifest_path)?)?;
    let out = cfg.out_path(args.out.as_deref(), "records.jsonl");
    let summary_path = cfg.out_path(args.summary.as_deref(), "ingest_summary.json");
    let mut writer = create(&out)?;
    write_jsonl(&corpus.records, &mut writer)?;
    writer.flush()?;
    let report = IngestReport {
        config: PipelineConfig {
            manifest: cfg.manifest.clone(),
            ..Default::default()
        },
        samples: corpus.records.len(),
        totals: corpus.line_totals(),
        files: corpus.summaries,
    };
    write_json(&summary_path, &report)?;
    Ok(vec![out, summary_path])
}

pub fn run_featurize(args: &FeaturizeArgs) -> Result<Vec<PathBuf>> {
    let cfg = base_config(&args.common)?.overlay(PipelineConfig {
        records: args.records.clone(),
        min_df: args.min_df,
        weighting: args.weighting,
        bins: args.bins,
        ..Default::default()
    });
    let records = read_records(require(&cfg.records, "records")?)?;
    let fvt = build_fvt_with(&records, &cfg.fvt_options()?)?;
    let out = cfg.out_path(args.out.as_deref(), "fvt.csv");
    let mut written = vec![out.clone()];
    let mut w = create(&out)?;
    fvt.write_csv(&mut w)?;
    w.flush()?;
    if let Some(path) = &args.bins_out {
        let mut w = create(path)?;
        discretize(&fvt)?.write_csv(&mut w)?;
        w.flush()?;
        written.push(path.clone());
    }
    if let (Some(manifest), Some(path)) = (&args.graph_manifest, &args.graph_out) {
        let rows = read_manifest(manifest)?;
        let mut w = create(path)?;
        for row in &rows {
            let seq = call_sequence(read_log_lines(&row.path)?);
            let features = graph_features_over(&row.sample_id, &seq, fvt.calls());
            serde_json::to_writer(&mut w, &features)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        written.push(path.clone());
    }
    Ok(written)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectReport {
    pub config: PipelineConfig,
    pub seed: u64,
    pub vocabulary_size: usize,
    #[serde(flatten)]
    pub selection: Selection,
}

pub fn run_select(args: &SelectArgs) -> Result<Vec<PathBuf>> {
    let cfg = base_config(&args.common)?
        .overlay(corpus_flags(&args.corpus))
        .overlay(PipelineConfig {
            method: args.method,
            alpha: args.alpha,
            z_crit: args.z_crit,
            sigma_as_stddev: args.sigma_as_stddev.then_some(true),
            top_k: args.top_k,
            ..Default::default()
        });
    let (fvt, z_table) = load_tables(&cfg)?;
    let method = cfg.method.unwrap_or(Selector::Rsst);
    let z_cfg = cfg.z_test()?;
    let top_k = cfg.top_k()?;
    let selection = select(&fvt, &z_table, method, &z_cfg, top_k)?;
    let opts = cfg.fvt_options()?;
    let report = SelectReport {
        config: PipelineConfig {
            records: cfg.records.clone(),
            fvt: cfg.fvt.clone(),
            min_df: cfg.records.as_ref().map(|_| opts.min_df),
            weighting: Some(opts.weighting),
            method: Some(method),
            alpha: Some(cfg.alpha.unwrap_or(config::DEFAULT_ALPHA)),
            z_crit: Some(z_cfg.z_crit),
            sigma_as_stddev: Some(z_cfg.sigma_as_stddev),
            top_k,
            seed: Some(cfg.seed()),
            ..Default::default()
        },
        seed: cfg.seed(),
        vocabulary_size: fvt.n_calls(),
        selection,
    };
    let out = cfg.out_path(args.out.as_deref(), "selection.json");
    write_json(&out, &report)?;
    Ok(vec![out])
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalFile {
    pub config: PipelineConfig,
    pub seed: u64,
    pub method: Selector,
    pub ordering: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

/// 10, 20, ... below `n`, then `n` itself.
pub fn default_lengths(n: usize) -> Vec<usize> {
    let mut lengths: Vec<usize> = (1..).map(|k| 10 * k).take_while(|&l| l < n).collect();
    lengths.push(n);
    lengths
}

pub fn run_eval(args: &EvalArgs) -> Result<Vec<PathBuf>> {
    let cfg = base_config(&args.common)?
        .overlay(corpus_flags(&args.corpus))
        .overlay(PipelineConfig {
            selection: args.selection.clone(),
            lengths: args.lengths.clone(),
            folds: args.folds,
            trees: args.trees,
            max_depth: args.max_depth,
            min_samples_split: args.min_samples_split,
            features_per_split: args.features_per_split,
            ..Default::default()
        });
    let cv = cfg.cv()?;
    let selection: SelectReport = read_json(require(&cfg.selection, "selection")?)?;
    let ranking = selection.selection.calls();
    if ranking.is_empty() {
        return Err(Error::Config("the selection's ranking is empty; nothing to evaluate".into()));
    }
    let lengths = cfg.lengths.clone().unwrap_or_else(|| default_lengths(ranking.len()));
    let (fvt, _) = load_tables(&PipelineConfig {
        weighting: None,
        ..cfg.clone()
    })?;
    let report = sweep(&fvt, &ranking, &lengths, &cv)?;
    let file = EvalFile {
        config: PipelineConfig {
            records: cfg.records.clone(),
            fvt: cfg.fvt.clone(),
            selection: cfg.selection.clone(),
            min_df: cfg.records.as_ref().map(|_| cfg.min_df.unwrap_or(1)),
            lengths: Some(lengths),
            folds: Some(cv.folds),
            trees: Some(cv.forest.trees),
            max_depth: Some(cv.forest.max_depth),
            min_samples_split: Some(cv.forest.min_samples_split),
            features_per_split: cv.forest.features_per_split,
            seed: Some(cv.forest.seed),
            ..Default::default()
        },
        seed: cv.forest.seed,
        method: selection.selection.method,
        ordering: selection.selection.ordering.clone(),
        report,
    };
    let out = cfg.out_path(args.out.as_deref(), "eval.json");
    write_json(&out, &file)?;
    let mut written = vec![out];
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        file.report.write_csv(&mut w)?;
        w.flush()?;
        written.push(path.clone());
    }
    Ok(written)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerKeyFile {
    pub spec: SynthSpec,
    #[serde(flatten)]
    pub key: AnswerKey,
}

pub fn run_synth(args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let cfg = base_config(&args.common)?;
    let seed = cfg.seed();
    let spec = match &args.spec {
        Some(path) => {
            let mut spec: SynthSpec = read_json(path)?;
            if args.common.seed.is_some() || cfg.seed.is_some() {
                spec.seed = seed;
            }
            spec
        }
        None => SynthSpec {
            base_mean: args.base_mean,
            ..SynthSpec::planted(
                args.samples_per_class,
                args.vocabulary_size,
                args.planted_malware,
                args.planted_benign,
                args.effect_size,
                args.noise_std,
                seed,
            )?
        },
    };
    let (records, key) = generate(&spec)?;
    let out = cfg.out_path(args.out.as_deref(), "records.jsonl");
    let key_path = cfg.out_path(args.answer_key.as_deref(), "answer_key.json");
    let mut w = create(&out)?;
    write_jsonl(&records, &mut w)?;
    w.flush()?;
    write_json(&key_path, &AnswerKeyFile { spec, key })?;
    Ok(vec![out, key_path])
}

pub fn run_oracle_check(args: &OracleArgs) -> Result<CheckReport> {
    let cfg = base_config(&args.common)?;
    if args.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let report = run_checks(args.trials, cfg.seed());
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    Ok(report)
}

/// Run one subcommand, returning the JSON line printed on success.
pub fn run(cli: &Cli) -> Result<serde_json::Value> {
    let written = match &cli.command {
        Command::Ingest(a) => run_ingest(a)?,
        Command::Featurize(a) => run_featurize(a)?,
        Command::Select(a) => run_select(a)?,
        Command::Eval(a) => run_eval(a)?,
        Command::Synth(a) => run_synth(a)?,
        Command::OracleCheck(a) => {
            let report = run_oracle_check(a)?;
            if !report.passed() {
                return Err(Error::Invariant(format!(
                    "rough-set code disagrees with the references: {}",
                    serde_json::to_string(&report)?
                )));
            }
            return Ok(serde_json::to_value(report)?);
        }
    };
    Ok(serde_json::json!({ "written": written }))
}

/// The object printed on stderr when a command fails.
pub fn error_json(err: &Error) -> serde_json::Value {
    serde_json::json!({ "error": { "kind": err.kind(), "message": err.to_string() } })
}
