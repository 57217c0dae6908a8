//! Command-line entry points: `match`, `eval` and `sweep`.

use crate::alignment::{Alignment, AlignmentError, Format};
use crate::config::{ConfigError, FileConfig};
use crate::embeddings::EmbeddingStore;
use crate::evaluation::{evaluate_alignment, load_query_pairs, Comparison, EvalError, EvaluationReport};
use crate::pipeline::{
    graph_id, run_pair, run_pair_with, MatchParams, MatchRunConfig, PipelineError, DEFAULT_LINK_THRESHOLD,
    DEFAULT_MAX_PATH_LENGTH,
};
use crate::rdf::{default_label_predicates, KnowledgeGraph, RdfError};
use crate::scalar::Scalar;
use crate::similarity::{SettingKind, SimilaritySetting};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Parser)]
#[command(name = "kgalign", version, about = "Complex ontology matching guided by SPARQL queries and label embeddings")]
pub struct Cli {
    /// Floating point width for embedding arithmetic.
    #[arg(long, global = true, env = "KGALIGN_PRECISION", value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "KGALIGN_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match the queries of a source graph against a target graph.
    Match(MatchArgs),
    /// Score an alignment with reference query pairs.
    Eval(EvalArgs),
    /// Run match and eval over a grid of parameters.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct MatchArgs {
    /// TOML file with defaults for any of these options.
    #[arg(long, env = "KGALIGN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Source graph file (.ttl, .nt) or directory of such files.
    #[arg(long, env = "KGALIGN_SOURCE")]
    pub source: Option<PathBuf>,
    #[arg(long, env = "KGALIGN_TARGET")]
    pub target: Option<PathBuf>,
    /// Directory of .rq query files.
    #[arg(long, env = "KGALIGN_QUERIES")]
    pub queries: Option<PathBuf>,
    /// Label embedding cache.
    #[arg(long, env = "KGALIGN_EMBEDDINGS")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, env = "KGALIGN_SETTING")]
    pub setting: Option<SettingKind>,
    #[arg(long, env = "KGALIGN_IGNORE_CASE")]
    pub ignore_case: bool,
    #[arg(long, env = "KGALIGN_THRESHOLD")]
    pub threshold: Option<f64>,
    /// Link instances by label embeddings when other methods fail.
    #[arg(long, env = "KGALIGN_IE")]
    pub ie: bool,
    #[arg(long, env = "KGALIGN_LINK_THRESHOLD")]
    pub link_threshold: Option<f64>,
    #[arg(long, env = "KGALIGN_MAX_PATH_LEN")]
    pub max_path_len: Option<usize>,
    /// Minimum correspondence confidence; defaults to the threshold.
    #[arg(long, env = "KGALIGN_MIN_SCORE")]
    pub min_score: Option<f64>,
    /// Output directory.
    #[arg(long, env = "KGALIGN_OUT")]
    pub out: Option<PathBuf>,
    /// Alignment formats to write (json, edoal).
    #[arg(long, env = "KGALIGN_FORMAT", value_delimiter = ',')]
    pub format: Vec<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    #[arg(long, env = "KGALIGN_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "KGALIGN_SOURCE")]
    pub source: Option<PathBuf>,
    #[arg(long, env = "KGALIGN_TARGET")]
    pub target: Option<PathBuf>,
    /// Directory of <id>.source.rq / <id>.target.rq pairs.
    #[arg(long, env = "KGALIGN_REFERENCES")]
    pub references: Option<PathBuf>,
    /// Alignment JSON file.
    #[arg(long)]
    pub alignment: Option<PathBuf>,
    /// Directory for the JSON report and text table.
    #[arg(long, env = "KGALIGN_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: MatchArgs,
    #[arg(long, env = "KGALIGN_REFERENCES")]
    pub references: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub settings: Option<Vec<SettingKind>>,
    #[arg(long, value_delimiter = ',')]
    pub link_thresholds: Option<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rdf(#[from] RdfError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn run(cli: Cli) -> ExitCode {
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let result = match cli.precision {
        Precision::F32 => dispatch::<f32>(&cli.command),
        Precision::F64 => dispatch::<f64>(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kgalign: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch<T: Scalar>(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Match(args) => cmd_match::<T>(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep::<T>(args),
    }
}

fn load_file(path: Option<&PathBuf>) -> Result<FileConfig, CliError> {
    Ok(match path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    })
}

fn unit_interval(name: &str, v: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

fn required(name: &str, v: Option<PathBuf>) -> Result<PathBuf, CliError> {
    v.ok_or_else(|| usage(format!("missing --{name}")))
}

/// Flags over file values over defaults.
pub fn resolve_match(args: &MatchArgs, file: &FileConfig) -> Result<MatchRunConfig, CliError> {
    let setting = SimilaritySetting {
        kind: args.setting.or(file.setting).unwrap_or(SettingKind::Baseline),
        ignore_case: args.ignore_case || file.ignore_case.unwrap_or(false),
        threshold: unit_interval("threshold", args.threshold.or(file.threshold).unwrap_or(0.5))?,
    };
    let params = MatchParams {
        setting,
        instance_embeddings: args.ie || file.ie.unwrap_or(false),
        link_threshold: unit_interval(
            "link-threshold",
            args.link_threshold.or(file.link_threshold).unwrap_or(DEFAULT_LINK_THRESHOLD),
        )?,
        max_path_length: args.max_path_len.or(file.max_path_len).unwrap_or(DEFAULT_MAX_PATH_LENGTH),
        min_score: args.min_score.or(file.min_score),
        label_predicates: file.label_predicates.clone().unwrap_or_else(default_label_predicates),
        linking_predicates: file
            .linking_predicates
            .clone()
            .unwrap_or_else(crate::linking::default_linking_predicates),
    };
    if params.max_path_length == 0 {
        return Err(usage("--max-path-len must be at least 1"));
    }
    let embeddings = args.embeddings.clone().or(file.embeddings.clone());
    if params.needs_embeddings() && embeddings.is_none() {
        let what = if params.setting.kind.uses_embeddings() {
            format!("the {} setting", params.setting.kind)
        } else {
            "--ie".to_string()
        };
        return Err(usage(format!("--embeddings is required for {what}")));
    }
    let formats = if !args.format.is_empty() {
        args.format.clone()
    } else {
        file.formats.clone().unwrap_or_else(|| vec![Format::Json])
    };
    Ok(MatchRunConfig {
        source: required("source", args.source.clone().or(file.source.clone()))?,
        target: required("target", args.target.clone().or(file.target.clone()))?,
        queries: required("queries", args.queries.clone().or(file.queries.clone()))?,
        embeddings,
        out: args.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        params,
        formats,
    })
}

fn cmd_match<T: Scalar>(args: &MatchArgs) -> Result<(), CliError> {
    let file = load_file(args.config.as_ref())?;
    let cfg = resolve_match(args, &file)?;
    let outcome = run_pair::<T>(&cfg)?;
    for path in &outcome.manifest.outputs {
        println!("{}", path.display());
    }
    println!(
        "{} correspondences, manifest {}",
        outcome.alignment.correspondences.len(),
        outcome.manifest_path.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let file = load_file(args.config.as_ref())?;
    let source = required("source", args.source.clone().or(file.source.clone()))?;
    let target = required("target", args.target.clone().or(file.target.clone()))?;
    let references = required(
        "references",
        args.references.clone().or(file.references.clone()).or(file.queries.clone()),
    )?;
    let alignment_path = required("alignment", args.alignment.clone())?;
    let lp = file.label_predicates.clone().unwrap_or_else(default_label_predicates);
    let gs = KnowledgeGraph::load_path(&source, &lp)?;
    let gt = KnowledgeGraph::load_path(&target, &lp)?;
    let pairs = load_query_pairs(&references)?;
    let alignment = Alignment::read(&alignment_path)?;
    let report = evaluate_alignment(&alignment, &pairs, &gs, &gt);
    print!("{}", report.table());
    if let Some(out) = args.out.clone().or(file.out.clone()) {
        create_dir(&out)?;
        let name = alignment_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let stem = name.strip_suffix(".json").unwrap_or(&name);
        write_file(&out.join(format!("{stem}.report.json")), &report.to_json())?;
        write_file(&out.join(format!("{stem}.report.txt")), &report.table())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub pair: String,
    pub config: String,
    pub setting: SettingKind,
    pub ignore_case: bool,
    pub link_threshold: Option<f64>,
    pub threshold: f64,
    pub correspondences: usize,
    pub coverage: BTreeMap<Comparison, f64>,
    pub precision: BTreeMap<Comparison, f64>,
}

impl SweepRow {
    pub fn fmeasure(&self) -> f64 {
        self.coverage[&Comparison::QueryFMeasure]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BestAtThreshold {
    pub threshold: f64,
    /// Index into `rows`.
    pub row: usize,
    pub fmeasure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigAverage {
    pub config: String,
    pub pairs: usize,
    pub coverage: BTreeMap<Comparison, f64>,
    pub precision: BTreeMap<Comparison, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Row with the highest query F-measure at each threshold; the first
    /// row wins ties.
    pub best_per_threshold: Vec<BestAtThreshold>,
    /// Per configuration: for each ontology pair the threshold with the
    /// best query F-measure, averaged over pairs.
    pub averages: Vec<ConfigAverage>,
}

fn mean_maps<'a>(maps: impl Iterator<Item = &'a BTreeMap<Comparison, f64>>) -> BTreeMap<Comparison, f64> {
    let mut n = 0usize;
    let mut sum: BTreeMap<Comparison, f64> = Comparison::ALL.iter().map(|&k| (k, 0.0)).collect();
    for m in maps {
        n += 1;
        for (k, v) in m {
            *sum.entry(*k).or_default() += v;
        }
    }
    if n > 0 {
        sum.values_mut().for_each(|v| *v /= n as f64);
    }
    sum
}

pub fn summarize(rows: Vec<SweepRow>, thresholds: &[f64]) -> SweepSummary {
    let mut best_per_threshold = Vec::new();
    for &t in thresholds {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in rows.iter().enumerate().filter(|(_, r)| r.threshold == t) {
            if best.is_none_or(|(_, f)| r.fmeasure() > f) {
                best = Some((i, r.fmeasure()));
            }
        }
        if let Some((row, fmeasure)) = best {
            best_per_threshold.push(BestAtThreshold { threshold: t, row, fmeasure });
        }
    }
    let mut by_config: BTreeMap<&str, BTreeMap<&str, &SweepRow>> = BTreeMap::new();
    for r in &rows {
        let slot = by_config.entry(&r.config).or_default().entry(&r.pair).or_insert(r);
        if r.fmeasure() > slot.fmeasure() {
            *slot = r;
        }
    }
    let averages = by_config
        .into_iter()
        .map(|(config, pairs)| ConfigAverage {
            config: config.to_string(),
            pairs: pairs.len(),
            coverage: mean_maps(pairs.values().map(|r| &r.coverage)),
            precision: mean_maps(pairs.values().map(|r| &r.precision)),
        })
        .collect();
    SweepSummary {
        rows,
        best_per_threshold,
        averages,
    }
}

impl SweepSummary {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let cols = |m: &BTreeMap<Comparison, f64>| Comparison::ALL.iter().map(|k| format!(" {:.3}", m[k])).collect::<String>();
        let heads: String = Comparison::ALL.iter().map(|k| format!(" {k}")).collect();
        out.push_str("best per threshold\n");
        for b in &self.best_per_threshold {
            let r = &self.rows[b.row];
            let _ = writeln!(out, "  {:<6} {:<24} {:<32} f-m. {:.3}", b.threshold, r.config, r.pair, b.fmeasure);
        }
        let _ = writeln!(out, "averages (query oriented:{heads} | precision oriented:{heads})");
        for a in &self.averages {
            let _ = writeln!(out, "  {:<24} pairs {:<3}{} |{}", a.config, a.pairs, cols(&a.coverage), cols(&a.precision));
        }
        out
    }
}

struct SweepPair {
    id: String,
    source: PathBuf,
    target: PathBuf,
    queries: PathBuf,
    references: PathBuf,
}

#[derive(Debug, Clone)]
struct Cell {
    config: String,
    params: MatchParams,
}

fn default_thresholds() -> Vec<f64> {
    (5..=10).map(|i| i as f64 / 10.0).collect()
}

fn nonempty<T>(name: &str, v: Vec<T>) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        Err(usage(format!("empty sweep grid: no {name}")))
    } else {
        Ok(v)
    }
}

fn cmd_sweep<T: Scalar>(args: &SweepArgs) -> Result<(), CliError> {
    let file = load_file(args.base.config.as_ref())?;
    let grid = file.sweep.clone().unwrap_or_default();
    let thresholds = nonempty(
        "thresholds",
        args.thresholds.clone().or(grid.thresholds).unwrap_or_else(default_thresholds),
    )?;
    for &t in &thresholds {
        unit_interval("thresholds", t)?;
    }
    let explicit = args.base.setting.or(file.setting);
    let settings = nonempty(
        "settings",
        args.settings
            .clone()
            .or(grid.settings)
            .unwrap_or_else(|| explicit.map_or_else(|| SettingKind::ALL.to_vec(), |s| vec![s])),
    )?;
    let base_ie = args.base.ie || file.ie.unwrap_or(false);
    let ie_options = nonempty("ie options", grid.ie.unwrap_or_else(|| vec![base_ie]))?;
    let base_ic = args.base.ignore_case || file.ignore_case.unwrap_or(false);
    let ic_options = nonempty("ignore_case options", grid.ignore_case.unwrap_or_else(|| vec![base_ic]))?;
    let link_thresholds = args
        .link_thresholds
        .clone()
        .or(grid.link_thresholds)
        .unwrap_or_else(|| vec![args.base.link_threshold.or(file.link_threshold).unwrap_or(DEFAULT_LINK_THRESHOLD)]);
    if ie_options.contains(&true) {
        nonempty("link thresholds", link_thresholds.clone())?;
    }

    // Resolve shared options once, with the most demanding setting so that
    // a missing cache is reported up front.
    let mut probe = args.base.clone();
    probe.setting = Some(*settings.iter().find(|s| s.uses_embeddings()).unwrap_or(&settings[0]));
    probe.ie = ie_options.contains(&true);
    probe.threshold = Some(thresholds[0]);
    let mut base_file = file.clone();
    if !file.pairs.is_empty() {
        let first = &file.pairs[0];
        base_file.source = base_file.source.or(Some(first.source.clone()));
        base_file.target = base_file.target.or(Some(first.target.clone()));
        base_file.queries = base_file.queries.or(first.queries.clone());
    }
    let base = resolve_match(&probe, &base_file)?;

    let references = args.references.clone().or(file.references.clone());
    let pairs: Vec<SweepPair> = if file.pairs.is_empty() {
        vec![SweepPair {
            id: format!("{}-{}", base.source_id(), base.target_id()),
            source: base.source.clone(),
            target: base.target.clone(),
            queries: base.queries.clone(),
            references: references.clone().unwrap_or_else(|| base.queries.clone()),
        }]
    } else {
        file.pairs
            .iter()
            .map(|p| {
                let queries = p.queries.clone().unwrap_or_else(|| base.queries.clone());
                SweepPair {
                    id: format!("{}-{}", graph_id(&p.source), graph_id(&p.target)),
                    source: p.source.clone(),
                    target: p.target.clone(),
                    references: p.references.clone().or(references.clone()).unwrap_or_else(|| queries.clone()),
                    queries,
                }
            })
            .collect()
    };

    let mut cells = Vec::new();
    for &kind in &settings {
        for &ic in &ic_options {
            for &ie in &ie_options {
                let links: Vec<Option<f64>> = if ie {
                    link_thresholds.iter().map(|&t| Some(t)).collect()
                } else {
                    vec![None]
                };
                for lt in links {
                    if let Some(t) = lt {
                        unit_interval("link-thresholds", t)?;
                    }
                    for &threshold in &thresholds {
                        let mut params = base.params.clone();
                        params.setting = SimilaritySetting {
                            kind,
                            ignore_case: ic,
                            threshold,
                        };
                        params.instance_embeddings = ie;
                        if let Some(t) = lt {
                            params.link_threshold = t;
                        }
                        let config = format!(
                            "{kind}{}{}",
                            if ic { "-ic" } else { "" },
                            lt.map(|t| format!("-ie{t}")).unwrap_or_default()
                        );
                        cells.push(Cell { config, params });
                    }
                }
            }
        }
    }

    let mut rows = Vec::new();
    for pair in &pairs {
        let lp = &base.params.label_predicates;
        let gs = KnowledgeGraph::load_path(&pair.source, lp)?;
        let gt = KnowledgeGraph::load_path(&pair.target, lp)?;
        let refs = load_query_pairs(&pair.references)?;
        let mut stores: BTreeMap<bool, EmbeddingStore<T>> = BTreeMap::new();
        if cells.iter().any(|c| c.params.needs_embeddings()) {
            let path = base.embeddings.as_ref().expect("checked when resolving");
            for &ic in &ic_options {
                let store = EmbeddingStore::load(path, ic).map_err(|source| PipelineError::Embeddings {
                    path: path.clone(),
                    source,
                })?;
                stores.insert(ic, store);
            }
        }
        let results: Vec<Result<SweepRow, CliError>> = cells
            .par_iter()
            .map(|cell| {
                let cfg = MatchRunConfig {
                    source: pair.source.clone(),
                    target: pair.target.clone(),
                    queries: pair.queries.clone(),
                    embeddings: base.embeddings.clone(),
                    out: base.out.join(&pair.id).join(&cell.config),
                    params: cell.params.clone(),
                    formats: base.formats.clone(),
                };
                let store = cell
                    .params
                    .needs_embeddings()
                    .then(|| stores.get(&cell.params.setting.ignore_case))
                    .flatten();
                let outcome = run_pair_with(&cfg, &gs, &gt, store)?;
                let report = evaluate_alignment(&outcome.alignment, &refs, &gs, &gt);
                let stem = outcome.alignment.file_stem();
                write_file(&cfg.out.join(format!("{stem}.report.json")), &report.to_json())?;
                Ok(row(pair, cell, &outcome.alignment, &report))
            })
            .collect();
        for r in results {
            rows.push(r?);
        }
    }
    let summary = summarize(rows, &thresholds);
    create_dir(&base.out)?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_file(&base.out.join("sweep-summary.json"), &json)?;
    write_file(&base.out.join("sweep-summary.txt"), &summary.table())?;
    print!("{}", summary.table());
    Ok(())
}

fn row(pair: &SweepPair, cell: &Cell, alignment: &Alignment, report: &EvaluationReport) -> SweepRow {
    SweepRow {
        pair: pair.id.clone(),
        config: cell.config.clone(),
        setting: cell.params.setting.kind,
        ignore_case: cell.params.setting.ignore_case,
        link_threshold: cell.params.instance_embeddings.then_some(cell.params.link_threshold),
        threshold: cell.params.setting.threshold,
        correspondences: alignment.correspondences.len(),
        coverage: report.coverage.clone(),
        precision: report.precision.clone(),
    }
}
