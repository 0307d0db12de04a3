//! Batch command-line driver.
//!
//! Every command writes its machine-readable output as JSON lines and a
//! `<out>.manifest.json` next to it. Exit codes: 0 success, 1 data error,
//! 2 usage or configuration error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::clustering::DEFAULT_SILHOUETTE_FLOOR;
use crate::corpus::{self, Corpus, SynthConfig};
use crate::engine::{
    self, ClusterSource, ContinuousUtility, CutoffDelta, CutoffMode, Grid, MbrResult, Method, MixtureSpec,
};
use crate::error::{Error, Result};
use crate::metrics;
use crate::tuning::{self, LabelledSet, SweepConfig};
use crate::utility::{self, EmbeddingSet, UtilityBackend, UtilityMatrix};

#[derive(Debug, Parser)]
#[command(name = "structmbr", version, about = "Structure-aware MBR decoding and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select a candidate per outcome space.
    Decode(DecodeArgs),
    /// Decode and report cluster optimality (CO) and rank correlation (CORC).
    Eval(DecodeArgs),
    /// Tune a cut-off or cosine threshold on train, confirm on validation.
    Sweep(SweepArgs),
    /// Generate a synthetic labelled corpus.
    GenSynth(GenSynthArgs),
    /// Split a corpus into train/validation/test files.
    Split(SplitArgs),
    /// Expected-utility curve for a two-component Gaussian mixture.
    DemoContinuous(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodName {
    Standard,
    Cutoff,
    Cluster,
    Embed,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Corpus file (JSON lines).
    #[arg(long)]
    corpus: PathBuf,
    /// Directory of `<space id>.umat.{json,bin}` files; computed from --utility when absent.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Directory of `<space id>.emb.{json,bin}` files.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Built-in utility: token-f1 or char-ngram.
    #[arg(long, default_value = "token-f1")]
    utility: String,
    #[arg(long, default_value_t = 6)]
    ngram_order: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Debug, Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value = "standard")]
    method: MethodName,
    /// Cut-off threshold [default: 0.512 for BLEURT matrices, else 0.918].
    #[arg(long)]
    tau: Option<f64>,
    /// Replacement for cut comparisons: a number or `drop`.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    delta: String,
    /// absolute or deviation-from-max.
    #[arg(long, default_value = "absolute")]
    cutoff_mode: String,
    /// Rescaled-cosine threshold for the embed method, or `none`.
    #[arg(long, default_value = "0.918")]
    cos_threshold: String,
    /// Use annotated labels as clusters instead of k-means on embeddings.
    #[arg(long)]
    gold_clusters: bool,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long, default_value_t = DEFAULT_SILHOUETTE_FLOOR)]
    silhouette_floor: f64,
    /// Exclude self-comparisons (default depends on the method).
    #[arg(long)]
    exclude_self: Option<bool>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also print a human-readable table.
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SweepTarget {
    Cutoff,
    Cosine,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Validation corpus; when absent --corpus is split with --fractions.
    #[arg(long)]
    val_corpus: Option<PathBuf>,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    fractions: String,
    #[arg(long, value_enum, default_value = "cutoff")]
    target: SweepTarget,
    /// Threshold range `lo,hi`; data-driven when absent.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = tuning::DEFAULT_GRID_STEPS)]
    grid_steps: usize,
    /// Comma-separated cut-off modes.
    #[arg(long, default_value = "absolute,deviation_from_max")]
    modes: String,
    /// Comma-separated replacements (numbers or `drop`).
    #[arg(long, default_value = "0,-1,drop", allow_hyphen_values = true)]
    deltas: String,
    #[arg(long, default_value_t = tuning::DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Args)]
struct GenSynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    n_spaces: usize,
    /// Clusters per space, `lo-hi`.
    #[arg(long, default_value = "2-4")]
    clusters: String,
    #[arg(long, default_value_t = 5)]
    per_cluster: usize,
    #[arg(long, default_value_t = 12)]
    vocab: usize,
    #[arg(long, default_value_t = 6)]
    shared_vocab: usize,
    /// Tokens per candidate, `lo-hi`.
    #[arg(long, default_value = "8-12")]
    tokens: String,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long)]
    compromise: bool,
    /// Also write label-aligned synthetic embeddings to this directory.
    #[arg(long)]
    emit_embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    embedding_dim: usize,
    #[arg(long, default_value_t = 0.3)]
    embedding_spread: f64,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    fractions: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving train.jsonl, val.jsonl and test.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long, default_value = "0.7,0.3", allow_hyphen_values = true)]
    weights: String,
    #[arg(long, default_value = "-2,3", allow_hyphen_values = true)]
    means: String,
    #[arg(long, default_value = "1,1")]
    stds: String,
    /// neg-squared-error or rbf.
    #[arg(long, default_value = "neg-squared-error")]
    utility: String,
    #[arg(long, default_value_t = 1.0)]
    bandwidth: f64,
    /// Grid `lo,hi,steps`; defaults to the means +- 6 stds with 10001 points.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Write the curve as JSON lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decode(args) => with_workers(args.data.workers, || cmd_decode(&args, false)),
        Command::Eval(args) => with_workers(args.data.workers, || cmd_decode(&args, true)),
        Command::Sweep(args) => with_workers(args.data.workers, || cmd_sweep(&args)),
        Command::GenSynth(args) => cmd_gen_synth(&args),
        Command::Split(args) => cmd_split(&args),
        Command::DemoContinuous(args) => cmd_demo(&args),
    }
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|_| Error::config(format!("invalid {what}: {s:?}")))).collect()
}

fn parse_pair<T: std::str::FromStr + Copy>(s: &str, what: &str) -> Result<[T; 2]> {
    let v: Vec<T> = parse_list(s, what)?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::config(format!("{what} needs exactly two values, got {s:?}"))),
    }
}

fn parse_range(s: &str, what: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split('-').collect();
    let parse = |p: &str| p.trim().parse::<usize>().map_err(|_| Error::config(format!("invalid {what}: {s:?}")));
    match parts.as_slice() {
        [one] => parse(one).map(|v| (v, v)),
        [lo, hi] => Ok((parse(lo)?, parse(hi)?)),
        _ => Err(Error::config(format!("invalid {what}: {s:?}"))),
    }
}

fn parse_fractions(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = parse_list(s, "fractions")?;
    <[f64; 3]>::try_from(v).map_err(|_| Error::config(format!("fractions need three values, got {s:?}")))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hashes the listed files in order into a single digest.
fn sha256_files(paths: &[PathBuf]) -> Result<String> {
    let mut hasher = Sha256::new();
    for p in paths {
        hasher.update(sha256_file(p)?.as_bytes());
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

struct ManifestBuilder {
    command: String,
    started_at: String,
    inputs: serde_json::Map<String, Value>,
}

impl ManifestBuilder {
    fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            started_at: chrono::Utc::now().to_rfc3339(),
            inputs: serde_json::Map::new(),
        }
    }

    fn input(&mut self, name: &str, path: &Path, digest: String) {
        self.inputs.insert(name.into(), json!({ "path": path.display().to_string(), "sha256": digest }));
    }

    fn write(self, out: &Path, config: Value, seed: Option<u64>, outputs: &[&Path]) -> Result<()> {
        let manifest = RunManifest {
            command: self.command,
            config,
            inputs: Value::Object(self.inputs),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let path = manifest_path(out);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Inputs resolved for one corpus: matrices and (optionally) embeddings.
struct Loaded {
    corpus: Corpus,
    matrices: Vec<UtilityMatrix>,
    embeddings: Option<Vec<EmbeddingSet>>,
}

fn load_inputs(data: &DataArgs, corpus_path: &Path, manifest: &mut ManifestBuilder, tag: &str) -> Result<Loaded> {
    let corpus = corpus::load_corpus(corpus_path)?;
    manifest.input(&format!("{tag}corpus"), corpus_path, sha256_file(corpus_path)?);
    let matrices = match &data.matrix {
        Some(dir) => {
            let mut files = Vec::new();
            let mut out = Vec::with_capacity(corpus.len());
            for space in &corpus.spaces {
                let base = dir.join(&space.id);
                let m = utility::load_matrix(&base)?;
                if m.n() != space.len() {
                    return Err(Error::data(format!(
                        "space {}: matrix has n = {}, space has {} candidates",
                        space.id,
                        m.n(),
                        space.len()
                    )));
                }
                let (meta, bin) = utility::matrix_paths(&base);
                files.extend([meta, bin]);
                out.push(m);
            }
            manifest.input(&format!("{tag}matrices"), dir, sha256_files(&files)?);
            out
        }
        None => {
            let backend = UtilityBackend::from_name(&data.utility, data.ngram_order, data.beta)?;
            use rayon::prelude::*;
            corpus.spaces.par_iter().map(|s| utility::build_utility_matrix(s, &backend)).collect::<Result<_>>()?
        }
    };
    let embeddings = match &data.embeddings {
        Some(dir) => {
            let mut files = Vec::new();
            let mut out = Vec::with_capacity(corpus.len());
            for space in &corpus.spaces {
                let base = dir.join(&space.id);
                let e = utility::load_embeddings(&base, true)?;
                if e.n() != space.len() {
                    return Err(Error::data(format!(
                        "space {}: embeddings have n = {}, space has {} candidates",
                        space.id,
                        e.n(),
                        space.len()
                    )));
                }
                let (meta, bin) = utility::embedding_paths(&base);
                files.extend([meta, bin]);
                out.push(e);
            }
            manifest.input(&format!("{tag}embeddings"), dir, sha256_files(&files)?);
            Some(out)
        }
        None => None,
    };
    Ok(Loaded { corpus, matrices, embeddings })
}

fn resolve_method(args: &MethodArgs, have_embeddings: bool) -> Result<Method> {
    let method = match args.method {
        MethodName::Standard => Method::Standard { exclude_self: args.exclude_self.unwrap_or(false) },
        MethodName::Cutoff => {
            if args.exclude_self == Some(false) {
                return Err(Error::config("the cutoff method always excludes self-comparisons"));
            }
            Method::Cutoff {
                tau: args.tau.unwrap_or(engine::DEFAULT_CUTOFF_TAU),
                delta: args.delta.parse::<CutoffDelta>()?,
                mode: args.cutoff_mode.parse::<CutoffMode>()?,
            }
        }
        MethodName::Cluster => {
            let clusters = if args.gold_clusters {
                ClusterSource::Gold
            } else if have_embeddings {
                ClusterSource::Kmeans {
                    k_min: args.k_min,
                    k_max: args.k_max,
                    silhouette_floor: args.silhouette_floor,
                    seed: args.seed,
                }
            } else {
                return Err(Error::config("method cluster needs --embeddings or --gold-clusters"));
            };
            Method::Cluster { clusters, exclude_self: args.exclude_self.unwrap_or(true) }
        }
        MethodName::Embed => {
            if !have_embeddings {
                return Err(Error::config("method embed needs --embeddings"));
            }
            let cos_threshold = match args.cos_threshold.as_str() {
                "none" => None,
                t => Some(t.parse::<f64>().map_err(|_| Error::config(format!("invalid --cos-threshold {t:?}")))?),
            };
            Method::Embed { cos_threshold, exclude_self: args.exclude_self.unwrap_or(true) }
        }
    };
    Ok(method)
}

#[derive(Serialize)]
struct DecodeRecord<'a> {
    id: &'a str,
    #[serde(flatten)]
    result: &'a MbrResult,
}

fn decode_table(corpus: &Corpus, results: &[MbrResult]) -> String {
    let mut out = format!("{:<24} {:>8} {:>10}  {}\n", "space", "selected", "score", "text");
    for (space, r) in corpus.spaces.iter().zip(results) {
        let text: String = space.candidates[r.selected].text.chars().take(48).collect();
        out.push_str(&format!("{:<24} {:>8} {:>10.4}  {}\n", space.id, r.selected, r.scores[r.selected], text));
    }
    out
}

fn cmd_decode(args: &DecodeArgs, evaluate: bool) -> Result<()> {
    // Check method preconditions before touching any data.
    let method = resolve_method(&args.method, args.data.embeddings.is_some())?;
    let name = if evaluate { "eval" } else { "decode" };
    let mut manifest = ManifestBuilder::new(name);
    let loaded = load_inputs(&args.data, &args.data.corpus, &mut manifest, "")?;
    let mut method = method;
    if let (Method::Cutoff { tau, .. }, None, Some(m)) = (&mut method, args.method.tau, loaded.matrices.first()) {
        *tau = engine::default_cutoff_tau(m.kind());
    }
    let embeddings = loaded.embeddings.as_deref().filter(|_| method.needs_embeddings());

    let results = metrics::decode_corpus(&loaded.corpus, &loaded.matrices, embeddings, &method)?;
    let mut w = create(&args.out)?;
    if evaluate {
        let mut report =
            metrics::evaluate(&loaded.corpus, &loaded.matrices, &results, &metrics::MetricConfig::for_method(&method))?;
        report.method = method.name().to_string();
        report.write_jsonl(&mut w).map_err(|e| Error::io(&args.out, e))?;
        if args.pretty {
            print!("{}", report.to_table());
        }
    } else {
        for (space, result) in loaded.corpus.spaces.iter().zip(&results) {
            serde_json::to_writer(&mut w, &DecodeRecord { id: &space.id, result })
                .map_err(|e| Error::Json { path: args.out.clone(), source: e })?;
            w.write_all(b"\n").map_err(|e| Error::io(&args.out, e))?;
        }
        if args.pretty {
            print!("{}", decode_table(&loaded.corpus, &results));
        }
    }
    finish(&args.out, w)?;
    let config = json!({
        "method": method,
        "exclude_self": method.exclude_self(),
        "utility": if args.data.matrix.is_some() { Value::Null } else { json!(args.data.utility) },
        "workers": args.data.workers,
    });
    manifest.write(&args.out, config, Some(args.method.seed), &[&args.out])
}

fn labelled_set(l: &Loaded) -> LabelledSet<'_> {
    let set = LabelledSet::new(&l.corpus, &l.matrices);
    match &l.embeddings {
        Some(e) => set.with_embeddings(e),
        None => set,
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("sweep");
    if args.target == SweepTarget::Cosine && args.data.embeddings.is_none() {
        return Err(Error::config("sweep --target cosine needs --embeddings"));
    }
    let modes: Vec<CutoffMode> = args.modes.split(',').map(|m| m.trim().parse()).collect::<Result<_>>()?;
    let deltas: Vec<CutoffDelta> = args.deltas.split(',').map(|d| d.trim().parse()).collect::<Result<_>>()?;
    let fractions = parse_fractions(&args.fractions)?;

    let full = load_inputs(&args.data, &args.data.corpus, &mut manifest, "")?;
    let (train_idx, val_idx, val_loaded) = match &args.val_corpus {
        Some(path) => {
            let val = load_inputs(&args.data, path, &mut manifest, "val_")?;
            ((0..full.corpus.len()).collect::<Vec<_>>(), Vec::new(), Some(val))
        }
        None => {
            let (train, val, _) = corpus::split_corpus(&full.corpus, fractions, args.seed)?;
            let index = |c: &Corpus| -> Vec<usize> {
                c.spaces
                    .iter()
                    .map(|s| full.corpus.spaces.iter().position(|f| f.id == s.id).expect("split keeps ids"))
                    .collect()
            };
            (index(&train), index(&val), None)
        }
    };
    let pick = |src: &Loaded, idx: &[usize]| Loaded {
        corpus: Corpus {
            spaces: idx.iter().map(|&i| src.corpus.spaces[i].clone()).collect(),
            provenance: src.corpus.provenance.clone(),
        },
        matrices: idx.iter().map(|&i| src.matrices[i].clone()).collect(),
        embeddings: src.embeddings.as_ref().map(|e| idx.iter().map(|&i| e[i].clone()).collect()),
    };
    let train = pick(&full, &train_idx);
    let val = val_loaded.unwrap_or_else(|| pick(&full, &val_idx));

    let (train_set, val_set) = (labelled_set(&train), labelled_set(&val));

    let mut cfg = match (&args.grid, args.target) {
        (Some(range), _) => {
            let [lo, hi] = parse_pair::<f64>(range, "grid")?;
            SweepConfig::absolute(tuning::linspace(lo, hi, args.grid_steps))
        }
        (None, SweepTarget::Cutoff) => SweepConfig::data_driven(&train.matrices, args.grid_steps)?,
        (None, SweepTarget::Cosine) => {
            SweepConfig::data_driven_cosine(train.embeddings.as_deref().unwrap_or_default(), args.grid_steps)?
        }
    };
    cfg.modes = modes;
    cfg.deltas = deltas;
    cfg.top_k = args.top_k;

    let result = match args.target {
        SweepTarget::Cutoff => tuning::sweep_cutoff(&train_set, &val_set, &cfg)?,
        SweepTarget::Cosine => tuning::sweep_cosine_threshold(&train_set, &val_set, &cfg)?,
    };
    let mut w = create(&args.out)?;
    result.write_jsonl(&mut w).map_err(|e| Error::io(&args.out, e))?;
    finish(&args.out, w)?;
    if args.pretty {
        println!(
            "chosen {:?}: train CO {:.4}, validation CO {:.4} ({} settings, top {})",
            result.chosen.setting,
            result.chosen.train_co,
            result.chosen_val_co(),
            result.ranked.len(),
            result.top_k
        );
    }
    let config = json!({
        "target": args.target,
        "sweep": cfg,
        "fractions": fractions,
        "val_corpus": args.val_corpus,
        "train_spaces": train.corpus.len(),
        "val_spaces": val.corpus.len(),
    });
    manifest.write(&args.out, config, Some(args.seed), &[&args.out])
}

fn cmd_gen_synth(args: &GenSynthArgs) -> Result<()> {
    let manifest = ManifestBuilder::new("gen-synth");
    let cfg = SynthConfig {
        n_spaces: args.n_spaces,
        clusters_per_space: parse_range(&args.clusters, "--clusters")?,
        candidates_per_cluster: args.per_cluster,
        vocab_per_cluster: args.vocab,
        shared_vocab: args.shared_vocab,
        tokens_per_candidate: parse_range(&args.tokens, "--tokens")?,
        noise_rate: args.noise,
        separation: args.separation,
        include_compromise: args.compromise,
        seed: args.seed,
    };
    let corpus = corpus::generate_synthetic(&cfg)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    corpus::save_corpus(&corpus, &args.out)?;
    let mut outputs: Vec<&Path> = vec![&args.out];
    if let Some(dir) = &args.emit_embeddings {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, space) in corpus.spaces.iter().enumerate() {
            let e =
                corpus::synthetic_embeddings(space, args.embedding_dim, args.embedding_spread, args.seed ^ (i as u64))?;
            utility::save_embeddings(&e, dir.join(&space.id))?;
        }
        outputs.push(dir);
    }
    let config = json!({
        "synth": cfg,
        "embedding_dim": args.embedding_dim,
        "embedding_spread": args.embedding_spread,
    });
    manifest.write(&args.out, config, Some(args.seed), &outputs)
}

fn cmd_split(args: &SplitArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("split");
    let fractions = parse_fractions(&args.fractions)?;
    let corpus = corpus::load_corpus(&args.corpus)?;
    manifest.input("corpus", &args.corpus, sha256_file(&args.corpus)?);
    let (train, val, test) = corpus::split_corpus(&corpus, fractions, args.seed)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let paths = ["train.jsonl", "val.jsonl", "test.jsonl"].map(|f| args.out_dir.join(f));
    for (part, path) in [&train, &val, &test].into_iter().zip(&paths) {
        corpus::save_corpus(part, path)?;
    }
    let config = json!({ "fractions": fractions, "sizes": [train.len(), val.len(), test.len()] });
    let outputs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    manifest.write(&paths[0], config, Some(args.seed), &outputs)
}

fn cmd_demo(args: &DemoArgs) -> Result<()> {
    let manifest = ManifestBuilder::new("demo-continuous");
    let mix = MixtureSpec::new(
        parse_pair(&args.weights, "--weights")?,
        parse_pair(&args.means, "--means")?,
        parse_pair(&args.stds, "--stds")?,
    )?;
    let utility = match args.utility.replace('_', "-").as_str() {
        "neg-squared-error" => ContinuousUtility::NegSquaredError,
        "rbf" => ContinuousUtility::Rbf { bandwidth: args.bandwidth },
        other => return Err(Error::config(format!("unknown continuous utility {other:?}"))),
    };
    let grid = match &args.grid {
        Some(text) => {
            let parts: Vec<&str> = text.split(',').collect();
            let [lo, hi, steps] = parts.as_slice() else {
                return Err(Error::config(format!("--grid needs lo,hi,steps, got {text:?}")));
            };
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::config(format!("invalid --grid {text:?}")));
            let steps = steps.trim().parse::<usize>().map_err(|_| Error::config(format!("invalid --grid {text:?}")))?;
            Grid { lo: num(lo)?, hi: num(hi)?, steps }
        }
        None => Grid::covering(&mix, 10_001),
    };
    let demo = engine::demo_continuous(&mix, utility, grid)?;
    // Avoid printing "-0.000".
    let shown = if demo.optimum.abs() < 5e-4 { 0.0 } else { demo.optimum };
    println!("optimum: {shown:.3}");
    println!("grid step: {:.6}", demo.grid_step);
    println!("mixture mean: {:.3}", mix.mean());
    if let Some(out) = &args.out {
        let mut w = create(out)?;
        for (h, v) in &demo.curve {
            writeln!(w, "{}", json!({ "h": h, "expected_utility": v })).map_err(|e| Error::io(out, e))?;
        }
        finish(out, w)?;
        let config = json!({ "mixture": mix, "utility": utility, "grid": grid, "optimum": demo.optimum });
        manifest.write(out, config, None, &[out])?;
    }
    Ok(())
}
