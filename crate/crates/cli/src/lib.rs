//! The `hrli` command line: prepare datasets, train scorers, evaluate them
//! directly or through score dumps, and render comparison tables.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use hrli::corpus::{
    build_sessions, ingest_path, k_core_filter, split_leave_one_out, stats, CoreMode,
    DatasetStats, IngestOptions, SplitDataset, DEFAULT_MAX_LEN, DEFAULT_MIN_COUNT,
};
use hrli::dump::{DumpMode, ScoreDump};
use hrli::eval::{evaluate, EvalCase, HistoryMasked, MetricReport, RankingConfig};
use hrli::models::{
    train, AttnDims, AttnNet, Checkpoint, GruNet, ModelKind, ParamSet, ScorerSpec, TrainConfig,
    DEFAULT_SEED,
};
use hrli::numerics::{finite_diff_check, GradCheckReport, Rng};
use hrli::report::{render, TableFormat};
use hrli::synth::{generate, SynthConfig};
use hrli::{Error, ErrorClass, Result};

pub use config::{parse_list, ConfigFile};

pub const MANIFEST_FORMAT: &str = "hrli-manifest/1";
pub const STATS_FORMAT: &str = "hrli-stats/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "hrli", version, about = "Measure recency bias of sequential recommenders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest, filter and split an interaction log.
    Prep(PrepArgs),
    /// Fit or train a scorer on a prepared dataset.
    Train(TrainArgs),
    /// Compute the metric report for a checkpoint or a score dump.
    Eval(EvalArgs),
    /// Write the scores of a checkpoint as a score dump.
    Dump(DumpArgs),
    /// Render metric reports side by side.
    Report(ReportArgs),
    /// Generate a synthetic interaction log.
    Simulate(SimulateArgs),
    /// Compare analytic and finite-difference gradients of a small model.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Plain-text key=value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Field separator: a literal string, `tab` or `comma`.
    #[arg(long)]
    pub delimiter: Option<String>,
    #[arg(long)]
    pub has_header: bool,
    /// Zero-based user,item,timestamp column positions.
    #[arg(long)]
    pub columns: Option<String>,
    #[arg(long)]
    pub min_count: Option<usize>,
    /// One filtering pass instead of iterating to the k-core.
    #[arg(long)]
    pub single_pass: bool,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Name recorded in the manifest; defaults to the input file stem.
    #[arg(long)]
    pub dataset_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `prep`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// pop, markov, gru or attn.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub eval_k: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub n_heads: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub markov_alpha: Option<f64>,
    /// Positional table size of the attention model; defaults to the
    /// dataset's max_len.
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, conflicts_with = "dump", required_unless_present = "dump")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// train, valid or test.
    #[arg(long)]
    pub split: Option<String>,
    /// Comma-separated cutoffs.
    #[arg(long)]
    pub ks: Option<String>,
    /// Also compute the metrics with the last item masked.
    #[arg(long)]
    pub mask_last: bool,
    #[arg(long)]
    pub exclude_gt_equals_last: bool,
    /// Push earlier prefix items to the bottom of the ranking.
    #[arg(long)]
    pub mask_history: bool,
    /// Column name in reports; defaults to the model kind or dump file stem.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub split: Option<String>,
    /// scores or topm.
    #[arg(long)]
    pub mode: Option<String>,
    /// List length in topm mode.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metric report JSON files, one column each.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// tsv, markdown or json.
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub len_min: Option<usize>,
    #[arg(long)]
    pub len_max: Option<usize>,
    #[arg(long)]
    pub p_repeat: Option<f64>,
    #[arg(long)]
    pub zipf_s: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// gru or attn.
    #[arg(long, default_value = "gru")]
    pub model: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub items: usize,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub n_heads: usize,
    #[arg(long, default_value_t = 4)]
    pub prefix_len: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

/// Everything needed to redo a run, written next to each artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tool_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_id: Option<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub settings: serde_json::Value,
}

impl RunManifest {
    fn new(command: &str, inputs: &[&Path], outputs: &[&Path], settings: serde_json::Value) -> Self {
        let show = |ps: &[&Path]| ps.iter().map(|p| p.display().to_string()).collect();
        RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            dataset_id: None,
            inputs: show(inputs),
            outputs: show(outputs),
            settings,
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Manifest path for an artifact: `manifest.json` inside directories,
/// `<file>.manifest.json` next to files.
pub fn manifest_path(artifact: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        artifact.join("manifest.json")
    } else {
        let mut name = artifact.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        artifact.with_file_name(name)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn settings<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(value)?)
}

/// Exit status for an error: 1 usage, 2 data, 3 numeric.
pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numeric => 3,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prep(a) => cmd_prep(&a).map(|_| ()),
        Command::Train(a) => cmd_train(&a).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Dump(a) => cmd_dump(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a).map(|_| ()),
    }
}

fn delimiter(raw: &str) -> String {
    match raw {
        "tab" | "\\t" => "\t".to_string(),
        "comma" => ",".to_string(),
        other => other.to_string(),
    }
}

#[derive(Debug, Serialize)]
struct PrepSettings<'a> {
    ingest: &'a IngestOptions,
    min_count: usize,
    core_mode: CoreMode,
    max_len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsFile {
    pub format: String,
    pub raw_interactions: usize,
    pub filtered_interactions: usize,
    #[serde(flatten)]
    pub stats: DatasetStats,
}

pub fn cmd_prep(a: &PrepArgs) -> Result<DatasetStats> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let mut ingest_opts = IngestOptions::tsv();
    ingest_opts.delimiter = delimiter(&cfg.pick(a.delimiter.clone(), "delimiter", "\t".into())?);
    ingest_opts.has_header = cfg.switch(a.has_header, "has-header")?;
    if let Some(cols) = cfg.pick_opt(a.columns.clone(), "columns")? {
        let cols: Vec<usize> = parse_list(&cols)?;
        ingest_opts.columns = cols.try_into().map_err(|c: Vec<usize>| {
            Error::Config(format!("--columns needs three positions, got {}", c.len()))
        })?;
    }
    let min_count = cfg.pick(a.min_count, "min-count", DEFAULT_MIN_COUNT)?;
    let mode = if cfg.switch(a.single_pass, "single-pass")? {
        CoreMode::SinglePass
    } else {
        CoreMode::Fixpoint
    };
    let max_len = cfg.pick(a.max_len, "max-len", DEFAULT_MAX_LEN)?;
    let dataset_id = cfg.pick_opt(a.dataset_id.clone(), "dataset-id")?;
    cfg.finish()?;

    let ctx = |e: Error| match e {
        Error::Parse { line, msg } => Error::Data(format!("{}:{line}: {msg}", a.input.display())),
        other => other,
    };
    let raw = ingest_path(&a.input, &ingest_opts).map_err(ctx)?;
    if raw.is_empty() {
        return Err(Error::Data(format!("no interactions in {}", a.input.display())));
    }
    let filtered = k_core_filter(&raw, min_count, mode)?;
    if let Some(w) = &filtered.warning {
        warn!("{w}");
    }
    let (store, catalog) = build_sessions(&filtered.log);
    if store.sessions.is_empty() {
        return Err(Error::Data(format!(
            "no sessions of length >= 3 remain after {min_count}-core filtering"
        )));
    }
    let split = split_leave_one_out(&store, catalog.n_items(), max_len)?;
    let st = stats(&filtered.log, &catalog)?;
    info!("{st}");

    fs::create_dir_all(&a.out)?;
    split.write_dir(&a.out)?;
    catalog.write_tsv(io::BufWriter::new(fs::File::create(a.out.join("catalog.tsv"))?))?;
    write_json(
        &a.out.join("stats.json"),
        &StatsFile {
            format: STATS_FORMAT.to_string(),
            raw_interactions: raw.len(),
            filtered_interactions: filtered.log.len(),
            stats: st.clone(),
        },
    )?;
    let mut manifest = RunManifest::new(
        "prep",
        &[&a.input],
        &[&a.out],
        settings(&PrepSettings {
            ingest: &ingest_opts,
            min_count,
            core_mode: mode,
            max_len,
        })?,
    );
    manifest.dataset_id = Some(dataset_id.unwrap_or_else(|| {
        a.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }));
    manifest.write(&manifest_path(&a.out, true))?;
    Ok(st)
}

#[derive(Debug, Serialize)]
struct TrainSettings<'a> {
    spec: &'a ScorerSpec,
    train: &'a TrainConfig,
}

pub fn cmd_train(a: &TrainArgs) -> Result<Checkpoint> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let split = SplitDataset::read_dir(&a.data)?;
    let kind: ModelKind = cfg
        .pick_opt(a.model.clone(), "model")?
        .ok_or_else(|| Error::Config("--model is required".into()))?
        .parse()?;
    let d = ScorerSpec::new(kind);
    let spec = ScorerSpec {
        kind,
        embed_dim: cfg.pick(a.embed_dim, "embed-dim", d.embed_dim)?,
        hidden_dim: cfg.pick(a.hidden_dim, "hidden-dim", d.hidden_dim)?,
        n_heads: cfg.pick(a.n_heads, "n-heads", d.n_heads)?,
        dropout: cfg.pick(a.dropout, "dropout", d.dropout)?,
        markov_alpha: cfg.pick(a.markov_alpha, "markov-alpha", d.markov_alpha)?,
        max_len: cfg.pick(a.max_len, "max-len", split.max_len)?,
    };
    let t = TrainConfig::default();
    let tc = TrainConfig {
        lr: cfg.pick(a.lr, "lr", t.lr)?,
        batch_size: cfg.pick(a.batch_size, "batch-size", t.batch_size)?,
        max_epochs: cfg.pick(a.max_epochs, "max-epochs", t.max_epochs)?,
        patience: cfg.pick(a.patience, "patience", t.patience)?,
        seed: cfg.pick(a.seed, "seed", DEFAULT_SEED)?,
        eval_k_for_stopping: cfg.pick(a.eval_k, "eval-k", t.eval_k_for_stopping)?,
    };
    cfg.finish()?;

    let outcome = train(&spec, &split, &tc)?;
    fs::write(&a.out, outcome.checkpoint.to_json()?)?;
    let mut log = String::from("#hrli-train-log v1\nepoch\ttrain_loss\tvalid_hit\n");
    for e in &outcome.history {
        log.push_str(&format!("{}\t{}\t{}\n", e.epoch, e.train_loss, e.valid_hit));
    }
    let log_path = {
        let mut name = a.out.file_name().unwrap_or_default().to_os_string();
        name.push(".log.tsv");
        a.out.with_file_name(name)
    };
    fs::write(&log_path, log)?;
    RunManifest::new(
        "train",
        &[&a.data],
        &[&a.out, &log_path],
        settings(&TrainSettings {
            spec: &spec,
            train: &tc,
        })?,
    )
    .write(&manifest_path(&a.out, false))?;
    Ok(outcome.checkpoint)
}

fn load_cases(data: &Path, split_name: &str) -> Result<(Vec<EvalCase>, usize)> {
    let split = SplitDataset::read_dir(data)?;
    let cases = split
        .cases(split_name)
        .ok_or_else(|| Error::Config(format!("unknown split {split_name:?}")))?
        .to_vec();
    Ok((cases, split.catalog_size))
}

fn load_model(path: &Path, catalog_size: usize) -> Result<hrli::models::Model> {
    let ckpt = Checkpoint::from_json(&fs::read_to_string(path)?)?;
    if ckpt.catalog_size != catalog_size {
        return Err(Error::Data(format!(
            "checkpoint catalog size {} does not match dataset catalog size {catalog_size}",
            ckpt.catalog_size
        )));
    }
    ckpt.model()
}

#[derive(Debug, Serialize)]
struct EvalSettings<'a> {
    split: &'a str,
    ranking: &'a RankingConfig,
    mask_history: bool,
    label: &'a str,
}

pub fn cmd_eval(a: &EvalArgs) -> Result<MetricReport> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let split_name = cfg.pick(a.split.clone(), "split", "test".to_string())?;
    let ks: Vec<usize> = parse_list(&cfg.pick(a.ks.clone(), "ks", "5,10".to_string())?)?;
    let mut ranking = RankingConfig::new(&ks, cfg.switch(a.mask_last, "mask-last")?)?;
    ranking.exclude_gt_equals_last = cfg.switch(a.exclude_gt_equals_last, "exclude-gt-equals-last")?;
    let mask_history = cfg.switch(a.mask_history, "mask-history")?;
    let label = cfg.pick_opt(a.label.clone(), "label")?;
    cfg.finish()?;

    let (cases, catalog_size) = load_cases(&a.data, &split_name)?;
    let (mut report, input) = match (&a.checkpoint, &a.dump) {
        (Some(path), _) => {
            let model = load_model(path, catalog_size)?;
            let report = if mask_history {
                evaluate(&HistoryMasked(&model), &cases, &ranking)?
            } else {
                evaluate(&model, &cases, &ranking)?
            };
            let default = model.kind().short_name().to_string();
            (report, (path.as_path(), default))
        }
        (None, Some(path)) => {
            if mask_history {
                return Err(Error::Config(
                    "--mask-history needs a checkpoint; dumps carry fixed scores".into(),
                ));
            }
            let dump = ScoreDump::read_path(path)?;
            dump.check_cases(&cases, catalog_size)?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
            (dump.evaluate(&ranking)?, (path.as_path(), stem.unwrap_or_default()))
        }
        (None, None) => return Err(Error::Config("give --checkpoint or --dump".into())),
    };
    report.label = label.unwrap_or(input.1);
    let json = report.to_json()?;
    match &a.out {
        Some(out) => {
            fs::write(out, &json)?;
            RunManifest::new(
                "eval",
                &[&a.data, input.0],
                &[out],
                settings(&EvalSettings {
                    split: &split_name,
                    ranking: &ranking,
                    mask_history,
                    label: &report.label,
                })?,
            )
            .write(&manifest_path(out, false))?;
        }
        None => io::stdout().write_all(json.as_bytes())?,
    }
    Ok(report)
}

pub fn cmd_dump(a: &DumpArgs) -> Result<()> {
    let split_name = a.split.as_deref().unwrap_or("test");
    let (cases, catalog_size) = load_cases(&a.data, split_name)?;
    let model = load_model(&a.checkpoint, catalog_size)?;
    let mode = match a.mode.as_deref().unwrap_or("scores") {
        "scores" => DumpMode::Scores,
        "topm" => DumpMode::TopM(a.m.unwrap_or(50)),
        other => return Err(Error::Config(format!("unknown dump mode {other:?}"))),
    };
    ScoreDump::from_scorer(&model, &cases, mode)?.write_path(&a.out)?;
    let (mode_name, m) = match mode {
        DumpMode::Scores => ("scores", None),
        DumpMode::TopM(m) => ("topm", Some(m)),
    };
    RunManifest::new(
        "dump",
        &[&a.data, &a.checkpoint],
        &[&a.out],
        serde_json::json!({ "split": split_name, "mode": mode_name, "m": m }),
    )
    .write(&manifest_path(&a.out, false))
}

pub fn cmd_report(a: &ReportArgs) -> Result<()> {
    let format: TableFormat = a.format.parse()?;
    let reports = a
        .reports
        .iter()
        .map(|p| MetricReport::from_json(&fs::read_to_string(p)?))
        .collect::<Result<Vec<_>>>()?;
    let table = render(&reports, format)?;
    match &a.out {
        Some(out) => fs::write(out, table)?,
        None => io::stdout().write_all(table.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = ConfigFile::load(a.config.as_deref())?;
    let d = SynthConfig::default();
    let sc = SynthConfig {
        n_users: cfg.pick(a.users, "users", d.n_users)?,
        n_items: cfg.pick(a.items, "items", d.n_items)?,
        session_len_min: cfg.pick(a.len_min, "len-min", d.session_len_min)?,
        session_len_max: cfg.pick(a.len_max, "len-max", d.session_len_max)?,
        p_repeat: cfg.pick(a.p_repeat, "p-repeat", d.p_repeat)?,
        zipf_s: cfg.pick(a.zipf_s, "zipf-s", d.zipf_s)?,
        seed: cfg.pick(a.seed, "seed", d.seed)?,
    };
    cfg.finish()?;
    let log = generate(&sc)?;
    log.write_tsv(io::BufWriter::new(fs::File::create(&a.out)?))?;
    RunManifest::new("simulate", &[], &[&a.out], settings(&sc)?)
        .write(&manifest_path(&a.out, false))
}

/// Runs the gradient check and fails with a numeric error above tolerance.
pub fn cmd_gradcheck(a: &GradcheckArgs) -> Result<GradCheckReport> {
    let kind: ModelKind = a.model.parse()?;
    if a.items < 2 || a.prefix_len < 1 {
        return Err(Error::Config("need at least 2 items and a nonempty prefix".into()));
    }
    let mut rng = Rng::seeded(a.seed);
    let prefix: Vec<usize> = (0..a.prefix_len).map(|_| rng.below(a.items)).collect();
    let target = rng.below(a.items);

    type LossFn<'a> = Box<dyn Fn(&ParamSet) -> Result<f64> + 'a>;
    let (params, analytic, loss): (ParamSet, ParamSet, LossFn) = match kind {
        ModelKind::Gru => {
            let net = GruNet::init(a.items, a.dim, &mut rng);
            let mut grad = net.params.zeros_like();
            net.loss_and_grad(&prefix, target, None, &mut grad)?;
            let params = net.params.clone();
            let (p, t) = (prefix.clone(), target);
            let loss: LossFn = Box::new(move |ps: &ParamSet| {
                let probe = GruNet::from_params(a.items, a.dim, ps.clone())?;
                probe.loss_and_grad(&p, t, None, &mut ps.zeros_like())
            });
            (params, grad, loss)
        }
        ModelKind::Attn => {
            let dims = AttnDims {
                n_items: a.items,
                dim: a.dim,
                ffn_dim: 2 * a.dim,
                n_heads: a.n_heads,
                max_len: a.prefix_len,
            };
            if !a.dim.is_multiple_of(a.n_heads) {
                return Err(Error::Config("--dim must be divisible by --n-heads".into()));
            }
            let net = AttnNet::init(dims, &mut rng);
            let mut grad = net.params.zeros_like();
            net.loss_and_grad(&prefix, target, None, &mut grad)?;
            let params = net.params.clone();
            let (p, t) = (prefix.clone(), target);
            let loss: LossFn = Box::new(move |ps: &ParamSet| {
                let probe = AttnNet::from_params(dims, ps.clone())?;
                probe.loss_and_grad(&p, t, None, &mut ps.zeros_like())
            });
            (params, grad, loss)
        }
        other => {
            return Err(Error::Config(format!("{other} has no trainable parameters")));
        }
    };
    let mut probe = params.clone();
    let report = finite_diff_check(
        |x| {
            probe.load_flat(x);
            loss(&probe)
        },
        &params.flatten(),
        &analytic.flatten(),
        a.eps,
        |i| params.name_of_flat(i),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.max_relative_error >= a.tol {
        return Err(Error::GradCheck(format!(
            "relative error {:.3e} at {} exceeds {:.1e}",
            report.max_relative_error, report.worst_parameter, a.tol
        )));
    }
    Ok(report)
}
