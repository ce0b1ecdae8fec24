//! `baitscan`: run the clickbait screening pipeline from the command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 runtime error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use baitscan::config::PipelineConfig;
use baitscan::corpus::{load_manifest, read_bundle, validate_bundle, ManifestEntry, ValidationReport};
use baitscan::evaluation::{
    category_correlation, clickbait_word_frequency, cross_validate, feature_sweep, fit_full, EvalReport, Metrics,
    SweepReport,
};
use baitscan::features::group_mask;
use baitscan::pipeline::{export_matrix, fit_graph_net, predict_model, prepare_corpus, ClickbaitModel, PreparedCorpus};
use baitscan::synth::{synth_corpus, SignalStrengths, SynthSpec};
use baitscan::Error;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "baitscan", version, about = "Upload-time clickbait screening for video platforms")]
struct Cli {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Face match threshold on Euclidean distance.
    #[arg(long = "face-threshold", global = true)]
    face_threshold: Option<f64>,
    /// Config override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every bundle in the manifest and list violations.
    Validate,
    /// Write the feature matrix as CSV.
    Featurize,
    /// Fit the full pipeline on every manifest row and write the model file.
    Train,
    /// Stratified k-fold evaluation of the whole pipeline.
    Evaluate,
    /// Score the manifest with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
    },
    /// Cross-validated accuracy for each selection size.
    Sweep {
        /// Comma-separated k values (default: `sweep.ks`).
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
    },
    /// Word frequencies and category correlations over clickbait rows.
    Analyze,
    /// Generate a synthetic corpus with planted signal.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    n_videos: usize,
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    #[arg(long, default_value_t = 3)]
    keyframes_min: usize,
    #[arg(long, default_value_t = 6)]
    keyframes_max: usize,
    /// Strength for every group; the per-group flags override it.
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    #[arg(long)]
    signal_bert: Option<f64>,
    #[arg(long)]
    signal_resnet: Option<f64>,
    #[arg(long)]
    signal_graph: Option<f64>,
    #[arg(long)]
    signal_text: Option<f64>,
    #[arg(long)]
    signal_title: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
}

/// Error with a chosen exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::UnknownGroup(_) | Error::KOutOfRange { .. } => 2,
        Error::Parse { .. }
        | Error::DuplicateId { .. }
        | Error::InvalidLabel { .. }
        | Error::InvalidEntry { .. }
        | Error::MissingArtifact { .. }
        | Error::DimensionMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::NonFinite { .. }
        | Error::InvalidBundle(_)
        | Error::Format { .. } => 1,
        _ => 3,
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = error.chain().find_map(|c| c.downcast_ref::<Error>()).map(code_for).unwrap_or(3);
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: code_for(&e),
            error: e.into(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

/// Write through a temporary file in the same directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().ok_or_else(|| anyhow!("bad output path {}", path.display()))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

struct Run {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Run {
    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Command, seed and config, embedded in every output.
    fn header(&self, command: &str) -> Value {
        json!({ "command": command, "seed": self.seed(), "config": self.cfg.to_json() })
    }

    /// Sidecar for outputs whose own format cannot carry the config.
    fn write_sidecar(&self, command: &str, extra: Value) -> anyhow::Result<()> {
        let mut v = self.header(command);
        if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
            m.extend(e);
        }
        write_json(&self.path(&format!("{command}_run.json")), &v)
    }

    fn entries(&self) -> Result<Vec<ManifestEntry>, Failure> {
        Ok(load_manifest(self.cfg.manifest_path()?)?)
    }

    fn corpus(&self, entries: &[ManifestEntry]) -> Result<PreparedCorpus, Failure> {
        let res = self.cfg.load_resources()?;
        Ok(prepare_corpus(entries, &res, &self.cfg.settings.features)?)
    }
}

fn build_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(usage)?,
        None => PipelineConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(anyhow!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim()).map_err(usage)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = &cli.manifest {
        cfg.manifest = Some(m.clone());
    }
    if let Some(t) = cli.face_threshold {
        cfg.settings.features.face_threshold = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn cmd_validate(run: &Run) -> CmdResult {
    let entries = run.entries()?;
    let reports: Vec<ValidationReport> = entries
        .par_iter()
        .map(|e| match read_bundle(e) {
            Ok(b) => validate_bundle(&b),
            Err(err) => ValidationReport::unreadable(&e.video_id, &err),
        })
        .collect();
    let mut n = 0;
    for r in &reports {
        for v in &r.violations {
            println!("{}\t{}\t{}\t{}", r.video_id, v.code, v.field, v.message);
            n += 1;
        }
    }
    println!("{n} violations");
    let bad: Vec<&ValidationReport> = reports.iter().filter(|r| !r.is_valid()).collect();
    let mut v = run.header("validate");
    v["videos"] = json!(entries.len());
    v["violations"] = json!(n);
    v["reports"] = json!(bad);
    write_json(&run.path("validation.json"), &v)?;
    Ok(u8::from(n > 0))
}

fn cmd_featurize(run: &Run) -> CmdResult {
    let entries = run.entries()?;
    let corpus = run.corpus(&entries)?;
    let rows: Vec<usize> = (0..corpus.len()).collect();
    let params = fit_graph_net(&corpus, &rows, &run.cfg.settings, run.seed())?;
    let m = export_matrix(&corpus, params.as_ref())?;
    let m = m.select_columns(&group_mask(&m.groups, &run.cfg.settings.groups)?);
    let mut buf = Vec::new();
    m.write_csv(&mut buf).context("formatting feature CSV")?;
    let path = run.path("features.csv");
    write_atomic(&path, &buf)?;
    run.write_sidecar("featurize", json!({ "rows": m.n_rows(), "columns": m.n_cols() }))?;
    eprintln!("{} rows x {} columns -> {}", m.n_rows(), m.n_cols(), path.display());
    Ok(0)
}

fn cmd_train(run: &Run) -> CmdResult {
    let entries = run.entries()?;
    let corpus = run.corpus(&entries)?;
    let model = fit_full(&corpus, &run.cfg.settings, run.seed())?;
    let mut v = serde_json::to_value(&model).map_err(Error::from)?;
    v["config"] = run.cfg.to_json();
    let path = run.path("model.json");
    write_json(&path, &v)?;
    eprintln!("trained on {} videos -> {}", corpus.len(), path.display());
    Ok(0)
}

fn cmd_predict(run: &Run, model_path: &Path) -> CmdResult {
    let text = fs::read_to_string(model_path)
        .with_context(|| format!("reading {}", model_path.display()))
        .map_err(usage)?;
    let model: ClickbaitModel = serde_json::from_str(&text)
        .with_context(|| format!("parsing model {}", model_path.display()))
        .map_err(usage)?;
    let entries = run.entries()?;
    let res = run.cfg.load_resources()?;
    // features must be computed exactly as at training time
    let corpus = prepare_corpus(&entries, &res, &model.settings.features)?;
    let rows: Vec<usize> = (0..corpus.len()).collect();
    let out = predict_model(&model, &corpus, &rows)?;
    let mut lines = String::new();
    let mut correct = 0;
    for (i, v) in corpus.videos.iter().enumerate() {
        let line = json!({ "video_id": v.video_id, "probability": out.probability[i], "label": out.label[i] });
        writeln!(lines, "{line}").expect("write to String");
        correct += usize::from(out.label[i] == v.label);
    }
    let accuracy = correct as f64 / corpus.len().max(1) as f64;
    write_atomic(&run.path("predictions.jsonl"), lines.as_bytes())?;
    run.write_sidecar(
        "predict",
        json!({ "model": model_path.display().to_string(), "model_seed": model.seed, "videos": corpus.len(), "accuracy": accuracy }),
    )?;
    eprintln!("{} videos scored; accuracy against manifest labels {accuracy:.4}", corpus.len());
    Ok(0)
}

/// Times are only measured for the whole stack, so learner rows leave them blank.
fn metric_row(name: &str, m: &Metrics, timed: bool) -> String {
    let (ft, st) = if timed {
        (format!("{:.2}", m.fit_time_s), format!("{:.3}", m.score_time_s))
    } else {
        ("-".into(), "-".into())
    };
    format!(
        "{name:<24} {ft:>7} {st:>7} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
        m.accuracy, m.f1, m.precision, m.recall, m.auc
    )
}

fn results_table(r: &EvalReport) -> String {
    let mut t = format!(
        "{:<24} {:>7} {:>7} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
        "model", "FT", "ST", "ACC", "F1", "PRE", "REC", "AUC"
    );
    for (name, m) in &r.learner_means {
        t.push_str(&metric_row(name, m, false));
        t.push('\n');
    }
    t.push_str(&metric_row("stacking", &r.mean, true));
    t.push('\n');
    t
}

fn cmd_evaluate(run: &Run) -> CmdResult {
    let entries = run.entries()?;
    let corpus = run.corpus(&entries)?;
    let report = cross_validate(&corpus, &run.cfg.settings, &run.cfg.eval, run.seed(), &run.cfg.to_json())?;
    let mut v = serde_json::to_value(&report).map_err(Error::from)?;
    v["command"] = json!("evaluate");
    write_json(&run.path("report.json"), &v)?;

    let mut roc = String::from("fpr,tpr\n");
    for (f, t) in &report.roc_points {
        writeln!(roc, "{f},{t}").expect("write to String");
    }
    write_atomic(&run.path("roc.csv"), roc.as_bytes())?;

    let mut folds = String::from("fold,model,accuracy,precision,recall,f1,auc\n");
    for f in &report.folds {
        let rows = f.learners.iter().map(|(k, m)| (k.as_str(), m)).chain([("stacking", &f.stacking)]);
        for (name, m) in rows {
            writeln!(folds, "{},{name},{},{},{},{},{}", f.fold, m.accuracy, m.precision, m.recall, m.f1, m.auc)
                .expect("write to String");
        }
    }
    write_atomic(&run.path("folds.csv"), folds.as_bytes())?;
    run.write_sidecar("evaluate", json!({ "outputs": ["report.json", "roc.csv", "folds.csv"] }))?;
    print!("{}", results_table(&report));
    Ok(0)
}

fn cmd_sweep(run: &Run, ks: Option<&[usize]>) -> CmdResult {
    let ks = ks.unwrap_or(&run.cfg.sweep_ks).to_vec();
    let entries = run.entries()?;
    let corpus = run.corpus(&entries)?;
    let report: SweepReport = feature_sweep(&corpus, &run.cfg.settings, &run.cfg.eval, &ks, run.seed(), &run.cfg.to_json())?;
    let mut v = serde_json::to_value(&report).map_err(Error::from)?;
    v["command"] = json!("sweep");
    write_json(&run.path("sweep.json"), &v)?;
    let mut csv = String::from("k,accuracy,precision,recall,f1,auc\n");
    println!("{:>8} {:>8}", "features", "accuracy");
    for p in &report.points {
        let m = &p.mean;
        writeln!(csv, "{},{},{},{},{},{}", p.k, m.accuracy, m.precision, m.recall, m.f1, m.auc).expect("write to String");
        println!("{:>8} {:>8.4}", p.k, m.accuracy);
    }
    write_atomic(&run.path("sweep.csv"), csv.as_bytes())?;
    run.write_sidecar("sweep", json!({ "best_k": report.best_k() }))?;
    Ok(0)
}

fn cmd_analyze(run: &Run) -> CmdResult {
    let entries = run.entries()?;
    let res = run.cfg.load_resources()?;
    let words = clickbait_word_frequency(&entries, &res.text.stopwords, run.cfg.top_n);
    let corr = category_correlation(&entries)?;
    let mut wf = String::from("token,count\n");
    for (t, c) in &words {
        writeln!(wf, "{},{c}", baitscan::features::csv_field(t)).expect("write to String");
    }
    write_atomic(&run.path("word_frequency.csv"), wf.as_bytes())?;
    const NAMES: [&str; 5] = ["misleading", "spam", "false_promise", "exaggerated", "curiosity_gap"];
    let mut cc = format!("category,{}\n", NAMES.join(","));
    for (name, row) in NAMES.iter().zip(&corr) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(cc, "{name},{}", cells.join(",")).expect("write to String");
    }
    write_atomic(&run.path("category_correlation.csv"), cc.as_bytes())?;
    let mut v = run.header("analyze");
    v["word_frequency"] = json!(words);
    v["categories"] = json!(NAMES);
    v["category_correlation"] = json!(corr);
    write_json(&run.path("analyze.json"), &v)?;
    for (t, c) in &words {
        println!("{c:>6} {t}");
    }
    Ok(0)
}

fn cmd_synth(run: &Run, a: &SynthArgs) -> CmdResult {
    let spec = SynthSpec {
        n_videos: a.n_videos,
        clickbait_fraction: a.fraction,
        keyframes_min: a.keyframes_min,
        keyframes_max: a.keyframes_max,
        signal: SignalStrengths {
            bert: a.signal_bert.unwrap_or(a.signal),
            resnet: a.signal_resnet.unwrap_or(a.signal),
            graph: a.signal_graph.unwrap_or(a.signal),
            text: a.signal_text.unwrap_or(a.signal),
            title: a.signal_title.unwrap_or(a.signal),
        },
        noise: a.noise,
        seed: run.seed(),
    };
    spec.validate().map_err(usage)?;
    let out = synth_corpus(&spec, &run.out)?;
    eprintln!(
        "{} videos ({} clickbait) -> {}",
        out.entries.len(),
        spec.n_clickbait(),
        out.manifest.display()
    );
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(usage(anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    let cfg = build_config(&cli)?;
    if !matches!(cli.command, Command::Synth(_)) {
        cfg.check_paths().map_err(usage)?;
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let run = Run { cfg, out };
    match &cli.command {
        Command::Validate => cmd_validate(&run),
        Command::Featurize => cmd_featurize(&run),
        Command::Train => cmd_train(&run),
        Command::Evaluate => cmd_evaluate(&run),
        Command::Predict { model } => cmd_predict(&run, model),
        Command::Sweep { ks } => cmd_sweep(&run, ks.as_deref()),
        Command::Analyze => cmd_analyze(&run),
        Command::Synth(a) => cmd_synth(&run, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
