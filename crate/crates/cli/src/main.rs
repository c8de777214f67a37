//! `gaitlab` command-line tool: file-in/file-out stages over the gait
//! pipeline. Every stage communicates through documented formats (trace
//! JSON, feature CSV, model JSON, report JSON/CSV) so each step can be
//! inspected and re-run on its own. Exit codes: 0 success, 1 processing
//! error, 2 usage error. Diagnostics go to stderr, data to files or
//! stdout.

mod config;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use gaitlab::dataset::{FeatureRow, FeatureTable};
use gaitlab::explain::{explain_instance, tally_contributions, PerturbationConfig};
use gaitlab::eval::run_evaluation;
use gaitlab::features::FEATURE_NAMES;
use gaitlab::keypoints::{parse_pose_trace, serialize_pose_trace, validate_sequence, Leg};
use gaitlab::mlp::{train_mlp_with_report, MlpModel, TrainConfig};
use gaitlab::pipeline::{feature_rows, run_pipeline, Discard};
use gaitlab::plot::{render_plot_csv, render_plot_svg};
use gaitlab::stats::feature_p_values;
use gaitlab::synth::{generate_walk, Facing};

use config::{load_config, FileConfig, SignalOverrides};
use io::{read_file, read_text, write_atomic, write_output};

#[derive(Parser)]
#[command(name = "gaitlab", version, about = "Gait features, classification, and explanations from pose keypoint traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a pose-trace document and report findings.
    Ingest(IngestArgs),
    /// Extract per-cycle gait features into a CSV.
    Features(FeaturesArgs),
    /// Render the heel-distance signal as SVG (plus sibling CSV).
    Plot(PlotArgs),
    /// Generate a synthetic walk trace with known ground truth.
    Synth(SynthArgs),
    /// Train the MLP classifier on a feature CSV.
    Train(TrainArgs),
    /// Subject-exclusive k-fold evaluation (MLP vs SVM baseline).
    Eval(EvalArgs),
    /// Explain predictions with local surrogate models.
    Explain(ExplainArgs),
    /// Per-feature significance statistics for a two-class CSV.
    Stats(StatsArgs),
}

#[derive(Args, Clone)]
struct SignalFlags {
    /// Gaussian smoothing width in frames (default: frame_rate / 10).
    #[arg(long)]
    sigma: Option<f64>,
    /// Minimum peak prominence as a fraction of peak-to-peak.
    #[arg(long)]
    min_prominence: Option<f64>,
    /// Outlier gap threshold as a fraction of the median gap.
    #[arg(long)]
    min_gap_fraction: Option<f64>,
}

#[derive(Args)]
struct IngestArgs {
    /// Pose-trace JSON document.
    #[arg(long = "in")]
    input: PathBuf,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Pose-trace JSON document(s); repeat for a corpus.
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    /// Feature CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a JSON log of the gait cycles discarded during processing.
    #[arg(long)]
    discard_log: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    signal: SignalFlags,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// SVG output path.
    #[arg(long)]
    out: PathBuf,
    /// Sibling CSV path (default: the SVG path with a .csv extension).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    signal: SignalFlags,
}

#[derive(Args)]
struct SynthArgs {
    /// Trace output path; the truth sidecar lands next to it.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth sidecar path (default: <out stem>.truth.json).
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    subject_id: Option<String>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    step_len_left: Option<f64>,
    #[arg(long)]
    step_len_right: Option<f64>,
    #[arg(long)]
    step_period_left: Option<f64>,
    #[arg(long)]
    step_period_right: Option<f64>,
    #[arg(long)]
    frame_rate: Option<f64>,
    #[arg(long)]
    n_cycles: Option<usize>,
    /// "+x" or "-x".
    #[arg(long)]
    facing: Option<String>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    jitter_amp: Option<f64>,
    #[arg(long)]
    jitter_period: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    /// "left" or "right".
    #[arg(long)]
    orthotic_side: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct TrainFlags {
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
    /// Hidden layer sizes, comma separated (default "64,64").
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    batch_size: Option<usize>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = self.patience {
            cfg.early_stop_patience = v;
        }
        if let Some(v) = self.holdout_fraction {
            cfg.holdout_fraction = v;
        }
        if let Some(v) = &self.hidden {
            cfg.hidden_dims = v.clone();
        }
        if self.batch_size.is_some() {
            cfg.batch_size = self.batch_size;
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled feature CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Model JSON output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the system/accuracy comparison table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Discard log from the features stage; its count lands in the report.
    #[arg(long)]
    discard_log: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct ExplainArgs {
    /// Trained model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV with the instances to explain.
    #[arg(long = "in")]
    input: PathBuf,
    /// Explanation report JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Contribution tally JSON path.
    #[arg(long)]
    tally: Option<PathBuf>,
    /// Contribution tally CSV path.
    #[arg(long)]
    tally_csv: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    kernel_width: Option<f64>,
    #[arg(long)]
    ridge_lambda: Option<f64>,
    /// Importance threshold for a positive contribution.
    #[arg(long)]
    threshold: Option<f64>,
    /// Report importances divided by the instance's max |importance|.
    #[arg(long)]
    normalize_importances: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the Table-style CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Features(args) => cmd_features(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("gaitlab: error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn signal_overrides(file: &FileConfig, flags: &SignalFlags) -> SignalOverrides {
    let mut overrides = file.signal.clone();
    overrides.merge_flags(flags.sigma, flags.min_prominence, flags.min_gap_fraction);
    overrides
}

fn provenance(command: &str, seed: Option<u64>, config: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "seed": seed,
        "config": config,
    })
}

fn to_pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json serialization");
    text.push('\n');
    text
}

fn cmd_ingest(args: IngestArgs) -> Result<ExitCode> {
    let doc = read_file(&args.input)?;
    let seq = parse_pose_trace(&doc)?;
    let report = validate_sequence(&seq);
    let blocking = report.is_blocking();

    let doc = json!({
        "provenance": provenance("ingest", None, json!({})),
        "subject_id": seq.meta.subject_id,
        "frame_count": seq.frames.len(),
        "report": report,
    });
    write_output(args.out.as_deref(), &to_pretty(&doc))?;
    eprintln!(
        "gaitlab: ingest: {} frames, {} error(s), {} warning(s)",
        seq.frames.len(),
        doc["report"]["errors"].as_array().map(|a| a.len()).unwrap_or(0),
        doc["report"]["warnings"].as_array().map(|a| a.len()).unwrap_or(0),
    );
    Ok(if blocking { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string())
}

#[derive(Serialize)]
struct DiscardEntry {
    input: String,
    cycle_index: usize,
    reason: String,
}

fn cmd_features(args: FeaturesArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_deref())?;
    let overrides = signal_overrides(&file, &args.signal);

    let mut rows: Vec<FeatureRow> = Vec::new();
    let mut discards: Vec<DiscardEntry> = Vec::new();
    for input in &args.inputs {
        let seq = parse_pose_trace(&read_file(input)?)
            .with_context(|| format!("parsing {}", input.display()))?;
        let cfg = overrides.resolve(seq.meta.frame_rate_hz);
        let (mut file_rows, file_discards) = feature_rows(&seq, Some(cfg), &file_stem(input))
            .with_context(|| format!("processing {}", input.display()))?;
        rows.append(&mut file_rows);
        discards.extend(file_discards.into_iter().map(|d: Discard| DiscardEntry {
            input: input.display().to_string(),
            cycle_index: d.cycle_index,
            reason: d.reason,
        }));
    }

    let table = FeatureTable { rows };
    write_output(args.out.as_deref(), &table.to_csv())?;

    if let Some(log_path) = &args.discard_log {
        let doc = json!({
            "provenance": provenance("features", None, serde_json::to_value(&overrides)?),
            "count": discards.len(),
            "discards": discards,
        });
        write_atomic(log_path, &to_pretty(&doc))?;
    }
    eprintln!(
        "gaitlab: features: {} cycle(s) from {} trace(s), {} discarded",
        table.rows.len(),
        args.inputs.len(),
        discards.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(args: PlotArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_deref())?;
    let overrides = signal_overrides(&file, &args.signal);

    let seq = parse_pose_trace(&read_file(&args.input)?)?;
    let cfg = overrides.resolve(seq.meta.frame_rate_hz);
    let run = run_pipeline(&seq, Some(cfg))?;

    let cfg_json = serde_json::to_string(&json!({
        "signal": cfg,
        "input": args.input.display().to_string(),
    }))?;
    let title = format!(
        "inter-heel distance: {} ({} fps)",
        seq.meta.subject_id, seq.meta.frame_rate_hz
    );
    let svg = render_plot_svg(&run.trace, &title, Some(&cfg_json));
    write_atomic(&args.out, &svg)?;

    let csv_path = args
        .csv
        .clone()
        .unwrap_or_else(|| args.out.with_extension("csv"));
    write_atomic(&csv_path, &render_plot_csv(&run.trace))?;
    eprintln!(
        "gaitlab: plot: {} maxima over {} frames -> {}",
        run.trace.maxima.len(),
        run.trace.d_raw.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(args: SynthArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_deref())?;
    let mut cfg = file.synth.unwrap_or_default();
    if let Some(v) = args.subject_id {
        cfg.subject_id = v;
    }
    if args.label.is_some() {
        cfg.label = args.label;
    }
    if let Some(v) = args.step_len_left {
        cfg.step_len_left = v;
    }
    if let Some(v) = args.step_len_right {
        cfg.step_len_right = v;
    }
    if let Some(v) = args.step_period_left {
        cfg.step_period_left_s = v;
    }
    if let Some(v) = args.step_period_right {
        cfg.step_period_right_s = v;
    }
    if let Some(v) = args.frame_rate {
        cfg.frame_rate_hz = v;
    }
    if let Some(v) = args.n_cycles {
        cfg.n_cycles = v;
    }
    if let Some(v) = &args.facing {
        cfg.facing = match v.as_str() {
            "+x" => Facing::PosX,
            "-x" => Facing::NegX,
            other => bail!("facing must be \"+x\" or \"-x\", got {other:?}"),
        };
    }
    if let Some(v) = args.noise_std {
        cfg.keypoint_noise_std = v;
    }
    if let Some(v) = args.jitter_amp {
        cfg.camera_jitter_amp = v;
    }
    if let Some(v) = args.jitter_period {
        cfg.camera_jitter_period_s = v;
    }
    if let Some(v) = args.height {
        cfg.height_m = v;
    }
    if let Some(v) = &args.orthotic_side {
        cfg.orthotic_side = match v.as_str() {
            "left" => Leg::Left,
            "right" => Leg::Right,
            other => bail!("orthotic-side must be \"left\" or \"right\", got {other:?}"),
        };
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }

    let (seq, truth) = generate_walk(&cfg)?;
    write_atomic(&args.out, &serialize_pose_trace(&seq))?;

    let truth_path = args.truth.unwrap_or_else(|| {
        let stem = file_stem(&args.out);
        args.out.with_file_name(format!("{stem}.truth.json"))
    });
    let truth_doc = json!({
        "provenance": provenance("synth", Some(cfg.seed), serde_json::to_value(&cfg)?),
        "truth": truth,
    });
    write_atomic(&truth_path, &to_pretty(&truth_doc))?;
    eprintln!(
        "gaitlab: synth: {} frames, {} cycles -> {} (+ {})",
        seq.frames.len(),
        cfg.n_cycles,
        args.out.display(),
        truth_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_table(path: &Path) -> Result<FeatureTable> {
    FeatureTable::from_csv(&read_text(path)?)
        .map_err(|e| anyhow!("{e}").context(format!("parsing feature CSV {}", path.display())))
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_deref())?;
    let mut cfg = file.train.unwrap_or_default();
    args.train.apply(&mut cfg);

    let table = load_table(&args.input)?;
    let data = table.to_dataset()?;
    let (model, report) = train_mlp_with_report(&data, &cfg, args.seed)?;
    write_atomic(&args.out, &model.to_json())?;
    eprintln!(
        "gaitlab: train: {} rows, {} classes; stopped after {} epoch(s), best at {} (monitor loss {:.6}) -> {}",
        data.n_rows(),
        data.n_classes(),
        report.epochs_run,
        report.best_epoch,
        report.best_monitor_loss,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn read_discard_count(path: Option<&Path>) -> Result<usize> {
    let Some(p) = path else { return Ok(0) };
    let doc: serde_json::Value = serde_json::from_str(&read_text(p)?)
        .with_context(|| format!("parsing discard log {}", p.display()))?;
    Ok(doc["count"].as_u64().unwrap_or(0) as usize)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_deref())?;
    let mut cfg = file.train.unwrap_or_default();
    args.train.apply(&mut cfg);

    let table = load_table(&args.input)?;
    let data = table.to_dataset()?;
    let discarded = read_discard_count(args.discard_log.as_deref())?;
    let report = run_evaluation(&data, &cfg, args.k, args.seed, discarded)?;

    let doc = json!({
        "provenance": provenance(
            "eval",
            Some(args.seed),
            json!({"k": args.k, "train": cfg}),
        ),
        "report": report,
    });
    write_output(args.out.as_deref(), &to_pretty(&doc))?;
    if let Some(csv_path) = &args.csv {
        write_atomic(csv_path, &report.to_csv())?;
    }
    eprintln!(
        "gaitlab: eval: k={} mlp mean accuracy {:.3}, svm mean accuracy {:.3}",
        args.k, report.mlp_mean_accuracy, report.svm_mean_accuracy
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_explain(args: ExplainArgs) -> Result<ExitCode> {
    let file = load_config(args.config.as_deref())?;
    let mut cfg = file.explain.unwrap_or_default();
    if let Some(v) = args.n_samples {
        cfg.n_samples = v;
    }
    if let Some(v) = args.kernel_width {
        cfg.kernel_width = v;
    }
    if let Some(v) = args.ridge_lambda {
        cfg.ridge_lambda = v;
    }
    if let Some(v) = args.threshold {
        cfg.contribution_threshold = v;
    }
    cfg.seed = args.seed;

    let model = MlpModel::from_json(&read_text(&args.model)?)
        .with_context(|| format!("parsing model {}", args.model.display()))?;
    let table = load_table(&args.input)?;

    let mut explanations = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let instance_cfg = PerturbationConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.clone()
        };
        let expl = explain_instance(
            &model,
            &row.cycle_id,
            &row.features.as_array(),
            &model.standardizer,
            &instance_cfg,
        )?;
        explanations.push(expl);
    }

    let expl_docs: Vec<serde_json::Value> = explanations
        .iter()
        .map(|e| {
            let scale = if args.normalize_importances {
                let max = e.importances.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                if max > 0.0 { max } else { 1.0 }
            } else {
                1.0
            };
            let importances: serde_json::Map<String, serde_json::Value> = FEATURE_NAMES
                .iter()
                .zip(&e.importances)
                .map(|(name, v)| (name.to_string(), json!(v / scale)))
                .collect();
            json!({
                "instance_id": e.instance_id,
                "label": e.predicted.label,
                "confidence": e.predicted.confidence,
                "importances": importances,
                "intercept": e.intercept,
                "fidelity_r2": e.fidelity_r2,
            })
        })
        .collect();
    let doc = json!({
        "provenance": provenance("explain", Some(args.seed), serde_json::to_value(&cfg)?),
        "explanations": expl_docs,
    });
    write_output(args.out.as_deref(), &to_pretty(&doc))?;

    if args.tally.is_some() || args.tally_csv.is_some() {
        // Only labeled rows can be checked for correctness.
        let labeled: Vec<(usize, &String)> = table
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.label.as_ref().map(|l| (i, l)))
            .collect();
        let sub: Vec<_> = labeled.iter().map(|(i, _)| explanations[*i].clone()).collect();
        let truths: Vec<String> = labeled.iter().map(|(_, l)| (*l).clone()).collect();
        let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let tally = tally_contributions(&sub, &truths, &names, cfg.contribution_threshold);
        if let Some(path) = &args.tally {
            let doc = json!({
                "provenance": provenance("explain", Some(args.seed), serde_json::to_value(&cfg)?),
                "tally": tally,
            });
            write_atomic(path, &to_pretty(&doc))?;
        }
        if let Some(path) = &args.tally_csv {
            write_atomic(path, &tally.to_csv())?;
        }
    }
    eprintln!("gaitlab: explain: {} instance(s)", explanations.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode> {
    let table = load_table(&args.input)?;
    let data = table.to_dataset()?;
    let report = feature_p_values(&data)?;
    let doc = json!({
        "provenance": provenance("stats", None, json!({})),
        "report": report,
    });
    write_output(args.out.as_deref(), &to_pretty(&doc))?;
    if let Some(csv_path) = &args.csv {
        write_atomic(csv_path, &report.to_csv())?;
    }
    eprintln!("gaitlab: stats: {} features over classes {:?}", report.features.len(), report.class_names);
    Ok(ExitCode::SUCCESS)
}
