//! End-to-end checks of the `gaitlab` binary: every stage writes its
//! files, exit codes follow the contract, inputs stay untouched, and
//! reruns with the same arguments reproduce outputs byte for byte.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaitlab"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn gaitlab")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}; stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth_corpus(dir: &Path) -> Vec<PathBuf> {
    let mut inputs = Vec::new();
    for s in 0..6 {
        let (class, pl, pr) = if s % 2 == 0 {
            ("KAFO1", "0.48", "0.52")
        } else {
            ("KAFO2", "0.62", "0.68")
        };
        for t in 0..2 {
            let name = format!("subj{s}_t{t}.json");
            let out = run(
                &[
                    "synth",
                    "--out",
                    &name,
                    "--subject-id",
                    &format!("subj{s}"),
                    "--label",
                    class,
                    "--step-period-left",
                    pl,
                    "--step-period-right",
                    pr,
                    "--n-cycles",
                    "3",
                    "--noise-std",
                    "0.003",
                    "--seed",
                    &format!("{}", s * 10 + t),
                ],
                dir,
            );
            assert_ok(&out);
            assert!(dir.join(&name).exists());
            assert!(dir.join(format!("subj{s}_t{t}.truth.json")).exists());
            inputs.push(PathBuf::from(name));
        }
    }
    inputs
}

fn features_args(inputs: &[PathBuf], extra: &[&str]) -> Vec<String> {
    let mut args = vec!["features".to_string()];
    for i in inputs {
        args.push("--in".into());
        args.push(i.display().to_string());
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

#[test]
fn full_pipeline_files_flow() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let inputs = synth_corpus(dir);

    // features over the whole corpus
    let args = features_args(
        &inputs,
        &["--out", "corpus.csv", "--discard-log", "discards.json"],
    );
    let arg_refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    assert_ok(&run(&arg_refs, dir));
    let csv = std::fs::read_to_string(dir.join("corpus.csv")).unwrap();
    assert!(csv.starts_with(
        "subject_id,cycle_id,step_len_ol_m,step_len_nol_m,stride_len_m,ss_ol_s,ss_nol_s,cadence_spm,speed_mps,label"
    ));
    assert_eq!(csv.lines().count(), 37, "12 traces x 3 cycles + header");
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("discards.json")).unwrap()).unwrap();
    assert_eq!(log["count"], 0);
    assert!(log["provenance"]["config"].is_object());

    // ingest is clean
    assert_ok(&run(
        &["ingest", "--in", "subj0_t0.json", "--out", "ingest.json"],
        dir,
    ));

    // train
    assert_ok(&run(
        &[
            "train", "--in", "corpus.csv", "--out", "model.json", "--learning-rate", "0.01",
            "--max-epochs", "200", "--seed", "7",
        ],
        dir,
    ));
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("model.json")).unwrap()).unwrap();
    for key in ["layer_dims", "weights", "biases", "standardizer", "class_names", "seed", "train_config"] {
        assert!(model.get(key).is_some(), "model file missing {key}");
    }
    assert_eq!(model["layer_dims"][0], 7);

    // eval
    assert_ok(&run(
        &[
            "eval", "--in", "corpus.csv", "--k", "5", "--seed", "3", "--learning-rate", "0.01",
            "--max-epochs", "200", "--out", "eval.json", "--csv", "eval.csv",
            "--discard-log", "discards.json",
        ],
        dir,
    ));
    let eval_csv = std::fs::read_to_string(dir.join("eval.csv")).unwrap();
    assert!(eval_csv.starts_with("system,accuracy\n"));
    assert!(eval_csv.contains("Proposed system"));
    assert!(eval_csv.contains("Proposed Features+SVM"));
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("eval.json")).unwrap()).unwrap();
    assert_eq!(eval["report"]["k"], 5);
    assert_eq!(eval["report"]["discarded_cycles"], 0);
    assert!(eval["provenance"]["config"]["train"]["learning_rate"].as_f64().unwrap() > 0.0);

    // explain + tally
    assert_ok(&run(
        &[
            "explain", "--model", "model.json", "--in", "corpus.csv", "--out", "expl.json",
            "--tally", "tally.json", "--tally-csv", "tally.csv", "--seed", "5",
        ],
        dir,
    ));
    let expl: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("expl.json")).unwrap()).unwrap();
    let list = expl["explanations"].as_array().unwrap();
    assert_eq!(list.len(), 36);
    assert!(list[0]["importances"]["cadence_spm"].is_number());
    let tally_csv = std::fs::read_to_string(dir.join("tally.csv")).unwrap();
    assert!(tally_csv.starts_with("feature,positive_count,negative_count\n"));
    assert_eq!(tally_csv.lines().count(), 8);

    // stats
    assert_ok(&run(
        &["stats", "--in", "corpus.csv", "--out", "stats.json", "--csv", "stats.csv"],
        dir,
    ));
    let stats_csv = std::fs::read_to_string(dir.join("stats.csv")).unwrap();
    assert!(stats_csv.starts_with("feature,p_value,mean_kafo1,mean_kafo2,std_kafo1,std_kafo2,n1,n2"));
    assert_eq!(stats_csv.lines().count(), 8);

    // plot
    assert_ok(&run(
        &["plot", "--in", "subj0_t0.json", "--out", "fig.svg"],
        dir,
    ));
    let svg = std::fs::read_to_string(dir.join("fig.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches("<circle").count(), 7, "3 cycles = 7 maxima");
    assert!(dir.join("fig.csv").exists());
    let plot_csv = std::fs::read_to_string(dir.join("fig.csv")).unwrap();
    assert!(plot_csv.starts_with("frame,d_raw,d_smooth,is_maximum"));
}

#[test]
fn unknown_subcommand_exits_2_with_usage_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let before: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(before.is_empty());
    let out = run(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "stderr: {stderr}");
    assert!(out.stdout.is_empty());
    let after: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(after.is_empty(), "unknown subcommand must not write files");
}

#[test]
fn missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ingest", "--in", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn reruns_reproduce_outputs_byte_for_byte_and_leave_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    for round in ["a", "b"] {
        let out = run(
            &[
                "synth", "--out", &format!("walk_{round}.json"), "--seed", "42",
                "--noise-std", "0.004", "--jitter-amp", "0.08",
            ],
            dir,
        );
        assert_ok(&out);
    }
    let a = std::fs::read(dir.join("walk_a.json")).unwrap();
    let b = std::fs::read(dir.join("walk_b.json")).unwrap();
    assert_eq!(a, b, "synth must be deterministic");

    let input_before = std::fs::read(dir.join("walk_a.json")).unwrap();
    for round in ["x", "y"] {
        let out = run(
            &[
                "features", "--in", "walk_a.json", "--out", &format!("f_{round}.csv"),
            ],
            dir,
        );
        assert_ok(&out);
    }
    let fa = std::fs::read(dir.join("f_x.csv")).unwrap();
    let fb = std::fs::read(dir.join("f_y.csv")).unwrap();
    assert_eq!(fa, fb, "features must be deterministic");
    assert_eq!(
        input_before,
        std::fs::read(dir.join("walk_a.json")).unwrap(),
        "inputs must never be mutated"
    );
}

#[test]
fn config_file_merges_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(
        dir.join("cfg.json"),
        r#"{"synth": {"n_cycles": 4, "seed": 9}, "signal": {"min_prominence": 0.2}}"#,
    )
    .unwrap();
    // config sets 4 cycles; flag overrides the seed only
    assert_ok(&run(
        &["synth", "--out", "w.json", "--config", "cfg.json", "--seed", "11"],
        dir,
    ));
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("w.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["provenance"]["config"]["n_cycles"], 4);
    assert_eq!(truth["provenance"]["config"]["seed"], 11);
    assert_eq!(truth["truth"]["maxima_frames"].as_array().unwrap().len(), 9);

    // the signal section flows into features' provenance
    assert_ok(&run(
        &[
            "features", "--in", "w.json", "--out", "f.csv", "--config", "cfg.json",
            "--discard-log", "log.json", "--min-gap-fraction", "0.4",
        ],
        dir,
    ));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("log.json")).unwrap()).unwrap();
    assert_eq!(log["provenance"]["config"]["min_prominence"], 0.2);
    assert_eq!(log["provenance"]["config"]["min_gap_fraction"], 0.4);
}
