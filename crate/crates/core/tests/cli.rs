use std::path::Path;
use std::process::{Command, Output};

use looplab::cli::{RunManifest, FIG1_CSV, FIG2_CSV, FIG3_CSV};
use looplab::evaluators::{save_checkpoint, ArchitectureConfig, Evaluator, PairwiseConfig};

fn looplab(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_looplab"))
        .args(args)
        .current_dir(cwd)
        .env("LOOPLAB_OUT_ROOT", cwd.join("runs"))
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth_small(cwd: &Path) {
    let o = looplab(
        cwd,
        &[
            "synth",
            "--pairs",
            "160",
            "--eval-pairs",
            "80",
            "--dim",
            "8",
            "--seq-len",
            "6",
            "--response-span",
            "3",
            "--chunk-size",
            "64",
            "--out",
            "data",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = looplab(dir.path(), &["synth"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--pairs"));
}

#[test]
fn bad_config_value_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = looplab(dir.path(), &["synth", "--pairs", "10", "--dim", "4", "--response-span", "99"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn missing_dataset_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = looplab(dir.path(), &["validate", "--data", "no/such/dataset"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("no/such/dataset"), "{}", stderr(&o));
}

#[test]
fn corrupt_chunk_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path());
    let chunk = std::fs::read_dir(dir.path().join("data/eval"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "lsf"))
        .expect("a chunk file");
    let mut bytes = std::fs::read(&chunk).unwrap();
    bytes[0] ^= 0xff;
    std::fs::write(&chunk, bytes).unwrap();
    let o = looplab(dir.path(), &["validate", "--data", "data/eval"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("magic"), "{}", stderr(&o));
}

#[test]
fn constant_checkpoint_fails_the_flip_gate() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path());
    let arch = ArchitectureConfig::Pairwise(PairwiseConfig {
        d_in: 8,
        pool_rank: 2,
        proj_dim: 4,
        gru_layers: 1,
        gru_hidden: 4,
        scorer_hidden: 4,
        ..Default::default()
    });
    let model = Evaluator::<f32>::zeros(&arch).unwrap();
    save_checkpoint(&dir.path().join("const.json"), &model, 1, 0, None).unwrap();
    let o = looplab(dir.path(), &["fliptest", "--checkpoint", "const.json", "--data", "data/eval", "--out", "ft"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("DEGENERATE"));
    let m = RunManifest::load(&dir.path().join("ft")).unwrap();
    assert_eq!((m.subcommand.as_str(), m.exit_code), ("fliptest", 4));
}

#[test]
fn geometry_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path());
    let arch = ArchitectureConfig::Pairwise(PairwiseConfig::desk(16));
    let model = Evaluator::<f32>::new(&arch, 1).unwrap();
    save_checkpoint(&dir.path().join("wide.json"), &model, 1, 1, None).unwrap();
    let o = looplab(dir.path(), &["eval", "--checkpoint", "wide.json", "--data", "data/eval"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn synth_train_eval_figures_flow() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    synth_small(cwd);
    assert!(cwd.join("data/train/ground_truth.json").exists());

    let o = looplab(
        cwd,
        &[
            "train",
            "--train",
            "data/train",
            "--eval",
            "data/eval",
            "--preset",
            "desk",
            "--epochs",
            "2",
            "--pool-rank",
            "2",
            "--proj-dim",
            "8",
            "--gru-hidden",
            "8",
            "--gru-layers",
            "1",
            "--scorer-hidden",
            "8",
            "--out",
            "run",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("fixed-order eval"), "{table}");
    assert_eq!(RunManifest::load(&cwd.join("run")).unwrap().seed, Some(0));
    assert!(cwd.join("run/checkpoints/epoch-002.json").exists());

    let o = looplab(cwd, &["eval", "--checkpoint", "run", "--data", "data/eval"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let runs: Vec<_> = std::fs::read_dir(cwd.join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(runs.len(), 1);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(runs[0].join("eval.json")).unwrap()).unwrap();
    assert_eq!(report["pairs"], 80);
    assert_eq!(report["epoch"], 2);

    // same arguments, same directory
    let o = looplab(cwd, &["eval", "--checkpoint", "run", "--data", "data/eval"]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_dir(cwd.join("runs")).unwrap().count(), 1);

    let o = looplab(cwd, &["figures", "--run", "run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fig = cwd.join("run/figures");
    for f in [FIG1_CSV, FIG2_CSV, FIG3_CSV] {
        assert!(fig.join(f).exists(), "{f}");
    }
    let fig3 = std::fs::read_to_string(fig.join(FIG3_CSV)).unwrap();
    assert!(fig3.starts_with("epoch,deflated_train_acc,fixed_order_eval_acc"));
    assert_eq!(fig3.lines().count(), 3);
    let fig2 = std::fs::read_to_string(fig.join(FIG2_CSV)).unwrap();
    assert!(fig2.starts_with("epoch,correlation,sign_flip_rate,mean_sum"));
    let m = RunManifest::load(&fig).unwrap();
    assert_eq!(m.outputs.len(), 3);

    for cmd in [["probe", "--data"], ["shortcut", "--data"]] {
        let o = looplab(cwd, &[cmd[0], cmd[1], "data/eval"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
}

#[test]
fn figures_on_an_empty_run_fails() {
    let dir = tempfile::tempdir().unwrap();
    synth_small(dir.path());
    let o =
        looplab(dir.path(), &["train", "--train", "data/train", "--preset", "desk", "--epochs", "0", "--out", "run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = looplab(dir.path(), &["figures", "--run", "run"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    synth_small(cwd);
    let o = looplab(
        cwd,
        &[
            "synth",
            "--pairs",
            "160",
            "--eval-pairs",
            "80",
            "--dim",
            "8",
            "--seq-len",
            "6",
            "--response-span",
            "3",
            "--chunk-size",
            "64",
            "--out",
            "again",
        ],
    );
    assert_eq!(code(&o), 0);
    for split in ["train", "eval"] {
        for f in ["manifest.json", "ground_truth.json", "chunk-00000.lsf"] {
            let a = std::fs::read(cwd.join("data").join(split).join(f)).unwrap();
            let b = std::fs::read(cwd.join("again").join(split).join(f)).unwrap();
            assert!(a == b, "{split}/{f} differs");
        }
    }
    for run in ["r1", "r2"] {
        let o = looplab(
            cwd,
            &[
                "train",
                "--train",
                "data/train",
                "--eval",
                "data/eval",
                "--preset",
                "desk",
                "--epochs",
                "2",
                "--gru-hidden",
                "8",
                "--out",
                run,
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["metrics.json", "metrics.csv", "checkpoints/epoch-002.params", "checkpoints/epoch-002.json"] {
        let a = std::fs::read(cwd.join("r1").join(f)).unwrap();
        let b = std::fs::read(cwd.join("r2").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}
