//! Helpers for driving the built binary against fixture files.

#![allow(dead_code)]

#[path = "../../../core/tests/common/mod.rs"]
pub mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use memorability::data::{write_features, write_labels, LabeledDataset};
use memorability::motion::{save_frame, FrameGray};
use memorability::nn::{Matrix, MlpModel};
use memorability::train::{save_checkpoint, CheckpointMeta};

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_memorability"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Writes `{name}.features.csv` and `{name}.labels.csv` under `dir`.
pub fn write_dataset(dir: &Path, name: &str, ds: &LabeledDataset) -> (PathBuf, PathBuf) {
    let f = dir.join(format!("{name}.features.csv"));
    let l = dir.join(format!("{name}.labels.csv"));
    write_features(&f, &ds.feature_records()).unwrap();
    write_labels(&l, &ds.label_records()).unwrap();
    (f, l)
}

pub fn write_video(root: &Path, name: &str, frames: &[FrameGray]) {
    let dir = root.join(name);
    std::fs::create_dir_all(&dir).unwrap();
    for (i, f) in frames.iter().enumerate() {
        save_frame(dir.join(format!("{i:04}.pgm")), f).unwrap();
    }
}

/// A one-feature model whose score is strictly increasing in the feature.
pub fn increasing_checkpoint(path: &Path) {
    let mut model = MlpModel::init(&[1, 1], 0).unwrap();
    model.blocks_mut()[0].linear.weight = Matrix::new(1, 1, vec![1.0]).unwrap();
    let meta = CheckpointMeta {
        target: None,
        seed: 0,
        epochs_run: 0,
        best_val_spearman: None,
    };
    save_checkpoint(path, &model, &meta).unwrap();
}

/// Runs the binary twice with the same arguments and returns the bytes of
/// `outputs` after each run, plus both stdouts.
pub fn run_twice(args: &[&str], outputs: &[PathBuf]) -> [(String, Vec<Vec<u8>>); 2] {
    let once = || {
        let out = run(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        let files = outputs.iter().map(|p| std::fs::read(p).unwrap()).collect();
        (stdout(&out), files)
    };
    [once(), once()]
}

/// Every subcommand, run twice on fixed inputs in `dir`, must leave
/// byte-identical files and print identical summaries. Returns the names of
/// the subcommands checked.
pub fn determinism_sweep(dir: &Path) -> Result<Vec<&'static str>, String> {
    use memorability::synthetic::{teacher_dataset, teacher_weights};
    let w = teacher_weights(6, 11);
    let (tf, tl) = write_dataset(dir, "train", &teacher_dataset(96, &w, 0.02, 12, "t"));
    let (vf, vl) = write_dataset(dir, "val", &teacher_dataset(32, &w, 0.02, 13, "v"));
    let root = dir.join("frames");
    write_video(&root, "moving", &common::translating_sequence(3, 1.0, 16.0));
    write_video(
        &root,
        "still",
        &vec![common::sinusoid_frame(64, 64, 16.0, 0.0); 2],
    );
    let p = |name: &str| dir.join(name);
    let s = |path: &Path| path_str(path).to_string();
    let ck = p("model.memk");
    let ft = p("tuned.memk");

    let common_train = [
        "--features",
        &s(&tf),
        "--labels",
        &s(&tl),
        "--feature-dim",
        "6",
        "--val-features",
        &s(&vf),
        "--val-labels",
        &s(&vl),
        "--epochs",
        "4",
        "--batch-size",
        "16",
        "--seed",
        "5",
    ]
    .map(String::from);
    let mut train = vec!["train".to_string()];
    train.extend(common_train.iter().cloned());
    train.extend(["--hidden", "8,8", "--out", &s(&ck)].map(String::from));
    let mut finetune = vec!["finetune".to_string(), "--checkpoint".into(), s(&ck)];
    finetune.extend(common_train.iter().cloned());
    finetune.extend(["--freeze", "1", "--out", &s(&ft)].map(String::from));
    let split_train = [
        "split",
        "--features",
        &s(&tf),
        "--labels",
        &s(&tl),
        "--feature-dim",
        "6",
        "--val-fraction",
        "0.25",
        "--seed",
        "9",
        "--out",
        &s(&p("parts")),
    ]
    .map(String::from);

    let cases: Vec<(&'static str, Vec<String>, Vec<PathBuf>)> = vec![
        (
            "train",
            train,
            vec![ck.clone(), p("model.memk.history.csv")],
        ),
        (
            "finetune",
            finetune,
            vec![ft.clone(), p("tuned.memk.history.csv")],
        ),
        (
            "evaluate",
            [
                "evaluate",
                "--checkpoint",
                &s(&ck),
                "--features",
                &s(&vf),
                "--labels",
                &s(&vl),
                "--out",
                &s(&p("eval.csv")),
            ]
            .map(String::from)
            .to_vec(),
            vec![p("eval.csv")],
        ),
        (
            "predict",
            [
                "predict",
                "--checkpoint",
                &s(&ck),
                "--features",
                &s(&vf),
                "--out",
                &s(&p("pred.csv")),
            ]
            .map(String::from)
            .to_vec(),
            vec![p("pred.csv")],
        ),
        (
            "motion-stats",
            [
                "motion-stats",
                "--frames-root",
                &s(&root),
                "--iterations",
                "50",
                "--out",
                &s(&p("motion")),
            ]
            .map(String::from)
            .to_vec(),
            vec![p("motion.videos.csv"), p("motion.histogram.csv")],
        ),
        (
            "split",
            split_train.to_vec(),
            [
                "train.features",
                "train.labels",
                "val.features",
                "val.labels",
            ]
            .iter()
            .map(|n| p(&format!("parts.{n}.csv")))
            .collect(),
        ),
        (
            "inspect",
            ["inspect", "--checkpoint", &s(&ck)]
                .map(String::from)
                .to_vec(),
            vec![],
        ),
    ];

    let mut names = Vec::new();
    for (name, args, outputs) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let [a, b] = run_twice(&args, &outputs);
        if a != b {
            return Err(format!("{name}: outputs differ between runs"));
        }
        if a.1.iter().any(Vec::is_empty) {
            return Err(format!("{name}: wrote an empty file"));
        }
        names.push(name);
    }
    Ok(names)
}
