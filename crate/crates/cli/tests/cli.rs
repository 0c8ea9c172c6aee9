mod support;

use memorability::data::{LabeledDataset, LabeledRecord};
use memorability::synthetic::{
    constant_dataset, learnability_fixture, teacher_dataset, teacher_weights,
};
use support::common::{sinusoid_frame, translating_sequence};
use support::{
    code, increasing_checkpoint, path_str, run, stderr, stdout, write_dataset, write_video,
};

fn ramp(n: usize) -> LabeledDataset {
    let records = (0..n)
        .map(|i| LabeledRecord {
            video_id: format!("r{i}"),
            features: vec![i as f64],
            short_term: i as f64 / n as f64,
            long_term: 1.0 - i as f64 / n as f64,
        })
        .collect();
    LabeledDataset::new(records, 1).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let out = run([
        "train",
        "--labels",
        "l.csv",
        "--val-fraction",
        "0.2",
        "--out",
        "m",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--features"), "{}", stderr(&out));
    assert!(stderr(&out).contains("Usage"));

    assert_eq!(code(&run(["inspect", "--checkpoint", "x", "--bogus"])), 2);
    assert_eq!(code(&run(["no-such-command"])), 2);
    assert_eq!(
        code(&run([
            "train",
            "--features",
            "f",
            "--labels",
            "l",
            "--out",
            "m"
        ])),
        2
    );
    assert_eq!(
        code(&run([
            "split",
            "--features",
            "f",
            "--labels",
            "l",
            "--val-fraction",
            "1.5",
            "--out",
            "p"
        ])),
        2
    );
    assert_eq!(code(&run(["--help"])), 0);
}

#[test]
fn missing_files_exit_1_and_name_the_file() {
    let out = run(["inspect", "--checkpoint", "/nonexistent/model.memk"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("/nonexistent/model.memk"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("garbage.memk");
    std::fs::write(&bad, b"not a checkpoint at all").unwrap();
    let out = run(["inspect", "--checkpoint", path_str(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("magic"), "{}", stderr(&out));
}

#[test]
fn train_on_learnability_fixture_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (tr, va) = learnability_fixture(0);
    let (tf, tl) = write_dataset(dir.path(), "train", &tr);
    let (vf, vl) = write_dataset(dir.path(), "val", &va);
    let ck = dir.path().join("model.memk");
    let out = run([
        "train",
        "--features",
        path_str(&tf),
        "--labels",
        path_str(&tl),
        "--feature-dim",
        "16",
        "--val-features",
        path_str(&vf),
        "--val-labels",
        path_str(&vl),
        "--out",
        path_str(&ck),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(ck.exists());
    assert!(stdout(&out).contains("val spearman"));
    let history = std::fs::read_to_string(dir.path().join("model.memk.history.csv")).unwrap();
    // header plus the 100 default epochs
    assert_eq!(history.lines().count(), 101);
    assert_eq!(history.lines().filter(|l| l.ends_with(",1")).count(), 1);

    let info = stdout(&run(["inspect", "--checkpoint", path_str(&ck)]));
    assert!(info.contains("dims: 16,512,512,1"), "{info}");
    assert!(info.contains("epochs run: 100"));
    assert!(info.contains("target: short"));
}

#[test]
fn train_with_validation_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let w = teacher_weights(4, 1);
    let (f, l) = write_dataset(dir.path(), "all", &teacher_dataset(80, &w, 0.02, 2, "a"));
    let ck = dir.path().join("m.memk");
    let out = run([
        "train",
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
        "--feature-dim",
        "4",
        "--val-fraction",
        "0.25",
        "--epochs",
        "3",
        "--batch-size",
        "16",
        "--hidden",
        "8",
        "--target",
        "long",
        "--loss",
        "mse",
        "--optimizer",
        "sgd",
        "--lr",
        "0.05",
        "--out",
        path_str(&ck),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let info = stdout(&run(["inspect", "--checkpoint", path_str(&ck)]));
    assert!(
        info.contains("dims: 4,8,1") && info.contains("target: long"),
        "{info}"
    );
}

#[test]
fn data_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let w = teacher_weights(4, 1);
    let (f, l) = write_dataset(dir.path(), "all", &teacher_dataset(40, &w, 0.02, 2, "a"));
    let ck = dir.path().join("m.memk");
    // wrong --feature-dim for the file
    let out = run([
        "train",
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
        "--val-fraction",
        "0.25",
        "--out",
        path_str(&ck),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("all.features.csv") && stderr(&out).contains("4096"));
    // batch larger than the training split
    let out = run([
        "train",
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
        "--feature-dim",
        "4",
        "--val-fraction",
        "0.25",
        "--batch-size",
        "64",
        "--out",
        path_str(&ck),
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(!ck.exists());
}

#[test]
fn evaluate_prints_perfect_rank_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("inc.memk");
    increasing_checkpoint(&ck);
    let (f, l) = write_dataset(dir.path(), "ramp", &ramp(20));
    let out = run([
        "evaluate",
        "--checkpoint",
        path_str(&ck),
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
        "--run",
        "toy",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("run,spearman,pearson,mse"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[..2], ["toy", "1.0"]);

    // the long-term labels run the other way
    let out = run([
        "evaluate",
        "--checkpoint",
        path_str(&ck),
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
        "--target",
        "long",
    ]);
    assert_eq!(
        stdout(&out).lines().nth(1).unwrap().split(',').nth(1),
        Some("-1.0")
    );
}

#[test]
fn evaluate_dimension_mismatch_names_both_dims() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("inc.memk");
    increasing_checkpoint(&ck);
    let w = teacher_weights(7, 0);
    let (f, l) = write_dataset(dir.path(), "wide", &teacher_dataset(10, &w, 0.0, 1, "w"));
    let out = run([
        "evaluate",
        "--checkpoint",
        path_str(&ck),
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(
        err.contains("expected 1") && err.contains("found 7"),
        "{err}"
    );

    let out = run([
        "predict",
        "--checkpoint",
        path_str(&ck),
        "--features",
        path_str(&f),
        "--out",
        "/dev/null",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("found 7"));
}

#[test]
fn evaluate_constant_labels_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("inc.memk");
    increasing_checkpoint(&ck);
    let (f, l) = write_dataset(dir.path(), "flat", &constant_dataset(12, 1, 0.4, 3, "c"));
    let out = run([
        "evaluate",
        "--checkpoint",
        path_str(&ck),
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("degenerate"));
    assert!(
        stderr(&out).contains("spearman is degenerate"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn predict_writes_scores_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("inc.memk");
    increasing_checkpoint(&ck);
    let (f, _) = write_dataset(dir.path(), "ramp", &ramp(15));
    let pred = dir.path().join("pred.csv");
    let out = run([
        "predict",
        "--checkpoint",
        path_str(&ck),
        "--features",
        path_str(&f),
        "--out",
        path_str(&pred),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&pred).unwrap();
    let rows: Vec<(String, f64)> = text
        .lines()
        .map(|l| {
            let (id, s) = l.split_once(',').unwrap();
            (id.to_string(), s.parse().unwrap())
        })
        .collect();
    let ids: Vec<String> = (0..15).map(|i| format!("r{i}")).collect();
    assert_eq!(rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>(), ids);
    assert!(rows.iter().all(|r| r.1 > 0.0 && r.1 < 1.0));
    assert!(rows.windows(2).all(|w| w[0].1 < w[1].1));
}

#[test]
fn predict_on_empty_file_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("inc.memk");
    increasing_checkpoint(&ck);
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let pred = dir.path().join("pred.csv");
    let out = run([
        "predict",
        "--checkpoint",
        path_str(&ck),
        "--features",
        path_str(&empty),
        "--out",
        path_str(&pred),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(std::fs::read(&pred).unwrap(), b"");
}

#[test]
fn finetune_full_freeze_and_bad_block() {
    let dir = tempfile::tempdir().unwrap();
    let w = teacher_weights(5, 2);
    let (f, l) = write_dataset(dir.path(), "d", &teacher_dataset(64, &w, 0.02, 3, "d"));
    let base = [
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
        "--feature-dim",
        "5",
        "--val-fraction",
        "0.25",
        "--epochs",
        "3",
        "--batch-size",
        "8",
    ];
    let ck = dir.path().join("a.memk");
    let mut args = vec!["train"];
    args.extend(base);
    args.extend(["--hidden", "6", "--out", path_str(&ck)]);
    assert_eq!(code(&run(&args)), 0);

    let tuned = dir.path().join("b.memk");
    let mut args = vec!["finetune", "--checkpoint", path_str(&ck)];
    args.extend(base);
    args.extend(["--freeze", "1,2", "--lr", "0.5", "--out", path_str(&tuned)]);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let weights = |p: &std::path::Path| {
        memorability::train::load_checkpoint(p)
            .unwrap()
            .model
            .param_values()
    };
    assert_eq!(weights(&ck), weights(&tuned));

    let mut args = vec!["finetune", "--checkpoint", path_str(&ck)];
    args.extend(base);
    args.extend(["--freeze", "3", "--out", path_str(&tuned)]);
    let out = run(&args);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("block 3"), "{}", stderr(&out));
}

#[test]
fn motion_stats_orders_static_below_moving() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("frames");
    write_video(&root, "moving", &translating_sequence(3, 1.0, 16.0));
    write_video(&root, "still", &vec![sinusoid_frame(64, 64, 16.0, 0.0); 3]);
    write_video(&root, "lonely", &translating_sequence(1, 1.0, 16.0));
    let prefix = dir.path().join("m");
    let out = run([
        "motion-stats",
        "--frames-root",
        path_str(&root),
        "--bin-width",
        "0.5",
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("lonely"));

    let stats = std::fs::read_to_string(dir.path().join("m.videos.csv")).unwrap();
    let lines: Vec<&str> = stats.lines().collect();
    assert_eq!(lines[0], "video_id,mean_flow_magnitude");
    let value = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(lines[1].starts_with("moving,") && lines[2].starts_with("still,"));
    assert!(value(lines[2]) < value(lines[1]));
    let hist = std::fs::read_to_string(dir.path().join("m.histogram.csv")).unwrap();
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 2);
}

#[test]
fn motion_stats_empty_root_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run([
        "motion-stats",
        "--frames-root",
        path_str(dir.path()),
        "--out",
        path_str(&dir.path().join("m")),
    ]);
    assert_eq!(code(&out), 1);
    let out = run([
        "motion-stats",
        "--frames-root",
        "/nonexistent/frames",
        "--out",
        path_str(&dir.path().join("m")),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn split_writes_a_partition() {
    let dir = tempfile::tempdir().unwrap();
    let w = teacher_weights(3, 0);
    let ds = teacher_dataset(50, &w, 0.02, 1, "s");
    let (f, l) = write_dataset(dir.path(), "all", &ds);
    let prefix = dir.path().join("parts");
    let out = run([
        "split",
        "--features",
        path_str(&f),
        "--labels",
        path_str(&l),
        "--feature-dim",
        "3",
        "--val-fraction",
        "0.2",
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let count = |n: &str| {
        std::fs::read_to_string(dir.path().join(format!("parts.{n}.csv")))
            .unwrap()
            .lines()
            .count()
    };
    assert_eq!(count("train.features"), 40);
    assert_eq!(count("val.features"), 10);
    // label files carry a header line
    assert_eq!(count("train.labels"), 41);
    assert_eq!(count("val.labels"), 11);
}

#[test]
fn every_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let names = support::determinism_sweep(dir.path()).unwrap();
    assert_eq!(names.len(), 7);
}
