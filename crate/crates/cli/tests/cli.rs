use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn exrec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exrec"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Data rows of a CSV that starts with a schema comment and a header.
fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema_version="), "{}", path.display());
    lines.skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

/// Small cohort plus a fast booster config appended to the generated config.
fn cohort(dir: &Path, subjects: usize, classes: usize, seconds: usize) -> PathBuf {
    ok(&exrec(
        dir,
        &[
            "synth",
            "--seed",
            "11",
            "--subjects",
            &subjects.to_string(),
            "--classes",
            &classes.to_string(),
            "--seconds-per-class",
            &seconds.to_string(),
            "--output-dir",
            "data",
        ],
    ));
    let path = dir.join("data/exrec.toml");
    let text = fs::read_to_string(&path).unwrap().replace("iterations = 100", "iterations = 8");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn synth_writes_one_file_per_subject_reproducibly() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(&exrec(tmp.path(), &["synth", "--seed", "5", "--output-dir", "a"]));
    assert!(stdout.contains("null: 30000 samples"), "{stdout}");
    let files: Vec<_> = fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert_eq!(files.len(), 10);

    ok(&exrec(tmp.path(), &["synth", "--seed", "5", "--output-dir", "b"]));
    for name in files.iter().map(String::as_str).chain(["exrec.toml"]) {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(exrec(tmp.path(), &["synth", "--output-dir", "x"]).status.code(), Some(2), "seed is mandatory");
    assert_eq!(exrec(tmp.path(), &["synth", "--seed", "1", "--subjects", "0"]).status.code(), Some(2));
    assert_eq!(exrec(tmp.path(), &["evaluate", "--seed", "1", "--input", "missing.csv"]).status.code(), Some(2));
    fs::write(tmp.path().join("bad.toml"), "seed = \"one\"\n").unwrap();
    assert_eq!(exrec(tmp.path(), &["train", "--config", "bad.toml"]).status.code(), Some(2));
}

#[test]
fn extract_counts_rows_with_and_without_augmentation() {
    let tmp = TempDir::new().unwrap();
    // 1 subject x 2 sides x 2 classes x 25 one-second windows = 100 arm windows.
    let cfg = cohort(tmp.path(), 1, 2, 25);
    let cfg = cfg.to_str().unwrap();
    let stdout = ok(&exrec(tmp.path(), &["extract", "--config", cfg, "--limb", "arm", "--output-dir", "aug"]));
    assert!(stdout.contains("100 windows -> 300 rows x 450 columns"), "{stdout}");
    let rows = data_rows(&tmp.path().join("aug/features_arm.csv"));
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().all(|r| r.len() == 5 + 450));

    let stdout = ok(&exrec(tmp.path(), &["extract", "--config", cfg, "--limb", "arm", "--no-augment", "--output-dir", "raw"]));
    assert!(stdout.contains("100 rows x 450 columns"), "{stdout}");
    assert_eq!(data_rows(&tmp.path().join("raw/features_arm.csv")).len(), 100);
    let catalog = fs::read_to_string(tmp.path().join("raw/catalog.json")).unwrap();
    assert!(catalog.contains("schema_version"));
}

#[test]
fn bad_data_exits_with_3_and_names_the_line() {
    let tmp = TempDir::new().unwrap();
    let mut text = String::from("sbj_id,label");
    for pos in ["right_arm", "left_arm", "right_leg", "left_leg"] {
        for a in ["x", "y", "z"] {
            text.push_str(&format!(",{pos}_acc_{a}"));
        }
    }
    text.push('\n');
    text.push_str("1,lunges,0,0,1,0,0,1,0,0,1,0,0,1\n");
    text.push_str("1,lunges,0,oops,1,0,0,1,0,0,1,0,0,1\n");
    fs::write(tmp.path().join("bad.csv"), &text).unwrap();
    let out = exrec(tmp.path(), &["extract", "--seed", "1", "--input", "bad.csv", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.csv:3") && stderr.contains("right_arm_acc_y"), "{stderr}");

    let no_label = text.replace("sbj_id,label", "sbj_id,activity");
    fs::write(tmp.path().join("nolabel.csv"), no_label).unwrap();
    let out = exrec(tmp.path(), &["evaluate", "--seed", "1", "--input", "nolabel.csv", "--output-dir", "o"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column 'label'"));
}

#[test]
fn evaluate_reports_five_folds_per_limb_reproducibly() {
    let tmp = TempDir::new().unwrap();
    let cfg = cohort(tmp.path(), 10, 3, 8);
    let cfg = cfg.to_str().unwrap();
    let stdout = ok(&exrec(tmp.path(), &["evaluate", "--config", cfg, "--output-dir", "r1"]));
    assert!(stdout.contains("arm: macro F1") && stdout.contains("leg: macro F1"), "{stdout}");
    for limb in ["arm", "leg"] {
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join(format!("r1/report_{limb}.json"))).unwrap()).unwrap();
        assert_eq!(report["schema_version"], 1);
        assert_eq!(report["limb"], limb);
        assert_eq!(report["folds"].as_array().unwrap().len(), 5);
        assert_eq!(report["f_scores"].as_array().unwrap().len(), 450);
        let confusion = data_rows(&tmp.path().join(format!("r1/confusion_{limb}.csv")));
        assert_eq!(confusion.len(), 3);
        let total: u64 = confusion.iter().flat_map(|r| r[1..].iter().map(|v| v.parse::<u64>().unwrap())).sum();
        // 10 subjects x 2 sides x 3 classes x 8 windows.
        assert_eq!(total, 480);
    }

    ok(&exrec(tmp.path(), &["evaluate", "--config", cfg, "--limb", "arm", "--threads", "1", "--output-dir", "r2"]));
    assert_eq!(
        fs::read(tmp.path().join("r1/report_arm.json")).unwrap(),
        fs::read(tmp.path().join("r2/report_arm.json")).unwrap()
    );
    assert!(!tmp.path().join("r2/report_leg.json").exists());
}

#[test]
fn train_then_predict() {
    let tmp = TempDir::new().unwrap();
    let cfg = cohort(tmp.path(), 3, 3, 6);
    let cfg = cfg.to_str().unwrap();

    let out = exrec(tmp.path(), &["predict", "--config", cfg, "--model", "nope.json", "--output-dir", "p"]);
    assert_eq!(out.status.code(), Some(2), "missing model file");

    ok(&exrec(tmp.path(), &["train", "--config", cfg, "--limb", "leg", "--threads", "1", "--output-dir", "m1"]));
    ok(&exrec(tmp.path(), &["train", "--config", cfg, "--limb", "leg", "--threads", "3", "--output-dir", "m3"]));
    assert_eq!(
        fs::read(tmp.path().join("m1/model_leg.json")).unwrap(),
        fs::read(tmp.path().join("m3/model_leg.json")).unwrap(),
        "model depends on thread count"
    );

    let stdout = ok(&exrec(tmp.path(), &["predict", "--config", cfg, "--model", "m1/model_leg.json", "--output-dir", "p"]));
    assert!(stdout.contains("leg: 108 windows"), "{stdout}");
    let rows = data_rows(&tmp.path().join("p/predictions_leg.csv"));
    assert_eq!(rows.len(), 108);
    for row in &rows {
        let sum: f64 = row[5..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "{row:?}");
    }

    let out = exrec(tmp.path(), &["predict", "--config", cfg, "--model", "m1/model_leg.json", "--limb", "arm"]);
    assert_eq!(out.status.code(), Some(2), "limb mismatch");
}
