//! One function per subcommand. Each writes its artifacts under the output
//! directory and prints a short summary to stdout.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use exrec::augment::{augment_dataset, AugmentPolicy};
use exrec::domain::{LabelSet, Limb, Provenance};
use exrec::eval::{run_cv, subject_id, synth_generate};
use exrec::features::{extract_dataset, write_catalog_json, write_feature_csv};
use exrec::ingest::{
    fuse_sides, parse_wide_csv, read_windows_csv, window_streams, write_wide_csv, write_windows_csv, ParseOptions,
    SensorStream, WindowedDataset,
};
use exrec::pipeline::{train_limb, TrainedPipeline};
use exrec::{Error, Result};

use crate::config::RunConfig;

pub const PREDICTION_SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

/// A window dump starts (after comments) with the dump's fixed columns.
fn is_window_dump(path: &Path) -> Result<bool> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?;
    Ok(headers.get(0) == Some("subject") && headers.iter().any(|h| h == "window_index"))
}

/// Windows from every input file, in input order.
fn load_windows(cfg: &RunConfig, labels: &LabelSet, require_label: bool) -> Result<WindowedDataset> {
    let opts = ParseOptions {
        rate: cfg.window.rate,
        labels,
        require_label,
    };
    let mut windows = Vec::new();
    let mut streams: Vec<SensorStream> = Vec::new();
    for path in cfg.input_files()? {
        if is_window_dump(&path)? {
            let dump = read_windows_csv(&path, labels, cfg.window.rate)?;
            windows.extend(dump.windows.into_iter().filter(|w| w.meta.provenance == Provenance::Original));
        } else {
            streams.extend(parse_wide_csv(&path, &cfg.columns, &opts)?);
        }
    }
    windows.extend(window_streams(&streams, &cfg.window, labels.clone())?.windows);
    if windows.is_empty() {
        return Err(Error::InsufficientData("inputs produced no complete windows".into()));
    }
    Ok(WindowedDataset {
        windows,
        label_set: labels.clone(),
    })
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let synth = cfg.synth()?;
    let (streams, labels) = synth_generate(&synth)?;
    let dir = prepare_output(cfg)?;

    let mut files = Vec::new();
    let mut class_samples = vec![0usize; labels.len()];
    for i in 0..synth.n_subjects {
        let id = subject_id(i);
        let own: Vec<SensorStream> = streams.iter().filter(|s| s.subject == id).cloned().collect();
        let name = format!("subject_{id}.csv");
        write_wide_csv(&dir.join(&name), &own, &cfg.columns, &labels)?;
        for &l in &own[0].labels {
            class_samples[l] += 1;
        }
        files.push(PathBuf::from(name));
    }

    // A ready-to-use config for the generated cohort.
    let follow_up = RunConfig {
        seed: Some(synth.seed),
        output_dir: None,
        inputs: files.clone(),
        labels: Some(labels.names().to_vec()),
        ..cfg.clone()
    };
    let config_path = dir.join("exrec.toml");
    fs::write(&config_path, format!("# schema_version=1\n{}", follow_up.to_toml()?)).map_err(io_err(&config_path))?;

    println!("wrote {} subject files and {} to {}", files.len(), config_path.display(), dir.display());
    for (name, count) in labels.names().iter().zip(class_samples) {
        println!("{name}: {count} samples per sensor position");
    }
    Ok(())
}

pub fn extract(cfg: &RunConfig) -> Result<()> {
    let labels = cfg.label_set()?;
    let pipeline = cfg.pipeline()?;
    let dataset = load_windows(cfg, &labels, true)?;
    let dir = prepare_output(cfg)?;

    let windows_path = dir.join("windows.csv");
    write_windows_csv(&windows_path, &dataset)?;
    write_catalog_json(&dir.join("catalog.json"))?;
    for limb in cfg.limbs() {
        let fused = fuse_sides(&dataset, limb);
        let augmented = augment_dataset(&fused, &pipeline.augmentation);
        let extraction = extract_dataset(&augmented, pipeline.window.rate)?;
        let path = dir.join(format!("features_{limb}.csv"));
        write_feature_csv(&path, &extraction.matrix, &labels)?;
        println!(
            "{limb}: {} windows -> {} rows x {} columns ({} non-finite values replaced) -> {}",
            fused.len(),
            extraction.matrix.n_rows(),
            extraction.matrix.n_cols(),
            extraction.replaced,
            path.display()
        );
    }
    println!("{} windows -> {}", dataset.len(), windows_path.display());
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let labels = cfg.label_set()?;
    let pipeline = cfg.pipeline()?;
    let dataset = load_windows(cfg, &labels, true)?;
    let dir = prepare_output(cfg)?;
    for limb in cfg.limbs() {
        let report = run_cv(&dataset, limb, &pipeline)?;
        report.write_json(&dir.join(format!("report_{limb}.json")))?;
        report.write_confusion_csv(&dir.join(format!("confusion_{limb}.csv")))?;
        report.write_group_stats_csv(&dir.join(format!("f_scores_{limb}.csv")))?;
        let folds: Vec<String> = report.fold_scores().iter().map(|f| format!("{:.4}", f)).collect();
        println!(
            "{limb}: macro F1 {:.4} +/- {:.4} (balanced {:.4}, regularized {:.4}); folds [{}]",
            report.voting.mean,
            report.voting.std,
            report.balanced.mean,
            report.regularized.mean,
            folds.join(", ")
        );
    }
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let labels = cfg.label_set()?;
    let pipeline = cfg.pipeline()?;
    let dataset = load_windows(cfg, &labels, true)?;
    let dir = prepare_output(cfg)?;
    for limb in cfg.limbs() {
        let model = train_limb(&dataset, limb, &pipeline)?;
        let path = dir.join(format!("model_{limb}.json"));
        model.save(&path)?;
        println!(
            "{limb}: trained on {} subjects -> {}",
            fuse_sides(&dataset, limb).subjects().len(),
            path.display()
        );
    }
    Ok(())
}

pub fn predict(cfg: &RunConfig) -> Result<()> {
    let model_path = cfg
        .model
        .clone()
        .ok_or_else(|| Error::Config("predict needs a model: pass --model or set `model`".into()))?;
    if !model_path.is_file() {
        return Err(Error::Config(format!("model file {} does not exist", model_path.display())));
    }
    let model = TrainedPipeline::load(&model_path)?;
    let limb: Limb = match (model.limb, cfg.limb) {
        (Some(m), Some(c)) if m != c => {
            return Err(Error::Config(format!("model was trained for {m}, not {c}")));
        }
        (Some(m), _) => m,
        (None, Some(c)) => c,
        (None, None) => return Err(Error::Config("model has no limb; pass --limb".into())),
    };
    let labels = model.label_set.clone();
    let dataset = load_windows(cfg, &labels, false)?;
    let fused = fuse_sides(&dataset, limb);
    if fused.is_empty() {
        return Err(Error::InsufficientData(format!("inputs contain no {limb} windows")));
    }
    let extraction = extract_dataset(&augment_dataset(&fused, &AugmentPolicy::none()), cfg.window.rate)?;
    let predictions = model.predict(&extraction.matrix)?;

    let dir = prepare_output(cfg)?;
    let path = dir.join(format!("predictions_{limb}.csv"));
    let mut file = File::create(&path).map_err(io_err(&path))?;
    writeln!(file, "# schema_version={PREDICTION_SCHEMA_VERSION}").map_err(io_err(&path))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header = vec!["subject".to_string(), "limb".into(), "side".into(), "start_time".into(), "prediction".into()];
    header.extend(labels.names().iter().map(|n| format!("p_{n}")));
    writer.write_record(&header)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (w, p) in fused.windows.iter().zip(&predictions) {
        let name = labels.name(p.class).unwrap_or_default();
        *counts.entry(name).or_default() += 1;
        let mut row = vec![
            w.meta.subject.clone(),
            limb.to_string(),
            w.meta.side.to_string(),
            w.start_time().to_string(),
            name.to_string(),
        ];
        row.extend(p.probabilities.iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(io_err(&path))?;
    println!("{limb}: {} windows -> {}", predictions.len(), path.display());
    for (name, n) in counts {
        println!("  {name}: {n}");
    }
    Ok(())
}
