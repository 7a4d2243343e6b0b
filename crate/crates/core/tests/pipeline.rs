use exrec::augment::{augment_dataset, AugmentPolicy};
use exrec::domain::{Limb, Provenance};
use exrec::eval::{run_cv, synth_generate, SynthConfig};
use exrec::features::extract_dataset;
use exrec::ingest::{fuse_sides, window_streams, WindowedDataset};
use exrec::normalize::fit_quantile;
use exrec::pipeline::{train_limb, PipelineConfig, TrainedPipeline};

fn cohort(n_subjects: usize, seed: u64) -> WindowedDataset {
    let cfg = SynthConfig {
        n_subjects,
        n_classes: 3,
        seconds_per_class: 6.0,
        seed,
        ..SynthConfig::default()
    };
    let (streams, labels) = synth_generate(&cfg).unwrap();
    window_streams(&streams, &Default::default(), labels).unwrap()
}

fn quick(folds: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        folds,
        ..PipelineConfig::default()
    }
    .with_seed(3);
    for t in [&mut cfg.balanced, &mut cfg.regularized] {
        t.iterations = 6;
        t.min_samples_leaf = 5;
    }
    cfg
}

#[test]
fn cross_validation_is_reproducible_and_keeps_subjects_apart() {
    let d = cohort(6, 1);
    let cfg = quick(3);
    let a = run_cv(&d, Limb::Arm, &cfg).unwrap();
    let b = run_cv(&d, Limb::Arm, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    let mut validated: Vec<String> = a.folds.iter().flat_map(|f| f.validation_subjects.clone()).collect();
    validated.sort();
    assert_eq!(validated, d.subjects());
    // Both sides of 6 subjects, 3 classes, 6 windows each.
    assert_eq!(a.folds.iter().map(|f| f.validation_rows).sum::<usize>(), 6 * 2 * 3 * 6);
    for f in &a.folds {
        // Originals plus each configured variant of every training window.
        assert_eq!(f.train_rows, cfg.augmentation.multiplier() * (6 * 2 * 3 * 6 - f.validation_rows));
        assert!((0.0..=1.0).contains(&f.macro_f1));
    }
    let total: u64 = a.confusion_total.iter().flatten().sum();
    assert_eq!(total as usize, 6 * 2 * 3 * 6);
}

#[test]
fn a_different_seed_changes_the_folds() {
    let d = cohort(6, 1);
    let a = run_cv(&d, Limb::Leg, &quick(3)).unwrap();
    let b = run_cv(&d, Limb::Leg, &quick(3).with_seed(99)).unwrap();
    let groups = |r: &exrec::eval::EvalReport| r.folds.iter().map(|f| f.validation_subjects.clone()).collect::<Vec<_>>();
    assert_ne!(groups(&a), groups(&b));
}

#[test]
fn quantile_maps_follow_the_training_rows() {
    let d = fuse_sides(&cohort(4, 2), Limb::Arm);
    let m = extract_dataset(&d, 50.0).unwrap().matrix;
    let half = m.n_rows() / 2;
    let first: Vec<usize> = (0..half).collect();
    let second: Vec<usize> = (half..m.n_rows()).collect();
    let a = fit_quantile(&m.select_rows(&first), 100).unwrap();
    let b = fit_quantile(&m.select_rows(&second), 100).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, fit_quantile(&m.select_rows(&first), 100).unwrap());
}

#[test]
fn train_limb_matches_a_manual_fit() {
    let d = cohort(3, 4);
    let cfg = quick(2);
    let model = train_limb(&d, Limb::Leg, &cfg).unwrap();

    let fused = fuse_sides(&d, Limb::Leg);
    let augmented = augment_dataset(&fused, &cfg.augmentation);
    let n = fused.len();
    assert_eq!(augmented.len(), cfg.augmentation.multiplier() * n);
    assert!(augmented.windows[..n].iter().all(|w| w.meta.provenance == Provenance::Original));
    assert!(augmented.windows[n..].iter().all(|w| w.meta.provenance != Provenance::Original));

    let matrix = extract_dataset(&augmented, 50.0).unwrap().matrix;
    let mut manual = TrainedPipeline::fit(&matrix, &matrix.labels(), &d.label_set, &cfg).unwrap();
    manual.limb = Some(Limb::Leg);
    assert_eq!(serde_json::to_string(&model).unwrap(), serde_json::to_string(&manual).unwrap());
}

#[test]
fn saved_models_predict_identically() {
    let d = cohort(3, 5);
    let cfg = PipelineConfig {
        augmentation: AugmentPolicy::none(),
        ..quick(2)
    };
    let model = train_limb(&d, Limb::Arm, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let back = TrainedPipeline::load(&path).unwrap();

    let m = extract_dataset(&fuse_sides(&d, Limb::Arm), 50.0).unwrap().matrix;
    let p = model.predict(&m).unwrap();
    let q = back.predict(&m).unwrap();
    assert_eq!(p.len(), m.n_rows());
    for (a, b) in p.iter().zip(&q) {
        assert_eq!(a.class, b.class);
        assert_eq!(a.probabilities, b.probabilities);
        assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
