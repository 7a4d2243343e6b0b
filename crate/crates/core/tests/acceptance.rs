//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.

use std::time::{Duration, Instant};

use exrec::augment::{invert_axis, rotate_180_x};
use exrec::boosting::{argmax, soft_vote, train_gbdt, ClassWeighting, TrainConfig};
use exrec::domain::{LabelSet, Limb, Provenance, Side, TriaxialSample, TriaxialWindow, WindowMeta};
use exrec::eval::{macro_f1, run_cv, synth_generate, SynthConfig};
use exrec::features::{
    anova_f_scores, diff_n, dominant_frequencies, extract_window, katz_fd, petrosian_fd, ChannelFamily, FeatureMatrix,
    FEATURE_COUNT,
};
use exrec::ingest::window_streams;
use exrec::normalize::fit_quantile;
use exrec::pipeline::PipelineConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

fn report(n: u32, ok: bool, detail: impl std::fmt::Display) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn random_window(rng: &mut ChaCha8Rng, limb: Limb) -> TriaxialWindow {
    let samples = (0..50)
        .map(|i| {
            TriaxialSample::new(
                i as f64 / 50.0,
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            )
        })
        .collect();
    TriaxialWindow {
        meta: WindowMeta {
            subject: "s".into(),
            limb,
            side: Side::Right,
            label: 0,
            provenance: Provenance::Original,
        },
        samples,
    }
}

#[test]
fn criterion_01_feature_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = random_window(&mut rng, Limb::Arm);
    let start = Instant::now();
    let v = extract_window(&w, 50.0).unwrap();
    let elapsed = start.elapsed();
    let count = |family: ChannelFamily| {
        exrec::features::feature_infos().iter().filter(|f| f.channel_family == family).count()
    };
    let (raw, smv, angle) = (count(ChannelFamily::Raw), count(ChannelFamily::Smv), count(ChannelFamily::Angle));
    let mut per_channel = std::collections::BTreeMap::<String, usize>::new();
    for info in exrec::features::feature_infos() {
        *per_channel.entry(info.channel.name().to_string()).or_default() += 1;
    }
    let ok = v.values.len() == 450
        && FEATURE_COUNT == 450
        && (raw, smv, angle) == (135, 180, 135)
        && per_channel.len() == 10
        && per_channel.values().all(|&c| c == 45)
        && elapsed < Duration::from_secs(1);
    report(1, ok, format_args!("{} features, {raw}/{smv}/{angle}, {elapsed:?}", v.values.len()));
}

#[test]
fn criterion_02_augmentation_algebra() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    const N: usize = 1000;
    let unchanged_by_arm_inversion = ["acc_y__", "acc_z__", "smv2_yz__", "angle_yz__"];
    for i in 0..N {
        let limb = if i % 2 == 0 { Limb::Arm } else { Limb::Leg };
        let w = random_window(&mut rng, limb);
        if invert_axis(&invert_axis(&w)) != w || rotate_180_x(&rotate_180_x(&w)) != w {
            failures.push(format!("window {i}: not an involution"));
        }
        if invert_axis(&rotate_180_x(&w)) != rotate_180_x(&invert_axis(&w)) {
            failures.push(format!("window {i}: operators do not commute"));
        }
        let base = extract_window(&w, 50.0).unwrap();
        let rotated = extract_window(&rotate_180_x(&w), 50.0).unwrap();
        for (j, name) in base.names.iter().enumerate() {
            if name.starts_with("smv2_") && base.values[j].to_bits() != rotated.values[j].to_bits() {
                failures.push(format!("window {i}: {name} changed under rotation"));
            }
        }
        if limb == Limb::Arm {
            let inverted = extract_window(&invert_axis(&w), 50.0).unwrap();
            for (j, name) in base.names.iter().enumerate() {
                if unchanged_by_arm_inversion.iter().any(|p| name.starts_with(p))
                    && base.values[j].to_bits() != inverted.values[j].to_bits()
                {
                    failures.push(format!("window {i}: {name} changed under arm inversion"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(10);
    report(2, ok, format_args!("{N} windows, {} violations {:?}, {elapsed:?}", failures.len(), failures.first()));
}

#[test]
fn criterion_03_extractor_oracles() {
    let petrosian = petrosian_fd(&[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    let katz = katz_fd(&[0.0, 2.0, 1.0]);
    let n = 50;
    let tone: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / 50.0).sin()).collect();
    let (f1, _) = dominant_frequencies(&tone, 50.0);
    let d2 = diff_n(&[0.0, 1.0, 4.0, 9.0, 16.0], 2).unwrap();
    let ok = (petrosian - 1.1444).abs() <= 1e-3 && (katz - 2.41).abs() <= 1e-2 && f1 == 5.0 && d2 == vec![2.0, 2.0, 2.0];
    report(3, ok, format_args!("petrosian {petrosian:.5}, katz {katz:.5}, f1 {f1}, d2 {d2:?}"));
}

#[test]
fn criterion_04_anova_oracle() {
    let m = FeatureMatrix::from_rows(vec!["f".into()], vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]], Vec::new()).unwrap();
    let f = anova_f_scores(&m, &[0, 0, 1, 1]).unwrap()[0];
    report(4, (f - 8.0).abs() <= 1e-9, format_args!("F = {f}"));
}

#[test]
fn criterion_05_quantile_uniformity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dist = LogNormal::new(0.0, 1.5).unwrap();
    let values: Vec<f64> = (0..5000).map(|_| dist.sample(&mut rng)).collect();
    let m = FeatureMatrix::from_rows(vec!["x".into()], values.iter().map(|&v| vec![v]).collect(), Vec::new()).unwrap();
    let q = fit_quantile(&m, 1000).unwrap();
    let mut u = q.transform(&m).unwrap().column(0);
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let ks = u
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max);

    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = (sorted[2499] + sorted[2500]) / 2.0;
    let at = |v: f64| {
        let mut row = [v];
        q.transform_row(&mut row).unwrap();
        row[0]
    };
    let (mid, low, high) = (at(median), at(-1.0), at(sorted[4999] * 10.0));
    let ok = ks < 0.05 && (mid - 0.5).abs() <= 0.01 && low == 0.0 && high == 1.0;
    report(5, ok, format_args!("KS {ks:.4}, median -> {mid:.4}, clip {low}/{high}"));
}

/// Feature 0 is the class index; the others are noise.
fn separable(n: usize) -> (FeatureMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = usize::from(i % 3 == 0);
        rows.push(vec![class as f64, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        labels.push(class);
    }
    let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], rows, Vec::new()).unwrap();
    (m, labels)
}

#[test]
fn criterion_06_boosting_sanity() {
    let labels = LabelSet::new(["neg", "pos"]).unwrap();
    let (m, y) = separable(300);
    let mut notes = Vec::new();

    let prior = [200.0 / 300.0, 100.0 / 300.0];
    let zero = TrainConfig {
        iterations: 0,
        class_weighting: ClassWeighting::None,
        ..TrainConfig::regularized()
    };
    let model = train_gbdt(&m, &y, &labels, &zero).unwrap();
    let p = model.predict_proba(m.row(0)).unwrap();
    let priors_ok = p.iter().zip(prior).all(|(a, b)| (a - b).abs() <= 1e-12);
    notes.push(format!("priors {p:?}"));

    let cfg = TrainConfig {
        iterations: 20,
        ..TrainConfig::balanced()
    };
    let model = train_gbdt(&m, &y, &labels, &cfg).unwrap();
    let probs = model.predict_proba_matrix(&m).unwrap();
    let acc = probs.iter().zip(&y).filter(|(p, &t)| argmax(p) == t).count() as f64 / y.len() as f64;
    let sums_ok = probs.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    let loss_ok = model.train_loss.windows(2).all(|w| w[1] <= w[0]);
    notes.push(format!("accuracy {acc}, loss {:.4} -> {:.4}", model.train_loss[0], model.train_loss.last().unwrap()));

    let reg = TrainConfig::regularized();
    let train_in = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train_gbdt(&m, &y, &labels, &reg).unwrap())
    };
    let (one, four) = (train_in(1), train_in(4));
    let identical = serde_json::to_string(&one).unwrap() == serde_json::to_string(&four).unwrap();
    let reg_loss_ok = one.train_loss.windows(2).all(|w| w[1] <= w[0]);
    notes.push(format!("thread-identical {identical}"));

    let ok = priors_ok && acc == 1.0 && sums_ok && loss_ok && reg_loss_ok && identical;
    report(6, ok, notes.join("; "));
}

/// Straight-from-definition macro F1.
fn brute_force_macro_f1(truth: &[usize], pred: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    let mut present = 0usize;
    for c in 0..k {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (&t, &p) in truth.iter().zip(pred) {
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        if tp + fp + fn_ == 0 {
            continue;
        }
        present += 1;
        total += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
    }
    if present == 0 {
        0.0
    } else {
        total / present as f64
    }
}

#[test]
fn criterion_07_metric_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let k = rng.random_range(1..=19);
        let n = rng.random_range(1..60);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<usize> = (0..n)
            .map(|i| if rng.random_bool(0.5) { truth[i] } else { rng.random_range(0..k) })
            .collect();
        if macro_f1(&truth, &pred, k).unwrap() != brute_force_macro_f1(&truth, &pred, k) {
            mismatches += 1;
        }
    }
    report(7, mismatches == 0, format_args!("10000 cases, {mismatches} mismatches"));
}

#[test]
fn criterion_08_synthetic_end_to_end() {
    let start = Instant::now();
    let synth = SynthConfig {
        seed: 8,
        ..SynthConfig::default()
    };
    let (streams, labels) = synth_generate(&synth).unwrap();
    assert_eq!((synth.n_subjects, labels.len()), (10, 4));
    let cfg = PipelineConfig::default().with_seed(8);
    let dataset = window_streams(&streams, &cfg.window, labels).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    for limb in Limb::ALL {
        let report = run_cv(&dataset, limb, &cfg).unwrap();
        ok &= report.voting.mean >= 0.95 && report.folds.len() == 5;
        notes.push(format!(
            "{limb} macro F1 {:.4} +/- {:.4} (folds {:?})",
            report.voting.mean,
            report.voting.std,
            report.fold_scores().iter().map(|f| (f * 1e4).round() / 1e4).collect::<Vec<_>>()
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    notes.push(format!("{elapsed:.1?}"));
    report(8, ok, notes.join("; "));
}

/// Needs the public dataset windowed into `EXREC_WEAR_WINDOWS` (a file written
/// by `exrec extract --windows`). Run with `--ignored`.
#[test]
#[ignore = "requires the external WEAR dataset"]
fn criterion_09_wear_reproduction() {
    let Ok(path) = std::env::var("EXREC_WEAR_WINDOWS") else {
        println!("criterion 9: SKIP (EXREC_WEAR_WINDOWS not set)");
        return;
    };
    let labels = LabelSet::wear();
    let cfg = PipelineConfig::default().with_seed(9);
    let dataset = exrec::ingest::read_windows_csv(std::path::Path::new(&path), &labels, cfg.window.rate).unwrap();
    let targets = [(Limb::Arm, 0.6172), (Limb::Leg, 0.5595)];
    let mut notes = Vec::new();
    let mut ok = true;
    for (limb, target) in targets {
        let report = run_cv(&dataset, limb, &cfg).unwrap();
        ok &= (report.voting.mean - target).abs() <= 0.05;
        notes.push(format!("{limb} {:.4} (target {target})", report.voting.mean));
    }
    report(9, ok, notes.join("; "));
}

#[test]
fn criterion_10_soft_vote_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    for _ in 0..1000 {
        let k = rng.random_range(2..20);
        let a: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let (avg, class) = soft_vote(&a, &b).unwrap();
        ok &= avg.iter().zip(a.iter().zip(&b)).all(|(v, (x, y))| *v == (x + y) / 2.0);
        ok &= class == argmax(&avg);
    }
    let (_, tie) = soft_vote(&[0.2, 0.4, 0.4], &[0.2, 0.4, 0.4]).unwrap();
    let (_, cross) = soft_vote(&[0.5, 0.5, 0.0], &[0.3, 0.3, 0.4]).unwrap();
    ok &= tie == 1 && cross == 0;
    report(10, ok, format_args!("1000 random pairs, tie -> {tie}, crossed tie -> {cross}"));
}
