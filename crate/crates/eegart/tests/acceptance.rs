//! Acceptance gate: seven end-to-end criteria, each printing one PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//! Oracles here are written independently of the library's own algorithms:
//! naive DFT, characteristic-polynomial eigenvalues, and brute-force metric
//! recomputation straight from label pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use eegart::bench::{run_benchmark, BenchConfig};
use eegart::classifiers::{
    argmax, fit, forest, knn, mlp::MlpArch, tree, AlgorithmSpec, Family, ParamValue, Params,
    TrainSet,
};
use eegart::dataset::{
    build_splits, patient_split, undersample, LabeledFeatureSet, LabeledRow, PipelineConfig,
};
use eegart::dsp::{jacobi_eigen, magnitude_spectrum, next_pow2};
use eegart::edf::{ArtifactClass, CorpusIndex};
use eegart::features::{eigen_features, extract_features, CorrMatrix, FeatureConfig};
use eegart::metrics::{confusion, evaluate};
use eegart::montage::MontagedRecording;
use eegart::synth::{synth_corpus, SynthParams};

// ---------------------------------------------------------------------------
// independent oracles
// ---------------------------------------------------------------------------

fn naive_dft_magnitude(signal: &[f64]) -> Vec<f64> {
    let n = next_pow2(signal.len().max(1));
    let mut out = Vec::with_capacity(n / 2 + 1);
    for k in 0..=n / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &x) in signal.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64;
            re += x * angle.cos();
            im += x * angle.sin();
        }
        out.push((re * re + im * im).sqrt());
    }
    out
}

/// Characteristic-polynomial coefficients by the Faddeev-LeVerrier
/// recurrence, then all real roots by dense scan + bisection. Only sane for
/// tiny symmetric matrices.
fn charpoly_eigenvalues(m: &[f64], n: usize) -> Vec<f64> {
    let mat = |a: &[f64], i: usize, j: usize| a[i * n + j];
    let matmul = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = mat(a, i, k);
                for j in 0..n {
                    out[i * n + j] += aik * mat(b, k, j);
                }
            }
        }
        out
    };
    // p(x) = x^n + c[1] x^{n-1} + ... + c[n]
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    let mut mk = vec![0.0; n * n]; // M_0 = 0
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut am = matmul(m, &mk);
        for i in 0..n {
            am[i * n + i] += c[k - 1];
        }
        mk = am;
        let am2 = matmul(m, &mk);
        let trace: f64 = (0..n).map(|i| am2[i * n + i]).sum();
        c[k] = -trace / k as f64;
    }
    let p = |x: f64| -> f64 {
        let mut acc = 0.0;
        for coeff in &c {
            acc = acc * x + coeff;
        }
        acc
    };
    // symmetric matrices have n real roots inside the Gershgorin bound
    let bound = (0..n)
        .map(|i| (0..n).map(|j| mat(m, i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let steps = 400_000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev_f = p(prev_x);
    for s in 1..=steps {
        let x = -bound + 2.0 * bound * s as f64 / steps as f64;
        let f = p(x);
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if prev_f.signum() != f.signum() {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(lo).signum() == p(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_f = f;
    }
    roots
}

fn brute_force_metrics(
    truth: &[ArtifactClass],
    pred: &[ArtifactClass],
) -> (f64, f64, BTreeMap<ArtifactClass, f64>) {
    let n = truth.len() as f64;
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count() as f64;
    let mut weighted = 0.0;
    let mut weight_total = 0.0;
    let mut sens = BTreeMap::new();
    for class in ArtifactClass::ALL {
        let support = truth.iter().filter(|&&t| t == class).count() as f64;
        if support == 0.0 {
            continue;
        }
        let tp = truth
            .iter()
            .zip(pred)
            .filter(|(&t, &p)| t == class && p == class)
            .count() as f64;
        let predicted = pred.iter().filter(|&&p| p == class).count() as f64;
        let recall = tp / support;
        sens.insert(class, recall);
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        weighted += support * f1;
        weight_total += support;
    }
    (weighted / weight_total, correct / n, sens)
}

fn random_symmetric(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-3.0..3.0);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_numerical_kernels() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    let mut max_fft_err: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(4..=1024usize);
        let signal: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let fast = magnitude_spectrum(&signal);
        let slow = naive_dft_magnitude(&signal);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            max_fft_err = max_fft_err.max((a - b).abs());
        }
    }
    assert!(max_fft_err < 1e-9, "FFT vs DFT max err {max_fft_err}");

    let mut max_residual: f64 = 0.0;
    for _ in 0..100 {
        let n = 22;
        let m = random_symmetric(n, &mut rng);
        let eig = jacobi_eigen(&m, n).unwrap();
        for (i, &lambda) in eig.values.iter().enumerate() {
            let v = eig.vector(i);
            for r in 0..n {
                let av: f64 = (0..n).map(|c| m[r * n + c] * v[c]).sum();
                max_residual = max_residual.max((av - lambda * v[r]).abs());
            }
        }
    }
    assert!(max_residual < 1e-8, "Jacobi residual {max_residual}");

    for _ in 0..25 {
        let n = rng.gen_range(2..=4usize);
        let m = random_symmetric(n, &mut rng);
        let mut jacobi = jacobi_eigen(&m, n).unwrap().values;
        jacobi.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut oracle = charpoly_eigenvalues(&m, n);
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(jacobi.len(), oracle.len(), "root count for n={n}");
        for (a, b) in jacobi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "eigenvalue {a} vs charpoly root {b}");
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "kernel checks took {elapsed:?}");
    println!(
        "criterion 1 PASS: FFT err {max_fft_err:.2e}, Jacobi residual {max_residual:.2e}, \
         charpoly match, in {elapsed:.2?}"
    );
}

fn noise_recording(seed: u64, duration_s: f64, gain: f64) -> MontagedRecording {
    let fs = 256.0;
    let n = (duration_s * fs) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 10.0).unwrap();
    let channels: Vec<String> = (0..22).map(|i| format!("CH{i}")).collect();
    let signals = (0..22)
        .map(|c| {
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    gain * (normal.sample(&mut rng) + 5.0 * (6.3 * (c + 2) as f64 * t).sin())
                })
                .collect()
        })
        .collect();
    MontagedRecording {
        patient_id: "p".into(),
        session_id: "s".into(),
        sample_rate_hz: fs,
        channels,
        signals,
    }
}

#[test]
fn criterion_2_feature_invariants() {
    // all-ones correlation: rank one, trace 22
    let ones = CorrMatrix { values: vec![1.0; 22 * 22], n: 22 };
    let spec = eigen_features(&ones).unwrap();
    assert!((spec[0] - 22.0).abs() < 1e-9);
    for &v in &spec[1..] {
        assert!(v.abs() < 1e-9);
    }

    let mut ident = vec![0.0; 22 * 22];
    for i in 0..22 {
        ident[i * 22 + i] = 1.0;
    }
    let spec = eigen_features(&CorrMatrix { values: ident, n: 22 }).unwrap();
    for &v in &spec {
        assert!((v - 1.0).abs() < 1e-9);
    }

    let cfg = FeatureConfig::default();
    let base = extract_features(&noise_recording(7, 10.0, 1.0), &cfg).unwrap();
    assert!(!base.is_empty());
    for (_, feats) in &base {
        let sum: f64 = feats.iter().sum();
        assert!((sum - 22.0).abs() < 1e-6, "trace sum {sum}");
    }

    // positive amplitude rescaling is a no-op after z-scoring
    let scaled = extract_features(&noise_recording(7, 10.0, 3.71), &cfg).unwrap();
    let mut max_delta: f64 = 0.0;
    for ((_, a), (_, b)) in base.iter().zip(&scaled) {
        for (x, y) in a.iter().zip(b) {
            max_delta = max_delta.max((x - y).abs());
        }
    }
    assert!(max_delta < 1e-9, "rescale sensitivity {max_delta}");
    println!(
        "criterion 2 PASS: correlation spectra, trace sums, rescale invariance {max_delta:.2e}"
    );
}

#[test]
fn criterion_3_metric_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut max_err: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.gen_range(6..200usize);
        let rand_labels = |rng: &mut ChaCha8Rng| -> Vec<ArtifactClass> {
            (0..len)
                .map(|_| ArtifactClass::from_code(rng.gen_range(0..6)).unwrap())
                .collect()
        };
        let truth = rand_labels(&mut rng);
        let pred = rand_labels(&mut rng);
        let report = evaluate(&confusion(&truth, &pred).unwrap()).unwrap();
        let (f1, acc, sens) = brute_force_metrics(&truth, &pred);
        max_err = max_err.max((report.weighted_f1 - f1).abs());
        max_err = max_err.max((report.accuracy - acc).abs());
        assert_eq!(report.sensitivity.len(), sens.len());
        for (class, s) in &sens {
            max_err = max_err.max((report.sensitivity[class] - s).abs());
        }
    }
    assert!(max_err < 1e-12, "metric oracle max err {max_err}");

    let to = |codes: &[usize]| -> Vec<ArtifactClass> {
        codes.iter().map(|&c| ArtifactClass::from_code(c).unwrap()).collect()
    };
    let report =
        evaluate(&confusion(&to(&[0, 0, 1, 1, 2]), &to(&[0, 1, 1, 1, 2])).unwrap()).unwrap();
    let expected: f64 = (2.0 * (2.0 / 3.0) + 2.0 * 0.8 + 1.0) / 5.0;
    assert!((expected - 0.78667).abs() < 1e-5);
    assert!((report.weighted_f1 - expected).abs() < 1e-9);
    println!(
        "criterion 3 PASS: 1000 random vectors max err {max_err:.2e}, worked example {:.5}",
        report.weighted_f1
    );
}

#[test]
fn criterion_4_split_and_sampling() {
    // splits: 100 seeds over a 17-patient index
    let mut index = CorpusIndex::default();
    for p in 0..17 {
        index.patients.insert(format!("pt{p:02}"));
    }
    for seed in 0..100u64 {
        let a = patient_split(&index, (0.6, 0.2, 0.2), seed).unwrap();
        assert_eq!(a.validation.len(), 3); // floor(17 * 0.2)
        assert_eq!(a.test.len(), 3);
        assert_eq!(a.train.len(), 11);
        assert!(a.train.is_disjoint(&a.validation));
        assert!(a.train.is_disjoint(&a.test));
        assert!(a.validation.is_disjoint(&a.test));
        let union: BTreeSet<_> =
            a.train.union(&a.validation).chain(a.test.iter()).cloned().collect();
        assert_eq!(union, index.patients);
    }

    // undersampling: uneven counts equalize to the pre-call minimum
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let counts = [40usize, 12, 7, 25, 18, 60];
    let mut rows = Vec::new();
    for (code, &count) in counts.iter().enumerate() {
        for i in 0..count {
            rows.push(LabeledRow {
                features: vec![rng.gen_range(-1.0..1.0); 4],
                label: ArtifactClass::from_code(code).unwrap(),
                patient_id: format!("p{code}"),
                session_id: "s".into(),
                start_s: i as f64,
            });
        }
    }
    let set = LabeledFeatureSet { rows };
    for seed in 0..100u64 {
        let sampled = undersample(&set, seed).unwrap();
        let by_class = sampled.class_counts();
        assert_eq!(by_class.len(), 6);
        for &c in by_class.values() {
            assert_eq!(c, 7);
        }
        let identities: BTreeSet<(String, String, u64)> = sampled
            .rows
            .iter()
            .map(|r| (r.patient_id.clone(), r.session_id.clone(), r.start_s.to_bits()))
            .collect();
        assert_eq!(identities.len(), sampled.rows.len(), "duplicated rows");
    }
    println!("criterion 4 PASS: 100 seeds of disjoint floor-rule splits and exact undersampling");
}

fn blobs(n: usize, seed: u64) -> TrainSet {
    let d = 5.0;
    let centers = [[0.0, 0.0], [d, 0.0], [0.0, d]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        x.push(vec![
            centers[c][0] + noise.sample(&mut rng),
            centers[c][1] + noise.sample(&mut rng),
        ]);
        y.push(c);
    }
    TrainSet { x, y, n_classes: 3 }
}

#[test]
fn criterion_5_classifier_suite() {
    let started = Instant::now();
    let train = blobs(600, 42);
    let test = blobs(300, 43);
    let mut accuracies = Vec::new();
    for family in Family::ALL {
        let model = fit(&AlgorithmSpec::new(family), &train, 7).unwrap();
        let correct = test
            .x
            .iter()
            .zip(&test.y)
            .filter(|(x, &y)| model.predict_class(x).unwrap() == y)
            .count();
        let acc = correct as f64 / test.x.len() as f64;
        assert!(acc >= 0.95, "{family}: blob accuracy {acc}");
        accuracies.push(acc);
    }

    // MLP analytic gradient vs central differences
    let arch = MlpArch { layer_sizes: vec![4, 16, 3] };
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let theta: Vec<f64> = (0..arch.n_params()).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let x: Vec<Vec<f64>> =
        (0..8).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<usize> = (0..8).map(|_| rng.gen_range(0..3)).collect();
    let (_, grad) = arch.loss_and_grad(&theta, &x, &y);
    let h = 1e-6;
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus[i] += h;
        let mut minus = theta.clone();
        minus[i] -= h;
        let numeric = (arch.loss_and_grad(&plus, &x, &y).0
            - arch.loss_and_grad(&minus, &x, &y).0)
            / (2.0 * h);
        let denom = grad[i].abs().max(numeric.abs()).max(1e-8);
        assert!(
            (grad[i] - numeric).abs() / denom < 1e-4,
            "grad {i}: {} vs {numeric}",
            grad[i]
        );
    }

    // k-NN with k = 1 memorizes its training set
    let mut p = Params::new();
    p.insert("k".into(), ParamValue::Int(1));
    let model = knn::fit(&train, &p).unwrap();
    for (x, &y) in train.x.iter().zip(&train.y) {
        assert_eq!(argmax(&model.predict_scores(x, 3)), y);
    }

    // a one-tree forest without randomness is exactly a bare tree
    let mut p = Params::new();
    p.insert("trees".into(), ParamValue::Int(1));
    p.insert("bootstrap".into(), ParamValue::Int(0));
    p.insert("max_features".into(), ParamValue::Text("all".into()));
    let one_tree = forest::fit(&train, &p, 3).unwrap();
    let weights = vec![1.0; train.x.len()];
    let mut tree_rng = ChaCha8Rng::seed_from_u64(3);
    let bare = tree::fit_classification(
        &train.x,
        &train.y,
        &weights,
        train.n_classes,
        &tree::TreeParams { max_depth: None, max_features: None, min_samples_leaf: 1 },
        &mut tree_rng,
    );
    for x in &test.x {
        assert_eq!(one_tree.predict_scores(x, 3), bare.leaf_values(x).to_vec());
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "classifier suite took {elapsed:?}");
    println!(
        "criterion 5 PASS: 8 families >= 95% (min {:.3}), gradients, 1-NN, single-tree, in {elapsed:.2?}",
        accuracies.iter().cloned().fold(1.0, f64::min)
    );
}

#[test]
fn criterion_6_end_to_end_smoke() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let params = SynthParams {
        patients: 4,
        sessions_per_patient: 1,
        duration_s: 120,
        artifact_rate: 0.08,
    };
    let index = synth_corpus(&corpus, 11, &params).unwrap();

    let cfg = BenchConfig {
        corpus_root: corpus,
        families: Family::ALL.iter().map(|f| f.name().to_string()).collect(),
        runs: 1,
        seed: 5,
        budget: 4,
        resplit_per_run: true,
        strategy: "random".into(),
        f1_exclude_null: false,
        split_ratios: [0.5, 0.25, 0.25],
        pipeline: PipelineConfig::default(),
        output_dir: Some(dir.path().join("out")),
    };
    let report = run_benchmark(&index, &cfg).unwrap();

    // schema: 8 families x 8 metric columns (weighted-F1, accuracy, 6 sensitivities)
    assert_eq!(report.families.len(), 8);
    let table = report.render_table();
    assert_eq!(table.lines().count(), 9);
    for line in table.lines().skip(1) {
        assert_eq!(line.matches('%').count(), 7, "bad row: {line}");
    }

    // all-null baseline on the same split (seed_r = seed ^ 1)
    let splits = build_splits(&index, &cfg.pipeline, (0.5, 0.25, 0.25), 5 ^ 1, None).unwrap();
    let truth: Vec<ArtifactClass> = splits.test.rows.iter().map(|r| r.label).collect();
    let baseline_pred = vec![ArtifactClass::Null; truth.len()];
    let baseline = evaluate(&confusion(&truth, &baseline_pred).unwrap()).unwrap().weighted_f1;
    let best = report
        .families
        .iter()
        .map(|f| f.per_epoch.weighted_f1.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        best > baseline,
        "best family {best} does not beat all-null baseline {baseline}"
    );

    // bitwise reproducibility of the report JSON
    let again = run_benchmark(&index, &cfg).unwrap();
    assert_eq!(report.to_json(), again.to_json());

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "smoke took {elapsed:?}");
    println!(
        "criterion 6 PASS: best weighted-F1 {best:.3} > null baseline {baseline:.3}, \
         reproducible, in {elapsed:.2?}"
    );
}

#[test]
fn criterion_7_licensed_corpus() {
    // Gated on the licensed corpus; point EEGART_CORPUS at its root to run.
    let root = match std::env::var("EEGART_CORPUS") {
        Ok(r) if !r.is_empty() => std::path::PathBuf::from(r),
        _ => {
            println!("criterion 7 SKIP: licensed corpus not available (set EEGART_CORPUS)");
            return;
        }
    };
    let index = eegart::edf::corpus_scan(&root, &Default::default()).unwrap();
    let stats = eegart::bench::corpus_stats(&index).unwrap();
    let eyem = &stats.per_class[&ArtifactClass::Eyem];
    assert_eq!((eyem.patients, eyem.sessions, eyem.seconds.round() as i64), (140, 166, 24064));
    let chew = &stats.per_class[&ArtifactClass::Chew];
    assert_eq!((chew.patients, chew.sessions, chew.seconds.round() as i64), (22, 23, 10646));

    let cfg = BenchConfig {
        corpus_root: root,
        families: Family::ALL.iter().map(|f| f.name().to_string()).collect(),
        runs: 5,
        seed: 1,
        budget: 50,
        resplit_per_run: true,
        strategy: "tpe_lite".into(),
        f1_exclude_null: false,
        split_ratios: [0.6, 0.2, 0.2],
        pipeline: PipelineConfig::default(),
        output_dir: None,
    };
    let report = run_benchmark(&index, &cfg).unwrap();
    let find = |needle: &str| -> &eegart::bench::FamilyResult {
        report.families.iter().find(|f| f.family.starts_with(needle)).unwrap()
    };
    let lda = find("lda");
    assert!((lda.per_epoch.weighted_f1.mean - 0.80).abs() <= 0.05);
    assert!((lda.per_epoch.accuracy.mean - 0.714).abs() <= 0.05);
    // LDA best overall; shivering the weakest sensitivity for every family
    for fam in &report.families {
        assert!(lda.per_epoch.weighted_f1.mean >= fam.per_epoch.weighted_f1.mean - 1e-12);
        if let Some(shiv) = fam.per_epoch.sensitivity.get(&ArtifactClass::Shiv) {
            for (class, agg) in &fam.per_epoch.sensitivity {
                if *class != ArtifactClass::Shiv {
                    assert!(shiv.mean <= agg.mean + 1e-12, "{}: shiv not weakest", fam.family);
                }
            }
        }
    }
    println!("criterion 7 PASS: corpus statistics and benchmark ranges reproduced");
}
