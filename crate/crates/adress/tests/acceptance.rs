//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use adress::config::PipelineConfig;
use adress::pipeline::{extract_minimal, extract_mrcg, run_parallel, segment_corpus, thread_pool};
use adress::tables::{self, load_manifest};
use adress_core::audio::{vad_segment, AudioSignal, VadConfig};
use adress_core::chat::{linguistic_measures, parse_chat, ParseMode};
use adress_core::dataset::{AgeBand, DatasetManifest, Gender, Group, Split, SubjectRecord};
use adress_core::evaluation::{classification_metrics, loso_folds, regression_metrics};
use adress_core::experiment::{EvalMode, ExperimentConfig, ExperimentInputs, ExperimentReport, FeatureSet, FilterScope, Task};
use adress_core::features::{CorrelationFilter, FeatureMatrix, FeatureRow};
use adress_core::learners::smo::SmoProblem;
use adress_core::learners::tree::Node;
use adress_core::learners::{Criterion, DecisionTree, Gpr, GprHyper, Knn, LinearRegression, ModelKind};
use adress_core::linalg::Matrix;
use adress_core::mrcg::{mrcg_frames, segment_features, MrcgConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn noise_signal(secs: f64, seed: u64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * 16_000.0) as usize;
    AudioSignal::new((0..n).map(|_| 0.3 * rng.random_range(-1.0..1.0)).collect(), 16_000).unwrap()
}

fn dimensionality() -> Check {
    let cfg = MrcgConfig::default();
    let mut names: Option<Vec<String>> = None;
    let mut slowest = 0.0f64;
    for (i, secs) in [0.2, 0.5, 1.0, 3.7, 10.0].into_iter().enumerate() {
        let sig = noise_signal(secs, i as u64);
        let frames = mrcg_frames(&sig, &cfg).map_err(|e| e.to_string())?;
        ensure(frames.values.rows() == 768, || format!("{secs} s: {} frame features", frames.values.rows()))?;
        let t = Instant::now();
        let v = segment_features(&sig, &cfg).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        ensure(v.values.len() == 6912 && v.names.len() == 6912, || format!("{secs} s: {} functionals", v.values.len()))?;
        let distinct: BTreeSet<&String> = v.names.iter().collect();
        ensure(distinct.len() == 6912, || "duplicate feature names".into())?;
        match &names {
            Some(n) => ensure(*n == v.names, || format!("{secs} s: names differ"))?,
            None => names = Some(v.names),
        }
    }
    ensure(slowest < 5.0, || format!("slowest segment took {slowest:.2} s"))?;
    Ok(format!("768 frame rows, 6912 named functionals, slowest segment {slowest:.2} s"))
}

fn metric_arithmetic() -> Check {
    let mut truth = vec![Group::Ad; 24];
    truth.extend(vec![Group::NonAd; 24]);
    let mut pred = vec![Group::Ad; 18];
    pred.extend(vec![Group::NonAd; 6]);
    pred.extend(vec![Group::NonAd; 12]);
    pred.extend(vec![Group::Ad; 12]);
    let r = classification_metrics(&truth, &pred, Group::Ad).map_err(|e| e.to_string())?;
    let (ad, non) = (r.class(Group::Ad), r.class(Group::NonAd));
    let round2 = |x: f64| (x * 100.0).round() / 100.0;
    ensure((ad.precision - 0.60).abs() < 1e-12, || format!("AD precision {}", ad.precision))?;
    ensure((ad.recall - 0.75).abs() < 1e-12, || format!("AD recall {}", ad.recall))?;
    ensure((non.precision - 0.67).abs() <= 0.005 && round2(non.precision) == 0.67, || {
        format!("non-AD precision {}", non.precision)
    })?;
    ensure((non.recall - 0.50).abs() < 1e-12, || format!("non-AD recall {}", non.recall))?;
    ensure(r.accuracy == 0.625, || format!("accuracy {}", r.accuracy))?;
    Ok(format!(
        "AD P={:.2} R={:.2}, non-AD P={:.2} R={:.2}, accuracy {}",
        ad.precision, ad.recall, non.precision, non.recall, r.accuracy
    ))
}

fn vad_cap() -> Check {
    let n = 25 * 16_000;
    let tone: Vec<f64> = (0..n).map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16_000.0).sin()).collect();
    let spans = vad_segment(&AudioSignal::new(tone, 16_000).unwrap(), &VadConfig::default()).map_err(|e| e.to_string())?;
    let d: Vec<f64> = spans.iter().map(|s| s.duration_s()).collect();
    ensure(d == [10.0, 10.0, 5.0], || format!("tone spans {d:?}"))?;
    let silent = vad_segment(&AudioSignal::new(vec![0.0; n], 16_000).unwrap(), &VadConfig::default())
        .map_err(|e| e.to_string())?;
    ensure(silent.is_empty(), || format!("silence gave {} spans", silent.len()))?;
    Ok(format!("25 s tone -> {d:?}; silence -> 0 spans"))
}

fn synthetic_manifest(n: usize) -> DatasetManifest {
    DatasetManifest::new(
        Split::Train,
        (0..n)
            .map(|i| SubjectRecord {
                subject_id: format!("S{i:03}"),
                group: if i % 2 == 0 { Group::Ad } else { Group::NonAd },
                mmse: (10 + i % 21) as u8,
                age_band: AgeBand::new(50 + 5 * (i as u32 % 6), 55 + 5 * (i as u32 % 6)).unwrap(),
                gender: if i % 3 == 0 { Gender::M } else { Gender::F },
                audio_path: format!("{i}.wav"),
                transcript_path: None,
            })
            .collect(),
    )
    .unwrap()
}

fn loso_integrity() -> Check {
    let m = synthetic_manifest(108);
    let mut rows = Vec::new();
    for (i, r) in m.records().iter().enumerate() {
        for s in 0..(1 + i % 5) {
            rows.push(FeatureRow {
                subject_id: r.subject_id.clone(),
                segment_index: s as u32,
                duration_s: 1.0 + s as f64,
                values: vec![i as f64, s as f64],
            });
        }
    }
    let f = FeatureMatrix::new(vec!["a".into(), "b".into()], rows).unwrap();
    let folds = loso_folds(&m, &f).map_err(|e| e.to_string())?;
    ensure(folds.len() == 108, || format!("{} folds", folds.len()))?;
    for fold in &folds {
        let train: BTreeSet<&str> = fold.train_rows.iter().map(|k| k.subject_id.as_str()).collect();
        let val: BTreeSet<&str> = fold.validation_rows.iter().map(|k| k.subject_id.as_str()).collect();
        ensure(train.is_disjoint(&val), || format!("fold {} leaks", fold.held_out_subject))?;
        ensure(val.len() == 1 && train.len() == 107, || format!("fold {} has the wrong subjects", fold.held_out_subject))?;
    }
    for gone in m.records().iter().map(|r| r.subject_id.clone()) {
        let folds2 = loso_folds(&m.without(&gone), &f.filter_rows(|r| r.subject_id != gone)).map_err(|e| e.to_string())?;
        let changed = folds
            .iter()
            .filter(|a| {
                !folds2
                    .iter()
                    .any(|b| b.held_out_subject == a.held_out_subject && b.validation_rows == a.validation_rows)
            })
            .count();
        ensure(changed == 1 && folds2.len() == 107, || format!("removing {gone} changed {changed} folds"))?;
        for b in &folds2 {
            let a = folds.iter().find(|a| a.held_out_subject == b.held_out_subject).unwrap();
            let expected: Vec<_> = a.train_rows.iter().filter(|k| k.subject_id != gone).cloned().collect();
            ensure(b.train_rows == expected, || format!("removing {gone} altered training rows beyond its own"))?;
        }
    }
    Ok("108 folds, no overlap; each of 108 removals changes exactly one fold".into())
}

fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs())).unwrap();
        m.swap(piv, col);
        let d = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let src = m[col].clone();
                m[r].iter_mut().zip(src).for_each(|(v, s)| *v -= f * s);
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn check_knn(rng: &mut ChaCha8Rng) -> Result<(), String> {
    // integer grid coordinates force exact distance ties
    let pts: Vec<[f64; 3]> = (0..50).map(|_| [0, 1, 2].map(|_| rng.random_range(-3..=3) as f64)).collect();
    let labels: Vec<Group> = (0..50).map(|_| if rng.random_bool(0.5) { Group::Ad } else { Group::NonAd }).collect();
    let knn = Knn::fit(&Matrix::from_rows(&pts).unwrap(), &labels, 1).map_err(|e| e.to_string())?;
    for _ in 0..300 {
        let q = [0, 1, 2].map(|_| rng.random_range(-4..=4) as f64 * 0.5);
        let d = |p: &[f64; 3]| p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let mut best = 0;
        for i in 1..pts.len() {
            if d(&pts[i]) < d(&pts[best]) {
                best = i;
            }
        }
        ensure(knn.neighbours(&q)[0] == best && knn.predict(&q) == labels[best], || format!("1NN differs at {q:?}"))?;
    }
    Ok(())
}

fn impurity(ys: &[f64], criterion: Criterion) -> f64 {
    let n = ys.len() as f64;
    match criterion {
        Criterion::Gini => {
            let p = ys.iter().sum::<f64>() / n;
            n * 2.0 * p * (1.0 - p)
        }
        Criterion::Variance => {
            let m = ys.iter().sum::<f64>() / n;
            ys.iter().map(|y| (y - m) * (y - m)).sum()
        }
    }
}

fn check_cart(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for (trial, criterion) in [Criterion::Gini, Criterion::Variance, Criterion::Gini, Criterion::Variance].into_iter().enumerate() {
        let n = 40;
        let xs: Vec<[f64; 3]> = (0..n).map(|_| [0, 1, 2].map(|_| (rng.random_range(0..12) as f64) / 2.0)).collect();
        let y: Vec<f64> = xs
            .iter()
            .map(|r| match criterion {
                Criterion::Gini => f64::from(u8::from(r[1] + 0.5 * rng.random_range(-2.0..2.0) > 2.5)),
                Criterion::Variance => r[2] * r[2] + rng.random_range(-1.0..1.0),
            })
            .collect();
        let min_leaf = [1, 5][trial % 2];
        let tree = DecisionTree::fit_all(&Matrix::from_rows(&xs).unwrap(), &y, criterion, min_leaf, None, 0);
        // exhaustive: every feature, every midpoint between distinct values
        let parent = impurity(&y, criterion);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..3 {
            let mut vals: Vec<f64> = xs.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<f64>, Vec<f64>) = {
                    let l = (0..n).filter(|&i| xs[i][f] <= t).map(|i| y[i]).collect();
                    let r = (0..n).filter(|&i| xs[i][f] > t).map(|i| y[i]).collect();
                    (l, r)
                };
                if l.len() < min_leaf || r.len() < min_leaf {
                    continue;
                }
                let gain = parent - impurity(&l, criterion) - impurity(&r, criterion);
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
                    best = Some((gain, f, t));
                }
            }
        }
        match (&tree.nodes[0], best) {
            (Node::Split { feature, threshold, .. }, Some((_, f, t))) => {
                ensure(*feature == f && (*threshold - t).abs() < 1e-12, || {
                    format!("{criterion:?}: root split ({feature}, {threshold}) vs exhaustive ({f}, {t})")
                })?
            }
            (Node::Leaf { .. }, None) => {}
            (got, want) => return Err(format!("{criterion:?}: root {got:?} vs exhaustive {want:?}")),
        }
    }
    Ok(())
}

/// Projection onto {0 ≤ α ≤ C, yᵀα = 0} by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lam: f64| -> Vec<f64> { v.iter().zip(y).map(|(a, s)| (a - lam * s).clamp(0.0, c)).collect() };
    let g = |lam: f64| at(lam).iter().zip(y).map(|(a, s)| a * s).sum::<f64>();
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

fn check_smo(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = 40;
    let xs: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            [s * 0.8 + rng.random_range(-1.0..1.0), s * 0.5 + rng.random_range(-1.0..1.0)]
        })
        .collect();
    let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let c = 1.0;
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * (xs[i][0] * xs[j][0] + xs[i][1] * xs[j][1])).collect())
        .collect();
    let p = vec![-1.0; n];
    let sol = SmoProblem { q: |i: usize, j: usize| q[i][j], p: &p, y: &y, c, tolerance: 1e-3, max_iterations: 1_000_000 }.solve();
    let objective = |a: &[f64]| {
        let qa: Vec<f64> = q.iter().map(|r| r.iter().zip(a).map(|(x, y)| x * y).sum()).collect();
        0.5 * a.iter().zip(&qa).map(|(x, y)| x * y).sum::<f64>() + a.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>()
    };
    // projected gradient on the same dual
    let lipschitz: f64 = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut a = vec![0.0; n];
    for _ in 0..200_000 {
        let grad: Vec<f64> = (0..n).map(|i| q[i].iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() + p[i]).collect();
        let step: Vec<f64> = a.iter().zip(&grad).map(|(x, g)| x - g / lipschitz).collect();
        a = project(&step, &y, c);
    }
    let (f_smo, f_qp) = (objective(&sol.alpha), objective(&a));
    ensure((f_smo - f_qp).abs() <= 1e-3, || format!("SMO objective {f_smo} vs QP {f_qp}"))?;
    ensure((sol.objective - f_smo).abs() < 1e-9, || "reported objective is stale".into())?;
    let grad: Vec<f64> = (0..n).map(|i| q[i].iter().zip(&sol.alpha).map(|(x, y)| x * y).sum::<f64>() + p[i]).collect();
    let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..n {
        let v = -y[t] * grad[t];
        let a = sol.alpha[t];
        if (y[t] > 0.0 && a < c) || (y[t] < 0.0 && a > 0.0) {
            up = up.max(v);
        }
        if (y[t] > 0.0 && a > 0.0) || (y[t] < 0.0 && a < c) {
            low = low.min(v);
        }
    }
    ensure(up - low <= 1e-3, || format!("maximal KKT violation {}", up - low))?;
    Ok(())
}

fn check_gpr(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let n = 30;
    let xs: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let y: Vec<f64> = xs.iter().map(|r| 25.0 + 3.0 * r[0].sin() - r[1] + rng.random_range(-0.3..0.3)).collect();
    let (ell, sf, sn) = (0.9, 2.5, 0.3);
    let gp = Gpr::fit(&Matrix::from_rows(&xs).unwrap(), &y, &GprHyper::Fixed { length_scale: ell, signal_sd: sf, noise_sd: sn })
        .map_err(|e| e.to_string())?;
    let k = |a: &[f64], b: &[f64]| sf * sf * (-(a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()) / (2.0 * ell * ell)).exp();
    let kmat: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| k(&xs[i], &xs[j]) + if i == j { sn * sn } else { 0.0 }).collect()).collect();
    let inv = gauss_jordan_inverse(&kmat);
    let mean = y.iter().sum::<f64>() / n as f64;
    let w: Vec<f64> = inv.iter().map(|r| r.iter().zip(&y).map(|(a, b)| a * (b - mean)).sum()).collect();
    for _ in 0..50 {
        let q = [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)];
        let want = mean + (0..n).map(|i| k(&xs[i], &q) * w[i]).sum::<f64>();
        let got = gp.predict(&q);
        ensure((got - want).abs() <= 1e-8, || format!("GPR mean {got} vs closed form {want}"))?;
    }
    Ok(())
}

fn check_linreg(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let xs: Vec<[f64; 4]> = (0..50).map(|_| [0, 1, 2, 3].map(|_| rng.random_range(-1.0..1.0))).collect();
    let y: Vec<f64> = xs.iter().map(|r| 3.0 + r[0] - 2.0 * r[1] + 0.5 * r[3] + rng.random_range(-0.5..0.5)).collect();
    let lr = LinearRegression::fit(&Matrix::from_rows(&xs).unwrap(), &y);
    let resid: Vec<f64> = xs.iter().zip(&y).map(|(r, t)| t - lr.predict(r)).collect();
    let mut worst = resid.iter().sum::<f64>().abs();
    for j in 0..4 {
        worst = worst.max(xs.iter().zip(&resid).map(|(r, e)| r[j] * e).sum::<f64>().abs());
    }
    ensure(worst <= 1e-8, || format!("residual correlation {worst:e}"))
}

fn learner_oracles() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    check_knn(&mut rng).map_err(|e| format!("1NN: {e}"))?;
    check_cart(&mut rng).map_err(|e| format!("CART: {e}"))?;
    check_smo(&mut rng).map_err(|e| format!("SMO: {e}"))?;
    check_gpr(&mut rng).map_err(|e| format!("GPR: {e}"))?;
    check_linreg(&mut rng).map_err(|e| format!("LinReg: {e}"))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("1NN, CART, SMO, GPR and LinReg match their oracles in {secs:.1} s"))
}

struct Cohort {
    _dir: tempfile::TempDir,
    manifest: DatasetManifest,
    mrcg: Option<FeatureMatrix>,
    minimal: FeatureMatrix,
}

fn build_cohort(n_per_group: usize, with_mrcg: bool) -> Cohort {
    let dir = tempfile::tempdir().unwrap();
    let (_, path) = common::write_cohort(dir.path(), n_per_group, 2020);
    let manifest = load_manifest(&path, Split::Train).unwrap();
    let cfg = PipelineConfig::from_pairs(&[]).unwrap();
    let segs = segment_corpus(&cfg, &manifest, None).unwrap();
    let mrcg = with_mrcg.then(|| extract_mrcg(&cfg, &manifest, &segs).unwrap().matrix);
    let minimal = extract_minimal(&cfg, &manifest, &segs).unwrap().matrix;
    Cohort { _dir: dir, manifest, mrcg, minimal }
}

/// 30 + 30 subjects with MRCG and minimal features.
fn cohort() -> &'static Cohort {
    static C: OnceLock<Cohort> = OnceLock::new();
    C.get_or_init(|| build_cohort(30, true))
}

/// 54 + 54 subjects, the size of the corpus training split; minimal only.
fn regression_cohort() -> &'static Cohort {
    static C: OnceLock<Cohort> = OnceLock::new();
    C.get_or_init(|| build_cohort(54, false))
}

fn run_cell(
    manifest: &DatasetManifest,
    set: &str,
    m: &FeatureMatrix,
    duration_filter: bool,
    task: Task,
    kind: ModelKind,
) -> Result<ExperimentReport, String> {
    let cfg = ExperimentConfig::new(task, EvalMode::Loso, vec![kind]);
    let sets = [FeatureSet { name: set.into(), train: m.clone(), test: None, duration_filter }];
    let pool = thread_pool(None).map_err(|e| e.to_string())?;
    run_parallel(&cfg, ExperimentInputs { train: manifest, test: None, feature_sets: &sets }, &pool).map_err(|e| e.to_string())
}

fn mv_accuracy(r: &ExperimentReport) -> f64 {
    r.cells[0].subject_level.headline()
}

fn shuffled(manifest: &DatasetManifest, seed: u64) -> DatasetManifest {
    let mut groups: Vec<Group> = manifest.records().iter().map(|r| r.group).collect();
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let records = manifest.records().iter().zip(groups).map(|(r, g)| SubjectRecord { group: g, ..r.clone() }).collect();
    DatasetManifest::new(Split::Train, records).unwrap()
}

fn synthetic_classification() -> Check {
    let c = cohort();
    let mrcg = c.mrcg.as_ref().unwrap();
    let lda = mv_accuracy(&run_cell(&c.manifest, "mrcg", mrcg, true, Task::Classification, ModelKind::Lda)?);
    let dt = mv_accuracy(&run_cell(&c.manifest, "minimal", &c.minimal, false, Task::Classification, ModelKind::DtClass)?);
    let (mut lda_null, mut dt_null) = (0.0, 0.0);
    for seed in 0..10 {
        let m = shuffled(&c.manifest, 100 + seed);
        lda_null += mv_accuracy(&run_cell(&m, "mrcg", mrcg, true, Task::Classification, ModelKind::Lda)?) / 10.0;
        dt_null += mv_accuracy(&run_cell(&m, "minimal", &c.minimal, false, Task::Classification, ModelKind::DtClass)?) / 10.0;
    }
    let detail = format!(
        "{} segments; MV accuracy MRCG+LDA {lda:.3}, minimal+DT {dt:.3}; shuffled-label means {lda_null:.3}, {dt_null:.3}",
        mrcg.n_rows()
    );
    ensure(lda >= 0.9 && dt >= 0.9, || detail.clone())?;
    ensure((0.4..=0.6).contains(&lda_null) && (0.4..=0.6).contains(&dt_null), || detail.clone())?;
    Ok(detail)
}

fn synthetic_regression() -> Check {
    let c = regression_cohort();
    let col = |name: &str| {
        let j = c.minimal.columns().iter().position(|n| n == name).unwrap();
        let v = c.minimal.column_values(j);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        v.into_iter().map(move |x| (x - m) / sd).collect::<Vec<f64>>()
    };
    let (pause, voc, rate) = (col("minimal.pause_mean"), col("minimal.voc_mean"), col("minimal.speech_rate"));
    let noise = Normal::new(0.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let records: Vec<SubjectRecord> = c
        .manifest
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s = 19.0 - 3.5 * pause[i] + 2.0 * voc[i] + 1.5 * rate[i] + noise.sample(&mut rng);
            SubjectRecord { mmse: s.round().clamp(0.0, 30.0) as u8, ..r.clone() }
        })
        .collect();
    let manifest = DatasetManifest::new(Split::Train, records).unwrap();
    let report = run_cell(&manifest, "minimal", &c.minimal, false, Task::Regression, ModelKind::LinReg)?;
    let adress_core::experiment::Metrics::Regression(r) = &report.cells[0].subject_level else {
        return Err("not a regression report".into());
    };
    let truth: Vec<f64> = manifest.records().iter().map(|r| f64::from(r.mmse)).collect();
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let sd = (truth.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / truth.len() as f64).sqrt();
    let chance = regression_metrics(&truth, &vec![mean; truth.len()]).map_err(|e| e.to_string())?;
    let detail = format!(
        "{} subjects: LR LOSO RMSE {:.3}, r {:.3}; constant-mean RMSE {:.6} vs sd {:.6}",
        truth.len(),
        r.rmse,
        r.pearson_r,
        chance.rmse,
        sd
    );
    ensure(r.rmse <= 2.4 && r.pearson_r >= 0.8, || detail.clone())?;
    ensure((chance.rmse - sd).abs() <= 1e-9, || detail.clone())?;
    Ok(detail)
}

fn duration_filter() -> Check {
    let m = synthetic_manifest(20);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rows = Vec::new();
    for r in m.records() {
        for s in 0..3 {
            rows.push((r.subject_id.clone(), s, rng.random_range(0.5..10.0), rng.random_range(-1.0..1.0)));
        }
    }
    let d: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let raw: Vec<f64> = rows.iter().map(|r| r.3 + 0.3 * r.2).collect();
    // Gram-Schmidt against [1, duration]
    let center = |v: &[f64]| {
        let mu = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - mu).collect::<Vec<f64>>()
    };
    let (dc, rc) = (center(&d), center(&raw));
    let proj = rc.iter().zip(&dc).map(|(a, b)| a * b).sum::<f64>() / dc.iter().map(|b| b * b).sum::<f64>();
    let ortho: Vec<f64> = rc.iter().zip(&dc).map(|(a, b)| a - proj * b).collect();
    let fm = FeatureMatrix::new(
        vec!["dur".into(), "ortho".into(), "raw".into()],
        rows.iter()
            .enumerate()
            .map(|(i, r)| FeatureRow {
                subject_id: r.0.clone(),
                segment_index: r.1,
                duration_s: r.2,
                values: vec![d[i], ortho[i], raw[i]],
            })
            .collect(),
    )
    .unwrap();
    let filter = CorrelationFilter::default();
    let (kept, report) = filter.apply(&fm).map_err(|e| e.to_string())?;
    let removed: Vec<&str> = report.removed.iter().map(|r| r.0.as_str()).collect();
    ensure(removed.contains(&"dur") && report.retained.contains(&"ortho".to_string()), || format!("{report:?}"))?;
    let (_, again) = filter.apply(&kept).map_err(|e| e.to_string())?;
    ensure(again.removed.is_empty() && again.retained == report.retained, || "filter is not idempotent".into())?;
    let summary = |manifest: &DatasetManifest| -> Result<_, String> {
        let mut cfg = ExperimentConfig::new(Task::Classification, EvalMode::Loso, vec![ModelKind::Knn]);
        cfg.filter_scope = FilterScope::Global;
        let sets = [FeatureSet { name: "x".into(), train: fm.clone(), test: None, duration_filter: true }];
        let pool = thread_pool(Some(2)).map_err(|e| e.to_string())?;
        let r = run_parallel(&cfg, ExperimentInputs { train: manifest, test: None, feature_sets: &sets }, &pool)
            .map_err(|e| e.to_string())?;
        Ok(r.feature_sets[0].global_filter.clone())
    };
    let base = summary(&m)?;
    for seed in 0..5 {
        ensure(summary(&shuffled(&m, seed))? == base, || "filter report depends on labels".into())?;
    }
    Ok(format!("removed {removed:?}, kept the orthogonalised column; idempotent and label-blind"))
}

fn determinism() -> Check {
    let c = cohort();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = dir.path().join("minimal.csv");
    tables::write_feature_store(&store, &c.minimal).map_err(|e| e.to_string())?;
    let manifest = dir.path().join("manifest.csv");
    tables::write_manifest(&manifest, &c.manifest).map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "manifest = manifest.csv\nmodels = lda, dt, knn, svm, rf\nfeatures.minimal = minimal.csv\nseed = 11\n")
        .map_err(|e| e.to_string())?;
    let run = |out: &Path, jobs: &str| -> Result<(), String> {
        let o = Command::new(env!("CARGO_BIN_EXE_adress"))
            .args(["--config", cfg.to_str().unwrap(), "--jobs", jobs, "--out", out.to_str().unwrap(), "evaluate"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a, "1")?;
    run(&b, "4")?;
    let (sa, sb) = (common::snapshot(&a), common::snapshot(&b));
    ensure(!sa.is_empty() && sa == sb, || "report bundles differ".into())?;
    Ok(format!("{} files byte-identical across two runs (1 and 4 workers)", sa.len()))
}

const CHAT_FIXTURE: &str = "@UTF8
@Begin
@Languages:\teng
@Participants:\tPAR Participant, INV Investigator
*INV:\ttell me what you see .
*PAR:\tthe boy is taking a cookie . \u{15}0_2000\u{15}
%mor:\tdet|the n|boy aux|be&3S part|take-PRESP det|a n|cookie .
*PAR:\the falls .
%mor:\tpro|he v|fall-3S .
*PAR:\tthe stool is tipping over .
%mor:\tdet|the n|stool aux|be&3S part|tip-PRESP adv|over .
*PAR:\tmother washes dishes .
%mor:\tn|mother v|wash-3S n|dish-PL .
*PAR:\tand water spills .
%mor:\tconj|and n|water v|spill-3S .
*INV:\tanything else ?
*PAR:\toh dear .
%mor:\tco|oh adj|dear .
*PAR:\tshe is not looking .
%mor:\tpro|she aux|be&3S neg|not part|look-PRESP .
*PAR:\tthe girl wants a cookie too .
%mor:\tdet|the n|girl v|want-3S det|a n|cookie adv|too .
*PAR:\tit is in the kitchen .
%mor:\tpro|it v|be&3S prep|in det|the n|kitchen .
*PAR:\tthe big window is open . \u{15}30000_32500\u{15}
%mor:\tdet|the adj|big n|window v|be&3S adj|open .
@End
";

fn chat_measures() -> Check {
    let t = parse_chat(CHAT_FIXTURE, ParseMode::Strict).map_err(|e| e.to_string())?;
    let m = linguistic_measures(&t, "PAR").map_err(|e| e.to_string())?;
    // hand counts: 10 utterances, 41 %mor items, 54 morphemes, 31 lemmas
    let items = 41.0;
    let pct = |c: f64| 100.0 * c / items;
    let want_pos = [10.0, 6.0, 3.0, 2.0, 3.0, 7.0, 1.0, 1.0, 1.0].map(pct);
    ensure(m.total_utterances == 10, || format!("{} utterances", m.total_utterances))?;
    ensure(m.mlu == Some(5.4), || format!("MLU {:?}", m.mlu))?;
    ensure(m.ttr == Some(31.0 / 41.0), || format!("TTR {:?}", m.ttr))?;
    ensure(m.pos_pct == Some(want_pos), || format!("POS {:?}", m.pos_pct))?;
    ensure(m.other_pct == Some(pct(7.0)), || format!("other {:?}", m.other_pct))?;
    let total: f64 = m.pos_pct.unwrap().iter().sum::<f64>() + m.other_pct.unwrap();
    ensure((total - 100.0).abs() <= 1e-9, || format!("percentages sum to {total}"))?;
    ensure(m.duration_s == 32.5, || format!("duration {}", m.duration_s))?;
    Ok(format!("MLU 5.4, TTR 31/41, 9 POS shares and other match; sum {total:.12}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("dimensionality", dimensionality),
        ("metric arithmetic", metric_arithmetic),
        ("VAD cap", vad_cap),
        ("LOSO integrity", loso_integrity),
        ("learner oracles", learner_oracles),
        ("synthetic classification", synthetic_classification),
        ("synthetic regression", synthetic_regression),
        ("duration filter", duration_filter),
        ("determinism", determinism),
        ("CHAT measures", chat_measures),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.1} s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.1} s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
