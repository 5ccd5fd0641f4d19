//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::{Command, ExitCode};
use std::time::Instant;

use ovpsc::classifier::{fit_svm_rbf_detailed, logistic_gradient, logistic_objective};
use ovpsc::data::{
    fit_normalizer, split_msets, stratified_folds, ClusterVariant, MSET_FRACTIONS,
};
use ovpsc::experiments::{
    run_experiment, DatasetSource, ExperimentConfig, ExperimentKind, ExperimentReport,
};
use ovpsc::{
    train, BaseKind, ClassExamples, ClassId, HyperParams, LabeledDataset, LabeledExample, Paradigm,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn exp1(variant: ClusterVariant, kind: ExperimentKind, bases: &[BaseKind]) -> Result<ExperimentReport, String> {
    let cfg = ExperimentConfig {
        base_kinds: bases.to_vec(),
        parallel: true,
        ..ExperimentConfig::new(DatasetSource::Clusters(variant), kind, SEED)
    };
    run_experiment(&cfg).map_err(err)
}

fn acc(r: &ExperimentReport, p: Paradigm, b: BaseKind, it: &str) -> Result<f64, String> {
    r.mean_row(p, b, it)
        .map(|m| m.accuracy)
        .ok_or_else(|| format!("missing row {p} {b} {it}"))
}

fn veryfar_saturation(r: &ExperimentReport) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cells = Vec::new();
    for it in ["M=0", "M=1", "M=2"] {
        for p in Paradigm::ALL {
            let a = acc(r, p, BaseKind::SvmRbf, it)?;
            worst = worst.max((a - 1.0).abs());
            cells.push(format!("{p}@{it}={a:.3}"));
        }
    }
    Ok((worst <= 0.005, format!("max |acc-1| = {worst:.4}; {}", cells.join(" "))))
}

fn far_svm(r: &ExperimentReport) -> Outcome {
    let vals: Vec<f64> = Paradigm::ALL
        .iter()
        .map(|&p| acc(r, p, BaseKind::SvmRbf, "M=2"))
        .collect::<Result<_, _>>()?;
    let ok = vals[0] >= 0.95 && vals[1..].iter().all(|&v| v >= 0.98);
    Ok((ok, format!("OvR/SCL/OvP/OvPSC = {:.3}/{:.3}/{:.3}/{:.3}", vals[0], vals[1], vals[2], vals[3])))
}

fn far_lr(r: &ExperimentReport) -> Outcome {
    let reference = [0.984, 0.702, 0.928, 0.930];
    let v: Vec<f64> = Paradigm::ALL
        .iter()
        .map(|&p| acc(r, p, BaseKind::LogisticRegression, "M=2"))
        .collect::<Result<_, _>>()?;
    let (ovr, scl, ovp, ovpsc) = (v[0], v[1], v[2], v[3]);
    let ordering = ovr > ovp && ovr > ovpsc && ovp - scl >= 0.10 && ovpsc - scl >= 0.10;
    let close = v.iter().zip(reference).all(|(a, b)| (a - b).abs() <= 0.07);
    Ok((
        ordering && close,
        format!(
            "OvR/SCL/OvP/OvPSC = {ovr:.3}/{scl:.3}/{ovp:.3}/{ovpsc:.3}; ordering {ordering}, within 0.07 {close}"
        ),
    ))
}

fn incremental_speed() -> Outcome {
    let cfg = ExperimentConfig {
        paradigms: vec![Paradigm::Ovr, Paradigm::Ovp],
        timing_runs: 5,
        parallel: false,
        ..ExperimentConfig::new(
            DatasetSource::Clusters(ClusterVariant::Far),
            ExperimentKind::Exp2,
            SEED,
        )
    };
    let r = run_experiment(&cfg).map_err(err)?;
    let last = r.iterations.last().ok_or("no iterations")?.clone();
    let mut ok = true;
    let mut parts = Vec::new();
    for b in BaseKind::ALL {
        let t = |p| {
            r.final_row(p, b)
                .map(|m| m.train_seconds)
                .ok_or_else(|| format!("missing {p} {b}"))
        };
        let (ovr, ovp) = (t(Paradigm::Ovr)?, t(Paradigm::Ovp)?);
        ok &= ovp < 0.5 * ovr;
        parts.push(format!("{b}: OvP {ovp:.4}s vs OvR {ovr:.4}s"));
    }
    Ok((ok, format!("{last}; {}", parts.join(", "))))
}

fn oracle_equivalence() -> Outcome {
    let means = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sample = |n: usize| -> Vec<Vec<Vec<f64>>> {
        means
            .iter()
            .map(|&(mx, my)| {
                (0..n)
                    .map(|_| vec![mx + gaussian(&mut rng), my + gaussian(&mut rng)])
                    .collect()
            })
            .collect()
    };
    let train_sets: Vec<ClassExamples> = sample(100)
        .into_iter()
        .enumerate()
        .map(|(k, pts)| ClassExamples::new(ClassId(k as u32), pts))
        .collect();
    let test: Vec<Vec<f64>> = sample(125).into_iter().flatten().collect();

    let mut ok = true;
    let mut parts = Vec::new();
    for hp in [HyperParams::logistic(1.0), HyperParams::svm(1.0, 0.5)] {
        let model = |p| train(p, &train_sets, &hp).map_err(err);
        let (ovr, scl, ovp, ovpsc) = (
            model(Paradigm::Ovr)?,
            model(Paradigm::Scl)?,
            model(Paradigm::Ovp)?,
            model(Paradigm::Ovpsc)?,
        );
        let all: BTreeSet<ClassId> = train_sets.iter().map(|s| s.class_id).collect();
        let all_similar = scl.entries.iter().all(|e| {
            let mut others = all.clone();
            others.remove(&e.class_id);
            e.similar == others
        }) && ovpsc.entries.iter().enumerate().all(|(i, e)| {
            e.similar == ovpsc.entries[..i].iter().map(|p| p.class_id).collect()
        });
        let agree = |a: &ovpsc::ParadigmModel, b: &ovpsc::ParadigmModel| -> Result<f64, String> {
            let pa = a.predict_many(&test).map_err(err)?;
            let pb = b.predict_many(&test).map_err(err)?;
            Ok(pa.iter().zip(&pb).filter(|(x, y)| x == y).count() as f64 / test.len() as f64)
        };
        let (s, o) = (agree(&scl, &ovr)?, agree(&ovpsc, &ovp)?);
        ok &= all_similar && s == 1.0 && o == 1.0;
        parts.push(format!(
            "{}: all similar {all_similar}, SCL=OvR {:.1}%, OvPSC=OvP {:.1}%",
            hp.base_kind,
            100.0 * s,
            100.0 * o
        ));
    }
    Ok((ok, format!("{} test points; {}", test.len(), parts.join("; "))))
}

fn f1_tracks_accuracy(reports: &[&ExperimentReport]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for r in reports {
        for row in r.rows.iter().filter(|row| row.fold.is_none()) {
            if row.metrics.accuracy >= 0.9 {
                checked += 1;
                worst = worst.max((row.metrics.macro_f1 - row.metrics.accuracy).abs());
            }
        }
    }
    Ok((worst <= 0.02, format!("{checked} rows with acc >= 0.9; max |f1-acc| = {worst:.4}")))
}

fn base_numerics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(10..40);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..5).map(|_| gaussian(&mut rng)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let w: Vec<f64> = (0..5).map(|_| gaussian(&mut rng)).collect();
        let b = gaussian(&mut rng);
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let (gw, gb) = logistic_gradient(&w, b, &rows, &y, c);
        let h = 1e-5;
        let mut fd = Vec::with_capacity(6);
        for k in 0..5 {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[k] += h;
            down[k] -= h;
            fd.push((logistic_objective(&up, b, &rows, &y, c) - logistic_objective(&down, b, &rows, &y, c)) / (2.0 * h));
        }
        fd.push((logistic_objective(&w, b + h, &rows, &y, c) - logistic_objective(&w, b - h, &rows, &y, c)) / (2.0 * h));
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff = analytic.iter().zip(&fd).map(|(a, f)| (a - f).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst_grad = worst_grad.max(diff / scale);
    }

    let eps = 1e-2;
    let mut worst_kkt: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.random_range(10..30);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * n {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            x.push(vec![s * 2.0 + 0.5 * gaussian(&mut rng), 0.5 * gaussian(&mut rng)]);
            y.push(s);
        }
        let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let c = 10f64.powf(rng.random_range(-1.0..2.0));
        let fit = fit_svm_rbf_detailed(&rows, &y, c, 0.5, None).map_err(err)?;
        for ((row, &label), &alpha) in rows.iter().zip(&y).zip(&fit.alphas) {
            let m = label * fit.model.decision(row).map_err(err)?;
            let violation = if alpha <= 1e-12 {
                (1.0 - m).max(0.0)
            } else if alpha >= c - 1e-12 * c {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            worst_kkt = worst_kkt.max(violation);
        }
        let balance: f64 = fit.alphas.iter().zip(&y).map(|(a, l)| a * l).sum();
        worst_kkt = worst_kkt.max(balance.abs() / c);
    }
    Ok((
        worst_grad <= 1e-3 && worst_kkt <= eps,
        format!("max gradient rel. error {worst_grad:.2e}; max KKT violation {worst_kkt:.2e}"),
    ))
}

fn pipeline_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_count: f64 = 0.0;
    let mut worst_mean: f64 = 0.0;
    let mut worst_sd: f64 = 0.0;
    let mut partitions = true;
    for _ in 0..50 {
        let classes = rng.random_range(2..7);
        let dim = rng.random_range(1..5);
        let mut examples = Vec::new();
        for c in 0..classes {
            for _ in 0..rng.random_range(5..60) {
                examples.push(LabeledExample {
                    features: (0..dim).map(|_| 3.0 * gaussian(&mut rng) + c as f64).collect(),
                    label: ClassId(c),
                });
            }
        }
        let ds = LabeledDataset::new(examples, vec![]).map_err(err)?;
        let seed = rng.random();
        let sizes: BTreeMap<ClassId, usize> =
            ds.class_index().iter().map(|(&c, ps)| (c, ps.len())).collect();
        let count = |set: &[usize], class: ClassId| {
            set.iter().filter(|&&p| ds.examples()[p].label == class).count() as f64
        };

        let k = rng.random_range(2..6);
        let folds = stratified_folds(&ds, k, seed).map_err(err)?;
        let mut seen = vec![0usize; ds.len()];
        for f in &folds {
            f.test.iter().for_each(|&p| seen[p] += 1);
            let test: BTreeSet<usize> = f.test.iter().copied().collect();
            partitions &= f.train.len() + f.test.len() == ds.len()
                && f.train.iter().all(|p| !test.contains(p));
            for (&c, &n) in &sizes {
                worst_count = worst_count.max((count(&f.test, c) - n as f64 / k as f64).abs());
            }
        }
        partitions &= seen.iter().all(|&s| s == 1);

        let sets = split_msets(&ds, &MSET_FRACTIONS, seed).map_err(err)?;
        let mut seen = vec![0usize; ds.len()];
        for (set, frac) in sets.iter().zip(MSET_FRACTIONS) {
            set.iter().for_each(|&p| seen[p] += 1);
            for (&c, &n) in &sizes {
                worst_count = worst_count.max((count(set, c) - frac * n as f64).abs());
            }
        }
        partitions &= seen.iter().all(|&s| s == 1);

        let train = ds.subset(&folds[0].train).map_err(err)?;
        let out = fit_normalizer(&train, &BTreeSet::new())
            .and_then(|n| n.apply(&train))
            .map_err(err)?;
        let n = out.len() as f64;
        for j in 0..out.dim() {
            let col: Vec<f64> = out.examples().iter().map(|e| e.features[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            worst_mean = worst_mean.max(mean.abs());
            worst_sd = worst_sd.max((sd - 1.0).abs());
        }
    }
    Ok((
        partitions && worst_count <= 1.0 && worst_mean <= 1e-9 && worst_sd <= 1e-9,
        format!(
            "exact partitions {partitions}; max count deviation {worst_count:.3}; max |mean| {worst_mean:.1e}; max |sd-1| {worst_sd:.1e}"
        ),
    ))
}

fn determinism() -> Outcome {
    let run = || -> Result<String, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_ovpsc"))
            .args(["bench", "--experiment", "1b", "--dataset", "clusters_close", "--format", "csv"])
            .args(["--seed", "7", "--parallel"])
            .env_remove("OVPSC_SEED")
            .output()
            .map_err(err)?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        let text = String::from_utf8(out.stdout).map_err(err)?;
        Ok(text
            .lines()
            .filter(|l| !l.contains(",time,"))
            .collect::<Vec<_>>()
            .join("\n"))
    };
    let (a, b) = (run()?, run()?);
    let rows = a.lines().filter(|l| !l.starts_with('#')).count();
    Ok((a == b, format!("{rows} accuracy/F1 lines compared")))
}

fn finetune_direction(a: &ExperimentReport, b: &ExperimentReport) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in Paradigm::ALL {
        let fa = a.final_row(p, BaseKind::SvmRbf).ok_or("missing 1a row")?.accuracy;
        let fb = b.final_row(p, BaseKind::SvmRbf).ok_or("missing 1b row")?.accuracy;
        ok &= fb <= fa + 0.01;
        parts.push(format!("{p} 1b {fb:.3} vs 1a {fa:.3}"));
    }
    Ok((ok, parts.join(", ")))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(o) => o,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} [{id:>2}] {name}: {detail} ({secs:.1}s)",
            if pass { "PASS" } else { "FAIL" }
        );
    };

    let t = Instant::now();
    let mut exp1a = BTreeMap::new();
    let mut load_error = None;
    for v in ClusterVariant::ALL {
        match exp1(v, ExperimentKind::Exp1a, &BaseKind::ALL) {
            Ok(r) => {
                exp1a.insert(v.name(), r);
            }
            Err(e) => load_error = Some(e),
        }
    }
    let get = |v: ClusterVariant| {
        exp1a
            .get(v.name())
            .ok_or_else(|| load_error.clone().unwrap_or_default())
    };
    println!("experiment 1a on all cluster variants: {:.1}s", t.elapsed().as_secs_f64());

    let t = Instant::now();
    report(1, "clusters_veryFar SVM saturation", t, get(ClusterVariant::VeryFar).and_then(veryfar_saturation));
    let t = Instant::now();
    report(2, "clusters_far SVM at M=2", t, get(ClusterVariant::Far).and_then(far_svm));
    let t = Instant::now();
    report(3, "clusters_far LR ordering at M=2", t, get(ClusterVariant::Far).and_then(far_lr));
    let t = Instant::now();
    report(4, "experiment 2 incremental speed", t, incremental_speed());
    let t = Instant::now();
    report(5, "oracle equivalence on overlapping classes", t, oracle_equivalence());
    let t = Instant::now();
    let all: Result<Vec<&ExperimentReport>, String> =
        ClusterVariant::ALL.iter().map(|&v| get(v)).collect();
    report(6, "macro F1 tracks accuracy", t, all.and_then(|rs| f1_tracks_accuracy(&rs)));
    let t = Instant::now();
    report(7, "base classifier numerics", t, base_numerics());
    let t = Instant::now();
    report(8, "pipeline invariants", t, pipeline_invariants());
    let t = Instant::now();
    report(9, "bench determinism", t, determinism());
    let t = Instant::now();
    let c10 = get(ClusterVariant::Close).and_then(|a| {
        let b = exp1(ClusterVariant::Close, ExperimentKind::Exp1b, &[BaseKind::SvmRbf])?;
        finetune_direction(a, &b)
    });
    report(10, "clusters_close SVM fine-tune direction", t, c10);

    if failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
