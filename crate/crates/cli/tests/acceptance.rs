//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p skillgap-cli --test acceptance`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillgap::features::{load_manifest, read_features, write_features, FeatureError, FeatureSet, VideoFeatures, FORMAT_VERSION, MAGIC};
use skillgap::fewshot::{
    binarize_grs, compute_gains, evaluate, gains_csv, prepare_items, sample_episodes, EvalReport, FewShotError, HeadKind, ReportCell,
    ReportSet, SkillClass,
};
use skillgap::nn::{grad_check, Init, LinearHead, TcnConfig, TcnHead};
use skillgap::ot::{domain_gap, emd_exact, emd_sinkhorn, ground_cost, GapConfig, OtError, PointCloud, SinkhornOptions, Solver};
use skillgap::synthetic::gaussian_cloud;
use skillgap::Matrix;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn listed(problems: &[String]) -> String {
    if problems.is_empty() {
        String::new()
    } else {
        format!("; {}", problems.join("; "))
    }
}

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointCloud<f64> {
    PointCloud::uniform(Matrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

fn brute_force(cost: &Matrix<f64>) -> f64 {
    let n = cost.rows();
    (0..n).permutations(n).map(|p| p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>()).fold(f64::INFINITY, f64::min) / n as f64
}

fn ot_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let d = rng.random_range(1..=4);
        let (a, b) = (cloud(&mut rng, n, d), cloud(&mut rng, n, d));
        let plan = emd_exact(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((plan.cost - brute_force(&ground_cost(&a, &b).unwrap())).abs());
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("200 instances, max |exact - oracle| {worst:.1e} (<= 1e-9), {:.2}s (< 10s)", elapsed.as_secs_f64()),
    )
}

fn ot_metric_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let emd = |a: &PointCloud<f64>, b: &PointCloud<f64>| emd_exact(a, b).map(|p| p.cost).map_err(|e| e.to_string());
    let (mut sym, mut ident, mut tri, mut scale) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=4);
        let (a, b, c) = (cloud(&mut rng, n, d), cloud(&mut rng, n, d), cloud(&mut rng, n, d));
        let (ab, ba, bc, ac) = (emd(&a, &b)?, emd(&b, &a)?, emd(&b, &c)?, emd(&a, &c)?);
        sym = sym.max((ab - ba).abs());
        ident = ident.max(emd(&a, &a)?.abs());
        tri = tri.max(ac - ab - bc);
        let factor = rng.random_range(0.1..10.0);
        let scaled = |p: &PointCloud<f64>| {
            let m = p.points();
            PointCloud::uniform(Matrix::from_fn(m.rows(), m.cols(), |i, j| factor * m[(i, j)])).unwrap()
        };
        let s = emd(&scaled(&a), &scaled(&b))?;
        if ab > 0.0 {
            scale = scale.max((s - factor * ab).abs() / (factor * ab));
        }
    }
    ensure(
        sym <= 1e-9 && ident == 0.0 && tri <= 1e-7 && scale <= 1e-9,
        format!("100 triples: symmetry {sym:.1e}, identity {ident:.1e}, triangle slack {tri:.1e}, scale rel {scale:.1e}"),
    )
}

fn sinkhorn_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut rel, mut marginal, mut unconverged) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..20 {
        let d = rng.random_range(1..=8);
        let (a, b) = (cloud(&mut rng, 32, d), cloud(&mut rng, 32, d));
        let exact = emd_exact(&a, &b).map_err(|e| e.to_string())?.cost;
        let eps = 1e-3 * ground_cost(&a, &b).unwrap().mean_value();
        let r = emd_sinkhorn(&a, &b, &SinkhornOptions::new(eps)).map_err(|e| e.to_string())?;
        rel = rel.max((r.plan.cost - exact).abs() / exact);
        if r.converged {
            marginal = marginal.max(r.marginal_error);
        } else {
            unconverged += 1;
        }
    }
    ensure(
        rel <= 0.02 && marginal <= 1e-9 && unconverged == 0,
        format!("20 instances: max rel error {rel:.1e} (<= 2%), max marginal L1 {marginal:.1e} (<= 1e-9), unconverged {unconverged}"),
    )
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let (mut linear_worst, mut tcn_worst) = (0.0f64, 0.0f64);
    let d = 4;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for len in [1usize, 5, 40] {
            let label = rng.random_range(0..2);
            let linear = LinearHead::<f64>::new(d, 2, Init::Uniform, &mut rng);
            let pooled: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            linear_worst = linear_worst.max(grad_check(&linear, pooled.as_slice(), label, 1e-5));
            let tcn = TcnHead::<f64>::new(d, 2, &TcnConfig { layers: 3, channels: 5 }, Init::Uniform, &mut rng);
            let seq = Matrix::from_fn(len, d, |_, _| rng.random_range(-1.0..1.0));
            tcn_worst = tcn_worst.max(grad_check(&tcn, &seq, label, 3e-6));
        }
    }
    let elapsed = start.elapsed();
    ensure(
        linear_worst <= 1e-4 && tcn_worst <= 1e-4 && elapsed < Duration::from_secs(30),
        format!(
            "50 seeds x K in {{1,5,40}}: linear {linear_worst:.1e}, tcn {tcn_worst:.1e} (<= 1e-4), {:.2}s (< 30s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn gap_monotonicity() -> Outcome {
    let shifts = [0.0, 1.0, 2.0, 4.0];
    let cfg = GapConfig { max_points: 200, solver: Solver::Exact, ..GapConfig::default() };
    let mut failures = Vec::new();
    let mut min_step = f64::INFINITY;
    for run in 0..20u64 {
        let reference = gaussian_cloud("reference", 25, 8, 4, 0.0, 2 * run).map_err(|e| e.to_string())?;
        let mut gaps = Vec::new();
        for &shift in &shifts {
            let shifted = gaussian_cloud("shifted", 25, 8, 4, shift, 2 * run + 1).map_err(|e| e.to_string())?;
            let r = domain_gap(&reference, &shifted, &GapConfig { seed: run, ..cfg.clone() }).map_err(|e| e.to_string())?;
            if (r.points_a, r.points_b) != (200, 200) {
                return Err(format!("expected 200 points per side, got {} and {}", r.points_a, r.points_b));
            }
            gaps.push(r.value);
        }
        for w in gaps.windows(2) {
            min_step = min_step.min(w[1] - w[0]);
        }
        if !gaps.windows(2).all(|w| w[1] > w[0]) {
            failures.push(format!("run {run}: {gaps:?}"));
        }
    }
    ensure(
        failures.is_empty(),
        format!(
            "20 runs, 200 points/side, shifts {shifts:?}: {} non-increasing, smallest step {min_step:.3}{}",
            failures.len(),
            listed(&failures)
        ),
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).join("manifest.json")
}

fn run_eval(manifest: &Path, out: &Path, extra: &[&str]) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_skillgap"))
        .args(["eval", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("eval failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(out).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn protocol_fidelity() -> Outcome {
    let manifest = fixture("skill33");
    let set = load_manifest(&manifest).map_err(|e| e.to_string())?;
    let items = prepare_items(&set, false).map_err(|e| e.to_string())?;
    if items.len() != 33 {
        return Err(format!("fixture has {} videos, expected 33", items.len()));
    }
    let labels: HashMap<&str, SkillClass> = items.iter().map(|i| (i.video_id.as_str(), i.label)).collect();
    let all_labels: Vec<SkillClass> = items.iter().map(|i| i.label).collect();

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [
        ("default", run_eval(&manifest, &tmp.path().join("default"), &[])?),
        ("rerun", run_eval(&manifest, &tmp.path().join("rerun"), &[])?),
        ("serial", run_eval(&manifest, &tmp.path().join("serial"), &["--threads", "1"])?),
        ("parallel", run_eval(&manifest, &tmp.path().join("parallel"), &["--threads", "4"])?),
    ];
    let reference = &runs[0].1;
    for (name, files) in &runs[1..] {
        if files != reference {
            return Err(format!("{name} reports differ from the first run"));
        }
    }

    let mut summary = Vec::new();
    let mut problems = Vec::new();
    for head in HeadKind::ALL {
        for shot in [1usize, 2, 5] {
            let file = format!("{head}_k{shot}.json");
            let bytes = reference.get(&file).ok_or_else(|| format!("missing report {file}"))?;
            let report: EvalReport = serde_json::from_slice(bytes).map_err(|e| format!("{file}: {e}"))?;
            let cfg = &report.config;
            if cfg.episodes != 100 || report.per_episode.len() != 100 || cfg.episode_support.len() != 100 || cfg.episode_seeds.len() != 100
            {
                problems.push(format!("{file}: not 100 episodes"));
            }
            for support in &cfg.episode_support {
                let mut per_class = [0usize; 2];
                for id in support {
                    match labels.get(id.as_str()) {
                        Some(l) => per_class[l.index()] += 1,
                        None => problems.push(format!("{file}: unknown support video {id}")),
                    }
                }
                if per_class != [shot, shot] || support.iter().unique().count() != support.len() {
                    problems.push(format!("{file}: support {support:?} is not {shot} per class"));
                }
            }
            let episodes = sample_episodes(&items, shot, 100, cfg.master_seed).map_err(|e| e.to_string())?;
            for (i, ep) in episodes.iter().enumerate() {
                let ids: Vec<&str> = ep.support.iter().map(|&j| items[j].video_id.as_str()).collect();
                let same = cfg.episode_support.get(i).is_some_and(|s| s.iter().map(String::as_str).eq(ids.iter().copied()))
                    && cfg.episode_seeds.get(i) == Some(&ep.seed);
                if !same || !ep.is_valid_partition(&all_labels) {
                    problems.push(format!("{file}: episode {i} does not match a valid support/query partition"));
                }
            }
            let floor = match shot {
                5 => Some(95.0),
                1 => Some(75.0),
                _ => None,
            };
            if floor.is_some_and(|f| report.mean_accuracy < f) {
                problems.push(format!("{file}: mean accuracy {:.2} below {}", report.mean_accuracy, floor.unwrap()));
            }
            summary.push(format!("{head} k{shot} {:.2}", report.mean_accuracy));
        }
    }
    problems.truncate(5);
    ensure(
        problems.is_empty(),
        format!(
            "6 cells x 100 episodes, partitions valid, byte-identical across rerun/serial/parallel; acc {}{}",
            summary.join(", "),
            listed(&problems)
        ),
    )
}

fn metric_gain_oracles() -> Outcome {
    use SkillClass::{Expert as E, Proficient as P};
    // (predictions, labels, accuracy, macro F1), F1 per class = 2TP / (2TP + FP + FN).
    let cases: [(&[SkillClass], &[SkillClass], f64, f64); 4] = [
        (&[P, P, E, E, E], &[P, E, E, E, P], 60.0, 100.0 * (2.0 / 4.0 + 4.0 / 6.0) / 2.0),
        (&[E, E, E, E], &[P, P, E, E], 50.0, 100.0 * (0.0 + 4.0 / 6.0) / 2.0),
        (&[P, E, P, E], &[P, E, P, E], 100.0, 100.0),
        (&[P, P, P], &[P, P, P], 100.0, 100.0 * (1.0 + 0.0) / 2.0),
    ];
    for (i, (pred, lab, acc, f1)) in cases.iter().enumerate() {
        let m = evaluate(pred, lab).map_err(|e| e.to_string())?;
        if m.accuracy != *acc || m.f1 != *f1 {
            return Err(format!("confusion example {i}: got ({}, {}), expected ({acc}, {f1})", m.accuracy, m.f1));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut set = |name: &str| -> Result<(ReportSet, Vec<(f64, f64)>), String> {
        let mut s = ReportSet::new(name);
        let mut values = Vec::new();
        for head in HeadKind::ALL {
            for shot in [1usize, 2, 5] {
                let cell = ReportCell { mean_accuracy: rng.random_range(40.0..90.0), mean_f1: rng.random_range(40.0..90.0) };
                values.push((cell.mean_accuracy, cell.mean_f1));
                s.insert(head, shot, cell).map_err(|e| e.to_string())?;
            }
        }
        Ok((s, values))
    };
    let (combined, cv) = set("combined")?;
    let (a, av) = set("single_a")?;
    let (b, bv) = set("single_b")?;
    let rows = compute_gains(&combined, &[&a, &b]).map_err(|e| e.to_string())?;
    let mut expected = String::from("comparison,avg_accuracy_gain,avg_f1_gain\n");
    for (name, base) in [("single_a", &av), ("single_b", &bv)] {
        let diffs: Vec<(f64, f64)> = cv.iter().zip(base).map(|(c, b)| (c.0 - b.0, c.1 - b.1)).collect();
        let acc = diffs.iter().map(|d| d.0).sum::<f64>() / diffs.len() as f64;
        let f1 = diffs.iter().map(|d| d.1).sum::<f64>() / diffs.len() as f64;
        expected.push_str(&format!("combined vs {name},{acc:+.2},{f1:+.2}\n"));
    }
    let csv = gains_csv(&rows);
    if csv != expected {
        return Err(format!("gains table\n{csv}differs from oracle\n{expected}"));
    }
    let mut partial = ReportSet::new("partial");
    partial.insert(HeadKind::Linear, 1, ReportCell { mean_accuracy: 50.0, mean_f1: 50.0 }).unwrap();
    if !matches!(compute_gains(&combined, &[&partial]), Err(FewShotError::CellMismatch(_))) {
        return Err("mismatched cells not rejected".into());
    }
    ensure(true, format!("4 confusion examples exact; gains match mean of differences: {}", csv.lines().skip(1).join(" | ")))
}

fn format_robustness() -> Outcome {
    let mut checks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut values: Vec<f64> = (0..3 * 2 * 5).map(|_| rng.random_range(-1e3f32..1e3) as f64).collect();
    values[..5].copy_from_slice(&[0.0, -0.0, f32::MIN_POSITIVE as f64 / 8.0, f32::MAX as f64, f32::MIN as f64]);
    let video = VideoFeatures::new("clip", 3, 2, 5, values.clone()).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    write_features(&video, &mut bytes).map_err(|e| e.to_string())?;
    let mut oracle = MAGIC.to_vec();
    for x in [FORMAT_VERSION, 3, 2, 5] {
        oracle.extend(x.to_le_bytes());
    }
    for &x in &values {
        oracle.extend((x as f32).to_le_bytes());
    }
    let back = read_features(bytes.as_slice()).map_err(|e| e.to_string())?;
    let bit_exact = back.data().iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits());
    let mut again = Vec::new();
    write_features(&back, &mut again).map_err(|e| e.to_string())?;
    if bytes != oracle || !bit_exact || again != bytes || (back.num_snippets(), back.frames_per_snippet(), back.dim()) != (3, 2, 5) {
        return Err("feature file round trip is not bit-exact".into());
    }
    checks.push("round trip");

    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"XXXX");
    if !matches!(read_features(bad.as_slice()), Err(FeatureError::BadMagic { .. })) {
        return Err("XXXX magic not rejected as BadMagic".into());
    }
    checks.push("BadMagic");

    if !matches!(read_features(&bytes[..bytes.len() - 3]), Err(FeatureError::TruncatedPayload { expected: 30, found: 29 })) {
        return Err("short payload not rejected as TruncatedPayload".into());
    }
    checks.push("TruncatedPayload");

    let mut long = bytes.clone();
    long.extend(1.0f32.to_le_bytes());
    if !matches!(read_features(long.as_slice()), Err(FeatureError::DimensionMismatch(_))) {
        return Err("oversized payload not rejected as DimensionMismatch".into());
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write_video = |file: &str, dim: usize| {
        let v = VideoFeatures::new("", 2, 1, dim, vec![0.5; 2 * dim]).unwrap();
        let mut buf = Vec::new();
        write_features(&v, &mut buf).unwrap();
        fs::write(tmp.path().join(file), buf).unwrap();
    };
    write_video("a.fsfb", 384);
    write_video("b.fsfb", 512);
    let mixed = tmp.path().join("mixed.json");
    fs::write(&mixed, r#"{"name":"mixed","dim":384,"videos":[{"id":"a","file":"a.fsfb","grs":20},{"id":"b","file":"b.fsfb","grs":27}]}"#)
        .unwrap();
    if !matches!(load_manifest(&mixed), Err(FeatureError::DimMismatchAcrossVideos { expected: 384, found: 512, .. })) {
        return Err("mixed 384/512 manifest not rejected".into());
    }
    let narrow = FeatureSet::new("narrow", 384, vec![VideoFeatures::new("x", 1, 1, 384, vec![0.0; 384]).unwrap()]).unwrap();
    let wide = FeatureSet::new("wide", 512, vec![VideoFeatures::new("y", 1, 1, 512, vec![0.0; 512]).unwrap()]).unwrap();
    if !matches!(domain_gap(&narrow, &wide, &GapConfig::default()), Err(OtError::DimMismatch { a: 384, b: 512 })) {
        return Err("gap between 384- and 512-dim sets not rejected".into());
    }
    checks.push("DimMismatch (file, manifest, gap)");

    if !matches!(binarize_grs(12, false), Err(FewShotError::GrsOutOfTaskRange { grs: 12 })) || binarize_grs(12, true).is_err() {
        return Err("GRS 12 not gated behind extrapolation".into());
    }
    let low = tmp.path().join("low.json");
    fs::write(&low, r#"{"name":"low","dim":384,"videos":[{"id":"a","file":"a.fsfb","grs":12}]}"#).unwrap();
    let set = load_manifest(&low).map_err(|e| e.to_string())?;
    if !matches!(prepare_items(&set, false), Err(FewShotError::GrsOutOfTaskRange { grs: 12 })) {
        return Err("manifest video with GRS 12 not rejected".into());
    }
    checks.push("GrsOutOfTaskRange");

    let small = prepare_items(&load_manifest(fixture("small_class")).map_err(|e| e.to_string())?, false).map_err(|e| e.to_string())?;
    if !matches!(
        sample_episodes(&small, 5, 10, 0),
        Err(FewShotError::InsufficientClassSize { class: SkillClass::Expert, size: 5, shot: 5 })
    ) {
        return Err("5-member class with 5 shots not rejected".into());
    }
    checks.push("InsufficientClassSize");

    ensure(true, checks.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("OT exactness", ot_exactness),
        ("OT metric suite", ot_metric_suite),
        ("Sinkhorn fidelity", sinkhorn_fidelity),
        ("Gradient correctness", gradient_correctness),
        ("Domain-gap monotonicity", gap_monotonicity),
        ("Protocol fidelity", protocol_fidelity),
        ("Metric/gain oracles", metric_gain_oracles),
        ("Format robustness", format_robustness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {}",
                p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
