//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command as Process;
use std::time::Instant;

use minrec_cli::commands::{run, Command, RunResult};
use minrec_cli::config::ExperimentConfig;
use minrec_cli::{execute, REPORT_FILE};
use minrec_core::amenable::{
    ap_characterization, lemma42_check, lemma42_threshold, lemma43_density, ApVerdict, FolnerBox, LatticeCoset,
    SortedVisits, SyndeticWitness, VisitOracle,
};
use minrec_core::covering::{rotation_covering_k, subshift_covering_k, DEFAULT_K_MAX};
use minrec_core::returns::Value;
use minrec_core::systems::{RotationSystem, SubstitutionSystem};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&std::fs::read_to_string(config_path(name)).unwrap()).unwrap()
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Golden rotation, r = 0.15, certificate at r/3, 200 grid points.
fn criterion_1() -> Verdict {
    let config = load("golden-bound.json");
    let started = Instant::now();
    let (report, _) = execute(Command::Bound, &config).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let RunResult::Bound(b) = &report.result else { unreachable!() };
    let w4 = &b.runs[0];
    let w5 = &b.runs[1];
    let cert = &w4.certificates[0];
    let cert_radius = cert.epsilon.radius().unwrap();
    let k = rotation_covering_k(&RotationSystem::golden(), 0.05, DEFAULT_K_MAX).unwrap().k;
    let threshold = 1.0 / (cert.k + 1) as f64 - 1e-4;
    let all_above = w4.points.iter().all(|p| p.frequency >= threshold);
    let (lo, hi) = w5
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.frequency), b.max(p.frequency)));
    let pass = (cert_radius - 0.05).abs() < 1e-15
        && cert.k == k
        && w4.points.len() == 200
        && w4.window_length == Value::Int(10_000)
        && w4.horizon == Value::Int(100_000)
        && all_above
        && w4.violations.is_empty()
        && secs < 60.0
        && (lo - 0.3).abs() <= 0.01
        && (hi - 0.3).abs() <= 0.01;
    verdict(
        pass,
        format!(
            "golden rotation: K = {} at r = {cert_radius:.6}, min {:.4} >= 1/{} - 1/W = {threshold:.6}, {} violations, {secs:.2} s; W = 1e5 frequencies in [{lo:.4}, {hi:.4}]",
            cert.k,
            w4.min_measured,
            cert.k + 1,
            w4.violations.len()
        ),
    )
}

/// Fibonacci subshift, depth-3 cylinders, every cylinder as a base point.
fn criterion_2() -> Verdict {
    let config = load("fibonacci-bound.json");
    let started = Instant::now();
    let (report, _) = execute(Command::Bound, &config).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let RunResult::Bound(b) = &report.result else { unreachable!() };
    let r = &b.runs[0];
    let k = subshift_covering_k(&SubstitutionSystem::fibonacci(), 3, DEFAULT_K_MAX).unwrap().k;
    let bound = 1.0 / (k + 1) as f64;
    // Sturmian complexity: 4 factors of length 3
    let pass = r.points.len() == 4
        && r.certificates[0].k == k
        && r.min_measured >= bound
        && r.violations.is_empty()
        && r.horizon == Value::Int(1_000_000)
        && secs < 60.0;
    verdict(
        pass,
        format!(
            "fibonacci depth 3: {} cylinders, K = {k}, min {:.4} >= 1/{} = {bound:.4}, {} violations, {secs:.2} s",
            r.points.len(),
            r.min_measured,
            k + 1,
            r.violations.len()
        ),
    )
}

/// A = (L+1)Z through the density command on the sequence (1 0^L)^∞.
fn criterion_3() -> Verdict {
    let mut pass = true;
    let mut seen = Vec::new();
    for l in [0u64, 1, 2, 9] {
        let text = format!(
            r#"{{"version": 1, "system": {{"kind": "sequence", "name": "ap", "cycle": "1{}"}},
                "epsilon": {{"kind": "cylinder", "depth": 1}}, "grid": {{"kind": "offsets", "values": [0]}},
                "windows": [{}, {}, {}], "horizon": {}}}"#,
            "0".repeat(l as usize),
            l + 1,
            10 * (l + 1),
            1000 * (l + 1),
            100_000 * (l + 1)
        );
        let config = ExperimentConfig::from_json(&text).unwrap();
        let report = run(Command::Density, &config).unwrap();
        let RunResult::Density(d) = &report.result else { unreachable!() };
        let c = &d.curves[0];
        let want = format!("1/{}", l + 1);
        let exact = c.ladder.iter().all(|p| p.min_frequency_exact.as_deref() == Some(want.as_str()));
        pass &= exact && c.max_gap == Some(l) && c.gap_bound.as_deref() == Some(want.as_str());
        seen.push(format!("L={l}: {}", c.ladder[0].min_frequency_exact.clone().unwrap()));
    }
    verdict(pass, format!("multiples of L+1 have lower density exactly 1/(L+1), attaining the gap bound ({})", seen.join(", ")))
}

/// 50 random (box, H) pairs and 50 random coset unions.
fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs_ok = 0;
    for _ in 0..50 {
        let d = rng.gen_range(1..=3);
        let h: Vec<Vec<i64>> = (0..rng.gen_range(1..=5))
            .map(|_| (0..d).map(|_| rng.gen_range(-8..=8)).collect())
            .collect();
        let n = lemma42_threshold(d, &h).unwrap();
        let side = n + rng.gen_range(0..3 * n);
        let corner: Vec<i64> = (0..d).map(|_| rng.gen_range(-100..100)).collect();
        let f = FolnerBox::new(corner, vec![side; d]).unwrap();
        if lemma42_check(&f, &h).unwrap().holds {
            pairs_ok += 1;
        }
    }
    let mut cosets_ok = 0;
    let mut strictly_between = 0;
    for _ in 0..50 {
        let d = rng.gen_range(1..=2);
        let moduli: Vec<u64> = (0..d).map(|_| rng.gen_range(1..=6)).collect();
        let fundamental = FolnerBox::new(vec![0; d], moduli.clone()).unwrap();
        let mut residues: Vec<Vec<u64>> = fundamental
            .points()
            .filter(|_| rng.gen_bool(0.35))
            .map(|t| t.iter().map(|&x| x as u64).collect())
            .collect();
        if residues.is_empty() {
            residues.push(vec![0; d]);
        }
        let b = LatticeCoset::new(moduli, residues).unwrap();
        let k = b.minimal_box_witness().unwrap();
        let n = lemma42_threshold(d, &k).unwrap();
        let top = 16 * n;
        let witness = SyndeticWitness { k_set: k.clone(), region: FolnerBox::cube(d, top).unwrap() };
        let boxes: Vec<FolnerBox> = [n, 2 * n, 4 * n, 8 * n, top]
            .iter()
            .map(|&s| FolnerBox::cube(d, s).unwrap())
            .collect();
        let ladder = lemma43_density(&b, &witness, &boxes).unwrap();
        let bound = Rational64::new(1, 2 * k.len() as i64);
        // independent count on the largest box
        let f = boxes.last().unwrap();
        let counted = f.points().filter(|t| b.contains(t)).count() as i64;
        let last = Rational64::new(counted, f.volume() as i64);
        if ladder.threshold_index == Some(0)
            && ladder.entries.iter().all(|e| e.frequency >= bound)
            && last == ladder.entries.last().unwrap().frequency
        {
            cosets_ok += 1;
        }
        let density = b.density();
        if density > bound && density < Rational64::new(1, 1) {
            strictly_between += 1;
        }
    }
    verdict(
        pairs_ok == 50 && cosets_ok == 50 && strictly_between > 0,
        format!("{pairs_ok}/50 box pairs past threshold, {cosets_ok}/50 cosets >= 1/(2|K|), {strictly_between} strictly between"),
    )
}

/// Single-1 point against golden-rotation visits.
fn criterion_5() -> Verdict {
    let single = SortedVisits::new(vec![0]);
    let region = FolnerBox::cube(1, 5000).unwrap();
    let ladder: Vec<Vec<u64>> = (1..=1000).map(|s| vec![s]).collect();
    let single_ok = match ap_characterization(&single, &region, &ladder).unwrap() {
        ApVerdict::NotAp { witnesses, min_frequencies } => {
            witnesses.len() == 1000
                && witnesses.iter().all(|w| w.points().all(|t| !single.contains(&t)))
                && min_frequencies.iter().zip(1..).all(|(&f, w)| f <= 1.0 / w as f64)
        }
        ApVerdict::ApConsistent { .. } => false,
    };
    let config = load("folner-ladders.json");
    let report = run(Command::Folner, &config).unwrap();
    let RunResult::Folner(f) = &report.result else { unreachable!() };
    let k = rotation_covering_k(&RotationSystem::golden(), 0.05, DEFAULT_K_MAX).unwrap().k;
    let (golden_ok, gap) = match &f.dichotomy {
        Some(ApVerdict::ApConsistent { max_gap, .. }) => (max_gap.abs_diff(k) <= 1, *max_gap),
        _ => (false, 0),
    };
    verdict(
        single_ok && golden_ok,
        format!("single-1 is NOT-AP at all 1000 ladder sizes with density <= 1/W; golden AP-consistent with max gap {gap} vs covering K = {k}"),
    )
}

/// Golden-slope flow, r = 0.15, W in {1e2, 1e3}.
fn criterion_6() -> Verdict {
    let config = load("golden-flow.json");
    let started = Instant::now();
    let (report, _) = execute(Command::Flow, &config).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let RunResult::Bound(b) = &report.result else { unreachable!() };
    let q = b.quadrature.as_ref().unwrap();
    let windows: Vec<String> = b
        .runs
        .iter()
        .map(|r| match r.window_length {
            Value::Int(w) => w.to_string(),
            Value::Real(w) => w.to_string(),
        })
        .collect();
    let pass = b.runs.len() == 2
        && b.runs.iter().all(|r| r.margin >= 0.0 && r.violations.is_empty())
        && q.max_relative_error <= 1e-6
        && secs < 120.0;
    let detail = b
        .runs
        .iter()
        .map(|r| format!("min {:.5} >= {:.5}", r.min_measured, r.certified_bound))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        pass,
        format!("golden flow: W = {}: {detail}; quadrature rel. error {:.2e}; {secs:.2} s", windows.join(", "), q.max_relative_error),
    )
}

/// Annulus defect against γ_{2n}π for every n ≤ 1000.
fn criterion_7() -> Verdict {
    let mut config = load("annulus-probe.json");
    config.probe.as_mut().unwrap().n = (1..=1000).collect();
    let report = run(Command::Probe, &config).unwrap();
    let RunResult::Probe(p) = &report.result else { unreachable!() };
    // γ_n = n/(n+1), computed here rather than taken from the library
    let worst = p
        .rows
        .iter()
        .map(|r| {
            let g = (2 * r.n) as f64 / (2 * r.n + 1) as f64;
            (r.defect - g * std::f64::consts::PI).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        worst <= 1e-9 && p.radius_exact && p.rows.len() == 1000,
        format!("annulus defect vs gamma_2n*pi over n = 1..1000: max error {worst:.2e}; radii exactly invariant: {}", p.radius_exact),
    )
}

/// Two end-to-end runs of the criterion-1 config, with different thread counts.
fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, workers) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let status = Process::new(env!("CARGO_BIN_EXE_minrec"))
            .args(["bound", "--config"])
            .arg(config_path("golden-bound.json"))
            .arg("--out")
            .arg(&out)
            .args(["--workers", workers])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        reports.push(std::fs::read(out.join(REPORT_FILE)).unwrap());
    }
    verdict(
        reports[0] == reports[1],
        format!("two runs (1 and 4 workers) give bit-identical reports ({} bytes)", reports[0].len()),
    )
}

#[test]
fn acceptance() {
    let criteria: [(u32, fn() -> Verdict); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut failed = Vec::new();
    let stdout = std::io::stdout();
    for (i, f) in criteria {
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(stdout.lock(), "criterion {i}: {tag}: {}", v.detail).unwrap();
        if !v.pass {
            failed.push(i);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
