use std::fs;
use std::path::Path;
use std::process::Command;

use ep_holonomy::scenario::{
    exit, exit_code, report_flatness, run_scenario, sweep, Check, Classification, MatrixParts, Rect,
    RunSummary, ScenarioConfig, ScenarioKind, ScenarioParams,
};
use ep_holonomy::transport::HolonomyLabel;
use proptest::prelude::*;

fn cfg(kind: ScenarioKind) -> ScenarioConfig {
    ScenarioConfig {
        steps: 2000,
        trace_stride: 10,
        ..ScenarioConfig::new(kind)
    }
}

fn epholo(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_epholo")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn documented_runs_pass() {
    let no_ep = run_scenario(&ScenarioConfig { r: Some(0.5), ..ScenarioConfig::new(ScenarioKind::NoEp) }).unwrap();
    assert_eq!(no_ep.classification.as_ref().unwrap().label, HolonomyLabel::Identity);
    assert!(no_ep.passed());

    let minus = run_scenario(&ScenarioConfig::new(ScenarioKind::EpMinus)).unwrap();
    assert_eq!(minus.classification.as_ref().unwrap().label, HolonomyLabel::I);
    assert!(minus.passed());

    let four = run_scenario(&ScenarioConfig { winding: 4, ..cfg(ScenarioKind::Winding) }).unwrap();
    assert_eq!(four.classification.as_ref().unwrap().label, HolonomyLabel::Identity);
    assert!(four.passed());
}

#[test]
fn every_scenario_writes_its_files_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let expected: [(ScenarioKind, &str); 9] = [
        (ScenarioKind::NoEp, "trace.csv"),
        (ScenarioKind::EpMinus, "trace.csv"),
        (ScenarioKind::EpPlus, "trace.csv"),
        (ScenarioKind::BothEps, "trace.csv"),
        (ScenarioKind::Winding, "trace.csv"),
        (ScenarioKind::GateCycle, "trace.csv"),
        (ScenarioKind::FlatnessScan, "flatness.csv"),
        (ScenarioKind::KCheck, "kcheck.csv"),
        (ScenarioKind::MetricCheck, "metric.csv"),
    ];
    for (kind, file) in expected {
        let out = dir.path().join(kind.as_str());
        let s = run_scenario(&ScenarioConfig { output_dir: Some(out.clone()), ..cfg(kind) }).unwrap();
        assert!(s.passed(), "{kind}: {:?}", s.checks);
        assert!(out.join(file).is_file(), "{kind}");
        let parsed = RunSummary::from_json(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(parsed, s);
        assert_eq!(parsed.wall_time_s, None);
    }
}

#[test]
fn both_eps_scenario_expects_minus_identity() {
    let s = run_scenario(&cfg(ScenarioKind::BothEps)).unwrap();
    assert_eq!(s.classification.as_ref().unwrap().label, HolonomyLabel::I2);
    assert!(s.passed());
}

#[test]
fn trace_csv_has_schema_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_scenario(&ScenarioConfig {
        output_dir: Some(dir.path().to_path_buf()),
        rho: 0.7,
        ..cfg(ScenarioKind::EpMinus)
    })
    .unwrap();
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        [
            "s", "theta", "x", "y", "u00_re", "u00_im", "u01_re", "u01_im", "u10_re", "u10_im", "u11_re",
            "u11_im", "lambda_re", "lambda_im", "lambda_ref_re", "lambda_ref_im", "xi_offdiag"
        ]
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    // stride 10 over 2000 steps plus the starting sample
    assert_eq!(rows.len(), 201);
    let last = rows.last().unwrap();
    let h = MatrixParts::from_mat(&s.holonomy.unwrap().to_mat().unwrap());
    // the printed digits round-trip to the exact doubles of the summary
    assert_eq!(last[4], h.re[0][0]);
    assert_eq!(last[7], h.im[0][1]);
    assert_eq!(last[6], h.re[0][1]);
    assert!(text.lines().nth(1).unwrap().split(',').all(|v| v.contains('e')));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for root in [a.path(), b.path()] {
        for kind in [ScenarioKind::GateCycle, ScenarioKind::KCheck, ScenarioKind::EpPlus] {
            run_scenario(&ScenarioConfig { output_dir: Some(root.join(kind.as_str())), seed: 11, ..cfg(kind) }).unwrap();
        }
    }
    assert_eq!(read_tree(a.path()), read_tree(b.path()));
}

#[test]
fn timing_is_opt_in() {
    let s = run_scenario(&ScenarioConfig { timing: true, ..cfg(ScenarioKind::NoEp) }).unwrap();
    assert!(s.wall_time_s.unwrap() > 0.0);
}

#[test]
fn sweep_over_radius_classifies_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let grid: Vec<_> = [0.2, 0.5, 1.0, 1.5, 1.9]
        .into_iter()
        .map(|rho| ScenarioConfig { rho, ..cfg(ScenarioKind::EpMinus) })
        .collect();
    let entries = sweep(&grid, dir.path()).unwrap();
    assert_eq!(entries.len(), 5);
    for e in &entries {
        assert_eq!(e.exit_code, exit::PASS);
        assert_eq!(e.summary.as_ref().unwrap().classification.as_ref().unwrap().label, HolonomyLabel::I);
        assert!(dir.path().join(&e.dir).join("summary.json").is_file());
    }
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(index.as_object().unwrap().len(), 5);
    for e in &entries {
        assert_eq!(index[&e.hash]["exit_code"], 0);
    }
}

#[test]
fn sweep_over_steps_shows_fourth_order_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let grid: Vec<_> = [2500, 5000, 10_000, 20_000]
        .into_iter()
        .map(|steps| ScenarioConfig { steps, rho: 1.9, trace_stride: 100, ..ScenarioConfig::new(ScenarioKind::EpMinus) })
        .collect();
    let entries = sweep(&grid, dir.path()).unwrap();
    let errs: Vec<f64> = entries.iter().map(|e| e.summary.as_ref().unwrap().est_error.unwrap()).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((13.0..19.0).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn sweep_over_time_slices_records_without_asserting() {
    let dir = tempfile::tempdir().unwrap();
    let grid: Vec<_> = [0.0, 0.5, 1.0]
        .into_iter()
        .map(|time_slice| ScenarioConfig { time_slice, ..cfg(ScenarioKind::EpMinus) })
        .collect();
    let entries = sweep(&grid, dir.path()).unwrap();
    for e in &entries {
        let s = e.summary.as_ref().unwrap();
        assert!(s.classification.is_some());
        assert_eq!(s.check("holonomy").is_some(), e.params.time_slice == 0.0);
    }
}

#[test]
fn sweep_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let grid = vec![
        ScenarioConfig { rho: 2.5, ..cfg(ScenarioKind::EpMinus) },
        ScenarioConfig { r: Some(1.0), ..cfg(ScenarioKind::BothEps) },
        cfg(ScenarioKind::EpMinus),
        cfg(ScenarioKind::EpMinus),
    ];
    let entries = sweep(&grid, dir.path()).unwrap();
    // the duplicate config runs once
    assert_eq!(entries.len(), 3);
    assert_eq!(entries[0].exit_code, exit::INVALID_CONFIG);
    assert!(entries[0].error.is_some());
    assert_eq!(entries[1].exit_code, exit::NUMERICAL_ABORT);
    assert_eq!(entries[2].exit_code, exit::PASS);
    assert!(sweep(&[], dir.path()).is_err());
}

#[test]
fn sweep_output_is_independent_of_order() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut grid: Vec<_> = [0.4, 0.9, 1.6].into_iter().map(|rho| ScenarioConfig { rho, ..cfg(ScenarioKind::EpPlus) }).collect();
    sweep(&grid, a.path()).unwrap();
    grid.reverse();
    sweep(&grid, b.path()).unwrap();
    assert_eq!(read_tree(a.path()), read_tree(b.path()));
}

#[test]
fn flatness_report_marks_skipped_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let near = Rect { x_min: -1.0002, x_max: -0.9998, y_min: -0.0002, y_max: 0.0002 };
    let scan = report_flatness(near, 2, 0.0, &out).unwrap();
    assert_eq!(scan.admissible, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.contains(",skip,skip,skip,")));

    for t in ["0", "1"] {
        let (code, msg) = epholo(&["flatness", "--grid", "41", "--t", t, "--out", out.to_str().unwrap()]);
        assert_eq!(code, exit::PASS, "{msg}");
    }
    let (code, _) = epholo(&["flatness", "--x-min", "-1.0002", "--x-max", "-0.9998", "--y-min", "-0.0002", "--y-max", "0.0002", "--grid", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, exit::PASS);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).display().to_string();
    let cases: [(Vec<String>, i32); 7] = [
        (vec!["run".into(), "--scenario".into(), "ep-minus".into(), "--steps".into(), "2000".into(), "--out".into(), out("a")], exit::PASS),
        (vec!["run".into(), "--scenario".into(), "flatness-scan".into(), "--steps".into(), "2000".into(), "--tol".into(), "1e-14".into(), "--out".into(), out("b")], exit::CHECK_FAILED),
        (vec!["run".into(), "--scenario".into(), "ep-minus".into(), "--rho".into(), "2.5".into(), "--out".into(), out("c")], exit::INVALID_CONFIG),
        (vec!["run".into(), "--scenario".into(), "ep-minus".into(), "--steps".into(), "10".into(), "--out".into(), out("d")], exit::INVALID_CONFIG),
        (vec!["run".into(), "--no-such-flag".into()], exit::INVALID_CONFIG),
        (vec!["run".into(), "--scenario".into(), "both-eps".into(), "--r".into(), "1".into(), "--steps".into(), "2000".into(), "--out".into(), out("e")], exit::NUMERICAL_ABORT),
        (vec!["run".into(), "--scenario".into(), "ep-minus".into(), "--rho".into(), "1.9".into(), "--steps".into(), "1000".into(), "--tol".into(), "1e-10".into(), "--out".into(), out("f")], exit::NUMERICAL_ABORT),
    ];
    for (args, want) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, msg) = epholo(&args);
        assert_eq!(code, want, "{args:?}: {msg}");
    }
}

#[test]
fn binary_runs_are_reproducible_and_config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# loop around the mirror EP\nscenario = ep-plus\nrho = 0.4\nsteps = 1500\nstride = 25\n").unwrap();
    for name in ["x", "y"] {
        let out = dir.path().join(name);
        let (code, msg) = epholo(&["run", "--config", conf.to_str().unwrap(), "--rho", "1.2", "--out", out.to_str().unwrap()]);
        assert_eq!(code, exit::PASS, "{msg}");
    }
    assert_eq!(read_tree(&dir.path().join("x")), read_tree(&dir.path().join("y")));
    let s = RunSummary::from_json(&fs::read_to_string(dir.path().join("x/summary.json")).unwrap()).unwrap();
    assert_eq!(s.scenario, ScenarioKind::EpPlus);
    assert_eq!(s.params.rho, 1.2);
    assert_eq!(s.params.steps, 1500);
    assert_eq!(s.classification.unwrap().label, HolonomyLabel::I3);
}

#[test]
fn binary_sweep_writes_index() {
    let dir = tempfile::tempdir().unwrap();
    let (code, msg) = epholo(&["sweep", "--scenario", "ep-minus", "--rho", "0.5,1.5", "--winding", "1,-1", "--steps", "1000", "--stride", "50", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, exit::PASS, "{msg}");
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("index.json")).unwrap()).unwrap();
    assert_eq!(index.as_object().unwrap().len(), 4);
}

#[test]
fn exit_code_mapping_for_results() {
    let s = run_scenario(&cfg(ScenarioKind::NoEp)).unwrap();
    assert_eq!(exit_code(&Ok(s.clone())), exit::PASS);
    let mut failed = s;
    failed.checks[0].pass = false;
    assert_eq!(exit_code(&Ok(failed)), exit::CHECK_FAILED);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(f64::MAX),
    ]
}

fn summary() -> impl Strategy<Value = RunSummary> {
    (
        prop::collection::vec(finite(), 8),
        prop::collection::vec((finite(), finite(), any::<bool>()), 0..6),
        prop::option::of(finite()),
        prop::option::of(finite()),
        0usize..5,
        any::<u64>(),
        any::<i32>(),
    )
        .prop_map(|(h, checks, dev, wall, label, seed, winding)| RunSummary {
            scenario: ScenarioKind::ALL[seed as usize % 9],
            params: ScenarioParams {
                r: h[0],
                rho: h[1],
                winding,
                steps: seed as usize,
                time_slice: h[2],
                tolerance: h[3],
                seed,
                grid: 41,
                samples: 1000,
                trace_stride: 1,
            },
            holonomy: Some(MatrixParts { re: vec![vec![h[4], h[5]], vec![h[6], h[7]]], im: vec![vec![h[7], h[6]], vec![h[5], h[4]]] }),
            classification: Some(Classification {
                label: [HolonomyLabel::Identity, HolonomyLabel::I, HolonomyLabel::I2, HolonomyLabel::I3, HolonomyLabel::Other][label],
                distance: h[0].abs(),
            }),
            max_lambda_dev: dev,
            est_error: dev.map(f64::abs),
            wall_time_s: wall,
            checks: checks
                .into_iter()
                .enumerate()
                .map(|(k, (value, tol, pass))| Check { name: format!("check_{k}"), pass, value, tol })
                .collect(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn summary_json_round_trips_exactly(s in summary()) {
        let back = RunSummary::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &s);
        // bitwise, so that −0.0 and the last ulp survive too
        prop_assert_eq!(back.params.time_slice.to_bits(), s.params.time_slice.to_bits());
        let (a, b) = (back.holonomy.unwrap(), s.holonomy.unwrap());
        for (x, y) in a.re.iter().flatten().zip(b.re.iter().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
