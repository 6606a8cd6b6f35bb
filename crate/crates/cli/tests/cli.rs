//! End-to-end tests of the `hullfit` binary: exit codes, output schemas,
//! determinism switches, and the documented flag surface.

use std::path::Path;
use std::process::{Command, Output};

use hullfit_core::geometry::Vec2;
use hullfit_core::kitti::{write_scan, RawScan};
use hullfit_core::synth::{export_kitti, simulate_scan, ScanConfig, VehicleSpec};

fn hullfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hullfit"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn write_csv(path: &Path, points: &[[f64; 3]]) {
    let mut text = String::from("x,y,z\n");
    for p in points {
        text.push_str(&format!("{},{},{}\n", p[0], p[1], p[2]));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn help_screens_enumerate_flags_with_defaults() {
    let top = hullfit(&["--help"]);
    assert_eq!(exit_code(&top), 0);
    let text = stdout_str(&top);
    for sub in ["fit", "bench-kitti", "bench-synth", "oracle-check"] {
        assert!(text.contains(sub), "top-level help lists {sub}");
    }

    let fit = stdout_str(&hullfit(&["fit", "--help"]));
    for needle in ["--method", "occlusion_min", "--delta-deg", "0.5", "--output"] {
        assert!(fit.contains(needle), "fit help mentions {needle}");
    }

    let kitti = stdout_str(&hullfit(&["bench-kitti", "--help"]));
    for needle in [
        "--dataset-root",
        "--frames",
        "--classes",
        "Car",
        "--min-points",
        "5",
        "--method",
        "--delta-deg",
        "--seed",
        "42",
        "--timing",
        "--no-timing",
        "--format",
        "csv",
        "--output",
    ] {
        assert!(kitti.contains(needle), "bench-kitti help mentions {needle}");
    }

    let synth = stdout_str(&hullfit(&["bench-synth", "--help"]));
    for needle in [
        "--trials",
        "1000",
        "--noise-sigma",
        "--dropout",
        "--angular-res-deg",
        "0.2",
        "--method",
        "--delta-deg",
        "--seed",
        "--no-timing",
        "--format",
        "--output",
    ] {
        assert!(synth.contains(needle), "bench-synth help mentions {needle}");
    }

    let oracle = stdout_str(&hullfit(&["oracle-check", "--help"]));
    for needle in ["--trials", "500", "--mc-samples", "100000", "--tolerance", "0.02", "--seed"] {
        assert!(oracle.contains(needle), "oracle-check help mentions {needle}");
    }
}

#[test]
fn unknown_flag_is_rejected_with_exit_2() {
    let out = hullfit(&["bench-synth", "--definitely-not-a-flag"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_str(&out).contains("--definitely-not-a-flag"));
}

#[test]
fn fit_square_csv_reports_axis_aligned_unit_box() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.csv");
    write_csv(
        &path,
        &[
            [10.0, 0.0, 0.0],
            [10.0, 1.0, 0.0],
            [11.0, 1.0, 0.4],
            [11.0, 0.0, 0.4],
        ],
    );
    let out = hullfit(&["fit", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(doc["theta_star_deg"].as_f64().unwrap(), 0.0);
    assert!((doc["box"]["length"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((doc["box"]["width"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // 0.5 deg steps over a quarter turn
    assert_eq!(doc["score_curve"]["candidates"].as_u64().unwrap(), 180);
}

#[test]
fn fit_single_point_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    write_csv(&path, &[[1.0, 2.0, 3.0]]);
    let out = hullfit(&["fit", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_str(&out).contains("degenerate cluster"));
}

#[test]
fn fit_malformed_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y,z\n1,2,3\n4,oops,6\n").unwrap();
    let out = hullfit(&["fit", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_str(&out).contains("line 3"));

    let missing = hullfit(&["fit", dir.path().join("nope.csv").to_str().unwrap()]);
    assert_eq!(exit_code(&missing), 2);
}

#[test]
fn fit_reads_velodyne_blobs_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cluster.bin");
    let scan = RawScan {
        points: vec![
            [10.0, 0.0, 0.0, 0.1],
            [10.0, 1.0, 0.0, 0.1],
            [11.0, 1.0, 0.4, 0.1],
            [11.0, 0.0, 0.4, 0.1],
        ],
    };
    std::fs::write(&path, write_scan(&scan)).unwrap();
    let out = hullfit(&["fit", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(doc["theta_star_deg"].as_f64().unwrap(), 0.0);

    // a truncated blob is a parse failure
    std::fs::write(&path, [0u8; 15]).unwrap();
    assert_eq!(exit_code(&hullfit(&["fit", path.to_str().unwrap()])), 2);
}

#[test]
fn fit_recovers_known_yaw_within_grid_step() {
    let spec = VehicleSpec::new(
        4.2,
        1.8,
        Vec2::new(14.0, 9.0),
        30.0_f64.to_radians(),
    )
    .unwrap();
    let sample = simulate_scan(&spec, &ScanConfig::noiseless(0.2_f64.to_radians(), 7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("yaw30.csv");
    write_csv(&path, sample.cluster.points());
    let out = hullfit(&["fit", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let got = doc["theta_star_deg"].as_f64().unwrap();
    assert!((got - 30.0).abs() <= 0.5, "theta {got} not within 0.5 of 30");
}

#[test]
fn bench_synth_without_timing_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = hullfit(&[
            "bench-synth",
            "--trials",
            "12",
            "--no-timing",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b);
    let text = String::from_utf8(bytes_a).unwrap();
    // no timing pass: no runtime rows in the report
    assert!(!text.contains("runtime"));
    for method in ["occlusion_min", "area_min", "closeness_max", "variance_min"] {
        assert!(text.contains(method), "report covers {method}");
    }
}

#[test]
fn bench_synth_duplicate_method_repeats_identical_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.json");
    let out = hullfit(&[
        "bench-synth",
        "--trials",
        "8",
        "--no-timing",
        "--method",
        "occlusion_min,occlusion_min",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let methods = doc["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 2);
    assert_eq!(methods[0], methods[1]);
    assert_eq!(methods[0]["method"], "occlusion_min");
}

#[test]
fn bench_kitti_fixture_accounts_for_every_label() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("kitti");
    let res = 0.25_f64.to_radians();
    let scenes = vec![
        (
            VehicleSpec::new(4.4, 1.8, Vec2::new(12.0, 5.0), 0.6).unwrap(),
            ScanConfig::noiseless(res, 11),
        ),
        (
            VehicleSpec::new(3.9, 1.7, Vec2::new(15.0, -4.0), 1.1).unwrap(),
            ScanConfig::noiseless(res, 12),
        ),
    ];
    export_kitti(&root, &scenes).unwrap();

    let path = dir.path().join("report.json");
    let out = hullfit(&[
        "bench-kitti",
        "--dataset-root",
        root.to_str().unwrap(),
        "--no-timing",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let cfg = &doc["config"];
    let evaluated = cfg["evaluated"].as_u64().unwrap();
    let skipped = cfg["skipped_empty"].as_u64().unwrap()
        + cfg["skipped_sparse"].as_u64().unwrap()
        + cfg["fit_failures"].as_u64().unwrap();
    assert_eq!(evaluated + skipped, 2, "two labeled vehicles accounted for");
    assert!(evaluated >= 1);
    assert!(stderr_str(&out).contains("evaluated"));

    // frame selection narrows the run to one label
    let one = hullfit(&[
        "bench-kitti",
        "--dataset-root",
        root.to_str().unwrap(),
        "--frames",
        "0-0",
        "--no-timing",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&one), 0, "stderr: {}", stderr_str(&one));
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&one)).unwrap();
    let cfg = &doc["config"];
    let accounted = cfg["evaluated"].as_u64().unwrap()
        + cfg["skipped_empty"].as_u64().unwrap()
        + cfg["skipped_sparse"].as_u64().unwrap()
        + cfg["fit_failures"].as_u64().unwrap();
    assert_eq!(accounted, 1);
}

#[test]
fn bench_kitti_input_problems_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = hullfit(&[
        "bench-kitti",
        "--dataset-root",
        dir.path().join("nowhere").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&missing), 2);

    let root = dir.path().join("kitti");
    export_kitti(
        &root,
        &[(
            VehicleSpec::new(4.4, 1.8, Vec2::new(12.0, 5.0), 0.6).unwrap(),
            ScanConfig::noiseless(0.25_f64.to_radians(), 11),
        )],
    )
    .unwrap();
    let empty = hullfit(&[
        "bench-kitti",
        "--dataset-root",
        root.to_str().unwrap(),
        "--frames",
        "",
    ]);
    assert_eq!(exit_code(&empty), 2);
    assert!(stderr_str(&empty).contains("empty frame list"));

    // a malformed label file is a dataset problem
    std::fs::write(root.join("label_2").join("000000.txt"), "Car truncated row\n").unwrap();
    let malformed = hullfit(&[
        "bench-kitti",
        "--dataset-root",
        root.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&malformed), 2);
}

#[test]
fn oracle_check_is_seeded_and_reports_pass() {
    let args = ["oracle-check", "--trials", "20", "--mc-samples", "20000"];
    let first = hullfit(&args);
    let second = hullfit(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(stdout_str(&first), stdout_str(&second));
    let text = stdout_str(&first);
    assert!(text.contains("trials 20"));
    assert!(text.contains("max deviation"));
    assert!(text.trim_end().ends_with("PASS"));
}

#[test]
fn oracle_check_zero_tolerance_exits_1() {
    let out = hullfit(&[
        "oracle-check",
        "--trials",
        "5",
        "--mc-samples",
        "2000",
        "--tolerance",
        "0",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stdout_str(&out).trim_end().ends_with("FAIL"));
}

#[test]
fn flag_domains_are_validated() {
    // grid step must stay inside (0, 90)
    for bad in ["0", "90", "-1", "nan"] {
        let out = hullfit(&["bench-synth", "--trials", "2", "--delta-deg", bad]);
        assert_eq!(exit_code(&out), 2, "delta-deg {bad} accepted");
    }
    let out = hullfit(&["bench-kitti", "--dataset-root", "/tmp", "--min-points", "1"]);
    assert_eq!(exit_code(&out), 2);
    let out = hullfit(&["bench-synth", "--trials", "2", "--method", "magic"]);
    assert_eq!(exit_code(&out), 2);
    let out = hullfit(&["bench-synth", "--trials", "2", "--format", "xml"]);
    assert_eq!(exit_code(&out), 2);
}
