use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hbsurf::geometry::SurfaceKind;
use hbsurf::harness::{build_samples, read_report_json, write_samples, Lacunary, TestFunction};
use hbsurf::pointsets::nodes_on_surface;

fn hbsurf(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_hbsurf")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_points_writes_the_point_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nodes.csv");
    hbsurf(&["gen-points", "--surface", "cone", "--n", "40", "--seed", "7", "--out", path_str(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("id,v1,v2,x,y,z\n"));
    assert_eq!(text.lines().count(), 41);

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        hbsurf(&[
            "gen-points",
            "--surface",
            "cylinder",
            "--n",
            "25",
            "--seed",
            "3",
            "--kind",
            "eval",
            "--out",
            path_str(p),
        ]);
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn geodesic_reports_length_and_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("path.csv");
    let to = format!("{},1", 2.2 + std::f64::consts::FRAC_PI_2);
    let out =
        hbsurf(&["geodesic", "--surface", "cylinder", "--from", "2.2,0", "--to", &to, "--trace", path_str(&trace)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |key: &str| -> f64 { text.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap() };
    let want = std::f64::consts::FRAC_PI_2.hypot(1.0);
    assert!((value("length") - want).abs() < 1e-6 * want);
    assert!((value("closed_form") - want).abs() < 1e-12);
    let path = fs::read_to_string(trace).unwrap();
    assert!(path.starts_with("s,v1,v2,x,y,z\n"));
    assert_eq!(path.lines().count(), 1 + 2 * 64 + 1);
}

#[test]
fn interp_reproduces_node_values_and_approximates_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let kind = SurfaceKind::Sphere;
    let chart = kind.experiment_chart();
    let nodes = nodes_on_surface(kind, 400);
    let samples = build_samples(&chart, &nodes, TestFunction::F1, 1, Lacunary::None).unwrap();
    let sample_path = dir.path().join("samples.csv");
    write_samples(&samples, fs::File::create(&sample_path).unwrap()).unwrap();

    let eval_path = dir.path().join("eval.csv");
    hbsurf(&["gen-points", "--surface", "sphere", "--n", "30", "--kind", "eval", "--out", path_str(&eval_path)]);
    let out_path = dir.path().join("values.csv");
    hbsurf(&[
        "interp",
        "--samples",
        path_str(&sample_path),
        "--eval",
        path_str(&eval_path),
        "--order",
        "1",
        "--delta",
        "auto",
        "--out",
        path_str(&out_path),
    ]);
    let text = fs::read_to_string(out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "id,v1,v2,value");
    let mut worst: f64 = 0.0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let x = chart.forward([f[1], f[2]]).unwrap();
        worst = worst.max((f[3] - TestFunction::F1.value(x)).abs());
    }
    assert!(worst < 3e-2, "max error {worst}");

    let node_path = dir.path().join("nodes.csv");
    hbsurf(&["gen-points", "--surface", "sphere", "--n", "400", "--out", path_str(&node_path)]);
    hbsurf(&[
        "interp",
        "--samples",
        path_str(&sample_path),
        "--eval",
        path_str(&node_path),
        "--order",
        "1",
        "--mu",
        "2",
        "--delta",
        "0.3",
        "--out",
        path_str(&dir.path().join("at_nodes.csv")),
    ]);
    let at_nodes = fs::read_to_string(dir.path().join("at_nodes.csv")).unwrap();
    for (line, s) in at_nodes.lines().skip(1).zip(&samples) {
        let h: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(h, s.value());
    }
}

#[test]
fn run_table_emits_the_configured_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("table.json");
    let report = dir.path().join("table_out.json");
    fs::write(
        &config,
        r#"{"surface": "cone", "function": "f2", "taylor_order": [0, 2], "n_values": [80, 160, 320, 640],
            "basis": {"delta": "auto"}, "lacunary": "none", "seed": 5, "record_timing": false}"#,
    )
    .unwrap();
    let out = hbsurf(&["run-table", "--config", path_str(&config), "--out", path_str(&report)]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("slope T0") && stdout.contains("slope T2"));
    let parsed = read_report_json(fs::File::open(&report).unwrap()).unwrap();
    assert_eq!(parsed.rows.len(), 8);
    assert_eq!(parsed.config.seed, 5);
    assert!(parsed.rows.iter().all(|r| r.seconds == 0.0 && r.rmse <= r.mae));
}

#[test]
fn bad_input_fails_with_a_message() {
    let out = Command::new(env!("CARGO_BIN_EXE_hbsurf"))
        .args(["geodesic", "--surface", "klein", "--from", "0,0", "--to", "1,1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}
