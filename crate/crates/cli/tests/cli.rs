use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dirquant::error::CliError;
use dirquant::ingest::{apply_jitter, general_position_check, ingest_reader, Dataset};
use dirquant::report::read_region;
use dirquant_core::contour::{fixed_tau_region, sweep};
use dirquant_core::rng::SeededRng;
use dirquant_core::PointCloud;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn dirquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirquant")).args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn ingest(text: &str) -> Result<dirquant::ingest::Ingested, CliError> {
    ingest_reader(text.as_bytes(), 0)
}

#[test]
fn small_location_file() {
    let ing = ingest("a,b\n0,0\n1,0\n0.5,1\n").unwrap();
    match ing.dataset {
        Dataset::Location(c) => assert_eq!((c.n(), c.dim()), (3, 2)),
        _ => panic!("expected location data"),
    }
    assert!(ing.warnings.is_empty() && ing.degenerate.is_none());
}

#[test]
fn bad_cells_report_their_line() {
    match ingest("x,y\n0,0\n1,NaN\n2,1\n") {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    match ingest("x,y\n0,0\n1,zz\n") {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(ingest("x,y\n"), Err(CliError::EmptyInput)));
    assert!(matches!(ingest(""), Err(CliError::EmptyInput)));
    assert!(matches!(ingest("x1,y1,z\n1,2,3\n"), Err(CliError::HeaderMismatch(_))));
    assert!(matches!(ingest("x1,y2\n1,2\n"), Err(CliError::HeaderMismatch(_))));
    assert!(matches!(ingest("x,y\n1,2,3\n"), Err(CliError::HeaderMismatch(_))));
}

#[test]
fn duplicate_rows_are_named() {
    let ing = ingest("x,y\n0,0\n1,2\n0.3,0.9\n1,2\n").unwrap();
    assert_eq!(ing.warnings.len(), 1);
    assert!(ing.warnings[0].contains("identical observations 1 and 3"), "{}", ing.warnings[0]);
    assert_eq!(ing.degenerate, Some(vec![1, 3]));
}

#[test]
fn tagged_columns_in_any_order() {
    let ing = ingest("y2,x1,y1\n10,1,100\n20,2,200\n30,3,300\n40,4,401\n").unwrap();
    match ing.dataset {
        Dataset::Regression(r) => {
            assert_eq!((r.q, r.k, r.n()), (1, 2, 4));
            assert_eq!(r.x, vec![1.0, 2.0, 3.0, 4.0]);
            assert_eq!(&r.y[..4], &[100.0, 10.0, 200.0, 20.0]);
        }
        _ => panic!("expected regression data"),
    }
}

#[test]
fn jitter_behaviour() {
    let line = Dataset::Location(PointCloud::from_points2(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap());
    assert_eq!(general_position_check(&line, 0), Some(vec![0, 1, 2]));
    assert_eq!(apply_jitter(&line, 0.0, 4).unwrap(), line);
    let a = apply_jitter(&line, 1e-5, 4).unwrap();
    assert_eq!(general_position_check(&a, 0), None);
    assert_eq!(a, apply_jitter(&line, 1e-5, 4).unwrap());
    assert_ne!(a, apply_jitter(&line, 1e-5, 5).unwrap());
    if let (Dataset::Location(j), Dataset::Location(o)) = (&a, &line) {
        assert!(j.as_flat().iter().zip(o.as_flat()).all(|(x, y)| (x - y).abs() <= 1e-5));
    }
}

#[test]
fn large_inputs_sample_the_collinearity_scan() {
    let mut rng = SeededRng::new(3);
    let mut text = String::from("x,y\n");
    for _ in 0..6000 {
        text.push_str(&format!("{},{}\n", rng.normal(), rng.normal()));
    }
    let ing = ingest(&text).unwrap();
    assert!(ing.degenerate.is_none());
}

#[test]
fn three_point_quantile() {
    let v = json_of(&dirquant(&[
        "quantile",
        "--tau",
        "0.2",
        "--u",
        "0,1",
        "-i",
        fixture("three_points.csv").to_str().unwrap(),
    ]));
    let r = &v["result"];
    assert!(r["a"].as_f64().unwrap().abs() < 1e-12);
    assert!(r["b"][0].as_f64().unwrap().abs() < 1e-12 && (r["b"][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["lambda"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert_eq!(v["meta"]["jitter_applied"], Value::Bool(false));
}

#[test]
fn hexagon_contour_has_six_facets() {
    let v = json_of(&dirquant(&["contour", "--tau", "0.178", "-i", fixture("hexagon.csv").to_str().unwrap()]));
    assert_eq!(v["result"]["region"]["facets"], 6);
    assert_eq!(v["result"]["hyperplanes"].as_array().unwrap().len(), 12);
}

#[test]
fn region_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region.json");
    let input = fixture("collinear5.csv");
    let o = dirquant(&["contour", "--tau", "0.25", "-i", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let back = read_region(&doc).unwrap();
    let verts = doc["result"]["region"]["vertices"].as_array().unwrap();
    assert_eq!(back.vertices().len(), verts.len());
    for (v, w) in back.vertices().iter().zip(verts) {
        assert!((v[0] - w[0].as_f64().unwrap()).abs() < 1e-12 && (v[1] - w[1].as_f64().unwrap()).abs() < 1e-12);
    }
    let hex = ingest(&std::fs::read_to_string(fixture("hexagon.csv")).unwrap()).unwrap();
    let Dataset::Location(c) = hex.dataset else { panic!() };
    let exact = fixed_tau_region(&sweep(&c, 0.25).unwrap()).unwrap();
    let text = serde_json::to_string(&dirquant::report::region_json(&exact)).unwrap();
    let again = read_region(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(again.vertices(), exact.vertices());
}

#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("collinear5.csv");
    for (fmt, cmd) in [("json", "contour"), ("csv", "contour"), ("svg", "contour"), ("json", "scan"), ("svg", "km")] {
        let mut outs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{cmd}-{run}.{fmt}"));
            let o = dirquant(&[
                cmd,
                "--tau",
                "0.25",
                "-i",
                input.to_str().unwrap(),
                "-f",
                fmt,
                "--seed",
                "9",
                "-o",
                path.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            outs.push(std::fs::read_to_string(path).unwrap());
        }
        if fmt == "svg" {
            let strip = |s: &str| s.lines().filter(|l| !l.starts_with("<!--")).collect::<Vec<_>>().join("\n");
            assert_eq!(strip(&outs[0]), strip(&outs[1]));
        } else {
            assert_eq!(outs[0], outs[1]);
        }
    }
}

#[test]
fn integer_n_tau_is_rejected_before_computation() {
    let o = dirquant(&["contour", "--tau", "0.5", "-i", fixture("hexagon.csv").to_str().unwrap(), "--json-errors"]);
    assert_eq!(o.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"], "DegenerateTau");
    let near: Vec<f64> = e["admissible_tau"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(near, vec![2.5 / 6.0, 3.5 / 6.0]);
    let o = dirquant(&["fig2", "--tau", "0.3030303030303030303"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn collinear_data_need_jitter() {
    let input = fixture("collinear5.csv");
    let o = dirquant(&[
        "quantile",
        "--tau",
        "0.25",
        "--u",
        "1,0",
        "-i",
        input.to_str().unwrap(),
        "--jitter",
        "0",
        "--json-errors",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"], "DegenerateData");
    assert_eq!(e["indices"], serde_json::json!([0, 1, 2]));
    let o = dirquant(&["quantile", "--tau", "0.25", "--u", "1,0", "-i", input.to_str().unwrap()]);
    let v = json_of(&o);
    assert_eq!(v["meta"]["jitter_applied"], Value::Bool(true));
    assert!(String::from_utf8_lossy(&o.stderr).contains("jitter"));
}

#[test]
fn fig2_table_and_panels() {
    let dir = tempfile::tempdir().unwrap();
    let o = dirquant(&["fig2", "--seed", "7", "--svg-dir", dir.path().to_str().unwrap(), "-f", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let lambdas: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(lambdas.len(), 15);
    assert!(lambdas.windows(2).all(|w| w[1] >= w[0]));
    for name in ["fig2_hyperplanes.svg", "fig2_lambda.svg"] {
        let svg = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn regression_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reg.csv");
    let mut rng = SeededRng::new(2);
    let mut text = String::from("x1,y1,y2\n");
    for _ in 0..201 {
        let x = rng.uniform_in(0.0, 2.0);
        text.push_str(&format!("{x},{},{}\n", x + 0.3 * rng.normal(), x + 0.3 * rng.normal()));
    }
    std::fs::write(&path, text).unwrap();
    let v = json_of(&dirquant(&[
        "regress",
        "--tau",
        "0.2",
        "--u",
        "0,1",
        "--at",
        "1",
        "--grid",
        "60",
        "--bins",
        "4",
        "-i",
        path.to_str().unwrap(),
    ]));
    let r = &v["result"];
    assert!((r["model"]["b"][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["cut"]["region"]["status"], "bounded");
    assert_eq!(r["coverage"]["bins"].as_array().unwrap().len(), 4);
    let o = dirquant(&["regress", "--tau", "0.2", "--u", "0,1", "-i", fixture("hexagon.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn every_command_runs_on_jittered_collinear_data() {
    let input = fixture("collinear5.csv");
    let i = input.to_str().unwrap();
    for args in [
        vec!["quantile", "--tau", "0.25", "--u", "0,1"],
        vec!["contour", "--tau", "0.25"],
        vec!["depth", "--at", "1,1", "--at", "2,0.5", "--tau", "0.25"],
        vec!["km", "--tau", "0.25", "--k", "21"],
        vec!["scan", "--tau", "0.25", "--directions", "12"],
    ] {
        let mut a = args.clone();
        a.extend(["-i", i, "--seed", "1"]);
        let o = dirquant(&a);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
