use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use matnorm::io::{parse_matrix_csv, read_trace_json, write_matrix_csv, RING_CSV_HEADER};
use matnorm::{generate_gaussian, run_successive, GenSpec, Matrix, NormConfig};

fn matnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matnorm"))
        .args(args)
        .output()
        .expect("spawn matnorm")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn fixed_point_csv(dir: &Path) -> String {
    let m = Matrix::from_rows(&[
        [-1.4137, 0.7407, 0.6730],
        [0.7407, 0.6730, -1.4137],
        [0.6730, -1.4137, 0.7407],
    ])
    .unwrap();
    let path = dir.join("fixedpoint3x3.csv");
    write_matrix_csv(&m, &path).unwrap();
    path.to_str().unwrap().to_string()
}

fn trace_steps(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn normalize_generated() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out_m = dir.path().join("final.csv");
    let out = matnorm(&[
        "normalize",
        "--gen",
        "5x5,2,4,42",
        "--tol",
        "1e-8",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        out_m.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let line = stdout(&out);
    assert!(line.starts_with("successive converged=true stop=tolerance iterations="));
    assert!(line.contains("rate="));

    let steps = trace_steps(&trace);
    assert!(*steps.last().unwrap() < 1e-8);
    assert!(steps[steps.len() - 10..].windows(2).all(|w| w[1] < w[0]));

    let lib = run_successive(
        &generate_gaussian(&"5x5,2,4,42".parse::<GenSpec>().unwrap()).unwrap(),
        &NormConfig::default(),
    )
    .unwrap();
    let written = parse_matrix_csv(&fs::read_to_string(&out_m).unwrap()).unwrap();
    assert_eq!(written, lib.final_matrix);
}

#[test]
fn normalize_json_trace_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let out = matnorm(&[
        "normalize",
        "--gen",
        "4x6,0,1,9",
        "--order",
        "row-first",
        "--capture",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let got = read_trace_json(&trace).unwrap();
    let cfg = NormConfig::default()
        .with_order(matnorm::Order::RowFirst)
        .with_capture(true);
    let want = run_successive(
        &generate_gaussian(&GenSpec::standard(4, 6, 9)).unwrap(),
        &cfg,
    )
    .unwrap();
    assert_eq!(got, want);
}

#[test]
fn normalize_rejects_2x2() {
    let out = matnorm(&["normalize", "--gen", "2x2,0,1,1"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("at least 3 rows and 3 columns"));
}

#[test]
fn normalize_fixed_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixed_point_csv(dir.path());
    let out = matnorm(&["normalize", "--in", &path]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("iterations=1 "));
}

#[test]
fn normalize_cap_is_nonconvergence() {
    let out = matnorm(&["normalize", "--gen", "5x5,2,4,42", "--max-iter", "3"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("stop=max_iterations"));
}

#[test]
fn input_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2,3\n4,5,6\n7,8,9,10\n").unwrap();
    let out = matnorm(&["normalize", "--in", ragged.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("ragged"));

    let constant = dir.path().join("constant.csv");
    fs::write(&constant, "1,2,3\n1,5,6\n1,8,10\n").unwrap();
    let out = matnorm(&["normalize", "--in", constant.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("zero standard deviation"));

    let missing = dir.path().join("missing.csv");
    let out = matnorm(&["normalize", "--in", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 4);

    let out = matnorm(&[
        "normalize",
        "--gen",
        "3x3,0,1,1",
        "--out",
        dir.path().join("no/such/dir.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4);

    assert_eq!(code(&matnorm(&["normalize"])), 3);
    assert_eq!(code(&matnorm(&["normalize", "--gen", "3x3,0,1"])), 3);
    assert_eq!(code(&matnorm(&["bogus"])), 3);
    assert_eq!(
        code(&matnorm(&["normalize", "--gen", "3x3,0,1,1", "--tol", "0"])),
        3
    );
}

#[test]
fn compare_verdict() {
    let out = matnorm(&["compare", "--gen", "5x5,2,4,7"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let verdict = text.lines().last().unwrap();
    assert!(verdict.starts_with("verdict successive=converged simultaneous="));
    assert!(!verdict.ends_with("simultaneous=converged"));
}

#[test]
fn compare_writes_reproducible_traces() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, jobs: &str| {
        let d = dir.path().join(sub);
        let out = matnorm(&[
            "compare",
            "--gen",
            "3x3,0,1,1",
            "--max-iter",
            "50",
            "--trace-dir",
            d.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert_eq!(code(&out), 0);
        (
            fs::read(d.join("successive.csv")).unwrap(),
            fs::read(d.join("simultaneous.csv")).unwrap(),
            out.stdout,
        )
    };
    let a = run("a", "1");
    let b = run("b", "2");
    assert_eq!(a, b);
    let sim = String::from_utf8(a.1).unwrap();
    assert_eq!(sim.lines().count(), 51);
}

#[test]
fn ring_output() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let out = matnorm(&[
        "ring",
        "--count",
        "1",
        "--seed",
        "5",
        "--out",
        one.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&one).unwrap();
    assert_eq!(text.lines().next().unwrap(), RING_CSV_HEADER);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("5,"));

    let out = matnorm(&["ring", "--count", "0"]);
    assert_eq!(code(&out), 3);

    let serial = dir.path().join("serial.csv");
    let parallel = dir.path().join("parallel.csv");
    for (path, jobs) in [(&serial, "1"), (&parallel, "4")] {
        let out = matnorm(&[
            "ring",
            "--count",
            "200",
            "--seed",
            "1",
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).starts_with("ring samples=200 excluded=0"));
    }
    assert_eq!(fs::read(&serial).unwrap(), fs::read(&parallel).unwrap());
    for line in fs::read_to_string(&serial).unwrap().lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[2] + f[3] + f[4]).abs() <= 1e-4);
        assert!((f[5] * f[5] + f[6] * f[6] + f[7] * f[7] - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn generate_and_certify() {
    let out = matnorm(&["generate", "--gen", "3x4,2,4,11"]);
    assert_eq!(code(&out), 0);
    let m = parse_matrix_csv(&stdout(&out)).unwrap();
    let want = generate_gaussian(&"3x4,2,4,11".parse::<GenSpec>().unwrap()).unwrap();
    assert_eq!(m, want);

    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    assert_eq!(
        code(&matnorm(&[
            "generate",
            "--gen",
            "3x4,2,4,11",
            "--out",
            raw.to_str().unwrap()
        ])),
        0
    );
    let out = matnorm(&["certify", "--in", raw.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).starts_with("certified=false"));

    let fp = fixed_point_csv(dir.path());
    assert_eq!(code(&matnorm(&["certify", "--in", &fp])), 0);
    let out = matnorm(&["certify", "--in", &fp, "--tol", "1e-3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("certified=true"));
}

#[test]
fn help_documents_defaults() {
    let out = matnorm(&["normalize", "--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for needle in [
        "[default: 1e-8]",
        "[default: 1000]",
        "[default: col-first]",
        "[default: 10]",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
    assert!(stdout(&matnorm(&["simultaneous", "--help"])).contains("[default: 1e12]"));
    assert!(stdout(&matnorm(&["certify", "--help"])).contains("[default: 1e-4]"));
    assert_eq!(code(&matnorm(&["--help"])), 0);
}
