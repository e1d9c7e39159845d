//! End-to-end tests of the `pistol` binary: subcommand wiring, CSV
//! schema, exit codes, and file round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pistol"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pistol-cli-test-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn synth_files(dir: &Path, n: u32, test_n: u32, flip: &str) -> (PathBuf, PathBuf) {
    let train = dir.join("train.svm");
    let test = dir.join("test.svm");
    let out = run(&[
        "synth",
        "--n",
        &n.to_string(),
        "--test-n",
        &test_n.to_string(),
        "--d",
        "6",
        "--margin",
        "0.1",
        "--flip",
        flip,
        "--seed",
        "9",
        "--out-train",
        train.to_str().unwrap(),
        "--out-test",
        test.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "synth failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    (train, test)
}

#[test]
fn synth_is_deterministic_and_round_trips() {
    let dir = tmp_dir("synth");
    let (train_a, test_a) = synth_files(&dir, 150, 50, "0");
    let bytes_train = std::fs::read(&train_a).unwrap();
    let bytes_test = std::fs::read(&test_a).unwrap();
    let (train_b, _) = synth_files(&dir, 150, 50, "0");
    assert_eq!(
        bytes_train,
        std::fs::read(&train_b).unwrap(),
        "same seed, same bytes"
    );

    // the emitted files parse back to the requested sizes
    let parsed = pistol::data::parse_libsvm(std::io::BufReader::new(
        std::fs::File::open(&train_a).unwrap(),
    ))
    .unwrap();
    assert_eq!(parsed.len(), 150);
    assert_eq!(parsed.dim, 6);
    let parsed = pistol::data::parse_libsvm(std::io::BufReader::new(
        std::fs::File::open(&test_a).unwrap(),
    ))
    .unwrap();
    assert_eq!(parsed.len(), 50);
    drop(bytes_test);
}

#[test]
fn synth_rejects_flip_over_half() {
    let dir = tmp_dir("synth-flip");
    let out = run(&[
        "synth",
        "--n",
        "10",
        "--test-n",
        "5",
        "--d",
        "3",
        "--flip",
        "0.6",
        "--out-train",
        dir.join("a").to_str().unwrap(),
        "--out-test",
        dir.join("b").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "flip >= 0.5 is a config error");
}

fn parse_csv(stdout: &[u8]) -> Vec<Vec<String>> {
    let text = String::from_utf8_lossy(stdout);
    text.lines()
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect()
}

#[test]
fn train_csv_schema_and_aggregates() {
    let dir = tmp_dir("train");
    let (train, test) = synth_files(&dir, 200, 80, "0.1");
    let out = run(&[
        "train",
        "--algo",
        "pistol",
        "--kernel",
        "gaussian",
        "--gamma",
        "1.0",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--grid",
        "50,200",
        "--shuffles",
        "4",
        "--seed",
        "11",
        "--jobs",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = parse_csv(&out.stdout);
    assert_eq!(
        rows[0].join(","),
        "algo,dataset,kernel,gamma,loss,a,L,b,eta,seed,T,train_time_ms,test_error,test_ell_risk"
    );
    // 4 shuffles x 2 grid points + (mean, std) x 2 grid points
    assert_eq!(rows.len(), 1 + 8 + 4);

    // per-run rows come in (seed, T) order regardless of --jobs
    let seeds: Vec<&str> = rows[1..9].iter().map(|r| r[9].as_str()).collect();
    assert_eq!(seeds, ["11", "11", "12", "12", "13", "13", "14", "14"]);
    let ts: Vec<&str> = rows[1..9].iter().map(|r| r[10].as_str()).collect();
    assert_eq!(ts, ["50", "200", "50", "200", "50", "200", "50", "200"]);

    // aggregates recompute from the per-run rows
    for &t in &["50", "200"] {
        let errs: Vec<f64> = rows[1..9]
            .iter()
            .filter(|r| r[10] == t)
            .map(|r| r[12].parse::<f64>().unwrap())
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let std = (errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (errs.len() - 1) as f64)
            .sqrt();
        let mean_row = rows.iter().find(|r| r[9] == "mean" && r[10] == t).unwrap();
        let std_row = rows.iter().find(|r| r[9] == "std" && r[10] == t).unwrap();
        assert!((mean_row[12].parse::<f64>().unwrap() - mean).abs() <= 1e-12);
        assert!((std_row[12].parse::<f64>().unwrap() - std).abs() <= 1e-12);
    }
}

#[test]
fn train_rejects_oversized_subsample_and_bad_combos() {
    let dir = tmp_dir("train-errors");
    let (train, test) = synth_files(&dir, 60, 20, "0");
    let base = [
        "train",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
    ];

    let mut args = base.to_vec();
    args.extend(["--algo", "pistol", "--kernel", "linear", "--grid", "100"]);
    assert_eq!(
        run(&args).status.code(),
        Some(2),
        "subsample exceeds dataset size"
    );

    let mut args = base.to_vec();
    args.extend(["--algo", "pistol", "--kernel", "linear", "--eta", "0.25"]);
    assert_eq!(
        run(&args).status.code(),
        Some(2),
        "eta only applies to asgd"
    );

    let mut args = base.to_vec();
    args.extend(["--algo", "asgd", "--kernel", "linear"]);
    assert_eq!(run(&args).status.code(), Some(2), "asgd needs eta");

    let mut args = base.to_vec();
    args.extend([
        "--algo",
        "pistol-coord",
        "--kernel",
        "gaussian",
        "--gamma",
        "1",
    ]);
    assert_eq!(
        run(&args).status.code(),
        Some(2),
        "pistol-coord is linear only"
    );

    let mut args = base.to_vec();
    args.extend(["--algo", "pistol", "--kernel", "linear", "--gamma", "0.5"]);
    assert_eq!(
        run(&args).status.code(),
        Some(2),
        "gamma needs the gaussian kernel"
    );

    let mut args = base.to_vec();
    args.extend(["--algo", "pistol", "--kernel", "gaussian"]);
    assert_eq!(
        run(&args).status.code(),
        Some(2),
        "unknown dataset has no gamma default"
    );

    let out = run(&["train", "--algo", "pistol", "--kernel", "linear"]);
    assert_eq!(out.status.code(), Some(2), "needs data");
}

#[test]
fn train_all_algorithms_run() {
    let dir = tmp_dir("train-algos");
    let (train, test) = synth_files(&dir, 120, 40, "0");
    for extra in [
        vec!["--algo", "pistol", "--kernel", "linear"],
        vec!["--algo", "asgd", "--kernel", "linear", "--eta", "0.25"],
        vec!["--algo", "perceptron", "--kernel", "linear"],
        vec!["--algo", "pistol-coord", "--kernel", "linear"],
    ] {
        let mut args = vec![
            "train",
            "--train",
            train.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--shuffles",
            "2",
        ];
        args.extend(&extra);
        let out = run(&args);
        assert!(
            out.status.success(),
            "algo {:?} failed: {}",
            extra,
            String::from_utf8_lossy(&out.stderr)
        );
        let rows = parse_csv(&out.stdout);
        assert_eq!(rows.len(), 1 + 2 + 2, "2 runs + mean/std for {extra:?}");
    }
}

#[test]
fn train_with_synth_spec_and_config_file() {
    let dir = tmp_dir("train-config");
    let config = dir.join("run.conf");
    std::fs::write(
        &config,
        "# harness config\nalgo = asgd\nkernel = linear\neta = 0.25\n\
         synth = n=100,test=40,d=5,margin=0.1\nshuffles = 2\nseed = 3\n",
    )
    .unwrap();
    let out = run(&["train", "--config", config.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = parse_csv(&out.stdout);
    assert!(rows[1][1].starts_with("synth:n=100;test=40;d=5;margin=0.1;flip=0;seed=3"));
    assert_eq!(rows[1][8], "0.25", "eta column from the config file");

    // flags override the file
    let out = run(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--eta",
        "0.125",
    ]);
    assert!(out.status.success());
    let rows = parse_csv(&out.stdout);
    assert_eq!(rows[1][8], "0.125");

    // unknown keys are config errors
    std::fs::write(&config, "algo = pistol\nbogus = 1\n").unwrap();
    assert_eq!(
        run(&["train", "--config", config.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn train_runs_are_deterministic_across_jobs() {
    let dir = tmp_dir("train-determinism");
    let (train, test) = synth_files(&dir, 150, 50, "0.1");
    let args = |jobs: &'static str| {
        vec![
            "train",
            "--algo",
            "pistol",
            "--kernel",
            "linear",
            "--train",
            train.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--grid",
            "40,150",
            "--shuffles",
            "3",
            "--jobs",
            jobs,
        ]
    };
    let a = run(&args("1"));
    let b = run(&args("4"));
    assert!(a.status.success() && b.status.success());
    // timing columns differ; compare everything else
    let strip = |out: &Output| {
        parse_csv(&out.stdout)
            .into_iter()
            .map(|mut row| {
                if row.len() > 11 {
                    row[11] = String::new();
                }
                row.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn audit_exit_codes_and_csv() {
    let out = run(&["audit", "--suite", "log_bound", "--trials", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("suite=log_bound trials=500 violations=0"));
    assert!(text.trim_end().ends_with("AUDIT PASS"));

    assert_eq!(run(&["audit", "--suite", "nosuch"]).status.code(), Some(2));
    assert_eq!(run(&["audit", "--trials", "0"]).status.code(), Some(2));

    let dir = tmp_dir("audit");
    let csv_path = dir.join("report.csv");
    let out = run(&[
        "audit",
        "--suite",
        "certificates",
        "--streams",
        "5",
        "--rounds",
        "80",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "suite,trials,violations,worst_slack");
    assert!(lines.next().unwrap().starts_with("certificates,"));
    assert!(lines.next().unwrap().starts_with("proof_invariant,"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["train", "--algo", "nosuch", "--kernel", "linear"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gamma_defaults_follow_dataset_names() {
    let dir = tmp_dir("gamma-default");
    // tiny stand-in files; what matters is the file stem
    let a9a = dir.join("a9a");
    let a9a_t = dir.join("a9a.t");
    std::fs::write(&a9a, "1 1:1\n-1 2:1\n1 1:0.5 2:0.5\n-1 1:-1\n").unwrap();
    std::fs::write(&a9a_t, "1 1:1\n-1 2:1\n").unwrap();
    let out = run(&[
        "train",
        "--algo",
        "pistol",
        "--kernel",
        "gaussian",
        "--train",
        a9a.to_str().unwrap(),
        "--test",
        a9a_t.to_str().unwrap(),
        "--shuffles",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = parse_csv(&out.stdout);
    assert_eq!(rows[1][3], "0.04", "a9a file name implies gamma 0.04");
}

#[test]
fn dim_override_is_validated() {
    let dir = tmp_dir("dim");
    let (train, test) = synth_files(&dir, 40, 20, "0");
    let mut args = vec![
        "train",
        "--algo",
        "pistol-coord",
        "--kernel",
        "linear",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--shuffles",
        "1",
    ];
    args.extend(["--dim", "3"]);
    assert_eq!(
        run(&args).status.code(),
        Some(2),
        "override below observed max index"
    );
    args.truncate(args.len() - 2);
    args.extend(["--dim", "8"]);
    assert!(run(&args).status.success(), "room to spare is fine");
}
