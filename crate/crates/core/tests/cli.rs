use std::path::Path;
use std::process::{Command, Output};

use irs_hst::harness::{parse_csv, write_csv, CSV_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-hst"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn version_flag() {
    let o = run(&["--version"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with(concat!("irs-hst ", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn errors_exit_nonzero_with_one_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "irs_elements = 16\n# fine\nwarp_factor = 9\n").unwrap();
    let o = run(&["frame", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.starts_with("error: "), "{err}");
    assert!(err.contains("bad.cfg:3"), "{err}");
    assert_eq!(err.lines().count(), 1);

    for args in [
        &["frame", "--irs-elements", "15"][..],
        &["sweep", "--axis", "k_factor", "--values", "3,1", "--trials", "1"],
        &["sweep", "--axis", "colour", "--values", "1", "--trials", "1"],
        &["frame", "--schemes", "magic"],
        &["frame", "--config", "/definitely/missing.cfg"],
    ] {
        let o = run(args);
        assert!(!o.status.success(), "{args:?}");
        assert!(stderr(&o).starts_with("error: "), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_then_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, "irs_elements = 9\nusers_per_cluster = 2\ntotal_users = 46\n").unwrap();
    let o = run(&["dump-channel", "--config", cfg.to_str().unwrap(), "--bs-antennas", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frame,link,row,col,re,im"));
    // G is 9 x 3, two passengers with 9-element v and 3-antenna direct links.
    assert_eq!(lines.count(), 9 * 3 + 2 * 9 + 2 * 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("117,")));
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let o = run(&[
            "sweep",
            "--axis",
            "users_per_cluster",
            "--values",
            "2,3",
            "--trials",
            "6",
            "--schemes",
            "proposed,rps,no_irs",
            "--seed",
            "77",
            "--workers",
            workers,
            "--irs-elements",
            "9",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(path).unwrap()
    };
    let a = out("a.csv", "1");
    let b = out("b.csv", "3");
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
    let parsed = parse_csv(&text, Path::new("a.csv")).unwrap().unwrap();
    assert_eq!(parsed.rows.len(), 6);
    assert_eq!(parsed.seed, 77);
    let mut again = Vec::new();
    write_csv(&parsed, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);
    let keys: Vec<(f64, &str)> = parsed.rows.iter().map(|r| (r.value, r.scheme.name())).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(y.1)));
    assert_eq!(keys, sorted);
}

#[test]
fn invalid_axis_values_are_skipped_with_a_warning() {
    let o = run(&[
        "sweep",
        "--axis",
        "irs_elements",
        "--values",
        "4,5",
        "--trials",
        "2",
        "--schemes",
        "rps",
        "--workers",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("irs_elements = 5 skipped"));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn frame_and_throughput_traces() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("ao.csv");
    let o = run(&[
        "frame",
        "--irs-elements",
        "9",
        "--schemes",
        "proposed,rps",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("\nproposed,") && text.contains("\nrps,"));
    let ao = std::fs::read_to_string(&trace).unwrap();
    assert!(ao.starts_with("iteration,objective,bb_nodes,budget_exceeded\n0,"));

    let pa = dir.path().join("pa.csv");
    let o = run(&["throughput", "--irs-elements", "4", "--pa-trace", pa.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<Vec<String>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows[0][0], "proposed");
    assert_eq!(rows[1][0], "proposed_no_pa");
    assert!(rows[0][1].parse::<f64>().unwrap() >= rows[1][1].parse::<f64>().unwrap());
    let trace = std::fs::read_to_string(&pa).unwrap();
    assert!(trace.starts_with("window,iteration,mu,max_dlambda,max_dbeta,objective\n0,1,"));
    assert!(trace.lines().any(|l| l.starts_with("2,")));
}
