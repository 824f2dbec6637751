use std::path::Path;
use std::process::{Command, Output};

fn lqmargin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqmargin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_flag(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

/// Column `name` of the single data row of a CSV with `#` manifest lines.
fn field(csv: &str, name: &str) -> String {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    row[idx].to_string()
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let base = ["concentrate", "--seed", "7", "--n", "6", "--m", "6", "--trials", "40", "--q", "4"];
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let mut args = base.to_vec();
        let out = out_flag(dir);
        args.extend(["--threads", threads, "--out", &out]);
        assert!(lqmargin(&args).status.success());
    }
    for file in ["summary.csv", "trials.csv"] {
        let x = std::fs::read(a.join(file)).unwrap();
        let y = std::fs::read(b.join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
    assert!(a.join("manifest.txt").exists());
}

#[test]
fn stripped_header_reproduces_an_entropy_seeded_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let out = out_flag(&first);
    let args = ["threshold", "--n", "5", "--m", "5", "--trials", "30", "--out", &out];
    assert!(lqmargin(&args).status.success());
    let summary = std::fs::read_to_string(first.join("summary.csv")).unwrap();
    assert!(summary.contains("system entropy"));

    let config: String = summary
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = tmp.path().join("rerun.toml");
    std::fs::write(&path, config).unwrap();
    let second = tmp.path().join("second");
    let out2 = out_flag(&second);
    let rerun = lqmargin(&["threshold", "--config", path.to_str().unwrap(), "--out", &out2]);
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    let again = std::fs::read_to_string(second.join("summary.csv")).unwrap();
    let data = |s: &str| s.lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(data(&summary), data(&again));
    assert_eq!(field(&summary, "config_hash"), field(&again, "config_hash"));
}

#[test]
fn oversized_enumeration_exits_with_resource_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_flag(tmp.path());
    let run = lqmargin(&["margin", "--seed", "1", "--n", "30", "--m", "2", "--out", &out]);
    assert_eq!(run.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("2^24"), "{stderr}");
}

#[test]
fn gradcheck_agrees_with_finite_differences() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_flag(tmp.path());
    let run = lqmargin(&["gradcheck", "--seed", "5", "--n", "4", "--m", "4", "--q", "4", "--trials", "20", "--out", &out]);
    assert_eq!(run.status.code(), Some(0));
    let summary = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    let dev: f64 = field(&summary, "max_abs_deviation").parse().unwrap();
    let checked: usize = field(&summary, "checked").parse().unwrap();
    assert!(checked > 0 && dev <= 1e-3, "checked {checked}, deviation {dev}");
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_flag(tmp.path());
    let bad_flag = lqmargin(&["margin", "--bogus", "1"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let missing = lqmargin(&["concentrate", "--seed", "1", "--n", "4", "--out", &out]);
    assert_eq!(missing.status.code(), Some(2));

    let low_q = lqmargin(&["margin", "--seed", "1", "--n", "4", "--m", "4", "--q", "1.5", "--out", &out]);
    assert_eq!(low_q.status.code(), Some(2));

    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "[run]\nseed = 1\nmystery = 3\n").unwrap();
    let bad_key = lqmargin(&["margin", "--config", path.to_str().unwrap(), "--out", &out]);
    assert_eq!(bad_key.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_key.stderr).contains("mystery"));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(lqmargin(&["--help"]).status.code(), Some(0));
    assert_eq!(lqmargin(&["balance", "--help"]).status.code(), Some(0));
}

#[test]
fn balance_writes_trials_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_flag(tmp.path());
    let run = lqmargin(&["balance", "--seed", "2", "--d", "3", "--big-n", "5", "--trials", "10", "--out", &out]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let trials = std::fs::read_to_string(tmp.path().join("trials.csv")).unwrap();
    assert_eq!(trials.lines().filter(|l| !l.starts_with('#')).count(), 11);
    let summary = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert_eq!(field(&summary, "exact"), "true");
}
