use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invsynth")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FAST: [&str; 4] = ["--tau", "5", "--timeout", "20"];

#[test]
fn solved_problem_prints_a_define_fun() {
    let file = corpus("counter.inv");
    let mut args = vec!["solve", file.to_str().unwrap()];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("(define-fun inv-f ((i Int) (n Int)) Bool "), "{out}");
    assert_eq!(out.lines().count(), 1);
}

#[test]
fn sygus_input_uses_the_declared_signature() {
    let file = corpus("two_counters.sl");
    let mut args = vec!["solve", file.to_str().unwrap()];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("(define-fun inv-f ("), "{}", stdout(&o));
}

#[test]
fn unsafe_problem_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("unsafe.inv");
    std::fs::write(&file, "(vars x) (pre (= x 0)) (trans (= x! (+ x 1))) (post (< x 3))").unwrap();
    let mut args = vec!["solve", file.to_str().unwrap()];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("unsolved: "), "{}", stderr(&o));
}

#[test]
fn parse_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.inv");
    std::fs::write(&file, "(vars x)\n(pre (= x 0)\n").unwrap();
    let o = run(&["solve", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with(&format!("{}:", file.display())), "{err}");

    let o = run(&["solve", file.to_str().unwrap(), "--json-diagnostics"]);
    assert_eq!(o.status.code(), Some(2));
    let d: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(d["kind"], "syntax");
    assert_eq!(d["file"], file.display().to_string());
    assert!(d["line"].as_u64().unwrap() >= 1);
}

#[test]
fn bad_options_exit_with_two() {
    let file = corpus("counter.inv");
    let f = file.to_str().unwrap();
    for args in [
        vec!["solve", f, "--tau", "30", "--timeout", "30"],
        vec!["solve", f, "--tau", "-1"],
        vec!["solve", f, "--lambda", "abc"],
        vec!["solve", f, "--bigM", "0"],
        vec!["solve", "/nonexistent/file.inv"],
        vec!["bench", "/nonexistent/dir"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(run(&["solve", f, "--mode", "quick"]).status.code(), Some(2));
}

#[test]
fn stats_json_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let file = corpus("countdown.inv");
    let mut args = vec!["solve", file.to_str().unwrap(), "--stats-json", stats.to_str().unwrap()];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(v["verdict"], "solved");
    assert!(v["rounds"].as_array().is_some_and(|r| !r.is_empty()));
    assert!(v["invariant"].is_string());
}

#[test]
fn learner_options_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("ilp");
    let file = corpus("counter.inv");
    let mut args = vec![
        "solve",
        file.to_str().unwrap(),
        "--lambda",
        "1/2",
        "--coeff-bound",
        "50",
        "--bigM",
        "200000",
        "--seed",
        "3",
        "--kmax",
        "10",
        "--dump-ilp",
        dump.to_str().unwrap(),
    ];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dumped: Vec<_> = std::fs::read_dir(&dump).unwrap().collect();
    assert!(!dumped.is_empty());
}

#[test]
fn bench_writes_a_sorted_report() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("in");
    std::fs::create_dir(&inputs).unwrap();
    for name in ["countdown.inv", "bounded.inv"] {
        std::fs::copy(corpus(name), inputs.join(name)).unwrap();
    }
    let out = dir.path().join("report.csv");
    let mut args = vec!["bench", inputs.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "solved 2/2");
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, ["file", "verdict", "time", "#vars", "#relevant", "size"]);
    let files: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(files, ["bounded.inv", "countdown.inv"]);
}

#[test]
fn trace_file_records_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let file = corpus("counter.inv");
    let mut args = vec!["solve", file.to_str().unwrap(), "--trace", trace.to_str().unwrap()];
    args.extend(FAST);
    assert_eq!(run(&args).status.code(), Some(0));
    let events: Vec<serde_json::Value> =
        std::fs::read_to_string(&trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(events.iter().any(|e| e["event"] == "round"));
    assert_eq!(events.last().unwrap()["event"], "end");
}
