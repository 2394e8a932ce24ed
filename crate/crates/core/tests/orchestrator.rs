use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use invsynth_core::frontend::{parse_problem, ProblemSource};
use invsynth_core::ir::VcProblem;
use invsynth_core::orchestrator::{oasis_solve, run_benchmarks, Mode, OasisConfig, Verdict};
use invsynth_core::relinfer::{check_vcs, VcResult};
use invsynth_core::smt::{SmtConfig, SmtSession};
use invsynth_core::trace::Trace;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(name: &str) -> VcProblem {
    parse_problem(&ProblemSource::from_path(corpus().join(name)).unwrap()).unwrap()
}

fn config(mode: Mode) -> OasisConfig {
    OasisConfig {
        mode,
        tau: Duration::from_secs(10),
        timeout: Duration::from_secs(60),
        ..OasisConfig::default()
    }
}

fn passes(problem: &VcProblem, verdict: &Verdict) -> bool {
    match verdict {
        Verdict::Solved(inv) => {
            let mut fresh = SmtSession::new(SmtConfig::default());
            check_vcs(problem, inv, &mut fresh).unwrap() == VcResult::Pass
        }
        Verdict::Unsolved(_) => false,
    }
}

#[test]
fn working_example_is_solved_without_y() {
    let p = load("working_example.inv");
    let (trace, buf) = Trace::memory();
    let started = Instant::now();
    let report = oasis_solve(&p, &OasisConfig { trace, ..config(Mode::Oasis) });
    assert!(started.elapsed() < Duration::from_secs(120));
    assert!(passes(&p, &report.verdict), "{:?}", report.verdict);
    let relevant = report.relevant.clone().unwrap();
    assert!(!relevant.contains(&"y".to_string()), "{relevant:?}");
    let end = buf.events().into_iter().find(|e| e["event"] == "end").unwrap();
    assert_eq!(end["verdict"], "solved");
    assert!(!end["relevant"].as_array().unwrap().iter().any(|v| v == "y"));
}

#[test]
fn guarded_loop_is_solved_quickly() {
    let p = load("guarded_loop.inv");
    let report = oasis_solve(&p, &config(Mode::Oasis));
    assert!(report.elapsed < Duration::from_secs(30));
    assert!(passes(&p, &report.verdict), "{:?}", report.verdict);
}

#[test]
fn samples_only_grow_across_rounds() {
    let p = load("working_example.inv");
    let report = oasis_solve(&p, &config(Mode::Oasis));
    for w in report.rounds.windows(2) {
        assert!(w[1].pos_count >= w[0].pos_count && w[1].neg_count >= w[0].neg_count);
        assert!(w[1].pos_count + w[1].neg_count > w[0].pos_count + w[0].neg_count);
    }
}

#[test]
fn every_mode_is_sound_on_the_working_example() {
    let p = load("working_example.inv");
    for mode in Mode::ALL {
        let report = oasis_solve(&p, &config(mode));
        if report.verdict.is_solved() {
            assert!(passes(&p, &report.verdict), "{mode}: {:?}", report.verdict);
        }
    }
}

#[test]
fn unsafe_program_is_never_solved() {
    let p = parse_problem(&ProblemSource::from_text(
        "(vars x) (pre (= x 0)) (trans (= x! (+ x 1))) (post (< x 5))",
    ))
    .unwrap();
    for mode in Mode::ALL {
        let report = oasis_solve(&p, &OasisConfig { timeout: Duration::from_secs(20), tau: Duration::from_secs(5), ..config(mode) });
        assert!(!report.verdict.is_solved(), "{mode}");
    }
}

#[test]
fn unsafe_program_reports_the_witness() {
    let p = parse_problem(&ProblemSource::from_text(
        "(vars x) (pre (= x 0)) (trans (= x! (+ x 1))) (post (< x 2))",
    ))
    .unwrap();
    let report = oasis_solve(&p, &config(Mode::Oasis));
    let Verdict::Unsolved(reason) = &report.verdict else { panic!("solved an unsafe program") };
    assert!(reason.contains("reachable and bad"), "{reason}");
}

#[test]
fn tau_must_be_below_the_timeout() {
    let cfg = OasisConfig { tau: Duration::from_secs(10), timeout: Duration::from_secs(10), ..OasisConfig::default() };
    assert!(cfg.validate().is_err());
    let report = oasis_solve(&load("counter.inv"), &cfg);
    assert!(matches!(report.verdict, Verdict::Unsolved(_)));
    assert!(report.rounds.is_empty());
}

#[test]
fn modes_parse_from_their_names() {
    for mode in Mode::ALL {
        assert_eq!(mode.name().parse::<Mode>().unwrap(), mode);
    }
    assert!("fast".parse::<Mode>().is_err());
}

#[test]
fn stats_json_has_the_documented_fields() {
    let p = load("counter.inv");
    let report = oasis_solve(&p, &config(Mode::Oasis));
    let json = report.to_json();
    for key in ["verdict", "time_ms", "rounds", "smt_queries", "ilp_solves", "invariant", "invariant_size"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["verdict"], "solved");
    assert!(json["smt_queries"].as_u64().unwrap() > 0);
    assert!(json["ilp_solves"].as_u64().unwrap() > 0);
    let round = &json["rounds"][0];
    for key in ["relevant_vars", "classifier", "pos_count", "neg_count"] {
        assert!(round.get(key).is_some(), "missing round.{key}");
    }
    assert_eq!(json["invariant_size"].as_u64().unwrap() as usize, report.invariant().unwrap().size());
    assert!(report.define_fun().unwrap().starts_with("(define-fun inv-f ((i Int) (n Int)) Bool "));
}

#[test]
fn cancellation_ends_the_run_promptly() {
    let p = load("gap.sl");
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = cancel.clone();
    std::thread::spawn(move || {
        std::thread::sleep(Duration::from_millis(500));
        flag.store(true, Ordering::Relaxed);
    });
    let started = Instant::now();
    let report = oasis_solve(&p, &OasisConfig { cancel: Some(cancel), ..config(Mode::Oasis) });
    assert!(!report.verdict.is_solved());
    assert!(started.elapsed() < Duration::from_secs(10), "{:?}", started.elapsed());
}

#[test]
fn global_timeout_is_respected() {
    let p = load("gap.sl");
    let cfg = OasisConfig { tau: Duration::from_secs(1), timeout: Duration::from_secs(3), ..config(Mode::Oasis) };
    let report = oasis_solve(&p, &cfg);
    assert_eq!(report.verdict, Verdict::Unsolved("timeout".into()));
    assert!(report.elapsed < Duration::from_secs(8), "{:?}", report.elapsed);
}

#[test]
fn empty_directory_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let inputs = dir.path().join("in");
    std::fs::create_dir(&inputs).unwrap();
    let summary = run_benchmarks(&inputs, &config(Mode::Oasis), &out).unwrap();
    assert_eq!((summary.solved, summary.total), (0, 0));
    assert_eq!(summary.to_string(), "solved 0/0");
    assert_eq!(std::fs::read_to_string(&out).unwrap().trim(), "file,verdict,time,#vars,#relevant,size");
}

fn masked(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| {
            let mut cells: Vec<String> = l.split(',').map(str::to_string).collect();
            cells[2] = String::new();
            cells
        })
        .collect()
}

#[test]
fn benchmark_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("in");
    std::fs::create_dir(&inputs).unwrap();
    for name in ["counter.inv", "countdown.inv", "two_counters.sl"] {
        std::fs::copy(corpus().join(name), inputs.join(name)).unwrap();
    }
    std::fs::write(inputs.join("broken.inv"), "(vars x) (pre").unwrap();
    let cfg = config(Mode::Oasis);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let summary = run_benchmarks(&inputs, &cfg, &a).unwrap();
    run_benchmarks(&inputs, &cfg, &b).unwrap();
    assert_eq!(summary.total, 4);
    assert_eq!(summary.solved, 3);
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(masked(&ta), masked(&tb));
    let files: Vec<&str> = ta.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(files, ["broken.inv", "countdown.inv", "counter.inv", "two_counters.sl"]);
    assert!(ta.lines().nth(1).unwrap().contains(",error,"));
}

#[test]
fn naive_selection_finds_the_smallest_set_first() {
    let p = load("counter_confounded.inv");
    let report = oasis_solve(&p, &config(Mode::NaiveVarsSelect));
    assert!(passes(&p, &report.verdict), "{:?}", report.verdict);
    assert_eq!(report.relevant.unwrap().len(), 1);
}

#[test]
fn no_vars_select_uses_every_variable() {
    let p = load("double_step.inv");
    let report = oasis_solve(&p, &config(Mode::NoVarsSelect));
    assert!(passes(&p, &report.verdict), "{:?}", report.verdict);
    assert_eq!(report.relevant.unwrap(), p.vars);
}
