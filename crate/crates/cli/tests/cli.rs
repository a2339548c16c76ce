use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    root.join(format!("{name}.dl2")).display().to_string()
}

fn dl2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dl2")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_prints_types() {
    let o = dl2(&["check", &corpus("build")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("build : [d](int, int) ->d tree d @ d0"), "{out}");
    assert!(out.contains("main : tree d0"), "{out}");
}

#[test]
fn check_reports_the_rule() {
    let o = dl2(&["check", &corpus("neg_child_store")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[T-Store]"), "{}", stderr(&o));
}

#[test]
fn run_exit_codes() {
    assert_eq!(dl2(&["run", &corpus("par_prime")]).status.code(), Some(0));
    assert_eq!(dl2(&["run", &corpus("oob")]).status.code(), Some(2));
    let o = dl2(&["run", "--fuel", "3", &corpus("build")]);
    assert_eq!(o.status.code(), Some(5));
    let o = dl2(&["run", "--monitor", "detect", &corpus("entangled")]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("ill-typed"));
}

#[test]
fn saved_schedules_replay() {
    let dir = std::env::temp_dir().join(format!("dl2-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let sched = dir.join("s.json");
    let sched = sched.to_str().unwrap();
    let first = dl2(&["run", "--seed", "7", "--save-schedule", sched, &corpus("dedup")]);
    assert_eq!(first.status.code(), Some(0));
    let again = dl2(&["run", "--replay", sched, &corpus("dedup")]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&again));
    std::fs::write(sched, r#"{"mode":"cyclic","choices":[9]}"#).unwrap();
    assert_eq!(dl2(&["run", "--replay", sched, &corpus("dedup")]).status.code(), Some(64));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fuzz_prints_replay_seeds() {
    let o = dl2(&["fuzz", "--trials", "20", &corpus("entangled")]);
    assert_eq!(o.status.code(), Some(4));
    let out = stdout(&o);
    assert!(out.contains("replay seeds: 0"), "{out}");
    assert!(out.contains("--seed 0"), "{out}");
    assert_eq!(dl2(&["fuzz", "--trials", "20", &corpus("disentangled")]).status.code(), Some(0));
}

#[test]
fn explore_exit_codes() {
    let o = dl2(&["explore", "--steps", "400", "--compare-modes", &corpus("entangled")]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("\"choices\""));
    let o = dl2(&["explore", "--steps", "400", "--compare-modes", &corpus("disentangled")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = dl2(&["explore", "--max-states", "10", &corpus("build")]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn graph_is_dot() {
    let o = dl2(&["graph", &corpus("par_prime")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("digraph"));
    assert!(out.contains("color=red"), "{out}");
    assert!(out.trim_end().ends_with('}'));
}

#[test]
fn corpus_command() {
    let o = dl2(&["corpus", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn usage_and_file_errors() {
    assert_eq!(dl2(&["run"]).status.code(), Some(64));
    assert_eq!(dl2(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(dl2(&["check", "/nonexistent/x.dl2"]).status.code(), Some(66));
}
