use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use nlbox_core::{evaluate_wiring, BipartiteBox, BoxShape, Game, Wiring};
use tempfile::TempDir;

fn nlbox(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlbox"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        for p in [2, 3, 5] {
            BipartiteBox::modp_nlb(p).unwrap().write(f.path(&format!("m{p}.json"))).unwrap();
        }
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        nlbox(self.dir.path(), args)
    }
}

#[test]
fn gen_writes_reloadable_boxes() {
    let f = Fixture::new();
    let o = f.run(&["gen", "modp", "--p", "3", "--out", "g3.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(BipartiteBox::read(f.path("g3.json")).unwrap(), BipartiteBox::modp_nlb(3).unwrap());
    assert_eq!(code(&f.run(&["gen", "modp", "--p", "1", "--out", "g1.json"])), 2);
    assert_eq!(code(&f.run(&["gen", "modp", "--p", "6", "--out", "g6.json"])), 0);
    assert!(BipartiteBox::read(f.path("g6.json")).unwrap().is_no_signalling());
}

#[test]
fn check_verdicts() {
    let f = Fixture::new();
    assert_eq!(code(&f.run(&["check", "ns", "--box", "m5.json"])), 0);

    let o = f.run(&["check", "local", "--box", "m2.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("local bound 3/4"));

    let s = BoxShape::new(2, 2, 2, 2).unwrap();
    BipartiteBox::deterministic(s, &[0, 1], &[1, 1]).unwrap().write(f.path("v.json")).unwrap();
    let o = f.run(&["check", "local", "--box", "v.json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("weight 1/1"));

    std::fs::write(f.path("bad.json"), "{\"shape\": 3}").unwrap();
    assert_eq!(code(&f.run(&["check", "ns", "--box", "bad.json"])), 2);
    assert_eq!(code(&f.run(&["check", "ns", "--box", "missing.json"])), 2);
}

#[test]
fn signalling_box_is_negative() {
    let f = Fixture::new();
    let s = BoxShape::new(2, 2, 2, 2).unwrap();
    let one = "1/1".to_string();
    let zero = "0/1".to_string();
    // Alice's output copies Bob's input.
    let table: Vec<Vec<Vec<Vec<String>>>> = (0..2)
        .map(|_| {
            (0..2)
                .map(|y| {
                    (0..2)
                        .map(|a| (0..2).map(|b| if a == y && b == 0 { one.clone() } else { zero.clone() }).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let doc = serde_json::json!({ "shape": s, "table": table });
    std::fs::write(f.path("sig.json"), doc.to_string()).unwrap();
    let o = f.run(&["check", "ns", "--box", "sig.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("differs between other inputs"));
}

#[test]
fn search_verdicts() {
    let f = Fixture::new();
    let o = f.run(&["search", "--target", "m3.json", "--resource", "m2.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("search: exhausted"));

    let o = f.run(&["search", "--target", "m2.json", "--resource", "m2.json", "--out", "w.json"]);
    assert_eq!(code(&o), 0);
    let w = Wiring::read(f.path("w.json")).unwrap();
    assert_eq!(evaluate_wiring(&w).unwrap(), BipartiteBox::modp_nlb(2).unwrap());

    let o = f.run(&[
        "search", "--target", "m3.json", "--resource", "m2.json", "--resource", "m2.json", "--budget", "10",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn search_finds_mod6_from_mod2_and_mod3() {
    let f = Fixture::new();
    f.run(&["gen", "modp", "--p", "6", "--out", "m6.json"]);
    let o = f.run(&[
        "search", "--target", "m6.json", "--resource", "m2.json", "--resource", "m3.json", "--out", "w6.json",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = f.run(&["wire", "eval", "--wiring", "w6.json", "--out", "e6.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(BipartiteBox::read(f.path("e6.json")).unwrap(), BipartiteBox::modp_nlb(6).unwrap());
}

#[test]
fn obstruction_commands() {
    let f = Fixture::new();
    let o = f.run(&["witness-prime", "--resource", "m2.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("unsimulable prime: 3"));

    let o = f.run(&["obstruct", "--p", "3", "--n", "40"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("obstructed"));
    assert_eq!(code(&f.run(&["obstruct", "--p", "2", "--n", "1"])), 0);
    assert_eq!(code(&f.run(&["obstruct", "--p", "3"])), 2);
}

#[test]
fn compose_pipes_into_check() {
    let f = Fixture::new();
    let composed = f.run(&["compose", "crt", "--p", "2", "--q", "3", "--out", "-"]);
    assert_eq!(code(&composed), 0);
    let mut child = Command::new(env!("CARGO_BIN_EXE_nlbox"))
        .args(["check", "ns", "--box", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&composed.stdout).unwrap();
    assert_eq!(code(&child.wait_with_output().unwrap()), 0);
    assert_eq!(
        BipartiteBox::from_json(&stdout(&composed)).unwrap(),
        BipartiteBox::modp_nlb(6).unwrap()
    );
    assert_eq!(code(&f.run(&["compose", "crt", "--p", "2", "--q", "2", "--out", "x.json"])), 2);
}

#[test]
fn game_and_wiring_evaluation() {
    let f = Fixture::new();
    Game::chsh().write(f.path("chsh.json")).unwrap();
    let o = f.run(&["game", "--box", "m2.json", "--game", "chsh.json"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("game value: 1/1") && text.contains("local bound: 3/4"));

    let mut w = Wiring::identity(BipartiteBox::modp_nlb(2).unwrap());
    w.alice.output_map.entries.remove(&vec![1, 1]);
    w.write(f.path("broken.json")).unwrap();
    let o = f.run(&["wire", "eval", "--wiring", "broken.json", "--out", "b.json"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no row"));
    std::fs::write(f.path("junk.json"), "[]").unwrap();
    assert_eq!(code(&f.run(&["wire", "eval", "--wiring", "junk.json", "--out", "b.json"])), 2);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let f = Fixture::new();
    let args = |out: &'static str| {
        vec!["search", "--target", "m3.json", "--resource", "m2.json", "--report", out]
    };
    f.run(&args("r1.json"));
    f.run(&args("r1b.json"));
    let a = std::fs::read_to_string(f.path("r1.json")).unwrap();
    let b = std::fs::read_to_string(f.path("r1b.json")).unwrap();
    // Only the report path in the recorded invocation differs.
    assert_eq!(a.replace("r1.json", "X"), b.replace("r1b.json", "X"));
    f.run(&args("r1.json"));
    assert_eq!(std::fs::read_to_string(f.path("r1.json")).unwrap(), a);
    assert!(a.contains("\"version\": \"0.1.0\""));
}

#[test]
fn usage_errors_exit_2() {
    let f = Fixture::new();
    assert_eq!(code(&f.run(&[])), 2);
    assert_eq!(code(&f.run(&["gen", "modp", "--p", "x", "--out", "a"])), 2);
    assert_eq!(code(&f.run(&["frobnicate"])), 2);
}
