use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subtower"))
        .args(args)
        .env_remove("SUBTOWER_DEFAULT_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json report")
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("subtower-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn prove_exit_codes() {
    assert_eq!(run(&["prove", "--system", "BCK", "|- p -o (q -o p)"]).status.code(), Some(0));
    assert_eq!(run(&["prove", "--system", "BCI", "|- p -o (q -o p)"]).status.code(), Some(1));
    assert_eq!(run(&["prove", "--system", "ELLW", "|- ?p^, p"]).status.code(), Some(1));
    assert_eq!(run(&["prove", "--system", "LLW", "|- ?p^, p"]).status.code(), Some(0));
    assert_eq!(run(&["prove", "--system", "NOPE", "|- p"]).status.code(), Some(4));
    assert_eq!(run(&["prove", "--system", "BCK", "|- p -o"]).status.code(), Some(4));
}

#[test]
fn unknown_with_a_tiny_budget() {
    let o = run(&["prove", "--system", "ILLW", "--budget-nodes", "1", "!p |- p * p * p"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_report_shape() {
    let o = run(&["prove", "--system", "LLW", "--json", "|- ?p^, p"]);
    let v = json(&o);
    assert_eq!(v["verdict"], "Proved");
    assert!(v["witness"].is_object());
    assert!(v["statistics"]["nodes"].is_u64());
    assert_eq!(v["budget"]["depth"], 32);
    let r = run(&["prove", "--system", "ELLW", "--json", "|- ?p^, p"]);
    assert!(json(&r)["witness"].is_null());
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let strip = |mut v: Value| {
        v["statistics"]["wall_ms"] = Value::Null;
        v
    };
    let a = strip(json(&run(&["prove", "--system", "ILZW", "--json", "!p, q |- p * q"])));
    let b = strip(json(&run(&["prove", "--system", "ILZW", "--json", "!p, q |- p * q"])));
    assert_eq!(a, b);
}

#[test]
fn environment_budget() {
    let o = Command::new(env!("CARGO_BIN_EXE_subtower"))
        .args(["prove", "--system", "BCK", "--json", "p |- p"])
        .env("SUBTOWER_DEFAULT_BUDGET", "depth=7,cap=3")
        .output()
        .unwrap();
    let v = json(&o);
    assert_eq!(v["budget"]["depth"], 7);
    assert_eq!(v["budget"]["counter_cap"], 3);
    // flags win over the environment
    let o = Command::new(env!("CARGO_BIN_EXE_subtower"))
        .args(["prove", "--system", "BCK", "--json", "--budget-depth", "9", "p |- p"])
        .env("SUBTOWER_DEFAULT_BUDGET", "depth=7")
        .output()
        .unwrap();
    assert_eq!(json(&o)["budget"]["depth"], 9);
}

#[test]
fn deduce_routes() {
    let o = run(&["deduce", "--system", "BCK", "--axiom", "p", "--route", "both", "|- q -o p"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("direct: Proved, reduction: Proved"));
    let plain = run(&["deduce", "--system", "BCK", "|- p -o p"]);
    assert_eq!(plain.status.code(), Some(0));
    let file = tmp("axioms.txt");
    fs::write(&file, "# axioms\np -o q\np\n").unwrap();
    let o = run(&["deduce", "--system", "FLew", "--axioms", file.to_str().unwrap(), "--route", "both", "|- q"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn translations() {
    let t = |mode: &str, input: &str| stdout(&run(&["translate", mode, input])).trim().to_string();
    assert_eq!(t("underline", "p -o q"), "p^ | q");
    assert_eq!(t("erase", "$p"), "p");
    assert_eq!(t("erase", "!($p -o q)"), "!(p -o q)");
    assert_eq!(t("negbot", "bot"), "1");
    let negx = t("negx", "|- p*q");
    assert!(negx.ends_with("|- a"), "{negx}");
}

#[test]
fn encode_and_reach() {
    let o = run(&["encode", "ilzwprime", "p -o p"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("dim "));
    let out = tmp("m.abvass");
    let o = run(&["encode", "iezw", "!p -o p", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let legend: Value = serde_json::from_str(&fs::read_to_string(out.with_extension("legend.json")).unwrap()).unwrap();
    assert!(legend.as_object().is_some_and(|m| !m.is_empty()));

    let machine = tmp("b.abvass");
    fs::write(&machine, "dim 1\nleaf a\nunary r -> b : +e1\nunary b -> a : -e1\n").unwrap();
    let m = machine.to_str().unwrap();
    let o = run(&["reach", m, "r", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["witness"].is_object());
    assert_eq!(run(&["reach", m, "a:[1]"]).status.code(), Some(1));
    assert_eq!(run(&["reach", m, "a:[1]", "--lossy"]).status.code(), Some(0));
    assert_eq!(run(&["reach", m, "zz"]).status.code(), Some(4));
    let o = run(&["encode", "bvass2llw", m, "--root", "r"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o).trim().to_string();
    assert!(s.starts_with("|- "), "{s}");
    assert_eq!(run(&["prove", "--system", "LLW", &s]).status.code(), Some(0));
}

#[test]
fn crosscheck_suites() {
    let o = run(&["crosscheck", "illtoll5", "--size", "6", "--count", "15", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("disagreements  0"));
    let o = run(&["crosscheck", "prenextrans2", "--size", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("instances      0"));
    assert_eq!(run(&["crosscheck", "no-such-suite"]).status.code(), Some(4));
}
