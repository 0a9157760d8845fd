use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

fn payset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_payset")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_and_evaluate() {
    let running = model("running.json");
    let o = payset(&["validate", running.to_str().unwrap()]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(0), "ok"));

    let commute = model("commute.json");
    let o = payset(&["evaluate", commute.to_str().unwrap(), "--strategy", "always:train"]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(0), "(25)"));
}

#[test]
fn achieve_exit_codes_and_json() {
    let running = model("running.json");
    let path = running.to_str().unwrap();
    let o = payset(&["achieve", path, "--target", "3,1", "--skeleton", "counter:6", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cert["holds"], true);
    assert_eq!(cert["realized"], serde_json::json!(["3", "1"]));

    let o = payset(&["achieve", path, "--target", "6,3", "--skeleton", "counter:6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn frontier_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("frontier.csv");
    let triangle = model("triangle.json");
    let o = payset(&["frontier", triangle.to_str().unwrap(), "--skeleton", "memoryless", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        "index,vector,extreme,pareto\n0,\"1,0\",true,true\n1,\"0,1\",true,true\n2,\"3/4,3/4\",true,true\n"
    );
}

#[test]
fn simulate_is_seed_deterministic() {
    let commute = model("commute.json");
    let args = ["simulate", commute.to_str().unwrap(), "--strategy", "always:train", "--samples", "500", "--seed", "9"];
    let a = payset(&args);
    let b = payset(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("strategy,dimension,mean,stderr,bias_bound,censored_fraction,seed\n"));
}

#[test]
fn classify_and_probe_coin() {
    let coin = model("coin.json");
    let path = coin.to_str().unwrap();
    let o = payset(&["classify", path]);
    assert!(stdout(&o).contains("UniversallyUnambiguouslyIntegrableOnly"));
    let o = payset(&["probe", path, "--family", "switch:a:b", "--horizon", "4"]);
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("+inf")).count(), 4);
    assert!(text.trim_end().ends_with("limit\t(2)"));
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(payset(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(payset(&["validate", "/nonexistent/model.json"]).status.code(), Some(3));
}

#[test]
fn mixture_file_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mixture.json");
    let running = model("running.json");
    let path = running.to_str().unwrap();
    let o = payset(&["achieve", path, "--state", "s0", "--target", "3,1", "--skeleton", "counter:6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let doc = payset::fixtures::running();
    let m = &doc.model;
    let f = payset::payoff::MultiPayoff::resolve(m, &doc.payoffs).unwrap();
    let mu = payset::strategy::load_mixture(m, &std::fs::read_to_string(&out).unwrap()).unwrap();
    let exact = payset::evaluate::mixed_expected_payoff(m, &mu, 0, &f).unwrap();
    let o = payset(&["evaluate", path, "--strategy", out.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), exact.to_string());
    assert_eq!(exact.to_string(), "(3, 1)");
}
