use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;
use worldsmith_core::corpus::Task;
use worldsmith_core::ranking::load_model;

fn worldsmith(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_worldsmith"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = worldsmith(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| worldsmith(tmp.path(), args).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["build", "--help"]), Some(0));
    assert_eq!(code(&[]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["eval"]), Some(1));
    assert_eq!(code(&["eval", "--scorer", "bert"]), Some(1));
    assert_eq!(code(&["build", "--count", "many"]), Some(1));
    assert_eq!(code(&["--corpus", "missing.json", "build"]), Some(2));
    assert_eq!(code(&["eval", "--scorer", "embedding:missing.bin"]), Some(2));
    assert_eq!(
        code(&["build", "--width", "3", "--height", "3", "--max-locations", "50"]),
        Some(2)
    );

    std::fs::write(tmp.path().join("bad.json"), "{ not json").unwrap();
    let out = worldsmith(tmp.path(), &["--corpus", "bad.json", "build"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn train_single_task_and_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(
        tmp.path(),
        &[
            "train", "--task", "location", "--epochs", "4", "--dim", "16", "--out", "m",
        ],
    );
    assert!(stdout.contains("location"));
    let model = load_model(&tmp.path().join("m/model.bin")).unwrap();
    assert_eq!(model.meta().tasks, vec![Task::Location]);
    assert_eq!(model.meta().epochs_run, 4);

    let loss = std::fs::read_to_string(tmp.path().join("m/loss.csv")).unwrap();
    let rows: Vec<&str> = loss.lines().collect();
    assert_eq!(rows[0], "epoch,mean_loss,examples");
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let loss: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(loss.is_finite() && loss >= 0.0);
    }

    let out = worldsmith(
        tmp.path(),
        &["eval", "--scorer", "embedding:m/model.bin", "--task", "character"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model/task mismatch"));
    ok(
        tmp.path(),
        &[
            "eval",
            "--scorer",
            "embedding:m/model.bin",
            "--task",
            "location",
            "--out",
            "m",
        ],
    );
}

#[test]
fn eval_writes_reports_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(
        tmp.path(),
        &[
            "eval",
            "--scorer",
            "random",
            "--scorer",
            "ir",
            "--candidates",
            "12",
            "--feature",
            "both",
        ],
    );
    assert!(stdout.contains("K = 12"));
    let dir = tmp.path().join("out/eval");
    let summary = json(&dir.join("summary.json"));
    let rows = summary.as_array().unwrap();
    assert_eq!(rows.len(), 2 * 2 * 4);
    for r in rows {
        let h = r["hits_at_1"].as_f64().unwrap();
        assert!((0.0..=100.0).contains(&h));
        assert_eq!(r["num_candidates"], 12);
    }
    let report = json(&dir.join("ir_location_name_and_description.json"));
    assert_eq!(
        report["records"].as_array().unwrap().len() as u64,
        report["examples"].as_u64().unwrap()
    );
    let csv = std::fs::read_to_string(dir.join("ir_location_name_and_description.csv")).unwrap();
    assert_eq!(csv.lines().count() as u64, report["examples"].as_u64().unwrap() + 1);

    // Same seed, same numbers.
    let again = tempfile::tempdir().unwrap();
    ok(
        again.path(),
        &["eval", "--scorer", "random", "--scorer", "ir", "--candidates", "12"],
    );
    assert_eq!(
        std::fs::read(dir.join("summary.json")).unwrap(),
        std::fs::read(again.path().join("out/eval/summary.json")).unwrap()
    );
}

#[test]
fn build_is_reproducible_and_configurable() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"grid_width": 5, "grid_height": 5, "max_locations": 12}"#,
    )
    .unwrap();
    let args = ["build", "--config", "cfg.json", "--filler-prob", "0.3", "--seed", "5"];
    ok(tmp.path(), &[&args[..], &["--out", "a"]].concat());
    ok(tmp.path(), &[&args[..], &["--out", "b"]].concat());
    let a = std::fs::read(tmp.path().join("a/world.json")).unwrap();
    assert_eq!(a, std::fs::read(tmp.path().join("b/world.json")).unwrap());
    let world: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(world["config"]["grid_width"], 5);
    assert_eq!(world["config"]["filler_prob"], 0.3);
    assert_eq!(world["config"]["seed"], 5);

    ok(tmp.path(), &["build", "--seed", "5", "--out", "c"]);
    assert_ne!(a, std::fs::read(tmp.path().join("c/world.json")).unwrap());
}

#[test]
fn build_batch_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["build", "--count", "6", "--scorer", "random"]);
    let worlds = tmp.path().join("out/worlds");
    assert_eq!(std::fs::read_dir(&worlds).unwrap().count(), 6);
    assert!(worlds.join("world_00005.json").exists());

    ok(tmp.path(), &["analyze"]);
    let analysis = tmp.path().join("out/analysis");
    let report = json(&analysis.join("diversity.json"));
    assert_eq!(report["worlds"], 6);
    let coverage = std::fs::read_to_string(analysis.join("coverage.csv")).unwrap();
    assert_eq!(coverage.lines().count(), 7);
    for f in ["location_frequency.csv", "histograms.csv"] {
        assert!(analysis.join(f).exists(), "{f}");
    }

    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(
        worldsmith(tmp.path(), &["analyze", "--worlds", "empty"]).status.code(),
        Some(2)
    );
}

#[test]
fn generate_writes_a_card() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(tmp.path(), &["generate", "--name", "wooden sword", "--kind", "object"]);
    let card: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(card["name"], "wooden sword");
    assert!(card["affordances"].as_array().unwrap().iter().any(|a| a == "wieldable"));
    assert!(tmp.path().join("out/generated/object_wooden_sword.json").exists());
}

struct Server {
    child: Child,
    addr: String,
}

impl Server {
    fn start(dir: &Path, extra: &[&str]) -> Server {
        let mut child = Command::new(env!("CARGO_BIN_EXE_worldsmith"))
            .args(["serve", "--port", "0", "--data-dir", "sessions"])
            .args(extra)
            .current_dir(dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.as_mut().unwrap())
            .read_line(&mut line)
            .unwrap();
        let addr = line
            .trim()
            .strip_prefix("listening on http://")
            .expect(&line)
            .to_string();
        Server { child, addr }
    }

    fn request(&self, method: &str, path: &str, body: &str) -> (u16, Value) {
        let mut s = TcpStream::connect(&self.addr).unwrap();
        write!(
            s,
            "{method} {path} HTTP/1.1\r\nHost: {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            self.addr,
            body.len()
        )
        .unwrap();
        let mut raw = String::new();
        s.read_to_string(&mut raw).unwrap();
        let (head, payload) = raw.split_once("\r\n\r\n").unwrap();
        let status = head.split(' ').nth(1).unwrap().parse().unwrap();
        (status, serde_json::from_str(payload).unwrap_or(Value::Null))
    }

    fn stop(mut self) -> String {
        let pid = self.child.id().to_string();
        assert!(Command::new("kill").args(["-TERM", &pid]).status().unwrap().success());
        let status = self.child.wait().unwrap();
        assert!(status.success(), "{status:?}");
        let mut rest = String::new();
        self.child.stdout.take().unwrap().read_to_string(&mut rest).unwrap();
        rest
    }
}

#[test]
fn serve_answers_and_flushes_on_sigterm() {
    let tmp = tempfile::tempdir().unwrap();
    let server = Server::start(tmp.path(), &[]);
    let (status, stats) = server.request("GET", "/v1/corpus/stats", "");
    assert_eq!(status, 200);
    assert!(stats["locations"].as_u64().unwrap() > 0);
    let (status, session) = server.request("POST", "/v1/sessions", r#"{"seed": 3}"#);
    assert_eq!(status, 201);
    let id = session["id"].as_str().unwrap().to_string();
    let (status, list) = server.request(
        "GET",
        &format!("/v1/sessions/{id}/suggest?cell=1&kind=location&k=3"),
        "",
    );
    assert_eq!(status, 200);
    assert_eq!(list.as_array().unwrap().len(), 3);
    let (status, err) = server.request("GET", "/v1/nowhere", "");
    assert_eq!((status, err["error"]["code"].as_str()), (404, Some("not_found")));

    let rest = server.stop();
    assert!(rest.contains("session logs flushed"));
    let log = std::fs::read_to_string(tmp.path().join(format!("sessions/{id}.events.jsonl"))).unwrap();
    assert!(log.lines().next().unwrap().contains("\"created\""));

    // A restarted server sees the same session.
    let server = Server::start(tmp.path(), &[]);
    let (status, again) = server.request("GET", &format!("/v1/sessions/{id}"), "");
    assert_eq!(status, 200);
    assert_eq!(again["grid"], session["grid"]);
    server.stop();
}

#[test]
fn serve_without_suggestions() {
    let tmp = tempfile::tempdir().unwrap();
    let server = Server::start(tmp.path(), &["--no-suggestions"]);
    let (_, session) = server.request("POST", "/v1/sessions", "");
    let id = session["id"].as_str().unwrap();
    let (status, list) = server.request("GET", &format!("/v1/sessions/{id}/suggest?cell=1&kind=location"), "");
    assert_eq!(status, 200);
    assert_eq!(list, Value::Array(vec![]));
    server.stop();
}
