// SPDX-License-Identifier: Apache-2.0

mod common;

use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use pipeforge::corpus::sample_pipeline;
use pipeforge::graph::from_json;
use serde_json::Value;

fn pipeforge() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pipeforge"));
    cmd.current_dir(env!("CARGO_MANIFEST_DIR"))
        .env_remove("PIPEFORGE_LLM_URL")
        .env_remove("PIPEFORGE_LLM_BACKEND")
        .env_remove("PIPEFORGE_REGISTRY")
        .env_remove("PIPEFORGE_REPLAY_DIR")
        .env("NO_COLOR", "1");
    cmd
}

fn run(args: &[&str]) -> Output {
    pipeforge().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn generate_sunglasses_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = sample_pipeline("sunglasses_tryon").unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.json"));
        let o = run(&[
            "generate",
            "--instruction",
            s.instruction,
            "--tag",
            "multimodal",
            "--backend",
            "replay",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("graph: 6 nodes, 6 edges"));
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let graph = from_json(std::str::from_utf8(&files[0]).unwrap()).unwrap();
    assert_eq!(graph, common::golden("sunglasses_tryon"));
}

#[test]
fn generate_json_mode_is_json() {
    let s = sample_pipeline("news_summary").unwrap();
    let o = run(&["generate", "--instruction", s.instruction, "--tag", "language", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["graph"]["nodes"].as_array().unwrap().len(), 8);
}

#[test]
fn generate_usage_and_backend_errors() {
    let o = run(&["generate", "--instruction", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--tag"));

    let o = run(&["generate", "--instruction", "x", "--tag", "audio"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["generate", "--instruction", "x", "--tag", "visual", "--backend", "http"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("PIPEFORGE_LLM_URL"), "{}", stderr(&o));

    let o = run(&["generate", "--instruction", "never recorded", "--tag", "visual"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("selector"));
}

#[test]
fn compile_files() {
    let o = run(&["compile", "fixtures/pipelines/image_question.ipc"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(from_json(&stdout(&o)).unwrap(), common::golden("image_question"));

    let dir = tempfile::tempdir().unwrap();
    let comments = dir.path().join("c.ipc");
    std::fs::write(&comments, "// nothing here\n// still nothing\n").unwrap();
    let o = run(&["compile", comments.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(from_json(&stdout(&o)).unwrap().nodes.is_empty());
    assert!(stderr(&o).contains("warning"));

    let o = run(&["compile", "fixtures/pipelines/missing.ipc"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["compile", "--no-layout", "--json", "fixtures/pipelines/image_question.ipc"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["graph"]["nodes"][2]["position"]["x"], 720.0);
    assert_eq!(v["droppedLines"], Value::Array(vec![]));
}

#[test]
fn eval_pairs_and_corpus() {
    let sun = "fixtures/pipelines/sunglasses_tryon.json";
    let o = run(&["eval", "--generated", sun, "--target", sun, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count"], 0);

    let o = run(&["eval", "--corpus", "fixtures/corpus/synthetic.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("index,tag,instruction,count,from_scratch,ratio\n"));
    for tag in ["language", "visual", "multimodal", "all"] {
        assert!(text.lines().any(|l| l.starts_with(tag) && l.contains(" ± ")), "{tag}\n{text}");
    }

    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.json");
    let nodes: Vec<Value> = (1..=20)
        .map(|i| serde_json::json!({"id": format!("input_text_{i}"), "nodeSpecId": "input_text", "params": {}, "position": {"x": 0, "y": 0}}))
        .collect();
    std::fs::write(&big, serde_json::json!({ "nodes": nodes }).to_string()).unwrap();
    let o = run(&["eval", "--generated", big.to_str().unwrap(), "--target", sun]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("budget exceeded"));

    let o = run(&["eval", "--generated", sun]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn registry_override() {
    let dir = tempfile::tempdir().unwrap();
    let mut reg: Value = serde_json::from_str(&pipeforge::Registry::canonical().to_json()).unwrap();
    reg["nodes"].as_array_mut().unwrap().retain(|n| n["nodeSpecId"] != "pali");
    let path = dir.path().join("reg.json");
    std::fs::write(&path, reg.to_string()).unwrap();
    let o = run(&["--registry", path.to_str().unwrap(), "compile", "--json", "fixtures/pipelines/image_question.ipc"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["graph"]["nodes"].as_array().unwrap().len(), 2);
    assert_eq!(v["droppedLines"][0]["reason"], "unknown node type pali");

    std::fs::write(&path, "{\"version\": 1, \"nodes\": 5}").unwrap();
    let o = run(&["compile", "--registry", path.to_str().unwrap(), "fixtures/pipelines/image_question.ipc"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn serve_defaults_and_port_conflicts() {
    let o = run(&["serve", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = stdout(&o);
    assert!(help.contains("[default: 127.0.0.1]") && help.contains("[default: 8080]"), "{help}");

    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = run(&["serve", "--port", &port]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("binding"));
}

#[test]
fn serve_drains_on_sigint() {
    let mut child = pipeforge()
        .args(["serve", "--port", "0"])
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let first = lines.next().unwrap().unwrap();
    let addr = first.strip_prefix("listening on ").expect(&first).to_string();
    let body = reqwest::blocking::get(format!("{addr}/api/nodes")).unwrap().text().unwrap();
    assert!(body.contains("pali"));

    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        if let Some(status) = child.try_wait().unwrap() {
            assert_eq!(status.code(), Some(0));
            break;
        }
        assert!(Instant::now() < deadline, "server did not exit");
        std::thread::sleep(Duration::from_millis(50));
    }
}
