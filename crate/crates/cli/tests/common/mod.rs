#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use duplex_core::manifest::parse_conversation_line;
use duplex_core::{Conversation, Seconds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_duplexkit"))
}

/// Runs the binary with `args` inside `dir`.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Whole-millisecond duration as a JSON number.
pub fn secs_json(ms: i64) -> Value {
    let text = format!("{}.{:03}", ms / 1000, ms % 1000);
    serde_json::from_str(&text).unwrap()
}

/// `n` QA pairs with durations in whole milliseconds.
pub fn qa_pairs(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..n {
        let user_ms = rng.random_range(300..8000);
        let agent_ms = rng.random_range(300..12000);
        let line = json!({
            "id": format!("qa{i:05}"),
            "user": {"duration_s": secs_json(user_ms), "text": format!("question {i}")},
            "agent": {"duration_s": secs_json(agent_ms), "text": format!("answer {i}")},
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

pub fn read_conversations(path: &Path) -> Vec<Conversation<Seconds>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| parse_conversation_line(l).unwrap())
        .collect()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Turn list `[(role, start_ms, end_ms)]` as a conversation JSONL line.
pub fn conversation_line(id: &str, turns: &[(&str, i64, i64)]) -> String {
    let turns: Vec<Value> = turns
        .iter()
        .map(|&(role, s, e)| json!({"role": role, "start_s": secs_json(s), "end_s": secs_json(e), "text": ""}))
        .collect();
    json!({"id": id, "turns": turns}).to_string()
}

pub fn segment_line(id: &str, user: &[(f64, f64)], agent: &[(f64, f64)]) -> String {
    let seg = |v: &[(f64, f64)]| v.iter().map(|&(s, e)| json!([s, e])).collect::<Vec<_>>();
    json!({"id": id, "user": seg(user), "agent": seg(agent)}).to_string()
}

pub const POLICY: &str = r#"{
  "response_delay": {"uniform": [0.2, 0.9]},
  "stop_latency": {"uniform": [0.05, 2.5]},
  "false_alarm_rate_hz": 0.4,
  "utterance_duration": {"uniform": [1.0, 6.0]}
}"#;

pub const SCRIPT: &str = r#"{
  "intents": [
    {"speak_duration": 1.6, "patience": 1.2, "post_turn_silence": 0.4},
    {"speak_duration": 2.4, "post_turn_silence": 0.8},
    {"speak_duration": 0.9, "patience": 0.5, "post_turn_silence": 0.3}
  ]
}"#;
