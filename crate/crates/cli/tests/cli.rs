mod common;

use std::fs;

use common::*;
use duplex_core::scalar::millis;
use duplex_core::{deserialize_matrix, serialize_matrix, SpeakerRole};
use serde_json::{json, Value};
use tempfile::tempdir;

#[test]
fn duplexify_inserts_the_pre_agent_gap() {
    let dir = tempdir().unwrap();
    write(dir.path(), "qa.jsonl", &qa_pairs(100, 1));
    run_ok(
        dir.path(),
        &["duplexify", "-i", "qa.jsonl", "-o", "out.jsonl"],
    );
    let convs = read_conversations(&dir.path().join("out.jsonl"));
    assert_eq!(convs.len(), 100);
    for c in &convs {
        let t = c.turns();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].start() - t[0].end(), millis(640));
    }
}

#[test]
fn duplexify_reports_the_malformed_line() {
    let dir = tempdir().unwrap();
    let mut text = qa_pairs(8, 2);
    let mut lines: Vec<&str> = text.lines().collect();
    lines[4] = "{\"id\": \"broken\"";
    text = lines.join("\n");
    write(dir.path(), "qa.jsonl", &text);
    let out = run(
        dir.path(),
        &[
            "--errors-json",
            "err.json",
            "duplexify",
            "-i",
            "qa.jsonl",
            "-o",
            "out.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 5"), "{}", stderr(&out));
    let summary = read_json(&dir.path().join("err.json"));
    assert_eq!(summary["n_errors"], 1);
    assert_eq!(summary["errors"][0]["line"], 5);
    assert_eq!(read_conversations(&dir.path().join("out.jsonl")).len(), 7);
}

#[test]
fn duplexify_filters_long_turns() {
    let dir = tempdir().unwrap();
    let text = [
        json!({"id": "ok", "user": {"duration_s": 2.0}, "agent": {"duration_s": 3.0}}),
        json!({"id": "long", "user": {"duration_s": 2.0}, "agent": {"duration_s": 31.0}}),
    ]
    .map(|v| v.to_string())
    .join("\n");
    write(dir.path(), "qa.jsonl", &text);
    let out = run(
        dir.path(),
        &[
            "--errors-json",
            "err.json",
            "duplexify",
            "-i",
            "qa.jsonl",
            "-o",
            "out.jsonl",
            "--max-turn-duration",
            "30",
        ],
    );
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("err.json"));
    assert_eq!(summary["n_filtered"], 1);
    assert_eq!(summary["filtered"][0]["id"], "long");
    let convs = read_conversations(&dir.path().join("out.jsonl"));
    assert_eq!(convs.iter().map(|c| c.id()).collect::<Vec<_>>(), ["ok"]);
}

#[test]
fn multiturn_output_is_seeded() {
    let dir = tempdir().unwrap();
    write(dir.path(), "qa.jsonl", &qa_pairs(50, 3));
    let args = |out: &'static str, seed: &'static str| {
        [
            "--seed",
            seed,
            "duplexify",
            "-i",
            "qa.jsonl",
            "-o",
            out,
            "--multiturn",
            "2",
        ]
    };
    run_ok(dir.path(), &args("a.jsonl", "7"));
    run_ok(dir.path(), &args("b.jsonl", "7"));
    run_ok(dir.path(), &args("c.jsonl", "8"));
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
    let convs = read_conversations(&dir.path().join("a.jsonl"));
    assert_eq!(convs.len(), 25);
    assert!(convs.iter().all(|c| c.turns().len() == 4));
}

#[test]
fn barge_in_keeps_the_residual() {
    let dir = tempdir().unwrap();
    write(dir.path(), "qa.jsonl", &qa_pairs(60, 4));
    run_ok(
        dir.path(),
        &[
            "--seed",
            "1",
            "duplexify",
            "-i",
            "qa.jsonl",
            "-o",
            "out.jsonl",
            "--multiturn",
            "3",
            "--barge-in",
            "1",
        ],
    );
    let convs = read_conversations(&dir.path().join("out.jsonl"));
    let mut n_cut = 0;
    for c in &convs {
        let t = c.turns();
        for (i, a) in t
            .iter()
            .enumerate()
            .filter(|(_, t)| t.role() == SpeakerRole::Agent)
        {
            for u in &t[i + 1..] {
                if u.role() == SpeakerRole::User && u.start() < a.end() {
                    assert!(a.end() - u.start() <= millis(640));
                    n_cut += 1;
                }
            }
        }
    }
    assert_eq!(n_cut, convs.len());
}

#[test]
fn impatient_factor_bounds() {
    let dir = tempdir().unwrap();
    let line = conversation_line(
        "c",
        &[
            ("user", 0, 1000),
            ("agent", 1640, 3000),
            ("user", 4000, 5000),
            ("agent", 5640, 6000),
        ],
    );
    write(dir.path(), "in.jsonl", &line);
    let out = run(
        dir.path(),
        &[
            "impatient",
            "-i",
            "in.jsonl",
            "-o",
            "out.jsonl",
            "--factor",
            "0",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out.jsonl").exists());

    run_ok(
        dir.path(),
        &[
            "impatient",
            "-i",
            "in.jsonl",
            "-o",
            "same.jsonl",
            "--factor",
            "1.0",
        ],
    );
    let before = read_conversations(&dir.path().join("in.jsonl"));
    let after = read_conversations(&dir.path().join("same.jsonl"));
    assert_eq!(before[0].turns(), after[0].turns());

    run_ok(
        dir.path(),
        &["impatient", "-i", "in.jsonl", "-o", "half.jsonl"],
    );
    let half = read_conversations(&dir.path().join("half.jsonl"));
    let users: Vec<_> = half[0]
        .turns_of(SpeakerRole::User)
        .map(|(_, t)| t.clone())
        .collect();
    assert_eq!(users[1].start() - users[0].end(), millis(1500));
}

#[test]
fn impatient_needs_two_user_turns() {
    let dir = tempdir().unwrap();
    write(
        dir.path(),
        "in.jsonl",
        &conversation_line("solo", &[("user", 0, 1000), ("agent", 1640, 2000)]),
    );
    let out = run(
        dir.path(),
        &[
            "--errors-json",
            "e.json",
            "impatient",
            "-i",
            "in.jsonl",
            "-o",
            "out.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        read_json(&dir.path().join("e.json"))["errors"][0]["id"],
        "solo"
    );
}

fn token_file(rows: usize, text: usize) -> String {
    let codes: Vec<Vec<u32>> = (0..rows)
        .map(|r| (0..4).map(|c| ((r * 7 + c) % 4000) as u32).collect())
        .collect();
    json!({"turns": [{"turn_index": 1, "text_tokens": (0..text as u32).collect::<Vec<_>>(), "speech_codes": codes}]})
        .to_string()
}

#[test]
fn align_writes_round_trippable_matrices() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    fs::create_dir(d.join("tok")).unwrap();
    // agent turn 1.84..3.84 s covers frames 23..48, so F = 25
    let mut manifest = conversation_line("ok", &[("user", 0, 1200), ("agent", 1840, 3840)]);
    manifest.push('\n');
    manifest.push_str(&conversation_line(
        "overflow",
        &[("user", 0, 1200), ("agent", 1840, 3840)],
    ));
    write(d, "in.jsonl", &manifest);
    write(d, "tok/ok.json", &token_file(25, 10));
    write(d, "tok/overflow.json", &token_file(25, 40));
    let out = run(
        d,
        &[
            "--errors-json",
            "e.json",
            "align",
            "-i",
            "in.jsonl",
            "--tokens-dir",
            "tok",
            "--output-dir",
            "out",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let summary = read_json(&d.join("e.json"));
    assert_eq!(summary["n_errors"], 1);
    assert_eq!(summary["errors"][0]["id"], "overflow");
    assert!(!d.join("out/overflow.dupx").exists());

    let bytes = fs::read(d.join("out/ok.dupx")).unwrap();
    let m = deserialize_matrix(&bytes).unwrap();
    assert_eq!(serialize_matrix(&m).unwrap(), bytes);
    assert_eq!(
        m.grid().frames_per_second(),
        duplex_core::Seconds::new(25, 2)
    );
    assert_eq!(m.loss_weights(), &[3.0, 1.0, 1.0, 1.0, 1.0]);
    let side = read_json(&d.join("out/ok.json"));
    assert_eq!(side["fps"], "25/2");
    assert_eq!(side["n_frames"], m.n_frames());
    let p = &side["placements"][0];
    assert_eq!(p["start_frame"], 23);
    assert_eq!(p["speech_bos_frame"], 24);
}

#[test]
fn align_rejects_ids_that_are_not_file_names() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    fs::create_dir(d.join("tok")).unwrap();
    write(
        d,
        "in.jsonl",
        &conversation_line("../up", &[("user", 0, 1200), ("agent", 1840, 3840)]),
    );
    let out = run(
        d,
        &[
            "align",
            "-i",
            "in.jsonl",
            "--tokens-dir",
            "tok",
            "--output-dir",
            "out",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("file name"));
}

fn validate_report(report: &Value) {
    let schema: Value = serde_json::from_str(include_str!("../schema/report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(report)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn eval_marks_missing_responses() {
    let dir = tempdir().unwrap();
    let text = [
        segment_line("silent", &[(0.0, 1.0), (2.0, 3.0)], &[]),
        segment_line("answered", &[(0.0, 1.0)], &[(1.64, 3.0)]),
    ]
    .join("\n");
    write(dir.path(), "seg.jsonl", &text);
    run_ok(
        dir.path(),
        &[
            "eval",
            "-i",
            "seg.jsonl",
            "-o",
            "r.json",
            "--events-csv",
            "ev.csv",
        ],
    );
    let r = read_json(&dir.path().join("r.json"));
    validate_report(&r);
    let fr = &r["evidence"]["first_responses"];
    assert_eq!(fr[0]["outcome"], "no_response");
    assert_eq!(fr[0]["display"], "no response");
    assert_eq!(fr[1]["latency_s"], 0.64);
    assert_eq!(r["first_response"]["n_no_response"], 1);
    let csv = fs::read_to_string(dir.path().join("ev.csv")).unwrap();
    assert!(csv.contains("silent,first_response,,,no_response"), "{csv}");
}

#[test]
fn eval_of_a_simulated_corpus_agrees_with_the_oracle() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    write(d, "policy.json", POLICY);
    write(d, "script.json", SCRIPT);
    run_ok(
        d,
        &[
            "--seed",
            "5",
            "simulate",
            "--policy",
            "policy.json",
            "--script",
            "script.json",
            "-n",
            "40",
            "-o",
            "sim.jsonl",
            "--log",
            "log.jsonl",
        ],
    );
    run_ok(
        d,
        &[
            "eval",
            "-i",
            "sim.jsonl",
            "-o",
            "r.json",
            "--oracle",
            "log.jsonl",
        ],
    );
    let r = read_json(&d.join("r.json"));
    validate_report(&r);
    assert_eq!(r["oracle"]["agrees"], true);
    assert_eq!(r["oracle"]["n_logs"], 40);
    assert_eq!(r["oracle"]["n_successes"], r["barge_in"]["n_successes"]);
}

#[test]
fn eval_flags_an_oracle_mismatch() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    write(d, "policy.json", POLICY);
    write(d, "script.json", SCRIPT);
    run_ok(
        d,
        &[
            "simulate",
            "--policy",
            "policy.json",
            "--script",
            "script.json",
            "-n",
            "5",
            "-o",
            "sim.jsonl",
            "--log",
            "log.jsonl",
        ],
    );
    // drop the agent from the first conversation
    let text = fs::read_to_string(d.join("sim.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut first: Value = serde_json::from_str(&lines[0]).unwrap();
    let turns = first["turns"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|t| t["role"] == "user")
        .cloned()
        .collect();
    first["turns"] = Value::Array(turns);
    lines[0] = first.to_string();
    write(d, "sim.jsonl", &lines.join("\n"));
    let out = run(
        d,
        &[
            "eval",
            "-i",
            "sim.jsonl",
            "-o",
            "r.json",
            "--oracle",
            "log.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(read_json(&d.join("r.json"))["oracle"]["agrees"], false);
}

#[test]
fn simulate_emits_one_log_line_per_conversation() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    write(d, "policy.json", POLICY);
    write(d, "script.json", SCRIPT);
    let args = |o: &'static str, l: &'static str| {
        [
            "--seed",
            "3",
            "simulate",
            "--policy",
            "policy.json",
            "--script",
            "script.json",
            "-n",
            "10",
            "-o",
            o,
            "--log",
            l,
        ]
    };
    run_ok(d, &args("a.jsonl", "a.log"));
    run_ok(d, &args("b.jsonl", "b.log"));
    assert_eq!(
        fs::read_to_string(d.join("a.jsonl"))
            .unwrap()
            .lines()
            .count(),
        10
    );
    assert_eq!(
        fs::read_to_string(d.join("a.log")).unwrap().lines().count(),
        10
    );
    assert_eq!(
        fs::read(d.join("a.jsonl")).unwrap(),
        fs::read(d.join("b.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read(d.join("a.log")).unwrap(),
        fs::read(d.join("b.log")).unwrap()
    );
}

#[test]
fn simulate_rejects_an_invalid_policy() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    write(d, "policy.json", &POLICY.replace("0.4", "-1"));
    write(d, "script.json", SCRIPT);
    let out = run(
        d,
        &[
            "--errors-json",
            "e.json",
            "simulate",
            "--policy",
            "policy.json",
            "--script",
            "script.json",
            "-n",
            "3",
            "-o",
            "s.jsonl",
            "--log",
            "l.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(read_json(&d.join("e.json"))["fatal"].is_string());
    assert!(!d.join("s.jsonl").exists());
}

#[test]
fn inspect_marks_one_cell_per_frame() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let text = [
        conversation_line("a", &[("user", 0, 3200), ("agent", 3840, 5000)]),
        conversation_line(
            "b",
            &[
                ("user", 0, 1000),
                ("agent", 1640, 4000),
                ("user", 2400, 3000),
            ],
        ),
    ]
    .join("\n");
    write(d, "in.jsonl", &text);
    let out = run_ok(d, &["inspect", "-i", "in.jsonl", "--id", "a"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row = |name: &str| {
        text.lines()
            .find(|l| l.starts_with(name))
            .unwrap()
            .to_string()
    };
    assert_eq!(row("user").matches('#').count(), 40);

    run_ok(
        d,
        &["inspect", "-i", "in.jsonl", "--id", "b", "-o", "b.txt"],
    );
    let text = fs::read_to_string(d.join("b.txt")).unwrap();
    let cells = |name: &str| -> Vec<char> {
        text.lines().find(|l| l.starts_with(name)).unwrap()[6..]
            .chars()
            .collect()
    };
    let (user, agent) = (cells("user"), cells("agent"));
    assert!(user.iter().zip(&agent).any(|(u, a)| *u == '#' && *a == '#'));

    assert_ne!(
        run(d, &["inspect", "-i", "in.jsonl", "--id", ""])
            .status
            .code(),
        Some(0)
    );
    assert_ne!(
        run(d, &["inspect", "-i", "in.jsonl", "--id", "zzz"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    write(d, "cfg.json", r#"{"builder": {"pre_agent_gap_s": 0.4}}"#);
    write(d, "qa.jsonl", &qa_pairs(5, 9));
    run_ok(
        d,
        &[
            "--config",
            "cfg.json",
            "duplexify",
            "-i",
            "qa.jsonl",
            "-o",
            "out.jsonl",
        ],
    );
    for c in read_conversations(&d.join("out.jsonl")) {
        assert_eq!(c.turns()[1].start() - c.turns()[0].end(), millis(400));
    }
    write(d, "bad.json", r#"{"builder": {"nope": 1}}"#);
    let out = run(
        d,
        &[
            "--config",
            "bad.json",
            "duplexify",
            "-i",
            "qa.jsonl",
            "-o",
            "x.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}
