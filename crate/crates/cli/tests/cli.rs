mod support;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Stdio;

use detext_core::RangeReport;
use support::{bin, human_sentences, p, run, run_ok};

/// build-corpus + mock rephrase + train in `dir`.
fn small_pipeline(dir: &Path) {
    let humans = dir.join("human.txt");
    fs::write(&humans, human_sentences(190, 1).join("\n")).unwrap();
    run_ok(&["build-corpus", "--input", &format!("synthetic={}", p(&humans)), "--out-dir", p(&dir.join("c"))]);
    run_ok(&["rephrase", "--in-dir", p(&dir.join("c")), "--out-dir", p(&dir.join("pc")), "--backend", "mock"]);
    run_ok(&["train", "--train", p(&dir.join("pc/train.jsonl")), "--model", p(&dir.join("m"))]);
}

#[test]
fn help_lists_a_default_for_every_optional_flag() {
    for sub in ["build-corpus", "rephrase", "train", "evaluate", "score"] {
        let out = run_ok(&[sub, "--help"]);
        let help = String::from_utf8(out.stdout).unwrap();
        let usage = help.lines().find(|l| l.starts_with("Usage:")).unwrap().to_string();
        for line in help.lines().filter(|l| l.trim_start().starts_with("--")) {
            let flag = line.split_whitespace().next().unwrap();
            if flag == "--help" || usage.contains(flag) || line.contains("required unless") {
                continue;
            }
            assert!(line.contains("default:"), "{sub}: no default shown for {flag}: {line}");
        }
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--train", "x", "--model", "y", "--gamma", "wide"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn end_to_end_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    for f in ["c/provenance.json", "pc/checkpoint.jsonl", "m/model.svm", "m/vocab.tsv", "m/provenance.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let prov: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c/provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["command"], "build-corpus");
    assert_eq!(prov["config"]["seed"], "0");
    let digest = prov["inputs"].as_object().unwrap().values().next().unwrap().as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(prov["run"]["bucket_spec_repairs"].is_string());

    let report = dir.path().join("r/report.csv");
    run_ok(&["evaluate", "--data", p(&dir.path().join("pc/test.jsonl")), "--model", p(&dir.path().join("m")), "--out", p(&report)]);
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 1 + 19 + 1);
    assert_eq!(RangeReport::parse_csv(&text).unwrap().to_csv(), text);
    assert!(dir.path().join("r/report.csv.provenance.json").is_file());

    let out = run_ok(&[
        "evaluate", "--data", p(&dir.path().join("pc/test.jsonl")), "--model", p(&dir.path().join("m")), "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 19);
    assert!(v.get("range_mean_auc").is_some());
}

#[test]
fn score_reads_stdin() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    let model = dir.path().join("m");
    let out = bin().args(["score", "--model", p(&model)]).stdin(Stdio::null()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let mut child = bin()
        .args(["score", "--model", p(&model)])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"one two three\nfour five\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<f64> = String::from_utf8(out.stdout).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(lines.len(), 2);
}

#[test]
fn single_class_training_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let humans = dir.path().join("human.txt");
    fs::write(&humans, human_sentences(60, 2).join("\n")).unwrap();
    run_ok(&["build-corpus", "--input", &format!("gutenberg={}", p(&humans)), "--out-dir", p(&dir.path().join("c"))]);
    let out = run(&["train", "--train", p(&dir.path().join("c/train.jsonl")), "--model", p(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("configuration error"), "{err}");
}

#[test]
fn transport_and_persistence_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let humans = dir.path().join("human.txt");
    fs::write(&humans, human_sentences(20, 3).join("\n")).unwrap();
    let c = dir.path().join("c");
    run_ok(&["build-corpus", "--input", &format!("squad={}", p(&humans)), "--out-dir", p(&c)]);
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let out = run(&[
        "rephrase", "--in-dir", p(&c), "--out-dir", p(&dir.path().join("pc")),
        "--backend-url", &format!("http://127.0.0.1:{port}/v1"),
        "--max-attempts", "2", "--base-delay-ms", "1", "--min-interval-ms", "0",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "rephrase", "--in-dir", p(&c), "--out-dir", p(&dir.path().join("pc2")), "--backend", "mock",
        "--checkpoint", p(&dir.path().join("nope/deeper/ck.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(run(&["score", "--model", p(&dir.path().join("absent"))]).status.code(), Some(3));
}

#[test]
fn config_file_supplies_flags_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let humans = dir.path().join("human.txt");
    fs::write(&humans, human_sentences(95, 4).join("\n")).unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# shared settings\nseed = 9\nratios = 0.6,0.2,0.2\nc = 5\n").unwrap();
    let c1 = dir.path().join("c1");
    run_ok(&["--config", p(&conf), "build-corpus", "--input", &format!("twitter={}", p(&humans)), "--out-dir", p(&c1)]);
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(c1.join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["config"]["seed"], "9");
    assert_eq!(prov["config"]["ratios"], "0.6,0.2,0.2");

    let c2 = dir.path().join("c2");
    run_ok(&["build-corpus", "--config", p(&conf), "--seed", "10", "--input", &format!("twitter={}", p(&humans)), "--out-dir", p(&c2)]);
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(c2.join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["config"]["seed"], "10");

    fs::write(&conf, "sed = 9\n").unwrap();
    let out = run(&["--config", p(&conf), "build-corpus", "--input", "twitter=x", "--out-dir", "y"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn external_scores_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    let test = fs::read_to_string(dir.path().join("pc/test.jsonl")).unwrap();
    let ids: Vec<String> = test
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    let mut csv = String::from("record_id,score,threshold\n");
    for (i, id) in ids.iter().enumerate() {
        let score = if id.ends_with("-m") { 0.9 } else { 0.1 } - (i % 3) as f64 * 0.01;
        csv.push_str(&format!("{id},{score},\n"));
    }
    let scores = dir.path().join("scores.csv");
    fs::write(&scores, &csv).unwrap();
    let data = dir.path().join("pc/test.jsonl");
    let out = run_ok(&["evaluate", "--data", p(&data), "--scores", p(&scores), "--strict"]);
    let report = RangeReport::parse_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.aggregate.auc, Some(1.0));
    assert_eq!(report.aggregate.f1, Some(1.0));

    let partial: String = csv.lines().take(ids.len()).map(|l| format!("{l}\n")).collect();
    fs::write(&scores, partial).unwrap();
    assert_eq!(run(&["evaluate", "--data", p(&data), "--scores", p(&scores), "--strict"]).status.code(), Some(2));
    assert_eq!(run(&["evaluate", "--data", p(&data), "--scores", p(&scores)]).status.code(), Some(0));
    let out = run(&["evaluate", "--data", p(&data), "--scores", p(&scores), "--model", "m"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rephrase_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    let first = fs::read(dir.path().join("pc/corpus.jsonl")).unwrap();
    let ck = fs::read_to_string(dir.path().join("pc/checkpoint.jsonl")).unwrap();
    let kept: String = ck.lines().take(50).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("pc/checkpoint.jsonl"), kept).unwrap();
    run_ok(&["rephrase", "--in-dir", p(&dir.path().join("c")), "--out-dir", p(&dir.path().join("pc")), "--backend", "mock"]);
    assert_eq!(fs::read(dir.path().join("pc/corpus.jsonl")).unwrap(), first);
    let prov: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("pc/provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["run"]["checkpointed_before_run"], 50);
}

#[test]
fn rephrase_preserves_human_split_membership() {
    let dir = tempfile::tempdir().unwrap();
    small_pipeline(dir.path());
    for split in ["train", "test", "val"] {
        let ids = |path: &Path| -> Vec<String> {
            fs::read_to_string(path)
                .unwrap()
                .lines()
                .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
                .filter(|v| v["label"] == "human")
                .map(|v| v["id"].as_str().unwrap().to_string())
                .collect()
        };
        let before = ids(&dir.path().join(format!("c/{split}.jsonl")));
        let after = ids(&dir.path().join(format!("pc/{split}.jsonl")));
        let mut before_sorted = before.clone();
        before_sorted.sort();
        assert_eq!(before_sorted, after, "{split}");
    }
}
