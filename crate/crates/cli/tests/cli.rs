use std::path::Path;
use std::process::{Command, Output};

use emosuggest_cli::demo::DEMO_CORPUS;

fn emosuggest(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emosuggest"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn labeled_fixture() -> String {
    let groups = [
        ("anger", ["furious", "angry", "mad", "rage", "annoyed"]),
        ("joy", ["happy", "glad", "great", "yay", "delighted"]),
        ("sadness", ["sad", "crying", "miss", "lonely", "sorry"]),
        ("fear", ["scared", "afraid", "nervous", "worried", "terrified"]),
        ("anticipation", ["waiting", "soon", "excited", "tomorrow", "countdown"]),
        ("tired", ["tired", "sleepy", "exhausted", "yawn", "drained"]),
        ("neutral", ["okay", "noted", "sure", "fine", "alright"]),
    ];
    let fillers = ["today", "now", "really", "so", "very", "just", "again", "still", "quite", "a bit"];
    let mut out = String::new();
    for (label, words) in groups {
        for (i, filler) in fillers.iter().enumerate() {
            out.push_str(&format!("{label}\tI am {filler} {} {}\n", words[i % 5], words[(i + 2) % 5]));
        }
    }
    out
}

#[test]
fn ingest_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.tsv"), DEMO_CORPUS).unwrap();
    let out = emosuggest(&["ingest", "c.tsv"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("messages:         75"), "{text}");
    assert!(text.contains("turns:            50"), "{text}");
}

#[test]
fn ingest_rejects_mostly_malformed_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = String::new();
    for i in 0..8 {
        corpus.push_str(&format!("d{i}\tA\t1\thello\n"));
    }
    corpus.push_str("broken line\nalso broken\n");
    std::fs::write(dir.path().join("c.tsv"), corpus).unwrap();
    let out = emosuggest(&["ingest", "c.tsv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = emosuggest(&["ingest", "nope.tsv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn serve_with_bad_config_exits() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), "corpus = \"c.tsv\"\nmodel = \"m.bin\"\nbogus = 1\n").unwrap();
    let out = emosuggest(&["serve", "--config", "s.toml"], dir.path());
    assert!(!out.status.success());
    std::fs::write(dir.path().join("s.toml"), "corpus = \"c.tsv\"\nmodel = \"m.bin\"\n").unwrap();
    let out = emosuggest(&["serve", "--config", "s.toml"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn train_then_evaluate_model() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("train.tsv"), labeled_fixture()).unwrap();
    let out = emosuggest(
        &[
            "train", "train.tsv", "--out", "m.bin", "--no-split", "--epochs", "60", "--embed-dim", "32", "--seq-len",
            "16", "--batch-size", "10",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("training-set accuracy:"));

    let out = emosuggest(&["evaluate", "model", "m.bin", "train.tsv"], dir.path());
    assert!(out.status.success());
    let last = stdout(&out).lines().last().unwrap().to_string();
    assert_eq!(last, format!("{:<14}{:>8}{:>8}{:>10.4}", "overall", 70, 70, 1.0));

    let out = emosuggest(&["evaluate", "model", "m.bin", "train.tsv", "--json"], dir.path());
    assert!(out.status.success());
    serde_json::from_str::<serde_json::Value>(&stdout(&out)).unwrap();
}

#[test]
fn evaluation_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.tsv"), DEMO_CORPUS).unwrap();
    let labeled: String = DEMO_CORPUS
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            format!("{}\t{}\n", f[4], f[3])
        })
        .collect();
    std::fs::write(dir.path().join("l.tsv"), labeled).unwrap();
    let train = emosuggest(
        &["train", "l.tsv", "--out", "m.bin", "--no-split", "--epochs", "5", "--embed-dim", "8", "--seq-len", "8"],
        dir.path(),
    );
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));

    let select = emosuggest(&["evaluate", "select", "c.tsv", "--model", "m.bin", "--out", "items.tsv"], dir.path());
    assert!(select.status.success(), "{}", String::from_utf8_lossy(&select.stderr));
    let items = std::fs::read_to_string(dir.path().join("items.tsv")).unwrap();
    let count = items.lines().count();
    assert!(count > 0);

    let sim = emosuggest(&["evaluate", "simulate", "--items", "items.tsv", "--out", "ranks.tsv"], dir.path());
    assert!(sim.status.success());
    let ranks = std::fs::read_to_string(dir.path().join("ranks.tsv")).unwrap();
    assert_eq!(ranks.lines().count(), count * 15);

    let out = emosuggest(&["evaluate", "ranks", "ranks.tsv", "--items", "items.tsv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with(&format!("{count} items")), "{text}");
    assert!(text.contains("Good Suggestion Rate (%)"));

    let json = emosuggest(&["evaluate", "ranks", "ranks.tsv", "--items", "items.tsv", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["items"], count);
}

#[test]
fn demo_prints_seven_entries() {
    let dir = tempfile::tempdir().unwrap();
    let out = emosuggest(&["demo", "--epochs", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.contains(" p=")).count(), 7, "{text}");
    assert!(text.contains("received: how are you?"));
}
