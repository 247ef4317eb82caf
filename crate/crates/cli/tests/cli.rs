use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anaphora_core::metrics::{write_judgments, Choice, JudgmentRecord, Role};
use anaphora_core::miner::read_pairs;

const BIN: &str = env!("CARGO_BIN_EXE_anaphora-eval");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("ANAPHORA_EVAL_CONFIG").output().expect("spawn anaphora-eval")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const EXAMPLE_REF: &str = "He was creative, generous, funny, loving and talented, and I will miss him dearly.";
const EXAMPLE_SYS: &str = "It was creative, generous, funny, affectionate and talented, and we will greatly miss.";
const EXAMPLE_GOLD: &str = "0-0 1-1 2-2 3-3 4-4 5-5 6-6 7-7 8-8 9-9 10-10 11-11 12-12 13-13 14-14 16-15 17-18";

#[test]
fn mine_worked_example_with_gold_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let r = write(dir.path(), "ref.txt", &format!("{EXAMPLE_REF}\n"));
    let s = write(dir.path(), "sys.txt", &format!("{EXAMPLE_SYS}\n"));
    let a = write(dir.path(), "gold.align", &format!("{EXAMPLE_GOLD}\n"));
    let out = dir.path().join("pairs.jsonl");
    let text = ok(&[
        "mine", "--reference", p(&r), "--system", p(&s), "--alignment", p(&a), "--output", p(&out), "--format", "flat",
    ]);
    assert!(text.contains("wrote 2 pairs"), "{text}");
    let pairs = read_pairs(&out).unwrap();
    let sys: Vec<&str> = pairs.iter().map(|x| x.sys.as_str()).collect();
    assert_eq!(
        sys,
        [
            "It was creative, generous, funny, loving and talented, and I will miss him dearly.",
            "He was creative, generous, funny, loving and talented, and we will miss him dearly.",
        ]
    );
}

#[test]
fn agree_prints_hand_computed_ac1() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = Vec::new();
    for i in 0..10 {
        let rec = |who: &str, order, choice| JudgmentRecord {
            item_id: format!("i{i}"),
            annotator_id: who.into(),
            displayed_order: Some(order),
            choice,
            timestamp: i,
        };
        records.push(rec("r1", (Role::Reference, Role::Noisy), Choice::A));
        records.push(rec("r2", (Role::Noisy, Role::Reference), if i == 9 { Choice::A } else { Choice::B }));
    }
    let path = dir.path().join("judgments.jsonl");
    write_judgments(&path, &records).unwrap();
    let report = dir.path().join("report.json");
    let text = ok(&["agree", "--judgments", p(&path), "--output", p(&report)]);
    assert!(text.contains("ac1_excl_ties\t0.8895"), "{text}");
    // with ties as a third category: pe = (0.95 * 0.05 + 0.05 * 0.95) / 2
    assert!(text.contains("ac1_incl_ties\t0.8950"), "{text}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let hand = (0.9 - 0.095) / (1.0 - 0.095);
    assert!((json["ac1_excl_ties"].as_f64().unwrap() - hand).abs() < 1e-12);
}

#[test]
fn synth_train_eval_reaches_ninety_percent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--output-dir", p(d), "--seed", "7"]);
    let model = d.join("model.ckpt");
    ok(&[
        "train", "--train", p(&d.join("train.jsonl")), "--dev", p(&d.join("dev.jsonl")), "--output", p(&model),
        "--epochs", "10", "--patience", "3",
    ]);
    let report = d.join("eval.json");
    let breakdown = d.join("breakdown.tsv");
    let text = ok(&[
        "eval", "--model", p(&model), "--pairs", p(&d.join("test.jsonl")), "--report", p(&report), "--breakdown",
        p(&breakdown), "--train-pairs", p(&d.join("train.jsonl")),
    ]);
    let acc: f64 = text.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(acc >= 0.90, "{text}");
    assert!(std::fs::read_to_string(&breakdown).unwrap().lines().count() > 1);

    let scored = ok(&[
        "score", "--model", p(&model), "--candidate-a", "The king said he would bring the sword .", "--candidate-b",
        "The king said it would bring the sword .",
    ]);
    assert!(scored.lines().any(|l| l.starts_with("preferred\t")), "{scored}");

    let attn = d.join("attn.tsv");
    let test_pairs = read_pairs(&d.join("test.jsonl")).unwrap();
    ok(&[
        "attn-export", "--model", p(&model), "--pairs", p(&d.join("test.jsonl")), "--item", &test_pairs[0].id,
        "--output", p(&attn),
    ]);
    assert!(!std::fs::read_to_string(&attn).unwrap().is_empty());
}

#[test]
fn fixed_seed_gives_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut outputs = Vec::new();
    for run_no in 0..2 {
        let sub = d.join(format!("run{run_no}"));
        ok(&["synth", "--output-dir", p(&sub), "--sentences", "400", "--seed", "3"]);
        let model = sub.join("model.ckpt");
        let log = sub.join("log.jsonl");
        ok(&[
            "train", "--train", p(&sub.join("train.jsonl")), "--dev", p(&sub.join("dev.jsonl")), "--output", p(&model),
            "--log", p(&log), "--d", "16", "--h", "16", "--epochs", "3", "--patience", "2", "--seed", "11",
        ]);
        let files = ["train.jsonl", "dev.jsonl", "test.jsonl", "model.ckpt", "log.jsonl"];
        outputs.push(files.map(|f| std::fs::read(sub.join(f)).unwrap()));
    }
    assert!(outputs[0] == outputs[1], "two runs with the same seed differ");
}

#[test]
fn align_is_deterministic_and_writes_one_line_per_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let src = write(d, "src.txt", "das haus ist klein\ndas buch ist gut\nein haus\n");
    let tgt = write(d, "tgt.txt", "the house is small\nthe book is good\na house\n");
    let a1 = d.join("a1");
    let a2 = d.join("a2");
    ok(&["align", "--source", p(&src), "--target", p(&tgt), "--output", p(&a1), "--heuristic", "intersection"]);
    ok(&["align", "--source", p(&src), "--target", p(&tgt), "--output", p(&a2), "--heuristic", "intersection"]);
    let text = std::fs::read_to_string(&a1).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text, std::fs::read_to_string(&a2).unwrap());
}

#[test]
fn tokenize_splits_punctuation() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.txt", "He said, \"No.\"\n");
    let text = ok(&["tokenize", "--input", p(&input), "--lower"]);
    assert!(text.starts_with("he said ,"), "{text}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["train", "--help"]).status.code(), Some(0));

    let bad_flag = run(&["eval", "--model", "m", "--pairs", "p", "--frobnicate"]);
    assert_eq!(bad_flag.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_flag.stderr).contains("--frobnicate"));
    assert_eq!(run(&["filter", "--pairs", "p", "--output", "o"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--train", "a", "--dev", "b", "--output", "c", "--d", "zero"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let o = run(&["eval", "--model", p(&missing), "--pairs", p(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.jsonl"));

    let bad = write(dir.path(), "bad.jsonl", "{\"item_id\": \"x\"}\nnot json\n");
    let o = run(&["agree", "--judgments", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.jsonl") && err.contains('1'), "{err}");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "run.conf", "# defaults\nsentences = 200\nseed = 5\ntau = 0.5\n");

    let from_file = d.join("from_file");
    let text = ok(&["--config", p(&cfg), "synth", "--output-dir", p(&from_file)]);
    let total = |t: &str| -> usize { t.split_whitespace().filter_map(|w| w.parse::<usize>().ok()).sum() };
    let n_file = total(&text);

    let text = ok(&["synth", "--output-dir", p(&d.join("flag")), "--sentences", "400", "--config", p(&cfg)]);
    assert!(total(&text) > n_file, "flag did not override config: {text}");

    let o = Command::new(BIN)
        .args(["synth", "--output-dir", p(&d.join("env"))])
        .env("ANAPHORA_EVAL_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(total(&stdout(&o)), n_file);
    assert_eq!(std::fs::read(d.join("env/train.jsonl")).unwrap(), std::fs::read(from_file.join("train.jsonl")).unwrap());

    let unknown = write(d, "bad.conf", "no_such_flag = 1\n");
    let o = run(&["--config", p(&unknown), "synth", "--output-dir", p(&d.join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-flag"));
}

#[test]
fn suite_manifest_reads_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["suite-manifest", "--suite", p(&dir.path().join("absent"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn filter_from_judgments_keeps_agreed_pronoun_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = write(d, "ref.txt", &format!("{EXAMPLE_REF}\n"));
    let s = write(d, "sys.txt", &format!("{EXAMPLE_SYS}\n"));
    let a = write(d, "gold.align", &format!("{EXAMPLE_GOLD}\n"));
    let pairs = d.join("pairs.jsonl");
    ok(&["mine", "--reference", p(&r), "--system", p(&s), "--alignment", p(&a), "--output", p(&pairs), "--format", "flat"]);
    let mined = read_pairs(&pairs).unwrap();
    let rn = (Role::Reference, Role::Noisy);
    let rec = |item: &str, who: &str, choice| JudgmentRecord {
        item_id: item.into(),
        annotator_id: who.into(),
        displayed_order: Some(rn),
        choice,
        timestamp: 0,
    };
    let records = vec![
        rec(&mined[0].id, "r1", Choice::A),
        rec(&mined[0].id, "r2", Choice::A),
        rec(&mined[1].id, "r1", Choice::A),
        rec(&mined[1].id, "r2", Choice::B),
    ];
    let judgments = d.join("judgments.jsonl");
    write_judgments(&judgments, &records).unwrap();
    let out = d.join("kept.jsonl");
    let text = ok(&["filter", "--pairs", p(&pairs), "--judgments", p(&judgments), "--output", p(&out)]);
    assert!(text.contains("kept 1 of 2"), "{text}");
    assert_eq!(read_pairs(&out).unwrap()[0].id, mined[0].id);

    let table = d.join("table.tsv");
    ok(&["agree", "--judgments", p(&judgments), "--pairs", p(&pairs), "--table", p(&table)]);
    let out2 = d.join("kept2.jsonl");
    ok(&["filter", "--pairs", p(&pairs), "--agreement", p(&table), "--output", p(&out2)]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&out2).unwrap());
}
