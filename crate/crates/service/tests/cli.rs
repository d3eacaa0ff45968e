mod common;

use std::path::Path;
use std::process::{Command, Output};

use pf_core::data::load_pat;
use pf_core::metrics::EvalReport;

fn pf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pf"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_exits_1() {
    let o = pf(&["repaint"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
    assert_eq!(code(&pf(&["--help"])), 0);
    assert_eq!(code(&pf(&["sample", "--help"])), 0);
}

#[test]
fn sample_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (tpn, _) = common::write_checkpoints(dir.path());
    let args = ["sample", "--checkpoint", s(&tpn), "--text", "quiet harbor", "--n", "3", "--seed", "9"];
    let a = pf(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, pf(&args).stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["palettes"].as_array().unwrap().len(), 3);
}

#[test]
fn sample_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (tpn, _) = common::write_checkpoints(dir.path());
    assert_eq!(code(&pf(&["sample", "--checkpoint", s(&tpn), "--text", " "])), 1);
    assert_eq!(code(&pf(&["sample", "--checkpoint", s(&tpn), "--text", "sea", "--n", "0"])), 1);
    let missing = dir.path().join("missing.safetensors");
    assert_eq!(code(&pf(&["sample", "--checkpoint", s(&missing), "--text", "sea"])), 2);
    let garbage = dir.path().join("garbage.safetensors");
    std::fs::write(&garbage, b"nope").unwrap();
    assert_eq!(code(&pf(&["sample", "--checkpoint", s(&garbage), "--text", "sea"])), 2);
}

#[test]
fn colorize_checks_palette_arity() {
    let dir = tempfile::tempdir().unwrap();
    let (_, pcn) = common::write_checkpoints(dir.path());
    let input = dir.path().join("in.png");
    image::RgbImage::from_pixel(24, 24, image::Rgb([120, 80, 40])).save(&input).unwrap();
    let out = dir.path().join("out.png");

    let four = dir.path().join("four.json");
    std::fs::write(&four, "[[30,10,10],[50,-20,30],[70,0,0],[40,40,-40]]").unwrap();
    let o = pf(&["colorize", "--checkpoint", s(&pcn), "--image", s(&input), "--palette", s(&four), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains('4'));
    assert!(!out.exists());

    let five = dir.path().join("five.json");
    std::fs::write(&five, r#"{"colors":[[30,10,10],[50,-20,30],[70,0,0],[40,40,-40],[90,5,20]]}"#).unwrap();
    let o = pf(&["colorize", "--checkpoint", s(&pcn), "--image", s(&input), "--palette", s(&five), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let img = image::open(&out).unwrap();
    assert_eq!((img.width(), img.height()), (24, 24));
}

#[test]
fn fixtures_ingest_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (tpn, _) = common::write_checkpoints(dir.path());
    let data = dir.path().join("pat.jsonl");
    let emb = dir.path().join("vectors.txt");
    let o = pf(&["fixtures", "--out", s(&data), "--n", "30", "--seed", "2", "--embeddings", s(&emb)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_pat(&data).unwrap().len(), 30);
    assert!(std::fs::read_to_string(&emb).unwrap().lines().count() > 1);

    let o = pf(&["ingest", "--data", s(&data)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["records"], 30);
    assert_eq!(v["test"], 3);
    assert_eq!(v["train"], 27);

    let report_path = dir.path().join("report.json");
    let o = pf(&[
        "evaluate", "--checkpoint", s(&tpn), "--data", s(&data), "--samples", "3", "--seed", "1", "--out", s(&report_path),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: EvalReport = serde_json::from_slice(&o.stdout).unwrap();
    let saved: EvalReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report, saved);
    assert_eq!((report.texts, report.samples_per_text), (30, 3));
    for v in [report.diversity_mean, report.multimodality_mean, report.bin_kl, report.ground_truth_diversity_mean] {
        assert!(v.is_finite() && v >= 0.0, "{report:?}");
    }
}

#[test]
fn ingest_rejects_malformed_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.jsonl");
    std::fs::write(&data, "{\"text\":\"sea\",\"palette\":[[1,2,3]]}\n").unwrap();
    let o = pf(&["ingest", "--data", s(&data)]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&pf(&["ingest", "--data", s(&dir.path().join("absent.jsonl"))])), 2);
}

#[test]
fn train_commands_write_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pat.jsonl");
    let images = dir.path().join("images");
    let o = pf(&["fixtures", "--out", s(&data), "--n", "20", "--images", s(&images), "--image-count", "3", "--image-size", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let out = dir.path().join("tpn");
    let o = pf(&[
        "train-tpn", "--data", s(&data), "--out", s(&out), "--dims", "8", "--disc-hidden", "8", "--epochs", "2", "--batch-size", "8",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("tpn.safetensors").exists());
    assert!(out.join("history.csv").exists());
    assert_eq!(load_pat(out.join("test.jsonl")).unwrap().len(), 2);
    let o = pf(&["sample", "--checkpoint", s(&out.join("tpn.safetensors")), "--text", "anything", "--n", "1"]);
    assert_eq!(code(&o), 0);

    let out = dir.path().join("pcn");
    let o = pf(&[
        "train-pcn", "--images", s(&images), "--out", s(&out), "--resolution", "16", "--widths", "2,3,4,5", "--disc-widths", "2,3",
        "--epochs", "1", "--batch-size", "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("pcn.safetensors").exists());
    let o = pf(&["train-pcn", "--images", s(&images), "--out", s(&out), "--widths", "2,3"]);
    assert_eq!(code(&o), 1);
}
