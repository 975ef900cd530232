use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_textscene"));
    c.env("TEXTSCENE_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn assert_json_error(out: &Output, code: i32, kind: &str) {
    assert_eq!(out.status.code(), Some(code));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<_> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["error"], kind, "{stderr}");
    assert!(v["message"].is_string());
}

#[test]
fn gen_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| {
        vec!["gen-data", "--out", p(out), "--mode", "full", "--train", "60", "--val", "12", "--test", "12", "--seed", "9"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let sa = ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    let sb = ok(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(sa, sb);
    for f in ["manifest.json", "train.jsonl", "val_condA.jsonl", "test_condB.jsonl", "gen-data-config.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bad_input_exits_two_with_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_json_error(&run(&["render", p(&missing), "--out", p(&dir.path().join("x.png"))]), 2, "validation");
    assert_json_error(&run(&["gen-data", "--out", p(dir.path()), "--frobnicate"]), 2, "validation");
    assert_json_error(&run(&["infer", "--checkpoint", p(&missing), "--text", "a cube"]), 2, "validation");

    let junk = dir.path().join("junk.ckpt");
    std::fs::write(&junk, b"TXSCNCKP not really").unwrap();
    assert_json_error(&run(&["infer", "--checkpoint", p(&junk), "--text", "a cube"]), 2, "validation");

    let layout = dir.path().join("bad.json");
    std::fs::write(&layout, r#"{"kind":"static","objects":[{"shape":"pyramid","color":"red","size":"large","texture":"metal"}]}"#)
        .unwrap();
    assert_json_error(&run(&["render", p(&layout), "--out", p(&dir.path().join("y.png"))]), 2, "validation");

    let crowded = dir.path().join("crowded.json");
    let obj = r#"{"shape":"sphere","color":"red","size":"large","texture":"metal"}"#;
    std::fs::write(&crowded, format!(r#"{{"kind":"static","objects":[{}]}}"#, vec![obj; 10].join(","))).unwrap();
    let tight = dir.path().join("tight.json");
    let mut config = serde_json::to_value(textscene_core::render::RenderConfig::default()).unwrap();
    config["bounds"] = serde_json::json!([-1.0, 1.0]);
    std::fs::write(&tight, config.to_string()).unwrap();
    let out = run(&["render", p(&crowded), "--config", p(&tight), "--out", p(&dir.path().join("z.png"))]);
    assert_json_error(&out, 3, "runtime");

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let run_dir = dir.path().join("run");
    ok(&["gen-data", "--out", p(&corpus), "--mode", "static", "--train", "80", "--val", "16", "--test", "16", "--stats"]);
    assert!(corpus.join("stats.json").exists());

    let stdout = ok(&[
        "train", "--corpus", p(&corpus), "--out", p(&run_dir), "--epochs", "2", "--dims", "16", "--attn-dim", "16",
        "--batch-size", "16",
    ]);
    assert!(stdout.contains("best val condA"));
    let log = std::fs::read_to_string(run_dir.join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert!(log.starts_with("epoch,train_loss,val_condA,val_condB,wall_seconds"));
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("train-config.json")).unwrap()).unwrap();
    assert_eq!(echo["epochs"], 2);

    let ckpt = run_dir.join("best.ckpt");
    let report = dir.path().join("report.json");
    ok(&[
        "eval", "--checkpoint", p(&ckpt), "--corpus", p(&corpus), "--render", "--render-limit", "2", "--out", p(&report),
    ]);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for cond in ["condA", "condB"] {
        let c = &r["conditions"][cond];
        assert_eq!(c["samples"], 16);
        let strict = c["strict"].as_f64().unwrap();
        assert!((0.0..=100.0).contains(&strict));
        assert_eq!(c["per_head"].as_object().unwrap().len(), 4);
    }
    assert!(dir.path().join("report.eval-config.json").exists());

    let animated = dir.path().join("anim");
    std::fs::create_dir(&animated).unwrap();
    ok(&["gen-data", "--out", p(&animated), "--mode", "animated", "--train", "8", "--val", "4", "--test", "4"]);
    let out = run(&["eval", "--checkpoint", p(&ckpt), "--corpus", p(&animated)]);
    assert_json_error(&out, 2, "validation");

    let attention = dir.path().join("attention.csv");
    let layout = ok(&["infer", "--checkpoint", p(&ckpt), "--text", "There is a big red sphere.", "--attention", p(&attention)]);
    let parsed: serde_json::Value = serde_json::from_str(&layout).unwrap();
    assert!(parsed["objects"].is_array());
    let csv = std::fs::read_to_string(&attention).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("step,"));

    let png = dir.path().join("scene.png");
    let mut child = bin()
        .args(["render", "-", "--out", p(&png), "--width", "48", "--height", "32"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(br#"{"kind":"static","objects":[{"shape":"cube","color":"red","size":"large","texture":"metal"}]}"#)
        .unwrap();
    assert!(child.wait_with_output().unwrap().status.success());
    assert_eq!(&std::fs::read(&png).unwrap()[..4], b"\x89PNG");
    assert!(dir.path().join("scene.render-config.json").exists());
}

#[test]
fn animated_render_writes_frames() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("clip.json");
    std::fs::write(
        &layout,
        r#"{"kind":"animated","objects":[{"shape":"cube","color":"blue","size":"small","texture":"rubber","motion":"spin"}]}"#,
    )
    .unwrap();
    let out = dir.path().join("clip");
    let stdout = ok(&["render", p(&layout), "--out", p(&out), "--width", "32", "--height", "24", "--fps", "4"]);
    assert!(stdout.contains("12 frames"), "{stdout}");
    assert!(out.join("frame_0011.png").exists());
    assert!(out.join("manifest.json").exists());
    assert!(out.join("render-config.json").exists());
}
