use std::path::Path;
use std::process::Command;

fn run(repo: &Path, args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tokenflow")).arg("--repo").arg(repo).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.success(), text)
}

#[test]
fn generate_compile_replay() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    let gen = dir.path().join("sc");
    let gen_s = gen.to_str().unwrap();
    let (ok, _) = run(&repo, &["generate", "--dataset", "Supply chain", "--traces", "20", "--noise", "0.25", "--seed", "4", "--out", gen_s]);
    assert!(ok);
    let model = gen.join("model.bpmn");
    let (ok, text) = run(&repo, &["validate", model.to_str().unwrap()]);
    assert!(ok, "{text}");

    let art = dir.path().join("art");
    let (ok, hash) = run(&repo, &["compile", model.to_str().unwrap(), "--mode", "full", "--out", art.to_str().unwrap()]);
    assert!(ok, "{hash}");
    let hash = hash.trim();
    assert_eq!(hash.len(), 64);
    assert!(art.join("dictionary.json").exists());

    let report = dir.path().join("report.txt");
    let log = gen.join("log.txt");
    let args = ["replay", "--model", hash, "--log", log.to_str().unwrap(), "--mode", "full", "--report", report.to_str().unwrap()];
    let (ok, text) = run(&repo, &args);
    assert!(ok, "{text}");
    assert!(text.starts_with("conforming 15 non-conforming 5"), "{text}");
    let table = std::fs::read_to_string(&report).unwrap();
    assert!(table.starts_with("Process"));
    assert_eq!(table.lines().count(), 5);
    let rows = std::fs::read_to_string(report.with_extension("jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    // same inputs, same report
    let (_, again) = run(&repo, &args);
    assert_eq!(text, again);
}

#[test]
fn bad_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let (ok, text) = run(dir.path(), &["generate", "--dataset", "nope", "--out", "x"]);
    assert!(!ok && text.contains("unknown dataset"));
    let (ok, _) = run(dir.path(), &["replay", "--model", &"0".repeat(64), "--log", "x"]);
    assert!(!ok);
}
