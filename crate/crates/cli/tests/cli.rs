use std::path::Path;
use std::process::{Command, Output};

fn drk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drk"))
        .args(args)
        .env_remove("DRK_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn ok(args: &[&str]) {
    let out = drk(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// `(path file name, sha256)` of every output in a run manifest.
fn outputs(manifest: &Path) -> Vec<(String, String)> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    v["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            let p = Path::new(o["path"].as_str().unwrap());
            (p.file_name().unwrap().to_string_lossy().into_owned(), o["sha256"].as_str().unwrap().to_string())
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_level_zero_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("seq");
    ok(&["synth", "--level", "0", "--frames", "10", "--res", "16x16", "--out", s(&out)]);
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".flow.drkr")).count(), 9);
    let gt = std::fs::read_to_string(out.join("trajectory_gt.txt")).unwrap();
    assert_eq!(gt.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).count(), 10);
    let scene: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("scene.json")).unwrap()).unwrap();
    for surface in scene["surfaces"].as_array().unwrap() {
        assert_eq!(surface["deformation"]["amplitude"].as_f64(), Some(0.0));
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(code(&drk(&["synth", "--level", "4", "--out", s(&out)])), 2);
    assert_eq!(code(&drk(&["synth", "--res", "641x64", "--out", s(&out)])), 2);
    assert_eq!(code(&drk(&["synth", "--res", "64", "--out", s(&out)])), 2);
    assert_eq!(code(&drk(&["synth", "--scene", "cave", "--out", s(&out)])), 2);
    assert_eq!(code(&drk(&["odom", "--data", s(&out), "--flow", "guess", "--out", s(&out)])), 2);
    assert_eq!(code(&drk(&["odom", "--data", s(&out), "--iters", "0", "--out", s(&out)])), 2);
    let t = dir.path().join("t.txt");
    std::fs::write(&t, "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n").unwrap();
    assert_eq!(code(&drk(&["eval", "apte", "--gt", s(&t), "--est", s(&t), "--out", s(&out)])), 2);
    assert!(!out.exists());
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&drk(&["odom", "--data", s(&empty), "--out", s(&dir.path().join("t.txt"))])), 1);
    assert_eq!(code(&drk(&["palindrome", "--data", s(&empty), "--out", s(&dir.path().join("p"))])), 1);

    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    std::fs::write(&a, "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n2 2 0 0 0 0 0 1\n").unwrap();
    std::fs::write(&b, "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n3 2 0 0 0 0 0 1\n").unwrap();
    let out = drk(&["eval", "rpe", "--gt", s(&a), "--est", s(&b), "--out", s(&dir.path().join("r.csv"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn eval_identities() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.txt");
    std::fs::write(&t, "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n2 1 1 0 0 0 0 1\n3 1 1 1 0 0 0 1\n").unwrap();
    let csv = dir.path().join("ate.csv");
    ok(&["eval", "ate", "--gt", s(&t), "--est", s(&t), "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("metric,value,unit\nate,0,m\n"), "{text}");

    // backward run retraces the forward one exactly
    let back = dir.path().join("back.txt");
    std::fs::write(&back, "0 0 0 0 0 0 0 1\n1 0 0 -1 0 0 0 1\n2 0 -1 -1 0 0 0 1\n3 -1 -1 -1 0 0 0 1\n").unwrap();
    let csv = dir.path().join("apte.csv");
    ok(&["eval", "apte", "--gt", s(&t), "--est", s(&t), "--est-back", s(&back), "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("k,apte_k\n1,0\n2,0\n3,0\n"), "{text}");
    assert!(text.trim_end().ends_with("mean,0"), "{text}");
}

#[test]
fn palindrome_of_three_frames() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    let pal = dir.path().join("pal");
    ok(&["synth", "--frames", "3", "--res", "16x16", "--out", s(&seq)]);
    ok(&["palindrome", "--data", s(&seq), "--out", s(&pal)]);
    let remap: Vec<String> = std::fs::read_to_string(pal.join("palindrome.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("source"))
        .map(|l| l.split_whitespace().nth(1).unwrap().to_string())
        .collect();
    assert_eq!(remap, ["1", "2", "3", "3", "2", "1"]);
    let first = outputs(&pal.join("run_manifest.json"));
    ok(&["palindrome", "--data", s(&seq), "--out", s(&pal)]);
    assert_eq!(outputs(&pal.join("run_manifest.json")), first);
}

#[test]
fn seed_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_drk"));
        cmd.args(["synth", "--level", "1", "--frames", "2", "--res", "8x8", "--seed", seed, "--out", s(&out)]);
        match env {
            Some(v) => cmd.env("DRK_SEED", v),
            None => cmd.env_remove("DRK_SEED"),
        };
        assert!(cmd.status().unwrap().success());
        std::fs::read_to_string(out.join("scene.json")).unwrap()
    };
    assert_eq!(run("a", "5", None), run("b", "9", Some("5")));
    assert_ne!(run("c", "5", None), run("d", "6", None));
}

#[test]
fn odom_on_level_zero_tracks_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq");
    ok(&["synth", "--frames", "6", "--res", "32x32", "--out", s(&seq)]);
    let traj = dir.path().join("out").join("traj.txt");
    ok(&["odom", "--data", s(&seq), "--out", s(&traj)]);
    assert!(traj.with_file_name("diagnostics.csv").exists());
    let csv = dir.path().join("ate.csv");
    ok(&["eval", "ate", "--gt", s(&seq.join("trajectory_gt.txt")), "--est", s(&traj), "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let ate: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(ate < 1e-4, "{ate}");
}
