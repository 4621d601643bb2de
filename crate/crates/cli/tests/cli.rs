//! End-to-end checks of the `lab` binary: exit codes and the
//! abstract/train artifact pipeline.

use std::path::PathBuf;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("n211-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn counts_match_and_exit_zero() {
    let out = lab().arg("counts").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all counts match"));
    assert!(stdout.contains("1096680"));
}

#[test]
fn counts_mismatch_exits_one() {
    let dir = temp_dir("counts");
    let bad = dir.join("expected.toml");
    std::fs::write(
        &bad,
        "null = [780, 29640, 1096680]\nli = [100, 2260, 62020]\npoi = [1, 2, 3]\nkrwi = [[100], [2234, 2248], [3957, 51000, 51070]]\n",
    )
    .unwrap();
    let out = lab().arg("counts").arg("--expected").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_errors_exit_two() {
    let out = lab().arg("counts").arg("--no-such-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let out = lab().arg("eval").arg("--mode").arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn abstract_train_pipeline() {
    let dir = temp_dir("pipe");
    let map = dir.join("map.bin");
    let out = lab()
        .args(["abstract", "--algo", "poi", "--seed", "5", "--out"])
        .arg(&map)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(map.exists());

    let prof = dir.join("prof.bin");
    let out = lab()
        .args(["train", "--iters", "5000", "--seed", "2"])
        .arg("--map1")
        .arg(&map)
        .arg("--map2")
        .arg(&map)
        .arg("--out")
        .arg(&prof)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(prof.exists());

    // A feature cache can be written anywhere.
    let feats = dir.join("f2.bin");
    let out = lab()
        .args(["features", "--phase", "2", "--k", "1", "--out"])
        .arg(&feats)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(feats.exists());
    std::fs::remove_dir_all(&dir).ok();
}
