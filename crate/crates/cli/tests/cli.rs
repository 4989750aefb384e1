use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ostrovsky(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ostrovsky")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn sweep_config(output: &Path) -> String {
    format!(
        r#"kind = "lemma22"
output = "{}"

[grid]
n_points = 128
half_length = 16.0

[equation]
sign = "+"
s = 0.8

[sweep]
b = [0.5]
t = [1.0]
x = [0.0, 1.0]
"#,
        output.display()
    )
}

#[test]
fn version_prints_crate_version() {
    let out = ostrovsky(&["version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ostrovsky "));
}

#[test]
fn validate_accepts_shipped_configs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let out = ostrovsky(&["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn invalid_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_value = write_config(dir.path(), "bad.toml", &sweep_config(dir.path()).replace("s = 0.8", "s = 0.2"));
    let out = ostrovsky(&["validate", &bad_value]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("equation.s"));

    let unknown = write_config(dir.path(), "unknown.toml", &format!("{}\nbogus = 1\n", sweep_config(dir.path())));
    assert_eq!(ostrovsky(&["run", &unknown]).status.code(), Some(1));

    let missing = dir.path().join("missing.toml");
    assert_eq!(ostrovsky(&["run", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let cfg = write_config(dir.path(), &format!("{run}.toml"), &sweep_config(&out_dir));
        let out = ostrovsky(&["run", &cfg]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join("summary.txt").exists());
        outputs.push(fs::read_to_string(out_dir.join("sweep.csv")).unwrap());
    }
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("#   output")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&outputs[0]), strip(&outputs[1]));
}
