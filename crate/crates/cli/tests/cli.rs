use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atomic-bands"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const BANDS: &str = "[lattice]\nfamily = \"square\"\na = 0.3\n[scheme]\nzeeman = 0.5\n[numerics]\npath_points = 16\n";

#[test]
fn bands_run_writes_tables_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BANDS);
    let out = dir.path().join("out");
    let st = bin().arg("bands").arg("-c").arg(&cfg).arg("-o").arg(&out).output().unwrap().status;
    assert!(st.success());
    for f in ["bands.tsv", "gaps.tsv", "config.toml"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let echo = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echo.contains("mode = \"bands\""));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BANDS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(bin().arg("bands").arg("-c").arg(&cfg).arg("-o").arg(out).output().unwrap().status.success());
    }
    for f in ["bands.tsv", "gaps.tsv", "config.toml"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BANDS);
    let st = bin()
        .args(["bands", "--set", "lattice.a=-1"])
        .arg("-c")
        .arg(&cfg)
        .arg("-o")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("lattice.a"));
    let missing = bin().arg("bands").arg("-c").arg(dir.path().join("nope.toml")).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["chern", "--set", "lattice.a=0.4", "--set", "scheme.zeeman=0.0", "--set", "numerics.grid=12"])
        .arg("-o")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(3), "{}", String::from_utf8_lossy(&st.stderr));
}
