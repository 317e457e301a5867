use std::path::Path;
use std::process::{Command, Output};

fn spc_rsma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spc-rsma"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.toml",
        "seed = 5\n[design]\nrandom_vectors = 200\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = spc_rsma(&[
            "run",
            "--config",
            &config,
            "--draws",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("SPC_RSMA_TTM"));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("scheme,sweep_value,draw,r_total_1,"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.toml", "[design]\nrandom_vectors = 200\n");
    let csv = |seed: &str| {
        let out = dir.path().join(format!("{seed}.csv"));
        let o = spc_rsma(&[
            "run",
            "--config",
            &config,
            "--seed",
            seed,
            "--scheme",
            "SDMA_TTM",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read_to_string(out).unwrap()
    };
    let (a, b) = (csv("1"), csv("2"));
    assert!(a.contains("SDMA_TTM"));
    assert_ne!(a, b);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "[leo]\npower_w = -1.0\n",
        "[leo]\nfeeds = \"two\"\n",
        "unknown_key = 1\n",
    ] {
        let config = write(dir.path(), "bad.toml", text);
        let o = spc_rsma(&["run", "--config", &config]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(!o.stderr.is_empty());
    }
    let o = spc_rsma(&[
        "run",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_scheme_is_a_usage_error() {
    let o = spc_rsma(&["run", "--scheme", "NOMA"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_passes_on_defaults() {
    let o = spc_rsma(&["validate"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
