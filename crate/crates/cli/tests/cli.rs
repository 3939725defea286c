use std::path::Path;
use std::process::{Command, Output};

fn mecsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mecsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, "n_ues = 6\nsim_time_s = 2.0\nwarmup_s = 0.5\nn_sites = 4\narea_width_m = 900.0\narea_height_m = 700.0\n")
        .unwrap();
    path.display().to_string()
}

#[test]
fn batch_writes_tables_and_ledgers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    let o = mecsim(&[
        "--config",
        &cfg,
        "--algo",
        "all",
        "--seeds",
        "2",
        "--trace",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "scenario.toml",
        "run_summary.csv",
        "comparison.csv",
        "runs/comp-ho_seed2/packets.csv",
        "runs/noho_seed1/trace.tsv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("pooled over 2 seed(s)"));
}

#[test]
fn identical_invocations_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = mecsim(&[
            "--config",
            &cfg,
            "--algo",
            "comp-ho",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out.join("runs/comp-ho_seed1/packets.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn sweep_writes_one_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("sweep");
    let o = mecsim(&[
        "--config",
        &cfg,
        "--algo",
        "comp-ho",
        "--sweep",
        "delta=0,8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("sweep_delta.csv").is_file());
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--algo", "fastest"],
        vec!["--mobility", "teleport"],
        vec!["--seeds", "0"],
    ] {
        let out = dir.path().join("x");
        let mut a = args.clone();
        a.extend(["--out", out.to_str().unwrap()]);
        let o = mecsim(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "fps = -3.0\n").unwrap();
    let o = mecsim(&["--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fps"));
}

#[test]
fn sinr_map_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = mecsim(&["--sinr-map", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let rows = std::fs::read_to_string(dir.path().join("sinr_map.csv"))
        .unwrap()
        .lines()
        .count();
    assert!(rows > 1000);
}
