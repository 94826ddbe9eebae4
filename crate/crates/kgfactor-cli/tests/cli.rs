//! Process-level checks of the binary: exit codes, overrides, and
//! determinism across worker counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kgfactor_cli::output::read_series_csv;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..").join("configs")
}

fn kgfactor(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kgfactor"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary spawns")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn missing_config_exits_2() {
    let out = kgfactor(&["simulate", "--config", "/nonexistent/nowhere.json"], &[]);
    assert_eq!(exit_code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read config"));
}

#[test]
fn unknown_config_field_exits_2() {
    let cfg = configs_dir().join("kg_free.json");
    let out = kgfactor(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--override",
            "grd.n=64",
        ],
        &[],
    );
    assert_eq!(exit_code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unstable_step_exits_2() {
    let cfg = configs_dir().join("kg_free.json");
    let out = kgfactor(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--override",
            "step=0.5",
        ],
        &[],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("stability"));
}

#[test]
fn overflowing_amplitude_exits_3() {
    let cfg = configs_dir().join("kg_free.json");
    let out = kgfactor(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--override",
            "packet.amplitude=1e308",
            "--override",
            "packet.scale=peak",
        ],
        &[],
    );
    assert_eq!(exit_code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn enforced_validity_breach_exits_4() {
    let cfg = configs_dir().join("pair_m_well.json");
    let out = kgfactor(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--enforce-validity",
        ],
        &[],
    );
    assert_eq!(exit_code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("validity threshold breached"));
}

#[test]
fn dispersion_rejects_pair_solvers_with_exit_2() {
    let cfg = configs_dir().join("pair_m_well.json");
    let out = kgfactor(
        &[
            "dispersion",
            "--config",
            cfg.to_str().unwrap(),
            "--override",
            "duration=0.05",
        ],
        &[],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn invalid_thread_cap_exits_2() {
    let cfg = configs_dir().join("resonance_pair_m.json");
    let out = kgfactor(
        &[
            "resonance",
            "--config",
            cfg.to_str().unwrap(),
            "--frequencies",
            "1.9,2.1",
        ],
        &[("KGFACTOR_THREADS", "zero")],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("KGFACTOR_THREADS"));
}

#[test]
fn overrides_change_the_recorded_run() {
    let cfg = configs_dir().join("kg_free.json");
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("short");
    let out = kgfactor(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--override",
            "duration=0.4",
            "--override",
            "output_cadence=1",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (names, rows) = read_series_csv(&out_dir.join("series.csv")).unwrap();
    assert_eq!(names, ["norm", "energy", "light_cone_mass"]);
    assert_eq!(rows.len(), 21, "0.4 / 0.02 steps plus the initial sample");
    assert_eq!(rows.last().unwrap().step, 20);
}

#[test]
fn scan_bytes_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("scan_base.json");
    fs::write(
        &cfg_path,
        serde_json::json!({
            "solver": "pair_m",
            "grid": {"n": 128, "length": 64.0},
            "packet": {"center": 32.0, "width": 4.0, "carrier": 0.2},
            "init": "equal_pair",
            "duration": 0.2,
            "step": 0.01,
            "output_cadence": 20
        })
        .to_string(),
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (threads, dir) in [("1", "serial"), ("4", "parallel")] {
        let out_dir = tmp.path().join(dir);
        let out = kgfactor(
            &[
                "scan",
                "--config",
                cfg_path.to_str().unwrap(),
                "--param",
                "packet.carrier",
                "--values",
                "0.2,0.3,0.4",
                "--metric",
                "validity_ratio",
                "--out",
                out_dir.to_str().unwrap(),
            ],
            &[("KGFACTOR_THREADS", threads)],
        );
        assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        // Drop the trailing "wrote <dir>" line: the directories differ.
        let stdout = String::from_utf8(out.stdout).unwrap();
        let rows: Vec<&str> = stdout.lines().filter(|l| !l.starts_with("wrote ")).collect();
        outputs.push((fs::read(out_dir.join("scan.csv")).unwrap(), rows.join("\n")));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "scan.csv differs across worker counts");
    assert_eq!(outputs[0].1, outputs[1].1, "stdout differs across worker counts");
}

#[test]
fn compare_command_writes_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("cmp");
    let a = configs_dir().join("pair_m_well.json");
    let b = configs_dir().join("kg_well.json");
    let out = kgfactor(
        &[
            "compare",
            "--config",
            a.to_str().unwrap(),
            "--config-b",
            b.to_str().unwrap(),
            "--override",
            "duration=1.0",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (names, rows) = read_series_csv(&out_dir.join("compare.csv")).unwrap();
    assert_eq!(names, ["l2_error"]);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.values[0] < 1e-10));
}
