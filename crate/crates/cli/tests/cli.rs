use std::path::{Path, PathBuf};
use std::process::Command as Process;

use proptest::prelude::*;
use willmore_cli::commands::{decompose_mesh, export, spectrum};
use willmore_cli::{Command, RunConfig};
use willmore_core::Scheme;

fn willmore(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_willmore")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn energy_of_the_clifford_torus_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout, _) = willmore(&["energy", "--torus", "sqrt2", "1", "--out", &out_arg(tmp.path(), "a")]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("energy (n = 48): 19.73920880217"), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.trim_start().starts_with("16 ")).count(), 1);

    let (code, stdout, _) = willmore(&["energy", "--torus", "2", "1", "--out", &out_arg(tmp.path(), "b")]);
    assert_eq!(code, 0);
    assert!(stdout.contains("22.7928"), "{stdout}");

    let (code, _, stderr) = willmore(&["energy", "--torus", "1", "2", "--out", &out_arg(tmp.path(), "c")]);
    assert_eq!(code, 2, "{stderr}");
    let (code, _, _) = willmore(&["energy", "--n", "7"]);
    assert_eq!(code, 2);
    let (code, _, _) = willmore(&["flow", "--bogus"]);
    assert_eq!(code, 2);
}

#[test]
fn numerical_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = tmp.path().join("far.obj");
    // no nontrivial graph fits inside a 1e-6 neighborhood bound
    let c = RunConfig { amplitude: 0.0, epsilon: 0.5, seed: 1, ..config(Command::Export, tmp.path(), "far") };
    export(&c).unwrap();
    std::fs::copy(tmp.path().join("far/mesh.obj"), &mesh).unwrap();
    let (code, _, stderr) = willmore(&["decompose", mesh.to_str().unwrap(), "--delta", "1e-6", "--out", &out_arg(tmp.path(), "d")]);
    assert_eq!(code, 3, "{stderr}");
}

#[test]
fn config_file_and_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("flow.json");
    std::fs::write(&cfg, r#"{"command": "flow", "n": 16, "max_steps": 3}"#).unwrap();
    let (code, stdout, _) = willmore(&["flow", "--config", cfg.to_str().unwrap(), "--direction", "1", "--print-config"]);
    assert_eq!(code, 0);
    let c = RunConfig::from_json(&stdout).unwrap();
    assert_eq!((c.n, c.max_steps, c.direction), (16, 3, 1));
    let (code, _, _) = willmore(&["energy", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

fn config(command: Command, dir: &Path, name: &str) -> RunConfig {
    RunConfig { output_dir: dir.join(name), ..RunConfig::for_command(command) }
}

#[test]
fn exported_graph_round_trips_through_decompose() {
    let tmp = tempfile::tempdir().unwrap();
    let c = RunConfig { direction: 1, amplitude: 0.05, ..config(Command::Export, tmp.path(), "mesh") };
    let exported = export(&c).unwrap();
    let d = RunConfig {
        input: Some(tmp.path().join("mesh/mesh.obj")),
        ..config(Command::Decompose, tmp.path(), "decomposed")
    };
    let r = decompose_mesh(&d).unwrap();
    for (a, b) in [(exported.v_norms.c0, r.norms.c0), (exported.v_norms.c2, r.norms.c2), (exported.v_norms.h2, r.norms.h2)] {
        assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
    }
    assert!(r.coefficients.iter().all(|c| c.abs() < 1e-8));
}

#[test]
fn outputs_embed_config_and_repeat_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let c = RunConfig { cutoff: 6, n: 32, ..config(Command::Spectrum, tmp.path(), "s") };
    let r = spectrum(&c).unwrap();
    assert_eq!(r.kernel_dimension, 8);
    assert!(r.lambda > 0.0);
    let read = |name: &str| std::fs::read_to_string(tmp.path().join("s").join(name)).unwrap();
    let (csv, json) = (read("modes.csv"), read("spectrum.json"));
    assert!(csv.starts_with("# format_version: 1\n# config: {"));
    assert!(csv.lines().any(|l| l == "0,0,0,8,8,false"));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",true")).count(), 8);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(RunConfig::from_json(&v["config"].to_string()).unwrap(), c);
    spectrum(&c).unwrap();
    assert_eq!(read("modes.csv"), csv);
    assert_eq!(read("spectrum.json"), json);
}

fn any_command() -> impl Strategy<Value = Command> {
    prop_oneof![
        Just(Command::Energy),
        Just(Command::Spectrum),
        Just(Command::Flow),
        Just(Command::Decompose),
        Just(Command::Export),
        Just(Command::Gapscan),
        Just(Command::Invariance),
        Just(Command::Roundtrip),
    ]
}

proptest! {
    #[test]
    fn config_round_trips_through_json(
        command in any_command(),
        n in 8usize..200,
        radii in (0.1..10.0f64, 0.01..5.0f64),
        seed in any::<u64>(),
        epsilon in 0.0..0.5f64,
        amplitudes in prop::collection::vec(1e-6..0.5f64, 0..5),
        input in prop::option::of("[a-z]{1,8}\\.obj"),
        dt in (1e-14..1e-3f64, 1e-3..1.0f64),
        rk2 in any::<bool>(),
        gauge in any::<bool>(),
    ) {
        let c = RunConfig {
            n,
            major: radii.0,
            minor: radii.1,
            seed,
            epsilon,
            amplitudes,
            input: input.map(PathBuf::from),
            dt_min: dt.0,
            dt_max: dt.1,
            scheme: if rk2 { Scheme::Rk2 } else { Scheme::Stabilized },
            gauge_fixing: gauge,
            ..RunConfig::for_command(command)
        };
        prop_assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }
}
