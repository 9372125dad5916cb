use std::path::Path;
use std::process::Command;

fn nvw(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nvw")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn defaults_round_trip_through_config() {
    let dir = tempfile::tempdir().unwrap();
    for name in nvw::cli::SCENARIOS {
        let (code, text, err) = nvw(&["defaults", "--scenario", name]);
        assert_eq!(code, 0, "{err}");
        let cfg: nvw::cli::RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.scenario, nvw::cli::default_scenario(name).unwrap());
        let path = dir.path().join(format!("{name}.toml"));
        std::fs::write(&path, &text).unwrap();
        let back = nvw::cli::load_config(&nvw::cli::Common {
            config: Some(path),
            scenario: None,
            out: None,
            format: None,
            grid_step: None,
            box_depth: None,
            times: None,
        })
        .unwrap();
        assert_eq!(back.scenario, cfg.scenario);
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let (code, _, err) = nvw(&[
            "simulate",
            "--scenario",
            "linear",
            "--grid-step",
            "0.015625",
            "--times",
            "0,0.25",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    for f in [
        "slice_000.json",
        "slice_001.json",
        "energy.json",
        "events.json",
        "field_summary.json",
    ] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let e: serde_json::Value = serde_json::from_str(&read(&a.join("energy.json"))).unwrap();
    assert_eq!(e["passed"], serde_json::Value::Bool(true), "{e}");
}

#[test]
fn csv_output_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let (code, _, err) = nvw(&[
        "predict",
        "--scenario",
        "spike",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = read(&out.join("predictions.csv"));
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let hdr = rd.headers().unwrap().clone();
    let col = |n: &str| hdr.iter().position(|h| h == n).unwrap();
    let applicable = rd
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[col("applicable")] == "true")
        .count();
    assert!(applicable >= 1);
}

#[test]
fn check_linear_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = nvw(&[
        "check",
        "--scenario",
        "linear",
        "--grid-step",
        "0.0078125",
        "--times",
        "0,0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(nvw(&["defaults", "--scenario", "nope"]).0, nvw::cli::EXIT_CONFIG);
    assert_eq!(
        nvw(&["simulate", "--scenario", "linear", "--grid-step", "-1"]).0,
        nvw::cli::EXIT_CONFIG
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "h = \"x\"\n").unwrap();
    assert_eq!(
        nvw(&["simulate", "--config", bad.to_str().unwrap()]).0,
        nvw::cli::EXIT_CONFIG
    );
    assert_ne!(nvw(&["frobnicate"]).0, 0);
}
