use std::process::{Command, Output};

fn fibgrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibgrid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn route_prints_both_addresses() {
    let out = fibgrid(&[
        "route", "--tiling", "hepta", "--radius", "7", "--from", "312332", "--to", "2331332",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("forward: ~2~3~5~41332"), "{text}");
    assert!(text.contains("length: 8"), "{text}");
}

#[test]
fn edge_number_route() {
    let out = fibgrid(&[
        "route",
        "--tiling",
        "penta",
        "--radius",
        "8",
        "--system",
        "wang",
        "--seed-side",
        "1",
        "--from",
        "324142",
        "--to",
        "2421413",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("242131413"));
}

#[test]
fn build_writes_a_loadable_ball() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ball.json");
    let out = fibgrid(&[
        "build",
        "--tiling",
        "penta",
        "--radius",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(json["tiling"], "penta");
    // 1 + 5 (1 + 3 + 8)
    assert_eq!(json["tiles"].as_array().unwrap().len(), 61);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"tiling": "hepta", "radius": 3}"#).unwrap();
    let out = fibgrid(&["--config", cfg.to_str().unwrap(), "verify"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("0 failed"));

    std::fs::write(&cfg, r#"{"tiling": "hepta", "radius": 3, "colour": 1}"#).unwrap();
    assert!(!fibgrid(&["--config", cfg.to_str().unwrap(), "verify"])
        .status
        .success());
}

#[test]
fn unicast_cost_is_exact() {
    let out = fibgrid(&[
        "simulate",
        "--tiling",
        "penta",
        "--radius",
        "3",
        "--mode",
        "unicast",
        "--to",
        "312",
        "--payload",
        "10",
        "--rho",
        "1/10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    // 3 (1 + 10/10 + 3/10)
    assert!(
        text.contains("cost: 69/10") && text.contains("latency: 3"),
        "{text}"
    );
}

#[test]
fn simulation_log_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let out = fibgrid(&[
        "simulate",
        "--tiling",
        "hepta",
        "--radius",
        "3",
        "--mode",
        "storm",
        "--k",
        "2",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&log).unwrap();
    assert!(text.lines().count() > 0);
    for line in text.lines() {
        let ev: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(ev.get("tick").is_some() && ev.get("event").is_some());
    }
}

#[test]
fn bad_input_is_reported() {
    let out = fibgrid(&["coord", "9", "--tiling", "penta"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sector"));
}

#[test]
fn render_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("ball.svg");
    let out = fibgrid(&[
        "render",
        "--tiling",
        "penta",
        "--radius",
        "3",
        "--from",
        "1",
        "--to",
        "312",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}
