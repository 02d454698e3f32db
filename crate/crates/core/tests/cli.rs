use std::path::PathBuf;
use std::process::{Command, Output};

fn smanet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smanet"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("smanet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn compare_prints_header_and_three_modes() {
    let text = stdout(&smanet(&["compare", "--scenario", "scenarios/fig5.scn"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("mode,injected,delivered"));
    let modes: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(modes, ["centralized", "manet-backup", "delegated"]);
}

#[test]
fn every_subcommand_is_byte_identical_across_runs() {
    for cmd in ["deploy", "place", "compile", "simulate", "compare"] {
        let args = [cmd, "--scenario", "scenarios/fig5.scn"];
        assert_eq!(stdout(&smanet(&args)), stdout(&smanet(&args)), "{cmd}");
    }
}

#[test]
fn place_runs_on_every_seed_scenario() {
    for i in 1..=5 {
        let path = format!("scenarios/place_s{i}.scn");
        let text = stdout(&smanet(&["place", "--scenario", &path]));
        assert!(text.lines().any(|l| l.starts_with("total,")), "{path}");
        assert!(text.lines().any(|l| l.starts_with("site,")), "{path}");
    }
}

#[test]
fn simulate_writes_csv_and_trace() {
    let out = scratch("sim.csv");
    stdout(&smanet(&["simulate", "--scenario", "scenarios/fig5.scn", "--mode", "centralized", "--out", out.to_str().unwrap()]));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("centralized,"));
    let trace = std::fs::read_to_string(out.with_extension("csv.trace")).unwrap();
    assert!(trace.contains("link-down"));
}

#[test]
fn compile_out_is_csv() {
    let out = scratch("tables.csv");
    stdout(&smanet(&["compile", "--scenario", "scenarios/fig5.scn", "--out", out.to_str().unwrap()]));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("node,priority,src,dst,access,state_link,state,action,next_hop\n"));
}

#[test]
fn errors_exit_nonzero() {
    let missing = smanet(&["compare", "--scenario", "scenarios/does-not-exist.scn"]);
    assert!(!missing.status.success());
    assert!(!missing.stderr.is_empty());
    // fig4 has no link_down event to compare against
    let no_failure = smanet(&["compare", "--scenario", "scenarios/fig4.scn"]);
    assert!(!no_failure.status.success());
    let bad = scratch("bad.scn");
    std::fs::write(&bad, "[nodes]\n1 soldier\n").unwrap();
    let parse = smanet(&["deploy", "--scenario", bad.to_str().unwrap()]);
    assert!(!parse.status.success());
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line 2"));
}
