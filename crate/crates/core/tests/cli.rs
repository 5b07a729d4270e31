use std::path::Path;
use std::process::{Command, Output};

use telco_placement::cli_io::cli_main;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_telco-placement"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const FIG7: &str = r#"{
  "topology": {"primary_count": 3, "secondaries_per_primary": [2, 2, 2]},
  "demand": {
    "clients_primary": [1050000, 1050000, 1050000],
    "clients_secondary": [[641900, 641900], [641900, 641900], [641900, 641900]]
  }
}"#;

const ZERO: &str = r#"{
  "topology": {"primary_count": 1, "secondaries_per_primary": [1]},
  "demand": {"clients_primary": [0], "clients_secondary": [[0]]}
}"#;

const OVER: &str = r#"{
  "topology": {"primary_count": 1, "secondaries_per_primary": [0]},
  "demand": {"clients_primary": [300000], "clients_secondary": [[]]}
}"#;

#[test]
fn scenario_table2_text() {
    let o = run(&["scenario", "--name", "table2", "--params", "effective"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("145989.40"), "{out}");
    assert!(out.contains("147221.40"));
    assert!(out.contains("Difference: 1232.00 USD/h"));
    assert!(out.contains("paper value not reproduced"));
}

#[test]
fn scenario_table3_csv_and_json() {
    let o = run(&["scenario", "--name", "table3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "arm,total_usd_per_h,na,np_total,ns_total,feasible\nS1,142675.60,20938,2400,0,true\nS2,137803.60,20338,2400,600,true\n"
    );
    let o = run(&["scenario", "--name", "table3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["delta_cents"], 487_200.0);
    assert_eq!(
        v["comparison"]["arms"][1]["placement"]["total_cost"],
        13_780_360.0
    );
}

#[test]
fn scenario_figure8_csv_range() {
    let o = run(&[
        "scenario", "--name", "figure8", "--from", "240000", "--to", "300000", "--step", "60000",
        "--format", "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.contains("240000,no_cloud,48.00,0,800,0,true\n"),
        "{out}"
    );
    assert!(out.contains("300000,hybrid,968.00,200,800,0,true\n"));
    assert!(out.contains("300000,cloud_only,4600.00,1000,0,0,true\n"));
    assert!(out.contains("300000,no_cloud,,0,0,0,false\n"));
}

#[test]
fn scenario_redirect_sweep_reports_layout() {
    let o = run(&[
        "scenario",
        "--name",
        "redirect-sweep",
        "--from",
        "29000",
        "--to",
        "31000",
        "--step",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("Layout: "));
    assert!(out.contains("infeasible"));
    assert!(out.contains("Max relative saving: "));
}

#[test]
fn solve_zero_demand_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "zero.json", ZERO);
    let out = dir.path().join("report.json");
    let o = run(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["total_usd_per_h"], "0.00");
    assert_eq!(v["params"], "effective");
    assert_eq!(v["instance_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn solve_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig7.json", FIG7);
    let text = stdout(&run(&["solve", "--config", &cfg, "--format", "text"]));
    assert!(text.starts_with("Total cost: 137803.60 USD/h\n"), "{text}");
    let csv = stdout(&run(&["solve", "--config", &cfg, "--format", "csv"]));
    assert!(csv.starts_with("name,value\nna,20338\n"));
    assert!(csv.ends_with("total_usd_per_h,137803.60\n"));
    let json: serde_json::Value =
        serde_json::from_slice(&run(&["solve", "--config", &cfg]).stdout).unwrap();
    let b = &json["breakdown"];
    let sum: f64 = ["a", "b", "c", "d", "e", "f"]
        .iter()
        .map(|k| b[k].as_f64().unwrap())
        .sum();
    assert!((sum - json["total_cents"].as_f64().unwrap()).abs() < 1e-6);

    let s1 = stdout(&run(&[
        "solve",
        "--config",
        &cfg,
        "--variant",
        "no-secondary",
        "--format",
        "text",
    ]));
    assert!(s1.starts_with("Total cost: 142675.60 USD/h\n"), "{s1}");
    let t1 = stdout(&run(&[
        "solve", "--config", &cfg, "--params", "table1", "--format", "text",
    ]));
    assert!(!t1.starts_with("Total cost: 137803.60"));
}

#[test]
fn infeasible_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "over.json", OVER);
    let o = run(&["solve", "--config", &cfg, "--variant", "no-cloud"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
    let o = run(&[
        "solve",
        "--config",
        &cfg,
        "--variant",
        "no-cloud,no-redirect",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--nope"]).status.code(), Some(1));
    assert_eq!(
        run(&["solve", "--config", "/does/not/exist.json"])
            .status
            .code(),
        Some(1)
    );
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"topology": {"primary_count": 2, "secondaries_per_primary": [1]}, "demand": {"clients_primary": [1], "clients_secondary": [[1]]}}"#,
    );
    let o = run(&["solve", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid instance"));
    let cfg = write(dir.path(), "zero.json", ZERO);
    assert_eq!(
        run(&[
            "solve",
            "--config",
            &cfg,
            "--variant",
            "no-cloud,cloud-only"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        run(&["solve", "--config", &cfg, "--variant", "sideways"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["scenario", "--name", "figure8", "--step", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig7.json", FIG7);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (format, golden_name) in [
        ("ampl-mod", "fig7_equal.mod"),
        ("ampl-dat", "fig7_equal.dat"),
    ] {
        let out = dir.path().join(golden_name);
        let o = run(&[
            "export",
            "--config",
            &cfg,
            "--format",
            format,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(
            std::fs::read(&out).unwrap(),
            std::fs::read(golden.join(golden_name)).unwrap()
        );
    }
    let lp = stdout(&run(&["export", "--config", &cfg, "--format", "lp"]));
    let parsed = telco_placement::cli_io::parse_lp(&lp).unwrap();
    assert_eq!(parsed.variables.len(), 28);
}

#[test]
fn simulate_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "one.json",
        r#"{"topology": {"primary_count": 1, "secondaries_per_primary": [0]}, "sim": {"deploy_latency": 120}}"#,
    );
    let trace = write(
        dir.path(),
        "trace.csv",
        "time_s,site,clients\n0,p1,0\n600,p1,300000\n1800,p1,0\n",
    );
    let out = dir.path().join("sim.json");
    let o = run(&[
        "simulate",
        "--trace",
        &trace,
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["unserved_client_seconds"], 300_000 * 120);
    assert!(v["decisions"]
        .as_array()
        .unwrap()
        .iter()
        .any(|d| d["site"] == "cloud"));
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.starts_with("start_s,end_s,demand,served,unserved,cost_usd_per_h\n"));

    let bad = write(
        dir.path(),
        "bad.csv",
        "time_s,site,clients\n60,p1,1\n0,p1,2\n",
    );
    assert_eq!(
        run(&["simulate", "--trace", &bad, "--config", &cfg])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn cli_main_in_process() {
    assert_eq!(
        cli_main([
            "telco-placement",
            "scenario",
            "--name",
            "table2",
            "--out",
            "/nonexistent/dir/x"
        ]),
        1
    );
    assert_eq!(cli_main(["telco-placement"]), 1);
}
