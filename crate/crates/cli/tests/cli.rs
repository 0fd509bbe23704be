use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mdf_cli::commands::SWEEP_HEADER;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn mdf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL_MDF: &str = r#"
[model]
kind = "mdf"
lambda = 0.05
population = 40
mu = 1.0
slot = 0.05
sizes = [1, 2, 4]
probs = [0.5, 0.3, 0.2]

[policy]
alpha = 1.0
capacity = 7
epsilon = 0.05

[run]
seed = 3
slots = 20000
replications = 3
grid = "4:10:2"
with_simulation = true
"#;

#[test]
fn plan_with_unit_target_prints_largest_packet() {
    let x2 = scenarios().join("x2.toml");
    let o = mdf(&[
        "plan",
        "--scenario",
        x2.to_str().unwrap(),
        "--epsilon",
        "1.0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "C = 11\n");
}

#[test]
fn sweep_csv_has_the_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", SMALL_MDF);
    let o = mdf(&["sweep", "--scenario", &s]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    assert_eq!(
        SWEEP_HEADER,
        "C,blocking_emlm,blocking_mdf,blocking_sim_mean,blocking_sim_ci95_lo,blocking_sim_ci95_hi"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows.iter().map(|r| r[0] as u32).collect::<Vec<_>>(),
        vec![4, 6, 8, 10]
    );
    for r in &rows {
        assert!(r[1..].iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(r[4] <= r[3] && r[3] <= r[5]);
    }
    assert!(rows
        .windows(2)
        .all(|w| w[1][1] <= w[0][1] && w[1][2] <= w[0][2]));
}

#[test]
fn grid_flag_and_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.toml",
        &SMALL_MDF.replace("with_simulation = true", ""),
    );
    let o = mdf(&["sweep", "--scenario", &s, "--grid", "5:6:1"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("5,"));
    assert!(text.lines().nth(1).unwrap().ends_with(",,,"));

    let empty = write(
        dir.path(),
        "e.toml",
        &SMALL_MDF.replace("grid = \"4:10:2\"", "grid = []"),
    );
    let o = mdf(&["sweep", "--scenario", &empty]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), format!("{SWEEP_HEADER}\n"));
}

#[test]
fn json_sweep_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.toml",
        &SMALL_MDF.replace("with_simulation = true", ""),
    );
    let out = dir.path().join("sweep.json");
    let o = mdf(&[
        "sweep",
        "--scenario",
        &s,
        "--format",
        "json",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<mdf_erlang::planner::SweepRow> =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.blocking_sim_mean.is_none()));
    let at_8 = write(
        dir.path(),
        "s8.toml",
        &SMALL_MDF.replace("capacity = 7", "capacity = 8"),
    );
    let o = mdf(&["mdf-blocking", "--scenario", &at_8]);
    let direct: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    let row = rows.iter().find(|r| r.capacity == 8).unwrap();
    assert_eq!(row.blocking_mdf_consistent, Some(direct));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", SMALL_MDF);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = mdf(&[
            "simulate",
            "--scenario",
            &s,
            "--seed",
            "7",
            "--format",
            "json",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let other = dir.path().join("c.json");
    mdf(&[
        "simulate",
        "--scenario",
        &s,
        "--seed",
        "8",
        "--format",
        "json",
        "--output",
        other.to_str().unwrap(),
    ]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&other).unwrap());
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_probs = write(
        dir.path(),
        "p.toml",
        &SMALL_MDF.replace("0.3, 0.2]", "0.3, 0.9]"),
    );
    let o = mdf(&["mdf-blocking", "--scenario", &bad_probs]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("p.toml:2:"), "{err}");

    let unknown = write(
        dir.path(),
        "u.toml",
        &SMALL_MDF.replace("seed = 3", "seed = 3\nsede = 4"),
    );
    let o = mdf(&["simulate", "--scenario", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("u.toml:18:"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let ok = write(dir.path(), "ok.toml", SMALL_MDF);
    assert_eq!(
        mdf(&["plan", "--scenario", &ok, "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mdf(&["plan", "--scenario", &ok, "--mode", "exact"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mdf(&["plan", "--scenario", &ok, "--grid", "1:2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(mdf(&["plan"]).status.code(), Some(2));
    assert_eq!(
        mdf(&["frobnicate", "--scenario", &ok]).status.code(),
        Some(2)
    );
    assert_eq!(
        mdf(&["timevar-blocking", "--scenario", &ok]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        mdf(&["plan", "--scenario", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn infeasible_and_unstable_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let delay = "[model]\nkind = \"delay\"\nincrement = [0.25, 0.25, 0.5]\n\n[policy]\nkind = \"delay\"\ncapacity = 1\nepsilon = 0.01\n";
    let s = write(dir.path(), "d.toml", delay);
    let o = mdf(&["delay-blocking", "--scenario", &s]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unstable"));

    let sim = scenarios().join("delay_sim.toml");
    let text = std::fs::read_to_string(&sim)
        .unwrap()
        .replace("capacity = 3", "capacity = 1")
        .replace("slots = 200000", "slots = 20000");
    let s = write(dir.path(), "ds.toml", &text);
    let out = dir.path().join("r.csv");
    let o = mdf(&[
        "simulate",
        "--scenario",
        &s,
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(std::fs::read_to_string(&out).unwrap().contains(",true"));

    let unreachable = write(
        dir.path(),
        "i.toml",
        &SMALL_MDF.replace("epsilon = 0.05", "epsilon = 1e-300"),
    );
    let o = mdf(&["plan", "--scenario", &unreachable]);
    assert_eq!(o.status.code(), Some(1));

    let out = dir.path().join("no/such/dir/r.csv");
    let ok = write(dir.path(), "ok.toml", SMALL_MDF);
    assert_eq!(
        mdf(&[
            "mdf-blocking",
            "--scenario",
            &ok,
            "--output",
            out.to_str().unwrap()
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn every_bundled_scenario_loads() {
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        let scenario = mdf_cli::scenario::Scenario::load(&path, &Default::default());
        assert!(scenario.is_ok(), "{}: {:?}", path.display(), scenario.err());
    }
}

#[test]
fn corrected_four_size_law_is_documented() {
    let text = std::fs::read_to_string(scenarios().join("x1.toml")).unwrap();
    assert!(text.contains("1.40"));
    assert!(text.contains("probs = [0.45, 0.35, 0.15, 0.05]"));
}

#[test]
fn analytic_commands_agree_with_the_library() {
    let timevar = scenarios().join("timevar.toml");
    let o = mdf(&[
        "timevar-blocking",
        "--scenario",
        timevar.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["blocking"].as_f64().unwrap() <= v["nontolerance_blocking"].as_f64().unwrap());

    let delay = scenarios().join("delay.toml");
    let o = mdf(&["delay-blocking", "--scenario", delay.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let b: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    let inc = mdf_erlang::compound_poisson_pmf(
        1.0,
        &mdf_erlang::RequirementDistribution::point(1).unwrap(),
        1e-12,
    )
    .unwrap();
    let params = mdf_erlang::DelayChainParams {
        increment: inc,
        capacity: 3,
        alpha: 1.0,
    };
    let expected = mdf_erlang::delay_blocking(&params, 1e-12, 200_000).unwrap();
    assert!((b - expected).abs() <= expected * 1e-11);

    let x2 = scenarios().join("x2.toml");
    let o = mdf(&["convergence", "--scenario", x2.to_str().unwrap()]);
    let deltas: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(deltas.len(), 3);
    assert!(deltas.windows(2).all(|w| w[1] < w[0]));
}
