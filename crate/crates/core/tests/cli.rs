use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn colorsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorsim"))
        .args(args)
        .env_remove("COLORSIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .collect()
}

/// The single result row printed by `run`, as `header -> value` lookups.
fn run_row(o: &Output) -> Vec<(String, String)> {
    let text = stdout(o);
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 2, "{text}");
    lines[0]
        .split(',')
        .zip(lines[1].split(','))
        .map(|(h, v)| (h.to_string(), v.to_string()))
        .collect()
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(h, _)| h == name).unwrap().1
}

#[test]
fn gen_edge_lists() {
    let o = colorsim(&["gen", "--family", "complete", "--n", "4"]);
    assert!(o.status.success());
    assert_eq!(data_lines(&stdout(&o)).len(), 6);

    let o = colorsim(&["gen", "--family", "bipartite", "--a", "3", "--b", "5"]);
    assert_eq!(data_lines(&stdout(&o)).len(), 15);

    let o = colorsim(&[
        "gen", "--family", "er", "--n", "10", "--p", "0", "--seed", "1",
    ]);
    let text = stdout(&o);
    assert!(data_lines(&text).is_empty());
    assert!(text.contains("# vertices: 10"));
}

#[test]
fn gen_to_file_reports_sizes_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let o = colorsim(&[
        "gen",
        "--family",
        "cliques",
        "--count",
        "3",
        "--size",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "n=12 m=18 delta=3");
    let g = colorsim::Graph::from_edge_list(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!((g.n(), g.m()), (12, 18));

    let o = colorsim(&[
        "gen",
        "--family",
        "complete",
        "--n",
        "3",
        "--out",
        "/nonexistent/dir/g.txt",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot write"));
}

#[test]
fn run_exit_codes() {
    let o = colorsim(&[
        "run",
        "--family",
        "complete",
        "--n",
        "8",
        "--variant",
        "uniform",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let row = run_row(&o);
    assert_eq!(field(&row, "terminated"), "true");
    assert!(field(&row, "steps").parse::<u64>().unwrap() > 0);

    let o = colorsim(&["run", "--family", "er", "--n", "10", "--p", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&run_row(&o), "steps"), "0");

    let o = colorsim(&[
        "run",
        "--variant",
        "parallel",
        "--family",
        "complete",
        "--n",
        "30",
        "--cap",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(field(&run_row(&o), "terminated"), "false");

    let o = colorsim(&[
        "run",
        "--family",
        "complete",
        "--n",
        "5",
        "--variant",
        "sideways",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = colorsim(&["run", "--family", "complete"]);
    assert_eq!(o.status.code(), Some(1));
    let o = colorsim(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = colorsim(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn persistent_below_full_palette_stalls_with_cap_exit() {
    let o = colorsim(&[
        "run",
        "--family",
        "complete",
        "--n",
        "4",
        "--k",
        "3",
        "--variant",
        "persistent",
        "--draw-cap",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_output_is_reproducible_and_documented() {
    let args = ["run", "--family", "cycle", "--n", "40", "--seed", "9"];
    let a = colorsim(&args);
    let b = colorsim(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# tool: colorsim"));
    assert!(text.contains("\"master_seed\":9"));
    assert!(text.contains("# step_unit: recolorings"));
}

#[test]
fn run_trace_and_init_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.txt");
    fs::write(&graph, "0 1\n1 2\n").unwrap();
    let init = dir.path().join("colors.txt");
    fs::write(&init, "1 1 2\n").unwrap();
    let trace = dir.path().join("trace.jsonl");
    let o = colorsim(&[
        "run",
        "--family",
        "file",
        "--graph",
        graph.to_str().unwrap(),
        "--k",
        "3",
        "--init",
        "file",
        "--init-file",
        init.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let row = run_row(&o);
    assert_eq!(field(&row, "initial_phi_num"), "221");
    let steps: usize = field(&row, "steps").parse().unwrap();
    let lines: Vec<String> = fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    // meta line, initial record, one record per step
    assert_eq!(lines.len(), steps + 2);
    assert!(lines[0].starts_with("{\"meta\""));
    let first: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    assert_eq!(first["t"], 0);
    assert_eq!(first["phi_num"], 221);
}

#[test]
fn config_file_wins_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "variant = \"uniform\"\nmaster_seed = 3\n[family]\nkind = \"complete\"\nn = 6\n",
    )
    .unwrap();
    let o = colorsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--family",
        "complete",
        "--n",
        "9",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert_eq!(field(&run_row(&o), "n"), "6");
}

const SWEEP: &str = r#"
master_seed = 5
seeds = 40
fit = "n_ln_n"

[[families]]
kind = "complete"
n = [8, 16, 32, 64]
"#;

fn sweep(config: &Path, out: &Path, workers: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorsim"))
        .args([
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .env("COLORSIM_WORKERS", workers)
        .output()
        .unwrap()
}

#[test]
fn sweep_fit_columns_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, SWEEP).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(sweep(&cfg, &a, "1").status.success());
    assert!(sweep(&cfg, &b, "3").status.success());
    for file in ["runs.csv", "aggregate.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }

    let agg = fs::read_to_string(a.join("aggregate.csv")).unwrap();
    let rows = data_lines(&agg);
    assert_eq!(rows.len(), 5);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for row in &rows[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[col("fit_model")], "n_ln_n");
        assert!(cells[col("fit_coefficient")].parse::<f64>().unwrap() > 0.0);
        assert!(cells[col("fit_r_squared")].parse::<f64>().unwrap() <= 1.0);
        assert_eq!(cells[col("status")], "ok");
    }
    let runs = fs::read_to_string(a.join("runs.csv")).unwrap();
    assert_eq!(data_lines(&runs).len(), 1 + 4 * 40);
    assert!(runs.contains("# master_seed: 5"));
}

#[test]
fn empty_sweep_writes_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "").unwrap();
    let out = dir.path().join("out");
    assert!(sweep(&cfg, &out, "2").status.success());
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let rows = data_lines(&agg);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("config_id,family"));
}

#[test]
fn sweep_rejects_unreadable_config() {
    let o = colorsim(&["sweep", "--config", "/nonexistent.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn audit_exit_codes() {
    let o = colorsim(&[
        "audit",
        "--instances",
        "300",
        "--max-n",
        "30",
        "--seed",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    let lines: Vec<&str> = report.lines().collect();
    assert!(lines[0].starts_with("{\"meta\""));
    assert!(lines.len() > 300);
    let entry: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert!(entry["state_digest"].as_str().unwrap().len() == 64);

    let again = colorsim(&[
        "audit",
        "--instances",
        "300",
        "--max-n",
        "30",
        "--seed",
        "2",
    ]);
    assert_eq!(o.stdout, again.stdout);

    let o = colorsim(&["audit", "--instances", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);

    let o = colorsim(&["audit", "--instances", "40", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("state_digest"));

    let o = colorsim(&["audit", "--max-n", "100000"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn default_audit_passes() {
    let o = colorsim(&["audit"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("violations=0"));
}

#[test]
fn compare_adversarial_table() {
    let o = colorsim(&[
        "compare",
        "--family",
        "cliques",
        "--count",
        "4",
        "--size",
        "5",
        "--adversarial",
        "--seeds",
        "30",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains(",uniform,ones,30,"));
    assert!(rows[2].contains(",persistent,ones,30,"));
    assert!(rows[1].ends_with(",1"));
}
