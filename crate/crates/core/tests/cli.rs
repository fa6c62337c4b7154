use std::fs;
use std::path::Path;
use std::process::Command;

use rue_bai::cli::{cmd_oracle, cmd_plot_data, cmd_run, cmd_theory, GlobalOpts, OracleArgs, PlotArgs, Pivot, TheoryArgs};

fn globals(dir: &Path) -> GlobalOpts {
    GlobalOpts {
        seed: None,
        threads: None,
        output_dir: Some(dir.to_path_buf()),
    }
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

const MINIMAL: &str = "setup = \"F1\"\narms = 10\npolicies = [\"Uniform\"]\nbudgets = [100]\nreplications = 10\nbase_seed = 7\n";

#[test]
fn minimal_config_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = cmd_run(&cfg, &globals(dir.path())).unwrap();
    let text = fs::read_to_string(&out.cells_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with(
        "setup,instance_idx,policy,budget,replications,errors,error_prob,stderr,mean_simple_regret,base_seed"
    ));
    assert!(lines[1].starts_with("F1,0,Uniform,100,10,"));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.meta_path).unwrap()).unwrap();
    assert_eq!(meta["version"], rue_bai::VERSION);
    assert!((meta["instances"][0]["h"].as_f64().unwrap() - 4000.0).abs() < 1e-6);
}

#[test]
fn seed_override_changes_results_only_through_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "setup = \"F1\"\narms = 10\npolicies = [\"Uniform\"]\nbudgets = [100]\nreplications = 200\nbase_seed = 7\n",
    );
    let a = cmd_run(&cfg, &globals(&dir.path().join("a"))).unwrap();
    let mut g = globals(&dir.path().join("b"));
    g.seed = Some(7);
    let b = cmd_run(&cfg, &g).unwrap();
    assert_eq!(fs::read(a.cells_path).unwrap(), fs::read(b.cells_path).unwrap());
    g.seed = Some(8);
    g.output_dir = Some(dir.path().join("c"));
    let c = cmd_run(&cfg, &g).unwrap();
    assert_eq!(c.result.base_seed, 8);
}

#[test]
fn invalid_budget_becomes_skip_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "setup = \"F1\"\narms = 10\npolicies = [\"RUE\", \"Uniform\"]\nbudgets = [15]\nreplications = 3\n",
    );
    let out = cmd_run(&cfg, &globals(dir.path())).unwrap();
    assert!(out.failure.is_none());
    let text = fs::read_to_string(&out.cells_path).unwrap();
    let rue = text.lines().find(|l| l.contains(",RUE,")).unwrap();
    assert!(rue.contains(",0,0,NaN,NaN,NaN,"), "{rue}");
    assert!(rue.contains("budget"));
    let meta = fs::read_to_string(out.meta_path).unwrap();
    assert!(meta.contains("\"skipped\""));
}

#[test]
fn traces_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{MINIMAL}emit_trace = true\n"));
    let out = cmd_run(&cfg, &globals(dir.path())).unwrap();
    let text = fs::read_to_string(out.trace_path.unwrap()).unwrap();
    let row = text.lines().nth(1).unwrap();
    let arms = row.rsplit(',').next().unwrap();
    assert_eq!(arms.split(' ').count(), 100);
    assert!(arms.starts_with("0 1 2 3"));
}

#[test]
fn plot_data_shape_and_pooling() {
    let dir = tempfile::tempdir().unwrap();
    let header = "setup,instance_idx,policy,budget,replications,errors,error_prob,stderr,mean_simple_regret,base_seed,skip_reason\n";
    let f1 = dir.path().join("a.csv");
    let f2 = dir.path().join("b.csv");
    fs::write(&f1, format!("{header}F2,0,RUE,100,10,2,0.2,0,0,1,\nF2,0,SH,100,10,5,0.5,0,0,1,\n")).unwrap();
    fs::write(&f2, format!("{header}F2,0,RUE,100,30,3,0.1,0,0,2,\n")).unwrap();
    let out = dir.path().join("plot.csv");
    cmd_plot_data(
        &PlotArgs {
            cells: vec![f1, f2],
            pivot: Pivot::Budget,
            out: Some(out.clone()),
        },
        &GlobalOpts::default(),
    )
    .unwrap();
    let text = fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "setup,budget,RUE_error_prob,RUE_stderr,SH_error_prob,SH_stderr");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    // (2 + 3) / (10 + 30), weighted by replications.
    assert_eq!(fields[2].parse::<f64>().unwrap(), 0.125);
    let se: f64 = fields[3].parse().unwrap();
    assert!((se - (0.125f64 * 0.875 / 40.0).sqrt()).abs() < 1e-15);
    assert_eq!(fields[4].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn plot_data_three_budgets_four_policies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "setup = \"F2\"\narms = 8\npolicies = [\"RUE\", \"SH\", \"SR\", \"UCBE\"]\nbudgets = [\"H/2\", \"H\", \"2H\"]\nreplications = 5\n",
    );
    let run = cmd_run(&cfg, &globals(dir.path())).unwrap();
    let out = dir.path().join("plot.csv");
    cmd_plot_data(
        &PlotArgs {
            cells: vec![run.cells_path],
            pivot: Pivot::Budget,
            out: Some(out.clone()),
        },
        &GlobalOpts::default(),
    )
    .unwrap();
    let text = fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0].split(',').count(), 2 + 8);
}

#[test]
fn plot_data_rejects_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.csv");
    fs::write(&f, "setup,policy,budget,wins\nF1,RUE,10,3\n").unwrap();
    let err = cmd_plot_data(
        &PlotArgs {
            cells: vec![f],
            pivot: Pivot::Budget,
            out: Some(dir.path().join("o.csv")),
        },
        &GlobalOpts::default(),
    )
    .unwrap_err()
    .to_string();
    assert!(err.contains("instance_idx") && err.contains("wins"), "{err}");
}

#[test]
fn theory_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = TheoryArgs::new(40, vec![1000, 10_000]);
    args.n_range = Some("100:100000:4".into());
    let path = cmd_theory(&args, &globals(dir.path())).unwrap();
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 6);
    let header: Vec<&str> = lines[0].split(',').collect();
    let hb = header.iter().position(|&h| h == "H_b").unwrap();
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[hb].parse::<f64>().unwrap(), 41.0);
    }
}

#[test]
fn oracle_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = OracleArgs {
        arms: 40,
        sigma0: 1.0,
        alphas: vec![0.01, 0.05],
        samples: 100_000,
        out: None,
    };
    let (path, rows) = cmd_oracle(&args, &globals(dir.path())).unwrap();
    assert!(rows.iter().all(|r| r.pass));
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rue-bai");
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), MINIMAL);
    let status = Command::new(bin)
        .args(["run", good.to_str().unwrap(), "--output-dir", dir.path().join("o").to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("o/cells.csv").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "setup = \"F1\"\narms = \n").unwrap();
    let out = Command::new(bin)
        .args(["run", bad.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let status = Command::new(bin)
        .args(["--threads", "2", "oracle", "--arms", "2", "--alphas", "0,0.1", "--samples", "1000"])
        .arg("--output-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
