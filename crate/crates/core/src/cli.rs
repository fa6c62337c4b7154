//! Command-line front end: `run`, `theory`, `oracle` and `plot-data`.
//!
//! Exit status is 0 on success, 1 for configuration or I/O problems and 2
//! when a cell failed while running.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{NoiseSpec, PriorSpec, RewardKind};
use crate::experiments::{
    binomial_stderr, derive_seed, gap_oracle, run_on_instances, setup_instances, BudgetSpec, Execution,
    ExperimentResult, PolicySpec, SetupName, SetupSpec, DEFAULT_RANDOM_DRAWS,
};
use crate::theory::{
    bayes_constants, c_k, full_info_error_exact, full_info_error_lower, gap_probability_bound, small_gap_threshold,
    small_gap_threshold_lower, theorem2_bound, theorem3_bound, tuned_noise, ucbe_upper_bound,
};

/// Column layout of `cells.csv`.
pub const CELLS_HEADER: [&str; 11] = [
    "setup",
    "instance_idx",
    "policy",
    "budget",
    "replications",
    "errors",
    "error_prob",
    "stderr",
    "mean_simple_regret",
    "base_seed",
    "skip_reason",
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("cell failure: {0}")]
    Cell(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Cell(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rue-bai", version, about = "Fixed-budget best-arm identification experiments")]
pub struct Cli {
    /// Overrides the base seed of a run, or seeds the oracle.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment described by a TOML config file.
    Run { config: PathBuf },
    /// Tabulate the theoretical bounds over a range of budgets.
    Theory(TheoryArgs),
    /// Monte Carlo check of the top-two gap probability bound.
    Oracle(OracleArgs),
    /// Pool cells files into one row per (setup, budget) with a column pair per policy.
    PlotData(PlotArgs),
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct GlobalOpts {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

pub fn main_from_env() -> i32 {
    let cli = Cli::parse();
    let globals = GlobalOpts {
        seed: cli.seed,
        threads: cli.threads,
        output_dir: cli.output_dir,
    };
    let res = match cli.command {
        Command::Run { config } => cmd_run(&config, &globals).and_then(|o| match o.failure {
            Some(msg) => Err(CliError::Cell(msg)),
            None => {
                println!("wrote {}", o.cells_path.display());
                Ok(())
            }
        }),
        Command::Theory(args) => cmd_theory(&args, &globals).map(|p| println!("wrote {}", p.display())),
        Command::Oracle(args) => cmd_oracle(&args, &globals).map(|(p, _)| println!("wrote {}", p.display())),
        Command::PlotData(args) => cmd_plot_data(&args, &globals).map(|p| println!("wrote {}", p.display())),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rue-bai: {e}");
            e.exit_code()
        }
    }
}

/// Fixed 17-significant-digit rendering used in every CSV.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn out_dir(globals: &GlobalOpts) -> PathBuf {
    globals.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

// ---------------------------------------------------------------- run

/// Budget entry of a config: an integer or one of `"H/2"`, `"H"`, `"2H"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetToken {
    Absolute(u64),
    Symbolic(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceModeName {
    #[default]
    Estimated,
    Known,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub setup: String,
    pub arms: Option<usize>,
    pub means: Option<Vec<f64>>,
    pub reward: Option<String>,
    pub reward_variance: Option<f64>,
    pub instance_draws: Option<usize>,
    pub policies: Vec<String>,
    pub budgets: Vec<BudgetToken>,
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub variance_mode: VarianceModeName,
    pub prior_variance: Option<f64>,
    pub noise_variance: Option<f64>,
    pub ucbe_scale: Option<f64>,
    pub ucbe_a: Option<f64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_trace: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn cfg_err(field: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("field `{field}`: {msg}"))
    }

    pub fn setup_spec(&self) -> CliResult<SetupSpec> {
        let name = SetupName::parse(&self.setup).map_err(|e| Self::cfg_err("setup", e))?;
        if name == SetupName::Custom {
            let means = self
                .means
                .clone()
                .ok_or_else(|| Self::cfg_err("means", "required for the Custom setup"))?;
            let reward = match self.reward.as_deref().unwrap_or("bernoulli") {
                "bernoulli" => RewardKind::Bernoulli,
                "gaussian" => RewardKind::Gaussian {
                    sigma_sq: self.reward_variance.unwrap_or(1.0),
                },
                other => return Err(Self::cfg_err("reward", format!("unknown reward family `{other}`"))),
            };
            return Ok(SetupSpec::custom(means, reward));
        }
        if self.means.is_some() || self.reward.is_some() || self.reward_variance.is_some() {
            return Err(Self::cfg_err("means", "only the Custom setup takes means or a reward family"));
        }
        let arms = self
            .arms
            .ok_or_else(|| Self::cfg_err("arms", "required for named setups"))?;
        let mut spec = SetupSpec::fixed(name, arms);
        if name.is_random() {
            spec.instance_draws = self.instance_draws.unwrap_or(DEFAULT_RANDOM_DRAWS);
        } else if self.instance_draws.is_some_and(|d| d != 1) {
            return Err(Self::cfg_err("instance_draws", "fixed setups have exactly one instance"));
        }
        Ok(spec)
    }

    fn known_variances(&self) -> CliResult<(PriorSpec<f64>, NoiseSpec<f64>)> {
        let s0 = self
            .prior_variance
            .ok_or_else(|| Self::cfg_err("prior_variance", "required for known-variance RUE"))?;
        let s = self
            .noise_variance
            .ok_or_else(|| Self::cfg_err("noise_variance", "required for known-variance RUE"))?;
        let prior = PriorSpec::new(0.0, s0).map_err(|e| Self::cfg_err("prior_variance", e))?;
        let noise = NoiseSpec::exact(s).map_err(|e| Self::cfg_err("noise_variance", e))?;
        Ok((prior, noise))
    }

    pub fn policy_specs(&self) -> CliResult<Vec<PolicySpec>> {
        if self.policies.is_empty() {
            return Err(Self::cfg_err("policies", "list is empty"));
        }
        if self.ucbe_a.is_some() && self.ucbe_scale.is_some() {
            return Err(Self::cfg_err("ucbe_a", "give either ucbe_a or ucbe_scale, not both"));
        }
        let specs = self
            .policies
            .iter()
            .map(|p| {
                Ok(match p.to_ascii_uppercase().as_str() {
                    "RUE" if self.variance_mode == VarianceModeName::Known => {
                        let (prior, noise) = self.known_variances()?;
                        PolicySpec::RueKnown { prior, noise }
                    }
                    "RUE" => PolicySpec::Rue,
                    "RUE-KNOWN" => {
                        let (prior, noise) = self.known_variances()?;
                        PolicySpec::RueKnown { prior, noise }
                    }
                    "UCBE" => match self.ucbe_a {
                        Some(a) => PolicySpec::UcbeFixed { a },
                        None => PolicySpec::UcbeOracle {
                            scale: self.ucbe_scale.unwrap_or(2.0),
                        },
                    },
                    "SR" => PolicySpec::SuccessiveRejects,
                    "SH" => PolicySpec::SequentialHalving,
                    "UNIFORM" => PolicySpec::Uniform,
                    _ => return Err(Self::cfg_err("policies", format!("unknown policy `{p}`"))),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut labels: Vec<&str> = specs.iter().map(|s| s.label()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Self::cfg_err("policies", format!("`{}` listed twice", w[0])));
        }
        Ok(specs)
    }

    pub fn budget_specs(&self) -> CliResult<Vec<BudgetSpec>> {
        if self.budgets.is_empty() {
            return Err(Self::cfg_err("budgets", "list is empty"));
        }
        self.budgets
            .iter()
            .map(|b| match b {
                BudgetToken::Absolute(n) => Ok(BudgetSpec::Absolute(*n as usize)),
                BudgetToken::Symbolic(s) => BudgetSpec::parse(s).map_err(|e| Self::cfg_err("budgets", e)),
            })
            .collect()
    }
}

#[derive(Debug, Serialize)]
struct MetaInstance {
    instance_idx: usize,
    best_arm: usize,
    h: Option<f64>,
    budgets: BTreeMap<String, Option<usize>>,
    means: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct MetaSkip {
    instance_idx: usize,
    policy: String,
    budget: String,
    reason: String,
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    version: &'static str,
    config: &'a RunConfig,
    seed_derivation: &'static str,
    instances: Vec<MetaInstance>,
    skipped: Vec<MetaSkip>,
}

/// Files written by [`cmd_run`] and the in-memory result.
#[derive(Debug)]
pub struct RunOutcome {
    pub cells_path: PathBuf,
    pub meta_path: PathBuf,
    pub trace_path: Option<PathBuf>,
    pub result: ExperimentResult,
    /// Set when a cell crashed; the caller should exit with status 2.
    pub failure: Option<String>,
}

/// Loads a config, applies command-line overrides and runs it.
pub fn cmd_run(config_path: &Path, globals: &GlobalOpts) -> CliResult<RunOutcome> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = globals.seed {
        config.base_seed = seed;
    }
    if let Some(dir) = &globals.output_dir {
        config.output_dir = Some(dir.clone());
    }
    run_config(&config, globals.threads)
}

/// Runs an already parsed config.
pub fn run_config(config: &RunConfig, threads: Option<usize>) -> CliResult<RunOutcome> {
    let setup = config.setup_spec()?;
    let policies = config.policy_specs()?;
    let budgets = config.budget_specs()?;
    if config.replications == 0 {
        return Err(RunConfig::cfg_err("replications", "must be at least 1"));
    }
    let instances = setup_instances(&setup, config.base_seed).map_err(|e| RunConfig::cfg_err("setup", e))?;
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("output_dir {}: {e}", dir.display())))?;

    let exec = Execution {
        threads,
        trace: config.emit_trace,
    };
    let (result, failure) = match run_on_instances(
        setup.name.as_str(),
        &instances,
        &policies,
        &budgets,
        config.replications,
        config.base_seed,
        exec,
    ) {
        Ok(r) => (r, None),
        Err(e) => {
            return Ok(RunOutcome {
                cells_path: dir.join("cells.csv"),
                meta_path: dir.join("meta.json"),
                trace_path: None,
                result: ExperimentResult {
                    setup: setup.name.as_str().into(),
                    base_seed: config.base_seed,
                    instances: vec![],
                    cells: vec![],
                },
                failure: Some(e.to_string()),
            })
        }
    };

    let cells_path = dir.join("cells.csv");
    write_cells(&cells_path, &result)?;

    let meta = Meta {
        version: crate::VERSION,
        config,
        seed_derivation: "cell streams: derive_seed(base_seed, [0xce11, instance_idx, budget, replication]); \
                          arm a of a cell uses ChaCha8 stream a",
        instances: result
            .instances
            .iter()
            .map(|i| MetaInstance {
                instance_idx: i.instance_idx,
                best_arm: i.best_arm,
                h: i.h,
                budgets: budgets.iter().map(|b| (b.label(), b.resolve(i.h).ok())).collect(),
                means: i.means.clone(),
            })
            .collect(),
        skipped: result
            .cells
            .iter()
            .filter_map(|c| {
                c.skip_reason.as_ref().map(|r| MetaSkip {
                    instance_idx: c.instance_idx,
                    policy: c.policy.clone(),
                    budget: c.budget_label.clone(),
                    reason: r.clone(),
                })
            })
            .collect(),
    };
    let meta_path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&meta_path, json + "\n")?;

    let trace_path = if config.emit_trace {
        let p = dir.join("traces.csv");
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record(["setup", "instance_idx", "policy", "budget", "arms"])?;
        for c in &result.cells {
            if let Some(t) = &c.trace {
                let arms = t.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
                w.write_record([
                    c.setup.clone(),
                    c.instance_idx.to_string(),
                    c.policy.clone(),
                    c.budget.to_string(),
                    arms,
                ])?;
            }
        }
        w.flush()?;
        Some(p)
    } else {
        None
    };

    Ok(RunOutcome {
        cells_path,
        meta_path,
        trace_path,
        result,
        failure,
    })
}

fn write_cells(path: &Path, result: &ExperimentResult) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CELLS_HEADER)?;
    for c in &result.cells {
        w.write_record([
            c.setup.clone(),
            c.instance_idx.to_string(),
            c.policy.clone(),
            c.budget.to_string(),
            c.replications.to_string(),
            c.errors.to_string(),
            fmt_f64(c.error_prob),
            fmt_f64(c.stderr),
            fmt_f64(c.mean_simple_regret),
            c.base_seed.to_string(),
            c.skip_reason.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- theory

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    /// Number of arms.
    #[arg(long)]
    pub arms: usize,
    /// Budgets, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Log-spaced budgets as MIN:MAX:COUNT, added to `--n`.
    #[arg(long)]
    pub n_range: Option<String>,
    /// Prior variance of the arm means.
    #[arg(long, default_value_t = 1.0)]
    pub sigma0_sq: f64,
    /// Working noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_sq: f64,
    /// Likelihood inflation in (0, 1], or `tuned`.
    #[arg(long, default_value = "tuned")]
    pub delta: String,
    /// Gap used by the full-information columns.
    #[arg(long, default_value_t = 0.2)]
    pub gap: f64,
    /// Complexity fed to the UCB-E bound; defaults to `n / (27 ln n)`.
    #[arg(long)]
    pub h: Option<f64>,
    /// Output file; defaults to `theory.csv` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl TheoryArgs {
    pub fn new(arms: usize, n: Vec<usize>) -> Self {
        Self {
            arms,
            n,
            n_range: None,
            sigma0_sq: 1.0,
            sigma_sq: 1.0,
            delta: "tuned".into(),
            gap: 0.2,
            h: None,
            out: None,
        }
    }
}

pub const THEORY_HEADER: [&str; 13] = [
    "n",
    "K",
    "theorem2_bound",
    "theorem3_bound",
    "ucbe_upper_bound",
    "ucbe_h",
    "small_gap_threshold",
    "small_gap_threshold_lower",
    "full_info_error_exact",
    "full_info_error_lower",
    "H_b",
    "c_K",
    "flags",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub n: usize,
    pub k: usize,
    pub theorem2_bound: Option<f64>,
    pub theorem3_bound: Option<f64>,
    pub ucbe_upper_bound: Option<f64>,
    pub ucbe_h: f64,
    pub small_gap_threshold: f64,
    pub small_gap_threshold_lower: f64,
    pub full_info_error_exact: f64,
    pub full_info_error_lower: f64,
    pub h_b: Option<f64>,
    pub c_k: Option<f64>,
    pub flags: Vec<String>,
}

fn parse_n_range(s: &str) -> CliResult<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Config(format!("--n-range `{s}`: want MIN:MAX:COUNT"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo >= 1.0 && hi >= lo) || count == 0 {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![lo.round() as usize]);
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    let mut ns: Vec<usize> = (0..count).map(|i| (lo * (step * i as f64).exp()).round() as usize).collect();
    ns.dedup();
    Ok(ns)
}

/// Evaluates every bound for each requested budget. Domain problems become
/// flags on the affected rows.
pub fn theory_rows(args: &TheoryArgs) -> CliResult<Vec<TheoryRow>> {
    let mut ns = args.n.clone();
    if let Some(r) = &args.n_range {
        ns.extend(parse_n_range(r)?);
    }
    if ns.is_empty() {
        return Err(CliError::Config("theory needs --n or --n-range".into()));
    }
    let k = args.arms;
    let mut shared_flags = Vec::new();
    let prior = PriorSpec::new(0.0, args.sigma0_sq);
    let noise = match args.delta.as_str() {
        "tuned" => tuned_noise(k, args.sigma0_sq, args.sigma_sq),
        d => match d.parse::<f64>() {
            Ok(delta) => NoiseSpec::new(args.sigma_sq * delta, delta),
            Err(_) => return Err(CliError::Config(format!("--delta `{d}`: want a number or `tuned`"))),
        },
    };
    let model = match (prior, noise) {
        (Ok(p), Ok(n)) => Some((p, n)),
        (p, n) => {
            for e in [p.err(), n.err()].into_iter().flatten() {
                shared_flags.push(format!("model_domain: {e}"));
            }
            None
        }
    };
    let ck = c_k::<f64>(k);
    match &ck {
        Ok(c) if c.small_k => shared_flags.push("c_K_small_K".into()),
        Err(_) => shared_flags.push("c_K_domain".into()),
        _ => {}
    }
    let h_b = bayes_constants(k, args.sigma0_sq, args.sigma_sq).ok().map(|c| c.h_b);

    Ok(ns
        .into_iter()
        .map(|n| {
            let mut flags = shared_flags.clone();
            let mut bound = |name: &str, r: Option<crate::Result<f64>>| match r {
                Some(Ok(v)) => {
                    if v > 1.0 && name == "theorem2" {
                        flags.push("theorem2_vacuous".into());
                    }
                    Some(v)
                }
                Some(Err(_)) => {
                    flags.push(format!("{name}_domain"));
                    None
                }
                None => None,
            };
            let t2 = bound("theorem2", model.as_ref().map(|(p, nz)| theorem2_bound(n, k, p, nz)));
            let t3 = bound("theorem3", model.as_ref().map(|(p, nz)| theorem3_bound(n, k, p, nz)));
            let ucbe_h = args.h.unwrap_or_else(|| n as f64 / (27.0 * (n as f64).ln()));
            let ucbe = bound("ucbe", Some(ucbe_upper_bound(n, k, ucbe_h)));
            let lower = full_info_error_lower(n, args.gap, args.sigma_sq);
            if lower.vacuous {
                flags.push("full_info_lower_vacuous".into());
            }
            TheoryRow {
                n,
                k,
                theorem2_bound: t2,
                theorem3_bound: t3,
                ucbe_upper_bound: ucbe,
                ucbe_h,
                small_gap_threshold: small_gap_threshold(n),
                small_gap_threshold_lower: small_gap_threshold_lower(n),
                full_info_error_exact: full_info_error_exact(n, args.gap, args.sigma_sq),
                full_info_error_lower: lower.value,
                h_b,
                c_k: ck.as_ref().ok().map(|c| c.value),
                flags,
            }
        })
        .collect())
}

pub fn cmd_theory(args: &TheoryArgs, globals: &GlobalOpts) -> CliResult<PathBuf> {
    let rows = theory_rows(args)?;
    let path = args.out.clone().unwrap_or_else(|| out_dir(globals).join("theory.csv"));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(THEORY_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.k.to_string(),
            fmt_opt(r.theorem2_bound),
            fmt_opt(r.theorem3_bound),
            fmt_opt(r.ucbe_upper_bound),
            fmt_f64(r.ucbe_h),
            fmt_f64(r.small_gap_threshold),
            fmt_f64(r.small_gap_threshold_lower),
            fmt_f64(r.full_info_error_exact),
            fmt_f64(r.full_info_error_lower),
            fmt_opt(r.h_b),
            fmt_opt(r.c_k),
            r.flags.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

// ---------------------------------------------------------------- oracle

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub arms: usize,
    /// Prior standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Gap thresholds, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Output file; defaults to `oracle.csv` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub alpha: f64,
    pub samples: usize,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

const ORACLE_STREAM: u64 = 0x0_7ac1e;

/// Empirical top-two gap frequencies against `min(1, c_K alpha / sigma0)`.
/// Each alpha has its own stream, keyed by its bit pattern.
pub fn oracle_rows(args: &OracleArgs, seed: u64) -> CliResult<Vec<OracleRow>> {
    args.alphas
        .iter()
        .map(|&alpha| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ORACLE_STREAM, alpha.to_bits()]));
            let empirical = gap_oracle(args.arms, args.sigma0, alpha, args.samples, &mut rng)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let bound = gap_probability_bound(alpha, args.sigma0, args.arms).map_err(|e| CliError::Config(e.to_string()))?;
            let stderr = binomial_stderr(empirical, args.samples);
            Ok(OracleRow {
                alpha,
                samples: args.samples,
                empirical,
                stderr,
                bound,
                pass: empirical <= bound + 3.0 * stderr,
            })
        })
        .collect()
}

pub fn cmd_oracle(args: &OracleArgs, globals: &GlobalOpts) -> CliResult<(PathBuf, Vec<OracleRow>)> {
    let rows = oracle_rows(args, globals.seed.unwrap_or(0))?;
    let path = args.out.clone().unwrap_or_else(|| out_dir(globals).join("oracle.csv"));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["K", "sigma0", "alpha", "samples", "empirical", "stderr", "bound", "pass"])?;
    for r in &rows {
        w.write_record([
            args.arms.to_string(),
            fmt_f64(args.sigma0),
            fmt_f64(r.alpha),
            r.samples.to_string(),
            fmt_f64(r.empirical),
            fmt_f64(r.stderr),
            fmt_f64(r.bound),
            if r.pass { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok((path, rows))
}

// ---------------------------------------------------------------- plot-data

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Pivot {
    /// One row per (setup, budget), pooling instances.
    #[default]
    Budget,
    /// One row per (setup, instance, budget).
    Instance,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// `cells.csv` files to pool.
    #[arg(required = true)]
    pub cells: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Pivot::Budget)]
    pub pivot: Pivot,
    /// Output file; defaults to `plot_data.csv` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Pooled error of one policy in one plot row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pooled {
    pub errors: u64,
    pub replications: u64,
}

impl Pooled {
    pub fn error_prob(&self) -> f64 {
        self.errors as f64 / self.replications as f64
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.error_prob(), self.replications as usize)
    }
}

/// Rows keyed by (setup, instance or `None`, budget), then policies in order
/// of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub policies: Vec<String>,
    pub rows: Vec<((String, Option<usize>, usize), BTreeMap<String, Pooled>)>,
}

pub fn pool_cells(files: &[PathBuf], pivot: Pivot) -> CliResult<PlotTable> {
    let mut policies: Vec<String> = Vec::new();
    let mut rows: Vec<((String, Option<usize>, usize), BTreeMap<String, Pooled>)> = Vec::new();
    for path in files {
        let mut rdr = csv::Reader::from_path(path)?;
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let missing: Vec<&str> = CELLS_HEADER
            .iter()
            .copied()
            .filter(|c| !header.iter().any(|h| h == c))
            .collect();
        let extra: Vec<&str> = header
            .iter()
            .map(String::as_str)
            .filter(|h| !CELLS_HEADER.contains(h))
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(CliError::Config(format!(
                "{}: schema mismatch; missing columns [{}], unexpected columns [{}]",
                path.display(),
                missing.join(", "),
                extra.join(", ")
            )));
        }
        let col = |name: &str| header.iter().position(|h| h == name).expect("checked");
        let (c_setup, c_inst, c_pol, c_budget, c_reps, c_err) = (
            col("setup"),
            col("instance_idx"),
            col("policy"),
            col("budget"),
            col("replications"),
            col("errors"),
        );
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> CliResult<u64> {
                rec[i].parse::<u64>().map_err(|_| {
                    CliError::Config(format!("{}: column `{}` is not an integer: `{}`", path.display(), header[i], &rec[i]))
                })
            };
            let reps = num(c_reps)?;
            if reps == 0 {
                continue;
            }
            let key = (
                rec[c_setup].to_string(),
                match pivot {
                    Pivot::Budget => None,
                    Pivot::Instance => Some(num(c_inst)? as usize),
                },
                num(c_budget)? as usize,
            );
            let policy = rec[c_pol].to_string();
            if !policies.contains(&policy) {
                policies.push(policy.clone());
            }
            let idx = match rows.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    rows.push((key, BTreeMap::new()));
                    rows.len() - 1
                }
            };
            let slot = rows[idx].1.entry(policy).or_insert(Pooled {
                errors: 0,
                replications: 0,
            });
            slot.errors += num(c_err)?;
            slot.replications += reps;
        }
    }
    Ok(PlotTable { policies, rows })
}

pub fn cmd_plot_data(args: &PlotArgs, globals: &GlobalOpts) -> CliResult<PathBuf> {
    let table = pool_cells(&args.cells, args.pivot)?;
    let path = args.out.clone().unwrap_or_else(|| out_dir(globals).join("plot_data.csv"));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["setup".to_string()];
    if args.pivot == Pivot::Instance {
        header.push("instance_idx".into());
    }
    header.push("budget".into());
    for p in &table.policies {
        header.push(format!("{p}_error_prob"));
        header.push(format!("{p}_stderr"));
    }
    w.write_record(&header)?;
    for ((setup, inst, budget), cells) in &table.rows {
        let mut rec = vec![setup.clone()];
        if let Some(i) = inst {
            rec.push(i.to_string());
        }
        rec.push(budget.to_string());
        for p in &table.policies {
            match cells.get(p) {
                Some(c) => {
                    rec.push(fmt_f64(c.error_prob()));
                    rec.push(fmt_f64(c.stderr()));
                }
                None => rec.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}
