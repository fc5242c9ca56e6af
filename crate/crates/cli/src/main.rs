//! Command-line runner for the energy-harvesting base-station simulator.
//!
//! Subcommands:
//! - `simulate` — run one scenario; write `metrics.csv` and `summary.json`
//!   to the output directory and print the mean savings.
//! - `sweep` — re-run a scenario across one swept variable
//!   (`eta`, `cluster_size`, or `gamma_max`) with seeded replications;
//!   write `sweep.csv` with per-replication rows and per-value summaries.
//! - `forecast-eval` — print per-trace, per-horizon-step normalized RMSE
//!   for every built-in forecaster (plus last-value persistence) as CSV.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! errors.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use enaam_core::forecast::{k_step_rmse, last_value_k_step_rmse};
use enaam_core::traces::{ENERGY_PROFILE_COUNT, LOAD_PROFILE_COUNT};
use enaam_core::{
    run_simulation, seeds, synthesize_energy_profile, synthesize_load_profile, ForecastKind,
    ForecasterSpec, MetricsReport, RunPolicy, ScenarioConfig,
};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "enaam", version, about = "Energy-harvesting base-station site simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics.csv + summary.json.
    Simulate(RunArgs),
    /// Run a scenario across a swept variable and write sweep.csv.
    Sweep(SweepArgs),
    /// Print forecaster RMSE per bundled trace as CSV on standard output.
    ForecastEval(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's control policy.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which scenario variable to sweep.
    #[arg(long, value_enum)]
    variable: SweepVariable,
    /// Comma-separated values the variable takes.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Seeded replications per value.
    #[arg(long, default_value_t = 1)]
    replications: usize,
}

#[derive(Copy, Clone, ValueEnum)]
enum PolicyArg {
    Enaam,
    DetaR,
    None,
}

impl From<PolicyArg> for RunPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Enaam => RunPolicy::Enaam,
            PolicyArg::DetaR => RunPolicy::DetaR,
            PolicyArg::None => RunPolicy::None,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum SweepVariable {
    /// Cost weight between energy and served workload.
    Eta,
    /// Mean BSs per cluster (mapped to the cluster count).
    #[value(alias = "cluster_size")]
    ClusterSize,
    /// Per-VM workload cap in MB.
    #[value(alias = "gamma_max")]
    GammaMax,
}

impl SweepVariable {
    fn name(self) -> &'static str {
        match self {
            SweepVariable::Eta => "eta",
            SweepVariable::ClusterSize => "cluster_size",
            SweepVariable::GammaMax => "gamma_max",
        }
    }
}

/// A failure tagged with the exit code it maps to.
struct Failure {
    code: u8,
    source: anyhow::Error,
}

trait Stage<T> {
    /// Marks errors from this step as configuration problems (exit 2).
    fn config_stage(self) -> Result<T, Failure>;
    /// Marks errors from this step as runtime problems (exit 3).
    fn runtime_stage(self) -> Result<T, Failure>;
}

impl<T> Stage<T> for Result<T> {
    fn config_stage(self) -> Result<T, Failure> {
        self.map_err(|source| Failure { code: 2, source })
    }
    fn runtime_stage(self) -> Result<T, Failure> {
        self.map_err(|source| Failure { code: 3, source })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::ForecastEval(args) => forecast_eval(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.source);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::from_path(path)
            .with_context(|| format!("loading scenario config {}", path.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(policy) = args.policy {
        cfg.policy = policy.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_outputs(args: &RunArgs, report: &MetricsReport) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating output directory {}", args.out_dir.display()))?;
    let metrics_path = args.out_dir.join("metrics.csv");
    let summary_path = args.out_dir.join("summary.json");
    report.write_metrics_csv(&metrics_path)?;
    report.write_summary_json(&summary_path)?;
    println!("wrote {} and {}", metrics_path.display(), summary_path.display());
    Ok(())
}

fn simulate(args: RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args).config_stage()?;
    let report = run_simulation(&cfg).map_err(Into::into).runtime_stage()?;
    write_outputs(&args, &report).runtime_stage()?;
    match report.mean_savings_percent() {
        Some(s) => println!("mean savings: {s:.4}%"),
        None => println!("mean savings: n/a (no simulated slots)"),
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let base = load_config(&args.run).config_stage()?;
    if args.replications == 0 {
        return Err(anyhow::anyhow!("sweep replications must be at least 1"))
            .config_stage();
    }
    // Validate every swept configuration up front so a bad value fails
    // before any simulation runs.
    let mut prepared = Vec::new();
    for &value in &args.values {
        for rep in 1..=args.replications {
            let mut cfg = base.clone();
            apply_sweep_value(&mut cfg, args.variable, value).config_stage()?;
            cfg.master_seed = seeds::derive(base.master_seed, &[rep as u64]);
            cfg.validate().map_err(Into::into).config_stage()?;
            prepared.push((value, rep, cfg));
        }
    }

    let mut out = String::from(
        "variable,value,replication,seed,mean_savings_percent,stddev_savings_percent\n",
    );
    let mut per_value: Vec<f64> = Vec::new();
    for (value, rep, cfg) in &prepared {
        let report = run_simulation(cfg).map_err(Into::into).runtime_stage()?;
        let mean = report.mean_savings_percent().unwrap_or(0.0);
        per_value.push(mean);
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},",
            args.variable.name(),
            value,
            rep,
            cfg.master_seed,
            mean
        );
        if *rep == args.replications {
            let m = per_value.iter().sum::<f64>() / per_value.len() as f64;
            let var = if per_value.len() > 1 {
                per_value.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                    / (per_value.len() - 1) as f64
            } else {
                0.0
            };
            let _ = writeln!(
                out,
                "{},{},summary,,{:.6},{:.6}",
                args.variable.name(),
                value,
                m,
                var.sqrt()
            );
            per_value.clear();
        }
    }

    std::fs::create_dir_all(&args.run.out_dir)
        .with_context(|| format!("creating output directory {}", args.run.out_dir.display()))
        .runtime_stage()?;
    let path = args.run.out_dir.join("sweep.csv");
    std::fs::write(&path, &out)
        .with_context(|| format!("writing {}", path.display()))
        .runtime_stage()?;
    println!(
        "wrote {} ({} value(s) x {} replication(s))",
        path.display(),
        args.values.len(),
        args.replications
    );
    Ok(())
}

fn apply_sweep_value(
    cfg: &mut ScenarioConfig,
    variable: SweepVariable,
    value: f64,
) -> Result<()> {
    match variable {
        SweepVariable::Eta => cfg.eta = value,
        SweepVariable::ClusterSize => {
            if !value.is_finite() || value < 1.0 {
                anyhow::bail!("cluster_size values must be >= 1, got {value}");
            }
            let k = (cfg.n_bs as f64 / value).round() as usize;
            cfg.network.k_clusters = k.clamp(1, cfg.n_bs);
        }
        SweepVariable::GammaMax => cfg.vm.gamma_max = value,
    }
    Ok(())
}

/// One predictor's name plus a closure producing its k-step error.
type PredictorRow = (String, Box<dyn Fn(usize) -> enaam_core::Result<f64>>);

fn forecast_eval(args: RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args).config_stage()?;
    let slots = cfg.traces.train_slots + cfg.sim_slots;
    let t = cfg.search.horizon;
    let seasonal = cfg.forecaster_spec();
    let recurrent = ForecasterSpec { kind: ForecastKind::Recurrent, ..seasonal.clone() };

    let mut traces: Vec<(String, Vec<f64>)> = Vec::new();
    for pid in 1..=LOAD_PROFILE_COUNT {
        let series = synthesize_load_profile(
            pid,
            seeds::derive(cfg.master_seed, &[pid as u64]),
            slots,
            cfg.traces.l_max,
        )
        .map_err(Into::into)
        .runtime_stage()?;
        traces.push((format!("load-{pid}"), series));
    }
    for pid in 1..=ENERGY_PROFILE_COUNT {
        let series = synthesize_energy_profile(
            pid,
            seeds::derive(cfg.master_seed, &[pid as u64]),
            slots,
            cfg.battery.beta_max,
        )
        .map_err(Into::into)
        .runtime_stage()?;
        traces.push((format!("energy-{pid}"), series));
    }

    let mut header = String::from("trace,forecaster");
    for k in 1..=t {
        let _ = write!(header, ",rmse_k{k}");
    }
    println!("{header}");
    for (idx, (name, series)) in traces.iter().enumerate() {
        let hi = series.iter().cloned().fold(f64::MIN, f64::max);
        let lo = series.iter().cloned().fold(f64::MAX, f64::min);
        let range = if hi > lo { hi - lo } else { 1.0 };
        let train_seed = seeds::derive(cfg.master_seed, &[0xF0, idx as u64]);
        let mut rows: Vec<PredictorRow> = Vec::new();
        let sea = seasonal.clone();
        let rec = recurrent.clone();
        let s1 = series.clone();
        let s2 = series.clone();
        let s3 = series.clone();
        let tf = cfg.forecast.train_fraction;
        rows.push((
            "seasonal-persistence".into(),
            Box::new(move |k| k_step_rmse(&sea, train_seed, &s1, k)),
        ));
        rows.push(("recurrent".into(), Box::new(move |k| k_step_rmse(&rec, train_seed, &s2, k))));
        rows.push(("last-value".into(), Box::new(move |k| last_value_k_step_rmse(&s3, tf, k))));
        for (fname, eval) in rows {
            let mut line = format!("{name},{fname}");
            for k in 1..=t {
                let rmse = eval(k).map_err(Into::into).runtime_stage()?;
                let _ = write!(line, ",{:.6}", rmse / range);
            }
            println!("{line}");
        }
    }
    Ok(())
}
