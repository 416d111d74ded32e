use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fjspma::evolution::{run_algorithm, Algorithm, HrpeoParams, StopRule};
use fjspma::harness::{
    default_time_budget, export_convergence, export_gantt, run_experiment, ExperimentConfig, RunReport,
};
use fjspma::instance::{parse_instance, InstanceGenerator};

#[derive(Parser)]
#[command(version, about = "Flexible job shop scheduling with multi-load AGVs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file.
    Solve {
        instance: PathBuf,
        /// Wall-clock budget; defaults to jobs x machines x AGVs x 10 ms.
        #[arg(long, conflicts_with = "generations")]
        budget_ms: Option<u64>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        n1: usize,
        #[arg(long, default_value_t = 9)]
        n2: usize,
        #[arg(long, default_value_t = 3.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        mutation: f64,
        #[arg(long, default_value = "hrpeo")]
        algorithm: Algorithm,
        #[arg(long)]
        gantt: Option<PathBuf>,
        #[arg(long)]
        convergence: Option<PathBuf>,
        /// Write a single-trial JSON report.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run an experiment session from a JSON config.
    Bench { config: PathBuf },
    /// Print a random instance.
    GenInstance {
        #[arg(long)]
        jobs: usize,
        #[arg(long)]
        machines: usize,
        #[arg(long)]
        agvs: usize,
        #[arg(long)]
        capacity: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Solve {
            instance,
            budget_ms,
            generations,
            seed,
            n1,
            n2,
            alpha,
            mutation,
            algorithm,
            gantt,
            convergence,
            json,
        } => {
            let text = std::fs::read_to_string(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let inst = parse_instance(&text).with_context(|| format!("parsing {}", instance.display()))?;
            let stop = match (generations, budget_ms) {
                (Some(g), _) => StopRule::Generations(g),
                (None, Some(ms)) => StopRule::TimeBudgetMs(ms),
                (None, None) => StopRule::TimeBudgetMs(default_time_budget(&inst).as_millis() as u64),
            };
            let params = HrpeoParams {
                n1,
                n2,
                alpha,
                mutation_rate: mutation,
                seed,
                stop,
                ..HrpeoParams::default()
            };
            let out = run_algorithm(algorithm, &inst, &params)?;
            println!("makespan {}", out.best_makespan);
            println!("generations {} evaluations {} elapsed_ms {:.1}", out.generations, out.evaluations, out.elapsed.as_secs_f64() * 1e3);
            if let Some(path) = gantt {
                export_gantt(&out.schedule, &out.best, &inst, &path)?;
            }
            if let Some(path) = convergence {
                export_convergence(&out.history, &path)?;
            }
            if let Some(path) = json {
                let report = RunReport::single(&instance.display().to_string(), algorithm, seed, &out);
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::Bench { config } => {
            let cfg = ExperimentConfig::from_file(&config).with_context(|| format!("loading {}", config.display()))?;
            let result = run_experiment(&cfg)?;
            for r in &result.reports {
                let best = r.trials.iter().map(|t| t.makespan).min().unwrap_or(0);
                println!(
                    "{} {} trials={} best={} c_best={} arpd={:.4}%",
                    r.instance,
                    r.algorithm,
                    r.trials.len(),
                    best,
                    r.c_best,
                    r.arpd_percent
                );
            }
            for f in &result.failures {
                eprintln!("failed {}: {}", f.instance, f.error);
            }
            if result.reports.is_empty() && !result.failures.is_empty() {
                anyhow::bail!("every instance failed");
            }
        }
        Command::GenInstance {
            jobs,
            machines,
            agvs,
            capacity,
            seed,
        } => {
            anyhow::ensure!(jobs > 0 && machines > 0 && agvs > 0 && capacity > 0, "all counts must be positive");
            print!("{}", InstanceGenerator::new(jobs, machines, agvs, capacity).generate(seed));
        }
    }
    Ok(())
}
