use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dpplan_core::allocation::{apply_allocation, plan_round, Algorithm, ObjectiveMode};
use dpplan_core::harness::{
    compare, load_runs, read_batch, read_ledger, read_policies, report, run_replicated, write_batch, write_ledger,
    write_policies, write_run, Accounting, Profile, SimulationConfig,
};
use dpplan_core::workload::{build_workload, generate, upc_variant, CostModel, Family, WorkloadConfig};
use dpplan_core::Exec;

#[derive(Parser)]
#[command(name = "dpplan", version, about = "Privacy-budget planning for partitioned, rotating user populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate per-round request batches.
    Generate {
        #[arg(long, default_value = "W1")]
        workload: Family,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "desk")]
        profile: Profile,
        /// Also write a copy of every batch with predicates stripped and
        /// unamplified costs under `<out>/upc`.
        #[arg(long)]
        upc: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan a single round against a ledger file and update it in place.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        round_in: PathBuf,
        /// Created from the config when missing.
        #[arg(long)]
        ledger: PathBuf,
        /// Policy file to append to. Defaults to `policies.json` next to the ledger.
        #[arg(long)]
        policies: Option<PathBuf>,
        #[arg(long)]
        algorithm: Option<Algorithm>,
    },
    /// Run the round loop for every configured seed.
    Simulate {
        /// Base configuration. Without it the profile and workload presets apply.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "desk")]
        profile: Profile,
        #[arg(long, default_value = "W1")]
        workload: Family,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        accounting: Option<Accounting>,
        #[arg(long)]
        objective: Option<ObjectiveMode>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Only this sampling fraction.
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize simulated runs, or compare two sets of runs.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Write the per-round series as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            workload,
            seed,
            profile,
            upc,
            out,
        } => cmd_generate(workload, seed, profile, upc, &out),
        Command::Plan {
            config,
            round_in,
            ledger,
            policies,
            algorithm,
        } => {
            let policies = policies.unwrap_or_else(|| ledger.with_file_name("policies.json"));
            cmd_plan(&config, &round_in, &ledger, &policies, algorithm)
        }
        Command::Simulate {
            config,
            profile,
            workload,
            algorithm,
            accounting,
            objective,
            seeds,
            fraction,
            sequential,
            out,
        } => {
            let mut c = match config {
                Some(path) => SimulationConfig::load(&path).with_context(|| format!("loading {}", path.display()))?,
                None => SimulationConfig::profile(profile, workload),
            };
            if let Some(a) = algorithm {
                c.algorithm = a;
            }
            if let Some(a) = accounting {
                c.accounting = a;
            }
            if let Some(o) = objective {
                c.objective = o;
            }
            if let Some(s) = seeds {
                c.seeds = s;
            }
            if let Some(f) = fraction {
                c.workload = c.workload.with_fraction(f);
            }
            let exec = if sequential { Exec::Sequential } else { Exec::available() };
            cmd_simulate(&c, exec, &out)
        }
        Command::Report { input, compare, csv } => cmd_report(&input, compare.as_deref(), csv.as_deref()),
    }
}

fn workload_config(family: Family, seed: u64, profile: Profile) -> WorkloadConfig {
    match profile {
        Profile::Desk => WorkloadConfig::desk(family, seed),
        Profile::Paper => build_workload(family, seed),
    }
}

fn batch_name(round: usize) -> String {
    format!("round-{round:03}.json")
}

fn cmd_generate(family: Family, seed: u64, profile: Profile, upc: bool, out: &Path) -> Result<()> {
    let config = workload_config(family, seed, profile);
    let base = SimulationConfig::new(config.clone());
    let costs = CostModel::new(base.grid()?);
    let workload = generate(&config, &costs)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (round, batch) in workload.batches.iter().enumerate() {
        write_batch(&out.join(batch_name(round)), round as u32, batch)?;
    }
    if upc {
        let dir = out.join("upc");
        fs::create_dir_all(&dir)?;
        for (round, batch) in workload.batches.iter().enumerate() {
            let stripped = batch
                .iter()
                .map(|r| upc_variant(r, &costs, config.domain_size))
                .collect::<Result<Vec<_>, _>>()?;
            write_batch(&dir.join(batch_name(round)), round as u32, &stripped)?;
        }
    }
    fs::write(out.join("config.toml"), base.to_toml()?)?;
    println!(
        "{} requests over {} rounds written to {}",
        workload.request_count(),
        workload.batches.len(),
        out.display()
    );
    Ok(())
}

fn cmd_plan(
    config: &Path,
    round_in: &Path,
    ledger: &Path,
    policies_path: &Path,
    algorithm: Option<Algorithm>,
) -> Result<()> {
    let config = SimulationConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let batch = read_batch(round_in).with_context(|| format!("reading {}", round_in.display()))?;
    let mut population = if ledger.exists() {
        read_ledger(ledger).with_context(|| format!("reading {}", ledger.display()))?
    } else {
        config.population()?
    };
    if !population.grid().same(&config.grid()?) {
        bail!("ledger and config use different alpha grids");
    }
    let round = i64::from(batch.round);
    if round < population.round {
        bail!("batch is for round {round} but the ledger is already at round {}", population.round);
    }
    while population.round < round {
        population.advance_round();
    }
    let mut policies = if policies_path.exists() {
        read_policies(policies_path)?
    } else {
        Vec::new()
    };
    let mut next_id = policies.iter().map(|p| p.policy_id + 1).max().unwrap_or(0);

    let algorithm = algorithm.unwrap_or(config.algorithm);
    let limit = Some(Duration::from_secs_f64(config.time_limit_seconds));
    let plan = plan_round(Exec::available(), &batch.requests, &population, algorithm, config.objective, limit)?;
    let granted = apply_allocation(&mut population, &batch.requests, &plan.allocation.accepted, &mut next_id)?;
    println!(
        "round {round}: {} of {} requests accepted ({algorithm}, objective {:.6}{}), {} segments, {} contested",
        plan.allocation.accepted.len(),
        batch.requests.len(),
        plan.allocation.objective,
        if plan.allocation.optimal { "" } else { ", not proven optimal" },
        plan.segments,
        plan.contested,
    );
    policies.extend(granted);
    write_ledger(ledger, &population)?;
    write_policies(policies_path, &policies)?;
    Ok(())
}

fn cmd_simulate(config: &SimulationConfig, exec: Exec, out: &Path) -> Result<()> {
    config.validate()?;
    let results = run_replicated(config, exec)?;
    for r in &results {
        write_run(&out.join(format!("seed-{}", r.seed)), config, r)?;
        println!(
            "seed {}: utility {:.6}, accepted {} requests",
            r.seed,
            r.total_utility(),
            r.total_accepted()
        );
    }
    Ok(())
}

fn cmd_report(input: &Path, other: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    let runs = load_runs(input)?;
    let summary = report(&runs)?;
    match other {
        Some(dir) => {
            let right = load_runs(dir)?;
            print!("{}", compare(&runs, &right)?.render());
        }
        None => print!("{}", summary.render()),
    }
    if let Some(path) = csv {
        fs::write(path, summary.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
