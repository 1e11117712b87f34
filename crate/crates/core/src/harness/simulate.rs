use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Accounting, SimulationConfig};
use super::metrics::RoundMetrics;
use crate::allocation::{apply_allocation, plan_round, to_upc, PolicyRecord};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::population::Population;
use crate::rdp::rdp_to_adp;
use crate::segmentation::RequestRecord;
use crate::workload::{generate, upc_variant, CostModel, Workload};

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub seed: u64,
    pub metrics: Vec<RoundMetrics>,
    pub population: Population,
    pub policies: Vec<PolicyRecord>,
}

impl SimulationResult {
    pub fn total_utility(&self) -> f64 {
        self.metrics.iter().map(|m| m.utility_accepted).sum()
    }

    pub fn total_accepted(&self) -> usize {
        self.metrics.iter().map(|m| m.accepted).sum()
    }
}

/// Requests as the planner sees them under the configured accounting.
pub fn prepare_batch<R: rand::Rng + ?Sized>(
    config: &SimulationConfig,
    costs: &CostModel,
    population: &Population,
    batch: &[RequestRecord],
    rng: &mut R,
) -> Result<Vec<RequestRecord>> {
    match config.accounting {
        Accounting::Subsampled => Ok(batch.to_vec()),
        Accounting::Upc => {
            let active = population.active_ids();
            let domain = config.workload.domain_size;
            batch
                .iter()
                .map(|r| {
                    let stripped = upc_variant(r, costs, domain)?;
                    let cost = stripped.cost.clone();
                    to_upc(&stripped, cost, &active, domain, rng)
                })
                .collect()
        }
    }
}

/// Runs every round of the configured workload. Deterministic for a given
/// config, apart from the wall-clock fields.
pub fn run_simulation(config: &SimulationConfig, exec: Exec) -> Result<SimulationResult> {
    config.validate()?;
    let costs = CostModel::new(config.grid()?);
    let workload = generate(&config.workload, &costs)?;
    run_workload(config, &costs, &workload, exec)
}

pub fn run_workload(
    config: &SimulationConfig,
    costs: &CostModel,
    workload: &Workload,
    exec: Exec,
) -> Result<SimulationResult> {
    let mut population = config.population()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.workload.seed);
    rng.set_stream(2);
    let limit = Duration::from_secs_f64(config.time_limit_seconds);
    let mut next_policy = 0u64;
    let mut metrics = Vec::with_capacity(workload.batches.len());
    let mut policies = Vec::new();
    for (round, batch) in workload.batches.iter().enumerate() {
        let start = Instant::now();
        if round > 0 {
            population.advance_round();
        }
        population.add_users(population.round, workload.users[round], &mut rng);
        let requests = prepare_batch(config, costs, &population, batch, &mut rng)?;
        let plan = plan_round(exec, &requests, &population, config.algorithm, config.objective, Some(limit))?;
        let granted = apply_allocation(&mut population, &requests, &plan.allocation.accepted, &mut next_policy)?;

        let mut m = RoundMetrics {
            round: round as u32,
            offered: requests.len(),
            accepted: plan.allocation.accepted.len(),
            utility_offered: requests.iter().map(|r| r.utility).sum(),
            utility_accepted: plan.allocation.accepted.iter().map(|g| requests[g.position].utility).sum(),
            offered_by_tier: [0; 3],
            accepted_by_tier: [0; 3],
            segments: plan.segments,
            contested: plan.contested,
            auto_accepted: plan.prune.auto_accept.len(),
            auto_rejected: plan.prune.auto_reject.len(),
            residual: plan.prune.residual.len(),
            optimal: plan.allocation.optimal,
            utilization: utilization(&population)?,
            wall_ms: 0.0,
        };
        for r in &requests {
            if let Some(t) = r.tier {
                m.offered_by_tier[t.index()] += 1;
            }
        }
        for g in &plan.allocation.accepted {
            if let Some(t) = requests[g.position].tier {
                m.accepted_by_tier[t.index()] += 1;
            }
        }
        m.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        metrics.push(m);
        policies.extend(granted);
    }
    Ok(SimulationResult {
        seed: config.workload.seed,
        metrics,
        population,
        policies,
    })
}

/// Consumed share of the active window's total budget, per order.
fn utilization(population: &Population) -> Result<Vec<Option<f64>>> {
    let total = &population.policy.total_budget;
    let blocks = population.schema.domain_size as f64 * population.active.len() as f64;
    let mut sums = vec![0.0; total.len()];
    for g in &population.active {
        for b in g.blocks.values() {
            for (s, c) in sums.iter_mut().zip(b.consumed.values()) {
                *s += c;
            }
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(a, s)| (!total.is_marked(a) && total.get(a) > 0.0).then(|| s / (blocks * total.get(a))))
        .collect())
}

/// One simulation per seed; seeds run on the executor's workers.
pub fn run_replicated(config: &SimulationConfig, exec: Exec) -> Result<Vec<SimulationResult>> {
    let seeds = config.seeds.clone();
    exec.map(&seeds, |&s| run_simulation(&config.with_seed(s), Exec::Sequential))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub blocks: usize,
    /// Largest converted ε over all blocks.
    pub max_epsilon: f64,
}

/// Converts every block's consumption, active or retired, to approximate DP
/// at the global δ and checks it against the global ε. Blocks that kept
/// their charge history must also replay to the same total.
pub fn audit(population: &Population, epsilon: f64, delta: f64) -> Result<AuditReport> {
    let mut report = AuditReport {
        blocks: 0,
        max_epsilon: 0.0,
    };
    for b in population.all_ledgers() {
        let eps = rdp_to_adp(&b.consumed, delta)?;
        report.blocks += 1;
        report.max_epsilon = report.max_epsilon.max(eps);
        if eps > epsilon + 1e-9 {
            return Err(Error::Conflict(format!(
                "block (group {}, cell {}) reached epsilon {eps}",
                b.group_id, b.attribute_cell
            )));
        }
        // Ledgers read back from disk carry no history.
        if b.history.is_empty() {
            continue;
        }
        let replay = b.replayed_consumption()?;
        let drift = replay
            .values()
            .iter()
            .zip(b.consumed.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if drift > 1e-9 {
            return Err(Error::Conflict(format!(
                "block (group {}, cell {}) history disagrees with its total",
                b.group_id, b.attribute_cell
            )));
        }
    }
    Ok(report)
}
