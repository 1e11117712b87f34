use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp, Poisson};

use super::{CostModel, Tier, UtilityModel, WorkloadConfig};
use crate::error::{Error, Result};
use crate::rdp::MechanismSpec;
use crate::segmentation::{Predicate, RequestRecord};

/// Generated request batches, one per round, plus user arrivals per round.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub batches: Vec<Vec<RequestRecord>>,
    pub users: Vec<u64>,
}

impl Workload {
    pub fn request_count(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }
}

fn dist_err(e: impl std::fmt::Display) -> Error {
    Error::param(e.to_string())
}

/// Circular interval of `max(1, round(s·domain))` cells with `s ~ Beta(a, b)`
/// and a uniform start.
pub fn sample_selection<R: Rng + ?Sized>(a: f64, b: f64, domain_size: u32, rng: &mut R) -> Result<Predicate> {
    let s = Beta::new(a, b).map_err(dist_err)?.sample(rng);
    let len = ((s * domain_size as f64).round() as u32).clamp(1, domain_size);
    let start = rng.random_range(0..domain_size);
    Ok(Predicate::interval(start, len))
}

/// `A · L^β · K^α_u` for given inputs.
pub fn cobb_douglas(productivity: f64, privacy: f64, data: f64, model: &UtilityModel) -> f64 {
    productivity * privacy.powf(model.elasticity_budget) * data.powf(model.elasticity_data)
}

/// Unnormalized utility with a fresh productivity draw.
pub fn assign_utility<R: Rng + ?Sized>(tier: Tier, data_share: f64, model: &UtilityModel, rng: &mut R) -> Result<f64> {
    let (a, b) = model.productivity_beta;
    let productivity = Beta::new(a, b).map_err(dist_err)?.sample(rng);
    Ok(cobb_douglas(productivity, tier.utility_epsilon(), data_share, model))
}

/// Runs the arrival process. Same config, same output.
pub fn generate(config: &WorkloadConfig, costs: &CostModel) -> Result<Workload> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let kinds = WeightedIndex::new(config.mechanism_mix.iter().map(|e| e.weight)).map_err(dist_err)?;
    let tiers = WeightedIndex::new(config.tier_mix).map_err(dist_err)?;
    let fractions = WeightedIndex::new(config.fraction_choices.iter().map(|c| c.1)).map_err(dist_err)?;

    let mut batches: Vec<Vec<RequestRecord>> = vec![Vec::new(); config.rounds as usize];
    if config.request_interarrival_minutes.is_finite() {
        let gaps = Exp::new(1.0 / config.request_interarrival_minutes).map_err(dist_err)?;
        let mut t = 0.0;
        let mut next_id = 0u64;
        loop {
            t += gaps.sample(&mut rng);
            let round = (t / config.round_duration_minutes).floor();
            if round >= config.rounds as f64 {
                break;
            }
            let entry = &config.mechanism_mix[kinds.sample(&mut rng)];
            let tier = Tier::ALL[tiers.sample(&mut rng)];
            let fraction = config.fraction_choices[fractions.sample(&mut rng)].0;
            let (a, b) = entry.selection_beta;
            let predicate = sample_selection(a, b, config.domain_size, &mut rng)?;
            let share = predicate.cell_count(config.domain_size) as f64 / config.domain_size as f64;
            let utility = assign_utility(tier, share * fraction, &config.utility, &mut rng)?;
            let spec = MechanismSpec::new(entry.kind, tier.epsilon(entry.kind), config.target_delta)
                .with_repetitions(entry.repetitions);
            let cost = costs.amplified(&spec, fraction)?;
            let mut r = RequestRecord::new(next_id, predicate, (*cost).clone())
                .with_arrival(t)
                .with_utility(utility);
            r.sample_fraction = fraction;
            r.mechanism = Some(spec);
            r.tier = Some(tier);
            batches[round as usize].push(r);
            next_id += 1;
        }
    }
    let total: f64 = batches.iter().flatten().map(|r| r.utility).sum();
    if total > 0.0 {
        for r in batches.iter_mut().flatten() {
            r.utility /= total;
        }
    }

    let mut user_rng = ChaCha8Rng::seed_from_u64(config.seed);
    user_rng.set_stream(1);
    let users = if config.user_interarrival_seconds.is_finite() {
        let mean = config.round_duration_minutes * 60.0 / config.user_interarrival_seconds;
        let p = Poisson::new(mean).map_err(dist_err)?;
        (0..config.rounds).map(|_| p.sample(&mut user_rng) as u64).collect()
    } else {
        vec![0; config.rounds as usize]
    };
    Ok(Workload { batches, users })
}

/// Copy of a request for user-level parallel accounting: predicate dropped
/// and the cost of the mechanism on the full data.
pub fn upc_variant(record: &RequestRecord, costs: &CostModel, domain_size: u32) -> Result<RequestRecord> {
    let mut out = record.clone();
    out.predicate = Predicate::full(domain_size);
    if let Some(spec) = &record.mechanism {
        out.cost = (*costs.unamplified(spec)?).clone();
    }
    Ok(out)
}
