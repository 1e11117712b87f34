//! Synthetic request streams: Poisson arrivals, circular attribute ranges,
//! cost tiers per mechanism and Cobb-Douglas utilities.

mod cost;
mod generate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cost::CostModel;
pub use generate::{assign_utility, generate, sample_selection, upc_variant, Workload};

use crate::error::{Error, Result};
use crate::rdp::MechanismKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Mouse,
    Hare,
    Elephant,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Mouse, Tier::Hare, Tier::Elephant];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Nominal ε of the tier for a mechanism kind.
    pub fn epsilon(self, kind: MechanismKind) -> f64 {
        let table = if kind.is_gaussian() {
            [0.05, 0.2, 0.75]
        } else {
            [0.01, 0.1, 0.25]
        };
        table[self.index()]
    }

    /// Privacy input of the utility function. One value per tier so that
    /// requests of the same tier are valued alike whatever their mechanism.
    pub fn utility_epsilon(self) -> f64 {
        self.epsilon(MechanismKind::GaussianMechanism)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Mouse => "mouse",
            Tier::Hare => "hare",
            Tier::Elephant => "elephant",
        })
    }
}

/// Predefined request mixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    W1,
    W2,
    W3,
    W4,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::W1, Family::W2, Family::W3, Family::W4];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|w| w.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown workload {s:?}, expected W1..W4")))
    }
}

/// One mechanism kind in a mix, with its selection-size distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub kind: MechanismKind,
    pub weight: f64,
    /// Beta(a, b) parameters of the selected domain share.
    pub selection_beta: (f64, f64),
    #[serde(default = "one")]
    pub repetitions: u32,
}

fn one() -> u32 {
    1
}

impl MixEntry {
    pub fn new(kind: MechanismKind, weight: f64, a: f64, b: f64) -> Self {
        MixEntry {
            kind,
            weight,
            selection_beta: (a, b),
            repetitions: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityModel {
    /// Exponent of the privacy input.
    pub elasticity_budget: f64,
    /// Exponent of the data input.
    pub elasticity_data: f64,
    /// Beta parameters of the productivity factor.
    pub productivity_beta: (f64, f64),
}

impl Default for UtilityModel {
    fn default() -> Self {
        UtilityModel {
            elasticity_budget: 2.0,
            elasticity_data: 1.0,
            productivity_beta: (0.25, 0.25),
        }
    }
}

impl UtilityModel {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.productivity_beta;
        if !(self.elasticity_budget > 0.0 && self.elasticity_data > 0.0 && a > 0.0 && b > 0.0) {
            return Err(Error::param("utility exponents and productivity parameters must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadConfig {
    pub rounds: u32,
    pub round_duration_minutes: f64,
    /// Mean gap between requests; infinite for no requests.
    pub request_interarrival_minutes: f64,
    /// Mean gap between users joining; infinite for none.
    pub user_interarrival_seconds: f64,
    pub domain_size: u32,
    pub mechanism_mix: Vec<MixEntry>,
    /// (fraction, probability) pairs.
    pub fraction_choices: Vec<(f64, f64)>,
    /// Probabilities of mouse, hare, elephant.
    pub tier_mix: [f64; 3],
    pub target_delta: f64,
    pub utility: UtilityModel,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        build_workload(Family::W1, 0)
    }
}

/// Full-scale parameters of a workload family.
pub fn build_workload(family: Family, seed: u64) -> WorkloadConfig {
    use MechanismKind::*;
    let narrow = (1.0, 10.0);
    let wide = (1.0, 0.5);
    let half = (2.0, 2.0);
    let entry = |k, beta: (f64, f64)| MixEntry::new(k, 1.0, beta.0, beta.1);
    let mix = match family {
        Family::W1 => vec![entry(GaussianMechanism, narrow)],
        Family::W2 => vec![
            entry(GaussianMechanism, narrow),
            entry(LaplaceMechanism, narrow),
            entry(SparseVectorTechnique, wide),
            entry(RandomizedResponse, wide),
        ],
        Family::W3 => vec![entry(NoisySgd, half), entry(Pate, half)],
        Family::W4 => vec![
            entry(GaussianMechanism, narrow),
            entry(LaplaceMechanism, narrow),
            entry(SparseVectorTechnique, wide),
            entry(RandomizedResponse, wide),
            entry(NoisySgd, half),
            entry(Pate, half),
        ],
    };
    let n = mix.len() as f64;
    WorkloadConfig {
        rounds: 40,
        round_duration_minutes: 10080.0,
        request_interarrival_minutes: 20.0,
        user_interarrival_seconds: 10.0,
        domain_size: 204_800,
        mechanism_mix: mix
            .into_iter()
            .map(|mut e| {
                e.weight = 1.0 / n;
                e
            })
            .collect(),
        fraction_choices: vec![(0.25, 0.5), (1.0, 0.5)],
        tier_mix: [1.0 / 3.0; 3],
        target_delta: 1e-9,
        utility: UtilityModel::default(),
        seed,
    }
}

impl WorkloadConfig {
    /// Small preset: 2048 cells, 50 requests per round, 10 rounds.
    pub fn desk(family: Family, seed: u64) -> Self {
        let mut c = build_workload(family, seed);
        c.rounds = 10;
        c.domain_size = 2048;
        c.request_interarrival_minutes = c.round_duration_minutes / 50.0;
        c
    }

    /// Only this sampling fraction.
    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction_choices = vec![(fraction, 1.0)];
        self
    }

    pub fn expected_requests_per_round(&self) -> f64 {
        self.round_duration_minutes / self.request_interarrival_minutes
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("workload: {m}")));
        if self.rounds == 0 || !(self.round_duration_minutes > 0.0) || self.domain_size == 0 {
            return bad("rounds, round duration and domain size must be positive");
        }
        if !(self.request_interarrival_minutes > 0.0) || !(self.user_interarrival_seconds > 0.0) {
            return bad("inter-arrival times must be > 0 (infinite disables arrivals)");
        }
        if self.mechanism_mix.is_empty() {
            return bad("mechanism mix is empty");
        }
        for e in &self.mechanism_mix {
            let (a, b) = e.selection_beta;
            if !(a > 0.0 && b > 0.0) || e.repetitions == 0 {
                return bad("selection Beta parameters must be > 0 and repetitions >= 1");
            }
        }
        if self.fraction_choices.iter().any(|(f, _)| !(*f > 0.0 && *f <= 1.0)) {
            return bad("sampling fractions must be in (0, 1]");
        }
        check_categorical("mechanism mix", self.mechanism_mix.iter().map(|e| e.weight))?;
        check_categorical("fraction choices", self.fraction_choices.iter().map(|c| c.1))?;
        check_categorical("tier mix", self.tier_mix.iter().copied())?;
        if !(self.target_delta > 0.0 && self.target_delta < 1.0) {
            return bad("target delta must be in (0, 1)");
        }
        self.utility.validate()
    }
}

fn check_categorical(name: &str, weights: impl Iterator<Item = f64>) -> Result<()> {
    let w: Vec<f64> = weights.collect();
    let sum: f64 = w.iter().sum();
    if w.is_empty() || w.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("workload: {name} weights must be >= 0 and sum to 1")));
    }
    Ok(())
}
