use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::SimulationConfig;
use super::metrics::write_metrics;
use super::simulate::SimulationResult;
use crate::allocation::PolicyRecord;
use crate::error::{Error, Result};
use crate::population::Population;
use crate::segmentation::RequestRecord;

pub const BATCH_SCHEMA: &str = "dpplan.batch/v1";
pub const LEDGER_SCHEMA: &str = "dpplan.ledger/v1";
pub const POLICIES_SCHEMA: &str = "dpplan.policies/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFile {
    pub schema: String,
    pub round: u32,
    pub requests: Vec<RequestRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerFile {
    pub schema: String,
    pub population: Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoliciesFile {
    pub schema: String,
    pub policies: Vec<PolicyRecord>,
}

fn check(expected: &str, found: &str) -> Result<()> {
    if expected != found {
        return Err(Error::Schema {
            expected: expected.into(),
            found: found.into(),
        });
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(std::io::BufWriter::new(file), value)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn write_batch(path: &Path, round: u32, requests: &[RequestRecord]) -> Result<()> {
    write_json(
        path,
        &BatchFile {
            schema: BATCH_SCHEMA.into(),
            round,
            requests: requests.to_vec(),
        },
    )
}

pub fn read_batch(path: &Path) -> Result<BatchFile> {
    let b: BatchFile = read_json(path)?;
    check(BATCH_SCHEMA, &b.schema)?;
    Ok(b)
}

/// Writes the ledgers without per-charge histories, which grow with every
/// accepted request and are only needed for in-process audits.
pub fn write_ledger(path: &Path, population: &Population) -> Result<()> {
    let mut compact = population.clone();
    for g in compact.active.iter_mut().chain(compact.residual_pool.iter_mut()) {
        for b in g.blocks.values_mut() {
            b.history.clear();
        }
    }
    write_json(
        path,
        &LedgerFile {
            schema: LEDGER_SCHEMA.into(),
            population: compact,
        },
    )
}

pub fn read_ledger(path: &Path) -> Result<Population> {
    let l: LedgerFile = read_json(path)?;
    check(LEDGER_SCHEMA, &l.schema)?;
    Ok(l.population)
}

pub fn write_policies(path: &Path, policies: &[PolicyRecord]) -> Result<()> {
    write_json(
        path,
        &PoliciesFile {
            schema: POLICIES_SCHEMA.into(),
            policies: policies.to_vec(),
        },
    )
}

pub fn read_policies(path: &Path) -> Result<Vec<PolicyRecord>> {
    let p: PoliciesFile = read_json(path)?;
    check(POLICIES_SCHEMA, &p.schema)?;
    Ok(p.policies)
}

/// `config.toml`, `metrics.csv`, `policies.json` and `ledger.json` for one
/// simulated seed.
pub fn write_run(dir: &Path, config: &SimulationConfig, result: &SimulationResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config.with_seed(result.seed).to_toml()?).map_err(|e| Error::io(&cfg, e))?;
    let m = dir.join("metrics.csv");
    let file = fs::File::create(&m).map_err(|e| Error::io(&m, e))?;
    write_metrics(std::io::BufWriter::new(file), &config.alphas, &result.metrics)?;
    write_policies(&dir.join("policies.json"), &result.policies)?;
    write_ledger(&dir.join("ledger.json"), &result.population)
}
