use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::SimulationConfig;
use super::metrics::{read_metrics, RoundMetrics};
use crate::error::{Error, Result};

/// Metrics of one simulated seed, as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub path: PathBuf,
    pub config: Option<SimulationConfig>,
    pub alphas: Vec<f64>,
    pub rows: Vec<RoundMetrics>,
}

impl RunSeries {
    pub fn total_utility(&self) -> f64 {
        self.rows.iter().map(|r| r.utility_accepted).sum()
    }

    pub fn total_accepted(&self) -> f64 {
        self.rows.iter().map(|r| r.accepted as f64).sum()
    }
}

/// Reads `metrics.csv` in `dir` or in each of its direct subdirectories,
/// in path order.
pub fn load_runs(dir: &Path) -> Result<Vec<RunSeries>> {
    let mut candidates = vec![dir.to_path_buf()];
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    candidates.extend(subdirs);
    let mut runs = Vec::new();
    for d in candidates {
        let m = d.join("metrics.csv");
        if !m.is_file() {
            continue;
        }
        let file = fs::File::open(&m).map_err(|e| Error::io(&m, e))?;
        let (alphas, rows) = read_metrics(file)?;
        let cfg = d.join("config.toml");
        let config = if cfg.is_file() { Some(SimulationConfig::load(&cfg)?) } else { None };
        runs.push(RunSeries {
            path: d,
            config,
            alphas,
            rows,
        });
    }
    if runs.is_empty() {
        return Err(Error::Report(format!("no metrics.csv under {}", dir.display())));
    }
    Ok(runs)
}

/// Mean and sample standard deviation.
pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub round: u32,
    pub utility: (f64, f64),
    pub cumulative_utility: (f64, f64),
    pub accepted: (f64, f64),
    pub offered: (f64, f64),
    /// Accepted mice, hares, elephants.
    pub tiers: [(f64, f64); 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub runs: usize,
    pub rounds: Vec<RoundSummary>,
    pub total_utility: (f64, f64),
    pub total_accepted: (f64, f64),
}

impl Report {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "runs: {}", self.runs);
        let _ = writeln!(
            s,
            "{:>5} {:>21} {:>21} {:>15} {:>11} {:>11} {:>11}",
            "round", "utility (mean±sd)", "cumulative", "accepted", "mice", "hares", "elephants"
        );
        for r in &self.rounds {
            let _ = writeln!(
                s,
                "{:>5} {:>21} {:>21} {:>15} {:>11} {:>11} {:>11}",
                r.round,
                pm(r.utility, 6),
                pm(r.cumulative_utility, 6),
                pm(r.accepted, 1),
                pm(r.tiers[0], 1),
                pm(r.tiers[1], 1),
                pm(r.tiers[2], 1),
            );
        }
        let _ = writeln!(
            s,
            "total utility {}  total accepted {}",
            pm(self.total_utility, 6),
            pm(self.total_accepted, 1)
        );
        s
    }

    /// Plot-ready per-round series.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "round",
            "utility_mean",
            "utility_sd",
            "cumulative_mean",
            "cumulative_sd",
            "accepted_mean",
            "accepted_sd",
            "offered_mean",
            "mice_mean",
            "hares_mean",
            "elephants_mean",
        ])?;
        for r in &self.rounds {
            w.write_record(
                [
                    r.round as f64,
                    r.utility.0,
                    r.utility.1,
                    r.cumulative_utility.0,
                    r.cumulative_utility.1,
                    r.accepted.0,
                    r.accepted.1,
                    r.offered.0,
                    r.tiers[0].0,
                    r.tiers[1].0,
                    r.tiers[2].0,
                ]
                .map(|x| x.to_string()),
            )?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn pm((m, sd): (f64, f64), digits: usize) -> String {
    format!("{m:.digits$}±{sd:.digits$}")
}

/// Aggregates runs round by round. Every run must cover the same rounds.
pub fn report(runs: &[RunSeries]) -> Result<Report> {
    let first = runs.first().ok_or_else(|| Error::Report("no runs".into()))?;
    let n_rounds = first.rows.len();
    if runs.iter().any(|r| r.rows.len() != n_rounds) {
        return Err(Error::Report("runs cover different numbers of rounds".into()));
    }
    let mut cumulative = vec![0.0; runs.len()];
    let mut rounds = Vec::with_capacity(n_rounds);
    for i in 0..n_rounds {
        let col = |f: &dyn Fn(&RoundMetrics) -> f64| -> Vec<f64> { runs.iter().map(|r| f(&r.rows[i])).collect() };
        let utility = col(&|m| m.utility_accepted);
        for (c, u) in cumulative.iter_mut().zip(&utility) {
            *c += u;
        }
        rounds.push(RoundSummary {
            round: first.rows[i].round,
            utility: mean_sd(&utility),
            cumulative_utility: mean_sd(&cumulative),
            accepted: mean_sd(&col(&|m| m.accepted as f64)),
            offered: mean_sd(&col(&|m| m.offered as f64)),
            tiers: [0, 1, 2].map(|t| mean_sd(&col(&|m| m.accepted_by_tier[t] as f64))),
        });
    }
    let totals: Vec<f64> = runs.iter().map(RunSeries::total_utility).collect();
    let accepted: Vec<f64> = runs.iter().map(RunSeries::total_accepted).collect();
    Ok(Report {
        runs: runs.len(),
        rounds,
        total_utility: mean_sd(&totals),
        total_accepted: mean_sd(&accepted),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub left: Report,
    pub right: Report,
    /// left / right of the mean total utility.
    pub utility_ratio: f64,
    pub accepted_ratio: f64,
    /// Per-round ratio of mean cumulative utility.
    pub cumulative_ratios: Vec<f64>,
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>5} {:>16} {:>16} {:>8}", "round", "left cum.", "right cum.", "ratio");
        for ((l, r), q) in self.left.rounds.iter().zip(&self.right.rounds).zip(&self.cumulative_ratios) {
            let _ = writeln!(
                s,
                "{:>5} {:>16.6} {:>16.6} {:>8.3}",
                l.round, l.cumulative_utility.0, r.cumulative_utility.0, q
            );
        }
        let _ = writeln!(
            s,
            "utility ratio {:.3}  accepted ratio {:.3}",
            self.utility_ratio, self.accepted_ratio
        );
        s
    }
}

/// Joins two sets of runs of the same experiment shape (rounds, domain and
/// seeds) and reports left/right ratios.
pub fn compare(left: &[RunSeries], right: &[RunSeries]) -> Result<Comparison> {
    let shape = |runs: &[RunSeries]| -> Vec<(usize, Option<(u32, u64)>)> {
        runs.iter()
            .map(|r| {
                (
                    r.rows.len(),
                    r.config.as_ref().map(|c| (c.workload.domain_size, c.workload.seed)),
                )
            })
            .collect()
    };
    if shape(left) != shape(right) {
        return Err(Error::Report(
            "runs differ in rounds, domain size or seeds and cannot be compared".into(),
        ));
    }
    let l = report(left)?;
    let r = report(right)?;
    let ratio = |a: f64, b: f64| if b == 0.0 { f64::INFINITY } else { a / b };
    let cumulative_ratios = l
        .rounds
        .iter()
        .zip(&r.rounds)
        .map(|(a, b)| ratio(a.cumulative_utility.0, b.cumulative_utility.0))
        .collect();
    Ok(Comparison {
        utility_ratio: ratio(l.total_utility.0, r.total_utility.0),
        accepted_ratio: ratio(l.total_accepted.0, r.total_accepted.0),
        cumulative_ratios,
        left: l,
        right: r,
    })
}
