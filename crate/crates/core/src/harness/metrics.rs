use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const METRICS_SCHEMA: &str = "dpplan.metrics/v1";

/// Per-round outcome of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u32,
    pub offered: usize,
    pub accepted: usize,
    pub utility_offered: f64,
    pub utility_accepted: f64,
    /// Mouse, hare, elephant.
    pub offered_by_tier: [usize; 3],
    pub accepted_by_tier: [usize; 3],
    pub segments: usize,
    pub contested: usize,
    pub auto_accepted: usize,
    pub auto_rejected: usize,
    pub residual: usize,
    /// False when the exact solver hit its time limit.
    pub optimal: bool,
    /// Share of the window's total budget consumed, per order; `None` at
    /// orders the global budget rules out.
    pub utilization: Vec<Option<f64>>,
    pub wall_ms: f64,
}

const FIXED: [&str; 16] = [
    "round",
    "offered",
    "accepted",
    "utility_offered",
    "utility_accepted",
    "offered_mice",
    "offered_hares",
    "offered_elephants",
    "accepted_mice",
    "accepted_hares",
    "accepted_elephants",
    "segments",
    "contested",
    "auto_accepted",
    "auto_rejected",
    "residual",
];

/// Writes the rows with a schema comment line. Utilization columns are
/// named after their orders.
pub fn write_metrics<W: Write>(mut out: W, alphas: &[f64], rows: &[RoundMetrics]) -> Result<()> {
    writeln!(out, "# {METRICS_SCHEMA}").map_err(|e| Error::io("metrics", e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.push("optimal".into());
    header.extend(alphas.iter().map(|a| format!("util_a{a}")));
    header.push("wall_ms".into());
    w.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = vec![
            r.round.to_string(),
            r.offered.to_string(),
            r.accepted.to_string(),
            format!("{:?}", r.utility_offered),
            format!("{:?}", r.utility_accepted),
        ];
        rec.extend(r.offered_by_tier.iter().map(|x| x.to_string()));
        rec.extend(r.accepted_by_tier.iter().map(|x| x.to_string()));
        rec.extend([r.segments, r.contested, r.auto_accepted, r.auto_rejected, r.residual].map(|x| x.to_string()));
        rec.push(r.optimal.to_string());
        rec.extend(r.utilization.iter().map(|u| u.map(|x| format!("{x:?}")).unwrap_or_default()));
        rec.push(format!("{:.3}", r.wall_ms));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("metrics", e))?;
    Ok(())
}

pub fn read_metrics<R: Read>(input: R) -> Result<(Vec<f64>, Vec<RoundMetrics>)> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text).map_err(|e| Error::io("metrics", e))?;
    let first = text.lines().next().unwrap_or_default();
    let tag = first.trim_start_matches('#').trim();
    if tag != METRICS_SCHEMA {
        return Err(Error::Schema {
            expected: METRICS_SCHEMA.into(),
            found: tag.into(),
        });
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    let alphas: Vec<f64> = header
        .iter()
        .filter_map(|h| h.strip_prefix("util_a"))
        .map(|a| a.parse::<f64>().map_err(|_| Error::Report(format!("bad column {a}"))))
        .collect::<Result<_>>()?;
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Report(format!("metrics file lacks column {name}")))
    };
    let idx: Vec<usize> = FIXED.iter().map(|n| col(n)).collect::<Result<_>>()?;
    let opt = col("optimal")?;
    let wall = col("wall_ms")?;
    let util_start = col(&format!("util_a{}", alphas.first().copied().unwrap_or(0.0))).ok();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        let int = |k: usize| -> Result<usize> {
            get(k).parse().map_err(|_| Error::Report(format!("bad integer in {}", FIXED[k])))
        };
        let real = |k: usize| -> Result<f64> {
            get(k).parse().map_err(|_| Error::Report(format!("bad number in {}", FIXED[k])))
        };
        let utilization = match util_start {
            Some(s) => (0..alphas.len())
                .map(|j| rec.get(s + j).filter(|v| !v.is_empty()).map(|v| v.parse::<f64>()).transpose())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Report("bad utilization".into()))?,
            None => Vec::new(),
        };
        rows.push(RoundMetrics {
            round: int(0)? as u32,
            offered: int(1)?,
            accepted: int(2)?,
            utility_offered: real(3)?,
            utility_accepted: real(4)?,
            offered_by_tier: [int(5)?, int(6)?, int(7)?],
            accepted_by_tier: [int(8)?, int(9)?, int(10)?],
            segments: int(11)?,
            contested: int(12)?,
            auto_accepted: int(13)?,
            auto_rejected: int(14)?,
            residual: int(15)?,
            optimal: rec.get(opt) == Some("true"),
            utilization,
            wall_ms: rec.get(wall).and_then(|v| v.parse().ok()).unwrap_or(0.0),
        });
    }
    Ok((alphas, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(round: u32) -> RoundMetrics {
        RoundMetrics {
            round,
            offered: 10,
            accepted: 6,
            utility_offered: 0.1,
            utility_accepted: 0.0625,
            offered_by_tier: [4, 3, 3],
            accepted_by_tier: [4, 2, 0],
            segments: 9,
            contested: 2,
            auto_accepted: 5,
            auto_rejected: 1,
            residual: 4,
            optimal: true,
            utilization: vec![None, Some(0.25)],
            wall_ms: 1.5,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(0), row(1)];
        let mut buf = Vec::new();
        write_metrics(&mut buf, &[2.0, 64.0], &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dpplan.metrics/v1\n"));
        assert!(text.contains("util_a64"));
        let (alphas, back) = read_metrics(buf.as_slice()).unwrap();
        assert_eq!(alphas, vec![2.0, 64.0]);
        assert_eq!(back, rows);
    }

    #[test]
    fn missing_tag_is_an_error() {
        assert!(matches!(read_metrics("round\n".as_bytes()), Err(Error::Schema { .. })));
    }
}
