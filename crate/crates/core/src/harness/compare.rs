use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use super::output::{parse_cell, read_csv_with_hash, write_csv_with_hash, Aggregate};
use super::run::{ConditionMetrics, METRICS_HEADER};
use crate::error::{Error, Result};
use crate::sim::Setup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    StirReward,
    SpillCount,
    SlideD,
    OverturnTheta,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::StirReward, Metric::SpillCount, Metric::SlideD, Metric::OverturnTheta];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::StirReward => "stir_reward",
            Metric::SpillCount => "spill_count",
            Metric::SlideD => "slide_d",
            Metric::OverturnTheta => "overturn_theta",
        }
    }

    pub fn mean(self, m: &ConditionMetrics) -> Option<f64> {
        match self {
            Metric::StirReward => Some(m.stir_reward.mean),
            Metric::SpillCount => Some(m.spill_count.mean),
            Metric::SlideD => m.slide_d.map(|a| a.mean),
            Metric::OverturnTheta => m.overturn_theta.map(|a| a.mean),
        }
    }
}

impl ConditionMetrics {
    /// Reads the single row of a `metrics.csv`; returns it with the config hash.
    pub fn read(path: &Path) -> Result<(Self, String)> {
        let (hash, mut reader) = read_csv_with_hash(path)?;
        let bad = |m: &str| Error::Config(format!("{}: {m}", path.display()));
        if reader.headers()?.iter().ne(METRICS_HEADER) {
            return Err(bad("unexpected header"));
        }
        let record = reader.records().next().ok_or_else(|| bad("no data row"))??;
        let num = |i: usize| parse_cell(&record[i]);
        let agg = |i: usize| -> Result<Option<Aggregate>> {
            Ok(match (num(i)?, num(i + 1)?) {
                (Some(mean), Some(std)) => Some(Aggregate { mean, std }),
                _ => None,
            })
        };
        let setup = match &record[1] {
            "F" => Setup::Fixed,
            "U" => Setup::Unrestricted,
            other => return Err(bad(&format!("unknown setup `{other}`"))),
        };
        let count = |i: usize| record[i].parse::<usize>().map_err(|_| bad("bad count"));
        Ok((
            Self {
                condition: record[0].to_string(),
                setup,
                episodes: count(2)?,
                steps: count(3)?,
                stir_reward: agg(4)?.ok_or_else(|| bad("stir reward is N/A"))?,
                spill_count: agg(6)?.ok_or_else(|| bad("spill count is N/A"))?,
                slide_d: agg(8)?,
                overturn_theta: agg(10)?,
            },
            hash,
        ))
    }
}

/// How condition `a` relates to condition `b` on one metric's mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOrdering {
    pub metric: Metric,
    pub a: String,
    pub b: String,
    pub a_mean: f64,
    pub b_mean: f64,
    pub ordering: Ordering,
}

fn symbol(o: Ordering) -> &'static str {
    match o {
        Ordering::Less => "<",
        Ordering::Equal => "=",
        Ordering::Greater => ">",
    }
}

/// A qualitative ordering from the stirring study. `holds` is `None` when a
/// condition it needs was not evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedOrdering {
    pub description: String,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub conditions: Vec<ConditionMetrics>,
    pub pairs: Vec<PairOrdering>,
    pub expected: Vec<ExpectedOrdering>,
}

impl ComparisonReport {
    pub fn mean(&self, condition: &str, metric: Metric) -> Option<f64> {
        self.conditions.iter().find(|c| c.condition == condition).and_then(|c| metric.mean(c))
    }

    pub fn from_metrics(mut conditions: Vec<ConditionMetrics>) -> Self {
        conditions.sort_by(|a, b| a.condition.cmp(&b.condition));
        let mut pairs = Vec::new();
        for metric in Metric::ALL {
            for (i, a) in conditions.iter().enumerate() {
                for b in &conditions[i + 1..] {
                    if let (Some(x), Some(y)) = (metric.mean(a), metric.mean(b)) {
                        pairs.push(PairOrdering {
                            metric,
                            a: a.condition.clone(),
                            b: b.condition.clone(),
                            a_mean: x,
                            b_mean: y,
                            ordering: x.total_cmp(&y),
                        });
                    }
                }
            }
        }
        let mut report = Self { conditions, pairs, expected: Vec::new() };
        report.expected = report.expected_orderings();
        report
    }

    fn expected_orderings(&self) -> Vec<ExpectedOrdering> {
        use Metric::*;
        let chain = |metric: Metric, ids: &[&str], want: Ordering| -> ExpectedOrdering {
            let sep = format!(" {} ", symbol(want));
            let description = format!("{}: {}", metric.as_str(), ids.join(&sep));
            let values: Option<Vec<f64>> = ids.iter().map(|id| self.mean(id, metric)).collect();
            let holds = values.map(|v| v.windows(2).all(|w| w[0].total_cmp(&w[1]) == want));
            ExpectedOrdering { description, holds }
        };
        let not_above = |metric: Metric, a: &str, b: &str| -> ExpectedOrdering {
            let holds = match (self.mean(a, metric), self.mean(b, metric)) {
                (Some(x), Some(y)) => Some(x <= y),
                _ => None,
            };
            ExpectedOrdering { description: format!("{}: {a} <= {b}", metric.as_str()), holds }
        };
        vec![
            chain(StirReward, &["pi_b-F", "pi_b-U", "L4-U"], Ordering::Greater),
            chain(SpillCount, &["L4-U", "pi_b-U"], Ordering::Less),
            chain(SlideD, &["L4-U", "pi_b-U"], Ordering::Less),
            chain(SpillCount, &["L2-F", "pi_b-F"], Ordering::Less),
            not_above(OverturnTheta, "L4-U", "pi_b-U"),
        ]
    }

    /// `metric,a,b,a_mean,b_mean,relation`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "a", "b", "a_mean", "b_mean", "relation"])?;
        for p in &self.pairs {
            w.write_record([
                p.metric.as_str(),
                &p.a,
                &p.b,
                &p.a_mean.to_string(),
                &p.b_mean.to_string(),
                symbol(p.ordering),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} condition(s), {} pair ordering(s)", self.conditions.len(), self.pairs.len())?;
        for p in &self.pairs {
            writeln!(f, "  {:<15} {} ({:.4}) {} {} ({:.4})", p.metric.as_str(), p.a, p.a_mean, symbol(p.ordering), p.b, p.b_mean)?;
        }
        for e in &self.expected {
            let status = match e.holds {
                Some(true) => "holds",
                Some(false) => "VIOLATED",
                None => "n/a",
            };
            writeln!(f, "  [{status:>8}] {}", e.description)?;
        }
        Ok(())
    }
}

/// Reads every `<dir>/<condition>/metrics.csv` and orders the conditions
/// pairwise. Also writes `<dir>/comparison.csv`.
pub fn compare(dir: &Path) -> Result<ComparisonReport> {
    let entries = std::fs::read_dir(dir).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(dir.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("metrics.csv"))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut conditions = Vec::new();
    let mut hashes = Vec::new();
    for p in &paths {
        let (m, hash) = ConditionMetrics::read(p)?;
        conditions.push(m);
        hashes.push(hash);
    }
    let report = ComparisonReport::from_metrics(conditions);
    hashes.dedup();
    let hash = match hashes.as_slice() {
        [one] => one.clone(),
        _ => "mixed".to_string(),
    };
    write_csv_with_hash(&dir.join("comparison.csv"), &hash, |out| report.write_csv(out))?;
    Ok(report)
}
