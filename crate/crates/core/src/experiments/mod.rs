//! Monte-Carlo experiment drivers.
//!
//! Each driver fans replicas out over the rayon pool, one RNG stream per
//! replica derived from the configured seed, and reduces the results in
//! replica order so reports are bit-identical for any worker count.

mod branches;
mod connectivity;
mod ergodicity;
mod marginal;
mod meeting;
mod palm;
pub mod stats;
mod younger;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

pub use branches::exp_branch_sizes;
pub use connectivity::{exp_connectivity, first_quarter_components};
pub use ergodicity::exp_ergodicity;
pub(crate) use marginal::default_duration as marginal_duration;
pub use marginal::exp_marginal_dynamics;
pub use meeting::exp_meeting_bound;
pub use palm::{exp_palm_invariance, palm_summaries};
pub use younger::exp_younger_coalescence;

use crate::error::{validation, Result};
use crate::point_process::replica_seed;
use crate::pointfile::FORMAT_TAG;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Connectivity,
    BranchSizes,
    PalmInvariance,
    Ergodicity,
    MeetingBound,
    YoungerCoalescence,
    MarginalDynamics,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Connectivity,
        Experiment::BranchSizes,
        Experiment::PalmInvariance,
        Experiment::Ergodicity,
        Experiment::MeetingBound,
        Experiment::YoungerCoalescence,
        Experiment::MarginalDynamics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Connectivity => "connectivity",
            Experiment::BranchSizes => "branch-sizes",
            Experiment::PalmInvariance => "palm-invariance",
            Experiment::Ergodicity => "ergodicity",
            Experiment::MeetingBound => "meeting-bound",
            Experiment::YoungerCoalescence => "younger-coalescence",
            Experiment::MarginalDynamics => "marginal-dynamics",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|e| e.name()).collect()
    }

    /// Dimension used when none is given.
    pub fn default_dimension(self) -> usize {
        match self {
            Experiment::MeetingBound => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| validation(format!("unknown experiment '{s}'; available: {}", Self::names().join(", "))))
    }
}

/// Knobs shared by all drivers; each driver reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub d: usize,
    pub rate: f64,
    /// Side length of the periodic space cube.
    pub space: f64,
    /// Side lengths compared by branch-sizes.
    pub space_grid: Vec<f64>,
    /// Time knobs: window lengths, evaluation times or horizons.
    pub times: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    /// Initial walker separations for meeting-bound.
    pub separations: Vec<f64>,
    /// Side of the observation box Λ.
    pub region_side: f64,
    /// Spacing of the saturated initial grid.
    pub grid_spacing: f64,
    /// Point-shift orders for palm-invariance.
    pub shifts: Vec<u32>,
    /// Vertices drawn per replica for branch-sizes.
    pub samples: usize,
    /// Minimum number of events for marginal-dynamics.
    pub events: usize,
    pub alpha: f64,
    pub fraction_min: f64,
    pub components_min: f64,
    pub r_squared_min: f64,
    pub radius_bar: f64,
    pub exclusion_max: f64,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment, d: usize) -> Self {
        let mut cfg = ExperimentConfig {
            d,
            rate: 1.0,
            space: 20.0,
            space_grid: vec![20.0, 40.0],
            times: vec![250.0, 500.0, 1000.0],
            replicas: 50,
            seed: 7,
            separations: vec![5.0, 10.0],
            region_side: 4.0,
            grid_spacing: 0.25,
            shifts: vec![1, 3],
            samples: 200,
            events: 10_000,
            alpha: 0.01,
            fraction_min: 0.95,
            components_min: 10.0,
            r_squared_min: 0.9,
            radius_bar: 2.1,
            exclusion_max: 0.2,
        };
        match experiment {
            Experiment::Connectivity | Experiment::YoungerCoalescence => {
                if experiment == Experiment::YoungerCoalescence {
                    cfg.replicas = 20;
                }
                match d {
                    3 => {
                        cfg.space = 8.0;
                        cfg.fraction_min = 0.90;
                    }
                    4 => {
                        cfg.space = 16.0;
                        cfg.times = vec![4.0, 8.0, 16.0];
                    }
                    5 => {
                        cfg.space = 8.0;
                        cfg.times = vec![2.0, 4.0, 8.0];
                    }
                    _ => {}
                }
            }
            Experiment::BranchSizes => {
                cfg.times = vec![200.0];
                cfg.replicas = 20;
            }
            Experiment::PalmInvariance => {
                cfg.times = vec![50.0];
                cfg.replicas = 2000;
            }
            Experiment::Ergodicity => {
                cfg.space = 12.0;
                cfg.times = vec![1.0, 2.0, 4.0, 8.0];
                cfg.replicas = 500;
            }
            Experiment::MeetingBound => {
                cfg.times = vec![2000.0];
                cfg.replicas = 10_000;
            }
            Experiment::MarginalDynamics => {
                cfg.space = 4.0;
                cfg.replicas = 10;
                cfg.times = vec![marginal::default_duration(d, cfg.rate, cfg.replicas, cfg.events)];
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(validation("dimension must be at least 2"));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(validation("rate must be positive"));
        }
        if self.replicas == 0 {
            return Err(validation("replicas must be at least 1"));
        }
        if self.times.is_empty() || self.space_grid.is_empty() || self.separations.is_empty() || self.shifts.is_empty() {
            return Err(validation("knob grids must be non-empty"));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.space)
            || !self.space_grid.iter().all(|&v| positive(v))
            || !positive(self.region_side)
            || !positive(self.grid_spacing)
        {
            return Err(validation("lengths must be positive"));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(validation("alpha must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `key=value` pairs in a fixed order, used in report headers.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("d", self.d.to_string()),
            ("rate", self.rate.to_string()),
            ("space", self.space.to_string()),
            ("space_grid", list(&self.space_grid)),
            ("times", list(&self.times)),
            ("replicas", self.replicas.to_string()),
            ("seed", self.seed.to_string()),
            ("separations", list(&self.separations)),
            ("region_side", self.region_side.to_string()),
            ("grid_spacing", self.grid_spacing.to_string()),
            ("shifts", self.shifts.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
            ("samples", self.samples.to_string()),
            ("events", self.events.to_string()),
            ("alpha", self.alpha.to_string()),
            ("fraction_min", self.fraction_min.to_string()),
            ("components_min", self.components_min.to_string()),
            ("r_squared_min", self.r_squared_min.to_string()),
            ("radius_bar", self.radius_bar.to_string()),
            ("exclusion_max", self.exclusion_max.to_string()),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// A plain measurement, not a test.
    Info,
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Info => "info",
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub cell: String,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub n: u64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    /// Wall-clock time; never written to report files.
    #[serde(skip)]
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn new(experiment: Experiment, config: &ExperimentConfig) -> Self {
        ExperimentReport { experiment, config: config.clone(), rows: Vec::new(), runtime: Duration::ZERO }
    }

    pub fn info(&mut self, cell: impl Into<String>, statistic: impl Into<String>, value: f64, stderr: Option<f64>, n: usize) {
        self.rows.push(ReportRow {
            cell: cell.into(),
            statistic: statistic.into(),
            value,
            stderr,
            n: n as u64,
            verdict: Verdict::Info,
        });
    }

    pub fn check(&mut self, cell: impl Into<String>, statistic: impl Into<String>, value: f64, n: usize, verdict: Verdict) {
        self.rows.push(ReportRow {
            cell: cell.into(),
            statistic: statistic.into(),
            value,
            stderr: None,
            n: n as u64,
            verdict,
        });
    }

    pub fn find(&self, cell: &str, statistic: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.cell == cell && r.statistic == statistic)
    }

    pub fn checks(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.verdict != Verdict::Info)
    }

    /// Worst verdict among the checks; `Pass` when there are none.
    pub fn overall(&self) -> Verdict {
        self.checks().map(|r| r.verdict).max().unwrap_or(Verdict::Pass)
    }

    pub fn header_line(&self) -> String {
        let mut line = format!("{FORMAT_TAG} experiment={}", self.experiment);
        for (k, v) in self.config.echo() {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", self.header_line())?;
        writeln!(out, "experiment,cell,statistic,value,stderr,n,verdict")?;
        for r in &self.rows {
            let stderr = r.stderr.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.experiment,
                r.cell,
                r.statistic,
                r.value,
                stderr,
                r.n,
                r.verdict.as_str()
            )?;
        }
        Ok(())
    }

    /// One JSON record for the configuration, then one per row.
    pub fn write_jsonl<W: Write>(&self, out: &mut W) -> Result<()> {
        #[derive(Serialize)]
        struct Head<'a> {
            experiment: Experiment,
            version: &'a str,
            config: &'a ExperimentConfig,
        }
        #[derive(Serialize)]
        struct Record<'a> {
            experiment: Experiment,
            #[serde(flatten)]
            row: &'a ReportRow,
        }
        let io = |e: serde_json::Error| crate::error::Error::Io(e.into());
        let head = Head { experiment: self.experiment, version: "v1", config: &self.config };
        writeln!(out, "{}", serde_json::to_string(&head).map_err(io)?)?;
        for row in &self.rows {
            let rec = Record { experiment: self.experiment, row };
            writeln!(out, "{}", serde_json::to_string(&rec).map_err(io)?)?;
        }
        Ok(())
    }
}

/// Runs `f` once per replica with that replica's seed, in parallel, and
/// returns the results in replica order.
pub(crate) fn per_replica<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (0..cfg.replicas)
        .into_par_iter()
        .map(|i| f(i, replica_seed(cfg.seed, i as u64)))
        .collect()
}

/// Binomial proportion and its standard error.
pub(crate) fn proportion(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Verdict for "the means do not decrease along the grid": a decrease
/// within two standard errors is inconclusive, a larger one fails.
pub(crate) fn trend_verdict(means: &[(f64, f64)], increasing: bool) -> (Verdict, f64) {
    if means.len() < 2 {
        return (Verdict::Inconclusive, f64::NAN);
    }
    let mut verdict = Verdict::Pass;
    let mut worst = f64::INFINITY;
    for w in means.windows(2) {
        let (a, sa) = w[0];
        let (b, sb) = w[1];
        let step = if increasing { b - a } else { a - b };
        worst = worst.min(step);
        if step < 0.0 {
            let noise = 2.0 * (sa * sa + sb * sb).sqrt();
            let v = if -step <= noise { Verdict::Inconclusive } else { Verdict::Fail };
            verdict = verdict.max(v);
        }
    }
    (verdict, worst)
}

pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match experiment {
        Experiment::Connectivity => exp_connectivity(cfg),
        Experiment::BranchSizes => exp_branch_sizes(cfg),
        Experiment::PalmInvariance => exp_palm_invariance(cfg),
        Experiment::Ergodicity => exp_ergodicity(cfg),
        Experiment::MeetingBound => exp_meeting_bound(cfg),
        Experiment::YoungerCoalescence => exp_younger_coalescence(cfg),
        Experiment::MarginalDynamics => exp_marginal_dynamics(cfg),
    }?;
    report.runtime = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn trend_verdicts() {
        assert_eq!(trend_verdict(&[(0.5, 0.01), (0.6, 0.01)], true).0, Verdict::Pass);
        assert_eq!(trend_verdict(&[(0.5, 0.01), (0.49, 0.01)], true).0, Verdict::Inconclusive);
        assert_eq!(trend_verdict(&[(0.5, 0.01), (0.3, 0.01)], true).0, Verdict::Fail);
        assert_eq!(trend_verdict(&[(0.5, 0.01), (0.3, 0.01)], false).0, Verdict::Pass);
        assert_eq!(trend_verdict(&[(0.5, 0.01)], true).0, Verdict::Inconclusive);
    }

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig::defaults(Experiment::Connectivity, 2);
        let mut rep = ExperimentReport::new(Experiment::Connectivity, &cfg);
        rep.info("T=250", "components_mean", 3.5, Some(0.25), 50);
        rep.check("T=1000", "largest_fraction>=0.95", 0.97, 50, Verdict::Pass);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# poisson-forest v1 experiment=connectivity d=2 rate=1"));
        assert_eq!(lines[1], "experiment,cell,statistic,value,stderr,n,verdict");
        assert_eq!(lines[2], "connectivity,T=250,components_mean,3.5,0.25,50,info");
        assert_eq!(lines[3], "connectivity,T=1000,largest_fraction>=0.95,0.97,,50,pass");
        assert_eq!(rep.overall(), Verdict::Pass);
        let mut buf = Vec::new();
        rep.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["experiment"], "connectivity");
        let row: serde_json::Value = serde_json::from_str(text.lines().nth(2).unwrap()).unwrap();
        assert_eq!(row["verdict"], "pass");
        assert_eq!(row["cell"], "T=1000");
    }
}
