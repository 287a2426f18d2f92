use super::stats::clopper_pearson;
use super::{per_replica, proportion, trend_verdict, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use crate::error::{validation, Result};
use crate::point_process::{replica_seed, rng_from_seed};
use crate::walks::simulate_pair;

pub fn exp_meeting_bound(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.d < 4 {
        return Err(validation("meeting-bound needs d >= 4"));
    }
    if cfg.separations.iter().any(|&s| !(s > 2.0)) {
        return Err(validation("separations must exceed 2"));
    }
    let k = cfg.d - 1;
    let horizon = cfg.times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut report = ExperimentReport::new(Experiment::MeetingBound, cfg);
    let mut freqs = Vec::new();
    for (j, &sep) in cfg.separations.iter().enumerate() {
        let x = vec![0.0; k];
        let mut y = vec![0.0; k];
        y[0] = sep;
        let times = per_replica(cfg, |_, seed| {
            let mut rng = rng_from_seed(replica_seed(seed, j as u64 + 1));
            Ok(simulate_pair(cfg.rate, &x, &y, horizon, &mut rng).met)
        })?;
        let n = times.len();
        let met = times.iter().flatten().count();
        let met_half = times.iter().flatten().filter(|&&t| t <= horizon / 2.0).count();
        let (p, se) = proportion(met, n);
        let (p_half, se_half) = proportion(met_half, n);
        let (_, upper) = clopper_pearson(met as u64, n as u64, 0.99)?;
        let bound = (cfg.radius_bar / sep).powi(cfg.d as i32 - 2);
        let cell = format!("D={sep}");
        report.info(&cell, "meeting_frequency", p, Some(se), n);
        report.info(&cell, "meeting_frequency_half_horizon", p_half, Some(se_half), n);
        report.info(&cell, "bound", bound, None, n);
        let still_rising = p - p_half > 2.0 * se.max(1.0 / n as f64);
        let verdict = match (upper <= bound, still_rising) {
            (false, _) => Verdict::Fail,
            (true, true) => Verdict::Inconclusive,
            (true, false) => Verdict::Pass,
        };
        report.check(&cell, "ci99_upper<=bound", upper, n, verdict);
        freqs.push((p, se));
    }
    let (verdict, worst) = trend_verdict(&freqs, false);
    report.check("all", "frequency_nonincreasing_in_D", worst, cfg.replicas, verdict);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_walkers_meet_more_often() {
        let mut cfg = ExperimentConfig::defaults(Experiment::MeetingBound, 4);
        cfg.separations = vec![2.5, 6.0];
        cfg.times = vec![50.0];
        cfg.replicas = 400;
        let rep = exp_meeting_bound(&cfg).unwrap();
        let near = rep.find("D=2.5", "meeting_frequency").unwrap().value;
        let far = rep.find("D=6", "meeting_frequency").unwrap().value;
        assert!(near > far);
        assert!(exp_meeting_bound(&ExperimentConfig { d: 3, ..cfg }).is_err());
    }
}
