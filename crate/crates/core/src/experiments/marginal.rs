use super::stats::{ball_marginal_cdf, ks_test, mean_stderr};
use super::{per_replica, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use crate::error::{validation, Result};
use crate::forest::GridIndex;
use crate::point_process::{sample_poisson, unit_ball_volume, Boundary, Window};

/// Window length giving about 15% more than `events` jumps in total.
pub(crate) fn default_duration(d: usize, rate: f64, replicas: usize, events: usize) -> f64 {
    let per_replica = 1.15 * events as f64 / replicas.max(1) as f64;
    (per_replica / (unit_ball_volume(d - 1) * rate)).ceil()
}

/// Waiting times and jump displacements of one walker started at the
/// origin at `time_lo`, driven by every point of the sample.
pub(crate) fn isolated_walk(index: &GridIndex) -> (Vec<f64>, Vec<Vec<f64>>) {
    let w = index.window();
    let mut x = vec![0.0; w.space_dim()];
    let mut r = w.time_lo;
    let mut waits = Vec::new();
    let mut jumps = Vec::new();
    while let Some(hit) = index.first_obstacle(&x, r) {
        let target = index.coords_of(hit.slot).to_vec();
        waits.push(hit.tau - r);
        jumps.push(w.displacement(&x, &target));
        x = target;
        r = hit.tau;
    }
    (waits, jumps)
}

pub fn exp_marginal_dynamics(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.space <= 2.0 {
        return Err(validation("the torus must be wider than 2 so a ball does not wrap onto itself"));
    }
    let k = cfg.d - 1;
    let window = Window::cube(cfg.d, cfg.space, 0.0, cfg.times[0], Boundary::Periodic)?;
    let runs = per_replica(cfg, |_, seed| {
        let sample = sample_poisson(cfg.rate, &window, seed)?;
        Ok(isolated_walk(&GridIndex::build(&sample)?))
    })?;
    let mut waits = Vec::new();
    let mut jumps = Vec::new();
    for (w, j) in runs {
        waits.extend(w);
        jumps.extend(j);
    }
    let n = waits.len();
    let mut report = ExperimentReport::new(Experiment::MarginalDynamics, cfg);
    let enough = n >= cfg.events;
    let gate = |v: Verdict| if enough || v == Verdict::Fail { v } else { Verdict::Inconclusive };
    report.check("all", format!("events>={}", cfg.events), n as f64, n, gate(Verdict::Pass));
    if n == 0 {
        return Ok(report);
    }

    let rate = unit_ball_volume(k) * cfg.rate;
    report.info("waiting", "target_rate", rate, None, n);
    let (mw, sw) = mean_stderr(&waits);
    report.info("waiting", "mean", mw, Some(sw), n);
    let ks = ks_test(&waits, |t| 1.0 - (-rate * t.max(0.0)).exp())?;
    report.info("waiting", "ks_d", ks.statistic, None, n);
    report.check("waiting", "ks_p_exponential", ks.p_value, n, gate(Verdict::from_bool(ks.p_value >= cfg.alpha)));

    for axis in 0..k {
        let coord: Vec<f64> = jumps.iter().map(|j| j[axis]).collect();
        let cell = format!("jump_axis={axis}");
        let ks = ks_test(&coord, |u| ball_marginal_cdf(k, u))?;
        report.info(&cell, "ks_d", ks.statistic, None, n);
        report.check(&cell, "ks_p_ball_marginal", ks.p_value, n, gate(Verdict::from_bool(ks.p_value >= cfg.alpha)));
        let (m, se) = mean_stderr(&coord);
        report.info(&cell, "mean_displacement", m, Some(se), n);
        let z = if se > 0.0 { m / se } else { 0.0 };
        report.check(&cell, "mean_displacement_z<=4", z, n, gate(Verdict::from_bool(z.abs() <= 4.0)));
    }
    let norms: Vec<f64> = jumps.iter().map(|j| j.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let longest = norms.iter().copied().fold(0.0, f64::max);
    report.check("all", "jump_norm<=1", longest, n, Verdict::from_bool(longest <= 1.0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(default_duration(2, 1.0, 10, 10_000), 575.0);
        assert!(default_duration(3, 1.0, 10, 10_000) * std::f64::consts::PI * 10.0 >= 11_500.0);
    }

    #[test]
    fn isolated_walk_matches_probe_trajectory() {
        use crate::forest::Forest;
        use crate::walks::probe_trajectory;
        let w = Window::cube(3, 5.0, 0.0, 30.0, Boundary::Periodic).unwrap();
        let f = Forest::build(sample_poisson(1.0, &w, 2).unwrap()).unwrap();
        let (waits, jumps) = isolated_walk(f.index());
        let tr = probe_trajectory(&f, &[0.0, 0.0], 0.0, 30.0).unwrap();
        assert_eq!(waits, tr.waiting_times());
        assert_eq!(jumps, tr.displacements(&w));
    }
}
