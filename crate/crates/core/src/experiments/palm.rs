use super::stats::two_sample_ks;
use super::{per_replica, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use crate::error::{validation, Result};
use crate::forest::Forest;
use crate::point_process::{palm_version, sample_poisson, Boundary, PointId, Window};
use crate::succession::shift;

pub const SUMMARY_NAMES: [&str; 5] = ["nn1", "nn2", "nn3", "nn4", "count_r2"];

/// The configuration as seen from `slot`: space-time distances to the four
/// nearest other points and the number of other points within distance 2.
pub fn palm_summaries(forest: &Forest, slot: usize) -> [f64; 5] {
    let w = forest.window();
    let c = forest.point(slot);
    let mut nearest = [f64::INFINITY; 4];
    let mut close = 0;
    for s in 0..forest.len() {
        if s == slot {
            continue;
        }
        let p = forest.point(s);
        let dr = p.r - c.r;
        let d2 = w.dist2(&c.x, &p.x) + dr * dr;
        if d2 <= 4.0 {
            close += 1;
        }
        if d2 < nearest[3] {
            let mut i = 3;
            while i > 0 && nearest[i - 1] > d2 {
                nearest[i] = nearest[i - 1];
                i -= 1;
            }
            nearest[i] = d2;
        }
    }
    [nearest[0].sqrt(), nearest[1].sqrt(), nearest[2].sqrt(), nearest[3].sqrt(), close as f64]
}

pub fn exp_palm_invariance(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !(2..=3).contains(&cfg.d) {
        return Err(validation("palm-invariance supports d in 2..=3"));
    }
    let half = cfg.times[0];
    let window = Window::cube(cfg.d, cfg.space, -half, half, Boundary::Periodic)?;
    let mut orders: Vec<u32> = vec![0];
    orders.extend(cfg.shifts.iter().copied());
    orders.sort_unstable();
    orders.dedup();

    // per replica: summaries at X_n for every order, or None when some X_n is unresolved
    let per = per_replica(cfg, |_, seed| {
        let palm = palm_version(&sample_poisson(cfg.rate, &window, seed)?)?;
        let forest = Forest::build(palm)?;
        let origin = forest.slot(PointId(0))?;
        let mut out = Vec::with_capacity(orders.len());
        for &n in &orders {
            match shift(&forest, origin, n as i64) {
                Some(s) => out.push(palm_summaries(&forest, s)),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    })?;

    let mut report = ExperimentReport::new(Experiment::PalmInvariance, cfg);
    let total = per.len();
    let excluded = per.iter().filter(|r| r.is_none()).count();
    let exclusion = excluded as f64 / total as f64;
    let verdict = if exclusion > 0.5 {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(exclusion < cfg.exclusion_max)
    };
    report.check("all", format!("exclusion_fraction<{}", cfg.exclusion_max), exclusion, total, verdict);

    let column = |order_idx: usize, stat: usize, parity: Option<usize>| -> Vec<f64> {
        per.iter()
            .enumerate()
            .filter(|(i, _)| parity.is_none_or(|p| i % 2 == p))
            .filter_map(|(_, r)| r.as_ref().map(|v| v[order_idx][stat]))
            .collect()
    };

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &n in &cfg.shifts {
        pairs.push((0, orders.binary_search(&n).expect("order listed")));
    }
    let mut shift_idx: Vec<usize> = cfg.shifts.iter().map(|n| orders.binary_search(n).expect("order listed")).collect();
    shift_idx.sort_unstable();
    shift_idx.dedup();
    for w in shift_idx.windows(2) {
        pairs.push((w[0], w[1]));
    }

    for (a, b) in pairs {
        let cell = format!("n={}_vs_n={}", orders[a], orders[b]);
        for (stat, name) in SUMMARY_NAMES.iter().enumerate() {
            // distinct orders are compared on disjoint replica halves so the samples are independent
            let (xa, xb) = if a == b {
                (column(a, stat, None), column(b, stat, None))
            } else {
                (column(a, stat, Some(0)), column(b, stat, Some(1)))
            };
            if xa.is_empty() || xb.is_empty() {
                report.check(&cell, format!("ks_p:{name}"), f64::NAN, 0, Verdict::Inconclusive);
                continue;
            }
            let ks = two_sample_ks(&xa, &xb)?;
            let n = xa.len().min(xb.len());
            report.info(&cell, format!("ks_d:{name}"), ks.statistic, None, n);
            report.check(&cell, format!("ks_p:{name}"), ks.p_value, n, Verdict::from_bool(ks.p_value >= cfg.alpha));
        }
    }
    Ok(report)
}
