use super::stats::mean_stderr;
use super::{per_replica, trend_verdict, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use crate::error::{validation, Result};
use crate::forest::Forest;
use crate::point_process::{sample_poisson, Boundary, Window};

/// Per-walk coalescence flags, indexed by slot.
pub(crate) struct Coalescence {
    /// Some ancestor receives a second daughter line.
    pub any: Vec<bool>,
    /// Some step of the lineage lands on a mother that also has a later
    /// sister in the sister order.
    pub younger: Vec<bool>,
    /// Classification of the first coalescence, if any.
    pub first_younger: Vec<Option<bool>>,
}

pub(crate) fn coalescence_flags(forest: &Forest) -> Coalescence {
    let n = forest.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| forest.point(b).time_order(forest.point(a)));
    let mut flags = Coalescence { any: vec![false; n], younger: vec![false; n], first_younger: vec![None; n] };
    for s in order {
        let Some(m) = forest.mother_slot(s) else { continue };
        let sisters = forest.children_slots(m).len();
        let here = sisters >= 2;
        let younger_here = forest.rank_slot(s) < sisters;
        flags.any[s] = here || flags.any[m];
        flags.younger[s] = younger_here || flags.younger[m];
        flags.first_younger[s] = if here { Some(younger_here) } else { flags.first_younger[m] };
    }
    flags
}

pub fn exp_younger_coalescence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !(2..=3).contains(&cfg.d) {
        return Err(validation("younger-coalescence supports d in 2..=3"));
    }
    let mut report = ExperimentReport::new(Experiment::YoungerCoalescence, cfg);
    let mut younger_means = Vec::new();
    let mut any_last = 0.0;
    for &t in &cfg.times {
        let window = Window::cube(cfg.d, cfg.space, 0.0, t, Boundary::Periodic)?;
        let cells = per_replica(cfg, |_, seed| {
            let forest = Forest::build(sample_poisson(cfg.rate, &window, seed)?)?;
            let flags = coalescence_flags(&forest);
            let cutoff = t / 4.0;
            let walks: Vec<usize> = (0..forest.len()).filter(|&s| forest.point(s).r <= cutoff).collect();
            let count = walks.len().max(1) as f64;
            let any = walks.iter().filter(|&&s| flags.any[s]).count() as f64 / count;
            let younger = walks.iter().filter(|&&s| flags.younger[s]).count() as f64 / count;
            let firsts: Vec<bool> = walks.iter().filter_map(|&s| flags.first_younger[s]).collect();
            let first = if firsts.is_empty() {
                f64::NAN
            } else {
                firsts.iter().filter(|&&y| y).count() as f64 / firsts.len() as f64
            };
            Ok((any, younger, first, walks.len()))
        })?;
        let n = cells.len();
        let any: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let younger: Vec<f64> = cells.iter().map(|c| c.1).collect();
        let first: Vec<f64> = cells.iter().map(|c| c.2).filter(|v| !v.is_nan()).collect();
        let walks: usize = cells.iter().map(|c| c.3).sum();
        let cell = format!("T={t}");
        let (am, as_) = mean_stderr(&any);
        let (ym, ys) = mean_stderr(&younger);
        let (fm, fs) = mean_stderr(&first);
        report.info(&cell, "walks", walks as f64, None, n);
        report.info(&cell, "any_coalescence_fraction", am, Some(as_), n);
        report.info(&cell, "younger_coalescence_fraction", ym, Some(ys), n);
        report.info(&cell, "first_partner_younger_fraction", fm, Some(fs), first.len());
        younger_means.push((ym, ys));
        any_last = am;
    }
    let n = cfg.replicas;
    let (verdict, worst) = trend_verdict(&younger_means, true);
    report.check("all", "younger_fraction_nondecreasing", worst, n, verdict);
    let last = format!("T={}", cfg.times[cfg.times.len() - 1]);
    report.check(
        &last,
        format!("any_coalescence>={}", cfg.fraction_min),
        any_last,
        n,
        Verdict::from_bool(any_last >= cfg.fraction_min),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, id};

    #[test]
    fn fixture_two_classification() {
        let f = fixtures::f2();
        let flags = coalescence_flags(&f);
        let p = f.slot(id("p")).unwrap();
        let q = f.slot(id("q")).unwrap();
        let m = f.slot(id("m")).unwrap();
        // p and q share the mother m; p comes first in the sister order
        assert!(flags.any[p] && flags.any[q]);
        assert_eq!(flags.first_younger[p], Some(true));
        assert_eq!(flags.first_younger[q], Some(false));
        assert!(!flags.any[m]);
    }
}
