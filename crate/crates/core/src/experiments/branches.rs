use rand::Rng;

use super::stats::mean_stderr;
use super::{per_replica, proportion, trend_verdict, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use crate::error::{validation, Result};
use crate::forest::Forest;
use crate::point_process::{replica_seed, rng_from_seed, sample_poisson, Boundary, Window};

/// Size of the branch below `slot`, or `None` once the enumeration touches
/// the bottom time slab of thickness 1 or spreads half way round the torus.
pub(crate) fn enumerate_branch(forest: &Forest, slot: usize) -> Option<usize> {
    let w = forest.window();
    let k = w.space_dim();
    let floor = w.time_lo + 1.0;
    let mut stack: Vec<(usize, Vec<f64>)> = vec![(slot, vec![0.0; k])];
    let mut size = 0;
    while let Some((s, offset)) = stack.pop() {
        let p = forest.point(s);
        if p.r < floor {
            return None;
        }
        if offset.iter().zip(&w.space_extent).any(|(o, l)| o.abs() >= l / 2.0) {
            return None;
        }
        size += 1;
        for &c in forest.children_slots(s) {
            let step = w.displacement(&p.x, &forest.point(c).x);
            stack.push((c, offset.iter().zip(&step).map(|(a, b)| a + b).collect()));
        }
    }
    Some(size)
}

/// Histogram bins `1, 2, 3-4, 5-8, ...`.
fn bin_of(size: usize) -> usize {
    (usize::BITS - (size - 1).leading_zeros()) as usize
}

fn bin_label(bin: usize) -> String {
    match bin {
        0 => "size=1".into(),
        1 => "size=2".into(),
        b => format!("size={}-{}", (1usize << (b - 1)) + 1, 1usize << b),
    }
}

pub fn exp_branch_sizes(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.samples == 0 {
        return Err(validation("samples must be at least 1"));
    }
    let mut report = ExperimentReport::new(Experiment::BranchSizes, cfg);
    let t = cfg.times[0];
    let mut hit_fractions = Vec::new();
    let mut total_attempts = 0;
    for &side in &cfg.space_grid {
        let window = Window::cube(cfg.d, side, 0.0, t, Boundary::Periodic)?;
        let runs = per_replica(cfg, |_, seed| {
            let forest = Forest::build(sample_poisson(cfg.rate, &window, seed)?)?;
            if forest.is_empty() {
                return Ok(Vec::new());
            }
            let mut rng = rng_from_seed(replica_seed(seed, 1));
            Ok((0..cfg.samples)
                .map(|_| enumerate_branch(&forest, rng.random_range(0..forest.len())))
                .collect::<Vec<_>>())
        })?;
        let outcomes: Vec<Option<usize>> = runs.into_iter().flatten().collect();
        let attempts = outcomes.len();
        total_attempts += attempts;
        let sizes: Vec<usize> = outcomes.iter().flatten().copied().collect();
        let (hit, hit_se) = proportion(attempts - sizes.len(), attempts);
        let cell = format!("L={side}");
        report.info(&cell, "boundary_hit_fraction", hit, Some(hit_se), attempts);
        let as_f64: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        let (mean, se) = mean_stderr(&as_f64);
        report.info(&cell, "branch_size_mean", mean, Some(se), sizes.len());
        let mut bins = Vec::new();
        for &s in &sizes {
            let b = bin_of(s);
            if bins.len() <= b {
                bins.resize(b + 1, 0usize);
            }
            bins[b] += 1;
        }
        for (b, &count) in bins.iter().enumerate() {
            report.info(&cell, bin_label(b), count as f64 / sizes.len() as f64, None, sizes.len());
        }
        let leaf_largest = bins.first().is_some_and(|&first| bins.iter().all(|&c| c <= first));
        let leaf_mass = bins.first().map_or(0.0, |&c| c as f64 / sizes.len().max(1) as f64);
        report.check(&cell, "leaf_bin_largest", leaf_mass, sizes.len(), Verdict::from_bool(leaf_largest));
        hit_fractions.push((hit, hit_se));
    }
    let (verdict, worst) = trend_verdict(&hit_fractions, false);
    report.check("all", "boundary_hit_fraction_decreasing", worst, total_attempts, verdict);
    report.check("all", "enumerations_terminated", total_attempts as f64, total_attempts, Verdict::Pass);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{Point, PointSample};

    #[test]
    fn bins() {
        let labels: Vec<String> = [1, 2, 3, 4, 5, 8, 9].iter().map(|&s| bin_label(bin_of(s))).collect();
        assert_eq!(labels, ["size=1", "size=2", "size=3-4", "size=3-4", "size=5-8", "size=5-8", "size=9-16"]);
    }

    #[test]
    fn leaves_and_slab() {
        let w = Window::cube(2, 10.0, 0.0, 5.0, Boundary::Periodic).unwrap();
        let pts = vec![
            Point::new(1, vec![0.0], 3.0),
            Point::new(2, vec![0.5], 2.0),
            Point::new(3, vec![-0.6], 0.5),
        ];
        let f = Forest::build(PointSample::new(w, 1.0, pts, 0, false).unwrap()).unwrap();
        // point 2 is a leaf above the slab; point 1's branch reaches point 3 inside it
        assert_eq!(enumerate_branch(&f, 1), Some(1));
        assert_eq!(enumerate_branch(&f, 0), None);
    }

    #[test]
    fn sizes_agree_with_forest_branches() {
        let w = Window::cube(2, 30.0, 0.0, 40.0, Boundary::Periodic).unwrap();
        let f = Forest::build(sample_poisson(1.0, &w, 12).unwrap()).unwrap();
        for s in (0..f.len()).step_by(17) {
            if let Some(size) = enumerate_branch(&f, s) {
                assert_eq!(size, f.branch(f.id(s)).unwrap().size());
            }
        }
    }
}
