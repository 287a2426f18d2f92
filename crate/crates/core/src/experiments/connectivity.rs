use super::stats::mean_stderr;
use super::{per_replica, trend_verdict, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use crate::error::{validation, Result};
use crate::forest::{ComponentSummary, Forest};
use crate::point_process::{sample_poisson, Boundary, Window};
use crate::walks::SpaceBox;

/// Components among the points born in the first quarter of the window's
/// time range, sizes counted by those points only.
pub fn first_quarter_components(forest: &Forest) -> ComponentSummary {
    first_quarter_components_in(forest, None)
}

/// As [`first_quarter_components`], keeping only points inside `region`.
pub fn first_quarter_components_in(forest: &Forest, region: Option<&SpaceBox>) -> ComponentSummary {
    let w = forest.window();
    let cutoff = w.time_lo + w.duration() / 4.0;
    ComponentSummary::from_labels(
        (0..forest.len())
            .filter(|&s| {
                let p = forest.point(s);
                p.r <= cutoff && region.is_none_or(|b| b.contains(&p.x))
            })
            .map(|s| forest.component_slot(s)),
    )
}

struct Cell {
    components: f64,
    largest: f64,
    points: f64,
}

pub fn exp_connectivity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !(2..=5).contains(&cfg.d) {
        return Err(validation("connectivity supports d in 2..=5"));
    }
    // from d = 4 on, counts are taken in a fixed central box so the finite
    // torus does not force every lineage to merge
    let region = if cfg.d >= 4 {
        if cfg.region_side >= cfg.space {
            return Err(validation("region_side must be smaller than the torus side"));
        }
        Some(SpaceBox::centered(&vec![0.0; cfg.d - 1], cfg.region_side)?)
    } else {
        None
    };
    let mut report = ExperimentReport::new(Experiment::Connectivity, cfg);
    let space_volume = match &region {
        Some(b) => b.volume(),
        None => cfg.space.powi(cfg.d as i32 - 1),
    };
    let mut fractions = Vec::new();
    let mut counts = Vec::new();
    for &t in &cfg.times {
        let window = Window::cube(cfg.d, cfg.space, 0.0, t, Boundary::Periodic)?;
        let cells = per_replica(cfg, |_, seed| {
            let forest = Forest::build(sample_poisson(cfg.rate, &window, seed)?)?;
            let summary = first_quarter_components_in(&forest, region.as_ref());
            Ok(Cell {
                components: summary.count as f64,
                largest: summary.largest_fraction,
                points: summary.sizes.iter().sum::<usize>() as f64,
            })
        })?;
        let n = cells.len();
        let comp: Vec<f64> = cells.iter().map(|c| c.components).collect();
        let large: Vec<f64> = cells.iter().map(|c| c.largest).collect();
        let pts: Vec<f64> = cells.iter().map(|c| c.points).collect();
        let (cm, cs) = mean_stderr(&comp);
        let (lm, ls) = mean_stderr(&large);
        let (pm, ps) = mean_stderr(&pts);
        let cell = format!("T={t}");
        report.info(&cell, "components_mean", cm, Some(cs), n);
        report.info(&cell, "largest_fraction_mean", lm, Some(ls), n);
        report.info(&cell, "first_quarter_points_mean", pm, Some(ps), n);
        report.info(&cell, "component_density", cm / space_volume, Some(cs / space_volume), n);
        fractions.push((lm, ls));
        counts.push((cm, cs));
    }

    let n = cfg.replicas;
    let last = format!("T={}", cfg.times[cfg.times.len() - 1]);
    let (count_last, _) = counts[counts.len() - 1];
    let (fraction_last, _) = fractions[fractions.len() - 1];
    if cfg.d <= 3 {
        let (verdict, worst) = trend_verdict(&fractions, true);
        report.check("all", "largest_fraction_nondecreasing", worst, n, verdict);
        report.check(
            &last,
            format!("largest_fraction>={}", cfg.fraction_min),
            fraction_last,
            n,
            Verdict::from_bool(fraction_last >= cfg.fraction_min),
        );
    } else {
        report.check(
            &last,
            format!("components>={}", cfg.components_min),
            count_last,
            n,
            Verdict::from_bool(count_last >= cfg.components_min),
        );
        // the forest must not be collapsing into a single tree
        report.check(&last, "largest_fraction<=0.5", fraction_last, n, Verdict::from_bool(fraction_last <= 0.5));
        let (count_first, _) = counts[0];
        let ratio = count_last / count_first;
        let verdict = if cfg.times.len() < 2 {
            Verdict::Inconclusive
        } else {
            Verdict::from_bool(ratio >= 0.5)
        };
        report.check("all", "components_last_over_first>=0.5", ratio, n, verdict);
    }
    Ok(report)
}
