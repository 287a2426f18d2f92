use std::collections::BTreeSet;

use super::stats::linear_fit;
use super::{per_replica, proportion, Experiment, ExperimentConfig, ExperimentReport, Verdict};
use crate::error::Result;
use crate::forest::Forest;
use crate::point_process::{sample_poisson, Boundary, Window};
use crate::walks::{eta_from_initial, SiteKey, SpaceBox};

/// Grid of spacing `h` filling the space box of `window`.
pub(crate) fn saturated_grid(window: &Window, h: f64) -> Vec<Vec<f64>> {
    let k = window.space_dim();
    let counts: Vec<usize> = window.space_extent.iter().map(|&l| ((l / h).floor() as usize).max(1)).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        out.push((0..k).map(|i| window.space_lo(i) + idx[i] as f64 * h).collect());
        let mut axis = 0;
        loop {
            if axis == k {
                return out;
            }
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// For each time, whether the two coupled evolutions (from nothing and
/// from `grid`, same sample, started at `time_lo`) differ inside `region`.
fn coupled_differs(forest: &Forest, grid: &[Vec<f64>], region: &SpaceBox, times: &[f64]) -> Result<Vec<bool>> {
    let start = forest.window().time_lo;
    times
        .iter()
        .map(|&t| {
            let keys = |eta0: &[Vec<f64>]| -> Result<BTreeSet<SiteKey>> {
                Ok(eta_from_initial(forest, eta0, start, t)?.restrict(region).keys().into_iter().collect())
            };
            Ok(keys(&[])? != keys(grid)?)
        })
        .collect()
}

pub fn exp_ergodicity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let t_max = cfg.times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let window = Window::cube(cfg.d, cfg.space, 0.0, t_max, Boundary::Periodic)?;
    let region = SpaceBox::centered(&vec![0.0; cfg.d - 1], cfg.region_side)?;
    let grid = saturated_grid(&window, cfg.grid_spacing);

    let runs = per_replica(cfg, |_, seed| {
        let base = Forest::build(sample_poisson(cfg.rate, &window, seed)?)?;
        let doubled = Forest::build(sample_poisson(2.0 * cfg.rate, &window, seed)?)?;
        Ok((
            coupled_differs(&base, &grid, &region, &cfg.times)?,
            coupled_differs(&doubled, &grid, &region, &cfg.times)?,
        ))
    })?;

    let mut report = ExperimentReport::new(Experiment::Ergodicity, cfg);
    let n = runs.len();
    let mut p = Vec::new();
    let mut worst_double = f64::NEG_INFINITY;
    for (i, &t) in cfg.times.iter().enumerate() {
        let (pt, se) = proportion(runs.iter().filter(|r| r.0[i]).count(), n);
        let (p2, se2) = proportion(runs.iter().filter(|r| r.1[i]).count(), n);
        let cell = format!("t={t}");
        report.info(&cell, "p_hat", pt, Some(se), n);
        report.info(&cell, "p_hat_double_rate", p2, Some(se2), n);
        worst_double = worst_double.max(p2 - pt);
        p.push((t, pt));
    }
    p.sort_by(|a, b| a.0.total_cmp(&b.0));

    let positive: Vec<(f64, f64)> = p.iter().copied().filter(|&(_, v)| v > 0.0).collect();
    if positive.is_empty() {
        report.check("all", "coupled_before_first_grid_time", 0.0, n, Verdict::Pass);
    } else {
        // strictly decreasing while positive; once zero it stays zero
        let strictly = p.windows(2).all(|w| w[1].1 < w[0].1 || (w[0].1 == 0.0 && w[1].1 == 0.0));
        report.check("all", "p_strictly_decreasing", positive.len() as f64, n, Verdict::from_bool(strictly));
        let x: Vec<f64> = positive.iter().map(|v| v.0).collect();
        let y: Vec<f64> = positive.iter().map(|v| v.1.ln()).collect();
        match linear_fit(&x, &y) {
            Some(fit) => {
                report.check("all", "log_slope<0", fit.slope, n, Verdict::from_bool(fit.slope < 0.0));
                report.check(
                    "all",
                    format!("r_squared>={}", cfg.r_squared_min),
                    fit.r_squared,
                    n,
                    Verdict::from_bool(fit.r_squared >= cfg.r_squared_min),
                );
            }
            None => report.check("all", "log_slope<0", f64::NAN, n, Verdict::Inconclusive),
        }
    }
    report.check("all", "double_rate_not_higher", worst_double, n, Verdict::from_bool(worst_double <= 0.0));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_fills_the_box() {
        let w = Window::cube(3, 2.0, 0.0, 1.0, Boundary::Periodic).unwrap();
        let g = saturated_grid(&w, 0.5);
        assert_eq!(g.len(), 16);
        assert!(g.iter().all(|x| w.contains_space(x)));
    }

    #[test]
    fn distinct_starts_differ_at_time_zero() {
        let w = Window::cube(2, 12.0, 0.0, 8.0, Boundary::Periodic).unwrap();
        let f = Forest::build(sample_poisson(1.0, &w, 4).unwrap()).unwrap();
        let region = SpaceBox::centered(&[0.0], 4.0).unwrap();
        let grid = saturated_grid(&w, 0.25);
        assert_eq!(coupled_differs(&f, &grid, &region, &[0.0]).unwrap(), vec![true]);
        let d = coupled_differs(&f, &grid, &region, &[0.5, 1.0, 2.0, 4.0, 8.0]).unwrap();
        // once the evolutions agree on the region they keep agreeing
        assert!(d.windows(2).all(|w| w[0] || !w[1]));
    }
}
