//! Backward sweep collecting the points that determine `η_t` on a region.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{validation, Result};
use crate::forest::Forest;
use crate::point_process::{PointId, Window};

/// Axis-aligned closed box in space coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SpaceBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(validation("box corners must have equal length and lo <= hi"));
        }
        Ok(SpaceBox { lo, hi })
    }

    /// Cube of side `side` centred at `center`.
    pub fn centered(center: &[f64], side: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - side / 2.0).collect(),
            center.iter().map(|c| c + side / 2.0).collect(),
        )
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    fn inside(&self, window: &Window) -> bool {
        self.lo.len() == window.space_dim()
            && (0..self.lo.len()).all(|i| self.lo[i] >= window.space_lo(i) && self.hi[i] <= window.space_hi(i))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DependenceSet {
    /// Sorted.
    pub ids: Vec<PointId>,
    /// The swept region was fully covered before reaching `time_lo`.
    pub emptied: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Relation {
    Inside,
    Partial,
    Disjoint,
}

#[derive(Clone, Debug)]
struct Cell {
    center: Vec<f64>,
    half: Vec<f64>,
    depth: u8,
}

fn relation(window: &Window, ball: &[f64], cell: &Cell) -> Relation {
    let mut near = 0.0;
    let mut far = 0.0;
    for i in 0..ball.len() {
        let delta = window.axis_delta(i, ball[i], cell.center[i]).abs();
        let n = (delta - cell.half[i]).max(0.0);
        let f = delta + cell.half[i];
        near += n * n;
        far += f * f;
    }
    if far <= 1.0 {
        Relation::Inside
    } else if near > 1.0 {
        Relation::Disjoint
    } else {
        Relation::Partial
    }
}

fn split(cell: &Cell) -> Vec<Cell> {
    let k = cell.center.len();
    let half: Vec<f64> = cell.half.iter().map(|h| h / 2.0).collect();
    (0..1usize << k)
        .map(|mask| Cell {
            center: (0..k)
                .map(|i| cell.center[i] + if mask >> i & 1 == 1 { half[i] } else { -half[i] })
                .collect(),
            half: half.clone(),
            depth: cell.depth + 1,
        })
        .collect()
}

/// Conservative tracker of the uncovered part of a box: it only reports
/// empty once every piece lies inside a single ball.
struct Coverage<'w> {
    window: &'w Window,
    pending: Vec<Cell>,
    max_depth: u8,
}

impl<'w> Coverage<'w> {
    fn new(window: &'w Window, region: &SpaceBox) -> Self {
        let k = region.lo.len();
        let counts: Vec<usize> = (0..k)
            .map(|i| (((region.hi[i] - region.lo[i]) / 0.5).ceil() as usize).max(1))
            .collect();
        let half: Vec<f64> = (0..k)
            .map(|i| (region.hi[i] - region.lo[i]) / counts[i] as f64 / 2.0)
            .collect();
        let mut pending = Vec::new();
        let mut idx = vec![0usize; k];
        loop {
            pending.push(Cell {
                center: (0..k).map(|i| region.lo[i] + (2 * idx[i] + 1) as f64 * half[i]).collect(),
                half: half.clone(),
                depth: 0,
            });
            let mut axis = 0;
            loop {
                if axis == k {
                    let max_depth = match k {
                        1 => 30,
                        2 => 14,
                        3 => 8,
                        4 => 5,
                        _ => 3,
                    };
                    return Coverage { window, pending, max_depth };
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

    fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Removes the ball at `c`; `balls` holds every ball removed so far.
    /// A piece is refined only where two or more balls cut it.
    fn remove_ball(&mut self, c: &[f64], balls: &[&[f64]]) {
        let mut keep = Vec::with_capacity(self.pending.len());
        let mut stack = Vec::new();
        for cell in self.pending.drain(..) {
            if relation(self.window, c, &cell) == Relation::Disjoint {
                keep.push(cell);
            } else {
                stack.push(cell);
            }
        }
        'cells: while let Some(cell) = stack.pop() {
            let mut partial = 0;
            for b in balls {
                match relation(self.window, b, &cell) {
                    Relation::Inside => continue 'cells,
                    Relation::Partial => partial += 1,
                    Relation::Disjoint => {}
                }
            }
            if partial >= 2 && cell.depth < self.max_depth {
                stack.extend(split(&cell));
            } else {
                keep.push(cell);
            }
        }
        self.pending = keep;
    }
}

/// Points of the sample that determine `η_t` on `region`: sweep the region
/// backward from `t`, collecting every point that lands on the still
/// uncovered part and removing its unit ball, until nothing is left or
/// `time_lo` is reached; then add all ancestors born at or before `t`.
pub fn dependence_set(forest: &Forest, region: &SpaceBox, t: f64) -> Result<DependenceSet> {
    let window = forest.window();
    if !region.inside(window) {
        return Err(validation("region must lie inside the window"));
    }
    if !window.contains_time(t) {
        return Err(validation(format!("time {t} lies outside the window")));
    }

    let mut candidates: Vec<usize> = (0..forest.len())
        .filter(|&s| {
            let p = forest.point(s);
            p.r <= t && region.contains(&p.x)
        })
        .collect();
    candidates.sort_by(|&a, &b| forest.point(b).time_order(forest.point(a)));

    let mut coverage = Coverage::new(window, region);
    let mut collected: Vec<usize> = Vec::new();
    let mut emptied = false;
    for s in candidates {
        let x = &forest.point(s).x;
        if collected.iter().any(|&c| window.dist2(x, &forest.point(c).x) <= 1.0) {
            continue;
        }
        collected.push(s);
        let balls: Vec<&[f64]> = collected.iter().map(|&c| forest.point(c).x.as_slice()).collect();
        coverage.remove_ball(x, &balls);
        if coverage.is_empty() {
            emptied = true;
            break;
        }
    }

    let mut slots = BTreeSet::new();
    for s in collected {
        for a in forest.lineage(s) {
            if forest.point(a).r > t || !slots.insert(a) {
                break;
            }
        }
    }
    let mut ids: Vec<PointId> = slots.into_iter().map(|s| forest.id(s)).collect();
    ids.sort_unstable();
    Ok(DependenceSet { ids, emptied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{sample_poisson, Boundary, Point, PointSample};
    use crate::walks::eta_slice;

    fn forest_of(w: &Window, pts: Vec<Point>) -> Forest {
        Forest::build(PointSample::new(w.clone(), 1.0, pts, 0, false).unwrap()).unwrap()
    }

    #[test]
    fn empty_sample() {
        let w = Window::cube(3, 6.0, 0.0, 4.0, Boundary::Periodic).unwrap();
        let f = forest_of(&w, vec![]);
        let dep = dependence_set(&f, &SpaceBox::centered(&[0.0, 0.0], 1.0).unwrap(), 3.0).unwrap();
        assert!(dep.ids.is_empty());
        assert!(!dep.emptied);
    }

    #[test]
    fn one_ball_covers_region() {
        let w = Window::cube(3, 6.0, 0.0, 4.0, Boundary::Open).unwrap();
        let f = forest_of(
            &w,
            vec![
                Point::new(1, vec![0.0, 0.0], 2.5),
                Point::new(2, vec![0.1, 0.1], 2.0),
                Point::new(3, vec![0.5, 0.0], 3.5),
                Point::new(4, vec![0.0, 0.2], 1.0),
            ],
        );
        let dep = dependence_set(&f, &SpaceBox::centered(&[0.0, 0.0], 0.5).unwrap(), 3.0).unwrap();
        assert!(dep.emptied);
        assert_eq!(dep.ids, vec![PointId(1)]);
        // from 3.5 on the mother of 1 joins as an ancestor
        let dep = dependence_set(&f, &SpaceBox::centered(&[0.0, 0.0], 0.5).unwrap(), 4.0).unwrap();
        assert_eq!(dep.ids, vec![PointId(1), PointId(3)]);
    }

    #[test]
    fn region_must_fit() {
        let w = Window::cube(2, 4.0, 0.0, 4.0, Boundary::Open).unwrap();
        let f = forest_of(&w, vec![]);
        assert!(dependence_set(&f, &SpaceBox::new(vec![1.0], vec![2.5]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn restricted_slice_is_reproduced() {
        for (d, side, seed) in [(2usize, 12.0, 1u64), (3, 8.0, 2), (3, 8.0, 3), (4, 5.0, 4)] {
            let w = Window::cube(d, side, 0.0, 20.0, Boundary::Periodic).unwrap();
            let full = Forest::build(sample_poisson(1.0, &w, seed).unwrap()).unwrap();
            let region = SpaceBox::centered(&vec![0.3; d - 1], 2.0).unwrap();
            let t = 15.0;
            let dep = dependence_set(&full, &region, t).unwrap();
            // small crumbs in three space dimensions may outlive the window
            assert!(dep.emptied || d == 4, "d={d}");
            let pts: Vec<Point> = dep.ids.iter().map(|&i| full.sample().get(i).unwrap().clone()).collect();
            let sub = forest_of(&w, pts);
            let a = eta_slice(&full, t).unwrap().restrict(&region);
            let b = eta_slice(&sub, t).unwrap().restrict(&region);
            assert_eq!(a.keys(), b.keys());
            assert_eq!(a.occupied(), b.occupied());
        }
    }
}
