//! Uniform space grid over a sample, each bucket a time-sorted list.
//!
//! Cells are at least `cell_size` wide on every axis (the axis is split into
//! `floor(L / cell_size)` equal cells), so a unit ball meets at most three
//! consecutive cells per axis. Mother queries scan the candidate buckets
//! from the query time upward and stop at the first hit in each.

use std::cmp::Ordering;

use crate::error::{validation, Result};
use crate::point_process::{lex_cmp, Boundary, PointSample, Window};

/// Space dimensions supported by the fixed-size odometer in queries.
const MAX_SPACE_DIM: usize = 16;

#[derive(Clone, Copy, Debug)]
struct Entry {
    r: f64,
    slot: u32,
}

/// First obstacle hit by the upward ray of a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    /// Position of the hit point in the sample's point list.
    pub slot: usize,
    /// Its time coordinate.
    pub tau: f64,
}

#[derive(Clone, Debug)]
pub struct GridIndex {
    window: Window,
    cell_size: f64,
    cells_per_axis: Vec<usize>,
    cell_width: Vec<f64>,
    buckets: Vec<Vec<Entry>>,
    coords: Vec<f64>,
    nonempty: usize,
}

impl GridIndex {
    pub fn build(sample: &PointSample) -> Result<Self> {
        Self::with_cell_size(sample, 1.0)
    }

    pub fn with_cell_size(sample: &PointSample, cell_size: f64) -> Result<Self> {
        sample.window.validate()?;
        if !(cell_size.is_finite() && cell_size >= 1.0) {
            return Err(validation(format!("cell size {cell_size} must be at least the obstacle radius 1")));
        }
        let k = sample.window.space_dim();
        if k > MAX_SPACE_DIM {
            return Err(validation(format!("space dimension {k} exceeds {MAX_SPACE_DIM}")));
        }
        let cells_per_axis: Vec<usize> = sample
            .window
            .space_extent
            .iter()
            .map(|&l| ((l / cell_size).floor() as usize).max(1))
            .collect();
        let cell_width: Vec<f64> = sample
            .window
            .space_extent
            .iter()
            .zip(&cells_per_axis)
            .map(|(&l, &n)| l / n as f64)
            .collect();
        let total = cells_per_axis
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|&t| t <= 1 << 28)
            .ok_or_else(|| validation("window has too many grid cells"))?;
        if sample.points.len() > u32::MAX as usize {
            return Err(validation("too many points for the grid index"));
        }

        let mut coords = Vec::with_capacity(sample.points.len() * k);
        for p in &sample.points {
            coords.extend_from_slice(&p.x);
        }
        let mut index = GridIndex {
            window: sample.window.clone(),
            cell_size,
            cells_per_axis,
            cell_width,
            buckets: vec![Vec::new(); total],
            coords,
            nonempty: 0,
        };
        for (slot, p) in sample.points.iter().enumerate() {
            let cell = index.flat_cell(&p.x);
            index.buckets[cell].push(Entry { r: p.r, slot: slot as u32 });
        }
        let coords = &index.coords;
        for bucket in &mut index.buckets {
            bucket.sort_by(|a, b| {
                a.r.total_cmp(&b.r).then_with(|| {
                    lex_cmp(slot_coords(coords, k, a.slot as usize), slot_coords(coords, k, b.slot as usize))
                })
            });
        }
        index.nonempty = index.buckets.iter().filter(|b| !b.is_empty()).count();
        Ok(index)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Number of non-empty buckets.
    pub fn bucket_count(&self) -> usize {
        self.nonempty
    }

    /// Non-empty buckets as lists of sample slots, time-sorted.
    pub fn buckets(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.buckets
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.iter().map(|e| e.slot as usize).collect())
    }

    fn axis_cell(&self, axis: usize, v: f64) -> usize {
        let lo = self.window.space_lo(axis);
        let c = ((v - lo) / self.cell_width[axis]).floor();
        (c.max(0.0) as usize).min(self.cells_per_axis[axis] - 1)
    }

    fn flat_cell(&self, x: &[f64]) -> usize {
        let mut flat = 0;
        for (axis, &v) in x.iter().enumerate() {
            flat = flat * self.cells_per_axis[axis] + self.axis_cell(axis, v);
        }
        flat
    }

    pub(crate) fn coords_of(&self, slot: usize) -> &[f64] {
        slot_coords(&self.coords, self.window.space_dim(), slot)
    }

    /// The first obstacle above `(x, r)`: the point `(x', r')` with smallest
    /// `r' > r` and `|x' - x| <= 1`, ties broken by the `(r, x)` order.
    /// `None` when no such point exists below `time_hi`.
    pub fn mother(&self, x: &[f64], r: f64) -> Result<Option<Hit>> {
        if !self.window.contains(x, r) {
            return Err(validation(format!("probe ({x:?}, {r}) lies outside the window")));
        }
        Ok(self.first_obstacle(x, r))
    }

    pub(crate) fn first_obstacle(&self, x: &[f64], r: f64) -> Option<Hit> {
        let k = self.window.space_dim();
        let mut start = [0usize; MAX_SPACE_DIM];
        let mut span = [0usize; MAX_SPACE_DIM];
        for axis in 0..k {
            let n = self.cells_per_axis[axis];
            match self.window.boundary {
                Boundary::Periodic => {
                    if n >= 3 {
                        start[axis] = (self.axis_cell(axis, x[axis]) + n - 1) % n;
                        span[axis] = 3;
                    } else {
                        start[axis] = 0;
                        span[axis] = n;
                    }
                }
                Boundary::Open => {
                    let lo = self.axis_cell(axis, x[axis] - 1.0);
                    let hi = self.axis_cell(axis, x[axis] + 1.0);
                    start[axis] = lo;
                    span[axis] = hi - lo + 1;
                }
            }
        }

        let mut best: Option<(f64, usize)> = None;
        let mut offset = [0usize; MAX_SPACE_DIM];
        loop {
            let mut flat = 0;
            for axis in 0..k {
                let n = self.cells_per_axis[axis];
                flat = flat * n + (start[axis] + offset[axis]) % n;
            }
            self.scan_bucket(flat, x, r, &mut best);

            let mut axis = k;
            loop {
                if axis == 0 {
                    return best.map(|(tau, slot)| Hit { slot, tau });
                }
                axis -= 1;
                offset[axis] += 1;
                if offset[axis] < span[axis] {
                    break;
                }
                offset[axis] = 0;
            }
        }
    }

    fn scan_bucket(&self, flat: usize, x: &[f64], r: f64, best: &mut Option<(f64, usize)>) {
        let bucket = &self.buckets[flat];
        let from = bucket.partition_point(|e| e.r <= r);
        for e in &bucket[from..] {
            if let Some((best_r, _)) = *best {
                if e.r > best_r {
                    return;
                }
            }
            let slot = e.slot as usize;
            let cand = self.coords_of(slot);
            if self.window.dist2(x, cand) <= 1.0 {
                let better = match *best {
                    None => true,
                    Some((best_r, best_slot)) => {
                        e.r.total_cmp(&best_r).then_with(|| lex_cmp(cand, self.coords_of(best_slot)))
                            == Ordering::Less
                    }
                };
                if better {
                    *best = Some((e.r, slot));
                }
                return;
            }
        }
    }
}

fn slot_coords(coords: &[f64], k: usize, slot: usize) -> &[f64] {
    &coords[slot * k..(slot + 1) * k]
}
