//! Small hand-checkable configurations used by tests and examples.
//!
//! `f1` (d=2, open space `[-5, 5]`, time `[-1, 3]`):
//! a=(0.0, 0.0), b=(0.5, 1.0), c=(1.2, 2.0), e=(3.0, 0.5).
//!
//! `f2` (d=2, open space `[-5, 5]`, time `[-1, 4]`):
//! m=(0.0, 3.0), p=(-0.5, 2.5), q=(0.7, 2.0).

use crate::forest::Forest;
use crate::point_process::{Boundary, Point, PointId, PointSample, Window};

const F1: [(&str, u64, f64, f64); 4] =
    [("a", 1, 0.0, 0.0), ("b", 2, 0.5, 1.0), ("c", 3, 1.2, 2.0), ("e", 4, 3.0, 0.5)];
const F2: [(&str, u64, f64, f64); 3] = [("m", 1, 0.0, 3.0), ("p", 2, -0.5, 2.5), ("q", 3, 0.7, 2.0)];

/// Id of a named fixture point (`a`, `b`, `c`, `e` in f1; `m`, `p`, `q` in f2).
pub fn id(name: &str) -> PointId {
    F1.iter()
        .chain(F2.iter())
        .find(|(n, ..)| *n == name)
        .map(|&(_, id, ..)| PointId(id))
        .unwrap_or_else(|| panic!("no fixture point named {name}"))
}

fn build(table: &[(&str, u64, f64, f64)], time_hi: f64) -> PointSample {
    let window = Window::new(2, vec![10.0], -1.0, time_hi, Boundary::Open).expect("fixture window");
    let points = table.iter().map(|&(_, id, x, r)| Point::new(id, vec![x], r)).collect();
    PointSample::new(window, 1.0, points, 0, false).expect("fixture sample")
}

pub fn f1_sample() -> PointSample {
    build(&F1, 3.0)
}

pub fn f2_sample() -> PointSample {
    build(&F2, 4.0)
}

pub fn f1() -> Forest {
    Forest::build(f1_sample()).expect("fixture forest")
}

pub fn f2() -> Forest {
    Forest::build(f2_sample()).expect("fixture forest")
}
