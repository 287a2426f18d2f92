//! Homogeneous Poisson point configurations in rectangular space-time windows.
//!
//! A point `s = (x, r)` carries `d - 1` space coordinates and one time
//! coordinate. Windows are boxes centred on the space origin,
//! `[-L_i/2, L_i/2)` per axis, times `[time_lo, time_hi]`. Under
//! [`Boundary::Periodic`] space distances are taken on the torus.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Stable identifier of a point within a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointId(pub u64);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Id reserved for the point inserted at the space-time origin by [`palm_version`].
pub const ORIGIN_ID: PointId = PointId(0);

/// Largest expected point count `sample_poisson` accepts.
const MAX_EXPECTED_POINTS: f64 = 5.0e7;

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub id: PointId,
    /// Space coordinates, length `d - 1`.
    pub x: Vec<f64>,
    /// Time coordinate.
    pub r: f64,
}

impl Point {
    pub fn new(id: u64, x: Vec<f64>, r: f64) -> Self {
        Point { id: PointId(id), x, r }
    }

    /// Order by `(r, x_1, ..., x_{d-1})`; the id is not consulted.
    pub fn time_order(&self, other: &Point) -> Ordering {
        time_key_cmp(self.r, &self.x, other.r, &other.x)
    }
}

/// Lexicographic comparison of `(r, x_1, ..., x_k)` keys.
pub fn time_key_cmp(ra: f64, xa: &[f64], rb: f64, xb: &[f64]) -> Ordering {
    ra.total_cmp(&rb).then_with(|| lex_cmp(xa, xb))
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (u, v) in a.iter().zip(b) {
        match u.total_cmp(v) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    Open,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(validation(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Rectangular space-time window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub d: usize,
    pub space_extent: Vec<f64>,
    pub time_lo: f64,
    pub time_hi: f64,
    pub boundary: Boundary,
}

impl Window {
    pub fn new(
        d: usize,
        space_extent: Vec<f64>,
        time_lo: f64,
        time_hi: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let w = Window { d, space_extent, time_lo, time_hi, boundary };
        w.validate()?;
        Ok(w)
    }

    /// Window whose space part is a cube of side `side`.
    pub fn cube(d: usize, side: f64, time_lo: f64, time_hi: f64, boundary: Boundary) -> Result<Self> {
        if d < 2 {
            return Err(validation(format!("dimension d={d} must be at least 2")));
        }
        Window::new(d, vec![side; d - 1], time_lo, time_hi, boundary)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(validation(format!("dimension d={} must be at least 2", self.d)));
        }
        if self.space_extent.len() != self.d - 1 {
            return Err(validation(format!(
                "window declares d={} but has {} space extents",
                self.d,
                self.space_extent.len()
            )));
        }
        if let Some(bad) = self.space_extent.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(validation(format!("space extent {bad} must be a positive finite real")));
        }
        if !(self.time_lo.is_finite() && self.time_hi.is_finite() && self.time_lo < self.time_hi) {
            return Err(validation(format!(
                "time interval [{}, {}] is degenerate",
                self.time_lo, self.time_hi
            )));
        }
        Ok(())
    }

    pub fn space_dim(&self) -> usize {
        self.d - 1
    }

    pub fn space_volume(&self) -> f64 {
        self.space_extent.iter().product()
    }

    pub fn duration(&self) -> f64 {
        self.time_hi - self.time_lo
    }

    pub fn volume(&self) -> f64 {
        self.space_volume() * self.duration()
    }

    pub fn space_lo(&self, axis: usize) -> f64 {
        -0.5 * self.space_extent[axis]
    }

    pub fn space_hi(&self, axis: usize) -> f64 {
        0.5 * self.space_extent[axis]
    }

    pub fn contains_space(&self, x: &[f64]) -> bool {
        x.len() == self.space_dim()
            && x.iter().enumerate().all(|(i, &v)| {
                let (lo, hi) = (self.space_lo(i), self.space_hi(i));
                match self.boundary {
                    Boundary::Periodic => v >= lo && v < hi,
                    Boundary::Open => v >= lo && v <= hi,
                }
            })
    }

    pub fn contains_time(&self, r: f64) -> bool {
        r >= self.time_lo && r <= self.time_hi
    }

    pub fn contains(&self, x: &[f64], r: f64) -> bool {
        self.contains_space(x) && self.contains_time(r)
    }

    pub fn contains_origin(&self) -> bool {
        self.contains_time(0.0) && self.contains_space(&vec![0.0; self.space_dim()])
    }

    /// Signed displacement `to - from` along one axis (minimal image on the torus).
    #[inline]
    pub fn axis_delta(&self, axis: usize, from: f64, to: f64) -> f64 {
        let delta = to - from;
        match self.boundary {
            Boundary::Open => delta,
            Boundary::Periodic => {
                let l = self.space_extent[axis];
                delta - l * (delta / l).round()
            }
        }
    }

    pub fn displacement(&self, from: &[f64], to: &[f64]) -> Vec<f64> {
        (0..from.len()).map(|i| self.axis_delta(i, from[i], to[i])).collect()
    }

    #[inline]
    pub fn dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..a.len() {
            let dx = self.axis_delta(i, a[i], b[i]);
            acc += dx * dx;
        }
        acc
    }

    /// Map a coordinate vector back into the fundamental box (periodic only).
    pub fn wrap(&self, x: &mut [f64]) {
        if self.boundary == Boundary::Open {
            return;
        }
        for (i, v) in x.iter_mut().enumerate() {
            let l = self.space_extent[i];
            let lo = -0.5 * l;
            let mut w = *v - l * ((*v - lo) / l).floor();
            if w >= -lo {
                w -= l;
            }
            if w < lo {
                w = lo;
            }
            *v = w;
        }
    }

    /// Distance from `x` to the nearest open space face; infinite under periodic space.
    pub fn distance_to_open_face(&self, x: &[f64]) -> f64 {
        match self.boundary {
            Boundary::Periodic => f64::INFINITY,
            Boundary::Open => x
                .iter()
                .enumerate()
                .map(|(i, &v)| (v - self.space_lo(i)).min(self.space_hi(i) - v))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// A finite realization of the process in a window.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample {
    pub window: Window,
    pub rate: f64,
    pub points: Vec<Point>,
    pub seed: u64,
    pub is_palm: bool,
}

impl PointSample {
    pub fn new(window: Window, rate: f64, points: Vec<Point>, seed: u64, is_palm: bool) -> Result<Self> {
        let s = PointSample { window, rate, points, seed, is_palm };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(validation(format!("rate {} must be positive", self.rate)));
        }
        let mut ids = HashSet::with_capacity(self.points.len());
        for p in &self.points {
            if p.x.len() != self.window.space_dim() {
                return Err(validation(format!(
                    "point {} has {} space coordinates, expected {}",
                    p.id,
                    p.x.len(),
                    self.window.space_dim()
                )));
            }
            if !self.window.contains(&p.x, p.r) {
                return Err(validation(format!("point {} lies outside the window", p.id)));
            }
            if !ids.insert(p.id) {
                return Err(validation(format!("duplicate point id {}", p.id)));
            }
        }
        let mut order: Vec<&Point> = self.points.iter().collect();
        order.sort_by(|a, b| a.time_order(b));
        if let Some(w) = order.windows(2).find(|w| w[0].time_order(w[1]) == Ordering::Equal) {
            return Err(validation(format!(
                "points {} and {} share the same coordinates",
                w[0].id, w[1].id
            )));
        }
        if self.is_palm {
            if !self.window.contains_origin() {
                return Err(validation("palm sample window must contain the origin"));
            }
            let origin = vec![0.0; self.window.space_dim()];
            if !self.points.iter().any(|p| p.r == 0.0 && p.x == origin) {
                return Err(validation("palm sample lacks a point at the origin"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, id: PointId) -> Option<&Point> {
        self.points.iter().find(|p| p.id == id)
    }
}

/// Mix a base seed with a replica index into an independent stream seed (SplitMix64 finalizer).
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    let mut z = seed ^ replica.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sample a homogeneous Poisson process of intensity `rate` in `window`.
///
/// Ids start at 1 (id 0 is reserved for the Palm origin) and increase with
/// the `(r, x)` order.
pub fn sample_poisson(rate: f64, window: &Window, seed: u64) -> Result<PointSample> {
    window.validate()?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(validation(format!("rate {rate} must be positive")));
    }
    let mean = rate * window.volume();
    if mean > MAX_EXPECTED_POINTS {
        return Err(validation(format!("expected point count {mean} is too large")));
    }
    let mut rng = rng_from_seed(seed);
    let n = Poisson::new(mean)
        .map_err(|e| validation(format!("poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let k = window.space_dim();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..k)
            .map(|i| rng.random_range(window.space_lo(i)..window.space_hi(i)))
            .collect();
        let r = rng.random_range(window.time_lo..window.time_hi);
        points.push(Point { id: PointId(0), x, r });
    }
    points.sort_by(|a, b| a.time_order(b));
    points.dedup_by(|a, b| a.time_order(b) == Ordering::Equal);
    for (i, p) in points.iter_mut().enumerate() {
        p.id = PointId(i as u64 + 1);
    }
    Ok(PointSample { window: window.clone(), rate, points, seed, is_palm: false })
}

/// The Palm version `S ∪ {0}`: insert a point with id 0 at the space-time origin.
pub fn palm_version(sample: &PointSample) -> Result<PointSample> {
    if !sample.window.contains_origin() {
        return Err(validation("window does not contain the space-time origin"));
    }
    if sample.is_palm {
        return Err(validation("sample is already a palm sample"));
    }
    if sample.get(ORIGIN_ID).is_some() {
        return Err(validation("id 0 is already taken"));
    }
    let origin = Point { id: ORIGIN_ID, x: vec![0.0; sample.window.space_dim()], r: 0.0 };
    let at = sample.points.partition_point(|p| p.time_order(&origin) == Ordering::Less);
    if sample.points.get(at).is_some_and(|p| p.time_order(&origin) == Ordering::Equal) {
        return Err(validation("a point already sits at the origin"));
    }
    let mut points = sample.points.clone();
    points.insert(at, origin);
    Ok(PointSample { points, is_palm: true, ..sample.clone() })
}

/// Volume of the `k`-dimensional unit ball.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(k - 2) * 2.0 * std::f64::consts::PI / k as f64,
    }
}
