//! Coalescing random walks read off a forest.
//!
//! The walk started at `(x, r)` sits still until the first obstacle above it
//! and then jumps to that obstacle's centre; from there it follows the
//! ancestor chain. Walks that land on the same point coalesce for good.
//! Positions are compared by the id of the point that carries them, never
//! by float equality.

mod dependence;
mod pair;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::Serialize;

pub use dependence::{dependence_set, DependenceSet, SpaceBox};
pub use pair::{sample_in_unit_ball, simulate_pair, PairOutcome};

use crate::error::{validation, Error, Result};
use crate::forest::Forest;
use crate::point_process::PointId;

/// Piecewise-constant path of one walker.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    /// Sample point the walk starts from, if any.
    pub id: Option<PointId>,
    pub birth_x: Vec<f64>,
    pub birth_r: f64,
    /// `τ^1 < τ^2 < ...`
    pub jump_times: Vec<f64>,
    /// Position after each jump.
    pub positions: Vec<Vec<f64>>,
    /// Point landed on at each jump.
    pub jump_ids: Vec<PointId>,
    /// Last time the path is defined.
    pub horizon: f64,
}

impl Trajectory {
    pub fn jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// Position at `t`, or `None` outside `[birth_r, horizon]`.
    pub fn position_at(&self, t: f64) -> Option<&[f64]> {
        if t < self.birth_r || t > self.horizon {
            return None;
        }
        let n = self.jump_times.partition_point(|&tau| tau <= t);
        Some(if n == 0 { &self.birth_x } else { &self.positions[n - 1] })
    }

    /// Waiting times between consecutive jumps, the first measured from birth.
    pub fn waiting_times(&self) -> Vec<f64> {
        let mut prev = self.birth_r;
        self.jump_times
            .iter()
            .map(|&t| {
                let w = t - prev;
                prev = t;
                w
            })
            .collect()
    }

    /// Jump displacement vectors, minimal image under periodic space.
    pub fn displacements(&self, window: &crate::point_process::Window) -> Vec<Vec<f64>> {
        let mut prev = &self.birth_x;
        self.positions
            .iter()
            .map(|p| {
                let d = window.displacement(prev, p);
                prev = p;
                d
            })
            .collect()
    }
}

fn check_time(forest: &Forest, t: f64, what: &str) -> Result<()> {
    if forest.window().contains_time(t) {
        Ok(())
    } else {
        Err(validation(format!("{what} {t} lies outside the window's time range")))
    }
}

fn follow(forest: &Forest, id: Option<PointId>, x: Vec<f64>, r: f64, first: Option<usize>, t_max: f64) -> Trajectory {
    let mut traj = Trajectory {
        id,
        birth_x: x,
        birth_r: r,
        jump_times: Vec::new(),
        positions: Vec::new(),
        jump_ids: Vec::new(),
        horizon: t_max.min(forest.window().time_hi),
    };
    let mut next = first;
    while let Some(m) = next {
        let p = forest.point(m);
        if p.r > t_max {
            break;
        }
        traj.jump_times.push(p.r);
        traj.positions.push(p.x.clone());
        traj.jump_ids.push(p.id);
        next = forest.mother_slot(m);
    }
    traj
}

/// The walk `X^{(x,r)}` of a sample point, up to `t_max`.
pub fn trajectory(forest: &Forest, id: PointId, t_max: f64) -> Result<Trajectory> {
    let slot = forest.slot(id)?;
    let p = forest.point(slot);
    check_time(forest, t_max, "t_max")?;
    if t_max < p.r {
        return Err(validation(format!("t_max {t_max} precedes the birth of {id} at {}", p.r)));
    }
    Ok(follow(forest, Some(id), p.x.clone(), p.r, forest.mother_slot(slot), t_max))
}

/// The walk started from an arbitrary space-time position inside the window.
pub fn probe_trajectory(forest: &Forest, x: &[f64], r: f64, t_max: f64) -> Result<Trajectory> {
    check_time(forest, t_max, "t_max")?;
    if t_max < r {
        return Err(validation(format!("t_max {t_max} precedes the start time {r}")));
    }
    let first = forest.index().mother(x, r)?.map(|h| h.slot);
    Ok(follow(forest, None, x.to_vec(), r, first, t_max))
}

/// Where a walker sits at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SiteKey {
    /// On a sample point (the last one it jumped to, or its own birth point).
    Point(PointId),
    /// Still at the `i`th initial position.
    Initial(usize),
}

/// Origin of a walker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Founder {
    Point(PointId),
    Initial(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Site {
    pub key: SiteKey,
    pub x: Vec<f64>,
    /// Walkers sharing this site, sorted.
    pub founders: Vec<Founder>,
}

/// Occupied positions at one time, coalesced walkers counted once.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceConfig {
    pub t: f64,
    /// Sorted by key.
    pub sites: Vec<Site>,
}

impl SliceConfig {
    pub fn walker_count(&self) -> usize {
        self.sites.len()
    }

    pub fn occupied(&self) -> Vec<&[f64]> {
        self.sites.iter().map(|s| s.x.as_slice()).collect()
    }

    pub fn keys(&self) -> Vec<SiteKey> {
        self.sites.iter().map(|s| s.key).collect()
    }

    pub fn lineage(&self) -> BTreeMap<SiteKey, &[Founder]> {
        self.sites.iter().map(|s| (s.key, s.founders.as_slice())).collect()
    }

    /// Sites whose position lies in `region`.
    pub fn restrict(&self, region: &SpaceBox) -> SliceConfig {
        SliceConfig {
            t: self.t,
            sites: self.sites.iter().filter(|s| region.contains(&s.x)).cloned().collect(),
        }
    }
}

/// Slots ordered by decreasing `(r, x)`.
fn descending_time_order(forest: &Forest) -> Vec<usize> {
    let mut order: Vec<usize> = (0..forest.len()).collect();
    order.sort_by(|&a, &b| forest.point(b).time_order(forest.point(a)));
    order
}

/// Site at time `t` of every sample walker born in `[t_from, t]`.
fn point_sites(forest: &Forest, t_from: f64, t: f64) -> Vec<Option<usize>> {
    let mut site = vec![None; forest.len()];
    for s in descending_time_order(forest) {
        let r = forest.point(s).r;
        if r > t || r < t_from {
            continue;
        }
        site[s] = Some(match forest.mother_slot(s) {
            Some(m) if forest.point(m).r <= t => site[m].expect("mother processed first"),
            _ => s,
        });
    }
    site
}

fn assemble(forest: &Forest, t: f64, walkers: Vec<(SiteKey, Vec<f64>, Founder)>) -> SliceConfig {
    let mut by_key: BTreeMap<SiteKey, Site> = BTreeMap::new();
    for (key, x, founder) in walkers {
        by_key
            .entry(key)
            .or_insert_with(|| Site { key, x, founders: Vec::new() })
            .founders
            .push(founder);
    }
    let _ = forest;
    let mut sites: Vec<Site> = by_key.into_values().collect();
    for s in &mut sites {
        s.founders.sort_unstable();
    }
    SliceConfig { t, sites }
}

/// `η_t`: positions at `t` of all walks born at or before `t`.
pub fn eta_slice(forest: &Forest, t: f64) -> Result<SliceConfig> {
    check_time(forest, t, "slice time")?;
    Ok(slice_from(forest, forest.window().time_lo, t))
}

fn slice_from(forest: &Forest, t_from: f64, t: f64) -> SliceConfig {
    let sites = point_sites(forest, t_from, t);
    let walkers = sites
        .iter()
        .enumerate()
        .filter_map(|(s, site)| {
            site.map(|at| {
                let p = forest.point(at);
                (SiteKey::Point(p.id), p.x.clone(), Founder::Point(forest.id(s)))
            })
        })
        .collect();
    assemble(forest, t, walkers)
}

/// `η^{η0, t_start}_t`: walkers placed at `eta0` at time `t_start`, together
/// with every sample point born in `[t_start, t]`.
pub fn eta_from_initial(forest: &Forest, eta0: &[Vec<f64>], t_start: f64, t: f64) -> Result<SliceConfig> {
    check_time(forest, t_start, "start time")?;
    check_time(forest, t, "slice time")?;
    if t < t_start {
        return Err(validation(format!("slice time {t} precedes start time {t_start}")));
    }
    let window = forest.window();
    let mut seen = HashSet::new();
    let mut initial = Vec::new();
    for x in eta0 {
        if !window.contains_space(x) {
            return Err(validation(format!("initial position {x:?} lies outside the window")));
        }
        let bits: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if seen.insert(bits) {
            initial.push(x);
        }
    }

    let sites = point_sites(forest, t_start, t);
    let mut walkers: Vec<(SiteKey, Vec<f64>, Founder)> = sites
        .iter()
        .enumerate()
        .filter_map(|(s, site)| {
            site.map(|at| {
                let p = forest.point(at);
                (SiteKey::Point(p.id), p.x.clone(), Founder::Point(forest.id(s)))
            })
        })
        .collect();
    for (i, x) in initial.into_iter().enumerate() {
        let hit = forest.index().first_obstacle(x, t_start);
        let walker = match hit {
            Some(h) if h.tau <= t => {
                let at = sites[h.slot].expect("hit point is born inside the evolution interval");
                let p = forest.point(at);
                (SiteKey::Point(p.id), p.x.clone(), Founder::Initial(i))
            }
            _ => (SiteKey::Initial(i), x.clone(), Founder::Initial(i)),
        };
        walkers.push(walker);
    }
    Ok(assemble(forest, t, walkers))
}

/// First time the walks of `a` and `b` jump onto a common point (the time
/// of their closest common strict ancestor); the birth time when `a == b`.
pub fn meeting_time(forest: &Forest, a: PointId, b: PointId) -> Result<Option<f64>> {
    let sa = forest.slot(a)?;
    let sb = forest.slot(b)?;
    if sa == sb {
        return Ok(Some(forest.point(sa).r));
    }
    let above_a: HashSet<usize> = forest.lineage(sa).skip(1).collect();
    Ok(forest
        .lineage(sb)
        .skip(1)
        .find(|s| above_a.contains(s))
        .map(|s| forest.point(s).r))
}

/// `ξ^r_t`: sites of `η_t` carrying a walker born at or before `r`.
pub fn backward_surviving(forest: &Forest, r: f64, t: f64) -> Result<SliceConfig> {
    if r >= t {
        return Err(validation(format!("r = {r} must precede t = {t}")));
    }
    check_time(forest, r, "r")?;
    let eta = eta_slice(forest, t)?;
    let born_by_r = |f: &Founder| match f {
        Founder::Point(id) => forest.slot(*id).map(|s| forest.point(s).r <= r).unwrap_or(false),
        Founder::Initial(_) => false,
    };
    Ok(SliceConfig {
        t,
        sites: eta.sites.into_iter().filter(|s| s.founders.iter().any(born_by_r)).collect(),
    })
}

/// `ξ^r_t` at the earliest usable `r` (the first birth in the window),
/// returned with that `r`.
pub fn earliest_backward_surviving(forest: &Forest, t: f64) -> Result<(f64, SliceConfig)> {
    let r = forest
        .sample()
        .points
        .iter()
        .map(|p| p.r)
        .fold(f64::INFINITY, f64::min);
    if !(r < t) {
        return Err(Error::Domain(format!("no walker is born before t = {t}")));
    }
    Ok((r, backward_surviving(forest, r, t)?))
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: &mut W) -> Result<()> {
    match traj.id {
        Some(id) => writeln!(out, "{id}")?,
        None => writeln!(out, "-")?,
    }
    for (tau, x) in traj.jump_times.iter().zip(&traj.positions) {
        write!(out, "{tau}")?;
        for v in x {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_slice<W: Write>(slice: &SliceConfig, out: &mut W) -> Result<()> {
    writeln!(out, "{}", slice.t)?;
    for site in &slice.sites {
        let coords: Vec<String> = site.x.iter().map(|v| v.to_string()).collect();
        let founders: Vec<String> = site
            .founders
            .iter()
            .map(|f| match f {
                Founder::Point(id) => id.to_string(),
                Founder::Initial(i) => format!("init{i}"),
            })
            .collect();
        writeln!(out, "{} {}", coords.join(" "), founders.join(" "))?;
    }
    Ok(())
}
