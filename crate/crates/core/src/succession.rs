//! Successor/predecessor maps on a forest with sister order, the succession
//! line they generate, and the point-shift identity it satisfies.
//!
//! In a finite window both searches can run out of tree: the successor
//! ascent may reach a root whose mother lies beyond `time_hi`, and under an
//! open space boundary a vertex near a face may have daughters outside the
//! window. Those cases resolve to [`Status::UnresolvedAtBoundary`] rather
//! than a wrong vertex.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::point_process::PointId;
use crate::pointfile::SampleHeader;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Found(PointId),
    UnresolvedAtBoundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub status: Status,
    /// Tree moves taken.
    pub steps: usize,
}

impl Resolution {
    pub fn found(&self) -> Option<PointId> {
        match self.status {
            Status::Found(id) => Some(id),
            Status::UnresolvedAtBoundary => None,
        }
    }
}

/// Outcome of a search in slot space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct SlotStep {
    pub slot: Option<usize>,
    pub steps: usize,
}

impl SlotStep {
    fn found(slot: usize, steps: usize) -> Self {
        SlotStep { slot: Some(slot), steps }
    }

    fn unresolved(steps: usize) -> Self {
        SlotStep { slot: None, steps }
    }
}

/// Daughters of `slot`, or `None` when the list may be incomplete.
fn trusted_children(forest: &Forest, slot: usize) -> Option<&[usize]> {
    if forest.near_open_face(slot) {
        None
    } else {
        Some(forest.children_slots(slot))
    }
}

pub(crate) fn successor_slot(forest: &Forest, slot: usize) -> SlotStep {
    let budget = forest.len();
    let Some(kids) = trusted_children(forest, slot) else {
        return SlotStep::unresolved(0);
    };
    if let Some(&eldest) = kids.first() {
        return SlotStep::found(eldest, 1);
    }
    let mut v = slot;
    let mut steps = 0;
    while steps < budget {
        let Some(m) = forest.mother_slot(v) else {
            return SlotStep::unresolved(steps);
        };
        let Some(sisters) = trusted_children(forest, m) else {
            return SlotStep::unresolved(steps);
        };
        let rank = forest.rank_slot(v);
        if rank < sisters.len() {
            return SlotStep::found(sisters[rank], steps + 1);
        }
        v = m;
        steps += 1;
    }
    SlotStep::unresolved(steps)
}

pub(crate) fn predecessor_slot(forest: &Forest, slot: usize) -> SlotStep {
    let budget = forest.len();
    let Some(m) = forest.mother_slot(slot) else {
        return SlotStep::unresolved(0);
    };
    let Some(sisters) = trusted_children(forest, m) else {
        return SlotStep::unresolved(0);
    };
    let rank = forest.rank_slot(slot);
    if rank == 1 {
        return SlotStep::found(m, 1);
    }
    let mut v = sisters[rank - 2];
    let mut steps = 1;
    while steps <= budget {
        let Some(kids) = trusted_children(forest, v) else {
            return SlotStep::unresolved(steps);
        };
        match kids.last() {
            None => return SlotStep::found(v, steps),
            Some(&youngest) => {
                v = youngest;
                steps += 1;
            }
        }
    }
    SlotStep::unresolved(steps)
}

fn resolve(forest: &Forest, step: SlotStep) -> Resolution {
    Resolution {
        status: match step.slot {
            Some(s) => Status::Found(forest.id(s)),
            None => Status::UnresolvedAtBoundary,
        },
        steps: step.steps,
    }
}

/// Next vertex in preorder: eldest daughter, else the next younger sister
/// of the nearest ancestor (or self) that has one.
pub fn successor(forest: &Forest, id: PointId) -> Result<Resolution> {
    let slot = forest.slot(id)?;
    Ok(resolve(forest, successor_slot(forest, slot)))
}

/// Previous vertex in preorder: from the nearest elder sister descend
/// through youngest daughters to a leaf, else the mother.
pub fn predecessor(forest: &Forest, id: PointId) -> Result<Resolution> {
    let slot = forest.slot(id)?;
    Ok(resolve(forest, predecessor_slot(forest, slot)))
}

/// Labels `n -> X_n` around an anchor, `X_0` = anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessionLabels {
    pub anchor: PointId,
    pub labels: BTreeMap<i64, PointId>,
    /// Both directions reached their requested length.
    pub complete: bool,
}

impl SuccessionLabels {
    pub fn get(&self, n: i64) -> Option<PointId> {
        self.labels.get(&n).copied()
    }

    pub fn lowest(&self) -> i64 {
        *self.labels.keys().next().unwrap_or(&0)
    }

    pub fn highest(&self) -> i64 {
        *self.labels.keys().next_back().unwrap_or(&0)
    }
}

pub fn enumerate_line(forest: &Forest, anchor: PointId, back: usize, forward: usize) -> Result<SuccessionLabels> {
    let start = forest.slot(anchor)?;
    let mut labels = BTreeMap::from([(0i64, anchor)]);
    let mut seen = HashSet::from([start]);
    let mut complete = true;

    let mut walk = |count: usize, sign: i64, step: fn(&Forest, usize) -> SlotStep| -> Result<()> {
        let mut cur = start;
        for n in 1..=count {
            match step(forest, cur).slot {
                Some(next) => {
                    if !seen.insert(next) {
                        return Err(Error::Domain(format!(
                            "succession line revisits point {} at label {}",
                            forest.id(next),
                            sign * n as i64
                        )));
                    }
                    labels.insert(sign * n as i64, forest.id(next));
                    cur = next;
                }
                None => {
                    complete = false;
                    break;
                }
            }
        }
        Ok(())
    };
    walk(forward, 1, successor_slot)?;
    walk(back, -1, predecessor_slot)?;
    Ok(SuccessionLabels { anchor, labels, complete })
}

/// Recursive preorder listing of the branch of `root`, daughters in sister
/// order. Independent of the successor search.
pub fn preorder_oracle(forest: &Forest, root: PointId) -> Result<Vec<PointId>> {
    let slot = forest.slot(root)?;
    let (size, truncated) = forest.branch_size_slot(slot);
    if truncated {
        return Err(Error::Domain(format!("branch of {root} is truncated by the window")));
    }
    fn visit(forest: &Forest, slot: usize, out: &mut Vec<PointId>) {
        out.push(forest.id(slot));
        for &c in forest.children_slots(slot) {
            visit(forest, c, out);
        }
    }
    let mut out = Vec::with_capacity(size);
    visit(forest, slot, &mut out);
    Ok(out)
}

/// A forest seen from one of its points: coordinates are reported relative
/// to the centre (minimal image in periodic space). Ids and tree structure
/// are shared with the underlying forest, which is translation-equivariant.
#[derive(Clone, Copy, Debug)]
pub struct Recentered<'a> {
    forest: &'a Forest,
    center: usize,
}

impl<'a> Recentered<'a> {
    pub fn new(forest: &'a Forest, center: PointId) -> Result<Self> {
        Ok(Recentered { forest, center: forest.slot(center)? })
    }

    pub fn center(&self) -> PointId {
        self.forest.id(self.center)
    }

    pub fn forest(&self) -> &'a Forest {
        self.forest
    }

    pub fn position(&self, id: PointId) -> Result<(Vec<f64>, f64)> {
        let c = self.forest.point(self.center);
        let p = self.forest.point(self.forest.slot(id)?);
        Ok((self.forest.window().displacement(&c.x, &p.x), p.r - c.r))
    }
}

pub(crate) fn shift(forest: &Forest, slot: usize, n: i64) -> Option<usize> {
    let step: fn(&Forest, usize) -> SlotStep = if n >= 0 { successor_slot } else { predecessor_slot };
    let mut cur = slot;
    for _ in 0..n.unsigned_abs() {
        cur = step(forest, cur).slot?;
    }
    Some(cur)
}

/// `π_{-n}` applied to the configuration recentred at `X_n = π_n` returns
/// the anchor, whose recentred position is exactly `-X_n`.
///
/// Unresolvable chains are a domain error, not a falsification.
pub fn check_pointshift_identity(forest: &Forest, anchor: PointId, n: i64) -> Result<bool> {
    let start = forest.slot(anchor)?;
    let unresolved = || Error::Domain(format!("chain of length {n} from {anchor} is unresolved"));
    let target = shift(forest, start, n).ok_or_else(unresolved)?;

    let from_anchor = Recentered::new(forest, anchor)?;
    let (xn, rn) = from_anchor.position(forest.id(target))?;

    let shifted = Recentered::new(forest, forest.id(target))?;
    let back = shift(shifted.forest(), target, -n).ok_or_else(unresolved)?;
    let (xb, rb) = shifted.position(forest.id(back))?;

    let negated = xn.iter().map(|v| -v).collect::<Vec<f64>>();
    Ok(back == start && xb == negated && rb == -rn)
}

pub fn write_succession<W: Write>(forest: &Forest, labels: &SuccessionLabels, back: usize, forward: usize, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "{} anchor={} back={} forward={} complete={}",
        SampleHeader::of(forest.sample()).render(),
        labels.anchor,
        back,
        forward,
        u8::from(labels.complete)
    )?;
    for (n, id) in &labels.labels {
        let p = forest.point(forest.slot(*id)?);
        write!(out, "{n} {id}")?;
        for v in &p.x {
            write!(out, " {v}")?;
        }
        writeln!(out, " {}", p.r)?;
    }
    Ok(())
}
