//! The Poisson tree/forest: every point is linked to its mother, the first
//! point whose unit obstacle is hit by the upward ray from it.

mod export;
mod index;
mod union_find;

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

pub use export::{read_forest, write_forest, ForestFile, ForestRecord};
pub use index::{GridIndex, Hit};
pub use union_find::UnionFind;

use crate::error::{Error, Result};
use crate::point_process::{lex_cmp, Point, PointId, PointSample, Window};

/// Samples smaller than this are processed on the calling thread.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Clone, Debug)]
pub struct Forest {
    sample: PointSample,
    index: GridIndex,
    slot_of: HashMap<PointId, usize>,
    mother: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    sister_rank: Vec<usize>,
    roots: Vec<usize>,
    component: Vec<usize>,
    component_count: usize,
}

/// Descendants of a vertex, generation by generation.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    /// `(id, generation)` in breadth-first order; generation 0 is the root.
    pub members: Vec<(PointId, usize)>,
    /// Some member sits within distance 1 of an open space face, so
    /// daughters outside the window may be missing.
    pub truncated: bool,
}

impl Branch {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// `|D^n(s)|` for `n = 0, 1, ...`.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for &(_, g) in &self.members {
            if sizes.len() <= g {
                sizes.resize(g + 1, 0);
            }
            sizes[g] += 1;
        }
        sizes
    }

    pub fn ids(&self) -> Vec<PointId> {
        self.members.iter().map(|&(id, _)| id).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSummary {
    pub count: usize,
    /// Class sizes, largest first.
    pub sizes: Vec<usize>,
    pub largest_fraction: f64,
}

impl ComponentSummary {
    pub fn from_labels(labels: impl IntoIterator<Item = usize>) -> Self {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        let mut total = 0usize;
        for l in labels {
            *counts.entry(l).or_default() += 1;
            total += 1;
        }
        let mut sizes: Vec<usize> = counts.into_values().collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let largest_fraction = if total == 0 { 0.0 } else { sizes[0] as f64 / total as f64 };
        ComponentSummary { count: sizes.len(), sizes, largest_fraction }
    }
}

impl Forest {
    pub fn build(sample: PointSample) -> Result<Self> {
        sample.validate()?;
        let index = GridIndex::build(&sample)?;
        let n = sample.points.len();

        let query = |p: &Point| index.first_obstacle(&p.x, p.r).map(|h| h.slot);
        let mother: Vec<Option<usize>> = if n >= PARALLEL_THRESHOLD {
            sample.points.par_iter().map(query).collect()
        } else {
            sample.points.iter().map(query).collect()
        };

        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        let mut uf = UnionFind::new(n);
        for (slot, m) in mother.iter().enumerate() {
            match *m {
                Some(m) => {
                    children[m].push(slot);
                    uf.union(slot, m);
                }
                None => roots.push(slot),
            }
        }
        let window = &sample.window;
        let points = &sample.points;
        for (m, kids) in children.iter_mut().enumerate() {
            if kids.len() > 1 {
                let anchor = &points[m].x;
                kids.sort_by(|&a, &b| sister_cmp(window, anchor, &points[a], &points[b]));
            }
        }
        let mut sister_rank = vec![0; n];
        for kids in &children {
            for (i, &c) in kids.iter().enumerate() {
                sister_rank[c] = i + 1;
            }
        }
        let (component, component_count) = uf.labels();
        let slot_of = points.iter().enumerate().map(|(i, p)| (p.id, i)).collect();

        Ok(Forest {
            sample,
            index,
            slot_of,
            mother,
            children,
            sister_rank,
            roots,
            component,
            component_count,
        })
    }

    pub fn sample(&self) -> &PointSample {
        &self.sample
    }

    pub fn window(&self) -> &Window {
        &self.sample.window
    }

    pub fn index(&self) -> &GridIndex {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.mother.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mother.is_empty()
    }

    pub fn slot(&self, id: PointId) -> Result<usize> {
        self.slot_of.get(&id).copied().ok_or(Error::UnknownPoint(id))
    }

    pub fn point(&self, slot: usize) -> &Point {
        &self.sample.points[slot]
    }

    pub fn id(&self, slot: usize) -> PointId {
        self.sample.points[slot].id
    }

    pub fn mother_slot(&self, slot: usize) -> Option<usize> {
        self.mother[slot]
    }

    /// Daughters in sister order, eldest first.
    pub fn children_slots(&self, slot: usize) -> &[usize] {
        &self.children[slot]
    }

    /// 1-based rank among sisters; 0 for roots.
    pub fn rank_slot(&self, slot: usize) -> usize {
        self.sister_rank[slot]
    }

    pub fn component_slot(&self, slot: usize) -> usize {
        self.component[slot]
    }

    pub fn root_slots(&self) -> &[usize] {
        &self.roots
    }

    pub fn mother(&self, id: PointId) -> Result<Option<PointId>> {
        let slot = self.slot(id)?;
        Ok(self.mother[slot].map(|m| self.id(m)))
    }

    pub fn children(&self, id: PointId) -> Result<Vec<PointId>> {
        let slot = self.slot(id)?;
        Ok(self.children[slot].iter().map(|&c| self.id(c)).collect())
    }

    pub fn roots(&self) -> Vec<PointId> {
        self.roots.iter().map(|&s| self.id(s)).collect()
    }

    pub fn component_of(&self, id: PointId) -> Result<usize> {
        Ok(self.component[self.slot(id)?])
    }

    pub fn edge_count(&self) -> usize {
        self.len() - self.roots.len()
    }

    pub fn unresolved_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.roots.len() as f64 / self.len() as f64
        }
    }

    /// The `n`th ancestor; `None` once an unresolved root is crossed.
    pub fn ancestor(&self, id: PointId, n: usize) -> Result<Option<PointId>> {
        let slot = self.slot(id)?;
        Ok(self.ancestor_slot(slot, n).map(|s| self.id(s)))
    }

    pub fn ancestor_slot(&self, mut slot: usize, n: usize) -> Option<usize> {
        for _ in 0..n {
            slot = self.mother[slot]?;
        }
        Some(slot)
    }

    /// Ancestor chain starting with `slot` itself, up to the root.
    pub fn lineage(&self, slot: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(Some(slot), move |&s| self.mother[s])
    }

    pub fn near_open_face(&self, slot: usize) -> bool {
        self.window().distance_to_open_face(&self.point(slot).x) <= 1.0
    }

    /// Breadth-first closure of daughters.
    pub fn branch(&self, id: PointId) -> Result<Branch> {
        let root = self.slot(id)?;
        let mut members = Vec::new();
        let mut truncated = false;
        let mut queue = VecDeque::from([(root, 0usize)]);
        while let Some((slot, generation)) = queue.pop_front() {
            truncated |= self.near_open_face(slot);
            members.push((self.id(slot), generation));
            queue.extend(self.children[slot].iter().map(|&c| (c, generation + 1)));
        }
        Ok(Branch { members, truncated })
    }

    pub fn branch_size_slot(&self, slot: usize) -> (usize, bool) {
        let mut stack = vec![slot];
        let mut size = 0;
        let mut truncated = false;
        while let Some(s) = stack.pop() {
            size += 1;
            truncated |= self.near_open_face(s);
            stack.extend_from_slice(&self.children[s]);
        }
        (size, truncated)
    }

    pub fn sister_rank(&self, id: PointId) -> Result<usize> {
        let slot = self.slot(id)?;
        match self.sister_rank[slot] {
            0 => Err(Error::NoMother(id)),
            rank => Ok(rank),
        }
    }

    pub fn components(&self) -> ComponentSummary {
        ComponentSummary::from_labels(self.component.iter().copied())
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }
}

/// Sister order: ascending displacement from the mother, compared
/// lexicographically over space coordinates, then by id.
fn sister_cmp(window: &Window, mother_x: &[f64], a: &Point, b: &Point) -> Ordering {
    let da = window.displacement(mother_x, &a.x);
    let db = window.displacement(mother_x, &b.x);
    lex_cmp(&da, &db).then_with(|| a.id.cmp(&b.id))
}

pub fn build_index(sample: &PointSample) -> Result<GridIndex> {
    GridIndex::build(sample)
}

pub fn build_forest(sample: PointSample) -> Result<Forest> {
    Forest::build(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::point_process::{sample_poisson, Boundary};

    fn id(_: &Forest, name: &str) -> PointId {
        fixtures::id(name)
    }

    #[test]
    fn fixture_one_mothers() {
        let f = fixtures::f1();
        let (a, b, c, e) = (id(&f, "a"), id(&f, "b"), id(&f, "c"), id(&f, "e"));
        let idx = f.index();
        let pa = f.sample().get(a).unwrap();
        let hit = idx.mother(&pa.x, pa.r).unwrap().unwrap();
        assert_eq!((f.id(hit.slot), hit.tau), (b, 1.0));
        let pb = f.sample().get(b).unwrap();
        let hit = idx.mother(&pb.x, pb.r).unwrap().unwrap();
        assert_eq!((f.id(hit.slot), hit.tau), (c, 2.0));
        let pe = f.sample().get(e).unwrap();
        assert_eq!(idx.mother(&pe.x, pe.r).unwrap(), None);
        assert_eq!(f.mother(a).unwrap(), Some(b));
        assert_eq!(f.mother(b).unwrap(), Some(c));
    }

    #[test]
    fn fixture_one_components_and_roots() {
        let f = fixtures::f1();
        let mut roots = f.roots();
        roots.sort();
        let mut want = vec![id(&f, "c"), id(&f, "e")];
        want.sort();
        assert_eq!(roots, want);
        let summary = f.components();
        assert_eq!(summary.count, 2);
        assert_eq!(summary.sizes, vec![3, 1]);
        let ca = f.component_of(id(&f, "a")).unwrap();
        assert_eq!(ca, f.component_of(id(&f, "b")).unwrap());
        assert_eq!(ca, f.component_of(id(&f, "c")).unwrap());
        assert_ne!(ca, f.component_of(id(&f, "e")).unwrap());
    }

    #[test]
    fn fixture_one_ancestors() {
        let f = fixtures::f1();
        assert_eq!(f.ancestor(id(&f, "a"), 2).unwrap(), Some(id(&f, "c")));
        assert_eq!(f.ancestor(id(&f, "e"), 1).unwrap(), None);
        for name in ["a", "b", "c", "e"] {
            assert_eq!(f.ancestor(id(&f, name), 0).unwrap(), Some(id(&f, name)));
        }
        assert!(matches!(f.ancestor(PointId(999), 0), Err(Error::UnknownPoint(_))));
    }

    #[test]
    fn fixture_one_branch_generations() {
        let f = fixtures::f1();
        let br = f.branch(id(&f, "c")).unwrap();
        assert_eq!(
            br.members,
            vec![(id(&f, "c"), 0), (id(&f, "b"), 1), (id(&f, "a"), 2)]
        );
        assert!(!br.truncated);
        assert_eq!(br.generation_sizes(), vec![1, 1, 1]);
        let leaf = f.branch(id(&f, "a")).unwrap();
        assert_eq!(leaf.ids(), vec![id(&f, "a")]);
    }

    #[test]
    fn fixture_two_sister_ranks() {
        let f = fixtures::f2();
        assert_eq!(f.sister_rank(id(&f, "p")).unwrap(), 1);
        assert_eq!(f.sister_rank(id(&f, "q")).unwrap(), 2);
        assert!(matches!(f.sister_rank(id(&f, "m")), Err(Error::NoMother(_))));
        let f1 = fixtures::f1();
        assert_eq!(f1.sister_rank(id(&f1, "a")).unwrap(), 1);
    }

    #[test]
    fn empty_forest() {
        let w = Window::cube(2, 4.0, 0.0, 1.0, Boundary::Periodic).unwrap();
        let f = Forest::build(PointSample::new(w, 1.0, vec![], 0, false).unwrap()).unwrap();
        assert!(f.is_empty());
        assert_eq!(f.components().count, 0);
        assert_eq!(f.edge_count(), 0);
    }

    #[test]
    fn no_edges_means_singleton_components() {
        let w = Window::cube(2, 20.0, 0.0, 1.0, Boundary::Open).unwrap();
        let pts = (0..5).map(|i| Point::new(i + 1, vec![-8.0 + 4.0 * i as f64], 0.1 * i as f64)).collect();
        let f = Forest::build(PointSample::new(w, 1.0, pts, 0, false).unwrap()).unwrap();
        assert_eq!(f.components().count, 5);
        assert_eq!(f.roots().len(), 5);
    }

    #[test]
    fn structural_invariants_on_random_samples() {
        for (d, boundary) in [(2, Boundary::Periodic), (3, Boundary::Open), (4, Boundary::Periodic)] {
            let w = Window::cube(d, 6.0, 0.0, 8.0, boundary).unwrap();
            let f = Forest::build(sample_poisson(1.0, &w, 17).unwrap()).unwrap();
            assert_eq!(f.edge_count() + f.roots().len(), f.len());
            let mut seen = vec![0usize; f.len()];
            for m in 0..f.len() {
                for &c in f.children_slots(m) {
                    seen[c] += 1;
                    assert_eq!(f.mother_slot(c), Some(m));
                }
            }
            for s in 0..f.len() {
                assert_eq!(seen[s], usize::from(f.mother_slot(s).is_some()));
                if let Some(m) = f.mother_slot(s) {
                    assert!(f.point(m).r > f.point(s).r);
                    assert!(f.window().dist2(&f.point(m).x, &f.point(s).x) <= 1.0);
                    assert_eq!(f.component_slot(m), f.component_slot(s));
                }
                let times: Vec<f64> = f.lineage(s).map(|a| f.point(a).r).collect();
                assert!(times.windows(2).all(|t| t[0] < t[1]));
            }
            for &root in f.root_slots() {
                let br = f.branch(f.id(root)).unwrap();
                let sum: usize = br.generation_sizes().iter().sum();
                assert_eq!(sum, br.size());
            }
        }
    }
}
