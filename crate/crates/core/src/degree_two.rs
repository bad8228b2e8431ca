//! Fully dynamic `(1-eps)`-approximate MWM on degree-two graphs.
//!
//! A degree-two graph is a disjoint union of paths and cycles. The store
//! keeps components short (below `3 * ceil(1/eps)` edges) by exiling the
//! minimum edge of a central window into a reservoir R whenever a path
//! grows too long; deleting an edge pulls adjacent reservoir edges back
//! in. The maintained matching is the union of exact per-component DP
//! matchings of the stored (reservoir-free) graph.
//!
//! Components are plain doubly-linked walks; every operation is a linear
//! scan, which is the intended cost model at these lengths.

use crate::graph::{DynamicGraph, EdgeId, UpdateEvent, UpdateKind, VertexId, WeightedEdge};
use crate::matching::Matching;
use crate::oracle::{self, PathOrCycle};
use crate::weight::{ceil_int, Rat, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DegreeTwoError {
    #[error("inserting {0} would push a vertex above degree two")]
    DegreeViolation(EdgeId),
    #[error("edge {0} already present")]
    Duplicate(EdgeId),
    #[error("edge {0} not present")]
    Missing(EdgeId),
    #[error("window [{lo}, {hi}] out of range for component of length {len}")]
    WindowOutOfRange { lo: usize, hi: usize, len: usize },
    #[error("heads query on a cycle")]
    HeadsOnCycle,
    #[error("vertex {0} not in any component")]
    NoComponent(VertexId),
}

/// Paths and cycles over degree-<=2 edges, supporting walks, head lookup,
/// windowed minima, and per-component exact matchings.
#[derive(Debug, Clone, Default)]
pub struct PathCycleStore {
    weights: BTreeMap<EdgeId, Rat>,
    adj: BTreeMap<VertexId, Vec<VertexId>>,
}

impl PathCycleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.weights.contains_key(&id)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj.get(&v).map_or(0, |n| n.len())
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = WeightedEdge> + '_ {
        self.weights.iter().map(|(id, w)| WeightedEdge {
            id: *id,
            w: w.clone(),
        })
    }

    /// Inserts `uv`; both endpoints must have degree <= 1.
    pub fn link(&mut self, e: WeightedEdge) -> Result<(), DegreeTwoError> {
        if self.contains(e.id) {
            return Err(DegreeTwoError::Duplicate(e.id));
        }
        if self.degree(e.id.u) >= 2 || self.degree(e.id.v) >= 2 {
            return Err(DegreeTwoError::DegreeViolation(e.id));
        }
        self.adj.entry(e.id.u).or_default().push(e.id.v);
        self.adj.entry(e.id.v).or_default().push(e.id.u);
        self.weights.insert(e.id, e.w);
        Ok(())
    }

    pub fn cut(&mut self, id: EdgeId) -> Result<WeightedEdge, DegreeTwoError> {
        let w = self.weights.remove(&id).ok_or(DegreeTwoError::Missing(id))?;
        for (a, b) in [(id.u, id.v), (id.v, id.u)] {
            let n = self.adj.get_mut(&a).expect("endpoint known");
            n.retain(|&x| x != b);
            if n.is_empty() {
                self.adj.remove(&a);
            }
        }
        Ok(WeightedEdge { id, w })
    }

    /// Walks from `start` until stuck (path endpoint) or back at `start`
    /// (cycle); returns the final vertex and whether it wrapped.
    fn walk_to_end(&self, start: VertexId) -> (VertexId, bool) {
        let mut cur = start;
        let mut from: Option<VertexId> = None;
        loop {
            match self.adj[&cur].iter().copied().find(|&x| Some(x) != from) {
                Some(nx) => {
                    from = Some(cur);
                    cur = nx;
                    if cur == start {
                        return (cur, true);
                    }
                }
                None => return (cur, false),
            }
        }
    }

    /// The ordered component containing `v`. A path is listed from its
    /// canonical head, the endpoint with the smaller vertex id.
    pub fn component_of(&self, v: VertexId) -> Result<PathOrCycle, DegreeTwoError> {
        if self.degree(v) == 0 {
            return Err(DegreeTwoError::NoComponent(v));
        }
        let (end_a, is_cycle) = self.walk_to_end(v);
        let start = if is_cycle {
            v
        } else {
            let (end_b, _) = self.walk_to_end(end_a);
            end_a.min(end_b)
        };
        let mut edges = Vec::new();
        let mut cur = start;
        let mut from = None;
        loop {
            match self.adj[&cur].iter().copied().find(|&x| Some(x) != from) {
                Some(nx) => {
                    let id = EdgeId::new(cur, nx);
                    edges.push(WeightedEdge {
                        id,
                        w: self.weights[&id].clone(),
                    });
                    from = Some(cur);
                    cur = nx;
                    if is_cycle && cur == start {
                        break;
                    }
                }
                None => break,
            }
        }
        Ok(PathOrCycle { edges, is_cycle })
    }

    /// Both endpoints of the path containing `v` (canonical head first).
    pub fn heads(&self, v: VertexId) -> Result<(VertexId, VertexId), DegreeTwoError> {
        let comp = self.component_of(v)?;
        if comp.is_cycle {
            return Err(DegreeTwoError::HeadsOnCycle);
        }
        let first = &comp.edges[0].id;
        let head = if comp.edges.len() == 1 {
            first.u
        } else {
            let second = &comp.edges[1].id;
            if first.u == second.u || first.u == second.v {
                first.v
            } else {
                first.u
            }
        };
        let last = &comp.edges[comp.edges.len() - 1].id;
        let tail = if comp.edges.len() == 1 {
            last.v
        } else {
            let before = &comp.edges[comp.edges.len() - 2].id;
            if last.u == before.u || last.u == before.v {
                last.v
            } else {
                last.u
            }
        };
        Ok((head, tail))
    }

    /// Minimum-weight edge between the `lo`-th and `hi`-th edges (1-based)
    /// of `comp`, counted from the head the component walk starts at. Ties
    /// break toward the position nearest the head, then the smaller id.
    pub fn find_min(
        comp: &PathOrCycle,
        lo: usize,
        hi: usize,
    ) -> Result<WeightedEdge, DegreeTwoError> {
        if lo == 0 || lo > hi || hi > comp.edges.len() {
            return Err(DegreeTwoError::WindowOutOfRange {
                lo,
                hi,
                len: comp.edges.len(),
            });
        }
        let mut best: Option<&WeightedEdge> = None;
        for e in &comp.edges[lo - 1..hi] {
            let better = match best {
                None => true,
                Some(b) => e.w < b.w || (e.w == b.w && false),
            };
            if better {
                best = Some(e);
            }
        }
        Ok(best.expect("window non-empty").clone())
    }
}

/// Report of one degree-two update: output matching changes plus the
/// internal edge movements, for recourse accounting.
#[derive(Debug, Clone, Default)]
pub struct DegreeTwoDelta {
    pub removed: Vec<WeightedEdge>,
    pub added: Vec<WeightedEdge>,
}

impl DegreeTwoDelta {
    pub fn recourse(&self) -> usize {
        self.removed.len() + self.added.len()
    }
}

/// The fully dynamic solver: store + reservoir + derived matching.
#[derive(Debug, Clone)]
pub struct DegreeTwoSolver {
    eps: Rat,
    /// component length cap `3 * ceil(1/eps)`
    cap: usize,
    store: PathCycleStore,
    reservoir: BTreeMap<EdgeId, Rat>,
    matching: Matching,
}

impl DegreeTwoSolver {
    pub fn new(eps: Rat) -> Self {
        assert!(eps.is_positive(), "eps must be positive");
        let cap = 3 * ceil_int(&eps.recip()).max(1) as usize;
        DegreeTwoSolver {
            eps,
            cap,
            store: PathCycleStore::new(),
            reservoir: BTreeMap::new(),
            matching: Matching::new(),
        }
    }

    pub fn from_edges<I>(eps: Rat, edges: I) -> Result<Self, DegreeTwoError>
    where
        I: IntoIterator<Item = WeightedEdge>,
    {
        let mut s = Self::new(eps);
        for e in edges {
            s.insert(e)?;
        }
        Ok(s)
    }

    pub fn eps(&self) -> &Rat {
        &self.eps
    }

    pub fn component_cap(&self) -> usize {
        self.cap
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn reservoir_weight(&self) -> Rat {
        self.reservoir.values().fold(Rat::zero(), |a, w| a + w)
    }

    pub fn reservoir_len(&self) -> usize {
        self.reservoir.len()
    }

    /// Total weight of the logical graph (store + reservoir).
    pub fn logical_weight(&self) -> Rat {
        self.store.edges().fold(Rat::zero(), |a, e| a + e.w) + self.reservoir_weight()
    }

    /// The logical graph the solver answers for.
    pub fn logical_graph(&self) -> DynamicGraph {
        let mut g = DynamicGraph::new();
        for e in self.store.edges() {
            g.insert_edge(e).unwrap();
        }
        for (id, w) in &self.reservoir {
            g.insert_edge(WeightedEdge {
                id: *id,
                w: w.clone(),
            })
            .unwrap();
        }
        g
    }

    fn logical_degree(&self, v: VertexId) -> usize {
        self.store.degree(v)
            + self
                .reservoir
                .keys()
                .filter(|id| id.touches(v))
                .count()
    }

    pub fn apply(&mut self, ev: &UpdateEvent) -> Result<DegreeTwoDelta, DegreeTwoError> {
        match ev.kind {
            UpdateKind::Insert => self.insert(ev.edge.clone()),
            UpdateKind::Delete => self.delete(ev.edge.id),
        }
    }

    /// Insert an edge into the logical graph.
    pub fn insert(&mut self, e: WeightedEdge) -> Result<DegreeTwoDelta, DegreeTwoError> {
        if self.store.contains(e.id) || self.reservoir.contains_key(&e.id) {
            return Err(DegreeTwoError::Duplicate(e.id));
        }
        if self.logical_degree(e.id.u) >= 2 || self.logical_degree(e.id.v) >= 2 {
            return Err(DegreeTwoError::DegreeViolation(e.id));
        }
        let mut dirty: BTreeSet<VertexId> = BTreeSet::new();
        self.touch_component(e.id.u, &mut dirty);
        self.touch_component(e.id.v, &mut dirty);
        // the reservoir may hold an edge at an endpoint (its stored degree
        // is then <= 1); the logical degree check above already guards us
        self.store.link(e.clone())?;
        self.touch_component(e.id.u, &mut dirty);
        let comp = self.store.component_of(e.id.u).expect("just linked");
        if !comp.is_cycle {
            self.maintain(e.id.u, &mut dirty);
        }
        Ok(self.refresh(dirty))
    }

    /// Delete an edge from the logical graph.
    pub fn delete(&mut self, id: EdgeId) -> Result<DegreeTwoDelta, DegreeTwoError> {
        if self.reservoir.remove(&id).is_some() {
            // reservoir edges carry no matching edges
            return Ok(DegreeTwoDelta::default());
        }
        if !self.store.contains(id) {
            return Err(DegreeTwoError::Missing(id));
        }
        let mut dirty: BTreeSet<VertexId> = BTreeSet::new();
        self.touch_component(id.u, &mut dirty);
        self.store.cut(id)?;
        for side in [id.u, id.v] {
            dirty.insert(side);
            if self.store.degree(side) == 0 && self.reservoir.keys().all(|r| !r.touches(side)) {
                continue;
            }
            // far head of this side's fragment; a freshly isolated vertex
            // is its own head
            let far_head = if self.store.degree(side) == 0 {
                side
            } else {
                let (h, t) = match self.store.heads(side) {
                    Ok(ht) => ht,
                    Err(DegreeTwoError::HeadsOnCycle) => continue,
                    Err(e) => return Err(e),
                };
                // the head that is not `side`; if side is interior (cannot
                // happen right after a cut) fall back to h
                if t == side {
                    h
                } else if h == side {
                    t
                } else {
                    h
                }
            };
            // reinstate a reservoir edge hanging off the far head
            let rejoin: Option<(EdgeId, Rat)> = self
                .reservoir
                .iter()
                .find(|(rid, _)| rid.touches(far_head))
                .map(|(rid, w)| (*rid, w.clone()));
            if let Some((rid, w)) = rejoin {
                self.reservoir.remove(&rid);
                self.touch_component(rid.u, &mut dirty);
                self.touch_component(rid.v, &mut dirty);
                self.store
                    .link(WeightedEdge { id: rid, w })
                    .expect("reservoir edge endpoints have stored degree <= 1");
                self.touch_component(rid.u, &mut dirty);
                self.maintain(rid.u, &mut dirty);
            }
        }
        Ok(self.refresh(dirty))
    }

    /// Split paths until they fall under the length cap: exile the minimum
    /// edge of the central window into the reservoir, then recurse on the
    /// left fragment first.
    fn maintain(&mut self, at: VertexId, dirty: &mut BTreeSet<VertexId>) {
        if self.store.degree(at) == 0 {
            return;
        }
        let comp = match self.store.component_of(at) {
            Ok(c) => c,
            Err(_) => return,
        };
        if comp.is_cycle {
            debug_assert!(comp.edges.len() <= self.cap, "cycle within cap");
            return;
        }
        let len = comp.edges.len();
        if len < self.cap {
            return;
        }
        let window = ceil_int(&self.eps.recip()).max(1) as usize;
        let lo = (len - window) / 2;
        let lo = lo.max(1);
        let hi = lo + window - 1;
        let victim = PathCycleStore::find_min(&comp, lo, hi).expect("window in range");
        self.touch_component(victim.id.u, dirty);
        self.store.cut(victim.id).expect("victim present");
        self.reservoir.insert(victim.id, victim.w);
        dirty.insert(victim.id.u);
        dirty.insert(victim.id.v);
        // left fragment first, then right
        self.maintain(victim.id.u, dirty);
        self.maintain(victim.id.v, dirty);
    }

    fn touch_component(&self, v: VertexId, dirty: &mut BTreeSet<VertexId>) {
        dirty.insert(v);
        if let Ok(comp) = self.store.component_of(v) {
            for e in &comp.edges {
                dirty.insert(e.id.u);
                dirty.insert(e.id.v);
            }
        }
    }

    /// Recomputes DP matchings for all components touching `dirty` and
    /// returns the matching delta.
    fn refresh(&mut self, dirty: BTreeSet<VertexId>) -> DegreeTwoDelta {
        let mut delta = DegreeTwoDelta::default();
        // old matching edges on dirty vertices go away
        let stale: Vec<EdgeId> = self
            .matching
            .edges()
            .filter(|e| dirty.contains(&e.id.u) || dirty.contains(&e.id.v))
            .map(|e| e.id)
            .collect();
        for id in stale {
            delta.removed.push(self.matching.remove(id).expect("stale edge"));
        }
        // recompute per dirty component
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        for &v in &dirty {
            if seen.contains(&v) || self.store.degree(v) == 0 {
                continue;
            }
            let comp = self.store.component_of(v).expect("non-isolated");
            for e in &comp.edges {
                seen.insert(e.id.u);
                seen.insert(e.id.v);
            }
            debug_assert!(
                comp.edges.len() <= self.cap,
                "component cap violated: {} > {}",
                comp.edges.len(),
                self.cap
            );
            let m = oracle::path_cycle_mwm(&comp);
            for e in m.edges() {
                self.matching.add(e.clone()).expect("components are disjoint");
                delta.added.push(e);
            }
        }
        // cancel no-op pairs so the reported recourse is the set difference
        let removed_ids: BTreeSet<EdgeId> = delta.removed.iter().map(|e| e.id).collect();
        let added_ids: BTreeSet<EdgeId> = delta.added.iter().map(|e| e.id).collect();
        let both: BTreeSet<EdgeId> = removed_ids.intersection(&added_ids).copied().collect();
        delta.removed.retain(|e| !both.contains(&e.id));
        delta.added.retain(|e| !both.contains(&e.id));
        delta
    }

    /// Vertices with logical degree (store + reservoir) below two can accept
    /// another edge.
    pub fn logical_degree_of(&self, v: VertexId) -> usize {
        self.logical_degree(v)
    }

    /// Longest stored component, for the cap invariant.
    pub fn max_component_len(&self) -> usize {
        let mut seen: BTreeSet<VertexId> = BTreeSet::new();
        let mut best = 0;
        let verts: Vec<VertexId> = self.store.adj.keys().copied().collect();
        for v in verts {
            if seen.contains(&v) {
                continue;
            }
            if let Ok(comp) = self.store.component_of(v) {
                for e in &comp.edges {
                    seen.insert(e.id.u);
                    seen.insert(e.id.v);
                }
                best = best.max(comp.edges.len());
            }
        }
        best
    }
}

impl crate::solver::DynamicMatching for DegreeTwoSolver {
    fn apply(
        &mut self,
        ev: &UpdateEvent,
    ) -> Result<crate::solver::MatchDelta, crate::solver::SolverError> {
        let delta = DegreeTwoSolver::apply(self, ev)?;
        Ok(crate::solver::MatchDelta {
            removed: delta.removed,
            added: delta.added,
        })
    }

    fn matching(&self) -> &Matching {
        &self.matching
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{rat, ratio};

    #[test]
    fn link_and_cut_structure() {
        let mut s = PathCycleStore::new();
        s.link(WeightedEdge::new(0, 1, rat(1)).unwrap()).unwrap();
        let c = s.component_of(0).unwrap();
        assert_eq!(c.edges.len(), 1);
        assert!(!c.is_cycle);
        assert_eq!(s.heads(0).unwrap(), (0, 1));

        // extend to a 3-edge path, then close the cycle
        s.link(WeightedEdge::new(1, 2, rat(2)).unwrap()).unwrap();
        s.link(WeightedEdge::new(2, 3, rat(3)).unwrap()).unwrap();
        s.link(WeightedEdge::new(0, 3, rat(4)).unwrap()).unwrap();
        let c = s.component_of(1).unwrap();
        assert!(c.is_cycle);
        assert_eq!(c.edges.len(), 4);
        assert!(matches!(s.heads(1), Err(DegreeTwoError::HeadsOnCycle)));

        // cut the middle edge of a path
        s.cut(EdgeId::new(0, 3)).unwrap();
        s.cut(EdgeId::new(1, 2)).unwrap();
        assert_eq!(s.component_of(0).unwrap().edges.len(), 1);
        assert_eq!(s.component_of(3).unwrap().edges.len(), 1);
    }

    #[test]
    fn find_min_window() {
        let mut s = PathCycleStore::new();
        s.link(WeightedEdge::new(0, 1, rat(5)).unwrap()).unwrap();
        s.link(WeightedEdge::new(1, 2, rat(1)).unwrap()).unwrap();
        s.link(WeightedEdge::new(2, 3, rat(7)).unwrap()).unwrap();
        let comp = s.component_of(0).unwrap();
        let min = PathCycleStore::find_min(&comp, 1, 3).unwrap();
        assert_eq!(min.id, EdgeId::new(1, 2));
        assert!(matches!(
            PathCycleStore::find_min(&comp, 2, 4),
            Err(DegreeTwoError::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn degree_violation_rejected() {
        let mut s = DegreeTwoSolver::new(ratio(1, 2));
        s.insert(WeightedEdge::new(0, 1, rat(1)).unwrap()).unwrap();
        s.insert(WeightedEdge::new(0, 2, rat(1)).unwrap()).unwrap();
        assert!(matches!(
            s.insert(WeightedEdge::new(0, 3, rat(1)).unwrap()),
            Err(DegreeTwoError::DegreeViolation(_))
        ));
    }

    #[test]
    fn gadget_inserts_short_path() {
        // component stays far below the cap for eps = 1/10, so R is empty
        // and the matching is exact: weight 2.5
        let mut s = DegreeTwoSolver::new(ratio(1, 10));
        s.insert(WeightedEdge::new(0, 1, rat(1)).unwrap()).unwrap();
        s.insert(WeightedEdge::new(1, 2, rat(1)).unwrap()).unwrap();
        s.insert(WeightedEdge::new(2, 3, ratio(3, 2)).unwrap()).unwrap();
        assert_eq!(s.matching().total_weight(), ratio(5, 2));
        assert_eq!(s.reservoir_len(), 0);
    }

    #[test]
    fn delete_only_edge_empties() {
        let mut s = DegreeTwoSolver::new(ratio(1, 2));
        s.insert(WeightedEdge::new(0, 1, rat(3)).unwrap()).unwrap();
        assert_eq!(s.matching().len(), 1);
        let delta = s.delete(EdgeId::new(0, 1)).unwrap();
        assert_eq!(delta.removed.len(), 1);
        assert!(s.matching().is_empty());
    }

    #[test]
    fn long_path_respects_cap_and_ratio() {
        // 100 unit edges, eps = 1/10: every component <= 30 edges, the
        // reservoir keeps at most an eps fraction of the weight, and the
        // matching is within (1-2eps) of the path DP optimum (50)
        let eps = ratio(1, 10);
        let mut s = DegreeTwoSolver::new(eps.clone());
        for i in 0..100u32 {
            s.insert(WeightedEdge::new(i, i + 1, rat(1)).unwrap()).unwrap();
        }
        assert!(s.max_component_len() <= s.component_cap());
        assert!(s.reservoir_weight() <= &eps * s.logical_weight());
        let mu = oracle::mwm_degree_two_value(&s.logical_graph()).unwrap();
        assert_eq!(mu, rat(50));
        let bound = (Rat::from_integer(1) - rat(2) * &eps) * mu;
        assert!(s.matching().total_weight() >= bound);
    }

    #[test]
    fn randomized_trace_against_oracle() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        for eps in [ratio(1, 2), ratio(1, 10)] {
            let mut rng = StdRng::seed_from_u64(5);
            let mut s = DegreeTwoSolver::new(eps.clone());
            let mut live: Vec<WeightedEdge> = Vec::new();
            let n = 30u32;
            let mut prev = s.matching().clone();
            for step in 0..1500 {
                let insert = live.is_empty() || rng.gen_bool(0.6);
                if insert {
                    let a = rng.gen_range(0..n);
                    let b = rng.gen_range(0..n);
                    if a == b {
                        continue;
                    }
                    let id = EdgeId::new(a, b);
                    if s.logical_degree(a) >= 2
                        || s.logical_degree(b) >= 2
                        || s.store.contains(id)
                        || s.reservoir.contains_key(&id)
                    {
                        continue;
                    }
                    let e = WeightedEdge {
                        id,
                        w: rat(rng.gen_range(1..=20)),
                    };
                    s.insert(e.clone()).unwrap();
                    live.push(e);
                } else {
                    let idx = rng.gen_range(0..live.len());
                    let e = live.swap_remove(idx);
                    s.delete(e.id).unwrap();
                }
                // invariants after every update
                assert!(s.max_component_len() <= s.component_cap(), "step {step}");
                assert!(
                    s.reservoir_weight() <= &eps * s.logical_weight(),
                    "step {step}: reservoir too heavy"
                );
                let mu = oracle::mwm_degree_two_value(&s.logical_graph()).unwrap();
                let bound = (Rat::from_integer(1) - rat(2) * &eps) * mu;
                assert!(
                    s.matching().total_weight() >= bound,
                    "step {step}: {} < {}",
                    s.matching().total_weight(),
                    bound
                );
                // recourse envelope 10/eps
                let recourse = s.matching().symmetric_difference_size(&prev);
                let cap = ceil_int(&(rat(10) / &eps)) as usize;
                assert!(recourse <= cap, "step {step}: recourse {recourse}");
                prev = s.matching().clone();
            }
        }
    }
}
