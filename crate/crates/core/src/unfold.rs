//! Bipartite weighted-to-unweighted reduction by graph unfolding.
//!
//! A weight-w edge becomes w unit edges spread across W stacked copies of
//! each endpoint (`u^i -- v^(w-i+1)`), so a maximum-cardinality matching
//! of the unfolded graph has size equal to the maximum matching weight of
//! the base graph when that graph is bipartite. Refolding projects an
//! unfolded edge set back to the base edges that own at least one legal
//! copy.

use crate::graph::{DynamicGraph, EdgeId, UpdateEvent, UpdateKind, VertexId, WeightedEdge};
use crate::matching::Matching;
use crate::oracle::{self, OracleBudget, SideLabels};
use crate::solver::{DynamicMatching, MatchDelta, SolverError};
use crate::weight::{is_integer, rat, One, Rat, Signed, Zero};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum UnfoldError {
    #[error("edge {id} weight {w} is not an integer in [1, {cap}]")]
    NonIntegerWeight { id: EdgeId, w: Rat, cap: i128 },
    #[error("weight cap must be positive")]
    BadCap,
    #[error("unfolded inner solver needs a bipartite base graph or a tiny one")]
    InnerUnavailable,
}

/// The unfolded companion of a base graph with integer weights `<= w_cap`.
#[derive(Debug, Clone)]
pub struct UnfoldedGraph {
    pub base_vertices: u32,
    pub w_cap: i128,
    pub graph: DynamicGraph,
}

impl UnfoldedGraph {
    /// Vertex id of copy `i` (1-based) of base vertex `u`.
    pub fn copy_id(&self, u: VertexId, i: i128) -> VertexId {
        debug_assert!(i >= 1 && i <= self.w_cap);
        u * self.w_cap as u32 + (i as u32 - 1)
    }

    /// Inverse of [`UnfoldedGraph::copy_id`]: `(base vertex, copy index)`.
    pub fn base_of(&self, copy: VertexId) -> (VertexId, i128) {
        (
            copy / self.w_cap as u32,
            (copy % self.w_cap as u32) as i128 + 1,
        )
    }

    /// The unfolded copies of one base edge.
    pub fn copies_of(&self, e: &WeightedEdge) -> Vec<EdgeId> {
        let w = *e.w.numer();
        let mut out = Vec::with_capacity(w as usize);
        for i in 1..=w {
            out.push(EdgeId::new(
                self.copy_id(e.id.u, i),
                self.copy_id(e.id.v, w - i + 1),
            ));
        }
        out
    }

    /// Total vertex count `W * n`.
    pub fn vertex_count(&self) -> u64 {
        self.base_vertices as u64 * self.w_cap as u64
    }

    /// Side labels of the unfolded graph induced by base-side labels
    /// (copies inherit their base vertex's side).
    pub fn lifted_sides(&self, base_sides: &SideLabels) -> SideLabels {
        let mut out = SideLabels::new();
        for v in self.graph.active_vertices() {
            let (b, _) = self.base_of(v);
            out.insert(v, base_sides[&b]);
        }
        out
    }
}

fn check_weight(e: &WeightedEdge, cap: i128) -> Result<i128, UnfoldError> {
    if !is_integer(&e.w) || !e.w.is_positive() || *e.w.numer() > cap {
        return Err(UnfoldError::NonIntegerWeight {
            id: e.id,
            w: e.w.clone(),
            cap,
        });
    }
    Ok(*e.w.numer())
}

/// Unfolds a graph with integer weights in `[1, w_cap]`. Callers with real
/// weights must pre-round via the standard scaling reduction.
pub fn unfold(g: &DynamicGraph, w_cap: i128) -> Result<UnfoldedGraph, UnfoldError> {
    if w_cap <= 0 {
        return Err(UnfoldError::BadCap);
    }
    let mut out = UnfoldedGraph {
        base_vertices: g.vertex_count(),
        w_cap,
        graph: DynamicGraph::with_vertices(g.vertex_count() * w_cap as u32),
    };
    for e in g.edges() {
        check_weight(&e, w_cap)?;
        for id in out.copies_of(&e) {
            out.graph
                .insert_edge(WeightedEdge { id, w: Rat::one() })
                .unwrap();
        }
    }
    Ok(out)
}

/// Refolds a subset of unfolded edges: a base edge appears when any of its
/// legal copies (`i + j = w + 1`) is present. Returns base weighted edges.
pub fn refold(
    unfolded: &UnfoldedGraph,
    base: &DynamicGraph,
    h: &BTreeSet<EdgeId>,
) -> Vec<WeightedEdge> {
    let mut out = Vec::new();
    for e in base.edges() {
        let w = *e.w.numer();
        let hit = (1..=w).any(|i| {
            h.contains(&EdgeId::new(
                unfolded.copy_id(e.id.u, i),
                unfolded.copy_id(e.id.v, w - i + 1),
            ))
        });
        if hit {
            out.push(e);
        }
    }
    out
}

/// Inner maintainer of a `(1-eps)`-approximate MCM on the unfolded graph.
/// The default rebuilds an exact MCM from scratch per update: bipartite
/// augmenting search when the base is bipartite, unit-weight subset DP
/// within the oracle budget otherwise.
struct UnfoldedMcm {
    budget: OracleBudget,
    matching: Matching,
}

impl UnfoldedMcm {
    fn rebuild(
        &mut self,
        g: &DynamicGraph,
        sides: Option<&SideLabels>,
    ) -> Result<(), SolverError> {
        self.matching = match sides {
            Some(labels) => oracle::mcm_bipartite(g, labels)?,
            None => {
                if g.active_vertices().len() > self.budget.max_vertices_general {
                    return Err(UnfoldError::InnerUnavailable.into());
                }
                oracle::mwm_exact_general(g, &self.budget)?
            }
        };
        Ok(())
    }
}

/// The bipartite reduction solver: unfolded inner MCM plus rebuild-scheduled
/// refolding. Between rebuilds the output only sheds deleted edges; a
/// rebuild recomputes a `(1-eps)`-approximate MWM on the refolded inner
/// matching and resets the cadence counter.
pub struct BdlSolver {
    base: DynamicGraph,
    w_cap: i128,
    eps: Rat,
    budget: OracleBudget,
    /// Base-side labels for bipartite mode; vertices absent from the map
    /// default to their parity. `None` flags non-bipartite operation
    /// (output contract drops to `2/3 - O(eps)`).
    base_sides: Option<SideLabels>,
    unfolded: UnfoldedGraph,
    inner: UnfoldedMcm,
    output: Matching,
    counter: Rat,
    w_star: Rat,
}

impl BdlSolver {
    pub fn new(
        initial: Vec<WeightedEdge>,
        w_cap: i128,
        eps: Rat,
        sides: Option<SideLabels>,
        budget: OracleBudget,
    ) -> Result<Self, SolverError> {
        let base = DynamicGraph::from_edges(initial)?;
        for e in base.edges() {
            check_weight(&e, w_cap)?;
        }
        let unfolded = unfold(&base, w_cap)?;
        let mut s = BdlSolver {
            base,
            w_cap,
            eps,
            budget: budget.clone(),
            base_sides: sides,
            unfolded,
            inner: UnfoldedMcm {
                budget,
                matching: Matching::new(),
            },
            output: Matching::new(),
            counter: Rat::zero(),
            w_star: Rat::zero(),
        };
        let labels = s.unfolded_sides();
        s.inner.rebuild(&s.unfolded.graph, labels.as_ref())?;
        s.rebuild_output()?;
        Ok(s)
    }

    pub fn output(&self) -> &Matching {
        &self.output
    }

    pub fn bipartite(&self) -> bool {
        self.base_sides.is_some()
    }

    /// Side labels of the currently active unfolded vertices.
    fn unfolded_sides(&self) -> Option<SideLabels> {
        let base_sides = self.base_sides.as_ref()?;
        let mut labels = SideLabels::new();
        for v in self.unfolded.graph.active_vertices() {
            let (b, _) = self.unfolded.base_of(v);
            let side = base_sides.get(&b).copied().unwrap_or(b % 2 == 1);
            labels.insert(v, side);
        }
        Some(labels)
    }

    /// Cadence invariant terms: `(counter, eps * w_star / W)`.
    pub fn cadence(&self) -> (Rat, Rat) {
        (
            self.counter.clone(),
            &self.eps * &self.w_star / rat(self.w_cap),
        )
    }

    fn rebuild_output(&mut self) -> Result<(), SolverError> {
        let ids: BTreeSet<EdgeId> = self.inner.matching.edge_ids().collect();
        let refolded_edges = refold(&self.unfolded, &self.base, &ids);
        let refolded = DynamicGraph::from_edges(refolded_edges)?;
        self.output = match &self.base_sides {
            Some(base_sides) => {
                let labels: SideLabels = refolded
                    .active_vertices()
                    .iter()
                    .map(|&v| (v, base_sides.get(&v).copied().unwrap_or(v % 2 == 1)))
                    .collect();
                oracle::mwm_bipartite_raw(&refolded, &labels)?
            }
            None => crate::solver::exact_mwm_auto(&refolded, &self.budget)?,
        };
        self.counter = Rat::zero();
        self.w_star = self.output.total_weight();
        Ok(())
    }
}

impl DynamicMatching for BdlSolver {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        check_weight(&ev.edge, self.w_cap)?;
        let before = self.output.clone();
        // mirror the update into the unfolded graph
        let copies = self.unfolded.copies_of(&ev.edge);
        match ev.kind {
            UpdateKind::Insert => {
                self.base.insert_edge(ev.edge.clone())?;
                for id in copies {
                    self.unfolded
                        .graph
                        .insert_edge(WeightedEdge { id, w: Rat::one() })?;
                }
            }
            UpdateKind::Delete => {
                self.base.apply_update(ev)?;
                for id in copies {
                    self.unfolded.graph.remove_edge(id)?;
                }
            }
        }
        let labels = self.unfolded_sides();
        self.inner.rebuild(&self.unfolded.graph, labels.as_ref())?;
        self.counter += Rat::one();
        let threshold = &self.eps * &self.w_star / rat(self.w_cap);
        if self.counter < threshold {
            if ev.kind == UpdateKind::Delete && self.output.contains(ev.edge.id) {
                self.output.remove(ev.edge.id).expect("present");
            }
        } else {
            self.rebuild_output()?;
        }
        Ok(MatchDelta::between(&before, &self.output))
    }

    fn matching(&self) -> &Matching {
        &self.output
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::ratio;

    #[test]
    fn single_edge_unfolding() {
        // (u, v, 3) with W = 3: 6 vertices, 3 edges u1-v3, u2-v2, u3-v1,
        // and the unfolded MCM has size 3 = w
        let g =
            DynamicGraph::from_edges([WeightedEdge::new(0, 1, rat(3)).unwrap()]).unwrap();
        let u = unfold(&g, 3).unwrap();
        assert_eq!(u.vertex_count(), 6);
        assert_eq!(u.graph.edge_count(), 3);
        let sides: SideLabels = u
            .graph
            .active_vertices()
            .iter()
            .map(|&v| (v, u.base_of(v).0 == 1))
            .collect();
        let mcm = oracle::mcm_bipartite(&u.graph, &sides).unwrap();
        assert_eq!(mcm.len(), 3);
    }

    #[test]
    fn unit_weights_unfold_to_isomorphic_graph() {
        let g = DynamicGraph::from_edges([
            WeightedEdge::new(0, 1, rat(1)).unwrap(),
            WeightedEdge::new(2, 3, rat(1)).unwrap(),
        ])
        .unwrap();
        let u = unfold(&g, 1).unwrap();
        assert_eq!(u.graph.edge_count(), g.edge_count());
        assert_eq!(u.vertex_count(), g.vertex_count() as u64);
    }

    #[test]
    fn gadget_scaled_integer_unfolding() {
        // gadget scaled to integer weights (2,2,3) with W = 3: 12 vertices,
        // 7 unfolded edges, and mu(phi) = 5 = mu_w
        let g = DynamicGraph::from_edges([
            WeightedEdge::new(0, 1, rat(2)).unwrap(),
            WeightedEdge::new(1, 2, rat(2)).unwrap(),
            WeightedEdge::new(2, 3, rat(3)).unwrap(),
        ])
        .unwrap();
        let u = unfold(&g, 3).unwrap();
        assert_eq!(u.vertex_count(), 12);
        assert_eq!(u.graph.edge_count(), 7);
        let base_sides = g.bipartition().unwrap();
        let sides = u.lifted_sides(&base_sides);
        let mcm = oracle::mcm_bipartite(&u.graph, &sides).unwrap();
        let mu_w = oracle::mwm_exact_general_value(&g, &OracleBudget::default()).unwrap();
        assert_eq!(rat(mcm.len() as i128), mu_w);
    }

    #[test]
    fn refold_round_trips() {
        let g =
            DynamicGraph::from_edges([WeightedEdge::new(0, 1, rat(3)).unwrap()]).unwrap();
        let u = unfold(&g, 3).unwrap();
        // refolding the full unfolding returns the edge
        let all: BTreeSet<EdgeId> = u.graph.edges().map(|e| e.id).collect();
        let back = refold(&u, &g, &all);
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].id, EdgeId::new(0, 1));
        // empty refolds to empty
        assert!(refold(&u, &g, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn rejects_non_integer_weight() {
        let g =
            DynamicGraph::from_edges([WeightedEdge::new(0, 1, ratio(3, 2)).unwrap()]).unwrap();
        assert!(matches!(
            unfold(&g, 3),
            Err(UnfoldError::NonIntegerWeight { .. })
        ));
    }

    #[test]
    fn bdl_first_insert_rebuilds() {
        let mut s = BdlSolver::new(
            vec![],
            4,
            ratio(1, 10),
            Some(SideLabels::new()),
            OracleBudget::default(),
        )
        .unwrap();
        s.apply(&UpdateEvent::insert(0, 1, rat(3), 0)).unwrap();
        assert_eq!(s.output().total_weight(), rat(3));
    }

    #[test]
    fn bdl_delete_mid_phase_sheds_edge() {
        let mut s = BdlSolver::new(
            vec![
                WeightedEdge::new(0, 1, rat(4)).unwrap(),
                WeightedEdge::new(2, 3, rat(4)).unwrap(),
                WeightedEdge::new(4, 5, rat(4)).unwrap(),
                WeightedEdge::new(6, 7, rat(4)).unwrap(),
            ],
            4,
            ratio(1, 2),
            Some(SideLabels::new()),
            OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(s.output().total_weight(), rat(16));
        // eps W*/W = 0.5 * 16 / 4 = 2, so the first delete is mid-phase
        let delta = s
            .apply(&UpdateEvent::delete(0, 1, rat(4), 0))
            .unwrap();
        assert_eq!(delta.removed.len(), 1);
        assert!(delta.added.is_empty());
        assert_eq!(s.output().total_weight(), rat(12));
        let (c, threshold) = s.cadence();
        assert!(c < threshold);
    }

    #[test]
    fn bdl_bipartite_ratio_on_trace() {
        // 200-event bipartite trace, eps = 0.1, W = 4: ratio >= 1 - 5 eps
        use crate::trace::{TraceKind, TraceModel, WeightDist};
        let model = TraceModel {
            kind: TraceKind::UniformRandom,
            n: 10,
            events: 200,
            weights: WeightDist::UniformInt { lo: 1, hi: 4 },
            seed: 21,
            bipartite: true,
            max_degree: None,
        };
        let events = model.generate().unwrap();
        let mut s = BdlSolver::new(
            vec![],
            4,
            ratio(1, 10),
            Some(SideLabels::new()),
            OracleBudget::default(),
        )
        .unwrap();
        let mut shadow = DynamicGraph::new();
        let budget = OracleBudget::default();
        for ev in &events {
            shadow.apply_update(ev).unwrap();
            s.apply(ev).unwrap();
            let sides = crate::solver::parity_sides(&shadow);
            let mu = oracle::mwm_bipartite_value(&shadow, &sides).unwrap();
            if mu.is_positive() {
                let bound = (Rat::one() - rat(5) * ratio(1, 10)) * mu;
                assert!(
                    s.output().total_weight() >= bound,
                    "seq {}: {} < {}",
                    ev.seq,
                    s.output().total_weight(),
                    bound
                );
            }
            let (c, threshold) = s.cadence();
            assert!(c == Rat::zero() || c < threshold || threshold <= Rat::zero());
            let _ = &budget;
        }
    }
}
