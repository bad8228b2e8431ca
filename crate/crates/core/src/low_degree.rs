//! Fully dynamic `(1-eps)`-approximate MWM on bounded-degree graphs.
//!
//! The base solver handles one small-aspect weight class: on every update
//! it rebuilds an exact matching inside the radius-`ceil(2 W_class / eps)`
//! ball around the touched endpoints, freezing matched edges that cross
//! the ball boundary. At desk scale the ball swallows the class subgraph,
//! so the maintained matching is exactly optimal there; the radius is the
//! documented truncation for larger inputs.
//!
//! The full solver runs those base solvers, each behind the low-recourse
//! transformation, inside the depth-3 tree framework, which is what the
//! ultimate reduction plugs in as its aggregation engine.

use crate::graph::{DynamicGraph, UpdateEvent, VertexId, WeightedEdge};
use crate::matching::Matching;
use crate::oracle::{self, OracleBudget};
use crate::solver::{DynamicMatching, MatchDelta, SolverError, SolverFactory, SolverInit};
use crate::weight::{ceil_int, Rat};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LowDegreeError {
    #[error("vertex degree would exceed the cap {0}")]
    DegreeCap(usize),
}

/// Contract-satisfying single-class solver: bounded-radius exact rebuild.
pub struct LowDegreeBaseSolver {
    graph: DynamicGraph,
    matching: Matching,
    budget: OracleBudget,
    /// Rebuild radius in hops: `ceil(2 * w_class / eps)`.
    radius: usize,
}

impl LowDegreeBaseSolver {
    pub fn new(
        initial: Vec<WeightedEdge>,
        eps: &Rat,
        w_class: &Rat,
        budget: OracleBudget,
    ) -> Result<Self, SolverError> {
        let graph = DynamicGraph::from_edges(initial)?;
        let radius = ceil_int(&(Rat::from_integer(2) * w_class / eps)).max(1) as usize;
        let mut s = LowDegreeBaseSolver {
            graph,
            matching: Matching::new(),
            budget,
            radius,
        };
        s.matching = s.solve_region(&s.ball(&[]))?;
        Ok(s)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Vertices within `radius` hops of the seeds; empty seed list means
    /// the whole active vertex set (initialization).
    fn ball(&self, seeds: &[VertexId]) -> BTreeSet<VertexId> {
        if seeds.is_empty() {
            return self.graph.active_vertices().into_iter().collect();
        }
        let mut seen: BTreeSet<VertexId> = seeds.iter().copied().collect();
        let mut frontier: Vec<VertexId> = seeds.to_vec();
        for _ in 0..self.radius {
            let mut next = Vec::new();
            for &v in &frontier {
                for u in self.graph.neighbors(v) {
                    if seen.insert(u) {
                        next.push(u);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen
    }

    /// Exact MWM on the region induced by `verts`, holding boundary-
    /// crossing matched edges fixed.
    fn solve_region(&self, verts: &BTreeSet<VertexId>) -> Result<Matching, SolverError> {
        // freeze matched edges with an endpoint outside the region
        let mut fixed: Vec<WeightedEdge> = Vec::new();
        let mut blocked: BTreeSet<VertexId> = BTreeSet::new();
        for e in self.matching.edges() {
            let inside = verts.contains(&e.id.u) as u8 + verts.contains(&e.id.v) as u8;
            if inside < 2 {
                for v in [e.id.u, e.id.v] {
                    if verts.contains(&v) {
                        blocked.insert(v);
                    }
                }
                fixed.push(e);
            }
        }
        let mut region = DynamicGraph::new();
        for e in self.graph.edges() {
            if verts.contains(&e.id.u)
                && verts.contains(&e.id.v)
                && !blocked.contains(&e.id.u)
                && !blocked.contains(&e.id.v)
            {
                region.insert_edge(e).unwrap();
            }
        }
        let solved = crate::solver::exact_mwm_auto(&region, &self.budget)
            .or_else(|_| self.truncated_search(&region))?;
        let mut out = Matching::new();
        for e in fixed {
            out.add(e)?;
        }
        for e in solved.edges() {
            out.add(e)?;
        }
        Ok(out)
    }

    /// Fallback when the region outgrows every exact oracle: greedy plus
    /// alternating-path improvement truncated at the rebuild radius.
    fn truncated_search(&self, region: &DynamicGraph) -> Result<Matching, oracle::OracleError> {
        let eps = Rat::new(1.into(), 6.into());
        oracle::approx_mwm_static(region, &eps, &self.budget)
    }
}

impl DynamicMatching for LowDegreeBaseSolver {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        self.graph.apply_update(ev)?;
        if self.matching.contains(ev.edge.id) {
            self.matching.remove(ev.edge.id)?;
        }
        let region = self.ball(&[ev.edge.id.u, ev.edge.id.v]);
        let new = self.solve_region(&region)?;
        let delta = MatchDelta::between(&self.matching, &new);
        self.matching = new;
        Ok(delta)
    }

    fn matching(&self) -> &Matching {
        &self.matching
    }
}

/// Factory for the base solver; `aspect_hint` doubles as the class weight
/// cap in the radius formula.
pub struct LowDegreeBaseFactory {
    pub budget: OracleBudget,
}

impl SolverFactory for LowDegreeBaseFactory {
    fn build(&self, init: SolverInit) -> Result<Box<dyn DynamicMatching>, SolverError> {
        Ok(Box::new(LowDegreeBaseSolver::new(
            init.edges,
            &init.eps,
            &init.aspect_hint,
            self.budget.clone(),
        )?))
    }

    fn name(&self) -> String {
        "low-degree-base".into()
    }
}

/// The fully dynamic low-degree solver: depth-3 tree framework over
/// low-recourse-wrapped base solvers, with a hard degree precondition.
pub struct LowDegreeSolver {
    degree_cap: usize,
    graph: DynamicGraph,
    inner: crate::framework::FrameworkSolver,
}

impl LowDegreeSolver {
    pub fn new(
        initial: Vec<WeightedEdge>,
        eps: Rat,
        degree_cap: usize,
        w_max: Rat,
        budget: OracleBudget,
    ) -> Result<Self, SolverError> {
        let graph = DynamicGraph::from_edges(initial.clone())?;
        if graph.max_degree() > degree_cap {
            return Err(SolverError::Config(
                LowDegreeError::DegreeCap(degree_cap).to_string(),
            ));
        }
        let factory = crate::low_recourse::LowRecourseFactory {
            inner: LowDegreeBaseFactory {
                budget: budget.clone(),
            },
        };
        let inner = crate::framework::FrameworkSolver::new(
            initial,
            crate::framework::FrameworkConfig {
                eps,
                mode: crate::framework::FrameworkMode::Tree(3),
                w_max,
            },
            &factory,
            &budget,
        )?;
        Ok(LowDegreeSolver {
            degree_cap,
            graph,
            inner,
        })
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn matching(&self) -> &Matching {
        self.inner.matching()
    }

    pub fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        // enforce, never assume, the degree precondition
        if ev.kind == crate::graph::UpdateKind::Insert {
            for v in [ev.edge.id.u, ev.edge.id.v] {
                if self.graph.degree(v) >= self.degree_cap {
                    return Err(SolverError::Config(
                        LowDegreeError::DegreeCap(self.degree_cap).to_string(),
                    ));
                }
            }
        }
        self.graph.apply_update(ev)?;
        self.inner.apply(ev)
    }

    pub fn partner(&self, v: VertexId) -> Option<VertexId> {
        self.inner.matching().partner(v)
    }
}

impl DynamicMatching for LowDegreeSolver {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        LowDegreeSolver::apply(self, ev)
    }

    fn matching(&self) -> &Matching {
        self.inner.matching()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{rat, ratio};

    #[test]
    fn base_star_switches_to_best_spoke() {
        let eps = ratio(1, 4);
        let mut s = LowDegreeBaseSolver::new(
            vec![
                WeightedEdge::new(0, 1, rat(3)).unwrap(),
                WeightedEdge::new(0, 2, rat(2)).unwrap(),
            ],
            &eps,
            &rat(4),
            OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(s.matching().total_weight(), rat(3));
        s.apply(&UpdateEvent::insert(0, 3, rat(4), 0)).unwrap();
        assert_eq!(s.matching().total_weight(), rat(4));
        assert_eq!(s.matching().partner(0), Some(3));
    }

    #[test]
    fn base_random_degree4_ratio() {
        use crate::trace::{TraceKind, TraceModel, WeightDist};
        let eps = ratio(1, 4);
        let model = TraceModel {
            kind: TraceKind::UniformRandom,
            n: 12,
            events: 400,
            weights: WeightDist::UniformInt { lo: 1, hi: 4 },
            seed: 12,
            bipartite: false,
            max_degree: Some(4),
        };
        let events = model.generate().unwrap();
        let budget = OracleBudget::default();
        let mut s =
            LowDegreeBaseSolver::new(vec![], &eps, &rat(4), budget.clone()).unwrap();
        let mut shadow = DynamicGraph::new();
        for ev in &events {
            shadow.apply_update(ev).unwrap();
            s.apply(ev).unwrap();
            let mu = oracle::mwm_exact_general_value(&shadow, &budget).unwrap();
            let bound = (Rat::from_integer(1) - &eps) * mu;
            assert!(
                s.matching().total_weight() >= bound,
                "seq {}: contract violated",
                ev.seq
            );
        }
    }

    #[test]
    fn degree_cap_enforced() {
        let mut s = LowDegreeSolver::new(
            vec![],
            ratio(1, 6),
            2,
            rat(16),
            OracleBudget::default(),
        )
        .unwrap();
        s.apply(&UpdateEvent::insert(0, 1, rat(1), 0)).unwrap();
        s.apply(&UpdateEvent::insert(0, 2, rat(1), 1)).unwrap();
        assert!(s.apply(&UpdateEvent::insert(0, 3, rat(1), 2)).is_err());
    }

    #[test]
    fn single_edge_stream_ratio_one() {
        let mut s = LowDegreeSolver::new(
            vec![],
            ratio(1, 6),
            4,
            rat(16),
            OracleBudget::default(),
        )
        .unwrap();
        s.apply(&UpdateEvent::insert(0, 1, rat(7), 0)).unwrap();
        assert_eq!(s.matching().total_weight(), rat(7));
        s.apply(&UpdateEvent::delete(0, 1, rat(7), 1)).unwrap();
        assert!(s.matching().is_empty());
    }

    #[test]
    fn gadget_cycling_ratio() {
        // insert-then-delete cycling on the 3-edge gadget, eps = 1/10
        let eps = ratio(1, 10);
        let budget = OracleBudget::default();
        let mut s = LowDegreeSolver::new(vec![], eps.clone(), 2, rat(2), budget.clone()).unwrap();
        let mut shadow = DynamicGraph::new();
        let gadget = [
            WeightedEdge::new(0, 1, rat(1)).unwrap(),
            WeightedEdge::new(1, 2, rat(1)).unwrap(),
            WeightedEdge::new(2, 3, ratio(3, 2)).unwrap(),
        ];
        let mut seq = 0u64;
        for round in 0..4 {
            for e in &gadget {
                let ev = UpdateEvent {
                    kind: crate::graph::UpdateKind::Insert,
                    edge: e.clone(),
                    seq,
                };
                seq += 1;
                shadow.apply_update(&ev).unwrap();
                s.apply(&ev).unwrap();
                let mu = oracle::mwm_exact_general_value(&shadow, &budget).unwrap();
                let bound = ratio(1, 2) * mu;
                assert!(s.matching().total_weight() >= bound, "round {round}");
            }
            for e in gadget.iter().rev() {
                let ev = UpdateEvent {
                    kind: crate::graph::UpdateKind::Delete,
                    edge: e.clone(),
                    seq,
                };
                seq += 1;
                shadow.apply_update(&ev).unwrap();
                s.apply(&ev).unwrap();
            }
            assert!(s.matching().is_empty());
        }
    }
}
