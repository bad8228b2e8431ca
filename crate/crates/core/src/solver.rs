//! The dynamic-solver interface shared by every maintainer in the crate,
//! plus the oracle-backed rebuild solver used as the default inner engine.

use crate::graph::{DynamicGraph, UpdateEvent, VertexId, WeightedEdge};
use crate::matching::Matching;
use crate::oracle::{self, OracleBudget, SideLabels};
use crate::weight::Rat;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    DegreeTwo(#[from] crate::degree_two::DegreeTwoError),
    #[error(transparent)]
    Census(#[from] crate::census::CensusError),
    #[error(transparent)]
    Compose(#[from] crate::composer::ComposeError),
    #[error(transparent)]
    Matching(#[from] crate::matching::MatchingError),
    #[error(transparent)]
    Unfold(#[from] crate::unfold::UnfoldError),
    #[error("{0}")]
    Config(String),
}

/// Matching edges removed and added by one update, removals first.
#[derive(Debug, Clone, Default)]
pub struct MatchDelta {
    pub removed: Vec<WeightedEdge>,
    pub added: Vec<WeightedEdge>,
}

impl MatchDelta {
    pub fn recourse(&self) -> usize {
        self.removed.len() + self.added.len()
    }

    pub fn between(old: &Matching, new: &Matching) -> MatchDelta {
        let mut d = MatchDelta::default();
        for e in old.edges() {
            if !new.contains(e.id) {
                d.removed.push(e);
            }
        }
        for e in new.edges() {
            if !old.contains(e.id) {
                d.added.push(e);
            }
        }
        d
    }
}

/// A dynamic matching maintainer: feed updates, read the matching, and
/// answer vertex-match queries.
pub trait DynamicMatching {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError>;

    fn matching(&self) -> &Matching;

    /// Vertex-match query: the current partner of `v`, if matched.
    fn partner(&self, v: VertexId) -> Option<VertexId> {
        self.matching().partner(v)
    }
}

/// Construction context handed to a solver factory: the initial edges, the
/// accuracy target, and an upper bound on the weight range the solver will
/// ever observe (weights stay in `[1, aspect_hint]` after class scaling).
#[derive(Debug, Clone)]
pub struct SolverInit {
    pub edges: Vec<WeightedEdge>,
    pub eps: Rat,
    pub aspect_hint: Rat,
}

/// Builds fresh inner solvers for the framework's weight classes.
pub trait SolverFactory {
    fn build(&self, init: SolverInit) -> Result<Box<dyn DynamicMatching>, SolverError>;
    fn name(&self) -> String;
}

/// Rebuild-from-scratch exact solver: after every update it recomputes an
/// exact MWM of the whole current graph (per-component path/cycle DP when
/// the degree allows, bipartite Hungarian when 2-colorable, subset DP
/// within the budget otherwise). Maximal recourse by construction, which
/// is exactly what the low-recourse wrapper is exercised against.
pub struct OracleRebuildSolver {
    graph: DynamicGraph,
    matching: Matching,
    budget: OracleBudget,
}

impl OracleRebuildSolver {
    pub fn new(initial: Vec<WeightedEdge>, budget: OracleBudget) -> Result<Self, SolverError> {
        let graph = DynamicGraph::from_edges(initial)?;
        let mut s = OracleRebuildSolver {
            graph,
            matching: Matching::new(),
            budget,
        };
        s.matching = s.solve()?;
        Ok(s)
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    fn solve(&self) -> Result<Matching, SolverError> {
        Ok(exact_mwm_auto(&self.graph, &self.budget)?)
    }
}

/// Exact MWM by the cheapest applicable oracle; errors only when the graph
/// is non-bipartite, has degree > 2, and exceeds the subset-DP budget.
pub fn exact_mwm_auto(
    g: &DynamicGraph,
    budget: &OracleBudget,
) -> Result<Matching, oracle::OracleError> {
    if g.max_degree() <= 2 {
        let mut m = Matching::new();
        for comp in oracle::path_cycle_components(g)? {
            for e in oracle::path_cycle_mwm(&comp).edges() {
                m.add(e).expect("components disjoint");
            }
        }
        return Ok(m);
    }
    if g.active_vertices().len() <= budget.max_vertices_general {
        return oracle::mwm_exact_general(g, budget);
    }
    if let Some(sides) = g.bipartition() {
        if g.active_vertices().len() <= budget.max_vertices_bipartite {
            return oracle::mwm_bipartite_raw(g, &sides);
        }
    }
    Err(oracle::OracleError::BudgetExceeded {
        vertices: g.active_vertices().len(),
        budget: budget.max_vertices_general,
    })
}

/// Exact MWM value by the cheapest applicable oracle.
pub fn exact_mwm_value_auto(
    g: &DynamicGraph,
    budget: &OracleBudget,
) -> Result<Rat, oracle::OracleError> {
    if g.max_degree() <= 2 {
        return oracle::mwm_degree_two_value(g);
    }
    if g.active_vertices().len() <= budget.max_vertices_general {
        return oracle::mwm_exact_general_value(g, budget);
    }
    if let Some(sides) = g.bipartition() {
        if g.active_vertices().len() <= budget.max_vertices_bipartite {
            return oracle::mwm_bipartite_value(g, &sides);
        }
    }
    Err(oracle::OracleError::BudgetExceeded {
        vertices: g.active_vertices().len(),
        budget: budget.max_vertices_general,
    })
}

impl DynamicMatching for OracleRebuildSolver {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        self.graph.apply_update(ev)?;
        let new = self.solve()?;
        let delta = MatchDelta::between(&self.matching, &new);
        self.matching = new;
        Ok(delta)
    }

    fn matching(&self) -> &Matching {
        &self.matching
    }
}

/// Factory for [`OracleRebuildSolver`].
pub struct OracleFactory {
    pub budget: OracleBudget,
}

impl SolverFactory for OracleFactory {
    fn build(&self, init: SolverInit) -> Result<Box<dyn DynamicMatching>, SolverError> {
        Ok(Box::new(OracleRebuildSolver::new(
            init.edges,
            self.budget.clone(),
        )?))
    }

    fn name(&self) -> String {
        "oracle".into()
    }
}

/// Bipartite side labels derived from vertex parity, the convention used
/// by every generated bipartite trace: odd vertices are the right side.
pub fn parity_sides(g: &DynamicGraph) -> SideLabels {
    g.active_vertices().iter().map(|&v| (v, v % 2 == 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{rat, ratio};

    #[test]
    fn rebuild_solver_tracks_exact() {
        let mut s = OracleRebuildSolver::new(vec![], OracleBudget::default()).unwrap();
        s.apply(&UpdateEvent::insert(0, 1, rat(1), 0)).unwrap();
        s.apply(&UpdateEvent::insert(1, 2, rat(1), 1)).unwrap();
        s.apply(&UpdateEvent::insert(2, 3, ratio(3, 2), 2)).unwrap();
        assert_eq!(s.matching().total_weight(), ratio(5, 2));
        assert_eq!(s.partner(0), Some(1));
        s.apply(&UpdateEvent::delete(2, 3, ratio(3, 2), 3)).unwrap();
        assert_eq!(s.matching().total_weight(), rat(1));
    }

    #[test]
    fn delta_between_counts() {
        let a = Matching::from_edges([WeightedEdge::new(0, 1, rat(1)).unwrap()]).unwrap();
        let b = Matching::from_edges([WeightedEdge::new(2, 3, rat(1)).unwrap()]).unwrap();
        let d = MatchDelta::between(&a, &b);
        assert_eq!(d.recourse(), 2);
        assert_eq!(d.removed[0].id, crate::graph::EdgeId::new(0, 1));
        assert_eq!(d.added[0].id, crate::graph::EdgeId::new(2, 3));
    }
}
