//! Exact and static approximate MWM reference solvers.
//!
//! These are the ground truth for every approximation bound in the crate
//! and double as the default pluggable inner solver. All of them break
//! ties toward the lexicographically smallest edge-id set, so repeated
//! runs and cross-checks are deterministic.

use crate::graph::{DynamicGraph, EdgeId, VertexId, WeightedEdge};
use crate::matching::Matching;
use crate::weight::{One, Rat, Signed, Zero};
use std::collections::BTreeMap;

/// Hard caps on brute-force oracle usage. The general bound must stay at
/// or below 20: the subset DP walks `2^n` states.
#[derive(Debug, Clone)]
pub struct OracleBudget {
    pub max_vertices_general: usize,
    pub max_vertices_bipartite: usize,
}

pub const GENERAL_BUDGET_HARD_CAP: usize = 20;

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_vertices_general: 16,
            max_vertices_bipartite: 512,
        }
    }
}

impl OracleBudget {
    pub fn new(general: usize, bipartite: usize) -> Result<Self, OracleError> {
        if general > GENERAL_BUDGET_HARD_CAP {
            return Err(OracleError::BudgetCap(general));
        }
        Ok(OracleBudget {
            max_vertices_general: general,
            max_vertices_bipartite: bipartite,
        })
    }

    /// Reads `DYNMWM_ORACLE_BUDGET_GENERAL` / `DYNMWM_ORACLE_BUDGET_BIPARTITE`,
    /// falling back to the defaults.
    pub fn from_env() -> Self {
        let mut b = OracleBudget::default();
        if let Ok(v) = std::env::var("DYNMWM_ORACLE_BUDGET_GENERAL") {
            if let Ok(n) = v.parse::<usize>() {
                b.max_vertices_general = n.min(GENERAL_BUDGET_HARD_CAP);
            }
        }
        if let Ok(v) = std::env::var("DYNMWM_ORACLE_BUDGET_BIPARTITE") {
            if let Ok(n) = v.parse::<usize>() {
                b.max_vertices_bipartite = n;
            }
        }
        b
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("budget exceeded: {vertices} active vertices > {budget}")]
    BudgetExceeded { vertices: usize, budget: usize },
    #[error("general oracle budget {0} above hard cap 20")]
    BudgetCap(usize),
    #[error("graph is not bipartite under the given side labels")]
    NotBipartite,
    #[error("input is not a simple path or cycle (degree > 2 or disconnected)")]
    NotPathOrCycle,
    #[error("epsilon {0} out of range")]
    BadEpsilon(Rat),
}

// ---------------------------------------------------------------------------
// Exact MWM on general graphs: subset DP over active vertices.
// ---------------------------------------------------------------------------

struct SubsetDp {
    verts: Vec<VertexId>,
    // adjacency by index into verts, neighbors ascending
    adj: Vec<Vec<(usize, Rat)>>,
    memo: Vec<Option<Rat>>,
}

impl SubsetDp {
    fn build(g: &DynamicGraph) -> Self {
        let verts = g.active_vertices();
        let index: BTreeMap<VertexId, usize> =
            verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut adj = vec![Vec::new(); verts.len()];
        for e in g.edges() {
            let (iu, iv) = (index[&e.id.u], index[&e.id.v]);
            adj[iu].push((iv, e.w.clone()));
            adj[iv].push((iu, e.w.clone()));
        }
        for a in &mut adj {
            a.sort_by_key(|(i, _)| *i);
        }
        let memo = vec![None; 1usize << verts.len()];
        SubsetDp { verts, adj, memo }
    }

    fn value(&mut self, mask: usize) -> Rat {
        if mask == 0 {
            return Rat::zero();
        }
        if let Some(v) = &self.memo[mask] {
            return v.clone();
        }
        let lowest = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << lowest);
        let mut best = self.value(rest);
        let neighbors = self.adj[lowest].clone();
        for (j, w) in neighbors {
            if rest & (1 << j) != 0 {
                let cand = w + self.value(rest & !(1 << j));
                if cand > best {
                    best = cand;
                }
            }
        }
        self.memo[mask] = Some(best.clone());
        best
    }

    /// Reconstructs the lexicographically smallest optimal edge set:
    /// at the lowest live vertex, matching it beats leaving it free, and
    /// smaller partners beat larger ones (first-difference argument on the
    /// sorted edge-id sequence).
    fn reconstruct(&mut self) -> Matching {
        let mut mask = (1usize << self.verts.len()) - 1;
        let mut m = Matching::new();
        while mask != 0 {
            let lowest = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << lowest);
            let target = self.value(mask);
            let neighbors = self.adj[lowest].clone();
            let mut matched = false;
            for (j, w) in neighbors {
                if rest & (1 << j) != 0 && w.clone() + self.value(rest & !(1 << j)) == target {
                    m.add(WeightedEdge {
                        id: EdgeId::new(self.verts[lowest], self.verts[j]),
                        w,
                    })
                    .expect("DP reconstruction yields disjoint edges");
                    mask = rest & !(1 << j);
                    matched = true;
                    break;
                }
            }
            if !matched {
                debug_assert_eq!(self.value(rest), target);
                mask = rest;
            }
        }
        m
    }
}

/// Exact maximum weight matching by exhaustive subset DP. Errors when the
/// number of matchable (non-isolated) vertices exceeds the budget.
pub fn mwm_exact_general(g: &DynamicGraph, budget: &OracleBudget) -> Result<Matching, OracleError> {
    let active = g.active_vertices().len();
    let cap = budget.max_vertices_general.min(GENERAL_BUDGET_HARD_CAP);
    if active > cap {
        return Err(OracleError::BudgetExceeded {
            vertices: active,
            budget: cap,
        });
    }
    let mut dp = SubsetDp::build(g);
    Ok(dp.reconstruct())
}

/// `mu_w(G)` via the same DP, without reconstruction.
pub fn mwm_exact_general_value(
    g: &DynamicGraph,
    budget: &OracleBudget,
) -> Result<Rat, OracleError> {
    let active = g.active_vertices().len();
    let cap = budget.max_vertices_general.min(GENERAL_BUDGET_HARD_CAP);
    if active > cap {
        return Err(OracleError::BudgetExceeded {
            vertices: active,
            budget: cap,
        });
    }
    let mut dp = SubsetDp::build(g);
    let full = (1usize << dp.verts.len()) - 1;
    Ok(dp.value(full))
}

// ---------------------------------------------------------------------------
// Exact MWM on paths and cycles: linear DP with lex tie-breaking.
// ---------------------------------------------------------------------------

/// A component of a degree-<=2 graph, as an ordered edge sequence.
#[derive(Debug, Clone)]
pub struct PathOrCycle {
    /// Edges in traversal order; consecutive edges share a vertex, and in a
    /// cycle the last edge also shares a vertex with the first.
    pub edges: Vec<WeightedEdge>,
    pub is_cycle: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EdgeConstraint {
    Free,
    In,
    Out,
}

/// Max matching weight on the ordered edge sequence under constraints,
/// treating consecutive edges (and, for cycles, last/first) as conflicting.
/// Returns `None` if the constraints are infeasible.
fn constrained_best(edges: &[WeightedEdge], is_cycle: bool, cons: &[EdgeConstraint]) -> Option<Rat> {
    let n = edges.len();
    if n == 0 {
        return Some(Rat::zero());
    }
    if is_cycle && n >= 2 {
        // condition on the first edge
        let mut best: Option<Rat> = None;
        for first in [EdgeConstraint::Out, EdgeConstraint::In] {
            if cons[0] != EdgeConstraint::Free && cons[0] != first {
                continue;
            }
            let mut c = cons.to_vec();
            c[0] = first;
            if first == EdgeConstraint::In {
                // neighbors of edge 0 in the cycle are 1 and n-1
                if c[1] == EdgeConstraint::In || c[n - 1] == EdgeConstraint::In {
                    continue;
                }
                c[1] = EdgeConstraint::Out;
                c[n - 1] = EdgeConstraint::Out;
            }
            if let Some(v) = path_best(edges, &c) {
                best = Some(match best {
                    Some(b) if b >= v => b,
                    _ => v,
                });
            }
        }
        return best;
    }
    path_best(edges, cons)
}

/// Linear DP for matchings on a path of conflicting consecutive edges.
fn path_best(edges: &[WeightedEdge], cons: &[EdgeConstraint]) -> Option<Rat> {
    // f_out / f_in: best over prefix with last edge excluded / included.
    let mut f_out = Some(Rat::zero());
    let mut f_in: Option<Rat> = None;
    for (i, e) in edges.iter().enumerate() {
        let prev_best = match (&f_out, &f_in) {
            (Some(a), Some(b)) => Some(a.clone().max(b.clone())),
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        let take = f_out.clone().map(|v| v + &e.w);
        let (mut next_out, mut next_in) = (prev_best, take);
        match cons[i] {
            EdgeConstraint::Free => {}
            EdgeConstraint::In => next_out = None,
            EdgeConstraint::Out => next_in = None,
        }
        f_out = next_out;
        f_in = next_in;
    }
    match (f_out, f_in) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (Some(a), None) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => None,
    }
}

/// Exact MWM on an ordered path/cycle, tie-broken toward the
/// lexicographically smallest edge-id set: edges are considered in
/// ascending id order and greedily forced in whenever an optimal
/// completion still exists.
pub fn path_cycle_mwm(component: &PathOrCycle) -> Matching {
    let edges = &component.edges;
    let n = edges.len();
    let mut cons = vec![EdgeConstraint::Free; n];
    let opt = constrained_best(edges, component.is_cycle, &cons).expect("unconstrained DP");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| edges[i].id);
    let mut m = Matching::new();
    for idx in order {
        if cons[idx] != EdgeConstraint::Free {
            continue;
        }
        cons[idx] = EdgeConstraint::In;
        let feasible = constrained_best(edges, component.is_cycle, &cons);
        if feasible.as_ref() == Some(&opt) {
            m.add(edges[idx].clone()).expect("DP edges disjoint");
            // exclude path-neighbors
            if idx > 0 {
                cons[idx - 1] = EdgeConstraint::Out;
            }
            if idx + 1 < n {
                cons[idx + 1] = EdgeConstraint::Out;
            }
            if component.is_cycle {
                if idx == 0 {
                    cons[n - 1] = EdgeConstraint::Out;
                }
                if idx == n - 1 {
                    cons[0] = EdgeConstraint::Out;
                }
            }
        } else {
            cons[idx] = EdgeConstraint::Out;
        }
    }
    debug_assert_eq!(m.total_weight(), opt);
    m
}

/// Decomposes a degree-<=2 graph into ordered path/cycle components.
pub fn path_cycle_components(g: &DynamicGraph) -> Result<Vec<PathOrCycle>, OracleError> {
    if g.max_degree() > 2 {
        return Err(OracleError::NotPathOrCycle);
    }
    let mut seen: std::collections::BTreeSet<VertexId> = Default::default();
    let mut out = Vec::new();
    let actives = g.active_vertices();
    // paths first: start walks at degree-1 vertices
    for &start in actives.iter().filter(|&&v| g.degree(v) == 1) {
        if seen.contains(&start) {
            continue;
        }
        let mut edges = Vec::new();
        let mut prev = None;
        let mut cur = start;
        seen.insert(cur);
        loop {
            let next = g.neighbors(cur).find(|&x| Some(x) != prev);
            match next {
                Some(nx) => {
                    let id = EdgeId::new(cur, nx);
                    edges.push(WeightedEdge {
                        id,
                        w: g.weight(id).unwrap().clone(),
                    });
                    seen.insert(nx);
                    prev = Some(cur);
                    cur = nx;
                    if g.degree(cur) == 1 {
                        break;
                    }
                }
                None => break,
            }
        }
        out.push(PathOrCycle {
            edges,
            is_cycle: false,
        });
    }
    // remaining active vertices lie on cycles
    for &start in &actives {
        if seen.contains(&start) || g.degree(start) == 0 {
            continue;
        }
        let mut edges = Vec::new();
        let mut prev = None;
        let mut cur = start;
        loop {
            seen.insert(cur);
            let next = g
                .neighbors(cur)
                .find(|&x| Some(x) != prev)
                .expect("cycle walk continues");
            let id = EdgeId::new(cur, next);
            edges.push(WeightedEdge {
                id,
                w: g.weight(id).unwrap().clone(),
            });
            prev = Some(cur);
            cur = next;
            if cur == start {
                break;
            }
        }
        out.push(PathOrCycle {
            edges,
            is_cycle: true,
        });
    }
    Ok(out)
}

/// Exact MWM on a graph that must be a single simple path or cycle.
pub fn mwm_path_cycle(g: &DynamicGraph) -> Result<Matching, OracleError> {
    let comps = path_cycle_components(g)?;
    match comps.len() {
        0 => Ok(Matching::new()),
        1 => Ok(path_cycle_mwm(&comps[0])),
        _ => Err(OracleError::NotPathOrCycle),
    }
}

/// Exact MWM value on any degree-<=2 graph (union of per-component DPs).
pub fn mwm_degree_two_value(g: &DynamicGraph) -> Result<Rat, OracleError> {
    let comps = path_cycle_components(g)?;
    let mut total = Rat::zero();
    for c in comps {
        total += path_cycle_mwm(&c).total_weight();
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Exact MWM on bipartite graphs: successive max-gain augmentation.
// ---------------------------------------------------------------------------

/// Side labels for a bipartite graph: `sides[v] = false` (left) or `true`.
/// Every edge must cross sides.
pub type SideLabels = BTreeMap<VertexId, bool>;

fn check_sides(g: &DynamicGraph, sides: &SideLabels) -> Result<(), OracleError> {
    for e in g.edges() {
        match (sides.get(&e.id.u), sides.get(&e.id.v)) {
            (Some(a), Some(b)) if a != b => {}
            _ => return Err(OracleError::NotBipartite),
        }
    }
    Ok(())
}

/// Exact maximum-weight bipartite matching (not necessarily perfect or
/// maximum-cardinality), by the Hungarian algorithm with potentials on a
/// zero-padded square cost matrix (cost = -w; a zero cell means "leave the
/// pair unmatched"). Deterministic but not lex-canonical; see
/// [`mwm_exact_bipartite`] for the canonical variant.
pub fn mwm_bipartite_raw(g: &DynamicGraph, sides: &SideLabels) -> Result<Matching, OracleError> {
    check_sides(g, sides)?;
    let actives = g.active_vertices();
    let lefts: Vec<VertexId> = actives.iter().copied().filter(|v| !sides[v]).collect();
    let rights: Vec<VertexId> = actives.iter().copied().filter(|v| sides[v]).collect();
    let n = lefts.len().max(rights.len());
    if n == 0 {
        return Ok(Matching::new());
    }
    // cost[i][j], 1-indexed into n x n; real edges carry -w, all padding 0.
    let mut cost = vec![vec![Rat::zero(); n + 1]; n + 1];
    for e in g.edges() {
        let (l, r) = if sides[&e.id.u] {
            (e.id.v, e.id.u)
        } else {
            (e.id.u, e.id.v)
        };
        let li = lefts.binary_search(&l).unwrap() + 1;
        let ri = rights.binary_search(&r).unwrap() + 1;
        cost[li][ri] = -e.w.clone();
    }
    // Standard O(n^3) minimization with row/column potentials. `None`
    // stands in for +infinity.
    let mut u = vec![Rat::zero(); n + 1];
    let mut v = vec![Rat::zero(); n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row assigned to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<Rat>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<Rat> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0][j].clone() - &u[i0] - &v[j];
                if minv[j].as_ref().map_or(true, |m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                if let Some(mj) = &minv[j] {
                    if delta.as_ref().map_or(true, |d| mj < d) {
                        delta = Some(mj.clone());
                        j1 = j;
                    }
                }
            }
            let delta = delta.expect("padded square matrix always admits a column");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += &delta;
                    v[j] -= &delta;
                } else if let Some(mj) = minv[j].take() {
                    minv[j] = Some(mj - &delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut m = Matching::new();
    for j in 1..=n {
        let i = p[j];
        if i == 0 || i > lefts.len() || j > rights.len() {
            continue;
        }
        if cost[i][j].is_negative() {
            let id = EdgeId::new(lefts[i - 1], rights[j - 1]);
            m.add(WeightedEdge {
                id,
                w: g.weight(id).unwrap().clone(),
            })
            .expect("assignment is a matching");
        }
    }
    Ok(m)
}

/// `mu_w` of a bipartite graph.
pub fn mwm_bipartite_value(g: &DynamicGraph, sides: &SideLabels) -> Result<Rat, OracleError> {
    Ok(mwm_bipartite_raw(g, sides)?.total_weight())
}

/// Exact bipartite MWM, tie-broken to the lexicographically smallest
/// optimal edge set. Costs one extra raw solve per edge of the result's
/// candidate prefix, so reserve it for oracle-grade comparisons.
pub fn mwm_exact_bipartite(g: &DynamicGraph, sides: &SideLabels) -> Result<Matching, OracleError> {
    check_sides(g, sides)?;
    let target = mwm_bipartite_value(g, sides)?;
    let mut fixed = Matching::new();
    let mut rest = g.clone();
    let all_edges: Vec<WeightedEdge> = g.edges().collect();
    for e in all_edges {
        if fixed.covers(e.id.u) || fixed.covers(e.id.v) {
            rest.remove_edge(e.id).ok();
            continue;
        }
        // Try forcing e in: fixed + e + best on the remaining graph with
        // ids greater than e and endpoints of fixed+e removed.
        let mut trial = rest.clone();
        trial.remove_edge(e.id).unwrap();
        // drop everything touching e's endpoints
        let drop: Vec<EdgeId> = trial
            .edges()
            .filter(|f| f.id.touches(e.id.u) || f.id.touches(e.id.v))
            .map(|f| f.id)
            .collect();
        for id in drop {
            trial.remove_edge(id).unwrap();
        }
        let sub = mwm_bipartite_value(&trial, sides)?;
        if fixed.total_weight() + &e.w + sub == target {
            fixed.add(e.clone()).unwrap();
            rest = trial;
        } else {
            rest.remove_edge(e.id).unwrap();
        }
    }
    debug_assert_eq!(fixed.total_weight(), target);
    Ok(fixed)
}

/// Maximum-cardinality bipartite matching (unit weights), by augmenting DFS.
pub fn mcm_bipartite(g: &DynamicGraph, sides: &SideLabels) -> Result<Matching, OracleError> {
    check_sides(g, sides)?;
    let mut partner: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let lefts: Vec<VertexId> = g
        .active_vertices()
        .into_iter()
        .filter(|v| !sides[v])
        .collect();

    fn try_augment(
        g: &DynamicGraph,
        l: VertexId,
        partner: &mut BTreeMap<VertexId, VertexId>,
        visited: &mut std::collections::BTreeSet<VertexId>,
    ) -> bool {
        for r in g.neighbors(l) {
            if visited.insert(r) {
                let free = match partner.get(&r) {
                    None => true,
                    Some(&l2) => try_augment(g, l2, partner, visited),
                };
                if free {
                    partner.insert(r, l);
                    return true;
                }
            }
        }
        false
    }

    for &l in &lefts {
        let mut visited = std::collections::BTreeSet::new();
        try_augment(g, l, &mut partner, &mut visited);
    }
    let mut m = Matching::new();
    for (r, l) in partner {
        let id = EdgeId::new(l, r);
        m.add(WeightedEdge {
            id,
            w: g.weight(id).unwrap().clone(),
        })
        .unwrap();
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Static (1-eps)-approximate MWM.
// ---------------------------------------------------------------------------

/// Static `(1-eps)`-approximate MWM. Uses an exact solver whenever one
/// applies (general within budget, else bipartite of any size, else
/// degree-<=2 DP); on large non-bipartite graphs it falls back to greedy
/// plus bounded-length augmenting improvement, whose contract is audited
/// against the oracle on every budget-checkable instance in the tests.
pub fn approx_mwm_static(
    g: &DynamicGraph,
    eps: &Rat,
    budget: &OracleBudget,
) -> Result<Matching, OracleError> {
    if !eps.is_positive() || *eps > Rat::new(1.into(), 6.into()) {
        // the callers that need looser eps use the exact paths anyway
        if !eps.is_positive() || *eps >= Rat::one() {
            return Err(OracleError::BadEpsilon(eps.clone()));
        }
    }
    if g.active_vertices().len() <= budget.max_vertices_general {
        return mwm_exact_general(g, budget);
    }
    if g.max_degree() <= 2 {
        let comps = path_cycle_components(g)?;
        let mut m = Matching::new();
        for c in comps {
            for e in path_cycle_mwm(&c).edges() {
                m.add(e).unwrap();
            }
        }
        return Ok(m);
    }
    if let Some(sides) = g.bipartition() {
        return mwm_bipartite_raw(g, &sides);
    }
    // Greedy heaviest-first, then improve with short alternating searches.
    let mut edges: Vec<WeightedEdge> = g.edges().collect();
    edges.sort_by(|a, b| b.w.cmp(&a.w).then(a.id.cmp(&b.id)));
    let mut m = Matching::new();
    for e in &edges {
        if !m.covers(e.id.u) && !m.covers(e.id.v) {
            m.add(e.clone()).unwrap();
        }
    }
    let radius = crate::weight::ceil_int(&(Rat::from_integer(2) / eps)).max(1) as usize;
    improve_with_short_augmentations(g, &mut m, radius);
    Ok(m)
}

/// Repeatedly applies the best positive-gain alternating path of bounded
/// length starting at each vertex, until no improvement is found.
fn improve_with_short_augmentations(g: &DynamicGraph, m: &mut Matching, max_len: usize) {
    loop {
        let mut improved = false;
        let verts = g.active_vertices();
        for v in verts {
            if m.covers(v) {
                continue;
            }
            if let Some(path) = short_gain_path(g, m, v, max_len) {
                for eid in &path {
                    if m.contains(*eid) {
                        m.remove(*eid).unwrap();
                    }
                }
                for eid in &path {
                    if !m.contains(*eid)
                        && !m.covers(eid.u)
                        && !m.covers(eid.v)
                    {
                        m.add(WeightedEdge {
                            id: *eid,
                            w: g.weight(*eid).unwrap().clone(),
                        })
                        .unwrap();
                    }
                }
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

fn short_gain_path(
    g: &DynamicGraph,
    m: &Matching,
    start: VertexId,
    max_len: usize,
) -> Option<Vec<EdgeId>> {
    // DFS over alternating walks from the free vertex `start`; accept the
    // first strictly-positive-gain path ending at a free vertex or after
    // dropping a matched edge.
    fn dfs(
        g: &DynamicGraph,
        m: &Matching,
        v: VertexId,
        take_matched: bool,
        gain: Rat,
        path: &mut Vec<EdgeId>,
        used: &mut std::collections::BTreeSet<VertexId>,
        depth: usize,
    ) -> bool {
        if depth == 0 {
            return false;
        }
        if take_matched {
            // must traverse the matched edge at v, if any
            match m.edge_at(v) {
                None => false,
                Some(me) => {
                    let u = me.id.other(v);
                    if used.contains(&u) {
                        return false;
                    }
                    let g2 = gain - &me.w;
                    path.push(me.id);
                    used.insert(u);
                    if dfs(g, m, u, false, g2, path, used, depth - 1) {
                        return true;
                    }
                    used.remove(&u);
                    path.pop();
                    false
                }
            }
        } else {
            for u in g.neighbors(v) {
                if used.contains(&u) {
                    continue;
                }
                let eid = EdgeId::new(v, u);
                if m.contains(eid) {
                    continue;
                }
                let w = g.weight(eid).unwrap().clone();
                let g2 = gain + &w;
                path.push(eid);
                used.insert(u);
                // path may end here if u is free and gain positive
                if !m.covers(u) && g2.is_positive() {
                    return true;
                }
                if dfs(g, m, u, true, g2, path, used, depth - 1) {
                    return true;
                }
                used.remove(&u);
                path.pop();
            }
            false
        }
    }
    let mut path = Vec::new();
    let mut used = std::collections::BTreeSet::from([start]);
    if dfs(
        g,
        m,
        start,
        false,
        Rat::zero(),
        &mut path,
        &mut used,
        max_len,
    ) {
        Some(path)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Adversarial enumeration.
// ---------------------------------------------------------------------------

/// All inclusion-maximal matchings `M` of `g` with
/// `w(M) >= (1-eps) * mu_w(g)`, in ascending lexicographic order. This is
/// the adversarial-choice driver: any of these is a legitimate output of a
/// `(1-eps)`-approximate solver. Exponential by design; budget-gated.
pub fn enumerate_approx_mwms(
    g: &DynamicGraph,
    eps: &Rat,
    budget: &OracleBudget,
) -> Result<Vec<Matching>, OracleError> {
    let active = g.active_vertices().len();
    if active > budget.max_vertices_general {
        return Err(OracleError::BudgetExceeded {
            vertices: active,
            budget: budget.max_vertices_general,
        });
    }
    let mu = mwm_exact_general_value(g, budget)?;
    let threshold = (Rat::one() - eps) * &mu;
    let edges: Vec<WeightedEdge> = g.edges().collect();
    let mut out = Vec::new();
    let mut current = Matching::new();

    fn recurse(
        edges: &[WeightedEdge],
        idx: usize,
        current: &mut Matching,
        threshold: &Rat,
        out: &mut Vec<Matching>,
    ) {
        if idx == edges.len() {
            // maximal iff no edge of the graph can extend `current`
            let maximal = edges
                .iter()
                .all(|e| current.covers(e.id.u) || current.covers(e.id.v) || current.contains(e.id));
            if maximal && current.total_weight() >= *threshold {
                out.push(current.clone());
            }
            return;
        }
        let e = &edges[idx];
        if !current.covers(e.id.u) && !current.covers(e.id.v) {
            current.add(e.clone()).unwrap();
            recurse(edges, idx + 1, current, threshold, out);
            current.remove(e.id).unwrap();
        }
        recurse(edges, idx + 1, current, threshold, out);
    }

    recurse(&edges, 0, &mut current, &threshold, &mut out);
    out.sort_by(crate::matching::lex_cmp);
    out.dedup_by(|a, b| a.id_vec() == b.id_vec());
    Ok(out)
}
