//! The weight-reduction framework: padded weight classes solved by
//! per-class inner solvers, aggregated by parity censuses and a
//! degree-two merge.
//!
//! Standard mode groups edges by `floor(log_{1/eps} w)` into classes of
//! three consecutive groups plus one guard group on each side, realizing
//! the `[eps*lo, hi/eps)` padding with class width `eps^-3` and per-class
//! aspect ratio `eps^-5`. Tree mode splits each class around its geometric
//! midpoint d more times, shrinking the aspect ratio the leaves see and
//! merging back up with degree-two solvers. Ultimate mode runs a 2-wide
//! partition whose padded classes have aspect `Theta(eps^-2)`, aggregates
//! the `ceil(log2(eps^-3)) + 1` residue groups with censuses, and merges
//! their union with the low-degree solver.
//!
//! Inner solvers always see weights divided by the lower end of their
//! padded interval, so they can assume the range `[1, aspect)`.

use crate::census::CensusState;
use crate::composer;
use crate::degree_two::DegreeTwoSolver;
use crate::graph::{DynamicGraph, EdgeId, UpdateEvent, UpdateKind, WeightedEdge};
use crate::intervals::WeightInterval;
use crate::low_degree::LowDegreeSolver;
use crate::matching::Matching;
use crate::oracle::OracleBudget;
use crate::solver::{DynamicMatching, MatchDelta, SolverError, SolverFactory, SolverInit};
use crate::weight::{floor_log, rat_pow, rat_to_f64, One, Rat, Signed};
use std::collections::BTreeMap;

/// Which aggregation pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameworkMode {
    Standard,
    /// Standard classes, each refined by a depth-d binary split tree.
    Tree(usize),
    /// 2-wide classes, g residue censuses, low-degree merge.
    Ultimate,
}

#[derive(Debug, Clone)]
pub struct FrameworkConfig {
    pub eps: Rat,
    pub mode: FrameworkMode,
    /// Upper bound on every weight the solver will observe (weights are
    /// required to stay in `[1, w_max]`; the harness pre-scales traces).
    pub w_max: Rat,
}

#[derive(Debug, thiserror::Error)]
pub enum FrameworkError {
    #[error("epsilon {0} out of range (need 0 < eps <= 1/6)")]
    BadEpsilon(Rat),
    #[error("weight {0} outside [1, w_max]")]
    WeightOutOfRange(Rat),
    #[error("event routed to no class")]
    Unroutable,
}

// ---------------------------------------------------------------------------
// Per-class engines: a scaled leaf solver, or a binary split node.
// ---------------------------------------------------------------------------

struct ScaledLeaf {
    solver: Box<dyn DynamicMatching>,
    scale: Rat,
    /// Mirror of the inner matching with original (unscaled) weights.
    matching: Matching,
}

impl ScaledLeaf {
    fn build(
        interval: &WeightInterval,
        edges: Vec<WeightedEdge>,
        eps: &Rat,
        factory: &dyn SolverFactory,
    ) -> Result<Self, SolverError> {
        let scale = interval.lo.clone();
        let scaled: Vec<WeightedEdge> = edges
            .iter()
            .map(|e| WeightedEdge {
                id: e.id,
                w: &e.w / &scale,
            })
            .collect();
        let solver = factory.build(SolverInit {
            edges: scaled,
            eps: eps.clone(),
            aspect_hint: interval.width(),
        })?;
        let mut matching = Matching::new();
        for e in solver.matching().edges() {
            matching
                .add(WeightedEdge {
                    id: e.id,
                    w: &e.w * &scale,
                })
                .expect("inner matching is a matching");
        }
        Ok(ScaledLeaf {
            solver,
            scale,
            matching,
        })
    }

    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        let scaled_ev = UpdateEvent {
            kind: ev.kind,
            edge: WeightedEdge {
                id: ev.edge.id,
                w: &ev.edge.w / &self.scale,
            },
            seq: ev.seq,
        };
        let delta = self.solver.apply(&scaled_ev)?;
        let mut out = MatchDelta::default();
        for e in delta.removed {
            out.removed.push(self.matching.remove(e.id)?);
        }
        for e in delta.added {
            let rescaled = WeightedEdge {
                id: e.id,
                w: &e.w * &self.scale,
            };
            self.matching.add(rescaled.clone())?;
            out.added.push(rescaled);
        }
        Ok(out)
    }
}

enum ClassEngine {
    Leaf(ScaledLeaf),
    Node {
        left_iv: WeightInterval,
        right_iv: WeightInterval,
        left: Box<ClassEngine>,
        right: Box<ClassEngine>,
        merger: DegreeTwoSolver,
        counts: BTreeMap<EdgeId, usize>,
    },
}

/// Rational near the geometric mean of the interval ends, clamped so both
/// padded halves stay valid subintervals. Exactness is irrelevant here;
/// the midpoint only balances the split.
fn geometric_midpoint(iv: &WeightInterval, eps: &Rat) -> Rat {
    let approx = (rat_to_f64(&iv.lo) * rat_to_f64(&iv.hi)).sqrt();
    let snapped = Rat::new((approx * 1024.0).round() as i128, 1024);
    let lo_bound = &iv.lo / eps; // left child [lo, m/eps) must reach past lo
    let hi_bound = &iv.hi * eps; // right child [m*eps, hi) must start below hi
    if snapped <= lo_bound * Rat::new(101.into(), 100.into()) {
        return &iv.lo / eps * Rat::new(2.into(), 1.into());
    }
    if snapped >= &hi_bound * Rat::new(99.into(), 100.into()) {
        return &iv.hi * eps / Rat::new(2.into(), 1.into());
    }
    snapped
}

impl ClassEngine {
    fn build(
        interval: &WeightInterval,
        depth: usize,
        edges: Vec<WeightedEdge>,
        eps: &Rat,
        factory: &dyn SolverFactory,
    ) -> Result<Self, SolverError> {
        // splitting below aspect 1/eps^2 buys nothing and can produce
        // degenerate children; stop early
        let splittable = interval.width() > eps.recip() * eps.recip();
        if depth == 0 || !splittable {
            return Ok(ClassEngine::Leaf(ScaledLeaf::build(
                interval, edges, eps, factory,
            )?));
        }
        let m = geometric_midpoint(interval, eps);
        let left_iv = WeightInterval {
            lo: interval.lo.clone(),
            hi: &m / eps,
        };
        let right_iv = WeightInterval {
            lo: &m * eps,
            hi: interval.hi.clone(),
        };
        let left_edges: Vec<WeightedEdge> = edges
            .iter()
            .filter(|e| left_iv.contains(&e.w))
            .cloned()
            .collect();
        let right_edges: Vec<WeightedEdge> = edges
            .iter()
            .filter(|e| right_iv.contains(&e.w))
            .cloned()
            .collect();
        let left = Box::new(ClassEngine::build(
            &left_iv, depth - 1, left_edges, eps, factory,
        )?);
        let right = Box::new(ClassEngine::build(
            &right_iv, depth - 1, right_edges, eps, factory,
        )?);
        let mut counts: BTreeMap<EdgeId, usize> = BTreeMap::new();
        let mut union: Vec<WeightedEdge> = Vec::new();
        for child in [&left, &right] {
            for e in child.matching().edges() {
                let c = counts.entry(e.id).or_insert(0);
                *c += 1;
                if *c == 1 {
                    union.push(e);
                }
            }
        }
        let merger = DegreeTwoSolver::from_edges(eps.clone(), union)?;
        Ok(ClassEngine::Node {
            left_iv,
            right_iv,
            left,
            right,
            merger,
            counts,
        })
    }

    fn matching(&self) -> &Matching {
        match self {
            ClassEngine::Leaf(l) => &l.matching,
            ClassEngine::Node { merger, .. } => merger.matching(),
        }
    }

    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        match self {
            ClassEngine::Leaf(l) => l.apply(ev),
            ClassEngine::Node {
                left_iv,
                right_iv,
                left,
                right,
                merger,
                counts,
            } => {
                // net deltas only: a child may add and drop the same edge
                // within one update, which must not reach the refcounts
                let mut removals: Vec<WeightedEdge> = Vec::new();
                let mut additions: Vec<WeightedEdge> = Vec::new();
                for (iv, child) in [(&*left_iv, left), (&*right_iv, right)] {
                    if iv.contains(&ev.edge.w) {
                        let before = child.matching().clone();
                        child.apply(ev)?;
                        let delta = MatchDelta::between(&before, child.matching());
                        removals.extend(delta.removed);
                        additions.extend(delta.added);
                    }
                }
                let before = merger.matching().clone();
                for e in removals {
                    let c = counts.get_mut(&e.id).expect("counted");
                    *c -= 1;
                    if *c == 0 {
                        counts.remove(&e.id);
                        merger.delete(e.id)?;
                    }
                }
                for e in additions {
                    let c = counts.entry(e.id).or_insert(0);
                    *c += 1;
                    if *c == 1 {
                        merger.insert(e)?;
                    }
                }
                Ok(MatchDelta::between(&before, merger.matching()))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Top-level pipeline.
// ---------------------------------------------------------------------------

struct ClassUnit {
    /// Padded interval the class engine covers (membership test).
    padded: WeightInterval,
    engine: ClassEngine,
    census_index: usize,
    slot: usize,
}

enum TopMerger {
    DegreeTwo(DegreeTwoSolver),
    LowDegree(Box<LowDegreeSolver>),
}

impl TopMerger {
    fn matching(&self) -> &Matching {
        match self {
            TopMerger::DegreeTwo(m) => m.matching(),
            TopMerger::LowDegree(m) => m.matching(),
        }
    }

    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        match self {
            TopMerger::DegreeTwo(m) => DynamicMatching::apply(m, ev),
            TopMerger::LowDegree(m) => m.apply(ev),
        }
    }
}

pub struct FrameworkSolver {
    cfg: FrameworkConfig,
    graph: DynamicGraph,
    classes: Vec<ClassUnit>,
    censuses: Vec<CensusState>,
    merger: TopMerger,
    merged_counts: BTreeMap<EdgeId, usize>,
    seq: u64,
}

/// Standard/tree class layout: group `j = floor(log_{1/eps} w)`, classes
/// `i = 1..=ceil((L+1)/3)` spanning groups `[3i-3, min(L, 3i-1)]` plus a
/// guard group on each side.
fn standard_classes(eps: &Rat, w_max: &Rat) -> Vec<(i64, i64)> {
    let base = eps.recip();
    let l = floor_log(w_max, &base).max(0);
    let count = ((l + 1) as usize).div_ceil(3);
    (1..=count)
        .map(|i| {
            let lo = 3 * i as i64 - 3;
            let hi = (3 * i as i64 - 1).min(l);
            (lo, hi)
        })
        .collect()
}

impl FrameworkSolver {
    pub fn new(
        initial: Vec<WeightedEdge>,
        cfg: FrameworkConfig,
        factory: &dyn SolverFactory,
        budget: &OracleBudget,
    ) -> Result<Self, SolverError> {
        if !cfg.eps.is_positive() || cfg.eps > Rat::new(1.into(), 6.into()) {
            return Err(SolverError::Config(
                FrameworkError::BadEpsilon(cfg.eps.clone()).to_string(),
            ));
        }
        for e in &initial {
            if e.w < Rat::one() || e.w > cfg.w_max {
                return Err(SolverError::Config(
                    FrameworkError::WeightOutOfRange(e.w.clone()).to_string(),
                ));
            }
        }
        let graph = DynamicGraph::from_edges(initial.clone())?;
        let eps = &cfg.eps;
        // class intervals (padded) and census wiring per mode
        let (padded_intervals, census_count, tree_depth): (Vec<WeightInterval>, usize, usize) =
            match cfg.mode {
                FrameworkMode::Standard | FrameworkMode::Tree(_) => {
                    let base = eps.recip();
                    let spans = standard_classes(eps, &cfg.w_max);
                    let ivs = spans
                        .iter()
                        .map(|(lo, hi)| WeightInterval {
                            lo: rat_pow(&base, lo - 1),
                            hi: rat_pow(&base, hi + 2),
                        })
                        .collect();
                    let depth = match cfg.mode {
                        FrameworkMode::Tree(d) => d,
                        _ => 0,
                    };
                    (ivs, 2, depth)
                }
                FrameworkMode::Ultimate => {
                    let two = Rat::from_integer(2);
                    let l2 = floor_log(&cfg.w_max, &two).max(0);
                    let g = composer::composition_phase_count(eps, &two);
                    let ivs = (0..=l2)
                        .map(|i| {
                            let lo = rat_pow(&two, i);
                            let hi = &lo * &two;
                            WeightInterval { lo, hi }.padded(eps)
                        })
                        .collect();
                    (ivs, g, 0)
                }
            };
        // build class engines
        let mut classes: Vec<ClassUnit> = Vec::new();
        let mut census_members: Vec<Vec<(WeightInterval, Matching)>> =
            vec![Vec::new(); census_count];
        for (idx, padded) in padded_intervals.iter().enumerate() {
            let edges: Vec<WeightedEdge> = graph
                .edges()
                .filter(|e| padded.contains(&e.w))
                .collect();
            let engine = ClassEngine::build(padded, tree_depth, edges, eps, factory)?;
            // residue wiring: standard uses parity of the 1-based class
            // index (odd -> census 0); ultimate uses index mod g
            let census_index = match cfg.mode {
                FrameworkMode::Standard | FrameworkMode::Tree(_) => idx % 2,
                FrameworkMode::Ultimate => idx % census_count,
            };
            let slot = census_members[census_index].len() + 1;
            census_members[census_index]
                .push((padded.clone(), engine.matching().clone()));
            classes.push(ClassUnit {
                padded: padded.clone(),
                engine,
                census_index,
                slot,
            });
        }
        let mut censuses = Vec::with_capacity(census_count);
        for members in census_members {
            let (ivs, ms): (Vec<WeightInterval>, Vec<Matching>) = members.into_iter().unzip();
            censuses.push(CensusState::init(ivs, ms, Some(eps))?);
        }
        // merge census outputs
        let mut merged_counts: BTreeMap<EdgeId, usize> = BTreeMap::new();
        let mut union: Vec<WeightedEdge> = Vec::new();
        for c in &censuses {
            for e in c.output().edges() {
                let n = merged_counts.entry(e.id).or_insert(0);
                *n += 1;
                if *n == 1 {
                    union.push(e);
                }
            }
        }
        let merger = match cfg.mode {
            FrameworkMode::Standard | FrameworkMode::Tree(_) => {
                TopMerger::DegreeTwo(DegreeTwoSolver::from_edges(eps.clone(), union)?)
            }
            FrameworkMode::Ultimate => TopMerger::LowDegree(Box::new(LowDegreeSolver::new(
                union,
                eps.clone(),
                census_count,
                cfg.w_max.clone(),
                budget.clone(),
            )?)),
        };
        Ok(FrameworkSolver {
            cfg,
            graph,
            classes,
            censuses,
            merger,
            merged_counts,
            seq: 0,
        })
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn mode(&self) -> FrameworkMode {
        self.cfg.mode
    }

    /// Classes whose padded interval contains `w` (the routing rule).
    pub fn classes_of(&self, w: &Rat) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.padded.contains(w))
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-class member matchings, for audits.
    pub fn class_matchings(&self) -> Vec<(WeightInterval, Matching)> {
        self.classes
            .iter()
            .map(|c| (c.padded.clone(), c.engine.matching().clone()))
            .collect()
    }

    pub fn census(&self, i: usize) -> &CensusState {
        &self.censuses[i]
    }

    pub fn census_count(&self) -> usize {
        self.censuses.len()
    }
}

impl DynamicMatching for FrameworkSolver {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        if ev.edge.w < Rat::one() || ev.edge.w > self.cfg.w_max {
            return Err(SolverError::Config(
                FrameworkError::WeightOutOfRange(ev.edge.w.clone()).to_string(),
            ));
        }
        self.graph.apply_update(ev)?;
        self.seq = ev.seq;
        let routes = self.classes_of(&ev.edge.w);
        if routes.is_empty() {
            return Err(SolverError::Config(FrameworkError::Unroutable.to_string()));
        }
        // route to class solvers, feed their net deltas through the censuses
        for idx in routes {
            let unit = &mut self.classes[idx];
            let before = unit.engine.matching().clone();
            unit.engine.apply(ev)?;
            let delta = MatchDelta::between(&before, unit.engine.matching());
            let census = &mut self.censuses[unit.census_index];
            for e in delta.removed {
                census.delete(unit.slot, e.id)?;
            }
            for e in delta.added {
                census.insert(unit.slot, e)?;
            }
        }
        // re-derive the merged union from the census outputs and apply the
        // net changes to the merger, deletions first (intra-update churn
        // must never produce a transient degree violation)
        let mut desired: BTreeMap<EdgeId, (usize, Rat)> = BTreeMap::new();
        for c in &self.censuses {
            for e in c.output().edges() {
                let entry = desired.entry(e.id).or_insert((0, e.w.clone()));
                entry.0 += 1;
            }
        }
        let before = self.merger.matching().clone();
        let stale: Vec<EdgeId> = self
            .merged_counts
            .keys()
            .filter(|id| !desired.contains_key(id))
            .copied()
            .collect();
        for id in stale {
            self.merged_counts.remove(&id);
            let w = self
                .graph
                .weight(id)
                .cloned()
                .unwrap_or_else(|| ev.edge.w.clone());
            let del = UpdateEvent {
                kind: UpdateKind::Delete,
                edge: WeightedEdge { id, w },
                seq: self.seq,
            };
            self.merger.apply(&del)?;
        }
        for (id, (count, w)) in desired {
            let known = self.merged_counts.insert(id, count);
            if known.is_none() {
                let ins = UpdateEvent {
                    kind: UpdateKind::Insert,
                    edge: WeightedEdge { id, w },
                    seq: self.seq,
                };
                self.merger.apply(&ins)?;
            }
        }
        Ok(MatchDelta::between(&before, self.merger.matching()))
    }

    fn matching(&self) -> &Matching {
        self.merger.matching()
    }
}
