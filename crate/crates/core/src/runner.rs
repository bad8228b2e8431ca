//! Trace replay against any registered solver configuration.
//!
//! The framework stack requires weights in `[1, W]`; the runner pre-scales
//! every event by the trace's minimum weight (exactly, in rationals) and
//! scales reported matching weights back, so traces may use any positive
//! weights while the solvers see the normalized range.

use crate::census::CensusState;
use crate::degree_two::DegreeTwoSolver;
use crate::framework::{FrameworkConfig, FrameworkMode, FrameworkSolver};
use crate::graph::{DynamicGraph, UpdateEvent, WeightedEdge};
use crate::intervals::WeightInterval;
use crate::low_degree::LowDegreeSolver;
use crate::low_recourse::LowRecourseSolver;
use crate::matching::Matching;
use crate::oracle::OracleBudget;
use crate::report::{SolverReport, UpdateRecord};
use crate::solver::{
    exact_mwm_value_auto, DynamicMatching, MatchDelta, OracleFactory, OracleRebuildSolver,
    SolverError,
};
use crate::unfold::BdlSolver;
use crate::weight::{ceil_int, format_rat, is_integer, rat_pow, One, Rat, Signed};

/// A registered solver configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverSpec {
    /// Exact rebuild-from-scratch oracle (ratio 1 whenever auditable).
    Oracle,
    /// Dynamic degree-two solver (errors on degree-3 traces).
    DegreeTwo,
    /// Spread-class census over per-class exact rebuilds; traces must
    /// keep every weight inside a class (gaps hold no edges).
    CensusOnly,
    Framework(FrameworkMode),
    /// Low-recourse transformation wrapped around a named inner solver.
    LowRecourseWrapped(Box<SolverSpec>),
    /// Fully dynamic low-degree solver (degree cap from the trace).
    LowDegree,
    /// Bipartite unfolding reduction (integer weights required).
    Bdl,
}

impl SolverSpec {
    /// Parses `oracle`, `degree-two`, `census-only`, `framework/standard`,
    /// `framework/tree`, `framework/ultimate`, `low-degree`, `bdl`, and
    /// `low-recourse:<inner>`.
    pub fn parse(name: &str) -> Result<SolverSpec, SolverError> {
        if let Some(inner) = name.strip_prefix("low-recourse:") {
            return Ok(SolverSpec::LowRecourseWrapped(Box::new(SolverSpec::parse(
                inner,
            )?)));
        }
        match name {
            "oracle" => Ok(SolverSpec::Oracle),
            "degree-two" => Ok(SolverSpec::DegreeTwo),
            "census-only" => Ok(SolverSpec::CensusOnly),
            "framework/standard" => Ok(SolverSpec::Framework(FrameworkMode::Standard)),
            "framework/tree" => Ok(SolverSpec::Framework(FrameworkMode::Tree(0))),
            "framework/ultimate" => Ok(SolverSpec::Framework(FrameworkMode::Ultimate)),
            "low-degree" => Ok(SolverSpec::LowDegree),
            "bdl" => Ok(SolverSpec::Bdl),
            other => Err(SolverError::Config(format!("unknown solver `{other}`"))),
        }
    }

    pub fn canonical_name(&self, depth: usize) -> String {
        match self {
            SolverSpec::Oracle => "oracle".into(),
            SolverSpec::DegreeTwo => "degree-two".into(),
            SolverSpec::CensusOnly => "census-only".into(),
            SolverSpec::Framework(FrameworkMode::Standard) => "framework/standard".into(),
            SolverSpec::Framework(FrameworkMode::Tree(_)) => format!("framework/tree({depth})"),
            SolverSpec::Framework(FrameworkMode::Ultimate) => "framework/ultimate".into(),
            SolverSpec::LowRecourseWrapped(inner) => {
                format!("low-recourse:{}", inner.canonical_name(depth))
            }
            SolverSpec::LowDegree => "low-degree".into(),
            SolverSpec::Bdl => "bdl".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverSpec,
    pub eps: Rat,
    /// Tree depth for `framework/tree`.
    pub depth: usize,
    pub oracle_audit: bool,
    pub budget: OracleBudget,
    pub seed: u64,
}

impl RunConfig {
    fn echo(&self) -> String {
        format!(
            "solver={} eps={} audit={} seed={}",
            self.solver.canonical_name(self.depth),
            format_rat(&self.eps),
            self.oracle_audit,
            self.seed
        )
    }
}

/// Census-only pipeline: per-class exact rebuild solvers aggregated by one
/// locally greedy census. Classes are `[B^i, B^i / eps)` with `B = eps^-2`,
/// anchored at the scaled minimum weight 1.
struct CensusOnlySolver {
    intervals: Vec<WeightInterval>,
    class_solvers: Vec<OracleRebuildSolver>,
    census: CensusState,
}

impl CensusOnlySolver {
    fn new(eps: &Rat, w_max: &Rat, budget: &OracleBudget) -> Result<Self, SolverError> {
        let b = eps.recip() * eps.recip();
        let mut intervals = Vec::new();
        let mut lo = Rat::one();
        while &lo <= w_max {
            intervals.push(WeightInterval {
                lo: lo.clone(),
                hi: &lo / eps,
            });
            lo *= &b;
        }
        let class_solvers = intervals
            .iter()
            .map(|_| OracleRebuildSolver::new(vec![], budget.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let census = CensusState::init(
            intervals.clone(),
            vec![Matching::new(); intervals.len()],
            Some(eps),
        )?;
        Ok(CensusOnlySolver {
            intervals,
            class_solvers,
            census,
        })
    }

    fn class_of(&self, w: &Rat) -> Result<usize, SolverError> {
        self.intervals
            .iter()
            .position(|iv| iv.contains(w))
            .ok_or_else(|| {
                SolverError::Config(format!(
                    "weight {} falls in a census-only class gap",
                    format_rat(w)
                ))
            })
    }
}

impl DynamicMatching for CensusOnlySolver {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        let class = self.class_of(&ev.edge.w)?;
        let before = self.census.output().clone();
        let delta = self.class_solvers[class].apply(ev)?;
        for e in delta.removed {
            self.census.delete(class + 1, e.id)?;
        }
        for e in delta.added {
            self.census.insert(class + 1, e)?;
        }
        Ok(MatchDelta::between(&before, self.census.output()))
    }

    fn matching(&self) -> &Matching {
        self.census.output()
    }
}

enum AnySolver {
    Boxed(Box<dyn DynamicMatching>),
}

impl AnySolver {
    fn apply(&mut self, ev: &UpdateEvent) -> Result<MatchDelta, SolverError> {
        match self {
            AnySolver::Boxed(s) => s.apply(ev),
        }
    }

    fn matching(&self) -> &Matching {
        match self {
            AnySolver::Boxed(s) => s.matching(),
        }
    }
}

fn max_degree_over_trace(events: &[UpdateEvent]) -> Result<usize, SolverError> {
    let mut g = DynamicGraph::new();
    let mut best = 0usize;
    for ev in events {
        g.apply_update(ev)?;
        best = best.max(g.max_degree());
    }
    Ok(best)
}

fn build_solver(
    cfg: &RunConfig,
    spec: &SolverSpec,
    events: &[UpdateEvent],
    w_max: &Rat,
) -> Result<AnySolver, SolverError> {
    let budget = cfg.budget.clone();
    Ok(match spec {
        SolverSpec::Oracle => {
            AnySolver::Boxed(Box::new(OracleRebuildSolver::new(vec![], budget)?))
        }
        SolverSpec::DegreeTwo => {
            AnySolver::Boxed(Box::new(DegreeTwoSolver::new(cfg.eps.clone())))
        }
        SolverSpec::CensusOnly => AnySolver::Boxed(Box::new(CensusOnlySolver::new(
            &cfg.eps, w_max, &budget,
        )?)),
        SolverSpec::Framework(mode) => {
            let mode = match mode {
                FrameworkMode::Tree(_) => FrameworkMode::Tree(cfg.depth),
                m => *m,
            };
            AnySolver::Boxed(Box::new(FrameworkSolver::new(
                vec![],
                FrameworkConfig {
                    eps: cfg.eps.clone(),
                    mode,
                    w_max: w_max.clone(),
                },
                &OracleFactory {
                    budget: budget.clone(),
                },
                &budget,
            )?))
        }
        SolverSpec::LowRecourseWrapped(inner) => match inner.as_ref() {
            SolverSpec::Oracle => AnySolver::Boxed(Box::new(LowRecourseSolver::new(
                vec![],
                cfg.eps.clone(),
                w_max.clone(),
                &OracleFactory { budget },
            )?)),
            SolverSpec::Framework(mode) => {
                struct FwFactory {
                    mode: FrameworkMode,
                    w_max: Rat,
                    budget: OracleBudget,
                }
                impl crate::solver::SolverFactory for FwFactory {
                    fn build(
                        &self,
                        init: crate::solver::SolverInit,
                    ) -> Result<Box<dyn DynamicMatching>, SolverError> {
                        Ok(Box::new(FrameworkSolver::new(
                            init.edges,
                            FrameworkConfig {
                                eps: init.eps,
                                mode: self.mode,
                                w_max: self.w_max.clone(),
                            },
                            &OracleFactory {
                                budget: self.budget.clone(),
                            },
                            &self.budget,
                        )?))
                    }
                    fn name(&self) -> String {
                        "framework".into()
                    }
                }
                AnySolver::Boxed(Box::new(LowRecourseSolver::new(
                    vec![],
                    cfg.eps.clone(),
                    w_max.clone(),
                    &FwFactory {
                        mode: *mode,
                        w_max: w_max.clone(),
                        budget,
                    },
                )?))
            }
            other => {
                return Err(SolverError::Config(format!(
                    "low-recourse wrapping of `{}` is not registered",
                    other.canonical_name(cfg.depth)
                )))
            }
        },
        SolverSpec::LowDegree => {
            let cap = max_degree_over_trace(events)?.max(1);
            AnySolver::Boxed(Box::new(LowDegreeSolver::new(
                vec![],
                cfg.eps.clone(),
                cap,
                w_max.clone(),
                budget,
            )?))
        }
        SolverSpec::Bdl => {
            for ev in events {
                if !is_integer(&ev.edge.w) {
                    return Err(SolverError::Config(
                        "bdl requires integer weights".into(),
                    ));
                }
            }
            let w_cap = ceil_int(w_max).max(1);
            let mut shadow = DynamicGraph::new();
            for ev in events {
                shadow.apply_update(ev)?;
            }
            let bipartite = shadow.bipartition().is_some();
            let sides = bipartite.then(crate::oracle::SideLabels::new);
            AnySolver::Boxed(Box::new(BdlSolver::new(
                vec![],
                w_cap,
                cfg.eps.clone(),
                sides,
                cfg.budget.clone(),
            )?))
        }
    })
}

/// Replays a trace against the configured solver. Weights are divided by
/// the trace minimum before reaching the solver; reported weights are
/// scaled back, so ratios and recourse are unaffected.
pub fn run_trace(cfg: &RunConfig, events: &[UpdateEvent]) -> Result<SolverReport, SolverError> {
    let w_min = events
        .iter()
        .map(|e| e.edge.w.clone())
        .min()
        .unwrap_or_else(Rat::one);
    let scale = if w_min.is_positive() { w_min } else { Rat::one() };
    let scaled: Vec<UpdateEvent> = events
        .iter()
        .map(|ev| UpdateEvent {
            kind: ev.kind,
            edge: WeightedEdge {
                id: ev.edge.id,
                w: &ev.edge.w / &scale,
            },
            seq: ev.seq,
        })
        .collect();
    let w_max = scaled
        .iter()
        .map(|e| e.edge.w.clone())
        .max()
        .unwrap_or_else(Rat::one);
    let mut solver = build_solver(cfg, &cfg.solver, &scaled, &w_max)?;
    let mut shadow = DynamicGraph::new();
    let mut updates = Vec::with_capacity(scaled.len());
    for ev in &scaled {
        shadow.apply_update(ev)?;
        let start = std::time::Instant::now();
        let delta = solver.apply(ev)?;
        let wall = start.elapsed().as_nanos();
        let weight = solver.matching().total_weight() * &scale;
        let ratio = if cfg.oracle_audit {
            match exact_mwm_value_auto(&shadow, &cfg.budget) {
                Ok(mu) if mu.is_positive() => {
                    Some(solver.matching().total_weight() / mu)
                }
                Ok(_) => Some(Rat::one()),
                Err(_) => None,
            }
        } else {
            None
        };
        updates.push(UpdateRecord {
            seq: ev.seq,
            weight,
            recourse: delta.recourse(),
            wall_nanos: wall,
            ratio,
        });
    }
    Ok(SolverReport {
        config_echo: cfg.echo(),
        updates,
    })
}

/// Largest power of `1/eps` at or below `x`; exposed for CLI diagnostics.
pub fn scale_hint(eps: &Rat, x: &Rat) -> Rat {
    let base = eps.recip();
    let k = crate::weight::floor_log(x, &base);
    rat_pow(&base, k)
}
