//! Lower-bound instance generators and their certifiers.
//!
//! Both constructions stack three-edge path gadgets: a level-i gadget has
//! edge weights `(beta^i, beta^i, beta^(i+1))`, and its exact MWM takes
//! the two outer edges. A weight class that contains the two light edges
//! but not the heavy one can legitimately answer with the middle edge,
//! after which the heavy edge knocks it out and the gadget's contribution
//! collapses from `beta^i (1 + beta)` to `beta^(i+1)`.
//!
//! Ideal gadget counts are geometric and non-integral; we round to nearest
//! and every certificate recomputes totals from the actual instance, never
//! from the ideal formulas.

use crate::graph::{DynamicGraph, VertexId, WeightedEdge};
use crate::intervals::WeightInterval;
use crate::weight::{rat, rat_pow, round_int, One, Rat, Zero};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AdversarialError {
    #[error("need at least one level")]
    NoLevels,
    #[error("alpha {0} out of range (need 1/2 < alpha < 1)")]
    BadAlpha(Rat),
    #[error("partition does not cover the instance weights")]
    NonCoveringPartition,
    #[error("instance is not a disjoint union of 3-edge gadget paths")]
    MalformedInstance,
}

/// One gadget: vertex base `v..v+3`, edges `a = (v,v+1)`, `b = (v+1,v+2)`
/// of weight `beta^level` and `c = (v+2,v+3)` of weight `beta^(level+1)`.
#[derive(Debug, Clone)]
pub struct Gadget {
    pub level: usize,
    pub base_vertex: VertexId,
    pub light: Rat,
    pub heavy: Rat,
}

impl Gadget {
    pub fn standalone_mwm(&self) -> Rat {
        &self.light + &self.heavy
    }

    /// Loss when broken: standalone MWM minus the heavy edge alone.
    pub fn broken_loss(&self) -> Rat {
        self.light.clone()
    }
}

/// A generated gadget instance.
#[derive(Debug, Clone)]
pub struct GadgetInstance {
    pub graph: DynamicGraph,
    pub gadgets: Vec<Gadget>,
    pub beta: Rat,
    pub levels: usize,
    /// Exact MWM of the instance (sum of standalone gadget optima).
    pub mu: Rat,
}

impl GadgetInstance {
    pub fn count_at_level(&self, level: usize) -> usize {
        self.gadgets.iter().filter(|g| g.level == level).count()
    }
}

fn push_gadget(
    graph: &mut DynamicGraph,
    gadgets: &mut Vec<Gadget>,
    next_vertex: &mut VertexId,
    level: usize,
    light: &Rat,
    heavy: &Rat,
) {
    let v = *next_vertex;
    *next_vertex += 4;
    graph
        .insert_edge(WeightedEdge::new(v, v + 1, light.clone()).unwrap())
        .unwrap();
    graph
        .insert_edge(WeightedEdge::new(v + 1, v + 2, light.clone()).unwrap())
        .unwrap();
    graph
        .insert_edge(WeightedEdge::new(v + 2, v + 3, heavy.clone()).unwrap())
        .unwrap();
    gadgets.push(Gadget {
        level,
        base_vertex: v,
        light: light.clone(),
        heavy: heavy.clone(),
    });
}

/// The disjoint-weight-partition counterexample: for levels `i = 0..=N`,
/// `round(1.5^(N-i))` level-i gadgets with base 1.5.
pub fn gen_partition_counterexample(n: usize) -> Result<GadgetInstance, AdversarialError> {
    if n == 0 {
        return Err(AdversarialError::NoLevels);
    }
    let beta = Rat::new(3.into(), 2.into());
    let mut graph = DynamicGraph::new();
    let mut gadgets = Vec::new();
    let mut next_vertex: VertexId = 0;
    for level in 0..=n {
        let ideal = rat_pow(&beta, (n - level) as i64);
        let count = round_int(&ideal).max(1);
        let light = rat_pow(&beta, level as i64);
        let heavy = &light * &beta;
        for _ in 0..count {
            push_gadget(&mut graph, &mut gadgets, &mut next_vertex, level, &light, &heavy);
        }
    }
    let mu = gadgets
        .iter()
        .fold(Rat::zero(), |a, g| a + g.standalone_mwm());
    Ok(GadgetInstance {
        graph,
        gadgets,
        beta,
        levels: n,
        mu,
    })
}

/// Structural check: the instance is a vertex-disjoint union of 3-edge
/// paths whose weights follow the `(x, x, beta x)` gadget shape.
pub fn check_gadget_structure(inst: &GadgetInstance) -> bool {
    let comps = inst.graph.components();
    if comps.len() != inst.gadgets.len() {
        return false;
    }
    for comp in comps {
        if comp.len() != 4 {
            return false;
        }
    }
    inst.gadgets.iter().all(|g| {
        let v = g.base_vertex;
        inst.graph
            .weight(crate::graph::EdgeId::new(v, v + 1))
            .is_some_and(|w| *w == g.light)
            && inst
                .graph
                .weight(crate::graph::EdgeId::new(v + 1, v + 2))
                .is_some_and(|w| *w == g.light)
            && inst
                .graph
                .weight(crate::graph::EdgeId::new(v + 2, v + 3))
                .is_some_and(|w| *w == g.heavy)
    })
}

/// Verdict of [`certify_partition_loss`].
#[derive(Debug, Clone)]
pub struct PartitionLossCertificate {
    /// Levels broken by the partition, with the actual aggregate loss each.
    pub broken_levels: Vec<(usize, Rat)>,
    pub total_loss: Rat,
    pub mu: Rat,
    /// True when the adversarial loss exceeds `delta * mu`.
    pub exceeds_delta: bool,
    pub max_class_width: Rat,
    /// When the loss stays within `delta * mu`, the claim demands a class
    /// at least this wide; `None` when the loss already exceeds.
    pub required_width: Option<Rat>,
    pub width_requirement_met: bool,
}

/// Runs the adversarial per-class matchings against a covering partition.
/// A gadget level j is broken when the class holding weight `beta^j` does
/// not also hold `beta^(j+1)`; the in-class adversary then answers with
/// the middle edge, and the class above contributes the heavy edge, so the
/// gadget's union optimum drops by `light` per gadget.
pub fn certify_partition_loss(
    inst: &GadgetInstance,
    partition: &[WeightInterval],
    delta: &Rat,
) -> Result<PartitionLossCertificate, AdversarialError> {
    if !check_gadget_structure(inst) {
        return Err(AdversarialError::MalformedInstance);
    }
    let class_of = |w: &Rat| -> Option<usize> {
        partition.iter().position(|iv| iv.contains(w))
    };
    let mut broken: Vec<(usize, Rat)> = Vec::new();
    let mut total_loss = Rat::zero();
    for level in 0..=inst.levels {
        let light = rat_pow(&inst.beta, level as i64);
        let heavy = &light * &inst.beta;
        let (ci, cj) = match (class_of(&light), class_of(&heavy)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(AdversarialError::NonCoveringPartition),
        };
        if ci != cj {
            let count = inst.count_at_level(level) as i128;
            let loss = rat(count) * &light;
            total_loss += &loss;
            broken.push((level, loss));
        }
    }
    let exceeds = total_loss > delta * &inst.mu;
    let max_width = partition
        .iter()
        .map(|iv| iv.width())
        .max()
        .unwrap_or_else(Rat::one);
    // claim arithmetic on the actual instance: loss <= delta mu forces a
    // class of width >= 1.5^(N / (2.5 delta N + 1))
    let (required, met) = if exceeds {
        (None, true)
    } else {
        let n = rat(inst.levels as i128);
        let exponent = &n / (rat(5) / rat(2) * delta * &n + Rat::one());
        // rational exponent: compare via powers instead of evaluating
        // 1.5^exponent directly; width^denom >= 1.5^numer
        let numer = exponent.numer().unsigned_abs() as i64;
        let denom = *exponent.denom() as i64;
        let lhs = rat_pow(&max_width, denom);
        let rhs = rat_pow(&inst.beta, numer);
        let met = lhs >= rhs;
        (Some(rhs), met)
    };
    Ok(PartitionLossCertificate {
        broken_levels: broken,
        total_loss,
        mu: inst.mu.clone(),
        exceeds_delta: exceeds,
        max_class_width: max_width,
        required_width: required,
        width_requirement_met: met,
    })
}

/// The alpha-approximation counterexample (levels `0..=N-1`, base
/// `beta = alpha / (1 - alpha)`) together with its sparsifier: all middle
/// and heavy edges below the top level, all top-level middle edges, and an
/// alpha fraction (rounded) of the top-level heavy edges.
#[derive(Debug, Clone)]
pub struct AlphaInstance {
    pub inst: GadgetInstance,
    pub alpha: Rat,
    /// Edges of the sparsifier S.
    pub sparsifier: Vec<WeightedEdge>,
    /// Per-gadget flag: does S keep this gadget's heavy edge?
    pub keeps_heavy: Vec<bool>,
}

pub fn gen_alpha_counterexample(
    alpha: &Rat,
    n: usize,
) -> Result<AlphaInstance, AdversarialError> {
    if *alpha <= Rat::new(1.into(), 2.into()) || *alpha >= Rat::one() {
        return Err(AdversarialError::BadAlpha(alpha.clone()));
    }
    if n == 0 {
        return Err(AdversarialError::NoLevels);
    }
    let beta = alpha / (Rat::one() - alpha);
    // Scale every level count so the alpha fraction of top-level heavy
    // edges is an exact integer; with the bare rounded counts the top
    // level is too small to carry the fraction and the per-class
    // certificate is unattainable.
    let top_count_ideal = round_int(&beta).max(1);
    let multiplier = *(alpha * rat(top_count_ideal)).denom();
    let mut graph = DynamicGraph::new();
    let mut gadgets = Vec::new();
    let mut next_vertex: VertexId = 0;
    for level in 0..n {
        let ideal = rat_pow(&beta, (n - level) as i64);
        let count = round_int(&ideal).max(1) * multiplier;
        let light = rat_pow(&beta, level as i64);
        let heavy = &light * &beta;
        for _ in 0..count {
            push_gadget(&mut graph, &mut gadgets, &mut next_vertex, level, &light, &heavy);
        }
    }
    let mu = gadgets
        .iter()
        .fold(Rat::zero(), |a, g| a + g.standalone_mwm());
    let inst = GadgetInstance {
        graph,
        gadgets,
        beta,
        levels: n - 1,
        mu,
    };
    // sparsifier: b_i, c_i for i <= N-2; b_{N-1} always; an exact alpha
    // fraction of c_{N-1} (integral by the count multiplier)
    let top = n - 1;
    let top_count = inst.count_at_level(top) as i128;
    let keep = alpha * rat(top_count);
    debug_assert!(crate::weight::is_integer(&keep));
    let keep_heavy_top = keep.to_integer().clamp(0, top_count);
    let mut sparsifier = Vec::new();
    let mut keeps_heavy = Vec::with_capacity(inst.gadgets.len());
    let mut top_seen = 0i128;
    for g in &inst.gadgets {
        let v = g.base_vertex;
        sparsifier.push(WeightedEdge::new(v + 1, v + 2, g.light.clone()).unwrap());
        let keep = if g.level < top {
            true
        } else {
            top_seen += 1;
            top_seen <= keep_heavy_top
        };
        if keep {
            sparsifier.push(WeightedEdge::new(v + 2, v + 3, g.heavy.clone()).unwrap());
        }
        keeps_heavy.push(keep);
    }
    Ok(AlphaInstance {
        inst,
        alpha: alpha.clone(),
        sparsifier,
        keeps_heavy,
    })
}

/// Certificate of the alpha-approximation claim on a concrete instance.
#[derive(Debug, Clone)]
pub struct AlphaCertificate {
    /// Per tested class: (interval, mu of the class, best S-internal
    /// matching weight in the class, passes alpha).
    pub per_class: Vec<(WeightInterval, Rat, Rat, bool)>,
    pub mu_sparsifier: Rat,
    pub mu_whole: Rat,
    pub ratio: Rat,
    /// `alpha - ratio_gap` per the proof's formula; the ratio must fall
    /// strictly below `alpha - delta`.
    pub delta: Rat,
    pub ratio_below_threshold: bool,
}

impl AlphaInstance {
    /// Best matching weight within `S` restricted to `iv`, per gadget:
    /// middle and heavy conflict, so each gadget contributes the heavier
    /// in-class survivor.
    fn sparsifier_class_weight(&self, iv: &WeightInterval) -> Rat {
        let mut total = Rat::zero();
        for (g, keep) in self.inst.gadgets.iter().zip(&self.keeps_heavy) {
            let b_in = iv.contains(&g.light);
            let c_in = *keep && iv.contains(&g.heavy);
            if c_in {
                total += &g.heavy;
            } else if b_in {
                total += &g.light;
            }
        }
        total
    }

    /// Exact per-class optimum of the full instance: each gadget
    /// contributes its best in-class matching (`a + c` when both weights
    /// are in class, else the single best in-class edge).
    fn class_mu(&self, iv: &WeightInterval) -> Rat {
        let mut total = Rat::zero();
        for g in &self.inst.gadgets {
            let light_in = iv.contains(&g.light);
            let heavy_in = iv.contains(&g.heavy);
            total += match (light_in, heavy_in) {
                (true, true) => g.standalone_mwm(),
                (true, false) => g.light.clone(),
                (false, true) => g.heavy.clone(),
                (false, false) => Rat::zero(),
            };
        }
        total
    }

    /// Max matching weight inside the whole sparsifier.
    pub fn mu_sparsifier(&self) -> Rat {
        let mut total = Rat::zero();
        for (g, keep) in self.inst.gadgets.iter().zip(&self.keeps_heavy) {
            total += if *keep { g.heavy.clone() } else { g.light.clone() };
        }
        total
    }

    /// Runs the per-class alpha-approximation audit over the dyadic
    /// classes spanned by the instance (base `beta`), plus the final
    /// ratio comparison from the proof's formula.
    pub fn certify(&self, delta: &Rat) -> AlphaCertificate {
        let n_levels = self.inst.levels + 1;
        let mut per_class = Vec::new();
        // beta-adic classes [beta^i, beta^(i+1)) for i = 0..=N; none of
        // them contains the whole weight range
        for i in 0..=n_levels {
            let lo = rat_pow(&self.inst.beta, i as i64);
            let hi = &lo * &self.inst.beta;
            let iv = WeightInterval::new(lo, hi).unwrap();
            let mu_class = self.class_mu(&iv);
            let s_weight = self.sparsifier_class_weight(&iv);
            let pass = s_weight >= &self.alpha * &mu_class;
            per_class.push((iv, mu_class, s_weight, pass));
        }
        let mu_sparsifier = self.mu_sparsifier();
        let mu_whole = self.inst.mu.clone();
        let ratio = &mu_sparsifier / &mu_whole;
        let threshold = &self.alpha - delta;
        AlphaCertificate {
            per_class,
            mu_sparsifier,
            mu_whole,
            ratio: ratio.clone(),
            delta: delta.clone(),
            ratio_below_threshold: ratio < threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, OracleBudget};
    use crate::weight::ratio;

    #[test]
    fn small_counterexample_counts() {
        // N = 1: levels 0 and 1 with counts round(1.5) = 2 and 1
        let inst = gen_partition_counterexample(1).unwrap();
        assert_eq!(inst.count_at_level(0), 2);
        assert_eq!(inst.count_at_level(1), 1);
        assert_eq!(inst.gadgets.len(), 3);
        assert!(check_gadget_structure(&inst));
    }

    #[test]
    fn standalone_mwm_matches_oracle() {
        // every gadget's optimum is beta^i * 2.5 for beta = 1.5
        let inst = gen_partition_counterexample(3).unwrap();
        let budget = OracleBudget::default();
        for g in inst.gadgets.iter().take(6) {
            let mut sub = DynamicGraph::new();
            let v = g.base_vertex;
            for (a, b) in [(v, v + 1), (v + 1, v + 2), (v + 2, v + 3)] {
                let id = crate::graph::EdgeId::new(a, b);
                sub.insert_edge(WeightedEdge {
                    id,
                    w: inst.graph.weight(id).unwrap().clone(),
                })
                .unwrap();
            }
            let m = oracle::mwm_exact_general(&sub, &budget).unwrap();
            assert_eq!(m.total_weight(), g.standalone_mwm());
            assert_eq!(
                g.standalone_mwm(),
                rat_pow(&inst.beta, g.level as i64) * ratio(5, 2)
            );
        }
        // and the instance optimum is the gadget sum
        let mu_direct: Rat = inst
            .gadgets
            .iter()
            .fold(Rat::zero(), |a, g| a + g.standalone_mwm());
        assert_eq!(inst.mu, mu_direct);
    }

    #[test]
    fn broken_loss_per_level() {
        // per-gadget loss when broken is light = 1.5^j = 2.5*1.5^j - 1.5^(j+1)
        let inst = gen_partition_counterexample(4).unwrap();
        for g in &inst.gadgets {
            assert_eq!(
                g.broken_loss(),
                g.standalone_mwm() - &g.heavy
            );
        }
    }

    #[test]
    fn single_class_partition_passes() {
        let inst = gen_partition_counterexample(5).unwrap();
        let all = WeightInterval::new(rat(1) / rat(2), rat_pow(&inst.beta, 7)).unwrap();
        let cert = certify_partition_loss(&inst, &[all], &ratio(1, 25)).unwrap();
        assert!(cert.broken_levels.is_empty());
        assert_eq!(cert.total_loss, rat(0));
        assert!(!cert.exceeds_delta);
        assert!(cert.width_requirement_met);
    }

    #[test]
    fn narrow_partition_loses() {
        // every level in its own class: all levels break except the top
        let inst = gen_partition_counterexample(6).unwrap();
        let mut classes = Vec::new();
        for i in 0..=7i64 {
            classes.push(
                WeightInterval::new(
                    rat_pow(&inst.beta, i) * ratio(99, 100),
                    rat_pow(&inst.beta, i + 1) * ratio(99, 100),
                )
                .unwrap(),
            );
        }
        let delta = ratio(1, 25);
        let cert = certify_partition_loss(&inst, &classes, &delta).unwrap();
        assert!(cert.exceeds_delta, "loss {} mu {}", cert.total_loss, cert.mu);
        // per-gadget drop equals the overview gadget behavior at level 0:
        // union optimum 1.5 instead of 2.5
        assert!(cert.broken_levels.iter().any(|(l, _)| *l == 0));
    }

    #[test]
    fn alpha_two_thirds_beta_two() {
        let alpha = ratio(2, 3);
        let a = gen_alpha_counterexample(&alpha, 6).unwrap();
        assert_eq!(a.inst.beta, rat(2));
        // counts stay proportional to beta^(N-i) (times the fraction
        // multiplier 3 for alpha = 2/3)
        assert_eq!(a.inst.count_at_level(0), 192);
        assert_eq!(a.inst.count_at_level(5), 6);
        // the kept top-level heavy edges are exactly an alpha fraction
        let kept = a
            .inst
            .gadgets
            .iter()
            .zip(&a.keeps_heavy)
            .filter(|(g, k)| g.level == 5 && **k)
            .count();
        assert_eq!(kept, 4);
        assert!(check_gadget_structure(&a.inst));
    }

    #[test]
    fn alpha_certificate_holds_at_n6() {
        // delta = 1/63: N = floor(1/(9 delta) - 1) = 6 per the proof
        let alpha = ratio(2, 3);
        let a = gen_alpha_counterexample(&alpha, 6).unwrap();
        let delta = ratio(1, 63);
        let cert = a.certify(&delta);
        for (iv, mu_class, s_weight, pass) in &cert.per_class {
            assert!(
                pass,
                "class [{}, {}): S gives {} of {}",
                iv.lo, iv.hi, s_weight, mu_class
            );
        }
        assert!(
            cert.ratio_below_threshold,
            "ratio {} vs alpha - delta",
            cert.ratio
        );
        // symbolic inequality alpha - (alpha - alpha^2 - (1-alpha)^2)/N < alpha - delta
        let gap = &alpha - &alpha * &alpha - (Rat::one() - &alpha) * (Rat::one() - &alpha);
        let ideal_ratio = &alpha - &gap / rat(6);
        assert!(ideal_ratio < &alpha - &delta);
    }

    #[test]
    fn sparsifier_class_checks_against_enumeration() {
        // the per-class S-internal optimum from the analytic form matches
        // brute-force enumeration on a tiny instance
        let alpha = ratio(2, 3);
        let a = gen_alpha_counterexample(&alpha, 2).unwrap();
        let budget = OracleBudget::default();
        for i in 0..=2i64 {
            let lo = rat_pow(&a.inst.beta, i);
            let hi = &lo * &a.inst.beta;
            let iv = WeightInterval::new(lo, hi).unwrap();
            // build S restricted to the class and solve exactly per gadget
            let mut total = Rat::zero();
            for (g, keep) in a.inst.gadgets.iter().zip(&a.keeps_heavy) {
                let mut sub = DynamicGraph::new();
                let v = g.base_vertex;
                let mut add = |x: VertexId, y: VertexId, w: &Rat| {
                    if iv.contains(w) {
                        sub.insert_edge(WeightedEdge::new(x, y, w.clone()).unwrap())
                            .unwrap();
                    }
                };
                add(v + 1, v + 2, &g.light);
                if *keep {
                    add(v + 2, v + 3, &g.heavy);
                }
                if !sub.is_empty() {
                    total += oracle::mwm_exact_general_value(&sub, &budget).unwrap();
                }
            }
            assert_eq!(total, a.sparsifier_class_weight(&iv));
        }
    }
}
