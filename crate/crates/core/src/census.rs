//! Dynamic locally greedy census matching over k member matchings in
//! spread weight classes.
//!
//! A matching M is a locally greedy census matching of M_1..M_k when every
//! member edge left out of M touches some member edge of a strictly higher
//! class. The maintained characterization is sharper and local: an edge is
//! in M exactly when it sits in the highest occupied class of both of its
//! endpoints' neighborhoods. Updates touch O(1) edges, so the worst-case
//! recourse is 3.

use crate::graph::{EdgeId, VertexId, WeightedEdge};
use crate::intervals::{is_spread, WeightInterval};
use crate::matching::Matching;
use crate::weight::{Rat, Signed};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CensusError {
    #[error("class {0} out of range")]
    BadClass(usize),
    #[error("duplicate or unordered class intervals")]
    BadIntervals,
    #[error("classes are not (1/eps)-spread")]
    SpreadViolated,
    #[error("edge {id} weight {w} outside class {class} interval")]
    EdgeOutsideClass { id: EdgeId, w: Rat, class: usize },
    #[error("edge {0} already in member matching")]
    DuplicateMember(EdgeId),
    #[error("edge {0} already belongs to another class (members share one simple graph)")]
    DuplicateAcrossClasses(EdgeId),
    #[error("edge {0} not in member matching")]
    MissingMember(EdgeId),
    #[error("inserting {0} would break the member matching")]
    MemberConflict(EdgeId),
}

/// Edges entering and leaving the census output for one operation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeList {
    pub removed: Vec<WeightedEdge>,
    pub added: Vec<WeightedEdge>,
}

impl ChangeList {
    pub fn recourse(&self) -> usize {
        self.removed.len() + self.added.len()
    }
}

/// Per-vertex neighborhood: at most one incident member edge per class,
/// mirrored in a packed bit word when the class count fits a machine word.
/// Bit `i` is set iff class `k - i` is occupied, so the lowest set bit
/// names the highest occupied class; with more classes than bits the
/// ordered map's last entry serves instead.
#[derive(Debug, Clone, Default)]
struct NeighborSlots {
    by_class: BTreeMap<usize, VertexId>,
    bits: u64,
}

impl NeighborSlots {
    fn insert(&mut self, class: usize, partner: VertexId, k: usize) {
        let prev = self.by_class.insert(class, partner);
        debug_assert!(prev.is_none(), "one edge per class per vertex");
        if k <= 64 {
            self.bits |= 1u64 << (k - class);
        }
    }

    fn remove(&mut self, class: usize, k: usize) {
        self.by_class.remove(&class);
        if k <= 64 {
            self.bits &= !(1u64 << (k - class));
        }
    }

    /// Highest occupied class, via the packed word when available.
    fn highest(&self, k: usize) -> Option<usize> {
        if k <= 64 {
            if self.bits == 0 {
                return None;
            }
            let class = k - self.bits.trailing_zeros() as usize;
            debug_assert_eq!(
                self.by_class.last_key_value().map(|(c, _)| *c),
                Some(class)
            );
            Some(class)
        } else {
            self.by_class.last_key_value().map(|(c, _)| *c)
        }
    }

    fn partner_in(&self, class: usize) -> Option<VertexId> {
        self.by_class.get(&class).copied()
    }

    fn is_empty(&self) -> bool {
        self.by_class.is_empty()
    }
}

/// State of the dynamic census over classes `1..=k` (ascending weight).
#[derive(Debug, Clone)]
pub struct CensusState {
    intervals: Vec<WeightInterval>,
    members: Vec<Matching>,
    output: Matching,
    neighborhoods: BTreeMap<VertexId, NeighborSlots>,
    k: usize,
}

impl CensusState {
    /// Initializes from member matchings `M_1..M_k` in ascending class
    /// order. When `eps` is given, the class intervals must be
    /// `(1/eps)`-spread (the precondition of the approximation lemma).
    pub fn init(
        intervals: Vec<WeightInterval>,
        members: Vec<Matching>,
        eps: Option<&Rat>,
    ) -> Result<Self, CensusError> {
        if intervals.len() != members.len() {
            return Err(CensusError::BadIntervals);
        }
        for w in intervals.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(CensusError::BadIntervals);
            }
        }
        if let Some(eps) = eps {
            if !eps.is_positive() || !is_spread(&intervals, &eps.recip()) {
                return Err(CensusError::SpreadViolated);
            }
        }
        let mut all_ids: std::collections::BTreeSet<EdgeId> = Default::default();
        for (i, (iv, m)) in intervals.iter().zip(&members).enumerate() {
            for e in m.edges() {
                if !iv.contains(&e.w) {
                    return Err(CensusError::EdgeOutsideClass {
                        id: e.id,
                        w: e.w,
                        class: i + 1,
                    });
                }
                if !all_ids.insert(e.id) {
                    return Err(CensusError::DuplicateAcrossClasses(e.id));
                }
            }
        }
        let k = members.len();
        let mut state = CensusState {
            intervals,
            members,
            output: Matching::new(),
            neighborhoods: BTreeMap::new(),
            k,
        };
        // highest class first: add an edge when both endpoints are still
        // untouched, then record it in the neighborhoods
        for j in (1..=k).rev() {
            let edges: Vec<WeightedEdge> = state.members[j - 1].edges().collect();
            for e in edges {
                let u_empty = state
                    .neighborhoods
                    .get(&e.id.u)
                    .map_or(true, |s| s.is_empty());
                let v_empty = state
                    .neighborhoods
                    .get(&e.id.v)
                    .map_or(true, |s| s.is_empty());
                if u_empty && v_empty {
                    state.output.add(e.clone()).expect("init edges disjoint");
                }
                state.slot_insert(e.id, j);
            }
        }
        Ok(state)
    }

    pub fn class_count(&self) -> usize {
        self.k
    }

    pub fn output(&self) -> &Matching {
        &self.output
    }

    pub fn member(&self, class: usize) -> &Matching {
        &self.members[class - 1]
    }

    pub fn member_weight_sum(&self) -> Rat {
        self.members
            .iter()
            .fold(Rat::from_integer(0), |a, m| a + m.total_weight())
    }

    pub fn intervals(&self) -> &[WeightInterval] {
        &self.intervals
    }

    fn slot_insert(&mut self, id: EdgeId, class: usize) {
        let k = self.k;
        self.neighborhoods
            .entry(id.u)
            .or_default()
            .insert(class, id.v, k);
        self.neighborhoods
            .entry(id.v)
            .or_default()
            .insert(class, id.u, k);
    }

    fn slot_remove(&mut self, id: EdgeId, class: usize) {
        let k = self.k;
        if let Some(s) = self.neighborhoods.get_mut(&id.u) {
            s.remove(class, k);
        }
        if let Some(s) = self.neighborhoods.get_mut(&id.v) {
            s.remove(class, k);
        }
    }

    fn highest_class_at(&self, v: VertexId) -> Option<usize> {
        self.neighborhoods.get(&v).and_then(|s| s.highest(self.k))
    }

    /// The class of the member edge covering `v` in the output, if any.
    fn output_class_at(&self, v: VertexId) -> Option<(usize, EdgeId)> {
        let p = self.output.partner(v)?;
        let id = EdgeId::new(v, p);
        let class = self
            .members
            .iter()
            .position(|m| m.contains(id))
            .expect("output edge belongs to a member")
            + 1;
        Some((class, id))
    }

    /// Inserts `uv` into member class `j` and restores the invariant.
    pub fn insert(&mut self, class: usize, e: WeightedEdge) -> Result<ChangeList, CensusError> {
        if class == 0 || class > self.k {
            return Err(CensusError::BadClass(class));
        }
        if !self.intervals[class - 1].contains(&e.w) {
            return Err(CensusError::EdgeOutsideClass {
                id: e.id,
                w: e.w,
                class,
            });
        }
        if let Some(slots) = self.neighborhoods.get(&e.id.u) {
            for (c, partner) in &slots.by_class {
                if *partner == e.id.v {
                    return if *c == class {
                        Err(CensusError::DuplicateMember(e.id))
                    } else {
                        Err(CensusError::DuplicateAcrossClasses(e.id))
                    };
                }
            }
        }
        let member = &mut self.members[class - 1];
        if member.contains(e.id) {
            return Err(CensusError::DuplicateMember(e.id));
        }
        if member.covers(e.id.u) || member.covers(e.id.v) {
            return Err(CensusError::MemberConflict(e.id));
        }
        member.add(e.clone()).expect("checked above");
        self.slot_insert(e.id, class);

        let mut change = ChangeList::default();
        // drop lower-class matched edges at both endpoints
        for v in [e.id.u, e.id.v] {
            if let Some((c, id)) = self.output_class_at(v) {
                if c < class {
                    let removed = self.output.remove(id).expect("present");
                    change.removed.push(removed);
                }
            }
        }
        // add uv when it tops both neighborhoods
        let top_u = self.highest_class_at(e.id.u);
        let top_v = self.highest_class_at(e.id.v);
        if top_u == Some(class) && top_v == Some(class) {
            // endpoints must be free: a matched edge there would outrank uv
            if !self.output.covers(e.id.u) && !self.output.covers(e.id.v) {
                self.output.add(e.clone()).expect("endpoints free");
                change.added.push(e);
            }
        }
        Ok(change)
    }

    /// Deletes `uv` from member class `j` and restores the invariant.
    pub fn delete(&mut self, class: usize, id: EdgeId) -> Result<ChangeList, CensusError> {
        if class == 0 || class > self.k {
            return Err(CensusError::BadClass(class));
        }
        let member = &mut self.members[class - 1];
        if !member.contains(id) {
            return Err(CensusError::MissingMember(id));
        }
        member.remove(id).expect("checked above");
        self.slot_remove(id, class);

        let mut change = ChangeList::default();
        if self.output.contains(id) {
            change.removed.push(self.output.remove(id).expect("present"));
        }
        // each freed endpoint may promote its highest waiting edge
        for v in [id.u, id.v] {
            if let Some(c) = self.highest_class_at(v) {
                let partner = self.neighborhoods[&v].partner_in(c).expect("occupied");
                let cand = EdgeId::new(v, partner);
                if self.output.contains(cand) {
                    continue;
                }
                if self.highest_class_at(partner) == Some(c)
                    && self.neighborhoods[&partner].partner_in(c) == Some(v)
                    && !self.output.covers(v)
                    && !self.output.covers(partner)
                {
                    let w = self.members[c - 1]
                        .weight(cand)
                        .expect("candidate is a member edge")
                        .clone();
                    let e = WeightedEdge { id: cand, w };
                    self.output.add(e.clone()).expect("endpoints free");
                    change.added.push(e);
                }
            }
        }
        Ok(change)
    }

    /// The defining characterization: an edge is in the output iff it tops
    /// the neighborhoods of both endpoints. Test-support.
    pub fn check_characterization(&self) -> bool {
        for (class, member) in self.members.iter().enumerate() {
            let class = class + 1;
            for e in member.edges() {
                let tops = self.highest_class_at(e.id.u) == Some(class)
                    && self.highest_class_at(e.id.v) == Some(class)
                    && self.neighborhoods[&e.id.u].partner_in(class) == Some(e.id.v);
                if tops != self.output.contains(e.id) {
                    return false;
                }
            }
        }
        // and the output only holds member edges
        self.output.edges().all(|e| {
            self.members
                .iter()
                .any(|m| m.contains(e.id) && m.weight(e.id) == Some(&e.w))
        })
    }

    /// The locally greedy census property: every member edge outside the
    /// output touches a strictly higher-class member edge. Test-support.
    pub fn check_locally_greedy(&self) -> bool {
        for (ci, member) in self.members.iter().enumerate() {
            for e in member.edges() {
                if self.output.contains(e.id) {
                    continue;
                }
                let blocked = self.members.iter().enumerate().skip(ci + 1).any(|(_, mj)| {
                    mj.edges()
                        .any(|f| f.id.touches(e.id.u) || f.id.touches(e.id.v))
                });
                if !blocked {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{rat, ratio};

    fn interval(lo: i128, hi: i128) -> WeightInterval {
        WeightInterval::new(rat(lo), rat(hi)).unwrap()
    }

    fn two_class_state() -> CensusState {
        // M_1 = {ab} in class [1,2), M_2 = {bc} in class [100,200):
        // tracing the init loop (high class first) gives output {bc}
        let m1 = Matching::from_edges([WeightedEdge::new(0, 1, rat(1)).unwrap()]).unwrap();
        let m2 = Matching::from_edges([WeightedEdge::new(1, 2, rat(100)).unwrap()]).unwrap();
        CensusState::init(
            vec![interval(1, 2), interval(100, 200)],
            vec![m1, m2],
            Some(&ratio(1, 10)),
        )
        .unwrap()
    }

    #[test]
    fn init_two_classes() {
        let s = two_class_state();
        assert_eq!(s.output().id_vec(), vec![EdgeId::new(1, 2)]);
        assert!(s.check_characterization());
        assert!(s.check_locally_greedy());
    }

    #[test]
    fn init_disjoint_is_union() {
        let m1 = Matching::from_edges([WeightedEdge::new(0, 1, rat(1)).unwrap()]).unwrap();
        let m2 = Matching::from_edges([WeightedEdge::new(2, 3, rat(100)).unwrap()]).unwrap();
        let s = CensusState::init(
            vec![interval(1, 2), interval(100, 200)],
            vec![m1, m2],
            Some(&ratio(1, 10)),
        )
        .unwrap();
        assert_eq!(s.output().len(), 2);
    }

    #[test]
    fn init_empty() {
        let s = CensusState::init(vec![], vec![], None).unwrap();
        assert!(s.output().is_empty());
    }

    #[test]
    fn insert_higher_class_evicts() {
        // start with only ab matched in class 1, then insert bc in class 2:
        // ab leaves, bc enters (Alg. trace)
        let m1 = Matching::from_edges([WeightedEdge::new(0, 1, rat(1)).unwrap()]).unwrap();
        let mut s = CensusState::init(
            vec![interval(1, 2), interval(100, 200)],
            vec![m1, Matching::new()],
            Some(&ratio(1, 10)),
        )
        .unwrap();
        assert_eq!(s.output().id_vec(), vec![EdgeId::new(0, 1)]);
        let change = s
            .insert(2, WeightedEdge::new(1, 2, rat(100)).unwrap())
            .unwrap();
        assert_eq!(change.removed.len(), 1);
        assert_eq!(change.added.len(), 1);
        assert_eq!(s.output().id_vec(), vec![EdgeId::new(1, 2)]);
        assert!(s.check_characterization());
        assert!(change.recourse() <= 3);
    }

    #[test]
    fn insert_disjoint_enters_cleanly() {
        let mut s = two_class_state();
        let change = s
            .insert(1, WeightedEdge::new(4, 5, rat(1)).unwrap())
            .unwrap();
        assert!(change.removed.is_empty());
        assert_eq!(change.added.len(), 1);
        assert!(s.check_characterization());
    }

    #[test]
    fn insert_below_matched_class_not_added() {
        // u is matched at class 2; inserting at class 1 fails the
        // highest-class test and the output does not change
        let mut s = two_class_state();
        let change = s
            .insert(1, WeightedEdge::new(2, 4, rat(1)).unwrap())
            .unwrap();
        assert!(change.added.is_empty());
        assert!(change.removed.is_empty());
        assert!(s.check_characterization());
        assert!(s.check_locally_greedy());
    }

    #[test]
    fn delete_promotes_waiting_edge() {
        let mut s = two_class_state();
        let change = s.delete(2, EdgeId::new(1, 2)).unwrap();
        assert_eq!(change.removed.len(), 1);
        assert_eq!(change.added.len(), 1);
        assert_eq!(s.output().id_vec(), vec![EdgeId::new(0, 1)]);
        assert!(s.check_characterization());
    }

    #[test]
    fn delete_isolated_matched_edge() {
        let m1 = Matching::from_edges([WeightedEdge::new(0, 1, rat(1)).unwrap()]).unwrap();
        let mut s = CensusState::init(vec![interval(1, 2)], vec![m1], None).unwrap();
        let change = s.delete(1, EdgeId::new(0, 1)).unwrap();
        assert_eq!(change.removed.len(), 1);
        assert!(change.added.is_empty());
        assert!(s.output().is_empty());
    }

    #[test]
    fn delete_unmatched_member_updates_index() {
        // ab (class 1, unmatched because bc blocks it at b); deleting ab
        // leaves the output unchanged
        let mut s = two_class_state();
        let change = s.delete(1, EdgeId::new(0, 1)).unwrap();
        assert!(change.removed.is_empty());
        assert!(change.added.is_empty());
        assert_eq!(s.output().id_vec(), vec![EdgeId::new(1, 2)]);
        assert!(s.check_characterization());
    }

    #[test]
    fn preconditions_enforced() {
        let mut s = two_class_state();
        // duplicate member
        assert!(matches!(
            s.insert(2, WeightedEdge::new(1, 2, rat(100)).unwrap()),
            Err(CensusError::DuplicateMember(_))
        ));
        // member conflict: vertex 1 already covered by M_2
        assert!(matches!(
            s.insert(2, WeightedEdge::new(1, 5, rat(100)).unwrap()),
            Err(CensusError::MemberConflict(_))
        ));
        // wrong class interval
        assert!(matches!(
            s.insert(1, WeightedEdge::new(6, 7, rat(100)).unwrap()),
            Err(CensusError::EdgeOutsideClass { .. })
        ));
        // missing member on delete
        assert!(matches!(
            s.delete(1, EdgeId::new(8, 9)),
            Err(CensusError::MissingMember(_))
        ));
    }

    #[test]
    fn randomized_trace_invariants() {
        // a compressed version of the acceptance census run: random
        // inserts/deletes across k = 5 classes with the lemma's bound,
        // characterization, and recourse <= 3 after every step
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(11);
        let k = 5usize;
        let eps = ratio(1, 10);
        let mut intervals = Vec::new();
        for i in 0..k {
            let lo = crate::weight::rat_pow(&rat(11), i as i64);
            intervals.push(WeightInterval::new(lo.clone(), lo * ratio(11, 10)).unwrap());
        }
        let mut s = CensusState::init(
            intervals.clone(),
            vec![Matching::new(); k],
            Some(&eps),
        )
        .unwrap();
        let n = 14u32;
        for _ in 0..2000 {
            let class = rng.gen_range(1..=k);
            let member = s.member(class).clone();
            let do_insert = member.is_empty() || rng.gen_bool(0.6);
            if do_insert {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a == b {
                    continue;
                }
                let id = EdgeId::new(a, b);
                if member.covers(a) || member.covers(b) || member.contains(id) {
                    continue;
                }
                if (1..=k).any(|c| s.member(c).contains(id)) {
                    continue;
                }
                let iv = &intervals[class - 1];
                let w = &iv.lo + (&iv.hi - &iv.lo) * ratio(rng.gen_range(0..10), 10);
                let change = s.insert(class, WeightedEdge { id, w }).unwrap();
                assert!(change.recourse() <= 3);
            } else {
                let ids: Vec<EdgeId> = member.edge_ids().collect();
                let id = ids[rng.gen_range(0..ids.len())];
                let change = s.delete(class, id).unwrap();
                assert!(change.recourse() <= 3);
            }
            assert!(s.check_characterization());
            assert!(s.check_locally_greedy());
            // the lemma's bound, exact
            let bound = (Rat::from_integer(1) - rat(4) * &eps) * s.member_weight_sum();
            assert!(s.output().total_weight() >= bound);
        }
    }
}
