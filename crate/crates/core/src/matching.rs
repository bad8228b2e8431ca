//! Matchings: vertex-disjoint edge sets with an exactly-maintained total weight.

use crate::graph::{EdgeId, VertexId, WeightedEdge};
use crate::weight::{Rat, Zero};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("vertex {vertex} already matched; cannot add {edge}")]
    VertexConflict { vertex: VertexId, edge: EdgeId },
    #[error("edge {0} already in matching")]
    DuplicateEdge(EdgeId),
    #[error("edge {0} not in matching")]
    MissingEdge(EdgeId),
}

/// A set of vertex-disjoint weighted edges. Iteration order is always
/// ascending edge id, so every consumer is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    edges: BTreeMap<EdgeId, Rat>,
    partner: BTreeMap<VertexId, VertexId>,
    total: Rat,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<I>(edges: I) -> Result<Self, MatchingError>
    where
        I: IntoIterator<Item = WeightedEdge>,
    {
        let mut m = Self::new();
        for e in edges {
            m.add(e)?;
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.edges.contains_key(&id)
    }

    pub fn weight(&self, id: EdgeId) -> Option<&Rat> {
        self.edges.get(&id)
    }

    /// Cached total weight; equals the recomputed sum exactly.
    pub fn total_weight(&self) -> Rat {
        self.total.clone()
    }

    /// The matched partner of `v`, if any.
    pub fn partner(&self, v: VertexId) -> Option<VertexId> {
        self.partner.get(&v).copied()
    }

    pub fn covers(&self, v: VertexId) -> bool {
        self.partner.contains_key(&v)
    }

    /// The matching edge covering `v`, if any.
    pub fn edge_at(&self, v: VertexId) -> Option<WeightedEdge> {
        let p = self.partner(v)?;
        let id = EdgeId::new(v, p);
        Some(WeightedEdge {
            id,
            w: self.edges[&id].clone(),
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = WeightedEdge> + '_ {
        self.edges.iter().map(|(id, w)| WeightedEdge {
            id: *id,
            w: w.clone(),
        })
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn add(&mut self, e: WeightedEdge) -> Result<(), MatchingError> {
        if self.edges.contains_key(&e.id) {
            return Err(MatchingError::DuplicateEdge(e.id));
        }
        for vertex in [e.id.u, e.id.v] {
            if self.partner.contains_key(&vertex) {
                return Err(MatchingError::VertexConflict { vertex, edge: e.id });
            }
        }
        self.partner.insert(e.id.u, e.id.v);
        self.partner.insert(e.id.v, e.id.u);
        self.total += &e.w;
        self.edges.insert(e.id, e.w);
        Ok(())
    }

    pub fn remove(&mut self, id: EdgeId) -> Result<WeightedEdge, MatchingError> {
        let w = self.edges.remove(&id).ok_or(MatchingError::MissingEdge(id))?;
        self.partner.remove(&id.u);
        self.partner.remove(&id.v);
        self.total -= &w;
        Ok(WeightedEdge { id, w })
    }

    /// Recomputes the weight sum from members; equals `total_weight` exactly.
    pub fn recomputed_weight(&self) -> Rat {
        self.edges.values().fold(Rat::zero(), |a, w| a + w)
    }

    /// `|self xor other|`: the recourse between two matchings.
    pub fn symmetric_difference_size(&self, other: &Matching) -> usize {
        let mut count = 0;
        for id in self.edges.keys() {
            if !other.edges.contains_key(id) {
                count += 1;
            }
        }
        for id in other.edges.keys() {
            if !self.edges.contains_key(id) {
                count += 1;
            }
        }
        count
    }

    /// Edges of `self xor other` in ascending id order.
    pub fn symmetric_difference(&self, other: &Matching) -> Vec<WeightedEdge> {
        let mut out: Vec<WeightedEdge> = Vec::new();
        for (id, w) in &self.edges {
            if !other.edges.contains_key(id) {
                out.push(WeightedEdge { id: *id, w: w.clone() });
            }
        }
        for (id, w) in &other.edges {
            if !self.edges.contains_key(id) {
                out.push(WeightedEdge { id: *id, w: w.clone() });
            }
        }
        out.sort_by_key(|e| e.id);
        out
    }

    /// Sorted edge-id vector, the canonical identity used for tie-breaking.
    pub fn id_vec(&self) -> Vec<EdgeId> {
        self.edges.keys().copied().collect()
    }
}

/// Compares two matchings as sorted edge-id sequences (lexicographic); the
/// tie-break order used across all oracles.
pub fn lex_cmp(a: &Matching, b: &Matching) -> std::cmp::Ordering {
    a.id_vec().cmp(&b.id_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::rat;

    #[test]
    fn disjointness_enforced() {
        let mut m = Matching::new();
        m.add(WeightedEdge::new(0, 1, rat(2)).unwrap()).unwrap();
        let err = m.add(WeightedEdge::new(1, 2, rat(3)).unwrap()).unwrap_err();
        assert_eq!(
            err,
            MatchingError::VertexConflict {
                vertex: 1,
                edge: EdgeId::new(1, 2)
            }
        );
    }

    #[test]
    fn total_tracks_membership() {
        let mut m = Matching::new();
        m.add(WeightedEdge::new(0, 1, rat(2)).unwrap()).unwrap();
        m.add(WeightedEdge::new(2, 3, rat(5)).unwrap()).unwrap();
        assert_eq!(m.total_weight(), rat(7));
        m.remove(EdgeId::new(0, 1)).unwrap();
        assert_eq!(m.total_weight(), rat(5));
        assert_eq!(m.total_weight(), m.recomputed_weight());
        assert_eq!(m.partner(2), Some(3));
        assert_eq!(m.partner(0), None);
    }

    #[test]
    fn symmetric_difference_counts() {
        let a = Matching::from_edges([
            WeightedEdge::new(0, 1, rat(1)).unwrap(),
            WeightedEdge::new(2, 3, rat(1)).unwrap(),
        ])
        .unwrap();
        let b = Matching::from_edges([WeightedEdge::new(2, 3, rat(1)).unwrap()]).unwrap();
        assert_eq!(a.symmetric_difference_size(&b), 1);
        assert_eq!(b.symmetric_difference_size(&a), 1);
        assert_eq!(a.symmetric_difference_size(&a), 0);
    }
}
