//! Weighted dynamic graph under an edge-update stream.
//!
//! Graphs here are simple (at most one edge per vertex pair, no
//! self-loops) with strictly positive rational weights. Vertex ids are
//! dense naturals assigned by the harness; isolated vertices are never
//! garbage-collected.

use crate::weight::{Rat, Zero};
use num::Signed;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Dense vertex identifier.
pub type VertexId = u32;

/// Canonical identity of an undirected edge: always stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId {
    pub u: VertexId,
    pub v: VertexId,
}

impl EdgeId {
    /// Canonicalizes the endpoint order. Panics on a self-loop; use
    /// [`WeightedEdge::new`] for checked construction.
    pub fn new(a: VertexId, b: VertexId) -> Self {
        assert_ne!(a, b, "self-loop edge ({a},{a})");
        if a < b {
            EdgeId { u: a, v: b }
        } else {
            EdgeId { u: b, v: a }
        }
    }

    pub fn touches(&self, x: VertexId) -> bool {
        self.u == x || self.v == x
    }

    /// The endpoint that is not `x`. Panics if `x` is not an endpoint.
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            assert_eq!(x, self.v, "vertex {x} not on edge {self}");
            self.u
        }
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.u, self.v)
    }
}

/// An edge together with its positive rational weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedEdge {
    pub id: EdgeId,
    pub w: Rat,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop ({0},{0}) rejected")]
    SelfLoop(VertexId),
    #[error("non-positive weight {w} on edge {id}")]
    NonPositiveWeight { id: EdgeId, w: Rat },
    #[error("duplicate-insert: edge {0} already present")]
    DuplicateInsert(EdgeId),
    #[error("missing-delete: edge {0} not present")]
    MissingDelete(EdgeId),
    #[error("delete weight mismatch on {id}: stored {stored}, event {event}")]
    DeleteWeightMismatch { id: EdgeId, stored: Rat, event: Rat },
}

impl WeightedEdge {
    pub fn new(a: VertexId, b: VertexId, w: Rat) -> Result<Self, GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if !w.is_positive() {
            return Err(GraphError::NonPositiveWeight {
                id: EdgeId::new(a.min(b), a.max(b).max(a.min(b) + 1)),
                w,
            });
        }
        Ok(WeightedEdge {
            id: EdgeId::new(a, b),
            w,
        })
    }
}

/// Kind of a single dynamic update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    Insert,
    Delete,
}

/// One edge insertion or deletion, with a sequence number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateEvent {
    pub kind: UpdateKind,
    pub edge: WeightedEdge,
    pub seq: u64,
}

impl UpdateEvent {
    pub fn insert(a: VertexId, b: VertexId, w: Rat, seq: u64) -> Self {
        UpdateEvent {
            kind: UpdateKind::Insert,
            edge: WeightedEdge::new(a, b, w).expect("valid edge"),
            seq,
        }
    }

    pub fn delete(a: VertexId, b: VertexId, w: Rat, seq: u64) -> Self {
        UpdateEvent {
            kind: UpdateKind::Delete,
            edge: WeightedEdge::new(a, b, w).expect("valid edge"),
            seq,
        }
    }
}

/// The single changed edge reported by [`DynamicGraph::apply_update`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDelta {
    pub kind: UpdateKind,
    pub edge: WeightedEdge,
}

/// Mutable weighted undirected simple graph.
///
/// The edge index and per-vertex adjacency are kept in sync at all times;
/// [`DynamicGraph::check_consistency`] verifies this in tests.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DynamicGraph {
    vertex_count: u32,
    edges: BTreeMap<EdgeId, Rat>,
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
}

impl DynamicGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vertices(n: u32) -> Self {
        DynamicGraph {
            vertex_count: n,
            ..Self::default()
        }
    }

    pub fn from_edges<I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = WeightedEdge>,
    {
        let mut g = Self::new();
        for e in edges {
            g.insert_edge(e)?;
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> u32 {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
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

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj.get(&v).map_or(0, |s| s.len())
    }

    pub fn max_degree(&self) -> usize {
        self.adj.values().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Neighbors of `v` in ascending order.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    /// Edges in canonical (ascending id) order.
    pub fn edges(&self) -> impl Iterator<Item = WeightedEdge> + '_ {
        self.edges.iter().map(|(id, w)| WeightedEdge {
            id: *id,
            w: w.clone(),
        })
    }

    /// Vertices incident to at least one edge, ascending.
    pub fn active_vertices(&self) -> Vec<VertexId> {
        self.adj
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(v, _)| *v)
            .collect()
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> Rat {
        self.edges.values().fold(Rat::zero(), |a, w| a + w)
    }

    /// Largest edge weight divided by smallest, `None` on an empty graph.
    pub fn aspect_ratio(&self) -> Option<Rat> {
        let mut it = self.edges.values();
        let first = it.next()?.clone();
        let (mut lo, mut hi) = (first.clone(), first);
        for w in it {
            if *w < lo {
                lo = w.clone();
            }
            if *w > hi {
                hi = w.clone();
            }
        }
        Some(hi / lo)
    }

    pub fn insert_edge(&mut self, e: WeightedEdge) -> Result<(), GraphError> {
        if self.edges.contains_key(&e.id) {
            return Err(GraphError::DuplicateInsert(e.id));
        }
        self.vertex_count = self.vertex_count.max(e.id.v + 1);
        self.adj.entry(e.id.u).or_default().insert(e.id.v);
        self.adj.entry(e.id.v).or_default().insert(e.id.u);
        self.edges.insert(e.id, e.w);
        Ok(())
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<WeightedEdge, GraphError> {
        let w = self.edges.remove(&id).ok_or(GraphError::MissingDelete(id))?;
        self.adj.get_mut(&id.u).map(|s| s.remove(&id.v));
        self.adj.get_mut(&id.v).map(|s| s.remove(&id.u));
        Ok(WeightedEdge { id, w })
    }

    /// Applies one update event, validating it against the current graph.
    /// Deletions must name the stored weight exactly (the trace format
    /// carries it, so a mismatch indicates a corrupt trace).
    pub fn apply_update(&mut self, ev: &UpdateEvent) -> Result<GraphDelta, GraphError> {
        match ev.kind {
            UpdateKind::Insert => {
                self.insert_edge(ev.edge.clone())?;
            }
            UpdateKind::Delete => {
                let stored = self
                    .edges
                    .get(&ev.edge.id)
                    .ok_or(GraphError::MissingDelete(ev.edge.id))?;
                if *stored != ev.edge.w {
                    return Err(GraphError::DeleteWeightMismatch {
                        id: ev.edge.id,
                        stored: stored.clone(),
                        event: ev.edge.w.clone(),
                    });
                }
                self.remove_edge(ev.edge.id)?;
            }
        }
        Ok(GraphDelta {
            kind: ev.kind,
            edge: ev.edge.clone(),
        })
    }

    /// The subgraph of `self` restricted to edges with weight in `[lo, hi)`.
    pub fn restrict(&self, interval: &crate::intervals::WeightInterval) -> DynamicGraph {
        let mut g = DynamicGraph::with_vertices(self.vertex_count);
        for e in self.edges() {
            if interval.contains(&e.w) {
                g.insert_edge(e).expect("restricted edge is fresh");
            }
        }
        g
    }

    /// Verifies that adjacency and edge index agree. Test-support.
    pub fn check_consistency(&self) -> bool {
        for (id, _) in &self.edges {
            if !self.adj.get(&id.u).is_some_and(|s| s.contains(&id.v)) {
                return false;
            }
            if !self.adj.get(&id.v).is_some_and(|s| s.contains(&id.u)) {
                return false;
            }
        }
        let adj_pairs: usize = self.adj.values().map(|s| s.len()).sum();
        adj_pairs == 2 * self.edges.len()
    }

    /// Connected components over active vertices, each as a sorted vertex list.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in self.adj.keys() {
            if self.degree(start) == 0 || seen.contains(&start) {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen.insert(start);
            while let Some(v) = stack.pop() {
                comp.push(v);
                for u in self.neighbors(v) {
                    if seen.insert(u) {
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Attempts to 2-color the graph; returns the side of each active vertex
    /// or `None` if an odd cycle exists.
    pub fn bipartition(&self) -> Option<BTreeMap<VertexId, bool>> {
        let mut color: BTreeMap<VertexId, bool> = BTreeMap::new();
        for &start in self.adj.keys() {
            if self.degree(start) == 0 || color.contains_key(&start) {
                continue;
            }
            color.insert(start, false);
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                let cv = color[&v];
                for u in self.neighbors(v) {
                    match color.get(&u) {
                        Some(&cu) if cu == cv => return None,
                        Some(_) => {}
                        None => {
                            color.insert(u, !cv);
                            stack.push(u);
                        }
                    }
                }
            }
        }
        Some(color)
    }
}
