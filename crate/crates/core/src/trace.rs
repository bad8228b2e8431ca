//! Update-trace file format and trace generators.
//!
//! One record per line: `op u v w seq` with `op` one of `i`/`d` and the
//! weight written as a decimal rational. Round-trips are bit-exact: the
//! writer only emits strings the reader maps back to identical rationals.
//!
//! All generator randomness flows from a single seed through ChaCha8
//! (`rand_chacha::ChaCha8Rng`), so identical models yield identical traces
//! on every platform.

use crate::adversarial;
use crate::graph::{DynamicGraph, EdgeId, UpdateEvent, UpdateKind, VertexId, WeightedEdge};
use crate::weight::{format_rat, parse_rat, rat, ratio, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model: {0}")]
    BadModel(String),
}

pub fn write_trace<W: Write>(mut out: W, events: &[UpdateEvent]) -> Result<(), TraceError> {
    for ev in events {
        let op = match ev.kind {
            UpdateKind::Insert => 'i',
            UpdateKind::Delete => 'd',
        };
        writeln!(
            out,
            "{op} {} {} {} {}",
            ev.edge.id.u,
            ev.edge.id.v,
            format_rat(&ev.edge.w),
            ev.seq
        )?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<UpdateEvent>, TraceError> {
    let mut events = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(TraceError::Malformed {
                line: idx + 1,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let kind = match fields[0] {
            "i" => UpdateKind::Insert,
            "d" => UpdateKind::Delete,
            other => {
                return Err(TraceError::Malformed {
                    line: idx + 1,
                    msg: format!("unknown op `{other}`"),
                })
            }
        };
        let u: VertexId = fields[1].parse().map_err(|_| TraceError::Malformed {
            line: idx + 1,
            msg: format!("bad vertex `{}`", fields[1]),
        })?;
        let v: VertexId = fields[2].parse().map_err(|_| TraceError::Malformed {
            line: idx + 1,
            msg: format!("bad vertex `{}`", fields[2]),
        })?;
        let w = parse_rat(fields[3]).map_err(|e| TraceError::Malformed {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let seq: u64 = fields[4].parse().map_err(|_| TraceError::Malformed {
            line: idx + 1,
            msg: format!("bad seq `{}`", fields[4]),
        })?;
        let edge = WeightedEdge::new(u, v, w).map_err(|e| TraceError::Malformed {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        events.push(UpdateEvent { kind, edge, seq });
    }
    Ok(events)
}

pub fn write_trace_file(path: &std::path::Path, events: &[UpdateEvent]) -> Result<(), TraceError> {
    let f = std::fs::File::create(path)?;
    write_trace(std::io::BufWriter::new(f), events)
}

pub fn read_trace_file(path: &std::path::Path) -> Result<Vec<UpdateEvent>, TraceError> {
    let f = std::fs::File::open(path)?;
    read_trace(std::io::BufReader::new(f))
}

/// Weight distribution for generated traces. Decimal weights keep their
/// denominators at the stated power of ten so every arithmetic downstream
/// stays exactly representable.
#[derive(Debug, Clone)]
pub enum WeightDist {
    /// Uniform integers in `[lo, hi]`.
    UniformInt { lo: i128, hi: i128 },
    /// Uniform multiples of `10^-digits` in `[lo, hi]`.
    UniformDecimal { lo: i128, hi: i128, digits: u32 },
}

impl WeightDist {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Rat {
        match self {
            WeightDist::UniformInt { lo, hi } => rat(rng.gen_range(*lo..=*hi)),
            WeightDist::UniformDecimal { lo, hi, digits } => {
                let scale = 10i128.pow(*digits);
                let n = rng.gen_range(lo * scale..=hi * scale);
                ratio(n, scale)
            }
        }
    }
}

/// The family of generated traces.
#[derive(Debug, Clone)]
pub enum TraceKind {
    /// Mixed inserts and deletes over random vertex pairs.
    UniformRandom,
    /// Inserts only (the incremental model).
    InsertOnly,
    /// A generated initial graph, then deletions only (the decremental
    /// model: the build prefix carries seq numbers before the deletions).
    DeleteOnly,
    /// Insert-only with a width-`window` lifetime: event k > window also
    /// deletes the edge inserted at event k - window.
    SlidingWindow { window: usize },
    /// The disjoint weight-partition counterexample instance, insert-only.
    AdversarialGadget { levels: usize },
}

/// A deterministic trace model: everything needed to regenerate a trace.
#[derive(Debug, Clone)]
pub struct TraceModel {
    pub kind: TraceKind,
    pub n: u32,
    pub events: usize,
    pub weights: WeightDist,
    pub seed: u64,
    /// Restrict generated graphs to bipartite (edges cross vertex parity).
    pub bipartite: bool,
    /// Cap the degree of every vertex (e.g. 2 for degree-two solvers).
    pub max_degree: Option<usize>,
}

impl TraceModel {
    pub fn generate(&self) -> Result<Vec<UpdateEvent>, TraceError> {
        if self.n < 2 {
            return Err(TraceError::BadModel("need at least two vertices".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match &self.kind {
            TraceKind::AdversarialGadget { levels } => {
                let g = adversarial::gen_partition_counterexample(*levels)
                    .map_err(|e| TraceError::BadModel(e.to_string()))?;
                Ok(graph_as_inserts(&g.graph))
            }
            TraceKind::UniformRandom => self.gen_uniform(&mut rng, false),
            TraceKind::InsertOnly => self.gen_uniform(&mut rng, true),
            TraceKind::DeleteOnly => {
                // build prefix, then delete everything in random order
                let mut events = self.gen_uniform(&mut rng, true)?;
                let mut live: Vec<WeightedEdge> = events.iter().map(|e| e.edge.clone()).collect();
                let mut seq = events.len() as u64;
                while !live.is_empty() {
                    let idx = rng.gen_range(0..live.len());
                    let e = live.swap_remove(idx);
                    events.push(UpdateEvent {
                        kind: UpdateKind::Delete,
                        edge: e,
                        seq,
                    });
                    seq += 1;
                }
                Ok(events)
            }
            TraceKind::SlidingWindow { window } => {
                if *window == 0 {
                    return Err(TraceError::BadModel("window must be positive".into()));
                }
                let mut events = Vec::new();
                let mut shadow = DynamicGraph::new();
                let mut ring: Vec<WeightedEdge> = Vec::new();
                let mut seq = 0u64;
                let mut guard = 0usize;
                while ring.len() < self.events.min(*window)
                    || events.len() < self.events
                {
                    guard += 1;
                    if guard > 100 * self.events + 1000 {
                        break;
                    }
                    if events.len() >= self.events {
                        break;
                    }
                    if let Some(e) = self.sample_edge(&mut rng, &shadow) {
                        shadow.insert_edge(e.clone()).unwrap();
                        events.push(UpdateEvent {
                            kind: UpdateKind::Insert,
                            edge: e.clone(),
                            seq,
                        });
                        seq += 1;
                        ring.push(e);
                        if ring.len() > *window {
                            let old = ring.remove(0);
                            shadow.remove_edge(old.id).unwrap();
                            events.push(UpdateEvent {
                                kind: UpdateKind::Delete,
                                edge: old,
                                seq,
                            });
                            seq += 1;
                        }
                    }
                }
                Ok(events)
            }
        }
    }

    fn gen_uniform(
        &self,
        rng: &mut ChaCha8Rng,
        insert_only: bool,
    ) -> Result<Vec<UpdateEvent>, TraceError> {
        let mut events = Vec::new();
        let mut shadow = DynamicGraph::new();
        let mut live: Vec<WeightedEdge> = Vec::new();
        let mut seq = 0u64;
        let mut guard = 0usize;
        while events.len() < self.events {
            guard += 1;
            if guard > 200 * self.events + 2000 {
                return Err(TraceError::BadModel(
                    "model too constrained to produce enough events".into(),
                ));
            }
            let do_insert = insert_only || live.is_empty() || rng.gen_bool(0.6);
            if do_insert {
                if let Some(e) = self.sample_edge(rng, &shadow) {
                    shadow.insert_edge(e.clone()).unwrap();
                    live.push(e.clone());
                    events.push(UpdateEvent {
                        kind: UpdateKind::Insert,
                        edge: e,
                        seq,
                    });
                    seq += 1;
                }
            } else {
                let idx = rng.gen_range(0..live.len());
                let e = live.swap_remove(idx);
                shadow.remove_edge(e.id).unwrap();
                events.push(UpdateEvent {
                    kind: UpdateKind::Delete,
                    edge: e,
                    seq,
                });
                seq += 1;
            }
        }
        Ok(events)
    }

    fn sample_edge(&self, rng: &mut ChaCha8Rng, shadow: &DynamicGraph) -> Option<WeightedEdge> {
        for _ in 0..64 {
            let a = rng.gen_range(0..self.n);
            let b = rng.gen_range(0..self.n);
            if a == b {
                continue;
            }
            if self.bipartite && a % 2 == b % 2 {
                continue;
            }
            let id = EdgeId::new(a, b);
            if shadow.contains(id) {
                continue;
            }
            if let Some(cap) = self.max_degree {
                if shadow.degree(a) >= cap || shadow.degree(b) >= cap {
                    continue;
                }
            }
            let w = self.weights.sample(rng);
            return Some(WeightedEdge { id, w });
        }
        None
    }
}

/// The edges of a static graph as an insert-only event stream.
pub fn graph_as_inserts(g: &DynamicGraph) -> Vec<UpdateEvent> {
    g.edges()
        .enumerate()
        .map(|(i, edge)| UpdateEvent {
            kind: UpdateKind::Insert,
            edge,
            seq: i as u64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_only_is_insert_only() {
        let model = TraceModel {
            kind: TraceKind::InsertOnly,
            n: 10,
            events: 10,
            weights: WeightDist::UniformInt { lo: 1, hi: 9 },
            seed: 3,
            bipartite: false,
            max_degree: None,
        };
        let events = model.generate().unwrap();
        assert_eq!(events.len(), 10);
        assert!(events.iter().all(|e| e.kind == UpdateKind::Insert));
    }

    #[test]
    fn sliding_window_pairs_deletes() {
        let model = TraceModel {
            kind: TraceKind::SlidingWindow { window: 5 },
            n: 12,
            events: 30,
            weights: WeightDist::UniformInt { lo: 1, hi: 9 },
            seed: 4,
            bipartite: false,
            max_degree: None,
        };
        let events = model.generate().unwrap();
        // replay legality and window-width live set
        let mut g = DynamicGraph::new();
        let mut live = 0i64;
        for ev in &events {
            g.apply_update(ev).unwrap();
            live += if ev.kind == UpdateKind::Insert { 1 } else { -1 };
            assert!(live <= 5 + 1);
        }
    }

    #[test]
    fn delete_only_ends_empty() {
        let model = TraceModel {
            kind: TraceKind::DeleteOnly,
            n: 8,
            events: 12,
            weights: WeightDist::UniformInt { lo: 1, hi: 4 },
            seed: 9,
            bipartite: true,
            max_degree: None,
        };
        let events = model.generate().unwrap();
        let mut g = DynamicGraph::new();
        for ev in &events {
            g.apply_update(ev).unwrap();
        }
        assert!(g.is_empty());
        // the suffix after the build prefix is all deletions
        let first_delete = events
            .iter()
            .position(|e| e.kind == UpdateKind::Delete)
            .unwrap();
        assert!(events[first_delete..]
            .iter()
            .all(|e| e.kind == UpdateKind::Delete));
    }

    #[test]
    fn determinism_under_seed() {
        let model = TraceModel {
            kind: TraceKind::UniformRandom,
            n: 10,
            events: 50,
            weights: WeightDist::UniformDecimal { lo: 1, hi: 20, digits: 2 },
            seed: 77,
            bipartite: false,
            max_degree: Some(2),
        };
        let a = model.generate().unwrap();
        let b = model.generate().unwrap();
        assert_eq!(a, b);
        // degree cap respected throughout
        let mut g = DynamicGraph::new();
        for ev in &a {
            g.apply_update(ev).unwrap();
            assert!(g.max_degree() <= 2);
        }
    }

    #[test]
    fn round_trip_bytes() {
        let model = TraceModel {
            kind: TraceKind::UniformRandom,
            n: 9,
            events: 40,
            weights: WeightDist::UniformDecimal { lo: 1, hi: 50, digits: 1 },
            seed: 123,
            bipartite: false,
            max_degree: None,
        };
        let events = model.generate().unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &events).unwrap();
        let back = read_trace(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(events, back);
        let mut buf2 = Vec::new();
        write_trace(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2, "byte-identical re-serialization");
    }
}
