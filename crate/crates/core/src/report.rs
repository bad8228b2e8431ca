//! Per-run solver reports and the metrics file format.
//!
//! The metrics file is CSV with a fixed header, one row per update, and no
//! timing columns: identical config + trace + seed must produce
//! byte-identical files, so wall-clock readings live only in the printed
//! summary.

use crate::weight::{format_rat, Rat, Zero};
use std::io::Write;

/// One update's outcome.
#[derive(Debug, Clone)]
pub struct UpdateRecord {
    pub seq: u64,
    pub weight: Rat,
    pub recourse: usize,
    pub wall_nanos: u128,
    /// Exact `w(M) / mu_w(G)` when oracle auditing is on and the instance
    /// is within budget (1 when both are zero).
    pub ratio: Option<Rat>,
}

/// Full record of one trace replay.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub config_echo: String,
    pub updates: Vec<UpdateRecord>,
}

impl SolverReport {
    pub fn total_recourse(&self) -> usize {
        self.updates.iter().map(|u| u.recourse).sum()
    }

    /// Average output changes per update, exact.
    pub fn amortized_recourse(&self) -> Rat {
        if self.updates.is_empty() {
            return Rat::zero();
        }
        Rat::new(
            self.total_recourse() as i128,
            self.updates.len() as i128,
        )
    }

    pub fn min_ratio(&self) -> Option<Rat> {
        self.updates
            .iter()
            .filter_map(|u| u.ratio.clone())
            .min()
    }

    pub fn mean_ratio(&self) -> Option<Rat> {
        let ratios: Vec<&Rat> = self.updates.iter().filter_map(|u| u.ratio.as_ref()).collect();
        if ratios.is_empty() {
            return None;
        }
        let sum = ratios.iter().fold(Rat::zero(), |a, r| a + *r);
        Some(sum / Rat::from_integer(ratios.len() as i128))
    }

    pub fn total_wall_nanos(&self) -> u128 {
        self.updates.iter().map(|u| u.wall_nanos).sum()
    }

    /// Writes the deterministic metrics file.
    pub fn write_metrics<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "seq,weight,recourse,oracle_ratio")?;
        for u in &self.updates {
            let ratio = u.ratio.as_ref().map(format_rat).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{}",
                u.seq,
                format_rat(&u.weight),
                u.recourse,
                ratio
            )?;
        }
        Ok(())
    }

    pub fn write_metrics_file(&self, path: &std::path::Path) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_metrics(std::io::BufWriter::new(f))
    }

    /// Human summary (the only place timing shows up).
    pub fn summary(&self) -> String {
        let mut s = format!(
            "config: {}\nupdates: {}\namortized recourse: {}\n",
            self.config_echo,
            self.updates.len(),
            format_rat(&self.amortized_recourse()),
        );
        if let (Some(min), Some(mean)) = (self.min_ratio(), self.mean_ratio()) {
            s.push_str(&format!(
                "oracle ratio: min {} mean {}\n",
                format_rat(&min),
                format_rat(&mean)
            ));
        }
        s.push_str(&format!(
            "total wall time: {:.3} ms\n",
            self.total_wall_nanos() as f64 / 1e6
        ));
        s
    }
}
