//! Half-open weight intervals and geometric weight partitions.

use crate::weight::{rat_pow, Rat};
use num::{One, Signed};

/// Half-open interval `[lo, hi)` with `0 < lo < hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightInterval {
    pub lo: Rat,
    pub hi: Rat,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IntervalError {
    #[error("interval [{lo}, {hi}) is empty or has non-positive bound")]
    Degenerate { lo: Rat, hi: Rat },
    #[error("epsilon {0} out of range (need 0 < eps <= 1/6)")]
    EpsilonOutOfRange(Rat),
    #[error("delta {0} must exceed 1")]
    DeltaOutOfRange(Rat),
    #[error("w_min {w_min} must be positive and at most w_max {w_max}")]
    BadWeightRange { w_min: Rat, w_max: Rat },
}

impl WeightInterval {
    pub fn new(lo: Rat, hi: Rat) -> Result<Self, IntervalError> {
        if !lo.is_positive() || lo >= hi {
            return Err(IntervalError::Degenerate { lo, hi });
        }
        Ok(WeightInterval { lo, hi })
    }

    pub fn contains(&self, w: &Rat) -> bool {
        *w >= self.lo && *w < self.hi
    }

    /// Pads `[lo, hi)` to `[eps*lo, hi/eps)`.
    pub fn padded(&self, eps: &Rat) -> WeightInterval {
        WeightInterval {
            lo: &self.lo * eps,
            hi: &self.hi / eps,
        }
    }

    /// Width ratio `hi / lo`.
    pub fn width(&self) -> Rat {
        &self.hi / &self.lo
    }
}

/// True if consecutive intervals satisfy the weight-gap condition
/// `lo_{i+1} >= factor * hi_i` (the intervals are `factor`-spread).
pub fn is_spread(intervals: &[WeightInterval], factor: &Rat) -> bool {
    intervals
        .windows(2)
        .all(|w| w[1].lo >= &w[0].hi * factor)
}

/// True if each interval satisfies `hi >= delta * lo` (`delta`-wide).
pub fn is_wide(intervals: &[WeightInterval], delta: &Rat) -> bool {
    intervals.iter().all(|iv| iv.hi >= &iv.lo * delta)
}

/// Ordered weight intervals with padding bookkeeping.
///
/// When `contiguous` is set the intervals form a weight partition
/// (`lo_{i+1} = hi_i`, covering the construction range).
#[derive(Debug, Clone)]
pub struct WeightPartition {
    pub intervals: Vec<WeightInterval>,
    /// Padded companion of each interval (`[eps*lo, hi/eps)`), present when
    /// the partition was built with padding.
    pub padded: Option<Vec<WeightInterval>>,
    pub delta: Rat,
    pub eps: Rat,
    pub contiguous: bool,
}

impl WeightPartition {
    /// Index of the interval containing `w`, with the top endpoint of the
    /// covered range assigned to the last interval (the intervals are
    /// half-open, so the exact upper boundary would otherwise be homeless).
    pub fn class_of(&self, w: &Rat) -> Option<usize> {
        for (i, iv) in self.intervals.iter().enumerate() {
            if iv.contains(w) {
                return Some(i);
            }
        }
        if let Some(last) = self.intervals.last() {
            if *w == last.hi && self.contiguous {
                return Some(self.intervals.len() - 1);
            }
        }
        None
    }

    /// Indices of padded intervals containing `w`.
    pub fn padded_classes_of(&self, w: &Rat) -> Vec<usize> {
        match &self.padded {
            Some(padded) => padded
                .iter()
                .enumerate()
                .filter(|(_, iv)| iv.contains(w))
                .map(|(i, _)| i)
                .collect(),
            None => self.class_of(w).into_iter().collect(),
        }
    }
}

/// Builds a covering `delta`-wide weight partition of `[w_min, w_max]`,
/// anchored at `w_min`: intervals `[w_min * delta^i, w_min * delta^(i+1))`.
/// With `pad` set, each interval is returned alongside its padded companion
/// `[eps*lo, hi/eps)`.
pub fn build_partition(
    w_min: Rat,
    w_max: Rat,
    delta: Rat,
    eps: Rat,
    pad: bool,
) -> Result<WeightPartition, IntervalError> {
    if !eps.is_positive() || eps > Rat::new(1.into(), 6.into()) {
        return Err(IntervalError::EpsilonOutOfRange(eps));
    }
    if delta <= Rat::one() {
        return Err(IntervalError::DeltaOutOfRange(delta));
    }
    if !w_min.is_positive() || w_min > w_max {
        return Err(IntervalError::BadWeightRange { w_min, w_max });
    }
    // Smallest k >= 1 with w_min * delta^k >= w_max, i.e. ceil(log_delta(w_max/w_min)).
    let ratio = &w_max / &w_min;
    let mut k = 1usize;
    let mut pow = delta.clone();
    while pow < ratio {
        pow *= &delta;
        k += 1;
    }
    let mut intervals = Vec::with_capacity(k);
    for i in 0..k {
        let lo = &w_min * rat_pow(&delta, i as i64);
        let hi = &w_min * rat_pow(&delta, i as i64 + 1);
        intervals.push(WeightInterval { lo, hi });
    }
    let padded = pad.then(|| intervals.iter().map(|iv| iv.padded(&eps)).collect());
    Ok(WeightPartition {
        intervals,
        padded,
        delta,
        eps,
        contiguous: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{rat, ratio};

    #[test]
    fn degenerate_range_single_interval() {
        let p = build_partition(rat(1), rat(1), rat(10), ratio(1, 10), false).unwrap();
        assert_eq!(p.intervals.len(), 1);
        assert_eq!(p.intervals[0], WeightInterval::new(rat(1), rat(10)).unwrap());
    }

    #[test]
    fn six_decades_with_padding() {
        // Independently derived: w in [1, 10^6], delta = 10 gives 6 intervals
        // [10^(i-1), 10^i) with padded companions [10^(i-1)/10, 10^(i+1)).
        let p = build_partition(rat(1), rat(1_000_000), rat(10), ratio(1, 10), true).unwrap();
        assert_eq!(p.intervals.len(), 6);
        let padded = p.padded.as_ref().unwrap();
        for i in 0..6 {
            let lo = rat_pow(&rat(10), i as i64);
            assert_eq!(p.intervals[i].lo, lo);
            assert_eq!(p.intervals[i].hi, &lo * rat(10));
            assert_eq!(padded[i].lo, &lo / rat(10));
            assert_eq!(padded[i].hi, &lo * rat(100));
        }
        // top endpoint clamps into the last class
        assert_eq!(p.class_of(&rat(1_000_000)), Some(5));
        assert_eq!(p.class_of(&rat(999_999)), Some(5));
        assert_eq!(p.class_of(&rat(1)), Some(0));
    }

    #[test]
    fn wide_postcondition() {
        let p = build_partition(rat(2), rat(5000), rat(7), ratio(1, 10), false).unwrap();
        assert!(is_wide(&p.intervals, &rat(7)));
        assert!(p.contiguous);
        for w in p.intervals.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
    }

    #[test]
    fn eps_out_of_range_rejected() {
        assert!(build_partition(rat(1), rat(10), rat(2), ratio(1, 5), false).is_err());
        assert!(build_partition(rat(1), rat(10), rat(2), rat(0), false).is_err());
    }

    #[test]
    fn padded_membership_count() {
        // With delta = 10 and eps = 1/10 an edge lands in at most
        // ceil(log_delta(1/eps^2)) + 1 = 3 padded intervals.
        let p = build_partition(rat(1), rat(1_000_000), rat(10), ratio(1, 10), true).unwrap();
        for w in [rat(1), rat(5), rat(99), rat(100), rat(12345), rat(999_999)] {
            let classes = p.padded_classes_of(&w);
            assert!(!classes.is_empty());
            assert!(classes.len() <= 3, "weight {w} in {} classes", classes.len());
        }
    }
}
