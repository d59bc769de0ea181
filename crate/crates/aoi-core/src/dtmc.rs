//! Analytic steady-state distributions for the two single-user age chains:
//! the pre-action age under always-update-on-arrival, and the post-action
//! age under a threshold policy.
//!
//! The post-action age is y = x + 1 − x·a·λ: it is 1 exactly when an update
//! met an arrival, and unlike the pre-action age its per-slot cost depends
//! on the state alone (1 + C at y = 1, y otherwise). That makes the chain's
//! stationary cost a plain sum, giving a route to the threshold-policy
//! average cost that is independent of the closed formula in
//! [`crate::whittle::average_cost`]. All infinite sums here use geometric
//! closed forms; nothing is truncated.

use crate::error::Error;
use crate::Result;

/// Stationary distribution of the pre-action age when every arrival is
/// transmitted: geometric, π_i = p(1−p)^{i−1}.
#[derive(Debug, Clone, Copy)]
pub struct GeometricAgeDistribution {
    p: f64,
}

impl GeometricAgeDistribution {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability { value: p });
        }
        Ok(GeometricAgeDistribution { p })
    }

    pub fn pmf(&self, age: u64) -> f64 {
        assert!(age >= 1);
        self.p * (1.0 - self.p).powi(age as i32 - 1)
    }

    /// Σ i π_i = 1/p.
    pub fn mean(&self) -> f64 {
        1.0 / self.p
    }
}

/// Mean age of the always-update chain, 1/p.
pub fn preaction_mean_age(p: f64) -> Result<f64> {
    Ok(GeometricAgeDistribution::new(p)?.mean())
}

/// Stationary distribution of the post-action age under the threshold
/// policy with threshold x̄: flat at 1/(x̄ + (1−p)/p) up to x̄, then a
/// geometric tail.
#[derive(Debug, Clone, Copy)]
pub struct PostActionDistribution {
    p: f64,
    threshold: u64,
}

impl PostActionDistribution {
    pub fn new(p: f64, threshold: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability { value: p });
        }
        if threshold < 1 {
            return Err(Error::InvalidThreshold { value: threshold });
        }
        Ok(PostActionDistribution { p, threshold })
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    /// The normalizing constant x̄ + (1−p)/p.
    fn norm(&self) -> f64 {
        self.threshold as f64 + (1.0 - self.p) / self.p
    }

    pub fn pmf(&self, y: u64) -> f64 {
        assert!(y >= 1);
        if y <= self.threshold {
            1.0 / self.norm()
        } else {
            (1.0 - self.p).powi((y - self.threshold) as i32) / self.norm()
        }
    }

    /// Total mass from the two closed-form pieces; equals 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        let head = self.threshold as f64 / self.norm();
        let tail = (1.0 - self.p) / self.p / self.norm();
        head + tail
    }

    /// Mass strictly above `y`, in closed form (for overflow buckets).
    pub fn tail_mass_above(&self, y: u64) -> f64 {
        if y < self.threshold {
            // flat remainder plus the whole geometric tail
            let flat = (self.threshold - y) as f64 / self.norm();
            flat + (1.0 - self.p) / self.p / self.norm()
        } else {
            let q = 1.0 - self.p;
            q.powi((y + 1 - self.threshold) as i32) / self.p / self.norm()
        }
    }

    /// E[Y] from closed-form head and tail sums.
    pub fn mean(&self) -> f64 {
        let x_bar = self.threshold as f64;
        let q = 1.0 - self.p;
        let head = x_bar * (x_bar + 1.0) / 2.0;
        let tail = x_bar * q / self.p + q / (self.p * self.p);
        (head + tail) / self.norm()
    }
}

/// Average cost of the post-action chain: (1 + C)·π_1 + Σ_{i≥2} i·π_i,
/// with every infinite sum taken in closed form.
///
/// Algebraically identical to [`crate::whittle::average_cost`], but computed
/// by a different route, so the two can cross-check each other.
pub fn dtmc_average_cost(p: f64, threshold: u64, cost: f64) -> Result<f64> {
    let dist = PostActionDistribution::new(p, threshold)?;
    let x_bar = threshold as f64;
    let q = 1.0 - p;
    let norm = dist.norm();
    let pi_1 = 1.0 / norm;
    // Σ_{i=2}^{x̄} i π_i ; empty when the threshold is 1.
    let head_from_two = (x_bar * (x_bar + 1.0) / 2.0 - 1.0) / norm;
    // Σ_{i>x̄} i π_i = ( x̄ q/p + q/p² ) / norm.
    let tail = (x_bar * q / p + q / (p * p)) / norm;
    Ok((1.0 + cost) * pi_1 + head_from_two + tail)
}

/// Histogram of observed post-action ages. Everything above
/// `threshold + 100` lands in one overflow bin.
#[derive(Debug, Clone)]
pub struct PostActionHistogram {
    cap: u64,
    counts: Vec<u64>,
    overflow: u64,
    total: u64,
    sum: u128,
}

/// Builds the histogram of a post-action age trace for a threshold policy.
pub fn empirical_distribution(
    ys: impl IntoIterator<Item = u64>,
    threshold: u64,
) -> PostActionHistogram {
    let cap = threshold + 100;
    let mut hist = PostActionHistogram {
        cap,
        counts: vec![0; cap as usize],
        overflow: 0,
        total: 0,
        sum: 0,
    };
    for y in ys {
        assert!(y >= 1, "post-action age must be at least 1");
        hist.total += 1;
        hist.sum += u128::from(y);
        if y <= cap {
            hist.counts[y as usize - 1] += 1;
        } else {
            hist.overflow += 1;
        }
    }
    hist
}

impl PostActionHistogram {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequency(&self, y: u64) -> f64 {
        assert!((1..=self.cap).contains(&y));
        self.counts[y as usize - 1] as f64 / self.total as f64
    }

    /// Total-variation distance to the analytic post-action distribution,
    /// with the analytic tail mass above the cap matched against the
    /// overflow bin.
    pub fn tv_distance(&self, dist: &PostActionDistribution) -> f64 {
        assert!(self.total > 0, "empty histogram");
        let t = self.total as f64;
        let mut sum = 0.0;
        for y in 1..=self.cap {
            sum += (self.counts[y as usize - 1] as f64 / t - dist.pmf(y)).abs();
        }
        sum += (self.overflow as f64 / t - dist.tail_mass_above(self.cap)).abs();
        sum / 2.0
    }

    /// Empirical average cost of the trace: (1 + C) whenever y = 1, y
    /// otherwise.
    pub fn mean_cost(&self, cost: f64) -> f64 {
        assert!(self.total > 0, "empty histogram");
        let updates = self.counts[0] as f64;
        (self.sum as f64 + cost * updates) / self.total as f64
    }
}
