//! Seeded Bernoulli arrival process, i.i.d. over slots and across users.
//!
//! Each user draws from its own ChaCha8 stream keyed by the process seed, so
//! adding a user to a configuration never perturbs any other user's arrival
//! sequence. Two processes with equal seeds and probabilities produce
//! bit-identical flag sequences, which is what makes common-random-number
//! scheduler comparisons possible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::types::ArrivalFlag;
use crate::Result;

/// Immutable description of the arrival process: per-user probabilities in
/// (0, 1] and a 64-bit seed.
///
/// p = 1 is allowed (deterministic arrivals); p = 0 is rejected because the
/// single-user chain formulas divide by p.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProcess {
    probabilities: Vec<f64>,
    seed: u64,
}

impl ArrivalProcess {
    pub fn new(probabilities: Vec<f64>, seed: u64) -> Result<Self> {
        for &p in &probabilities {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidProbability { value: p });
            }
        }
        Ok(ArrivalProcess {
            probabilities,
            seed,
        })
    }

    pub fn num_users(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Starts a sampler at slot 0. Replay is re-seeding: a fresh sampler from
    /// the same process yields the same sequence.
    pub fn sampler(&self) -> ArrivalSampler {
        let rngs = (0..self.probabilities.len() as u64)
            .map(|user| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(user + 1);
                rng
            })
            .collect();
        ArrivalSampler {
            probabilities: self.probabilities.clone(),
            rngs,
            next_slot: 0,
        }
    }
}

/// Sequential sampler over slots. One RNG stream per user.
#[derive(Debug, Clone)]
pub struct ArrivalSampler {
    probabilities: Vec<f64>,
    rngs: Vec<ChaCha8Rng>,
    next_slot: u64,
}

impl ArrivalSampler {
    /// Samples the arrival flags for `slot`, which must be the next unsampled
    /// slot; out-of-order sampling is a caller bug.
    ///
    /// Component i is `Present` with probability p_i, independently across
    /// users and slots, and deterministically given the seed.
    pub fn sample_arrivals(&mut self, slot: u64) -> Vec<ArrivalFlag> {
        assert_eq!(
            slot, self.next_slot,
            "slots must be sampled in order: expected {}, got {slot}",
            self.next_slot
        );
        self.next_slot += 1;
        self.probabilities
            .iter()
            .zip(self.rngs.iter_mut())
            .map(|(&p, rng)| ArrivalFlag::from_bool(rng.gen::<f64>() < p))
            .collect()
    }

    pub fn next_slot(&self) -> u64 {
        self.next_slot
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_arrival_every_slot() {
        let process = ArrivalProcess::new(vec![1.0], 7).unwrap();
        let mut sampler = process.sampler();
        for slot in 0..100 {
            assert_eq!(sampler.sample_arrivals(slot), vec![ArrivalFlag::Present]);
        }
    }

    #[test]
    fn zero_probability_rejected() {
        assert!(matches!(
            ArrivalProcess::new(vec![0.0], 1),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            ArrivalProcess::new(vec![0.5, 1.2], 1),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            ArrivalProcess::new(vec![f64::NAN], 1),
            Err(Error::InvalidProbability { .. })
        ));
    }

    #[test]
    fn equal_seeds_give_identical_sequences() {
        let a = ArrivalProcess::new(vec![0.3, 0.7], 42).unwrap();
        let b = ArrivalProcess::new(vec![0.3, 0.7], 42).unwrap();
        let (mut sa, mut sb) = (a.sampler(), b.sampler());
        for slot in 0..10_000 {
            assert_eq!(sa.sample_arrivals(slot), sb.sample_arrivals(slot));
        }
    }

    #[test]
    fn adding_a_user_preserves_existing_streams() {
        let two = ArrivalProcess::new(vec![0.4, 0.6], 99).unwrap();
        let three = ArrivalProcess::new(vec![0.4, 0.6, 0.5], 99).unwrap();
        let (mut s2, mut s3) = (two.sampler(), three.sampler());
        for slot in 0..5_000 {
            let f2 = s2.sample_arrivals(slot);
            let f3 = s3.sample_arrivals(slot);
            assert_eq!(f2[..], f3[..2]);
        }
    }

    #[test]
    fn empirical_mean_near_half_over_million_slots() {
        let process = ArrivalProcess::new(vec![0.5, 0.5], 12345).unwrap();
        let mut sampler = process.sampler();
        let horizon = 1_000_000u64;
        let mut counts = [0u64; 2];
        for slot in 0..horizon {
            let flags = sampler.sample_arrivals(slot);
            for (c, f) in counts.iter_mut().zip(&flags) {
                *c += u64::from(f.as_u8());
            }
        }
        for c in counts {
            let mean = c as f64 / horizon as f64;
            assert!(
                (0.498..=0.502).contains(&mean),
                "empirical mean {mean} outside [0.498, 0.502]"
            );
        }
    }

    #[test]
    fn four_sigma_bound_holds_across_seed_ensemble() {
        // |mean - p| <= 4 sqrt(p(1-p)/T) should hold in at least 99% of seeds.
        let horizon = 20_000u64;
        let ps = [0.1, 0.5, 0.9];
        let mut violations = 0usize;
        let mut trials = 0usize;
        for seed in 0..200u64 {
            let process = ArrivalProcess::new(ps.to_vec(), seed).unwrap();
            let mut sampler = process.sampler();
            let mut counts = [0u64; 3];
            for slot in 0..horizon {
                let flags = sampler.sample_arrivals(slot);
                for (c, f) in counts.iter_mut().zip(&flags) {
                    *c += u64::from(f.as_u8());
                }
            }
            for (i, &p) in ps.iter().enumerate() {
                let mean = counts[i] as f64 / horizon as f64;
                let bound = 4.0 * (p * (1.0 - p) / horizon as f64).sqrt();
                trials += 1;
                if (mean - p).abs() > bound {
                    violations += 1;
                }
            }
        }
        assert!(
            (violations as f64) <= 0.01 * trials as f64,
            "{violations} four-sigma violations in {trials} trials"
        );
    }
}
