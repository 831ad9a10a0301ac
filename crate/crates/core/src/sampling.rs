//! Deterministic random streams and the score distribution.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key is a pure function
//! of `(seed, labels)`: the first key word is the seed itself, the remaining
//! three come from a SplitMix64 sponge over the label list and its length.
//! ChaCha output is specified bit-for-bit, so streams agree across platforms.
//! Normal variates use the ziggurat sampler of `rand_distr` 0.4, which
//! consumes the stream deterministically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{Group, MarketConfig};

/// Recorded in result metadata.
pub const GENERATOR_ALGORITHM: &str =
    "chacha8 (rand_chacha 0.3) keyed by seed + splitmix64(labels); normals: rand_distr 0.4 ziggurat";

/// Substream purposes within one step of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Spawn = 0,
    ApplicantChoice = 1,
    EmployerSelection = 2,
}

#[derive(Debug, Clone)]
pub struct Generator {
    rng: ChaCha8Rng,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Generator {
    /// Pure function of `(seed, labels)`.
    pub fn derive(seed: u64, labels: &[u64]) -> Self {
        let mut acc = splitmix(labels.len() as u64);
        for &l in labels {
            acc = splitmix(acc ^ splitmix(l));
        }
        let words = [seed, acc, splitmix(acc ^ 0x5bd1_e995), splitmix(acc.rotate_left(17))];
        let mut key = [0u8; 32];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        Self {
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// True with probability `p`. Consumes one variate.
    ///
    /// Panics if `p` is outside `[0, 1]`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        assert!((0.0..=1.0).contains(&p), "bernoulli probability {p} outside [0, 1]");
        self.uniform() < p
    }

    /// Uniform index in `0..n`. Panics when `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen()
    }
}

/// Draws a perceived-skill score for a member of `group`.
pub fn sample_score(gen: &mut Generator, group: Group, cfg: &MarketConfig) -> f64 {
    let mean = match group {
        Group::A => cfg.mean_a,
        Group::B => cfg.mean_b,
    };
    mean + cfg.score_variance.sqrt() * gen.standard_normal()
}

/// Names the substreams of one trial: `derive(seed, [level, trial, ...])`.
#[derive(Debug, Clone)]
pub struct StreamRoot {
    seed: u64,
    labels: Vec<u64>,
}

impl StreamRoot {
    pub fn new(seed: u64, labels: &[u64]) -> Self {
        Self {
            seed,
            labels: labels.to_vec(),
        }
    }

    pub fn generator(&self) -> Generator {
        Generator::derive(self.seed, &self.labels)
    }

    /// Generator for `labels ++ extra`.
    pub fn child(&self, extra: &[u64]) -> Generator {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(extra);
        Generator::derive(self.seed, &labels)
    }

    pub fn step(&self, step: u64, purpose: Purpose) -> Generator {
        self.child(&[step, purpose as u64])
    }

    pub fn employer(&self, step: u64, employer: u32) -> Generator {
        self.child(&[step, Purpose::EmployerSelection as u64, u64::from(employer)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(mut g: Generator, n: usize) -> Vec<u64> {
        (0..n).map(|_| g.next_u64()).collect()
    }

    #[test]
    fn derive_is_deterministic() {
        assert_eq!(draws(Generator::derive(42, &[3, 1]), 100), draws(Generator::derive(42, &[3, 1]), 100));
    }

    #[test]
    fn labels_separate_streams() {
        let a = draws(Generator::derive(42, &[3, 1]), 1000);
        let b = draws(Generator::derive(42, &[3, 2]), 1000);
        assert!(a.iter().zip(&b).any(|(x, y)| x != y));
        // Label lists that share a prefix or differ only in length.
        let c = draws(Generator::derive(42, &[3]), 10);
        let d = draws(Generator::derive(42, &[3, 0]), 10);
        let e = draws(Generator::derive(42, &[]), 10);
        assert_ne!(c, d);
        assert_ne!(c, e);
        assert_ne!(d, e);
    }

    #[test]
    fn seed_sensitivity() {
        assert_ne!(draws(Generator::derive(42, &[]), 10), draws(Generator::derive(43, &[]), 10));
    }

    #[test]
    fn frozen_first_values() {
        // ChaCha8 output is fully specified, so these hold on every platform.
        let mut g = Generator::derive(42, &[3, 1]);
        assert_eq!(g.next_u64(), 0xeb45_57e7_be48_6cb5);
        assert_eq!(g.next_u64(), 0x59c7_86ed_e810_c6ba);
        assert_eq!(g.standard_normal(), -0.32922021790576234);
    }

    #[test]
    fn bernoulli_degenerate() {
        let mut g = Generator::derive(1, &[]);
        assert!((0..10_000).all(|_| !g.bernoulli(0.0)));
        assert!((0..10_000).all(|_| g.bernoulli(1.0)));
    }

    #[test]
    #[should_panic(expected = "outside [0, 1]")]
    fn bernoulli_rejects_bad_probability() {
        Generator::derive(1, &[]).bernoulli(1.01);
    }

    #[test]
    fn bernoulli_rate() {
        let mut g = Generator::derive(5, &[9]);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| g.bernoulli(0.25)).count();
        let rate = hits as f64 / n as f64;
        assert!((0.2487..=0.2513).contains(&rate), "rate {rate}");
    }

    fn moments(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let skew = xs.iter().map(|x| ((x - mean) / var.sqrt()).powi(3)).sum::<f64>() / n;
        (mean, var, skew)
    }

    #[test]
    fn group_a_scores() {
        let cfg = MarketConfig::default();
        let mut g = Generator::derive(17, &[0]);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_score(&mut g, Group::A, &cfg)).collect();
        let (mean, var, skew) = moments(&xs);
        assert!((-0.004..=0.004).contains(&mean), "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
        assert!((-0.01..=0.01).contains(&skew), "skew {skew}");
    }

    #[test]
    fn group_b_scores() {
        let cfg = MarketConfig::default();
        let mut g = Generator::derive(17, &[1]);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_score(&mut g, Group::B, &cfg)).collect();
        let (mean, _, _) = moments(&xs);
        assert!((-0.304..=-0.296).contains(&mean), "mean {mean}");
    }

    #[test]
    fn equal_means_give_matching_distributions() {
        let cfg = MarketConfig {
            mean_b: 0.0,
            ..MarketConfig::default()
        };
        let n = 100_000;
        let mut g = Generator::derive(23, &[]);
        let mut a: Vec<f64> = (0..n).map(|_| sample_score(&mut g, Group::A, &cfg)).collect();
        let mut b: Vec<f64> = (0..n).map(|_| sample_score(&mut g, Group::B, &cfg)).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        // Two-sample KS statistic by merge.
        let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        assert!(d < 0.005, "ks {d}");
    }

    #[test]
    fn stream_root_children_are_distinct() {
        let root = StreamRoot::new(9, &[25, 3]);
        let a = draws(root.step(4, Purpose::Spawn), 8);
        let b = draws(root.step(4, Purpose::ApplicantChoice), 8);
        let c = draws(root.step(5, Purpose::Spawn), 8);
        let d = draws(root.employer(4, 0), 8);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_eq!(draws(root.child(&[4, 0]), 8), a);
    }
}
