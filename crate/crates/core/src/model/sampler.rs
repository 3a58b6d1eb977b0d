use alloc::vec::Vec;

use rand::Rng;

use crate::math::powf;
use crate::{Error, Result};

/// Unigram distortion exponent applied to counts.
pub const DEFAULT_DISTORTION: f64 = 0.75;

const MAX_REDRAWS: usize = 10_000;

/// Noise distribution `Q ∝ count^α` as a cumulative table.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
    distortion: f64,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], distortion: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| if c == 0 { 0.0 } else { powf(c as f64, distortion) }).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateSampler);
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        // pin the tail to 1 so every draw in [0, 1) lands in the table;
        // trailing zero-mass entries must keep their predecessor's value
        let last_live = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for c in &mut cumulative[last_live..] {
            *c = 1.0;
        }
        Ok(Self { cumulative, distortion })
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Probability mass of `id` under `Q`.
    pub fn probability(&self, id: u32) -> f64 {
        let i = id as usize;
        let prev = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        self.cumulative[i] - prev
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }
}

/// Draws `count` ids i.i.d. from `Q`, redrawing any equal to `exclude`.
pub fn sample_negatives<R: Rng + ?Sized>(
    sampler: &NegativeSampler,
    count: usize,
    exclude: u32,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    sample_negatives_into(sampler, count, exclude, rng, &mut out)?;
    Ok(out)
}

pub(crate) fn sample_negatives_into<R: Rng + ?Sized>(
    sampler: &NegativeSampler,
    count: usize,
    exclude: u32,
    rng: &mut R,
    out: &mut Vec<u32>,
) -> Result<()> {
    for _ in 0..count {
        let mut redraws = 0;
        loop {
            let id = sampler.sample(rng);
            if id != exclude {
                out.push(id);
                break;
            }
            redraws += 1;
            if redraws >= MAX_REDRAWS {
                return Err(Error::DegenerateSampler);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;
    use crate::rng::{stream, Stream};

    #[test]
    fn table_is_monotone_and_ends_at_one() {
        let s = NegativeSampler::new(&[3, 0, 10, 1, 0], DEFAULT_DISTORTION).unwrap();
        assert!(s.cumulative().windows(2).all(|w| w[0] <= w[1]));
        assert!((s.cumulative().last().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(s.probability(1), 0.0);
        assert_eq!(s.probability(4), 0.0);
    }

    #[test]
    fn degenerate_sampler_errors() {
        assert_eq!(NegativeSampler::new(&[0, 0], 0.75), Err(Error::DegenerateSampler));
        let s = NegativeSampler::new(&[1, 0], 0.75).unwrap();
        let mut rng = stream(1, Stream::Step, 0);
        assert_eq!(sample_negatives(&s, 1, 0, &mut rng), Err(Error::DegenerateSampler));
    }

    #[test]
    fn exclude_never_drawn() {
        let s = NegativeSampler::new(&[5, 5, 5], 0.75).unwrap();
        let mut rng = stream(2, Stream::Step, 0);
        let d = sample_negatives(&s, 500, 1, &mut rng).unwrap();
        assert_eq!(d.len(), 500);
        assert!(d.iter().all(|&x| x != 1));
    }

    #[test]
    fn empirical_frequencies_match_distorted_unigram() {
        // counts chosen so that distortion matters: p ∝ c^0.75
        let counts = [1u64, 10, 100, 1000];
        let s = NegativeSampler::new(&counts, 0.75).unwrap();
        let w: Vec<f64> = counts.iter().map(|&c| powf(c as f64, 0.75)).collect();
        let z: f64 = w.iter().sum();
        let n = 20_000usize;
        let mut hist = [0usize; 4];
        let mut rng = stream(3, Stream::Step, 0);
        for _ in 0..n {
            hist[s.sample(&mut rng) as usize] += 1;
        }
        for i in 0..4 {
            let p = w[i] / z;
            let sd = sqrt(n as f64 * p * (1.0 - p));
            assert!((hist[i] as f64 - n as f64 * p).abs() < 5.0 * sd, "id {i}: {} vs {}", hist[i], n as f64 * p);
        }
    }

    #[test]
    fn uniform_counts_thousand_draws() {
        let s = NegativeSampler::new(&[7; 10], 0.75).unwrap();
        let mut rng = stream(4, Stream::Step, 0);
        let d = sample_negatives(&s, 1000, 99, &mut rng).unwrap();
        let p = 0.1;
        let sd = sqrt(1000.0 * p * (1.0 - p));
        for id in 0..10u32 {
            let c = d.iter().filter(|&&x| x == id).count() as f64;
            assert!((c - 100.0).abs() < 5.0 * sd);
        }
    }
}
