//! Keyed, counter-based random streams.
//!
//! Every random decision in the pipeline draws from a stream keyed by a
//! tuple such as `(seed, class_id, composite_index)`. Streams never share
//! state, so the values a class sees do not depend on which worker
//! processes it or in what order.
//!
//! The mixing function is the SplitMix64 finalizer:
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! A stream's key is folded as `k = mix(k ^ mix(part + GOLDEN))` over the
//! key parts. Output `n` of the stream is `mix(k + (n + 1) * GOLDEN)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a string, used to key streams by name.
pub fn hash_str(s: &str) -> u64 {
    // FNV-1a, then finalized.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix64(h)
}

/// Stream tags so that different uses of the same key tuple stay independent.
pub mod tag {
    pub const BACKGROUND_SET: u64 = 1;
    pub const BACKGROUND_PICK: u64 = 2;
    pub const KEY_SHUFFLE: u64 = 3;
    pub const DFT: u64 = 4;
    pub const RANDOM_CROP: u64 = 5;
    pub const WEIGHTS: u64 = 6;
}

#[derive(Debug, Clone)]
pub struct KeyedRng {
    key: u64,
    counter: u64,
}

impl KeyedRng {
    pub fn new(seed: u64, parts: &[u64]) -> Self {
        let mut key = mix64(seed);
        for &p in parts {
            key = mix64(key ^ mix64(p.wrapping_add(GOLDEN)));
        }
        KeyedRng { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        // Rejection keeps the draw unbiased.
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n` in draw order (partial Fisher-Yates).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Sequential weighted sampling without replacement.
///
/// Each draw picks a remaining item with probability proportional to its
/// weight. When every remaining weight is zero the draw is uniform over
/// what is left. Returns at most `k` indices in draw order.
pub fn weighted_sample(weights: &[f64], k: usize, rng: &mut KeyedRng) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut out = Vec::with_capacity(k.min(weights.len()));
    while out.len() < k && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| weights[i].max(0.0)).sum();
        let pos = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (p, &i) in remaining.iter().enumerate() {
                let w = weights[i].max(0.0);
                acc += w;
                if w > 0.0 && target < acc {
                    chosen = Some(p);
                    break;
                }
            }
            // Rounding can leave `target` at the very top of the range.
            chosen.unwrap_or_else(|| {
                remaining
                    .iter()
                    .rposition(|&i| weights[i] > 0.0)
                    .expect("positive total implies a positive weight")
            })
        } else {
            rng.below(remaining.len())
        };
        out.push(remaining.remove(pos));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = KeyedRng::new(42, &[1, 2]);
        let mut b = KeyedRng::new(42, &[1, 2]);
        let mut c = KeyedRng::new(42, &[2, 1]);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn unit_interval() {
        let mut r = KeyedRng::new(7, &[]);
        for _ in 0..10_000 {
            let v = r.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn sample_indices_distinct() {
        let mut r = KeyedRng::new(3, &[9]);
        let s = r.sample_indices(20, 7);
        let mut d = s.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 7);
        assert_eq!(r.sample_indices(3, 10).len(), 3);
    }

    #[test]
    fn weighted_degenerate_weights() {
        for seed in 0..100 {
            let mut r = KeyedRng::new(seed, &[]);
            assert_eq!(weighted_sample(&[1.0, 0.0, 0.0], 1, &mut r), vec![0]);
        }
        let mut r = KeyedRng::new(1, &[]);
        let all = weighted_sample(&[0.0, 0.0, 0.0], 3, &mut r);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn weighted_single_candidate() {
        let mut r = KeyedRng::new(5, &[]);
        assert_eq!(weighted_sample(&[0.3], 4, &mut r), vec![0]);
    }

    #[test]
    fn weighted_frequencies_match_weights() {
        let w = [0.7, 0.2, 0.1];
        let trials = 100_000;
        let mut counts = [0usize; 3];
        for t in 0..trials {
            let mut r = KeyedRng::new(2024, &[t as u64]);
            counts[weighted_sample(&w, 1, &mut r)[0]] += 1;
        }
        for (c, p) in counts.iter().zip(w) {
            let f = *c as f64 / trials as f64;
            assert!((f - p).abs() < 0.01, "freq {f} vs {p}");
        }
    }
}
