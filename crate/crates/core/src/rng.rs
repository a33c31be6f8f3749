//! Seeded random streams and count samplers shared by the simulator and the
//! synthetic market generator.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub type SimRng = ChaCha8Rng;

/// Independent stream for one (cell, repetition) work unit.
///
/// The master seed keys the ChaCha state; the cell and repetition indices
/// select the stream, so units never share output.
pub fn unit_rng(master_seed: u64, cell: u32, repetition: u32) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((cell as u64) << 32) | repetition as u64);
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draw from Binomial(n, p). `p` is clamped into [0, 1].
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p checked in (0, 1)").sample(rng)
}

/// Draw category counts from Multinomial(n, weights / sum(weights)) by
/// sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, weights: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; weights.len()];
    let mut remaining_n = n;
    let mut remaining_w: f64 = weights.iter().sum();
    for (i, &w) in weights.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        if i + 1 == weights.len() {
            counts[i] = remaining_n;
            break;
        }
        let p = if remaining_w > 0.0 { w / remaining_w } else { 0.0 };
        let k = binomial(rng, remaining_n, p);
        counts[i] = k;
        remaining_n -= k;
        remaining_w -= w;
    }
    counts
}
