//! Seeded sampler for the bounded discrete power law.
//!
//! Rank weights `r^(-s)` are computed in fixed point with integer-only
//! log2/exp2 (Q32.32 intermediates, Q0.63 weights), and draws come from a
//! ChaCha stream by inversion over integer cumulative weights. No libm
//! calls touch the sampling path, so byte-for-byte reproducibility holds
//! across platforms, not just across runs.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Draws `n_draws` i.i.d. ranks from `P(r) ∝ r^(-exponent)` over
/// `1..=n_ranks` and returns per-rank counts (index 0 is rank 1).
/// Counts always sum to `n_draws`.
pub fn sample_zipf(exponent: f64, n_ranks: usize, n_draws: u64, seed: u64) -> Vec<u64> {
    assert!(n_ranks >= 1, "need at least one rank");
    assert!(
        exponent.is_finite() && exponent >= 0.0,
        "exponent must be a non-negative finite number"
    );

    let mut counts = vec![0u64; n_ranks];
    if n_draws == 0 {
        return counts;
    }
    if n_ranks == 1 {
        counts[0] = n_draws;
        return counts;
    }

    // Cumulative fixed-point weights; weights fit in u64, sums in u128.
    let s_q32 = (exponent * (1u64 << 32) as f64).round() as u64;
    let mut cumulative: Vec<u128> = Vec::with_capacity(n_ranks);
    let mut total: u128 = 0;
    for rank in 1..=n_ranks as u64 {
        total += rank_weight_q63(rank, s_q32) as u128;
        cumulative.push(total);
    }
    debug_assert!(total > 0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Rejection zone for an unbiased `x % total`.
    let span = u128::MAX - total + 1;
    let zone = u128::MAX - span % total;
    for _ in 0..n_draws {
        let u = loop {
            let x = ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128;
            if x <= zone {
                break x % total;
            }
        };
        let idx = cumulative.partition_point(|&c| c <= u);
        counts[idx] += 1;
    }
    counts
}

/// `round-ish(2^63 * rank^(-s))` using integer arithmetic only.
fn rank_weight_q63(rank: u64, s_q32: u64) -> u64 {
    let log2_r = log2_q32(rank);
    // t = s * log2(rank) in Q32.32; fits easily in u64 for s <= 2^20.
    let t = ((s_q32 as u128 * log2_r as u128) >> 32) as u64;
    let int_part = t >> 32;
    if int_part >= 64 {
        return 0;
    }
    let frac = (t & 0xFFFF_FFFF) as u32;
    exp2_neg_frac_q63(frac) >> int_part
}

/// `log2(x)` for `x >= 1` in Q32.32, by bit-by-bit mantissa squaring.
fn log2_q32(x: u64) -> u64 {
    debug_assert!(x >= 1);
    let int_part = 63 - x.leading_zeros() as u64;
    // Mantissa in [1, 2) as Q1.63.
    let mut m = (x as u128) << (63 - int_part);
    let mut frac: u64 = 0;
    for _ in 0..32 {
        frac <<= 1;
        m = (m * m) >> 63;
        if m >= 1u128 << 64 {
            frac |= 1;
            m >>= 1;
        }
    }
    (int_part << 32) | frac
}

/// `2^(-f)` for a Q0.32 fraction `f`, as Q0.63, via the precomputed
/// constants `2^(-2^-i)`.
fn exp2_neg_frac_q63(frac: u32) -> u64 {
    static ROOTS: std::sync::OnceLock<[u64; 32]> = std::sync::OnceLock::new();
    let roots = ROOTS.get_or_init(|| {
        let mut roots = [0u64; 32];
        // 2^(-1/2) in Q0.63 = floor(sqrt(2^125)).
        roots[0] = isqrt_u128(1u128 << 125) as u64;
        for i in 1..32 {
            // Each constant is the square root of the previous one.
            roots[i] = isqrt_u128((roots[i - 1] as u128) << 63) as u64;
        }
        roots
    });
    let mut w: u128 = 1 << 63;
    for (i, &root) in roots.iter().enumerate() {
        if (frac >> (31 - i)) & 1 == 1 {
            w = (w * root as u128) >> 63;
        }
    }
    w as u64
}

/// Floor of the integer square root.
fn isqrt_u128(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let shift = (128 - n.leading_zeros()).div_ceil(2);
    let mut x = 1u128 << shift;
    loop {
        let y = (x + n / x) >> 1;
        if y >= x {
            return x;
        }
        x = y;
    }
}
