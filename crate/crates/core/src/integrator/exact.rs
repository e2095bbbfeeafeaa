//! Exact floating-point summation with a fixed-point superaccumulator.
//!
//! Every finite `f64`, and every product of two of them, is an integer
//! multiple of `2^-2148`. The accumulator keeps the running sum as that
//! integer, split into 32-bit digits held in `i64` cells so that carries can
//! be deferred across many additions.

const CHUNK_BITS: u32 = 32;
const CHUNKS: usize = 104;
const MASK: u64 = (1 << CHUNK_BITS) - 1;
const FLUSH_EVERY: u32 = 1 << 28;
/// Bit position of `2^0`.
const ZERO_BIT: i32 = 2148;

/// `(negative, mantissa, p)` with `|x| = mantissa · 2^(p − 1074)`.
#[inline]
fn decompose(x: f64) -> (bool, u64, u32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as u32;
    let frac = bits & ((1 << 52) - 1);
    let neg = bits >> 63 == 1;
    if exp == 0 {
        (neg, frac, 0)
    } else {
        (neg, frac | (1 << 52), exp - 1)
    }
}

#[derive(Debug, Clone)]
pub struct SuperAccumulator {
    chunks: [i64; CHUNKS],
    pending: u32,
    /// Naive sum of non-finite or overflowing terms, if any.
    special: Option<f64>,
}

impl Default for SuperAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl SuperAccumulator {
    pub fn new() -> Self {
        SuperAccumulator { chunks: [0; CHUNKS], pending: 0, special: None }
    }

    fn add_special(&mut self, x: f64) {
        self.special = Some(self.special.unwrap_or(0.0) + x);
    }

    #[inline]
    fn deposit(&mut self, neg: bool, m: u64, k: usize, r: u32) {
        let wide = (m as u128) << r;
        let parts = [(wide as u64 & MASK) as i64, ((wide >> 32) as u64 & MASK) as i64, (wide >> 64) as i64];
        let cells = &mut self.chunks[k..k + 3];
        if neg {
            for (c, p) in cells.iter_mut().zip(parts) {
                *c -= p;
            }
        } else {
            for (c, p) in cells.iter_mut().zip(parts) {
                *c += p;
            }
        }
    }

    /// Adds `±m · 2^(pos − 2148)`.
    #[inline]
    fn add_scaled(&mut self, neg: bool, m: u128, pos: u32) {
        if m == 0 {
            return;
        }
        let k = (pos / CHUNK_BITS) as usize;
        let r = pos % CHUNK_BITS;
        self.deposit(neg, m as u64, k, r);
        let hi = (m >> 64) as u64;
        if hi != 0 {
            self.deposit(neg, hi, k + 2, r);
        }
        self.pending += 1;
        if self.pending >= FLUSH_EVERY {
            self.carry();
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if !x.is_finite() {
            return self.add_special(x);
        }
        let (neg, m, p) = decompose(x);
        self.add_scaled(neg, m as u128, p + 1074);
    }

    /// Adds the exact product `x · y`. A product whose rounded value is not
    /// finite is accumulated as that rounded value.
    #[inline]
    pub fn add_product(&mut self, x: f64, y: f64) {
        let rounded = x * y;
        if !rounded.is_finite() {
            return self.add_special(rounded);
        }
        let (nx, mx, px) = decompose(x);
        let (ny, my, py) = decompose(y);
        self.add_scaled(nx != ny, mx as u128 * my as u128, px + py);
    }

    /// Brings every chunk but the top one into `[0, 2^32)`.
    fn carry(&mut self) {
        for k in 0..CHUNKS - 1 {
            let c = self.chunks[k] >> CHUNK_BITS;
            self.chunks[k] -= c << CHUNK_BITS;
            self.chunks[k + 1] += c;
        }
        self.pending = 0;
    }

    /// The exact sum rounded to nearest, ties to even.
    pub fn sum(&self) -> f64 {
        if let Some(s) = self.special {
            return s;
        }
        let mut acc = self.clone();
        acc.carry();
        let negative = acc.chunks[CHUNKS - 1] < 0;
        if negative {
            for c in acc.chunks.iter_mut() {
                *c = -*c;
            }
            acc.carry();
        }
        let magnitude = round_to_f64(&acc.chunks);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

fn pow2(q: i32) -> f64 {
    if q >= -1022 {
        f64::from_bits(((q + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (q + 1074))
    }
}

/// Rounds the nonnegative integer with base-2^32 digits `chunks`, scaled by
/// `2^-2148`, to the nearest double.
fn round_to_f64(chunks: &[i64; CHUNKS]) -> f64 {
    let Some(top) = chunks.iter().rposition(|&c| c != 0) else {
        return 0.0;
    };
    let low = top.saturating_sub(3);
    let mut n: u128 = 0;
    for k in (low..=top).rev() {
        n = (n << CHUNK_BITS) | chunks[k] as u128;
    }
    let sticky = chunks[..low].iter().any(|&c| c != 0);
    let e0 = (low as i32) * CHUNK_BITS as i32 - ZERO_BIT;
    let msb = 127 - n.leading_zeros() as i32;
    if e0 + msb >= 1024 {
        return f64::INFINITY;
    }
    let q = (e0 + msb - 52).max(-1074);
    let drop = q - e0;
    if drop <= 0 {
        return (n as f64) * pow2(e0);
    }
    let (mut mant, round_up) = if drop >= 128 {
        let half_or_more = drop == 128 && n >> 127 == 1;
        (0, half_or_more && (n != 1 << 127 || sticky))
    } else {
        let drop = drop as u32;
        let mant = n >> drop;
        let rem = n & ((1u128 << drop) - 1);
        let half = 1u128 << (drop - 1);
        (mant, rem > half || (rem == half && (sticky || mant & 1 == 1)))
    };
    if round_up {
        mant += 1;
    }
    (mant as f64) * pow2(q)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn exact(xs: &[f64]) -> f64 {
        let mut acc = SuperAccumulator::new();
        xs.iter().for_each(|&x| acc.add(x));
        acc.sum()
    }

    #[test]
    fn small_cases() {
        assert_eq!(exact(&[-1.5, -1.5]), -3.0);
        assert_eq!(exact(&[-4.5, -4.5, 0.0]), -9.0);
        assert_eq!(exact(&[0.1, 0.2, -0.3]), 2.7755575615628914e-17);
        assert_eq!(exact(&[1e308, 1e308, -1e308, -1e308]), 0.0);
        assert_eq!(exact(&[1.0, 1e-300, -1.0]), 1e-300);
        assert_eq!(exact(&[f64::from_bits(1), f64::from_bits(1)]), f64::from_bits(2));
        assert_eq!(exact(&[f64::MAX, f64::MAX]), f64::INFINITY);
        assert_eq!(exact(&[f64::MAX, f64::MAX, -f64::MAX]), f64::MAX);
        assert_eq!(exact(&[]), 0.0);
        assert!(exact(&[1.0, f64::NAN]).is_nan());
    }

    #[test]
    fn rounding_ties_to_even() {
        let ulp = f64::EPSILON;
        assert_eq!(exact(&[1.0, ulp / 2.0]), 1.0);
        assert_eq!(exact(&[1.0 + ulp, ulp / 2.0]), 1.0 + 2.0 * ulp);
        assert_eq!(exact(&[1.0, ulp / 2.0, 1e-300]), 1.0 + ulp);
        assert_eq!(exact(&[1.0, ulp / 2.0, -1e-300]), 1.0);
    }

    #[test]
    fn products() {
        let mut acc = SuperAccumulator::new();
        acc.add_product(0.1, 0.1);
        acc.add(-(0.1 * 0.1));
        // The rounding error of 0.1·0.1.
        assert_eq!(acc.sum(), 0.1f64.mul_add(0.1, -(0.1 * 0.1)));

        let tiny = f64::from_bits(1);
        let mut acc = SuperAccumulator::new();
        acc.add_product(tiny, tiny);
        assert_eq!(acc.sum(), 0.0);
        acc.add_product(tiny, 0.75);
        assert_eq!(acc.sum(), tiny);
        acc.add_product(tiny, -0.5);
        acc.add_product(tiny, tiny);
        assert_eq!(acc.sum(), 0.0);

        let mut acc = SuperAccumulator::new();
        acc.add_product(1e200, 1e200);
        assert_eq!(acc.sum(), f64::INFINITY);
        let mut acc = SuperAccumulator::new();
        acc.add_product(-3.0, 1.5);
        acc.add_product(-3.0, 1.5);
        assert_eq!(acc.sum(), -9.0);
    }

    proptest! {
        #[test]
        fn matches_integer_oracle(terms in prop::collection::vec((-(1i64 << 40)..(1i64 << 40), -30i32..30), 0..200)) {
            // x = a · 2^e; summed exactly as integers in units of 2^-30.
            let xs: Vec<f64> = terms.iter().map(|&(a, e)| a as f64 * pow2(e)).collect();
            let total: i128 = terms.iter().map(|&(a, e)| (a as i128) << (e + 30)).sum();
            let expected = total as f64 * pow2(-30);
            prop_assert_eq!(exact(&xs).to_bits(), expected.to_bits());
        }

        #[test]
        fn products_match_integer_oracle(terms in prop::collection::vec((-(1i64 << 26)..(1i64 << 26), -(1i64 << 26)..(1i64 << 26), -20i32..20), 0..100)) {
            let mut acc = SuperAccumulator::new();
            let mut total: i128 = 0;
            for &(a, b, e) in &terms {
                acc.add_product(a as f64 * pow2(e), b as f64);
                total += ((a as i128) * (b as i128)) << (e + 20);
            }
            let expected = total as f64 * pow2(-20);
            prop_assert_eq!(acc.sum().to_bits(), expected.to_bits());
        }

        #[test]
        fn permutation_invariant(xs in prop::collection::vec(-1e10f64..1e10, 0..100), seed in any::<u64>()) {
            let mut ys = xs.clone();
            let n = ys.len();
            if n > 1 {
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ys.swap(i, (s >> 33) as usize % (i + 1));
                }
            }
            prop_assert_eq!(exact(&xs).to_bits(), exact(&ys).to_bits());
        }
    }
}
