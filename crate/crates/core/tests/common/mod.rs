#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hkdelta::timescale::{Component, TimeScale, TsInterval};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A scale with 1 to 6 components, or a generated grid, q-scale or Cantor stage.
pub fn random_scale(rng: &mut ChaCha8Rng) -> TimeScale {
    match rng.random_range(0..10) {
        0 => TimeScale::uniform(0.0, rng.random_range(1..40) as f64 * 0.25, 0.25).unwrap(),
        1 => TimeScale::qscale(rng.random_range(0.3..0.8), rng.random_range(0.5..4.0), rng.random_range(1..8)).unwrap(),
        2 => TimeScale::cantor(0.0, rng.random_range(0.5..3.0), rng.random_range(0..4)).unwrap(),
        _ => {
            let mut x = rng.random_range(-5.0..5.0);
            let mut parts = Vec::new();
            for _ in 0..rng.random_range(1..=6) {
                if rng.random_bool(0.5) {
                    let len = rng.random_range(0.05..2.0);
                    parts.push(Component::Interval { lo: x, hi: x + len });
                    x += len;
                } else {
                    parts.push(Component::Point(x));
                }
                x += rng.random_range(0.01..1.0);
            }
            match TimeScale::new(parts) {
                Ok(t) if t.max() > t.min() => t,
                _ => TimeScale::new([Component::Point(0.0), Component::Interval { lo: 0.5, hi: 1.0 }]).unwrap(),
            }
        }
    }
}

/// A random `[a, b]_T` with `a < b`; the whole scale half of the time.
pub fn random_interval(rng: &mut ChaCha8Rng) -> TsInterval {
    let scale = random_scale(rng);
    let whole = scale.whole().unwrap();
    if rng.random_bool(0.5) {
        return whole;
    }
    let (lo, hi) = (scale.min(), scale.max());
    let mut a = whole.nearest(rng.random_range(lo..hi));
    let mut b = whole.nearest(rng.random_range(lo..hi));
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    whole.sub(a, b).unwrap_or(whole)
}
