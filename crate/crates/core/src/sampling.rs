//! Seeded random points in a box, filtered by a guard.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::guard::Guard;
use crate::vec3::{Aabb, Vec3};

pub const DEFAULT_SEED: u64 = 0x5eed_b417;
/// Environment variable overriding the sampling seed.
pub const SEED_ENV: &str = "BELTRAMI_SEED";

const ATTEMPTS_PER_POINT: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("invalid sampling box {0:?}")]
    InvalidBox(Aabb),
    #[error("only {accepted} of {wanted} points passed the guard after {attempts} draws")]
    Exhausted {
        wanted: usize,
        accepted: usize,
        attempts: usize,
    },
}

/// `BELTRAMI_SEED` when set to an integer, else `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

/// `n` uniformly distributed points of `domain` admitted by `guard`.
pub fn sample_points(
    domain: &Aabb,
    guard: &Guard,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec3>, SamplingError> {
    if !domain.is_valid() {
        return Err(SamplingError::InvalidBox(*domain));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let max_attempts = ATTEMPTS_PER_POINT * n.max(1);
    let mut attempts = 0;
    let coord = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        if hi > lo {
            rng.gen_range(lo..hi)
        } else {
            lo
        }
    };
    while out.len() < n {
        if attempts == max_attempts {
            return Err(SamplingError::Exhausted {
                wanted: n,
                accepted: out.len(),
                attempts,
            });
        }
        attempts += 1;
        let p = Vec3::new(
            coord(&mut rng, domain.min.x, domain.max.x),
            coord(&mut rng, domain.min.y, domain.max.y),
            coord(&mut rng, domain.min.z, domain.max.z),
        );
        if guard.admits(p) {
            out.push(p);
        }
    }
    Ok(out)
}
