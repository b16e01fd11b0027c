//! Reproducible random streams keyed by `(seed, stream_id)`.
//!
//! Every simulated path owns its stream id, so a path's draws never depend
//! on how paths are scheduled across workers. Each noise column of a path
//! (one per Brownian driver) draws from its own ChaCha8 stream, which keeps
//! column 0 identical between a one-factor model and a two-factor model
//! that degenerates to it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Identifies one reproducible stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Draw source with `columns` independent noise columns.
    pub fn noise(&self, columns: usize) -> Noise {
        let rngs = (0..columns.max(1) as u64)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(c)));
                rng.set_stream(self.stream_id);
                rng
            })
            .collect();
        Noise { rngs }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-path draw source; one generator per noise column.
#[derive(Debug, Clone)]
pub struct Noise {
    rngs: Vec<ChaCha8Rng>,
}

impl Noise {
    pub fn columns(&self) -> usize {
        self.rngs.len()
    }

    /// Standard normal draw from column `col`.
    #[inline]
    pub fn normal(&mut self, col: usize) -> f64 {
        self.rngs[col].sample(StandardNormal)
    }

    /// Fills `out[j]` with a standard normal from column `j`.
    #[inline]
    pub fn fill_normals(&mut self, out: &mut [f64]) {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = self.rngs[j].sample(StandardNormal);
        }
    }

    /// Fair sign `+1.0` or `-1.0` from column `col`.
    #[inline]
    pub fn sign(&mut self, col: usize) -> f64 {
        if self.rngs[col].random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
}
