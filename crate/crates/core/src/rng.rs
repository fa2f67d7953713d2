//! Deterministic stream RNG for parallel Monte Carlo.
//!
//! ChaCha12 is counter-based and supports 2^64 independent streams per seed,
//! so replication r always draws from stream r regardless of which worker
//! runs it. That is the whole determinism story: output depends on (seed,
//! stream), never on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// RNG for a given (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Innovation distributions offered by the simulators. All are mean zero,
/// variance one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Innovations {
    /// Standard normal.
    Normal,
    /// Student t with the given degrees of freedom (> 4), scaled to unit
    /// variance.
    StudentT { df: f64 },
    /// Exp(1) - 1: unit variance, skewed, provably not time-reversible when
    /// driving a linear filter.
    CenteredExponential,
}

impl Innovations {
    pub fn draw(self, rng: &mut ChaCha12Rng) -> f64 {
        use rand::Rng;
        use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
        match self {
            Innovations::Normal => rng.sample::<f64, _>(StandardNormal),
            Innovations::StudentT { df } => {
                let t: f64 = StudentT::new(df).expect("df validated").sample(rng);
                // Var(t_df) = df/(df-2)
                t * ((df - 2.0) / df).sqrt()
            }
            Innovations::CenteredExponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
        }
    }

    pub fn validate(self) -> crate::error::Result<()> {
        if let Innovations::StudentT { df } = self {
            if !(df > 4.0) {
                return Err(crate::error::CpError::domain(format!(
                    "student-t df must exceed 4 (moment conditions), got {df}"
                )));
            }
        }
        Ok(())
    }

    pub fn fill(self, rng: &mut ChaCha12Rng, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.draw(rng);
        }
    }
}
