//! Link SNR bookkeeping, AWGN sampling and deterministic RNG streams.
//!
//! All configured SNRs are per-symbol SNRs of the unit-energy reference
//! system without network coding, so a link at γ (linear) contributes
//! complex noise of total variance 1/γ. The four links of the star topology
//! are Return Uplink (user → satellite), Return Downlink (satellite → hub),
//! Forward Uplink (hub → satellite) and Forward Downlink (satellite → user).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Per-link symbol SNRs (dB) of the reference system without network coding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub gamma_ru_db: f64,
    pub gamma_rd_db: f64,
    pub gamma_fu_db: f64,
    pub gamma_fd_db: f64,
}

impl LinkBudget {
    /// The reference working point: strong hub links at 23 dB, user uplink
    /// at 15 dB, user downlink swept from 3 dB.
    pub fn reference(gamma_fd_db: f64) -> Self {
        LinkBudget {
            gamma_ru_db: 15.0,
            gamma_rd_db: 23.0,
            gamma_fu_db: 23.0,
            gamma_fd_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_ru_db", self.gamma_ru_db),
            ("gamma_rd_db", self.gamma_rd_db),
            ("gamma_fu_db", self.gamma_fu_db),
            ("gamma_fd_db", self.gamma_fd_db),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn gamma_ru(&self) -> f64 {
        db_to_linear(self.gamma_ru_db)
    }

    pub fn gamma_rd(&self) -> f64 {
        db_to_linear(self.gamma_rd_db)
    }

    pub fn gamma_fu(&self) -> f64 {
        db_to_linear(self.gamma_fu_db)
    }

    pub fn gamma_fd(&self) -> f64 {
        db_to_linear(self.gamma_fd_db)
    }
}

/// Complex AWGN of total variance σ² (σ²/2 per real dimension).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
}

impl NoiseSpec {
    pub fn from_snr_linear(gamma: f64) -> Self {
        NoiseSpec {
            variance: 1.0 / gamma,
        }
    }

    /// Per-dimension standard deviation.
    pub fn sigma_dim(&self) -> f64 {
        (self.variance / 2.0).sqrt()
    }
}

/// One circularly symmetric complex Gaussian sample of total variance σ².
///
/// σ² = 0 yields exactly 0 + 0j.
pub fn awgn<R: Rng>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Multiple-access link SNRs with network coding, relative to the reference
/// budget: the satellite sees both users (uplink SNR doubled), and the
/// superposed signal is pre-scaled for the limiter (downlink SNR halved).
pub fn plnc_ma_snrs(budget: &LinkBudget) -> (f64, f64) {
    (2.0 * budget.gamma_ru(), budget.gamma_rd() / 2.0)
}

/// Equivalent SNR of two cascaded non-regenerating links:
/// `[(1 + 1/γ_up)(1 + 1/γ_down) − 1]⁻¹`.
pub fn cascade_snr(gamma_up: f64, gamma_down: f64) -> Result<f64> {
    if !(gamma_up > 0.0) || !(gamma_down > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cascade SNRs must be positive, got {gamma_up}, {gamma_down}"
        )));
    }
    Ok(1.0 / ((1.0 + 1.0 / gamma_up) * (1.0 + 1.0 / gamma_down) - 1.0))
}

/// The RNG stream for one frame: keyed by the master seed, with the stream
/// index split into a block id (sweep point, restart, ...) and the frame
/// index inside the block. Any worker that simulates frame `i` of block `b`
/// draws the same sequence, so results do not depend on scheduling.
pub fn frame_rng(master_seed: u64, block: u32, frame_index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((block as u64) << 32) | frame_index as u64);
    rng
}

/// Derives an independent child seed (splitmix64 finalizer), used to give
/// each sweep point its own master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
