//! Memoryless peak-magnitude-limited amplifier and its input strategies.
//!
//! The satellite amplifier is modelled as unity gain with the output
//! magnitude hard-limited to a threshold `T`; the phase is never distorted.
//! The superposed multiple-access signal has peak magnitude twice the QPSK
//! threshold, so it either gets pre-scaled (halved by default, no
//! distortion, 3 dB average-power loss) or clipped (full average power on
//! the surviving points, but the limiter acts on the noisy signal).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::{Error, Result};

/// How the amplifier input is conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Strategy {
    /// Pre-attenuate by a gain in (0, 1] so the peak fits the threshold.
    Scale(f64),
    /// Feed the signal straight in and let the limiter truncate it.
    Clip,
}

/// Peak-output-limited amplifier: threshold plus input strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierModel {
    pub threshold: f64,
    pub strategy: Strategy,
}

impl AmplifierModel {
    pub fn new(threshold: f64, strategy: Strategy) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "amplifier threshold must be positive, got {threshold}"
            )));
        }
        if let Strategy::Scale(g) = strategy {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "scale gain must be in (0, 1], got {g}"
                )));
            }
        }
        Ok(AmplifierModel {
            threshold,
            strategy,
        })
    }

    /// Conditions the input per the strategy, then saturates.
    pub fn apply(&self, y: Complex64) -> Complex64 {
        match self.strategy {
            Strategy::Scale(g) => saturate(y * g, self.threshold),
            Strategy::Clip => saturate(y, self.threshold),
        }
    }

    /// Peak and average energy of the noiseless constellation after
    /// [`AmplifierModel::apply`].
    pub fn output_energy_profile(&self, c: &Constellation) -> (f64, f64) {
        let mut peak = f64::NEG_INFINITY;
        let mut avg = 0.0;
        for (p, w) in c.points().iter().zip(c.probabilities()) {
            let e = self.apply(*p).norm_sqr();
            peak = peak.max(e);
            avg += w * e;
        }
        (peak, avg)
    }
}

/// Hard limiter: output magnitude `min(|y|, T)`, phase unchanged.
pub fn saturate(y: Complex64, threshold: f64) -> Complex64 {
    let mag_sq = y.norm_sqr();
    if mag_sq <= threshold * threshold {
        y
    } else {
        y * (threshold / mag_sq.sqrt())
    }
}
