//! Link-level simulator and closed-form error bounds for two-way satellite
//! relaying with physical-layer network coding (PLNC).
//!
//! Two users exchange uncoded QPSK frames through a non-regenerative
//! (bent-pipe) satellite and a ground hub. The crate models the multiple
//! access phase (both users transmit simultaneously, the hub cluster-decodes
//! the superposed constellation through a Latin-square denoising map) and the
//! broadcast phase (the hub sends the network-coded symbol back, each user
//! resolves the partner symbol with its own side information). The satellite
//! amplifier is a memoryless peak-magnitude limiter; the input can either be
//! pre-scaled to fit the limiter or clipped by it.
//!
//! Modules:
//! - [`constellation`]: complex signal sets, bit labelling, superposition.
//! - [`mapping`]: the denoising maps, adaptive map selection, cluster decode.
//! - [`amplifier`]: the peak limiter and the scale/clip input strategies.
//! - [`links`]: SNR bookkeeping, AWGN sampling, deterministic RNG streams.
//! - [`analysis`]: Q-function, cascade bounds, random-phase quadrature bound.
//! - [`packing`]: greedy sphere packing and single-hop SER for odd-size sets.
//! - [`simulator`]: frame-based Monte Carlo engine and sweep orchestration.
//!
//! Monte Carlo work is data-parallel over frames. With the default
//! `parallel` feature the frame loop runs on rayon; without it the same code
//! runs sequentially. Results are bit-identical either way because every
//! frame draws from an RNG stream derived only from the master seed and the
//! frame index.

pub mod amplifier;
pub mod analysis;
pub mod constellation;
pub mod links;
pub mod mapping;
pub mod packing;
pub mod simulator;

/// Errors reported by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constellation failed validation (empty, bad probabilities, ...).
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A denoising map and reference constellation disagree.
    #[error("denoising map inconsistency: {0}")]
    MapInconsistency(String),
    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
