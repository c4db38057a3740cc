//! Achievable-rate analysis for two-user Gaussian MIMO multiple-access
//! channels under compute-forward multiple access (CFMA).
//!
//! The crate computes sum capacity via iterative water-filling, decides
//! whether a serial (single codebook per user, [`scs`]) or parallel (one
//! codebook per active transmit antenna, [`pcs`]) compute-forward scheme
//! attains it, and runs seeded Monte Carlo sweeps over random channels
//! ([`experiments`]). A batch CLI (`cfma`) fronts the experiment runner.

pub mod channel;
pub mod experiments;
pub mod matrix;
pub mod pcs;
pub mod poly;
pub mod rng;
pub mod scs;
