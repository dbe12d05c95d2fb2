//! Achievable rate regions for the two-user multiple-access channel with
//! correlated states and cribbing encoders.
//!
//! The crate has two computational pillars and a verification layer tying
//! them together:
//!
//! - [`discrete`] evaluates the single-letter achievable-rate bounds of
//!   finite channels, in both the correlated-states and common-state forms,
//!   and searches over auxiliary factorizations for inner bounds on the
//!   whole region.
//! - [`gaussian`] carries the closed-form sum rate of the additive-state
//!   Gaussian scheme (dirty-paper coding plus state cleaning), its
//!   estimator coefficients, a deterministic optimizer over power splits,
//!   and benchmark scenario regions.
//! - [`oracle`] rebuilds the Gaussian scheme as an explicit covariance
//!   matrix and re-derives every closed-form quantity through generic
//!   log-det mutual informations, so the algebra and the construction check
//!   each other.
//!
//! [`info`] supplies the exact information measures both pillars stand on,
//! [`region`] the rate-region geometry (bound triples, frontiers, hulls,
//! CSV/JSON emission), and [`sweeps`] the seeded randomized sweeps that
//! drive the cross-checks at scale.

pub mod discrete;
pub mod gaussian;
pub mod info;
pub mod oracle;
pub mod region;
pub mod sweeps;
