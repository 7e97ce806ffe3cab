//! Simulation and numerical analytics for two modifications of the
//! Petersburg game: truncation (the player holds a finite capital `2^c`)
//! and interest on borrowed stakes (gains and costs are discounted at a
//! constant rate).
//!
//! The crate has four layers:
//!
//! * [`engine`]: exact samplers for every game variant and for the
//!   discounted-gain limit variable `U`, built two independent ways
//!   (renewal-stream scaling and the compound-Poisson band representation).
//! * [`closed_form`] and [`exponents`]: the deterministic formulas, from
//!   the exponential limit and the Lévy exponents (band summation and
//!   quadrature) to Lévy-measure tails, dyadic tail approximations, and
//!   the premium and ruin estimates.
//! * [`statcheck`]: empirical CDFs, Kolmogorov–Smirnov tests, tail
//!   frequencies with Wilson intervals, empirical characteristic functions.
//! * [`experiments`]: named, seeded experiments producing deterministic
//!   CSV/JSON reports; the CLI front end is a thin wrapper over this.
//!
//! Everything is driven by explicit [`rng::RngStream`] values, so any result
//! is reproducible from `(seed, stream layout)` alone.

pub mod closed_form;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod rng;
pub mod statcheck;

pub use closed_form::{Dyadic, PremiumEstimate, RuinEstimate};
pub use engine::discount::{DiscountScaling, DiscountedTrace, DoublingTrace};
pub use engine::game::{DoublingOutcome, GameOutcome, TruncatedSession};
pub use engine::levy::{LevyTruncation, USampler};
pub use error::{Error, Result};
pub use exponents::QuadratureSpec;
pub use num_complex::Complex64;
pub use rng::{par_batch, RngStream};
pub use statcheck::{EcfEstimate, KsResult, MeanEstimate, SampleBatch, TailEstimate};
