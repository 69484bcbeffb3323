//! Small-time smile asymptotics for local-stochastic volatility models.
//!
//! The pipeline runs model → geometry (distance to the strike line, φ″, u₀)
//! → heat kernel factors (work term, ψ) → call price asymptote and implied
//! volatility expansion. `pricing_oracle` holds Black–Scholes and a Monte
//! Carlo simulator used to check the asymptotics independently.

// NaN must fail validation, hence `!(x > 0.0)` style guards throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod asymptotics;
pub mod error;
pub mod geometry;
pub mod heatkernel;
pub mod model;
pub mod numerics;
pub mod pricing_oracle;

pub use error::{LsvError, Result};
pub use model::ModelSpec;

/// Library version, recorded in CLI run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
