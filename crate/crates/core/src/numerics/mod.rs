//! Numerical building blocks shared by the geometric pipeline.

pub mod ode;
pub mod quad;
pub mod roots;

pub use ode::{DormandPrince, OdeOptions};
pub use quad::{integrate, QuadOptions, Quadrature};
pub use roots::{brent, golden_section};
