//! Generalized Lebedev index transforms with the squared Macdonald kernel
//! `Φ_{α,τ}(x) = |K_{(iτ+α)/2}(x)|²`.
//!
//! The crate evaluates the forward transform `F_α(τ) = ∫_0^∞ Φ_{α,τ}(x) f(x) dx`, its adjoint
//! `G_α(x) = ∫ Φ_{α,τ}(x) g(τ) dτ`, their inversion formulas, and solutions of the
//! differential-difference equation `Δu_n = u_{n+2} + 2u_n + u_{n-2}` built from the adjoint.

pub mod error;
pub mod interp;
pub mod inversion;
pub mod kernel;
pub mod pde;
pub mod quadrature;
pub mod specfun;
pub mod transforms;

pub use error::{Error, Result};
pub use quadrature::{QuadConfig, QuadResult};
