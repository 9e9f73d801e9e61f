//! Scalar-generic numerical kernels: gamma function, adaptive quadrature,
//! Runge-Kutta integration, and root bracketing.
//!
//! Everything in here is pure numerics with no knowledge of the spectral
//! problem; the domain modules instantiate these at [`crate::Real`].

pub mod gamma;
pub mod ode;
pub mod quad;
pub mod roots;

pub use gamma::gamma;
pub use ode::{rk4_fixed, Dopri5Options, Integration, StepControl};
pub use quad::{integrate, integrate_left_singular};
pub use roots::bisect_monotone;
