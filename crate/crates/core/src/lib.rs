//! Spectral analysis of half-line Sturm-Liouville strings `-(y')' /w`-type
//! operators in the generalized form
//!
//! ```text
//!     (1/w) * ( -(y^[1])' + q y ),      y^[1] = (1/r) y',
//! ```
//!
//! on an interval `(0, b)` with positive, locally integrable weight `w` and
//! scale `r`, via the Weyl-Titchmarsh m-function of the Neumann boundary
//! condition at `0`.
//!
//! The crate decides two analytic questions from the boundary behaviour of
//! `m(λ)` and from integral conditions on the coefficients:
//!
//! * **Integro-differential inequality** ([`help`]): whether
//!   `(∫|y^[1]'/w^(1/2)|...)²  ≤ K ∫|y|²w · ∫|(1/w)(-(y^[1])'+qy)|²w`
//!   holds with a finite best constant `K`, decided by boundedness of
//!   `Re m(iy)/Im m(iy)` at both spectral ends and, independently, by
//!   positive-increase conditions on the coefficient distributions.
//! * **Similarity** ([`indefinite`]): whether the indefinite-weight operator
//!   obtained by extending the string evenly to the whole line with weight
//!   `sgn(x)·w(|x|)` is similar to a self-adjoint operator, decided by
//!   boundedness of `Im m(iy)/Re m(iy)`, by mirrored coefficient conditions,
//!   and by inverse-square potential classification.
//!
//! Supporting machinery: coefficient profiles and their distribution
//! functions ([`coefficients`]), Karamata regular-variation classification
//! ([`regvar`]), disk-limit m-function evaluation ([`weyl`]), small-spectral-
//! parameter models with explicit constants ([`asymptotics`]), the unitary
//! potential-removing change of variables ([`liouville`]), and a catalog of
//! worked problems ([`catalog`]).
//!
//! Numerical kernels (quadrature, Runge-Kutta, root bracketing, the gamma
//! function) are generic over the scalar type through [`scalar::Scalar`];
//! the domain layer instantiates them at [`Real`]/[`Cplx`].

pub mod asymptotics;
pub mod catalog;
pub mod cli;
pub mod coefficients;
pub mod error;
pub mod help;
pub mod indefinite;
pub mod liouville;
pub mod num;
pub mod regvar;
pub mod report;
pub mod scalar;
pub mod weyl;

/// Concrete scalar used by the domain layer.
pub type Real = f64;

/// Complex scalar over [`Real`]; spectral parameters and m-values.
pub type Cplx = num_complex::Complex<Real>;

/// Machine-independent absolute floor used when a relative tolerance is
/// meaningless because the target is (numerically) zero.
pub const TINY: Real = 1e-300;
