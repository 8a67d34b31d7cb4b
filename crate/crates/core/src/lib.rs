//! Numerical harmonic analysis on the 2-dimensional quantum torus `T²_θ`.
//!
//! The algebra is generated by two unitaries `U`, `V` with `UV = e^{2πiθ} VU`.
//! Elements are handled as finitely supported Fourier series ([`QPoly`]), with
//! monomials written in the fixed order `U^m V^n`.
//!
//! * [`algebra`]: exact twisted-polynomial arithmetic, adjoint, trace.
//! * [`matrix_model`]: the `b×b` matrix-valued function model at `θ = a/b`,
//!   noncommutative `L_p` norms by quadrature, operator norms, and
//!   continued-fraction ladders for irrational `θ`.
//! * [`multipliers`]: Fourier multipliers, Fejér symbols and multi-restart
//!   lower bounds for multiplier norms.
//! * [`transference`]: cyclic groups, the discretization maps `j_{d,n}`,
//!   Fejér measures with prescribed coefficients, periodization.
//! * [`diophantine`]: convergents, approximation searches and the nearly
//!   anticommuting monomial sequences.

pub mod algebra;
pub mod diophantine;
pub mod error;
pub mod estimate;
pub mod matrix_model;
pub mod multipliers;
mod optimize;
pub mod transference;

pub use algebra::{Monomial, Poly4, QPoly, Theta, Turn};
pub use error::{Error, Result};
pub use estimate::{EstimateKind, LadderRung, NormEstimate, Transcript};
pub use matrix_model::{MatrixRep, QuadratureGrid};
pub use multipliers::Symbol;
pub use optimize::{GradientMode, OptimizerConfig};

pub use num_complex::Complex64;
