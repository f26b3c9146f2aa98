//! Ground states of `Δu − u + uᵖ = 0` and positive solutions of the globally
//! coupled problem `ΔA − A + Aᵖ − kA∫A² = 0` on `ℝⁿ`.
//!
//! The coupled problem reduces to a shifted ground state
//! `A(x) = ω^{1/(p−1)}A₀(√ω x)` together with the scalar condition
//! `f(ω) = (ω−1)ω^{n/2 − 2/(p−1)} = kα`, `α = ∫A₀²`. The crate shoots for `A₀`,
//! solves and classifies the scalar condition, and certifies each
//! reconstructed solution against the full nonlocal equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod error;
pub mod exponent;
pub mod ground_state;
pub mod ode;
pub mod report;
pub mod roots;
pub mod verification;

pub use error::{Error, Result};
pub use exponent::{sobolev_exponent, Exponent, SobolevExponent};
pub use ground_state::{
    fit_decay, radial_rhs, scale_profile, shoot_ground_state, shoot_radial, Decay,
    RadialProfile, ShootConfig,
};
pub use coupling::{
    classify_existence, generalized_consistency, solve_consistency, sweep_bifurcation,
    ClassificationResult, ProblemParams, TheoremItem,
};
pub use verification::{
    certify, radial_integral, reconstruct_solution, CertificationReport, SolutionBranch,
};
