//! Radial quadrature over ℝⁿ and numerical certification of reconstructed
//! solutions of the coupled problem.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coupling::ProblemParams;
use crate::error::{Error, Result};
use crate::ground_state::{interior_residual, ode_residual, scale_profile, RadialProfile};
use crate::report::sig;

/// Relative consistency tolerance `|1 + k∫Aʳ − ω| ≤ CONSISTENCY_TOL·ω`.
pub const CONSISTENCY_TOL: f64 = 1e-6;

const DENOM_GUARD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub grid_part: f64,
    pub tail_part: f64,
    pub est_error: f64,
}

/// Area of the unit sphere `S^{n−1}`: `2π^{n/2}/Γ(n/2)`.
pub fn surface_area(n: u32) -> f64 {
    // Γ(n/2) by the half-integer recurrence from Γ(1/2) = √π or Γ(1) = 1.
    let mut gamma = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if n.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

/// Composite fourth-order rule on uniformly spaced samples: Simpson, closed
/// with a 3/8 panel when the interval count is odd.
fn composite(f: &[f64], h: f64) -> f64 {
    let intervals = f.len().saturating_sub(1);
    match intervals {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        _ => {
            let (simpson_end, three_eighths) = if intervals.is_multiple_of(2) {
                (intervals, false)
            } else {
                (intervals - 3, true)
            };
            let mut s = 0.0;
            if simpson_end > 0 {
                let mut acc = f[0] + f[simpson_end];
                for (i, v) in f.iter().enumerate().take(simpson_end).skip(1) {
                    acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
                }
                s += acc * h / 3.0;
            }
            if three_eighths {
                let j = simpson_end;
                s += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
            }
            s
        }
    }
}

/// Richardson-style estimate from the same rule at double spacing.
fn composite_error(f: &[f64], h: f64) -> f64 {
    let mut m = f.len() - 1;
    m -= m % 4;
    if m < 4 {
        return 0.0;
    }
    let fine = composite(&f[..=m], h);
    let coarse: Vec<f64> = f[..=m].iter().step_by(2).copied().collect();
    (fine - composite(&coarse, 2.0 * h)).abs() / 15.0
}

/// `∫_R^∞ (a·e^{−δ(r−R)})^q r^{n−1} dr` for integer `n`, in closed form via
/// `Γ(n, x) = (n−1)! e^{−x} Σ_{k<n} x^k/k!`.
fn exponential_tail(anchor: f64, delta: f64, power: f64, r: f64, n: u32) -> f64 {
    let beta = power * delta;
    let x = beta * r;
    // (n−1)!/k! · x^k / β^n, accumulated from k = n−1 downwards.
    let mut term = 1.0 / beta.powi(n as i32) * x.powi(n as i32 - 1);
    let mut sum = 0.0;
    for k in (0..n).rev() {
        sum += term;
        if k > 0 {
            term *= k as f64 / x;
        }
    }
    if x == 0.0 {
        // Only the k = 0 term survives: (n−1)!/β^n.
        sum = (1..n).map(f64::from).product::<f64>() / beta.powi(n as i32);
    }
    anchor.abs().powf(power) * sum
}

fn integrate_samples(profile: &RadialProfile, samples: &[f64], power: f64) -> Result<QuadratureResult> {
    let decay = profile
        .decay()
        .ok_or_else(|| Error::DegenerateTail("profile carries no decay constants".into()))?;
    let n = profile.n();
    let sigma = surface_area(n);
    let h = profile.step();
    let integrand: Vec<f64> = profile
        .grid()
        .iter()
        .zip(samples)
        .map(|(r, s)| s.abs().powf(power) * r.powi(n as i32 - 1))
        .collect();
    let grid_part = sigma * composite(&integrand, h);
    let est_error = sigma * composite_error(&integrand, h);
    let tail_part = sigma * exponential_tail(*samples.last().unwrap(), decay.delta, power, profile.r_max(), n);
    Ok(QuadratureResult {
        value: grid_part + tail_part,
        grid_part,
        tail_part,
        est_error,
    })
}

/// `∫_{ℝⁿ} |u|^power dx` for a radial profile.
pub fn radial_integral(profile: &RadialProfile, power: f64) -> Result<QuadratureResult> {
    if !(power > 0.0) {
        return Err(Error::InvalidParameter(format!("power must be positive, got {power}")));
    }
    integrate_samples(profile, profile.values(), power)
}

/// `∫_{ℝⁿ} |∇u|² dx`, from the stored derivative samples.
pub fn gradient_integral(profile: &RadialProfile) -> Result<QuadratureResult> {
    integrate_samples(profile, profile.derivs(), 2.0)
}

/// One positive solution of the coupled problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBranch {
    pub omega: f64,
    pub profile: RadialProfile,
    /// `∫Aʳ` over ℝⁿ with the coupling exponent `r` of the problem (`∫A²` by default).
    pub l2_mass: f64,
    pub residual_sup: f64,
}

/// Build `ω^{1/(p−1)}A₀(√ω x)` from the ground state `base` and check
/// `ω = 1 + k∫Aʳ` to relative [`CONSISTENCY_TOL`].
pub fn reconstruct_solution(params: &ProblemParams, omega: f64, base: &RadialProfile) -> Result<SolutionBranch> {
    params.validate()?;
    if !(omega > 0.0) {
        return Err(Error::NonpositiveOmega(omega));
    }
    let profile = scale_profile(base, omega / base.omega())?;
    let l2_mass = radial_integral(&profile, params.r_exp)?.value;
    let defect = (1.0 + params.k * l2_mass - omega).abs();
    if !(defect <= CONSISTENCY_TOL * omega) {
        return Err(Error::ConsistencyViolation { omega, defect });
    }
    let mut branch = SolutionBranch {
        omega,
        profile,
        l2_mass,
        residual_sup: 0.0,
    };
    branch.residual_sup = nonlocal_residual(&branch, params);
    Ok(branch)
}

/// Sup over interior grid nodes of `|ΔA − A + Aᵖ − kA·∫Aʳ|`.
///
/// Nodes are those of [`ode_residual`]: the inward tail meets the forward shot
/// with a small jump in `u′`, so stencils reaching across it are excluded.
pub fn nonlocal_residual(branch: &SolutionBranch, params: &ProblemParams) -> f64 {
    interior_residual(&branch.profile, 1.0 + params.k * branch.l2_mass)
}

/// Integrals entering the Pohozaev and Nehari identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityTerms {
    /// `∫|∇u|²`
    pub gradient: f64,
    /// `∫u²`
    pub mass: f64,
    /// `∫u^{p+1}`
    pub potential: f64,
}

pub fn identity_terms(profile: &RadialProfile) -> Result<IdentityTerms> {
    Ok(IdentityTerms {
        gradient: gradient_integral(profile)?.value,
        mass: radial_integral(profile, 2.0)?.value,
        potential: radial_integral(profile, profile.p() + 1.0)?.value,
    })
}

/// Relative defect of `(n−2)/2·∫|∇u|² = n(∫u^{p+1}/(p+1) − ω∫u²/2)`.
///
/// For `n = 2` the left side vanishes identically and the defect is measured
/// against the two right-hand terms instead.
pub fn pohozaev_check(profile: &RadialProfile) -> Result<f64> {
    let t = identity_terms(profile)?;
    let n = profile.n() as f64;
    let half_mass = profile.omega() * t.mass / 2.0;
    let pot = t.potential / (profile.p() + 1.0);
    let lhs = (n - 2.0) / 2.0 * t.gradient;
    let rhs = n * (pot - half_mass);
    let scale = if profile.n() == 2 {
        n * (half_mass + pot)
    } else {
        lhs.abs() + rhs.abs()
    };
    Ok((lhs - rhs).abs() / (scale + DENOM_GUARD))
}

/// Relative defect of `∫|∇u|² + ω∫u² = ∫u^{p+1}`.
pub fn nehari_check(profile: &RadialProfile) -> Result<f64> {
    let t = identity_terms(profile)?;
    let lhs = t.gradient + profile.omega() * t.mass;
    Ok((lhs - t.potential).abs() / (lhs.abs() + t.potential.abs() + DENOM_GUARD))
}

/// Per-branch certification record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificationReport {
    #[serde(serialize_with = "sig")]
    pub omega: f64,
    #[serde(serialize_with = "sig")]
    pub l2_mass: f64,
    /// `|1 + k∫Aʳ − ω| / ω`
    #[serde(serialize_with = "sig")]
    pub consistency_defect: f64,
    /// Shifted-ODE residual on the integrated support.
    #[serde(serialize_with = "sig")]
    pub ode_residual: f64,
    #[serde(serialize_with = "sig")]
    pub nonlocal_residual: f64,
    #[serde(serialize_with = "sig")]
    pub pohozaev_defect: f64,
    #[serde(serialize_with = "sig")]
    pub nehari_defect: f64,
}

impl CertificationReport {
    pub fn to_record(&self) -> String {
        crate::report::to_record(self)
    }
}

pub fn certify(branch: &SolutionBranch, params: &ProblemParams) -> Result<CertificationReport> {
    Ok(CertificationReport {
        omega: branch.omega,
        l2_mass: branch.l2_mass,
        consistency_defect: (1.0 + params.k * branch.l2_mass - branch.omega).abs() / branch.omega,
        ode_residual: ode_residual(&branch.profile),
        nonlocal_residual: nonlocal_residual(branch, params),
        pohozaev_defect: pohozaev_check(&branch.profile)?,
        nehari_defect: nehari_check(&branch.profile)?,
    })
}
