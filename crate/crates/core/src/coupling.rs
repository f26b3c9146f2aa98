//! The scalar consistency problem `f(ω) = kα` and the existence/multiplicity
//! classification it induces.
//!
//! A positive solution of `ΔA − A + Aᵖ − kA∫A² = 0` is `ω^{1/(p−1)}A₀(√ω x)`
//! for some root `ω > 0` of `f(ω) = (ω−1)ω^{e} = kα`, `e = n/2 − 2/(p−1)`,
//! `α = ∫A₀²`. The shape of `f` on `(0, ∞)` is fixed by the sign of `e + 1`
//! and `e`, which is why the exponent is carried exactly where possible.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::{is_supercritical, Exponent};
use crate::report::{sig, sig_opt, sig_vec};
use crate::roots::brent;

pub use crate::exponent::sobolev_exponent;

/// Relative tolerance handed to Brent's method.
pub const ROOT_REL_TOL: f64 = 1e-14;
/// `kα` within `TANGENCY_BAND·(1 + kα)` of the maximum of `f` counts as a double root.
pub const TANGENCY_BAND: f64 = 1e-9;
/// Every reported root satisfies `|f(ω) − kα| ≤ CERT_TOL·(1 + kα)`.
pub const CERT_TOL: f64 = 1e-10;

const MAX_BRENT_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub n: u32,
    pub p: Exponent,
    pub k: f64,
    /// Exponent of the coupling integral `∫Aʳ`; 2 for the standard problem.
    pub r_exp: f64,
}

impl ProblemParams {
    pub fn new(n: u32, p: Exponent, k: f64) -> Result<Self> {
        Self::with_r_exp(n, p, k, 2.0)
    }

    pub fn with_r_exp(n: u32, p: Exponent, k: f64, r_exp: f64) -> Result<Self> {
        let params = Self { n, p, k, r_exp };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("dimension n must be at least 1".into()));
        }
        check_p(&self.p)?;
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling k must be positive, got {}", self.k)));
        }
        if !(self.r_exp > 0.0) || !self.r_exp.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coupling exponent r must be positive, got {}",
                self.r_exp
            )));
        }
        Ok(())
    }

    pub fn is_supercritical(&self) -> bool {
        is_supercritical(self.n, &self.p)
    }
}

fn check_p(p: &Exponent) -> Result<()> {
    if p.compare(&Exponent::integer(1)) != Ordering::Greater || !p.value().is_finite() {
        return Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")));
    }
    Ok(())
}

/// `e = n/2 − 2/(p−1)`, exact for rational `p`.
pub fn e_exponent(n: u32, p: &Exponent) -> Result<Exponent> {
    check_p(p)?;
    let half_n = Exponent::ratio(n as i64, 2)?;
    let two = Exponent::integer(2);
    Ok(half_n - two / (*p - Exponent::integer(1)))
}

#[inline]
fn f_with_exponent(omega: f64, e: f64) -> f64 {
    (omega - 1.0) * omega.powf(e)
}

/// `f(ω) = (ω−1)·ω^{n/2 − 2/(p−1)}`.
pub fn f_eval(omega: f64, n: u32, p: &Exponent) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::NonpositiveOmega(omega));
    }
    Ok(f_with_exponent(omega, e_exponent(n, p)?.value()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FShape {
    /// `e + 1 < 0`: rises from −∞ to a positive maximum, then decays to 0.
    MaxThenDecay,
    /// `e + 1 = 0`: increasing, saturating at 1.
    SaturatingOne,
    /// `0 < e + 1 < 1`: increasing from −∞ to ∞.
    IncreasingUnbounded,
    /// `e + 1 = 1`: increasing from −1 to ∞.
    IncreasingFiniteAtZero,
    /// `e + 1 > 1`: falls from 0 to a negative minimum, then grows to ∞.
    MinThenGrow,
    /// `p ≥ p*(n)`: no ground state, no solutions.
    Supercritical,
}

impl fmt::Display for FShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FCase {
    pub tag: FShape,
    pub e: Exponent,
    /// Location of the interior extremum of `f`, when it has one.
    pub omega_crit: Option<f64>,
}

pub fn classify_f(n: u32, p: &Exponent) -> Result<FCase> {
    let e = e_exponent(n, p)?;
    if is_supercritical(n, p) {
        return Ok(FCase { tag: FShape::Supercritical, e, omega_crit: None });
    }
    let e_plus_one = e + Exponent::integer(1);
    let zero = Exponent::integer(0);
    let one = Exponent::integer(1);
    let ev = e.value();
    let (tag, omega_crit) = match (e_plus_one.compare(&zero), e_plus_one.compare(&one)) {
        (Ordering::Less, _) => (FShape::MaxThenDecay, Some(-ev / (-ev - 1.0))),
        (Ordering::Equal, _) => (FShape::SaturatingOne, None),
        (Ordering::Greater, Ordering::Less) => (FShape::IncreasingUnbounded, None),
        (_, Ordering::Equal) => (FShape::IncreasingFiniteAtZero, None),
        (_, Ordering::Greater) => (FShape::MinThenGrow, Some(ev / (ev + 1.0))),
    };
    Ok(FCase { tag, e, omega_crit })
}

/// Roots of `f(ω) = kα`, plus whether the single root is a tangency.
struct RootSet {
    omegas: Vec<f64>,
    tangent: bool,
}

/// Expand `hi` geometrically from `lo` until `g` changes sign.
fn bracket_above(g: &impl Fn(f64) -> f64, lo: f64) -> Result<f64> {
    let s_lo = g(lo).signum();
    let mut hi = (2.0 * lo).max(2.0);
    while g(hi).signum() == s_lo {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::RootOutOfRange);
        }
    }
    Ok(hi)
}

fn refine(g: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    brent(g, lo, hi, ROOT_REL_TOL, MAX_BRENT_ITER).ok_or(Error::RootOutOfRange)
}

fn consistency_roots(case: &FCase, k_alpha: f64) -> Result<RootSet> {
    let e = case.e.value();
    let g = |w: f64| f_with_exponent(w, e) - k_alpha;
    // kα > 0 forces ω > 1, and g(1) = −kα < 0.
    let omegas = match case.tag {
        FShape::Supercritical => unreachable!("filtered by caller"),
        FShape::MaxThenDecay => {
            let w_c = case.omega_crit.expect("maximum exists");
            let f_max = f_with_exponent(w_c, e);
            if (k_alpha - f_max).abs() <= TANGENCY_BAND * (1.0 + k_alpha) {
                return Ok(RootSet { omegas: vec![w_c], tangent: true });
            }
            if k_alpha > f_max {
                Vec::new()
            } else {
                let lower = refine(&g, 1.0, w_c)?;
                let hi = bracket_above(&g, w_c)?;
                let upper = refine(&g, w_c, hi)?;
                vec![lower, upper]
            }
        }
        FShape::SaturatingOne if k_alpha >= 1.0 => Vec::new(),
        _ => {
            let hi = bracket_above(&g, 1.0)?;
            vec![refine(&g, 1.0, hi)?]
        }
    };
    Ok(RootSet { omegas, tangent: false })
}

/// All `ω > 0` with `f(ω) = kα`, ascending.
pub fn solve_consistency(n: u32, p: &Exponent, k_alpha: f64) -> Result<Vec<f64>> {
    if !(k_alpha > 0.0) || !k_alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("kα must be positive, got {k_alpha}")));
    }
    let case = classify_f(n, p)?;
    if case.tag == FShape::Supercritical {
        return Err(Error::SupercriticalExponent { n, p: p.value() });
    }
    Ok(consistency_roots(&case, k_alpha)?.omegas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TheoremItem {
    #[serde(rename = "1-1")]
    AboveFold,
    #[serde(rename = "1-2")]
    AtFold,
    #[serde(rename = "1-3")]
    BelowFold,
    #[serde(rename = "2-1")]
    SaturatedNone,
    #[serde(rename = "2-2")]
    SaturatedOne,
    #[serde(rename = "3-1")]
    Unique,
    #[serde(rename = "4-1")]
    Supercritical,
}

impl TheoremItem {
    pub fn label(&self) -> &'static str {
        match self {
            TheoremItem::AboveFold => "1-1",
            TheoremItem::AtFold => "1-2",
            TheoremItem::BelowFold => "1-3",
            TheoremItem::SaturatedNone => "2-1",
            TheoremItem::SaturatedOne => "2-2",
            TheoremItem::Unique => "3-1",
            TheoremItem::Supercritical => "4-1",
        }
    }
}

impl fmt::Display for TheoremItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Existence and multiplicity verdict for one `(n, p, k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub n: u32,
    #[serde(serialize_with = "display_exponent")]
    pub p: Exponent,
    #[serde(serialize_with = "sig")]
    pub k: f64,
    #[serde(serialize_with = "sig")]
    pub alpha: f64,
    pub case_tag: FShape,
    pub theorem_item: TheoremItem,
    pub count: usize,
    #[serde(serialize_with = "sig_vec")]
    pub omegas: Vec<f64>,
    #[serde(serialize_with = "sig_opt", skip_serializing_if = "Option::is_none")]
    pub k_star: Option<f64>,
}

fn display_exponent<S: serde::Serializer>(p: &Exponent, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(p)
}

impl ClassificationResult {
    pub fn to_record(&self) -> String {
        crate::report::to_record(self)
    }
}

/// Threshold coupling: `f(ω_crit)/α` for the fold shape, `1/α` for the
/// saturating shape (existence iff `kα < 1`).
pub fn threshold_coupling(case: &FCase, alpha: f64) -> Option<f64> {
    match case.tag {
        FShape::MaxThenDecay => {
            let w_c = case.omega_crit?;
            Some(f_with_exponent(w_c, case.e.value()) / alpha)
        }
        FShape::SaturatingOne => Some(1.0 / alpha),
        _ => None,
    }
}

/// Classify the coupled problem for `params` given the ground-state mass `α = ∫A₀²`.
pub fn classify_existence(params: &ProblemParams, alpha: f64) -> Result<ClassificationResult> {
    params.validate()?;
    if params.r_exp != 2.0 {
        return Err(Error::InvalidParameter(
            "the existence classification covers the L² coupling (r = 2); use generalized_consistency".into(),
        ));
    }
    let case = classify_f(params.n, &params.p)?;
    let mut result = ClassificationResult {
        n: params.n,
        p: params.p,
        k: params.k,
        alpha,
        case_tag: case.tag,
        theorem_item: TheoremItem::Supercritical,
        count: 0,
        omegas: Vec::new(),
        k_star: None,
    };
    if case.tag == FShape::Supercritical {
        return Ok(result);
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("ground-state mass must be positive, got {alpha}")));
    }
    let roots = consistency_roots(&case, params.k * alpha)?;
    result.theorem_item = match case.tag {
        FShape::MaxThenDecay if roots.tangent => TheoremItem::AtFold,
        FShape::MaxThenDecay if roots.omegas.is_empty() => TheoremItem::AboveFold,
        FShape::MaxThenDecay => TheoremItem::BelowFold,
        FShape::SaturatingOne if roots.omegas.is_empty() => TheoremItem::SaturatedNone,
        FShape::SaturatingOne => TheoremItem::SaturatedOne,
        _ => TheoremItem::Unique,
    };
    result.count = roots.omegas.len();
    result.omegas = roots.omegas;
    result.k_star = threshold_coupling(&case, alpha);
    Ok(result)
}

/// Log-spaced scan used for the general coupling exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub nodes: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { omega_min: 1e-6, omega_max: 1e6, nodes: 2000 }
    }
}

/// Roots of `(ω−1)ω^{n/2 − r/(p−1)} = kα_r` by sign-change scan and Brent refinement.
pub fn generalized_consistency(n: u32, p: &Exponent, r_exp: f64, k_alpha_r: f64) -> Result<Vec<f64>> {
    generalized_consistency_with(n, p, r_exp, k_alpha_r, &ScanConfig::default())
}

pub fn generalized_consistency_with(
    n: u32,
    p: &Exponent,
    r_exp: f64,
    k_alpha_r: f64,
    scan: &ScanConfig,
) -> Result<Vec<f64>> {
    check_p(p)?;
    if !(r_exp > 0.0) || !r_exp.is_finite() {
        return Err(Error::InvalidParameter(format!("coupling exponent r must be positive, got {r_exp}")));
    }
    if !(k_alpha_r > 0.0) || !k_alpha_r.is_finite() {
        return Err(Error::InvalidParameter(format!("kα_r must be positive, got {k_alpha_r}")));
    }
    if !(scan.omega_min > 0.0 && scan.omega_max > scan.omega_min && scan.nodes >= 2) {
        return Err(Error::InvalidParameter(format!("bad scan configuration {scan:?}")));
    }
    if is_supercritical(n, p) {
        return Err(Error::SupercriticalExponent { n, p: p.value() });
    }
    let e = n as f64 / 2.0 - r_exp / (p.value() - 1.0);
    let g = |w: f64| f_with_exponent(w, e) - k_alpha_r;

    let ratio = (scan.omega_max / scan.omega_min).ln();
    let nodes: Vec<f64> = (0..scan.nodes)
        .map(|i| scan.omega_min * (ratio * i as f64 / (scan.nodes - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&w| g(w)).collect();

    // f < 0 on (0, 1), so a positive g at the floor contradicts the asymptotics.
    if values[0] > 0.0 {
        return Err(Error::RootScanExhausted);
    }
    let mut roots = Vec::new();
    for i in 0..nodes.len() - 1 {
        if values[i] == 0.0 {
            roots.push(nodes[i]);
        } else if values[i].signum() != values[i + 1].signum() && values[i + 1] != 0.0 {
            roots.push(refine(&g, nodes[i], nodes[i + 1])?);
        }
    }
    let last = *values.last().unwrap();
    if last == 0.0 {
        roots.push(scan.omega_max);
    }

    // Limit of f at infinity decides whether a root lies beyond the scan.
    let f_inf = if e + 1.0 > 0.0 {
        f64::INFINITY
    } else if e + 1.0 == 0.0 {
        1.0
    } else {
        0.0
    };
    let s_inf = (f_inf - k_alpha_r).signum();
    if f_inf != k_alpha_r && last != 0.0 && last.signum() != s_inf {
        let mut lo = scan.omega_max;
        let mut hi = 10.0 * lo;
        loop {
            if g(hi).signum() != last.signum() {
                roots.push(refine(&g, lo, hi)?);
                break;
            }
            lo = hi;
            hi *= 10.0;
            if !hi.is_finite() || hi > 1e300 {
                return Err(Error::RootScanExhausted);
            }
        }
    }
    Ok(roots)
}

/// One row of a coupling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub outcome: Result<ClassificationResult>,
}

impl SweepRow {
    pub fn count(&self) -> Option<usize> {
        self.outcome.as_ref().ok().map(|r| r.count)
    }
}

/// Classify every `k` independently; row order follows `k_values`.
pub fn sweep_bifurcation(n: u32, p: &Exponent, alpha: f64, k_values: &[f64]) -> Vec<SweepRow> {
    k_values
        .par_iter()
        .map(|&k| SweepRow {
            k,
            outcome: ProblemParams::new(n, *p, k).and_then(|params| classify_existence(&params, alpha)),
        })
        .collect()
}
