//! Radial ground states of `Δu − ωu + uᵖ = 0` by shooting on the initial amplitude.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::is_supercritical_f64;
use crate::ode::Dopri5;

/// Integrator relative tolerance. Tighter than strictly needed for the profile
/// itself so that differenced `u′` samples stay clean near the origin.
pub const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-15;

/// Samples below this fraction of `u(0)` are taken from the fitted tail.
pub const TAIL_FLOOR: f64 = 1e-8;

/// Relative disagreement between the bracketing trajectories at which the
/// shot is no longer trusted.
const RELIABLE_SPREAD: f64 = 1e-7;

/// Fraction of the integrated support used for the tail fit.
const FIT_FRACTION: f64 = 1.0 / 3.0;

const MIN_FIT_POINTS: usize = 8;

/// Largest radius (in units of the local length scale) at which the origin series replaces integration.
const SERIES_RADIUS: f64 = 0.1;
const SERIES_TERMS: usize = 16;
const MAX_SCAN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootConfig {
    pub r_max: f64,
    pub step: f64,
    pub amp_tol: f64,
    pub max_bisect: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            r_max: 20.0,
            step: 0.01,
            amp_tol: 1e-12,
            max_bisect: 200,
        }
    }
}

impl ShootConfig {
    /// Default configuration expressed in the length scale of the shift `omega`.
    pub fn for_omega(omega: f64) -> Self {
        let s = omega.sqrt();
        let base = Self::default();
        Self {
            r_max: base.r_max / s,
            step: base.step / s,
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r_max > 0.0
            && self.step > 0.0
            && self.amp_tol > 0.0
            && self.max_bisect >= 1
            && self.step < self.r_max
            && self.r_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid shooting configuration {self:?}")))
        }
    }
}

/// Exponential envelope `|u(r)| ≤ c·e^{−delta·r}` of a profile tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decay {
    pub c: f64,
    pub delta: f64,
}

/// A radial function sampled on a uniform grid starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    n: u32,
    p: f64,
    omega: f64,
    grid: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    decay: Option<Decay>,
    tail_start: usize,
}

impl RadialProfile {
    /// Wrap externally produced samples. The grid must be uniform and start at 0.
    /// A decay envelope is fitted on the trailing third when possible.
    pub fn from_samples(
        n: u32,
        p: f64,
        omega: f64,
        grid: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
    ) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() || grid.len() != derivs.len() {
            return Err(Error::InvalidParameter("profile arrays must share a length ≥ 2".into()));
        }
        let h = grid[1] - grid[0];
        let uniform = grid[0] == 0.0
            && h > 0.0
            && grid
                .iter()
                .enumerate()
                .all(|(i, r)| (r - i as f64 * h).abs() <= 1e-9 * h * (i as f64).max(1.0));
        if !uniform {
            return Err(Error::InvalidParameter("grid must be uniform and start at 0".into()));
        }
        let tail_start = grid.len() - 1;
        let mut profile = Self {
            n,
            p,
            omega,
            grid,
            values,
            derivs,
            decay: None,
            tail_start,
        };
        profile.decay = fit_decay(&profile, FIT_FRACTION).ok();
        Ok(profile)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Shift of the equation this profile solves.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn decay(&self) -> Option<Decay> {
        self.decay
    }

    /// Index of the last sample of the forward shot; later samples come from
    /// the inward tail integration.
    pub fn tail_start(&self) -> usize {
        self.tail_start
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn amplitude(&self) -> f64 {
        self.values[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Export as CSV with header `r,u,du`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "r,u,du")?;
        for ((r, u), du) in self.grid.iter().zip(&self.values).zip(&self.derivs) {
            writeln!(w, "{r:.15e},{u:.15e},{du:.15e}")?;
        }
        Ok(())
    }
}

#[inline]
fn power_term(u: f64, p: f64) -> f64 {
    // Odd extension keeps trial stages finite when an overshoot dips below zero.
    u * u.abs().powf(p - 1.0)
}

/// Right-hand side of the radial equation `u″ = −((n−1)/r)u′ + ωu − uᵖ` as a
/// first-order system. At `r = 0` the regular limit `u″(0) = (ωu − uᵖ)/n` is used.
pub fn radial_rhs(r: f64, u: f64, v: f64, n: u32, p: f64, omega: f64) -> (f64, f64) {
    let source = omega * u - power_term(u, p);
    if r == 0.0 {
        (v, source / n as f64)
    } else {
        (v, -((n as f64 - 1.0) / r) * v + source)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
}

#[derive(Debug, Clone)]
struct Trajectory {
    values: Vec<f64>,
    derivs: Vec<f64>,
    shot: Shot,
}

impl Trajectory {
    /// Last index with `u > 0` and `u′ < 0`.
    fn last_regular(&self) -> usize {
        let last = self.values.len() - 1;
        if last > 0 && (self.values[last] <= 0.0 || self.derivs[last] >= 0.0) {
            last - 1
        } else {
            last
        }
    }
}

/// `(u, u′)` at radius `r` from the regular series `u = Σ c_k r^{2k}` about the
/// origin with `u(0) = a`.
fn origin_series(a: f64, n: u32, p: f64, omega: f64, r: f64) -> (f64, f64) {
    // Coefficients in x = r²: u = Σ s_k x^k, uᵖ = Σ b_k x^k (Miller's power recurrence).
    let nf = n as f64;
    let mut s = [0.0; SERIES_TERMS + 1];
    let mut b = [0.0; SERIES_TERMS + 1];
    s[0] = a;
    b[0] = a.powf(p);
    for k in 1..=SERIES_TERMS {
        let kf = k as f64;
        s[k] = (omega * s[k - 1] - b[k - 1]) / (2.0 * kf * (2.0 * kf + nf - 2.0));
        let acc: f64 = (1..=k)
            .map(|j| (j as f64 * p - (k - j) as f64) * s[j] * b[k - j])
            .sum();
        b[k] = acc / (kf * a);
    }
    let x = r * r;
    let (mut u, mut du) = (0.0, 0.0);
    for k in (0..=SERIES_TERMS).rev() {
        u = u * x + s[k];
        if k > 0 {
            du = du * x + 2.0 * k as f64 * s[k];
        }
    }
    (u, du * r)
}

struct Shooter<'a> {
    n: u32,
    p: f64,
    omega: f64,
    grid: &'a [f64],
}

impl Shooter<'_> {
    fn fire(&self, a: f64) -> Result<Trajectory> {
        let (n, p, omega) = (self.n, self.p, self.omega);
        let rhs = |r: f64, y: &[f64; 2]| {
            let (du, dv) = radial_rhs(r, y[0], y[1], n, p, omega);
            [du, dv]
        };

        // Nodes inside the series radius come straight from the origin series;
        // integration starts at the last of them (or at the radius itself).
        let length = 1.0 / omega.max(a.abs().powf(p - 1.0)).sqrt();
        let r_s = SERIES_RADIUS * length;
        let mut values = Vec::with_capacity(self.grid.len());
        let mut derivs = Vec::with_capacity(self.grid.len());
        values.push(a);
        derivs.push(0.0);
        let mut t = r_s.min(self.grid[1]);
        for &r in &self.grid[1..] {
            if r > r_s {
                break;
            }
            let (u, du) = origin_series(a, n, p, omega, r);
            values.push(u);
            derivs.push(du);
            t = r;
        }
        let (u0, v0) = origin_series(a, n, p, omega, t);
        let mut y = [u0, v0];
        let first = values.len();

        let mut ode = Dopri5::new(RTOL, ATOL, self.grid[1]);
        for &r in &self.grid[first..] {
            y = ode.advance(&rhs, t, y, r)?;
            t = r;
            values.push(y[0]);
            derivs.push(y[1]);
            if y[0] <= 0.0 {
                return Ok(Trajectory { values, derivs, shot: Shot::Overshoot });
            }
            if y[1] >= 0.0 {
                return Ok(Trajectory { values, derivs, shot: Shot::Undershoot });
            }
        }
        // Neither event fired: read off the sign of the growing mode.
        let shot = if y[1] + omega.sqrt() * y[0] > 0.0 {
            Shot::Undershoot
        } else {
            Shot::Overshoot
        };
        Ok(Trajectory { values, derivs, shot })
    }
}

/// Ground state of `Δu − u + uᵖ = 0` (shift ω = 1).
pub fn shoot_ground_state(n: u32, p: f64, cfg: &ShootConfig) -> Result<RadialProfile> {
    shoot_radial(n, p, 1.0, cfg)
}

/// Positive radial decaying solution of `Δu − ωu + uᵖ = 0` by amplitude bisection.
pub fn shoot_radial(n: u32, p: f64, omega: f64, cfg: &ShootConfig) -> Result<RadialProfile> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent must exceed 1, got {p}")));
    }
    if is_supercritical_f64(n, p) {
        return Err(Error::SupercriticalExponent { n, p });
    }
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::NonpositiveOmega(omega));
    }
    cfg.validate()?;
    match shoot_once(n, p, omega, cfg) {
        Err(Error::DegenerateTail(_)) => {
            let wider = ShootConfig {
                r_max: 1.5 * cfg.r_max,
                ..*cfg
            };
            shoot_once(n, p, omega, &wider)
        }
        other => other,
    }
}

fn uniform_grid(r_max: f64, step: f64) -> Vec<f64> {
    let intervals = (r_max / step - 1e-9).ceil().max(1.0) as usize;
    let h = r_max / intervals as f64;
    (0..=intervals).map(|i| i as f64 * h).collect()
}

fn shoot_once(n: u32, p: f64, omega: f64, cfg: &ShootConfig) -> Result<RadialProfile> {
    let grid = uniform_grid(cfg.r_max, cfg.step);
    let shooter = Shooter { n, p, omega, grid: &grid };

    // Doubling scan from a = 1 for an undershoot/overshoot pair.
    let first = shooter.fire(1.0)?;
    let (mut lo, mut hi) = (1.0, 1.0);
    let (mut traj_lo, mut traj_hi) = (None, None);
    let mut a = 1.0;
    match first.shot {
        Shot::Undershoot => {
            traj_lo = Some(first);
            for _ in 0..MAX_SCAN {
                a *= 2.0;
                let t = shooter.fire(a)?;
                if t.shot == Shot::Overshoot {
                    hi = a;
                    traj_hi = Some(t);
                    break;
                }
                lo = a;
                traj_lo = Some(t);
            }
        }
        Shot::Overshoot => {
            traj_hi = Some(first);
            for _ in 0..MAX_SCAN {
                a *= 0.5;
                let t = shooter.fire(a)?;
                if t.shot == Shot::Undershoot {
                    lo = a;
                    traj_lo = Some(t);
                    break;
                }
                hi = a;
                traj_hi = Some(t);
            }
        }
    }
    let (mut traj_lo, mut traj_hi) = match (traj_lo, traj_hi) {
        (Some(l), Some(h)) => (l, h),
        _ => return Err(Error::NoBracket),
    };

    let mut iterations = 0;
    while hi - lo >= cfg.amp_tol {
        if iterations == cfg.max_bisect {
            return Err(Error::MaxIterations(cfg.max_bisect));
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let t = shooter.fire(mid)?;
        match t.shot {
            Shot::Undershoot => {
                lo = mid;
                traj_lo = t;
            }
            Shot::Overshoot => {
                hi = mid;
                traj_hi = t;
            }
        }
    }

    let amp = 0.5 * (lo + hi);
    let mid = shooter.fire(amp)?;

    // Last node where the bracketing shots still agree and the solution is
    // above the tail floor.
    let usable = mid
        .last_regular()
        .min(traj_lo.last_regular())
        .min(traj_hi.last_regular());
    let mut cut = 0;
    for i in 1..=usable {
        let u = mid.values[i];
        let spread = (traj_hi.values[i] - traj_lo.values[i]).abs();
        if u < TAIL_FLOOR * amp || spread > RELIABLE_SPREAD * u {
            break;
        }
        cut = i;
    }

    let mut values = mid.values;
    let mut derivs = mid.derivs;
    values.truncate(cut + 1);
    derivs.truncate(cut + 1);

    let fit_start = cut - ((cut as f64 * FIT_FRACTION).floor() as usize);
    if cut + 1 - fit_start < MIN_FIT_POINTS {
        return Err(Error::DegenerateTail(format!(
            "only {} trusted samples in the fit window",
            cut + 1 - fit_start
        )));
    }
    let delta_fit = log_slope_fit(&grid[fit_start..=cut], &values[fit_start..=cut])?;

    if cut + 1 < grid.len() {
        let (tail_u, tail_du) = backward_tail(n, p, omega, &grid[cut..], values[cut])?;
        values.extend_from_slice(&tail_u[1..]);
        derivs.extend_from_slice(&tail_du[1..]);
    }

    let env_start = fit_start.min(2 * grid.len() / 3);
    let c = envelope(&grid[env_start..], &values[env_start..], delta_fit);

    Ok(RadialProfile {
        n,
        p,
        omega,
        grid,
        values,
        derivs,
        decay: Some(Decay { c, delta: delta_fit }),
        tail_start: cut,
    })
}

/// Decaying solution on `grid` (ascending, `grid[0]` the cut) with
/// `u(grid[0]) = u_c`.
///
/// Forward integration past the cut is swamped by the growing mode, so the
/// tail is integrated inwards from `r_max`, where that mode is damped, starting
/// on the decaying branch of the linearised equation. The far-end amplitude is
/// matched to `u_c` by a secant iteration in log space.
fn backward_tail(n: u32, p: f64, omega: f64, grid: &[f64], u_c: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let r_c = grid[0];
    let r_end = *grid.last().expect("tail grid is non-empty");
    let k = omega.sqrt();
    let spread = (n as f64 - 1.0) / 2.0;
    let slope = -k - spread / r_end;
    // Backwards in r as forwards in t = −r.
    let rhs = |t: f64, y: &[f64; 2]| {
        let (du, dv) = radial_rhs(-t, y[0], y[1], n, p, omega);
        [-du, -dv]
    };
    let sweep = |amp: f64, store: bool| -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let mut y = [amp, slope * amp];
        let mut t = -r_end;
        let mut ode = Dopri5::new(RTOL, 0.0, grid[1] - grid[0]);
        let mut values = Vec::with_capacity(if store { grid.len() } else { 0 });
        let mut derivs = Vec::with_capacity(values.capacity());
        if store {
            values.push(y[0]);
            derivs.push(y[1]);
        }
        for &r in grid[..grid.len() - 1].iter().rev() {
            y = ode.advance(&rhs, t, y, -r)?;
            t = -r;
            if store {
                values.push(y[0]);
                derivs.push(y[1]);
            }
        }
        values.reverse();
        derivs.reverse();
        Ok((y[0], values, derivs))
    };

    let mut x0 = (u_c * (-k * (r_end - r_c)).exp() * (r_c.max(f64::MIN_POSITIVE) / r_end).powf(spread)).ln();
    let mut g0 = sweep(x0.exp(), false)?.0.ln() - u_c.ln();
    let mut x1 = x0 - g0;
    for _ in 0..MAX_SCAN {
        let g1 = sweep(x1.exp(), false)?.0.ln() - u_c.ln();
        if !g1.is_finite() {
            return Err(Error::DegenerateTail("tail sweep left the positive cone".into()));
        }
        if g1.abs() <= 1e-14 || g1 == g0 {
            let (_, values, derivs) = sweep(x1.exp(), true)?;
            return Ok((values, derivs));
        }
        let x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        (x0, g0, x1) = (x1, g1, x2);
    }
    Err(Error::DegenerateTail("tail amplitude did not converge".into()))
}

/// Least-squares slope of `ln u` against `r`, returned as a positive decay rate.
fn log_slope_fit(r: &[f64], u: &[f64]) -> Result<f64> {
    if r.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateTail(format!(
            "{} samples in the fit window, need {MIN_FIT_POINTS}",
            r.len()
        )));
    }
    if u.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateTail("non-positive samples in the fit window".into()));
    }
    let m = r.len() as f64;
    let r_mean = r.iter().sum::<f64>() / m;
    let l_mean = u.iter().map(|v| v.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (ri, ui) in r.iter().zip(u) {
        let dx = ri - r_mean;
        sxy += dx * (ui.ln() - l_mean);
        sxx += dx * dx;
    }
    let delta = -sxy / sxx;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::DegenerateTail(format!("fitted decay rate {delta} is not positive")));
    }
    Ok(delta)
}

fn envelope(r: &[f64], u: &[f64], delta: f64) -> f64 {
    r.iter()
        .zip(u)
        .map(|(ri, ui)| ui.abs() * (delta * ri).exp())
        .fold(0.0, f64::max)
}

/// Fit `u ≈ C·e^{−δr}` on the trailing `tail_fraction` of the grid. `δ` comes
/// from a least-squares line through `ln u`; `C` is the smallest prefactor that
/// bounds every sample of the window.
pub fn fit_decay(profile: &RadialProfile, tail_fraction: f64) -> Result<Decay> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail fraction must lie in (0, 1), got {tail_fraction}"
        )));
    }
    let len = profile.len();
    let window = ((len as f64 * tail_fraction).ceil() as usize).min(len);
    let start = len - window;
    let r = &profile.grid[start..];
    let u = &profile.values[start..];
    let delta = log_slope_fit(r, u)?;
    Ok(Decay {
        c: envelope(r, u, delta),
        delta,
    })
}

/// `ω^{1/(p−1)}·base(√ω·r)` sampled on the compressed grid `r_i/√ω`.
pub fn scale_profile(base: &RadialProfile, omega: f64) -> Result<RadialProfile> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::NonpositiveOmega(omega));
    }
    let s = omega.sqrt();
    let amp = omega.powf(1.0 / (base.p - 1.0));
    Ok(RadialProfile {
        n: base.n,
        p: base.p,
        omega: base.omega * omega,
        grid: base.grid.iter().map(|r| r / s).collect(),
        values: base.values.iter().map(|u| amp * u).collect(),
        derivs: base.derivs.iter().map(|d| amp * s * d).collect(),
        decay: base.decay.map(|d| Decay {
            c: amp * d.c,
            delta: s * d.delta,
        }),
        tail_start: base.tail_start,
    })
}

// Eighth-order centred first-derivative weights for offsets 1..=4.
const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Half-width of the finite-difference stencil.
const STENCIL: usize = 4;

/// `u″` at node `i` from a centred difference of the stored `u′` samples.
fn second_derivative(profile: &RadialProfile, i: usize) -> f64 {
    let h = profile.step();
    let d = &profile.derivs;
    D1.iter()
        .enumerate()
        .map(|(j, w)| w * (d[i + j + 1] - d[i - j - 1]))
        .sum::<f64>()
        / h
}

/// Pointwise residual of `u″ + ((n−1)/r)u′ − ωu + uᵖ + extra·u` at node `i`.
fn pointwise_residual(profile: &RadialProfile, i: usize, shift: f64) -> f64 {
    let r = profile.grid[i];
    let u = profile.values[i];
    let du = profile.derivs[i];
    second_derivative(profile, i) + (profile.n as f64 - 1.0) / r * du - shift * u
        + power_term(u, profile.p)
}

/// Sup-norm residual of the shifted radial equation over the interior of the
/// integrated support.
pub fn ode_residual(profile: &RadialProfile) -> f64 {
    interior_residual(profile, profile.omega)
}

/// Sup of `|u″ + (n−1)/r·u′ − shift·u + uᵖ|` over nodes whose stencil lies
/// inside the integrated support.
pub(crate) fn interior_residual(profile: &RadialProfile, shift: f64) -> f64 {
    let last = profile.tail_start.min(profile.len() - 1);
    if last < 2 * STENCIL + 1 {
        return 0.0;
    }
    (STENCIL..=last - STENCIL)
        .map(|i| pointwise_residual(profile, i, shift).abs())
        .fold(0.0, f64::max)
}
