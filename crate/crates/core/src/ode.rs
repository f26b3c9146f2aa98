//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! The integrator only ever advances to caller-chosen output nodes, landing on
//! each exactly; internal step sizes adapt between nodes and carry over from
//! one call to the next.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th-order and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    h: f64,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64, h_init: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 1_000_000,
            h: h_init,
        }
    }

    /// Advance `y` from `t` to `t_end` (with `t_end > t`), landing on `t_end` exactly.
    pub fn advance<const N: usize, F>(
        &mut self,
        f: &F,
        mut t: f64,
        mut y: [f64; N],
        t_end: f64,
    ) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let mut steps = 0usize;
        let mut k1 = f(t, &y);
        while t < t_end {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration {
                    r: t,
                    reason: "step budget exhausted".into(),
                });
            }
            let remaining = t_end - t;
            // Stretch the step slightly rather than leave a sliver before the node.
            let last = self.h >= 0.99 * remaining;
            let h = if last { remaining } else { self.h };
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::Integration {
                    r: t,
                    reason: "step size underflow".into(),
                });
            }

            let stage = |coef: &[(f64, &[f64; N])]| -> [f64; N] {
                let mut out = y;
                for i in 0..N {
                    out[i] += h * coef.iter().map(|(c, k)| c * k[i]).sum::<f64>();
                }
                out
            };
            let k2 = f(t + C2 * h, &stage(&[(A21, &k1)]));
            let k3 = f(t + C3 * h, &stage(&[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &stage(&[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * h,
                &stage(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + h,
                &stage(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = stage(&[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if last { t_end } else { t + h };
            let k7 = f(t_new, &y_new);

            let mut err_sq = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / scale).powi(2);
            }
            let err = (err_sq / N as f64).sqrt();
            if !err.is_finite() {
                self.h = 0.25 * h;
                continue;
            }

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                // A truncated final step says nothing about the preferred size.
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor.min(1.0);
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let rhs = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut ode = Dopri5::new(1e-10, 1e-14, 0.1);
        let mut y = [1.0, 0.0];
        let mut t = 0.0;
        let h = 2.0 * std::f64::consts::PI / 100.0;
        for i in 1..=100 {
            let t1 = i as f64 * h;
            y = ode.advance(&rhs, t, y, t1).unwrap();
            t = t1;
        }
        assert!((y[0] - 1.0).abs() < 1e-9, "{y:?}");
        assert!(y[1].abs() < 1e-9, "{y:?}");
    }

    #[test]
    fn exponential_growth_matches() {
        let rhs = |_t: f64, y: &[f64; 1]| [y[0]];
        let mut ode = Dopri5::new(1e-12, 1e-14, 0.5);
        let y = ode.advance(&rhs, 0.0, [1.0], 3.0).unwrap();
        assert!((y[0] / 3f64.exp() - 1.0).abs() < 1e-10);
    }
}
