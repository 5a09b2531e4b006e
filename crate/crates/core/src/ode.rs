//! Adaptive Dormand–Prince 5(4) integrator for autonomous complex systems.

use nalgebra::SVector;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000 }
    }
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference between the 5th- and embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `dy/dt = f(y)` from `t = 0` to `t_end`.
pub fn integrate<const D: usize, F>(
    mut f: F,
    y0: SVector<C64, D>,
    t_end: f64,
    tol: Tolerance,
) -> Result<SVector<C64, D>, OdeError>
where
    F: FnMut(&SVector<C64, D>) -> SVector<C64, D>,
{
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(&y);
    let scale0 = y.iter().map(|z| z.norm()).fold(0.0, f64::max).max(tol.atol);
    let rate0 = k1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut h = if rate0 > 0.0 { 0.01 * scale0 / rate0 } else { 1e-3 * t_end };
    h = h.min(t_end).max(1e-14 * t_end.max(1.0));
    let mut steps = 0;
    while t < t_end {
        if steps >= tol.max_steps {
            return Err(OdeError::TooManySteps { t, max_steps: tol.max_steps });
        }
        steps += 1;
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = f(&(y + k1 * C64::from(h * A21)));
        let k3 = f(&(y + (k1 * C64::from(A31) + k2 * C64::from(A32)) * C64::from(h)));
        let k4 = f(&(y + (k1 * C64::from(A41) + k2 * C64::from(A42) + k3 * C64::from(A43)) * C64::from(h)));
        let k5 = f(&(y
            + (k1 * C64::from(A51) + k2 * C64::from(A52) + k3 * C64::from(A53) + k4 * C64::from(A54)) * C64::from(h)));
        let k6 = f(&(y
            + (k1 * C64::from(A61)
                + k2 * C64::from(A62)
                + k3 * C64::from(A63)
                + k4 * C64::from(A64)
                + k5 * C64::from(A65))
                * C64::from(h)));
        let y_new = y
            + (k1 * C64::from(B1) + k3 * C64::from(B3) + k4 * C64::from(B4) + k5 * C64::from(B5) + k6 * C64::from(B6))
                * C64::from(h);
        let k7 = f(&y_new);
        let err = (k1 * C64::from(E1)
            + k3 * C64::from(E3)
            + k4 * C64::from(E4)
            + k5 * C64::from(E5)
            + k6 * C64::from(E6)
            + k7 * C64::from(E7))
            * C64::from(h);
        let mut ratio: f64 = 0.0;
        for i in 0..D {
            let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            ratio = ratio.max(err[i].norm() / sc);
        }
        if ratio <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t });
        }
    }
    Ok(y)
}
