//! Globally adaptive Gauss–Kronrod (7/15) quadrature for matrix-valued
//! integrands.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::linalg::{frobenius, re, CMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("no convergence after {intervals} subintervals (error estimate {error:e})")]
    NoConvergence { intervals: usize, error: f64 },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the odd-indexed Kronrod nodes (and the centre)
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Stop when the summed error estimate is below `rtol·‖I‖_F`.
    pub rtol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { rtol: 1e-10, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: CMatrix,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    lo: f64,
    hi: f64,
    value: CMatrix,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> CMatrix>(f: &mut F, lo: f64, hi: f64) -> Result<Piece, QuadratureError> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |f: &mut F, x: f64| {
        let v = f(x);
        if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { at: x })
        }
    };
    let mid = eval(f, centre)?;
    let mut k = mid * re(WGK[7]);
    let mut g = mid * re(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let pair = eval(f, centre - half * x)? + eval(f, centre + half * x)?;
        k += pair * re(w);
        if j % 2 == 1 {
            g += pair * re(WG[j / 2]);
        }
    }
    let value = k * re(half);
    let error = frobenius(&((k - g) * re(half)));
    Ok(Piece { lo, hi, value, error })
}

/// Integrates `f` over `[lo, hi]`.
pub fn integrate<F: FnMut(f64) -> CMatrix>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: QuadratureOptions,
) -> Result<Integral, QuadratureError> {
    let mut pieces: Vec<Piece> = alloc::vec![kronrod(&mut f, lo, hi)?];
    let mut evaluations = 15;
    loop {
        let value: CMatrix = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= opts.rtol * frobenius(&value) || error == 0.0 {
            return Ok(Integral { value, error, evaluations });
        }
        if pieces.len() >= opts.max_intervals {
            return Err(QuadratureError::NoConvergence { intervals: pieces.len(), error });
        }
        let worst =
            pieces.iter().enumerate().max_by(|a, b| a.1.error.total_cmp(&b.1.error)).map(|(i, _)| i).unwrap_or(0);
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        pieces.push(kronrod(&mut f, p.lo, mid)?);
        pieces.push(kronrod(&mut f, mid, p.hi)?);
        evaluations += 30;
    }
}

/// Integrates `f` over the whole real line through `x = scale·tan θ`.
/// `scale` should be comparable to the width of the integrand.
pub fn integrate_real_line<F: FnMut(f64) -> CMatrix>(
    mut f: F,
    scale: f64,
    opts: QuadratureOptions,
) -> Result<Integral, QuadratureError> {
    let edge = 0.5 * core::f64::consts::PI;
    integrate(
        |theta| {
            let cos = theta.cos();
            f(scale * theta.tan()) * re(scale / (cos * cos))
        },
        -edge,
        edge,
        opts,
    )
}
