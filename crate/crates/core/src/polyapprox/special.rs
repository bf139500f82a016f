//! Special functions needed by the approximants: Bessel J_m, Chebyshev T_k,
//! erf and the principal branch of Lambert W.

use std::f64::consts::E;

use crate::error::{invalid, Result};

/// Which special function to evaluate with [`eval_special`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialFn {
    BesselJ(u32),
    ChebyshevT(u32),
    Erf,
    LambertW,
}

pub fn eval_special(kind: SpecialFn, arg: f64) -> Result<f64> {
    if !arg.is_finite() {
        return invalid("argument must be finite");
    }
    match kind {
        SpecialFn::BesselJ(m) => Ok(bessel_j(m, arg)),
        SpecialFn::ChebyshevT(k) => Ok(chebyshev_t(k, arg)),
        SpecialFn::Erf => Ok(erf(arg)),
        SpecialFn::LambertW => lambert_w(arg),
    }
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// T_k(x) by the three-term recurrence (valid for any real x).
pub fn chebyshev_t(k: u32, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut t0, mut t1) = (1.0, x);
            for _ in 1..k {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            t1
        }
    }
}

/// J_m(x) for a single order.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    bessel_j_upto(m as usize, x)[m as usize]
}

/// J_0(x), ..., J_nmax(x) from one Miller backward recurrence, normalised
/// with J_0 + 2 Σ J_{2k} = 1.
pub fn bessel_j_upto(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = nmax.max(ax.ceil() as usize);
    let mut start = top + 40 + (20.0 * (top as f64).sqrt()) as usize;
    start += start % 2;

    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut norm = 0.0;
    let mut vals = vec![0.0; start + 1];
    vals[start] = j_cur;
    for n in (1..=start).rev() {
        let j_prev = 2.0 * n as f64 / ax * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        vals[n - 1] = j_cur;
        if j_cur.abs() > 1e250 {
            for v in vals[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
            j_next *= 1e-250;
            j_cur *= 1e-250;
            norm *= 1e-250;
        }
        if (n - 1) % 2 == 0 && n - 1 > 0 {
            norm += 2.0 * j_cur;
        }
    }
    norm += vals[0];
    for (n, o) in out.iter_mut().enumerate() {
        let v = vals[n] / norm;
        *o = if x < 0.0 && n % 2 == 1 { -v } else { v };
    }
    out
}

/// Principal branch W₀(x) for x ≥ −1/e, Halley iteration to 1e−13.
pub fn lambert_w(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x < branch {
        if x > branch - 1e-15 {
            return Ok(-1.0);
        }
        return invalid(format!("lambert_w needs x >= -1/e, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch {
        return Ok(-1.0);
    }
    let mut w = if x > E {
        let l = x.ln();
        l - l.ln()
    } else if x < -0.25 {
        let p = (2.0 * (E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        x.ln_1p()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-13 * w.abs().max(1.0) {
            break;
        }
    }
    Ok(w)
}
