//! Quantum signal processing phase factors: evaluation in the Wx and
//! reflection conventions, conversion between them, numerical phase finding
//! and the real-part (Φ, −Φ) construction.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polyapprox::{ChebyshevSeries, Parity};

/// Default node-residual tolerance for [`find_phases`].
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// Signal W(x) = e^{i arccos(x) X}.
    Wx,
    /// Signal R(x) = [[x, √(1−x²)], [√(1−x²), −x]].
    Reflection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSequence {
    convention: Convention,
    phases: Vec<f64>,
    residual: f64,
}

impl PhaseSequence {
    pub fn new(convention: Convention, phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return invalid("phase sequence needs at least one phase");
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return invalid("non-finite phase");
        }
        Ok(Self {
            convention,
            phases,
            residual: 0.0,
        })
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
    pub fn degree(&self) -> usize {
        self.phases.len() - 1
    }
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// The sequence −Φ.
    pub fn negated(&self) -> Self {
        Self {
            convention: self.convention,
            phases: self.phases.iter().map(|p| -p).collect(),
            residual: self.residual,
        }
    }
}

type M2 = [[C64; 2]; 2];

fn signal(conv: Convention, x: f64) -> M2 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    match conv {
        Convention::Wx => [[C64::new(x, 0.0), C64::new(0.0, s)], [C64::new(0.0, s), C64::new(x, 0.0)]],
        Convention::Reflection => [[C64::new(x, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-x, 0.0)]],
    }
}

/// Row vector times 2×2 matrix.
fn row_mul(v: [C64; 2], m: &M2) -> [C64; 2] {
    [v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]]
}

fn mat_col(m: &M2, v: [C64; 2]) -> [C64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn zphase(phi: f64) -> [C64; 2] {
    [C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi)]
}

/// ⟨0| e^{iφ₀Z} Π_k (S(x) e^{iφ_k Z}) |0⟩.
fn eval_raw(conv: Convention, phases: &[f64], x: f64) -> C64 {
    let sig = signal(conv, x);
    let p0 = zphase(phases[0]);
    let mut v = [p0[0], C64::new(0.0, 0.0)];
    for &phi in &phases[1..] {
        v = row_mul(v, &sig);
        let p = zphase(phi);
        v = [v[0] * p[0], v[1] * p[1]];
    }
    v[0]
}

pub fn eval_qsp(phases: &PhaseSequence, x: f64) -> Result<C64> {
    if !(x.abs() <= 1.0) {
        return invalid(format!("qsp argument {x} outside [-1, 1]"));
    }
    Ok(eval_raw(phases.convention, &phases.phases, x))
}

/// Wrap into (−π, π].
fn wrap(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

pub fn wx_to_reflection(phases: &PhaseSequence) -> Result<PhaseSequence> {
    if phases.convention != Convention::Wx {
        return invalid("wx_to_reflection expects a Wx sequence");
    }
    let d = phases.degree();
    if d < 1 {
        return invalid("wx_to_reflection needs degree >= 1");
    }
    let mut out = Vec::with_capacity(d + 1);
    out.push(phases.phases[0] + (2 * d - 1) as f64 * FRAC_PI_4);
    for k in 1..d {
        out.push(wrap(phases.phases[k] - FRAC_PI_2));
    }
    out.push(wrap(phases.phases[d] - FRAC_PI_4));
    Ok(PhaseSequence {
        convention: Convention::Reflection,
        phases: out,
        residual: phases.residual,
    })
}

/// Chebyshev nodes of T_{n}: cos((2j+1)π/(2n)), j = 0..n.
fn cheb_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

/// Expand reduced symmetric phases to the full length d+1 sequence.
fn expand(reduced: &[f64], d: usize) -> Vec<f64> {
    (0..=d).map(|k| reduced[k.min(d - k)]).collect()
}

/// Residual Re⟨0|W_Φ|0⟩ − f at the nodes and its Jacobian in the reduced
/// symmetric parameters.
fn residual_and_jacobian(
    reduced: &[f64],
    d: usize,
    nodes: &[f64],
    f: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let m = reduced.len();
    let phases = expand(reduced, d);
    let mut res = DVector::zeros(nodes.len());
    let mut jac = DMatrix::zeros(nodes.len(), m);
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut left = vec![[zero; 2]; d + 1];
    let mut right = vec![[zero; 2]; d + 1];
    for (row, &x) in nodes.iter().enumerate() {
        let w = signal(Convention::Wx, x);
        // left[k] = ⟨0| e^{iφ0Z} W ... W   (everything before e^{iφk Z})
        let mut v = [one, zero];
        for k in 0..=d {
            if k > 0 {
                v = row_mul(v, &w);
            }
            left[k] = v;
            let p = zphase(phases[k]);
            v = [v[0] * p[0], v[1] * p[1]];
        }
        res[row] = v[0].re - f[row];
        // right[k] = W e^{iφ_{k+1}Z} ... |0⟩  (everything after e^{iφk Z})
        let mut u = [one, zero];
        for k in (0..=d).rev() {
            right[k] = u;
            let p = zphase(phases[k]);
            u = [p[0] * u[0], p[1] * u[1]];
            if k > 0 {
                u = mat_col(&w, u);
            }
        }
        for k in 0..=d {
            let p = zphase(phases[k]);
            let r = right[k];
            // d/dφ e^{iφZ} = iZ e^{iφZ}
            let dk = left[k][0] * C64::new(0.0, 1.0) * p[0] * r[0]
                - left[k][1] * C64::new(0.0, 1.0) * p[1] * r[1];
            jac[(row, k.min(d - k))] += dk.re;
        }
    }
    (res, jac)
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Damped Newton / Levenberg-Marquardt solve for symmetric Wx phases.
fn solve_symmetric(d: usize, f: &[f64], nodes: &[f64], start: Vec<f64>, tol: f64) -> (Vec<f64>, f64, usize) {
    let mut theta = start;
    let (mut res, mut jac) = residual_and_jacobian(&theta, d, nodes, f);
    let mut norm = res.norm();
    let mut lambda = 0.0;
    let mut iters = 0;
    for it in 0..200 {
        iters = it;
        if max_abs(&res) <= (tol * 1e-3).max(1e-15) {
            break;
        }
        let step = if lambda == 0.0 {
            jac.clone().lu().solve(&(-&res))
        } else {
            let jt = jac.transpose();
            let mut a = &jt * &jac;
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * (1.0 + a[(i, i)]);
            }
            a.cholesky().map(|c| c.solve(&(-(&jt * &res))))
        };
        let Some(step) = step else {
            lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
            continue;
        };
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..12 {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + scale * b).collect();
            let (r2, j2) = residual_and_jacobian(&trial, d, nodes, f);
            let n2 = r2.norm();
            if n2 < norm {
                theta = trial;
                res = r2;
                jac = j2;
                norm = n2;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if accepted {
            lambda = if lambda > 0.0 { lambda / 10.0 } else { 0.0 };
            if lambda < 1e-12 {
                lambda = 0.0;
            }
        } else {
            lambda = if lambda == 0.0 { 1e-6 } else { lambda * 10.0 };
            if lambda > 1e8 {
                break;
            }
        }
    }
    (theta, max_abs(&res), iters)
}

/// Reflection-convention phases whose Re⟨0|R_Φ(x)|0⟩ reproduces `target`
/// at the d+1 Chebyshev nodes to within `tol`.
pub fn find_phases(target: &ChebyshevSeries, tol: f64) -> Result<PhaseSequence> {
    if !(tol > 0.0) {
        return invalid("tol must be positive");
    }
    let sup = target.sampled_sup(crate::polyapprox::CERT_POINTS.max(4 * target.degree() + 1));
    if sup > 1.0 + 1e-12 {
        return invalid(format!("target sup-norm {sup} exceeds 1"));
    }
    let d = target.degree();
    let check_nodes = cheb_nodes(d + 1);
    if d == 0 {
        let c0 = target.coeffs()[0].clamp(-1.0, 1.0);
        let seq = PhaseSequence::new(Convention::Reflection, vec![c0.acos()])?;
        return finish(seq, target, &check_nodes, tol, 0);
    }

    let m = d / 2 + 1;
    let nodes: Vec<f64> = (1..=m)
        .map(|j| ((2 * j - 1) as f64 * PI / (4 * m) as f64).cos())
        .collect();
    let f: Vec<f64> = nodes.iter().map(|&x| target.eval_unchecked(x)).collect();

    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    for attempt in 0..4 {
        let mut start = vec![0.0; m];
        start[0] = FRAC_PI_4;
        if attempt > 0 {
            // deterministic perturbation for restarts
            for (i, s) in start.iter_mut().enumerate() {
                *s += 0.05 * attempt as f64 * ((i as f64 + 1.0) * 1.618).sin();
            }
        }
        let (theta, r, it) = solve_symmetric(d, &f, &nodes, start, tol);
        let better = best.as_ref().is_none_or(|b| r < b.1);
        if better {
            best = Some((theta, r, it));
        }
        if best.as_ref().unwrap().1 <= tol * 1e-3 {
            break;
        }
    }
    let (theta, _, iters) = best.unwrap();
    let wx = PhaseSequence::new(Convention::Wx, expand(&theta, d))?;
    finish(wx_to_reflection(&wx)?, target, &check_nodes, tol, iters)
}

fn finish(
    mut seq: PhaseSequence,
    target: &ChebyshevSeries,
    nodes: &[f64],
    tol: f64,
    iterations: usize,
) -> Result<PhaseSequence> {
    let residual = nodes
        .iter()
        .map(|&x| (eval_raw(seq.convention, &seq.phases, x).re - target.eval_unchecked(x)).abs())
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::PhaseFinding {
            residual,
            iterations,
        });
    }
    seq.residual = residual;
    Ok(seq)
}

/// Controlled pair realising the real part of a reflection-convention
/// polynomial: control |0⟩ runs R_Φ, control |1⟩ runs R_{−Φ}, with
/// Hadamards on the control.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPartPair {
    pub plus: PhaseSequence,
    pub minus: PhaseSequence,
}

impl RealPartPair {
    /// The 4×4 unitary (H ⊗ I)(|0⟩⟨0| ⊗ R_Φ + |1⟩⟨1| ⊗ R_{−Φ})(H ⊗ I) with
    /// the control as the most significant qubit.
    pub fn unitary(&self, x: f64) -> Result<DMatrix<C64>> {
        if !(x.abs() <= 1.0) {
            return invalid(format!("qsp argument {x} outside [-1, 1]"));
        }
        let a = sequence_matrix(&self.plus, x);
        let b = sequence_matrix(&self.minus, x);
        let mut out = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let s = (a[i][j] + b[i][j]) * 0.5;
                let dlt = (a[i][j] - b[i][j]) * 0.5;
                out[(i, j)] = s;
                out[(i + 2, j + 2)] = s;
                out[(i, j + 2)] = dlt;
                out[(i + 2, j)] = dlt;
            }
        }
        Ok(out)
    }

    /// Upper-left entry (P + P*)/2 of [`Self::unitary`].
    pub fn eval(&self, x: f64) -> Result<C64> {
        Ok(self.unitary(x)?[(0, 0)])
    }
}

fn sequence_matrix(seq: &PhaseSequence, x: f64) -> M2 {
    let sig = signal(seq.convention, x);
    let p0 = zphase(seq.phases[0]);
    let zero = C64::new(0.0, 0.0);
    let mut m: M2 = [[p0[0], zero], [zero, p0[1]]];
    for &phi in &seq.phases[1..] {
        let r0 = row_mul(m[0], &sig);
        let r1 = row_mul(m[1], &sig);
        let p = zphase(phi);
        m = [[r0[0] * p[0], r0[1] * p[1]], [r1[0] * p[0], r1[1] * p[1]]];
    }
    m
}

pub fn real_part_pair(phases: &PhaseSequence) -> Result<RealPartPair> {
    if phases.convention != Convention::Reflection {
        return invalid("real_part_pair expects a Reflection sequence");
    }
    Ok(RealPartPair {
        plus: phases.clone(),
        minus: phases.negated(),
    })
}

/// Parity of the polynomial a sequence of degree d realises.
pub fn parity_of(seq: &PhaseSequence) -> Parity {
    Parity::of_degree(seq.degree())
}
