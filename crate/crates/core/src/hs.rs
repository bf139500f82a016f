//! Hamiltonian simulation by QSVT: the U_exp block-encoding of κe^{−iHt}/2,
//! its amplification by OAA (T₃) or FPAA (sign polynomial), the
//! shift-and-rescale encoding for indefinite H, repetition in time, and
//! query counting for both methods.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polyapprox::{build_sign_poly, build_trig_polys, sign_degree, truncation_index_closed};
use crate::qsp::{find_phases, DEFAULT_TOL};
use crate::simulator::{gates, hermitian_eigen, hermiticity_defect, CMatrix, Circuit, Control, DenseUnitary};

/// OAA phases in the reflection convention, realising T₃.
pub const OAA_PHASES: [f64; 4] = [-3.0 * FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2];

/// What a block-encoding was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EncodingKind {
    Base,
    Shifted,
    Exp { t: f64, eps_tri: f64, kappa: f64, r: usize },
    Oaa { t: f64, eps_tri: f64, r: usize },
    Fpaa { t: f64, eps_tri: f64, eps_sign: f64, d: usize, r: usize },
    Repeated { steps: usize },
}

/// Circuit U together with (α, a, ε): ‖A − α⟨0|_a U|0⟩_a‖ ≤ ε.
#[derive(Debug, Clone)]
pub struct BlockEncodedOp {
    circuit: Arc<Circuit>,
    alpha: f64,
    n_anc: usize,
    err: f64,
    queries: usize,
    degree: usize,
    kind: EncodingKind,
}

impl BlockEncodedOp {
    /// Base encoding from an explicit unitary; counts as one query.
    pub fn from_unitary(unitary: DenseUnitary, alpha: f64, n_anc: usize, err: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(err >= 0.0) {
            return invalid("alpha must be positive and err non-negative");
        }
        if n_anc >= unitary.n_qubits() {
            return invalid("n_anc must be smaller than the unitary width");
        }
        let mut c = Circuit::new(unitary.n_qubits())?;
        c.dense(Arc::new(unitary), false, &[])?;
        Ok(Self {
            circuit: Arc::new(c),
            alpha,
            n_anc,
            err,
            queries: 1,
            degree: 0,
            kind: EncodingKind::Base,
        })
    }

    pub fn circuit(&self) -> &Arc<Circuit> {
        &self.circuit
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn n_anc(&self) -> usize {
        self.n_anc
    }
    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits()
    }
    pub fn n_system(&self) -> usize {
        self.circuit.n_qubits() - self.n_anc
    }
    pub fn err(&self) -> f64 {
        self.err
    }
    pub fn queries(&self) -> usize {
        self.queries
    }
    /// Total QSP degree used, for phase-tolerance slack.
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn unitary(&self) -> Result<DenseUnitary> {
        self.circuit.to_unitary()
    }

    /// ⟨0|_a U|0⟩_a (not multiplied by α).
    pub fn block(&self) -> Result<CMatrix> {
        self.circuit.block(self.n_anc)
    }
}

/// X on `target` when every qubit of `anc` is |0⟩.
fn zero_controlled_x(c: &mut Circuit, anc: std::ops::Range<usize>, target: usize) -> Result<()> {
    let controls: Vec<Control> = anc.map(Control::zero).collect();
    c.gate(gates::x(), &[target], &controls)?;
    Ok(())
}

/// e^{(−1)^{target} iφΠ} with Π = 2|0⟩⟨0|_anc − I, optionally controlled.
fn phase_modulation(
    c: &mut Circuit,
    anc: std::ops::Range<usize>,
    target: usize,
    phi: f64,
    control: Option<Control>,
) -> Result<()> {
    zero_controlled_x(c, anc.clone(), target)?;
    let ctl: Vec<Control> = control.into_iter().collect();
    c.gate(gates::rz(phi), &[target], &ctl)?;
    zero_controlled_x(c, anc, target)
}

fn check_psd_unit(u_h: &BlockEncodedOp) -> Result<()> {
    if (u_h.alpha - 1.0).abs() > 1e-12 {
        return invalid("build_u_exp needs an encoding with alpha = 1");
    }
    let block = u_h.block()?;
    if hermiticity_defect(&block) > 1e-10 {
        return invalid("encoded matrix is not Hermitian");
    }
    let (vals, _) = hermitian_eigen(&block);
    if vals.iter().any(|&l| l < -1e-10 || l > 1.0 + 1e-10) {
        return invalid("encoded matrix must be positive semidefinite with norm at most 1");
    }
    Ok(())
}

/// (1, a+2, κ·ε_tri)-block-encoding of κe^{−iHt}/2.
pub fn build_u_exp(u_h: &BlockEncodedOp, t: f64, eps_tri: f64) -> Result<BlockEncodedOp> {
    check_psd_unit(u_h)?;
    let tp = build_trig_polys(t, eps_tri)?;
    let pc = find_phases(&tp.cos, DEFAULT_TOL)?;
    let ps = find_phases(&tp.sin, DEFAULT_TOL)?;
    let (fc, fs) = (pc.phases(), ps.phases());
    let r = tp.r;

    let s = u_h.n_system();
    let a = u_h.n_anc;
    let anc = s..s + a;
    let (b, cq) = (s + a, s + a + 1);
    let mut c = Circuit::new(s + a + 2)?;
    c.gate(gates::h(), &[cq], &[])?;
    c.gate(gates::h(), &[b], &[])?;

    let s2 = |c: &mut Circuit, j: usize| -> Result<()> {
        zero_controlled_x(c, anc.clone(), b)?;
        c.gate(gates::rz(fc[2 * r - j]), &[b], &[Control::zero(cq)])?;
        c.gate(gates::rz(fs[2 * r + 1 - j]), &[b], &[Control::one(cq)])?;
        zero_controlled_x(c, anc.clone(), b)
    };
    s2(&mut c, 0)?;
    for m in 1..=2 * r {
        c.sub(u_h.circuit.clone(), m % 2 == 0, &[])?;
        s2(&mut c, m)?;
    }
    c.sub(u_h.circuit.clone(), false, &[Control::one(cq)])?;
    phase_modulation(&mut c, anc.clone(), b, fs[0], Some(Control::one(cq)))?;
    c.gate(gates::p(-FRAC_PI_2), &[cq], &[])?;
    c.gate(gates::h(), &[cq], &[])?;
    c.gate(gates::h(), &[b], &[])?;

    Ok(BlockEncodedOp {
        circuit: Arc::new(c),
        alpha: 1.0,
        n_anc: a + 2,
        err: tp.kappa * eps_tri,
        queries: (2 * r + 1) * u_h.queries,
        degree: 4 * r + 1,
        kind: EncodingKind::Exp {
            t,
            eps_tri,
            kappa: tp.kappa,
            r,
        },
    })
}

/// Adds one qubit `d` above `u`, applies the reflection-convention sequence
/// `phases` with Π over u's ancillas, and returns the circuit.
fn qsvt_with_flag(u: &BlockEncodedOp, phases: &[f64], hadamard: bool) -> Result<Circuit> {
    let w = u.n_qubits();
    let anc = u.n_system()..w;
    let d = w;
    let deg = phases.len() - 1;
    let mut c = Circuit::new(w + 1)?;
    if hadamard {
        c.gate(gates::h(), &[d], &[])?;
    }
    phase_modulation(&mut c, anc.clone(), d, phases[deg], None)?;
    for k in (0..deg).rev() {
        // oracle between φ_k and φ_{k+1}: U for even k when deg is odd
        let forward = (k % 2 == 0) == (deg % 2 == 1);
        c.sub(u.circuit.clone(), !forward, &[])?;
        phase_modulation(&mut c, anc.clone(), d, phases[k], None)?;
    }
    if hadamard {
        c.gate(gates::h(), &[d], &[])?;
    }
    Ok(c)
}

fn exp_params(u_exp: &BlockEncodedOp) -> Result<(f64, f64, f64, usize)> {
    match u_exp.kind {
        EncodingKind::Exp { t, eps_tri, kappa, r } => Ok((t, eps_tri, kappa, r)),
        _ => invalid("expected a U_exp encoding"),
    }
}

/// e^{−iHt} from three uses of U_exp; the flag qubit d is returned to |0⟩
/// and the −1 of T₃(1/2) is removed by XZX on d.
pub fn build_oaa(u_exp: &BlockEncodedOp) -> Result<BlockEncodedOp> {
    let (t, eps_tri, _, r) = exp_params(u_exp)?;
    let mut c = qsvt_with_flag(u_exp, &OAA_PHASES, false)?;
    let d = u_exp.n_qubits();
    c.gate(gates::x(), &[d], &[])?;
    c.gate(gates::z(), &[d], &[])?;
    c.gate(gates::x(), &[d], &[])?;
    Ok(BlockEncodedOp {
        circuit: Arc::new(c),
        alpha: 1.0,
        n_anc: u_exp.n_anc + 1,
        err: 9.0 * eps_tri,
        queries: 3 * u_exp.queries,
        degree: 3 * u_exp.degree,
        kind: EncodingKind::Oaa { t, eps_tri, r },
    })
}

/// 2(ε_sign + √3·D·ε_tri)
pub fn fpaa_error(eps_sign: f64, d: usize, eps_tri: f64) -> f64 {
    2.0 * (eps_sign + 3f64.sqrt() * d as f64 * eps_tri)
}

/// e^{−iHt} from the odd sign polynomial applied to U_exp.
pub fn build_fpaa(u_exp: &BlockEncodedOp, eps_sign: f64) -> Result<BlockEncodedOp> {
    let (t, eps_tri, kappa, r) = exp_params(u_exp)?;
    let (_, d) = sign_degree(kappa, eps_sign)?;
    let poly = build_sign_poly(kappa, eps_sign)?;
    let eps_prime = eps_sign + 3f64.sqrt() * d as f64 * eps_tri;
    let target = poly.scaled(1.0 / (1.0 + eps_prime));
    let phases = find_phases(&target, DEFAULT_TOL)?;
    let c = qsvt_with_flag(u_exp, phases.phases(), true)?;
    Ok(BlockEncodedOp {
        circuit: Arc::new(c),
        alpha: 1.0,
        n_anc: u_exp.n_anc + 1,
        err: fpaa_error(eps_sign, d, eps_tri),
        queries: d * u_exp.queries,
        degree: d * u_exp.degree,
        kind: EncodingKind::Fpaa {
            t,
            eps_tri,
            eps_sign,
            d,
            r,
        },
    })
}

/// U′ with the effective time and the global phase picked up by
/// e^{−i(H/α+I)t_eff/2} relative to e^{−iHt}.
#[derive(Debug, Clone)]
pub struct ShiftedEncoding {
    pub op: BlockEncodedOp,
    pub t_eff: f64,
    pub phase: C64,
}

/// (1, a+1, ε/2α)-block-encoding of (H/α + I)/2: Hadamard, U controlled on
/// |0⟩ of a new ancilla, Hadamard.
pub fn shift_rescale_encoding(u: &BlockEncodedOp, t: f64) -> Result<ShiftedEncoding> {
    if !t.is_finite() {
        return invalid("t must be finite");
    }
    let w = u.n_qubits();
    let mut c = Circuit::new(w + 1)?;
    c.gate(gates::h(), &[w], &[])?;
    c.sub(u.circuit.clone(), false, &[Control::zero(w)])?;
    c.gate(gates::h(), &[w], &[])?;
    let t_eff = 2.0 * u.alpha * t;
    Ok(ShiftedEncoding {
        op: BlockEncodedOp {
            circuit: Arc::new(c),
            alpha: 1.0,
            n_anc: u.n_anc + 1,
            err: u.err / (2.0 * u.alpha),
            queries: u.queries,
            degree: u.degree,
            kind: EncodingKind::Shifted,
        },
        t_eff,
        phase: C64::from_polar(1.0, -t_eff / 2.0),
    })
}

/// N_t sequential copies of `step` with no ancilla reset in between.
pub fn extend_time(step: &BlockEncodedOp, n_t: usize) -> Result<BlockEncodedOp> {
    if n_t == 0 {
        return invalid("n_t must be at least 1");
    }
    if n_t == 1 {
        return Ok(step.clone());
    }
    let mut c = Circuit::new(step.n_qubits())?;
    for _ in 0..n_t {
        c.sub(step.circuit.clone(), false, &[])?;
    }
    Ok(BlockEncodedOp {
        circuit: Arc::new(c),
        alpha: step.alpha,
        n_anc: step.n_anc,
        err: n_t as f64 * step.err,
        queries: n_t * step.queries,
        degree: n_t * step.degree,
        kind: EncodingKind::Repeated { steps: n_t },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oaa,
    Fpaa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryCount {
    pub method: Method,
    pub t: f64,
    pub eps: f64,
    pub q: usize,
    pub r: usize,
    pub d: Option<usize>,
    pub eps_tri: f64,
    pub eps_sign: Option<f64>,
}

impl QueryCount {
    /// Q recomputed from the breakdown.
    pub fn recomputed(&self) -> usize {
        match self.method {
            Method::Oaa => 3 * (2 * self.r + 1),
            Method::Fpaa => self.d.unwrap_or(0) * (2 * self.r + 1),
        }
    }
}

/// Number of ε_tri grid points searched for FPAA.
pub const FPAA_GRID: usize = 40;

pub fn query_count(method: Method, t: f64, eps: f64) -> Result<QueryCount> {
    if !(eps > 0.0 && eps <= 0.9) {
        return invalid(format!("eps must lie in (0, 0.9], got {eps}"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be positive, got {t}"));
    }
    match method {
        Method::Oaa => {
            let eps_tri = eps / 9.0;
            let r = truncation_index_closed(t, eps_tri)?;
            Ok(QueryCount {
                method,
                t,
                eps,
                q: 3 * (2 * r + 1),
                r,
                d: None,
                eps_tri,
                eps_sign: None,
            })
        }
        Method::Fpaa => fpaa_query_count(t, eps),
    }
}

fn fpaa_query_count(t: f64, eps: f64) -> Result<QueryCount> {
    let cap = (2.0 / (std::f64::consts::E * PI)).sqrt();
    let lo = 1e-14f64.ln();
    let hi = (eps / (2.0 * 3f64.sqrt())).ln();
    let mut best: Option<QueryCount> = None;
    for i in 0..FPAA_GRID {
        let eps_tri = (lo + (hi - lo) * i as f64 / (FPAA_GRID - 1) as f64).exp();
        let kappa = 1.0 / (1.0 + eps_tri);
        let mut es = (eps / 2.0).min(cap);
        let mut feasible = true;
        for _ in 0..20 {
            let (_, d) = sign_degree(kappa, es)?;
            let next = eps / 2.0 - 3f64.sqrt() * d as f64 * eps_tri;
            if next <= 0.0 {
                feasible = false;
                break;
            }
            es = next.min(cap);
        }
        if !feasible {
            continue;
        }
        let (_, d) = sign_degree(kappa, es)?;
        if fpaa_error(es, d, eps_tri) > eps * (1.0 + 1e-12) {
            continue;
        }
        let r = truncation_index_closed(t, eps_tri)?;
        let q = d * (2 * r + 1);
        if best.is_none_or(|b| q < b.q) {
            best = Some(QueryCount {
                method: Method::Fpaa,
                t,
                eps,
                q,
                r,
                d: Some(d),
                eps_tri,
                eps_sign: Some(es),
            });
        }
    }
    best.ok_or_else(|| Error::Infeasible(format!("no FPAA grid point meets eps={eps}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyapprox::{chebyshev_t, truncation_index};
    use crate::simulator::{direct_block_encoding, expm_hermitian, op_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let d = 1 << n;
        let a = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = &a * a.adjoint();
        let norm = op_norm(&h);
        let scale = rng.random_range(0.3..1.0) / norm;
        h.map(|z| z * scale)
    }

    fn base(h: &CMatrix) -> BlockEncodedOp {
        BlockEncodedOp::from_unitary(direct_block_encoding(h, 1.0).unwrap(), 1.0, 1, 0.0).unwrap()
    }

    #[test]
    fn t3_half_is_minus_one() {
        assert_eq!(chebyshev_t(3, 0.5), -1.0);
    }

    #[test]
    fn u_exp_zero_hamiltonian() {
        let u = build_u_exp(&base(&CMatrix::zeros(2, 2)), 1.0, 1e-3).unwrap();
        let kappa = 1.0 / (1.0 + 1e-3);
        let want = CMatrix::identity(2, 2).map(|z| z * kappa / 2.0);
        let diff = op_norm(&(u.block().unwrap() - want));
        assert!(diff <= kappa * 1e-3 + u.degree() as f64 * 1e-8);
        assert_eq!(u.queries(), 2 * truncation_index(1.0, 1e-3).unwrap() + 1);
        assert_eq!(u.n_anc(), 3);
    }

    #[test]
    fn u_exp_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_psd(2, &mut rng);
        let u = build_u_exp(&base(&h), 1.0, 1e-3).unwrap();
        let kappa = 1.0 / (1.0 + 1e-3);
        let want = expm_hermitian(&h, 1.0).map(|z| z * kappa / 2.0);
        let diff = op_norm(&(u.block().unwrap() - want));
        assert!(diff <= kappa * 1e-3 + u.degree() as f64 * 1e-8, "diff {diff}");
        let uu = u.unitary().unwrap();
        assert_eq!(uu.n_qubits(), 5);
    }

    #[test]
    fn u_exp_rejects_indefinite() {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(-0.5, 0.0), C64::new(0.5, 0.0)]));
        assert!(build_u_exp(&base(&h), 1.0, 1e-3).is_err());
    }

    #[test]
    fn oaa_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_psd(2, &mut rng);
        let u = build_u_exp(&base(&h), 2.0, 1e-3 / 9.0).unwrap();
        let oaa = build_oaa(&u).unwrap();
        let diff = op_norm(&(oaa.block().unwrap() - expm_hermitian(&h, 2.0)));
        assert!(diff <= 1e-3 + oaa.degree() as f64 * 1e-8, "diff {diff}");
        let r = match u.kind() {
            EncodingKind::Exp { r, .. } => r,
            _ => unreachable!(),
        };
        assert_eq!(oaa.queries(), 3 * (2 * r + 1));
    }

    #[test]
    fn fpaa_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_psd(1, &mut rng);
        let u = build_u_exp(&base(&h), 1.0, 1e-5).unwrap();
        let f = build_fpaa(&u, 0.01).unwrap();
        let EncodingKind::Fpaa { d, r, .. } = f.kind() else { unreachable!() };
        assert_eq!(f.err(), 2.0 * (0.01 + 3f64.sqrt() * d as f64 * 1e-5));
        assert_eq!(f.queries(), d * (2 * r + 1));
        let diff = op_norm(&(f.block().unwrap() - expm_hermitian(&h, 1.0)));
        assert!(diff <= f.err() + f.degree() as f64 * 1e-8, "diff {diff}");
    }

    #[test]
    fn shift_rescale_examples() {
        let alpha = 2.0;
        for sign in [-1.0, 1.0] {
            let h = CMatrix::identity(2, 2).map(|z| z * sign * alpha);
            let u = BlockEncodedOp::from_unitary(direct_block_encoding(&h, alpha).unwrap(), alpha, 1, 0.0).unwrap();
            let sh = shift_rescale_encoding(&u, 0.5).unwrap();
            let want = CMatrix::identity(2, 2).map(|z| z * (sign + 1.0) / 2.0);
            assert!(op_norm(&(sh.op.block().unwrap() - want)) < 1e-12);
            assert_eq!(sh.t_eff, 2.0);
        }
    }

    #[test]
    fn extend_time_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_psd(1, &mut rng);
        let step = build_oaa(&build_u_exp(&base(&h), 0.5, 1e-4 / 9.0).unwrap()).unwrap();
        let one = extend_time(&step, 1).unwrap();
        assert_eq!(one.err(), step.err());
        let three = extend_time(&step, 3).unwrap();
        assert!(three.err() <= 3.0 * step.err() * (1.0 + 1e-15));
        let diff = op_norm(&(three.block().unwrap() - expm_hermitian(&h, 1.5)));
        assert!(diff <= three.err() + three.degree() as f64 * 1e-8);
        assert!(extend_time(&step, 0).is_err());
    }

    #[test]
    fn query_count_examples() {
        let q = query_count(Method::Oaa, 5.0, 1e-3).unwrap();
        assert_eq!(q.q, q.recomputed());
        // closed form: r(5e/2, 5e-3/36) = 14 -> R = 7
        assert_eq!(q.r, 7);
        assert_eq!(q.q, 45);
        let f = query_count(Method::Fpaa, 5.0, 1e-3).unwrap();
        assert_eq!(f.q, f.recomputed());
        assert!(f.q >= q.q);
        assert!(query_count(Method::Oaa, 1.0, 0.95).is_err());
    }
}
