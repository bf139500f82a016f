//! Dense statevector and unitary emulation for up to 16 qubits.
//!
//! Qubit 0 is the least significant bit of a basis index. Ancilla registers
//! sit on the most significant qubits, so projecting them onto |0⟩ selects
//! the top-left block of a unitary.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};

pub type CMatrix = DMatrix<C64>;

pub const MAX_QUBITS: usize = 16;
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn qubits_of_dim(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

fn check_width(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return invalid(format!("{n} qubits exceeds the cap of {MAX_QUBITS}"));
    }
    Ok(())
}

/// max_ij |(U†U − I)_ij|
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let p = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for j in 0..p.ncols() {
        for i in 0..p.nrows() {
            let want = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - want).norm());
        }
    }
    worst
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0, |a, &b| a.max(b))
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    // nalgebra's QR iteration returns NaN on some inputs with large zero
    // blocks; zero rows are split off as exact zero eigenpairs.
    let n = h.nrows();
    let scale = h.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let keep: Vec<usize> = (0..n).filter(|&i| h.row(i).iter().any(|z| z.norm() > 0.0)).collect();
    let mut vals = vec![0.0; n];
    let mut vecs = CMatrix::zeros(n, n);
    let mut col = 0;
    for i in 0..n {
        if keep.binary_search(&i).is_err() {
            vecs[(i, col)] = C64::new(1.0, 0.0);
            col += 1;
        }
    }
    if keep.is_empty() {
        return (vals, vecs);
    }
    let sub = h.select_rows(&keep).select_columns(&keep).map(|z| z / scale);
    let finite = |v: &nalgebra::DVector<f64>| v.iter().all(|x| x.is_finite());
    let eig = match sub.clone().try_symmetric_eigen(f64::EPSILON, 0) {
        Some(e) if finite(&e.eigenvalues) => e,
        _ => sub
            .try_symmetric_eigen(1e-14, 100_000)
            .filter(|e| finite(&e.eigenvalues))
            .expect("eigendecomposition did not converge"),
    };
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        vals[col] = lam * scale;
        for (r, &i) in keep.iter().enumerate() {
            vecs[(i, col)] = eig.eigenvectors[(r, k)];
        }
        col += 1;
    }
    (vals, vecs)
}

/// max |H − H†|
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    (h - h.adjoint()).iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// V diag(g(λ)) V† for Hermitian H.
pub fn hermitian_function(h: &CMatrix, g: impl Fn(f64) -> C64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let gj = g(l);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= gj);
    }
    scaled * vecs.adjoint()
}

/// e^{−iHt} by eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(h, |l| C64::from_polar(1.0, -l * t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseUnitary {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DenseUnitary {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return invalid("unitary must be square");
        }
        let Some(n) = qubits_of_dim(matrix.nrows()) else {
            return invalid("unitary dimension must be a power of two");
        };
        check_width(n)?;
        let defect = unitarity_defect(&matrix);
        if defect > UNITARY_TOL {
            return invalid(format!("matrix is not unitary (defect {defect:e})"));
        }
        Ok(Self { n_qubits: n, matrix })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: CMatrix::identity(d, d),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn apply(&self, state: &StateVec) -> Result<StateVec> {
        if state.n_qubits != self.n_qubits {
            return invalid("state and unitary widths differ");
        }
        let v = nalgebra::DVector::from_column_slice(&state.amps);
        let out = &self.matrix * v;
        Ok(StateVec {
            n_qubits: self.n_qubits,
            amps: out.iter().copied().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVec {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVec {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let Some(n) = qubits_of_dim(amps.len()) else {
            return invalid("state length must be a power of two");
        };
        check_width(n)?;
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-10 {
            return invalid(format!("state is not normalized (norm² = {norm2})"));
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return invalid("cannot normalize a zero vector");
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(amps)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_width(n_qubits)?;
        if index >= 1 << n_qubits {
            return invalid("basis index out of range");
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Append `extra` ancilla qubits in |0⟩ above the current register.
    pub fn with_ancillas(&self, extra: usize) -> Result<Self> {
        check_width(self.n_qubits + extra)?;
        let mut amps = vec![ZERO; 1 << (self.n_qubits + extra)];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        Ok(Self {
            n_qubits: self.n_qubits + extra,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn amps(&self) -> &[C64] {
        &self.amps
    }
    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Control qubit with polarity: `on = true` fires on |1⟩ (filled dot),
/// `on = false` fires on |0⟩ (open dot).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub on: bool,
}

impl Control {
    pub fn one(qubit: usize) -> Self {
        Self { qubit, on: true }
    }
    pub fn zero(qubit: usize) -> Self {
        Self { qubit, on: false }
    }
}

fn control_masks(controls: &[Control]) -> (usize, usize) {
    let mut mask = 0;
    let mut val = 0;
    for c in controls {
        mask |= 1 << c.qubit;
        if c.on {
            val |= 1 << c.qubit;
        }
    }
    (mask, val)
}

/// Gate applied to `targets` (targets[0] is the gate's least significant
/// bit) when every control matches.
fn apply_gate(amps: &mut [C64], gate: &CMatrix, adjoint: bool, targets: &[usize], cmask: usize, cval: usize) {
    let dim = 1usize << targets.len();
    let offsets: Vec<usize> = (0..dim)
        .map(|m| {
            targets
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, &t)| 1 << t)
                .sum()
        })
        .collect();
    let tmask: usize = targets.iter().map(|t| 1 << t).sum();
    let mut buf = vec![ZERO; dim];
    for base in 0..amps.len() {
        if base & tmask != 0 || base & cmask != cval {
            continue;
        }
        for (m, b) in buf.iter_mut().enumerate() {
            *b = amps[base | offsets[m]];
        }
        for (i, &oi) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (j, b) in buf.iter().enumerate() {
                let g = if adjoint { gate[(j, i)].conj() } else { gate[(i, j)] };
                acc += g * b;
            }
            amps[base | oi] = acc;
        }
    }
}

/// y = U x (or U† x) in place on a contiguous block.
fn apply_dense_block(block: &mut [C64], u: &CMatrix, adjoint: bool, scratch: &mut Vec<C64>) {
    let n = block.len();
    scratch.clear();
    scratch.resize(n, ZERO);
    if adjoint {
        for (i, s) in scratch.iter_mut().enumerate() {
            let col = u.column(i);
            let mut acc = ZERO;
            for (c, x) in col.iter().zip(block.iter()) {
                acc += c.conj() * x;
            }
            *s = acc;
        }
    } else {
        for (j, &xj) in block.iter().enumerate() {
            if xj == ZERO {
                continue;
            }
            for (s, c) in scratch.iter_mut().zip(u.column(j).iter()) {
                *s += c * xj;
            }
        }
    }
    block.copy_from_slice(scratch);
}

#[derive(Debug, Clone)]
enum Op {
    Gate {
        matrix: CMatrix,
        targets: Vec<usize>,
        cmask: usize,
        cval: usize,
    },
    /// Unitary on the lowest qubits.
    Dense {
        unitary: Arc<DenseUnitary>,
        adjoint: bool,
        cmask: usize,
        cval: usize,
    },
    /// Sub-circuit on the lowest qubits.
    Sub {
        circuit: Arc<Circuit>,
        adjoint: bool,
        cmask: usize,
        cval: usize,
    },
    Phase(C64),
}

/// Sequence of operations; the first pushed acts first.
#[derive(Debug, Clone)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        Ok(Self {
            n_qubits,
            ops: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn check_controls(&self, controls: &[Control], used: &[usize]) -> Result<()> {
        let mut seen: Vec<usize> = used.to_vec();
        for c in controls {
            if c.qubit >= self.n_qubits {
                return invalid(format!("control qubit {} out of range", c.qubit));
            }
            if seen.contains(&c.qubit) {
                return invalid(format!("qubit {} used twice", c.qubit));
            }
            seen.push(c.qubit);
        }
        Ok(())
    }

    pub fn gate(&mut self, matrix: CMatrix, targets: &[usize], controls: &[Control]) -> Result<&mut Self> {
        let k = targets.len();
        if k == 0 || matrix.nrows() != 1 << k || matrix.ncols() != 1 << k {
            return invalid("gate size does not match its targets");
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits {
                return invalid(format!("target qubit {t} out of range"));
            }
            if targets[..i].contains(&t) {
                return invalid(format!("qubit {t} used twice"));
            }
        }
        self.check_controls(controls, targets)?;
        let defect = unitarity_defect(&matrix);
        if defect > UNITARY_TOL {
            return invalid(format!("gate is not unitary (defect {defect:e})"));
        }
        let (cmask, cval) = control_masks(controls);
        self.ops.push(Op::Gate {
            matrix,
            targets: targets.to_vec(),
            cmask,
            cval,
        });
        Ok(self)
    }

    fn low_register(&self, width: usize, controls: &[Control]) -> Result<(usize, usize)> {
        if width > self.n_qubits {
            return invalid("sub-operation wider than circuit");
        }
        let low: Vec<usize> = (0..width).collect();
        self.check_controls(controls, &low)?;
        Ok(control_masks(controls))
    }

    /// Dense unitary on qubits 0..u.n_qubits().
    pub fn dense(&mut self, unitary: Arc<DenseUnitary>, adjoint: bool, controls: &[Control]) -> Result<&mut Self> {
        let (cmask, cval) = self.low_register(unitary.n_qubits, controls)?;
        self.ops.push(Op::Dense {
            unitary,
            adjoint,
            cmask,
            cval,
        });
        Ok(self)
    }

    /// Sub-circuit on qubits 0..circuit.n_qubits().
    pub fn sub(&mut self, circuit: Arc<Circuit>, adjoint: bool, controls: &[Control]) -> Result<&mut Self> {
        let (cmask, cval) = self.low_register(circuit.n_qubits, controls)?;
        self.ops.push(Op::Sub {
            circuit,
            adjoint,
            cmask,
            cval,
        });
        Ok(self)
    }

    pub fn phase(&mut self, phase: C64) -> &mut Self {
        self.ops.push(Op::Phase(phase));
        self
    }

    /// Apply to a raw amplitude slice of length 2^n_qubits.
    pub fn apply_slice(&self, amps: &mut [C64], adjoint: bool) {
        debug_assert_eq!(amps.len(), 1 << self.n_qubits);
        let mut scratch = Vec::new();
        let run = |op: &Op, amps: &mut [C64], scratch: &mut Vec<C64>| match op {
            Op::Gate {
                matrix,
                targets,
                cmask,
                cval,
            } => apply_gate(amps, matrix, adjoint, targets, *cmask, *cval),
            Op::Dense {
                unitary,
                adjoint: a,
                cmask,
                cval,
            } => {
                let w = 1 << unitary.n_qubits;
                for (h, block) in amps.chunks_mut(w).enumerate() {
                    if (h * w) & cmask == *cval {
                        apply_dense_block(block, &unitary.matrix, *a != adjoint, scratch);
                    }
                }
            }
            Op::Sub {
                circuit,
                adjoint: a,
                cmask,
                cval,
            } => {
                let w = 1 << circuit.n_qubits;
                for (h, block) in amps.chunks_mut(w).enumerate() {
                    if (h * w) & cmask == *cval {
                        circuit.apply_slice(block, *a != adjoint);
                    }
                }
            }
            Op::Phase(p) => {
                let p = if adjoint { p.conj() } else { *p };
                amps.iter_mut().for_each(|z| *z *= p);
            }
        };
        if adjoint {
            for op in self.ops.iter().rev() {
                run(op, amps, &mut scratch);
            }
        } else {
            for op in &self.ops {
                run(op, amps, &mut scratch);
            }
        }
    }

    pub fn apply(&self, state: &mut StateVec) -> Result<()> {
        if state.n_qubits != self.n_qubits {
            return invalid("state and circuit widths differ");
        }
        self.apply_slice(&mut state.amps, false);
        Ok(())
    }

    /// Columns U|j⟩ for the requested basis indices.
    pub fn columns(&self, indices: &[usize]) -> Vec<Vec<C64>> {
        indices
            .iter()
            .map(|&j| {
                let mut v = vec![ZERO; 1 << self.n_qubits];
                v[j] = ONE;
                self.apply_slice(&mut v, false);
                v
            })
            .collect()
    }

    /// Full unitary, one column per basis state.
    pub fn to_unitary(&self) -> Result<DenseUnitary> {
        let d = 1 << self.n_qubits;
        let idx: Vec<usize> = (0..d).collect();
        let cols = self.columns(&idx);
        let mut m = CMatrix::zeros(d, d);
        for (j, col) in cols.into_iter().enumerate() {
            m.column_mut(j).copy_from_slice(&col);
        }
        DenseUnitary::new(m)
    }

    /// ⟨0|_a U |0⟩_a for the top `n_anc` qubits, without forming U.
    pub fn block(&self, n_anc: usize) -> Result<CMatrix> {
        if n_anc >= self.n_qubits {
            return invalid("n_anc must be smaller than the circuit width");
        }
        let s = 1 << (self.n_qubits - n_anc);
        let idx: Vec<usize> = (0..s).collect();
        let cols = self.columns(&idx);
        let mut m = CMatrix::zeros(s, s);
        for (j, col) in cols.into_iter().enumerate() {
            m.column_mut(j).copy_from_slice(&col[..s]);
        }
        Ok(m)
    }
}

/// Standard single-qubit gates.
pub mod gates {
    use super::{CMatrix, C64};

    fn m2(a: [C64; 4]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &a)
    }

    pub fn x() -> CMatrix {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        m2([z, o, o, z])
    }
    pub fn z() -> CMatrix {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        m2([o, z, z, -o])
    }
    pub fn h() -> CMatrix {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        m2([s, s, s, -s])
    }
    /// e^{−iφZ}
    pub fn rz(phi: f64) -> CMatrix {
        let z = C64::new(0.0, 0.0);
        m2([C64::from_polar(1.0, -phi), z, z, C64::from_polar(1.0, phi)])
    }
    /// diag(1, e^{iλ})
    pub fn p(lambda: f64) -> CMatrix {
        let z = C64::new(0.0, 0.0);
        m2([C64::new(1.0, 0.0), z, z, C64::from_polar(1.0, lambda)])
    }
}

pub fn embed_gate(gate: &CMatrix, targets: &[usize], controls: &[Control], n_qubits: usize) -> Result<DenseUnitary> {
    let mut c = Circuit::new(n_qubits)?;
    c.gate(gate.clone(), targets, controls)?;
    c.to_unitary()
}

/// Product with the first listed factor acting first.
pub fn compose(sequence: &[DenseUnitary]) -> Result<DenseUnitary> {
    let Some(first) = sequence.first() else {
        return invalid("compose needs at least one unitary");
    };
    let n = first.n_qubits;
    let mut acc = first.matrix.clone();
    for u in &sequence[1..] {
        if u.n_qubits != n {
            return invalid("compose width mismatch");
        }
        acc = &u.matrix * acc;
    }
    Ok(DenseUnitary { n_qubits: n, matrix: acc })
}

pub fn project_block(u: &DenseUnitary, n_anc: usize) -> Result<CMatrix> {
    if n_anc >= u.n_qubits {
        return invalid("n_anc must be smaller than the number of qubits");
    }
    let s = 1 << (u.n_qubits - n_anc);
    Ok(u.matrix.view((0, 0), (s, s)).into_owned())
}

/// [[H/α, √(I−(H/α)²)], [√(I−(H/α)²), −H/α]] with the ancilla on top.
pub fn direct_block_encoding(h: &CMatrix, alpha: f64) -> Result<DenseUnitary> {
    if h.nrows() != h.ncols() || qubits_of_dim(h.nrows()).is_none() {
        return invalid("Hamiltonian must be square with power-of-two size");
    }
    check_width(qubits_of_dim(h.nrows()).unwrap() + 1)?;
    if !(alpha > 0.0) {
        return invalid("alpha must be positive");
    }
    let scale = h.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    if hermiticity_defect(h) > 1e-12 * scale {
        return invalid("Hamiltonian is not Hermitian");
    }
    let b = h.map(|z| z / alpha);
    let (vals, vecs) = hermitian_eigen(&b);
    if let Some(&worst) = vals.iter().max_by(|a, c| a.abs().total_cmp(&c.abs())) {
        if worst.abs() > 1.0 + 1e-12 {
            return invalid(format!("‖H‖ = {} exceeds alpha = {alpha}", worst.abs() * alpha));
        }
    }
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let mut s2 = 1.0 - l * l;
        if s2 < 1e-12 {
            s2 = s2.max(0.0);
        }
        let s = s2.min(1.0).sqrt();
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    let sq = scaled * vecs.adjoint();
    let n = b.nrows();
    let mut u = CMatrix::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&b);
    u.view_mut((0, n), (n, n)).copy_from(&sq);
    u.view_mut((n, 0), (n, n)).copy_from(&sq);
    u.view_mut((n, n), (n, n)).copy_from(&(-&b));
    DenseUnitary::new(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn cnot_flips_target() {
        let cnot = embed_gate(&gates::x(), &[0], &[Control::one(1)], 2).unwrap();
        let out = cnot.apply(&StateVec::basis(2, 0b10).unwrap()).unwrap();
        assert_eq!(out.amps()[0b11], ONE);
    }

    #[test]
    fn open_control_fires_on_zero() {
        let g = embed_gate(&gates::x(), &[0], &[Control::zero(1)], 2).unwrap();
        assert_eq!(g.apply(&StateVec::basis(2, 0b00).unwrap()).unwrap().amps()[0b01], ONE);
        assert_eq!(g.apply(&StateVec::basis(2, 0b10).unwrap()).unwrap().amps()[0b10], ONE);
    }

    #[test]
    fn embed_hadamard_is_kron() {
        let g = embed_gate(&gates::h(), &[1], &[], 2).unwrap();
        let want = gates::h().kronecker(&CMatrix::identity(2, 2));
        assert!(close(g.matrix(), &want, 1e-15));
    }

    #[test]
    fn compose_examples() {
        let x = embed_gate(&gates::x(), &[0], &[], 1).unwrap();
        let xx = compose(&[x.clone(), x.clone()]).unwrap();
        assert!(close(xx.matrix(), &CMatrix::identity(2, 2), 1e-15));
        let h = embed_gate(&gates::h(), &[0], &[], 1).unwrap();
        let z = embed_gate(&gates::z(), &[0], &[], 1).unwrap();
        let hzh = compose(&[h.clone(), z, h]).unwrap();
        assert!(close(hzh.matrix(), x.matrix(), 1e-15));
        assert!(compose(&[x, DenseUnitary::identity(2).unwrap()]).is_err());
    }

    #[test]
    fn overlapping_indices_rejected() {
        assert!(embed_gate(&gates::x(), &[0], &[Control::one(0)], 2).is_err());
        let bad = CMatrix::from_element(2, 2, ONE);
        assert!(embed_gate(&bad, &[0], &[], 1).is_err());
        assert!(Circuit::new(17).is_err());
    }

    #[test]
    fn projection_examples() {
        let id = DenseUnitary::identity(2).unwrap();
        assert!(close(&project_block(&id, 1).unwrap(), &CMatrix::identity(2, 2), 0.0));
        let x = embed_gate(&gates::x(), &[1], &[], 2).unwrap();
        assert!(project_block(&x, 1).unwrap().iter().all(|z| *z == ZERO));
        assert!(project_block(&x, 2).is_err());
    }

    #[test]
    fn direct_encoding_examples() {
        let h = CMatrix::from_element(1, 1, C64::new(0.5, 0.0));
        let u = direct_block_encoding(&h, 1.0).unwrap();
        assert!((u.matrix()[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((u.matrix()[(1, 0)] - C64::new(0.75f64.sqrt(), 0.0)).norm() < 1e-15);
        let z = CMatrix::zeros(2, 2);
        let u = direct_block_encoding(&z, 1.0).unwrap();
        assert!(project_block(&u, 1).unwrap().iter().all(|z| z.norm() < 1e-15));
        assert!(direct_block_encoding(&CMatrix::identity(2, 2), 0.5).is_err());
    }

    #[test]
    fn circuit_block_matches_projection() {
        let h = CMatrix::from_row_slice(2, 2, &[C64::new(0.3, 0.0), C64::new(0.1, -0.2), C64::new(0.1, 0.2), C64::new(-0.4, 0.0)]);
        let u = Arc::new(direct_block_encoding(&h, 1.0).unwrap());
        let mut c = Circuit::new(3).unwrap();
        c.dense(u.clone(), false, &[Control::zero(2)]).unwrap();
        c.gate(gates::h(), &[2], &[]).unwrap();
        let full = c.to_unitary().unwrap();
        assert!(close(&c.block(1).unwrap(), &project_block(&full, 1).unwrap(), 1e-14));
        let mut adj = Circuit::new(3).unwrap();
        adj.sub(Arc::new(c.clone()), true, &[]).unwrap();
        let prod = compose(&[full.clone(), adj.to_unitary().unwrap()]).unwrap();
        assert!(close(prod.matrix(), &CMatrix::identity(8, 8), 1e-13));
    }

    #[test]
    fn eigen_with_zero_rows() {
        let mut h = CMatrix::zeros(6, 6);
        h[(0, 0)] = C64::new(0.4, 0.0);
        h[(0, 3)] = C64::new(0.2, -0.1);
        h[(3, 0)] = C64::new(0.2, 0.1);
        h[(3, 3)] = C64::new(-0.7, 0.0);
        let (vals, vecs) = hermitian_eigen(&h);
        assert_eq!(vals.iter().filter(|&&l| l == 0.0).count(), 4);
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(6, vals.iter().map(|&l| C64::new(l, 0.0))));
        assert!(close(&(&vecs * d * vecs.adjoint()), &h, 1e-14));
        assert!(close(&(vecs.adjoint() * &vecs), &CMatrix::identity(6, 6), 1e-14));
        let (z, _) = hermitian_eigen(&CMatrix::zeros(3, 3));
        assert_eq!(z, vec![0.0; 3]);
    }
}
