//! Linearized Vlasov-Poisson system in Fourier space written as a
//! Schrödinger equation i dψ/dt = Hψ over an r ⊗ v register, with its
//! block-encoding normalization, initial state, QSVT time stepping and
//! decoding of E and f₁.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::baseline::{Source, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::hs::{build_oaa, build_u_exp, shift_rescale_encoding, BlockEncodedOp};
use crate::simulator::{direct_block_encoding, hermiticity_defect, CMatrix, StateVec};

/// Branch norms below this count as total amplitude loss.
pub const BRANCH_FLOOR: f64 = 1e-12;

const ANGLE_SLACK: f64 = 1e-12;

pub fn maxwellian(v: f64) -> f64 {
    (-0.5 * v * v).exp() / (2.0 * PI).sqrt()
}

/// Uniform symmetric velocity grid, one to three axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    n: Vec<usize>,
    v_max: Vec<f64>,
    dv: Vec<f64>,
    f_m: Vec<f64>,
}

impl VelocityGrid {
    pub fn dims(&self) -> usize {
        self.n.len()
    }
    pub fn n_axis(&self) -> &[usize] {
        &self.n
    }
    pub fn v_max(&self) -> &[f64] {
        &self.v_max
    }
    pub fn dv_axis(&self) -> &[f64] {
        &self.dv
    }
    /// Product of the per-axis spacings.
    pub fn dv(&self) -> f64 {
        self.dv.iter().product()
    }
    pub fn n_points(&self) -> usize {
        self.n.iter().product()
    }
    pub fn n_v_qubits(&self) -> usize {
        self.n.iter().map(|n| n.trailing_zeros() as usize).sum()
    }
    /// 1 qubit in 1D, 2 otherwise.
    pub fn n_r_qubits(&self) -> usize {
        if self.dims() == 1 {
            1
        } else {
            2
        }
    }
    pub fn n_system_qubits(&self) -> usize {
        self.n_r_qubits() + self.n_v_qubits()
    }
    /// f_M at every flattened point.
    pub fn maxwellian(&self) -> &[f64] {
        &self.f_m
    }

    pub fn axis_velocity(&self, axis: usize, i: usize) -> f64 {
        -self.v_max[axis] + i as f64 * self.dv[axis]
    }

    /// (j_x, j_y, j_z) of a flat index, j_x most significant.
    pub fn split(&self, j: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims()];
        let mut rest = j;
        for axis in (0..self.dims()).rev() {
            out[axis] = rest % self.n[axis];
            rest /= self.n[axis];
        }
        out
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.n).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn velocity(&self, j: usize) -> Vec<f64> {
        self.split(j)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.axis_velocity(axis, i))
            .collect()
    }
}

pub fn build_grid(n: &[usize], v_max: &[f64]) -> Result<VelocityGrid> {
    if n.is_empty() || n.len() > 3 || n.len() != v_max.len() {
        return invalid("grid needs 1 to 3 axes with one N and one v_max each");
    }
    for &ni in n {
        if ni < 2 || !ni.is_power_of_two() {
            return invalid(format!("N = {ni} must be a power of two, at least 2"));
        }
    }
    if v_max.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return invalid("v_max must be positive");
    }
    let dv: Vec<f64> = n.iter().zip(v_max).map(|(&ni, &vm)| 2.0 * vm / (ni - 1) as f64).collect();
    let mut grid = VelocityGrid {
        n: n.to_vec(),
        v_max: v_max.to_vec(),
        dv,
        f_m: Vec::new(),
    };
    grid.f_m = (0..grid.n_points())
        .map(|j| grid.velocity(j).iter().map(|&v| maxwellian(v)).product())
        .collect();
    Ok(grid)
}

/// Angle tables of the row/column state preparations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    /// √(k·v_j / K_max); imaginary where k·v_j < 0.
    pub b: Vec<C64>,
    pub d: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub c2: f64,
    pub k_max: f64,
    pub g_max: f64,
    pub v_prod: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct VlasovHamiltonian {
    h: CMatrix,
    alpha: f64,
    lambda: f64,
    k: Vec<f64>,
    angles: Angles,
    n_r_qubits: usize,
    n_v_qubits: usize,
}

impl VlasovHamiltonian {
    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn k(&self) -> &[f64] {
        &self.k
    }
    pub fn angles(&self) -> &Angles {
        &self.angles
    }
    pub fn n_qubits(&self) -> usize {
        self.n_r_qubits + self.n_v_qubits
    }

    /// Normalization of the coupling term: √N, √(2N), 2√N by dimension.
    fn coupling_norm(dims: usize, n_points: usize) -> f64 {
        let n = n_points as f64;
        match dims {
            1 => n.sqrt(),
            2 => (2.0 * n).sqrt(),
            _ => 2.0 * n.sqrt(),
        }
    }

    /// Coupling entry of H/α between F_j and E_axis from the angle products.
    pub fn coupling(&self, j: usize, axis: usize, grid: &VelocityGrid) -> f64 {
        let idx = grid.split(j);
        let a = &self.angles;
        let table = match axis {
            0 => &a.p,
            1 => &a.q,
            _ => &a.r,
        };
        (1.0 - a.c2).sqrt() * a.d[j] * table[idx[axis]] / Self::coupling_norm(grid.dims(), grid.n_points())
    }

    /// c²b_j², the diagonal of H/α.
    pub fn diagonal(&self, j: usize) -> f64 {
        (self.angles.b[j] * self.angles.b[j]).re * self.angles.c2
    }
}

fn check_angle(name: &str, x: f64) -> Result<()> {
    if x.abs() > 1.0 + ANGLE_SLACK {
        return invalid(format!("angle {name} = {x} lies outside [-1, 1]"));
    }
    Ok(())
}

pub fn build_hamiltonian(grid: &VelocityGrid, k: &[f64]) -> Result<VlasovHamiltonian> {
    let dims = grid.dims();
    if k.len() != dims {
        return invalid("wave vector length must match the grid dimension");
    }
    if k.iter().any(|x| !x.is_finite()) {
        return invalid("wave vector must be finite");
    }
    let np = grid.n_points();
    let f_m = grid.maxwellian();
    let kv: Vec<f64> = (0..np)
        .map(|j| grid.velocity(j).iter().zip(k).map(|(v, k)| v * k).sum())
        .collect();
    let k_max = kv.iter().fold(0.0f64, |a, x| a.max(x.abs()));

    let (g_max, v_prod, weight) = if dims == 1 {
        let g = (0..np).fold(0.0f64, |a, j| a.max((grid.axis_velocity(0, j) * f_m[j]).abs()));
        (g, grid.v_max[0], 1.0)
    } else {
        let g = f_m.iter().cloned().fold(0.0f64, f64::max);
        let w = if dims == 2 { 2.0 } else { 4.0 };
        (g, grid.v_max.iter().product::<f64>(), w)
    };
    // s² = m·Δv·N·V²·g (1D: Δv·N·v_max·G)
    let s2 = if dims == 1 {
        grid.dv() * np as f64 * v_prod * g_max
    } else {
        weight * grid.dv() * np as f64 * v_prod * v_prod * g_max
    };
    let lambda = k_max + s2.sqrt();
    let (gamma, c2, alpha) = if k_max > 0.0 {
        let gamma = k_max * k_max / s2;
        // Γ/2(√(1+4/Γ) − 1) without cancellation at large Γ
        let c2 = 2.0 / (1.0 + (1.0 + 4.0 / gamma).sqrt());
        (gamma, c2, k_max / c2)
    } else {
        (0.0, 0.0, s2.sqrt())
    };

    let b: Vec<C64> = kv
        .iter()
        .map(|&x| if k_max > 0.0 { C64::new(x / k_max, 0.0).sqrt() } else { C64::new(0.0, 0.0) })
        .collect();
    let (d, p, q, r) = if dims == 1 {
        let vm = grid.v_max[0];
        let d: Vec<f64> = (0..np)
            .map(|j| ((grid.axis_velocity(0, j) * f_m[j]).abs() / g_max).sqrt())
            .collect();
        let p: Vec<f64> = (0..np)
            .map(|j| {
                let v = grid.axis_velocity(0, j);
                v.signum() * (v.abs() / vm).sqrt()
            })
            .collect();
        (d, p, Vec::new(), Vec::new())
    } else {
        let d: Vec<f64> = f_m.iter().map(|&f| (f / g_max).sqrt()).collect();
        let axis = |a: usize| -> Vec<f64> {
            if a >= dims {
                return Vec::new();
            }
            (0..grid.n[a]).map(|i| grid.axis_velocity(a, i) / v_prod).collect()
        };
        (d, axis(0), axis(1), axis(2))
    };
    for (name, table) in [("d", &d), ("p", &p), ("q", &q), ("r", &r)] {
        for &x in table.iter() {
            check_angle(name, x)?;
        }
    }
    for z in &b {
        check_angle("b", z.norm())?;
    }

    let angles = Angles {
        b,
        d,
        p,
        q,
        r,
        c2,
        k_max,
        g_max,
        v_prod,
        gamma,
    };
    let n_r_qubits = grid.n_r_qubits();
    let mut ham = VlasovHamiltonian {
        h: CMatrix::zeros(0, 0),
        alpha,
        lambda,
        k: k.to_vec(),
        angles,
        n_r_qubits,
        n_v_qubits: grid.n_v_qubits(),
    };
    let mut h = CMatrix::zeros(np << n_r_qubits, np << n_r_qubits);
    for j in 0..np {
        h[(j, j)] = C64::new(alpha * ham.diagonal(j), 0.0);
        for axis in 0..dims {
            let e = (axis + 1) * np;
            let x = C64::new(alpha * ham.coupling(j, axis, grid), 0.0);
            h[(j, e)] = x;
            h[(e, j)] = x;
        }
    }
    ham.h = h;
    Ok(ham)
}

/// μ_j = √(Δv f_M(v_j)).
pub fn mu(grid: &VelocityGrid, j: usize) -> f64 {
    (grid.dv() * grid.maxwellian()[j]).sqrt()
}

/// Physical amplitudes F_j and E_p with η = ‖(F, E)‖.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasmaState {
    pub f: Vec<C64>,
    pub e: Vec<C64>,
    pub eta: f64,
}

impl PlasmaState {
    pub fn new(f: Vec<C64>, e: Vec<C64>) -> Self {
        let eta = f.iter().chain(&e).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Self { f, e, eta }
    }

    /// Unnormalized amplitudes in the r ⊗ v layout: index r·N_v + j.
    pub fn amplitudes(&self, grid: &VelocityGrid) -> Vec<C64> {
        let np = grid.n_points();
        let mut out = vec![C64::new(0.0, 0.0); np << grid.n_r_qubits()];
        out[..np].copy_from_slice(&self.f);
        for (p, &e) in self.e.iter().enumerate() {
            out[(p + 1) * np] = e;
        }
        out
    }

    pub fn from_amplitudes(amps: &[C64], grid: &VelocityGrid) -> Result<Self> {
        let np = grid.n_points();
        if amps.len() < np << grid.n_r_qubits() {
            return invalid("amplitude vector too short for the grid");
        }
        let e = (1..=grid.dims()).map(|p| amps[p * np]).collect();
        Ok(Self::new(amps[..np].to_vec(), e))
    }

    pub fn statevec(&self, grid: &VelocityGrid) -> Result<StateVec> {
        if !(self.eta > 0.0) {
            return Err(Error::AmplitudeLoss(self.eta));
        }
        StateVec::new(self.amplitudes(grid).into_iter().map(|z| z / self.eta).collect())
    }

    /// f₁(v_j) = −i√(f_M/Δv)·F_j.
    pub fn f1(&self, grid: &VelocityGrid) -> Vec<C64> {
        let dv = grid.dv();
        self.f
            .iter()
            .zip(grid.maxwellian())
            .map(|(&f, &m)| C64::new(0.0, -(m / dv).sqrt()) * f)
            .collect()
    }

    /// D_M = Σ|f₁|²Δv.
    pub fn deviation(&self, grid: &VelocityGrid) -> f64 {
        self.f1(grid).iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dv()
    }
}

/// f₁ = 0.1 f_M and E from Poisson, E = i k Σf₁Δv / |k|².
pub fn initial_state(grid: &VelocityGrid, k: &[f64]) -> Result<PlasmaState> {
    if k.len() != grid.dims() {
        return invalid("wave vector length must match the grid dimension");
    }
    let k2: f64 = k.iter().map(|x| x * x).sum();
    if !(k2 > 0.0) {
        return invalid("k must be nonzero");
    }
    let dv = grid.dv();
    let f1: Vec<f64> = grid.maxwellian().iter().map(|m| 0.1 * m).collect();
    let rho: f64 = f1.iter().sum::<f64>() * dv;
    let f = f1
        .iter()
        .zip(grid.maxwellian())
        .map(|(&g, &m)| C64::new(0.0, (dv / m).sqrt() * g))
        .collect();
    let e = k.iter().map(|&kp| C64::new(0.0, kp * rho / k2)).collect();
    Ok(PlasmaState::new(f, e))
}

/// E, f₁ and D_M read from the ancilla-zero branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub e: Vec<C64>,
    pub f1: Vec<C64>,
    pub d_m: f64,
    pub branch_norm: f64,
}

/// Projects onto ancillas |0⟩ (the low 2^n_sys amplitudes), renormalizes,
/// and scales by η.
pub fn decode_observables(state: &StateVec, grid: &VelocityGrid, eta: f64) -> Result<Observables> {
    decode_amplitudes(state.amps(), grid, eta)
}

pub fn decode_amplitudes(amps: &[C64], grid: &VelocityGrid, eta: f64) -> Result<Observables> {
    let dim = 1usize << grid.n_system_qubits();
    if amps.len() < dim {
        return invalid("state is smaller than the system register");
    }
    let branch = &amps[..dim];
    let norm = branch.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < BRANCH_FLOOR {
        return Err(Error::AmplitudeLoss(norm));
    }
    let scaled: Vec<C64> = branch.iter().map(|z| z * (eta / norm)).collect();
    let ps = PlasmaState::from_amplitudes(&scaled, grid)?;
    Ok(Observables {
        e: ps.e.clone(),
        f1: ps.f1(grid),
        d_m: ps.deviation(grid),
        branch_norm: norm,
    })
}

/// One QSVT step e^{−iHΔt} with Δt = 1/α: direct encoding, shift and
/// rescale, U_exp at t_eff = 2, OAA.
#[derive(Debug, Clone)]
pub struct HsPropagator {
    op: BlockEncodedOp,
    dt: f64,
    phase: C64,
    n_system: usize,
}

impl HsPropagator {
    pub fn new(h: &CMatrix, alpha: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid("eps must lie in (0, 1)");
        }
        let base = BlockEncodedOp::from_unitary(direct_block_encoding(h, alpha)?, alpha, 1, 0.0)?;
        let dt = 1.0 / alpha;
        let shifted = shift_rescale_encoding(&base, dt)?;
        let u_exp = build_u_exp(&shifted.op, shifted.t_eff, eps / 9.0)?;
        let op = build_oaa(&u_exp)?;
        Ok(Self {
            n_system: op.n_system(),
            op,
            dt,
            phase: shifted.phase,
        })
    }

    pub fn op(&self) -> &BlockEncodedOp {
        &self.op
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_system(&self) -> usize {
        self.n_system
    }

    /// Full-register states after 0..=n_t steps; ancillas are never reset.
    pub fn run(&self, psi0: &StateVec, n_t: usize) -> Result<Vec<StateVec>> {
        if psi0.n_qubits() != self.n_system {
            return invalid("initial state width does not match the Hamiltonian");
        }
        let mut state = psi0.with_ancillas(self.op.n_anc())?;
        let mut out = Vec::with_capacity(n_t + 1);
        out.push(state.clone());
        for _ in 0..n_t {
            self.op.circuit().apply(&mut state)?;
            out.push(state.clone());
        }
        Ok(out)
    }

    /// Ancilla-zero branch of a step-l state with the accumulated global
    /// phase removed (not renormalized).
    pub fn system_branch(&self, full: &StateVec, l: usize) -> Vec<C64> {
        let fix = self.phase.conj().powu(l as u32);
        full.amps()[..1 << self.n_system].iter().map(|z| z * fix).collect()
    }
}

pub fn evolve_hs(
    ham: &VlasovHamiltonian,
    grid: &VelocityGrid,
    state0: &PlasmaState,
    n_t: usize,
    eps: f64,
) -> Result<Trajectory> {
    if hermiticity_defect(ham.matrix()) > 1e-12 {
        return invalid("Hamiltonian is not Hermitian");
    }
    let prop = HsPropagator::new(ham.matrix(), ham.alpha(), eps)?;
    let states = prop.run(&state0.statevec(grid)?, n_t)?;
    let mut traj = Trajectory::new(Source::Hs, grid.dv());
    for (l, s) in states.iter().enumerate() {
        let obs = decode_amplitudes(&prop.system_branch(s, l), grid, state0.eta)?;
        traj.push(l as f64 * prop.dt(), obs.e, obs.f1, state0.eta, obs.d_m)?;
    }
    Ok(traj)
}

/// M = ⌈(2E_u + 1)πη/δ⌉.
pub fn qae_iterations(e_u: f64, eta: f64, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    if !(e_u >= 0.0) || !(eta > 0.0) {
        return invalid("E_u must be non-negative and eta positive");
    }
    Ok(((2.0 * e_u + 1.0) * PI * eta / delta).ceil() as u64)
}

/// Worst-case |ã − a| for a = |E|² after M rounds.
pub fn qae_error_bound(a: f64, eta: f64, m: u64) -> f64 {
    let m = m as f64;
    2.0 * PI * (a * (eta * eta - a)).max(0.0).sqrt() / m + PI * PI * eta * eta / (m * m)
}

/// R(x) with R(x)|0⟩ = x|0⟩ + √(1−|x|²)|1⟩, for real or purely imaginary x.
pub fn variable_rotation(x: C64) -> Result<CMatrix> {
    if x.norm() > 1.0 + ANGLE_SLACK {
        return invalid(format!("|x| = {} exceeds 1", x.norm()));
    }
    let z = C64::new(0.0, 0.0);
    if x.im == 0.0 {
        let c = x.re.clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        return Ok(CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]));
    }
    if x.re.abs() > ANGLE_SLACK {
        return invalid("complex angles must be purely imaginary");
    }
    // e^{−iXθ} e^{iZπ/2} with cos θ = Im x
    let c = x.im.clamp(-1.0, 1.0);
    let s = (1.0 - c * c).max(0.0).sqrt();
    let i = C64::new(0.0, 1.0);
    let rx = CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), -i * s, -i * s, C64::new(c, 0.0)]);
    let rz = CMatrix::from_row_slice(2, 2, &[i, z, z, -i]);
    Ok(rx * rz)
}
