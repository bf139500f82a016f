//! Classical references for the plasma runs (forward Euler, exact
//! eigendecomposition), the damped-cosine and query-scaling fits, and the
//! distribution-function error.

use std::f64::consts::PI;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned, Vector5, U5};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::simulator::{hermitian_eigen, CMatrix};
use crate::vlasov::{initial_state, mu, PlasmaState, VelocityGrid, VlasovHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Hs,
    Euler,
    Exact,
}

/// Sampled E(t), f₁(v, t), η(t) and D_M(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub source: Source,
    pub dv: f64,
    pub times: Vec<f64>,
    pub e: Vec<Vec<C64>>,
    pub f1: Vec<Vec<C64>>,
    pub eta: Vec<f64>,
    pub d_m: Vec<f64>,
}

impl Trajectory {
    pub fn new(source: Source, dv: f64) -> Self {
        Self {
            source,
            dv,
            times: Vec::new(),
            e: Vec::new(),
            f1: Vec::new(),
            eta: Vec::new(),
            d_m: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, e: Vec<C64>, f1: Vec<C64>, eta: f64, d_m: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return invalid(format!("sample time {t} does not exceed {last}"));
            }
            if e.len() != self.e[0].len() || f1.len() != self.f1[0].len() {
                return invalid("sample shape differs from earlier samples");
            }
        }
        self.times.push(t);
        self.e.push(e);
        self.f1.push(f1);
        self.eta.push(eta);
        self.d_m.push(d_m);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Im E_axis(t) series.
    pub fn im_e(&self, axis: usize) -> Vec<f64> {
        self.e.iter().map(|e| e[axis].im).collect()
    }

    /// Index of the sample closest to t, if within tol.
    pub fn index_near(&self, t: f64, tol: f64) -> Option<usize> {
        let (i, d) = self
            .times
            .iter()
            .enumerate()
            .map(|(i, &s)| (i, (s - t).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        (d <= tol).then_some(i)
    }
}

fn push_state(traj: &mut Trajectory, t: f64, ps: &PlasmaState, grid: &VelocityGrid) -> Result<()> {
    traj.push(t, ps.e.clone(), ps.f1(grid), ps.eta, ps.deviation(grid))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t >= &0.0) || !t.is_finite()) {
        return invalid("sample times must be finite and non-negative");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("sample times must be strictly increasing");
    }
    Ok(())
}

/// Forward Euler on dF_j/dt = −i(k·v_j F_j + μ_j Σ_p v_{j,p} E_p),
/// dE_p/dt = −iΣ_j μ_j v_{j,p} F_j; the last step before each sample time
/// is shortened to land on it.
pub fn euler_run(grid: &VelocityGrid, k: &[f64], dt: f64, times: &[f64]) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return invalid("dt must be positive");
    }
    check_times(times)?;
    let s0 = initial_state(grid, k)?;
    let np = grid.n_points();
    let dims = grid.dims();
    let kv: Vec<f64> = (0..np)
        .map(|j| grid.velocity(j).iter().zip(k).map(|(v, k)| v * k).sum())
        .collect();
    let w: Vec<Vec<f64>> = (0..dims)
        .map(|p| (0..np).map(|j| mu(grid, j) * grid.velocity(j)[p]).collect())
        .collect();
    let mut f = s0.f.clone();
    let mut e = s0.e.clone();
    let mut df = vec![C64::new(0.0, 0.0); np];
    let mut de = vec![C64::new(0.0, 0.0); dims];
    let mi = C64::new(0.0, -1.0);
    let mut step = |f: &mut [C64], e: &mut [C64], h: f64| {
        for j in 0..np {
            let mut acc = f[j] * kv[j];
            for p in 0..dims {
                acc += e[p] * w[p][j];
            }
            df[j] = mi * acc;
        }
        for p in 0..dims {
            let acc: C64 = (0..np).map(|j| f[j] * w[p][j]).sum();
            de[p] = mi * acc;
        }
        for j in 0..np {
            f[j] += df[j] * h;
        }
        for p in 0..dims {
            e[p] += de[p] * h;
        }
    };

    let mut traj = Trajectory::new(Source::Euler, grid.dv());
    let mut t = 0.0;
    for &target in times {
        loop {
            let rem = target - t;
            if rem <= 1e-12 * target.max(1.0) {
                break;
            }
            if rem <= dt * (1.0 + 1e-9) {
                step(&mut f, &mut e, rem);
                t = target;
            } else {
                step(&mut f, &mut e, dt);
                t += dt;
            }
        }
        push_state(&mut traj, target, &PlasmaState::new(f.clone(), e.clone()), grid)?;
    }
    Ok(traj)
}

/// e^{−iHt}ψ₀ at each time from one eigendecomposition.
pub fn propagate_exact(h: &CMatrix, psi0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
    if h.nrows() != psi0.len() {
        return invalid("state length does not match the Hamiltonian");
    }
    let (vals, vecs) = hermitian_eigen(h);
    let c = vecs.adjoint() * DVector::from_column_slice(psi0);
    Ok(times
        .iter()
        .map(|&t| {
            let ct = DVector::from_iterator(c.len(), c.iter().zip(&vals).map(|(z, &l)| z * C64::from_polar(1.0, -l * t)));
            (&vecs * ct).iter().copied().collect()
        })
        .collect())
}

pub fn exact_run(ham: &VlasovHamiltonian, grid: &VelocityGrid, state0: &PlasmaState, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let states = propagate_exact(ham.matrix(), &state0.amplitudes(grid), times)?;
    let mut traj = Trajectory::new(Source::Exact, grid.dv());
    for (&t, amps) in times.iter().zip(&states) {
        push_state(&mut traj, t, &PlasmaState::from_amplitudes(amps, grid)?, grid)?;
    }
    Ok(traj)
}

/// δ = Σ|f_j − g_j|²Δv.
pub fn distribution_error(f: &[C64], g: &[C64], dv: f64) -> Result<f64> {
    if f.len() != g.len() {
        return invalid(format!("length mismatch: {} vs {}", f.len(), g.len()));
    }
    Ok(f.iter().zip(g).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * dv)
}

/// A e^{−γ(t−t₀)} cos(ω(t−t₀) − ρ) + E₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedCosineFit {
    pub a: f64,
    pub gamma: f64,
    pub omega: f64,
    pub rho: f64,
    pub e0: f64,
    pub t0: f64,
    /// RMS of the residuals.
    pub residual: f64,
}

impl DampedCosineFit {
    pub fn eval(&self, t: f64) -> f64 {
        model(&[self.a, self.gamma, self.omega, self.rho, self.e0], t - self.t0)
    }
}

fn model(p: &[f64], tau: f64) -> f64 {
    p[0] * (-p[1] * tau).exp() * (p[2] * tau - p[3]).cos() + p[4]
}

struct DampedCosine<'a> {
    tau: &'a [f64],
    y: &'a [f64],
    p: Vector5<f64>,
}

impl LeastSquaresProblem<f64, Dyn, U5> for DampedCosine<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U5>;
    type ParameterStorage = Owned<f64, U5>;

    fn set_params(&mut self, x: &Vector5<f64>) {
        self.p = *x;
    }
    fn params(&self) -> Vector5<f64> {
        self.p
    }
    fn residuals(&self) -> Option<DVector<f64>> {
        let p = self.p.as_slice();
        Some(DVector::from_iterator(
            self.tau.len(),
            self.tau.iter().zip(self.y).map(|(&t, &y)| model(p, t) - y),
        ))
    }
    fn jacobian(&self) -> Option<nalgebra::OMatrix<f64, Dyn, U5>> {
        let [a, g, w, r, _] = [self.p[0], self.p[1], self.p[2], self.p[3], self.p[4]];
        let mut j = nalgebra::OMatrix::<f64, Dyn, U5>::zeros(self.tau.len());
        for (i, &t) in self.tau.iter().enumerate() {
            let env = (-g * t).exp();
            let (s, c) = (w * t - r).sin_cos();
            j[(i, 0)] = env * c;
            j[(i, 1)] = -t * a * env * c;
            j[(i, 2)] = -t * a * env * s;
            j[(i, 3)] = a * env * s;
            j[(i, 4)] = 1.0;
        }
        Some(j)
    }
}

/// Peak of the Hann-windowed, zero-padded spectrum, refined parabolically.
fn fft_omega(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let m = (16 * n).next_power_of_two();
    let mut buf: Vec<C64> = (0..m)
        .map(|i| {
            if i < n {
                let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
                C64::new((y[i] - mean) * w, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mag: Vec<f64> = buf[..m / 2].iter().map(|z| z.norm()).collect();
    let (k, _) = mag
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap_or((1, &0.0));
    let shift = if k + 1 < mag.len() {
        let (l, c, r) = (mag[k - 1], mag[k], mag[k + 1]);
        let den = l - 2.0 * c + r;
        if den.abs() > 0.0 {
            0.5 * (l - r) / den
        } else {
            0.0
        }
    } else {
        0.0
    };
    2.0 * PI * (k as f64 + shift) / (m as f64 * h)
}

/// Slope of ln|y − mean| through the local extrema.
fn envelope_gamma(tau: &[f64], y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let d: Vec<f64> = y.iter().map(|v| (v - mean).abs()).collect();
    let pts: Vec<(f64, f64)> = (1..d.len() - 1)
        .filter(|&i| d[i] >= d[i - 1] && d[i] >= d[i + 1] && d[i] > 0.0)
        .map(|i| (tau[i], d[i].ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    if den > 0.0 {
        -num / den
    } else {
        0.0
    }
}

/// Linear solve for (A cos ρ, A sin ρ, E₀) at fixed ω and γ.
fn linear_phase(tau: &[f64], y: &[f64], omega: f64, gamma: f64) -> Option<(f64, f64, f64)> {
    let n = tau.len();
    let x = DMatrix::from_fn(n, 3, |i, c| {
        let env = (-gamma * tau[i]).exp();
        match c {
            0 => env * (omega * tau[i]).cos(),
            1 => env * (omega * tau[i]).sin(),
            _ => 1.0,
        }
    });
    let sol = x.svd(true, true).solve(&DVector::from_column_slice(y), 1e-14).ok()?;
    let a = sol[0].hypot(sol[1]);
    Some((a, sol[1].atan2(sol[0]), sol[2]))
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Fit window start: 5.23 for k = 0.4, otherwise the first local extremum
/// after the first sign change of the series.
pub fn default_fit_start(k: f64, times: &[f64], values: &[f64]) -> Result<f64> {
    if (k - 0.4).abs() < 1e-12 {
        return Ok(5.23);
    }
    let n = times.len().min(values.len());
    let cross = (1..n).find(|&i| values[i - 1] * values[i] < 0.0);
    let Some(c) = cross else {
        return invalid("series never changes sign; pass an explicit fit start");
    };
    (c.max(1)..n.saturating_sub(1))
        .find(|&i| {
            let (a, b, d) = (values[i - 1], values[i], values[i + 1]);
            (b >= a && b >= d) || (b <= a && b <= d)
        })
        .map(|i| times[i])
        .ok_or_else(|| Error::InvalidInput("no local extremum after the first sign change".into()))
}

/// Nonlinear least squares of the damped cosine over samples with t ≥ t0.
pub fn fit_damped_cosine(times: &[f64], values: &[f64], t0: f64) -> Result<DampedCosineFit> {
    if times.len() != values.len() {
        return invalid("times and values differ in length");
    }
    let (tau, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t0 - 1e-12)
        .map(|(t, v)| (t - t0, *v))
        .unzip();
    if tau.len() < 20 {
        return invalid(format!("need at least 20 samples after t0, got {}", tau.len()));
    }
    if tau.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
        return invalid("samples must be finite with increasing times");
    }
    // uniform resampling for the spectral guess
    let n = tau.len();
    let h = tau[n - 1] / (n - 1) as f64;
    let mut uni = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let s = i as f64 * h;
        while seg + 2 < n && tau[seg + 1] < s {
            seg += 1;
        }
        let w = ((s - tau[seg]) / (tau[seg + 1] - tau[seg])).clamp(0.0, 1.0);
        uni.push(y[seg] * (1.0 - w) + y[seg + 1] * w);
    }
    let omega0 = fft_omega(&uni, h);
    let gamma0 = envelope_gamma(&tau, &y);

    let lm = LevenbergMarquardt::new().with_tol(1e-15).with_patience(400);
    let mut best: Option<(f64, Vector5<f64>, bool)> = None;
    for &(ws, gs) in &[(1.0, 1.0), (1.0, 0.0), (0.97, 1.0), (1.03, 1.0)] {
        let (w, g) = (omega0 * ws, gamma0 * gs);
        let Some((a, r, e0)) = linear_phase(&tau, &y, w, g) else {
            continue;
        };
        let prob = DampedCosine {
            tau: &tau,
            y: &y,
            p: Vector5::new(a, g, w, r, e0),
        };
        let (prob, report) = lm.minimize(prob);
        let rms = (2.0 * report.objective_function / n as f64).sqrt();
        if !rms.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| rms < b.0) {
            best = Some((rms, prob.p, report.termination.was_successful()));
        }
    }
    let Some((rms, p, ok)) = best else {
        return Err(Error::Fit {
            reason: "no finite fit".into(),
            residual: f64::INFINITY,
        });
    };
    if !ok {
        return Err(Error::Fit {
            reason: "Levenberg-Marquardt did not converge".into(),
            residual: rms,
        });
    }
    let (mut a, mut rho) = (p[0], p[3]);
    let mut omega = p[2];
    if omega < 0.0 {
        omega = -omega;
        rho = -rho;
    }
    if a < 0.0 {
        a = -a;
        rho += PI;
    }
    Ok(DampedCosineFit {
        a,
        gamma: p[1],
        omega,
        rho: wrap(rho),
        e0: p[4],
        t0,
        residual: rms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingModel {
    /// α₀ + α₁t + α₂L
    Oaa,
    /// α₀ + α₁t + α₂L + α₃tL + α₄L²
    Fpaa,
    /// α₀ + α₁t + α₂L
    R,
    /// α₀ + α₂L
    D,
}

impl ScalingModel {
    /// Basis functions at (t, L = ln(1/ε)).
    pub fn basis(self, t: f64, l: f64) -> Vec<f64> {
        match self {
            ScalingModel::Oaa | ScalingModel::R => vec![1.0, t, l],
            ScalingModel::Fpaa => vec![1.0, t, l, t * l, l * l],
            ScalingModel::D => vec![1.0, l],
        }
    }
    pub fn n_params(self) -> usize {
        self.basis(1.0, 1.0).len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub t: f64,
    pub eps: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub coeffs: Vec<f64>,
    pub r2: f64,
    pub rms: f64,
}

pub fn fit_query_scaling(samples: &[ScalingSample], model: ScalingModel) -> Result<ScalingFit> {
    let p = model.n_params();
    if samples.len() < 2 * p {
        return invalid(format!("need at least {} samples, got {}", 2 * p, samples.len()));
    }
    if samples.iter().any(|s| !(s.eps > 0.0) || !s.t.is_finite() || !s.value.is_finite()) {
        return invalid("samples need finite t, value and positive eps");
    }
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| model.basis(s.t, (1.0 / s.eps).ln())).collect();
    let x = DMatrix::from_fn(samples.len(), p, |i, j| rows[i][j]);
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.value));
    least_squares(&x, &y).map(|(coeffs, r2, rms)| ScalingFit { model, coeffs, r2, rms })
}

fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(Vec<f64>, f64, f64)> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Fit {
            reason: "design matrix is rank deficient".into(),
            residual: f64::NAN,
        });
    }
    let c = svd.solve(y, 0.0).map_err(|e| Error::Fit {
        reason: e.to_string(),
        residual: f64::NAN,
    })?;
    let res = x * &c - y;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res = res.norm_squared();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((c.iter().copied().collect(), r2, (ss_res / y.len() as f64).sqrt()))
}

/// Intercept, slope and R² of an ordinary line fit.
pub fn affine_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return invalid("affine fit needs at least 3 paired samples");
    }
    let m = DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let (c, r2, _) = least_squares(&m, &DVector::from_column_slice(y))?;
    Ok((c[0], c[1], r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vlasov::{build_grid, build_hamiltonian, maxwellian};

    fn setup() -> (VelocityGrid, VlasovHamiltonian, PlasmaState) {
        let g = build_grid(&[32], &[4.5]).unwrap();
        let h = build_hamiltonian(&g, &[0.4]).unwrap();
        let s = initial_state(&g, &[0.4]).unwrap();
        (g, h, s)
    }

    fn state_diff(a: &Trajectory, b: &Trajectory, i: usize) -> f64 {
        let f: f64 = a.f1[i].iter().zip(&b.f1[i]).map(|(x, y)| (x - y).norm_sqr()).sum();
        let e: f64 = a.e[i].iter().zip(&b.e[i]).map(|(x, y)| (x - y).norm_sqr()).sum();
        (f + e).sqrt()
    }

    #[test]
    fn euler_single_step() {
        let (g, h, s) = setup();
        let dt = 0.01;
        let tr = euler_run(&g, &[0.4], dt, &[dt]).unwrap();
        let psi = DVector::from_vec(s.amplitudes(&g));
        let next = &psi - h.matrix() * &psi * C64::new(0.0, dt);
        let want = PlasmaState::from_amplitudes(next.as_slice(), &g).unwrap();
        assert!((tr.e[0][0] - want.e[0]).norm() < 1e-15);
        for (a, b) in tr.f1[0].iter().zip(want.f1(&g)) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(tr.source, Source::Euler);
    }

    #[test]
    fn euler_long_step_diverges() {
        let (g, h, _) = setup();
        let dt = 1.0 / h.alpha();
        let times: Vec<f64> = (0..=105).map(|l| l as f64 * dt).collect();
        let tr = euler_run(&g, &[0.4], dt, &times).unwrap();
        let im = tr.im_e(0);
        let peak = im.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(peak > 10.0 * im[0].abs(), "peak {peak}");
    }

    #[test]
    fn euler_first_order() {
        let (g, h, s) = setup();
        let exact = exact_run(&h, &g, &s, &[1.0]).unwrap();
        let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
            .iter()
            .map(|&dt| state_diff(&euler_run(&g, &[0.4], dt, &[1.0]).unwrap(), &exact, 0))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
        }
    }

    #[test]
    fn exact_run_examples() {
        let (g, h, s) = setup();
        let times = [0.0, 0.5, 3.0, 20.0];
        let tr = exact_run(&h, &g, &s, &times).unwrap();
        assert!((tr.e[0][0] - s.e[0]).norm() < 1e-12);
        for (a, b) in tr.f1[0].iter().zip(s.f1(&g)) {
            assert!((a - b).norm() < 1e-12);
        }
        for &eta in &tr.eta {
            assert!((eta - s.eta).abs() < 1e-12);
        }
        let fine = euler_run(&g, &[0.4], 1e-6, &[0.01]).unwrap();
        let ex = exact_run(&h, &g, &s, &[0.01]).unwrap();
        assert!(state_diff(&fine, &ex, 0) < 1e-7);
    }

    #[test]
    fn bad_times_rejected() {
        let (g, h, s) = setup();
        assert!(exact_run(&h, &g, &s, &[1.0, 0.5]).is_err());
        assert!(euler_run(&g, &[0.4], 0.0, &[1.0]).is_err());
        assert!(euler_run(&g, &[0.4], 0.1, &[-1.0]).is_err());
    }

    #[test]
    fn damped_cosine_synthetic() {
        let t0 = 1.0;
        let times: Vec<f64> = (0..120).map(|i| i as f64 * 0.2).collect();
        let truth = [0.4, 0.1, 1.3, 0.7, 0.02];
        let y: Vec<f64> = times.iter().map(|&t| model(&truth, t - t0)).collect();
        let f = fit_damped_cosine(&times, &y, t0).unwrap();
        assert!((f.a - 0.4).abs() < 1e-6);
        assert!((f.gamma - 0.1).abs() < 1e-6);
        assert!((f.omega - 1.3).abs() < 1e-6);
        assert!((f.rho - 0.7).abs() < 1e-6);
        assert!((f.e0 - 0.02).abs() < 1e-6);
        assert!(f.residual <= 1e-8);
        assert!((f.eval(5.0) - model(&truth, 4.0)).abs() < 1e-8);
    }

    #[test]
    fn damped_cosine_needs_samples() {
        let times: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y = vec![0.0; 30];
        assert!(fit_damped_cosine(&times, &y, 15.0).is_err());
        assert!(fit_damped_cosine(&times, &y[..10], 0.0).is_err());
    }

    #[test]
    fn landau_exact_fit() {
        let (g, h, s) = setup();
        let times: Vec<f64> = (0..=105).map(|l| l as f64 / h.alpha()).collect();
        let tr = exact_run(&h, &g, &s, &times).unwrap();
        let f = fit_damped_cosine(&tr.times, &tr.im_e(0), 5.23).unwrap();
        assert!((f.omega - 1.28506).abs() / 1.28506 < 1e-3, "omega {}", f.omega);
        assert!((f.gamma - 0.06613).abs() / 0.06613 < 2e-2, "gamma {}", f.gamma);
    }

    #[test]
    fn distribution_error_examples() {
        let f: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0)).collect();
        assert_eq!(distribution_error(&f, &f, 0.3).unwrap(), 0.0);
        assert!(distribution_error(&f, &f[..4], 0.3).is_err());
        // drift-Maxwellian: direct quadrature of the shifted Gaussian difference
        let g = build_grid(&[32], &[4.5]).unwrap();
        let a: Vec<C64> = (0..32).map(|j| C64::new(maxwellian(g.axis_velocity(0, j)), 0.0)).collect();
        let b: Vec<C64> = (0..32).map(|j| C64::new(maxwellian(g.axis_velocity(0, j) - 1e-4), 0.0)).collect();
        let want: f64 = (0..32)
            .map(|j| {
                let v = -4.5 + j as f64 * 9.0 / 31.0;
                let d = ((-v * v / 2.0).exp() - (-(v - 1e-4) * (v - 1e-4) / 2.0).exp()) / (2.0 * PI).sqrt();
                d * d * 9.0 / 31.0
            })
            .sum();
        let got = distribution_error(&a, &b, g.dv()).unwrap();
        assert!((got - want).abs() < 1e-20);
        assert!((got - 1.4105e-9).abs() < 1e-12);
    }

    #[test]
    fn scaling_fit_exact() {
        let mut s = Vec::new();
        for i in 0..6 {
            for j in 0..5 {
                let t = 0.5 + i as f64;
                let eps = 10f64.powi(-(j as i32) - 1);
                let l = (1.0 / eps).ln();
                s.push(ScalingSample {
                    t,
                    eps,
                    value: 2.0 + 3.0 * t + 0.5 * l + 0.25 * t * l - 0.1 * l * l,
                });
            }
        }
        let f = fit_query_scaling(&s, ScalingModel::Fpaa).unwrap();
        for (c, w) in f.coeffs.iter().zip([2.0, 3.0, 0.5, 0.25, -0.1]) {
            assert!((c - w).abs() < 1e-10);
        }
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let same_t: Vec<ScalingSample> = s.iter().map(|x| ScalingSample { t: 1.0, ..*x }).collect();
        assert!(fit_query_scaling(&same_t, ScalingModel::Oaa).is_err());
        assert!(fit_query_scaling(&s[..5], ScalingModel::Oaa).is_err());
    }

    #[test]
    fn affine_fit_line() {
        let x = [0.0, 1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 2.0 * v).collect();
        let (a, b, r2) = affine_fit(&x, &y).unwrap();
        assert!((a - 1.5).abs() < 1e-12 && (b + 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_push_checks() {
        let mut tr = Trajectory::new(Source::Exact, 0.1);
        let z = C64::new(0.0, 0.0);
        tr.push(0.0, vec![z], vec![z; 2], 1.0, 0.0).unwrap();
        assert!(tr.push(0.0, vec![z], vec![z; 2], 1.0, 0.0).is_err());
        assert!(tr.push(1.0, vec![z], vec![z; 3], 1.0, 0.0).is_err());
        assert_eq!(tr.index_near(0.05, 0.1), Some(0));
        assert_eq!(tr.index_near(0.5, 0.1), None);
    }
}
