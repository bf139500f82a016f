//! Quick invariant checks run by the `verify` subcommand.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baseline::{distribution_error, exact_run, fit_damped_cosine};
use crate::error::Result;
use crate::hs::{build_oaa, build_u_exp, query_count, shift_rescale_encoding, BlockEncodedOp, Method};
use crate::polyapprox::{build_sign_poly, build_trig_polys, chebyshev_t};
use crate::qsp::{eval_qsp, real_part_pair, wx_to_reflection, Convention, PhaseSequence};
use crate::simulator::{direct_block_encoding, embed_gate, expm_hermitian, gates, hermitian_eigen, op_norm, CMatrix, StateVec};
use crate::vlasov::{build_grid, build_hamiltonian, decode_observables, initial_state, mu};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let d = 1 << n;
    let a = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).map(|z| z * 0.5)
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let d = 1 << n;
    let a = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = &a * a.adjoint();
    let s = rng.random_range(0.3..1.0) / op_norm(&h);
    h.map(|z| z * s)
}

fn max_dev(pairs: impl Iterator<Item = (C64, C64)>) -> f64 {
    pairs.fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
}

fn chebyshev_identity() -> Result<(bool, String)> {
    let v = chebyshev_t(3, 0.5);
    Ok((v == -1.0, format!("T3(1/2) = {v}")))
}

fn series_parity() -> Result<(bool, String)> {
    let tp = build_trig_polys(3.0, 1e-6)?;
    let sp = build_sign_poly(0.5, 1e-3)?;
    let mut worst = 0.0f64;
    for x in crate::polyapprox::grid(101) {
        worst = worst.max((tp.cos.eval_unchecked(x) - tp.cos.eval_unchecked(-x)).abs());
        worst = worst.max((tp.sin.eval_unchecked(x) + tp.sin.eval_unchecked(-x)).abs());
        worst = worst.max((sp.eval_unchecked(x) + sp.eval_unchecked(-x)).abs());
    }
    Ok((worst <= 1e-12, format!("max parity defect {worst:e}")))
}

fn convention_round_trip(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..12);
        let phases: Vec<f64> = (0..=d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let wx = PhaseSequence::new(Convention::Wx, phases)?;
        let refl = wx_to_reflection(&wx)?;
        for x in crate::polyapprox::grid(101) {
            worst = worst.max((eval_qsp(&wx, x)? - eval_qsp(&refl, x)?).norm());
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:e}")))
}

fn negation_and_real_part(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let d = rng.random_range(1..10);
        let phases: Vec<f64> = (0..=d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let seq = PhaseSequence::new(Convention::Reflection, phases)?;
        let pair = real_part_pair(&seq)?;
        for x in crate::polyapprox::grid(41) {
            let p = eval_qsp(&seq, x)?;
            worst = worst.max((eval_qsp(&seq.negated(), x)? - p.conj()).norm());
            worst = worst.max((pair.eval(x)? - C64::new(p.re, 0.0)).norm());
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:e}")))
}

fn zero_phases_chebyshev() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for d in 0..8u32 {
        let seq = PhaseSequence::new(Convention::Wx, vec![0.0; d as usize + 1])?;
        for x in crate::polyapprox::grid(101) {
            worst = worst.max((eval_qsp(&seq, x)? - C64::new(chebyshev_t(d, x), 0.0)).norm());
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:e}")))
}

fn qubit_order() -> Result<(bool, String)> {
    let n = 3;
    let mut ok = true;
    for k in 0..n {
        let u = embed_gate(&gates::x(), &[k], &[], n)?;
        for b in 0..(1 << n) {
            let out = u.apply(&StateVec::basis(n, b)?)?;
            ok &= out.amps()[b ^ (1 << k)].norm() > 1.0 - 1e-12;
        }
    }
    Ok((ok, "X on qubit k flips bit k".into()))
}

fn oaa_certificate(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..2 {
        let h = random_psd(1, rng);
        let base = BlockEncodedOp::from_unitary(direct_block_encoding(&h, 1.0)?, 1.0, 1, 0.0)?;
        let oaa = build_oaa(&build_u_exp(&base, 1.0, 1e-3 / 9.0)?)?;
        let dev = op_norm(&(oaa.block()? - expm_hermitian(&h, 1.0)));
        ok &= dev <= 1e-3 + oaa.degree() as f64 * 1e-8;
        ok &= oaa.unitary()?.n_qubits() == 5;
        worst = worst.max(dev);
    }
    Ok((ok, format!("max block error {worst:e}")))
}

fn shifted_block(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let h = random_hermitian(2, rng);
        let alpha = op_norm(&h) * rng.random_range(1.0..2.0);
        let u = BlockEncodedOp::from_unitary(direct_block_encoding(&h, alpha)?, alpha, 1, 0.0)?;
        let sh = shift_rescale_encoding(&u, 1.0)?;
        let want = (h.map(|z| z / alpha) + CMatrix::identity(4, 4)).map(|z| z * 0.5);
        worst = worst.max(op_norm(&(sh.op.block()? - want)));
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:e}")))
}

fn query_monotone_dominant() -> Result<(bool, String)> {
    let ts = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let es = [0.9, 0.1, 1e-2, 1e-3, 1e-5];
    let mut ok = true;
    for (i, &t) in ts.iter().enumerate() {
        for (j, &e) in es.iter().enumerate() {
            let q = query_count(Method::Oaa, t, e)?.q;
            ok &= q <= query_count(Method::Fpaa, t, e)?.q;
            if i > 0 {
                ok &= q >= query_count(Method::Oaa, ts[i - 1], e)?.q;
            }
            if j > 0 {
                ok &= q >= query_count(Method::Oaa, t, es[j - 1])?.q;
            }
        }
    }
    Ok((ok, format!("{} grid points", ts.len() * es.len())))
}

fn alpha_bounds(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut ok = true;
    let mut count = 0;
    for dims in 1..=3 {
        for _ in 0..20 {
            let n: Vec<usize> = (0..dims).map(|_| 1 << rng.random_range(1..=(6 / dims).min(4))).collect();
            let vm: Vec<f64> = (0..dims).map(|_| rng.random_range(1.0..6.0)).collect();
            let k: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = build_grid(&n, &vm)?;
            let h = build_hamiltonian(&g, &k)?;
            let rad = hermitian_eigen(h.matrix()).0.iter().fold(0.0f64, |a, l| a.max(l.abs()));
            ok &= h.alpha() <= h.lambda() * (1.0 + 1e-12);
            ok &= h.alpha() >= 0.8 * h.lambda() * (1.0 - 1e-12);
            ok &= rad <= h.alpha() * (1.0 + 1e-12);
            count += 1;
        }
    }
    Ok((ok, format!("{count} configurations")))
}

fn coupling_identity() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (n, vm, k) in [
        (vec![32], vec![4.5], vec![0.4]),
        (vec![4, 8], vec![3.0, 2.5], vec![0.3, -0.5]),
        (vec![4, 2, 4], vec![2.0, 1.5, 3.0], vec![0.2, 0.1, -0.4]),
    ] {
        let g = build_grid(&n, &vm)?;
        let h = build_hamiltonian(&g, &k)?;
        for j in 0..g.n_points() {
            let v = g.velocity(j);
            for p in 0..g.dims() {
                worst = worst.max((h.coupling(j, p, &g) - mu(&g, j) * v[p] / h.alpha()).abs());
            }
        }
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:e}")))
}

fn decode_round_trip() -> Result<(bool, String)> {
    let g = build_grid(&[32], &[4.5])?;
    let s = initial_state(&g, &[0.4])?;
    let obs = decode_observables(&s.statevec(&g)?, &g, s.eta)?;
    let dev = max_dev(obs.f1.iter().zip(g.maxwellian()).map(|(&f, &m)| (f, C64::new(0.1 * m, 0.0))))
        .max((obs.e[0] - s.e[0]).norm());
    Ok((dev <= 1e-12, format!("max deviation {dev:e}")))
}

fn exact_unitarity() -> Result<(bool, String)> {
    let g = build_grid(&[32], &[4.5])?;
    let h = build_hamiltonian(&g, &[0.4])?;
    let s = initial_state(&g, &[0.4])?;
    let tr = exact_run(&h, &g, &s, &[0.0, 1.0, 10.0, 25.0])?;
    let dev = tr.eta.iter().fold(0.0f64, |m, e| m.max((e - s.eta).abs()));
    Ok((dev <= 1e-12, format!("max eta drift {dev:e}")))
}

fn fit_exactness() -> Result<(bool, String)> {
    let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.25).collect();
    let y: Vec<f64> = times
        .iter()
        .map(|&t| 0.3 * (-0.1 * t).exp() * (1.3 * t - 0.2).cos() + 0.01)
        .collect();
    let f = fit_damped_cosine(&times, &y, 0.0)?;
    let ok = f.residual <= 1e-8 && (f.omega - 1.3).abs() < 1e-6 && (f.gamma - 0.1).abs() < 1e-6;
    Ok((ok, format!("residual {:e}", f.residual)))
}

fn distribution_metric(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let f: Vec<C64> = (0..16).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let g: Vec<C64> = (0..16).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let a = distribution_error(&f, &g, 0.1)?;
    let b = distribution_error(&g, &f, 0.1)?;
    let ok = a == b && a > 0.0 && distribution_error(&f, &f, 0.1)? == 0.0;
    Ok((ok, format!("delta {a:e}")))
}

/// Runs every check; errors count as failures.
pub fn run_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut record = |name: &'static str, r: Result<(bool, String)>| {
        let (passed, detail) = match r {
            Ok(v) => v,
            Err(e) => (false, e.to_string()),
        };
        out.push(CheckResult { name, passed, detail });
    };
    record("chebyshev T3(1/2) = -1", chebyshev_identity());
    record("series parity", series_parity());
    record("Wx/Reflection agreement", convention_round_trip(&mut rng));
    record("negation and real part", negation_and_real_part(&mut rng));
    record("zero phases give T_d", zero_phases_chebyshev());
    record("qubit ordering", qubit_order());
    record("OAA error certificate", oaa_certificate(&mut rng));
    record("U' block (H/alpha+I)/2", shifted_block(&mut rng));
    record("query monotonicity and dominance", query_monotone_dominant());
    record("alpha bounds and spectral bound", alpha_bounds(&mut rng));
    record("coupling identity", coupling_identity());
    record("decode round trip", decode_round_trip());
    record("exact evolution preserves eta", exact_unitarity());
    record("damped cosine fit exactness", fit_exactness());
    record("distribution error metric", distribution_metric(&mut rng));
    out
}
