//! Certified Chebyshev approximants: truncated Jacobi-Anger series for
//! cos(xt) and sin(xt), and an odd erf-based approximant of sign(x).

mod special;

use std::f64::consts::{E, PI, SQRT_2};

use serde::{Deserialize, Serialize};

pub use special::{bessel_j, bessel_j_upto, chebyshev_t, erf, eval_special, lambert_w, SpecialFn};

use crate::error::{invalid, Error, Result};

/// Slack added to every sampled certification check.
pub const CERT_SLACK: f64 = 1e-10;
/// Number of equispaced points in dense-grid certification.
pub const CERT_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_degree(d: usize) -> Self {
        if d % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn matches(self, k: usize) -> bool {
        Parity::of_degree(k) == self
    }
}

/// Where the error bound of a series is certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Full,
    /// [−1, −inner] ∪ [inner, 1]
    Gap { inner: f64 },
}

impl Region {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Region::Full => x.abs() <= 1.0,
            Region::Gap { inner } => x.abs() >= inner && x.abs() <= 1.0,
        }
    }
}

/// The function a series approximates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Cos { t: f64, scale: f64 },
    Sin { t: f64, scale: f64 },
    Sign { scale: f64 },
    /// The series is its own target.
    Exact,
}

impl Target {
    pub fn eval(&self, x: f64) -> Option<f64> {
        match *self {
            Target::Cos { t, scale } => Some(scale * (t * x).cos()),
            Target::Sin { t, scale } => Some(scale * (t * x).sin()),
            Target::Sign { scale } => Some(if x > 0.0 {
                scale
            } else if x < 0.0 {
                -scale
            } else {
                0.0
            }),
            Target::Exact => None,
        }
    }
}

/// Fixed-parity polynomial Σ c_k T_k(x) on [−1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSeries {
    parity: Parity,
    coeffs: Vec<f64>,
    err_bound: f64,
    region: Region,
    target: Target,
}

impl ChebyshevSeries {
    /// A series that is its own target. The degree is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<f64>, parity: Parity) -> Result<Self> {
        Self::with_target(coeffs, parity, Target::Exact, Region::Full, 0.0)
    }

    pub fn with_target(
        coeffs: Vec<f64>,
        parity: Parity,
        target: Target,
        region: Region,
        err_bound: f64,
    ) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("series needs at least one coefficient");
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("non-finite coefficient");
        }
        if coeffs
            .iter()
            .enumerate()
            .any(|(k, &c)| !parity.matches(k) && c != 0.0)
        {
            return invalid("coefficient of the wrong parity is nonzero");
        }
        if !parity.matches(coeffs.len() - 1) {
            return invalid("degree does not match parity");
        }
        if !(err_bound >= 0.0) {
            return invalid("err_bound must be non-negative");
        }
        Ok(Self {
            parity,
            coeffs,
            err_bound,
            region,
            target,
        })
    }

    /// Single Chebyshev polynomial T_d.
    pub fn monomial(d: usize) -> Self {
        let mut coeffs = vec![0.0; d + 1];
        coeffs[d] = 1.0;
        Self::new(coeffs, Parity::of_degree(d)).expect("valid monomial")
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn err_bound(&self) -> f64 {
        self.err_bound
    }
    pub fn region(&self) -> Region {
        self.region
    }
    pub fn target(&self) -> Target {
        self.target
    }

    /// Multiply the series, its target and its error bound by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let target = match self.target {
            Target::Cos { t, scale } => Target::Cos { t, scale: scale * s },
            Target::Sin { t, scale } => Target::Sin { t, scale: scale * s },
            Target::Sign { scale } => Target::Sign { scale: scale * s },
            Target::Exact => Target::Exact,
        };
        Self {
            parity: self.parity,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            err_bound: self.err_bound * s.abs(),
            region: self.region,
            target,
        }
    }

    /// Clenshaw evaluation without the domain check.
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs[1..].iter().rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + self.coeffs[0]
    }

    /// Largest |series − target| over `n` equispaced points of the region.
    pub fn sampled_error(&self, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for x in grid(n) {
            if !self.region.contains(x) {
                continue;
            }
            if let Some(f) = self.target.eval(x) {
                worst = worst.max((self.eval_unchecked(x) - f).abs());
            }
        }
        worst
    }

    /// Largest |series| over `n` equispaced points of [−1, 1].
    pub fn sampled_sup(&self, n: usize) -> f64 {
        grid(n)
            .map(|x| self.eval_unchecked(x).abs())
            .fold(0.0, f64::max)
    }
}

/// Equispaced points on [−1, 1] with both endpoints.
pub fn grid(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
}

pub fn series_eval(series: &ChebyshevSeries, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return invalid(format!("series argument {x} outside [-1, 1]"));
    }
    Ok(series.eval_unchecked(x))
}

fn check_trig_inputs(t: f64, eps: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be positive, got {t}"));
    }
    if !(eps > 0.0 && eps < 1.0 / E) {
        return invalid(format!("eps must lie in (0, 1/e), got {eps}"));
    }
    Ok(())
}

/// Tail sums 2Σ_{k>R}|J_{2k}(t)| and 2Σ_{k>R}|J_{2k+1}(t)| for every R up to
/// the length of the table.
fn jacobi_anger_tails(t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nmax = (t.abs().ceil() as usize) * 2 + 80;
    let js = bessel_j_upto(nmax, t);
    let rmax = (nmax - 3) / 2;
    let mut cos_tail = vec![0.0; rmax + 1];
    let mut sin_tail = vec![0.0; rmax + 1];
    let (mut c, mut s) = (0.0, 0.0);
    for r in (0..=rmax).rev() {
        cos_tail[r] = c;
        sin_tail[r] = s;
        c += 2.0 * js[2 * r].abs();
        s += 2.0 * js[2 * r + 1].abs();
    }
    // cos_tail[r] now holds 2Σ_{k>r}|J_{2k}| and sin_tail[r] holds 2Σ_{k≥r+1}|J_{2k+1}|.
    (js, cos_tail, sin_tail)
}

/// Smallest R ≥ 1 with both Jacobi-Anger tails ≤ eps.
pub fn truncation_index(t: f64, eps: f64) -> Result<usize> {
    check_trig_inputs(t, eps)?;
    let (_, cos_tail, sin_tail) = jacobi_anger_tails(t);
    (1..cos_tail.len())
        .find(|&r| cos_tail[r] <= eps && sin_tail[r] <= eps)
        .ok_or_else(|| Error::Infeasible(format!("no truncation index for t={t}, eps={eps}")))
}

/// Smallest integer q > t with (t/q)^q ≤ eps.
pub fn r_closed(t: f64, eps: f64) -> Result<usize> {
    if !(t > 0.0) || !(eps > 0.0) || !t.is_finite() {
        return invalid("r_closed needs t > 0 and eps > 0");
    }
    let log_eps = eps.ln();
    let mut q = t.floor() as usize + 1;
    loop {
        let qf = q as f64;
        if qf * (t / qf).ln() <= log_eps {
            return Ok(q);
        }
        q += 1;
    }
}

/// Closed-form truncation index ⌊r(et/2, 5eps/4)/2⌋ used for query counting.
pub fn truncation_index_closed(t: f64, eps: f64) -> Result<usize> {
    Ok(r_closed(E * t / 2.0, 1.25 * eps)? / 2)
}

/// κ-rescaled truncated Jacobi-Anger polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolys {
    pub cos: ChebyshevSeries,
    pub sin: ChebyshevSeries,
    pub kappa: f64,
    pub r: usize,
    pub t: f64,
    pub eps_tri: f64,
}

pub fn build_trig_polys(t: f64, eps_tri: f64) -> Result<TrigPolys> {
    let r = truncation_index(t, eps_tri)?;
    let (js, cos_tail, sin_tail) = jacobi_anger_tails(t);
    let kappa = 1.0 / (1.0 + eps_tri);

    let mut cc = vec![0.0; 2 * r + 1];
    cc[0] = kappa * js[0];
    for k in 1..=r {
        let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
        cc[2 * k] = kappa * 2.0 * sgn * js[2 * k];
    }
    let mut sc = vec![0.0; 2 * r + 2];
    for k in 0..=r {
        let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
        sc[2 * k + 1] = kappa * 2.0 * sgn * js[2 * k + 1];
    }
    let cos = ChebyshevSeries::with_target(
        cc,
        Parity::Even,
        Target::Cos { t, scale: kappa },
        Region::Full,
        kappa * cos_tail[r],
    )?;
    let sin = ChebyshevSeries::with_target(
        sc,
        Parity::Odd,
        Target::Sin { t, scale: kappa },
        Region::Full,
        kappa * sin_tail[r],
    )?;
    Ok(TrigPolys {
        cos,
        sin,
        kappa,
        r,
        t,
        eps_tri,
    })
}

fn check_sign_inputs(delta: f64, eps_sign: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("delta must lie in (0, 1], got {delta}"));
    }
    let cap = (2.0 / (E * PI)).sqrt();
    if !(eps_sign > 0.0 && eps_sign <= cap) {
        return invalid(format!("eps_sign must lie in (0, {cap}], got {eps_sign}"));
    }
    Ok(())
}

/// erf sharpness k and odd degree D of the sign approximant.
pub fn sign_degree(delta: f64, eps_sign: f64) -> Result<(f64, usize)> {
    check_sign_inputs(delta, eps_sign)?;
    let e2 = eps_sign * eps_sign;
    let k = SQRT_2 / delta * (8.0 / (PI * e2)).ln().sqrt();
    let w = lambert_w(512.0 / (PI * e2 * E * E))?;
    let inner = 16.0 * k / (PI.sqrt() * eps_sign) * (-0.5 * w).exp();
    let d = 2 * (inner.ceil() as usize) + 1;
    Ok((k, d))
}

/// Odd Chebyshev interpolant of erf(kx) of degree D, rescaled if needed so
/// that the sampled sup-norm stays ≤ 1.
pub fn build_sign_poly(delta: f64, eps_sign: f64) -> Result<ChebyshevSeries> {
    let (k, d) = sign_degree(delta, eps_sign)?;
    let n = d + 1;
    let fx: Vec<f64> = (0..n)
        .map(|i| erf(k * (PI * (i as f64 + 0.5) / n as f64).cos()))
        .collect();
    let mut coeffs = vec![0.0; d + 1];
    for (j, c) in coeffs.iter_mut().enumerate() {
        if j % 2 == 0 {
            continue;
        }
        let s: f64 = fx
            .iter()
            .enumerate()
            .map(|(i, f)| f * (PI * j as f64 * (i as f64 + 0.5) / n as f64).cos())
            .sum();
        *c = 2.0 * s / n as f64;
    }
    let raw = ChebyshevSeries::new(coeffs, Parity::Odd)?;
    let sup = raw.sampled_sup(CERT_POINTS.max(8 * d + 1));
    let scale = if sup > 1.0 { 1.0 / sup } else { 1.0 };
    let series = ChebyshevSeries::with_target(
        raw.coeffs.iter().map(|c| c * scale).collect(),
        Parity::Odd,
        Target::Sign { scale: 1.0 },
        Region::Gap { inner: delta / 2.0 },
        eps_sign,
    )?;
    let achieved = series.sampled_error(CERT_POINTS).max(gap_error(&series, delta / 2.0));
    if achieved > eps_sign + CERT_SLACK {
        return Err(Error::Certification(format!(
            "sign approximant error {achieved:e} exceeds {eps_sign:e} (D={d})"
        )));
    }
    Ok(series)
}

/// Error right at the inner edge of the gap, where it is largest.
fn gap_error(series: &ChebyshevSeries, inner: f64) -> f64 {
    (series.eval_unchecked(inner) - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_eval_basics() {
        let t1 = ChebyshevSeries::monomial(1);
        assert_eq!(series_eval(&t1, 0.3).unwrap(), 0.3);
        let t2 = ChebyshevSeries::monomial(2);
        assert!((series_eval(&t2, 0.5).unwrap() + 0.5).abs() < 1e-15);
        assert!(series_eval(&t2, 1.01).is_err());
    }

    #[test]
    fn wrong_parity_rejected() {
        assert!(ChebyshevSeries::new(vec![0.0, 1.0, 0.5], Parity::Even).is_err());
        assert!(ChebyshevSeries::new(vec![0.0, 1.0], Parity::Even).is_err());
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_index(1.0, 1e-3).unwrap(), 2);
        assert!(truncation_index(10.0, 1e-3).unwrap() >= 2);
        assert!(truncation_index(1.0, 0.5).is_err());
        assert!(truncation_index(0.0, 1e-3).is_err());
    }

    #[test]
    fn tail_sum_oracle_t5() {
        // direct oracle from independently summed tails
        let r = truncation_index(5.0, 1e-3).unwrap();
        let tail = |start: usize| -> f64 {
            (start..200).step_by(2).map(|m| 2.0 * bessel_j(m as u32, 5.0).abs()).sum()
        };
        assert!(tail(2 * r + 2) <= 1e-3 && tail(2 * r + 3) <= 1e-3);
        assert!(tail(2 * r) > 1e-3 || tail(2 * r + 1) > 1e-3);
        assert_eq!(r, 5);
    }

    #[test]
    fn closed_form_r() {
        // (2/3)^3 = 0.296 <= 0.3, (2/2.x) invalid since q must exceed t
        assert_eq!(r_closed(2.0, 0.3).unwrap(), 3);
        assert_eq!(r_closed(0.5, 0.9).unwrap(), 1);
    }

    #[test]
    fn trig_polys_kappa_and_parity() {
        let tp = build_trig_polys(1.0, 0.1).unwrap();
        assert!((tp.kappa - 1.0 / 1.1).abs() < 1e-15);
        let tp = build_trig_polys(1.0, 1e-3).unwrap();
        let x = 0.37;
        assert!((tp.sin.eval_unchecked(-x) + tp.sin.eval_unchecked(x)).abs() < 1e-15);
        assert!(tp.cos.sampled_error(CERT_POINTS) <= tp.kappa * 1e-3);
        assert_eq!(tp.cos.degree(), 2 * tp.r);
        assert_eq!(tp.sin.degree(), 2 * tp.r + 1);
    }

    #[test]
    fn sign_degree_example() {
        let (k, d) = sign_degree(1.0, 0.01).unwrap();
        assert!((k - 4.5046).abs() < 1e-3, "k={k}");
        assert_eq!(d, 57);
        let (k2, _) = sign_degree(0.5, 0.01).unwrap();
        assert!((k2 - 2.0 * k).abs() < 1e-12);
        assert!(sign_degree(1.0, 0.6).is_err());
    }

    #[test]
    fn sign_poly_example() {
        let p = build_sign_poly(0.5, 0.01).unwrap();
        assert!((series_eval(&p, 0.75).unwrap() - 1.0).abs() <= 0.01);
        assert_eq!(series_eval(&p, 0.0).unwrap(), 0.0);
        assert_eq!(series_eval(&p, -0.75).unwrap(), -series_eval(&p, 0.75).unwrap());
        assert!(p.sampled_sup(CERT_POINTS) <= 1.0 + 1e-12);
    }
}
