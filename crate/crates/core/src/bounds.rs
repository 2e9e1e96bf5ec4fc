//! Chernoff exponents of the split increments, maximal-inequality tail
//! bounds, and the Gumbel limit of the dominating exponentials.
//!
//! With `delta = m / N^(1+c)` the increment `a_j - s_{i,j}` splits into
//! `A^_j = a_j - p - delta` (drift `-delta`) and `S^_{i,j} = -s_{i,j} + p + delta`
//! (drift `-(beta - m) / N^(1+c)`). Each has a unique positive root `theta` of
//! `E[exp(theta X)] = 1`, and `P(sup_k X(k) >= x) <= exp(-theta x)`.

use std::ops::{Add, Mul, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GeometricFailures, SystemParams};
use crate::rng::{open_unit, StreamKey, Substream};
use crate::scalar::Real;
use crate::stats::ks_statistic;

/// A two-valued increment: `x1` with probability `p1`, `x2` with `p2`.
/// The mean is carried separately so that it is never formed by
/// cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointLaw<T> {
    pub p1: T,
    pub x1: T,
    pub p2: T,
    pub x2: T,
    pub mean: T,
}

/// `e^y - 1 - y`.
fn phi<T: Real>(y: T) -> T {
    if y.abs() < T::lit(0.05) {
        // Taylor series through y^9; remainder below 1e-17 relative
        let mut term = y * y / T::lit(2.0);
        let mut sum = term;
        for k in 3..=9 {
            term = term * y / T::lit(k as f64);
            sum = sum + term;
        }
        sum
    } else {
        y.exp_m1() - y
    }
}

impl<T: Real> TwoPointLaw<T> {
    /// `E[exp(theta X)] - 1`.
    pub fn mgf_minus_one(&self, theta: T) -> T {
        theta * self.root_function(theta)
    }

    /// `(E[exp(theta X)] - 1) / theta`, increasing in `theta` and equal to
    /// the mean at `0+`.
    pub fn root_function(&self, theta: T) -> T {
        if theta == T::zero() {
            return self.mean;
        }
        self.mean + (self.p1 * phi(theta * self.x1) + self.p2 * phi(theta * self.x2)) / theta
    }

    /// Unique positive root of `E[exp(theta X)] = 1` for a law with negative
    /// mean, bracketed from `initial_hi` by doubling and then bisected to
    /// machine precision.
    pub fn positive_root(&self, initial_hi: T, tol: T) -> Result<T> {
        if !(self.mean < T::zero()) {
            return Err(Error::BracketFailure("MGF equation (mean must be negative)"));
        }
        if !(initial_hi > T::zero()) {
            return Err(Error::BracketFailure("MGF equation (initial bracket)"));
        }
        let mut lo = T::zero();
        let mut hi = initial_hi;
        let mut doublings = 0;
        while self.root_function(hi) <= T::zero() {
            lo = hi;
            hi = hi * T::lit(2.0);
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(Error::BracketFailure("MGF equation"));
            }
        }
        let mut iterations = 0;
        loop {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.root_function(mid) <= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let root = if self.root_function(hi).abs() < self.root_function(lo).abs() || lo == T::zero() {
            hi
        } else {
            lo
        };
        if self.mgf_minus_one(root).abs() > tol {
            return Err(Error::NonConvergence {
                what: "MGF root bisection",
                iterations,
            });
        }
        Ok(root)
    }
}

fn delta(params: &SystemParams, m: f64) -> f64 {
    m / params.scale_n.powf(1.0 + params.regime_exponent)
}

fn check_m(params: &SystemParams, m: f64) -> Result<()> {
    if !(m > 0.0 && m < params.beta) {
        return Err(Error::arg("m", format!("must lie in (0, beta = {}), got {m}", params.beta)));
    }
    Ok(())
}

/// Law of `A^_1 = a_1 - p - delta`.
pub fn a_hat_law<T: Real>(params: &SystemParams, m: f64) -> Result<TwoPointLaw<T>> {
    check_m(params, m)?;
    let fa = params.arrival_failure_prob();
    let d = delta(params, m);
    Ok(TwoPointLaw {
        p1: T::lit(1.0 - fa),
        x1: T::lit(fa - d),
        p2: T::lit(fa),
        x2: -T::lit(1.0 - fa) - T::lit(d),
        mean: -T::lit(d),
    })
}

/// Law of `S^_1 = -s_1 + p + delta`.
pub fn s_hat_law<T: Real>(params: &SystemParams, m: f64) -> Result<TwoPointLaw<T>> {
    check_m(params, m)?;
    let fa = params.arrival_failure_prob();
    let fs = params.service_failure_prob();
    let d = delta(params, m);
    Ok(TwoPointLaw {
        p1: T::lit(1.0 - fs),
        x1: T::lit(d - fa),
        p2: T::lit(fs),
        x2: T::lit(1.0 - fa + d),
        mean: -T::lit((params.beta - m) / params.scale_n.powf(1.0 + params.regime_exponent)),
    })
}

/// Positive root `theta_A` of `E[exp(theta A^_1)] = 1`.
pub fn solve_theta_a<T: Real>(params: &SystemParams, m: f64, tol: T) -> Result<T> {
    let law = a_hat_law::<T>(params, m)?;
    law.positive_root(T::lit(10.0 * 2.0 * m / (params.alpha * params.scale_n)), tol)
}

/// Positive root `theta_S` of `E[exp(theta S^_1)] = 1`.
pub fn solve_theta_s<T: Real>(params: &SystemParams, m: f64, tol: T) -> Result<T> {
    let law = s_hat_law::<T>(params, m)?;
    law.positive_root(
        T::lit(10.0 * 2.0 * (params.beta - m) / (params.alpha * params.scale_n)),
        tol,
    )
}

/// `2m / (alpha N)` and the second-order term
/// `[4m (3 alpha^2 - 3 beta + 2m) / (3 alpha^2)] / (2 N^2)` of `theta_A`.
pub fn theta_a_taylor<T: Real>(alpha: T, beta: T, m: T, n: T) -> (T, T) {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let first = two * m / (alpha * n);
    let coeff = T::lit(4.0) * m * (three * alpha * alpha - three * beta + two * m) / (three * alpha * alpha);
    (first, coeff / (two * n * n))
}

/// First-order approximation `2(beta - m) / (alpha N)` of `theta_S`.
pub fn theta_s_first_order<T: Real>(alpha: T, beta: T, m: T, n: T) -> T {
    T::lit(2.0) * (beta - m) / (alpha * n)
}

/// `exp(-theta x)`, the maximal-inequality bound on `P(sup_k X(k) >= x)`.
pub fn tail_bound_sup<T: Real>(theta: T, x: T) -> T {
    (-theta * x).exp()
}

/// Slots after which the mass of the supremum still ahead is below `eps`:
/// a walk with drift `-drift` per slot reaches level `-drift H` and must
/// climb back, which has probability at most `exp(-theta drift H)`.
pub fn horizon_for_residual(theta: f64, drift: f64, eps: f64) -> u64 {
    ((1.0 / eps).ln() / (theta * drift)).ceil() as u64
}

/// Everything needed to dominate the reversed queue by exponentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffSetup {
    pub params: SystemParams,
    pub m: f64,
    pub theta_a: f64,
    pub theta_s: f64,
    /// `alpha N / (2 (beta - m))`.
    pub exp_mean: f64,
}

impl ChernoffSetup {
    pub fn new(params: &SystemParams, m: f64, tol: f64) -> Result<Self> {
        Ok(Self {
            params: *params,
            m,
            theta_a: solve_theta_a(params, m, tol)?,
            theta_s: solve_theta_s(params, m, tol)?,
            exp_mean: params.alpha * params.scale_n / (2.0 * (params.beta - m)),
        })
    }
}

/// `sup_{0 <= k <= horizon} A^(k)` along one arrival stream. The path rises
/// by `fa - delta` per slot and drops by one at each arrival failure, so the
/// supremum is attained just before a failure or at the horizon.
pub fn sup_a_hat_path(params: &SystemParams, m: f64, horizon: u64, key: &StreamKey) -> f64 {
    let rise = params.arrival_failure_prob() - delta(params, m);
    let mut failures = 0.0;
    let mut sup: f64 = 0.0;
    for f in GeometricFailures::new(key.stream(Substream::Arrivals), params.arrival_failure_prob(), horizon) {
        sup = sup.max((f - 1) as f64 * rise - failures);
        failures += 1.0;
    }
    sup.max(horizon as f64 * rise - failures)
}

/// `sup_{0 <= k <= horizon} S^(k)` along one service stream. The path falls
/// by `fa - delta` per slot and jumps up by one at each service failure.
pub fn sup_s_hat_path(params: &SystemParams, m: f64, horizon: u64, key: &StreamKey) -> f64 {
    let fall = params.arrival_failure_prob() - delta(params, m);
    let mut failures = 0.0;
    let mut sup: f64 = 0.0;
    for f in GeometricFailures::new(key.stream(Substream::Service(0)), params.service_failure_prob(), horizon) {
        failures += 1.0;
        sup = sup.max(failures - f as f64 * fall);
    }
    sup
}

/// Exact decomposition `a_j - s_j = A^_j + S^_j` over any field.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSplit<T> {
    pub p: T,
    pub delta: T,
}

impl<T> DriftSplit<T>
where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + std::ops::Div<Output = T>,
{
    /// `p = 1 - alpha/N - beta/N^(1+c)` and `delta = m / N^(1+c)` for integer `c`.
    pub fn from_params(alpha: T, beta: T, n: T, c: u32, m: T) -> Self {
        let mut n_pow = n.clone();
        for _ in 0..c {
            n_pow = n_pow * n.clone();
        }
        Self {
            p: T::one() - alpha / n - beta / n_pow.clone(),
            delta: m / n_pow,
        }
    }

    fn indicator(b: bool) -> T {
        if b {
            T::one()
        } else {
            T::zero()
        }
    }

    pub fn a_hat(&self, a: bool) -> T {
        Self::indicator(a) - self.p.clone() - self.delta.clone()
    }

    pub fn s_hat(&self, s: bool) -> T {
        self.p.clone() + self.delta.clone() - Self::indicator(s)
    }

    /// Cumulative paths `(A - S, A^, S^)` for `k = 0..=n`.
    pub fn paths(&self, a: &[bool], s: &[bool]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let mut diff = vec![T::zero()];
        let mut ah = vec![T::zero()];
        let mut sh = vec![T::zero()];
        for (&aj, &sj) in a.iter().zip(s) {
            diff.push(diff.last().unwrap().clone() + Self::indicator(aj) - Self::indicator(sj));
            ah.push(ah.last().unwrap().clone() + self.a_hat(aj));
            sh.push(sh.last().unwrap().clone() + self.s_hat(sj));
        }
        (diff, ah, sh)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GumbelReport {
    pub n: usize,
    pub reps: usize,
    /// `alpha / (2 (beta - m))`.
    pub location_scale: f64,
    pub exp_mean: f64,
    /// KS distance of `max / mean - ln N` to `exp(-exp(-x))`.
    pub ks_gumbel: f64,
    /// KS distance to the exact law `(1 - exp(-(x + ln N)))^N`.
    pub ks_exact: f64,
}

/// Standard Gumbel CDF.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// CDF of `max_{i <= n} E_i - ln n` for unit exponentials.
pub fn exact_max_exp_cdf(x: f64, n: usize) -> f64 {
    let y = x + (n as f64).ln();
    if y <= 0.0 {
        0.0
    } else {
        // (1 - e^-y)^n through log1p for accuracy at large n
        (n as f64 * (-(-y).exp()).ln_1p()).exp()
    }
}

/// Normalised maxima `max_i E_i / mean - ln N` with `E_i` exponential of
/// mean `alpha N / (2 (beta - m))`, one per replication.
pub fn gumbel_samples(params: &SystemParams, m: f64, reps: usize, master_seed: u64) -> Result<Vec<f64>> {
    check_m(params, m)?;
    Ok((0..reps as u64)
        .map(|r| gumbel_sample(params, m, &StreamKey::new(master_seed, r)))
        .collect())
}

/// One replication of [`gumbel_samples`]; `m` must lie in `(0, beta)`.
pub fn gumbel_sample(params: &SystemParams, m: f64, key: &StreamKey) -> f64 {
    let n = params.n_servers;
    let mean = params.alpha * params.scale_n / (2.0 * (params.beta - m));
    let mut rng = key.stream(Substream::Auxiliary(2));
    let max = (0..n)
        .map(|_| -mean * open_unit(&mut rng).ln())
        .fold(0.0f64, f64::max);
    max / mean - (n as f64).ln()
}

pub fn gumbel_check(params: &SystemParams, m: f64, reps: usize, master_seed: u64) -> Result<GumbelReport> {
    if reps < 100 {
        return Err(Error::arg("reps", format!("need at least 100 replications, got {reps}")));
    }
    let samples = gumbel_samples(params, m, reps, master_seed)?;
    Ok(gumbel_report(params, m, &samples))
}

pub fn gumbel_report(params: &SystemParams, m: f64, samples: &[f64]) -> GumbelReport {
    let n = params.n_servers;
    GumbelReport {
        n,
        reps: samples.len(),
        location_scale: params.alpha / (2.0 * (params.beta - m)),
        exp_mean: params.alpha * params.scale_n / (2.0 * (params.beta - m)),
        ks_gumbel: ks_statistic(samples, gumbel_cdf),
        ks_exact: ks_statistic(samples, |x| exact_max_exp_cdf(x, n)),
    }
}

/// Monte Carlo estimate of `P(sup_{k <= horizon} A^(k) >= x)` with its 95%
/// half-width.
pub fn mc_sup_tail(
    params: &SystemParams,
    m: f64,
    horizon: u64,
    x: f64,
    paths: usize,
    master_seed: u64,
    which: Increment,
) -> (f64, f64) {
    let hits = (0..paths as u64)
        .filter(|&r| {
            let key = StreamKey::new(master_seed, r);
            let sup = match which {
                Increment::AHat => sup_a_hat_path(params, m, horizon, &key),
                Increment::SHat => sup_s_hat_path(params, m, horizon, &key),
            };
            sup >= x
        })
        .count();
    let est = hits as f64 / paths as f64;
    let hw = crate::stats::Z_95 * (est * (1.0 - est) / paths as f64).sqrt();
    (est, hw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Increment {
    AHat,
    SHat,
}
