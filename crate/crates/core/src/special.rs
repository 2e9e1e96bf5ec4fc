//! Special functions: the standard normal distribution, the regularized
//! incomplete beta function and the binomial distribution.
//!
//! The normal CDF is built on `erfc` from `libm` (a port of the fdlibm/musl
//! routine, accurate to about one ulp). The binomial probability mass uses
//! Loader's saddle-point expansion so that the prefactor of the incomplete
//! beta continued fraction is accurate even for tens of millions of trials.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`, accurate in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Upper quantile of the standard normal: the `x` with `1 - Phi(x) = p`.
///
/// Starts from the Abramowitz-Stegun 26.2.23 rational approximation and
/// polishes it with Halley steps on the survival function.
pub fn normal_upper_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
    if p > 0.5 {
        return -normal_upper_quantile(1.0 - p);
    }
    let t = (-2.0 * p.ln()).sqrt();
    let mut x = t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t)
            / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    for _ in 0..8 {
        let f = normal_sf(x) - p;
        let dens = normal_pdf(x);
        if dens == 0.0 {
            break;
        }
        // f' = -pdf, f'' = x pdf
        let fp = -dens;
        let fpp = x * dens;
        let step = 2.0 * f * fp / (2.0 * fp * fp - f * fpp);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Error of Stirling's approximation: `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Binomial probability mass `P(X = k)` for `X ~ Bin(n, p)`.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let (nf, kf) = (n as f64, k as f64);
    if k == 0 {
        let lc = if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
        return lc.exp();
    }
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nf - kf) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let max_iter = 10_000 + (20.0 * (a.min(b) + 1.0).sqrt()) as usize * 20;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence {
        what: "incomplete beta continued fraction",
        iterations: max_iter,
    })
}

/// Regularized incomplete beta function `I_x(a, b)` for real `a, b > 0`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::arg("a, b", "shape parameters must be positive"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg("x", format!("{x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// Lower and upper tail of the binomial distribution: `(P(X <= k), P(X > k))`.
///
/// Both tails are computed directly (never as `1 - other`) through
/// `P(X <= k) = I_{1-p}(n - k, k + 1)` with the continued-fraction prefactor
/// expressed through the saddle-point probability mass.
pub fn binomial_tails(k: u64, n: u64, p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg("p", format!("{p} outside [0, 1]")));
    }
    if k >= n {
        return Ok((1.0, 0.0));
    }
    if p == 0.0 {
        return Ok((1.0, 0.0));
    }
    if p == 1.0 {
        return Ok((0.0, 1.0));
    }
    let a = (n - k) as f64;
    let b = (k + 1) as f64;
    let x = 1.0 - p;
    if x < (a + 1.0) / (a + b + 2.0) {
        // I_x(a, b) = front / a * cf, front / a = p * pmf(k)
        let lower = p * binomial_pmf(k, n, p) * beta_cf(a, b, x)?;
        Ok((lower, 1.0 - lower))
    } else {
        // 1 - I_{1-x}(b, a), front / b = (1 - p) * pmf(k + 1)
        let upper = (1.0 - p) * binomial_pmf(k + 1, n, p) * beta_cf(b, a, p)?;
        Ok((1.0 - upper, upper))
    }
}

pub fn binomial_cdf(k: u64, n: u64, p: f64) -> Result<f64> {
    binomial_tails(k, n, p).map(|t| t.0)
}
