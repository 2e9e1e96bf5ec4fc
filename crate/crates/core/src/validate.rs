//! Finite-N checks of the scaling identities, the Berry-Esseen rate of the
//! centred service process, and the moment limits behind the fluid limit.
//!
//! Notation: over `n = floor(t N^(1+2c) ln N)` slots a server sees
//! `F ~ Bin(n, alpha/N)` service failures, and the centred service process is
//! `S~ = (F - n alpha/N) / N`.

use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GeometricFailures, SystemParams};
use crate::rng::{open_unit, StreamKey, Substream};
use crate::special::{binomial_tails, normal_cdf};
use crate::stats::{ci_halfwidth, mean, std_dev};

/// Exact moments of `(A - S_i)(n) / (N sqrt(ln N))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceIdentity {
    pub n_slots: u64,
    pub mean_term: f64,
    pub variance_term: f64,
    /// `sqrt(Var(A(n) - (1 - alpha/N) n)) = sqrt(p (1 - p) n)`.
    pub arrival_std: f64,
}

pub fn variance_identity(params: &SystemParams, t: f64) -> Result<VarianceIdentity> {
    if !(t > 0.0) {
        return Err(Error::arg("t", format!("must be positive, got {t}")));
    }
    let n_slots = params.slot_for(t)?;
    let n = n_slots as f64;
    let nn = params.scale_n;
    let scale = nn * nn.ln().sqrt();
    let fa = params.arrival_failure_prob();
    let fs = params.service_failure_prob();
    let drift = params.beta / nn.powf(1.0 + params.regime_exponent);
    let var_a = n * fa * (1.0 - fa);
    let var_s = n * fs * (1.0 - fs);
    Ok(VarianceIdentity {
        n_slots,
        mean_term: -n * drift / scale,
        variance_term: (var_a + var_s) / (scale * scale),
        arrival_std: var_a.sqrt(),
    })
}

/// Sign convention of the standardised service process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Plus,
    Minus,
}

/// Centre and scale of `Z = +-(F - n alpha/N) / sqrt(n (alpha/N)(1 - alpha/N))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteredProcessSpec {
    pub params: SystemParams,
    pub t: f64,
    pub n_slots: u64,
    pub center: f64,
    pub scale: f64,
}

impl CenteredProcessSpec {
    pub fn new(params: &SystemParams, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::arg("t", format!("must be positive, got {t}")));
        }
        let n_slots = params.slot_for(t)?;
        let fs = params.service_failure_prob();
        let n = n_slots as f64;
        Ok(Self {
            params: *params,
            t,
            n_slots,
            center: n * fs,
            scale: (n * fs * (1.0 - fs)).sqrt(),
        })
    }

    /// Mean and variance of `Z` from the binomial moments.
    pub fn standardized_moments(&self) -> (f64, f64) {
        let fs = self.params.service_failure_prob();
        let n = self.n_slots as f64;
        let (m, v) = (n * fs, n * fs * (1.0 - fs));
        ((m - self.center) / self.scale, v / (self.scale * self.scale))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenReport {
    pub n: usize,
    pub n_slots: u64,
    pub orientation: Orientation,
    /// `sup_y |P(Z <= y) - Phi(y)| (1 + |y|^3)` over `y in [-8, 8]`.
    pub distance: f64,
    pub argmax: f64,
    /// `distance * N sqrt(ln N)`.
    pub scaled: f64,
    /// Weighted deviation at the grid endpoints `y = -8, 8`.
    pub endpoint_deviation: f64,
}

const Y_RANGE: f64 = 8.0;

/// Weighted Kolmogorov distance of the standardised binomial to the normal.
///
/// The law of `Z` is a lattice, so the supremum is evaluated at every jump
/// point in `[-8, 8]` from both sides, using exact binomial tails.
pub fn berry_esseen_distance(params: &SystemParams, t: f64, orientation: Orientation) -> Result<BerryEsseenReport> {
    let spec = CenteredProcessSpec::new(params, t)?;
    let (mu, sigma, n) = (spec.center, spec.scale, spec.n_slots);
    let p = params.service_failure_prob();
    // P(F <= k) and P(F >= k), computed directly from the nearer tail
    let cdf = |k: i64| -> Result<f64> {
        if k < 0 {
            Ok(0.0)
        } else {
            binomial_tails(k as u64, n, p).map(|x| x.0)
        }
    };
    let sf_ge = |k: i64| -> Result<f64> {
        if k <= 0 {
            Ok(1.0)
        } else {
            binomial_tails(k as u64 - 1, n, p).map(|x| x.1)
        }
    };
    let weight = |y: f64| 1.0 + y.abs().powi(3);
    let mut best = (0.0f64, 0.0f64);
    let mut consider = |y: f64, f: f64| {
        let d = (f - normal_cdf(y)).abs() * weight(y);
        if d > best.0 {
            best = (d, y);
        }
    };
    let k_lo = (mu - Y_RANGE * sigma).ceil() as i64;
    let k_hi = (mu + Y_RANGE * sigma).floor() as i64;
    match orientation {
        Orientation::Plus => {
            // Z = (F - mu) / sigma jumps at y_k = (k - mu) / sigma
            for k in k_lo..=k_hi {
                let y = (k as f64 - mu) / sigma;
                consider(y, cdf(k - 1)?);
                consider(y, cdf(k)?);
            }
        }
        Orientation::Minus => {
            // Z = (mu - F) / sigma; P(Z <= y) = P(F >= mu - y sigma)
            for k in k_lo..=k_hi {
                let y = (mu - k as f64) / sigma;
                consider(y, sf_ge(k + 1)?);
                consider(y, sf_ge(k)?);
            }
        }
    }
    let at = |y: f64| -> Result<f64> {
        let f = match orientation {
            Orientation::Plus => cdf((mu + y * sigma).floor() as i64)?,
            Orientation::Minus => sf_ge((mu - y * sigma).ceil() as i64)?,
        };
        Ok((f - normal_cdf(y)).abs() * weight(y))
    };
    let endpoint_deviation = at(-Y_RANGE)?.max(at(Y_RANGE)?);
    let nn = params.scale_n;
    Ok(BerryEsseenReport {
        n: params.n_servers,
        n_slots: n,
        orientation,
        distance: best.0.max(endpoint_deviation),
        argmax: best.1,
        scaled: best.0.max(endpoint_deviation) * nn * nn.ln().sqrt(),
        endpoint_deviation,
    })
}

/// How the service-failure counts are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    /// Exact binomial variates.
    Binomial,
    /// Counting geometric gaps of the service stream, as the simulator does.
    GapCounting,
}

/// One replication of `max(0, max_i +-S~_i / ln N)^(5/2)`.
pub fn pickands_sample(
    params: &SystemParams,
    t: f64,
    orientation: Orientation,
    method: CountMethod,
    key: &StreamKey,
) -> Result<f64> {
    let n_slots = params.slot_for(t)?;
    let fs = params.service_failure_prob();
    let nn = params.scale_n;
    let center = n_slots as f64 * fs;
    let binom = Binomial::new(n_slots, fs).map_err(|e| Error::arg("binomial", e.to_string()))?;
    let mut rng = key.stream(Substream::Auxiliary(3));
    let mut best = f64::NEG_INFINITY;
    for i in 0..params.n_servers {
        let f = match method {
            CountMethod::Binomial => binom.sample(&mut rng) as f64,
            CountMethod::GapCounting => {
                GeometricFailures::new(key.stream(Substream::Service(i as u64)), fs, n_slots).count() as f64
            }
        };
        let s = (f - center) / nn;
        let v = match orientation {
            Orientation::Plus => s,
            Orientation::Minus => -s,
        };
        best = best.max(v);
    }
    Ok((best / nn.ln()).max(0.0).powf(2.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub n: usize,
    pub reps: usize,
    pub estimate: f64,
    pub ci_halfwidth: f64,
    /// `(2 alpha t)^(5/4)`.
    pub limit: f64,
}

impl MomentEstimate {
    pub fn relative_error(&self) -> f64 {
        (self.estimate - self.limit).abs() / self.limit
    }
}

pub fn moment_estimate(params: &SystemParams, t: f64, samples: &[f64]) -> MomentEstimate {
    MomentEstimate {
        n: params.n_servers,
        reps: samples.len(),
        estimate: mean(samples),
        ci_halfwidth: ci_halfwidth(std_dev(samples), samples.len()),
        limit: (2.0 * params.alpha * t).powf(1.25),
    }
}

/// Monte Carlo estimate of `E[max(0, max_i S~_i / ln N)^(5/2)]`.
pub fn pickands_moment(params: &SystemParams, t: f64, reps: usize, master_seed: u64) -> Result<MomentEstimate> {
    if reps < 100 {
        return Err(Error::arg("reps", format!("need at least 100 replications, got {reps}")));
    }
    let samples = (0..reps as u64)
        .map(|r| pickands_sample(params, t, Orientation::Plus, CountMethod::Binomial, &StreamKey::new(master_seed, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(moment_estimate(params, t, &samples))
}

/// One replication of `max_{i <= n} X_i / sqrt(2 ln n)` for standard normals.
pub fn max_normal_ratio_sample(n: usize, key: &StreamKey) -> f64 {
    let mut rng = key.stream(Substream::Auxiliary(4));
    let m = (0..n)
        .map(|_| StandardNormal.sample(&mut rng))
        .fold(f64::NEG_INFINITY, f64::max);
    m / (2.0 * (n as f64).ln()).sqrt()
}

/// One replication of `max_{i <= n} E_i` with `E_i` exponential of mean `n`.
pub fn max_exponential_sample(n: usize, key: &StreamKey) -> f64 {
    let mut rng = key.stream(Substream::Auxiliary(5));
    let mean = n as f64;
    (0..n).map(|_| -mean * open_unit(&mut rng).ln()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxExponentialStd {
    pub n: usize,
    pub reps: usize,
    pub std: f64,
    /// Gumbel limit `(pi / sqrt 6) N`.
    pub gumbel: f64,
    /// Exact `N sqrt(sum_{k <= N} 1/k^2)`.
    pub exact: f64,
}

pub fn max_exponential_exact_std(n: usize) -> f64 {
    let s: f64 = (1..=n).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum();
    n as f64 * s.sqrt()
}

pub fn max_exponential_report(n: usize, samples: &[f64]) -> MaxExponentialStd {
    MaxExponentialStd {
        n,
        reps: samples.len(),
        std: std_dev(samples),
        gumbel: std::f64::consts::PI / 6f64.sqrt() * n as f64,
        exact: max_exponential_exact_std(n),
    }
}

/// Monte Carlo standard deviation of the maximum of `n` exponentials with mean `n`.
pub fn max_exponential_std(n: usize, reps: usize, master_seed: u64) -> Result<MaxExponentialStd> {
    if n == 0 || reps < 2 {
        return Err(Error::arg("reps", "need n >= 1 and at least two replications"));
    }
    let samples: Vec<f64> = (0..reps as u64)
        .map(|r| max_exponential_sample(n, &StreamKey::new(master_seed, r)))
        .collect();
    Ok(max_exponential_report(n, &samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize) -> SystemParams {
        SystemParams::new(1.0, 1.0, n).unwrap()
    }

    #[test]
    fn arrival_std_reference() {
        let v = variance_identity(&p(1000), 1.0).unwrap();
        let n = (1e9 * 1000f64.ln()).floor();
        let fa = 1e-3 + 1e-6;
        assert_eq!(v.n_slots as f64, n);
        assert!((v.arrival_std - (fa * (1.0 - fa) * n).sqrt()).abs() < 1e-9);
        assert!((v.arrival_std - 2628.26).abs() < 0.3);
    }

    #[test]
    fn identity_limits() {
        let v = variance_identity(&p(10_000), 1.0).unwrap();
        assert!((v.variance_term - 2.0).abs() < 1e-3);
        assert!((v.mean_term / 10_000f64.ln().sqrt() + 1.0).abs() < 1e-3);
    }

    #[test]
    fn standardization_is_exact() {
        for &n in &[25usize, 100, 1000] {
            for &t in &[0.1, 1.0, 2.5] {
                let s = CenteredProcessSpec::new(&p(n), t).unwrap();
                let (m, v) = s.standardized_moments();
                assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn berry_esseen_endpoints_saturate() {
        for o in [Orientation::Plus, Orientation::Minus] {
            let r = berry_esseen_distance(&p(50), 1.0, o).unwrap();
            assert!(r.endpoint_deviation < 1e-6, "{r:?}");
            assert!(r.distance > 0.0 && r.argmax.abs() <= 8.0);
        }
    }

    #[test]
    fn berry_esseen_small_case_by_direct_scan() {
        // tiny system: compare against a brute-force y grid using summed pmf
        let params = SystemParams::new(1.0, 1.0, 5).unwrap();
        let r = berry_esseen_distance(&params, 0.2, Orientation::Plus).unwrap();
        let spec = CenteredProcessSpec::new(&params, 0.2).unwrap();
        let n = spec.n_slots;
        let fs = 0.2;
        let mut pmf = vec![0.0; n as usize + 1];
        for k in 0..=n as usize {
            pmf[k] = crate::special::binomial_pmf(k as u64, n, fs);
        }
        let mut brute: f64 = 0.0;
        let steps = 400_000;
        for i in 0..=steps {
            let y = -8.0 + 16.0 * i as f64 / steps as f64;
            let kmax = (spec.center + y * spec.scale).floor();
            let f: f64 = if kmax < 0.0 { 0.0 } else { pmf.iter().take(kmax as usize + 1).sum() };
            brute = brute.max((f - normal_cdf(y)).abs() * (1.0 + y.abs().powi(3)));
        }
        assert!(r.distance >= brute - 1e-9);
        assert!(r.distance - brute < 5e-3 * r.distance, "{} {}", r.distance, brute);
    }

    #[test]
    fn count_methods_agree_in_law() {
        let params = SystemParams::new(1.0, 1.0, 8).unwrap();
        let draw = |m| {
            (0..3000u64)
                .map(|r| pickands_sample(&params, 0.5, Orientation::Plus, m, &StreamKey::new(4, r)).unwrap())
                .collect::<Vec<_>>()
        };
        let a = draw(CountMethod::Binomial);
        let b = draw(CountMethod::GapCounting);
        let (ma, mb) = (mean(&a), mean(&b));
        let se = (std_dev(&a).powi(2) / 3000.0 + std_dev(&b).powi(2) / 3000.0).sqrt();
        assert!((ma - mb).abs() < 4.0 * se, "{ma} {mb} {se}");
    }

    #[test]
    fn max_exponential_exact_value() {
        assert!((max_exponential_exact_std(1000) - 1282.16).abs() < 0.01);
        assert_eq!(max_exponential_exact_std(1), 1.0);
    }

    #[test]
    fn single_exponential_std() {
        let r = max_exponential_std(1, 40_000, 3).unwrap();
        assert!((r.std - 1.0).abs() < 0.03);
    }
}
