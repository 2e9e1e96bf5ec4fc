use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported horizon in slots.
pub const MAX_HORIZON: u64 = (1 << 62) - 1;

/// Heavy-traffic parameterisation of the Bernoulli slot model.
///
/// `scale_n` is the `N` that enters the success probabilities and the
/// clock; `n_servers` is the number of parallel queues. They coincide for
/// every physical system, but small enumeration studies decouple them so
/// that a single server can run with probabilities of a larger system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
    pub n_servers: usize,
    pub scale_n: f64,
    pub regime_exponent: f64,
    pub arrival_prob: f64,
    pub service_prob: f64,
}

impl SystemParams {
    /// Main regime `c = 1`.
    pub fn new(alpha: f64, beta: f64, n_servers: usize) -> Result<Self> {
        Self::with_regime(alpha, beta, n_servers, 1.0)
    }

    pub fn with_regime(alpha: f64, beta: f64, n_servers: usize, c: f64) -> Result<Self> {
        Self::with_scale(alpha, beta, n_servers, n_servers as f64, c)
    }

    pub fn with_scale(alpha: f64, beta: f64, n_servers: usize, scale_n: f64, c: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(alpha > 0.0 && alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {alpha}"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return bad(format!("beta must be positive, got {beta}"));
        }
        if n_servers == 0 {
            return bad("need at least one server".into());
        }
        if !(scale_n >= 1.0 && scale_n.is_finite()) {
            return bad(format!("scale N must be at least 1, got {scale_n}"));
        }
        if !(c >= 1.0 && c.is_finite()) {
            return bad(format!("regime exponent must be at least 1, got {c}"));
        }
        let fs = alpha / scale_n;
        let fa = fs + beta / scale_n.powf(1.0 + c);
        if !(fa < 1.0) {
            return bad(format!(
                "need N > alpha + beta / N^c for valid probabilities (N={scale_n}, alpha={alpha}, beta={beta}, c={c})"
            ));
        }
        Ok(Self {
            alpha,
            beta,
            n_servers,
            scale_n,
            regime_exponent: c,
            arrival_prob: 1.0 - fa,
            service_prob: 1.0 - fs,
        })
    }

    /// `1 - p`, computed without cancellation.
    pub fn arrival_failure_prob(&self) -> f64 {
        self.alpha / self.scale_n + self.beta / self.scale_n.powf(1.0 + self.regime_exponent)
    }

    /// `1 - q`.
    pub fn service_failure_prob(&self) -> f64 {
        self.alpha / self.scale_n
    }

    /// Slots per unit of scaled time, `N^(1+2c) ln N`.
    pub fn clock(&self) -> f64 {
        self.scale_n.powf(1.0 + 2.0 * self.regime_exponent) * self.scale_n.ln()
    }

    /// Spatial normaliser `N^c ln N`.
    pub fn spatial_scale(&self) -> f64 {
        self.scale_n.powf(self.regime_exponent) * self.scale_n.ln()
    }

    /// `floor(t N^(1+2c) ln N)`.
    pub fn slot_for(&self, t: f64) -> Result<u64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::arg("t", format!("must be finite and nonnegative, got {t}")));
        }
        let s = (t * self.clock()).floor();
        if s > MAX_HORIZON as f64 {
            return Err(Error::HorizonOverflow(s as u64));
        }
        Ok(s as u64)
    }

    /// `raw / (N^c ln N)`; a degenerate `N = 1` clock falls back to the raw value.
    pub fn scale_queue(&self, raw: u64) -> f64 {
        let s = self.spatial_scale();
        if s > 0.0 {
            raw as f64 / s
        } else {
            raw as f64
        }
    }

    /// Mean and variance of the number of event slots `sum_i |A u S_i|`
    /// over `horizon` slots.
    pub fn event_count_moments(&self, horizon: u64) -> (f64, f64) {
        let n = self.n_servers as f64;
        let (p, q) = (self.arrival_prob, self.service_prob);
        let fs = self.service_failure_prob();
        let fa = self.arrival_failure_prob();
        let per_server = fa + fs - fa * fs;
        let mean = horizon as f64 * n * per_server;
        let var_slot = p * (n * q * fs + n * n * q * q) - p * p * n * n * q * q;
        (mean, horizon as f64 * var_slot)
    }
}
