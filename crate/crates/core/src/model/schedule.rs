use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{SystemParams, MAX_HORIZON};
use crate::error::{Error, Result};
use crate::rng::{open_unit, StreamKey, Substream};

/// Zero sets of the arrival and service indicators over slots `1..=horizon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureSchedule {
    pub horizon_slots: u64,
    pub arrival_failure_slots: Vec<u64>,
    pub service_failure_slots: Vec<Vec<u64>>,
}

impl FailureSchedule {
    pub fn empty(horizon_slots: u64, n_servers: usize) -> Self {
        Self {
            horizon_slots,
            arrival_failure_slots: Vec::new(),
            service_failure_slots: vec![Vec::new(); n_servers],
        }
    }

    pub fn n_servers(&self) -> usize {
        self.service_failure_slots.len()
    }

    /// Checks that every list is strictly increasing inside `[1, horizon]`.
    pub fn validate(&self) -> Result<()> {
        if self.horizon_slots > MAX_HORIZON {
            return Err(Error::HorizonOverflow(self.horizon_slots));
        }
        let check = |name: &'static str, xs: &[u64]| -> Result<()> {
            let mut prev = 0u64;
            for &x in xs {
                if x <= prev || x > self.horizon_slots {
                    return Err(Error::arg(
                        name,
                        format!("slot {x} out of order or outside [1, {}]", self.horizon_slots),
                    ));
                }
                prev = x;
            }
            Ok(())
        };
        check("arrival_failure_slots", &self.arrival_failure_slots)?;
        for s in &self.service_failure_slots {
            check("service_failure_slots", s)?;
        }
        Ok(())
    }

    /// Builds a schedule from dense success indicators; index 0 is slot 1.
    pub fn from_indicators(arrivals: &[bool], services: &[Vec<bool>]) -> Result<Self> {
        let horizon = arrivals.len();
        if let Some(bad) = services.iter().find(|s| s.len() != horizon) {
            return Err(Error::arg(
                "services",
                format!("length {} differs from arrival length {horizon}", bad.len()),
            ));
        }
        let zeros = |xs: &[bool]| -> Vec<u64> {
            xs.iter()
                .enumerate()
                .filter(|(_, &ok)| !ok)
                .map(|(j, _)| j as u64 + 1)
                .collect()
        };
        Ok(Self {
            horizon_slots: horizon as u64,
            arrival_failure_slots: zeros(arrivals),
            service_failure_slots: services.iter().map(|s| zeros(s)).collect(),
        })
    }

    /// Dense success indicators `(a, s)`, index 0 being slot 1.
    pub fn to_indicators(&self) -> (Vec<bool>, Vec<Vec<bool>>) {
        let dense = |xs: &[u64]| {
            let mut v = vec![true; self.horizon_slots as usize];
            for &x in xs {
                v[x as usize - 1] = false;
            }
            v
        };
        (
            dense(&self.arrival_failure_slots),
            self.service_failure_slots.iter().map(|s| dense(s)).collect(),
        )
    }
}

/// Failure slots of a Bernoulli stream with failure probability `f`,
/// generated by inverse-CDF geometric gaps `ceil(ln U / ln(1 - f))`.
#[derive(Debug, Clone)]
pub struct GeometricFailures<R = ChaCha8Rng> {
    rng: R,
    inv_log_keep: f64,
    mode: GapMode,
    current: u64,
    horizon: u64,
}

#[derive(Debug, Clone, Copy)]
enum GapMode {
    Never,
    Always,
    Geometric,
}

impl<R: RngCore> GeometricFailures<R> {
    pub fn new(rng: R, fail_prob: f64, horizon: u64) -> Self {
        let mode = if !(fail_prob > 0.0) {
            GapMode::Never
        } else if fail_prob >= 1.0 {
            GapMode::Always
        } else {
            GapMode::Geometric
        };
        Self {
            rng,
            inv_log_keep: 1.0 / (-fail_prob).ln_1p(),
            mode,
            current: 0,
            horizon,
        }
    }
}

impl<R: RngCore> Iterator for GeometricFailures<R> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        let gap = match self.mode {
            GapMode::Never => return None,
            GapMode::Always => 1,
            GapMode::Geometric => {
                let g = (open_unit(&mut self.rng).ln() * self.inv_log_keep).ceil();
                // `as` saturates, which lands beyond any admissible horizon
                (g as u64).max(1)
            }
        };
        let next = self.current.checked_add(gap)?;
        if next > self.horizon {
            self.current = self.horizon;
            self.mode = GapMode::Never;
            return None;
        }
        self.current = next;
        Some(next)
    }
}

/// Lazy arrival-failure stream of a replication.
pub fn arrival_failures(params: &SystemParams, horizon: u64, key: &StreamKey) -> GeometricFailures {
    GeometricFailures::new(key.stream(Substream::Arrivals), params.arrival_failure_prob(), horizon)
}

/// Lazy service-failure stream of server `server` in a replication.
pub fn service_failures(params: &SystemParams, horizon: u64, key: &StreamKey, server: usize) -> GeometricFailures {
    GeometricFailures::new(
        key.stream(Substream::Service(server as u64)),
        params.service_failure_prob(),
        horizon,
    )
}

/// Materialises the failure schedule of a replication. The streams are the
/// ones consumed lazily by [`super::simulate_scaled`], so both see the same
/// realisation.
pub fn generate_schedule(params: &SystemParams, horizon_slots: u64, key: &StreamKey) -> Result<FailureSchedule> {
    if horizon_slots > MAX_HORIZON {
        return Err(Error::HorizonOverflow(horizon_slots));
    }
    Ok(FailureSchedule {
        horizon_slots,
        arrival_failure_slots: arrival_failures(params, horizon_slots, key).collect(),
        service_failure_slots: (0..params.n_servers)
            .map(|i| service_failures(params, horizon_slots, key, i).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn empty_horizon() {
        let p = SystemParams::new(1.0, 1.0, 10).unwrap();
        let s = generate_schedule(&p, 0, &StreamKey::new(1, 0)).unwrap();
        assert!(s.arrival_failure_slots.is_empty());
        assert!(s.service_failure_slots.iter().all(|v| v.is_empty()));
        assert_eq!(s.n_servers(), 10);
    }

    #[test]
    fn rejects_overflowing_horizon() {
        let p = SystemParams::new(1.0, 1.0, 10).unwrap();
        assert!(matches!(
            generate_schedule(&p, 1 << 62, &StreamKey::new(1, 0)),
            Err(Error::HorizonOverflow(_))
        ));
    }

    #[test]
    fn indicator_round_trip() {
        let mut rng = seeded(5);
        for _ in 0..200 {
            let n: usize = rng.random_range(0..50);
            let servers: usize = rng.random_range(1..5);
            let a: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
            let s: Vec<Vec<bool>> = (0..servers)
                .map(|_| (0..n).map(|_| rng.random_bool(0.7)).collect())
                .collect();
            let sched = FailureSchedule::from_indicators(&a, &s).unwrap();
            sched.validate().unwrap();
            assert_eq!(sched.to_indicators(), (a, s));
        }
    }

    #[test]
    fn generated_schedule_is_valid() {
        let p = SystemParams::new(1.0, 1.0, 5).unwrap();
        let s = generate_schedule(&p, 10_000, &StreamKey::new(3, 2)).unwrap();
        s.validate().unwrap();
    }

    #[test]
    fn extreme_failure_probabilities() {
        let all: Vec<u64> = GeometricFailures::new(seeded(1), 1.0, 5).collect();
        assert_eq!(all, vec![1, 2, 3, 4, 5]);
        assert_eq!(GeometricFailures::new(seeded(1), 0.0, 5).count(), 0);
    }

    #[test]
    fn gap_marginals_match_slot_sampling() {
        // per-slot failure frequency and the frequency of a failure in slot 1
        let f = 0.3;
        let reps = 40_000;
        let mut first = 0usize;
        let mut total = 0usize;
        for r in 0..reps {
            let v: Vec<u64> = GeometricFailures::new(seeded(r), f, 10).collect();
            total += v.len();
            first += v.first().is_some_and(|&x| x == 1) as usize;
        }
        let rate = total as f64 / (10 * reps) as f64;
        assert!((rate - f).abs() < 4.0 * (f * (1.0 - f) / (10.0 * reps as f64)).sqrt());
        let p1 = first as f64 / reps as f64;
        assert!((p1 - f).abs() < 4.0 * (f * (1.0 - f) / reps as f64).sqrt());
    }
}
