use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::SystemParams;
use crate::error::{Error, Result};

/// Largest number of slots accepted in exact mode.
pub const EXACT_MAX_SLOTS: u64 = 8;
/// Largest number of enumerated indicator bits `n (N + 1)`.
pub const EXACT_MAX_BITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualityMode {
    Exact,
    MonteCarlo { reps: u64 },
}

/// Laws of the forward queue `max_i Q_i(n)` started empty and of the
/// reversed representation `max_i sup_{0<=k<=n} (A(k) - S_i(k))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub n_slots: u64,
    pub n_servers: usize,
    pub mode: DualityMode,
    /// Entry `x` is the probability of value `x`, for `x = 0..=n`.
    pub forward_pmf: Vec<f64>,
    pub reversed_pmf: Vec<f64>,
    pub tv_distance: f64,
}

fn forward_max(a: &[bool], s: &[Vec<bool>]) -> usize {
    s.iter()
        .map(|si| {
            let mut q = 0usize;
            for (&aj, &sj) in a.iter().zip(si) {
                q = (q + aj as usize).saturating_sub(sj as usize);
            }
            q
        })
        .max()
        .unwrap_or(0)
}

fn reversed_max(a: &[bool], s: &[Vec<bool>]) -> usize {
    s.iter()
        .map(|si| {
            let mut walk = 0i64;
            let mut sup = 0i64;
            for (&aj, &sj) in a.iter().zip(si) {
                walk += aj as i64 - sj as i64;
                sup = sup.max(walk);
            }
            sup as usize
        })
        .max()
        .unwrap_or(0)
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Compares the two representations either by enumerating every indicator
/// outcome (`Exact`) or by sampling (`MonteCarlo`).
pub fn duality_check<R: Rng + ?Sized>(
    params: &SystemParams,
    n_slots: u64,
    mode: DualityMode,
    rng: &mut R,
) -> Result<DualityReport> {
    let servers = params.n_servers;
    let n = n_slots as usize;
    let mut fwd = vec![0.0; n + 1];
    let mut rev = vec![0.0; n + 1];
    let (p, q) = (params.arrival_prob, params.service_prob);
    match mode {
        DualityMode::Exact => {
            let bits = n_slots.saturating_mul(servers as u64 + 1);
            if n_slots > EXACT_MAX_SLOTS || bits > EXACT_MAX_BITS as u64 {
                return Err(Error::EnumerationBudget {
                    bits: bits.min(u32::MAX as u64) as u32,
                    budget: EXACT_MAX_BITS,
                });
            }
            let (fa, fs) = (params.arrival_failure_prob(), params.service_failure_prob());
            let mut a = vec![true; n];
            let mut s = vec![vec![true; n]; servers];
            for mask in 0u64..(1u64 << bits) {
                let mut w = 1.0;
                for j in 0..n {
                    a[j] = mask >> j & 1 == 1;
                    w *= if a[j] { p } else { fa };
                }
                for (i, si) in s.iter_mut().enumerate() {
                    for (j, sij) in si.iter_mut().enumerate() {
                        *sij = mask >> (n * (i + 1) + j) & 1 == 1;
                        w *= if *sij { q } else { fs };
                    }
                }
                fwd[forward_max(&a, &s)] += w;
                rev[reversed_max(&a, &s)] += w;
            }
        }
        DualityMode::MonteCarlo { reps } => {
            if reps == 0 {
                return Err(Error::arg("reps", "need at least one replication"));
            }
            let draw = |rng: &mut R| -> (Vec<bool>, Vec<Vec<bool>>) {
                let a = (0..n).map(|_| rng.random_bool(p)).collect();
                let s = (0..servers).map(|_| (0..n).map(|_| rng.random_bool(q)).collect()).collect();
                (a, s)
            };
            let w = 1.0 / reps as f64;
            for _ in 0..reps {
                let (a, s) = draw(rng);
                fwd[forward_max(&a, &s)] += w;
                // independent sample for the reversed side
                let (a, s) = draw(rng);
                rev[reversed_max(&a, &s)] += w;
            }
        }
    }
    Ok(DualityReport {
        n_slots,
        n_servers: servers,
        mode,
        tv_distance: tv(&fwd, &rev),
        forward_pmf: fwd,
        reversed_pmf: rev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn exact_single_server() {
        let p = SystemParams::with_scale(1.0, 1.0, 1, 4.0, 1.0).unwrap();
        let r = duality_check(&p, 3, DualityMode::Exact, &mut seeded(0)).unwrap();
        assert!(r.tv_distance < 1e-12);
        assert!((r.forward_pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_two_servers() {
        let p = SystemParams::with_scale(0.7, 0.4, 2, 3.0, 1.0).unwrap();
        let r = duality_check(&p, 3, DualityMode::Exact, &mut seeded(0)).unwrap();
        assert!(r.tv_distance < 1e-12);
    }

    #[test]
    fn zero_slots_is_degenerate() {
        let p = SystemParams::new(1.0, 1.0, 3).unwrap();
        let r = duality_check(&p, 0, DualityMode::Exact, &mut seeded(0)).unwrap();
        assert_eq!(r.forward_pmf, vec![1.0]);
        assert_eq!(r.reversed_pmf, vec![1.0]);
    }

    #[test]
    fn refuses_large_enumeration() {
        let p = SystemParams::new(1.0, 1.0, 8).unwrap();
        assert!(matches!(
            duality_check(&p, 6, DualityMode::Exact, &mut seeded(0)),
            Err(Error::EnumerationBudget { .. })
        ));
        let p1 = SystemParams::with_scale(1.0, 1.0, 1, 4.0, 1.0).unwrap();
        assert!(duality_check(&p1, 9, DualityMode::Exact, &mut seeded(0)).is_err());
    }

    #[test]
    fn monte_carlo_mode_agrees_roughly() {
        let p = SystemParams::with_scale(1.0, 1.0, 2, 3.0, 1.0).unwrap();
        let r = duality_check(&p, 5, DualityMode::MonteCarlo { reps: 50_000 }, &mut seeded(9)).unwrap();
        assert!(r.tv_distance < 0.02, "{}", r.tv_distance);
    }
}
