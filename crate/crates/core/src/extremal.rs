//! Maxima of sums of differently scaled i.i.d. sequences.
//!
//! For relatively stable laws with tail exponents `h_j` and scalings `a_N^(j)`
//! defined by `P(Y^(j) >= a_N^(j)) = 1/N`,
//! `max_i sum_j Y_i^(j) / a_N^(j)` converges in probability to
//! `c* = sup { sum_j u_j : sum_j h_j(u_j) <= 1, u_j in [0, 1] }`.

use serde::{Deserialize, Serialize};

use crate::dist::{Law, TailExponent};
use crate::error::{Error, Result};
use crate::rng::{StreamKey, Substream};
use crate::scalar::Real;
use crate::search::refine_max_unit;
use crate::stats::{summarize, Summary};

/// Largest number of components `c_star` accepts.
pub const MAX_COMPONENTS: usize = 3;

/// `(1 - 1/N)` quantile of a law with unbounded support.
pub fn scaling_sequence(law: &Law, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::arg("n", format!("need N >= 2, got {n}")));
    }
    if law.right_endpoint().is_some() {
        return Err(Error::arg("law", format!("{law:?} has a finite right endpoint")));
    }
    law.upper_quantile(n as f64, 1e-10)
}

/// Limiting constant `c*` for up to three components.
pub fn c_star<T: Real>(hs: &[TailExponent], tol: T) -> Result<T> {
    if hs.is_empty() || hs.len() > MAX_COMPONENTS {
        return Err(Error::arg(
            "h_list",
            format!("need between 1 and {MAX_COMPONENTS} components, got {}", hs.len()),
        ));
    }
    best(hs, T::one(), tol)?.ok_or(Error::NonConvergence {
        what: "c_star (empty feasible set)",
        iterations: 0,
    })
}

/// `sup { sum u_j : sum h_j(u_j) <= budget }`, `None` when infeasible.
fn best<T: Real>(hs: &[TailExponent], budget: T, tol: T) -> Result<Option<T>> {
    let (h, rest) = hs.split_first().expect("non-empty");
    if rest.is_empty() {
        return Ok(h.sup_within_budget(budget));
    }
    let value = |u: T, hu: T| -> Result<Option<T>> { Ok(best(rest, budget - hu, tol)?.map(|b| u + b)) };
    let mut candidates = vec![
        value(T::zero(), h.value(T::zero()))?,
        value(T::zero(), h.right_limit_at_zero())?,
        value(T::one(), h.left_limit_at_one())?,
        value(T::one(), h.value(T::one()))?,
    ];
    // the inner solver is itself deterministic; errors propagate through `failure`
    let mut failure = None;
    let interior = refine_max_unit(
        |u| match value(u, h.value(u)) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                None
            }
        },
        tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    candidates.push(interior.map(|(_, y)| y));
    Ok(candidates.into_iter().flatten().reduce(|a, b| a.max(b)))
}

#[derive(Debug, Clone)]
pub struct ExtremalProblem {
    pub components: Vec<Law>,
    pub n_points: usize,
    pub a_scalings: Vec<f64>,
    pub c_star: f64,
}

impl ExtremalProblem {
    /// With `N = 1` no maximum is taken and the scalings are 1.
    pub fn new(components: Vec<Law>, n_points: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::arg("n_points", "need at least one point"));
        }
        let a_scalings = if n_points == 1 {
            vec![1.0; components.len()]
        } else {
            components
                .iter()
                .map(|l| scaling_sequence(l, n_points))
                .collect::<Result<Vec<_>>>()?
        };
        let hs: Vec<TailExponent> = components.iter().map(Law::tail_exponent).collect();
        let c_star = c_star(&hs, 1e-12)?;
        Ok(Self {
            components,
            n_points,
            a_scalings,
            c_star,
        })
    }

    /// One replication of `max_i sum_j Y_i^(j) / a_N^(j)`.
    pub fn sample_max(&self, key: &StreamKey) -> f64 {
        let mut rng = key.stream(Substream::Auxiliary(0));
        let inv: Vec<f64> = self.a_scalings.iter().map(|a| 1.0 / a).collect();
        let mut best = f64::NEG_INFINITY;
        for _ in 0..self.n_points {
            let s: f64 = self
                .components
                .iter()
                .zip(&inv)
                .map(|(law, w)| law.sample(&mut rng) * w)
                .sum();
            best = best.max(s);
        }
        best
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxOfSumsReport {
    pub n_points: usize,
    pub c_star: f64,
    pub samples: Vec<f64>,
    pub summary: Summary,
}

/// Replications `0..reps` of [`ExtremalProblem::sample_max`] under `master_seed`.
pub fn mc_max_of_sums(problem: &ExtremalProblem, reps: usize, master_seed: u64) -> Result<MaxOfSumsReport> {
    if reps == 0 {
        return Err(Error::arg("reps", "need at least one replication"));
    }
    let samples: Vec<f64> = (0..reps as u64)
        .map(|r| problem.sample_max(&StreamKey::new(master_seed, r)))
        .collect();
    Ok(report(problem, samples))
}

pub fn report(problem: &ExtremalProblem, samples: Vec<f64>) -> MaxOfSumsReport {
    MaxOfSumsReport {
        n_points: problem.n_points,
        c_star: problem.c_star,
        summary: summarize(&samples),
        samples,
    }
}

/// Relative-stability diagnostic: `max_{i <= N} U_i / b_N` per replication.
pub fn max_over_quantile(law: &Law, n: usize, b_n: f64, reps: usize, master_seed: u64) -> Vec<f64> {
    (0..reps as u64)
        .map(|r| {
            let mut rng = StreamKey::new(master_seed, r).stream(Substream::Auxiliary(1));
            let m = (0..n).map(|_| law.sample(&mut rng)).fold(f64::NEG_INFINITY, f64::max);
            m / b_n
        })
        .collect()
}
