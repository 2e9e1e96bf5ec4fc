//! Fluid limits of the scaled maximum queue.

use serde::{Deserialize, Serialize};

use crate::dist::TailExponent;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::search::refine_max_unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Full,
    N3Clock,
    SteadyState,
}

/// `sqrt(2 a t) - b t` before `t = a / (2 b^2)`, then the plateau `a / (2 b)`.
pub fn q_empty_start<T: Real>(alpha: T, beta: T, t: T) -> T {
    let two = T::lit(2.0);
    if t < alpha / (two * beta * beta) {
        (two * alpha * t).sqrt() - beta * t
    } else {
        steady_state(alpha, beta)
    }
}

pub fn steady_state<T: Real>(alpha: T, beta: T) -> T {
    alpha / (T::lit(2.0) * beta)
}

/// Limit on the `N^3 ln N` clock with spatial scale `N ln N`, started empty.
pub fn q_n3_clock<T: Real>(alpha: T, t: T) -> T {
    (T::lit(2.0) * alpha * t).sqrt()
}

/// `g(t, q0)` for the families with a known closed form, keyed by their tail
/// exponent: `v^2`, `v`, `1(v > 0)`, `1(v = 1)` and bounded laws.
pub fn g_closed_form<T: Real>(h: &TailExponent, alpha: T, q0: T, t: T) -> Result<T> {
    check_args(q0, t)?;
    let two = T::lit(2.0);
    let s = (two * alpha * t).sqrt();
    match h {
        TailExponent::Power(a) if *a == 2.0 => Ok((q0 * q0 + two * alpha * t).sqrt()),
        TailExponent::Power(a) if *a == 1.0 => {
            if q0 > T::zero() && t < two * q0 * q0 / alpha {
                Ok(q0 + alpha * t / (two * q0))
            } else {
                Ok(s)
            }
        }
        TailExponent::PositiveIndicator => Ok(q0.max(s)),
        TailExponent::UnitIndicator | TailExponent::FiniteEndpoint => Ok(q0 + s),
        other => Err(Error::arg("family", format!("no closed form for tail exponent {other:?}"))),
    }
}

fn check_args<T: Real>(q0: T, t: T) -> Result<()> {
    if !(q0 >= T::zero()) || !q0.is_finite() {
        return Err(Error::arg("q0", format!("must be nonnegative, got {q0}")));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::arg("t", format!("must be nonnegative, got {t}")));
    }
    Ok(())
}

/// `sup { sqrt(2 a t) u + q0 v : u^2 + h(v) <= 1, u, v in [0, 1] }`.
///
/// For fixed `v` the best `u` is `sqrt(1 - h(v))`, leaving a search over
/// `v`. The endpoints `v = 0, 1` and the one-sided limits `0+`, `1-` are
/// evaluated explicitly so that jumps of `h` at the boundary are handled
/// exactly.
pub fn g_numeric<T: Real>(h: &TailExponent, alpha: T, q0: T, t: T, tol: T) -> Result<T> {
    check_args(q0, t)?;
    if !(tol > T::zero()) {
        return Err(Error::arg("tolerance", "must be positive"));
    }
    let s = (T::lit(2.0) * alpha * t).sqrt();
    let objective = |v: T, hv: T| -> Option<T> {
        (hv <= T::one()).then(|| s * (T::one() - hv).max(T::zero()).sqrt() + q0 * v)
    };
    let boundary = [
        objective(T::zero(), h.value(T::zero())),
        objective(T::zero(), h.right_limit_at_zero()),
        objective(T::one(), h.left_limit_at_one()),
        objective(T::one(), h.value(T::one())),
    ];
    let interior = refine_max_unit(|v| objective(v, h.value(v)), tol)?.map(|(_, y)| y);
    boundary
        .into_iter()
        .chain(std::iter::once(interior))
        .flatten()
        .reduce(|a, b| a.max(b))
        .ok_or(Error::NonConvergence {
            what: "g_numeric (empty feasible set)",
            iterations: 0,
        })
}

/// Evaluates `g(t, q0)`.
pub trait GEvaluator<T: Real> {
    fn g(&self, alpha: T, q0: T, t: T) -> Result<T>;
}

pub struct ClosedForm<'a>(pub &'a TailExponent);

pub struct Numeric<'a, T> {
    pub h: &'a TailExponent,
    pub tol: T,
}

impl<T: Real> GEvaluator<T> for ClosedForm<'_> {
    fn g(&self, alpha: T, q0: T, t: T) -> Result<T> {
        g_closed_form(self.0, alpha, q0, t)
    }
}

impl<T: Real> GEvaluator<T> for Numeric<'_, T> {
    fn g(&self, alpha: T, q0: T, t: T) -> Result<T> {
        g_numeric(self.h, alpha, q0, t, self.tol)
    }
}

/// Closed form when one exists, otherwise the numeric solver.
pub struct Auto<'a, T> {
    pub h: &'a TailExponent,
    pub tol: T,
}

impl<T: Real> GEvaluator<T> for Auto<'_, T> {
    fn g(&self, alpha: T, q0: T, t: T) -> Result<T> {
        match g_closed_form(self.h, alpha, q0, t) {
            Err(Error::InvalidArgument { name: "family", .. }) => g_numeric(self.h, alpha, q0, t, self.tol),
            r => r,
        }
    }
}

/// The two branches whose maximum is `q(t)`: empty start and `g - beta t`.
pub fn q_branches<T: Real>(alpha: T, beta: T, q0: T, t: T, g: &impl GEvaluator<T>) -> Result<(T, T)> {
    Ok((q_empty_start(alpha, beta, t), g.g(alpha, q0, t)? - beta * t))
}

pub fn q_full<T: Real>(alpha: T, beta: T, q0: T, t: T, g: &impl GEvaluator<T>) -> Result<T> {
    let (a, b) = q_branches(alpha, beta, q0, t, g)?;
    Ok(a.max(b))
}

/// A fluid curve sampled on a time grid.
#[derive(Debug, Clone)]
pub struct FluidCurve<T> {
    pub regime: Regime,
    pub alpha: T,
    pub beta: T,
    pub q0: T,
    pub h: TailExponent,
    pub values: Vec<(T, T)>,
}

impl<T: Real> FluidCurve<T> {
    pub fn evaluate(regime: Regime, alpha: T, beta: T, q0: T, h: TailExponent, ts: &[T]) -> Result<Self> {
        if !(alpha > T::zero() && beta > T::zero()) {
            return Err(Error::InvalidParams(format!("alpha and beta must be positive ({alpha}, {beta})")));
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        let g = Auto { h: &h, tol };
        let values = ts
            .iter()
            .map(|&t| {
                let q = match regime {
                    Regime::Full => q_full(alpha, beta, q0, t, &g)?,
                    Regime::N3Clock => {
                        check_args(q0, t)?;
                        q_n3_clock(alpha, t)
                    }
                    Regime::SteadyState => steady_state(alpha, beta),
                };
                Ok((t, q))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            regime,
            alpha,
            beta,
            q0,
            h,
            values,
        })
    }
}
