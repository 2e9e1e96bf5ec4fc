//! Distribution families shared by the initial-condition samplers and the
//! extremal study, together with their tail-exponent functions `h`.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::open_unit;
use crate::scalar::Real;
use crate::special::{normal_sf, normal_upper_quantile};

/// Limit of `-ln P(U > v t) / -ln P(U > t)` as `t -> inf`, as a function of `v`.
///
/// Multiplicative functions on `[0, 1]` are powers `v^a`; the two
/// discontinuous cases are the indicators `1(v > 0)` (a = 0) and
/// `1(v = 1)` (a = inf). [`TailExponent::FiniteEndpoint`] marks laws with a
/// bounded support, for which `h` is not defined but the fluid limit behaves
/// like the `1(v = 1)` case.
#[derive(Clone)]
pub enum TailExponent {
    Power(f64),
    PositiveIndicator,
    UnitIndicator,
    FiniteEndpoint,
    Custom(CustomTail),
}

/// User-supplied nondecreasing tail exponent.
#[derive(Clone)]
pub struct CustomTail {
    pub name: String,
    pub h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for TailExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailExponent::Power(a) => write!(f, "Power({a})"),
            TailExponent::PositiveIndicator => f.write_str("PositiveIndicator"),
            TailExponent::UnitIndicator => f.write_str("UnitIndicator"),
            TailExponent::FiniteEndpoint => f.write_str("FiniteEndpoint"),
            TailExponent::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

/// Value of a tail exponent, which is undefined for bounded laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailValue {
    Value(f64),
    FiniteEndpoint,
}

impl TailExponent {
    pub fn custom(name: impl Into<String>, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TailExponent::Custom(CustomTail {
            name: name.into(),
            h: Arc::new(h),
        })
    }

    /// `h(v)`; bounded laws are evaluated as `1(v = 1)`.
    pub fn value<T: Real>(&self, v: T) -> T {
        match self {
            TailExponent::Power(a) => {
                if v <= T::zero() {
                    T::zero()
                } else {
                    v.powf(T::lit(*a))
                }
            }
            TailExponent::PositiveIndicator => indicator(v > T::zero()),
            TailExponent::UnitIndicator | TailExponent::FiniteEndpoint => indicator(v >= T::one()),
            TailExponent::Custom(c) => T::lit((c.h)(v.as_f64())),
        }
    }

    /// `h(0+)`.
    pub fn right_limit_at_zero<T: Real>(&self) -> T {
        match self {
            TailExponent::Power(_) | TailExponent::UnitIndicator | TailExponent::FiniteEndpoint => T::zero(),
            TailExponent::PositiveIndicator => T::one(),
            TailExponent::Custom(c) => T::lit((c.h)(1e-15)),
        }
    }

    /// `h(1-)`.
    pub fn left_limit_at_one<T: Real>(&self) -> T {
        match self {
            TailExponent::Power(_) | TailExponent::PositiveIndicator => T::one(),
            TailExponent::UnitIndicator | TailExponent::FiniteEndpoint => T::zero(),
            TailExponent::Custom(c) => T::lit((c.h)(1.0 - 1e-15)),
        }
    }

    /// `sup { u in [0, 1] : h(u) <= budget }`, or `None` when the set is empty.
    pub fn sup_within_budget<T: Real>(&self, budget: T) -> Option<T> {
        if budget < T::zero() {
            return None;
        }
        match self {
            TailExponent::Power(a) => Some(if budget >= T::one() {
                T::one()
            } else {
                budget.powf(T::one() / T::lit(*a))
            }),
            TailExponent::PositiveIndicator => Some(if budget >= T::one() { T::one() } else { T::zero() }),
            TailExponent::UnitIndicator | TailExponent::FiniteEndpoint => Some(T::one()),
            TailExponent::Custom(c) => {
                let b = budget.as_f64();
                if (c.h)(0.0) > b {
                    return None;
                }
                if (c.h)(1.0) <= b {
                    return Some(T::one());
                }
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if (c.h)(mid) <= b {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(T::lit(hi))
            }
        }
    }
}

fn indicator<T: Real>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

/// Built-in laws. `Custom` carries user-supplied closures.
#[derive(Clone)]
pub enum Law {
    Degenerate { endpoint: f64 },
    StandardNormal,
    HalfNormal,
    Lognormal,
    /// Survival `exp(1 - e^v)` for `v >= 0`.
    ExpOfExp,
    /// Unit-rate exponential.
    Exponential,
    Custom(CustomLaw),
}

pub type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomLaw {
    pub name: String,
    pub sampler: Sampler,
    pub survival: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub tail: TailExponent,
    pub endpoint: Option<f64>,
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw")
            .field("name", &self.name)
            .field("tail", &self.tail)
            .field("endpoint", &self.endpoint)
            .finish_non_exhaustive()
    }
}

impl fmt::Debug for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Degenerate { endpoint } => write!(f, "Degenerate({endpoint})"),
            Law::StandardNormal => f.write_str("StandardNormal"),
            Law::HalfNormal => f.write_str("HalfNormal"),
            Law::Lognormal => f.write_str("Lognormal"),
            Law::ExpOfExp => f.write_str("ExpOfExp"),
            Law::Exponential => f.write_str("Exponential"),
            Law::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

/// Serializable names of the built-in laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawName {
    StandardNormal,
    HalfNormal,
    Lognormal,
    ExpOfExp,
    Exponential,
}

impl From<LawName> for Law {
    fn from(n: LawName) -> Self {
        match n {
            LawName::StandardNormal => Law::StandardNormal,
            LawName::HalfNormal => Law::HalfNormal,
            LawName::Lognormal => Law::Lognormal,
            LawName::ExpOfExp => Law::ExpOfExp,
            LawName::Exponential => Law::Exponential,
        }
    }
}

impl Law {
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut rng = rng;
        match self {
            Law::Degenerate { endpoint } => *endpoint,
            Law::StandardNormal => StandardNormal.sample(&mut rng),
            Law::HalfNormal => {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.abs()
            }
            Law::Lognormal => {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.exp()
            }
            Law::ExpOfExp => (1.0 - open_unit(rng).ln()).ln(),
            Law::Exponential => Exp1.sample(&mut rng),
            Law::Custom(c) => {
                let mut dynrng = DynRng(rng);
                (c.sampler)(&mut dynrng)
            }
        }
    }

    /// `P(U > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Law::Degenerate { endpoint } => {
                if x < *endpoint {
                    1.0
                } else {
                    0.0
                }
            }
            Law::StandardNormal => normal_sf(x),
            Law::HalfNormal => {
                if x <= 0.0 {
                    1.0
                } else {
                    2.0 * normal_sf(x)
                }
            }
            Law::Lognormal => {
                if x <= 0.0 {
                    1.0
                } else {
                    normal_sf(x.ln())
                }
            }
            Law::ExpOfExp => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x.exp_m1()).exp()
                }
            }
            Law::Exponential => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x).exp()
                }
            }
            Law::Custom(c) => (c.survival)(x),
        }
    }

    pub fn tail_exponent(&self) -> TailExponent {
        match self {
            Law::Degenerate { .. } => TailExponent::FiniteEndpoint,
            Law::StandardNormal | Law::HalfNormal => TailExponent::Power(2.0),
            Law::Lognormal => TailExponent::PositiveIndicator,
            Law::ExpOfExp => TailExponent::UnitIndicator,
            Law::Exponential => TailExponent::Power(1.0),
            Law::Custom(c) => c.tail.clone(),
        }
    }

    pub fn right_endpoint(&self) -> Option<f64> {
        match self {
            Law::Degenerate { endpoint } => Some(*endpoint),
            Law::Custom(c) => c.endpoint,
            _ => None,
        }
    }

    /// Closed-form `x` with `P(U >= x) = 1 / n`, where one exists.
    pub fn upper_quantile_closed_form(&self, n: f64) -> Option<f64> {
        match self {
            Law::Exponential => Some(n.ln()),
            Law::ExpOfExp => Some(n.ln().ln_1p()),
            Law::Degenerate { endpoint } => Some(*endpoint),
            Law::StandardNormal => Some(normal_upper_quantile(1.0 / n)),
            Law::HalfNormal => Some(normal_upper_quantile(0.5 / n)),
            Law::Lognormal => Some(normal_upper_quantile(1.0 / n).exp()),
            Law::Custom(_) => None,
        }
    }

    /// `x` with `P(U >= x) = 1 / n`: closed form when available, otherwise a
    /// bracketed bisection on the log-survival function to relative
    /// tolerance `rel_tol`.
    pub fn upper_quantile(&self, n: f64, rel_tol: f64) -> Result<f64> {
        if !(n > 1.0) {
            return Err(Error::arg("n", format!("need n > 1, got {n}")));
        }
        if let Some(x) = self.upper_quantile_closed_form(n) {
            return Ok(x);
        }
        upper_quantile_by_bisection(|x| self.survival(x), n, rel_tol)
    }
}

/// Solves `survival(x) = 1 / n` on `[0, inf)` for a nonincreasing survival
/// function with `survival(0) >= 1 / n`.
pub fn upper_quantile_by_bisection(survival: impl Fn(f64) -> f64, n: f64, rel_tol: f64) -> Result<f64> {
    let target = -(n.ln());
    let g = |x: f64| survival(x).ln() - target;
    let mut lo = 0.0;
    if g(lo) < 0.0 {
        return Err(Error::BracketFailure("upper quantile (survival at 0 below target)"));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while g(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 || !hi.is_finite() {
            return Err(Error::BracketFailure("upper quantile"));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= rel_tol * hi {
            break;
        }
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

struct DynRng<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
