//! Initial queue lengths `Q_i(0) = floor(r_N U_i) + o_N`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dist::{CustomLaw, Law, TailExponent, TailValue};
use crate::error::{Error, Result};
use crate::model::MAX_HORIZON;

#[derive(Debug, Clone)]
pub enum InitFamily {
    Zero,
    Degenerate { endpoint: f64 },
    HalfNormal,
    Lognormal,
    ExpOfExp,
    Exponential,
    Custom(CustomLaw),
}

impl InitFamily {
    /// Law of `U_i`; `None` for the empty start.
    pub fn law(&self) -> Option<Law> {
        Some(match self {
            InitFamily::Zero => return None,
            InitFamily::Degenerate { endpoint } => Law::Degenerate { endpoint: *endpoint },
            InitFamily::HalfNormal => Law::HalfNormal,
            InitFamily::Lognormal => Law::Lognormal,
            InitFamily::ExpOfExp => Law::ExpOfExp,
            InitFamily::Exponential => Law::Exponential,
            InitFamily::Custom(c) => Law::Custom(c.clone()),
        })
    }

    pub fn tail_exponent(&self) -> TailExponent {
        self.law().map_or(TailExponent::FiniteEndpoint, |l| l.tail_exponent())
    }
}

/// How the normaliser `b_N` in `r_N = q0 N ln N / b_N` is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingRule {
    /// The `(1 - 1/N)` quantile, except `sqrt(2 ln N)` for the half-normal.
    #[default]
    Standard,
    /// Always the `(1 - 1/N)` quantile.
    Quantile,
}

/// Common additive term `o_N = floor(kappa N sqrt(ln N))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependentOffset {
    pub kappa: f64,
}

impl DependentOffset {
    pub fn value(&self, n: usize) -> u64 {
        let n = n as f64;
        (self.kappa * n * n.ln().sqrt()).floor() as u64
    }
}

#[derive(Debug, Clone)]
pub struct InitialConditionSpec {
    pub family: InitFamily,
    pub q0_target: f64,
    pub scaling: ScalingRule,
    pub dependent_offset: Option<DependentOffset>,
}

impl InitialConditionSpec {
    pub fn new(family: InitFamily, q0_target: f64) -> Self {
        Self {
            family,
            q0_target,
            scaling: ScalingRule::Standard,
            dependent_offset: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(InitFamily::Zero, 0.0)
    }

    pub fn h_function(&self) -> TailExponent {
        self.family.tail_exponent()
    }

    /// Fluid-scale starting point: zero for the empty start.
    pub fn fluid_q0(&self) -> f64 {
        match self.family {
            InitFamily::Zero => 0.0,
            _ => self.q0_target,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.q0_target >= 0.0 && self.q0_target.is_finite()) {
            return Err(Error::arg("q0_target", format!("must be nonnegative, got {}", self.q0_target)));
        }
        if let InitFamily::Degenerate { endpoint } = self.family {
            if !(endpoint > 0.0 && endpoint.is_finite()) {
                return Err(Error::arg("endpoint", format!("must be positive, got {endpoint}")));
            }
        }
        if let Some(o) = self.dependent_offset {
            if !(o.kappa >= 0.0 && o.kappa.is_finite()) {
                return Err(Error::arg("kappa", format!("must be nonnegative, got {}", o.kappa)));
            }
        }
        Ok(())
    }
}

/// `h(v)` of the family, or the finite-endpoint marker for bounded laws.
pub fn h_of(spec: &InitialConditionSpec, v: f64) -> Result<TailValue> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::arg("v", format!("must lie in [0, 1], got {v}")));
    }
    Ok(match spec.h_function() {
        TailExponent::FiniteEndpoint => TailValue::FiniteEndpoint,
        h => TailValue::Value(h.value(v)),
    })
}

/// Normaliser `b_N` of the family.
pub fn normalizer(family: &InitFamily, n: usize, rule: ScalingRule) -> Result<f64> {
    if n < 2 {
        return Err(Error::arg("n", format!("need N >= 2, got {n}")));
    }
    let nf = n as f64;
    let law = match (family, rule) {
        (InitFamily::Zero, _) => return Ok(1.0),
        (InitFamily::HalfNormal, ScalingRule::Standard) => return Ok((2.0 * nf.ln()).sqrt()),
        (f, _) => f.law().expect("non-zero family has a law"),
    };
    match law.right_endpoint() {
        Some(e) => Ok(e),
        None => law.upper_quantile(nf, 1e-12),
    }
}

/// `r_N = q0 N ln N / b_N`.
pub fn r_scaling_for(family: &InitFamily, q0: f64, n: usize, rule: ScalingRule) -> Result<f64> {
    if !(q0 >= 0.0 && q0.is_finite()) {
        return Err(Error::arg("q0", format!("must be nonnegative, got {q0}")));
    }
    if matches!(family, InitFamily::Zero) {
        return Ok(0.0);
    }
    let nf = n as f64;
    Ok(q0 * nf * nf.ln() / normalizer(family, n, rule)?)
}

/// Draws `(floor(r_N U_i) + o_N)_{i <= N}`.
pub fn sample_initial<R: RngCore + ?Sized>(spec: &InitialConditionSpec, n: usize, rng: &mut R) -> Result<Vec<u64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::arg("n", "need at least one server"));
    }
    let offset = spec.dependent_offset.map_or(0, |o| o.value(n));
    let r = if n == 1 {
        0.0
    } else {
        r_scaling_for(&spec.family, spec.q0_target, n, spec.scaling)?
    };
    let law = match spec.family.law() {
        Some(l) if r > 0.0 => l,
        _ => return Ok(vec![offset; n]),
    };
    (0..n)
        .map(|_| {
            let x = (r * law.sample(rng)).floor();
            if !(x >= 0.0) || x > MAX_HORIZON as f64 {
                return Err(Error::arg("initial condition", format!("sampled value {x} out of range")));
            }
            Ok(x as u64 + offset)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn zero_family() {
        let spec = InitialConditionSpec::zero();
        for n in [1, 7, 100] {
            assert_eq!(sample_initial(&spec, n, &mut seeded(1)).unwrap(), vec![0; n]);
        }
    }

    #[test]
    fn degenerate_family() {
        let spec = InitialConditionSpec::new(InitFamily::Degenerate { endpoint: 1.0 }, 0.5);
        let v = sample_initial(&spec, 100, &mut seeded(1)).unwrap();
        assert!(v.iter().all(|&x| x == 230));
    }

    #[test]
    fn rejects_negative_q0() {
        let spec = InitialConditionSpec::new(InitFamily::Exponential, -0.1);
        assert!(sample_initial(&spec, 10, &mut seeded(1)).is_err());
    }

    #[test]
    fn tail_exponent_values() {
        let hn = InitialConditionSpec::new(InitFamily::HalfNormal, 1.0);
        let ex = InitialConditionSpec::new(InitFamily::Exponential, 1.0);
        let ln = InitialConditionSpec::new(InitFamily::Lognormal, 1.0);
        let ee = InitialConditionSpec::new(InitFamily::ExpOfExp, 1.0);
        assert_eq!(h_of(&hn, 0.5).unwrap(), TailValue::Value(0.25));
        assert_eq!(h_of(&ex, 1.0).unwrap(), TailValue::Value(1.0));
        assert_eq!(h_of(&ln, 0.0).unwrap(), TailValue::Value(0.0));
        assert_eq!(h_of(&ln, 1e-9).unwrap(), TailValue::Value(1.0));
        assert_eq!(h_of(&ee, 0.999).unwrap(), TailValue::Value(0.0));
        assert_eq!(h_of(&ee, 1.0).unwrap(), TailValue::Value(1.0));
        assert_eq!(h_of(&InitialConditionSpec::zero(), 0.3).unwrap(), TailValue::FiniteEndpoint);
        assert!(h_of(&hn, 1.5).is_err());
    }

    #[test]
    fn scaling_examples() {
        let r = r_scaling_for(&InitFamily::HalfNormal, 1.0, 1000, ScalingRule::Standard).unwrap();
        assert!((r - 1858.47).abs() < 0.05, "{r}");
        let r = r_scaling_for(&InitFamily::Exponential, 0.7, 100, ScalingRule::Standard).unwrap();
        assert!((r - 70.0).abs() < 1e-12);
        let r = r_scaling_for(&InitFamily::Degenerate { endpoint: 2.0 }, 0.6, 50, ScalingRule::Standard).unwrap();
        assert!((r - 0.6 * 50.0 * 50f64.ln() / 2.0).abs() < 1e-12);
        let q = normalizer(&InitFamily::HalfNormal, 1000, ScalingRule::Quantile).unwrap();
        assert!((q - 3.2905267314918945).abs() < 1e-10);
    }

    #[test]
    fn offset_is_vanishing() {
        for n in [10usize, 100, 10_000, 1_000_000] {
            let kappa = 0.8;
            let o = DependentOffset { kappa }.value(n) as f64;
            let nf = n as f64;
            assert!(o / (nf * nf.ln()) <= kappa / nf.ln().sqrt());
        }
    }

    #[test]
    fn offset_is_added_to_every_entry() {
        let mut spec = InitialConditionSpec::new(InitFamily::Degenerate { endpoint: 1.0 }, 0.5);
        spec.dependent_offset = Some(DependentOffset { kappa: 0.1 });
        let v = sample_initial(&spec, 100, &mut seeded(2)).unwrap();
        let o = (0.1 * 100.0 * 100f64.ln().sqrt()).floor() as u64;
        assert!(v.iter().all(|&x| x == 230 + o));
    }
}
