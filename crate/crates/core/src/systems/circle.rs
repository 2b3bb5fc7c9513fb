//! Fixed-point circle arithmetic and circle rotations.
//!
//! A point of the unit circle is stored as a 0.64 fixed-point fraction, so
//! addition modulo one is plain wrapping addition and is exact. The only
//! arithmetic error in a rotation orbit comes from representing the rotation
//! amount itself, which gives a ledger that grows linearly in the number of
//! steps.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2^64 as a float; the scale of the fixed-point representation.
pub const SCALE: f64 = 18_446_744_073_709_551_616.0;

/// One unit in the last place of a [`CirclePoint`].
pub const ULP: f64 = 1.0 / SCALE;

/// A point of R/Z as `frac / 2^64`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CirclePoint(pub u64);

impl CirclePoint {
    pub const ZERO: CirclePoint = CirclePoint(0);

    /// Reduces `value` modulo one and converts it exactly (an `f64` in [0, 1)
    /// scaled by 2^64 is an integer).
    pub fn from_f64(value: f64) -> Self {
        let reduced = value.rem_euclid(1.0);
        let scaled = reduced * SCALE;
        if scaled >= SCALE {
            // rem_euclid can round up to 1.0 for tiny negative inputs
            CirclePoint(0)
        } else {
            CirclePoint(scaled as u64)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE
    }

    #[inline]
    pub fn add(self, other: CirclePoint) -> CirclePoint {
        CirclePoint(self.0.wrapping_add(other.0))
    }

    #[inline]
    pub fn sub(self, other: CirclePoint) -> CirclePoint {
        CirclePoint(self.0.wrapping_sub(other.0))
    }

    /// `n · self` modulo one, exact.
    #[inline]
    pub fn mul(self, n: u64) -> CirclePoint {
        CirclePoint(self.0.wrapping_mul(n))
    }

    /// Integer multiple for signed group elements.
    #[inline]
    pub fn mul_signed(self, n: i64) -> CirclePoint {
        CirclePoint(self.0.wrapping_mul(n as u64))
    }

    /// Circular distance min(|a−b|, 1−|a−b|) in units of 2^-64.
    ///
    /// The result lies in [0, 2^63]; it is returned as `u128` so that a
    /// distance can be compared against radii of one half or more.
    #[inline]
    pub fn distance_units(self, other: CirclePoint) -> u128 {
        let d = self.0.wrapping_sub(other.0);
        let e = other.0.wrapping_sub(self.0);
        d.min(e) as u128
    }

    pub fn distance(self, other: CirclePoint) -> f64 {
        self.distance_units(other) as f64 / SCALE
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12}", self.to_f64())
    }
}

/// A radius converted exactly into fixed-point units (`radius · 2^64`).
///
/// `dist < radius` is then an integer comparison with no rounding.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RadiusUnits(pub u128);

impl RadiusUnits {
    pub fn from_f64(radius: f64) -> Self {
        // Radii beyond 1 behave like 1 on the circle.
        let r = radius.clamp(0.0, 1.0);
        RadiusUnits((r * SCALE) as u128)
    }

    #[inline]
    pub fn contains(self, distance_units: u128) -> bool {
        distance_units < self.0
    }
}

/// How the rotation amount was specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AlphaSpec {
    /// (√5 − 1)/2, the golden conjugate.
    Golden,
    /// 1 − (√5 − 1)/2 = (3 − √5)/2.
    GoldenComplement,
    /// Fractional part of √n for a non-square n.
    SqrtFrac { n: u64 },
    /// p/q in lowest terms; the orbit is periodic with period q.
    Rational { p: u64, q: u64 },
    /// A decimal literal, treated as exact up to its `f64` parse error.
    Decimal { value: f64 },
}

/// floor(2^64 · frac(√n)) computed with big integers.
fn sqrt_frac_fixed(n: u64) -> u64 {
    let scaled = BigUint::from(n) << 128u32;
    let root: BigUint = scaled.sqrt();
    let low = root & BigUint::from(u64::MAX);
    low.to_u64_digits().first().copied().unwrap_or(0)
}

impl AlphaSpec {
    /// The nearest-below representable value and a bound on |represented − true|.
    pub fn resolve(&self) -> Result<(CirclePoint, f64)> {
        match *self {
            AlphaSpec::Golden => {
                // (√5 − 1)/2 = (frac(√5) + 1)/2 since √5 = 2.236...
                let frac5 = sqrt_frac_fixed(5);
                let value = (frac5 >> 1) | (1u64 << 63);
                Ok((CirclePoint(value), ULP))
            }
            AlphaSpec::GoldenComplement => {
                let (g, err) = AlphaSpec::Golden.resolve()?;
                Ok((CirclePoint(0).sub(g), err))
            }
            AlphaSpec::SqrtFrac { n } => {
                let r = (n as f64).sqrt().floor() as u64;
                if (r * r == n) || ((r + 1) * (r + 1) == n) {
                    return Err(Error::InvalidArgument(format!(
                        "sqrt_frac: {n} is a perfect square"
                    )));
                }
                Ok((CirclePoint(sqrt_frac_fixed(n)), ULP))
            }
            AlphaSpec::Rational { p, q } => {
                if q == 0 {
                    return Err(Error::InvalidArgument("rational alpha with q = 0".into()));
                }
                let p = p % q;
                let num = (p as u128) << 64;
                let value = (num / q as u128) as u64;
                let exact = num.is_multiple_of(q as u128);
                Ok((CirclePoint(value), if exact { 0.0 } else { ULP }))
            }
            AlphaSpec::Decimal { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidArgument("alpha must be finite".into()));
                }
                let point = CirclePoint::from_f64(value);
                // half an f64 ulp of the literal plus the truncation to 2^-64
                let err = value.abs().max(1.0) * f64::EPSILON * 0.5 + ULP;
                Ok((point, err))
            }
        }
    }

    /// Known period of the true rotation, if rational.
    pub fn period(&self) -> Option<u64> {
        match *self {
            AlphaSpec::Rational { p, q } if q > 0 => {
                let g = num_integer::gcd(p % q, q);
                Some(if g == 0 { 1 } else { q / g })
            }
            _ => None,
        }
    }
}

/// Default tolerated accumulated orbit error.
pub const DEFAULT_ERROR_BUDGET: f64 = 1e-9;

/// x ↦ x + α on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSystem {
    pub name: String,
    pub spec: AlphaSpec,
    pub alpha: CirclePoint,
    /// Bound on |represented α − true α|.
    pub alpha_error: f64,
    /// Largest accumulated orbit error `iterate` accepts.
    pub error_budget: f64,
}

impl RotationSystem {
    pub fn new(name: impl Into<String>, spec: AlphaSpec) -> Result<Self> {
        let (alpha, alpha_error) = spec.resolve()?;
        Ok(RotationSystem {
            name: name.into(),
            spec,
            alpha,
            alpha_error,
            error_budget: DEFAULT_ERROR_BUDGET,
        })
    }

    pub fn golden() -> Self {
        Self::new("golden", AlphaSpec::Golden).expect("golden alpha resolves")
    }

    pub fn with_error_budget(mut self, budget: f64) -> Self {
        self.error_budget = budget;
        self
    }

    /// Per-step error: representation of α plus one fixed-point ulp.
    pub fn step_error(&self) -> f64 {
        self.alpha_error + ULP
    }

    /// Accumulated error after `n` steps.
    pub fn accumulated_error(&self, n: u64) -> f64 {
        n as f64 * self.step_error()
    }

    /// Refuses when `n` steps would exceed `radius / 10`.
    pub fn check_radius_budget(&self, n: u64, radius: f64) -> Result<()> {
        let accumulated = self.accumulated_error(n);
        let allowed = radius / 10.0;
        if accumulated > allowed {
            return Err(Error::BudgetExceeded {
                accumulated,
                allowed,
                context: format!("{} steps of rotation '{}' at radius {radius}", n, self.name),
            });
        }
        Ok(())
    }

    pub fn period(&self) -> Option<u64> {
        self.spec.period()
    }

    pub fn iterate(&self, x: CirclePoint, n: u64) -> Result<CirclePoint> {
        let accumulated = self.accumulated_error(n);
        if accumulated > self.error_budget {
            return Err(Error::BudgetExceeded {
                accumulated,
                allowed: self.error_budget,
                context: format!("iterate {} steps of rotation '{}'", n, self.name),
            });
        }
        Ok(x.add(self.alpha.mul(n)))
    }

    /// Orbit points x, x+α, ..., x+(n−1)α without budget checks.
    pub fn orbit(&self, x: CirclePoint) -> impl Iterator<Item = CirclePoint> + '_ {
        std::iter::successors(Some(x), move |p| Some(p.add(self.alpha)))
    }
}
