//! The circle family τ(r, θ) = (r, θ + r) on radii r_0 = (1+α)π and
//! r_n = (1 + α + γ_n/n)π: distal but not equicontinuous.
//!
//! Angles are kept as fixed-point fractions of a full turn, so the radius of
//! a point is never touched by the map and the angle advances exactly by the
//! represented per-level step.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::circle::{CirclePoint, DEFAULT_ERROR_BUDGET, ULP};
use crate::error::{Error, Result};

/// Rational sequence γ_n → 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GammaSchedule {
    /// γ_n = n/(n+1).
    #[default]
    NOverNPlusOne,
    /// γ_n = (n−1)/n.
    OneMinusInverse,
    /// γ_n = num/den for every n.
    Constant { num: u64, den: u64 },
    /// γ_1, γ_2, ... given explicitly as (num, den) pairs.
    Explicit { values: Vec<(u64, u64)> },
}

impl GammaSchedule {
    /// γ_n as (numerator, denominator), n ≥ 1.
    pub fn gamma(&self, n: u64) -> Result<(u64, u64)> {
        if n == 0 {
            return Err(Error::InvalidArgument("γ_n is indexed from n = 1".into()));
        }
        let g = match self {
            GammaSchedule::NOverNPlusOne => (n, n + 1),
            GammaSchedule::OneMinusInverse => (n - 1, n),
            GammaSchedule::Constant { num, den } => (*num, *den),
            GammaSchedule::Explicit { values } => *values.get(n as usize - 1).ok_or_else(|| {
                Error::InvalidArgument(format!("γ_{n} not provided ({} values)", values.len()))
            })?,
        };
        if g.1 == 0 {
            return Err(Error::InvalidArgument(format!("γ_{n} has zero denominator")));
        }
        Ok(g)
    }

    pub fn gamma_f64(&self, n: u64) -> Result<f64> {
        let (p, q) = self.gamma(n)?;
        Ok(p as f64 / q as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSystem {
    pub name: String,
    /// Small irrational α > 0.
    pub alpha: f64,
    pub gamma: GammaSchedule,
    pub error_budget: f64,
}

/// A point (r_level, θ); level 0 is the limit circle r_0.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnulusPoint {
    pub level: u64,
    /// θ / 2π.
    pub angle: CirclePoint,
}

impl AnnulusPoint {
    pub fn new(level: u64, theta: f64) -> Self {
        AnnulusPoint {
            level,
            angle: CirclePoint::from_f64(theta / TAU),
        }
    }

    /// θ in [0, 2π).
    pub fn theta(&self) -> f64 {
        self.angle.to_f64() * TAU
    }
}

impl AnnulusSystem {
    pub fn new(name: impl Into<String>, alpha: f64, gamma: GammaSchedule) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument("annulus α must be positive".into()));
        }
        Ok(AnnulusSystem {
            name: name.into(),
            alpha,
            gamma,
            error_budget: DEFAULT_ERROR_BUDGET,
        })
    }

    /// r_level in radians.
    pub fn radius(&self, level: u64) -> Result<f64> {
        if level == 0 {
            return Ok((1.0 + self.alpha) * PI);
        }
        let g = self.gamma.gamma_f64(level)?;
        Ok((1.0 + self.alpha + g / level as f64) * PI)
    }

    /// Per-step angle advance r_level / 2π as a turn fraction.
    pub fn step(&self, level: u64) -> Result<CirclePoint> {
        let turns = if level == 0 {
            (1.0 + self.alpha) / 2.0
        } else {
            let g = self.gamma.gamma_f64(level)?;
            (1.0 + self.alpha + g / level as f64) / 2.0
        };
        Ok(CirclePoint::from_f64(turns))
    }

    /// Representation error of one step, in turns.
    pub fn step_error(&self) -> f64 {
        2.0 * f64::EPSILON + ULP
    }

    pub fn iterate(&self, x: AnnulusPoint, n: u64) -> Result<AnnulusPoint> {
        let accumulated = n as f64 * self.step_error();
        if accumulated > self.error_budget {
            return Err(Error::BudgetExceeded {
                accumulated,
                allowed: self.error_budget,
                context: format!("iterate {n} steps of annulus '{}'", self.name),
            });
        }
        let step = self.step(x.level)?;
        Ok(AnnulusPoint {
            level: x.level,
            angle: x.angle.add(step.mul(n)),
        })
    }

    /// max(|Δr|, angular distance), the metric used for entourages.
    pub fn distance(&self, x: &AnnulusPoint, y: &AnnulusPoint) -> Result<f64> {
        let dr = (self.radius(x.level)? - self.radius(y.level)?).abs();
        let dtheta = x.angle.distance(y.angle) * TAU;
        Ok(dr.max(dtheta))
    }

    /// Angular distance between τ^{2n}(r_0, θ) and τ^{2n}(r_{2n}, θ).
    ///
    /// Computed by iterating the map, independently of the closed form
    /// γ_{2n}·π it is expected to equal.
    pub fn equicontinuity_defect(&self, n: u64, theta: f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("defect needs n ≥ 1".into()));
        }
        let inner = self.iterate(AnnulusPoint::new(0, theta), 2 * n)?;
        let outer = self.iterate(AnnulusPoint::new(2 * n, theta), 2 * n)?;
        Ok(inner.angle.distance(outer.angle) * TAU)
    }

    /// γ_{2n}·π folded into [0, π].
    pub fn defect_formula(&self, n: u64) -> Result<f64> {
        let g = self.gamma.gamma_f64(2 * n)?;
        let raw = (g * PI).rem_euclid(TAU);
        Ok(raw.min(TAU - raw))
    }
}
