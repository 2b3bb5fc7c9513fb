use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of the uniform structure: a metric ball relation or a cylinder
/// (agree-on-prefix) relation.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Entourage {
    /// (x, y) ∈ ε iff d(x, y) < radius (open ball; ties are outside).
    MetricBall { radius: f64 },
    /// (x, y) ∈ ε iff x and y agree on their first `depth` symbols.
    Cylinder { depth: usize },
}

impl Entourage {
    pub fn ball(radius: f64) -> Self {
        Entourage::MetricBall { radius }
    }

    pub fn cylinder(depth: usize) -> Self {
        Entourage::Cylinder { depth }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Entourage::MetricBall { radius } if !(radius > 0.0 && radius.is_finite()) => Err(
                Error::InvalidArgument(format!("ball radius must be positive, got {radius}")),
            ),
            Entourage::Cylinder { depth: 0 } => {
                Err(Error::InvalidArgument("cylinder depth must be ≥ 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// An entourage whose threefold composition lies inside `self`.
    ///
    /// Cylinders are equivalence relations, so they compose to themselves.
    pub fn third(&self) -> Self {
        match *self {
            Entourage::MetricBall { radius } => Entourage::MetricBall { radius: radius / 3.0 },
            c @ Entourage::Cylinder { .. } => c,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match *self {
            Entourage::MetricBall { radius } => Some(radius),
            Entourage::Cylinder { .. } => None,
        }
    }
}

impl fmt::Display for Entourage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entourage::MetricBall { radius } => write!(f, "r={radius}"),
            Entourage::Cylinder { depth } => write!(f, "depth={depth}"),
        }
    }
}
