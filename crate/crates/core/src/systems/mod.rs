//! Concrete compact systems with auditable arithmetic error budgets.

pub mod annulus;
pub mod circle;
pub mod entourage;
pub mod substitution;
pub mod torus;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use annulus::{AnnulusPoint, AnnulusSystem, GammaSchedule};
pub use circle::{AlphaSpec, CirclePoint, RadiusUnits, RotationSystem};
pub use entourage::Entourage;
pub use substitution::{SequenceSystem, SubstitutionSystem, Symbol, SymbolicPoint};
pub use torus::TorusZdAction;

use crate::error::{Error, Result};
use crate::flow::LinearFlow;

/// A concrete dynamical system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SystemDescriptor {
    Rotation(RotationSystem),
    Substitution(SubstitutionSystem),
    Sequence(SequenceSystem),
    TorusZd(TorusZdAction),
    LinearFlow(LinearFlow),
    Annulus(AnnulusSystem),
}

/// A point of one of the implemented phase spaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Point {
    Circle(CirclePoint),
    Symbolic(SymbolicPoint),
    Torus(Vec<CirclePoint>),
    Annulus(AnnulusPoint),
}

impl Point {
    pub fn kind(&self) -> &'static str {
        match self {
            Point::Circle(_) => "circle",
            Point::Symbolic(_) => "symbolic",
            Point::Torus(_) => "torus",
            Point::Annulus(_) => "annulus",
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Circle(c) => write!(f, "{c}"),
            Point::Symbolic(s) => write!(f, "offset={}", s.offset),
            Point::Torus(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(";"))
            }
            Point::Annulus(a) => write!(f, "(level={};theta={:.12})", a.level, a.theta()),
        }
    }
}

impl SystemDescriptor {
    pub fn name(&self) -> &str {
        match self {
            SystemDescriptor::Rotation(s) => &s.name,
            SystemDescriptor::Substitution(s) => &s.name,
            SystemDescriptor::Sequence(s) => &s.name,
            SystemDescriptor::TorusZd(s) => &s.name,
            SystemDescriptor::LinearFlow(s) => &s.name,
            SystemDescriptor::Annulus(s) => &s.name,
        }
    }

    fn expected_point(&self) -> &'static str {
        match self {
            SystemDescriptor::Rotation(_) => "circle",
            SystemDescriptor::Substitution(_) | SystemDescriptor::Sequence(_) => "symbolic",
            SystemDescriptor::TorusZd(_) | SystemDescriptor::LinearFlow(_) => "torus",
            SystemDescriptor::Annulus(_) => "annulus",
        }
    }

    fn mismatch(&self, p: &Point) -> Error {
        Error::PointKind {
            expected: self.expected_point(),
            found: p.kind(),
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("descriptor serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// fⁿ(point); for flows, the time-n map.
    pub fn iterate(&self, point: &Point, n: u64) -> Result<Point> {
        match (self, point) {
            (SystemDescriptor::Rotation(r), Point::Circle(x)) => Ok(Point::Circle(r.iterate(*x, n)?)),
            (SystemDescriptor::Substitution(_), Point::Symbolic(p))
            | (SystemDescriptor::Sequence(_), Point::Symbolic(p)) => Ok(Point::Symbolic(p.shifted(n))),
            (SystemDescriptor::Annulus(a), Point::Annulus(x)) => Ok(Point::Annulus(a.iterate(*x, n)?)),
            (SystemDescriptor::TorusZd(t), Point::Torus(x)) => {
                if t.d != 1 {
                    return Err(Error::Unsupported(format!(
                        "iterate needs a Z-action; '{}' is a Z^{} action (use act)",
                        t.name, t.d
                    )));
                }
                let step = [n.min(i64::MAX as u64) as i64];
                let accumulated = t.accumulated_error(&step);
                if accumulated > circle::DEFAULT_ERROR_BUDGET {
                    return Err(Error::BudgetExceeded {
                        accumulated,
                        allowed: circle::DEFAULT_ERROR_BUDGET,
                        context: format!("iterate {n} steps of '{}'", t.name),
                    });
                }
                Ok(Point::Torus(t.act(&step, x)?))
            }
            (SystemDescriptor::LinearFlow(f), Point::Torus(x)) => {
                let accumulated = f.accumulated_error(n as f64);
                if accumulated > circle::DEFAULT_ERROR_BUDGET {
                    return Err(Error::BudgetExceeded {
                        accumulated,
                        allowed: circle::DEFAULT_ERROR_BUDGET,
                        context: format!("flow '{}' to time {n}", f.name),
                    });
                }
                Ok(Point::Torus(f.act(x, n as f64)?))
            }
            _ => Err(self.mismatch(point)),
        }
    }

    /// y ∈ ε[x].
    pub fn in_entourage(&self, eps: &Entourage, x: &Point, y: &Point) -> Result<bool> {
        eps.validate()?;
        match (self, eps) {
            (SystemDescriptor::Rotation(_), Entourage::MetricBall { radius }) => match (x, y) {
                (Point::Circle(a), Point::Circle(b)) => {
                    Ok(RadiusUnits::from_f64(*radius).contains(a.distance_units(*b)))
                }
                _ => Err(self.mismatch(if matches!(x, Point::Circle(_)) { y } else { x })),
            },
            (SystemDescriptor::TorusZd(_) | SystemDescriptor::LinearFlow(_), Entourage::MetricBall { radius }) => match (x, y) {
                (Point::Torus(a), Point::Torus(b)) if a.len() == b.len() => {
                    Ok(RadiusUnits::from_f64(*radius).contains(TorusZdAction::distance_units(a, b)))
                }
                (Point::Torus(_), Point::Torus(_)) => {
                    Err(Error::InvalidArgument("torus points of different dimension".into()))
                }
                _ => Err(self.mismatch(if matches!(x, Point::Torus(_)) { y } else { x })),
            },
            (SystemDescriptor::Annulus(a), Entourage::MetricBall { radius }) => match (x, y) {
                (Point::Annulus(p), Point::Annulus(q)) => Ok(a.distance(p, q)? < *radius),
                _ => Err(self.mismatch(if matches!(x, Point::Annulus(_)) { y } else { x })),
            },
            (SystemDescriptor::Substitution(s), Entourage::Cylinder { depth }) => match (x, y) {
                (Point::Symbolic(p), Point::Symbolic(q)) => Ok(s.read(p, *depth) == s.read(q, *depth)),
                _ => Err(self.mismatch(if matches!(x, Point::Symbolic(_)) { y } else { x })),
            },
            (SystemDescriptor::Sequence(s), Entourage::Cylinder { depth }) => match (x, y) {
                (Point::Symbolic(p), Point::Symbolic(q)) => Ok(s.read(p, *depth) == s.read(q, *depth)),
                _ => Err(self.mismatch(if matches!(x, Point::Symbolic(_)) { y } else { x })),
            },
            (sys, e) => Err(Error::InvalidArgument(format!(
                "entourage {e} does not apply to {} systems",
                sys.expected_point()
            ))),
        }
    }
}
