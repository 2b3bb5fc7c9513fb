//! Commuting translations of the m-torus: an action of Z^d.

use serde::{Deserialize, Serialize};

use super::circle::{AlphaSpec, CirclePoint, ULP};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusZdAction {
    pub name: String,
    /// Rank of the acting group Z^d.
    pub d: usize,
    /// Torus dimension.
    pub m: usize,
    /// `generators[i][j]`: coordinate j of the i-th translation.
    pub generators: Vec<Vec<CirclePoint>>,
    /// Per-generator representation error (max over coordinates).
    pub generator_errors: Vec<f64>,
}

impl TorusZdAction {
    pub fn new(name: impl Into<String>, specs: &[Vec<AlphaSpec>]) -> Result<Self> {
        let d = specs.len();
        if d == 0 {
            return Err(Error::InvalidArgument("need at least one generator".into()));
        }
        let m = specs[0].len();
        if m == 0 || specs.iter().any(|g| g.len() != m) {
            return Err(Error::InvalidArgument(
                "generators must all have the same positive dimension".into(),
            ));
        }
        let mut generators = Vec::with_capacity(d);
        let mut generator_errors = Vec::with_capacity(d);
        for g in specs {
            let mut coords = Vec::with_capacity(m);
            let mut err = 0.0f64;
            for spec in g {
                let (p, e) = spec.resolve()?;
                coords.push(p);
                err = err.max(e);
            }
            generators.push(coords);
            generator_errors.push(err);
        }
        Ok(TorusZdAction {
            name: name.into(),
            d,
            m,
            generators,
            generator_errors,
        })
    }

    /// Diagonal action: generator i translates coordinate i by `alphas[i]`.
    pub fn diagonal(name: impl Into<String>, alphas: &[AlphaSpec]) -> Result<Self> {
        let d = alphas.len();
        let specs: Vec<Vec<AlphaSpec>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            alphas[i].clone()
                        } else {
                            AlphaSpec::Rational { p: 0, q: 1 }
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(name, &specs)
    }

    /// t · x = x + Σ t_i g_i.
    pub fn act(&self, t: &[i64], x: &[CirclePoint]) -> Result<Vec<CirclePoint>> {
        if t.len() != self.d || x.len() != self.m {
            return Err(Error::InvalidArgument(format!(
                "action expects t ∈ Z^{} and x ∈ T^{}",
                self.d, self.m
            )));
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &xj)| xj.add(self.displacement_coord(t, j)))
            .collect())
    }

    /// Coordinate j of Σ t_i g_i.
    #[inline]
    pub fn displacement_coord(&self, t: &[i64], j: usize) -> CirclePoint {
        t.iter()
            .zip(&self.generators)
            .fold(CirclePoint::ZERO, |acc, (&ti, g)| acc.add(g[j].mul_signed(ti)))
    }

    /// Accumulated error of acting by `t`.
    pub fn accumulated_error(&self, t: &[i64]) -> f64 {
        t.iter()
            .zip(&self.generator_errors)
            .map(|(&ti, &e)| ti.unsigned_abs() as f64 * (e + ULP))
            .sum()
    }

    /// Refuses when acting by anything in ∏[−extent_i, extent_i] exceeds radius/10.
    pub fn check_radius_budget(&self, extent: &[u64], radius: f64) -> Result<()> {
        let t: Vec<i64> = extent.iter().map(|&e| e.min(i64::MAX as u64) as i64).collect();
        let accumulated = self.accumulated_error(&t);
        if accumulated > radius / 10.0 {
            return Err(Error::BudgetExceeded {
                accumulated,
                allowed: radius / 10.0,
                context: format!("Z^{} action '{}' at radius {radius}", self.d, self.name),
            });
        }
        Ok(())
    }

    /// For d = m with generator i moving only coordinate i, the per-axis rotations.
    pub fn product_form(&self) -> Option<Vec<(CirclePoint, f64)>> {
        if self.d != self.m {
            return None;
        }
        let mut axes = Vec::with_capacity(self.d);
        for (i, g) in self.generators.iter().enumerate() {
            if g.iter().enumerate().any(|(j, c)| j != i && *c != CirclePoint::ZERO) {
                return None;
            }
            axes.push((g[i], self.generator_errors[i]));
        }
        Some(axes)
    }

    /// Max of coordinate-wise circular distances, in fixed-point units.
    pub fn distance_units(x: &[CirclePoint], y: &[CirclePoint]) -> u128 {
        x.iter()
            .zip(y)
            .map(|(a, b)| a.distance_units(*b))
            .max()
            .unwrap_or(0)
    }
}
