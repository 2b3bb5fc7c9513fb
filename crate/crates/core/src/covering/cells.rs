//! Covering constants for translations of T^m by cell-grid coverage.
//!
//! The torus is cut into G^m square cells. A cell counts as covered by an
//! orbit point p when its centre lies within radius − h/2 − radius/10 of p in
//! the max metric (h the cell side), so every point of the cell is strictly
//! inside the ball even after the accumulated orbit error is added. K is the
//! first index at which every cell is covered; it is minimal relative to this
//! test and a valid (possibly larger than optimal) covering constant.

use super::{CoveringCertificate, Evidence};
use crate::error::{Error, Result};
use crate::systems::{CirclePoint, Entourage};

/// Largest number of cells the search will allocate.
const MAX_CELLS: u64 = 1 << 24;

/// Cells per ball radius along each axis.
const CELLS_PER_RADIUS: f64 = 8.0;

fn circular(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Grid indices along one axis whose cell centre is within `reach` of `p`.
fn axis_cells(p: f64, reach: f64, g: u64) -> Vec<u64> {
    let gf = g as f64;
    let lo = ((p - reach) * gf - 0.5).floor() as i64 - 1;
    let hi = ((p + reach) * gf - 0.5).ceil() as i64 + 1;
    let mut out = Vec::new();
    for c in lo..=hi {
        let idx = c.rem_euclid(g as i64) as u64;
        let centre = (idx as f64 + 0.5) / gf;
        if circular(p, centre) < reach && !out.contains(&idx) {
            out.push(idx);
        }
    }
    out
}

/// Smallest K (relative to the cell test) such that the balls of the given
/// radius around {k·step : 0 ≤ k ≤ K} cover T^m.
pub fn translation_covering_k(
    step: &[CirclePoint],
    step_error: f64,
    radius: f64,
    k_max: u64,
    system_digest: String,
) -> Result<CoveringCertificate> {
    let epsilon = Entourage::ball(radius);
    epsilon.validate()?;
    let m = step.len();
    if m == 0 {
        return Err(Error::InvalidArgument("translation of a zero-dimensional torus".into()));
    }
    if radius > 0.5 {
        return Ok(CoveringCertificate {
            system_digest,
            epsilon,
            k: 0,
            evidence: Evidence::Trivial {
                reason: format!("radius {radius} exceeds every torus distance"),
            },
            slack: radius - 0.5,
        });
    }
    let g = (CELLS_PER_RADIUS / radius).ceil() as u64;
    let total = g.checked_pow(m as u32).filter(|&t| t <= MAX_CELLS).ok_or_else(|| {
        Error::Unsupported(format!(
            "radius {radius} on T^{m} needs {g}^{m} cells, above the limit of {MAX_CELLS}"
        ))
    })?;
    let h = 1.0 / g as f64;
    let guard = radius / 10.0;
    let reach = radius - h / 2.0 - guard;
    let mut covered = vec![false; total as usize];
    let mut count = 0u64;
    let mut last_uncovered: Option<Vec<u64>> = None;
    let mut k = 0u64;
    loop {
        let p: Vec<f64> = step.iter().map(|s| s.mul(k).to_f64()).collect();
        let axes: Vec<Vec<u64>> = p.iter().map(|&pj| axis_cells(pj, reach, g)).collect();
        // odometer over the product of per-axis ranges
        if axes.iter().all(|a| !a.is_empty()) {
            let mut digits = vec![0usize; m];
            'outer: loop {
                let mut flat = 0u64;
                for j in 0..m {
                    flat = flat * g + axes[j][digits[j]];
                }
                if !covered[flat as usize] {
                    covered[flat as usize] = true;
                    count += 1;
                }
                for j in (0..m).rev() {
                    digits[j] += 1;
                    if digits[j] < axes[j].len() {
                        continue 'outer;
                    }
                    digits[j] = 0;
                }
                break;
            }
        }
        if count == total {
            break;
        }
        if k >= k_max {
            return Err(Error::KMaxExceeded {
                k_max,
                detail: format!("{} of {total} cells still uncovered at radius {radius}", total - count),
            });
        }
        let accumulated = (k + 1) as f64 * step_error;
        if accumulated > guard {
            return Err(Error::BudgetExceeded {
                accumulated,
                allowed: guard,
                context: format!("cell covering search reached {} steps", k + 1),
            });
        }
        let first = covered.iter().position(|&c| !c).expect("uncovered cell exists") as u64;
        let mut idx = vec![0u64; m];
        let mut rest = first;
        for j in (0..m).rev() {
            idx[j] = rest % g;
            rest /= g;
        }
        last_uncovered = Some(idx);
        k += 1;
    }
    Ok(CoveringCertificate {
        system_digest,
        epsilon,
        k,
        evidence: Evidence::Cells {
            grid_side: g,
            dimension: m,
            witness_cell: last_uncovered,
        },
        slack: guard - k as f64 * step_error,
    })
}
