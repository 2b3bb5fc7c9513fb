//! Return-time sets, syndetic gaps and windowed Banach lower densities.

use std::f64::consts::TAU;
use std::io::Write;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{Entourage, Point, RadiusUnits, SystemDescriptor, TorusZdAction};

/// The half-open time window [start, end).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: u64,
    pub end: u64,
}

impl Window {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if end <= start {
            return Err(Error::DegenerateWindow(format!("[{start}, {end}) is empty")));
        }
        Ok(Window { start, end })
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Visit times of the orbit of `base` to ε[target] inside a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnProfile {
    pub base: Point,
    pub target: Point,
    pub epsilon: Entourage,
    pub window: Window,
    /// Strictly increasing.
    pub times: Vec<u64>,
    /// Longest visit-free stretch, window boundaries included.
    pub max_gap: u64,
}

impl ReturnProfile {
    pub fn count(&self) -> u64 {
        self.times.len() as u64
    }

    pub fn first_return(&self) -> Option<u64> {
        self.times.iter().copied().find(|&t| t > 0)
    }

    pub fn csv_row(&self, system: &str) -> CsvRow {
        CsvRow {
            system: system.to_string(),
            x: self.base.to_string(),
            epsilon: self.epsilon.to_string(),
            start: Value::Int(self.window.start),
            end: Value::Int(self.window.end),
            count: Value::Int(self.count()),
            max_gap: Some(self.max_gap),
            frequency: self.count() as f64 / self.window.len() as f64,
        }
    }
}

/// Longest run of window positions containing no visit.
///
/// Equals max over consecutive elements of {start−1} ∪ times ∪ {end} of the
/// difference minus one.
pub fn max_gap(times: &[u64], window: Window) -> u64 {
    let mut prev: i128 = window.start as i128 - 1;
    let mut best: i128 = 0;
    for &t in times.iter().chain(std::iter::once(&window.end)) {
        best = best.max(t as i128 - prev - 1);
        prev = t as i128;
    }
    best as u64
}

fn profile(base: &Point, target: &Point, eps: Entourage, window: Window, times: Vec<u64>) -> ReturnProfile {
    let gap = max_gap(&times, window);
    ReturnProfile {
        base: base.clone(),
        target: target.clone(),
        epsilon: eps,
        window,
        times,
        max_gap: gap,
    }
}

/// N(x, ε[y]) ∩ [start, end), with the same membership semantics as
/// [`SystemDescriptor::in_entourage`].
pub fn return_set(
    system: &SystemDescriptor,
    x: &Point,
    y: &Point,
    eps: &Entourage,
    window: Window,
) -> Result<ReturnProfile> {
    eps.validate()?;
    if window.is_empty() {
        return Err(Error::DegenerateWindow("empty window".into()));
    }
    // type-check the pair once through the reference membership test
    system.in_entourage(eps, x, y)?;
    let mut times = Vec::new();
    match (system, eps, x, y) {
        (SystemDescriptor::Rotation(rot), Entourage::MetricBall { radius }, Point::Circle(a), Point::Circle(b)) => {
            rot.check_radius_budget(window.end, *radius)?;
            let r = RadiusUnits::from_f64(*radius);
            let mut p = a.add(rot.alpha.mul(window.start));
            for n in window.start..window.end {
                if r.contains(p.distance_units(*b)) {
                    times.push(n);
                }
                p = p.add(rot.alpha);
            }
        }
        (SystemDescriptor::Substitution(sub), Entourage::Cylinder { depth }, Point::Symbolic(a), Point::Symbolic(b)) => {
            let need = (a.offset.max(b.offset) + window.end) as usize + depth;
            let word = sub.fixed_point_prefix(need);
            let target = &word[b.offset as usize..b.offset as usize + depth];
            for n in window.start..window.end {
                let s = (a.offset + n) as usize;
                if &word[s..s + depth] == target {
                    times.push(n);
                }
            }
        }
        (SystemDescriptor::Sequence(seq), Entourage::Cylinder { depth }, Point::Symbolic(a), Point::Symbolic(b)) => {
            let target = seq.read(b, *depth);
            for n in window.start..window.end {
                let s = a.offset + n;
                if (0..*depth as u64).all(|i| seq.symbol(s + i) == target[i as usize]) {
                    times.push(n);
                }
            }
        }
        (SystemDescriptor::Annulus(ann), Entourage::MetricBall { radius }, Point::Annulus(a), Point::Annulus(b)) => {
            let accumulated = window.end as f64 * ann.step_error() * TAU;
            if accumulated > radius / 10.0 {
                return Err(Error::BudgetExceeded {
                    accumulated,
                    allowed: radius / 10.0,
                    context: format!("annulus '{}' over {} steps", ann.name, window.end),
                });
            }
            let step = ann.step(a.level)?;
            let dr = (ann.radius(a.level)? - ann.radius(b.level)?).abs();
            let mut p = a.angle.add(step.mul(window.start));
            for n in window.start..window.end {
                if dr.max(p.distance(b.angle) * TAU) < *radius {
                    times.push(n);
                }
                p = p.add(step);
            }
        }
        (SystemDescriptor::TorusZd(act), Entourage::MetricBall { radius }, Point::Torus(a), Point::Torus(b)) => {
            if act.d != 1 {
                return Err(Error::Unsupported(
                    "return_set over Z₊ needs a Z-action; use the amenable module for Z^d".into(),
                ));
            }
            act.check_radius_budget(&[window.end], *radius)?;
            let r = RadiusUnits::from_f64(*radius);
            let mut p = act.act(&[window.start as i64], a)?;
            for n in window.start..window.end {
                if r.contains(TorusZdAction::distance_units(&p, b)) {
                    times.push(n);
                }
                for (pj, g) in p.iter_mut().zip(&act.generators[0]) {
                    *pj = pj.add(*g);
                }
            }
        }
        (SystemDescriptor::LinearFlow(f), ..) => {
            return Err(Error::Unsupported(format!(
                "'{}' is a flow; its visit set is a union of intervals (use visit_intervals)",
                f.name
            )))
        }
        _ => unreachable!("in_entourage accepted the combination"),
    }
    Ok(profile(x, y, *eps, window, times))
}

/// Finite-horizon estimate of the Banach lower density at one window length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub window_length: u64,
    pub horizon: u64,
    pub min_count: u64,
    pub min_frequency: Rational64,
    pub argmin_window: Window,
}

impl DensityEstimate {
    pub fn frequency_f64(&self) -> f64 {
        *self.min_frequency.numer() as f64 / *self.min_frequency.denom() as f64
    }

    pub fn csv_row(&self, system: &str, x: &str, epsilon: &str, max_gap: Option<u64>) -> CsvRow {
        CsvRow {
            system: system.to_string(),
            x: x.to_string(),
            epsilon: epsilon.to_string(),
            start: Value::Int(self.argmin_window.start),
            end: Value::Int(self.argmin_window.end),
            count: Value::Int(self.min_count),
            max_gap,
            frequency: self.frequency_f64(),
        }
    }
}

/// Minimum of |times ∩ [M, M+W)| / W over all M with
/// `observed.start ≤ M` and `M + W ≤ observed.end`.
///
/// `times` must be sorted and lie in `observed`. One pass with a running
/// count.
pub fn banach_lower_density(times: &[u64], observed: Window, w: u64) -> Result<DensityEstimate> {
    if w == 0 {
        return Err(Error::DegenerateWindow("window length must be ≥ 1".into()));
    }
    if observed.len() < w {
        return Err(Error::DegenerateWindow(format!(
            "horizon {} shorter than window length {w}",
            observed.len()
        )));
    }
    if times.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidArgument("visit times must be strictly increasing".into()));
    }
    if let (Some(&lo), Some(&hi)) = (times.first(), times.last()) {
        if lo < observed.start || hi >= observed.end {
            return Err(Error::InvalidArgument("visit times fall outside the window".into()));
        }
    }
    // lo: first visit ≥ M; hi: first visit ≥ M + W
    let mut lo = 0usize;
    let mut hi = times.partition_point(|&t| t < observed.start + w);
    let mut best = (u64::MAX, observed.start);
    let last = observed.end - w;
    let mut m = observed.start;
    loop {
        let count = (hi - lo) as u64;
        if count < best.0 {
            best = (count, m);
        }
        if m == last {
            break;
        }
        if lo < times.len() && times[lo] == m {
            lo += 1;
        }
        if hi < times.len() && times[hi] == m + w {
            hi += 1;
        }
        m += 1;
    }
    let (count, start) = best;
    Ok(DensityEstimate {
        window_length: w,
        horizon: observed.end,
        min_count: count,
        min_frequency: Rational64::new(count as i64, w as i64),
        argmin_window: Window { start, end: start + w },
    })
}

impl ReturnProfile {
    pub fn banach_lower_density(&self, w: u64) -> Result<DensityEstimate> {
        banach_lower_density(&self.times, self.window, w)
    }

    /// W ↦ min_frequency(W) along a ladder of window lengths.
    pub fn density_ladder(&self, ladder: &[u64]) -> Result<Vec<DensityEstimate>> {
        ladder.iter().map(|&w| self.banach_lower_density(w)).collect()
    }
}

/// The lower-density bound 1/(L+1) of a set whose gaps are at most L.
pub fn gap_to_density_bound(max_gap: u64) -> Rational64 {
    Rational64::new(1, max_gap as i64 + 1)
}

/// A CSV cell that is integral for cascades and real for flows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(u64),
    Real(f64),
}

/// One CSV record: `system,x,epsilon,M,N,count,max_gap,frequency`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub system: String,
    pub x: String,
    pub epsilon: String,
    #[serde(rename = "M")]
    pub start: Value,
    #[serde(rename = "N")]
    pub end: Value,
    pub count: Value,
    pub max_gap: Option<u64>,
    pub frequency: f64,
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{AlphaSpec, CirclePoint, RotationSystem, SequenceSystem};

    fn window(a: u64, b: u64) -> Window {
        Window::new(a, b).unwrap()
    }

    #[test]
    fn quarter_rotation_returns() {
        let rot = RotationSystem::new("quarter", AlphaSpec::Rational { p: 1, q: 4 }).unwrap();
        let sys = SystemDescriptor::Rotation(rot);
        let x = Point::Circle(CirclePoint::ZERO);
        let p = return_set(&sys, &x, &x, &Entourage::ball(0.1), window(0, 12)).unwrap();
        assert_eq!(p.times, vec![0, 4, 8]);
        assert_eq!(p.max_gap, 3);
    }

    #[test]
    fn single_one_never_recurs() {
        let seq = SequenceSystem::single_one();
        let sys = SystemDescriptor::Sequence(seq.clone());
        let x = Point::Symbolic(seq.point(0));
        let p = return_set(&sys, &x, &x, &Entourage::cylinder(1), window(0, 100)).unwrap();
        assert_eq!(p.times, vec![0]);
        assert_eq!(p.max_gap, 99);
        assert_eq!(p.first_return(), None);
    }

    #[test]
    fn max_gap_counts_boundaries() {
        assert_eq!(max_gap(&[], window(0, 10)), 10);
        assert_eq!(max_gap(&[0, 9], window(0, 10)), 8);
        assert_eq!(max_gap(&[5], window(5, 6)), 0);
    }

    #[test]
    fn density_examples() {
        let evens: Vec<u64> = (0..1000).filter(|n| n % 2 == 0).collect();
        let est = banach_lower_density(&evens, window(0, 1000), 10).unwrap();
        assert_eq!(est.min_frequency, Rational64::new(1, 2));

        let est = banach_lower_density(&[0], window(0, 1000), 50).unwrap();
        assert_eq!(est.min_count, 0);
        assert_eq!(est.argmin_window, window(1, 51));

        let threes: Vec<u64> = (0..999).filter(|n| n % 3 == 0).collect();
        let est = banach_lower_density(&threes, window(0, 999), 9).unwrap();
        assert_eq!(est.min_frequency, Rational64::new(1, 3));
    }

    #[test]
    fn degenerate_horizon_refuses() {
        assert!(matches!(
            banach_lower_density(&[0, 1], window(0, 5), 6),
            Err(Error::DegenerateWindow(_))
        ));
        assert!(banach_lower_density(&[3, 2], window(0, 5), 2).is_err());
        assert!(Window::new(4, 4).is_err());
    }

    #[test]
    fn gap_bound_values() {
        assert_eq!(gap_to_density_bound(2), Rational64::new(1, 3));
        assert_eq!(gap_to_density_bound(0), Rational64::new(1, 1));
        assert_eq!(gap_to_density_bound(12), Rational64::new(1, 13));
    }

    #[test]
    fn csv_columns() {
        let row = CsvRow {
            system: "s".into(),
            x: "0".into(),
            epsilon: "r=0.1".into(),
            start: Value::Int(0),
            end: Value::Int(12),
            count: Value::Int(3),
            max_gap: Some(3),
            frequency: 0.25,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "system,x,epsilon,M,N,count,max_gap,frequency\ns,0,r=0.1,0,12,3,3,0.25\n");
    }
}
