//! Linear flows on the 2-torus: exact visit intervals, the (δ, α) constants
//! of the skeleton argument, and the certified continuous-time bound.
//!
//! Continuous time is handled exactly: each coordinate of x + t·v crosses the
//! boundary of an interval around the target at explicitly solvable times, and
//! the visit set is the intersection of the per-coordinate interval lists. The
//! only discretization is the time-α skeleton used for the covering constant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::covering::{translation_covering_k, BoundOptions, DensityReport, PointDensity, Shrink};
use crate::error::{Error, Result};
use crate::returns::Value;
use crate::systems::circle::ULP;
use crate::systems::{CirclePoint, Entourage, Point};

/// Relative rounding error of one f64 product.
const HALF_EPS: f64 = f64::EPSILON / 2.0;

/// t·x = x + t·v mod 1 on T².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFlow {
    pub name: String,
    pub v: [f64; 2],
    /// Leading partial quotients of |v₂/v₁|; a long non-terminating prefix
    /// is evidence (not proof) of an irrational slope.
    pub slope_cf: Vec<u64>,
}

fn continued_fraction(mut x: f64, terms: usize) -> Vec<u64> {
    let mut out = Vec::new();
    for _ in 0..terms {
        if !x.is_finite() || x > 1e12 {
            break;
        }
        let a = x.floor();
        out.push(a as u64);
        let frac = x - a;
        if frac < 1e-9 {
            break;
        }
        x = 1.0 / frac;
    }
    out
}

impl LinearFlow {
    pub fn new(name: impl Into<String>, v: [f64; 2]) -> Result<Self> {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("flow direction must be finite".into()));
        }
        let slope_cf = if v[0] == 0.0 || v[1] == 0.0 {
            vec![0]
        } else {
            continued_fraction((v[1] / v[0]).abs(), 12)
        };
        Ok(LinearFlow {
            name: name.into(),
            v,
            slope_cf,
        })
    }

    /// Unit-speed flow with slope (√5 − 1)/2.
    pub fn golden_unit() -> Self {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let s = (1.0 + g * g).sqrt();
        Self::new("golden-flow", [1.0 / s, g / s]).expect("finite direction")
    }

    /// s = |v|.
    pub fn speed(&self) -> f64 {
        self.v[0].hypot(self.v[1])
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("flow serializes")))
    }

    /// Bound on the error of acting by time t.
    pub fn accumulated_error(&self, t: f64) -> f64 {
        let m = self.v[0].abs().max(self.v[1].abs());
        t.abs() * m * HALF_EPS + ULP
    }

    pub fn check_radius_budget(&self, t: f64, radius: f64) -> Result<()> {
        let accumulated = self.accumulated_error(t);
        if accumulated > radius / 10.0 {
            return Err(Error::BudgetExceeded {
                accumulated,
                allowed: radius / 10.0,
                context: format!("flow '{}' up to time {t}", self.name),
            });
        }
        Ok(())
    }

    pub fn act(&self, x: &[CirclePoint], t: f64) -> Result<Vec<CirclePoint>> {
        if x.len() != 2 {
            return Err(Error::InvalidArgument("linear flows act on T²".into()));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument("time must be finite".into()));
        }
        Ok(x.iter()
            .zip(&self.v)
            .map(|(xj, vj)| xj.add(CirclePoint::from_f64(t * vj)))
            .collect())
    }
}

/// Closed intervals of [t1, t2] on which t·x lies in the open ball around y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitIntervals {
    pub t1: f64,
    pub t2: f64,
    pub intervals: Vec<(f64, f64)>,
    pub total_measure: f64,
}

/// Sorted, merged intervals where ‖d + t·v‖ < r, clipped to [t1, t2].
fn coordinate_intervals(d: f64, v: f64, r: f64, t1: f64, t2: f64) -> Vec<(f64, f64)> {
    if r > 0.5 {
        return vec![(t1, t2)];
    }
    if v == 0.0 {
        let dist = d.rem_euclid(1.0).min(1.0 - d.rem_euclid(1.0));
        return if dist < r { vec![(t1, t2)] } else { Vec::new() };
    }
    // u = d + t v ranges over [u1, u2]; visits are u ∈ (k − r, k + r)
    let (u1, u2) = {
        let a = d + t1 * v;
        let b = d + t2 * v;
        (a.min(b), a.max(b))
    };
    let k_lo = (u1 - r).floor() as i64;
    let k_hi = (u2 + r).ceil() as i64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for k in k_lo..=k_hi {
        let ta = (k as f64 - r - d) / v;
        let tb = (k as f64 + r - d) / v;
        let (lo, hi) = (ta.min(tb).max(t1), ta.max(tb).min(t2));
        if lo < hi {
            out.push((lo, hi));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for iv in out {
        match merged.last_mut() {
            Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
            _ => merged.push(iv),
        }
    }
    merged
}

fn intersect_lists(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn torus_point(p: &Point) -> Result<&[CirclePoint]> {
    match p {
        Point::Torus(v) if v.len() == 2 => Ok(v),
        Point::Torus(_) => Err(Error::InvalidArgument("linear flows act on T²".into())),
        other => Err(Error::PointKind {
            expected: "torus",
            found: other.kind(),
        }),
    }
}

/// {t ∈ [t1, t2] : d(t·x, y) < radius} in the max metric, exactly.
pub fn visit_intervals(
    flow: &LinearFlow,
    x: &[CirclePoint],
    y: &[CirclePoint],
    radius: f64,
    t1: f64,
    t2: f64,
) -> Result<VisitIntervals> {
    Entourage::ball(radius).validate()?;
    if !(t2 > t1) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::DegenerateWindow(format!("[{t1}, {t2}] is empty")));
    }
    if x.len() != 2 || y.len() != 2 {
        return Err(Error::InvalidArgument("linear flows act on T²".into()));
    }
    flow.check_radius_budget(t1.abs().max(t2.abs()), radius)?;
    let lists: Vec<Vec<(f64, f64)>> = (0..2)
        .map(|j| {
            let d = x[j].sub(y[j]).to_f64();
            coordinate_intervals(d, flow.v[j], radius, t1, t2)
        })
        .collect();
    let intervals = intersect_lists(&lists[0], &lists[1]);
    let total_measure = intervals.iter().map(|(a, b)| b - a).sum();
    Ok(VisitIntervals {
        t1,
        t2,
        intervals,
        total_measure,
    })
}

/// Independent numerical estimate of the visit measure: sample at step
/// radius/(100·s), locate each coordinate's boundary crossings by bisection,
/// and integrate the piecewise-constant indicator between them.
pub fn quadrature_measure(flow: &LinearFlow, x: &[CirclePoint], radius: f64, t1: f64, t2: f64) -> Result<f64> {
    let s = flow.speed();
    if s == 0.0 {
        return Err(Error::InvalidArgument("zero speed".into()));
    }
    let inside = |t: f64, j: usize| -> bool {
        let u = x[j].to_f64() + t * flow.v[j];
        let diff = (u - x[j].to_f64()).rem_euclid(1.0);
        diff.min(1.0 - diff) < radius
    };
    let both = |t: f64| inside(t, 0) && inside(t, 1);
    let h = radius / (100.0 * s);
    let cells = ((t2 - t1) / h).ceil() as u64;
    let mut total = 0.0;
    for c in 0..cells {
        let a = t1 + c as f64 * h;
        let b = (a + h).min(t2);
        let mut cuts = vec![a, b];
        for j in 0..2 {
            let (ia, ib) = (inside(a, j), inside(b, j));
            if ia != ib {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if inside(mid, j) == ia {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cuts.push(0.5 * (lo + hi));
            }
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] > w[0] && both(0.5 * (w[0] + w[1])) {
                total += w[1] - w[0];
            }
        }
    }
    Ok(total)
}

/// δ = radius/2 and α = radius/(2s): a δ-visit at time t keeps the orbit in
/// the ε-ball for all of [t, t + α].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma16Constants {
    pub epsilon: Entourage,
    pub delta: f64,
    pub alpha: f64,
}

pub fn lemma16_constants(flow: &LinearFlow, radius: f64) -> Result<Lemma16Constants> {
    Entourage::ball(radius).validate()?;
    let s = flow.speed();
    if s == 0.0 {
        return Err(Error::InvalidArgument(format!("flow '{}' has zero speed", flow.name)));
    }
    Ok(Lemma16Constants {
        epsilon: Entourage::ball(radius),
        delta: radius / 2.0,
        alpha: radius / (2.0 * s),
    })
}

/// Sorted disjoint intervals with prefix sums of their lengths.
struct IntervalMeasure<'a> {
    intervals: &'a [(f64, f64)],
    prefix: Vec<f64>,
}

impl<'a> IntervalMeasure<'a> {
    fn new(intervals: &'a [(f64, f64)]) -> Self {
        let mut prefix = Vec::with_capacity(intervals.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (a, b) in intervals {
            acc += b - a;
            prefix.push(acc);
        }
        IntervalMeasure { intervals, prefix }
    }

    /// Measure of the visit set in [0, t].
    fn cumulative(&self, t: f64) -> f64 {
        let i = self.intervals.partition_point(|iv| iv.1 <= t);
        let mut m = self.prefix[i];
        if let Some(&(a, _)) = self.intervals.get(i) {
            if a < t {
                m += t - a;
            }
        }
        m
    }

    fn window(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }
}

/// Minimum over T₁ ∈ [0, H − W] of the visit measure of [T₁, T₁ + W].
///
/// The window measure is piecewise linear in T₁ with breakpoints where either
/// end meets an interval endpoint, so the minimum is attained at one of them.
pub fn min_window_measure(intervals: &[(f64, f64)], w: f64, h: f64) -> Result<(f64, f64)> {
    if !(w > 0.0) || h < w {
        return Err(Error::DegenerateWindow(format!("need 0 < W ≤ H, got W = {w}, H = {h}")));
    }
    let im = IntervalMeasure::new(intervals);
    let last = h - w;
    let mut best = (f64::INFINITY, 0.0);
    let mut consider = |t: f64| {
        if (0.0..=last).contains(&t) {
            let m = im.window(t, t + w);
            if m < best.0 {
                best = (m, t);
            }
        }
    };
    consider(0.0);
    consider(last);
    for &(a, b) in intervals {
        for e in [a, b] {
            consider(e);
            consider(e - w);
        }
    }
    Ok(best)
}

/// Window averages of the visit measure over a grid, against the skeleton bound
/// α·⌊W/((K+1)α)⌋/W, where K covers the torus for the time-α map.
pub fn flow_uniform_bound(
    flow: &LinearFlow,
    eps: &Entourage,
    grid: &[Point],
    grid_note: &str,
    w: f64,
    h: f64,
    options: &BoundOptions,
) -> Result<DensityReport> {
    let Entourage::MetricBall { radius } = *eps else {
        return Err(Error::InvalidArgument("flows use metric-ball entourages".into()));
    };
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if !(w > 0.0) || h < w {
        return Err(Error::DegenerateWindow(format!("need 0 < W ≤ H, got W = {w}, H = {h}")));
    }
    let c = lemma16_constants(flow, radius)?;
    // any skeleton radius up to δ works
    let rho = match options.shrink {
        Shrink::Third => radius / 3.0,
        Shrink::None => c.delta,
    };
    let step: Vec<CirclePoint> = flow.v.iter().map(|vj| CirclePoint::from_f64(c.alpha * vj)).collect();
    let step_error = flow.accumulated_error(c.alpha);
    let cert = translation_covering_k(&step, step_error, rho, options.k_max, flow.digest())?;
    let block = (cert.k + 1) as f64 * c.alpha;
    let certified = c.alpha * (w / block).floor() / w;
    let points = grid
        .par_iter()
        .map(|x| {
            let xv = torus_point(x)?;
            let vi = visit_intervals(flow, xv, xv, radius, 0.0, h)?;
            let (m, t) = min_window_measure(&vi.intervals, w, h)?;
            let frequency = m / w;
            Ok(PointDensity {
                point: x.to_string(),
                count: Value::Real(m),
                frequency,
                start: Value::Real(t),
                end: Value::Real(t + w),
                max_gap: None,
                margin: frequency - certified,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = DensityReport {
        system: flow.name.clone(),
        system_digest: flow.digest(),
        epsilon: *eps,
        certificates: vec![cert.record()],
        covering_size: cert.k + 1,
        estimate: "windowed time average of the visit indicator".into(),
        continuous: true,
        window_length: Value::Real(w),
        horizon: Value::Real(h),
        box_sides: None,
        asymptotic_bound: format!("1/{} (skeleton step α = {:.6e})", cert.k + 1, c.alpha),
        certified_bound: certified,
        points,
        min_measured: 0.0,
        margin: 0.0,
        violations: Vec::new(),
        grid_note: grid_note.to_string(),
        spot_check: None,
    };
    report.settle();
    Ok(report)
}
