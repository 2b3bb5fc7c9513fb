//! Executable form of the uniform lower bound: measure the windowed density on
//! a grid of base points and compare it with the covering certificate.

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{certified_bound, covering_k, CertificateRecord, CoveringCertificate, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::returns::{return_set, CsvRow, Value, Window};
use crate::systems::{CirclePoint, Entourage, Point, RadiusUnits, SystemDescriptor, TorusZdAction};

/// Entourage the covering certificate is built at, relative to the one the
/// bound is claimed for.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shrink {
    /// radius/3 for metric balls (cylinders are unchanged).
    #[default]
    Third,
    /// The claimed entourage itself. Sound for isometric systems, where the
    /// target point can serve as its own net point.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub shrink: Shrink,
    pub k_max: u64,
    /// Random orbit starts used by the certificate spot-check (0 disables it).
    pub spot_checks: usize,
    pub seed: u64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            shrink: Shrink::Third,
            k_max: DEFAULT_K_MAX,
            spot_checks: 1000,
            seed: 0,
        }
    }
}

impl BoundOptions {
    pub fn covering_entourage(&self, eps: &Entourage) -> Entourage {
        match self.shrink {
            Shrink::Third => eps.third(),
            Shrink::None => *eps,
        }
    }
}

/// Measured minimum for one base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDensity {
    pub point: String,
    pub count: Value,
    pub frequency: f64,
    /// The minimizing window.
    pub start: Value,
    pub end: Value,
    pub max_gap: Option<u64>,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub point: String,
    pub start: f64,
    pub end: f64,
    pub frequency: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub samples: usize,
    pub seed: u64,
    pub checked_pairs: u64,
    pub failures: u64,
}

/// Per-point density estimates set against a certified bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub system: String,
    pub system_digest: String,
    pub epsilon: Entourage,
    pub certificates: Vec<CertificateRecord>,
    /// K+1 for cascades, |K| for group actions.
    pub covering_size: u64,
    /// What the estimate measures, e.g. "box-Banach density".
    pub estimate: String,
    pub continuous: bool,
    pub window_length: Value,
    pub horizon: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_sides: Option<Vec<u64>>,
    /// The limiting bound, exact where it is rational.
    pub asymptotic_bound: String,
    /// The finite-window bound every measured minimum is held to.
    pub certified_bound: f64,
    pub points: Vec<PointDensity>,
    pub min_measured: f64,
    /// min_measured − certified_bound.
    pub margin: f64,
    pub violations: Vec<ViolationRecord>,
    pub grid_note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot_check: Option<SpotCheck>,
}

impl DensityReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.points
            .iter()
            .map(|p| CsvRow {
                system: self.system.clone(),
                x: p.point.clone(),
                epsilon: self.epsilon.to_string(),
                start: p.start,
                end: p.end,
                count: p.count,
                max_gap: p.max_gap,
                frequency: p.frequency,
            })
            .collect()
    }

    /// The first violation as an error.
    pub fn ensure_no_violation(&self) -> Result<()> {
        match self.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::Violation {
                point: v.point.clone(),
                start: v.start,
                end: v.end,
                frequency: v.frequency,
                bound: v.bound,
            }),
        }
    }

    /// Fills min_measured, margin and violations from `points`.
    pub(crate) fn settle(&mut self) {
        self.min_measured = self
            .points
            .iter()
            .map(|p| p.frequency)
            .fold(f64::INFINITY, f64::min);
        if self.points.is_empty() {
            self.min_measured = f64::NAN;
        }
        self.margin = self.min_measured - self.certified_bound;
        let as_f64 = |v: Value| match v {
            Value::Int(i) => i as f64,
            Value::Real(r) => r,
        };
        self.violations = self
            .points
            .iter()
            .filter(|p| p.margin < 0.0)
            .map(|p| ViolationRecord {
                point: p.point.clone(),
                start: as_f64(p.start),
                end: as_f64(p.end),
                frequency: p.frequency,
                bound: self.certified_bound,
            })
            .collect();
    }
}

/// `p/q` in lowest terms.
pub fn rational_string(r: Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A grid of base points standing in for the infimum over the space, with a
/// note saying how complete it is.
pub fn default_grid(system: &SystemDescriptor, eps: &Entourage, n: usize) -> Result<(Vec<Point>, String)> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point".into()));
    }
    match (system, eps) {
        (SystemDescriptor::Rotation(_), Entourage::MetricBall { radius }) => {
            let pts = (0..n)
                .map(|i| Point::Circle(CirclePoint::from_f64(i as f64 / n as f64)))
                .collect();
            Ok((
                pts,
                format!(
                    "uniform grid of {n} points at spacing {:.3e} (radius/10 = {:.3e}); approximates the infimum over the circle",
                    1.0 / n as f64,
                    radius / 10.0
                ),
            ))
        }
        (SystemDescriptor::Substitution(sub), Entourage::Cylinder { depth }) => {
            let words = sub.language_words(*depth, usize::MAX)?;
            let mut pts = Vec::with_capacity(words.len());
            for w in &words {
                let mut search = 1024usize;
                let offset = loop {
                    if let Some(o) = sub.first_occurrence(w, search) {
                        break o;
                    }
                    if search > 1 << 26 {
                        return Err(Error::InvalidArgument(format!(
                            "legal word '{}' not found in the fixed point",
                            sub.render(w)
                        )));
                    }
                    search *= 4;
                };
                pts.push(Point::Symbolic(sub.point(offset)));
            }
            Ok((
                pts,
                format!(
                    "one base point per depth-{depth} cylinder ({} cylinders; complete)",
                    words.len()
                ),
            ))
        }
        (SystemDescriptor::TorusZd(_) | SystemDescriptor::LinearFlow(_), Entourage::MetricBall { .. }) => {
            let m = match system {
                SystemDescriptor::TorusZd(act) => act.m,
                _ => 2,
            };
            let side = (n as f64).powf(1.0 / m as f64).ceil().max(1.0) as usize;
            let mut pts = Vec::new();
            let total = side.pow(m as u32);
            for flat in 0..total {
                let mut rest = flat;
                let mut coords = vec![CirclePoint::ZERO; m];
                for c in coords.iter_mut().rev() {
                    *c = CirclePoint::from_f64((rest % side) as f64 / side as f64);
                    rest /= side;
                }
                pts.push(Point::Torus(coords));
            }
            Ok((
                pts,
                format!("product grid of {side}^{m} points; approximates the infimum over the torus"),
            ))
        }
        (sys, e) => Err(Error::Unsupported(format!(
            "no default grid for '{}' with entourage {e}",
            sys.name()
        ))),
    }
}

/// Checks that every window of length `w` inside [0, h) holds at least
/// 1/(K+1) − 1/w visits of each grid orbit to its own ε-neighbourhood, with K
/// certified at the shrunken entourage.
pub fn verify_uniform_bound(
    system: &SystemDescriptor,
    eps: &Entourage,
    grid: &[Point],
    grid_note: &str,
    w: u64,
    h: u64,
    options: &BoundOptions,
) -> Result<DensityReport> {
    eps.validate()?;
    if w == 0 || h < w {
        return Err(Error::DegenerateWindow(format!("need 1 ≤ W ≤ H, got W = {w}, H = {h}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let cover_eps = options.covering_entourage(eps);
    let cert = covering_k(system, &cover_eps, options.k_max)?;
    let bound = certified_bound(&cert);
    let threshold = *bound.numer() as f64 / *bound.denom() as f64 - 1.0 / w as f64;
    let observed = Window::new(0, h)?;
    let points = grid
        .par_iter()
        .map(|x| {
            let profile = return_set(system, x, x, eps, observed)?;
            let est = profile.banach_lower_density(w)?;
            let frequency = est.frequency_f64();
            Ok(PointDensity {
                point: x.to_string(),
                count: Value::Int(est.min_count),
                frequency,
                start: Value::Int(est.argmin_window.start),
                end: Value::Int(est.argmin_window.end),
                max_gap: Some(profile.max_gap),
                margin: frequency - threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spot = if options.spot_checks > 0 {
        Some(spot_check(system, &cert, grid, options.spot_checks, options.seed)?)
    } else {
        None
    };
    let mut report = DensityReport {
        system: system.name().to_string(),
        system_digest: system.digest(),
        epsilon: *eps,
        certificates: vec![cert.record()],
        covering_size: cert.k + 1,
        estimate: "windowed Banach lower density".into(),
        continuous: false,
        window_length: Value::Int(w),
        horizon: Value::Int(h),
        box_sides: None,
        asymptotic_bound: rational_string(bound),
        certified_bound: threshold,
        points,
        min_measured: 0.0,
        margin: 0.0,
        violations: Vec::new(),
        grid_note: grid_note.to_string(),
        spot_check: spot,
    };
    report.settle();
    Ok(report)
}

/// Draws random orbit starts y and checks that {fᵏy : 0 ≤ k ≤ K} meets the
/// certificate's entourage around every grid point.
pub fn spot_check(
    system: &SystemDescriptor,
    cert: &CoveringCertificate,
    grid: &[Point],
    samples: usize,
    seed: u64,
) -> Result<SpotCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0u64;
    let mut failures = 0u64;
    match (system, &cert.epsilon) {
        (SystemDescriptor::Rotation(rot), Entourage::MetricBall { radius }) => {
            let r = RadiusUnits::from_f64(*radius);
            for _ in 0..samples {
                let y = CirclePoint(rng.gen());
                let mut orbit: Vec<u64> = rot.orbit(y).take(cert.k as usize + 1).map(|p| p.0).collect();
                orbit.sort_unstable();
                for x in grid {
                    let Point::Circle(x) = x else {
                        return Err(Error::PointKind { expected: "circle", found: x.kind() });
                    };
                    let i = orbit.partition_point(|&p| p < x.0);
                    let above = orbit[i % orbit.len()];
                    let below = orbit[(i + orbit.len() - 1) % orbit.len()];
                    let d = x.distance_units(CirclePoint(above)).min(x.distance_units(CirclePoint(below)));
                    checked += 1;
                    if !r.contains(d) {
                        failures += 1;
                    }
                }
            }
        }
        (SystemDescriptor::Substitution(sub), Entourage::Cylinder { depth }) => {
            const RANGE: u64 = 100_000;
            let span = cert.k as usize + depth;
            let text = sub.fixed_point_prefix(RANGE as usize + span);
            let targets: Vec<Vec<u8>> = grid
                .iter()
                .map(|x| match x {
                    Point::Symbolic(p) => Ok(sub.read(p, *depth)),
                    other => Err(Error::PointKind { expected: "symbolic", found: other.kind() }),
                })
                .collect::<Result<_>>()?;
            for _ in 0..samples {
                let y = rng.gen_range(0..RANGE) as usize;
                let segment = &text[y..y + span];
                for t in &targets {
                    checked += 1;
                    if !segment.windows(*depth).any(|f| f == t.as_slice()) {
                        failures += 1;
                    }
                }
            }
        }
        (SystemDescriptor::TorusZd(act), Entourage::MetricBall { radius }) if act.d == 1 => {
            let r = RadiusUnits::from_f64(*radius);
            for _ in 0..samples {
                let y: Vec<CirclePoint> = (0..act.m).map(|_| CirclePoint(rng.gen())).collect();
                let orbit: Vec<Vec<CirclePoint>> = (0..=cert.k as i64)
                    .map(|k| act.act(&[k], &y))
                    .collect::<Result<_>>()?;
                for x in grid {
                    let Point::Torus(x) = x else {
                        return Err(Error::PointKind { expected: "torus", found: x.kind() });
                    };
                    checked += 1;
                    if !orbit.iter().any(|p| r.contains(TorusZdAction::distance_units(p, x))) {
                        failures += 1;
                    }
                }
            }
        }
        (sys, e) => {
            return Err(Error::Unsupported(format!(
                "no spot-check for '{}' with entourage {e}",
                sys.name()
            )))
        }
    }
    Ok(SpotCheck {
        samples,
        seed,
        checked_pairs: checked,
        failures,
    })
}
