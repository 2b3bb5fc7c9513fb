//! Constructive covering constants and the uniform density bounds they imply.
//!
//! A covering constant K for an entourage ε is a number such that every orbit
//! segment {fᵏy : 0 ≤ k ≤ K} meets ε[x] for every pair of points x, y. Every
//! window of K+1 consecutive times then contains a visit, which bounds the
//! Banach lower density of every return-time set from below by 1/(K+1).

mod cells;
mod verify;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cells::translation_covering_k;
pub use verify::{
    default_grid, rational_string, spot_check, verify_uniform_bound, BoundOptions, DensityReport, PointDensity, Shrink,
    SpotCheck, ViolationRecord,
};

use crate::error::{Error, Result};
use crate::systems::circle::SCALE;
use crate::systems::{CirclePoint, Entourage, RadiusUnits, RotationSystem, SubstitutionSystem, SystemDescriptor};

/// Default cap on the covering search.
pub const DEFAULT_K_MAX: u64 = 100_000;

/// Proof data behind a covering constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Evidence {
    /// One ball already covers the whole space.
    Trivial { reason: String },
    /// {kα : 0 ≤ k ≤ K} sorted, with its largest circular gap.
    Rotation {
        sorted_orbit: Vec<CirclePoint>,
        max_gap: f64,
        /// Largest gap of the K−1 orbit, which is ≥ 2·radius.
        witness_gap: Option<f64>,
    },
    /// Every legal word of length `window` contains every legal k-word.
    Subshift {
        depth: usize,
        window: usize,
        k_words: Vec<String>,
        /// A legal word of length K+k−1 and a k-word absent from it.
        witness: Option<WordWitness>,
    },
    /// Cell-grid coverage of the torus by the balls around an orbit segment.
    Cells {
        grid_side: u64,
        dimension: usize,
        /// Cell left uncovered by the K−1 segment, as a grid index.
        witness_cell: Option<Vec<u64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordWitness {
    pub word: String,
    pub missing: String,
}

/// A covering constant with the evidence that justifies it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringCertificate {
    pub system_digest: String,
    pub epsilon: Entourage,
    pub k: u64,
    pub evidence: Evidence,
    /// Margin left after the arithmetic error budget (radius units for
    /// metric balls, 0 for cylinders).
    pub slack: f64,
}

/// Compact, replayable form of a certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub system_hash: String,
    pub epsilon: Entourage,
    #[serde(rename = "K")]
    pub k: u64,
    pub evidence_digest: String,
    pub slack: f64,
}

impl CoveringCertificate {
    pub fn evidence_digest(&self) -> String {
        let json = serde_json::to_vec(&self.evidence).expect("evidence serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn record(&self) -> CertificateRecord {
        CertificateRecord {
            system_hash: self.system_digest.clone(),
            epsilon: self.epsilon,
            k: self.k,
            evidence_digest: self.evidence_digest(),
            slack: self.slack,
        }
    }
}

/// 1/(K+1).
pub fn certified_bound(cert: &CoveringCertificate) -> Rational64 {
    Rational64::new(1, cert.k as i64 + 1)
}

/// Recomputes the certificate for `system` and checks it against `record`.
pub fn replay(record: &CertificateRecord, system: &SystemDescriptor, k_max: u64) -> Result<CoveringCertificate> {
    if record.system_hash != system.digest() {
        return Err(Error::InvalidArgument(
            "certificate was issued for a different system".into(),
        ));
    }
    let cert = covering_k(system, &record.epsilon, k_max)?;
    let fresh = cert.record();
    if fresh.k != record.k || fresh.evidence_digest != record.evidence_digest {
        return Err(Error::InvalidArgument(format!(
            "certificate does not replay: stored K = {}, recomputed K = {}",
            record.k, fresh.k
        )));
    }
    Ok(cert)
}

/// Dispatches to the covering search that fits the system and entourage.
pub fn covering_k(system: &SystemDescriptor, eps: &Entourage, k_max: u64) -> Result<CoveringCertificate> {
    eps.validate()?;
    match (system, eps) {
        (SystemDescriptor::Rotation(rot), Entourage::MetricBall { radius }) => {
            rotation_covering_k(rot, *radius, k_max)
        }
        (SystemDescriptor::Substitution(sub), Entourage::Cylinder { depth }) => {
            subshift_covering_k(sub, *depth, k_max)
        }
        (SystemDescriptor::TorusZd(act), Entourage::MetricBall { radius }) if act.d == 1 => {
            let step_error = act.generator_errors[0] + crate::systems::circle::ULP;
            translation_covering_k(&act.generators[0], step_error, *radius, k_max, system.digest())
        }
        (SystemDescriptor::TorusZd(act), _) => Err(Error::Unsupported(format!(
            "'{}' is a Z^{} action; its covering set is built by the amenable module",
            act.name, act.d
        ))),
        (SystemDescriptor::LinearFlow(f), _) => Err(Error::Unsupported(format!(
            "'{}' is a flow; its skeleton covering is built by flow_uniform_bound",
            f.name
        ))),
        (SystemDescriptor::Sequence(s), _) => Err(Error::Unsupported(format!(
            "'{}' is a single ultimately periodic sequence, not a minimal subshift",
            s.name
        ))),
        (SystemDescriptor::Annulus(a), _) => Err(Error::Unsupported(format!(
            "annulus map '{}' is not minimal; no covering constant exists",
            a.name
        ))),
        (_, e) => Err(Error::InvalidArgument(format!(
            "entourage {e} does not apply to system '{}'",
            system.name()
        ))),
    }
}

/// Smallest K with every circular gap of {kα : 0 ≤ k ≤ K} below 2·radius.
pub fn rotation_covering_k(rot: &RotationSystem, radius: f64, k_max: u64) -> Result<CoveringCertificate> {
    let digest = SystemDescriptor::Rotation(rot.clone()).digest();
    circle_covering_k(rot.alpha, rot.step_error(), rot.period(), radius, k_max, digest, &rot.name)
}

/// Gap multiset of a growing sorted point set on the circle.
struct Gaps {
    points: BTreeSet<u64>,
    gaps: BTreeMap<u128, u32>,
}

const FULL_TURN: u128 = 1 << 64;

impl Gaps {
    fn new(first: CirclePoint) -> Self {
        let mut gaps = BTreeMap::new();
        gaps.insert(FULL_TURN, 1);
        Gaps {
            points: BTreeSet::from([first.0]),
            gaps,
        }
    }

    fn forward(a: u64, b: u64) -> u128 {
        if a == b {
            FULL_TURN
        } else {
            b.wrapping_sub(a) as u128
        }
    }

    fn remove(&mut self, g: u128) {
        if let Some(c) = self.gaps.get_mut(&g) {
            *c -= 1;
            if *c == 0 {
                self.gaps.remove(&g);
            }
        }
    }

    /// Returns false if the point was already present.
    fn insert(&mut self, p: u64) -> bool {
        if self.points.contains(&p) {
            return false;
        }
        let pred = self
            .points
            .range(..p)
            .next_back()
            .or_else(|| self.points.iter().next_back())
            .copied()
            .expect("nonempty");
        let succ = self
            .points
            .range(p..)
            .next()
            .or_else(|| self.points.iter().next())
            .copied()
            .expect("nonempty");
        self.remove(Self::forward(pred, succ));
        *self.gaps.entry(Self::forward(pred, p)).or_insert(0) += 1;
        *self.gaps.entry(Self::forward(p, succ)).or_insert(0) += 1;
        self.points.insert(p);
        true
    }

    fn max(&self) -> u128 {
        *self.gaps.keys().next_back().expect("at least one gap")
    }
}

pub(crate) fn circle_covering_k(
    alpha: CirclePoint,
    step_error: f64,
    period: Option<u64>,
    radius: f64,
    k_max: u64,
    system_digest: String,
    name: &str,
) -> Result<CoveringCertificate> {
    Entourage::ball(radius).validate()?;
    let epsilon = Entourage::ball(radius);
    let two_r = 2 * RadiusUnits::from_f64(radius).0;
    let mut gaps = Gaps::new(CirclePoint::ZERO);
    let mut previous_max = None;
    let mut k = 0u64;
    while gaps.max() >= two_r {
        if k >= k_max {
            return Err(Error::KMaxExceeded {
                k_max,
                detail: format!(
                    "largest orbit gap is still {:.6} ≥ 2·{radius}",
                    gaps.max() as f64 / SCALE
                ),
            });
        }
        if let Some(q) = period {
            if k + 1 >= q {
                return Err(Error::NotMinimal {
                    diagnosis: format!(
                        "not minimal at this ε: '{name}' has period {q} and its orbit leaves a gap of {:.6} ≥ 2·{radius}",
                        gaps.max() as f64 / SCALE
                    ),
                });
            }
        }
        previous_max = Some(gaps.max());
        k += 1;
        // past this point the orbit positions are no longer trustworthy
        let accumulated = k as f64 * step_error;
        if accumulated > radius / 10.0 {
            return Err(Error::BudgetExceeded {
                accumulated,
                allowed: radius / 10.0,
                context: format!("covering search for '{name}' reached K = {k}"),
            });
        }
        if !gaps.insert(alpha.mul(k).0) {
            return Err(Error::NotMinimal {
                diagnosis: format!(
                    "not minimal at this ε: the orbit of '{name}' closes after {k} steps with a gap of {:.6}",
                    gaps.max() as f64 / SCALE
                ),
            });
        }
    }
    let accumulated = k as f64 * step_error;
    let max_gap = gaps.max() as f64 / SCALE;
    let evidence = if radius > 0.5 && k == 0 {
        Evidence::Trivial {
            reason: format!("radius {radius} exceeds half the circle"),
        }
    } else {
        Evidence::Rotation {
            sorted_orbit: gaps.points.iter().map(|&p| CirclePoint(p)).collect(),
            max_gap,
            witness_gap: previous_max.map(|g| g as f64 / SCALE),
        }
    };
    Ok(CoveringCertificate {
        system_digest,
        epsilon,
        k,
        evidence,
        slack: radius - max_gap.min(1.0) / 2.0 - accumulated,
    })
}

/// First window of length `n` in `text` missing some k-word, with the largest
/// missing word.
fn uncovered_window<'a>(
    text: &'a [u8],
    n: usize,
    depth: usize,
    index: &HashMap<&[u8], usize>,
    k_words: &'a [Vec<u8>],
) -> Option<(&'a [u8], &'a [u8])> {
    if text.len() < n {
        return None;
    }
    let total = k_words.len();
    let mut counts = vec![0u32; total];
    let mut present = 0usize;
    let per_window = n - depth + 1;
    let id = |i: usize| index.get(&text[i..i + depth]).copied();
    let add = |counts: &mut Vec<u32>, present: &mut usize, i: usize, delta: i32| {
        if let Some(j) = id(i) {
            if delta > 0 {
                counts[j] += 1;
                if counts[j] == 1 {
                    *present += 1;
                }
            } else {
                counts[j] -= 1;
                if counts[j] == 0 {
                    *present -= 1;
                }
            }
        }
    };
    for i in 0..per_window {
        add(&mut counts, &mut present, i, 1);
    }
    let mut start = 0;
    loop {
        if present < total {
            let missing = (0..total).rev().find(|&j| counts[j] == 0).expect("some word missing");
            return Some((&text[start..start + n], &k_words[missing]));
        }
        if start + n >= text.len() {
            return None;
        }
        add(&mut counts, &mut present, start, -1);
        add(&mut counts, &mut present, start + per_window, 1);
        start += 1;
    }
}

/// Smallest K such that every legal word of length K + depth contains every
/// legal word of length `depth`.
pub fn subshift_covering_k(sub: &SubstitutionSystem, depth: usize, k_max: u64) -> Result<CoveringCertificate> {
    Entourage::cylinder(depth).validate()?;
    let epsilon = Entourage::cylinder(depth);
    let digest = SystemDescriptor::Substitution(sub.clone()).digest();
    let k_words: Vec<Vec<u8>> = sub.language_words(depth, usize::MAX)?.into_iter().collect();
    let render_words = || k_words.iter().map(|w| sub.render(w)).collect::<Vec<_>>();
    if k_words.len() == 1 {
        return Ok(CoveringCertificate {
            system_digest: digest,
            epsilon,
            k: 0,
            evidence: Evidence::Trivial {
                reason: format!("a single legal word of length {depth}"),
            },
            slack: 0.0,
        });
    }
    let index: HashMap<&[u8], usize> = k_words.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
    let mut cap = 2 * (depth + 1);
    let mut texts = sub.covering_expansions(cap);
    let mut witness: Option<WordWitness> = None;
    for k in 0..=k_max {
        let n = k as usize + depth;
        if n > cap {
            cap *= 2;
            texts = sub.covering_expansions(cap);
        }
        let failure = texts
            .iter()
            .find_map(|t| uncovered_window(t, n, depth, &index, &k_words));
        match failure {
            None => {
                return Ok(CoveringCertificate {
                    system_digest: digest,
                    epsilon,
                    k,
                    evidence: Evidence::Subshift {
                        depth,
                        window: n,
                        k_words: render_words(),
                        witness,
                    },
                    slack: 0.0,
                })
            }
            Some((word, missing)) => {
                witness = Some(WordWitness {
                    word: sub.render(word),
                    missing: sub.render(missing),
                });
            }
        }
    }
    let w = witness.expect("at least one failure recorded");
    Err(Error::KMaxExceeded {
        k_max,
        detail: format!("k-word '{}' is still missing from legal word '{}'", w.missing, w.word),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::AlphaSpec;

    fn golden_k(radius: f64) -> u64 {
        rotation_covering_k(&RotationSystem::golden(), radius, DEFAULT_K_MAX).unwrap().k
    }

    #[test]
    fn golden_rotation_constants() {
        assert_eq!(golden_k(0.3), 2);
        assert_eq!(golden_k(0.1), 7);
        assert_eq!(golden_k(0.05), 12);
    }

    #[test]
    fn golden_radius_03_evidence() {
        let cert = rotation_covering_k(&RotationSystem::golden(), 0.3, DEFAULT_K_MAX).unwrap();
        match &cert.evidence {
            Evidence::Rotation { sorted_orbit, max_gap, witness_gap } => {
                let pts: Vec<f64> = sorted_orbit.iter().map(|p| p.to_f64()).collect();
                assert!((pts[0] - 0.0).abs() < 1e-12);
                assert!((pts[1] - 0.236068).abs() < 1e-6);
                assert!((pts[2] - 0.618034).abs() < 1e-6);
                assert!((max_gap - 0.381966).abs() < 1e-6);
                assert!((witness_gap.unwrap() - 0.618034).abs() < 1e-6);
            }
            other => panic!("unexpected evidence {other:?}"),
        }
        assert!(cert.slack > 0.0);
        assert_eq!(certified_bound(&cert), Rational64::new(1, 3));
    }

    #[test]
    fn large_radius_is_trivial() {
        assert_eq!(golden_k(0.6), 0);
        let third = RotationSystem::new("third", AlphaSpec::Rational { p: 1, q: 3 }).unwrap();
        assert_eq!(rotation_covering_k(&third, 0.75, 10).unwrap().k, 0);
    }

    #[test]
    fn rational_rotation_is_refused() {
        let third = RotationSystem::new("third", AlphaSpec::Rational { p: 1, q: 3 }).unwrap();
        let err = rotation_covering_k(&third, 0.05, DEFAULT_K_MAX).unwrap_err();
        match err {
            Error::NotMinimal { diagnosis } => assert!(diagnosis.contains("not minimal at this ε")),
            other => panic!("unexpected {other:?}"),
        }
        // coarse enough for the three orbit points
        assert_eq!(rotation_covering_k(&third, 0.2, DEFAULT_K_MAX).unwrap().k, 2);
    }

    #[test]
    fn k_max_is_enforced() {
        let err = rotation_covering_k(&RotationSystem::golden(), 0.001, 10).unwrap_err();
        assert!(matches!(err, Error::KMaxExceeded { k_max: 10, .. }));
    }

    #[test]
    fn subshift_constants() {
        let fib = SubstitutionSystem::fibonacci();
        assert_eq!(subshift_covering_k(&fib, 1, 1000).unwrap().k, 2);
        assert_eq!(subshift_covering_k(&fib, 3, 1000).unwrap().k, 7);
        let tm = SubstitutionSystem::thue_morse();
        assert_eq!(subshift_covering_k(&tm, 2, 1000).unwrap().k, 7);
    }

    #[test]
    fn subshift_witness_is_a_real_failure() {
        let fib = SubstitutionSystem::fibonacci();
        let cert = subshift_covering_k(&fib, 1, 1000).unwrap();
        match cert.evidence {
            Evidence::Subshift { witness: Some(w), window, .. } => {
                assert_eq!(window, 3);
                assert_eq!(w.word, "00");
                assert_eq!(w.missing, "1");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = subshift_covering_k(&fib, 3, 3).unwrap_err();
        assert!(matches!(err, Error::KMaxExceeded { .. }));
    }

    #[test]
    fn record_replays() {
        let sys = SystemDescriptor::Rotation(RotationSystem::golden());
        let cert = covering_k(&sys, &Entourage::ball(0.05), DEFAULT_K_MAX).unwrap();
        let rec = cert.record();
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"K\":12"));
        let back: CertificateRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(replay(&back, &sys, DEFAULT_K_MAX).unwrap(), cert);
        let mut forged = back.clone();
        forged.k = 11;
        assert!(replay(&forged, &sys, DEFAULT_K_MAX).is_err());
        let other = SystemDescriptor::Rotation(RotationSystem::new("s2", AlphaSpec::SqrtFrac { n: 2 }).unwrap());
        assert!(replay(&back, &other, DEFAULT_K_MAX).is_err());
    }
}
