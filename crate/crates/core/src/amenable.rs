//! Følner boxes in Z^d, the intersection and syndetic-density lemmas, box
//! Banach densities of torus actions, and the almost-periodicity dichotomy.
//!
//! Z^d is abelian, so left and right translates coincide: Kt = t + K and
//! h⁻¹F = F − h. All densities here are taken along translated boxes only,
//! and are labelled "box-Banach density" to keep that restriction visible.

use std::collections::HashSet;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{circle_covering_k, BoundOptions, DensityReport, PointDensity};
use crate::error::{Error, Result};
use crate::returns::{ReturnProfile, Value};
use crate::systems::circle::ULP;
use crate::systems::{CirclePoint, Entourage, Point, RadiusUnits, SystemDescriptor, TorusZdAction};

/// corner + ∏[0, side_i).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FolnerBox {
    pub corner: Vec<i64>,
    pub sides: Vec<u64>,
}

impl FolnerBox {
    pub fn new(corner: Vec<i64>, sides: Vec<u64>) -> Result<Self> {
        if corner.is_empty() || corner.len() != sides.len() {
            return Err(Error::InvalidArgument(
                "box corner and sides must have the same positive dimension".into(),
            ));
        }
        if sides.contains(&0) {
            return Err(Error::InvalidArgument("box sides must be ≥ 1".into()));
        }
        Ok(FolnerBox { corner, sides })
    }

    /// [0, n)^d.
    pub fn cube(d: usize, n: u64) -> Result<Self> {
        Self::new(vec![0; d], vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn volume(&self) -> u128 {
        self.sides.iter().map(|&s| s as u128).product()
    }

    pub fn contains(&self, t: &[i64]) -> bool {
        t.len() == self.dim()
            && t.iter()
                .zip(self.corner.iter().zip(&self.sides))
                .all(|(&ti, (&c, &s))| ti >= c && ((ti - c) as u64) < s)
    }

    pub fn contains_box(&self, other: &FolnerBox) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| {
                other.corner[i] >= self.corner[i]
                    && other.corner[i] + other.sides[i] as i64 <= self.corner[i] + self.sides[i] as i64
            })
    }

    pub fn translate(&self, t: &[i64]) -> FolnerBox {
        FolnerBox {
            corner: self.corner.iter().zip(t).map(|(c, ti)| c + ti).collect(),
            sides: self.sides.clone(),
        }
    }

    pub fn intersect(&self, other: &FolnerBox) -> Option<FolnerBox> {
        let mut corner = Vec::with_capacity(self.dim());
        let mut sides = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let lo = self.corner[i].max(other.corner[i]);
            let hi = (self.corner[i] + self.sides[i] as i64).min(other.corner[i] + other.sides[i] as i64);
            if hi <= lo {
                return None;
            }
            corner.push(lo);
            sides.push((hi - lo) as u64);
        }
        Some(FolnerBox { corner, sides })
    }

    /// Lattice points in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let total = self.volume();
        (0..total).map(move |mut flat| {
            let mut t = vec![0i64; self.dim()];
            for i in (0..self.dim()).rev() {
                let s = self.sides[i] as u128;
                t[i] = self.corner[i] + (flat % s) as i64;
                flat /= s;
            }
            t
        })
    }
}

fn to_rational(num: u128, den: u128) -> Result<Rational64> {
    let n = i64::try_from(num).map_err(|_| Error::InvalidArgument("count overflows i64".into()))?;
    let d = i64::try_from(den).map_err(|_| Error::InvalidArgument("volume overflows i64".into()))?;
    Ok(Rational64::new(n, d))
}

/// |(t + F) △ F| / |F| in closed form: 2(|F| − ∏ max(0, side_i − |t_i|)) / |F|.
pub fn folner_defect(f: &FolnerBox, t: &[i64]) -> Result<Rational64> {
    if t.len() != f.dim() {
        return Err(Error::InvalidArgument("translation has the wrong dimension".into()));
    }
    let overlap: u128 = f
        .sides
        .iter()
        .zip(t)
        .map(|(&s, &ti)| s.saturating_sub(ti.unsigned_abs()) as u128)
        .product();
    to_rational(2 * (f.volume() - overlap), f.volume())
}

/// |A △ B| by enumeration.
pub fn symmetric_difference(a: &HashSet<Vec<i64>>, b: &HashSet<Vec<i64>>) -> usize {
    a.symmetric_difference(b).count()
}

/// Outcome of the intersection test |F| ≤ 2·|∩_{h∈H} (F − h)|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma42 {
    pub holds: bool,
    pub intersection: Option<FolnerBox>,
    /// |F| / |∩|; `None` stands for an empty intersection (ratio ∞).
    pub ratio: Option<Rational64>,
}

pub fn lemma42_check(f: &FolnerBox, h: &[Vec<i64>]) -> Result<Lemma42> {
    if h.is_empty() {
        return Err(Error::InvalidArgument("H must be nonempty".into()));
    }
    let mut acc = Some(f.clone());
    for hi in h {
        if hi.len() != f.dim() {
            return Err(Error::InvalidArgument("element of H has the wrong dimension".into()));
        }
        let neg: Vec<i64> = hi.iter().map(|x| -x).collect();
        acc = acc.and_then(|a| a.intersect(&f.translate(&neg)));
    }
    Ok(match acc {
        None => Lemma42 {
            holds: false,
            intersection: None,
            ratio: None,
        },
        Some(b) => Lemma42 {
            holds: f.volume() <= 2 * b.volume(),
            ratio: Some(to_rational(f.volume(), b.volume())?),
            intersection: Some(b),
        },
    })
}

/// Smallest n such that [0, n')^d passes `lemma42_check` for H and every n' ≥ n.
pub fn lemma42_threshold(d: usize, h: &[Vec<i64>]) -> Result<u64> {
    // the intersection of cubes has sides n − spread_i
    let spreads: Vec<u64> = (0..d)
        .map(|i| {
            let lo = h.iter().map(|v| v[i]).min().unwrap_or(0);
            let hi = h.iter().map(|v| v[i]).max().unwrap_or(0);
            (hi - lo) as u64
        })
        .collect();
    // (n − w_i)/n is increasing in n, so the first passing n is the threshold
    let mut n = spreads.iter().copied().max().unwrap_or(0) + 1;
    loop {
        let vol = (n as f64).powi(d as i32);
        let inter: f64 = spreads.iter().map(|&w| (n - w) as f64).product();
        if vol <= 2.0 * inter {
            let cube = FolnerBox::cube(d, n)?;
            if lemma42_check(&cube, h)?.holds {
                return Ok(n);
            }
        }
        n += 1;
    }
}

/// Membership oracle for a subset B of Z^d.
pub trait VisitOracle: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, t: &[i64]) -> bool;

    /// |B ∩ box|, by enumeration unless overridden.
    fn count_in(&self, b: &FolnerBox) -> u128 {
        b.points().filter(|t| self.contains(t)).count() as u128
    }
}

/// {t : (t_i mod m_i)_i ∈ residues}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeCoset {
    pub moduli: Vec<u64>,
    pub residues: Vec<Vec<u64>>,
}

impl LatticeCoset {
    pub fn new(moduli: Vec<u64>, residues: Vec<Vec<u64>>) -> Result<Self> {
        if moduli.is_empty() || moduli.contains(&0) {
            return Err(Error::InvalidArgument("moduli must be positive".into()));
        }
        let mut seen = HashSet::new();
        for r in &residues {
            if r.len() != moduli.len() || r.iter().zip(&moduli).any(|(a, m)| a >= m) {
                return Err(Error::InvalidArgument(format!("residue {r:?} does not fit moduli {moduli:?}")));
            }
            if !seen.insert(r.clone()) {
                return Err(Error::InvalidArgument(format!("residue {r:?} repeated")));
            }
        }
        Ok(LatticeCoset { moduli, residues })
    }

    /// m_1 Z × … × m_d Z.
    pub fn sublattice(moduli: Vec<u64>) -> Result<Self> {
        let zero = vec![0; moduli.len()];
        Self::new(moduli, vec![zero])
    }

    /// |residues| / ∏ m_i.
    pub fn density(&self) -> Rational64 {
        Rational64::new(self.residues.len() as i64, self.moduli.iter().product::<u64>() as i64)
    }

    /// Smallest-volume box [0, k_1) × … with t + K meeting B for every t.
    pub fn minimal_box_witness(&self) -> Result<Vec<Vec<i64>>> {
        if self.residues.is_empty() {
            return Err(Error::InvalidArgument("empty coset is not syndetic".into()));
        }
        let fundamental = FolnerBox::new(vec![0; self.moduli.len()], self.moduli.clone())?;
        let mut best: Option<FolnerBox> = None;
        for sides in fundamental.points() {
            let k = FolnerBox::new(vec![0; sides.len()], sides.iter().map(|&s| s as u64 + 1).collect())?;
            if best.as_ref().is_some_and(|b| b.volume() <= k.volume()) {
                continue;
            }
            let ok = fundamental
                .points()
                .all(|t| k.points().any(|kk| self.contains(&add(&t, &kk))));
            if ok {
                best = Some(k);
            }
        }
        Ok(best.expect("the fundamental domain itself works").points().collect())
    }
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Number of t in [c, c+s) with t ≡ r (mod m).
fn residue_count(c: i64, s: u64, r: u64, m: u64) -> u128 {
    let m = m as i128;
    let first = c as i128 + (r as i128 - c as i128).rem_euclid(m);
    let end = c as i128 + s as i128;
    if first >= end {
        0
    } else {
        ((end - 1 - first) / m + 1) as u128
    }
}

impl VisitOracle for LatticeCoset {
    fn dim(&self) -> usize {
        self.moduli.len()
    }

    fn contains(&self, t: &[i64]) -> bool {
        let key: Vec<u64> = t
            .iter()
            .zip(&self.moduli)
            .map(|(&ti, &m)| ti.rem_euclid(m as i64) as u64)
            .collect();
        self.residues.contains(&key)
    }

    fn count_in(&self, b: &FolnerBox) -> u128 {
        self.residues
            .iter()
            .map(|r| {
                (0..self.dim())
                    .map(|i| residue_count(b.corner[i], b.sides[i], r[i], self.moduli[i]))
                    .product::<u128>()
            })
            .sum()
    }
}

/// An explicit sorted visit list in Z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortedVisits {
    pub times: Vec<i64>,
}

impl SortedVisits {
    pub fn new(mut times: Vec<i64>) -> Self {
        times.sort_unstable();
        times.dedup();
        SortedVisits { times }
    }

    pub fn from_profile(profile: &ReturnProfile) -> Self {
        Self::new(profile.times.iter().map(|&t| t as i64).collect())
    }
}

impl VisitOracle for SortedVisits {
    fn dim(&self) -> usize {
        1
    }

    fn contains(&self, t: &[i64]) -> bool {
        self.times.binary_search(&t[0]).is_ok()
    }

    fn count_in(&self, b: &FolnerBox) -> u128 {
        let lo = self.times.partition_point(|&x| x < b.corner[0]);
        let hi = self.times.partition_point(|&x| x < b.corner[0] + b.sides[0] as i64);
        (hi - lo) as u128
    }
}

/// A finite subset K of Z^d with t + K meeting B for every t in `region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndeticWitness {
    pub k_set: Vec<Vec<i64>>,
    pub region: FolnerBox,
}

impl SyndeticWitness {
    /// Exhaustive check on the region; reports the first failing t.
    pub fn verify(&self, b: &dyn VisitOracle) -> Result<()> {
        if self.k_set.is_empty() {
            return Err(Error::InvalidArgument("K must be nonempty".into()));
        }
        for t in self.region.points() {
            if !self.k_set.iter().any(|k| b.contains(&add(&t, k))) {
                return Err(Error::InvalidArgument(format!("t + K misses B at t = {t:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma43Entry {
    pub sides: Vec<u64>,
    pub frequency: Rational64,
    pub lemma42_holds: bool,
    /// |∩_{k∈K}(F − k)| / (|K|·|F|); a lower bound for every box.
    pub intersection_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma43Ladder {
    /// 1/(2|K|).
    pub bound: Rational64,
    pub entries: Vec<Lemma43Entry>,
    /// First ladder index from which the intersection test passes throughout.
    pub threshold_index: Option<usize>,
}

/// Frequencies |B ∩ F_n| / |F_n| along a box ladder, checked against 1/(2|K|)
/// wherever the intersection test passes for H = K.
pub fn lemma43_density(b: &dyn VisitOracle, witness: &SyndeticWitness, boxes: &[FolnerBox]) -> Result<Lemma43Ladder> {
    for f in boxes {
        if !witness.region.contains_box(f) {
            return Err(Error::InvalidArgument(format!(
                "witness region {:?}+{:?} does not contain box {:?}+{:?}",
                witness.region.corner, witness.region.sides, f.corner, f.sides
            )));
        }
    }
    witness.verify(b)?;
    let k = witness.k_set.len() as u128;
    let bound = Rational64::new(1, 2 * k as i64);
    let mut entries = Vec::with_capacity(boxes.len());
    for f in boxes {
        let count = b.count_in(f);
        let frequency = to_rational(count, f.volume())?;
        let l42 = lemma42_check(f, &witness.k_set)?;
        let inter = l42.intersection.as_ref().map_or(0, |i| i.volume());
        let intersection_bound = inter as f64 / (k as f64 * f.volume() as f64);
        // |B ∩ F| ≥ |∩|/|K| always; past the threshold that is ≥ |F|/(2|K|)
        if count * k < inter || (l42.holds && frequency < bound) {
            return Err(Error::Violation {
                point: format!("box {:?}+{:?}", f.corner, f.sides),
                start: 0.0,
                end: f.volume() as f64,
                frequency: count as f64 / f.volume() as f64,
                bound: intersection_bound,
            });
        }
        entries.push(Lemma43Entry {
            sides: f.sides.clone(),
            frequency,
            lemma42_holds: l42.holds,
            intersection_bound,
        });
    }
    let threshold_index = (0..entries.len()).find(|&i| entries[i..].iter().all(|e| e.lemma42_holds));
    Ok(Lemma43Ladder {
        bound,
        entries,
        threshold_index,
    })
}

/// Summed-area table of a bitmap over a box region.
pub struct BoxCounter {
    region: FolnerBox,
    /// Prefix sums on the grid with sides + 1.
    sums: Vec<u32>,
    strides: Vec<usize>,
}

impl BoxCounter {
    pub fn new(region: &FolnerBox, b: &dyn VisitOracle) -> Result<Self> {
        let d = region.dim();
        if b.dim() != d {
            return Err(Error::InvalidArgument("oracle and region dimensions differ".into()));
        }
        let ext: Vec<usize> = region.sides.iter().map(|&s| s as usize + 1).collect();
        let total: usize = ext.iter().product();
        if total > 1 << 28 {
            return Err(Error::Unsupported(format!("region of {total} cells is too large")));
        }
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * ext[i + 1];
        }
        let mut sums = vec![0u32; total];
        for (flat, t) in region.points().enumerate() {
            if b.contains(&t) {
                let mut idx = 0;
                let mut rest = flat;
                for i in (0..d).rev() {
                    let s = region.sides[i] as usize;
                    idx += (rest % s + 1) * strides[i];
                    rest /= s;
                }
                sums[idx] = 1;
            }
        }
        for i in 0..d {
            for idx in 0..total {
                if !(idx / strides[i]).is_multiple_of(ext[i]) {
                    sums[idx] += sums[idx - strides[i]];
                }
            }
        }
        Ok(BoxCounter {
            region: region.clone(),
            sums,
            strides,
        })
    }

    /// Visits in the box with corner `rel` (relative to the region) and `sides`.
    pub fn count(&self, rel: &[usize], sides: &[u64]) -> u64 {
        let d = rel.len();
        let mut total: i64 = 0;
        for mask in 0..(1usize << d) {
            let mut idx = 0;
            let mut sign = 1i64;
            for i in 0..d {
                if mask >> i & 1 == 1 {
                    idx += (rel[i] + sides[i] as usize) * self.strides[i];
                } else {
                    idx += rel[i] * self.strides[i];
                    sign = -sign;
                }
            }
            total += sign * self.sums[idx] as i64;
        }
        total as u64
    }

    fn placements(&self, sides: &[u64]) -> Result<FolnerBox> {
        let free: Vec<u64> = self
            .region
            .sides
            .iter()
            .zip(sides)
            .map(|(&r, &s)| if s <= r { r - s + 1 } else { 0 })
            .collect();
        if sides.len() != self.region.dim() || free.contains(&0) {
            return Err(Error::DegenerateWindow(format!(
                "box {sides:?} does not fit in region {:?}",
                self.region.sides
            )));
        }
        FolnerBox::new(vec![0; free.len()], free)
    }

    /// Minimum visit count over all placements of the box, with the first
    /// minimizing corner (absolute coordinates).
    pub fn min_count(&self, sides: &[u64]) -> Result<(u64, Vec<i64>)> {
        let places = self.placements(sides)?;
        let mut best = (u64::MAX, Vec::new());
        for rel in places.points() {
            let r: Vec<usize> = rel.iter().map(|&x| x as usize).collect();
            let c = self.count(&r, sides);
            if c < best.0 {
                best = (c, add(&rel, &self.region.corner));
                if c == 0 {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// Largest s such that some cube of side s avoids B.
    pub fn max_gap(&self) -> u64 {
        let mut lo = 0u64;
        let mut hi = *self.region.sides.iter().min().unwrap_or(&0);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            let sides = vec![mid; self.region.dim()];
            if self.min_count(&sides).map(|(c, _)| c == 0).unwrap_or(false) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }
}

/// Outcome of the almost-periodicity test along a box ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum ApVerdict {
    /// Some ladder size admits no B-free placement.
    ApConsistent {
        /// Largest B-free cube side in the region.
        max_gap: u64,
        min_frequencies: Vec<f64>,
    },
    /// Every ladder size has a B-free placement, so the box-Banach density is 0.
    NotAp {
        witnesses: Vec<FolnerBox>,
        min_frequencies: Vec<f64>,
    },
}

pub fn ap_characterization(b: &dyn VisitOracle, region: &FolnerBox, ladder: &[Vec<u64>]) -> Result<ApVerdict> {
    if ladder.is_empty() {
        return Err(Error::InvalidArgument("empty box ladder".into()));
    }
    let counter = BoxCounter::new(region, b)?;
    let mut witnesses = Vec::new();
    let mut min_frequencies = Vec::new();
    for sides in ladder {
        let (count, corner) = counter.min_count(sides)?;
        let vol: u64 = sides.iter().product();
        min_frequencies.push(count as f64 / vol as f64);
        if count == 0 {
            witnesses.push(FolnerBox::new(corner, sides.clone())?);
        }
    }
    if witnesses.len() == ladder.len() {
        // re-check by membership
        for w in &witnesses {
            if w.points().any(|t| b.contains(&t)) {
                return Err(Error::InvalidArgument(format!("witness {w:?} meets B")));
            }
        }
        Ok(ApVerdict::NotAp {
            witnesses,
            min_frequencies,
        })
    } else {
        Ok(ApVerdict::ApConsistent {
            max_gap: counter.max_gap(),
            min_frequencies,
        })
    }
}

/// N(x, ε[x]) for a torus action, as an oracle.
struct OrbitVisits<'a> {
    act: &'a TorusZdAction,
    x: &'a [CirclePoint],
    radius: RadiusUnits,
}

impl VisitOracle for OrbitVisits<'_> {
    fn dim(&self) -> usize {
        self.act.d
    }

    fn contains(&self, t: &[i64]) -> bool {
        let y: Vec<CirclePoint> = (0..self.act.m)
            .map(|j| self.x[j].add(self.act.displacement_coord(t, j)))
            .collect();
        self.radius.contains(TorusZdAction::distance_units(&y, self.x))
    }
}

/// Box-Banach density of N(x, ε[x]) over a grid, against the bound
/// min(1/(2|K|), |∩_{k∈K}(F − k)|/(|K||F|)) where K is the exponent box
/// whose orbit covers the torus at the shrunken radius.
pub fn amenable_uniform_bound(
    act: &TorusZdAction,
    eps: &Entourage,
    grid: &[Point],
    grid_note: &str,
    box_sides: &[u64],
    horizon: &[u64],
    options: &BoundOptions,
) -> Result<DensityReport> {
    let Entourage::MetricBall { radius } = *eps else {
        return Err(Error::InvalidArgument("torus actions use metric-ball entourages".into()));
    };
    eps.validate()?;
    if box_sides.len() != act.d || horizon.len() != act.d {
        return Err(Error::InvalidArgument(format!("box and horizon must have {} sides", act.d)));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let axes = act.product_form().ok_or_else(|| {
        Error::Unsupported(format!(
            "'{}' is not a product of coordinate rotations; only product actions get a covering set",
            act.name
        ))
    })?;
    act.check_radius_budget(horizon, radius)?;
    let cover_radius = options
        .covering_entourage(eps)
        .radius()
        .expect("metric ball");
    let system = SystemDescriptor::TorusZd(act.clone());
    let digest = system.digest();
    let mut certs = Vec::with_capacity(act.d);
    for (i, &(alpha, err)) in axes.iter().enumerate() {
        let cert = circle_covering_k(
            alpha,
            err + ULP,
            None,
            cover_radius,
            options.k_max,
            digest.clone(),
            &format!("{} axis {i}", act.name),
        )
        .map_err(|e| match e {
            Error::KMaxExceeded { k_max, detail } => Error::KMaxExceeded {
                k_max,
                detail: format!("axis {i}: {detail}"),
            },
            other => other,
        })?;
        certs.push(cert);
    }
    let k_set_box = FolnerBox::new(vec![0; act.d], certs.iter().map(|c| c.k + 1).collect())?;
    let k_size = k_set_box.volume();
    let f = FolnerBox::new(vec![0; act.d], box_sides.to_vec())?;
    let k_set: Vec<Vec<i64>> = k_set_box.points().collect();
    let l42 = lemma42_check(&f, &k_set)?;
    let inter = l42.intersection.as_ref().map_or(0, |b| b.volume());
    let half = 1.0 / (2.0 * k_size as f64);
    let certified = half.min(inter as f64 / (k_size as f64 * f.volume() as f64));
    let region = FolnerBox::new(vec![0; act.d], horizon.to_vec())?;
    let r = RadiusUnits::from_f64(radius);
    let vol = f.volume() as u64;
    let points = grid
        .par_iter()
        .map(|x| {
            let Point::Torus(xv) = x else {
                return Err(Error::PointKind { expected: "torus", found: x.kind() });
            };
            if xv.len() != act.m {
                return Err(Error::InvalidArgument("grid point has the wrong dimension".into()));
            }
            let oracle = OrbitVisits { act, x: xv, radius: r };
            let counter = BoxCounter::new(&region, &oracle)?;
            let (count, corner) = counter.min_count(box_sides)?;
            let frequency = count as f64 / vol as f64;
            Ok(PointDensity {
                point: x.to_string(),
                count: Value::Int(count),
                frequency,
                start: Value::Int(corner.first().copied().unwrap_or(0) as u64),
                end: Value::Int(corner.first().copied().unwrap_or(0) as u64 + box_sides[0]),
                max_gap: None,
                margin: frequency - certified,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = DensityReport {
        system: act.name.clone(),
        system_digest: digest,
        epsilon: *eps,
        certificates: certs.iter().map(|c| c.record()).collect(),
        covering_size: k_size as u64,
        estimate: "box-Banach density".into(),
        continuous: false,
        window_length: Value::Int(vol),
        horizon: Value::Int(region.volume() as u64),
        box_sides: Some(box_sides.to_vec()),
        asymptotic_bound: format!("1/{}", 2 * k_size),
        certified_bound: certified,
        points,
        min_measured: 0.0,
        margin: 0.0,
        violations: Vec::new(),
        grid_note: format!(
            "{grid_note}; windows are translated boxes of sides {box_sides:?} (M, N give the first axis)"
        ),
        spot_check: None,
    };
    report.settle();
    Ok(report)
}
