//! The five subcommands. Each returns a report, optional CSV rows and the
//! exit code the run earned; nothing here touches the filesystem.

use minrec_core::amenable::{
    amenable_uniform_bound, ap_characterization, folner_defect, lemma42_check, lemma42_threshold, lemma43_density,
    ApVerdict, FolnerBox, LatticeCoset, Lemma43Ladder, SortedVisits, SyndeticWitness,
};
use minrec_core::covering::{rational_string, verify_uniform_bound, DensityReport};
use minrec_core::flow::{flow_uniform_bound, min_window_measure, quadrature_measure, visit_intervals, LinearFlow};
use minrec_core::returns::{return_set, CsvRow, Value, Window};
use minrec_core::systems::{AnnulusPoint, CirclePoint, Point, SystemDescriptor};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{integral, ExperimentConfig};
use crate::exit::{ExitCode, Failure};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Bound,
    Density,
    Folner,
    Flow,
    Probe,
}

/// Everything a run produces except timing.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub status: ExitCode,
    pub result: RunResult,
    #[serde(skip)]
    pub csv: Vec<CsvRow>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum RunResult {
    Bound(BoundResult),
    Density(DensityResult),
    Folner(FolnerResult),
    Probe(ProbeResult),
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundResult {
    pub runs: Vec<DensityReport>,
    /// Smallest margin over all runs.
    pub margin: f64,
    pub min_measured: f64,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureCheck>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureCheck {
    pub horizon: f64,
    pub tolerance: f64,
    pub points: Vec<QuadraturePoint>,
    pub max_relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraturePoint {
    pub point: String,
    pub exact: f64,
    pub quadrature: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityResult {
    pub system: String,
    pub epsilon: String,
    pub horizon: f64,
    pub grid_note: String,
    pub curves: Vec<Curve>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    pub point: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_return: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<u64>,
    /// 1/(L+1) for the observed max gap L.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_bound: Option<String>,
    pub ladder: Vec<CurvePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub window: f64,
    pub min_count: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_frequency_exact: Option<String>,
    pub min_frequency: f64,
    pub argmin_start: Value,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FolnerResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<Vec<DefectEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma42: Option<Lemma42Result>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma43: Option<Lemma43Result>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dichotomy: Option<ApVerdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectEntry {
    pub side: u64,
    pub defect: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma42Result {
    pub threshold: u64,
    pub entries: Vec<Lemma42Entry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma42Entry {
    pub side: u64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection_volume: Option<u128>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma43Result {
    pub density: String,
    pub k_size: usize,
    pub ladder: Lemma43Ladder,
    pub frequencies: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub system: String,
    pub theta: f64,
    pub tolerance: f64,
    pub rows: Vec<ProbeRow>,
    pub max_abs_error: f64,
    pub radius_exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub n: u64,
    pub defect: f64,
    pub formula: f64,
    pub abs_error: f64,
    /// Level 2n keeps its radius after `radius_steps` iterations.
    pub radius_exact: bool,
}

pub fn run(command: Command, config: &ExperimentConfig) -> Result<RunReport, Failure> {
    let system = config.system.build()?;
    let (status, result, csv) = match command {
        Command::Bound => bound(config, &system, false)?,
        Command::Flow => {
            if !matches!(system, SystemDescriptor::LinearFlow(_)) {
                return Err(Failure::config_msg("the flow command needs a linear_flow system".into()));
            }
            bound(config, &system, true)?
        }
        Command::Density => density(config, &system)?,
        Command::Folner => folner(config, &system)?,
        Command::Probe => probe(config, &system)?,
    };
    Ok(RunReport {
        command,
        config_digest: config.digest(),
        config: config.clone(),
        status,
        result,
        csv,
    })
}

type Outcome = (ExitCode, RunResult, Vec<CsvRow>);

fn bound(config: &ExperimentConfig, system: &SystemDescriptor, check_quadrature: bool) -> Result<Outcome, Failure> {
    if let SystemDescriptor::Annulus(a) = system {
        return Err(Failure::new(
            ExitCode::CoveringRefusal,
            format!("'{}' is distal but not minimal; it has no covering constant", a.name),
        ));
    }
    let (grid, note) = config.grid(system)?;
    let options = config.bound_options();
    let eps = &config.epsilon;
    let mut runs = Vec::new();
    match system {
        SystemDescriptor::Rotation(_) | SystemDescriptor::Substitution(_) | SystemDescriptor::Sequence(_) => {
            let h = integral(config.horizon()?, "horizon")?;
            for &w in config.windows()? {
                let w = integral(w, "window")?;
                runs.push(verify_uniform_bound(system, eps, &grid, &note, w, h, &options).map_err(Failure::core)?);
            }
        }
        SystemDescriptor::TorusZd(act) => {
            let (ladder, horizon) = match &config.amenable {
                Some(a) => (a.box_sides.clone(), a.horizon.clone()),
                None => {
                    let h = integral(config.horizon()?, "horizon")?;
                    let ladder = config
                        .windows()?
                        .iter()
                        .map(|&w| Ok(vec![integral(w, "window")?; act.d]))
                        .collect::<Result<Vec<_>, Failure>>()?;
                    (ladder, vec![h; act.d])
                }
            };
            for sides in &ladder {
                runs.push(
                    amenable_uniform_bound(act, eps, &grid, &note, sides, &horizon, &options).map_err(Failure::core)?,
                );
            }
        }
        SystemDescriptor::LinearFlow(flow) => {
            let h = config.horizon()?;
            for &w in config.windows()? {
                runs.push(flow_uniform_bound(flow, eps, &grid, &note, w, h, &options).map_err(Failure::core)?);
            }
        }
        SystemDescriptor::Annulus(_) => unreachable!("refused above"),
    }
    let quadrature = match (check_quadrature, system) {
        (true, SystemDescriptor::LinearFlow(flow)) => Some(quadrature_check(config, flow, &grid)?),
        _ => None,
    };
    let margin = runs.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let min_measured = runs.iter().map(|r| r.min_measured).fold(f64::INFINITY, f64::min);
    let violations = runs.iter().map(|r| r.violations.len()).sum();
    let quad_ok = quadrature.as_ref().is_none_or(|q| q.max_relative_error <= q.tolerance);
    let status = if violations == 0 && margin >= 0.0 && quad_ok {
        ExitCode::Ok
    } else {
        ExitCode::Violation
    };
    let csv = runs.iter().flat_map(|r| r.csv_rows()).collect();
    Ok((
        status,
        RunResult::Bound(BoundResult {
            runs,
            margin,
            min_measured,
            violations,
            quadrature,
        }),
        csv,
    ))
}

fn torus_coords(x: &Point) -> Result<&[CirclePoint], Failure> {
    match x {
        Point::Torus(v) => Ok(v),
        other => Err(Failure::config_msg(format!("expected a torus grid point, got {}", other.kind()))),
    }
}

fn quadrature_check(config: &ExperimentConfig, flow: &LinearFlow, grid: &[Point]) -> Result<QuadratureCheck, Failure> {
    let spec = config
        .flow
        .as_ref()
        .ok_or_else(|| Failure::config_msg("the flow command needs a 'flow' section".into()))?;
    let radius = config
        .epsilon
        .radius()
        .ok_or_else(|| Failure::config_msg("flows use metric-ball entourages".into()))?;
    let t = spec.quadrature_horizon;
    let points = grid
        .par_iter()
        .map(|x| {
            let xv = torus_coords(x)?;
            let exact = visit_intervals(flow, xv, xv, radius, 0.0, t).map_err(Failure::core)?.total_measure;
            let quadrature = quadrature_measure(flow, xv, radius, 0.0, t).map_err(Failure::core)?;
            let relative_error = if exact > 0.0 {
                (exact - quadrature).abs() / exact
            } else {
                quadrature.abs()
            };
            Ok(QuadraturePoint {
                point: x.to_string(),
                exact,
                quadrature,
                relative_error,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let max_relative_error = points.iter().map(|p| p.relative_error).fold(0.0, f64::max);
    Ok(QuadratureCheck {
        horizon: t,
        tolerance: spec.quadrature_tolerance,
        points,
        max_relative_error,
    })
}

fn density(config: &ExperimentConfig, system: &SystemDescriptor) -> Result<Outcome, Failure> {
    let (grid, note) = config.grid(system)?;
    let eps = &config.epsilon;
    let horizon = config.horizon()?;
    let windows = config.windows()?;
    let name = system.name().to_string();
    let curves: Vec<(Curve, Vec<CsvRow>)> = match system {
        SystemDescriptor::LinearFlow(flow) => {
            let radius = eps
                .radius()
                .ok_or_else(|| Failure::config_msg("flows use metric-ball entourages".into()))?;
            grid.par_iter()
                .map(|x| {
                    let xv = torus_coords(x)?;
                    let vi = visit_intervals(flow, xv, xv, radius, 0.0, horizon).map_err(Failure::core)?;
                    let mut ladder = Vec::new();
                    let mut rows = Vec::new();
                    for &w in windows {
                        let (m, t) = min_window_measure(&vi.intervals, w, horizon).map_err(Failure::core)?;
                        ladder.push(CurvePoint {
                            window: w,
                            min_count: Value::Real(m),
                            min_frequency_exact: None,
                            min_frequency: m / w,
                            argmin_start: Value::Real(t),
                        });
                        rows.push(CsvRow {
                            system: name.clone(),
                            x: x.to_string(),
                            epsilon: eps.to_string(),
                            start: Value::Real(t),
                            end: Value::Real(t + w),
                            count: Value::Real(m),
                            max_gap: None,
                            frequency: m / w,
                        });
                    }
                    let curve = Curve {
                        point: x.to_string(),
                        first_return: None,
                        max_gap: None,
                        gap_bound: None,
                        ladder,
                    };
                    Ok((curve, rows))
                })
                .collect::<Result<Vec<_>, Failure>>()?
        }
        SystemDescriptor::Annulus(_) | SystemDescriptor::TorusZd(_) => {
            return Err(Failure::config_msg(format!(
                "density curves are implemented for cascades and flows, not '{name}'"
            )))
        }
        _ => {
            let h = integral(horizon, "horizon")?;
            let ws = windows
                .iter()
                .map(|&w| integral(w, "window"))
                .collect::<Result<Vec<_>, _>>()?;
            let observed = Window::new(0, h).map_err(Failure::core)?;
            grid.par_iter()
                .map(|x| {
                    let profile = return_set(system, x, x, eps, observed).map_err(Failure::core)?;
                    let ladder = profile.density_ladder(&ws).map_err(Failure::core)?;
                    let rows = ladder
                        .iter()
                        .map(|e| e.csv_row(&name, &x.to_string(), &eps.to_string(), Some(profile.max_gap)))
                        .collect();
                    let curve = Curve {
                        point: x.to_string(),
                        first_return: profile.first_return(),
                        max_gap: Some(profile.max_gap),
                        gap_bound: Some(format!("1/{}", profile.max_gap + 1)),
                        ladder: ladder
                            .iter()
                            .map(|e| CurvePoint {
                                window: e.window_length as f64,
                                min_count: Value::Int(e.min_count),
                                min_frequency_exact: Some(rational_string(e.min_frequency)),
                                min_frequency: e.frequency_f64(),
                                argmin_start: Value::Int(e.argmin_window.start),
                            })
                            .collect(),
                    };
                    Ok((curve, rows))
                })
                .collect::<Result<Vec<_>, Failure>>()?
        }
    };
    let (curves, rows): (Vec<Curve>, Vec<Vec<CsvRow>>) = curves.into_iter().unzip();
    Ok((
        ExitCode::Ok,
        RunResult::Density(DensityResult {
            system: name,
            epsilon: eps.to_string(),
            horizon,
            grid_note: note,
            curves,
        }),
        rows.into_iter().flatten().collect(),
    ))
}

fn folner(config: &ExperimentConfig, system: &SystemDescriptor) -> Result<Outcome, Failure> {
    let spec = config
        .folner
        .as_ref()
        .ok_or_else(|| Failure::config_msg("the folner command needs a 'folner' section".into()))?;
    let mut out = FolnerResult::default();
    let mut ok = true;
    if let Some(d) = &spec.defect {
        let mut entries = Vec::new();
        for &n in &d.sides {
            let f = FolnerBox::cube(d.dim, n).map_err(Failure::config)?;
            let r = folner_defect(&f, &d.t).map_err(Failure::config)?;
            entries.push(DefectEntry {
                side: n,
                defect: rational_string(r),
                value: *r.numer() as f64 / *r.denom() as f64,
            });
        }
        out.defect = Some(entries);
    }
    if let Some(l) = &spec.lemma42 {
        let d = l.h.first().map_or(0, |t| t.len());
        let threshold = lemma42_threshold(d, &l.h).map_err(Failure::config)?;
        let mut entries = Vec::new();
        for &n in &l.sides {
            let r = lemma42_check(&FolnerBox::cube(d, n).map_err(Failure::config)?, &l.h).map_err(Failure::config)?;
            ok &= n < threshold || r.holds;
            entries.push(Lemma42Entry {
                side: n,
                holds: r.holds,
                intersection_volume: r.intersection.map(|b| b.volume()),
            });
        }
        out.lemma42 = Some(Lemma42Result { threshold, entries });
    }
    if let Some(l) = &spec.lemma43 {
        let b = LatticeCoset::new(l.moduli.clone(), l.residues.clone()).map_err(Failure::config)?;
        let d = l.moduli.len();
        let k_set = match &l.k_set {
            Some(k) => k.clone(),
            None => b.minimal_box_witness().map_err(Failure::core)?,
        };
        let top = l.sides.iter().copied().max().unwrap_or(1);
        let witness = SyndeticWitness {
            k_set: k_set.clone(),
            region: FolnerBox::cube(d, top).map_err(Failure::config)?,
        };
        let boxes = l
            .sides
            .iter()
            .map(|&n| FolnerBox::cube(d, n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(Failure::config)?;
        let ladder = lemma43_density(&b, &witness, &boxes).map_err(Failure::core)?;
        let frequencies = ladder.entries.iter().map(|e| rational_string(e.frequency)).collect();
        out.lemma43 = Some(Lemma43Result {
            density: rational_string(b.density()),
            k_size: k_set.len(),
            ladder,
            frequencies,
        });
    }
    if let Some(a) = &spec.dichotomy {
        let (grid, _) = config.grid(system)?;
        let x = grid.first().ok_or_else(|| Failure::config_msg("empty grid".into()))?;
        let profile = return_set(system, x, x, &config.epsilon, Window::new(0, a.region).map_err(Failure::config)?)
            .map_err(Failure::core)?;
        let visits = SortedVisits::from_profile(&profile);
        let region = FolnerBox::cube(1, a.region).map_err(Failure::config)?;
        let ladder: Vec<Vec<u64>> = a.ladder.iter().map(|&s| vec![s]).collect();
        out.dichotomy = Some(ap_characterization(&visits, &region, &ladder).map_err(Failure::core)?);
    }
    let status = if ok { ExitCode::Ok } else { ExitCode::Violation };
    Ok((status, RunResult::Folner(out), Vec::new()))
}

fn probe(config: &ExperimentConfig, system: &SystemDescriptor) -> Result<Outcome, Failure> {
    let SystemDescriptor::Annulus(ann) = system else {
        return Err(Failure::config_msg("the probe command needs an annulus system".into()));
    };
    let spec = config
        .probe
        .as_ref()
        .ok_or_else(|| Failure::config_msg("the probe command needs a 'probe' section".into()))?;
    let rows = spec
        .n
        .par_iter()
        .map(|&n| {
            let defect = ann.equicontinuity_defect(n, spec.theta).map_err(Failure::core)?;
            let formula = ann.defect_formula(n).map_err(Failure::core)?;
            let level = 2 * n;
            let start = AnnulusPoint::new(level, spec.theta);
            let end = ann.iterate(start, spec.radius_steps).map_err(Failure::core)?;
            let radius_exact = end.level == level
                && ann.radius(end.level).map_err(Failure::core)?.to_bits()
                    == ann.radius(level).map_err(Failure::core)?.to_bits();
            Ok(ProbeRow {
                n,
                defect,
                formula,
                abs_error: (defect - formula).abs(),
                radius_exact,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    let radius_exact = rows.iter().all(|r| r.radius_exact);
    let status = if max_abs_error <= spec.tolerance && radius_exact {
        ExitCode::Ok
    } else {
        ExitCode::Violation
    };
    Ok((
        status,
        RunResult::Probe(ProbeResult {
            system: ann.name.clone(),
            theta: spec.theta,
            tolerance: spec.tolerance,
            rows,
            max_abs_error,
            radius_exact,
        }),
        Vec::new(),
    ))
}
