//! Offline/online runs and convergence studies.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Forcing, StudyConfig};
use super::{fit_loglog, fmt_f64, fmt_opt, parse_opt, parse_usize, read_csv, read_text, write_json, CsvWriter, Slope};
use crate::coeffs::CoefficientSpec;
use crate::macrosolver::{
    assemble_solve, emod_report, relative_errors, AnalyticSolution, AssemblyOptions, FemSolution, FemSpace, Reference,
    RelativeErrors, DEFAULT_EMOD_PROBES,
};
use crate::mesh::{OfflineMesh, OnlineMesh};
use crate::microcell::{analytic_table, offline_sweep, EffectiveTable};
use crate::reconstruct::{reconstruct_field, PolyMatrixField};
use crate::{Error, MatrixField, Point, Result};

/// Offline stage output: the handoff artifacts plus bookkeeping.
#[derive(Debug, Clone)]
pub struct OfflineArtifact {
    pub table: EffectiveTable,
    pub field: PolyMatrixField,
    pub cost: OfflineCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineCost {
    pub q: usize,
    pub m: usize,
    pub cell_problems: usize,
    pub sweep_time_s: f64,
    pub reconstruct_time_s: f64,
}

/// Offline table and field at `q`. A realization seed (checkerboard only)
/// is taken from `seed`.
pub fn build_offline(cfg: &StudyConfig, q: usize, seed: u64) -> Result<OfflineArtifact> {
    let off = cfg.offline()?;
    let mesh = OfflineMesh::new(cfg.domain, q)?;
    let start = Instant::now();
    let table = if off.analytic {
        let effective = cfg.problem.known_effective().ok_or_else(|| {
            Error::InvalidArgument(format!("{} has no closed-form effective matrix", cfg.problem.name()))
        })?;
        analytic_table(&mesh, effective.as_ref())
    } else {
        let coeff = cfg.problem.with_seed(seed).build()?;
        offline_sweep(&mesh, coeff.as_ref(), &off.cell)?
    };
    let sweep_time_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let field = reconstruct_field(&mesh, &table, off.m, off.n_lowest())?;
    Ok(OfflineArtifact {
        cost: OfflineCost {
            q,
            m: off.m,
            cell_problems: table.cell_problems,
            sweep_time_s,
            reconstruct_time_s: start.elapsed().as_secs_f64(),
        },
        table,
        field,
    })
}

impl OfflineArtifact {
    /// Writes `effective_table.json`, `field.json` and `offline_cost.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("effective_table.json"), self.table.to_json()? + "\n")?;
        std::fs::write(dir.join("field.json"), self.field.to_json()? + "\n")?;
        write_json(&dir.join("offline_cost.json"), &self.cost)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let table = EffectiveTable::from_json(&read_text(&dir.join("effective_table.json"))?)?;
        let field = PolyMatrixField::from_json(&read_text(&dir.join("field.json"))?)?;
        if field.q != table.q || field.domain != table.domain {
            return Err(Error::Incompatible("field and effective table disagree on the offline mesh".into()));
        }
        let cost = match std::fs::read_to_string(dir.join("offline_cost.json")) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) => OfflineCost {
                q: field.q,
                m: field.order,
                cell_problems: table.cell_problems,
                sweep_time_s: table.wall_time_s,
                reconstruct_time_s: 0.0,
            },
        };
        Ok(Self { table, field, cost })
    }
}

/// One row of a study: run parameters and errors. `q = None` means the
/// closed-form effective matrix was used directly online; `n = None` means no
/// online stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub q: Option<usize>,
    pub n: Option<usize>,
    pub m: usize,
    pub l: usize,
    pub cell_problems: usize,
    pub h1: Option<f64>,
    pub l2: Option<f64>,
    pub e_mod: Option<f64>,
    pub e1_mod: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub offline_time_s: f64,
    pub online_time_s: f64,
}

pub const STUDY_CSV_HEADER: &str = "version,q,n,m,l,cell_problems,h1_rel,l2_rel,e_mod,e1_mod";
pub const TIMING_CSV_HEADER: &str = "version,q,n,offline_time_s,online_time_s";

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl RunRecord {
    pub fn csv_cells(&self) -> Vec<String> {
        vec![
            "1".into(),
            fmt_opt_usize(self.q),
            fmt_opt_usize(self.n),
            self.m.to_string(),
            self.l.to_string(),
            self.cell_problems.to_string(),
            fmt_opt(self.h1),
            fmt_opt(self.l2),
            fmt_opt(self.e_mod),
            fmt_opt(self.e1_mod),
        ]
    }

    pub fn from_csv_cells(cells: &[String]) -> Result<Self> {
        if cells.len() != 10 || cells[0] != "1" {
            return Err(Error::Incompatible(format!("malformed study row {cells:?}")));
        }
        let opt_usize = |c: &str| if c.is_empty() { Ok(None) } else { parse_usize(c).map(Some) };
        Ok(Self {
            q: opt_usize(&cells[1])?,
            n: opt_usize(&cells[2])?,
            m: parse_usize(&cells[3])?,
            l: parse_usize(&cells[4])?,
            cell_problems: parse_usize(&cells[5])?,
            h1: parse_opt(&cells[6])?,
            l2: parse_opt(&cells[7])?,
            e_mod: parse_opt(&cells[8])?,
            e1_mod: parse_opt(&cells[9])?,
        })
    }
}

type Scalar = Box<dyn Fn(Point) -> f64 + Sync>;
type Gradient = Box<dyn Fn(Point) -> [f64; 2] + Sync>;

/// Right-hand side, boundary data and error reference of the online problem.
struct Problem {
    f: Scalar,
    g: Scalar,
    exact: Option<(Scalar, Gradient)>,
}

fn problem(cfg: &StudyConfig, forcing: Forcing) -> Result<Problem> {
    match forcing {
        Forcing::Unit => Ok(Problem {
            f: Box::new(|_| 1.0),
            g: Box::new(|_| 0.0),
            exact: None,
        }),
        Forcing::Manufactured => {
            let CoefficientSpec::Constant { matrix: a } = cfg.problem else {
                return Err(Error::InvalidArgument(
                    "manufactured forcing needs a constant coefficient".into(),
                ));
            };
            // u = sin(pi x) sin(pi y): -div(A grad u) = pi^2 (a11 + a22) u - pi^2 (a12 + a21) cos cos
            let f = move |x: Point| {
                let (sx, sy) = ((PI * x.x).sin(), (PI * x.y).sin());
                let (cx, cy) = ((PI * x.x).cos(), (PI * x.y).cos());
                PI * PI * ((a[0] + a[3]) * sx * sy - (a[1] + a[2]) * cx * cy)
            };
            Ok(Problem {
                f: Box::new(f),
                g: Box::new(|x: Point| (PI * x.x).sin() * (PI * x.y).sin()),
                exact: Some((
                    Box::new(|x: Point| (PI * x.x).sin() * (PI * x.y).sin()),
                    Box::new(|x: Point| {
                        [
                            PI * (PI * x.x).cos() * (PI * x.y).sin(),
                            PI * (PI * x.x).sin() * (PI * x.y).cos(),
                        ]
                    }),
                )),
            })
        }
    }
}

/// Quadrature exactness of the reference solve: the closed-form coefficient
/// is not polynomial.
const REFERENCE_QUADRATURE_DEGREE: usize = 8;

/// Fine `P_2` solve with the closed-form effective matrix.
pub fn reference_solution(cfg: &StudyConfig) -> Result<FemSolution> {
    let on = cfg.online()?;
    let effective = cfg.problem.known_effective().ok_or_else(|| {
        Error::Incompatible(format!(
            "{} has no closed-form effective matrix to build a reference from",
            cfg.problem.name()
        ))
    })?;
    let p = problem(cfg, on.forcing)?;
    let space = FemSpace::new(OnlineMesh::new(cfg.domain, on.reference_n)?, 2)?;
    assemble_solve(
        &space,
        effective.as_ref(),
        &p.f,
        &p.g,
        &AssemblyOptions {
            quadrature_degree: REFERENCE_QUADRATURE_DEGREE,
        },
    )
}

pub struct OnlineOutcome {
    pub solution: FemSolution,
    pub errors: Option<RelativeErrors>,
    pub time_s: f64,
}

/// Solve the online problem at `n` with `field` (or the closed-form effective
/// matrix when `field` is `None`) and measure errors when a reference exists.
pub fn run_online(
    cfg: &StudyConfig,
    field: Option<&PolyMatrixField>,
    n: usize,
    reference: Option<&FemSolution>,
) -> Result<OnlineOutcome> {
    let on = cfg.online()?;
    let start = Instant::now();
    let p = problem(cfg, on.forcing)?;
    let (coefficient, m): (Box<dyn MatrixField>, usize) = match field {
        Some(f) => {
            if f.domain != cfg.domain {
                return Err(Error::Incompatible("offline field and config use different domains".into()));
            }
            (Box::new(f.clone()), f.order)
        }
        None => (
            cfg.problem.known_effective().ok_or_else(|| {
                Error::Incompatible(format!("{} needs an offline field", cfg.problem.name()))
            })?,
            0,
        ),
    };
    let options = match (on.quadrature_degree, field) {
        (Some(d), _) => AssemblyOptions { quadrature_degree: d },
        (None, Some(_)) => AssemblyOptions::for_orders(on.l, m),
        (None, None) => AssemblyOptions {
            quadrature_degree: REFERENCE_QUADRATURE_DEGREE,
        },
    };
    let space = FemSpace::new(OnlineMesh::new(cfg.domain, n)?, on.l)?;
    let solution = assemble_solve(&space, coefficient.as_ref(), &p.f, &p.g, &options)?;
    let errors = match (&p.exact, reference) {
        (Some((u, grad)), _) => Some(relative_errors(
            &solution,
            &Reference::Analytic(AnalyticSolution { u: u.as_ref(), grad: grad.as_ref() }),
        )?),
        (None, Some(r)) => Some(relative_errors(&solution, &Reference::Fem(r))?),
        (None, None) => None,
    };
    Ok(OnlineOutcome {
        solution,
        errors,
        time_s: start.elapsed().as_secs_f64(),
    })
}

/// `(q, n)` pairs of a study, in execution order.
pub fn study_plan(cfg: &StudyConfig) -> Result<Vec<(Option<usize>, Option<usize>)>> {
    match (&cfg.offline, &cfg.online) {
        (None, None) => Err(Error::InvalidArgument("study needs an offline or online block".into())),
        (Some(off), None) => Ok(off.q.values().into_iter().map(|q| (Some(q), None)).collect()),
        (None, Some(on)) => Ok(on.n.values().into_iter().map(|n| (None, Some(n))).collect()),
        (Some(off), Some(on)) => {
            let ns = on.n.values();
            if cfg.coupling.exponent(on.l, off.m).is_some() {
                return Ok(ns
                    .into_iter()
                    .map(|n| (cfg.coupling.q_for(n, on.l, off.m), Some(n)))
                    .collect());
            }
            let qs = off.q.values();
            match (qs.len(), ns.len()) {
                (1, _) => Ok(ns.into_iter().map(|n| (Some(qs[0]), Some(n))).collect()),
                (_, 1) => Ok(qs.into_iter().map(|q| (Some(q), Some(ns[0]))).collect()),
                (a, b) if a == b => Ok(qs.into_iter().zip(ns).map(|(q, n)| (Some(q), Some(n))).collect()),
                (a, b) => Err(Error::InvalidArgument(format!(
                    "uncoupled q ({a} values) and n ({b} values) schedules must match in length"
                ))),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySlopes {
    /// `e(MOD)` against `q`.
    pub e_mod: Option<Slope>,
    pub h1: Option<Slope>,
    pub l2: Option<Slope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: Option<String>,
    pub seed: u64,
    pub records: Vec<RunRecord>,
    pub slopes: StudySlopes,
    #[serde(skip)]
    pub timings: Vec<RunTiming>,
}

fn slope_of(records: &[RunRecord], x: impl Fn(&RunRecord) -> Option<usize>, y: impl Fn(&RunRecord) -> Option<f64>) -> Option<Slope> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((x(r)? as f64, y(r)?)))
        .collect();
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.dedup();
    if xs.len() != pts.len() {
        return None;
    }
    fit_loglog(&xs, &pts.iter().map(|p| p.1).collect::<Vec<_>>())
}

pub fn study_slopes(records: &[RunRecord]) -> StudySlopes {
    StudySlopes {
        e_mod: slope_of(records, |r| r.q, |r| r.e_mod),
        h1: slope_of(records, |r| r.n, |r| r.h1),
        l2: slope_of(records, |r| r.n, |r| r.l2),
    }
}

/// Run every schedule point of `cfg`. With `out`, rows are appended to
/// `study.csv` as they finish and timings go to `timings.csv`.
pub fn run_convergence_study(cfg: &StudyConfig, out: Option<&Path>) -> Result<StudyReport> {
    let plan = study_plan(cfg)?;
    let mut writers = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some((
                CsvWriter::create(&dir.join("study.csv"), STUDY_CSV_HEADER)?,
                CsvWriter::create(&dir.join("timings.csv"), TIMING_CSV_HEADER)?,
            ))
        }
        None => None,
    };
    let needs_reference = cfg
        .online
        .as_ref()
        .is_some_and(|on| on.forcing == Forcing::Unit && cfg.problem.known_effective().is_some());
    let reference = if needs_reference { Some(reference_solution(cfg)?) } else { None };
    let effective: Option<Box<dyn MatrixField>> = cfg.problem.known_effective();
    let m = cfg.offline.as_ref().map_or(0, |o| o.m);
    let l = cfg.online.as_ref().map_or(0, |o| o.l);
    let mut artifacts: BTreeMap<usize, Arc<OfflineArtifact>> = BTreeMap::new();
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for (q, n) in plan {
        let mut timing = RunTiming {
            offline_time_s: 0.0,
            online_time_s: 0.0,
        };
        let artifact = match q {
            Some(q) => Some(match artifacts.get(&q) {
                Some(a) => a.clone(),
                None => {
                    let start = Instant::now();
                    let a = Arc::new(build_offline(cfg, q, cfg.seed)?);
                    timing.offline_time_s = start.elapsed().as_secs_f64();
                    artifacts.insert(q, a.clone());
                    a
                }
            }),
            None => None,
        };
        let emod = match (&artifact, &effective) {
            (Some(a), Some(e)) => Some(emod_report(&a.field, &a.table, e.as_ref(), DEFAULT_EMOD_PROBES)?),
            _ => None,
        };
        let errors = match n {
            Some(n) => {
                let o = run_online(cfg, artifact.as_ref().map(|a| &a.field), n, reference.as_ref())?;
                timing.online_time_s = o.time_s;
                o.errors
            }
            None => None,
        };
        let record = RunRecord {
            q,
            n,
            m,
            l: if n.is_some() { l } else { 0 },
            cell_problems: artifact.as_ref().map_or(0, |a| a.table.cell_problems),
            h1: errors.map(|e| e.h1),
            l2: errors.map(|e| e.l2),
            e_mod: emod.map(|e| e.e_mod),
            e1_mod: emod.map(|e| e.e1_mod),
        };
        if let Some((study, times)) = writers.as_mut() {
            study.row(&record.csv_cells())?;
            times.row(&[
                "1".into(),
                fmt_opt_usize(q),
                fmt_opt_usize(n),
                fmt_f64(timing.offline_time_s),
                fmt_f64(timing.online_time_s),
            ])?;
        }
        records.push(record);
        timings.push(timing);
    }
    let report = StudyReport {
        name: cfg.name.clone(),
        seed: cfg.seed,
        slopes: study_slopes(&records),
        records,
        timings,
    };
    if let Some(dir) = out {
        write_json(&dir.join("study_summary.json"), &report)?;
    }
    Ok(report)
}

/// Records and timings of a finished study directory.
pub fn read_study(dir: &Path) -> Result<(Vec<RunRecord>, Vec<RunTiming>)> {
    let records = read_csv(&dir.join("study.csv"), STUDY_CSV_HEADER)?
        .iter()
        .map(|c| RunRecord::from_csv_cells(c))
        .collect::<Result<Vec<_>>>()?;
    let timings = match read_csv(&dir.join("timings.csv"), TIMING_CSV_HEADER) {
        Ok(rows) => rows
            .iter()
            .map(|c| {
                if c.len() != 5 {
                    return Err(Error::Incompatible(format!("malformed timing row {c:?}")));
                }
                Ok(RunTiming {
                    offline_time_s: parse_opt(&c[3])?.unwrap_or(0.0),
                    online_time_s: parse_opt(&c[4])?.unwrap_or(0.0),
                })
            })
            .collect::<Result<Vec<_>>>()?,
        Err(Error::Io(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok((records, timings))
}
