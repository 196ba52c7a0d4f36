//! Monte Carlo sampling of the effective matrix of a random checkerboard.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Forcing, StudyConfig};
use super::study::{build_offline, run_online};
use super::{fit_loglog, fmt_f64, write_json, CsvWriter, Slope};
use crate::coeffs::CoefficientSpec;
use crate::macrosolver::{assemble_solve, AssemblyOptions, FemSpace};
use crate::mesh::{OfflineMesh, OnlineMesh};
use crate::microcell::{effective_sample_with, BoundaryCondition, CellSpec, CellWorkspace, EffectiveSample};
use crate::reconstruct::reconstruct_field;
use crate::{mat_to_row_major, Error, Mat2, Point, Result};

/// Seed of realization `r`: the first output of ChaCha8 keyed by `master` on
/// stream `r`. Independent of evaluation order.
pub fn realization_seed(master: u64, r: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(r);
    rng.next_u64()
}

/// Statistics at one probe and one cell size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub probe: [f64; 2],
    pub l: usize,
    /// Empirical mean, row-major.
    pub mean: [f64; 4],
    /// `sqrt(E[(A11 - Eref11)^2 + (A22 - Eref22)^2])`, with `Eref` the mean
    /// at the largest cell size.
    pub sigma_diag: f64,
    /// `sqrt(E[A12^2])`
    pub sigma_12: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSlopes {
    pub probe: [f64; 2],
    pub sigma_diag: Option<Slope>,
    pub sigma_12: Option<Slope>,
}

/// Per-realization errors of the full offline-online pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineErrors {
    pub realization: usize,
    pub h1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub runs: Vec<PipelineErrors>,
    pub mean_h1: f64,
    pub mean_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub master_seed: u64,
    pub realizations: usize,
    /// Realizations dropped because a cell problem failed.
    pub excluded: Vec<usize>,
    pub cells_per_epsilon: usize,
    pub reference_l: usize,
    pub stats: Vec<ProbeStats>,
    pub slopes: Vec<ProbeSlopes>,
    pub pipeline: Option<PipelineSummary>,
}

impl EnsembleReport {
    pub fn stat(&self, probe: usize, l: usize) -> Option<&ProbeStats> {
        let p = self.slopes.get(probe)?.probe;
        self.stats.iter().find(|s| s.probe == p && s.l == l)
    }
}

pub const ENSEMBLE_CSV_HEADER: &str =
    "version,probe_x,probe_y,L,realizations,mean_a11,mean_a12,mean_a21,mean_a22,sigma_diag,sigma_12";
pub const SAMPLES_CSV_HEADER: &str = "version,realization,seed,probe_x,probe_y,L,a11,a12,a21,a22";
pub const PIPELINE_CSV_HEADER: &str = "version,realization,seed,h1_rel,l2_rel";

/// Sample the effective matrix at every probe and cell size for every
/// realization, then reduce to means, deviations and decay slopes.
pub fn run_ensemble(cfg: &StudyConfig, out: Option<&Path>) -> Result<EnsembleReport> {
    let ens = cfg.ensemble()?;
    let CoefficientSpec::Checkerboard(base) = cfg.problem else {
        return Err(Error::InvalidArgument("ensemble studies need a checkerboard problem".into()));
    };
    let nl = ens.l_schedule.len();
    let np = ens.probes.len();
    let per_realization = nl * np;
    let tasks: Vec<(usize, usize, usize)> = (0..ens.realizations)
        .flat_map(|r| (0..nl).flat_map(move |li| (0..np).map(move |pi| (r, li, pi))))
        .collect();
    let fields: Vec<_> = (0..ens.realizations)
        .map(|r| cfg.problem.with_seed(realization_seed(cfg.seed, r as u64)).build())
        .collect::<Result<_>>()?;
    let results: Vec<Result<EffectiveSample>> = tasks
        .par_iter()
        .map_init(CellWorkspace::new, |ws, &(r, li, pi)| {
            let l = ens.l_schedule[li];
            let spec = CellSpec {
                center: ens.probes[pi],
                delta: l as f64 * base.epsilon,
                bc: BoundaryCondition::Periodic,
                resolution: ens.cells_per_epsilon * l,
                degree: 2,
            };
            effective_sample_with(&spec, fields[r].as_ref(), ws)
        })
        .collect();

    let mut excluded = Vec::new();
    let mut first_error = None;
    let mut samples: Vec<Option<Vec<Mat2>>> = Vec::with_capacity(ens.realizations);
    for (r, chunk) in results.chunks(per_realization).enumerate() {
        let mut mats = Vec::with_capacity(per_realization);
        for res in chunk {
            match res {
                Ok(s) => mats.push(s.matrix()),
                Err(e) => {
                    first_error.get_or_insert_with(|| format!("realization {r}: {e}"));
                    break;
                }
            }
        }
        if mats.len() == per_realization {
            samples.push(Some(mats));
        } else {
            excluded.push(r);
            samples.push(None);
        }
    }
    if excluded.len() as f64 > ens.max_excluded * ens.realizations as f64 || excluded.len() == ens.realizations {
        return Err(Error::CellFailures {
            failed: excluded.len(),
            total: ens.realizations,
            first: first_error.unwrap_or_default(),
        });
    }
    let kept: Vec<(usize, &Vec<Mat2>)> = samples.iter().enumerate().filter_map(|(r, s)| Some((r, s.as_ref()?))).collect();
    let count = kept.len() as f64;
    let at = |li: usize, pi: usize| li * np + pi;

    let mut stats = Vec::with_capacity(nl * np);
    let mut slopes = Vec::with_capacity(np);
    let ref_li = nl - 1;
    for pi in 0..np {
        let mean_of = |li: usize| kept.iter().fold(Mat2::zeros(), |acc, (_, m)| acc + m[at(li, pi)]) / count;
        let reference = mean_of(ref_li);
        let mut diag = Vec::with_capacity(nl);
        let mut off = Vec::with_capacity(nl);
        for li in 0..nl {
            let mean = mean_of(li);
            let (mut sd, mut so) = (0.0, 0.0);
            for (_, m) in &kept {
                let a = m[at(li, pi)];
                sd += (a[(0, 0)] - reference[(0, 0)]).powi(2) + (a[(1, 1)] - reference[(1, 1)]).powi(2);
                so += a[(0, 1)].powi(2);
            }
            let s = ProbeStats {
                probe: ens.probes[pi],
                l: ens.l_schedule[li],
                mean: mat_to_row_major(&mean),
                sigma_diag: (sd / count).sqrt(),
                sigma_12: (so / count).sqrt(),
            };
            diag.push(s.sigma_diag);
            off.push(s.sigma_12);
            stats.push(s);
        }
        let ls: Vec<f64> = ens.l_schedule.iter().map(|&l| l as f64).collect();
        slopes.push(ProbeSlopes {
            probe: ens.probes[pi],
            sigma_diag: fit_loglog(&ls, &diag),
            sigma_12: fit_loglog(&ls, &off),
        });
    }

    let pipeline = if ens.pipeline {
        Some(run_pipeline(cfg, &kept.iter().map(|(r, _)| *r).collect::<Vec<_>>())?)
    } else {
        None
    };

    let report = EnsembleReport {
        master_seed: cfg.seed,
        realizations: ens.realizations,
        excluded,
        cells_per_epsilon: ens.cells_per_epsilon,
        reference_l: ens.l_schedule[ref_li],
        stats,
        slopes,
        pipeline,
    };

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let mut w = CsvWriter::create(&dir.join("ensemble.csv"), ENSEMBLE_CSV_HEADER)?;
        for s in &report.stats {
            let mut row = vec![
                "1".into(),
                fmt_f64(s.probe[0]),
                fmt_f64(s.probe[1]),
                s.l.to_string(),
                kept.len().to_string(),
            ];
            row.extend(s.mean.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(s.sigma_diag));
            row.push(fmt_f64(s.sigma_12));
            w.row(&row)?;
        }
        let mut w = CsvWriter::create(&dir.join("ensemble_samples.csv"), SAMPLES_CSV_HEADER)?;
        for (r, m) in &kept {
            for li in 0..nl {
                for pi in 0..np {
                    let a = mat_to_row_major(&m[at(li, pi)]);
                    let mut row = vec![
                        "1".into(),
                        r.to_string(),
                        realization_seed(cfg.seed, *r as u64).to_string(),
                        fmt_f64(ens.probes[pi][0]),
                        fmt_f64(ens.probes[pi][1]),
                        ens.l_schedule[li].to_string(),
                    ];
                    row.extend(a.iter().map(|v| fmt_f64(*v)));
                    w.row(&row)?;
                }
            }
        }
        if let Some(p) = &report.pipeline {
            let mut w = CsvWriter::create(&dir.join("ensemble_pipeline.csv"), PIPELINE_CSV_HEADER)?;
            for e in &p.runs {
                w.row(&[
                    "1".into(),
                    e.realization.to_string(),
                    realization_seed(cfg.seed, e.realization as u64).to_string(),
                    fmt_f64(e.h1),
                    fmt_f64(e.l2),
                ])?;
            }
        }
        write_json(&dir.join("ensemble_summary.json"), &report)?;
    }
    Ok(report)
}

/// Offline-online pipeline per realization. The reference is the `P_2`
/// solution at `reference_n` with the field reconstructed from the
/// realization-averaged table.
fn run_pipeline(cfg: &StudyConfig, realizations: &[usize]) -> Result<PipelineSummary> {
    let off = cfg.offline()?;
    let on = cfg.online()?;
    let (q, n) = match (off.q.values().as_slice(), on.n.values().as_slice()) {
        (&[q], &[n]) => (q, n),
        _ => {
            return Err(Error::InvalidArgument(
                "ensemble pipeline needs a single q and a single n".into(),
            ))
        }
    };
    if on.forcing != Forcing::Unit {
        return Err(Error::InvalidArgument("ensemble pipeline uses unit forcing".into()));
    }
    let artifacts = realizations
        .iter()
        .map(|&r| build_offline(cfg, q, realization_seed(cfg.seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut mean_table = artifacts[0].table.clone();
    for (k, s) in mean_table.samples.iter_mut().enumerate() {
        let sum = artifacts.iter().fold(Mat2::zeros(), |acc, a| acc + a.table.matrix(k));
        s.matrix = mat_to_row_major(&(sum / artifacts.len() as f64));
    }
    let mesh = OfflineMesh::new(cfg.domain, q)?;
    let mean_field = reconstruct_field(&mesh, &mean_table, off.m, off.n_lowest())?;
    let space = FemSpace::new(OnlineMesh::new(cfg.domain, on.reference_n)?, 2)?;
    let reference = assemble_solve(
        &space,
        &mean_field,
        &|_: Point| 1.0,
        &|_: Point| 0.0,
        &AssemblyOptions::for_orders(2, off.m),
    )?;
    let mut runs = Vec::with_capacity(artifacts.len());
    for (a, &r) in artifacts.iter().zip(realizations) {
        let o = run_online(cfg, Some(&a.field), n, Some(&reference))?;
        let e = o.errors.expect("reference supplied");
        runs.push(PipelineErrors {
            realization: r,
            h1: e.h1,
            l2: e.l2,
        });
    }
    let k = runs.len() as f64;
    Ok(PipelineSummary {
        mean_h1: runs.iter().map(|e| e.h1).sum::<f64>() / k,
        mean_l2: runs.iter().map(|e| e.l2).sum::<f64>() / k,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{Background, CheckerboardSpec};
    use crate::harness::config::*;

    fn cfg(p1: f64, realizations: usize) -> StudyConfig {
        cfg_with(p1, realizations, Background::Product)
    }

    fn cfg_with(p1: f64, realizations: usize, background: Background) -> StudyConfig {
        StudyConfig {
            name: None,
            seed: 11,
            domain: crate::mesh::Rect::unit_square(),
            problem: CoefficientSpec::Checkerboard(CheckerboardSpec {
                p1,
                background,
                ..Default::default()
            }),
            offline: None,
            online: None,
            coupling: CouplingConfig::default(),
            ensemble: Some(EnsembleConfig {
                realizations,
                l_schedule: vec![1, 2, 4],
                cells_per_epsilon: 4,
                ..Default::default()
            }),
            output: OutputConfig::default(),
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..50).map(|r| realization_seed(3, r)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 50);
        assert_eq!(realization_seed(3, 7), a[7]);
        assert_ne!(realization_seed(4, 7), a[7]);
    }

    #[test]
    fn deterministic_checkerboard_has_no_spread() {
        let rep = run_ensemble(&cfg_with(1.0, 4, Background::Zero), None).unwrap();
        for s in &rep.stats {
            assert!(s.sigma_diag < 1e-10, "{s:?}");
        }
        assert!(rep.excluded.is_empty());
    }

    #[test]
    fn means_are_symmetric() {
        let rep = run_ensemble(&cfg(0.5, 6), None).unwrap();
        for s in &rep.stats {
            assert!((s.mean[1] - s.mean[2]).abs() <= 1e-10 * s.mean[0]);
            assert!(s.sigma_diag >= 0.0 && s.sigma_12 >= 0.0);
        }
        assert_eq!(rep.stats.len(), 9);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let c = cfg(0.5, 5);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let two = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_ensemble(&c, None)).unwrap();
        let b = two.install(|| run_ensemble(&c, None)).unwrap();
        assert_eq!(a, b);
    }
}
