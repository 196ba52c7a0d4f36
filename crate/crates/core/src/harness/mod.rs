//! Config-driven offline/online runs, convergence and ensemble studies, and
//! cost reports.

pub mod config;
pub mod ensemble;
pub mod study;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use config::{CouplingConfig, CouplingRule, EnsembleConfig, Forcing, OfflineConfig, OnlineConfig, Schedule, StudyConfig};
pub use ensemble::{realization_seed, run_ensemble, EnsembleReport, ProbeSlopes, ProbeStats};
pub use study::{
    build_offline, run_convergence_study, run_online, OfflineArtifact, OfflineCost, OnlineOutcome, RunRecord, RunTiming,
    StudyReport,
};

/// Ordinary least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub points: usize,
}

/// Fit `ln y = a ln x + b`. Needs at least 3 points with distinct positive
/// `x` and positive finite `y`; returns `None` otherwise.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<Slope> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 1e-14 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Some(Slope {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        points: lx.len(),
    })
}

/// Full-precision, round-trippable float formatting for CSV cells.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn parse_opt(cell: &str) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|_| Error::InvalidArgument(format!("bad number '{cell}' in CSV")))
}

fn parse_usize(cell: &str) -> Result<usize> {
    cell.parse()
        .map_err(|_| Error::InvalidArgument(format!("bad integer '{cell}' in CSV")))
}

/// Line-buffered CSV writer that flushes after every row, so a failing study
/// leaves the rows it finished on disk.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{header}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<()> {
        writeln!(self.out, "{}", cells.join(","))?;
        self.out.flush()?;
        Ok(())
    }
}

/// File contents, with the path in the error message.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Rows of a CSV file, header checked against `header`.
pub fn read_csv(path: &Path, header: &str) -> Result<Vec<Vec<String>>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let found = lines.next().unwrap_or("");
    if found != header {
        return Err(Error::Incompatible(format!(
            "{}: unexpected header '{found}' (expected '{header}')",
            path.display()
        )));
    }
    Ok(lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// One method configuration in a cost comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub m: usize,
    pub q: usize,
    pub n: usize,
    pub cell_problems: usize,
    /// One cell problem per online vertex.
    pub hmm_ls_proxy: usize,
    pub offline_time_s: Option<f64>,
    pub total_time_s: Option<f64>,
    pub h1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub rows: Vec<CostRow>,
    /// Fitted growth of the offline cell count against `n` (per `m`).
    pub count_slopes: Vec<(usize, Option<Slope>)>,
    /// Fitted growth of the HMM-LS proxy count against `n`.
    pub proxy_slope: Option<Slope>,
    /// `q^2` stays below the proxy on every row with `n >= 16`, and its
    /// fitted growth rate is lower whenever a fit exists.
    pub offline_grows_slower: bool,
}

pub const COST_CSV_HEADER: &str = "version,m,q,n,cell_problems,hmm_ls_proxy,h1_rel";

/// Compare offline-online cell counts against the HMM-LS proxy `(n + 1)^2`.
pub fn cost_report(records: &[RunRecord], timings: &[RunTiming]) -> Result<CostReport> {
    let mut rows = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let (Some(q), Some(n)) = (r.q, r.n) else { continue };
        let t = timings.get(i);
        rows.push(CostRow {
            m: r.m,
            q,
            n,
            cell_problems: r.cell_problems,
            hmm_ls_proxy: (n + 1) * (n + 1),
            offline_time_s: t.map(|t| t.offline_time_s),
            total_time_s: t.map(|t| t.offline_time_s + t.online_time_s),
            h1: r.h1,
        });
    }
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(
            "cost report needs at least two runs with both q and n".into(),
        ));
    }
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let count_slopes: Vec<(usize, Option<Slope>)> = ms
        .iter()
        .map(|&m| {
            let sel: Vec<&CostRow> = rows.iter().filter(|r| r.m == m).collect();
            let x: Vec<f64> = sel.iter().map(|r| r.n as f64).collect();
            let y: Vec<f64> = sel.iter().map(|r| (r.q * r.q) as f64).collect();
            (m, fit_loglog(&x, &y))
        })
        .collect();
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = ns.iter().map(|&n| ((n + 1) * (n + 1)) as f64).collect();
    let proxy_slope = fit_loglog(&x, &y);
    let below = rows
        .iter()
        .filter(|r| r.n >= 16)
        .all(|r| r.q * r.q < r.hmm_ls_proxy);
    let slower = match proxy_slope {
        Some(p) => count_slopes.iter().all(|(_, s)| s.is_none_or(|s| s.slope < p.slope)),
        None => true,
    };
    Ok(CostReport {
        rows,
        count_slopes,
        proxy_slope,
        offline_grows_slower: below && slower,
    })
}

impl CostReport {
    /// Deterministic table (timings omitted).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{COST_CSV_HEADER}");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "1,{},{},{},{},{},{}",
                r.m,
                r.q,
                r.n,
                r.cell_problems,
                r.hmm_ls_proxy,
                fmt_opt(r.h1)
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn loglog_recovers_power_law() {
        let x = [8.0, 16.0, 32.0, 64.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.5)).collect();
        let s = fit_loglog(&x, &y).unwrap();
        assert_abs_diff_eq!(s.slope, -2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.intercept, 3f64.ln(), epsilon = 1e-12);
        assert!(s.residual < 1e-12);
        assert_eq!(s.points, 4);
    }

    #[test]
    fn loglog_needs_three_points() {
        assert!(fit_loglog(&[1.0, 2.0], &[1.0, 0.5]).is_none());
        assert!(fit_loglog(&[1.0, 2.0, 4.0], &[1.0, 0.0, 0.5]).is_none());
        assert!(fit_loglog(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_none());
    }

    #[test]
    fn residual_reports_scatter() {
        let s = fit_loglog(&[1.0, 2.0, 4.0, 8.0], &[1.0, 0.6, 0.2, 0.15]).unwrap();
        assert!(s.residual > 0.01);
    }

    #[test]
    fn float_cells_roundtrip() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::NAN), "");
    }

    #[test]
    fn coupled_counts_grow_slower_than_proxy() {
        let c = CouplingConfig {
            rule: CouplingRule::H1,
            c: Some(2.5),
        };
        let records: Vec<RunRecord> = [16usize, 32, 64, 128]
            .iter()
            .map(|&n| {
                let q = c.q_for(n, 2, 3).unwrap();
                RunRecord {
                    q: Some(q),
                    n: Some(n),
                    m: 3,
                    l: 2,
                    cell_problems: q * q,
                    h1: None,
                    l2: None,
                    e_mod: None,
                    e1_mod: None,
                }
            })
            .collect();
        let rep = cost_report(&records, &[]).unwrap();
        assert!(rep.offline_grows_slower);
        let s = rep.count_slopes[0].1.unwrap().slope;
        assert!((s - 1.0).abs() < 0.15, "{s}");
        assert!(rep.proxy_slope.unwrap().slope > 1.9);
        for r in &rep.rows {
            assert!(r.q * r.q < (r.n + 1) * (r.n + 1));
        }
    }
}
