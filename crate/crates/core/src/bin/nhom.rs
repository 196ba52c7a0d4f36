use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nhom::harness::study::{read_study, reference_solution};
use nhom::harness::{
    build_offline, cost_report, run_convergence_study, run_ensemble, run_online, write_json, OfflineArtifact,
    StudyConfig,
};
use nhom::macrosolver::{emod_report, DEFAULT_EMOD_PROBES};
use nhom::{Error, Result};

/// Offline-online numerical homogenization.
#[derive(Parser)]
#[command(name = "nhom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the cell problems and reconstruct the effective matrix field.
    Offline(Common),
    /// Solve the macroscopic problem with a stored offline field.
    Online(Common),
    /// Run the configured convergence study.
    Study(Common),
    /// Sample effective matrices of random checkerboard realizations.
    Ensemble(Common),
    /// Compare cell-problem counts of a finished study against HMM-LS.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// TOML study configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<StudyConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
        let mut cfg = StudyConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn out(&self, cfg: Option<&StudyConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn offline(c: &Common) -> Result<serde_json::Value> {
    let cfg = c.config()?;
    let qs = cfg.offline()?.q.values();
    let [q] = qs.as_slice() else {
        return Err(Error::InvalidArgument(
            "offline needs a single q; use `study` for schedules".into(),
        ));
    };
    let out = c.out(Some(&cfg));
    let artifact = build_offline(&cfg, *q, cfg.seed)?;
    artifact.write(&out)?;
    Ok(json!({
        "q": q,
        "m": artifact.field.order,
        "cell_problems": artifact.table.cell_problems,
        "max_fit_residual": artifact.field.max_residual(),
        "out": out,
    }))
}

fn online(c: &Common) -> Result<serde_json::Value> {
    let cfg = c.config()?;
    let ns = cfg.online()?.n.values();
    let [n] = ns.as_slice() else {
        return Err(Error::InvalidArgument("online needs a single n".into()));
    };
    let out = c.out(Some(&cfg));
    let artifact = OfflineArtifact::read(&out)?;
    let reference = match cfg.problem.known_effective() {
        Some(_) if cfg.online()?.forcing == nhom::harness::Forcing::Unit => Some(reference_solution(&cfg)?),
        _ => None,
    };
    let outcome = run_online(&cfg, Some(&artifact.field), *n, reference.as_ref())?;
    let emod = match cfg.problem.known_effective() {
        Some(e) => Some(emod_report(&artifact.field, &artifact.table, e.as_ref(), DEFAULT_EMOD_PROBES)?),
        None => None,
    };
    outcome
        .solution
        .write_csv(std::io::BufWriter::new(std::fs::File::create(out.join("solution.csv"))?))?;
    let record = nhom::harness::RunRecord {
        q: Some(artifact.field.q),
        n: Some(*n),
        m: artifact.field.order,
        l: cfg.online()?.l,
        cell_problems: artifact.table.cell_problems,
        h1: outcome.errors.map(|e| e.h1),
        l2: outcome.errors.map(|e| e.l2),
        e_mod: emod.map(|e| e.e_mod),
        e1_mod: emod.map(|e| e.e1_mod),
    };
    let mut csv = nhom::harness::CsvWriter::create(&out.join("online.csv"), nhom::harness::study::STUDY_CSV_HEADER)?;
    csv.row(&record.csv_cells())?;
    Ok(json!({ "record": record, "online_time_s": outcome.time_s, "out": out }))
}

fn study(c: &Common) -> Result<serde_json::Value> {
    let cfg = c.config()?;
    let out = c.out(Some(&cfg));
    let report = run_convergence_study(&cfg, Some(&out))?;
    Ok(json!({ "runs": report.records.len(), "slopes": report.slopes, "out": out }))
}

fn ensemble(c: &Common) -> Result<serde_json::Value> {
    let cfg = c.config()?;
    let out = c.out(Some(&cfg));
    let report = run_ensemble(&cfg, Some(&out))?;
    Ok(json!({
        "realizations": report.realizations,
        "excluded": report.excluded.len(),
        "slopes": report.slopes,
        "out": out,
    }))
}

fn report(c: &Common) -> Result<serde_json::Value> {
    let cfg = match &c.config {
        Some(_) => Some(c.config()?),
        None => None,
    };
    let out = c.out(cfg.as_ref());
    let (records, timings) = read_study(&out)?;
    let rep = cost_report(&records, &timings)?;
    std::fs::write(out.join("cost_report.csv"), rep.to_csv())?;
    write_json(&out.join("cost_report.json"), &rep)?;
    Ok(json!({
        "rows": rep.rows.len(),
        "offline_grows_slower": rep.offline_grows_slower,
        "out": out,
    }))
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    let (common, f): (&Common, fn(&Common) -> Result<serde_json::Value>) = match &cli.command {
        Command::Offline(c) => (c, offline),
        Command::Online(c) => (c, online),
        Command::Study(c) => (c, study),
        Command::Ensemble(c) => (c, ensemble),
        Command::Report(c) => (c, report),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Error::InvalidArgument("--jobs must be positive".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| f(common))
}

fn command_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::Offline(_) => "offline",
        Command::Online(_) => "online",
        Command::Study(_) => "study",
        Command::Ensemble(_) => "ensemble",
        Command::Report(_) => "report",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = json!({ "status": "error", "kind": "usage", "message": e.to_string().trim_end() });
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{}", json!({ "status": "ok", "command": command_name(&cli), "summary": summary }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = json!({
                "status": "error",
                "command": command_name(&cli),
                "kind": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
