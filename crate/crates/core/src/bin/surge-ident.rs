use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use surge_ident::sim::{self, BoxStats};
use surge_ident::stream::{
    self, resume_or_new, run_log, Method, MissionLog, ParameterSnapshot, PredictionRecord,
    SnapshotTarget,
};
use surge_ident::{Error, Result, RunConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "surge-ident", version, about = "Online surge identification for twin-thruster surface vehicles")]
struct Cli {
    /// TOML run configuration; defaults apply to anything omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the fleet and network-initialization seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the synthetic fleet and write mission logs.
    Sim {
        #[arg(long)]
        out: PathBuf,
        /// Only simulate this vehicle.
        #[arg(long)]
        vehicle: Option<String>,
        /// Mission length in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Learn online from one or more logs, resuming from the latest snapshot.
    Learn {
        #[arg(long, required = true, num_args = 1..)]
        log: Vec<PathBuf>,
        #[arg(long)]
        snapshot_dir: PathBuf,
        /// Vehicle identifier; taken from the log header when omitted.
        #[arg(long)]
        vehicle: Option<String>,
        /// Prediction records as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the contraction certificate and equilibria of a snapshot.
    Certify {
        /// Snapshot file; otherwise the vehicle's latest in --snapshot-dir.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
        #[arg(long)]
        vehicle: Option<String>,
    },
    /// Evaluate every snapshot of a vehicle on every log, parameters frozen.
    Crossval {
        #[arg(long)]
        snapshot_dir: PathBuf,
        /// Log files or directories of logs.
        #[arg(long, required = true, num_args = 1..)]
        log: Vec<PathBuf>,
        #[arg(long)]
        vehicle: String,
        /// Per-pair results as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-vehicle matrix: each vehicle's best snapshot on every vehicle's logs.
    Xveh {
        #[arg(long)]
        snapshot_dir: PathBuf,
        /// Directory holding the logs of all vehicles.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_DATA })
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.fleet.seed = seed;
        cfg.engine.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Sim {
            out,
            vehicle,
            duration,
        } => cmd_sim(cfg, &out, vehicle.as_deref(), duration),
        Command::Learn {
            log,
            snapshot_dir,
            vehicle,
            out,
        } => cmd_learn(cfg, &log, &snapshot_dir, vehicle, out.as_deref()),
        Command::Certify {
            snapshot,
            snapshot_dir,
            vehicle,
        } => cmd_certify(cfg, snapshot, snapshot_dir, vehicle),
        Command::Crossval {
            snapshot_dir,
            log,
            vehicle,
            out,
        } => cmd_crossval(cfg, &snapshot_dir, &log, &vehicle, out.as_deref()),
        Command::Xveh {
            snapshot_dir,
            log,
            out,
        } => cmd_xveh(cfg, &snapshot_dir, &log, out.as_deref()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes the effective configuration next to an output file so results can
/// be traced back to their settings.
fn echo_config(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut name = out.as_os_str().to_owned();
    name.push(".config.toml");
    let path = PathBuf::from(name);
    std::fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(&path, e))
}

fn cmd_sim(mut cfg: RunConfig, out: &Path, only: Option<&str>, duration: Option<f64>) -> Result<()> {
    if let Some(d) = duration {
        cfg.missions.duration = d;
        cfg.validate()?;
    }
    let fleet = cfg.fleet.generate()?;
    let mut params = create(&out.join("fleet.csv"))?;
    let io = |e| Error::io(out.join("fleet.csv"), e);
    writeln!(params, "vehicle_id,m,c_q,c_l,c_thetadot,alpha_l,beta_l,gamma_l,alpha_r,beta_r,gamma_r").map_err(io)?;
    let mut found = false;
    for v in fleet.iter().filter(|v| only.is_none_or(|id| id == v.vehicle_id)) {
        found = true;
        let theta = v.truth.theta();
        let row: Vec<String> = std::iter::once(v.truth.m).chain(theta).map(|x| x.to_string()).collect();
        writeln!(params, "{},{}", v.vehicle_id, row.join(",")).map_err(io)?;
        for run in sim::simulate_missions(v, &cfg.missions, &cfg.sim)? {
            let path = out.join(&v.vehicle_id).join(format!("{}.log", run.log.run_id));
            std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| Error::io(&path, e))?;
            run.log.write(&path)?;
            log::info!("wrote {}", path.display());
        }
    }
    if !found {
        return Err(Error::Config(format!("no vehicle named {}", only.unwrap_or(""))));
    }
    params.flush().map_err(io)?;
    echo_config(&cfg, &out.join("fleet.csv"))
}

/// `.log` files under each path, sorted.
fn collect_logs(paths: &[PathBuf]) -> Result<Vec<MissionLog>> {
    fn walk(p: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            entries.sort();
            for e in entries {
                walk(&e, out)?;
            }
        } else if p.extension().is_some_and(|e| e == "log") || !p.exists() {
            out.push(p.to_path_buf());
        }
        Ok(())
    }
    let mut files = Vec::new();
    for p in paths {
        walk(p, &mut files)?;
    }
    let logs = files.iter().map(|f| MissionLog::read(f)).collect::<Result<Vec<_>>>()?;
    for (f, l) in files.iter().zip(&logs) {
        if l.corrupt_lines > 0 {
            log::warn!("{}: skipped {} corrupt lines", f.display(), l.corrupt_lines);
        }
    }
    if logs.is_empty() {
        return Err(Error::NoData("no mission logs found".into()));
    }
    Ok(logs)
}

fn opt(v: f64) -> String {
    format!("{v:.5}")
}

fn print_metrics(metrics: &stream::MetricsAccumulator) {
    println!("method        MAE        MSE   frames");
    for m in Method::ALL {
        let s = metrics.get(m);
        println!("{:<6} {:>10} {:>10} {:>8}", m.as_str(), opt(s.mae()), opt(s.mse()), s.count);
    }
    println!("excluded frames: {}", metrics.skipped_frames);
}

fn cmd_learn(
    cfg: RunConfig,
    logs: &[PathBuf],
    dir: &Path,
    vehicle: Option<String>,
    out: Option<&Path>,
) -> Result<()> {
    let logs = collect_logs(logs)?;
    let vehicle = vehicle
        .or_else(|| Some(logs[0].vehicle_id.clone()).filter(|v| !v.is_empty()))
        .ok_or_else(|| Error::Config("no --vehicle given and the log has no vehicle_id".into()))?;
    let (mut engine, from) = resume_or_new(cfg.engine.clone(), dir, &vehicle)?;
    match &from {
        Some(p) => log::info!("resuming from {}", p.display()),
        None => log::info!("no snapshot for {vehicle}, starting fresh"),
    }
    let mut writer = out.map(create).transpose()?;
    let io = |e| Error::io(out.unwrap_or(Path::new("-")), e);
    if let Some(w) = writer.as_mut() {
        writeln!(w, "{}", PredictionRecord::CSV_HEADER).map_err(io)?;
    }
    let start = engine.metrics.clone();
    for log in &logs {
        let mut failure = None;
        let summary = run_log(
            &mut engine,
            log,
            Some(SnapshotTarget {
                dir,
                vehicle_id: &vehicle,
                run_id: &log.run_id,
            }),
            |r| {
                if let Some(w) = writer.as_mut() {
                    if let Err(e) = writeln!(w, "{}", r.to_csv()) {
                        failure.get_or_insert(e);
                    }
                }
            },
        )?;
        if let Some(e) = failure {
            return Err(io(e));
        }
        log::info!(
            "{}: {} frames, {} snapshots{}",
            log.run_id,
            summary.frames,
            summary.snapshots.len(),
            if summary.resumed { ", resumed" } else { "" }
        );
    }
    if let Some(w) = writer.as_mut() {
        w.flush().map_err(io)?;
        echo_config(&cfg, out.unwrap())?;
    }
    let mut session = engine.metrics.clone();
    for m in Method::ALL {
        let (a, b) = (start.get(m), session.get_mut(m));
        b.sum_abs -= a.sum_abs;
        b.sum_sq -= a.sum_sq;
        b.count -= a.count;
    }
    session.skipped_frames -= start.skipped_frames;
    print_metrics(&session);
    Ok(())
}

fn cmd_certify(cfg: RunConfig, file: Option<PathBuf>, dir: Option<PathBuf>, vehicle: Option<String>) -> Result<()> {
    let snap = match (file, dir, vehicle) {
        (Some(f), _, _) => ParameterSnapshot::load(&f)?,
        (None, Some(d), Some(v)) => stream::load_latest(&d, &v)?
            .ok_or_else(|| Error::NoData(format!("no snapshot for {v} in {}", d.display())))?
            .1,
        _ => {
            return Err(Error::Config(
                "give --snapshot, or --snapshot-dir with --vehicle".into(),
            ))
        }
    };
    let c = snap.rnn.certify()?;
    println!("vehicle {} at stream time {:.1} s", snap.vehicle_id, snap.stream_time());
    println!("row-wise certificate:   {}", c.row_bound_ok);
    println!("diagonal dominance:     {}", c.gersgorin_ok);
    println!("M positive semidefinite: {} (min eigenvalue {:.3e})", c.m_psd_ok, c.min_eigenvalue);
    println!("contraction rate:       {:.4}", c.contraction_rate);
    if !c.violating_neurons.is_empty() {
        println!("violating neurons:      {:?}", c.violating_neurons);
    }
    let eq = snap.rnn.equilibria();
    let scale = surge_ident::model::ScaleMap::new(cfg.engine.v_max)?;
    println!("equilibria ({}):", eq.equilibria.len());
    for p in &eq.equilibria {
        println!(
            "  x = {:.5} (v = {:.3} m/s)  slope {:+.4}  {}",
            p.x,
            scale.unscale(p.x),
            p.slope,
            p.class
        );
    }
    for (a, b) in &eq.marginal_segments {
        println!("  marginal segment [{a:.5}, {b:.5}]");
    }
    Ok(())
}

fn print_box(label: &str, b: Option<BoxStats>) {
    match b {
        Some(b) => println!(
            "{label:<6} min {} q1 {} median {} q3 {} max {} outliers {}",
            opt(b.min),
            opt(b.q1),
            opt(b.median),
            opt(b.q3),
            opt(b.max),
            b.outliers.len()
        ),
        None => println!("{label:<6} no data"),
    }
}

fn cmd_crossval(
    cfg: RunConfig,
    dir: &Path,
    log_paths: &[PathBuf],
    vehicle: &str,
    out: Option<&Path>,
) -> Result<()> {
    let snaps: Vec<(PathBuf, ParameterSnapshot)> = stream::load_all(dir, vehicle)?;
    if snaps.is_empty() {
        return Err(Error::NoData(format!("no snapshots for {vehicle} in {}", dir.display())));
    }
    let logs = collect_logs(log_paths)?;
    let models: Vec<ParameterSnapshot> = snaps.iter().map(|(_, s)| s.clone()).collect();
    let entries = sim::cross_validate(&cfg.engine, &models, &logs)?;
    if let Some(path) = out {
        let mut w = create(path)?;
        let io = |e| Error::io(path, e);
        writeln!(w, "snapshot,log,method,mae,mse,frames").map_err(io)?;
        for e in &entries {
            let name = snaps[e.snapshot].0.file_name().unwrap().to_string_lossy();
            for m in Method::ALL {
                let s = e.metrics.get(m);
                writeln!(w, "{name},{}/{},{m},{},{},{}", logs[e.log].vehicle_id, logs[e.log].run_id, s.mae(), s.mse(), s.count)
                    .map_err(io)?;
            }
        }
        w.flush().map_err(io)?;
        echo_config(&cfg, path)?;
    }
    println!("{} snapshots x {} logs, MAE distribution:", models.len(), logs.len());
    for m in Method::ALL {
        print_box(m.as_str(), sim::summarize(&entries, m, false));
    }
    Ok(())
}

fn cmd_xveh(cfg: RunConfig, dir: &Path, log_dir: &Path, out: Option<&Path>) -> Result<()> {
    let mut by_vehicle: BTreeMap<String, Vec<MissionLog>> = BTreeMap::new();
    for l in collect_logs(&[log_dir.to_path_buf()])? {
        by_vehicle.entry(l.vehicle_id.clone()).or_default().push(l);
    }
    let mut ids = Vec::new();
    let mut models = Vec::new();
    let mut logs = Vec::new();
    for (id, vlogs) in by_vehicle {
        let snaps: Vec<ParameterSnapshot> = stream::load_all(dir, &id)?.into_iter().map(|(_, s)| s).collect();
        if snaps.is_empty() {
            log::warn!("{id}: no snapshots, left out of the matrix");
            continue;
        }
        let (best, mse) = sim::best_snapshot(&cfg.engine, &snaps, &vlogs, Method::Ave)?;
        log::info!("{id}: best snapshot at {:.0} s (self MSE {mse:.5})", snaps[best].stream_time());
        ids.push(id);
        models.push(snaps[best].clone());
        logs.push(vlogs);
    }
    if ids.is_empty() {
        return Err(Error::NoData("no vehicle has both logs and snapshots".into()));
    }
    let matrix = sim::cross_vehicle_matrix(&cfg.engine, &models, &logs, Method::Ave)?;
    let mut text = format!("model\\data,{}\n", ids.join(","));
    for (id, row) in ids.iter().zip(&matrix) {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        text.push_str(&format!("{id},{}\n", cells.join(",")));
    }
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
        echo_config(&cfg, path)?;
    }
    print!("{text}");
    let (rows, cols) = sim::diagonal_dominance(&matrix);
    println!("diagonal is the row minimum in {:.0}% of rows, column minimum in {:.0}% of columns", rows * 100.0, cols * 100.0);
    Ok(())
}
