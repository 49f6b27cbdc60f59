//! Subcommand orchestration: simulate, verify, sweep, and bound.
//!
//! All outputs are deterministic functions of (config, seed): CSV floats are
//! written with 17 significant digits, JSON field order is fixed, results
//! are merged in path-index order, and worker count never changes bytes.
//! The resolved config is re-emitted next to the results so every artifact
//! records exactly what produced it.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::lyapunov::{
    mc_estimate, moment_bound_log, BoundParams, InitialCondition, LyapunovSpec, MomentEstimate,
};
use crate::models::DiscreteModel;
use crate::noise::PathStream;
use crate::scheme::simulate_path;
use crate::timegrid::Partition;
use crate::verify::{run_all, CheckReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Verify,
    Sweep,
    Bound,
}

/// Parsed command line.
#[derive(Debug, Clone)]
pub struct CliOptions {
    pub command: Command,
    pub config_path: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub paths: Option<u64>,
    pub mesh: Option<Vec<f64>>,
}

/// Environment fallback for the worker count flag.
pub const THREADS_ENV: &str = "SPDE_TAMED_THREADS";

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(text) => {
            let n: usize = text
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("{THREADS_ENV}={text:?} is not a thread count")))?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn with_pool<T>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match threads {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("building thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::io(format!("writing {}: {e}", path.display())))
}

fn to_json_string<T: Serialize>(doc: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::io(format!("encoding json: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    write_text(path, &to_json_string(doc)?)
}

#[derive(Serialize)]
struct NodeDoc {
    t: f64,
    log_mean: f64,
    ci_halfwidth: f64,
}

#[derive(Serialize)]
struct EstimateDoc {
    sup_node_log_mean: f64,
    per_node: Vec<NodeDoc>,
    paths: u64,
    batches: u64,
    seed: u64,
    bound_loglog: Option<f64>,
}

#[derive(Serialize)]
struct CheckDoc {
    name: String,
    passed: bool,
    measured: f64,
    threshold: f64,
    detail: String,
}

#[derive(Serialize)]
struct VerifyDoc {
    model: String,
    seed: u64,
    passed: bool,
    checks: Vec<CheckDoc>,
}

#[derive(Serialize)]
struct SweepRowDoc {
    mesh: f64,
    steps: u64,
    sup_node_log_mean: f64,
    ci_halfwidth: f64,
    bound_loglog: Option<f64>,
}

#[derive(Serialize)]
struct SweepDoc {
    log_initial_moment: f64,
    seed: u64,
    paths: u64,
    batches: u64,
    rows: Vec<SweepRowDoc>,
}

#[derive(Serialize)]
struct BoundRowDoc {
    mesh: f64,
    leading_exponent_log: f64,
    mesh_power: f64,
    mesh_log_term: f64,
    log_log_bound: f64,
}

#[derive(Serialize)]
struct BoundDoc {
    c: f64,
    iota: f64,
    t_end: f64,
    rho: f64,
    delta: f64,
    varsigma: f64,
    rows: Vec<BoundRowDoc>,
}

struct Prepared {
    cfg: Config,
    out_dir: PathBuf,
    seed: Option<u64>,
    threads: Option<usize>,
    paths: u64,
    batches: u64,
}

fn prepare(opts: &CliOptions) -> Result<Prepared> {
    let cfg = Config::load(&opts.config_path)?;
    let out_dir = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let seed = opts.seed.or(cfg.seed);
    let threads = resolve_threads(opts.threads)?;
    let paths = opts.paths.unwrap_or(cfg.paths);
    if paths == 0 {
        return Err(Error::config("paths: must be > 0"));
    }
    Ok(Prepared {
        batches: cfg.batches,
        cfg,
        out_dir,
        seed,
        threads,
        paths,
    })
}

fn require_seed(p: &Prepared) -> Result<u64> {
    p.seed
        .ok_or_else(|| Error::config("seed required: set `seed` in the config or pass --seed"))
}

fn ensure_out_dir(p: &Prepared) -> Result<()> {
    std::fs::create_dir_all(&p.out_dir)
        .map_err(|e| Error::io(format!("creating {}: {e}", p.out_dir.display())))
}

/// Writes the fully resolved config (including the effective seed) so the
/// output directory is self-describing.
fn emit_resolved_config(p: &Prepared, seed: Option<u64>) -> Result<()> {
    let mut resolved = p.cfg.resolved()?;
    resolved.seed = seed;
    resolved.paths = p.paths;
    write_text(
        &p.out_dir.join("config.json"),
        &resolved.to_canonical_json()?,
    )
}

fn bound_loglog_or_none(cfg: &Config, mesh: f64) -> Option<f64> {
    let params = cfg.build_bound_params().ok()?;
    moment_bound_log(&params, mesh).ok().map(|b| b.log_log_bound)
}

fn write_moments_csv(path: &Path, est: &MomentEstimate) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::io(format!("writing {}: {e}", path.display())))?;
    let io_err = |e: csv::Error| Error::io(format!("writing {}: {e}", path.display()));
    w.write_record(["time", "log_mean", "ci_halfwidth"])
        .map_err(io_err)?;
    for i in 0..est.times.len() {
        w.write_record([
            fmt17(est.times[i]),
            fmt17(est.log_means[i]),
            fmt17(est.ci_halfwidths[i]),
        ])
        .map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}: {e}", path.display())))
}

fn write_trajectory_csv(
    path: &Path,
    dm: &DiscreteModel,
    part: &Partition,
    ic: &InitialCondition,
    seed: u64,
    path_index: u64,
) -> Result<()> {
    let mut stream = PathStream::new(seed, path_index);
    let xi = ic.sample(stream.stream(0))?;
    let traj = simulate_path(dm, part, &xi, &mut stream)?;
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::io(format!("writing {}: {e}", path.display())))?;
    let io_err = |e: csv::Error| Error::io(format!("writing {}: {e}", path.display()));
    let mut header = vec!["time".to_string(), "indicator".to_string(), "accumulator".to_string()];
    header.extend(dm.modes().ids().iter().map(|id| id.to_string()));
    w.write_record(&header).map_err(io_err)?;
    for i in 0..traj.len() {
        let mut row = vec![
            fmt17(traj.times()[i]),
            if traj.indicators()[i] { "1" } else { "0" }.to_string(),
            fmt17(traj.accumulators()[i]),
        ];
        row.extend(traj.states()[i].coeffs().iter().map(|c| fmt17(*c)));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}: {e}", path.display())))
}

fn estimate_doc(cfg: &Config, est: &MomentEstimate, mesh: f64) -> EstimateDoc {
    EstimateDoc {
        sup_node_log_mean: est.sup_node_log_mean,
        per_node: est
            .times
            .iter()
            .zip(&est.log_means)
            .zip(&est.ci_halfwidths)
            .map(|((t, lm), hw)| NodeDoc {
                t: *t,
                log_mean: *lm,
                ci_halfwidth: *hw,
            })
            .collect(),
        paths: est.paths as u64,
        batches: est.batches as u64,
        seed: est.seed,
        bound_loglog: bound_loglog_or_none(cfg, mesh),
    }
}

/// The estimate document (the `estimate.json` artifact) as canonical JSON.
pub fn estimate_document_json(cfg: &Config, est: &MomentEstimate, mesh: f64) -> Result<String> {
    to_json_string(&estimate_doc(cfg, est, mesh))
}

fn verify_doc(cfg: &Config, seed: u64, reports: &[CheckReport]) -> VerifyDoc {
    VerifyDoc {
        model: cfg.model.kind.as_str().to_string(),
        seed,
        passed: reports.iter().all(|r| r.passed),
        checks: reports
            .iter()
            .map(|r| CheckDoc {
                name: r.name.clone(),
                passed: r.passed,
                measured: r.measured,
                threshold: r.threshold,
                detail: r.detail.clone(),
            })
            .collect(),
    }
}

/// The verification report (the `verify.json` artifact) as canonical JSON.
pub fn verify_document_json(cfg: &Config, seed: u64, reports: &[CheckReport]) -> Result<String> {
    to_json_string(&verify_doc(cfg, seed, reports))
}

fn bound_doc(params: &BoundParams, meshes: &[f64]) -> Result<BoundDoc> {
    let rows = meshes
        .iter()
        .map(|&mesh| {
            let b = moment_bound_log(params, mesh)?;
            Ok(BoundRowDoc {
                mesh,
                leading_exponent_log: b.leading_exponent_log,
                mesh_power: b.mesh_power,
                mesh_log_term: b.mesh_log_term,
                log_log_bound: b.log_log_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundDoc {
        c: params.c,
        iota: params.iota,
        t_end: params.t_end,
        rho: params.rho,
        delta: params.delta,
        varsigma: params.varsigma,
        rows,
    })
}

/// The bound table (the `bound.json` artifact) as canonical JSON.
pub fn bound_document_json(params: &BoundParams, meshes: &[f64]) -> Result<String> {
    to_json_string(&bound_doc(params, meshes)?)
}

fn cmd_simulate(p: &Prepared) -> Result<()> {
    let seed = require_seed(p)?;
    let dm = p.cfg.build_discrete_model()?;
    let part = p.cfg.build_partition()?;
    let ic = p.cfg.build_initial(&dm)?;
    let est = with_pool(p.threads, || {
        mc_estimate(&dm, &part, &ic, p.paths as usize, p.batches as usize, seed)
    })?;
    ensure_out_dir(p)?;
    emit_resolved_config(p, Some(seed))?;
    write_moments_csv(&p.out_dir.join("moments.csv"), &est)?;
    write_json(
        &p.out_dir.join("estimate.json"),
        &estimate_doc(&p.cfg, &est, part.mesh()),
    )?;
    write_trajectory_csv(
        &p.out_dir.join("trajectory.csv"),
        &dm,
        &part,
        &ic,
        seed,
        0,
    )?;
    println!(
        "simulate: sup-node log-mean {} over {} paths ({} nodes)",
        fmt17(est.sup_node_log_mean),
        est.paths,
        est.times.len()
    );
    Ok(())
}

fn cmd_verify(p: &Prepared) -> Result<()> {
    let seed = p.seed.unwrap_or(0);
    let dm = p.cfg.build_discrete_model()?;
    let part = p.cfg.build_partition()?;
    let reports = run_all(&dm, &part, &p.cfg.verify_options(seed))?;
    let doc = verify_doc(&p.cfg, seed, &reports);
    ensure_out_dir(p)?;
    emit_resolved_config(p, p.seed)?;
    write_json(&p.out_dir.join("verify.json"), &doc)?;
    for r in &reports {
        println!(
            "{} {} measured={} threshold={} ({})",
            if r.passed { "pass" } else { "FAIL" },
            r.name,
            fmt17(r.measured),
            fmt17(r.threshold),
            r.detail
        );
    }
    if doc.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name.as_str())
            .collect();
        Err(Error::invariant(format!(
            "verification failed: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_sweep(p: &Prepared, mesh_flag: &Option<Vec<f64>>) -> Result<()> {
    let seed = require_seed(p)?;
    let dm = p.cfg.build_discrete_model()?;
    let ic = p.cfg.build_initial(&dm)?;
    let lyap = LyapunovSpec::from_model(dm.spec());
    let meshes = match mesh_flag {
        Some(list) => {
            for pair in list.windows(2) {
                if !(pair[1] < pair[0]) {
                    return Err(Error::config("--mesh: must be strictly descending"));
                }
            }
            if list.is_empty() || list.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
                return Err(Error::config("--mesh: entries must be finite and > 0"));
            }
            list.clone()
        }
        None => p.cfg.sweep_meshes()?,
    };
    let log_initial = ic.log_initial_moment(&lyap, dm.modes())?;
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for &mesh in &meshes {
        let part = p.cfg.partition_for_mesh(mesh)?;
        let est = with_pool(p.threads, || {
            mc_estimate(&dm, &part, &ic, p.paths as usize, p.batches as usize, seed)
        })?;
        let hw = est.ci_halfwidths[est.sup_node_index];
        rows.push(SweepRowDoc {
            mesh: part.mesh(),
            steps: part.num_steps() as u64,
            sup_node_log_mean: est.sup_node_log_mean,
            ci_halfwidth: hw,
            bound_loglog: bound_loglog_or_none(&p.cfg, part.mesh()),
        });
        csv_rows.push([
            fmt17(part.mesh()),
            format!("{}", part.num_steps()),
            fmt17(est.sup_node_log_mean),
            fmt17(hw),
            fmt17(log_initial),
        ]);
        println!(
            "sweep: mesh {} ({} steps) sup-node log-mean {} +- {}",
            fmt17(part.mesh()),
            part.num_steps(),
            fmt17(est.sup_node_log_mean),
            fmt17(hw)
        );
    }
    println!("sweep: log initial moment {}", fmt17(log_initial));
    ensure_out_dir(p)?;
    emit_resolved_config(p, Some(seed))?;
    let csv_path = p.out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| Error::io(format!("writing {}: {e}", csv_path.display())))?;
    let io_err = |e: csv::Error| Error::io(format!("writing {}: {e}", csv_path.display()));
    w.write_record([
        "mesh",
        "steps",
        "sup_node_log_mean",
        "ci_halfwidth",
        "log_initial_moment",
    ])
    .map_err(io_err)?;
    for row in &csv_rows {
        w.write_record(row).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}: {e}", csv_path.display())))?;
    write_json(
        &p.out_dir.join("sweep.json"),
        &SweepDoc {
            log_initial_moment: log_initial,
            seed,
            paths: p.paths,
            batches: p.batches,
            rows,
        },
    )
}

fn cmd_bound(p: &Prepared, mesh_flag: &Option<Vec<f64>>) -> Result<()> {
    let params = p.cfg.build_bound_params()?;
    let meshes = match mesh_flag {
        Some(list) if !list.is_empty() => list.clone(),
        _ => p.cfg.sweep_meshes()?,
    };
    let doc = bound_doc(&params, &meshes)?;
    for row in &doc.rows {
        println!(
            "bound: mesh {} log-log {} (leading {}, mesh term {} with power {})",
            fmt17(row.mesh),
            fmt17(row.log_log_bound),
            fmt17(row.leading_exponent_log),
            fmt17(row.mesh_log_term),
            fmt17(row.mesh_power)
        );
    }
    ensure_out_dir(p)?;
    emit_resolved_config(p, p.seed)?;
    write_json(&p.out_dir.join("bound.json"), &doc)
}

/// Runs one subcommand end to end. The binary maps errors to exit codes.
pub fn run(opts: &CliOptions) -> Result<()> {
    let prepared = prepare(opts)?;
    match opts.command {
        Command::Simulate => cmd_simulate(&prepared),
        Command::Verify => cmd_verify(&prepared),
        Command::Sweep => cmd_sweep(&prepared, &opts.mesh),
        Command::Bound => cmd_bound(&prepared, &opts.mesh),
    }
}
