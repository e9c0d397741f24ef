use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ScenarioConfig, StationaryConfig};
use crate::diagnostics::{
    self, initial_data_report, theorem2_monitor, theorem4_monitor, BlowupReport, DiagnosticsRecord,
    Theorem4Report, Weight1D, Window,
};
use crate::error::{Error, Result};
use crate::nls::{nls_run, NlsBoundary, NlsConfig};
use crate::numerics::{Grid1D, ScalarField};
use crate::physics::{madelung_inverse, FluidState, MadelungGauge, Model};
use crate::qhd::{qhd_run, DtPolicy, QhdConfig, Trajectory};
use crate::stationary::{stationary_residual, stationary_shoot};

/// Process exit status of a verb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    ConfigError,
    Instability,
    MonitorFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::ConfigError => 2,
            Status::Instability => 3,
            Status::MonitorFailure => 4,
        }
    }

    /// Exit status of an error that aborted a verb.
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Instability { .. } => Status::Instability,
            Error::Assumption(_) => Status::MonitorFailure,
            _ => Status::ConfigError,
        }
    }
}

pub const CSV_HEADER: &str = "t,E,I,K0,K1,B0,B1,mass,min_rho,res_energy,res_dI";

/// Time series in the fixed column order, 17 significant digits.
pub fn records_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::with_capacity(200 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let cols = [
            r.t, r.energy, r.observable, r.k0, r.k1, r.b0, r.b1, r.mass, r.min_rho, r.res_energy, r.res_di,
        ];
        for (i, v) in cols.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Result of a verb: the summary document, files written and exit status.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
    pub status: Status,
}

fn qhd_config(cfg: &ScenarioConfig) -> QhdConfig {
    let dt = match cfg.solver.qhd_dt {
        Some(dt) => DtPolicy::Fixed { dt },
        None => DtPolicy::Parabolic { sigma: cfg.solver.sigma },
    };
    QhdConfig::new(cfg.boundary, cfg.scenario.t_final)
        .with_dt(dt)
        .with_record_every(cfg.scenario.record_every)
        .with_floor(cfg.solver.floor)
}

fn nls_config(cfg: &ScenarioConfig, model: &Model) -> NlsConfig {
    let bc = if cfg.boundary.is_periodic() {
        NlsBoundary::Periodic
    } else {
        NlsBoundary::Neumann
    };
    NlsConfig::new(model.eps(), bc, cfg.solver.nls_dt, cfg.scenario.t_final)
        .with_record_every(cfg.scenario.record_every)
        .with_floor(cfg.solver.floor)
}

/// One solver's output on one grid.
struct SolverRun {
    traj: Trajectory,
    /// Density at `t_final`.
    final_rho: Vec<f64>,
    final_t: f64,
}

fn run_qhd(cfg: &ScenarioConfig, model: &Model, ic: &FluidState) -> Result<SolverRun> {
    let traj = qhd_run(ic, model, &qhd_config(cfg))?;
    let last = &traj.last().state;
    Ok(SolverRun {
        final_rho: last.rho.values().to_vec(),
        final_t: last.t,
        traj,
    })
}

fn run_nls(cfg: &ScenarioConfig, model: &Model, ic: &FluidState) -> Result<SolverRun> {
    let ncfg = nls_config(cfg, model);
    let wave = madelung_inverse(ic, ncfg.eps, MadelungGauge::default(), ncfg.floor)?;
    let wt = nls_run(&wave, &model.law, &ncfg)?;
    let last = &wt.last().wave;
    Ok(SolverRun {
        final_rho: last.density().into_values(),
        final_t: last.t,
        traj: wt.hydrodynamic()?,
    })
}

fn max_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
struct ObservableSummary {
    solver: &'static str,
    i0: f64,
    m0: f64,
    t_star: Option<f64>,
    tolerance: f64,
    windows: Vec<Window>,
    asserted: usize,
    violations: usize,
    passed: bool,
    vacuum_time: Option<f64>,
}

impl ObservableSummary {
    fn new(solver: &'static str, r: &BlowupReport) -> Self {
        Self {
            solver,
            i0: r.i0,
            m0: r.m0,
            t_star: r.t_star,
            tolerance: r.tolerance,
            windows: r.hypothesis_windows.clone(),
            asserted: r.asserted(),
            violations: r.violations(),
            passed: r.passed(),
            vacuum_time: r.vacuum_time,
        }
    }
}

fn dirichlet_summary(r: &Theorem4Report) -> Value {
    json!({
        "params": r.params,
        "assumptions": r.assumptions,
        "i0": r.i0,
        "m0": r.m0,
        "e0": r.e0,
        "max_k_mismatch": r.max_k_mismatch,
        "condition_windows": r.condition_windows,
        "energy_threshold": r.energy_threshold,
        "energy_threshold_met": r.energy_threshold_met,
        "branches": r.checks.iter().map(|c| c.branch).collect::<std::collections::BTreeSet<_>>(),
        "asserted": r.checks.iter().filter(|c| c.satisfied.is_some()).count(),
        "violations": r.violations(),
        "passed": r.passed(),
    })
}

fn initial_report(cfg: &ScenarioConfig, grid: Grid1D) -> Result<(FluidState, BlowupReport)> {
    let ic = cfg.initial_state(grid)?;
    let report = initial_data_report(&ic.rho, &ic.u, &Weight1D::parabolic(grid))?;
    Ok((ic, report))
}

/// Runs the selected solvers and monitors and writes the time series and
/// the summary into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let model = cfg.model()?;
    let (ic, predicted) = initial_report(cfg, grid)?;
    let b_initial = diagnostics::boundary_indicator_b(&ic, &model, &cfg.boundary, cfg.solver.floor)?;

    let mut files = Vec::new();
    let mut runs: Vec<(&'static str, SolverRun)> = Vec::new();
    let mut instability = None;
    let mut run_info = serde_json::Map::new();
    let solvers: Vec<&'static str> = [("qhd", cfg.scenario.solver.runs_qhd()), ("nls", cfg.scenario.solver.runs_nls())]
        .into_iter()
        .filter_map(|(s, on)| on.then_some(s))
        .collect();
    for &solver in &solvers {
        let res = if solver == "qhd" {
            run_qhd(cfg, &model, &ic)
        } else {
            run_nls(cfg, &model, &ic)
        };
        match res {
            Ok(run) => {
                let path = out_dir.join(format!("{}.{solver}.csv", cfg.prefix()));
                write_atomic(&path, records_csv(&run.traj.records()).as_bytes())?;
                run_info.insert(
                    solver.into(),
                    json!({
                        "dt": run.traj.dt,
                        "snapshots": run.traj.snapshots.len(),
                        "final_time": run.final_t,
                        "csv": path,
                    }),
                );
                files.push(path);
                runs.push((solver, run));
            }
            Err(Error::Instability { t }) => {
                instability = Some(json!({ "solver": solver, "t": t }));
            }
            Err(e) => return Err(e),
        }
    }

    if runs.len() == 2 {
        let d = max_difference(&runs[0].1.final_rho, &runs[1].1.final_rho);
        let mut xcheck = json!({ "n": grid.len(), "max_density_discrepancy": d });
        if cfg.solver.refine {
            let fine = grid.refined(2)?;
            let (fic, _) = initial_report(cfg, fine)?;
            let a = run_qhd(cfg, &model, &fic)?;
            let b = run_nls(cfg, &model, &fic)?;
            let df = max_difference(&a.final_rho, &b.final_rho);
            xcheck["refined"] = json!({ "n": fine.len(), "max_density_discrepancy": df });
            xcheck["ratio"] = json!(d / df);
        }
        run_info.insert("crosscheck".into(), xcheck);
    }

    let mut failed: Vec<String> = Vec::new();
    let mut observable = Vec::new();
    if cfg.monitors.observable && !grid.is_periodic() {
        for (solver, run) in &runs {
            let r = theorem2_monitor(&run.traj, &predicted)?;
            if !r.passed() {
                failed.push(format!("observable/{solver}"));
            }
            observable.push(ObservableSummary::new(solver, &r));
        }
    }
    let mut dirichlet = Value::Null;
    if let Some(d) = &cfg.monitors.dirichlet {
        if let Some((_, run)) = runs.iter().find(|(s, _)| *s == "qhd") {
            dirichlet = match theorem4_monitor(&run.traj, &cfg.dirichlet_params(d)) {
                Ok(r) => {
                    if !r.passed() {
                        failed.push("dirichlet".into());
                    }
                    dirichlet_summary(&r)
                }
                Err(e @ Error::Assumption(_)) => {
                    failed.push("dirichlet/assumptions".into());
                    json!({ "error": e.to_string(), "passed": false })
                }
                Err(e) => return Err(e),
            };
        }
    }

    let vacuum: serde_json::Map<String, Value> = runs
        .iter()
        .map(|(s, r)| (s.to_string(), serde_json::to_value(&r.traj.vacuum).unwrap_or(Value::Null)))
        .collect();
    let status = if instability.is_some() {
        Status::Instability
    } else if !failed.is_empty() {
        Status::MonitorFailure
    } else {
        Status::Success
    };
    let summary = json!({
        "run": {
            "name": cfg.scenario.name,
            "solvers": solvers,
            "grid": { "n": grid.len(), "dx": grid.dx(), "periodic": grid.is_periodic() },
            "results": run_info,
            "status": status,
            "exit_code": status.code(),
        },
        "config": cfg,
        "hypotheses": {
            "i0": predicted.i0,
            "m0": predicted.m0,
            "t_star": predicted.t_star,
            "b0_initial": b_initial.0,
            "b1_initial": b_initial.1,
            "nonpositive_flux_regime": cfg.boundary.in_nonpositive_flux_regime(),
        },
        "monitors": {
            "observable": observable,
            "dirichlet": dirichlet,
            "failed": failed,
        },
        "events": {
            "vacuum": vacuum,
            "instability": instability,
        },
    });
    let path = out_dir.join(format!("{}.summary.json", cfg.prefix()));
    write_atomic(&path, to_pretty(&summary)?.as_bytes())?;
    files.push(path);
    Ok(Outcome { summary, files, status })
}

fn to_pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Initial-data report only: `I₀`, `M₀`, `T*` and the boundary signs.
pub fn predict(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let (ic, r) = initial_report(cfg, grid)?;
    let model = cfg.model()?;
    let (b0, b1) = diagnostics::boundary_indicator_b(&ic, &model, &cfg.boundary, cfg.solver.floor)?;
    let summary = json!({
        "run": { "name": cfg.scenario.name, "verb": "predict", "grid": { "n": grid.len(), "dx": grid.dx() } },
        "config": cfg,
        "hypotheses": {
            "i0": r.i0,
            "m0": r.m0,
            "t_star": r.t_star,
            "tolerance": r.tolerance,
            "b0_initial": b0,
            "b1_initial": b1,
        },
        "monitors": {},
        "events": {},
    });
    let path = out_dir.join(format!("{}.predict.json", cfg.prefix()));
    write_atomic(&path, to_pretty(&summary)?.as_bytes())?;
    Ok(Outcome {
        summary,
        files: vec![path],
        status: Status::Success,
    })
}

/// Shoots one stationary profile and writes `x, w, dw, residual`.
pub fn stationary(cfg: &StationaryConfig, out_dir: &Path) -> Result<Outcome> {
    let p = cfg.params();
    let shot = stationary_shoot(&p, cfg.stationary.dx)?;
    let residual = if shot.x.len() >= 5 {
        Some(stationary_residual(&shot.field()?, &p)?)
    } else {
        None
    };
    let mut csv = String::from("x,w,dw,residual\n");
    for i in 0..shot.x.len() {
        let r = residual.as_ref().map_or(f64::NAN, |r: &ScalarField| r.values()[i]);
        let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e},{:.16e}", shot.x[i], shot.w[i], shot.dw[i], r);
    }
    let csv_path = out_dir.join(format!("{}.stationary.csv", cfg.prefix()));
    write_atomic(&csv_path, csv.as_bytes())?;
    let summary = json!({
        "run": { "name": cfg.scenario.name, "verb": "stationary", "dx": shot.dx, "points": shot.x.len() },
        "config": cfg,
        "hypotheses": { "j": p.j, "k": p.k, "w0": p.w0, "dw0": p.dw0 },
        "monitors": {
            "max_residual": residual.as_ref().map(|r| r.max_abs()),
            "first_integral_drift": shot.first_integral_drift(&p),
        },
        "events": { "shot": shot.event, "completed": shot.completed() },
    });
    let path = out_dir.join(format!("{}.stationary.json", cfg.prefix()));
    write_atomic(&path, to_pretty(&summary)?.as_bytes())?;
    Ok(Outcome {
        summary,
        files: vec![csv_path, path],
        status: Status::Success,
    })
}

/// Summary written when a run aborts on a solver error.
pub fn failure_summary(name: &str, e: &Error) -> Value {
    let status = Status::of_error(e);
    json!({
        "run": { "name": name, "status": status, "exit_code": status.code(), "error": e.to_string() },
        "hypotheses": {},
        "monitors": {},
        "events": match e {
            Error::Instability { t } => json!({ "instability": { "t": t } }),
            _ => json!({}),
        },
    })
}

