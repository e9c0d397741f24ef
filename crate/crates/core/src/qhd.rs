//! Method-of-lines integrator for the one-dimensional QHD system in
//! conservative variables `(ρ, m = ρu)`:
//!
//! ```text
//! ρ_t + m_x = 0
//! m_t + (m²/ρ + P(ρ))_x = (ε²/2) ρ (√ρ_xx / √ρ)_x
//! ```
//!
//! Time stepping is classical RK4 with `dt ∝ dx²`. Bounded runs use ghost
//! points: `√ρ` is reflected evenly (zero density slope) and the momentum is
//! extrapolated linearly, which makes the trapezoid mass change equal to the
//! net boundary flux exactly.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, VacuumEvent, Weight1D};
use crate::error::{Error, Result};
use crate::numerics::{BoundaryKind, Grid1D, ScalarField};
use crate::physics::{FluidState, Model, VACUUM_FLOOR};

/// How the step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtPolicy {
    /// `dt = sigma · dx²`.
    Parabolic { sigma: f64 },
    Fixed { dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QhdConfig {
    pub bc: BoundaryKind,
    pub dt: DtPolicy,
    pub floor: f64,
    pub t_final: f64,
    /// Snapshot cadence in steps. The final step is always recorded.
    pub record_every: usize,
}

impl QhdConfig {
    pub fn new(bc: BoundaryKind, t_final: f64) -> Self {
        Self {
            bc,
            dt: DtPolicy::Parabolic { sigma: 0.1 },
            floor: VACUUM_FLOOR,
            t_final,
            record_every: 100,
        }
    }

    pub fn with_dt(mut self, dt: DtPolicy) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bc.validate()?;
        match self.dt {
            DtPolicy::Parabolic { sigma } if !(sigma > 0.0 && sigma <= 1.0) => {
                return Err(Error::InvalidParameter(format!("sigma must lie in (0, 1], got {sigma}")))
            }
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")))
            }
            _ => {}
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be positive".into()));
        }
        if !(self.floor >= 0.0) {
            return Err(Error::InvalidParameter("vacuum floor must be non-negative".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Step count and step size that land exactly on `t_final`.
    pub fn steps(&self, grid: &Grid1D) -> (usize, f64) {
        let nominal = match self.dt {
            DtPolicy::Parabolic { sigma } => sigma * grid.dx() * grid.dx(),
            DtPolicy::Fixed { dt } => dt,
        };
        let n = ((self.t_final / nominal) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: FluidState,
    pub record: DiagnosticsRecord,
}

/// Snapshots of one run plus the data needed to re-evaluate functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: Model,
    pub bc: BoundaryKind,
    pub grid: Grid1D,
    pub floor: f64,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub vacuum: Option<VacuumEvent>,
}

impl Trajectory {
    /// Builds a trajectory from states, computing diagnostics and residuals.
    pub fn from_states(
        states: Vec<FluidState>,
        model: Model,
        bc: BoundaryKind,
        floor: f64,
        dt: f64,
    ) -> Result<Self> {
        let grid = *states
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?
            .grid();
        let weight = Weight1D::parabolic(grid);
        let mut snapshots = Vec::with_capacity(states.len());
        let mut last_t = f64::NEG_INFINITY;
        for state in states {
            if state.grid() != &grid {
                return Err(Error::GridMismatch("snapshots must share one grid"));
            }
            if !(state.t > last_t) {
                return Err(Error::InvalidParameter("snapshot times must increase".into()));
            }
            last_t = state.t;
            let record = diagnostics::record(&state, &model, &bc, &weight, floor)?;
            snapshots.push(Snapshot { state, record });
        }
        let mut traj = Self {
            model,
            bc,
            grid,
            floor,
            dt,
            snapshots,
            vacuum: None,
        };
        diagnostics::attach_residuals(&mut traj)?;
        Ok(traj)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    pub fn records(&self) -> Vec<DiagnosticsRecord> {
        self.snapshots.iter().map(|s| s.record.clone()).collect()
    }

    pub fn first(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        &self.snapshots[self.snapshots.len() - 1]
    }
}

/// Right-hand side `(ρ_t, m_t)`.
pub fn qhd_rhs(s: &FluidState, model: &Model, cfg: &QhdConfig) -> Result<(ScalarField, ScalarField)> {
    check_bc(s.grid(), &cfg.bc)?;
    let m = s.momentum();
    let (drho, dm) = rhs_arrays(s.rho.values(), m.values(), s.grid(), model, &cfg.bc, cfg.floor)?;
    Ok((ScalarField::new(*s.grid(), drho)?, ScalarField::new(*s.grid(), dm)?))
}

fn check_bc(grid: &Grid1D, bc: &BoundaryKind) -> Result<()> {
    if grid.is_periodic() != bc.is_periodic() {
        return Err(Error::GridMismatch(
            "periodic boundary requires a periodic grid and vice versa",
        ));
    }
    Ok(())
}

fn rhs_arrays(
    rho: &[f64],
    m: &[f64],
    grid: &Grid1D,
    model: &Model,
    bc: &BoundaryKind,
    floor: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rho.len();
    let dx = grid.dx();
    let quantum = model.quantum();
    if let Some((i, &r)) = rho
        .iter()
        .enumerate()
        .find(|(_, &r)| !(r > floor))
    {
        if !r.is_finite() {
            return Err(Error::NonFinite { what: "density" });
        }
        return Err(Error::Vacuum {
            min: r,
            x: grid.x(i),
            floor,
        });
    }

    let w: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let flux: Vec<f64> = rho
        .iter()
        .zip(m)
        .map(|(&r, &mi)| mi * mi / r + model.law.pressure(r))
        .collect();
    let mut q = vec![0.0; n];
    let mut drho = vec![0.0; n];
    let mut dm = vec![0.0; n];
    let h2 = dx * dx;
    let c2 = 2.0 * dx;

    if bc.is_periodic() {
        let at = |i: usize, d: isize| (i as isize + d).rem_euclid(n as isize) as usize;
        for i in 0..n {
            q[i] = (w[at(i, 1)] - 2.0 * w[i] + w[at(i, -1)]) / h2 / w[i];
        }
        for i in 0..n {
            let (r, l) = (at(i, 1), at(i, -1));
            drho[i] = -(m[r] - m[l]) / c2;
            dm[i] = -(flux[r] - flux[l]) / c2 + quantum * rho[i] * (q[r] - q[l]) / c2;
        }
    } else {
        for i in 1..n - 1 {
            q[i] = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / h2 / w[i];
        }
        // even reflection of √ρ: zero density slope at both ends
        q[0] = 2.0 * (w[1] - w[0]) / h2 / w[0];
        q[n - 1] = 2.0 * (w[n - 2] - w[n - 1]) / h2 / w[n - 1];

        for i in 1..n - 1 {
            drho[i] = -(m[i + 1] - m[i - 1]) / c2;
            dm[i] = -(flux[i + 1] - flux[i - 1]) / c2
                + quantum * rho[i] * (q[i + 1] - q[i - 1]) / c2;
        }
        // linearly extrapolated momentum ghost
        drho[0] = -(m[1] - m[0]) / dx;
        drho[n - 1] = -(m[n - 1] - m[n - 2]) / dx;

        match *bc {
            BoundaryKind::NeumannDensityDirichletVelocity { u0, u1 } => {
                dm[0] = u0 * drho[0];
                dm[n - 1] = u1 * drho[n - 1];
            }
            BoundaryKind::Monitored { .. } => {
                let left = |f: &[f64]| (-3.0 * f[0] + 4.0 * f[1] - f[2]) / c2;
                let right = |f: &[f64]| (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / c2;
                dm[0] = -left(&flux) + quantum * rho[0] * left(&q);
                dm[n - 1] = -right(&flux) + quantum * rho[n - 1] * right(&q);
            }
            BoundaryKind::Periodic => unreachable!("handled above"),
        }
    }

    if drho.iter().chain(&dm).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "QHD right-hand side" });
    }
    Ok((drho, dm))
}

/// Integrates from `ic` to `cfg.t_final` with RK4.
///
/// Reaching the vacuum floor ends the run early and is reported through
/// [`Trajectory::vacuum`]; it is an outcome, not an error.
pub fn qhd_run(ic: &FluidState, model: &Model, cfg: &QhdConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_bc(ic.grid(), &cfg.bc)?;
    ic.check_floor(cfg.floor)?;
    let grid = *ic.grid();
    let n = grid.len();
    let (steps, dt) = cfg.steps(&grid);

    let mut rho = ic.rho.values().to_vec();
    let mut u0 = ic.u.values().to_vec();
    if let BoundaryKind::NeumannDensityDirichletVelocity { u0: a, u1: b } = cfg.bc {
        u0[0] = a;
        u0[n - 1] = b;
    }
    let mut m: Vec<f64> = rho.iter().zip(&u0).map(|(r, u)| r * u).collect();

    let to_state = |t: f64, rho: &[f64], m: &[f64]| -> Result<FluidState> {
        let u = rho.iter().zip(m).map(|(r, mi)| mi / r).collect();
        FluidState::new(t, ScalarField::new(grid, rho.to_vec())?, ScalarField::new(grid, u)?)
    };

    let mut states = vec![to_state(ic.t, &rho, &m)?];
    let mut vacuum = None;
    let mut stage_rho = vec![0.0; n];
    let mut stage_m = vec![0.0; n];

    for step in 1..=steps {
        let t = ic.t + step as f64 * dt;
        let (k1r, k1m) = rhs_arrays(&rho, &m, &grid, model, &cfg.bc, cfg.floor)?;
        axpy(&mut stage_rho, &rho, 0.5 * dt, &k1r);
        axpy(&mut stage_m, &m, 0.5 * dt, &k1m);
        let (k2r, k2m) = stage(&stage_rho, &stage_m, &grid, model, cfg, t)?;
        axpy(&mut stage_rho, &rho, 0.5 * dt, &k2r);
        axpy(&mut stage_m, &m, 0.5 * dt, &k2m);
        let (k3r, k3m) = stage(&stage_rho, &stage_m, &grid, model, cfg, t)?;
        axpy(&mut stage_rho, &rho, dt, &k3r);
        axpy(&mut stage_m, &m, dt, &k3m);
        let (k4r, k4m) = stage(&stage_rho, &stage_m, &grid, model, cfg, t)?;
        for i in 0..n {
            rho[i] += dt / 6.0 * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i]);
            m[i] += dt / 6.0 * (k1m[i] + 2.0 * k2m[i] + 2.0 * k3m[i] + k4m[i]);
        }
        if rho.iter().chain(&m).any(|v| !v.is_finite()) {
            return Err(Error::Instability { t });
        }
        let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= cfg.floor {
            vacuum = Some(diagnostics::vacuum_event(t, &grid, &rho, cfg.floor));
            break;
        }
        if step % cfg.record_every == 0 || step == steps {
            states.push(to_state(t, &rho, &m)?);
        }
    }

    let mut traj = Trajectory::from_states(states, model.clone(), cfg.bc, cfg.floor, dt)?;
    traj.vacuum = vacuum;
    Ok(traj)
}

fn stage(
    rho: &[f64],
    m: &[f64],
    grid: &Grid1D,
    model: &Model,
    cfg: &QhdConfig,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    // an intermediate stage dipping through the floor means the step is
    // too large for the dynamics, not a physical vacuum
    rhs_arrays(rho, m, grid, model, &cfg.bc, cfg.floor).map_err(|e| match e {
        Error::Vacuum { .. } | Error::NonFinite { .. } => Error::Instability { t },
        other => other,
    })
}

fn axpy(out: &mut [f64], base: &[f64], a: f64, k: &[f64]) {
    for ((o, b), ki) in out.iter_mut().zip(base).zip(k) {
        *o = b + a * ki;
    }
}
