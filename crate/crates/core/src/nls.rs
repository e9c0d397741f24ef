//! Strang split-step integrator for
//!
//! ```text
//! iε ψ_t = −(ε²/2) Δψ + h(|ψ|²) ψ
//! ```
//!
//! The nonlinear half steps are exact phase rotations. The kinetic step is
//! diagonal in the exponential basis (periodic grids) or the cosine basis
//! (homogeneous Neumann grids, realized as an FFT of the even extension).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, VacuumEvent, Weight1D};
use crate::error::{Error, Result};
use crate::numerics::{integrate_2d, integrate_values, BoundaryKind, Field2D, Grid1D, Grid2D};
use crate::physics::{
    madelung_forward, madelung_forward_2d, FluidState, FluidState2D, Model, PressureLaw, WaveState,
    WaveState2D, VACUUM_FLOOR,
};
use crate::qhd::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlsBoundary {
    Periodic,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlsConfig {
    pub eps: f64,
    pub bc: NlsBoundary,
    pub dt: f64,
    pub t_final: f64,
    /// Snapshot cadence in steps. The final step is always recorded.
    pub record_every: usize,
    /// Density below which hydrodynamic diagnostics are suspended.
    pub floor: f64,
}

impl NlsConfig {
    pub fn new(eps: f64, bc: NlsBoundary, dt: f64, t_final: f64) -> Self {
        Self {
            eps,
            bc,
            dt,
            t_final,
            record_every: 100,
            floor: VACUUM_FLOOR,
        }
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
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be finite and non-negative".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        if !(self.floor >= 0.0) {
            return Err(Error::InvalidParameter("floor must be non-negative".into()));
        }
        Ok(())
    }

    /// Step count and the step size that lands exactly on `t_final`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, self.dt);
        }
        let n = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }

    /// Hydrodynamic boundary treatment used for the Madelung images.
    pub fn hydro_boundary(&self) -> BoundaryKind {
        match self.bc {
            NlsBoundary::Periodic => BoundaryKind::Periodic,
            NlsBoundary::Neumann => BoundaryKind::Monitored { c1: 0.0, c2: 0.0 },
        }
    }

    fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        if (self.bc == NlsBoundary::Periodic) != grid.is_periodic() {
            return Err(Error::GridMismatch(
                "periodic boundary requires a periodic grid and vice versa",
            ));
        }
        Ok(())
    }
}

/// Diagonalized kinetic propagator along one axis.
struct Axis {
    n: usize,
    neumann: bool,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Wavenumbers of the (extended) transform, in FFT order.
    k: Vec<f64>,
    /// `exp(−iεk²dt/2) / N`.
    phase: Vec<Complex64>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Axis {
    fn new(grid: &Grid1D, neumann: bool, eps: f64, dt: f64, planner: &mut FftPlanner<f64>) -> Self {
        let n = grid.len();
        let len = if neumann { 2 * (n - 1) } else { n };
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let period = len as f64 * grid.dx();
        let k: Vec<f64> = (0..len)
            .map(|m| {
                let s = if m <= len / 2 { m as f64 } else { m as f64 - len as f64 };
                2.0 * PI * s / period
            })
            .collect();
        let phase = k
            .iter()
            .map(|&k| Complex64::from_polar(1.0 / len as f64, -0.5 * eps * k * k * dt))
            .collect();
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            neumann,
            forward,
            inverse,
            k,
            phase,
            buf: vec![Complex64::default(); len],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    fn load(&mut self, line: impl Fn(usize) -> Complex64) {
        for i in 0..self.n {
            self.buf[i] = line(i);
        }
        if self.neumann {
            let len = self.buf.len();
            for i in 1..self.n - 1 {
                self.buf[len - i] = self.buf[i];
            }
        }
    }

    /// Propagates one line in place; `get(i)`/`set(i, v)` address the line.
    fn apply(&mut self, line: &mut [Complex64], stride: usize, offset: usize) {
        self.load(|i| line[offset + i * stride]);
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (b, p) in self.buf.iter_mut().zip(&self.phase) {
            *b *= p;
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        for i in 0..self.n {
            line[offset + i * stride] = self.buf[i];
        }
    }

    /// Spectral first derivative of one line.
    fn derivative(&mut self, line: &[Complex64], stride: usize, offset: usize) -> Vec<Complex64> {
        self.load(|i| line[offset + i * stride]);
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        let len = self.buf.len();
        for (m, b) in self.buf.iter_mut().enumerate() {
            let k = if len % 2 == 0 && m == len / 2 { 0.0 } else { self.k[m] };
            *b *= Complex64::new(0.0, k / len as f64);
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        self.buf[..self.n].to_vec()
    }
}

fn nonlinear_half_step(psi: &mut [Complex64], law: &PressureLaw, eps: f64, dt: f64) {
    for z in psi.iter_mut() {
        *z *= Complex64::from_polar(1.0, -law.enthalpy(z.norm_sqr()) * dt / (2.0 * eps));
    }
}

fn check_finite(psi: &[Complex64], t: f64) -> Result<()> {
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Instability { t });
    }
    Ok(())
}

/// Reusable Strang step for one grid, `ε` and `dt`.
///
/// `dt` may be negative, which runs the flow backwards.
pub struct SplitStep {
    law: PressureLaw,
    eps: f64,
    dt: f64,
    axes: Vec<Axis>,
}

impl SplitStep {
    pub fn new(grid: &Grid1D, law: PressureLaw, eps: f64, bc: NlsBoundary, dt: f64) -> Result<Self> {
        Self::build(&[*grid], law, eps, bc, dt)
    }

    pub fn new_2d(grid: &Grid2D, law: PressureLaw, eps: f64, bc: NlsBoundary, dt: f64) -> Result<Self> {
        Self::build(&[grid.x, grid.y], law, eps, bc, dt)
    }

    fn build(grids: &[Grid1D], law: PressureLaw, eps: f64, bc: NlsBoundary, dt: f64) -> Result<Self> {
        law.validate()?;
        if !(eps > 0.0 && eps.is_finite()) || !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParameter("eps must be positive and dt nonzero".into()));
        }
        let neumann = bc == NlsBoundary::Neumann;
        let mut planner = FftPlanner::new();
        let mut axes = Vec::with_capacity(grids.len());
        for g in grids {
            if g.is_periodic() == neumann {
                return Err(Error::GridMismatch(
                    "periodic boundary requires a periodic grid and vice versa",
                ));
            }
            axes.push(Axis::new(g, neumann, eps, dt, &mut planner));
        }
        Ok(Self { law, eps, dt, axes })
    }

    fn advance(&mut self, psi: &mut [Complex64]) {
        nonlinear_half_step(psi, &self.law, self.eps, self.dt);
        match self.axes.as_mut_slice() {
            [x] => x.apply(psi, 1, 0),
            [x, y] => {
                let (nx, ny) = (x.n, y.n);
                for i in 0..nx {
                    y.apply(psi, 1, i * ny);
                }
                for j in 0..ny {
                    x.apply(psi, ny, j);
                }
            }
            _ => unreachable!("one or two axes"),
        }
        nonlinear_half_step(psi, &self.law, self.eps, self.dt);
    }

    pub fn step(&mut self, w: &mut WaveState) -> Result<()> {
        if self.axes.len() != 1 || w.psi().len() != self.axes[0].n {
            return Err(Error::GridMismatch("propagator and wave grids differ"));
        }
        self.advance(w.psi_mut());
        w.t += self.dt;
        check_finite(w.psi(), w.t)
    }

    pub fn step_2d(&mut self, w: &mut WaveState2D) -> Result<()> {
        if self.axes.len() != 2 || w.psi().len() != self.axes[0].n * self.axes[1].n {
            return Err(Error::GridMismatch("propagator and wave grids differ"));
        }
        self.advance(w.psi_mut());
        w.t += self.dt;
        check_finite(w.psi(), w.t)
    }

    /// `∫ (ε²/2)|∇ψ|² + g(|ψ|²)` with a spectral gradient.
    fn energy_density(&mut self, psi: &[Complex64]) -> Vec<f64> {
        let half_eps2 = 0.5 * self.eps * self.eps;
        let mut dens: Vec<f64> = psi.iter().map(|z| self.law.primitive(z.norm_sqr())).collect();
        match self.axes.as_mut_slice() {
            [x] => {
                for (d, z) in dens.iter_mut().zip(x.derivative(psi, 1, 0)) {
                    *d += half_eps2 * z.norm_sqr();
                }
            }
            [x, y] => {
                let (nx, ny) = (x.n, y.n);
                for i in 0..nx {
                    for (j, z) in y.derivative(psi, 1, i * ny).into_iter().enumerate() {
                        dens[i * ny + j] += half_eps2 * z.norm_sqr();
                    }
                }
                for j in 0..ny {
                    for (i, z) in x.derivative(psi, ny, j).into_iter().enumerate() {
                        dens[i * ny + j] += half_eps2 * z.norm_sqr();
                    }
                }
            }
            _ => unreachable!("one or two axes"),
        }
        dens
    }
}

/// One Strang step of size `cfg.dt`.
pub fn nls_step(w: &WaveState, law: &PressureLaw, cfg: &NlsConfig) -> Result<WaveState> {
    cfg.validate()?;
    check_eps(w.eps(), cfg)?;
    cfg.check_grid(w.grid())?;
    let mut next = w.clone();
    SplitStep::new(w.grid(), law.clone(), cfg.eps, cfg.bc, cfg.dt)?.step(&mut next)?;
    Ok(next)
}

/// One Strang step on a tensor grid.
pub fn nls_step_2d(w: &WaveState2D, law: &PressureLaw, cfg: &NlsConfig) -> Result<WaveState2D> {
    cfg.validate()?;
    check_eps(w.eps(), cfg)?;
    let mut next = w.clone();
    SplitStep::new_2d(w.grid(), law.clone(), cfg.eps, cfg.bc, cfg.dt)?.step_2d(&mut next)?;
    Ok(next)
}

fn check_eps(eps: f64, cfg: &NlsConfig) -> Result<()> {
    if eps != cfg.eps {
        return Err(Error::InvalidParameter(format!(
            "wave state has eps = {eps}, config has {}",
            cfg.eps
        )));
    }
    Ok(())
}

/// Recorded NLS snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSnapshot {
    pub wave: WaveState,
    pub mass: f64,
    pub energy: f64,
    /// Hydrodynamic functionals of the Madelung image; `None` at vacuum.
    pub hydro: Option<DiagnosticsRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveTrajectory {
    pub model: Model,
    pub config: NlsConfig,
    pub dt: f64,
    pub snapshots: Vec<WaveSnapshot>,
    /// First snapshot at which the density reached the floor.
    pub vacuum: Option<VacuumEvent>,
}

impl WaveTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.wave.t).collect()
    }

    pub fn first(&self) -> &WaveSnapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &WaveSnapshot {
        &self.snapshots[self.snapshots.len() - 1]
    }

    /// Madelung images of the snapshots preceding the first vacuum, with
    /// full diagnostics and residuals.
    pub fn hydrodynamic(&self) -> Result<Trajectory> {
        let states = self
            .snapshots
            .iter()
            .take_while(|s| s.hydro.is_some())
            .map(|s| madelung_forward(&s.wave, self.config.floor))
            .collect::<Result<Vec<FluidState>>>()?;
        let mut traj = Trajectory::from_states(
            states,
            self.model.clone(),
            self.config.hydro_boundary(),
            self.config.floor,
            self.dt,
        )?;
        traj.vacuum = self.vacuum.clone();
        Ok(traj)
    }
}

fn snapshot(
    w: &WaveState,
    prop: &mut SplitStep,
    model: &Model,
    cfg: &NlsConfig,
    weight: &Weight1D,
) -> Result<(WaveSnapshot, Option<VacuumEvent>)> {
    let grid = w.grid();
    let rho = w.density();
    let mass = integrate_values(grid, rho.values());
    let energy = integrate_values(grid, &prop.energy_density(w.psi()));
    let (hydro, vacuum) = if rho.min() > cfg.floor {
        let state = madelung_forward(w, cfg.floor)?;
        let rec = diagnostics::record(&state, model, &cfg.hydro_boundary(), weight, cfg.floor)?;
        (Some(rec), None)
    } else {
        let ev = diagnostics::vacuum_event(w.t, grid, rho.values(), cfg.floor);
        (None, Some(ev))
    };
    Ok((
        WaveSnapshot {
            wave: w.clone(),
            mass,
            energy,
            hydro,
        },
        vacuum,
    ))
}

/// Evolves `ic` to `cfg.t_final`.
///
/// Vacuum suspends the hydrodynamic diagnostics; the wave evolution goes on.
pub fn nls_run(ic: &WaveState, law: &PressureLaw, cfg: &NlsConfig) -> Result<WaveTrajectory> {
    cfg.validate()?;
    check_eps(ic.eps(), cfg)?;
    cfg.check_grid(ic.grid())?;
    let model = Model::new(law.clone(), cfg.eps * cfg.eps)?;
    let (steps, dt) = cfg.steps();
    let mut prop = SplitStep::new(ic.grid(), law.clone(), cfg.eps, cfg.bc, dt)?;
    let weight = Weight1D::parabolic(*ic.grid());

    let mut w = ic.clone();
    let mut snapshots = Vec::new();
    let mut vacuum = None;
    let (snap, ev) = snapshot(&w, &mut prop, &model, cfg, &weight)?;
    snapshots.push(snap);
    vacuum = vacuum.or(ev);
    for step in 1..=steps {
        prop.step(&mut w)?;
        w.t = ic.t + step as f64 * dt;
        if step % cfg.record_every == 0 || step == steps {
            let (snap, ev) = snapshot(&w, &mut prop, &model, cfg, &weight)?;
            snapshots.push(snap);
            vacuum = vacuum.or(ev);
        }
    }
    Ok(WaveTrajectory {
        model,
        config: cfg.clone(),
        dt,
        snapshots,
        vacuum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSnapshot2D {
    pub wave: WaveState2D,
    pub mass: f64,
    pub energy: f64,
    /// Madelung image; `None` at vacuum.
    pub hydro: Option<FluidState2D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveTrajectory2D {
    pub config: NlsConfig,
    pub dt: f64,
    pub snapshots: Vec<WaveSnapshot2D>,
    pub vacuum_time: Option<f64>,
}

fn snapshot_2d(w: &WaveState2D, prop: &mut SplitStep, floor: f64) -> Result<WaveSnapshot2D> {
    let rho = w.density();
    let mass = integrate_2d(&rho);
    let energy = integrate_2d(&Field2D::new(*w.grid(), prop.energy_density(w.psi()))?);
    let hydro = if rho.min() > floor {
        Some(madelung_forward_2d(w, floor)?)
    } else {
        None
    };
    Ok(WaveSnapshot2D {
        wave: w.clone(),
        mass,
        energy,
        hydro,
    })
}

/// Tensor-grid counterpart of [`nls_run`].
pub fn nls_run_2d(ic: &WaveState2D, law: &PressureLaw, cfg: &NlsConfig) -> Result<WaveTrajectory2D> {
    cfg.validate()?;
    check_eps(ic.eps(), cfg)?;
    let (steps, dt) = cfg.steps();
    let mut prop = SplitStep::new_2d(ic.grid(), law.clone(), cfg.eps, cfg.bc, dt)?;
    let mut w = ic.clone();
    let mut snapshots = vec![snapshot_2d(&w, &mut prop, cfg.floor)?];
    for step in 1..=steps {
        prop.step_2d(&mut w)?;
        w.t = ic.t + step as f64 * dt;
        if step % cfg.record_every == 0 || step == steps {
            snapshots.push(snapshot_2d(&w, &mut prop, cfg.floor)?);
        }
    }
    let vacuum_time = snapshots.iter().find(|s| s.hydro.is_none()).map(|s| s.wave.t);
    Ok(WaveTrajectory2D {
        config: cfg.clone(),
        dt,
        snapshots,
        vacuum_time,
    })
}
