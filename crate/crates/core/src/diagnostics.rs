//! Functionals and identity monitors of the one-dimensional theory.
//!
//! With `c = ε²/2` (one in the `ε² = 2` normalization) and `Q = √ρ_xx/√ρ`:
//!
//! ```text
//! E = ∫ ½ρu² + g(ρ) + c (√ρ_x)²         energy
//! K = ½u² + h(ρ) − c Q                  iso-energy (Bernoulli) field
//! B = u² + P(ρ)/ρ − c Q                 boundary momentum-flux indicator
//! I = ∫ a ρ,   a = (x − x_lo)(x_hi − x)   observable
//! M₀ = ∫ a' ρ_I u_I,   T* = −I₀/M₀ when M₀ < 0
//! ```
//!
//! Monitors only assert an inequality while its hypothesis holds; outside
//! those windows they report, they do not judge.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    cumulative_trapezoid_nonuniform, derivative, integrate, BoundaryKind, Grid1D, ScalarField,
};
use crate::physics::{check_floor, law_assumption_check, AssumptionReport, FluidState, Model};
use crate::qhd::Trajectory;

/// Per-snapshot functionals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub observable: f64,
    pub k0: f64,
    pub k1: f64,
    pub b0: f64,
    pub b1: f64,
    pub mass: f64,
    pub min_rho: f64,
    pub res_energy: f64,
    pub res_di: f64,
}

/// Observable weight with its exact or finite-difference gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight1D {
    pub values: ScalarField,
    pub gradient: ScalarField,
}

impl Weight1D {
    /// `a = (x − x_lo)(x_hi − x)`; on `[0, 1]` this is `x(1 − x)`.
    pub fn parabolic(grid: Grid1D) -> Self {
        let (lo, hi) = (grid.x_lo(), grid.x_hi());
        let values = ScalarField::from_fn(grid, |x| ((x - lo) * (hi - x)).max(0.0))
            .expect("finite weight");
        let gradient = ScalarField::from_fn(grid, |x| lo + hi - 2.0 * x).expect("finite gradient");
        Self { values, gradient }
    }

    /// Gradient by one-sided-closed central differences (exact for
    /// quadratics). Periodic grids are differenced as bounded ones since the
    /// weight itself is not periodic.
    pub fn from_field(values: ScalarField) -> Result<Self> {
        let grid = *values.grid();
        let g = crate::numerics::derivative_values(values.values(), grid.dx(), false, 1)?;
        Ok(Self {
            values,
            gradient: ScalarField::new(grid, g)?,
        })
    }
}

/// First time the density reached the floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VacuumEvent {
    pub t: f64,
    pub x: f64,
    pub min_rho: f64,
    /// Fraction of grid points below `10 · floor`.
    pub fraction_near_vacuum: f64,
}

pub(crate) fn vacuum_event(t: f64, grid: &Grid1D, rho: &[f64], floor: f64) -> VacuumEvent {
    let (i, min) = rho
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let near = rho.iter().filter(|&&r| r < 10.0 * floor).count();
    VacuumEvent {
        t,
        x: grid.x(i),
        min_rho: min,
        fraction_near_vacuum: near as f64 / rho.len() as f64,
    }
}

fn derivative_bc(grid: &Grid1D, bc: &BoundaryKind) -> BoundaryKind {
    if grid.is_periodic() {
        BoundaryKind::Periodic
    } else if bc.is_periodic() {
        BoundaryKind::Monitored { c1: 0.0, c2: 0.0 }
    } else {
        *bc
    }
}

/// Pointwise ingredients shared by all functionals.
struct Fields {
    w: Vec<f64>,
    w_x: Vec<f64>,
    q: Vec<f64>,
}

impl Fields {
    fn new(s: &FluidState, bc: &BoundaryKind, floor: f64) -> Result<Self> {
        check_floor(&s.rho, floor)?;
        let bc = derivative_bc(s.grid(), bc);
        let w = s.rho.map(f64::sqrt)?;
        let w_x = derivative(&w, 1, &bc)?.into_values();
        let w_xx = derivative(&w, 2, &bc)?.into_values();
        let q = w_xx.iter().zip(w.values()).map(|(a, b)| a / b).collect();
        Ok(Self {
            w: w.into_values(),
            w_x,
            q,
        })
    }
}

/// Index of the right endpoint; periodic grids wrap to the first sample.
fn hi_index(grid: &Grid1D) -> usize {
    if grid.is_periodic() {
        0
    } else {
        grid.len() - 1
    }
}

pub fn energy(s: &FluidState, model: &Model, bc: &BoundaryKind, floor: f64) -> Result<f64> {
    let f = Fields::new(s, bc, floor)?;
    Ok(energy_from(s, model, &f))
}

fn energy_from(s: &FluidState, model: &Model, f: &Fields) -> f64 {
    let c = model.quantum();
    let dens: Vec<f64> = (0..s.rho.len())
        .map(|i| {
            let r = s.rho.values()[i];
            let u = s.u.values()[i];
            0.5 * r * u * u + model.law.primitive(r) + c * f.w_x[i] * f.w_x[i]
        })
        .collect();
    crate::numerics::integrate_values(s.grid(), &dens)
}

/// Iso-energy field `K = ½u² + h(ρ) − c Q`.
pub fn iso_energy_k(s: &FluidState, model: &Model, bc: &BoundaryKind, floor: f64) -> Result<ScalarField> {
    let f = Fields::new(s, bc, floor)?;
    ScalarField::new(*s.grid(), k_from(s, model, &f))
}

fn k_from(s: &FluidState, model: &Model, f: &Fields) -> Vec<f64> {
    let c = model.quantum();
    s.rho
        .values()
        .iter()
        .zip(s.u.values())
        .zip(&f.q)
        .map(|((&r, &u), &q)| 0.5 * u * u + model.law.enthalpy(r) - c * q)
        .collect()
}

fn b_at(s: &FluidState, model: &Model, f: &Fields, i: usize) -> f64 {
    let r = s.rho.values()[i];
    let u = s.u.values()[i];
    u * u + model.law.pressure(r) / r - model.quantum() * f.q[i]
}

/// `B = u² + P/ρ − c Q` at the left and right ends.
pub fn boundary_indicator_b(s: &FluidState, model: &Model, bc: &BoundaryKind, floor: f64) -> Result<(f64, f64)> {
    let f = Fields::new(s, bc, floor)?;
    Ok((b_at(s, model, &f, 0), b_at(s, model, &f, hi_index(s.grid()))))
}

/// `I = ∫ weight · ρ`.
pub fn observable_i(s: &FluidState, weight: &ScalarField) -> Result<f64> {
    if weight.grid() != s.grid() {
        return Err(Error::GridMismatch("weight and state grids differ"));
    }
    let min = weight.min();
    if min < 0.0 {
        return Err(Error::NegativeWeight(min));
    }
    Ok(integrate(&weight.zip_with(&s.rho, |a, r| a * r)?))
}

fn weighted_momentum(rho: &ScalarField, u: &ScalarField, weight: &Weight1D) -> Result<f64> {
    let flux = rho.zip_with(u, |r, v| r * v)?;
    Ok(integrate(&flux.zip_with(&weight.gradient, |m, g| m * g)?))
}

/// Snapshot record; residual columns are filled by [`attach_residuals`].
pub fn record(s: &FluidState, model: &Model, bc: &BoundaryKind, weight: &Weight1D, floor: f64) -> Result<DiagnosticsRecord> {
    let f = Fields::new(s, bc, floor)?;
    let k = k_from(s, model, &f);
    let hi = hi_index(s.grid());
    Ok(DiagnosticsRecord {
        t: s.t,
        energy: energy_from(s, model, &f),
        observable: observable_i(s, &weight.values)?,
        k0: k[0],
        k1: k[hi],
        b0: b_at(s, model, &f, 0),
        b1: b_at(s, model, &f, hi),
        mass: integrate(&s.rho),
        min_rho: s.rho.min(),
        res_energy: 0.0,
        res_di: 0.0,
    })
}

/// A closed time interval spanned by consecutive flagged snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

pub fn windows(times: &[f64], flags: &[bool]) -> Vec<Window> {
    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    let mut last = f64::NAN;
    for (&t, &f) in times.iter().zip(flags) {
        match (f, open) {
            (true, None) => open = Some(t),
            (false, Some(s)) => {
                out.push(Window { start: s, end: last });
                open = None;
            }
            _ => {}
        }
        last = t;
    }
    if let Some(s) = open {
        out.push(Window { start: s, end: last });
    }
    out
}

/// Number of leading snapshots over which every flag holds.
fn initial_run(flags: &[bool]) -> usize {
    flags.iter().take_while(|&&f| f).count()
}

/// One envelope comparison `I(t) ≤ envelope(t) + tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    pub t: f64,
    pub observable: f64,
    pub envelope: f64,
    /// Hypothesis held on all of `[0, t]`.
    pub hypothesis_held: bool,
    /// `None` when the hypothesis did not hold and nothing was asserted.
    pub satisfied: Option<bool>,
    /// Inside a window starting at `tₐ`: `I(tₐ) + (t − tₐ) ∫a'ρu(tₐ)`.
    pub restart_envelope: Option<f64>,
    pub restart_satisfied: Option<bool>,
}

/// Initial-data blow-up prediction, completed by [`theorem2_monitor`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub i0: f64,
    pub m0: f64,
    pub t_star: Option<f64>,
    pub tolerance: f64,
    pub hypothesis_windows: Vec<Window>,
    pub checks: Vec<EnvelopeCheck>,
    pub vacuum_time: Option<f64>,
}

impl BlowupReport {
    pub fn hypothesis_ever_held(&self) -> bool {
        !self.hypothesis_windows.is_empty()
    }

    /// False only if an asserted envelope check failed.
    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn violations(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.satisfied == Some(false) || c.restart_satisfied == Some(false))
            .count()
    }

    /// Number of asserted comparisons, both kinds.
    pub fn asserted(&self) -> usize {
        self.checks
            .iter()
            .map(|c| c.satisfied.is_some() as usize + c.restart_satisfied.is_some() as usize)
            .sum()
    }
}

/// Envelope tolerance `1e−3 · (1 + |I₀|)`.
pub fn envelope_tolerance(i0: f64) -> f64 {
    1e-3 * (1.0 + i0.abs())
}

/// `I₀`, `M₀ = ∫ a' ρ_I u_I` and `T* = −I₀/M₀` when `M₀ < 0`.
pub fn initial_data_report(rho_i: &ScalarField, u_i: &ScalarField, weight: &Weight1D) -> Result<BlowupReport> {
    if rho_i.min() <= 0.0 {
        return Err(Error::NegativeDensity(rho_i.min()));
    }
    let state = FluidState::new(0.0, rho_i.clone(), u_i.clone())?;
    let i0 = observable_i(&state, &weight.values)?;
    let mut m0 = weighted_momentum(rho_i, u_i, weight)?;
    let scale = integrate(&rho_i.zip_with(u_i, |r, v| (r * v).abs())?)
        * weight.gradient.max_abs();
    if m0.abs() <= 1e-13 * scale {
        m0 = 0.0;
    }
    Ok(BlowupReport {
        i0,
        m0,
        t_star: (m0 < 0.0).then(|| -i0 / m0),
        tolerance: envelope_tolerance(i0),
        hypothesis_windows: Vec::new(),
        checks: Vec::new(),
        vacuum_time: None,
    })
}

/// Three-point derivative of samples at possibly non-uniform times.
pub fn time_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => {
            let d = (y[1] - y[0]) / (t[1] - t[0]);
            vec![d, d]
        }
        _ => {
            let mut out = vec![0.0; n];
            for k in 1..n - 1 {
                let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
                out[k] = -h2 / (h1 * (h1 + h2)) * y[k - 1]
                    + (h2 - h1) / (h1 * h2) * y[k]
                    + h1 / (h2 * (h1 + h2)) * y[k + 1];
            }
            let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
            out[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y[0] + (h1 + h2) / (h1 * h2) * y[1]
                - h1 / (h2 * (h1 + h2)) * y[2];
            let (h1, h2) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
            out[n - 1] = h2 / (h1 * (h1 + h2)) * y[n - 3] - (h1 + h2) / (h1 * h2) * y[n - 2]
                + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * y[n - 1];
            out
        }
    }
}

/// `r(t) = E(t) − E(0) + ∫₀ᵗ (uρK)(x_hi, s) − (uρK)(x_lo, s) ds`.
///
/// Periodic runs have no boundary term.
pub fn energy_balance_residual(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let times = traj.times();
    let mut energies = Vec::with_capacity(times.len());
    let mut fluxes = Vec::with_capacity(times.len());
    let hi = hi_index(&traj.grid);
    for snap in &traj.snapshots {
        let s = &snap.state;
        let f = Fields::new(s, &traj.bc, traj.floor)?;
        energies.push(energy_from(s, &traj.model, &f));
        if traj.grid.is_periodic() {
            fluxes.push(0.0);
        } else {
            let k = k_from(s, &traj.model, &f);
            let at = |i: usize| s.u.values()[i] * s.rho.values()[i] * k[i];
            fluxes.push(at(hi) - at(0));
        }
    }
    let acc = cumulative_trapezoid_nonuniform(&times, &fluxes);
    Ok(times
        .iter()
        .zip(&energies)
        .zip(&acc)
        .map(|((&t, &e), &a)| (t, e - energies[0] + a))
        .collect())
}

/// Residual of the second-moment identity for `I = ∫ a ρ`:
///
/// ```text
/// dI/dt = ∫a'ρ_I u_I − 2∫₀ᵗ∫(ρu² + P + 2c(√ρ_x)²) + L ∫₀ᵗ [ρB + c(√ρ_x)²](x_lo) + [ρB + c(√ρ_x)²](x_hi)
///         + 2c ∫₀ᵗ [√ρ √ρ_x]_{x_lo}^{x_hi}
/// ```
///
/// With zero density slope at the ends the `√ρ_x` terms vanish and on
/// `[0, 1]` this is the identity with boundary terms `∫₀ᵗ ρB`. The left side
/// is a three-point time derivative of the recorded `I`.
pub fn observable_identity_residual(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let grid = traj.grid;
    let weight = Weight1D::parabolic(grid);
    let c = traj.model.quantum();
    let len = grid.length();
    let hi = hi_index(&grid);
    let times = traj.times();

    let mut obs = Vec::with_capacity(times.len());
    let mut bulk = Vec::with_capacity(times.len());
    let mut edge = Vec::with_capacity(times.len());
    for snap in &traj.snapshots {
        let s = &snap.state;
        let f = Fields::new(s, &traj.bc, traj.floor)?;
        obs.push(observable_i(s, &weight.values)?);
        let dens: Vec<f64> = (0..s.rho.len())
            .map(|i| {
                let r = s.rho.values()[i];
                let u = s.u.values()[i];
                r * u * u + traj.model.law.pressure(r) + 2.0 * c * f.w_x[i] * f.w_x[i]
            })
            .collect();
        bulk.push(crate::numerics::integrate_values(&grid, &dens));
        let flux = |i: usize| s.rho.values()[i] * b_at(s, &traj.model, &f, i) + c * f.w_x[i] * f.w_x[i];
        let slope = |i: usize| f.w[i] * f.w_x[i];
        edge.push(len * (flux(0) + flux(hi)) + 2.0 * c * (slope(hi) - slope(0)));
    }
    let first = &traj.first().state;
    let a0 = weighted_momentum(&first.rho, &first.u, &weight)?;
    let lhs = time_derivative(&times, &obs);
    let bulk_acc = cumulative_trapezoid_nonuniform(&times, &bulk);
    let edge_acc = cumulative_trapezoid_nonuniform(&times, &edge);
    Ok((0..times.len())
        .map(|k| (times[k], lhs[k] - (a0 - 2.0 * bulk_acc[k] + edge_acc[k])))
        .collect())
}

/// Fills `res_energy` and `res_di` on every record.
pub fn attach_residuals(traj: &mut Trajectory) -> Result<()> {
    let re = energy_balance_residual(traj)?;
    let ri = observable_identity_residual(traj)?;
    for ((snap, (_, e)), (_, i)) in traj.snapshots.iter_mut().zip(re).zip(ri) {
        snap.record.res_energy = e;
        snap.record.res_di = i;
    }
    Ok(())
}

/// Completes `report` along `traj`: hypothesis windows (`B₀ ≤ 0` and
/// `B₁ ≤ 0`) and two envelope checks.
///
/// * `I(t) ≤ I₀ + M₀t + tol` at snapshots where the hypothesis has held
///   since the start of the run and `M₀ < 0`; the bound integrates the
///   hypothesis over `[0, t]`.
/// * In every window `[tₐ, t_b]`, `I(t) ≤ I(tₐ) + (t − tₐ) ∫a'ρu(tₐ) + tol`:
///   with both indicators nonpositive `I` is concave, so it stays below its
///   tangent at the window start.
pub fn theorem2_monitor(traj: &Trajectory, report: &BlowupReport) -> Result<BlowupReport> {
    let mut out = report.clone();
    let times = traj.times();
    let weight = Weight1D::parabolic(traj.grid);
    let flags: Vec<bool> = traj
        .snapshots
        .iter()
        .map(|s| s.record.b0 <= 0.0 && s.record.b1 <= 0.0)
        .collect();
    out.hypothesis_windows = windows(&times, &flags);
    let held = initial_run(&flags);
    let t0 = traj.first().record.t;
    let mut tangent: Option<(f64, f64, f64)> = None;
    let mut checks = Vec::with_capacity(flags.len());
    for (k, s) in traj.snapshots.iter().enumerate() {
        let envelope = report.i0 + report.m0 * (s.record.t - t0);
        let hypothesis_held = k < held;
        let asserted = hypothesis_held && report.m0 < 0.0;
        if !flags[k] {
            tangent = None;
        } else if tangent.is_none() {
            let slope = weighted_momentum(&s.state.rho, &s.state.u, &weight)?;
            tangent = Some((s.record.t, s.record.observable, slope));
        }
        let restart_envelope = tangent.map(|(ta, ia, ma)| ia + ma * (s.record.t - ta));
        checks.push(EnvelopeCheck {
            t: s.record.t,
            observable: s.record.observable,
            envelope,
            hypothesis_held,
            satisfied: asserted.then(|| s.record.observable <= envelope + report.tolerance),
            restart_envelope,
            restart_satisfied: restart_envelope.map(|e| s.record.observable <= e + report.tolerance),
        });
    }
    out.checks = checks;
    out.vacuum_time = traj.vacuum.as_ref().map(|v| v.t);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem4Params {
    pub alpha: f64,
    pub m: f64,
    pub u0: f64,
    pub u1: f64,
    pub lambda: f64,
}

impl Theorem4Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) || !(self.m > 0.0) || !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter(
                "require alpha > 1, M > 0, lambda > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn umax(&self) -> f64 {
        self.u0.abs().max(self.u1.abs())
    }
}

/// Case split of the envelope argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem4Branch {
    /// `u₀ = u₁ = 0`: `I₀ + t(M₀ − 2E₀ min(λ,2))`.
    ZeroBoundaryVelocity,
    /// `M₀ < 0`: `I₀ + M₀t`.
    NegativeMomentum,
    /// `M₀ ≥ 0` and some `∫₀ᵗ ρ(end, s) ds ≥ 2M₀/max²`: `I₀ − M₀t(2α − 2)`.
    LargeBoundaryMass,
    /// Otherwise: `I₀ + M₀t − min(λ,2) t² (E₀ − 4M₀M/max)`.
    SmallBoundaryMass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem4Check {
    pub t: f64,
    pub branch: Theorem4Branch,
    pub observable: f64,
    pub envelope: f64,
    pub hypothesis_held: bool,
    pub satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem4Report {
    pub params: Theorem4Params,
    pub assumptions: AssumptionReport,
    pub i0: f64,
    pub m0: f64,
    pub e0: f64,
    /// `max_t |K(0,t) − K(1,t)|`.
    pub max_k_mismatch: f64,
    /// Windows where `−M ≤ K(0,t) ≤ −α max²(|u₀|,|u₁|)`.
    pub condition_windows: Vec<Window>,
    /// The energy threshold of the final branch reached, if that branch has one.
    pub energy_threshold: Option<f64>,
    pub energy_threshold_met: Option<bool>,
    pub tolerance: f64,
    pub checks: Vec<Theorem4Check>,
}

impl Theorem4Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied != Some(false))
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| c.satisfied == Some(false)).count()
    }
}

/// Monitor for the Dirichlet-velocity configuration.
pub fn theorem4_monitor(traj: &Trajectory, p: &Theorem4Params) -> Result<Theorem4Report> {
    p.validate()?;
    let rho_max = traj
        .snapshots
        .iter()
        .map(|s| s.state.rho.max())
        .fold(0.0, f64::max);
    let assumptions = law_assumption_check(&traj.model.law, rho_max, p.lambda)?;
    if !assumptions.all_pass() {
        return Err(Error::Assumption(format!(
            "inf P/g = {}, sup (P/ρ − h) = {}, enthalpy mismatch = {}",
            assumptions.inf_pressure_ratio, assumptions.sup_enthalpy_gap, assumptions.max_enthalpy_mismatch
        )));
    }
    let weight = Weight1D::parabolic(traj.grid);
    let first = traj.first();
    let i0 = first.record.observable;
    let e0 = first.record.energy;
    let m0 = weighted_momentum(&first.state.rho, &first.state.u, &weight)?;
    let umax = p.umax();
    let lam = p.lambda.min(2.0);
    let tol = envelope_tolerance(i0);

    let times = traj.times();
    let t0 = times[0];
    let max_k_mismatch = traj
        .snapshots
        .iter()
        .map(|s| (s.record.k0 - s.record.k1).abs())
        .fold(0.0, f64::max);
    let flags: Vec<bool> = traj
        .snapshots
        .iter()
        .map(|s| -p.m <= s.record.k0 && s.record.k0 <= -p.alpha * umax * umax)
        .collect();
    let held = initial_run(&flags);

    let hi = hi_index(&traj.grid);
    let left: Vec<f64> = traj.snapshots.iter().map(|s| s.state.rho.values()[0]).collect();
    let right: Vec<f64> = traj.snapshots.iter().map(|s| s.state.rho.values()[hi]).collect();
    let left_acc = cumulative_trapezoid_nonuniform(&times, &left);
    let right_acc = cumulative_trapezoid_nonuniform(&times, &right);

    let mut checks = Vec::with_capacity(times.len());
    let mut last_branch = Theorem4Branch::ZeroBoundaryVelocity;
    for (k, s) in traj.snapshots.iter().enumerate() {
        let t = times[k] - t0;
        let (branch, envelope) = if umax == 0.0 {
            (Theorem4Branch::ZeroBoundaryVelocity, i0 + t * (m0 - 2.0 * e0 * lam))
        } else if m0 < 0.0 {
            (Theorem4Branch::NegativeMomentum, i0 + m0 * t)
        } else {
            let threshold = 2.0 * m0 / (umax * umax);
            if left_acc[k] >= threshold || right_acc[k] >= threshold {
                (Theorem4Branch::LargeBoundaryMass, i0 - m0 * t * (2.0 * p.alpha - 2.0))
            } else {
                (
                    Theorem4Branch::SmallBoundaryMass,
                    i0 + m0 * t - lam * t * t * (e0 - 4.0 * m0 * p.m / umax),
                )
            }
        };
        last_branch = branch;
        let hypothesis_held = k < held;
        checks.push(Theorem4Check {
            t: times[k],
            branch,
            observable: s.record.observable,
            envelope,
            hypothesis_held,
            satisfied: hypothesis_held.then(|| s.record.observable <= envelope + tol),
        });
    }
    let energy_threshold = match last_branch {
        Theorem4Branch::ZeroBoundaryVelocity => Some(m0 / (2.0 * lam)),
        Theorem4Branch::SmallBoundaryMass => Some(4.0 * m0 * p.m / umax),
        _ => None,
    };
    Ok(Theorem4Report {
        params: *p,
        assumptions,
        i0,
        m0,
        e0,
        max_k_mismatch,
        condition_windows: windows(&times, &flags),
        energy_threshold,
        energy_threshold_met: energy_threshold.map(|th| e0 >= th),
        tolerance: tol,
        checks,
    })
}

/// First state whose density reaches `floor`.
pub fn blowup_detect(states: &[FluidState], floor: f64) -> Option<VacuumEvent> {
    states
        .iter()
        .find(|s| s.rho.min() <= floor)
        .map(|s| vacuum_event(s.t, s.grid(), s.rho.values(), floor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{PressureLaw, VACUUM_FLOOR};
    use crate::qhd::{qhd_run, QhdConfig};

    fn unit(n: usize) -> Grid1D {
        Grid1D::bounded(0.0, 1.0, n).unwrap()
    }

    fn model(law: PressureLaw) -> Model {
        Model::unit_quantum(law).unwrap()
    }

    fn state(g: Grid1D, rho: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> FluidState {
        FluidState::new(0.0, ScalarField::from_fn(g, rho).unwrap(), ScalarField::from_fn(g, u).unwrap())
            .unwrap()
    }

    const MON: BoundaryKind = BoundaryKind::Monitored { c1: 0.0, c2: 0.0 };

    #[test]
    fn energy_examples() {
        let g2 = model(PressureLaw::power(2.0).unwrap());
        let s = state(unit(33), |_| 1.0, |_| 0.0);
        assert!((energy(&s, &g2, &MON, VACUUM_FLOOR).unwrap() - 1.0).abs() < 1e-14);
        let s = state(unit(33), |_| 1.0, |_| 2.0);
        assert!((energy(&s, &g2, &MON, VACUUM_FLOOR).unwrap() - 3.0).abs() < 1e-14);

        let free = model(PressureLaw::free());
        let exact = (1f64.exp().powi(2) - 1.0) / 2.0;
        let err = |n| {
            let s = state(unit(n), |x| (2.0 * x).exp(), |_| 0.0);
            (energy(&s, &free, &MON, VACUUM_FLOOR).unwrap() - exact).abs()
        };
        assert!(err(201) < 1e-4);
        assert!(err(201) / err(401) > 3.5);
    }

    #[test]
    fn k_and_b_on_constant_states() {
        let law = PressureLaw::power(2.0).unwrap();
        let m = model(law.clone());
        let s = state(unit(17), |_| 1.0, |_| 0.0);
        let k = iso_energy_k(&s, &m, &MON, VACUUM_FLOOR).unwrap();
        assert!(k.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert_eq!(boundary_indicator_b(&s, &m, &MON, VACUUM_FLOOR).unwrap(), (1.0, 1.0));

        let (r0, u0) = (1.7, -0.4);
        let s = state(unit(17), |_| r0, |_| u0);
        let k = iso_energy_k(&s, &m, &MON, VACUUM_FLOOR).unwrap();
        let expect = 0.5 * u0 * u0 + law.enthalpy(r0);
        assert!(k.values().iter().all(|v| (v - expect).abs() < 1e-9));
        let (b0, b1) = boundary_indicator_b(&s, &m, &MON, VACUUM_FLOOR).unwrap();
        let expect = u0 * u0 + law.pressure(r0) / r0;
        assert!((b0 - expect).abs() < 1e-9 && (b1 - expect).abs() < 1e-9);
    }

    #[test]
    fn b_minus_k_is_pressure_gap() {
        let law = PressureLaw::power(2.0).unwrap();
        let m = model(law.clone());
        let s = state(unit(65), |x| 1.0 + 0.3 * (3.0 * x).sin(), |x| x - 0.2);
        let k = iso_energy_k(&s, &m, &MON, VACUUM_FLOOR).unwrap();
        let (b0, b1) = boundary_indicator_b(&s, &m, &MON, VACUUM_FLOOR).unwrap();
        for (b, i) in [(b0, 0), (b1, 64)] {
            let r = s.rho.values()[i];
            let u = s.u.values()[i];
            let gap = b - (k.values()[i] + 0.5 * u * u);
            assert!((gap - (law.pressure(r) / r - law.enthalpy(r))).abs() < 1e-9);
            assert!(gap <= 0.0);
        }
    }

    #[test]
    fn observable_examples() {
        let g = unit(1025);
        let w = Weight1D::parabolic(g);
        let s = state(g, |_| 1.0, |_| 0.0);
        assert!((observable_i(&s, &w.values).unwrap() - 1.0 / 6.0).abs() < 1e-6);
        let s = state(g, |x| 6.0 * x * (1.0 - x), |_| 0.0);
        assert!((observable_i(&s, &w.values).unwrap() - 0.2).abs() < 1e-6);
        let s2 = state(g, |x| 18.0 * x * (1.0 - x), |_| 0.0);
        let (a, b) = (observable_i(&s, &w.values).unwrap(), observable_i(&s2, &w.values).unwrap());
        assert!((b - 3.0 * a).abs() < 1e-15);
        let neg = ScalarField::from_fn(g, |x| x - 0.5).unwrap();
        assert!(matches!(observable_i(&s, &neg), Err(Error::NegativeWeight(_))));
    }

    #[test]
    fn initial_report_examples() {
        let g = unit(1025);
        let w = Weight1D::parabolic(g);
        let one = ScalarField::constant(g, 1.0).unwrap();
        let r = initial_data_report(&one, &ScalarField::constant(g, 0.7).unwrap(), &w).unwrap();
        assert!(r.m0.abs() < 1e-14 && r.t_star.is_none());
        for shift in [0.5, 0.0] {
            let u = ScalarField::from_fn(g, |x| x - shift).unwrap();
            let r = initial_data_report(&one, &u, &w).unwrap();
            assert!((r.i0 - 1.0 / 6.0).abs() < 1e-6);
            assert!((r.m0 + 1.0 / 6.0).abs() < 1e-6);
            assert!((r.t_star.unwrap() - 1.0).abs() < 2e-5);
        }
    }

    #[test]
    fn windows_from_flags() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let w = windows(&t, &[true, true, false, true, true]);
        assert_eq!(w, vec![Window { start: 0.0, end: 1.0 }, Window { start: 3.0, end: 4.0 }]);
        assert!(windows(&t, &[false; 5]).is_empty());
        assert_eq!(initial_run(&[true, true, false, true]), 2);
    }

    #[test]
    fn time_derivative_is_exact_on_quadratics() {
        let t = [0.0, 0.1, 0.3, 0.35, 0.6];
        let y: Vec<f64> = t.iter().map(|s| 2.0 * s * s - s + 1.0).collect();
        for (s, d) in t.iter().zip(time_derivative(&t, &y)) {
            assert!((d - (4.0 * s - 1.0)).abs() < 1e-12);
        }
    }

    fn constant_traj(u: f64) -> Trajectory {
        let g = unit(33);
        let bc = BoundaryKind::NeumannDensityDirichletVelocity { u0: u, u1: u };
        let cfg = QhdConfig::new(bc, 0.05).with_record_every(20);
        qhd_run(&state(g, |_| 1.0, |_| u), &model(PressureLaw::power(2.0).unwrap()), &cfg).unwrap()
    }

    #[test]
    fn residuals_vanish_on_constant_state() {
        let traj = constant_traj(0.0);
        assert!(traj.snapshots.len() > 3);
        for s in &traj.snapshots {
            assert!(s.record.res_energy.abs() < 1e-13);
            assert!(s.record.res_di.abs() < 1e-12, "{}", s.record.res_di);
        }
    }

    #[test]
    fn theorem2_on_constant_state_is_vacuous() {
        let traj = constant_traj(0.0);
        let w = Weight1D::parabolic(traj.grid);
        let first = &traj.first().state;
        let report = initial_data_report(&first.rho, &first.u, &w).unwrap();
        let done = theorem2_monitor(&traj, &report).unwrap();
        assert!(!done.hypothesis_ever_held());
        assert!(done.checks.iter().all(|c| c.satisfied.is_none() && c.restart_satisfied.is_none()));
        assert!(done.passed());
    }

    #[test]
    fn theorem4_constant_state_and_zero_branch() {
        let traj = constant_traj(0.0);
        let p = Theorem4Params { alpha: 2.0, m: 10.0, u0: 0.0, u1: 0.0, lambda: 1.0 };
        let r = theorem4_monitor(&traj, &p).unwrap();
        assert_eq!(r.max_k_mismatch, 0.0);
        assert!(r.condition_windows.is_empty());
        for c in &r.checks {
            assert_eq!(c.branch, Theorem4Branch::ZeroBoundaryVelocity);
            let expect = r.i0 + c.t * (r.m0 - 2.0 * r.e0 * 1.0);
            assert_eq!(c.envelope, expect);
            assert!(c.satisfied.is_none());
        }
        let bad = Theorem4Params { lambda: 1.5, ..p };
        assert!(matches!(theorem4_monitor(&traj, &bad), Err(Error::Assumption(_))));
    }

    #[test]
    fn blowup_detect_synthetic() {
        let g = unit(17);
        let floor = 1e-6;
        let states: Vec<FluidState> = (0..=100)
            .map(|k| {
                let t = k as f64 / 100.0;
                let rho0 = |x: f64| 1.0 + x;
                FluidState::new(
                    t,
                    ScalarField::from_fn(g, |x| (1.0 - t) * rho0(x) + t * floor / 2.0).unwrap(),
                    ScalarField::constant(g, 0.0).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let ev = blowup_detect(&states, floor).unwrap();
        // min at x = 0: (1 − t) + t·floor/2 ≤ floor ⇔ t ≥ (1 − floor)/(1 − floor/2)
        let t_cross = (1.0 - floor) / (1.0 - floor / 2.0);
        assert!(ev.t >= t_cross && ev.t - t_cross < 0.01 + 1e-12);
        assert_eq!(ev.x, 0.0);
        assert!(blowup_detect(&states[..50], floor).is_none());
    }
}
