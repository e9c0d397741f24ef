//! Built-in verification suites at pinned desk-scale parameters.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{energy_balance_residual, observable_identity_residual};
use crate::numerics::{derivative, integrate, BoundaryKind, Field2D, Grid1D, Grid2D, ScalarField};
use crate::physics::{
    law_assumption_check, madelung_forward, madelung_inverse, FluidState, FluidState2D, MadelungGauge, Model,
    PressureLaw, VACUUM_FLOOR,
};
use crate::qhd::{qhd_run, QhdConfig};
use crate::stationary::{stationary_residual, stationary_shoot, StationaryParams};
use crate::weights::{
    dirichlet_integrand, make_weight, verify_weight_seeded, DomainDescriptor, WeightField, WeightFunction,
    DEFAULT_SAMPLES, WEIGHT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Numerics,
    Physics,
    Identities,
    Weights,
    Stationary,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Numerics => "numerics",
            Suite::Physics => "physics",
            Suite::Identities => "identities",
            Suite::Weights => "weights",
            Suite::Stationary => "stationary",
        }
    }
}

/// One pass/fail entry: `value ≤ threshold` when `upper`, else `≥`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCheck {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub upper: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<SuiteCheck>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

struct Checks {
    suite: &'static str,
    out: Vec<SuiteCheck>,
}

impl Checks {
    fn new(suite: &'static str) -> Self {
        Self { suite, out: Vec::new() }
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value, threshold, true);
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value, threshold, false);
    }

    fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name.into(), ok as u8 as f64, 1.0, false);
    }

    fn push(&mut self, name: String, value: f64, threshold: f64, upper: bool) {
        let passed = if upper { value <= threshold } else { value >= threshold };
        self.out.push(SuiteCheck {
            suite: self.suite,
            name,
            value,
            threshold,
            upper,
            passed,
        });
    }

    /// Records an error as a failed check.
    fn fallible(&mut self, name: &str, f: impl FnOnce(&mut Self) -> crate::Result<()>) {
        if let Err(e) = f(self) {
            self.push(format!("{name}: {e}"), f64::NAN, 0.0, true);
        }
    }
}

/// Runs `suite` (every suite for [`Suite::All`]).
pub fn verify_suite(suite: Suite, seed: u64) -> SuiteReport {
    let parts: Vec<Suite> = match suite {
        Suite::All => vec![Suite::Numerics, Suite::Physics, Suite::Identities, Suite::Weights, Suite::Stationary],
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in parts {
        let mut c = Checks::new(s.name());
        match s {
            Suite::Numerics => numerics(&mut c),
            Suite::Physics => physics(&mut c),
            Suite::Identities => identities(&mut c),
            Suite::Weights => weights(&mut c, seed),
            Suite::Stationary => stationary(&mut c),
            Suite::All => unreachable!(),
        }
        checks.extend(c.out);
    }
    SuiteReport {
        suite: suite.name(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn derivative_error(grid: Grid1D, bc: &BoundaryKind, order: usize, f: fn(f64) -> f64, df: fn(f64) -> f64) -> crate::Result<f64> {
    let d = derivative(&ScalarField::from_fn(grid, f)?, order, bc)?;
    Ok(grid
        .points()
        .iter()
        .zip(d.values())
        .map(|(&x, v)| (v - df(x)).abs())
        .fold(0.0, f64::max))
}

fn numerics(c: &mut Checks) {
    c.fallible("periodic_derivative_order", |c| {
        let e = |n| derivative_error(Grid1D::periodic(0.0, 2.0 * PI, n)?, &BoundaryKind::Periodic, 1, f64::sin, f64::cos);
        c.at_least("periodic_first_derivative_ratio", e(32)? / e(64)?, 3.5);
        Ok(())
    });
    c.fallible("bounded_derivative_order", |c| {
        let bc = BoundaryKind::Monitored { c1: 0.0, c2: 0.0 };
        let e = |n| derivative_error(Grid1D::bounded(0.0, 1.0, n)?, &bc, 2, f64::exp, f64::exp);
        c.at_least("bounded_second_derivative_ratio", e(33)? / e(65)?, 3.5);
        Ok(())
    });
    c.fallible("quadrature", |c| {
        let g = Grid1D::periodic(0.0, 2.0 * PI, 16)?;
        let v = integrate(&ScalarField::from_fn(g, |x| x.cos().powi(2))?);
        c.at_most("periodic_trapezoid_exact", (v - PI).abs(), 1e-12);
        let g = Grid1D::bounded(0.0, 1.0, 1025)?;
        let v = integrate(&ScalarField::from_fn(g, |x| x * (1.0 - x))?);
        c.at_most("bounded_trapezoid_parabola", (v - 1.0 / 6.0).abs(), 1e-6);
        Ok(())
    });
}

fn physics(c: &mut Checks) {
    c.fallible("power_law", |c| {
        let law = PressureLaw::power(2.0)?;
        let rho = 0.7;
        let err = (law.pressure(rho) - rho * rho).abs()
            + (law.enthalpy(rho) - 2.0 * rho).abs()
            + (law.primitive(rho) - rho * rho).abs();
        c.at_most("gamma2_closed_forms", err, 1e-14);
        let r = law_assumption_check(&law, 2.0, 1.0)?;
        c.holds("gamma2_assumptions_lambda1", r.all_pass());
        c.at_most("gamma2_enthalpy_gap", r.sup_enthalpy_gap, 0.0);
        Ok(())
    });
    c.fallible("madelung_round_trip", |c| {
        let g = Grid1D::periodic(0.0, 2.0 * PI, 1024)?;
        let f = FluidState::new(
            0.0,
            ScalarField::from_fn(g, |x| 1.0 + 0.1 * x.cos())?,
            ScalarField::from_fn(g, |x| 0.05 * x.sin())?,
        )?;
        let w = madelung_inverse(&f, 1.0, MadelungGauge::default(), VACUUM_FLOOR)?;
        let back = madelung_forward(&w, VACUUM_FLOOR)?;
        c.at_most("round_trip_density", back.rho.linear_combination(1.0, &f.rho, -1.0)?.max_abs(), 1e-12);
        c.at_most("round_trip_velocity", back.u.linear_combination(1.0, &f.u, -1.0)?.max_abs(), 1e-6);
        Ok(())
    });
}

/// Largest residuals of the wall-mode run on `[0, 1]` with `n` points.
fn wall_run(n: usize, record_every: usize) -> crate::Result<(f64, f64)> {
    let g = Grid1D::bounded(0.0, 1.0, n)?;
    let f = FluidState::new(
        0.0,
        ScalarField::from_fn(g, |x| 1.0 + 0.1 * (PI * x).cos())?,
        ScalarField::from_fn(g, |x| 0.1 * (PI * x).sin())?,
    )?;
    let model = Model::new(PressureLaw::power(2.0)?, 2.0)?;
    let bc = BoundaryKind::NeumannDensityDirichletVelocity { u0: 0.0, u1: 0.0 };
    let traj = qhd_run(&f, &model, &QhdConfig::new(bc, 0.02).with_record_every(record_every))?;
    let max = |v: Vec<(f64, f64)>| v.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    Ok((max(energy_balance_residual(&traj)?), max(observable_identity_residual(&traj)?)))
}

fn identities(c: &mut Checks) {
    c.fallible("wall_mode", |c| {
        let (e1, d1) = wall_run(129, 25)?;
        let (e2, d2) = wall_run(257, 100)?;
        c.at_most("energy_residual_n256", e2, 1e-3);
        c.at_most("observable_residual_n256", d2, 1e-3);
        c.at_least("energy_residual_ratio", e1 / e2, 1.8);
        c.at_least("observable_residual_ratio", d1 / d2, 1.8);
        Ok(())
    });
}

fn max_eigen_error(w: &dyn WeightField, x: &[f64]) -> f64 {
    let d = x.len();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &w.hessian(x))).eigenvalues;
    eig.iter().map(|e| (e + 2.0).abs()).fold(0.0, f64::max)
}

fn weights(c: &mut Checks, seed: u64) {
    c.fallible("ball", |c| {
        for d in 1..=3 {
            let w = make_weight(&DomainDescriptor::ball(d)?)?;
            let x = vec![0.25; d];
            let lap: f64 = (0..d).map(|i| w.hessian(&x)[i * d + i]).sum();
            c.at_most(format!("ball_d{d}_laplacian"), (lap + 2.0 * d as f64).abs(), 1e-12);
            c.at_most(format!("ball_d{d}_hessian_eigenvalues"), max_eigen_error(&w, &x), 1e-12);
            let r = verify_weight_seeded(&w, DEFAULT_SAMPLES, seed);
            c.holds(format!("ball_d{d}_conditions"), r.passed());
        }
        Ok(())
    });
    c.fallible("cylinder_and_box", |c| {
        let cases = [
            ("cylinder_d2", DomainDescriptor::cylinder(vec![(0.0, 1.0)])?),
            ("cylinder_d3", DomainDescriptor::cylinder(vec![(0.0, 1.0), (-0.5, 0.5)])?),
            ("box_d2", DomainDescriptor::box_domain(vec![(0.0, 1.0), (0.0, 2.0)], 0)?),
            ("interval", DomainDescriptor::unit_interval()),
        ];
        for (name, dom) in cases {
            let r = verify_weight_seeded(&make_weight(&dom)?, DEFAULT_SAMPLES, seed);
            c.holds(format!("{name}_conditions"), r.passed());
        }
        Ok(())
    });
    c.fallible("quadratic", |c| {
        let w = WeightFunction::quadratic(DomainDescriptor::ball(2)?, 0.5, vec![0.5, 0.5], vec![0.0, 0.0])?;
        c.at_most("monge_ampere_determinant", (w.monge_ampere_determinant() - 1.0).abs(), 0.0);
        c.holds("quadratic_conditions", verify_weight_seeded(&w, DEFAULT_SAMPLES, seed).passed());
        Ok(())
    });
    c.fallible("reduced_integrands", |c| {
        let law = PressureLaw::power(2.0)?;
        let cases = [
            ("sphere", DomainDescriptor::ball(2)?, (-1.0, 1.0)),
            ("cylinder", DomainDescriptor::cylinder(vec![(0.0, 1.0)])?, (0.0, 1.0)),
        ];
        for (name, dom, by) in cases {
            let g = Grid2D::new(Grid1D::bounded(-1.0, 1.0, 41)?, Grid1D::bounded(by.0, by.1, 41)?);
            let zero = Field2D::from_fn(g, |_, _| 0.0)?;
            let s = FluidState2D::new(0.0, Field2D::from_fn(g, |_, _| 1.5)?, [zero.clone(), zero])?;
            let r = dirichlet_integrand(&make_weight(&dom)?, &s, &law, VACUUM_FLOOR, 64)?;
            c.at_most(format!("{name}_reduced_vs_general"), r.max_discrepancy().unwrap_or(f64::NAN), WEIGHT_TOL);
        }
        Ok(())
    });
}

fn stationary(c: &mut Checks) {
    let law = || PressureLaw::power(2.0).expect("valid law");
    c.fallible("constant_profile", |c| {
        let w0 = 1.3;
        let p = StationaryParams { j: 0.0, k: law().enthalpy(w0 * w0), law: law(), w0, dw0: 0.0, span: 1.0 };
        let shot = stationary_shoot(&p, 1e-2)?;
        c.at_most("constant_residual", stationary_residual(&shot.field()?, &p)?.max_abs(), 1e-12);
        Ok(())
    });
    c.fallible("shot_profile", |c| {
        let p = StationaryParams { j: 0.0, k: law().enthalpy(1.0), law: law(), w0: 1.0 + 1e-3, dw0: 0.0, span: 1.0 };
        let end = |dx: f64| -> crate::Result<f64> { Ok(*stationary_shoot(&p, dx)?.w.last().expect("nonempty")) };
        let (a, b, d) = (end(0.1)?, end(0.05)?, end(0.025)?);
        let ratio = (a - b) / (b - d);
        c.at_least("rk4_ratio_lower", ratio, 14.0);
        c.at_most("rk4_ratio_upper", ratio, 18.0);
        let shot = stationary_shoot(&p, 1e-3)?;
        c.at_most("shot_residual", stationary_residual(&shot.field()?, &p)?.max_abs(), 1e-8);
        c.at_most("first_integral_drift", shot.first_integral_drift(&p), 1e-8);
        Ok(())
    });
}
