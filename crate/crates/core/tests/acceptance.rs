//! Acceptance gate: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use qhd_lab::diagnostics::{
    initial_data_report, theorem2_monitor, theorem4_monitor, Theorem4Branch, Theorem4Params, Weight1D,
};
use qhd_lab::nls::{nls_run, NlsBoundary, NlsConfig, SplitStep};
use qhd_lab::numerics::{BoundaryKind, Field2D, Grid1D, Grid2D, ScalarField};
use qhd_lab::physics::{
    law_assumption_check, madelung_inverse, FluidState, FluidState2D, MadelungGauge, Model, PressureLaw, WaveState,
};
use qhd_lab::qhd::{qhd_run, DtPolicy, QhdConfig, Trajectory};
use qhd_lab::stationary::{stationary_residual, stationary_shoot, StationaryParams};
use qhd_lab::weights::{
    dirichlet_integrand, make_weight, verify_weight, DomainDescriptor, WeightField, WeightFunction, DEFAULT_SAMPLES,
};

type Outcome = Result<String, String>;

fn gamma2() -> PressureLaw {
    PressureLaw::power(2.0).unwrap()
}

fn require(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Hand-rolled trapezoid on a bounded grid.
fn trapezoid(dx: f64, f: &[f64]) -> f64 {
    let n = f.len();
    dx * (f[1..n - 1].iter().sum::<f64>() + 0.5 * (f[0] + f[n - 1]))
}

// Periodic [0, 2π), ε² = 2, ρ = 1 + 0.1 cos x, u = 0.
fn periodic_state(n: usize) -> FluidState {
    let g = Grid1D::periodic(0.0, 2.0 * PI, n).unwrap();
    FluidState::new(
        0.0,
        ScalarField::from_fn(g, |x| 1.0 + 0.1 * x.cos()).unwrap(),
        ScalarField::constant(g, 0.0).unwrap(),
    )
    .unwrap()
}

fn periodic_model() -> Model {
    Model::new(gamma2(), 2.0).unwrap()
}

fn qhd_periodic(n: usize, dt: DtPolicy, every: usize) -> Trajectory {
    let cfg = QhdConfig::new(BoundaryKind::Periodic, 0.5).with_dt(dt).with_record_every(every);
    qhd_run(&periodic_state(n), &periodic_model(), &cfg).unwrap()
}

fn nls_final_density(n: usize) -> Vec<f64> {
    let model = periodic_model();
    let wave = madelung_inverse(&periodic_state(n), model.eps(), MadelungGauge::default(), 1e-12).unwrap();
    let cfg = NlsConfig::new(model.eps(), NlsBoundary::Periodic, 1e-4, 0.5).with_record_every(5000);
    nls_run(&wave, &model.law, &cfg).unwrap().last().wave.density().into_values()
}

fn madelung_discrepancy(n: usize) -> f64 {
    let q = qhd_periodic(n, DtPolicy::Parabolic { sigma: 0.1 }, 1_000_000);
    max_abs_diff(q.last().state.rho.values(), &nls_final_density(n))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let coarse = madelung_discrepancy(256);
    let secs = start.elapsed().as_secs_f64();
    let fine = madelung_discrepancy(512);
    let ratio = coarse / fine;
    require(
        coarse <= 5e-3 && (3.0..=5.0).contains(&ratio) && secs <= 60.0,
        format!("‖ρ_NLS − ρ_QHD‖∞ = {coarse:.3e} (≤ 5e-3), ratio {ratio:.3} in [3, 5], n=256 pair {secs:.1} s (≤ 60 s)"),
    )
}

fn criterion_2() -> Outcome {
    let model = periodic_model();
    let wave = madelung_inverse(&periodic_state(256), model.eps(), MadelungGauge::default(), 1e-12).unwrap();
    let mut w = wave.clone();
    let mut prop = SplitStep::new(w.grid(), model.law.clone(), model.eps(), NlsBoundary::Periodic, 1e-4).unwrap();
    let mass = |w: &WaveState| w.psi().iter().map(|z| z.norm_sqr()).sum::<f64>();
    let m0 = mass(&w);
    for _ in 0..10_000 {
        prop.step(&mut w).unwrap();
    }
    let nls_drift = ((mass(&w) - m0) / m0).abs();

    let q = qhd_periodic(256, DtPolicy::Parabolic { sigma: 0.1 }, 100);
    let q0 = q.first().state.rho.values().iter().sum::<f64>();
    let qhd_drift = q
        .snapshots
        .iter()
        .map(|s| ((s.state.rho.values().iter().sum::<f64>() - q0) / q0).abs())
        .fold(0.0, f64::max);
    require(
        nls_drift <= 1e-10 && qhd_drift <= 1e-8,
        format!("NLS mass drift {nls_drift:.2e} over 1e4 steps (≤ 1e-10), QHD {qhd_drift:.2e} (≤ 1e-8)"),
    )
}

fn energy_drift(n: usize, dt: f64) -> f64 {
    let q = qhd_periodic(n, DtPolicy::Fixed { dt }, 500);
    let e0 = q.first().record.energy;
    q.snapshots.iter().map(|s| (s.record.energy - e0).abs()).fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let coarse = energy_drift(256, 1e-5);
    let fine = energy_drift(512, 5e-6);
    let ratio = coarse / fine;
    require(
        coarse <= 1e-6 && ratio >= 3.0,
        format!("max|E(t) − E(0)| = {coarse:.3e} at dt = 1e-5 (≤ 1e-6), refinement ratio {ratio:.3} (≥ 3)"),
    )
}

/// Wall-mode run on [0, 1]: ρ = 1 + 0.1 cos πx, u = 0.1 sin πx, zero wall velocity.
fn wall_run(n: usize, every: usize) -> Trajectory {
    let g = Grid1D::bounded(0.0, 1.0, n).unwrap();
    let s = FluidState::new(
        0.0,
        ScalarField::from_fn(g, |x| 1.0 + 0.1 * (PI * x).cos()).unwrap(),
        ScalarField::from_fn(g, |x| 0.1 * (PI * x).sin()).unwrap(),
    )
    .unwrap();
    let bc = BoundaryKind::NeumannDensityDirichletVelocity { u0: 0.0, u1: 0.0 };
    qhd_run(&s, &Model::new(gamma2(), 2.0).unwrap(), &QhdConfig::new(bc, 0.1).with_record_every(every)).unwrap()
}

fn criterion_4() -> Outcome {
    let max = |t: &Trajectory| {
        qhd_lab::diagnostics::observable_identity_residual(t)
            .unwrap()
            .iter()
            .map(|p| p.1.abs())
            .fold(0.0, f64::max)
    };
    let coarse = max(&wall_run(129, 50));
    let fine = max(&wall_run(257, 200));
    let ratio = coarse / fine;
    require(
        fine <= 1e-3 && ratio >= 1.8,
        format!("max observable-identity residual {fine:.3e} at n=256 (≤ 1e-3), ratio {ratio:.3} (≥ 1.8)"),
    )
}

fn criterion_5() -> Outcome {
    let g = Grid1D::bounded(0.0, 1.0, 1025).unwrap();
    let w = Weight1D::parabolic(g);
    let one = ScalarField::constant(g, 1.0).unwrap();
    let u = ScalarField::from_fn(g, |x| x - 0.5).unwrap();
    let r = initial_data_report(&one, &u, &w).unwrap();
    let t_star = r.t_star.unwrap_or(f64::NAN);
    let scaled = initial_data_report(&one.map(|v| 3.7 * v).unwrap(), &u, &w).unwrap();
    let rel = (scaled.t_star.unwrap_or(f64::NAN) - t_star).abs() / t_star;
    let (ei, em, et) = ((r.i0 - 1.0 / 6.0).abs(), (r.m0 + 1.0 / 6.0).abs(), (t_star - 1.0).abs());
    require(
        ei <= 1e-6 && em <= 1e-6 && et <= 2e-5 && rel <= 1e-12,
        format!("|I0 − 1/6| = {ei:.1e}, |M0 + 1/6| = {em:.1e} (≤ 1e-6), |T* − 1| = {et:.1e} (≤ 2e-5), ρ-scaling {rel:.1e} (≤ 1e-12)"),
    )
}

/// NLS between walls: ρ = (1 − 0.3 cos 2πx)², u = −0.5 sin 2πx, ε = √2, γ = 2.
fn inward_trajectory(rho: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64, t_final: f64) -> (Trajectory, FluidState) {
    let g = Grid1D::bounded(0.0, 1.0, 257).unwrap();
    let s = FluidState::new(0.0, ScalarField::from_fn(g, rho).unwrap(), ScalarField::from_fn(g, u).unwrap()).unwrap();
    let eps = 2f64.sqrt();
    let wave = madelung_inverse(&s, eps, MadelungGauge::default(), 1e-12).unwrap();
    let cfg = NlsConfig::new(eps, NlsBoundary::Neumann, 1e-4, t_final).with_record_every(10);
    (nls_run(&wave, &gamma2(), &cfg).unwrap().hydrodynamic().unwrap(), s)
}

fn criterion_6() -> Outcome {
    let (traj, s) = inward_trajectory(
        |x| (1.0 - 0.3 * (2.0 * PI * x).cos()).powi(2),
        |x| -0.5 * (2.0 * PI * x).sin(),
        1.0,
    );
    let w = Weight1D::parabolic(*s.grid());
    let predicted = initial_data_report(&s.rho, &s.u, &w).unwrap();
    let report = theorem2_monitor(&traj, &predicted).unwrap();

    // independent recomputation over the initial window from the records
    let (i0, m0) = (predicted.i0, predicted.m0);
    let tol = 1e-3 * (1.0 + i0);
    let held: Vec<_> = traj
        .snapshots
        .iter()
        .take_while(|sn| sn.record.b0 <= 0.0 && sn.record.b1 <= 0.0)
        .collect();
    let own_violations = held
        .iter()
        .filter(|sn| sn.record.observable > i0 + m0 * sn.state.t + tol)
        .count();

    let (control, _) = inward_trajectory(|_| 1.0, |_| 0.0, 0.2);
    let control_s = &control.first().state;
    let control_pred = initial_data_report(&control_s.rho, &control_s.u, &w).unwrap();
    let control_report = theorem2_monitor(&control, &control_pred).unwrap();

    require(
        m0 < 0.0
            && !held.is_empty()
            && own_violations == 0
            && report.violations() == 0
            && report.asserted() > 0
            && control_report.hypothesis_windows.is_empty(),
        format!(
            "M0 = {m0:.4}, T* = {:.4}; {} windows, {} asserted envelope checks, {} violations ({} in the initial window by direct recomputation); control windows: {}",
            predicted.t_star.unwrap_or(f64::NAN),
            report.hypothesis_windows.len(),
            report.asserted(),
            report.violations(),
            own_violations,
            control_report.hypothesis_windows.len()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for d in 1..=3 {
        let w = make_weight(&DomainDescriptor::ball(d).unwrap()).unwrap();
        let x = vec![0.2; d];
        let h = w.hessian(&x);
        let lap: f64 = (0..d).map(|i| h[i * d + i]).sum();
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &h)).eigenvalues;
        let eig_err = eig.iter().map(|e| (e + 2.0).abs()).fold(0.0, f64::max);
        ok &= (lap + 2.0 * d as f64).abs() <= 1e-12 && eig_err <= 1e-12;
        ok &= verify_weight(&w, DEFAULT_SAMPLES).passed();
        notes.push(format!("ball d={d}: Δa = {lap}"));
    }
    for dom in [
        DomainDescriptor::cylinder(vec![(0.0, 1.0)]).unwrap(),
        DomainDescriptor::cylinder(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(),
        DomainDescriptor::box_domain(vec![(0.0, 1.0), (0.0, 2.0)], 0).unwrap(),
        DomainDescriptor::box_domain(vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], 1).unwrap(),
    ] {
        let r = verify_weight(&make_weight(&dom).unwrap(), DEFAULT_SAMPLES);
        ok &= r.passed();
        if !r.passed() {
            notes.push(format!("{:?} failed {:?}", dom.kind, r.failed()));
        }
    }
    notes.push("cylinder and box checks pass".into());
    for d in 1..=3 {
        let w = WeightFunction::quadratic(DomainDescriptor::ball(d).unwrap(), 0.5, vec![0.5; d], vec![0.0; d]).unwrap();
        ok &= w.monge_ampere_determinant() == 1.0;
    }
    notes.push("det Hess(−a) = 1".into());
    let law = gamma2();
    let mut worst: f64 = 0.0;
    for (dom, by) in [
        (DomainDescriptor::ball(2).unwrap(), (-1.0, 1.0)),
        (DomainDescriptor::cylinder(vec![(0.0, 1.0)]).unwrap(), (0.0, 1.0)),
    ] {
        let g = Grid2D::new(Grid1D::bounded(-1.0, 1.0, 41).unwrap(), Grid1D::bounded(by.0, by.1, 41).unwrap());
        let zero = Field2D::from_fn(g, |_, _| 0.0).unwrap();
        let s = FluidState2D::new(0.0, Field2D::from_fn(g, |_, _| 1.3).unwrap(), [zero.clone(), zero]).unwrap();
        let r = dirichlet_integrand(&make_weight(&dom).unwrap(), &s, &law, 1e-12, 64).unwrap();
        // oracle: ∂a/∂ν = −2 and Q = 0 leave 2P/ρ
        let expect = 2.0 * law.pressure(1.3) / 1.3;
        worst = worst.max(r.general.iter().map(|v| (v - expect).abs()).fold(0.0, f64::max));
        worst = worst.max(r.max_discrepancy().unwrap_or(f64::INFINITY));
    }
    ok &= worst <= 1e-10;
    notes.push(format!("reduced vs general integrand {worst:.1e} (≤ 1e-10)"));
    require(ok, notes.join("; "))
}

/// Stationary profile between two turning points on `[0, L]`, sampled on `n` points.
fn stationary_run(n: usize) -> (Trajectory, f64) {
    let j = 2.0;
    let mut p = StationaryParams { j, k: 2.0 + 0.5 * j * j, law: gamma2(), w0: 1.05, dw0: 0.0, span: 3.0 };
    let probe = stationary_shoot(&p, 1e-5).unwrap();
    let i = (1..probe.dw.len()).find(|&i| probe.dw[i - 1] < 0.0 && probe.dw[i] >= 0.0).unwrap();
    let (a, b) = (probe.dw[i - 1], probe.dw[i]);
    p.span = probe.x[i - 1] + probe.dx * a / (a - b);
    let fine = 64;
    let shot = stationary_shoot(&p, p.span / ((n - 1) * fine) as f64).unwrap();
    let g = Grid1D::bounded(0.0, p.span, n).unwrap();
    let rho: Vec<f64> = (0..n).map(|k| shot.w[k * fine].powi(2)).collect();
    let u: Vec<f64> = rho.iter().map(|r| j / r).collect();
    let bc = BoundaryKind::NeumannDensityDirichletVelocity { u0: u[0], u1: u[n - 1] };
    let s = FluidState::new(0.0, ScalarField::new(g, rho).unwrap(), ScalarField::new(g, u).unwrap()).unwrap();
    let traj = qhd_run(&s, &Model::new(gamma2(), 2.0).unwrap(), &QhdConfig::new(bc, 0.1).with_record_every(500)).unwrap();
    let mismatch = traj.snapshots.iter().map(|s| (s.record.k0 - s.record.k1).abs()).fold(0.0, f64::max);
    (traj, mismatch)
}

fn criterion_8() -> Outcome {
    let law = gamma2();
    let a = law_assumption_check(&law, 10.0, 1.0).unwrap();
    let margin = [0.01, 0.5, 1.0, 3.0, 10.0]
        .iter()
        .map(|&r: &f64| (law.pressure(r) / r - law.enthalpy(r) + r).abs())
        .fold(0.0, f64::max);

    let (_, coarse) = stationary_run(256);
    let (_, fine) = stationary_run(511);
    let ratio = coarse / fine;

    // u₀ = u₁ = 0 branch: I₀ + t(M₀ − 2E₀ min(λ, 2)) with λ = 1
    let traj = wall_run(129, 200);
    let params = Theorem4Params { alpha: 2.0, m: 10.0, u0: 0.0, u1: 0.0, lambda: 1.0 };
    let report = theorem4_monitor(&traj, &params).unwrap();
    let first = &traj.first().state;
    let g = first.grid();
    let dx = g.dx();
    let i0 = trapezoid(dx, &g.points().iter().zip(first.rho.values()).map(|(x, r)| x * (1.0 - x) * r).collect::<Vec<_>>());
    let flux: Vec<f64> = g
        .points()
        .iter()
        .zip(first.rho.values().iter().zip(first.u.values()))
        .map(|(x, (r, u))| (1.0 - 2.0 * x) * r * u)
        .collect();
    let m0 = trapezoid(dx, &flux);
    let e0 = traj.first().record.energy;
    let branch_err = report
        .checks
        .iter()
        .map(|c| {
            let expect = i0 + c.t * (m0 - 2.0 * e0 * 1.0);
            if c.branch == Theorem4Branch::ZeroBoundaryVelocity {
                (c.envelope - expect).abs()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);

    require(
        a.all_pass() && margin <= 1e-12 && coarse <= 5e-3 && ratio >= 1.8 && branch_err <= 1e-12,
        format!(
            "γ=2: inf P/g = {}, P/ρ − h = −ρ to {margin:.0e}; max|K(0,t) − K(1,t)| = {coarse:.3e} at n=256 (≤ 5e-3), ratio {ratio:.3} (≥ 1.8); zero-velocity branch envelope error {branch_err:.1e}",
            a.inf_pressure_ratio
        ),
    )
}

fn criterion_9() -> Outcome {
    let law = gamma2();
    let w0: f64 = 1.2;
    let constant = StationaryParams { j: 0.8, k: 0.5 * (0.8 / (w0 * w0)).powi(2) + law.enthalpy(w0 * w0), law: law.clone(), w0, dw0: 0.0, span: 1.0 };
    let shot = stationary_shoot(&constant, 1e-2).unwrap();
    let r_const = stationary_residual(&shot.field().unwrap(), &constant).unwrap().max_abs();

    let p = StationaryParams { j: 0.0, k: law.enthalpy(1.0), law, w0: 1.0 + 1e-3, dw0: 0.0, span: 1.0 };
    let end = |dx: f64| *stationary_shoot(&p, dx).unwrap().w.last().unwrap();
    let (a, b, c) = (end(0.1), end(0.05), end(0.025));
    let ratio = (a - b) / (b - c);
    let shot = stationary_shoot(&p, 1e-3).unwrap();
    let r_shot = stationary_residual(&shot.field().unwrap(), &p).unwrap().max_abs();
    require(
        r_const <= 1e-12 && (14.0..=18.0).contains(&ratio) && r_shot <= 1e-8,
        format!("constant residual {r_const:.1e} (≤ 1e-12), self-convergence ratio {ratio:.2} in [14, 18], shot residual {r_shot:.2e} at dx = 1e-3 (≤ 1e-8)"),
    )
}

fn criterion_10() -> Outcome {
    // ψ₀ = 1 + i cos x, free: ρ(π, t) = 2 − 2 sin(εt/2) vanishes at t = π/ε.
    let eps = 1.0;
    let g = Grid1D::periodic(0.0, 2.0 * PI, 128).unwrap();
    let w = WaveState::from_fn(0.0, g, eps, |x| Complex64::new(1.0, x.cos())).unwrap();
    let cfg = NlsConfig::new(eps, NlsBoundary::Periodic, 1e-3, 4.0).with_record_every(10).with_floor(1e-4);
    let traj = nls_run(&w, &PressureLaw::free(), &cfg).unwrap();
    let ev = traj.vacuum.clone();
    let (t, x) = ev.as_ref().map_or((f64::NAN, f64::NAN), |e| (e.t, e.x));
    require(
        (t - PI / eps).abs() <= 0.03 && (x - PI).abs() < 1e-12,
        format!(
            "singularity formation (ρ → 0 a.e. at T*) is not quantitatively reproducible: non-existence beyond T* is proved, the approach to it is not described; substitutes are the conditional observable envelope and vacuum-event detection: event at t = {t:.4} (exact π/ε = {:.4}), x = {x:.4}",
            PI / eps
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "Madelung equivalence", criterion_1),
        (2, "conservation", criterion_2),
        (3, "energy balance", criterion_3),
        (4, "observable identity residual", criterion_4),
        (5, "exact functional values", criterion_5),
        (6, "observable envelope", criterion_6),
        (7, "weight functions", criterion_7),
        (8, "Dirichlet-velocity machinery", criterion_8),
        (9, "stationary system", criterion_9),
        (10, "singularity note and vacuum detection", criterion_10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} criterion {id:>2} [{name}] {msg} ({:.1} s)", start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
