//! Thermodynamics, quantum potential and the Madelung transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    cumulative_trapezoid, derivative, BoundaryKind, Field2D, Grid1D, Grid2D, ScalarField,
};

/// Default absolute density floor.
pub const VACUUM_FLOOR: f64 = 1e-12;

/// Relative tolerance of the finite-difference enthalpy check.
pub const ENTHALPY_TOL: f64 = 1e-6;

/// One term `c ρ^γ` of a pressure law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Barotropic pressure law.
///
/// Enthalpy and its density primitive are fixed by `h' = P'/ρ`, `h(0) = 0`
/// and `g(ρ) = ∫₀^ρ h`. For a single term `c ρ^γ`:
///
/// ```text
/// P = c ρ^γ,   h = c γ/(γ-1) ρ^(γ-1),   g = c/(γ-1) ρ^γ
/// ```
///
/// An empty sum is the free (linear Schrödinger) law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PressureLaw {
    PowerLaw { gamma: f64 },
    SumOfPowers { terms: Vec<PowerTerm> },
}

/// `(P, h, g)` at one density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawValues {
    pub pressure: f64,
    pub enthalpy: f64,
    pub primitive: f64,
}

impl PressureLaw {
    pub fn power(gamma: f64) -> Result<Self> {
        let law = PressureLaw::PowerLaw { gamma };
        law.validate()?;
        Ok(law)
    }

    pub fn sum(terms: Vec<PowerTerm>) -> Result<Self> {
        let law = PressureLaw::SumOfPowers { terms };
        law.validate()?;
        Ok(law)
    }

    /// `P ≡ 0`, `h ≡ 0`.
    pub fn free() -> Self {
        PressureLaw::SumOfPowers { terms: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for t in self.terms() {
            if !(t.exponent > 1.0 && t.exponent.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "pressure exponent must exceed 1, got {}",
                    t.exponent
                )));
            }
            if !(t.coefficient > 0.0 && t.coefficient.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "pressure coefficient must be positive, got {}",
                    t.coefficient
                )));
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> Vec<PowerTerm> {
        match self {
            PressureLaw::PowerLaw { gamma } => vec![PowerTerm {
                coefficient: 1.0,
                exponent: *gamma,
            }],
            PressureLaw::SumOfPowers { terms } => terms.clone(),
        }
    }

    pub fn is_free(&self) -> bool {
        self.terms().is_empty()
    }

    fn fold(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        match self {
            PressureLaw::PowerLaw { gamma } => f(1.0, *gamma),
            PressureLaw::SumOfPowers { terms } => {
                terms.iter().map(|t| f(t.coefficient, t.exponent)).sum()
            }
        }
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.fold(|c, g| c * rho.powf(g))
    }

    pub fn dpressure(&self, rho: f64) -> f64 {
        self.fold(|c, g| c * g * rho.powf(g - 1.0))
    }

    pub fn enthalpy(&self, rho: f64) -> f64 {
        self.fold(|c, g| c * g / (g - 1.0) * rho.powf(g - 1.0))
    }

    pub fn primitive(&self, rho: f64) -> f64 {
        self.fold(|c, g| c / (g - 1.0) * rho.powf(g))
    }

    /// Smallest exponent minus one: the largest `λ` with `P/g ≥ λ`.
    pub fn pressure_ratio_bound(&self) -> Option<f64> {
        self.terms()
            .iter()
            .map(|t| t.exponent - 1.0)
            .reduce(f64::min)
    }
}

pub fn law_eval(law: &PressureLaw, rho: f64) -> Result<LawValues> {
    if rho < 0.0 || rho.is_nan() {
        return Err(Error::NegativeDensity(rho));
    }
    Ok(LawValues {
        pressure: law.pressure(rho),
        enthalpy: law.enthalpy(rho),
        primitive: law.primitive(rho),
    })
}

/// Outcome of [`law_assumption_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub lambda: f64,
    /// `inf P/g ≥ λ` over the sample.
    pub pressure_ratio_ok: bool,
    pub inf_pressure_ratio: f64,
    /// `sup (P/ρ − h) ≤ 0` over the sample.
    pub enthalpy_gap_ok: bool,
    pub sup_enthalpy_gap: f64,
    /// `h' = P'/ρ` by central differences.
    pub enthalpy_consistent: bool,
    pub max_enthalpy_mismatch: f64,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.pressure_ratio_ok && self.enthalpy_gap_ok && self.enthalpy_consistent
    }
}

const ASSUMPTION_SAMPLES: usize = 241;

/// Checks `P/g ≥ λ`, `P/ρ − h ≤ 0` and `h' = P'/ρ` on log-spaced densities
/// in `(0, rho_max]`.
pub fn law_assumption_check(law: &PressureLaw, rho_max: f64, lambda: f64) -> Result<AssumptionReport> {
    if !(rho_max > 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "rho_max and lambda must be positive".into(),
        ));
    }
    let lo = (rho_max * 1e-8).ln();
    let hi = rho_max.ln();
    let mut inf_ratio = f64::INFINITY;
    let mut sup_gap = f64::NEG_INFINITY;
    let mut max_mismatch: f64 = 0.0;
    let mut any_ratio = false;
    for k in 0..ASSUMPTION_SAMPLES {
        let rho = (lo + (hi - lo) * k as f64 / (ASSUMPTION_SAMPLES - 1) as f64).exp();
        let p = law.pressure(rho);
        let g = law.primitive(rho);
        if g > 0.0 {
            any_ratio = true;
            inf_ratio = inf_ratio.min(p / g);
        }
        sup_gap = sup_gap.max(p / rho - law.enthalpy(rho));

        let step = 1e-5 * rho;
        let dh = (law.enthalpy(rho + step) - law.enthalpy(rho - step)) / (2.0 * step);
        let target = law.dpressure(rho) / rho;
        max_mismatch = max_mismatch.max((dh - target).abs() / (1.0 + target.abs()));
    }
    if !any_ratio {
        inf_ratio = f64::NAN;
    }
    Ok(AssumptionReport {
        lambda,
        pressure_ratio_ok: any_ratio && inf_ratio >= lambda * (1.0 - 1e-12),
        inf_pressure_ratio: inf_ratio,
        enthalpy_gap_ok: sup_gap <= 0.0,
        sup_enthalpy_gap: sup_gap,
        enthalpy_consistent: max_mismatch <= ENTHALPY_TOL,
        max_enthalpy_mismatch: max_mismatch,
    })
}

/// Constitutive data of a run: pressure law and `ε²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub law: PressureLaw,
    pub eps2: f64,
}

impl Model {
    pub fn new(law: PressureLaw, eps2: f64) -> Result<Self> {
        law.validate()?;
        if !(eps2 > 0.0 && eps2.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps2 must be positive, got {eps2}")));
        }
        Ok(Self { law, eps2 })
    }

    /// The one-dimensional normalization `ε² = 2`, under which every
    /// quantum coefficient below equals one.
    pub fn unit_quantum(law: PressureLaw) -> Result<Self> {
        Self::new(law, 2.0)
    }

    pub fn eps(&self) -> f64 {
        self.eps2.sqrt()
    }

    /// `ε²/2`, the weight of every Bohm-potential term.
    pub fn quantum(&self) -> f64 {
        0.5 * self.eps2
    }
}

/// Hydrodynamic unknowns `(ρ, u)` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: ScalarField,
}

impl FluidState {
    pub fn new(t: f64, rho: ScalarField, u: ScalarField) -> Result<Self> {
        if rho.grid() != u.grid() {
            return Err(Error::GridMismatch("density and velocity grids differ"));
        }
        Ok(Self { t, rho, u })
    }

    pub fn grid(&self) -> &Grid1D {
        self.rho.grid()
    }

    pub fn momentum(&self) -> ScalarField {
        self.rho
            .zip_with(&self.u, |r, u| r * u)
            .expect("state fields share a grid")
    }

    pub fn check_floor(&self, floor: f64) -> Result<()> {
        check_floor(&self.rho, floor)
    }
}

pub fn check_floor(rho: &ScalarField, floor: f64) -> Result<()> {
    let (i, min) = rho.argmin();
    if min <= floor {
        return Err(Error::Vacuum {
            min,
            x: rho.grid().x(i),
            floor,
        });
    }
    Ok(())
}

/// Complex wave function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    grid: Grid1D,
    psi: Vec<Complex64>,
    eps: f64,
}

impl WaveState {
    pub fn new(t: f64, grid: Grid1D, psi: Vec<Complex64>, eps: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::GridMismatch("wave samples differ from grid size"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { what: "wave function" });
        }
        Ok(Self { t, grid, psi, eps })
    }

    pub fn from_fn(t: f64, grid: Grid1D, eps: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let psi = grid.points().into_iter().map(f).collect();
        Self::new(t, grid, psi, eps)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub(crate) fn psi_mut(&mut self) -> &mut [Complex64] {
        &mut self.psi
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn density(&self) -> ScalarField {
        ScalarField::new(self.grid, self.psi.iter().map(|z| z.norm_sqr()).collect())
            .expect("finite wave has finite density")
    }
}

/// Where the free additive constant of the phase is pinned.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MadelungGauge {
    pub anchor: usize,
    pub phase: f64,
}

fn derivative_bc(grid: &Grid1D) -> BoundaryKind {
    if grid.is_periodic() {
        BoundaryKind::Periodic
    } else {
        BoundaryKind::Monitored { c1: 0.0, c2: 0.0 }
    }
}

/// Bohm potential `Δ√ρ/√ρ`.
pub fn bohm(rho: &ScalarField, bc: &BoundaryKind, floor: f64) -> Result<ScalarField> {
    check_floor(rho, floor)?;
    let w = rho.map(f64::sqrt)?;
    let w2 = derivative(&w, 2, bc)?;
    w2.zip_with(&w, |a, b| a / b)
}

/// `ψ ↦ (ρ, u)` with `ρ = |ψ|²`, `u = ε Im(ψ̄ ψ_x)/|ψ|²`.
pub fn madelung_forward(w: &WaveState, floor: f64) -> Result<FluidState> {
    let rho = w.density();
    check_floor(&rho, floor)?;
    let bc = derivative_bc(w.grid());
    let re = ScalarField::new(*w.grid(), w.psi.iter().map(|z| z.re).collect())?;
    let im = ScalarField::new(*w.grid(), w.psi.iter().map(|z| z.im).collect())?;
    let dre = derivative(&re, 1, &bc)?;
    let dim = derivative(&im, 1, &bc)?;
    let u: Vec<f64> = (0..rho.len())
        .map(|i| {
            w.eps * (re.values()[i] * dim.values()[i] - im.values()[i] * dre.values()[i])
                / rho.values()[i]
        })
        .collect();
    FluidState::new(w.t, rho, ScalarField::new(*w.grid(), u)?)
}

/// `(ρ, u) ↦ √ρ exp(iS/ε)` with `S` the running trapezoid integral of `u`,
/// pinned by `gauge`.
pub fn madelung_inverse(f: &FluidState, eps: f64, gauge: MadelungGauge, floor: f64) -> Result<WaveState> {
    f.check_floor(floor)?;
    if gauge.anchor >= f.grid().len() {
        return Err(Error::InvalidParameter(format!(
            "gauge anchor {} is off the grid",
            gauge.anchor
        )));
    }
    let s = cumulative_trapezoid(f.u.values(), f.grid().dx());
    let offset = gauge.phase - s[gauge.anchor];
    let psi = f
        .rho
        .values()
        .iter()
        .zip(&s)
        .map(|(&r, &si)| Complex64::from_polar(r.sqrt(), (si + offset) / eps))
        .collect();
    WaveState::new(f.t, *f.grid(), psi, eps)
}

/// Hydrodynamic fields on a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState2D {
    pub t: f64,
    pub rho: Field2D,
    pub u: [Field2D; 2],
}

impl FluidState2D {
    pub fn new(t: f64, rho: Field2D, u: [Field2D; 2]) -> Result<Self> {
        if u.iter().any(|c| c.grid() != rho.grid()) {
            return Err(Error::GridMismatch("velocity components and density differ"));
        }
        Ok(Self { t, rho, u })
    }

    pub fn grid(&self) -> &Grid2D {
        self.rho.grid()
    }
}

/// Complex wave function on a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState2D {
    pub t: f64,
    grid: Grid2D,
    psi: Vec<Complex64>,
    eps: f64,
}

impl WaveState2D {
    pub fn new(t: f64, grid: Grid2D, psi: Vec<Complex64>, eps: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::GridMismatch("wave samples differ from grid size"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { what: "wave function" });
        }
        Ok(Self { t, grid, psi, eps })
    }

    pub fn from_fn(t: f64, grid: Grid2D, eps: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let mut psi = Vec::with_capacity(grid.len());
        for i in 0..grid.x.len() {
            for j in 0..grid.y.len() {
                psi.push(f(grid.x.x(i), grid.y.x(j)));
            }
        }
        Self::new(t, grid, psi, eps)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub(crate) fn psi_mut(&mut self) -> &mut [Complex64] {
        &mut self.psi
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn density(&self) -> Field2D {
        Field2D::new(self.grid, self.psi.iter().map(|z| z.norm_sqr()).collect())
            .expect("finite wave has finite density")
    }
}

/// Componentwise Madelung image on a tensor grid.
pub fn madelung_forward_2d(w: &WaveState2D, floor: f64) -> Result<FluidState2D> {
    let rho = w.density();
    let min = rho.min();
    if min <= floor {
        let k = rho
            .values()
            .iter()
            .position(|&v| v == min)
            .unwrap_or_default();
        return Err(Error::Vacuum {
            min,
            x: w.grid.x.x(k / w.grid.y.len()),
            floor,
        });
    }
    let re = Field2D::new(w.grid, w.psi.iter().map(|z| z.re).collect())?;
    let im = Field2D::new(w.grid, w.psi.iter().map(|z| z.im).collect())?;
    let mut comps = Vec::with_capacity(2);
    for axis in 0..2 {
        let dre = re.partial(axis, 1)?;
        let dim = im.partial(axis, 1)?;
        let vals = (0..rho.values().len())
            .map(|k| {
                w.eps * (re.values()[k] * dim.values()[k] - im.values()[k] * dre.values()[k])
                    / rho.values()[k]
            })
            .collect();
        comps.push(Field2D::new(w.grid, vals)?);
    }
    let uy = comps.pop().expect("two components");
    let ux = comps.pop().expect("two components");
    FluidState2D::new(w.t, rho, [ux, uy])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        let g2 = PressureLaw::power(2.0).unwrap();
        let v = law_eval(&g2, 1.0).unwrap();
        assert_eq!((v.pressure, v.enthalpy, v.primitive), (1.0, 2.0, 1.0));
        let g3 = PressureLaw::power(3.0).unwrap();
        let v = law_eval(&g3, 2.0).unwrap();
        assert!((v.pressure - 8.0).abs() < 1e-12);
        assert!((v.enthalpy - 6.0).abs() < 1e-12);
        assert!((v.primitive - 4.0).abs() < 1e-12);
        for law in [g2, g3, PressureLaw::free()] {
            let v = law_eval(&law, 0.0).unwrap();
            assert_eq!((v.pressure, v.enthalpy, v.primitive), (0.0, 0.0, 0.0));
        }
        assert!(matches!(
            law_eval(&PressureLaw::free(), -1.0),
            Err(Error::NegativeDensity(_))
        ));
    }

    #[test]
    fn law_validation() {
        assert!(PressureLaw::power(1.0).is_err());
        assert!(PressureLaw::sum(vec![PowerTerm { coefficient: -1.0, exponent: 2.0 }]).is_err());
    }

    #[test]
    fn assumption_examples() {
        let law = PressureLaw::power(2.0).unwrap();
        let r = law_assumption_check(&law, 10.0, 1.0).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert!((r.inf_pressure_ratio - 1.0).abs() < 1e-12);
        let r = law_assumption_check(&law, 10.0, 1.5).unwrap();
        assert!(!r.pressure_ratio_ok);
        assert!(r.enthalpy_gap_ok && r.enthalpy_consistent);
        // P/ρ − h = −ρ for γ = 2; the sup over (0, ρmax] sits at the small end
        assert!(r.sup_enthalpy_gap < 0.0 && r.sup_enthalpy_gap > -1e-6);
    }

    #[test]
    fn free_law_fails_pressure_ratio() {
        let r = law_assumption_check(&PressureLaw::free(), 1.0, 1.0).unwrap();
        assert!(!r.pressure_ratio_ok);
    }

    #[test]
    fn bohm_examples() {
        let g = Grid1D::bounded(0.0, 1.0, 201).unwrap();
        let bc = BoundaryKind::Monitored { c1: 0.0, c2: 0.0 };
        let q = bohm(&ScalarField::constant(g, 3.0).unwrap(), &bc, VACUUM_FLOOR).unwrap();
        assert!(q.max_abs() < 1e-9);
        let rho = ScalarField::from_fn(g, |x| (2.0 * x).exp()).unwrap();
        let q = bohm(&rho, &bc, VACUUM_FLOOR).unwrap();
        assert!(q.values().iter().all(|v| (v - 1.0).abs() < 1e-3));
        let low = ScalarField::constant(g, 1e-13).unwrap();
        assert!(matches!(bohm(&low, &bc, VACUUM_FLOOR), Err(Error::Vacuum { .. })));
    }

    #[test]
    fn madelung_plane_waves() {
        let g = Grid1D::periodic(0.0, 2.0 * PI, 128).unwrap();
        let w = WaveState::from_fn(0.0, g, 1.0, |x| Complex64::from_polar(1.0, x)).unwrap();
        let f = madelung_forward(&w, VACUUM_FLOOR).unwrap();
        assert!(f.rho.values().iter().all(|r| (r - 1.0).abs() < 1e-12));
        // central difference of e^{ix} gives sin(dx)/dx
        let dx = g.dx();
        assert!(f.u.values().iter().all(|u| (u - dx.sin() / dx).abs() < 1e-12));

        let w = WaveState::from_fn(0.0, g, 0.5, |x| Complex64::from_polar(2f64.sqrt(), 2.0 * x)).unwrap();
        let f = madelung_forward(&w, VACUUM_FLOOR).unwrap();
        assert!(f.rho.values().iter().all(|r| (r - 2.0).abs() < 1e-12));
        let expect = 0.5 * (2.0 * dx).sin() / dx;
        assert!(f.u.values().iter().all(|u| (u - expect).abs() < 1e-12));
        assert!(f.u.values().iter().all(|u| (u - 1.0).abs() < 4.0 * dx * dx / 6.0 * 1.01));

        let w = WaveState::from_fn(0.0, g, 1.0, |x| Complex64::new(1.0 + 0.5 * x.cos(), 0.0)).unwrap();
        let f = madelung_forward(&w, VACUUM_FLOOR).unwrap();
        assert_eq!(f.u.max_abs(), 0.0);
    }

    #[test]
    fn madelung_inverse_examples() {
        let g = Grid1D::bounded(0.0, 1.0, 65).unwrap();
        let one = ScalarField::constant(g, 1.0).unwrap();
        let f = FluidState::new(0.0, one.clone(), ScalarField::constant(g, 0.0).unwrap()).unwrap();
        let w = madelung_inverse(&f, 1.0, MadelungGauge::default(), VACUUM_FLOOR).unwrap();
        assert!(w.psi().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let k = 3.0;
        let f = FluidState::new(0.0, one, ScalarField::constant(g, k).unwrap()).unwrap();
        let w = madelung_inverse(&f, 1.0, MadelungGauge::default(), VACUUM_FLOOR).unwrap();
        for (x, z) in g.points().iter().zip(w.psi()) {
            assert!((z - Complex64::from_polar(1.0, k * x)).norm() < 1e-12);
        }
        let bad = MadelungGauge { anchor: 65, phase: 0.0 };
        assert!(madelung_inverse(&f, 1.0, bad, VACUUM_FLOOR).is_err());
    }

    fn round_trip_error(n: usize) -> (f64, f64) {
        let g = Grid1D::periodic(0.0, 2.0 * PI, n).unwrap();
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.1 * x.cos()).unwrap();
        let u = ScalarField::from_fn(g, |x| 0.05 * x.sin()).unwrap();
        let f = FluidState::new(0.0, rho, u).unwrap();
        let w = madelung_inverse(&f, 1.0, MadelungGauge::default(), VACUUM_FLOOR).unwrap();
        let back = madelung_forward(&w, VACUUM_FLOOR).unwrap();
        let err_rho = back.rho.linear_combination(1.0, &f.rho, -1.0).unwrap().max_abs();
        let err_u = back.u.linear_combination(1.0, &f.u, -1.0).unwrap().max_abs();
        (err_rho, err_u)
    }

    #[test]
    fn madelung_round_trip() {
        // Phase quadrature plus central differencing leave dx²·|u''|/4.
        let (err_rho, err_u) = round_trip_error(512);
        let dx = 2.0 * PI / 512.0;
        assert!(err_rho < 1e-12);
        assert!(err_u <= 0.05 * dx * dx / 4.0 * 1.05, "{err_u}");
        let (_, finer) = round_trip_error(1024);
        assert!(finer <= 1e-6);
        assert!((3.8..4.2).contains(&(err_u / finer)));
    }

    #[test]
    fn gauge_invariance() {
        let g = Grid1D::bounded(0.0, 1.0, 64).unwrap();
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.3 * x * x).unwrap();
        let u = ScalarField::from_fn(g, |x| (3.0 * x).sin()).unwrap();
        let f = FluidState::new(0.0, rho, u).unwrap();
        let a = madelung_inverse(&f, 0.7, MadelungGauge::default(), VACUUM_FLOOR).unwrap();
        let b = madelung_inverse(&f, 0.7, MadelungGauge { anchor: 40, phase: 2.5 }, VACUUM_FLOOR).unwrap();
        let ratio = b.psi()[0] / a.psi()[0];
        assert!((ratio.norm() - 1.0).abs() < 1e-12);
        for (za, zb) in a.psi().iter().zip(b.psi()) {
            assert!((zb - za * ratio).norm() < 1e-12);
        }
        let fa = madelung_forward(&a, VACUUM_FLOOR).unwrap();
        let fb = madelung_forward(&b, VACUUM_FLOOR).unwrap();
        assert!(fa.u.linear_combination(1.0, &fb.u, -1.0).unwrap().max_abs() < 1e-10);
    }
}
