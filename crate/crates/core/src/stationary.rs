//! Stationary profiles `w = √ρ` of
//!
//! ```text
//! ρu = J,   ½u² + h(ρ) − √ρ_xx/√ρ = K
//! ```
//!
//! recast as `w″ = w (½J²/w⁴ + h(w²) − K)` and shot from `x = 0` with RK4.
//! Along a shot `H = ½w′² − ½g(w²) + ½Kw² + J²/(4w²)` is conserved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Grid1D, ScalarField};
use crate::physics::{PressureLaw, VACUUM_FLOOR};

/// Shots whose `|w|` or `|w′|` exceed this are stopped.
pub const OVERFLOW: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryParams {
    pub j: f64,
    pub k: f64,
    pub law: PressureLaw,
    pub w0: f64,
    pub dw0: f64,
    pub span: f64,
}

impl StationaryParams {
    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if !(self.w0 > 0.0 && self.w0.is_finite()) {
            return Err(Error::InvalidParameter(format!("w0 must be positive, got {}", self.w0)));
        }
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(Error::InvalidParameter(format!("span must be positive, got {}", self.span)));
        }
        if !(self.j.is_finite() && self.k.is_finite() && self.dw0.is_finite()) {
            return Err(Error::NonFinite { what: "stationary constants" });
        }
        Ok(())
    }

    /// `w″` at `w`.
    pub fn curvature(&self, w: f64) -> f64 {
        w * (0.5 * self.j * self.j / w.powi(4) + self.law.enthalpy(w * w) - self.k)
    }

    /// The first integral `H(w, w′)`.
    pub fn first_integral(&self, w: f64, dw: f64) -> f64 {
        0.5 * dw * dw - 0.5 * self.law.primitive(w * w)
            + 0.5 * self.k * w * w
            + 0.25 * self.j * self.j / (w * w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShotEvent {
    /// `w` dropped to the floor at `x`.
    Vacuum { x: f64, w: f64 },
    /// `w` or `w′` left the representable range at `x`.
    Overflow { x: f64 },
}

/// Samples of a shot up to the span or the first event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryProfile {
    pub dx: f64,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub event: Option<ShotEvent>,
}

impl StationaryProfile {
    pub fn completed(&self) -> bool {
        self.event.is_none()
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::bounded(self.x[0], self.x[self.x.len() - 1], self.x.len())
    }

    pub fn field(&self) -> Result<ScalarField> {
        ScalarField::new(self.grid()?, self.w.clone())
    }

    /// Largest `|H(x) − H(0)|`.
    pub fn first_integral_drift(&self, p: &StationaryParams) -> f64 {
        let h0 = p.first_integral(self.w[0], self.dw[0]);
        self.w
            .iter()
            .zip(&self.dw)
            .map(|(&w, &d)| (p.first_integral(w, d) - h0).abs())
            .fold(0.0, f64::max)
    }
}

/// RK4 shot with step `dx` (adjusted so the span is covered exactly) and the
/// default vacuum floor.
pub fn stationary_shoot(p: &StationaryParams, dx: f64) -> Result<StationaryProfile> {
    stationary_shoot_with_floor(p, dx, VACUUM_FLOOR.sqrt())
}

/// As [`stationary_shoot`], stopping once `w ≤ floor`.
pub fn stationary_shoot_with_floor(p: &StationaryParams, dx: f64, floor: f64) -> Result<StationaryProfile> {
    p.validate()?;
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(Error::InvalidParameter(format!("dx must be positive, got {dx}")));
    }
    let n = ((p.span / dx) - 1e-9).ceil().max(1.0) as usize;
    let h = p.span / n as f64;
    let mut out = StationaryProfile {
        dx: h,
        x: vec![0.0],
        w: vec![p.w0],
        dw: vec![p.dw0],
        event: None,
    };
    let (mut w, mut v) = (p.w0, p.dw0);
    for step in 1..=n {
        let x = step as f64 * h;
        let (k1w, k1v) = (v, p.curvature(w));
        let (k2w, k2v) = (v + 0.5 * h * k1v, p.curvature(w + 0.5 * h * k1w));
        let (k3w, k3v) = (v + 0.5 * h * k2v, p.curvature(w + 0.5 * h * k2w));
        let (k4w, k4v) = (v + h * k3v, p.curvature(w + h * k3w));
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !w.is_finite() || !v.is_finite() || w.abs() > OVERFLOW || v.abs() > OVERFLOW {
            out.event = Some(ShotEvent::Overflow { x });
            break;
        }
        if w <= floor {
            out.event = Some(ShotEvent::Vacuum { x, w });
            break;
        }
        out.x.push(x);
        out.w.push(w);
        out.dw.push(v);
    }
    Ok(out)
}

/// Second derivative: central in the interior, five-point one-sided
/// (third order) at the two ends.
fn second_derivative(f: &[f64], dx: f64) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 5 {
        return Err(Error::StencilUnderflow { order: 2, needed: 5, have: n });
    }
    let h2 = dx * dx;
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    }
    // (35, −104, 114, −56, 11)/12 written on differences so constants give 0
    let closure = |a: [f64; 5]| {
        let d = |k: usize| a[k] - a[0];
        (-104.0 * d(1) + 114.0 * d(2) - 56.0 * d(3) + 11.0 * d(4)) / (12.0 * h2)
    };
    d[0] = closure([f[0], f[1], f[2], f[3], f[4]]);
    d[n - 1] = closure([f[n - 1], f[n - 2], f[n - 3], f[n - 4], f[n - 5]]);
    Ok(d)
}

/// `½J²/w⁴ + h(w²) − w″/w − K` pointwise.
pub fn stationary_residual(w: &ScalarField, p: &StationaryParams) -> Result<ScalarField> {
    let floor = VACUUM_FLOOR.sqrt();
    let (i, min) = w.argmin();
    if min <= floor {
        return Err(Error::Vacuum { min, x: w.grid().x(i), floor });
    }
    let d2 = if w.grid().is_periodic() {
        crate::numerics::derivative_values(w.values(), w.grid().dx(), true, 2)?
    } else {
        second_derivative(w.values(), w.grid().dx())?
    };
    let vals = w
        .values()
        .iter()
        .zip(&d2)
        .map(|(&v, &dd)| 0.5 * p.j * p.j / v.powi(4) + p.law.enthalpy(v * v) - dd / v - p.k)
        .collect();
    ScalarField::new(*w.grid(), vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma2() -> PressureLaw {
        PressureLaw::power(2.0).unwrap()
    }

    fn params(j: f64, k: f64, w0: f64) -> StationaryParams {
        StationaryParams { j, k, law: gamma2(), w0, dw0: 0.0, span: 1.0 }
    }

    #[test]
    fn constant_profile_is_a_fixed_point() {
        let w0 = 1.3;
        let p = params(0.0, gamma2().enthalpy(w0 * w0), w0);
        let shot = stationary_shoot(&p, 1e-2).unwrap();
        assert!(shot.completed());
        assert!(shot.w.iter().all(|&w| (w - w0).abs() < 1e-12));
        let r = stationary_residual(&shot.field().unwrap(), &p).unwrap();
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn moving_constant_profile() {
        let (w0, u0) = (0.9, 0.7);
        let k = 0.5 * u0 * u0 + gamma2().enthalpy(w0 * w0);
        let p = params(w0 * w0 * u0, k, w0);
        let shot = stationary_shoot(&p, 1e-2).unwrap();
        assert!(shot.w.iter().all(|&w| (w - w0).abs() < 1e-12));
        assert!(stationary_residual(&shot.field().unwrap(), &p).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn wrong_k_shifts_the_residual() {
        let w0 = 1.1;
        let k_true = gamma2().enthalpy(w0 * w0);
        let g = Grid1D::bounded(0.0, 1.0, 33).unwrap();
        let w = ScalarField::constant(g, w0).unwrap();
        let r = stationary_residual(&w, &params(0.0, k_true - 0.25, w0)).unwrap();
        assert!(r.values().iter().all(|v| (v - 0.25).abs() < 1e-12));
    }

    fn perturbed() -> StationaryParams {
        params(0.0, gamma2().enthalpy(1.0), 1.0 + 1e-3)
    }

    #[test]
    fn shot_self_converges_at_fourth_order() {
        let p = perturbed();
        let run = |dx: f64| *stationary_shoot(&p, dx).unwrap().w.last().unwrap();
        let (a, b, c) = (run(0.1), run(0.05), run(0.025));
        let ratio = (a - b) / (b - c);
        assert!((14.0..=18.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn shot_residual_and_first_integral() {
        let p = perturbed();
        let shot = stationary_shoot(&p, 1e-3).unwrap();
        let r = stationary_residual(&shot.field().unwrap(), &p).unwrap();
        assert!(r.max_abs() <= 1e-8, "{}", r.max_abs());
        assert!(shot.first_integral_drift(&p) <= 1e-8);
    }

    #[test]
    fn supercritical_flux_reports_an_event() {
        // K well below h(w0²) + ½J²/w0⁴ drives w up without bound.
        let p = StationaryParams { j: 3.0, k: 0.5, law: gamma2(), w0: 1.0, dw0: 0.0, span: 50.0 };
        let shot = stationary_shoot(&p, 1e-2).unwrap();
        assert!(matches!(shot.event, Some(ShotEvent::Overflow { .. })));
        let p = StationaryParams { j: 0.0, k: 5.0, law: gamma2(), w0: 1.0, dw0: -1.0, span: 10.0 };
        let shot = stationary_shoot(&p, 1e-3).unwrap();
        assert!(matches!(shot.event, Some(ShotEvent::Vacuum { .. })), "{:?}", shot.event);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(stationary_shoot(&params(0.0, 1.0, -1.0), 0.1).is_err());
        assert!(stationary_shoot(&params(0.0, 1.0, 1.0), 0.0).is_err());
    }
}
