//! Weight functions for the multi-dimensional observable `I = ∫ a ρ`.
//!
//! A weight must satisfy, with `g = −Δa`:
//!
//! ```text
//! a ≥ 0 in Ω,   a = 0 on ∂Ω_D,   ∇a·ν = 0 on ∂Ω_N,
//! Hess a ≤ 0,   g ≥ 0,   Δg ≤ 0,   ∂g/∂ν ≥ 0.
//! ```
//!
//! The supported weights are diagonal quadratics `c − Σ qᵢ (xᵢ − centerᵢ)²`,
//! evaluated in closed form so the checks are exact up to round-off.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{windows, Window};
use crate::error::{Error, Result};
use crate::numerics::{integrate_2d, Field2D, Grid2D};
use crate::nls::WaveTrajectory2D;
use crate::physics::{FluidState2D, PressureLaw};

/// Hydrodynamic state of the multi-dimensional monitors. Dynamics run on
/// two-dimensional tensor grids only.
pub type FluidStateND = FluidState2D;

/// Default number of sample points for [`verify_weight`].
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Default seed of the sampler.
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Tolerance of every weight check.
pub const WEIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPart {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum FacetShape {
    /// The unit sphere.
    Sphere,
    /// The hyperplane `x[axis] = value` with outward normal `sign · e_axis`.
    Plane { axis: usize, value: f64, sign: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Facet {
    pub part: BoundaryPart,
    pub shape: FacetShape,
}

impl Facet {
    pub fn normal(&self, x: &[f64]) -> Vec<f64> {
        match self.shape {
            FacetShape::Sphere => {
                let r = norm(x);
                x.iter().map(|v| v / r).collect()
            }
            FacetShape::Plane { axis, sign, .. } => {
                let mut n = vec![0.0; x.len()];
                n[axis] = sign;
                n
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    /// `|x| ≤ 1`, all Dirichlet.
    Ball,
    /// `[−1, 1] × cross-section box`; Dirichlet at `x₁ = ±1`, Neumann on the sides.
    Cylinder,
    /// Axis-aligned box, Dirichlet at both ends of `dirichlet_axis`, Neumann elsewhere.
    Box { dirichlet_axis: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainDescriptor {
    pub kind: DomainKind,
    pub dim: usize,
    /// Bounding box, one `(lo, hi)` per axis.
    pub bounds: Vec<(f64, f64)>,
    pub facets: Vec<Facet>,
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Unsupported(format!("dimension {dim}; supported are 1, 2, 3")));
    }
    Ok(())
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(Error::InvalidParameter("box bounds need finite lo < hi".into()));
    }
    Ok(())
}

fn box_facets(bounds: &[(f64, f64)], dirichlet_axis: usize) -> Vec<Facet> {
    let mut facets = Vec::with_capacity(2 * bounds.len());
    for (axis, &(lo, hi)) in bounds.iter().enumerate() {
        let part = if axis == dirichlet_axis {
            BoundaryPart::Dirichlet
        } else {
            BoundaryPart::Neumann
        };
        for (value, sign) in [(lo, -1.0), (hi, 1.0)] {
            facets.push(Facet {
                part,
                shape: FacetShape::Plane { axis, value, sign },
            });
        }
    }
    facets
}

impl DomainDescriptor {
    pub fn ball(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            kind: DomainKind::Ball,
            dim,
            bounds: vec![(-1.0, 1.0); dim],
            facets: vec![Facet {
                part: BoundaryPart::Dirichlet,
                shape: FacetShape::Sphere,
            }],
        })
    }

    /// `cross` gives the box of the remaining `dim − 1` axes.
    pub fn cylinder(cross: Vec<(f64, f64)>) -> Result<Self> {
        let dim = cross.len() + 1;
        check_dim(dim)?;
        check_bounds(&cross)?;
        let mut bounds = vec![(-1.0, 1.0)];
        bounds.extend(cross);
        Ok(Self {
            kind: DomainKind::Cylinder,
            dim,
            facets: box_facets(&bounds, 0),
            bounds,
        })
    }

    pub fn box_domain(bounds: Vec<(f64, f64)>, dirichlet_axis: usize) -> Result<Self> {
        let dim = bounds.len();
        check_dim(dim)?;
        check_bounds(&bounds)?;
        if dirichlet_axis >= dim {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet axis {dirichlet_axis} out of range for dimension {dim}"
            )));
        }
        Ok(Self {
            kind: DomainKind::Box { dirichlet_axis },
            dim,
            facets: box_facets(&bounds, dirichlet_axis),
            bounds,
        })
    }

    /// The unit interval with both ends Dirichlet.
    pub fn unit_interval() -> Self {
        Self::box_domain(vec![(0.0, 1.0)], 0).expect("valid interval")
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let in_box = x
            .iter()
            .zip(&self.bounds)
            .all(|(v, &(lo, hi))| (lo..=hi).contains(v));
        match self.kind {
            DomainKind::Ball => norm(x) <= 1.0,
            _ => in_box,
        }
    }

    fn sample_interior(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let x: Vec<f64> = self.bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
            if self.contains(&x) {
                return x;
            }
        }
    }

    fn sample_facet(&self, facet: &Facet, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match facet.shape {
            FacetShape::Sphere => loop {
                let x: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let r = norm(&x);
                if r > 1e-3 && r <= 1.0 {
                    return x.iter().map(|v| v / r).collect();
                }
            },
            FacetShape::Plane { axis, value, .. } => {
                let mut x = self.sample_interior(rng);
                x[axis] = value;
                x
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closed-form weight with derivatives up to what the checks need.
pub trait WeightField {
    fn domain(&self) -> &DomainDescriptor;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `d × d`.
    fn hessian(&self, x: &[f64]) -> Vec<f64>;
    /// `g = −Δa`.
    fn g(&self, x: &[f64]) -> f64;
    fn laplacian_g(&self, x: &[f64]) -> f64;
    fn gradient_g(&self, x: &[f64]) -> Vec<f64>;
}

/// `a(x) = c − Σ qᵢ (xᵢ − centerᵢ)²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightFunction {
    pub domain: DomainDescriptor,
    pub c: f64,
    pub q: Vec<f64>,
    pub center: Vec<f64>,
}

impl WeightFunction {
    pub fn quadratic(domain: DomainDescriptor, c: f64, q: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        if q.len() != domain.dim || center.len() != domain.dim {
            return Err(Error::InvalidParameter("q and center need one entry per axis".into()));
        }
        if q.iter().any(|&v| !(v >= 0.0 && v.is_finite())) || !c.is_finite() {
            return Err(Error::InvalidParameter("quadratic weight needs finite c and q ≥ 0".into()));
        }
        Ok(Self { domain, c, q, center })
    }

    /// `det Hess(−a) = Π 2qᵢ`.
    pub fn monge_ampere_determinant(&self) -> f64 {
        self.q.iter().map(|q| 2.0 * q).product()
    }
}

impl WeightField for WeightFunction {
    fn domain(&self) -> &DomainDescriptor {
        &self.domain
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.c
            - self
                .q
                .iter()
                .zip(&self.center)
                .zip(x)
                .map(|((q, c), v)| q * (v - c) * (v - c))
                .sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.q
            .iter()
            .zip(&self.center)
            .zip(x)
            .map(|((q, c), v)| -2.0 * q * (v - c))
            .collect()
    }

    fn hessian(&self, _x: &[f64]) -> Vec<f64> {
        let d = self.q.len();
        let mut h = vec![0.0; d * d];
        for (i, q) in self.q.iter().enumerate() {
            h[i * d + i] = -2.0 * q;
        }
        h
    }

    fn g(&self, _x: &[f64]) -> f64 {
        2.0 * self.q.iter().sum::<f64>()
    }

    fn laplacian_g(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient_g(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.q.len()]
    }
}

/// Canonical weight of a domain.
///
/// Ball: `1 − |x|²`. Cylinder: `1 − x₁²`. Box: `(xₖ − lo)(hi − xₖ)` along
/// the Dirichlet axis, which on `[0, 1]` is `x(1 − x)`.
pub fn make_weight(dom: &DomainDescriptor) -> Result<WeightFunction> {
    let d = dom.dim;
    match dom.kind {
        DomainKind::Ball => WeightFunction::quadratic(dom.clone(), 1.0, vec![1.0; d], vec![0.0; d]),
        DomainKind::Cylinder => {
            let mut q = vec![0.0; d];
            q[0] = 1.0;
            WeightFunction::quadratic(dom.clone(), 1.0, q, vec![0.0; d])
        }
        DomainKind::Box { dirichlet_axis } => {
            let (lo, hi) = dom.bounds[dirichlet_axis];
            let mut q = vec![0.0; d];
            let mut center = vec![0.0; d];
            q[dirichlet_axis] = 1.0;
            center[dirichlet_axis] = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            WeightFunction::quadratic(dom.clone(), half * half, q, center)
        }
    }
}

/// One verification check: `value` compared against `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightCheck {
    pub name: &'static str,
    pub value: f64,
    /// `value ≤ threshold` when `upper`, `value ≥ threshold` otherwise.
    pub threshold: f64,
    pub upper: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightReport {
    pub interior_samples: usize,
    pub boundary_samples: usize,
    pub checks: Vec<WeightCheck>,
}

impl WeightReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn check(&self, name: &str) -> Option<&WeightCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn max_eigenvalue(h: &[f64], d: usize) -> f64 {
    let m = DMatrix::from_row_slice(d, d, h);
    SymmetricEigen::new(m).eigenvalues.max()
}

/// Samples the weight conditions at `samples` interior points and as many
/// boundary points, split evenly over the facets, with the default seed.
pub fn verify_weight(w: &dyn WeightField, samples: usize) -> WeightReport {
    verify_weight_seeded(w, samples, DEFAULT_SEED)
}

pub fn verify_weight_seeded(w: &dyn WeightField, samples: usize, seed: u64) -> WeightReport {
    let dom = w.domain();
    let d = dom.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut min_a = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    let mut max_lap = 0.0f64;
    let mut min_g = f64::INFINITY;
    let mut max_lap_g = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x = dom.sample_interior(&mut rng);
        min_a = min_a.min(w.value(&x));
        let h = w.hessian(&x);
        max_eig = max_eig.max(max_eigenvalue(&h, d));
        let lap: f64 = (0..d).map(|i| h[i * d + i]).sum();
        max_lap = max_lap.max((lap + w.g(&x)).abs());
        min_g = min_g.min(w.g(&x));
        max_lap_g = max_lap_g.max(w.laplacian_g(&x));
    }

    let per_facet = (samples / dom.facets.len()).max(1);
    let mut max_dirichlet = 0.0f64;
    let mut max_neumann = 0.0f64;
    let mut min_dg = f64::INFINITY;
    for facet in &dom.facets {
        for _ in 0..per_facet {
            let x = dom.sample_facet(facet, &mut rng);
            let nu = facet.normal(&x);
            match facet.part {
                BoundaryPart::Dirichlet => max_dirichlet = max_dirichlet.max(w.value(&x).abs()),
                BoundaryPart::Neumann => {
                    max_neumann = max_neumann.max(dot(&w.gradient(&x), &nu).abs())
                }
            }
            min_dg = min_dg.min(dot(&w.gradient_g(&x), &nu));
        }
    }

    let upper = |name, value: f64| WeightCheck {
        name,
        value,
        threshold: WEIGHT_TOL,
        upper: true,
        passed: value <= WEIGHT_TOL,
    };
    let lower = |name, value: f64| WeightCheck {
        name,
        value,
        threshold: -WEIGHT_TOL,
        upper: false,
        passed: value >= -WEIGHT_TOL,
    };
    let has = |part| dom.facets.iter().any(|f| f.part == part);
    let mut checks = vec![
        lower("nonnegative_weight", min_a),
        upper("hessian_semidefinite", max_eig),
        upper("laplacian_matches_g", max_lap),
    ];
    if has(BoundaryPart::Dirichlet) {
        checks.push(upper("vanishes_on_dirichlet", max_dirichlet));
    }
    if has(BoundaryPart::Neumann) {
        checks.push(upper("zero_flux_on_neumann", max_neumann));
    }
    checks.extend([
        lower("nonnegative_g", min_g),
        upper("superharmonic_g", max_lap_g),
        lower("outward_g_slope", min_dg),
    ]);
    WeightReport {
        interior_samples: samples,
        boundary_samples: per_facet * dom.facets.len(),
        checks,
    }
}

/// Bilinear interpolation on a tensor grid; the point must lie inside.
fn interpolate(f: &Field2D, p: [f64; 2]) -> Result<f64> {
    let g = f.grid();
    let locate = |axis: &crate::numerics::Grid1D, v: f64| -> Result<(usize, f64)> {
        let n = axis.len();
        let hi = if axis.is_periodic() { axis.x_hi() - axis.dx() } else { axis.x_hi() };
        let tol = 1e-12 * axis.length();
        if v < axis.x_lo() - tol || v > hi + tol {
            return Err(Error::InvalidParameter(format!("point {v} outside the grid")));
        }
        let s = ((v - axis.x_lo()) / axis.dx()).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        Ok((i, s - i as f64))
    };
    let (i, fx) = locate(&g.x, p[0])?;
    let (j, fy) = locate(&g.y, p[1])?;
    Ok((1.0 - fx) * ((1.0 - fy) * f.at(i, j) + fy * f.at(i, j + 1))
        + fx * ((1.0 - fy) * f.at(i + 1, j) + fy * f.at(i + 1, j + 1)))
}

/// Pointwise fields needed at the boundary, on the grid.
struct BoundaryFields {
    rho: Field2D,
    bohm: Field2D,
    grad_sq: Field2D,
    p_over_rho: Field2D,
    slope: [Field2D; 2],
}

impl BoundaryFields {
    fn new(s: &FluidStateND, law: &PressureLaw, floor: f64) -> Result<Self> {
        let min = s.rho.min();
        if min <= floor {
            return Err(Error::Vacuum { min, x: f64::NAN, floor });
        }
        let w = s.rho.map(f64::sqrt)?;
        let wx = w.partial(0, 1)?;
        let wy = w.partial(1, 1)?;
        let lap = w.partial(0, 2)?.zip_with(&w.partial(1, 2)?, |a, b| a + b)?;
        Ok(Self {
            bohm: lap.zip_with(&w, |l, v| l / v)?,
            grad_sq: wx
                .zip_with(&wy, |a, b| a * a + b * b)?
                .zip_with(&s.rho, |g, r| g / r)?,
            p_over_rho: s.rho.map(|r| law.pressure(r) / r)?,
            rho: s.rho.clone(),
            slope: [wx, wy],
        })
    }
}

/// Boundary sample points of a facet with their arc-length weights.
fn facet_points(dom: &DomainDescriptor, facet: &Facet, grid: &Grid2D, samples: usize) -> Vec<([f64; 2], f64)> {
    match facet.shape {
        FacetShape::Sphere => {
            let m = samples.max(8);
            let ds = 2.0 * std::f64::consts::PI / m as f64;
            (0..m)
                .map(|k| {
                    let th = k as f64 * ds;
                    ([th.cos(), th.sin()], ds)
                })
                .collect()
        }
        FacetShape::Plane { axis, value, .. } => {
            let other = if axis == 0 { grid.y } else { grid.x };
            let (lo, hi) = dom.bounds[1 - axis];
            let weights = other.quadrature_weights();
            other
                .points()
                .into_iter()
                .zip(weights)
                .filter(|(v, _)| *v >= lo - 1e-12 && *v <= hi + 1e-12)
                .map(|(v, wq)| {
                    let p = if axis == 0 { [value, v] } else { [v, value] };
                    (p, wq)
                })
                .collect()
        }
    }
}

/// Integrand of the Dirichlet boundary condition at facet samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletIntegrand {
    pub points: Vec<[f64; 2]>,
    /// Arc-length quadrature weight of each point.
    pub ds: Vec<f64>,
    pub rho: Vec<f64>,
    /// `(∂a/∂ν)(Q + |∇√ρ|²/ρ − P/ρ) − (u·∇a)(u·ν)`.
    pub general: Vec<f64>,
    /// Sphere: `2[(u·x)² + P/ρ − Q]`; cylinder: `2[u₁² + P/ρ − Q]`.
    pub reduced: Option<Vec<f64>>,
}

impl DirichletIntegrand {
    /// `∫_{∂Ω_D} ρ · general ds`.
    pub fn flux(&self) -> f64 {
        self.general
            .iter()
            .zip(&self.rho)
            .zip(&self.ds)
            .map(|((g, r), w)| g * r * w)
            .sum()
    }

    pub fn max_discrepancy(&self) -> Option<f64> {
        self.reduced.as_ref().map(|r| {
            r.iter()
                .zip(&self.general)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

fn check_planar(w: &dyn WeightField) -> Result<()> {
    if w.domain().dim != 2 {
        return Err(Error::Unsupported(format!(
            "boundary integrands need a two-dimensional domain, got d = {}",
            w.domain().dim
        )));
    }
    Ok(())
}

/// Evaluates the Dirichlet boundary integrand of `s`. Curved facets use
/// `samples` equally spaced points; planar facets use the grid trace.
pub fn dirichlet_integrand(
    w: &dyn WeightField,
    s: &FluidStateND,
    law: &PressureLaw,
    floor: f64,
    samples: usize,
) -> Result<DirichletIntegrand> {
    check_planar(w)?;
    let f = BoundaryFields::new(s, law, floor)?;
    dirichlet_from(w, s, &f, samples)
}

fn dirichlet_from(w: &dyn WeightField, s: &FluidStateND, f: &BoundaryFields, samples: usize) -> Result<DirichletIntegrand> {
    let dom = w.domain();
    let mut out = DirichletIntegrand {
        points: Vec::new(),
        ds: Vec::new(),
        rho: Vec::new(),
        general: Vec::new(),
        reduced: match dom.kind {
            DomainKind::Box { .. } => None,
            _ => Some(Vec::new()),
        },
    };
    for facet in dom.facets.iter().filter(|f| f.part == BoundaryPart::Dirichlet) {
        for (p, ds) in facet_points(dom, facet, s.grid(), samples) {
            let nu = facet.normal(&p);
            let grad = w.gradient(&p);
            let u = [interpolate(&s.u[0], p)?, interpolate(&s.u[1], p)?];
            let q = interpolate(&f.bohm, p)?;
            let gsq = interpolate(&f.grad_sq, p)?;
            let pr = interpolate(&f.p_over_rho, p)?;
            let general = dot(&grad, &nu) * (q + gsq - pr) - dot(&u, &grad) * dot(&u, &nu);
            if let Some(red) = out.reduced.as_mut() {
                let along = match dom.kind {
                    DomainKind::Ball => dot(&u, &p),
                    _ => u[0],
                };
                red.push(2.0 * (along * along + pr - q));
            }
            out.points.push(p);
            out.ds.push(ds);
            out.rho.push(interpolate(&f.rho, p)?);
            out.general.push(general);
        }
    }
    Ok(out)
}

/// Largest `|u·ν|` over the Neumann facets and `|∂√ρ/∂ν|` over all facets.
fn boundary_flags(w: &dyn WeightField, s: &FluidStateND, f: &BoundaryFields, samples: usize) -> Result<(f64, f64)> {
    let dom = w.domain();
    let mut normal_u = 0.0f64;
    let mut normal_slope = 0.0f64;
    for facet in &dom.facets {
        for (p, _) in facet_points(dom, facet, s.grid(), samples) {
            let nu = facet.normal(&p);
            let slope = [interpolate(&f.slope[0], p)?, interpolate(&f.slope[1], p)?];
            normal_slope = normal_slope.max(dot(&slope, &nu).abs());
            if facet.part == BoundaryPart::Neumann {
                let u = [interpolate(&s.u[0], p)?, interpolate(&s.u[1], p)?];
                normal_u = normal_u.max(dot(&u, &nu).abs());
            }
        }
    }
    Ok((normal_u, normal_slope))
}

fn weight_field(w: &dyn WeightField, grid: &Grid2D) -> Result<Field2D> {
    let a = Field2D::from_fn(*grid, |x, y| w.value(&[x, y]))?;
    let min = a.min();
    if min < -WEIGHT_TOL {
        return Err(Error::NegativeWeight(min));
    }
    a.map(|v| v.max(0.0))
}

/// `I = ∫ a ρ` on the tensor grid.
pub fn observable_nd(w: &dyn WeightField, s: &FluidStateND) -> Result<f64> {
    check_planar(w)?;
    let a = weight_field(w, s.grid())?;
    Ok(integrate_2d(&a.zip_with(&s.rho, |a, r| a * r)?))
}

/// `∫ ρ u·∇a`.
pub fn weighted_momentum_nd(w: &dyn WeightField, s: &FluidStateND) -> Result<f64> {
    check_planar(w)?;
    let gx = Field2D::from_fn(*s.grid(), |x, y| w.gradient(&[x, y])[0])?;
    let gy = Field2D::from_fn(*s.grid(), |x, y| w.gradient(&[x, y])[1])?;
    let flux = s.rho.zip_with(
        &s.u[0].zip_with(&gx, |u, g| u * g)?.zip_with(&s.u[1].zip_with(&gy, |u, g| u * g)?, |a, b| a + b)?,
        |r, v| r * v,
    )?;
    Ok(integrate_2d(&flux))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorOptions {
    /// Tolerance on `|u·ν|` and `|∂√ρ/∂ν|` for the boundary flags.
    pub boundary_tol: f64,
    /// Sample count on curved facets.
    pub boundary_samples: usize,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self {
            boundary_tol: 1e-3,
            boundary_samples: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiDSample {
    pub t: f64,
    pub observable: f64,
    pub envelope: f64,
    /// `∫_{∂Ω_D} ρ · integrand`.
    pub boundary_flux: f64,
    pub max_normal_velocity: f64,
    pub max_normal_slope: f64,
    pub hypothesis: bool,
    /// Hypothesis held on all of `[0, t]`.
    pub hypothesis_held: bool,
    pub satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiDReport {
    pub i0: f64,
    pub m0: f64,
    pub t_star: Option<f64>,
    pub tolerance: f64,
    pub windows: Vec<Window>,
    pub samples: Vec<MultiDSample>,
    /// First snapshot time without a hydrodynamic image.
    pub vacuum_time: Option<f64>,
}

impl MultiDReport {
    pub fn passed(&self) -> bool {
        self.samples.iter().all(|s| s.satisfied != Some(false))
    }
}

/// Observable monitor along the Madelung images of a tensor-grid NLS run.
///
/// The hypothesis at a snapshot is a nonpositive Dirichlet boundary flux
/// together with the Neumann velocity and density-slope flags. The envelope
/// `I ≤ I₀ + M₀t + tol` is asserted where it has held since the start and
/// `M₀ < 0`.
pub fn multid_observable_monitor(
    traj: &WaveTrajectory2D,
    w: &dyn WeightField,
    law: &PressureLaw,
    opts: &MonitorOptions,
) -> Result<MultiDReport> {
    check_planar(w)?;
    let images: Vec<&FluidStateND> = traj
        .snapshots
        .iter()
        .map_while(|s| s.hydro.as_ref())
        .collect();
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidParameter("trajectory starts at vacuum".into()))?;
    let i0 = observable_nd(w, first)?;
    let m0 = weighted_momentum_nd(w, first)?;
    let tolerance = crate::diagnostics::envelope_tolerance(i0);
    let floor = traj.config.floor;
    let t0 = first.t;

    let mut samples = Vec::with_capacity(images.len());
    let mut held = true;
    for s in &images {
        let f = BoundaryFields::new(s, law, floor)?;
        let flux = dirichlet_from(w, s, &f, opts.boundary_samples)?.flux();
        let (nu, ns) = boundary_flags(w, s, &f, opts.boundary_samples)?;
        let hypothesis = flux <= 0.0 && nu <= opts.boundary_tol && ns <= opts.boundary_tol;
        held &= hypothesis;
        let observable = observable_nd(w, s)?;
        let envelope = i0 + m0 * (s.t - t0);
        samples.push(MultiDSample {
            t: s.t,
            observable,
            envelope,
            boundary_flux: flux,
            max_normal_velocity: nu,
            max_normal_slope: ns,
            hypothesis,
            hypothesis_held: held,
            satisfied: (held && m0 < 0.0).then(|| observable <= envelope + tolerance),
        });
    }
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let flags: Vec<bool> = samples.iter().map(|s| s.hypothesis).collect();
    Ok(MultiDReport {
        i0,
        m0,
        t_star: (m0 < 0.0).then(|| -i0 / m0),
        tolerance,
        windows: windows(&times, &flags),
        samples,
        vacuum_time: traj.snapshots.iter().find(|s| s.hydro.is_none()).map(|s| s.wave.t),
    })
}
