//! Charts from the reference square `[-1,1]²` onto the physical domain,
//! their Jacobians, and the metric weights that turn reference-coefficient
//! integrals into physical L² inner products of k-forms.
//!
//! A [`Mesh`] composes one global chart with the affine tiling of the
//! reference square into `M_x × M_y` elements, so every element chart is as
//! smooth as the global one.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::basis1d::{GaussRule, GllGrid};
use crate::error::{Error, Result};
use crate::topology::{CellComplex, Side};

/// 2×2 Jacobian `J[r][c] = ∂x_r / ∂ξ_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian(pub [[f64; 2]; 2]);

impl Jacobian {
    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let m = &self.0;
        let d = self.det();
        [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
    }

    /// Column `c`: the image of the reference direction `ξ_c`.
    pub fn column(&self, c: usize) -> [f64; 2] {
        [self.0[0][c], self.0[1][c]]
    }

    /// Physical covector coefficients from reference ones: `a = J⁻ᵀ â`.
    pub fn push_covector(&self, reference: [f64; 2]) -> [f64; 2] {
        let inv = self.inverse();
        [
            inv[0][0] * reference[0] + inv[1][0] * reference[1],
            inv[0][1] * reference[0] + inv[1][1] * reference[1],
        ]
    }

    /// Reference covector coefficients from physical ones: `â = Jᵀ a`.
    pub fn pull_covector(&self, physical: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [
            m[0][0] * physical[0] + m[1][0] * physical[1],
            m[0][1] * physical[0] + m[1][1] * physical[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Affine,
    AnalyticCurvilinear,
}

/// Smooth map from the reference square onto a physical domain.
pub trait Chart: Send + Sync + fmt::Debug {
    fn eval(&self, xi: f64, eta: f64) -> [f64; 2];
    fn jacobian(&self, xi: f64, eta: f64) -> Jacobian;
    fn smoothness(&self) -> Smoothness;
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityChart;

impl Chart for IdentityChart {
    fn eval(&self, xi: f64, eta: f64) -> [f64; 2] {
        [xi, eta]
    }
    fn jacobian(&self, _: f64, _: f64) -> Jacobian {
        Jacobian([[1.0, 0.0], [0.0, 1.0]])
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Affine
    }
}

/// Affine map of `[-1,1]²` onto `[x0,x1] × [y0,y1]`.
#[derive(Debug, Clone, Copy)]
pub struct AffineBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Chart for AffineBox {
    fn eval(&self, xi: f64, eta: f64) -> [f64; 2] {
        [
            0.5 * (self.x[0] + self.x[1]) + 0.5 * (self.x[1] - self.x[0]) * xi,
            0.5 * (self.y[0] + self.y[1]) + 0.5 * (self.y[1] - self.y[0]) * eta,
        ]
    }
    fn jacobian(&self, _: f64, _: f64) -> Jacobian {
        Jacobian([
            [0.5 * (self.x[1] - self.x[0]), 0.0],
            [0.0, 0.5 * (self.y[1] - self.y[0])],
        ])
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Affine
    }
}

/// Sinusoidally perturbed unit square:
///
/// x = ½ + ½ (ξ + a cos(2πξ) sin(2πη)),
/// y = ½ + ½ (η + a sin(2πξ) cos(2πη)).
#[derive(Debug, Clone, Copy)]
pub struct SinusoidalChart {
    pub amplitude: f64,
}

impl Chart for SinusoidalChart {
    fn eval(&self, xi: f64, eta: f64) -> [f64; 2] {
        let a = self.amplitude;
        let (sx, cx) = (2.0 * PI * xi).sin_cos();
        let (se, ce) = (2.0 * PI * eta).sin_cos();
        [0.5 + 0.5 * (xi + a * cx * se), 0.5 + 0.5 * (eta + a * sx * ce)]
    }
    fn jacobian(&self, xi: f64, eta: f64) -> Jacobian {
        let a = self.amplitude;
        let (sx, cx) = (2.0 * PI * xi).sin_cos();
        let (se, ce) = (2.0 * PI * eta).sin_cos();
        let k = a * PI; // ½ · a · 2π
        Jacobian([[0.5 - k * sx * se, k * cx * ce], [k * cx * ce, 0.5 - k * sx * se]])
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::AnalyticCurvilinear
    }
}

/// Boundary curve `s ∈ [-1,1] ↦ (point, d point / ds)`.
pub type BoundaryCurve = Arc<dyn Fn(f64) -> ([f64; 2], [f64; 2]) + Send + Sync>;

/// Gordon–Hall transfinite interpolation of four boundary curves.
///
/// `bottom`/`top` are parametrized by ξ, `left`/`right` by η, all running in
/// the direction of increasing reference coordinate; corners must agree.
#[derive(Clone)]
pub struct TransfiniteChart {
    pub bottom: BoundaryCurve,
    pub right: BoundaryCurve,
    pub top: BoundaryCurve,
    pub left: BoundaryCurve,
}

impl fmt::Debug for TransfiniteChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransfiniteChart").finish_non_exhaustive()
    }
}

impl Chart for TransfiniteChart {
    fn eval(&self, xi: f64, eta: f64) -> [f64; 2] {
        let (u, v) = (0.5 * (xi + 1.0), 0.5 * (eta + 1.0));
        let (b, _) = (self.bottom)(xi);
        let (t, _) = (self.top)(xi);
        let (l, _) = (self.left)(eta);
        let (r, _) = (self.right)(eta);
        let corners = self.corners();
        std::array::from_fn(|d| {
            (1.0 - v) * b[d] + v * t[d] + (1.0 - u) * l[d] + u * r[d]
                - ((1.0 - u) * (1.0 - v) * corners[0][d]
                    + u * (1.0 - v) * corners[1][d]
                    + (1.0 - u) * v * corners[2][d]
                    + u * v * corners[3][d])
        })
    }

    fn jacobian(&self, xi: f64, eta: f64) -> Jacobian {
        let (u, v) = (0.5 * (xi + 1.0), 0.5 * (eta + 1.0));
        let (b, db) = (self.bottom)(xi);
        let (t, dt) = (self.top)(xi);
        let (l, dl) = (self.left)(eta);
        let (r, dr) = (self.right)(eta);
        let [p00, p10, p01, p11] = self.corners();
        let mut j = [[0.0; 2]; 2];
        for d in 0..2 {
            j[d][0] = (1.0 - v) * db[d] + v * dt[d] + 0.5 * (r[d] - l[d])
                - 0.5 * ((1.0 - v) * (p10[d] - p00[d]) + v * (p11[d] - p01[d]));
            j[d][1] = 0.5 * (t[d] - b[d]) + (1.0 - u) * dl[d] + u * dr[d]
                - 0.5 * ((1.0 - u) * (p01[d] - p00[d]) + u * (p11[d] - p10[d]));
        }
        Jacobian(j)
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::AnalyticCurvilinear
    }
}

impl TransfiniteChart {
    fn corners(&self) -> [[f64; 2]; 4] {
        [
            (self.bottom)(-1.0).0,
            (self.bottom)(1.0).0,
            (self.top)(-1.0).0,
            (self.top)(1.0).0,
        ]
    }
}

/// Metric weight for the L² inner product of reference k-form coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricWeight {
    Scalar(f64),
    Tensor([[f64; 2]; 2]),
}

/// Global reference-to-physical chart.
#[derive(Debug, Clone)]
pub struct Mapping {
    chart: Arc<dyn Chart>,
}

impl Mapping {
    pub fn new(chart: impl Chart + 'static) -> Self {
        Self { chart: Arc::new(chart) }
    }

    pub fn identity() -> Self {
        Self::new(IdentityChart)
    }

    /// `[-1,1]² → [0,1]²`.
    pub fn unit_square() -> Self {
        Self::affine_box([0.0, 1.0], [0.0, 1.0])
    }

    pub fn affine_box(x: [f64; 2], y: [f64; 2]) -> Self {
        Self::new(AffineBox { x, y })
    }

    /// The sinusoidally perturbed unit square with amplitude 1/10.
    pub fn curvilinear() -> Self {
        Self::new(SinusoidalChart { amplitude: 0.1 })
    }

    pub fn smoothness(&self) -> Smoothness {
        self.chart.smoothness()
    }

    pub fn eval(&self, xi: f64, eta: f64) -> [f64; 2] {
        self.chart.eval(xi, eta)
    }

    /// Analytic Jacobian; fails if it does not preserve orientation.
    pub fn jacobian(&self, xi: f64, eta: f64) -> Result<Jacobian> {
        checked(self.chart.jacobian(xi, eta), xi, eta)
    }

    pub fn metric_weights(&self, k: usize, xi: f64, eta: f64) -> Result<MetricWeight> {
        metric_weight(k, &self.jacobian(xi, eta)?)
    }
}

fn checked(j: Jacobian, xi: f64, eta: f64) -> Result<Jacobian> {
    let det = j.det();
    if det > 0.0 && det.is_finite() {
        Ok(j)
    } else {
        Err(Error::DegenerateGeometry { xi, eta, det })
    }
}

/// `W_0 = det J`, `W_1 = det J · J⁻¹ J⁻ᵀ`, `W_2 = 1 / det J`.
pub fn metric_weight(k: usize, j: &Jacobian) -> Result<MetricWeight> {
    let det = j.det();
    match k {
        0 => Ok(MetricWeight::Scalar(det)),
        1 => {
            let inv = j.inverse();
            let mut w = [[0.0; 2]; 2];
            for (r, row) in w.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = det * (inv[r][0] * inv[c][0] + inv[r][1] * inv[c][1]);
                }
            }
            Ok(MetricWeight::Tensor(w))
        }
        2 => Ok(MetricWeight::Scalar(1.0 / det)),
        _ => Err(Error::InvalidDegree {
            degree: k,
            operation: "metric weights",
        }),
    }
}

/// Affine tile of the reference square composed with the global chart.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap<'a> {
    chart: &'a dyn Chart,
    offset: [f64; 2],
    scale: [f64; 2],
}

impl ElementMap<'_> {
    /// Element-local reference coordinates to global reference coordinates.
    pub fn to_global_reference(&self, s: f64, t: f64) -> [f64; 2] {
        [self.offset[0] + self.scale[0] * s, self.offset[1] + self.scale[1] * t]
    }

    pub fn eval(&self, s: f64, t: f64) -> [f64; 2] {
        let [xi, eta] = self.to_global_reference(s, t);
        self.chart.eval(xi, eta)
    }

    pub fn jacobian(&self, s: f64, t: f64) -> Result<Jacobian> {
        let [xi, eta] = self.to_global_reference(s, t);
        let g = self.chart.jacobian(xi, eta).0;
        checked(
            Jacobian([
                [g[0][0] * self.scale[0], g[0][1] * self.scale[1]],
                [g[1][0] * self.scale[0], g[1][1] * self.scale[1]],
            ]),
            xi,
            eta,
        )
    }
}

/// Cell complex, GLL grid and global chart of a discretized domain.
#[derive(Debug, Clone)]
pub struct Mesh {
    complex: CellComplex,
    grid: GllGrid,
    mapping: Mapping,
    quad_extra: usize,
}

/// Gauss points per direction beyond the polynomial order used for every
/// metric-weighted integral unless overridden.
pub const DEFAULT_QUAD_EXTRA: usize = 6;

impl Mesh {
    /// Builds the mesh and checks `det J > 0` at the GLL and Gauss points of
    /// every element.
    pub fn new(complex: CellComplex, mapping: Mapping) -> Result<Self> {
        let grid = GllGrid::new(complex.order())?;
        let mesh = Self {
            complex,
            grid,
            mapping,
            quad_extra: DEFAULT_QUAD_EXTRA,
        };
        let gauss = GaussRule::legendre(mesh.quadrature_points())?;
        let pts: Vec<f64> = mesh.grid.nodes().iter().chain(&gauss.points).copied().collect();
        for e in 0..mesh.complex.num_elements() {
            let em = mesh.element_map(e);
            for &t in &pts {
                for &s in &pts {
                    em.jacobian(s, t)?;
                }
            }
        }
        Ok(mesh)
    }

    /// Uniform `m × m` elements of order `n` on the given chart.
    pub fn uniform(m: usize, n: usize, mapping: Mapping) -> Result<Self> {
        Self::new(CellComplex::new(m, m, n)?, mapping)
    }

    /// Uses `N + extra` Gauss points per direction for reductions, mass
    /// matrices, loads and error norms.
    pub fn with_quad_extra(mut self, extra: usize) -> Self {
        self.quad_extra = extra;
        self
    }

    pub fn quadrature_points(&self) -> usize {
        self.order() + self.quad_extra
    }

    pub fn complex(&self) -> &CellComplex {
        &self.complex
    }

    pub fn grid(&self) -> &GllGrid {
        &self.grid
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    pub fn order(&self) -> usize {
        self.complex.order()
    }

    pub fn element_map(&self, e: usize) -> ElementMap<'_> {
        let (ex, ey) = self.complex.element_position(e);
        let (mx, my) = (self.complex.elements_x() as f64, self.complex.elements_y() as f64);
        ElementMap {
            chart: self.mapping.chart.as_ref(),
            offset: [-1.0 + (2.0 * ex as f64 + 1.0) / mx, -1.0 + (2.0 * ey as f64 + 1.0) / my],
            scale: [1.0 / mx, 1.0 / my],
        }
    }

    /// Element-local reference coordinate of the side, e.g. `t = -1` for the
    /// bottom; returns `(fixed coordinate value, whether the side varies in s)`.
    pub fn side_frame(side: Side) -> (f64, bool) {
        match side {
            Side::Bottom => (-1.0, true),
            Side::Top => (1.0, true),
            Side::Left => (-1.0, false),
            Side::Right => (1.0, false),
        }
    }
}
