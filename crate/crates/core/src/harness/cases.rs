//! Manufactured solutions and the built-in test cases.
//!
//! Exact fields are written once over [`Jet2`] so that every derived datum
//! (vorticity, its derivative, `du`, body force, boundary traces) is exact.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::jet::Jet2;
use crate::error::{Error, Result};
use crate::forms::AnalyticForm;
use crate::geometry::Mapping;
use crate::solver::{BcType, BoundaryConditionSpec, Problem, SideCondition, SideData};
use crate::topology::Side;

/// 1-form `a_x dx + a_y dy` as a function of jet coordinates.
pub type VelocityField = Arc<dyn Fn(Jet2, Jet2) -> [Jet2; 2] + Send + Sync>;
/// Scalar field (pressure density) as a function of jet coordinates.
pub type ScalarField = Arc<dyn Fn(Jet2, Jet2) -> Jet2 + Send + Sync>;

/// Exact velocity 1-form and, for Stokes, pressure 2-form density.
///
/// With `u = a_x dx + a_y dy` the derived quantities are
/// `ω = d*u = -(∂x a_x + ∂y a_y)`, `du = ∂x a_y - ∂y a_x`,
/// `f = dω + d*(du + p)` and `g = du`.
#[derive(Clone)]
pub struct ExactSolution {
    velocity: VelocityField,
    pressure: Option<ScalarField>,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("pressure", &self.pressure.is_some())
            .finish_non_exhaustive()
    }
}

/// Value and gradient of the exact fields at a point.
#[derive(Debug, Clone, Copy)]
struct Local {
    a: [f64; 2],
    omega: f64,
    domega: [f64; 2],
    curl: f64,
    dcurl: [f64; 2],
    p: f64,
    dp: [f64; 2],
}

impl ExactSolution {
    pub fn new(velocity: VelocityField, pressure: Option<ScalarField>) -> Self {
        Self { velocity, pressure }
    }

    pub fn has_pressure(&self) -> bool {
        self.pressure.is_some()
    }

    fn local(&self, x: f64, y: f64) -> Local {
        let (jx, jy) = (Jet2::var_x(x), Jet2::var_y(y));
        let [ax, ay] = (self.velocity)(jx, jy);
        let p = self.pressure.as_ref().map(|p| p(jx, jy)).unwrap_or_default();
        Local {
            a: [ax.v, ay.v],
            omega: -(ax.dx + ay.dy),
            domega: [-(ax.dxx + ay.dxy), -(ax.dxy + ay.dyy)],
            curl: ay.dx - ax.dy,
            dcurl: [ay.dxx - ax.dxy, ay.dxy - ax.dyy],
            p: p.v,
            dp: [p.dx, p.dy],
        }
    }

    pub fn velocity(&self) -> AnalyticForm {
        let s = self.clone();
        AnalyticForm::one_form(move |x, y| s.local(x, y).a)
    }

    pub fn vorticity(&self) -> AnalyticForm {
        let s = self.clone();
        AnalyticForm::zero_form(move |x, y| s.local(x, y).omega)
    }

    /// `dω` as a 1-form.
    pub fn vorticity_derivative(&self) -> AnalyticForm {
        let s = self.clone();
        AnalyticForm::one_form(move |x, y| s.local(x, y).domega)
    }

    /// `du` as a 2-form density.
    pub fn velocity_derivative(&self) -> AnalyticForm {
        let s = self.clone();
        AnalyticForm::two_form(move |x, y| s.local(x, y).curl)
    }

    pub fn pressure(&self) -> AnalyticForm {
        let s = self.clone();
        AnalyticForm::two_form(move |x, y| s.local(x, y).p)
    }

    /// `f = dω + d*(du + p)` with `d*s = (∂y s) dx - (∂x s) dy`.
    pub fn body_force(&self) -> AnalyticForm {
        let s = self.clone();
        AnalyticForm::one_form(move |x, y| {
            let l = s.local(x, y);
            [l.domega[0] + l.dcurl[1] + l.dp[1], l.domega[1] - l.dcurl[0] - l.dp[0]]
        })
    }

    /// `g = du`.
    pub fn mass_source(&self) -> AnalyticForm {
        self.velocity_derivative()
    }

    /// Every boundary datum derivable from the exact fields.
    pub fn side_data(&self) -> SideData {
        let (w, t, pi) = (self.clone(), self.clone(), self.clone());
        SideData {
            vorticity: Some(Arc::new(move |x, y| w.local(x, y).omega)),
            velocity: Some(self.velocity()),
            tangential: Some(Arc::new(move |p, n| {
                let a = t.local(p[0], p[1]).a;
                a[0] * n[0] + a[1] * n[1]
            })),
            pressure_type: Some(Arc::new(move |x, y| {
                let l = pi.local(x, y);
                l.curl + l.p
            })),
        }
    }
}

/// A manufactured-solution experiment.
#[derive(Debug, Clone)]
pub struct TestCase {
    /// CLI name.
    pub name: &'static str,
    pub description: &'static str,
    pub problem: Problem,
    pub exact: ExactSolution,
    pub mapping: Mapping,
    pub bcs: [BcType; 4],
}

impl TestCase {
    /// Same case with one boundary-condition type on every side.
    pub fn with_uniform_bc(&self, kind: BcType) -> Self {
        Self {
            bcs: [kind; 4],
            ..self.clone()
        }
    }

    pub fn body_force(&self) -> AnalyticForm {
        self.exact.body_force()
    }

    /// Boundary-condition specification carrying exact data; configurations
    /// that leave harmonic gradients free get the harmonic velocity gauge
    /// matched to the exact velocity.
    pub fn boundary_conditions(&self) -> Result<BoundaryConditionSpec> {
        let data = self.exact.side_data();
        let sides = self.bcs.map(|kind| SideCondition {
            kind,
            data: data.clone(),
        });
        let spec = BoundaryConditionSpec::new(sides)?;
        if spec.velocity_nullspace().is_some() {
            spec.with_harmonic_velocity_gauge(Some(self.exact.velocity()))
        } else {
            Ok(spec)
        }
    }

    pub fn bc_label(&self) -> String {
        if self.bcs.iter().all(|&k| k == self.bcs[0]) {
            self.bcs[0].label().to_string()
        } else {
            Side::ALL
                .iter()
                .zip(self.bcs)
                .map(|(s, k)| format!("{}:{}", s.name(), k.label()))
                .collect::<Vec<_>>()
                .join(" ")
        }
    }
}

pub const CASE_NAMES: [&str; 5] = [
    "poisson-g2",
    "poisson-g1",
    "stokes-g1",
    "stokes-mixed-curvi",
    "bc-sweep",
];

fn poisson_g2() -> TestCase {
    TestCase {
        name: "poisson-g2",
        description: "vector Poisson, u = -2 sin(πx)cos(πy) dx + cos(πx)sin(πy) dy, g2 on every side",
        problem: Problem::Poisson,
        exact: ExactSolution::new(
            Arc::new(|x, y| {
                let (px, py) = (x * PI, y * PI);
                [-2.0 * px.sin() * py.cos(), px.cos() * py.sin()]
            }),
            None,
        ),
        mapping: Mapping::unit_square(),
        bcs: [BcType::G2; 4],
    }
}

fn poisson_g1() -> TestCase {
    TestCase {
        name: "poisson-g1",
        description: "vector Poisson, u = -sin(πx)sin(πy) dx + sin(πx)sin(πy) dy, g1 on every side",
        problem: Problem::Poisson,
        exact: ExactSolution::new(
            Arc::new(|x, y| {
                let s = (x * PI).sin() * (y * PI).sin();
                [-s, s]
            }),
            None,
        ),
        mapping: Mapping::unit_square(),
        bcs: [BcType::G1; 4],
    }
}

fn stokes_g1() -> TestCase {
    // u = -dψ with ψ = x²(x-1)² y²(y-1)²
    TestCase {
        name: "stokes-g1",
        description: "Stokes, u = -dψ for ψ = x²(x-1)²y²(y-1)², p = (x-½)⁵ + (y-½)⁵, g1 on every side",
        problem: Problem::Stokes,
        exact: ExactSolution::new(
            Arc::new(|x, y| {
                let qx = x * x * (x - 1.0).powi(2);
                let qy = y * y * (y - 1.0).powi(2);
                let dqx = 2.0 * x * (2.0 * x - 1.0) * (x - 1.0);
                let dqy = 2.0 * y * (2.0 * y - 1.0) * (y - 1.0);
                [-(dqx * qy), -(qx * dqy)]
            }),
            Some(Arc::new(|x, y| (x - 0.5).powi(5) + (y - 0.5).powi(5))),
        ),
        mapping: Mapping::unit_square(),
        bcs: [BcType::G1; 4],
    }
}

fn stokes_mixed_curvi() -> TestCase {
    let k = 1.5 * PI;
    TestCase {
        name: "stokes-mixed-curvi",
        description: "Stokes on the sinusoidal map, ω = (3/2)π sin(3πx/2) sin(3πy/2), p = sin(πx)sin(πy), \
                      bottom g1, right g2, top g3, left g4",
        problem: Problem::Stokes,
        exact: ExactSolution::new(
            Arc::new(move |x, y| {
                let (kx, ky) = (x * k, y * k);
                [-(kx.cos() * ky.sin()), 2.0 * kx.sin() * ky.cos()]
            }),
            Some(Arc::new(|x, y| (x * PI).sin() * (y * PI).sin())),
        ),
        mapping: Mapping::curvilinear(),
        bcs: [BcType::G1, BcType::G2, BcType::G3, BcType::G4],
    }
}

/// The four built-in experiments followed by the boundary-condition sweep
/// of the polynomial Stokes case (one entry per all-side type).
pub fn builtin_cases() -> Vec<TestCase> {
    let mut cases = vec![poisson_g2(), poisson_g1(), stokes_g1(), stokes_mixed_curvi()];
    let base = stokes_g1();
    for kind in BcType::ALL {
        let mut c = base.with_uniform_bc(kind);
        c.name = "bc-sweep";
        cases.push(c);
    }
    cases
}

/// Resolves a CLI case name; `bc` overrides the all-side type where the
/// case allows it (always for `bc-sweep`, which defaults to g1).
pub fn case_by_name(name: &str, bc: Option<BcType>) -> Result<TestCase> {
    let mut case = match name {
        "poisson-g2" => poisson_g2(),
        "poisson-g1" => poisson_g1(),
        "stokes-g1" => stokes_g1(),
        "stokes-mixed-curvi" => stokes_mixed_curvi(),
        "bc-sweep" => {
            let mut c = stokes_g1();
            c.name = "bc-sweep";
            c
        }
        other => {
            return Err(Error::Configuration(format!(
                "unknown case '{other}' (expected one of {})",
                CASE_NAMES.join(", ")
            )))
        }
    };
    if let Some(kind) = bc {
        if case.name == "stokes-mixed-curvi" {
            return Err(Error::Configuration(
                "stokes-mixed-curvi uses one boundary-condition type per side; --bc does not apply".into(),
            ));
        }
        case = case.with_uniform_bc(kind);
    }
    Ok(case)
}
