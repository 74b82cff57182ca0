//! Error norms of a discrete solution against a manufactured one.

use super::cases::TestCase;
use crate::error::{Error, Result};
use crate::forms::{reduce, AnalyticForm};
use crate::solver::Solution;

/// Errors of one solve; `None` where a column does not apply (no pressure
/// in the Poisson problem).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    /// `‖ω − ω_h‖_{L²}`
    pub w_l2: f64,
    /// `‖dω − dω_h‖_{L²}`
    pub w_h1: f64,
    /// `‖u − u_h‖_{L²}`
    pub u_l2: f64,
    /// `‖du − du_h‖_{L²}`
    pub u_hdiv: f64,
    /// `‖p − p_h‖_{L²}`, against the zero-mean exact pressure when gauged.
    pub p_l2: Option<f64>,
    /// `max |E21 u_h − ℛ g|`
    pub div_inf: Option<f64>,
    pub residual: f64,
}

impl ErrorRecord {
    /// The five norm columns in CSV order.
    pub fn norms(&self) -> [Option<f64>; 5] {
        [
            Some(self.w_l2),
            Some(self.w_h1),
            Some(self.u_l2),
            Some(self.u_hdiv),
            self.p_l2,
        ]
    }
}

/// Metric-weighted Gauss quadrature with `q` points per element direction
/// of the reconstruction errors and of their exterior derivatives.
pub fn error_norms(solution: &Solution<'_>, case: &TestCase, q: usize) -> Result<ErrorRecord> {
    let mesh = solution.vorticity.mesh();
    if q < mesh.order() + 1 {
        return Err(Error::Configuration(format!(
            "error quadrature needs at least N+1 points, got {q}"
        )));
    }
    let exact = &case.exact;
    let w_l2 = solution.vorticity.l2_error(&exact.vorticity(), q)?;
    let w_h1 = solution
        .vorticity
        .exterior_derivative()?
        .l2_error(&exact.vorticity_derivative(), q)?;
    let u_l2 = solution.velocity.l2_error(&exact.velocity(), q)?;
    let du_h = solution.velocity.exterior_derivative()?;
    let u_hdiv = du_h.l2_error(&exact.velocity_derivative(), q)?;
    let (p_l2, div_inf) = match &solution.pressure {
        Some(p_h) => {
            let p = exact.pressure();
            let p = if solution.pressure_gauge {
                let total: f64 = reduce(&p, mesh)?.values().iter().sum();
                let area: f64 = reduce(&AnalyticForm::two_form(|_, _| 1.0), mesh)?.values().iter().sum();
                let mean = total / area;
                AnalyticForm::two_form(move |x, y| p.scalar(x, y) - mean)
            } else {
                p
            };
            let g = reduce(&exact.mass_source(), mesh)?;
            let div = du_h
                .values()
                .iter()
                .zip(g.values())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            (Some(p_h.l2_error(&p, q)?), Some(div))
        }
        None => (None, None),
    };
    Ok(ErrorRecord {
        w_l2,
        w_h1,
        u_l2,
        u_hdiv,
        p_l2,
        div_inf,
        residual: solution.residual,
    })
}
