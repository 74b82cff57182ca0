//! h-convergence studies and their CSV output.

use std::io::Write;
use std::time::Instant;

use super::cases::TestCase;
use super::norms::{error_norms, ErrorRecord};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::solver::{assemble_poisson, assemble_stokes, solve, Problem};

pub const CSV_HEADER: &str =
    "case,N,M,h,err_w_l2,err_w_h1,err_u_l2,err_u_hdiv,err_p_l2,div_inf,rate_w_l2,rate_u_l2,rate_p_l2,residual";

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub m: usize,
    pub h: f64,
    pub errors: ErrorRecord,
    /// Observed rates of the five norm columns against the previous level.
    pub rates: [Option<f64>; 5],
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub case: String,
    pub bc: String,
    pub order: usize,
    pub levels: Vec<LevelResult>,
    /// Level at which the study stopped and why.
    pub failure: Option<(usize, Error)>,
}

impl ConvergenceReport {
    /// Rates of column `col` (see [`ErrorRecord::norms`]) between successive levels.
    pub fn rates(&self, col: usize) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.rates[col]).collect()
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.errors.norms()[col]).collect()
    }
}

/// Assembles, solves and measures one `m × m` level with `N + quad_extra`
/// Gauss points per direction.
pub fn run_level(case: &TestCase, order: usize, m: usize, quad_extra: usize) -> Result<ErrorRecord> {
    let mesh = Mesh::uniform(m, order, case.mapping.clone())?.with_quad_extra(quad_extra);
    let bc = case.boundary_conditions()?;
    let system = match case.problem {
        Problem::Poisson => assemble_poisson(&mesh, &bc, &case.body_force())?,
        Problem::Stokes => assemble_stokes(&mesh, &bc, &case.body_force(), &case.exact.mass_source())?,
    };
    let solution = solve(&system)?;
    error_norms(&solution, case, mesh.quadrature_points())
}

/// `log(e_prev / e) / log(h_prev / h)`; `log₂(e_{2h} / e_h)` when h halves.
pub fn observed_rate(e_prev: f64, e: f64, h_prev: f64, h: f64) -> f64 {
    (e_prev / e).ln() / (h_prev / h).ln()
}

/// Runs every level in order; a failing level ends the study and is
/// recorded in [`ConvergenceReport::failure`].
pub fn convergence_study(
    case: &TestCase,
    order: usize,
    levels: &[usize],
    quad_extra: usize,
) -> Result<ConvergenceReport> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) || levels[0] == 0 {
        return Err(Error::Configuration(format!(
            "levels must be positive and strictly increasing, got {levels:?}"
        )));
    }
    let mut report = ConvergenceReport {
        case: case.name.to_string(),
        bc: case.bc_label(),
        order,
        levels: Vec::new(),
        failure: None,
    };
    for &m in levels {
        let start = Instant::now();
        let errors = match run_level(case, order, m, quad_extra) {
            Ok(e) => e,
            Err(e) => {
                report.failure = Some((m, e));
                break;
            }
        };
        let h = 1.0 / m as f64;
        let rates = match report.levels.last() {
            Some(prev) => {
                let (a, b) = (prev.errors.norms(), errors.norms());
                std::array::from_fn(|i| match (a[i], b[i]) {
                    (Some(ep), Some(e)) => Some(observed_rate(ep, e, prev.h, h)),
                    _ => None,
                })
            }
            None => [None; 5],
        };
        report.levels.push(LevelResult {
            m,
            h,
            errors,
            rates,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(report)
}

fn field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes the header followed by one row per level of every report.
pub fn write_csv<W: Write>(out: &mut W, reports: &[ConvergenceReport]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        let name = if r.case == "bc-sweep" {
            format!("{}-{}", r.case, r.bc)
        } else {
            r.case.clone()
        };
        for l in &r.levels {
            let e = &l.errors;
            writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{},{},{},{},{},{:e}",
                name,
                r.order,
                l.m,
                l.h,
                e.w_l2,
                e.w_h1,
                e.u_l2,
                e.u_hdiv,
                field(e.p_l2),
                field(e.div_inf),
                field(l.rates[0]),
                field(l.rates[2]),
                field(l.rates[4]),
                e.residual
            )?;
        }
    }
    Ok(())
}
