//! Helpers shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::sync::Arc;

use mimetic::forms::{reduce, AnalyticForm, DiscreteForm};
use mimetic::geometry::{Mapping, Mesh};
use mimetic::harness::cases::{ExactSolution, ScalarField, TestCase};
use mimetic::harness::jet::Jet2;
use mimetic::solver::{assemble_poisson, assemble_stokes, BcType, LinearSystem, Problem, Solution};

pub fn assignments() -> impl Iterator<Item = [BcType; 4]> {
    (0..256usize).map(|code| std::array::from_fn(|s| BcType::ALL[(code >> (2 * s)) & 3]))
}

/// `u = (x²y³ − xy) dx + (x³y² + y²) dy` and `p = x²y²` lie in the N = 3
/// spaces, together with `ω`, `dω` and `du`.
pub fn polynomial_case(problem: Problem, mapping: Mapping, bcs: [BcType; 4]) -> TestCase {
    let velocity = Arc::new(|x: Jet2, y: Jet2| [x * x * y.powi(3) - x * y, x.powi(3) * y * y + y * y]);
    let pressure: Option<ScalarField> = match problem {
        Problem::Stokes => Some(Arc::new(|x: Jet2, y: Jet2| x * x * y * y)),
        Problem::Poisson => None,
    };
    TestCase {
        name: "patch",
        description: "polynomial solution inside the discrete spaces",
        problem,
        exact: ExactSolution::new(velocity, pressure),
        mapping,
        bcs,
    }
}

pub fn assemble<'m>(case: &TestCase, mesh: &'m Mesh) -> LinearSystem<'m> {
    let bc = case.boundary_conditions().unwrap();
    match case.problem {
        Problem::Poisson => assemble_poisson(mesh, &bc, &case.body_force()).unwrap(),
        Problem::Stokes => assemble_stokes(mesh, &bc, &case.body_force(), &case.exact.mass_source()).unwrap(),
    }
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest cochain difference between the solution and the reduction of
/// the exact fields; the pressure is compared modulo its mean when gauged.
pub fn cochain_error(sol: &Solution<'_>, case: &TestCase, mesh: &Mesh) -> f64 {
    let w = max_gap(
        sol.vorticity.values(),
        reduce(&case.exact.vorticity(), mesh).unwrap().values(),
    );
    let u = max_gap(
        sol.velocity.values(),
        reduce(&case.exact.velocity(), mesh).unwrap().values(),
    );
    let p = match &sol.pressure {
        Some(p_h) => {
            let mut p = reduce(&case.exact.pressure(), mesh).unwrap().into_values();
            if sol.pressure_gauge {
                let areas = reduce(&AnalyticForm::two_form(|_, _| 1.0), mesh).unwrap();
                let mean = p.iter().sum::<f64>() / areas.values().iter().sum::<f64>();
                p.iter_mut().zip(areas.values()).for_each(|(v, a)| *v -= mean * a);
            }
            max_gap(p_h.values(), &p)
        }
        None => 0.0,
    };
    w.max(u).max(p)
}

/// Evaluates a reconstruction on `Mapping::identity()` by locating the
/// element that contains `(x, y)`.
pub fn reconstruction(form: DiscreteForm<'static>) -> AnalyticForm {
    let degree = form.degree();
    let m = form.mesh().complex().elements_x();
    let locate = move |x: f64| {
        let t = (x + 1.0) / 2.0 * m as f64;
        let e = (t.floor() as usize).min(m - 1);
        (e, 2.0 * (t - e as f64) - 1.0)
    };
    let eval = move |x: f64, y: f64| {
        let ((ex, s), (ey, t)) = (locate(x), locate(y));
        let e = form.mesh().complex().element(ex, ey);
        form.eval_physical(e, s, t).unwrap()
    };
    match degree {
        0 => AnalyticForm::zero_form(move |x, y| eval(x, y)[0]),
        1 => AnalyticForm::one_form(eval),
        _ => AnalyticForm::two_form(move |x, y| eval(x, y)[0]),
    }
}

pub fn leaked_mesh(m: usize, n: usize, mapping: Mapping) -> &'static Mesh {
    Box::leak(Box::new(Mesh::uniform(m, n, mapping).unwrap()))
}

pub fn trig_zero_form(k: [f64; 3]) -> (AnalyticForm, AnalyticForm) {
    let a = AnalyticForm::zero_form(move |x, y| (k[0] * x + k[2]).sin() * (k[1] * y).cos());
    let da = AnalyticForm::one_form(move |x, y| {
        [
            k[0] * (k[0] * x + k[2]).cos() * (k[1] * y).cos(),
            -k[1] * (k[0] * x + k[2]).sin() * (k[1] * y).sin(),
        ]
    });
    (a, da)
}

/// `a = φ dx + χ dy` with `da = (∂x χ − ∂y φ) dx∧dy`.
pub fn trig_one_form(k: [f64; 3]) -> (AnalyticForm, AnalyticForm) {
    let a = AnalyticForm::one_form(move |x, y| [(k[0] * y + k[2]).sin() * x, (k[1] * x).cos() * y * y]);
    let da = AnalyticForm::two_form(move |x, y| -k[1] * (k[1] * x).sin() * y * y - (k[0] * y + k[2]).cos() * k[0] * x);
    (a, da)
}

pub fn close(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
