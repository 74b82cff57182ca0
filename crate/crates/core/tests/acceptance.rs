//! Acceptance suite: one PASS/FAIL line per criterion, details indented
//! below it. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use mimetic::forms::{reduce, DiscreteForm};
use mimetic::geometry::{Mapping, Mesh};
use mimetic::harness::{case_by_name, convergence_study, run_level, ConvergenceReport, TestCase};
use mimetic::solver::{assemble_stokes, solve, BcType, BoundaryConditionSpec, Problem, SideCondition};
use mimetic::topology::CellComplex;
use mimetic::Error;
use rand::{Rng, SeedableRng};

mod common;
use common::{
    assemble, assignments, close, cochain_error, leaked_mesh, polynomial_case, reconstruction, trig_one_form,
    trig_zero_form,
};

const QUAD_EXTRA: usize = 6;

const TABLE_LEVELS: [usize; 5] = [8, 16, 32, 64, 128];
/// Vorticity L² errors per column g1..g4, rows h = 1/8 .. 1/128.
const TABLE: [[f64; 4]; 5] = [
    [1.0280e-04, 1.0109e-04, 1.0030e-04, 1.0035e-04],
    [1.2445e-05, 1.2410e-05, 1.2364e-05, 1.2375e-05],
    [1.5424e-06, 1.5426e-06, 1.5399e-06, 1.5416e-06],
    [1.9238e-07, 1.9247e-07, 1.9230e-07, 1.9255e-07],
    [2.4035e-08, 2.4042e-08, 2.4032e-08, 2.4065e-08],
];
const TABLE_REL_TOL: f64 = 0.02;
const TABLE_RATE: f64 = 3.0;
const TABLE_RATE_TOL: f64 = 0.05;
const TABLE_SECONDS: f64 = 300.0;

const DIV_TOL: f64 = 1e-10;
const RATE_TOL: f64 = 0.2;

const DD_ORDERS: std::ops::RangeInclusive<usize> = 1..=4;
const RI_TOL: f64 = 1e-11;
const COMMUTE_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;
const PATCH_TOL: f64 = 1e-8;

const MEAN_PRESSURE_TOL: f64 = 1e-11;

const COLUMNS: [&str; 5] = ["w_l2", "w_h1", "u_l2", "u_hdiv", "p_l2"];

struct Criterion {
    passed: bool,
    details: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {detail}", if ok { "ok  " } else { "FAIL" }));
    }

    fn error(&mut self, context: &str, e: &Error) {
        self.check(false, format!("{context}: {e}"));
    }
}

fn study(case: &TestCase, order: usize, levels: &[usize], c: &mut Criterion) -> Option<ConvergenceReport> {
    match convergence_study(case, order, levels, QUAD_EXTRA) {
        Ok(r) => match &r.failure {
            Some((m, e)) => {
                c.error(&format!("{} [{}] N={order} M={m}", case.name, case.bc_label()), e);
                None
            }
            None => Some(r),
        },
        Err(e) => {
            c.error(case.name, &e);
            None
        }
    }
}

fn max_div(r: &ConvergenceReport) -> f64 {
    r.levels.iter().filter_map(|l| l.errors.div_inf).fold(0.0, f64::max)
}

fn table_reproduction(c: &mut Criterion, divergence: &mut Criterion) {
    let start = Instant::now();
    for (col, kind) in BcType::ALL.into_iter().enumerate() {
        let case = case_by_name("bc-sweep", Some(kind)).unwrap();
        let Some(r) = study(&case, 2, &TABLE_LEVELS, c) else {
            continue;
        };
        let errors = r.column(0);
        for (row, (&e, &m)) in errors.iter().zip(&TABLE_LEVELS).enumerate() {
            let reference = TABLE[row][col];
            let rel = (e - reference) / reference;
            c.check(
                rel.abs() <= TABLE_REL_TOL,
                format!("{kind} M={m:3}: {e:.4e} vs {reference:.4e} ({:+.2}%)", 100.0 * rel),
            );
        }
        let rates = r.rates(0);
        for (i, rate) in rates.iter().enumerate().skip(rates.len() - 2) {
            c.check(
                (rate - TABLE_RATE).abs() <= TABLE_RATE_TOL,
                format!("{kind} rate M={}→{}: {rate:.3}", TABLE_LEVELS[i], TABLE_LEVELS[i + 1]),
            );
        }
        let div = max_div(&r);
        divergence.check(div <= DIV_TOL, format!("table {kind}: max |E21 u| = {div:.1e}"));
    }
    let seconds = start.elapsed().as_secs_f64();
    c.check(seconds < TABLE_SECONDS, format!("wall time {seconds:.1}s"));
}

fn divergence_free(c: &mut Criterion) {
    let base = case_by_name("stokes-g1", None).unwrap();
    for (mapping, m, n) in [(Mapping::unit_square(), 4, 3), (Mapping::curvilinear(), 3, 3)] {
        let mut worst: f64 = 0.0;
        for kinds in assignments() {
            let case = TestCase {
                mapping: mapping.clone(),
                bcs: kinds,
                ..base.clone()
            };
            match run_level(&case, n, m, QUAD_EXTRA) {
                Ok(e) => worst = worst.max(e.div_inf.unwrap()),
                Err(e) => c.error(&format!("{kinds:?}"), &e),
            }
        }
        c.check(
            worst <= DIV_TOL,
            format!(
                "256 side assignments, {}: max |E21 u| = {worst:.1e}",
                if m == 4 { "unit square" } else { "curved map" }
            ),
        );
    }
}

fn rate_check(c: &mut Criterion, r: &ConvergenceReport, col: usize, target: f64, tol: f64, at_least: bool) {
    let Some(&rate) = r.rates(col).last() else { return };
    let ok = if at_least {
        rate >= target - tol
    } else {
        (rate - target).abs() <= tol
    };
    let want = if at_least {
        format!("≥ {:.1}", target - tol)
    } else {
        format!("{target} ± {tol}")
    };
    c.check(
        ok,
        format!(
            "{} N={} {}: finest-pair rate {rate:.3} (want {want})",
            r.case, r.order, COLUMNS[col],
        ),
    );
}

fn optimal_orders(c: &mut Criterion) {
    let case = case_by_name("poisson-g1", None).unwrap();
    for (n, levels) in [(2, &[8, 16, 32, 64][..]), (3, &[8, 16, 32][..])] {
        let Some(r) = study(&case, n, levels, c) else { continue };
        rate_check(c, &r, 2, n as f64, RATE_TOL, false);
        rate_check(c, &r, 0, n as f64 + 1.0, RATE_TOL, false);
    }
}

fn curvilinear_mixed(c: &mut Criterion) {
    let case = case_by_name("stokes-mixed-curvi", None).unwrap();
    for n in [2, 4] {
        let Some(r) = study(&case, n, &[4, 8, 16], c) else {
            continue;
        };
        for col in 0..COLUMNS.len() {
            rate_check(c, &r, col, n as f64, RATE_TOL, true);
        }
        let div = max_div(&r);
        c.check(div <= DIV_TOL, format!("N={n}: max |E21 u − ℛg| = {div:.1e}"));
    }
    let mut sensitivity = Vec::new();
    for q in [2, 6, 14] {
        if let Ok(e) = run_level(&case, 2, 8, q) {
            sensitivity.push(format!("+{q}: {:.4e}", e.w_l2));
        }
    }
    c.details.push(format!(
        "info quad-extra sensitivity, N=2 M=8 w_l2: {}",
        sensitivity.join(", ")
    ));
}

fn structure(c: &mut Criterion) {
    let dd_ok = DD_ORDERS.flat_map(|m| DD_ORDERS.map(move |n| (m, n))).all(|(m, n)| {
        let cx = CellComplex::new(m, m, n).unwrap();
        cx.incidence_d21()
            .compose(&cx.incidence_d10())
            .iter()
            .all(|&(_, _, v)| v == 0)
    });
    c.check(dd_ok, "E21·E10 = 0 (integer) for M, N ∈ 1..4".into());

    let mut rng = rand::rngs::StdRng::seed_from_u64(17);
    let mut ri: f64 = 0.0;
    for m in 1..=2 {
        for n in 1..=4 {
            let mesh = leaked_mesh(m, n, Mapping::identity());
            for k in 0..=2 {
                for _ in 0..20 {
                    let values: Vec<f64> = (0..mesh.complex().count(k))
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect();
                    let form = DiscreteForm::from_values(mesh, k, values.clone()).unwrap();
                    let back = reduce(&reconstruction(form), mesh).unwrap();
                    ri = ri.max(close(back.values(), &values));
                }
            }
        }
    }
    c.check(ri <= RI_TOL, format!("ℛℐ = Id: max gap {ri:.1e}"));

    let mut commute: f64 = 0.0;
    let meshes = [
        (1..=3)
            .flat_map(|m| (1..=4).map(move |n| (m, n, Mapping::unit_square())))
            .collect::<Vec<_>>(),
        [(2, 4), (3, 3), (4, 2), (4, 3)]
            .map(|(m, n)| (m, n, Mapping::curvilinear()))
            .to_vec(),
    ]
    .concat();
    for (m, n, mapping) in meshes {
        let mesh = Mesh::uniform(m, n, mapping).unwrap();
        for k in [[0.5, 2.9, 0.1], [3.0, 1.0, 2.0], [std::f64::consts::PI; 3]] {
            for (a, da) in [trig_zero_form(k), trig_one_form(k)] {
                let lhs = DiscreteForm::project(&mesh, &a).unwrap().exterior_derivative().unwrap();
                commute = commute.max(close(lhs.values(), reduce(&da, &mesh).unwrap().values()));
            }
        }
    }
    c.check(commute <= COMMUTE_TOL, format!("ℛd = δℛ: max gap {commute:.1e}"));

    let mut symmetry: f64 = 0.0;
    let mut patch: f64 = 0.0;
    let curved = Mesh::uniform(2, 2, Mapping::curvilinear()).unwrap();
    let affine = Mesh::uniform(2, 3, Mapping::affine_box([-0.5, 1.0], [0.25, 1.25])).unwrap();
    for kinds in assignments() {
        let sys = assemble(
            &polynomial_case(Problem::Stokes, Mapping::curvilinear(), kinds),
            &curved,
        );
        symmetry = symmetry.max(sys.matrix().symmetry_defect());
        let case = polynomial_case(Problem::Stokes, affine.mapping().clone(), kinds);
        match solve(&assemble(&case, &affine)) {
            Ok(sol) => patch = patch.max(cochain_error(&sol, &case, &affine)),
            Err(e) => c.error(&format!("patch {kinds:?}"), &e),
        }
    }
    c.check(
        symmetry <= SYMMETRY_TOL,
        format!("Stokes matrix symmetry, 256 assignments: {symmetry:.1e}"),
    );
    c.check(
        patch <= PATCH_TOL,
        format!("Galerkin patch test, 256 assignments, N=3: {patch:.1e}"),
    );
}

fn guardrails(c: &mut Criterion) {
    let base = case_by_name("stokes-g1", None).unwrap();
    let mesh = Mesh::uniform(8, 2, Mapping::unit_square()).unwrap();
    let mut worst: f64 = 0.0;
    for code in 0..16usize {
        let kinds = std::array::from_fn(|s| if code >> s & 1 == 1 { BcType::G3 } else { BcType::G1 });
        let case = TestCase {
            bcs: kinds,
            ..base.clone()
        };
        match solve(&assemble(&case, &mesh)) {
            Ok(sol) => worst = worst.max(sol.pressure.unwrap().values().iter().sum::<f64>().abs()),
            Err(e) => c.error(&format!("{kinds:?}"), &e),
        }
    }
    c.check(
        worst <= MEAN_PRESSURE_TOL,
        format!("Γ1/Γ3-only assignments: max |∫p_h| = {worst:.1e}"),
    );

    let data = base.exact.side_data();
    let bc = BoundaryConditionSpec::new([BcType::G4; 4].map(|kind| SideCondition {
        kind,
        data: data.clone(),
    }))
    .unwrap();
    match assemble_stokes(&mesh, &bc, &base.body_force(), &base.exact.mass_source()) {
        Err(Error::IllPosed(msg)) => c.check(msg.contains("nullspace"), format!("all-g4 rejected: {msg}")),
        Err(e) => c.error("all-g4", &e),
        Ok(_) => c.check(false, "all-g4 was accepted".into()),
    }
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut divergence = Criterion::new();
    let mut table = Criterion::new();
    table_reproduction(&mut table, &mut divergence);
    results.push(("1 table reproduction", table));
    divergence_free(&mut divergence);
    results.push(("2 divergence-free", divergence));
    let runs: [(&str, fn(&mut Criterion)); 4] = [
        ("3 optimal orders, standard BCs", optimal_orders),
        ("4 curvilinear + mixed BCs", curvilinear_mixed),
        ("5 structural properties", structure),
        ("6 well-posedness guardrails", guardrails),
    ];
    for (name, run) in runs {
        let mut c = Criterion::new();
        run(&mut c);
        results.push((name, c));
    }

    let mut failed = 0;
    for (name, c) in &results {
        println!("{} criterion {name}", if c.passed { "PASS" } else { "FAIL" });
        for d in &c.details {
            println!("    {d}");
        }
        failed += usize::from(!c.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
