//! Boundary-condition guardrails checked against a dense SVD of the
//! reduced saddle-point matrix for every assignment of types to sides.

use std::collections::BTreeSet;

use mimetic::forms::AnalyticForm;
use mimetic::geometry::{Mapping, Mesh};
use mimetic::harness::case_by_name;
use mimetic::solver::{assemble_stokes, solve, BcType, BoundaryConditionSpec, SideCondition};
use mimetic::topology::Side;
use mimetic::Error;
use nalgebra::DMatrix;

mod common;
use common::assignments;

fn spec(kinds: [BcType; 4]) -> BoundaryConditionSpec {
    let data = case_by_name("stokes-g1", None).unwrap().exact.side_data();
    BoundaryConditionSpec::new(kinds.map(|kind| SideCondition {
        kind,
        data: data.clone(),
    }))
    .unwrap()
}

fn free_block(mesh: &Mesh, full: &DMatrix<f64>, kinds: [BcType; 4]) -> DMatrix<f64> {
    let c = mesh.complex();
    let n0 = c.n0();
    let mut fixed = BTreeSet::new();
    for (side, kind) in Side::ALL.into_iter().zip(kinds) {
        if kind.essential_vorticity() {
            fixed.extend(c.boundary_cells(side, 0).unwrap());
        }
        if kind.essential_velocity() {
            fixed.extend(c.boundary_cells(side, 1).unwrap().into_iter().map(|i| n0 + i));
        }
    }
    let free: Vec<usize> = (0..full.nrows()).filter(|i| !fixed.contains(i)).collect();
    DMatrix::from_fn(free.len(), free.len(), |r, s| full[(free[r], free[s])])
}

fn nullity(k: &DMatrix<f64>) -> usize {
    let sv = k.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s <= 1e-10 * top).count()
}

fn dense(sys: &mimetic::solver::LinearSystem<'_>) -> DMatrix<f64> {
    let n = sys.matrix().rows();
    DMatrix::from_fn(n, n, |r, c| sys.matrix().get(r, c))
}

#[test]
fn nullspace_rule_covers_every_svd_mode() {
    let mesh = Mesh::uniform(2, 2, Mapping::unit_square()).unwrap();
    let (z1, z2) = (AnalyticForm::zero(1), AnalyticForm::zero(2));
    let sys = assemble_stokes(&mesh, &spec([BcType::G1; 4]), &z1, &z2).unwrap();
    let c = mesh.complex();
    assert_eq!(sys.matrix().rows(), c.n0() + c.n1() + c.n2());
    let full = dense(&sys);

    let mut singular_without_g4 = 0;
    for kinds in assignments() {
        let bc = spec(kinds);
        let velocity_modes = nullity(&free_block(&mesh, &full, kinds)) - usize::from(bc.pressure_gauge());
        let predicted = bc.velocity_nullspace();
        let has_g4 = kinds.contains(&BcType::G4);
        if velocity_modes > 0 {
            assert!(predicted.is_some(), "{kinds:?}: {velocity_modes} velocity modes missed");
        }
        if !has_g4 {
            assert_eq!(
                velocity_modes > 0,
                predicted.is_some(),
                "{kinds:?}: rule says {predicted:?}"
            );
            singular_without_g4 += usize::from(velocity_modes > 0);
        }
        if has_g4 {
            assert!(predicted.is_some(), "{kinds:?}");
        }
        if kinds == [BcType::G4; 4] {
            assert_eq!(velocity_modes, 4 * 2 * 2 - 1);
        }
    }
    assert_eq!(singular_without_g4, 2, "g2,g3,g2,g3 and its rotation");
}

#[test]
fn every_flagged_assignment_is_regular_once_gauged() {
    let mesh = Mesh::uniform(2, 2, Mapping::unit_square()).unwrap();
    let (z1, z2) = (AnalyticForm::zero(1), AnalyticForm::zero(2));
    for kinds in assignments() {
        let bc = spec(kinds);
        if bc.velocity_nullspace().is_none() {
            continue;
        }
        let sys = assemble_stokes(&mesh, &bc.with_harmonic_velocity_gauge(None).unwrap(), &z1, &z2).unwrap();
        let (reduced, _, _) = sys.reduced();
        let k = DMatrix::from_fn(reduced.rows(), reduced.cols(), |r, c| reduced.get(r, c));
        let sv = k.singular_values();
        assert!(sv.min() > 1e-8 * sv.max(), "{kinds:?}: {:.2e}", sv.min() / sv.max());
    }
}

#[test]
fn ill_posed_assignments_are_rejected_and_others_solve() {
    let case = case_by_name("stokes-g1", None).unwrap();
    let mesh = Mesh::uniform(2, 2, Mapping::unit_square()).unwrap();
    let (f, g) = (case.body_force(), case.exact.mass_source());
    for kinds in assignments() {
        let bc = spec(kinds);
        match assemble_stokes(&mesh, &bc, &f, &g) {
            Ok(sys) => {
                assert!(bc.velocity_nullspace().is_none(), "{kinds:?}");
                let sol = solve(&sys).unwrap_or_else(|e| panic!("{kinds:?}: {e}"));
                assert!(sol.residual < 1e-10, "{kinds:?}: residual {}", sol.residual);
            }
            Err(Error::IllPosed(msg)) => {
                assert!(bc.velocity_nullspace().is_some(), "{kinds:?}");
                assert!(msg.contains("nullspace"), "{msg}");
            }
            Err(e) => panic!("{kinds:?}: unexpected {e}"),
        }
    }
}

#[test]
fn all_g4_is_rejected_unless_gauged() {
    let case = case_by_name("stokes-g1", None).unwrap();
    let mesh = Mesh::uniform(3, 2, Mapping::unit_square()).unwrap();
    let (f, g) = (case.body_force(), case.exact.mass_source());
    let bc = spec([BcType::G4; 4]);
    let err = assemble_stokes(&mesh, &bc, &f, &g).unwrap_err();
    assert!(matches!(&err, Error::IllPosed(m) if m.contains("g4")), "{err}");

    let gauged = bc.with_harmonic_velocity_gauge(Some(case.exact.velocity())).unwrap();
    let sys = assemble_stokes(&mesh, &gauged, &f, &g).unwrap();
    assert!(sys.matrix().symmetry_defect() <= 1e-12);
    assert!(solve(&sys).unwrap().residual < 1e-10);
}

#[test]
fn gauge_is_refused_for_other_assignments() {
    let bc = spec([BcType::G1, BcType::G2, BcType::G3, BcType::G2]);
    assert!(matches!(
        bc.with_harmonic_velocity_gauge(None),
        Err(Error::Configuration(_))
    ));
}
