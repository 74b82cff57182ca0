//! Assembly and direct solution of the mixed vector Poisson and
//! vorticity-velocity-pressure Stokes systems.
//!
//! Unknowns are ordered `[ω (0-cochain); u (1-cochain); p (2-cochain)]`,
//! followed by any bordering multipliers. The assembled matrix
//!
//! ```text
//! ⎡ -M0        (M1 E10)ᵀ        0        ⎤ ⎡ω⎤   ⎡ -h ⎤
//! ⎢ M1 E10     E21ᵀ M2 E21      E21ᵀ M2  ⎥ ⎢u⎥ = ⎢  f ⎥
//! ⎣ 0          M2 E21           0        ⎦ ⎣p⎦   ⎣ g  ⎦
//! ```
//!
//! is symmetric; essential boundary values are eliminated symmetrically.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::prelude::*;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LdltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Par, Side as FaerSide};

use crate::error::{Error, Result};
use crate::forms::{boundary_load, load_vector, mass_matrix, reduce, reduce_boundary, AnalyticForm, DiscreteForm};
use crate::geometry::Mesh;
use crate::sparse::CsrMatrix;
use crate::topology::{Cochain, Side};

/// The four admissible boundary-condition pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcType {
    /// Normal velocity (essential) and tangential velocity (natural).
    G1,
    /// Tangential velocity and pressure-type datum (both natural).
    G2,
    /// Vorticity and normal velocity (both essential).
    G3,
    /// Vorticity (essential) and pressure-type datum (natural).
    G4,
}

impl BcType {
    pub const ALL: [BcType; 4] = [BcType::G1, BcType::G2, BcType::G3, BcType::G4];

    pub fn essential_vorticity(self) -> bool {
        matches!(self, BcType::G3 | BcType::G4)
    }

    pub fn essential_velocity(self) -> bool {
        matches!(self, BcType::G1 | BcType::G3)
    }

    pub fn natural_tangential(self) -> bool {
        matches!(self, BcType::G1 | BcType::G2)
    }

    pub fn natural_pressure(self) -> bool {
        matches!(self, BcType::G2 | BcType::G4)
    }

    pub fn label(self) -> &'static str {
        match self {
            BcType::G1 => "g1",
            BcType::G2 => "g2",
            BcType::G3 => "g3",
            BcType::G4 => "g4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g1" | "γ1" => Ok(BcType::G1),
            "g2" | "γ2" => Ok(BcType::G2),
            "g3" | "γ3" => Ok(BcType::G3),
            "g4" | "γ4" => Ok(BcType::G4),
            other => Err(Error::Configuration(format!(
                "unknown boundary condition type '{other}' (expected g1, g2, g3 or g4)"
            ))),
        }
    }
}

impl fmt::Display for BcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub type ScalarData = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Datum depending on the boundary point and the unit outward normal.
pub type TraceData = Arc<dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync>;

/// Boundary data available on one side; which entries are required depends
/// on the side's [`BcType`].
#[derive(Clone, Default)]
pub struct SideData {
    /// Essential `tr ω`.
    pub vorticity: Option<ScalarData>,
    /// 1-form whose line integrals along boundary 1-cells give `tr u`.
    pub velocity: Option<AnalyticForm>,
    /// Natural tangential-velocity datum `u_{b,t}` per unit length.
    pub tangential: Option<TraceData>,
    /// Natural pressure-type datum `Π_b`.
    pub pressure_type: Option<ScalarData>,
}

impl fmt::Debug for SideData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SideData")
            .field("vorticity", &self.vorticity.is_some())
            .field("velocity", &self.velocity.is_some())
            .field("tangential", &self.tangential.is_some())
            .field("pressure_type", &self.pressure_type.is_some())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct SideCondition {
    pub kind: BcType,
    pub data: SideData,
}

/// How the velocity is fixed when the boundary conditions leave it
/// determined only up to discrete harmonic gradients.
#[derive(Debug, Clone)]
pub struct HarmonicVelocityGauge {
    /// The moments `(dφ, u)` against the harmonic gradients are matched to
    /// this 1-form; `None` sets them to zero.
    pub target: Option<AnalyticForm>,
}

/// Boundary-condition type and data for each of the four sides.
#[derive(Debug, Clone)]
pub struct BoundaryConditionSpec {
    sides: [SideCondition; 4],
    velocity_gauge: Option<HarmonicVelocityGauge>,
}

impl BoundaryConditionSpec {
    /// Sides are given in [`Side::ALL`] order (bottom, right, top, left).
    pub fn new(sides: [SideCondition; 4]) -> Result<Self> {
        for (side, cond) in Side::ALL.iter().zip(&sides) {
            let d = &cond.data;
            let missing = |what: &str| {
                Error::Configuration(format!("{} side is {} but has no {what} datum", side.name(), cond.kind))
            };
            if cond.kind.essential_vorticity() && d.vorticity.is_none() {
                return Err(missing("vorticity"));
            }
            if cond.kind.essential_velocity() && d.velocity.is_none() {
                return Err(missing("normal velocity"));
            }
            if cond.kind.natural_tangential() && d.tangential.is_none() {
                return Err(missing("tangential velocity"));
            }
            if cond.kind.natural_pressure() && d.pressure_type.is_none() {
                return Err(missing("pressure-type"));
            }
        }
        Ok(Self {
            sides,
            velocity_gauge: None,
        })
    }

    /// Opts into the harmonic velocity gauge; refused when
    /// [`Self::velocity_nullspace`] reports nothing to remove.
    pub fn with_harmonic_velocity_gauge(mut self, target: Option<AnalyticForm>) -> Result<Self> {
        if self.velocity_nullspace().is_none() {
            return Err(Error::Configuration(format!(
                "boundary conditions [{}] determine the velocity; the harmonic velocity gauge does not apply",
                self.kinds().map(|k| k.label()).join(", ")
            )));
        }
        self.velocity_gauge = Some(HarmonicVelocityGauge { target });
        Ok(self)
    }

    pub fn kinds(&self) -> [BcType; 4] {
        std::array::from_fn(|i| self.sides[i].kind)
    }

    pub fn side(&self, side: Side) -> &SideCondition {
        &self.sides[side.index()]
    }

    pub fn velocity_gauge(&self) -> Option<&HarmonicVelocityGauge> {
        self.velocity_gauge.as_ref()
    }

    /// Set when no side carries a pressure-type datum, leaving the pressure
    /// determined up to a constant.
    pub fn pressure_gauge(&self) -> bool {
        !self.kinds().iter().any(|k| k.natural_pressure())
    }

    /// Describes why these boundary conditions leave the velocity
    /// undetermined or unstable, if they do.
    ///
    /// Any Γ4 side leaves the potential of a harmonic gradient free along it.
    /// With Γ1 sides the continuous problem still pins it by unique
    /// continuation, but the discrete counterpart is singular or
    /// exponentially ill-conditioned in the mesh size, so a gauge is needed
    /// whenever Γ4 is present. Without Γ4 and Γ1, two or more separate Γ3
    /// arcs each admit their own potential constant.
    pub fn velocity_nullspace(&self) -> Option<String> {
        let kinds = self.kinds();
        if kinds.contains(&BcType::G4) {
            return Some(
                "a g4 side leaves the boundary potential of harmonic gradients free, so the velocity \
                 is determined only modulo (or unstably near) gradients of discrete harmonic functions"
                    .into(),
            );
        }
        if kinds.contains(&BcType::G1) {
            return None;
        }
        let arcs = (0..4)
            .filter(|&i| kinds[i] == BcType::G3 && kinds[(i + 3) % 4] != BcType::G3)
            .count();
        if arcs >= 2 {
            return Some(format!(
                "velocity is determined only modulo a harmonic gradient: the g3 sides form {arcs} \
                 disconnected arcs, each admitting its own potential constant"
            ));
        }
        None
    }

    fn check_well_posed(&self) -> Result<()> {
        match self.velocity_nullspace() {
            Some(_) if self.velocity_gauge.is_some() => Ok(()),
            Some(reason) => Err(Error::IllPosed(format!(
                "boundary conditions [{}] leave a velocity nullspace without a velocity gauge: {reason}",
                self.kinds().map(|k| k.label()).join(", ")
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Poisson,
    Stokes,
}

/// Assembled saddle-point system with its boundary bookkeeping.
#[derive(Debug, Clone)]
pub struct LinearSystem<'m> {
    mesh: &'m Mesh,
    problem: Problem,
    /// `A = M0`
    pub a: CsrMatrix,
    /// `C = M1 E10`, so that `c(τ, v) = (dτ, v)`.
    pub c: CsrMatrix,
    /// `Eb = E21ᵀ M2 E21`
    pub e_b: CsrMatrix,
    /// `B = M2 E21` (Stokes only).
    pub b: Option<CsrMatrix>,
    matrix: CsrMatrix,
    rhs: Vec<f64>,
    fixed: BTreeMap<usize, f64>,
    pressure_gauge: bool,
    /// Potential and harmonicity multipliers of the velocity gauge.
    velocity_gauge: [usize; 2],
}

pub type StokesSystem<'m> = LinearSystem<'m>;

impl<'m> LinearSystem<'m> {
    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    /// Full symmetric matrix before essential-DOF elimination, including
    /// any bordering rows.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Essential degrees of freedom and their prescribed values.
    pub fn fixed(&self) -> &BTreeMap<usize, f64> {
        &self.fixed
    }

    /// When set, the pressure is determined up to a constant: the solve pins
    /// the first pressure DOF and then shifts the result to zero mean.
    pub fn has_pressure_gauge(&self) -> bool {
        self.pressure_gauge
    }

    pub fn velocity_gauge_rows(&self) -> usize {
        self.velocity_gauge.iter().sum()
    }

    fn counts(&self) -> [usize; 3] {
        let c = self.mesh.complex();
        let n2 = if self.problem == Problem::Stokes { c.n2() } else { 0 };
        [c.n0(), c.n1(), n2]
    }

    /// Inertia of the symmetric factorization by block: vorticity and
    /// pressure pivots are negative, velocity pivots positive; in the
    /// velocity gauge the harmonic multipliers are negative and their
    /// interior partners positive.
    fn pivot_signs(&self) -> Vec<i8> {
        let [n0, n1, n2] = self.counts();
        let mut signs = vec![-1i8; n0];
        signs.extend(std::iter::repeat_n(1, n1));
        signs.extend(std::iter::repeat_n(-1, n2));
        let [potentials, harmonic] = self.velocity_gauge;
        signs.extend(std::iter::repeat_n(-1, potentials));
        signs.extend(std::iter::repeat_n(1, harmonic));
        debug_assert_eq!(signs.len(), self.matrix.rows());
        signs
    }

    fn pinned_pressure(&self) -> Option<usize> {
        let [n0, n1, _] = self.counts();
        self.pressure_gauge.then_some(n0 + n1)
    }

    /// Matrix and right-hand side restricted to the free unknowns, with the
    /// essential values moved to the right; also returns the free indices.
    /// A gauged pressure has its first DOF pinned to zero.
    pub fn reduced(&self) -> (CsrMatrix, Vec<f64>, Vec<usize>) {
        let n = self.matrix.rows();
        let pinned = self.pinned_pressure();
        let mut map = vec![usize::MAX; n];
        let mut free = Vec::with_capacity(n - self.fixed.len());
        for (i, slot) in map.iter_mut().enumerate() {
            if !self.fixed.contains_key(&i) && Some(i) != pinned {
                *slot = free.len();
                free.push(i);
            }
        }
        let mut rhs: Vec<f64> = free.iter().map(|&i| self.rhs[i]).collect();
        let mut triplets = Vec::with_capacity(self.matrix.nnz());
        for (r, c, v) in self.matrix.triplets() {
            let (rr, cc) = (map[r], map[c]);
            if rr == usize::MAX {
                continue;
            }
            if cc == usize::MAX {
                rhs[rr] -= v * self.fixed.get(&c).copied().unwrap_or(0.0);
            } else {
                triplets.push((rr, cc, v));
            }
        }
        (CsrMatrix::from_triplets(free.len(), free.len(), &triplets), rhs, free)
    }
}

fn block_triplets(m: &CsrMatrix, r0: usize, c0: usize, scale: f64, out: &mut Vec<(usize, usize, f64)>) {
    out.extend(m.triplets().map(|(r, c, v)| (r0 + r, c0 + c, scale * v)));
}

fn collect_fixed(mesh: &Mesh, bc: &BoundaryConditionSpec) -> Result<BTreeMap<usize, f64>> {
    let complex = mesh.complex();
    let n0 = complex.n0();
    let mut fixed = BTreeMap::new();
    for side in Side::ALL {
        let cond = bc.side(side);
        if cond.kind.essential_vorticity() {
            let f = cond.data.vorticity.clone().expect("validated");
            let form = AnalyticForm::zero_form(move |x, y| f(x, y));
            for (i, v) in reduce_boundary(&form, mesh, side)? {
                fixed.insert(i, v);
            }
        }
        if cond.kind.essential_velocity() {
            let form = cond.data.velocity.as_ref().expect("validated");
            if form.degree() != 1 {
                return Err(Error::Configuration(format!(
                    "normal velocity datum on the {} side must be a 1-form",
                    side.name()
                )));
            }
            for (i, v) in reduce_boundary(form, mesh, side)? {
                fixed.insert(n0 + i, v);
            }
        }
    }
    Ok(fixed)
}

fn natural_loads(mesh: &Mesh, bc: &BoundaryConditionSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let complex = mesh.complex();
    let mut tangential = vec![0.0; complex.n0()];
    let mut pressure = vec![0.0; complex.n1()];
    for side in Side::ALL {
        let cond = bc.side(side);
        if cond.kind.natural_tangential() {
            let f = cond.data.tangential.clone().expect("validated");
            let load = boundary_load(mesh, 0, &[side], &move |p, n| f(p, n))?;
            tangential.iter_mut().zip(load).for_each(|(a, b)| *a += b);
        }
        if cond.kind.natural_pressure() {
            let f = cond.data.pressure_type.clone().expect("validated");
            let load = boundary_load(mesh, 1, &[side], &move |p, _| f(p[0], p[1]))?;
            pressure.iter_mut().zip(load).for_each(|(a, b)| *a += b);
        }
    }
    Ok((tangential, pressure))
}

fn check_data(f: &AnalyticForm, degree: usize, name: &str) -> Result<()> {
    if f.degree() != degree {
        return Err(Error::Configuration(format!(
            "{name} must be a {degree}-form, got a {}-form",
            f.degree()
        )));
    }
    Ok(())
}

struct Blocks {
    a: CsrMatrix,
    c: CsrMatrix,
    e_b: CsrMatrix,
    m2e21: CsrMatrix,
    m2: CsrMatrix,
}

fn blocks(mesh: &Mesh) -> Result<Blocks> {
    let complex = mesh.complex();
    let e10 = CsrMatrix::from_incidence(&complex.incidence_d10());
    let e21 = CsrMatrix::from_incidence(&complex.incidence_d21());
    let m0 = mass_matrix(mesh, 0)?;
    let m1 = mass_matrix(mesh, 1)?;
    let m2 = mass_matrix(mesh, 2)?;
    let m2e21 = m2.matmul(&e21);
    Ok(Blocks {
        a: m0,
        c: m1.matmul(&e10),
        e_b: e21.transpose().matmul(&m2e21),
        m2e21,
        m2,
    })
}

/// Mixed vector Poisson problem `d d* u + d* d u = f` written with
/// `ω = d* u`; the pressure-type datum on Γ2/Γ4 sides is `Π_b = du`.
pub fn assemble_poisson<'m>(mesh: &'m Mesh, bc: &BoundaryConditionSpec, f: &AnalyticForm) -> Result<LinearSystem<'m>> {
    check_data(f, 1, "the Poisson source")?;
    bc.check_well_posed()?;
    let complex = mesh.complex();
    let (n0, n1) = (complex.n0(), complex.n1());
    let blk = blocks(mesh)?;
    let mut t = Vec::new();
    block_triplets(&blk.a, 0, 0, -1.0, &mut t);
    block_triplets(&blk.c.transpose(), 0, n0, 1.0, &mut t);
    block_triplets(&blk.c, n0, 0, 1.0, &mut t);
    block_triplets(&blk.e_b, n0, n0, 1.0, &mut t);

    let (tangential, pressure) = natural_loads(mesh, bc)?;
    let mut rhs = tangential;
    let load = load_vector(mesh, f)?;
    rhs.extend(load.iter().zip(&pressure).map(|(a, b)| a + b));

    let mut n = n0 + n1;
    let velocity_gauge = add_velocity_gauge(mesh, bc, &blk.c, &mut t, &mut rhs, &mut n)?;
    Ok(LinearSystem {
        mesh,
        problem: Problem::Poisson,
        a: blk.a,
        c: blk.c,
        e_b: blk.e_b,
        b: None,
        matrix: CsrMatrix::from_triplets(n, n, &t),
        rhs,
        fixed: collect_fixed(mesh, bc)?,
        pressure_gauge: false,
        velocity_gauge,
    })
}

/// Stokes problem in vorticity-velocity-pressure form with `f` the body
/// force 1-form and `g` the prescribed 2-form `du`; the pressure-type datum
/// is `Π_b = du + p`.
pub fn assemble_stokes<'m>(
    mesh: &'m Mesh,
    bc: &BoundaryConditionSpec,
    f: &AnalyticForm,
    g: &AnalyticForm,
) -> Result<StokesSystem<'m>> {
    check_data(f, 1, "the body force")?;
    check_data(g, 2, "the mass source")?;
    bc.check_well_posed()?;
    let complex = mesh.complex();
    let (n0, n1, n2) = (complex.n0(), complex.n1(), complex.n2());
    let blk = blocks(mesh)?;
    let mut t = Vec::new();
    block_triplets(&blk.a, 0, 0, -1.0, &mut t);
    block_triplets(&blk.c.transpose(), 0, n0, 1.0, &mut t);
    block_triplets(&blk.c, n0, 0, 1.0, &mut t);
    block_triplets(&blk.e_b, n0, n0, 1.0, &mut t);
    block_triplets(&blk.m2e21.transpose(), n0, n0 + n1, 1.0, &mut t);
    block_triplets(&blk.m2e21, n0 + n1, n0, 1.0, &mut t);

    let (tangential, pressure) = natural_loads(mesh, bc)?;
    let mut rhs = tangential;
    let load = load_vector(mesh, f)?;
    rhs.extend(load.iter().zip(&pressure).map(|(a, b)| a + b));
    rhs.extend(blk.m2.matvec(reduce(g, mesh)?.values()));

    let mut n = n0 + n1 + n2;
    let pressure_gauge = bc.pressure_gauge();
    let velocity_gauge = add_velocity_gauge(mesh, bc, &blk.c, &mut t, &mut rhs, &mut n)?;
    Ok(LinearSystem {
        mesh,
        problem: Problem::Stokes,
        a: blk.a,
        c: blk.c,
        e_b: blk.e_b,
        b: Some(blk.m2e21),
        matrix: CsrMatrix::from_triplets(n, n, &t),
        rhs,
        fixed: collect_fixed(mesh, bc)?,
        pressure_gauge,
        velocity_gauge,
    })
}

/// Borders the system so that the velocity is tested and constrained only
/// against discrete harmonic gradients `dφ`:
///
/// ```text
/// [ K    Gᵀ    0  ] [x]   [b]
/// [ G    0   −Lᵀ  ] [θ] = [t]      G u = Pᵀ E10ᵀ M1 u,  t = Pᵀ E10ᵀ (ψ, target)
/// [ 0   −L     0  ] [ψ]   [0]      L = rows H of E10ᵀ M1 E10 P
/// ```
///
/// `φ = P θ` carries one potential per connected Γ1/Γ3 arc (where the
/// normal velocity of `dφ` must vanish) and one per remaining node. The
/// rows `H` are the nodes touching no Γ1, Γ3 or Γ4 side, where `φ` must be
/// harmonic; the potentials on Γ4 sides stay free. The second block row
/// imposes `(dφ, u − target) = 0`; the multiplier `C P θ` annihilates the
/// velocities orthogonal to the harmonic gradients. The potential of the
/// first boundary node is dropped to remove the constant.
fn add_velocity_gauge(
    mesh: &Mesh,
    bc: &BoundaryConditionSpec,
    c: &CsrMatrix,
    t: &mut Vec<(usize, usize, f64)>,
    rhs: &mut Vec<f64>,
    n: &mut usize,
) -> Result<[usize; 2]> {
    let Some(gauge) = bc.velocity_gauge() else {
        return Ok([0, 0]);
    };
    let complex = mesh.complex();
    let n0 = complex.n0();
    let kinds = bc.kinds();

    // Potential index of every node; arcs of adjacent Γ1/Γ3 sides share one.
    let mut potential = vec![usize::MAX; n0];
    let mut harmonic = vec![true; n0];
    let mut count = 0;
    for (s, side) in Side::ALL.into_iter().enumerate() {
        let nodes = complex.boundary_cells(side, 0)?;
        let kind = kinds[s];
        nodes.iter().for_each(|&i| harmonic[i] &= kind == BcType::G2);
        if matches!(kind, BcType::G1 | BcType::G3) {
            let shared = nodes.iter().map(|&i| potential[i]).find(|&p| p != usize::MAX);
            let arc = shared.unwrap_or_else(|| {
                count += 1;
                count - 1
            });
            for &i in &nodes {
                let old = potential[i];
                if old != usize::MAX && old != arc {
                    potential.iter_mut().filter(|p| **p == old).for_each(|p| *p = arc);
                } else {
                    potential[i] = arc;
                }
            }
        }
    }
    for p in potential.iter_mut().filter(|p| **p == usize::MAX) {
        *p = count;
        count += 1;
    }
    // Compact the labels after arc merges, numbering in node order.
    let mut relabel = vec![usize::MAX; count];
    let mut used = 0;
    for p in potential.iter_mut() {
        if relabel[*p] == usize::MAX {
            relabel[*p] = used;
            used += 1;
        }
        *p = relabel[*p];
    }
    let dropped = potential[complex.node(0, 0)];
    let harmonic_nodes: Vec<usize> = (0..n0).filter(|&i| harmonic[i]).collect();
    let target = match &gauge.target {
        Some(form) => {
            check_data(form, 1, "the velocity gauge target")?;
            let load = load_vector(mesh, form)?;
            complex.incidence_d10().apply_transpose(&load)
        }
        None => vec![0.0; n0],
    };
    let e10 = CsrMatrix::from_incidence(&complex.incidence_d10());
    let ct = c.transpose();
    let laplacian = ct.matmul(&e10);

    let theta0 = *n;
    let theta_index = |p: usize| (p != dropped).then(|| if p < dropped { theta0 + p } else { theta0 + p - 1 });
    let psi0 = theta0 + used - 1;
    let mut psi_index = vec![usize::MAX; n0];
    for (k, &i) in harmonic_nodes.iter().enumerate() {
        psi_index[i] = psi0 + k;
    }
    let mut theta_rhs = vec![0.0; used];
    for node in 0..n0 {
        theta_rhs[potential[node]] += target[node];
        let Some(row) = theta_index(potential[node]) else {
            continue;
        };
        for (col, v) in ct.row(node) {
            t.push((row, n0 + col, v));
            t.push((n0 + col, row, v));
        }
        for (col, v) in laplacian.row(node) {
            if psi_index[col] != usize::MAX {
                t.push((row, psi_index[col], -v));
                t.push((psi_index[col], row, -v));
            }
        }
    }
    rhs.extend((0..used).filter(|&p| p != dropped).map(|p| theta_rhs[p]));
    rhs.extend(std::iter::repeat_n(0.0, harmonic_nodes.len()));
    let blocks = [used - 1, harmonic_nodes.len()];
    *n += blocks[0] + blocks[1];
    Ok(blocks)
}

/// Solved cochains together with solver diagnostics.
#[derive(Debug, Clone)]
pub struct Solution<'m> {
    pub vorticity: DiscreteForm<'m>,
    pub velocity: DiscreteForm<'m>,
    pub pressure: Option<DiscreteForm<'m>>,
    /// `‖K x − b‖ / ‖b‖` of the reduced system.
    pub residual: f64,
    /// Whether the pressure was fixed by the zero-mean constraint.
    pub pressure_gauge: bool,
}

const REFINEMENT_STEPS: usize = 3;
const REGULARIZED_REFINEMENT_STEPS: usize = 30;
const RESIDUAL_LIMIT: f64 = 1e-8;
/// Residual the regularized factorization must reach before LU is skipped.
const REGULARIZED_RESIDUAL_LIMIT: f64 = 1e-10;
const REGULARIZATION_DELTA: f64 = 1e-6;
const REGULARIZATION_EPSILON: f64 = 1e-13;

/// Sparse LU solve of the reduced system with iterative refinement;
/// essential values are reinserted afterwards.
pub fn solve<'m>(system: &LinearSystem<'m>) -> Result<Solution<'m>> {
    let (k, b, free) = system.reduced();
    let all = system.pivot_signs();
    let signs: Vec<i8> = free.iter().map(|&i| all[i]).collect();
    let (x, residual) = solve_sparse_with_signs(&k, &b, Some(&signs)).map_err(|e| diagnose(system, e))?;
    let mut full = vec![0.0; system.matrix.rows()];
    for (&i, &v) in free.iter().zip(&x) {
        full[i] = v;
    }
    for (&i, &v) in &system.fixed {
        full[i] = v;
    }
    let [n0, n1, n2] = system.counts();
    let mesh = system.mesh;
    let vorticity = DiscreteForm::new(mesh, Cochain::new(mesh.complex(), 0, full[..n0].to_vec())?)?;
    let velocity = DiscreteForm::new(mesh, Cochain::new(mesh.complex(), 1, full[n0..n0 + n1].to_vec())?)?;
    let pressure = if system.problem == Problem::Stokes {
        let mut p = full[n0 + n1..n0 + n1 + n2].to_vec();
        if system.pressure_gauge {
            let areas = reduce(&AnalyticForm::two_form(|_, _| 1.0), mesh)?;
            let mean = p.iter().sum::<f64>() / areas.values().iter().sum::<f64>();
            p.iter_mut().zip(areas.values()).for_each(|(v, a)| *v -= mean * a);
        }
        Some(DiscreteForm::new(mesh, Cochain::new(mesh.complex(), 2, p)?)?)
    } else {
        None
    };
    Ok(Solution {
        vorticity,
        velocity,
        pressure,
        residual,
        pressure_gauge: system.pressure_gauge,
    })
}

fn diagnose(system: &LinearSystem<'_>, e: Error) -> Error {
    let Error::Solver(msg) = e else { return e };
    let suspect = if system.problem == Problem::Stokes && !system.pressure_gauge {
        "check whether the pressure is fixed by a g2/g4 side or needs the mean-pressure gauge"
    } else if system.velocity_gauge_rows() == 0 {
        "suspect an unresolved velocity nullspace"
    } else {
        "the bordered system is singular"
    };
    Error::IllPosed(format!("{msg}; {suspect}"))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `K x = b`. Symmetric matrices use a regularized `LDLᵀ`
/// factorization with AMD ordering; if that fails the residual check,
/// or `K` is not symmetric, a sparse LU factorization is used. Up to
/// three steps of iterative refinement follow. Returns `x` and the relative
/// residual `‖b − Kx‖ / ‖b‖`.
pub fn solve_sparse(k: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    solve_sparse_with_signs(k, b, None)
}

/// As [`solve_sparse`], with the expected sign of every pivot of the
/// symmetric factorization; by default it is read off the diagonal, with
/// zero diagonals counted as negative.
pub fn solve_sparse_with_signs(k: &CsrMatrix, b: &[f64], signs: Option<&[i8]>) -> Result<(Vec<f64>, f64)> {
    let n = k.rows();
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    if k.symmetry_defect() <= 1e-12 {
        if let Ok(ldlt) = SymmetricIndefinite::new(k, signs) {
            if let Ok(out) = refine(k, b, REGULARIZED_REFINEMENT_STEPS, |r| ldlt.solve(r)) {
                if out.1 <= REGULARIZED_RESIDUAL_LIMIT {
                    return Ok(out);
                }
            }
        }
    }
    let triplets: Vec<_> = k.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Solver(format!("building the sparse matrix failed: {e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::Solver(format!("sparse LU factorization failed: {e:?}")))?;
    refine(k, b, REFINEMENT_STEPS, |r| {
        let sol = lu.solve(&Mat::<f64>::from_fn(n, 1, |i, _| r[i]));
        (0..n).map(|i| sol[(i, 0)]).collect()
    })
}

fn refine(k: &CsrMatrix, b: &[f64], steps: usize, solve: impl Fn(&[f64]) -> Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let mut x = solve(b);
    let bnorm = norm(b);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let residual_of = |x: &[f64]| -> Vec<f64> { k.matvec(x).iter().zip(b).map(|(kx, bi)| bi - kx).collect() };
    let mut r = residual_of(&x);
    for _ in 0..steps {
        if !x.iter().all(|v| v.is_finite()) || norm(&r) <= 1e-15 * scale {
            break;
        }
        let corr = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&corr).map(|(v, c)| v + c).collect();
        let rc = residual_of(&candidate);
        if norm(&rc) >= norm(&r) {
            break;
        }
        x = candidate;
        r = rc;
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Solver(
            "factorization produced non-finite values (singular matrix)".into(),
        ));
    }
    let residual = norm(&r) / scale;
    if residual > RESIDUAL_LIMIT {
        return Err(Error::Solver(format!(
            "relative residual {residual:e} exceeds {RESIDUAL_LIMIT:e} (numerically singular matrix)"
        )));
    }
    Ok((x, residual))
}

/// Sparse `LDLᵀ` with AMD ordering and dynamic regularization: pivots whose
/// sign disagrees with the expected one are replaced by a small value of
/// the expected sign.
/// The perturbation is removed by iterative refinement against `K`.
struct SymmetricIndefinite {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
}

impl SymmetricIndefinite {
    fn new(k: &CsrMatrix, expected: Option<&[i8]>) -> Result<Self> {
        let n = k.rows();
        let mut signs = vec![-1i8; n];
        let mut dmax = 0.0_f64;
        let mut lower = Vec::with_capacity(k.nnz() / 2 + n);
        for (r, c, v) in k.triplets() {
            if r == c {
                dmax = dmax.max(v.abs());
                if v > 0.0 && expected.is_none() {
                    signs[r] = 1;
                }
            }
            if r >= c {
                lower.push(Triplet::new(r, c, v));
            }
        }
        if let Some(expected) = expected {
            signs.copy_from_slice(expected);
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
            .map_err(|e| Error::Solver(format!("building the sparse matrix failed: {e:?}")))?;
        let symbolic = factorize_symbolic_cholesky(
            a.symbolic(),
            FaerSide::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()));
        let regularization = LdltRegularization {
            dynamic_regularization_signs: Some(&signs),
            dynamic_regularization_delta: REGULARIZATION_DELTA * dmax,
            dynamic_regularization_epsilon: REGULARIZATION_EPSILON * dmax,
        };
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                a.as_ref(),
                FaerSide::Lower,
                regularization,
                Par::Seq,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(|e| Error::Solver(format!("LDLT factorization failed: {e:?}")))?;
        Ok(Self { symbolic, values })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let ldlt = LdltRef::new(&self.symbolic, &self.values);
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        ldlt.solve_in_place_with_conj(Conj::No, x.as_mut(), Par::Seq, MemStack::new(&mut mem));
        (0..n).map(|i| x[(i, 0)]).collect()
    }
}
