//! Discrete k-forms on a [`Mesh`]: reduction to cochains, reconstruction with
//! tensor-product nodal/edge bases, the discrete exterior derivative, mass
//! matrices and boundary trace functionals.
//!
//! Reference coefficients of a 1-form are stored against `(ds, dt)` of the
//! element-local reference coordinates; the local basis of element `e`
//! follows [`CellComplex::element_cells`](crate::topology::CellComplex::element_cells).

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis1d::{GaussRule, GllGrid};
use crate::error::{Error, Result};
use crate::geometry::{metric_weight, ElementMap, Jacobian, Mesh, MetricWeight};
use crate::sparse::CsrMatrix;
use crate::topology::{Cochain, Side};

type Field = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// A k-form given by closed-form coefficient functions of `(x, y)`.
///
/// 0-forms and 2-forms (densities against `dx∧dy`) keep their value in the
/// first slot; 1-forms store the `(dx, dy)` covector pair.
#[derive(Clone)]
pub struct AnalyticForm {
    degree: usize,
    f: Field,
}

impl fmt::Debug for AnalyticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticForm")
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

impl AnalyticForm {
    pub fn zero_form(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            degree: 0,
            f: Arc::new(move |x, y| [f(x, y), 0.0]),
        }
    }

    pub fn one_form(f: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        Self {
            degree: 1,
            f: Arc::new(f),
        }
    }

    pub fn two_form(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            degree: 2,
            f: Arc::new(move |x, y| [f(x, y), 0.0]),
        }
    }

    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            f: Arc::new(|_, _| [0.0, 0.0]),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        (self.f)(x, y)
    }

    pub fn scalar(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)[0]
    }
}

/// Gauss rule on `[-1,1]` with nodal and edge basis values at its points.
#[derive(Debug, Clone)]
pub(crate) struct BasisTable {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub lagrange: Vec<Vec<f64>>,
    pub edge: Vec<Vec<f64>>,
}

impl BasisTable {
    pub fn new(grid: &GllGrid, rule: &GaussRule) -> Self {
        let n = grid.order();
        let mut lagrange = Vec::with_capacity(rule.len());
        let mut edge = Vec::with_capacity(rule.len());
        for &x in &rule.points {
            let mut l = vec![0.0; n + 1];
            let mut e = vec![0.0; n];
            grid.lagrange_all(x, &mut l);
            grid.edge_from_lagrange(&l, &mut e);
            lagrange.push(l);
            edge.push(e);
        }
        Self {
            points: rule.points.clone(),
            weights: rule.weights.clone(),
            lagrange,
            edge,
        }
    }
}

/// Evaluates the local k-form basis of an order-`n` element from 1D values
/// in `s` and `t`; scalar bases fill slot 0.
pub(crate) fn local_basis(n: usize, k: usize, ls: &[f64], lt: &[f64], es: &[f64], et: &[f64], out: &mut Vec<[f64; 2]>) {
    out.clear();
    match k {
        0 => {
            for &b in lt {
                for &a in ls {
                    out.push([a * b, 0.0]);
                }
            }
        }
        1 => {
            for &b in lt {
                for &a in es {
                    out.push([a * b, 0.0]);
                }
            }
            for &b in et {
                for &a in ls {
                    out.push([0.0, a * b]);
                }
            }
        }
        _ => {
            for &b in et {
                for &a in es {
                    out.push([a * b, 0.0]);
                }
            }
        }
    }
    debug_assert_eq!(out.len(), local_len(n, k));
}

fn local_len(n: usize, k: usize) -> usize {
    match k {
        0 => (n + 1) * (n + 1),
        1 => 2 * n * (n + 1),
        _ => n * n,
    }
}

fn check_degree(k: usize, operation: &'static str) -> Result<()> {
    if k > 2 {
        Err(Error::InvalidDegree { degree: k, operation })
    } else {
        Ok(())
    }
}

fn finite(v: f64, p: [f64; 2], context: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DataEvaluation {
            x: p[0],
            y: p[1],
            context,
        })
    }
}

/// Reduction `ℛ` with the mesh's Gauss rule (`N + 6` points by default).
pub fn reduce(a: &AnalyticForm, mesh: &Mesh) -> Result<Cochain> {
    reduce_with(a, mesh, mesh.quadrature_points())
}

/// Reduction `ℛ`: nodal values, line integrals along 1-cells or area
/// integrals over 2-cells, using `q` Gauss points per direction and cell.
pub fn reduce_with(a: &AnalyticForm, mesh: &Mesh, q: usize) -> Result<Cochain> {
    check_degree(a.degree, "reduction")?;
    let complex = mesh.complex();
    let k = a.degree;
    let rule = GaussRule::legendre(q)?;
    let nodes = mesh.grid().nodes();
    let n = mesh.order();
    let locals: Vec<Vec<f64>> = (0..complex.num_elements())
        .into_par_iter()
        .map(|e| {
            let em = mesh.element_map(e);
            let mut out = Vec::with_capacity(local_len(n, k));
            match k {
                0 => {
                    for &t in nodes {
                        for &s in nodes {
                            let p = em.eval(s, t);
                            out.push(finite(a.scalar(p[0], p[1]), p, "reducing a 0-form")?);
                        }
                    }
                }
                1 => {
                    for b in 0..=n {
                        for i in 1..=n {
                            out.push(line_integral(a, &em, &rule, [nodes[i - 1], nodes[i]], nodes[b], 0)?);
                        }
                    }
                    for b in 1..=n {
                        for i in 0..=n {
                            out.push(line_integral(a, &em, &rule, [nodes[b - 1], nodes[b]], nodes[i], 1)?);
                        }
                    }
                }
                _ => {
                    for b in 1..=n {
                        for i in 1..=n {
                            let mut sum = 0.0;
                            for (t, wt) in rule.on_interval(nodes[b - 1], nodes[b]) {
                                for (s, ws) in rule.on_interval(nodes[i - 1], nodes[i]) {
                                    let p = em.eval(s, t);
                                    let det = em.jacobian(s, t)?.det();
                                    let v = finite(a.scalar(p[0], p[1]), p, "reducing a 2-form")?;
                                    sum += ws * wt * v * det;
                                }
                            }
                            out.push(sum);
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; complex.count(k)];
    for (e, local) in locals.iter().enumerate() {
        for (&g, &v) in complex.element_cells(e, k).iter().zip(local) {
            values[g] = v;
        }
    }
    Cochain::new(complex, k, values)
}

/// `∫ a(Φ(γ)) · ∂Φ/∂r dr` along the local segment varying in direction `dir`
/// over `span` with the other coordinate fixed at `fixed`.
fn line_integral(
    a: &AnalyticForm,
    em: &ElementMap<'_>,
    rule: &GaussRule,
    span: [f64; 2],
    fixed: f64,
    dir: usize,
) -> Result<f64> {
    let mut sum = 0.0;
    for (r, w) in rule.on_interval(span[0], span[1]) {
        let (s, t) = if dir == 0 { (r, fixed) } else { (fixed, r) };
        let p = em.eval(s, t);
        let tangent = em.jacobian(s, t)?.column(dir);
        let v = a.eval(p[0], p[1]);
        let v = finite(v[0] * tangent[0] + v[1] * tangent[1], p, "reducing a 1-form")?;
        sum += w * v;
    }
    Ok(sum)
}

/// A cochain bound to the mesh that reconstructs it.
#[derive(Debug, Clone)]
pub struct DiscreteForm<'m> {
    mesh: &'m Mesh,
    cochain: Cochain,
}

impl<'m> DiscreteForm<'m> {
    pub fn new(mesh: &'m Mesh, cochain: Cochain) -> Result<Self> {
        if cochain.len() != mesh.complex().count(cochain.degree()) {
            return Err(Error::InvalidMesh(format!(
                "{}-cochain of length {} does not match the mesh ({} cells)",
                cochain.degree(),
                cochain.len(),
                mesh.complex().count(cochain.degree())
            )));
        }
        Ok(Self { mesh, cochain })
    }

    /// `π_h a = ℐℛ a`.
    pub fn project(mesh: &'m Mesh, a: &AnalyticForm) -> Result<Self> {
        Ok(Self {
            mesh,
            cochain: reduce(a, mesh)?,
        })
    }

    pub fn from_values(mesh: &'m Mesh, degree: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(mesh, Cochain::new(mesh.complex(), degree, values)?)
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn degree(&self) -> usize {
        self.cochain.degree()
    }

    pub fn cochain(&self) -> &Cochain {
        &self.cochain
    }

    pub fn values(&self) -> &[f64] {
        self.cochain.values()
    }

    /// `d` realized by the incidence matrix; no quadrature involved.
    pub fn exterior_derivative(&self) -> Result<DiscreteForm<'m>> {
        let k = self.degree();
        if k >= 2 {
            return Err(Error::InvalidDegree {
                degree: k,
                operation: "exterior derivative of a top-degree form",
            });
        }
        let e = self.mesh.complex().incidence(k)?;
        DiscreteForm::from_values(self.mesh, k + 1, e.apply(self.values()))
    }

    /// Reference coefficients `Σ c_I ψ_I(s, t)` in element `e`.
    pub fn eval_reference(&self, e: usize, s: f64, t: f64) -> [f64; 2] {
        let grid = self.mesh.grid();
        let n = grid.order();
        let (mut ls, mut lt) = (vec![0.0; n + 1], vec![0.0; n + 1]);
        let (mut es, mut et) = (vec![0.0; n], vec![0.0; n]);
        grid.lagrange_all(s, &mut ls);
        grid.lagrange_all(t, &mut lt);
        grid.edge_from_lagrange(&ls, &mut es);
        grid.edge_from_lagrange(&lt, &mut et);
        let mut basis = Vec::new();
        local_basis(n, self.degree(), &ls, &lt, &es, &et, &mut basis);
        self.combine(e, &basis)
    }

    fn combine(&self, e: usize, basis: &[[f64; 2]]) -> [f64; 2] {
        let cells = self.mesh.complex().element_cells(e, self.degree());
        let values = self.values();
        let mut out = [0.0; 2];
        for (&g, phi) in cells.iter().zip(basis) {
            out[0] += values[g] * phi[0];
            out[1] += values[g] * phi[1];
        }
        out
    }

    /// Physical coefficients: the value for 0-forms, the `(dx, dy)` pair for
    /// 1-forms, the density against `dx∧dy` for 2-forms.
    pub fn eval_physical(&self, e: usize, s: f64, t: f64) -> Result<[f64; 2]> {
        let r = self.eval_reference(e, s, t);
        let j = self.mesh.element_map(e).jacobian(s, t)?;
        Ok(to_physical(self.degree(), r, &j))
    }

    /// Evaluates the reconstruction at `(element, s, t)` points, returning
    /// reference coefficients.
    pub fn reconstruct_eval(&self, points: &[(usize, f64, f64)]) -> Vec<[f64; 2]> {
        points.iter().map(|&(e, s, t)| self.eval_reference(e, s, t)).collect()
    }

    /// `‖self − exact‖_{L²}` with `q` Gauss points per element direction.
    pub fn l2_error(&self, exact: &AnalyticForm, q: usize) -> Result<f64> {
        if exact.degree() != self.degree() {
            return Err(Error::InvalidDegree {
                degree: exact.degree(),
                operation: "L2 error against a form of another degree",
            });
        }
        let grid = self.mesh.grid();
        let n = grid.order();
        let k = self.degree();
        let table = BasisTable::new(grid, &GaussRule::legendre(q)?);
        let partial: Vec<f64> = (0..self.mesh.complex().num_elements())
            .into_par_iter()
            .map(|e| {
                let em = self.mesh.element_map(e);
                let mut basis = Vec::new();
                let mut sum = 0.0;
                for (gt, &t) in table.points.iter().enumerate() {
                    for (gs, &s) in table.points.iter().enumerate() {
                        local_basis(
                            n,
                            k,
                            &table.lagrange[gs],
                            &table.lagrange[gt],
                            &table.edge[gs],
                            &table.edge[gt],
                            &mut basis,
                        );
                        let j = em.jacobian(s, t)?;
                        let num = to_physical(k, self.combine(e, &basis), &j);
                        let p = em.eval(s, t);
                        let ex = exact.eval(p[0], p[1]);
                        let d = [num[0] - ex[0], num[1] - ex[1]];
                        let sq = finite(d[0] * d[0] + d[1] * d[1], p, "evaluating an error norm")?;
                        sum += table.weights[gs] * table.weights[gt] * sq * j.det();
                    }
                }
                Ok(sum)
            })
            .collect::<Result<_>>()?;
        Ok(partial.iter().sum::<f64>().sqrt())
    }
}

fn to_physical(k: usize, r: [f64; 2], j: &Jacobian) -> [f64; 2] {
    match k {
        0 => r,
        1 => j.push_covector(r),
        _ => [r[0] / j.det(), 0.0],
    }
}

/// Mass matrix with the mesh's Gauss rule.
pub fn mass_matrix(mesh: &Mesh, k: usize) -> Result<CsrMatrix> {
    mass_matrix_with(mesh, k, mesh.quadrature_points())
}

/// `M_k[I][J] = (ψ_I, ψ_J)_{L²}` using the metric weights of the mesh,
/// integrated with `q` Gauss points per element direction.
pub fn mass_matrix_with(mesh: &Mesh, k: usize, q: usize) -> Result<CsrMatrix> {
    check_degree(k, "mass matrix")?;
    let n = mesh.order();
    if q < n + 1 {
        return Err(Error::Configuration(format!(
            "mass matrix quadrature needs at least N+1 = {} points, got {q}",
            n + 1
        )));
    }
    let complex = mesh.complex();
    let table = BasisTable::new(mesh.grid(), &GaussRule::legendre(q)?);
    let len = local_len(n, k);
    let blocks: Vec<Vec<f64>> = (0..complex.num_elements())
        .into_par_iter()
        .map(|e| {
            let em = mesh.element_map(e);
            let mut local = vec![0.0; len * len];
            let mut basis = Vec::with_capacity(len);
            let mut weighted = vec![[0.0; 2]; len];
            for (gt, &t) in table.points.iter().enumerate() {
                for (gs, &s) in table.points.iter().enumerate() {
                    local_basis(
                        n,
                        k,
                        &table.lagrange[gs],
                        &table.lagrange[gt],
                        &table.edge[gs],
                        &table.edge[gt],
                        &mut basis,
                    );
                    let w = table.weights[gs] * table.weights[gt];
                    match metric_weight(k, &em.jacobian(s, t)?)? {
                        MetricWeight::Scalar(m) => {
                            for (o, b) in weighted.iter_mut().zip(&basis) {
                                *o = [w * m * b[0], 0.0];
                            }
                        }
                        MetricWeight::Tensor(m) => {
                            for (o, b) in weighted.iter_mut().zip(&basis) {
                                *o = [
                                    w * (m[0][0] * b[0] + m[0][1] * b[1]),
                                    w * (m[1][0] * b[0] + m[1][1] * b[1]),
                                ];
                            }
                        }
                    }
                    for i in 0..len {
                        let bi = basis[i];
                        if bi == [0.0, 0.0] {
                            continue;
                        }
                        let row = &mut local[i * len..(i + 1) * len];
                        for (r, wj) in row.iter_mut().zip(&weighted) {
                            *r += bi[0] * wj[0] + bi[1] * wj[1];
                        }
                    }
                }
            }
            Ok(local)
        })
        .collect::<Result<_>>()?;
    let mut triplets = Vec::with_capacity(blocks.len() * len * len);
    for (e, local) in blocks.iter().enumerate() {
        let cells = complex.element_cells(e, k);
        for (i, &gi) in cells.iter().enumerate() {
            for (j, &gj) in cells.iter().enumerate() {
                triplets.push((gi, gj, local[i * len + j]));
            }
        }
    }
    let n_k = complex.count(k);
    Ok(CsrMatrix::from_triplets(n_k, n_k, &triplets))
}

/// Load vector `(ψ_I, a)_{L²}` with the mesh's Gauss rule.
pub fn load_vector(mesh: &Mesh, a: &AnalyticForm) -> Result<Vec<f64>> {
    load_vector_with(mesh, a, mesh.quadrature_points())
}

/// `(ψ_I, a)_{L²}` for every basis function of degree `a.degree()`.
pub fn load_vector_with(mesh: &Mesh, a: &AnalyticForm, q: usize) -> Result<Vec<f64>> {
    let k = a.degree();
    check_degree(k, "load vector")?;
    let n = mesh.order();
    let complex = mesh.complex();
    let table = BasisTable::new(mesh.grid(), &GaussRule::legendre(q)?);
    let locals: Vec<Vec<f64>> = (0..complex.num_elements())
        .into_par_iter()
        .map(|e| {
            let em = mesh.element_map(e);
            let mut local = vec![0.0; local_len(n, k)];
            let mut basis = Vec::new();
            for (gt, &t) in table.points.iter().enumerate() {
                for (gs, &s) in table.points.iter().enumerate() {
                    local_basis(
                        n,
                        k,
                        &table.lagrange[gs],
                        &table.lagrange[gt],
                        &table.edge[gs],
                        &table.edge[gt],
                        &mut basis,
                    );
                    let j = em.jacobian(s, t)?;
                    let p = em.eval(s, t);
                    let v = a.eval(p[0], p[1]);
                    if !(v[0].is_finite() && v[1].is_finite()) {
                        return Err(Error::DataEvaluation {
                            x: p[0],
                            y: p[1],
                            context: "assembling a load vector",
                        });
                    }
                    let w = table.weights[gs] * table.weights[gt];
                    // reference-side weight so that Σ w ψ̂·g equals (ψ, a)
                    let g = match k {
                        0 => [v[0] * j.det(), 0.0],
                        1 => {
                            let inv = j.inverse();
                            let det = j.det();
                            [
                                det * (inv[0][0] * v[0] + inv[0][1] * v[1]),
                                det * (inv[1][0] * v[0] + inv[1][1] * v[1]),
                            ]
                        }
                        _ => [v[0], 0.0],
                    };
                    for (l, b) in local.iter_mut().zip(&basis) {
                        *l += w * (b[0] * g[0] + b[1] * g[1]);
                    }
                }
            }
            Ok(local)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; complex.count(k)];
    for (e, local) in locals.iter().enumerate() {
        for (&g, &v) in complex.element_cells(e, k).iter().zip(local) {
            out[g] += v;
        }
    }
    Ok(out)
}

/// Reduction restricted to the boundary k-cells (k ∈ {0, 1}) of `side`,
/// returned as `(global index, value)` pairs.
pub fn reduce_boundary(a: &AnalyticForm, mesh: &Mesh, side: Side) -> Result<Vec<(usize, f64)>> {
    let k = a.degree();
    if k > 1 {
        return Err(Error::InvalidDegree {
            degree: k,
            operation: "boundary reduction",
        });
    }
    let complex = mesh.complex();
    let nodes = mesh.grid().nodes();
    let n = mesh.order();
    let rule = GaussRule::legendre(mesh.quadrature_points())?;
    let (fixed, along_s) = Mesh::side_frame(side);
    let dir = if along_s { 0 } else { 1 };
    let b = if fixed < 0.0 { 0 } else { n };
    let mut out = Vec::new();
    for e in complex.boundary_elements(side) {
        let em = mesh.element_map(e);
        let cells = complex.element_cells(e, k);
        if k == 0 {
            for (i, &r) in nodes.iter().enumerate() {
                let (s, t, idx) = if along_s {
                    (r, fixed, b * (n + 1) + i)
                } else {
                    (fixed, r, i * (n + 1) + b)
                };
                let p = em.eval(s, t);
                out.push((cells[idx], finite(a.scalar(p[0], p[1]), p, "reducing boundary data")?));
            }
        } else {
            for i in 1..=n {
                let idx = if along_s {
                    b * n + i - 1
                } else {
                    n * (n + 1) + (i - 1) * (n + 1) + b
                };
                let v = line_integral(a, &em, &rule, [nodes[i - 1], nodes[i]], fixed, dir)?;
                out.push((cells[idx], v));
            }
        }
    }
    Ok(out)
}

/// Boundary datum as a function of the physical point and the unit outward
/// normal there.
pub type BoundaryData<'a> = &'a (dyn Fn([f64; 2], [f64; 2]) -> f64 + Sync);

/// Boundary trace functional with the mesh's Gauss rule on each boundary 1-cell.
pub fn boundary_load(mesh: &Mesh, k: usize, sides: &[Side], data: BoundaryData<'_>) -> Result<Vec<f64>> {
    boundary_load_with(mesh, k, sides, data, mesh.quadrature_points())
}

/// Pairing of boundary traces of the k-form basis with boundary data:
///
/// - `k = 0`: `∮ tr ψ_I · data ds` (arc-length measure), the pairing of
///   vorticity test functions with a tangential velocity datum `u·n`;
/// - `k = 1`: `∮ data · tr ψ_I` along the counterclockwise boundary, the
///   pairing of velocity test functions with a pressure-type datum.
pub fn boundary_load_with(mesh: &Mesh, k: usize, sides: &[Side], data: BoundaryData<'_>, q: usize) -> Result<Vec<f64>> {
    if k > 1 {
        return Err(Error::InvalidDegree {
            degree: k,
            operation: "boundary load (traces of 2-forms vanish)",
        });
    }
    let complex = mesh.complex();
    let grid = mesh.grid();
    let n = grid.order();
    let nodes = grid.nodes();
    let rule = GaussRule::legendre(q)?;
    let mut out = vec![0.0; complex.count(k)];
    let mut l = vec![0.0; n + 1];
    let mut ed = vec![0.0; n];
    for &side in sides {
        let (fixed, along_s) = Mesh::side_frame(side);
        let dir = if along_s { 0 } else { 1 };
        let sigma = side.ccw_sign();
        for e in complex.boundary_elements(side) {
            let em = mesh.element_map(e);
            let cells = complex.element_cells(e, k);
            let trace_index = |i: usize| -> usize {
                let b = if fixed < 0.0 { 0 } else { n };
                match (k, along_s) {
                    (0, true) => cells[b * (n + 1) + i],
                    (0, false) => cells[i * (n + 1) + b],
                    (_, true) => cells[b * n + i - 1],
                    (_, false) => cells[n * (n + 1) + (i - 1) * (n + 1) + b],
                }
            };
            for c in 1..=n {
                for (r, w) in rule.on_interval(nodes[c - 1], nodes[c]) {
                    let (s, t) = if along_s { (r, fixed) } else { (fixed, r) };
                    let p = em.eval(s, t);
                    let tangent = em.jacobian(s, t)?.column(dir);
                    let speed = tangent[0].hypot(tangent[1]);
                    let normal = [sigma * tangent[1] / speed, -sigma * tangent[0] / speed];
                    let g = finite(data(p, normal), p, "evaluating boundary data")?;
                    grid.lagrange_all(r, &mut l);
                    if k == 0 {
                        for (i, &li) in l.iter().enumerate() {
                            out[trace_index(i)] += w * li * g * speed;
                        }
                    } else {
                        grid.edge_from_lagrange(&l, &mut ed);
                        for (i, &ei) in ed.iter().enumerate() {
                            out[trace_index(i + 1)] += w * sigma * ei * g;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mapping;
    use crate::topology::CellComplex;

    fn unit(m: usize, n: usize) -> Mesh {
        Mesh::uniform(m, n, Mapping::unit_square()).unwrap()
    }

    #[test]
    fn reduce_constant_area_and_point_value() {
        let mesh = unit(1, 1);
        let c = reduce(&AnalyticForm::two_form(|_, _| 1.0), &mesh).unwrap();
        assert!((c.values()[0] - 1.0).abs() < 1e-14);
        let c = reduce(&AnalyticForm::zero_form(|x, y| x * y), &mesh).unwrap();
        let top_right = mesh.complex().node(1, 1);
        assert!((c.values()[top_right] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_gradient_is_closed() {
        let mesh = Mesh::uniform(2, 3, Mapping::curvilinear()).unwrap();
        let grad = AnalyticForm::one_form(|x, y| [2.0 * x * y, x * x]);
        let c = reduce(&grad, &mesh).unwrap();
        let curl = mesh.complex().incidence_d21().apply(c.values());
        assert!(curl.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn reduction_rejects_nan() {
        let mesh = unit(1, 2);
        let err = reduce(&AnalyticForm::zero_form(|x, _| (x - 0.5).ln()), &mesh).unwrap_err();
        assert!(matches!(err, Error::DataEvaluation { .. }));
    }

    #[test]
    fn reconstruction_reproduces_polynomials() {
        let mesh = Mesh::uniform(2, 3, Mapping::affine_box([0.0, 2.0], [-1.0, 1.0])).unwrap();
        let poly = |x: f64, y: f64| 1.0 + x * x * y - 0.5 * y * y * y + x * x * x * y * y * y;
        let f = DiscreteForm::project(&mesh, &AnalyticForm::zero_form(poly)).unwrap();
        for k in 0..50 {
            let e = k % 4;
            let s = ((k * 7) as f64 * 0.37).sin();
            let t = ((k * 3) as f64 * 0.91).cos();
            let p = mesh.element_map(e).eval(s, t);
            let v = f.eval_physical(e, s, t).unwrap()[0];
            assert!((v - poly(p[0], p[1])).abs() < 1e-11);
        }
    }

    #[test]
    fn zero_cochain_reconstructs_zero() {
        let mesh = unit(2, 2);
        for k in 0..3 {
            let f = DiscreteForm::from_values(&mesh, k, vec![0.0; mesh.complex().count(k)]).unwrap();
            assert_eq!(f.eval_reference(3, 0.2, -0.4), [0.0, 0.0]);
        }
    }

    #[test]
    fn single_cell_density_is_uniform() {
        let mesh = unit(1, 1);
        let f = DiscreteForm::from_values(&mesh, 2, vec![2.5]).unwrap();
        for (s, t) in [(0.0, 0.0), (-0.9, 0.3), (0.7, 0.7)] {
            assert!((f.eval_physical(0, s, t).unwrap()[0] - 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn exterior_derivative_commutes_with_reduction() {
        let mesh = Mesh::uniform(2, 3, Mapping::curvilinear()).unwrap();
        let pi = std::f64::consts::PI;
        let a = AnalyticForm::zero_form(move |x, y| (pi * x).sin() * (pi * y).sin());
        let da = AnalyticForm::one_form(move |x, y| {
            [
                pi * (pi * x).cos() * (pi * y).sin(),
                pi * (pi * x).sin() * (pi * y).cos(),
            ]
        });
        let lhs = DiscreteForm::project(&mesh, &a).unwrap().exterior_derivative().unwrap();
        let rhs = reduce(&da, &mesh).unwrap();
        for (l, r) in lhs.values().iter().zip(rhs.values()) {
            assert!((l - r).abs() < 1e-12);
        }
        let dd = lhs.exterior_derivative().unwrap();
        assert!(dd.values().iter().all(|v| v.abs() < 1e-13));
        assert!(dd.exterior_derivative().is_err());
        let c = DiscreteForm::project(&mesh, &AnalyticForm::zero_form(|_, _| 3.0)).unwrap();
        assert!(c.exterior_derivative().unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mass_matrix_small_cases() {
        let mesh = unit(1, 1);
        let m2 = mass_matrix(&mesh, 2).unwrap();
        assert_eq!(m2.rows(), 1);
        assert!((m2.get(0, 0) - 1.0).abs() < 1e-14);
        // N=1 nodal mass on the unit square: (1/36)·[4 2 2 1] pattern
        let m0 = mass_matrix(&mesh, 0).unwrap();
        assert!((m0.get(0, 0) - 1.0 / 9.0).abs() < 1e-14);
        assert!((m0.get(0, 3) - 1.0 / 36.0).abs() < 1e-14);
        let total: f64 = m0.triplets().map(|t| t.2).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mass_matrix_scaling_law() {
        let h = 0.3;
        let reference = mass_matrix(&unit(1, 2), 2).unwrap();
        let scaled = mass_matrix(
            &Mesh::uniform(1, 2, Mapping::affine_box([0.0, h], [0.0, h])).unwrap(),
            2,
        )
        .unwrap();
        for ((_, _, a), (_, _, b)) in reference.triplets().zip(scaled.triplets()) {
            assert!((b - a / (h * h)).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn mass_matrices_are_symmetric_positive_definite() {
        let mesh = Mesh::uniform(2, 3, Mapping::curvilinear()).unwrap();
        for k in 0..3 {
            let m = mass_matrix(&mesh, k).unwrap();
            assert!(m.symmetry_defect() < 1e-14);
            for seed in 0..5 {
                let x: Vec<f64> = (0..m.rows()).map(|i| ((i * 31 + seed * 17) as f64).sin()).collect();
                let xmx: f64 = x.iter().zip(m.matvec(&x)).map(|(a, b)| a * b).sum();
                assert!(xmx > 0.0);
            }
        }
        assert!(mass_matrix_with(&mesh, 0, 3).is_err());
    }

    #[test]
    fn mass_matrix_gives_l2_inner_product() {
        let mesh = Mesh::uniform(2, 4, Mapping::curvilinear()).unwrap();
        let pi = std::f64::consts::PI;
        let u = AnalyticForm::one_form(move |x, y| [x * y, 1.0 + y * y]);
        let f = DiscreteForm::project(&mesh, &u).unwrap();
        let m1 = mass_matrix(&mesh, 1).unwrap();
        let norm2: f64 = f.values().iter().zip(m1.matvec(f.values())).map(|(a, b)| a * b).sum();
        let zero = AnalyticForm::zero(1);
        let direct = f.l2_error(&zero, 10).unwrap();
        assert!((norm2.sqrt() - direct).abs() < 1e-12);
        let _ = pi;
    }

    #[test]
    fn boundary_load_partition_of_unity() {
        let mesh = unit(1, 1);
        let c = 2.5;
        let load = boundary_load(&mesh, 0, &[Side::Bottom], &|_, _| c).unwrap();
        assert!((load.iter().sum::<f64>() - c).abs() < 1e-14);
        let zero = boundary_load(&mesh, 1, &Side::ALL, &|_, _| 0.0).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_load_vanishes_on_interior_dofs() {
        let mesh = Mesh::uniform(2, 3, Mapping::curvilinear()).unwrap();
        let complex: &CellComplex = mesh.complex();
        for k in 0..2 {
            let load = boundary_load(&mesh, k, &Side::ALL, &|p, n| 1.0 + p[0] * n[1]).unwrap();
            let mut on_boundary = vec![false; complex.count(k)];
            for side in Side::ALL {
                for i in complex.boundary_cells(side, k).unwrap() {
                    on_boundary[i] = true;
                }
            }
            for (i, v) in load.iter().enumerate() {
                if !on_boundary[i] {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn outward_normals_on_the_unit_square() {
        let mesh = unit(2, 2);
        for (side, expect) in [
            (Side::Bottom, [0.0, -1.0]),
            (Side::Right, [1.0, 0.0]),
            (Side::Top, [0.0, 1.0]),
            (Side::Left, [-1.0, 0.0]),
        ] {
            // ∮ n_x ds and ∮ n_y ds over one side equal the normal times the length
            let lx = boundary_load(&mesh, 0, &[side], &|_, n| n[0])
                .unwrap()
                .iter()
                .sum::<f64>();
            let ly = boundary_load(&mesh, 0, &[side], &|_, n| n[1])
                .unwrap()
                .iter()
                .sum::<f64>();
            assert!((lx - expect[0]).abs() < 1e-14 && (ly - expect[1]).abs() < 1e-14);
        }
    }
}
