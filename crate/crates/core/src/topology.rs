//! Oriented tensor-product cell complex over an `M_x × M_y` element mesh.
//!
//! Each element carries an order-`N` Gauss-Lobatto grid, so the global
//! complex is a `(M_x N + 1) × (M_y N + 1)` lattice of 0-cells. Cells on
//! inter-element interfaces are shared, which makes 0-forms continuous and
//! 1-forms tangentially continuous without any constraint equations.
//!
//! Numbering (row-major, `x` fastest within each family):
//! - 0-cells: `node(i, j) = j * n_x + i`
//! - 1-cells: horizontal edges `[node(i,j), node(i+1,j)]` first, oriented +x,
//!   then vertical edges `[node(i,j), node(i,j+1)]`, oriented +y
//! - 2-cells: `cell(i, j) = j * (n_x - 1) + i`, oriented counterclockwise

use crate::error::{Error, Result};

/// The four sides of the (logically rectangular) domain, in counterclockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    /// +1 when increasing reference coordinate runs counterclockwise along
    /// this side (bottom, right), -1 otherwise (top, left).
    pub fn ccw_sign(self) -> f64 {
        match self {
            Side::Bottom | Side::Right => 1.0,
            Side::Top | Side::Left => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }
}

/// Values attached to the k-cells of a complex.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    degree: usize,
    values: Vec<f64>,
}

impl Cochain {
    pub fn new(complex: &CellComplex, degree: usize, values: Vec<f64>) -> Result<Self> {
        if degree > 2 {
            return Err(Error::InvalidDegree {
                degree,
                operation: "cochain",
            });
        }
        let n = complex.count(degree);
        if values.len() != n {
            return Err(Error::InvalidMesh(format!(
                "{degree}-cochain has {} values, complex has {n} {degree}-cells",
                values.len()
            )));
        }
        Ok(Self { degree, values })
    }

    pub fn zeros(complex: &CellComplex, degree: usize) -> Self {
        Self {
            degree,
            values: vec![0.0; complex.count(degree)],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sparse integer matrix with entries in {-1, 0, +1}, stored by rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    signs: Vec<i8>,
}

impl IncidenceMatrix {
    fn from_rows(cols: usize, rows: Vec<Vec<(usize, i8)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut signs = Vec::new();
        row_ptr.push(0);
        for mut r in rows.iter().cloned() {
            r.sort_unstable_by_key(|e| e.0);
            for (c, s) in r {
                col_idx.push(c);
                signs.push(s);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            signs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.signs.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.signs[span].iter().copied())
    }

    /// `E · x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).map(|(c, s)| f64::from(s) * x[c]).sum())
            .collect()
    }

    /// `Eᵀ · y`
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (c, s) in self.row(r) {
                out[c] += f64::from(s) * yr;
            }
        }
        out
    }

    /// Exact integer product `self · rhs` as `(row, col, value)` triplets
    /// with zero entries dropped.
    pub fn compose(&self, rhs: &IncidenceMatrix) -> Vec<(usize, usize, i64)> {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Vec::new();
        let mut acc = std::collections::BTreeMap::new();
        for r in 0..self.rows {
            acc.clear();
            for (k, s) in self.row(r) {
                for (c, t) in rhs.row(k) {
                    *acc.entry(c).or_insert(0_i64) += i64::from(s) * i64::from(t);
                }
            }
            out.extend(acc.iter().filter(|(_, &v)| v != 0).map(|(&c, &v)| (r, c, v)));
        }
        out
    }

    /// Dense copy, row-major; intended for small meshes in tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        let mut d = vec![vec![0; self.cols]; self.rows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, s) in self.row(r) {
                row[c] = s;
            }
        }
        d
    }

    /// Transpose, i.e. the boundary operator on chains.
    pub fn transpose(&self) -> IncidenceMatrix {
        let mut rows = vec![Vec::new(); self.cols];
        for r in 0..self.rows {
            for (c, s) in self.row(r) {
                rows[c].push((r, s));
            }
        }
        IncidenceMatrix::from_rows(self.rows, rows)
    }
}

/// Tensor-product cell complex of `M_x × M_y` elements of order `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellComplex {
    elements_x: usize,
    elements_y: usize,
    order: usize,
    /// element-local → global index tables, one per degree, flattened
    /// `element * local_count + local`.
    local_to_global: [Vec<usize>; 3],
}

impl CellComplex {
    pub fn new(elements_x: usize, elements_y: usize, order: usize) -> Result<Self> {
        if elements_x == 0 || elements_y == 0 || order == 0 {
            return Err(Error::InvalidMesh(format!(
                "element counts and order must be positive, got M_x={elements_x}, M_y={elements_y}, N={order}"
            )));
        }
        let mut complex = Self {
            elements_x,
            elements_y,
            order,
            local_to_global: [Vec::new(), Vec::new(), Vec::new()],
        };
        complex.local_to_global = [0, 1, 2].map(|k| complex.build_table(k));
        Ok(complex)
    }

    pub fn elements_x(&self) -> usize {
        self.elements_x
    }

    pub fn elements_y(&self) -> usize {
        self.elements_y
    }

    pub fn num_elements(&self) -> usize {
        self.elements_x * self.elements_y
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of lattice nodes in x.
    pub fn nodes_x(&self) -> usize {
        self.elements_x * self.order + 1
    }

    pub fn nodes_y(&self) -> usize {
        self.elements_y * self.order + 1
    }

    pub fn n0(&self) -> usize {
        self.nodes_x() * self.nodes_y()
    }

    pub fn num_horizontal_edges(&self) -> usize {
        (self.nodes_x() - 1) * self.nodes_y()
    }

    pub fn n1(&self) -> usize {
        self.num_horizontal_edges() + self.nodes_x() * (self.nodes_y() - 1)
    }

    pub fn n2(&self) -> usize {
        (self.nodes_x() - 1) * (self.nodes_y() - 1)
    }

    /// Number of k-cells.
    pub fn count(&self, k: usize) -> usize {
        match k {
            0 => self.n0(),
            1 => self.n1(),
            2 => self.n2(),
            _ => 0,
        }
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nodes_x() + i
    }

    pub fn horizontal_edge(&self, i: usize, j: usize) -> usize {
        j * (self.nodes_x() - 1) + i
    }

    pub fn vertical_edge(&self, i: usize, j: usize) -> usize {
        self.num_horizontal_edges() + j * self.nodes_x() + i
    }

    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * (self.nodes_x() - 1) + i
    }

    /// Element index for element column `ex` and row `ey`.
    pub fn element(&self, ex: usize, ey: usize) -> usize {
        ey * self.elements_x + ex
    }

    pub fn element_position(&self, e: usize) -> (usize, usize) {
        (e % self.elements_x, e / self.elements_x)
    }

    /// Number of element-local k-cells.
    pub fn local_count(&self, k: usize) -> usize {
        let n = self.order;
        match k {
            0 => (n + 1) * (n + 1),
            1 => 2 * n * (n + 1),
            2 => n * n,
            _ => 0,
        }
    }

    /// Global indices of the k-cells of element `e`, in local order.
    ///
    /// Local order: nodes `(a, b)` at `b * (N+1) + a`; horizontal edges
    /// `(a = 1..=N, b = 0..=N)` at `b * N + a - 1`, followed by vertical
    /// edges `(a = 0..=N, b = 1..=N)` at `N(N+1) + (b-1)(N+1) + a`; cells
    /// `(a, b = 1..=N)` at `(b-1) * N + a - 1`.
    pub fn element_cells(&self, e: usize, k: usize) -> &[usize] {
        let len = self.local_count(k);
        &self.local_to_global[k][e * len..(e + 1) * len]
    }

    fn build_table(&self, k: usize) -> Vec<usize> {
        let n = self.order;
        let mut table = Vec::with_capacity(self.num_elements() * self.local_count(k));
        for e in 0..self.num_elements() {
            let (ex, ey) = self.element_position(e);
            let (ox, oy) = (ex * n, ey * n);
            match k {
                0 => {
                    for b in 0..=n {
                        for a in 0..=n {
                            table.push(self.node(ox + a, oy + b));
                        }
                    }
                }
                1 => {
                    for b in 0..=n {
                        for a in 1..=n {
                            table.push(self.horizontal_edge(ox + a - 1, oy + b));
                        }
                    }
                    for b in 1..=n {
                        for a in 0..=n {
                            table.push(self.vertical_edge(ox + a, oy + b - 1));
                        }
                    }
                }
                _ => {
                    for b in 1..=n {
                        for a in 1..=n {
                            table.push(self.cell(ox + a - 1, oy + b - 1));
                        }
                    }
                }
            }
        }
        table
    }

    /// Coboundary on 0-cochains: one row per 1-cell, -1 at the start node
    /// and +1 at the end node.
    pub fn incidence_d10(&self) -> IncidenceMatrix {
        let (nx, ny) = (self.nodes_x(), self.nodes_y());
        let mut rows = Vec::with_capacity(self.n1());
        for j in 0..ny {
            for i in 0..nx - 1 {
                rows.push(vec![(self.node(i, j), -1), (self.node(i + 1, j), 1)]);
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                rows.push(vec![(self.node(i, j), -1), (self.node(i, j + 1), 1)]);
            }
        }
        IncidenceMatrix::from_rows(self.n0(), rows)
    }

    /// Coboundary on 1-cochains: one row per 2-cell with its counterclockwise
    /// boundary (bottom +, right +, top -, left -).
    pub fn incidence_d21(&self) -> IncidenceMatrix {
        let (nx, ny) = (self.nodes_x(), self.nodes_y());
        let mut rows = Vec::with_capacity(self.n2());
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                rows.push(vec![
                    (self.horizontal_edge(i, j), 1),
                    (self.horizontal_edge(i, j + 1), -1),
                    (self.vertical_edge(i, j), -1),
                    (self.vertical_edge(i + 1, j), 1),
                ]);
            }
        }
        IncidenceMatrix::from_rows(self.n1(), rows)
    }

    /// Coboundary from degree `k` to `k + 1`.
    pub fn incidence(&self, k: usize) -> Result<IncidenceMatrix> {
        match k {
            0 => Ok(self.incidence_d10()),
            1 => Ok(self.incidence_d21()),
            _ => Err(Error::InvalidDegree {
                degree: k,
                operation: "coboundary",
            }),
        }
    }

    /// Global indices of the boundary k-cells (k ∈ {0, 1}) on `side`, ordered
    /// by increasing reference coordinate along the side.
    pub fn boundary_cells(&self, side: Side, k: usize) -> Result<Vec<usize>> {
        let (nx, ny) = (self.nodes_x(), self.nodes_y());
        let cells = match (k, side) {
            (0, Side::Bottom) => (0..nx).map(|i| self.node(i, 0)).collect(),
            (0, Side::Top) => (0..nx).map(|i| self.node(i, ny - 1)).collect(),
            (0, Side::Left) => (0..ny).map(|j| self.node(0, j)).collect(),
            (0, Side::Right) => (0..ny).map(|j| self.node(nx - 1, j)).collect(),
            (1, Side::Bottom) => (0..nx - 1).map(|i| self.horizontal_edge(i, 0)).collect(),
            (1, Side::Top) => (0..nx - 1).map(|i| self.horizontal_edge(i, ny - 1)).collect(),
            (1, Side::Left) => (0..ny - 1).map(|j| self.vertical_edge(0, j)).collect(),
            (1, Side::Right) => (0..ny - 1).map(|j| self.vertical_edge(nx - 1, j)).collect(),
            _ => {
                return Err(Error::InvalidDegree {
                    degree: k,
                    operation: "boundary cells (only 0- and 1-cells lie on the boundary)",
                })
            }
        };
        Ok(cells)
    }

    /// Elements touching `side`, ordered by increasing reference coordinate.
    pub fn boundary_elements(&self, side: Side) -> Vec<usize> {
        let (mx, my) = (self.elements_x, self.elements_y);
        match side {
            Side::Bottom => (0..mx).map(|ex| self.element(ex, 0)).collect(),
            Side::Top => (0..mx).map(|ex| self.element(ex, my - 1)).collect(),
            Side::Left => (0..my).map(|ey| self.element(0, ey)).collect(),
            Side::Right => (0..my).map(|ey| self.element(mx - 1, ey)).collect(),
        }
    }
}
