//! One-dimensional Gauss-Lobatto-Legendre grids with their nodal (Lagrange)
//! and edge polynomial bases, plus Gauss-Legendre rules for integration.
//!
//! A grid of order `N` has nodes `-1 = ξ_0 < … < ξ_N = 1`. The Lagrange
//! polynomials `l_i` reconstruct 0-cochains (point values) and the edge
//! polynomials `e_i = -Σ_{k<i} l_k'` reconstruct 1-cochains (integrals over
//! the grid cells `[ξ_{i-1}, ξ_i]`).

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Legendre polynomial `L_n(x)` and its derivative via the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    // L_n' from the identity (1 - x²) L_n' = n (L_{n-1} - x L_n); at the
    // endpoints use L_n'(±1) = (±1)^{n+1} n(n+1)/2.
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, dp)
}

/// Gauss-Lobatto-Legendre grid of order `N` (N+1 nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct GllGrid {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    /// `deriv[j][i] = l_i'(ξ_j)`
    deriv: Vec<Vec<f64>>,
    /// `edge_nodal[j][i-1] = e_i(ξ_j)`, i = 1..=N
    edge_nodal: Vec<Vec<f64>>,
}

impl GllGrid {
    /// Builds the grid by Newton iteration on the interior roots of `L_N'`.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(order));
        }
        let n = order;
        let nf = n as f64;
        let mut nodes = vec![0.0; n + 1];
        nodes[0] = -1.0;
        nodes[n] = 1.0;
        // Interior nodes in the left half; mirrored afterwards so the grid is
        // exactly symmetric.
        for j in 1..=(n - 1) / 2 {
            let mut x = -(std::f64::consts::PI * j as f64 / nf).cos();
            for _ in 0..NEWTON_MAX_ITER {
                let (l, dl) = legendre(n, x);
                // Legendre ODE: (1-x²) L'' = 2x L' - n(n+1) L
                let ddl = (2.0 * x * dl - nf * (nf + 1.0) * l) / (1.0 - x * x);
                let dx = dl / ddl;
                x -= dx;
                if dx.abs() < NEWTON_TOL {
                    break;
                }
            }
            nodes[j] = x;
            nodes[n - j] = -x;
        }
        if n.is_multiple_of(2) {
            nodes[n / 2] = 0.0;
        }

        let weights = nodes
            .iter()
            .map(|&x| {
                let (l, _) = legendre(n, x);
                2.0 / (nf * (nf + 1.0) * l * l)
            })
            .collect();

        let bary = barycentric_weights(&nodes);
        let deriv = derivative_matrix(&nodes, &bary);
        let edge_nodal = (0..=n)
            .map(|j| {
                let mut acc = 0.0;
                (1..=n)
                    .map(|i| {
                        acc -= deriv[j][i - 1];
                        acc
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            order: n,
            nodes,
            weights,
            bary,
            deriv,
            edge_nodal,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Derivative matrix `D[j][i] = l_i'(ξ_j)`.
    pub fn derivative_matrix(&self) -> &[Vec<f64>] {
        &self.deriv
    }

    /// Evaluates every Lagrange cardinal polynomial at `xi` into `out`.
    pub fn lagrange_all(&self, xi: f64, out: &mut [f64]) {
        debug_assert!(
            (-1.0 - 1e-12..=1.0 + 1e-12).contains(&xi),
            "evaluation point {xi} outside the reference interval"
        );
        debug_assert_eq!(out.len(), self.order + 1);
        if let Some(k) = self.nodes.iter().position(|&x| x == xi) {
            out.fill(0.0);
            out[k] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (o, (&x, &w)) in out.iter_mut().zip(self.nodes.iter().zip(&self.bary)) {
            *o = w / (xi - x);
            denom += *o;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }

    /// `l_i(xi)`
    pub fn lagrange(&self, i: usize, xi: f64) -> Result<f64> {
        self.check_node_index(i)?;
        let mut buf = vec![0.0; self.order + 1];
        self.lagrange_all(xi, &mut buf);
        Ok(buf[i])
    }

    /// Evaluates all edge polynomials `e_1..e_N` at `xi`; `out[i-1] = e_i(xi)`.
    pub fn edge_all(&self, xi: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.order);
        let mut l = vec![0.0; self.order + 1];
        self.lagrange_all(xi, &mut l);
        self.edge_from_lagrange(&l, out);
    }

    /// Edge values from precomputed Lagrange values at the same point.
    pub fn edge_from_lagrange(&self, lagrange: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (lj, row) in lagrange.iter().zip(&self.edge_nodal) {
            for (o, &e) in out.iter_mut().zip(row) {
                *o += lj * e;
            }
        }
    }

    /// `e_i(xi)` for `1 <= i <= N`.
    pub fn edge(&self, i: usize, xi: f64) -> Result<f64> {
        if i == 0 || i > self.order {
            return Err(Error::IndexOutOfRange {
                index: i,
                min: 1,
                max: self.order,
            });
        }
        let mut buf = vec![0.0; self.order];
        self.edge_all(xi, &mut buf);
        Ok(buf[i - 1])
    }

    /// Lobatto quadrature of `f` over [-1, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    fn check_node_index(&self, i: usize) -> Result<()> {
        if i > self.order {
            return Err(Error::IndexOutOfRange {
                index: i,
                min: 0,
                max: self.order,
            });
        }
        Ok(())
    }
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| xj - xk)
                .product();
            1.0 / prod
        })
        .collect();
    // only ratios matter
    let scale = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    w.iter_mut().for_each(|v| *v /= scale);
    w
}

fn derivative_matrix(nodes: &[f64], bary: &[f64]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut d = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut diag = 0.0;
        for i in 0..n {
            if i != j {
                let v = (bary[i] / bary[j]) / (nodes[j] - nodes[i]);
                d[j][i] = v;
                diag -= v;
            }
        }
        d[j][j] = diag;
    }
    d
}

/// Gauss-Legendre quadrature rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `q`-point rule, exact for polynomials of degree `2q - 1`.
    pub fn legendre(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidOrder(q));
        }
        let qf = q as f64;
        let mut points = vec![0.0; q];
        let mut weights = vec![0.0; q];
        for i in 0..q.div_ceil(2) {
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
            let mut dl = 1.0;
            for _ in 0..NEWTON_MAX_ITER {
                let (l, d) = legendre(q, x);
                dl = d;
                let dx = l / d;
                x -= dx;
                if dx.abs() < NEWTON_TOL {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            if d.is_finite() {
                dl = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dl * dl);
            points[i] = x;
            points[q - 1 - i] = -x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        if q % 2 == 1 {
            points[q / 2] = 0.0;
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}
