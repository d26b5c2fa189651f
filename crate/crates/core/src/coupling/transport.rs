//! Minimum-cost couplings by the transportation simplex (MODI method).
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `m + n - 1` cells. Potentials solve `u_i + v_j = c_ij` on the tree,
//! pricing uses Dantzig's rule, and a run of degenerate pivots switches to
//! Bland's rule until progress resumes. Optimality is certified by a dual
//! feasible point whose objective matches the primal cost.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::decode_config;
use crate::linalg::Matrix;
use crate::models::ExactJoint;

use super::maximal::DiscreteCoupling;

/// Largest supported `m · n` (dense pricing).
pub const TRANSPORT_CAP: usize = 4096 * 4096;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportSolution {
    pub plan: Matrix,
    pub cost: f64,
    /// Objective of a dual-feasible point; a lower bound on every coupling's cost.
    pub dual_value: f64,
    pub gap: f64,
    pub min_reduced_cost: f64,
    pub pivots: usize,
}

impl TransportSolution {
    pub fn certified(&self, tol: f64) -> bool {
        self.gap <= tol
    }

    /// Nonzero cells as `row,col,mass` lines.
    pub fn write_triplets<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "mass"])?;
        for i in 0..self.plan.rows() {
            for j in 0..self.plan.cols() {
                let v = self.plan[(i, j)];
                if v > 0.0 {
                    w.serialize((i, j, v))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    basic: Vec<bool>,
    cells: Vec<(usize, usize)>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl Simplex<'_> {
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, (i, j)) in self.cells.iter().enumerate() {
            adj[*i].push((self.m + j, k));
            adj[self.m + j].push((*i, k));
        }
        adj
    }

    fn potentials(&mut self) {
        let adj = self.adjacency();
        let mut known = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([0usize]);
        known[0] = true;
        self.u[0] = 0.0;
        while let Some(node) = queue.pop_front() {
            for (next, k) in &adj[node] {
                if known[*next] {
                    continue;
                }
                let (i, j) = self.cells[*k];
                if node < self.m {
                    self.v[j] = self.c(i, j) - self.u[i];
                } else {
                    self.u[i] = self.c(i, j) - self.v[j];
                }
                known[*next] = true;
                queue.push_back(*next);
            }
        }
    }

    /// Basis cells on the tree path from row `i` to column `j`, in order.
    fn tree_path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let total = self.m + self.n;
        let mut parent = vec![usize::MAX; total];
        let mut via = vec![usize::MAX; total];
        let mut queue = VecDeque::from([i]);
        parent[i] = i;
        let target = self.m + j;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for (next, k) in &adj[node] {
                if parent[*next] == usize::MAX {
                    parent[*next] = node;
                    via[*next] = *k;
                    queue.push_back(*next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != i {
            path.push(via[node]);
            node = parent[node];
        }
        // path runs from the column end back to the row end
        path
    }
}

/// Solves `min Σ c_ij x_ij` over couplings of `a` and `b`.
pub fn solve_transport(a: &[f64], b: &[f64], cost: &Matrix, tol: f64) -> Result<TransportSolution> {
    if cost.rows() != a.len() || cost.cols() != b.len() {
        return Err(Error::MismatchedSpaces { left: a.len(), right: b.len() });
    }
    if a.len() * b.len() > TRANSPORT_CAP {
        return Err(Error::Capacity { needed: (a.len() * b.len()) as u128, cap: TRANSPORT_CAP as u64 });
    }
    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    if a.iter().chain(b).any(|x| !(*x >= 0.0)) || (sa - sb).abs() > 1e-9 || sa <= 0.0 {
        return Err(Error::InvalidParameter(format!("marginals are malformed (masses {sa} and {sb})")));
    }
    let rows: Vec<usize> = (0..a.len()).filter(|i| a[*i] > 0.0).collect();
    let cols: Vec<usize> = (0..b.len()).filter(|j| b[*j] > 0.0).collect();
    let (m, n) = (rows.len(), cols.len());
    let ra: Vec<f64> = rows.iter().map(|i| a[*i]).collect();
    let rb: Vec<f64> = cols.iter().map(|j| b[*j]).collect();
    let sub_cost: Vec<f64> = rows.iter().flat_map(|i| cols.iter().map(move |j| cost[(*i, *j)])).collect();

    let mut s = Simplex {
        m,
        n,
        cost: &sub_cost,
        flow: vec![0.0; m * n],
        basic: vec![false; m * n],
        cells: Vec::with_capacity(m + n - 1),
        u: vec![0.0; m],
        v: vec![0.0; n],
    };
    // north-west corner start
    let (mut supply, mut demand) = (ra.clone(), rb.clone());
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        let x = supply[i].min(demand[j]);
        s.flow[i * n + j] = x;
        s.basic[i * n + j] = true;
        s.cells.push((i, j));
        supply[i] -= x;
        demand[j] -= x;
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || supply[i] <= demand[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(s.cells.len(), m + n - 1);

    let max_pivots = 50 * (m * n) + 1000;
    let mut pivots = 0;
    let mut degenerate_run = 0;
    loop {
        s.potentials();
        let bland = degenerate_run > m + n;
        let mut enter = None;
        let mut best = -tol;
        'price: for i in 0..m {
            for j in 0..n {
                if s.basic[i * n + j] {
                    continue;
                }
                let d = s.c(i, j) - s.u[i] - s.v[j];
                if d < best {
                    enter = Some((i, j));
                    if bland {
                        break 'price;
                    }
                    best = d;
                }
            }
        }
        let Some((ei, ej)) = enter else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NonConvergence { iterations: pivots, residual: best });
        }
        let path = s.tree_path(ei, ej);
        // signs along the path from the column end alternate -, +, -, ...
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (pos, k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let (i, j) = s.cells[*k];
                let f = s.flow[i * n + j];
                let better = f < theta || (f == theta && bland && s.cells[*k] < s.cells[leave]);
                if better {
                    theta = f;
                    leave = *k;
                }
            }
        }
        for (pos, k) in path.iter().enumerate() {
            let (i, j) = s.cells[*k];
            if pos % 2 == 0 {
                s.flow[i * n + j] -= theta;
            } else {
                s.flow[i * n + j] += theta;
            }
        }
        s.flow[ei * n + ej] = theta;
        let (li, lj) = s.cells[leave];
        s.flow[li * n + lj] = 0.0;
        s.basic[li * n + lj] = false;
        s.basic[ei * n + ej] = true;
        s.cells[leave] = (ei, ej);
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
    }

    // certificate: shift v to make (u, v) dual feasible
    let mut min_reduced = f64::INFINITY;
    let mut v_feasible = vec![f64::INFINITY; n];
    for i in 0..m {
        for j in 0..n {
            let d = s.c(i, j) - s.u[i] - s.v[j];
            min_reduced = min_reduced.min(d);
            v_feasible[j] = v_feasible[j].min(s.c(i, j) - s.u[i]);
        }
    }
    let dual_value: f64 =
        ra.iter().zip(&s.u).map(|(x, y)| x * y).sum::<f64>() + rb.iter().zip(&v_feasible).map(|(x, y)| x * y).sum::<f64>();
    let mut plan = Matrix::zeros(a.len(), b.len());
    let mut total = 0.0;
    for (ii, i) in rows.iter().enumerate() {
        for (jj, j) in cols.iter().enumerate() {
            let f = s.flow[ii * n + jj].max(0.0);
            plan[(*i, *j)] = f;
            total += f * sub_cost[ii * n + jj];
        }
    }
    Ok(TransportSolution {
        plan,
        cost: total,
        dual_value,
        gap: (total - dual_value).max(0.0),
        min_reduced_cost: min_reduced,
        pivots,
    })
}

/// Two laws on the same `A^Λ` with cost `Σ_x φ(x) 1{σ_x ≠ σ'_x}`.
#[derive(Clone, Debug)]
pub struct TransportProblem {
    pub p: ExactJoint,
    pub q: ExactJoint,
    pub phi: Vec<f64>,
}

impl TransportProblem {
    pub fn new(p: ExactJoint, q: ExactJoint, phi: Vec<f64>) -> Result<Self> {
        if p.q() != q.q() || p.n() != q.n() {
            return Err(Error::MismatchedSpaces { left: p.masses().len(), right: q.masses().len() });
        }
        if phi.len() != p.n() || phi.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("one nonnegative weight per site required".into()));
        }
        Ok(TransportProblem { p, q, phi })
    }

    pub fn cost_matrix(&self) -> Matrix {
        let (q, n) = (self.p.q(), self.p.n());
        let size = self.p.masses().len();
        let configs: Vec<Vec<u8>> = (0..size)
            .map(|k| {
                let mut c = vec![0u8; n];
                decode_config(k, q, &mut c);
                c
            })
            .collect();
        Matrix::from_fn(size, size, |a, b| {
            configs[a].iter().zip(&configs[b]).zip(&self.phi).filter(|((x, y), _)| x != y).map(|(_, w)| w).sum()
        })
    }

    /// Per-site disagreement probabilities under a coupling.
    pub fn disagreement_profile(&self, coupling: &DiscreteCoupling) -> Vec<f64> {
        let (q, n) = (self.p.q(), self.p.n());
        let size = self.p.masses().len();
        let mut out = vec![0.0; n];
        let mut ca = vec![0u8; n];
        let mut cb = vec![0u8; n];
        for a in 0..size {
            decode_config(a, q, &mut ca);
            for b in 0..size {
                let w = coupling.joint[(a, b)];
                if w == 0.0 {
                    continue;
                }
                decode_config(b, q, &mut cb);
                for k in 0..n {
                    if ca[k] != cb[k] {
                        out[k] += w;
                    }
                }
            }
        }
        out
    }
}

/// A minimum-expected-cost coupling, its cost and the solver certificate.
pub fn kr_optimal_coupling(problem: &TransportProblem) -> Result<(DiscreteCoupling, f64, TransportSolution)> {
    let sol = solve_transport(problem.p.masses(), problem.q.masses(), &problem.cost_matrix(), 1e-12)?;
    let coupling = DiscreteCoupling { joint: sol.plan.clone() };
    Ok((coupling, sol.cost, sol))
}
