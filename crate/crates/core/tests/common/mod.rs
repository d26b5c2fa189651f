//! Independent transport oracles for the acceptance checks.

#![allow(dead_code)]

/// Minimum cost over every vertex of the transportation polytope. A vertex
/// is the unique solution supported on a spanning tree of the bipartite
/// graph `K_{m,n}`, so all `(m+n−1)`-subsets of cells are tried and the
/// feasible ones kept. Meant for `m, n ≤ 4`.
pub fn vertex_enumeration(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (m, n) = (a.len(), b.len());
    assert!(m * n <= 16, "vertex enumeration is for tiny instances");
    let k = m + n - 1;
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    let mut pick = Vec::with_capacity(k);
    subsets(&cells, k, 0, &mut pick, &mut |basis| {
        if let Some(x) = solve_tree(a, b, basis) {
            if x.iter().all(|v| *v >= -1e-12) {
                let c: f64 = basis.iter().zip(&x).map(|((i, j), v)| cost[*i][*j] * v).sum();
                best = best.min(c);
            }
        }
    });
    best
}

fn subsets<F: FnMut(&[(usize, usize)])>(
    cells: &[(usize, usize)],
    k: usize,
    from: usize,
    pick: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if pick.len() == k {
        visit(pick);
        return;
    }
    for c in from..cells.len() {
        if cells.len() - c < k - pick.len() {
            break;
        }
        pick.push(cells[c]);
        subsets(cells, k, c + 1, pick, visit);
        pick.pop();
    }
}

/// Flows on `basis` meeting the marginals, by peeling leaves. `None` when
/// the cells do not form a spanning tree.
fn solve_tree(a: &[f64], b: &[f64], basis: &[(usize, usize)]) -> Option<Vec<f64>> {
    let (m, n) = (a.len(), b.len());
    let mut left: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut alive = vec![true; basis.len()];
    let mut x = vec![0.0; basis.len()];
    for _ in 0..basis.len() {
        let mut degree = vec![0usize; m + n];
        for (e, (i, j)) in basis.iter().enumerate() {
            if alive[e] {
                degree[*i] += 1;
                degree[m + j] += 1;
            }
        }
        // an edge with a leaf end carries exactly what the leaf still needs
        let (e, leaf) = basis.iter().enumerate().filter(|(e, _)| alive[*e]).find_map(|(e, (i, j))| {
            if degree[*i] == 1 {
                Some((e, *i))
            } else if degree[m + j] == 1 {
                Some((e, m + j))
            } else {
                None
            }
        })?;
        let (i, j) = basis[e];
        let v = left[leaf];
        x[e] = v;
        left[i] -= v;
        left[m + j] -= v;
        alive[e] = false;
    }
    // a forest with a cycle elsewhere leaves some marginal unmet
    if left.iter().all(|r| r.abs() < 1e-9) {
        Some(x)
    } else {
        None
    }
}

/// Successive shortest paths on the uncapacitated bipartite network, with
/// Bellman–Ford on the residual graph. Returns the optimal cost.
pub fn min_cost_flow(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut flow = vec![vec![0.0f64; n]; m];
    let eps = 1e-14;
    loop {
        let total: f64 = supply.iter().sum();
        if total <= 1e-12 {
            break;
        }
        // nodes: rows 0..m, columns m..m+n; sources are rows with supply left
        let mut dist = vec![f64::INFINITY; m + n];
        let mut prev = vec![usize::MAX; m + n];
        for i in 0..m {
            if supply[i] > eps {
                dist[i] = 0.0;
            }
        }
        for _ in 0..m + n {
            let mut changed = false;
            for i in 0..m {
                for j in 0..n {
                    // forward arc row → column
                    if dist[i] + cost[i][j] < dist[m + j] - 1e-15 {
                        dist[m + j] = dist[i] + cost[i][j];
                        prev[m + j] = i;
                        changed = true;
                    }
                    // backward arc column → row where flow can be undone
                    if flow[i][j] > eps && dist[m + j] - cost[i][j] < dist[i] - 1e-15 {
                        dist[i] = dist[m + j] - cost[i][j];
                        prev[i] = m + j;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let sink = (0..n)
            .filter(|j| demand[*j] > eps && dist[m + j].is_finite())
            .min_by(|x, y| dist[m + x].total_cmp(&dist[m + y]))
            .expect("balanced marginals leave a reachable demand");
        // walk back to the source, collecting the bottleneck
        let mut path = Vec::new();
        let mut node = m + sink;
        while prev[node] != usize::MAX {
            path.push((prev[node], node));
            node = prev[node];
        }
        let mut amount = supply[node].min(demand[sink]);
        for (u, v) in &path {
            if *u >= m {
                amount = amount.min(flow[*v][*u - m]);
            }
        }
        for (u, v) in &path {
            if *u < m {
                flow[*u][*v - m] += amount;
            } else {
                flow[*v][*u - m] -= amount;
            }
        }
        supply[node] -= amount;
        demand[sink] -= amount;
    }
    (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| flow[i][j] * cost[i][j]).sum()
}
