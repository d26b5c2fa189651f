//! Martingale differences `V_i = E[g | F_i] − E[g | F_{i−1}]` along the
//! enumeration order, where `F_i` is generated by the first `i` slots.

use crate::coupling::ExactCouplingTable;
use crate::error::{Error, Result};
use crate::models::ExactJoint;

/// Absolute tolerance of the internal identity and martingale checks.
pub const DECOMPOSITION_TOL: f64 = 1e-10;

/// Conditional expectations of `g` given every prefix. `levels[k]` holds
/// `E[g | σ_0..σ_{k-1}]`; prefixes of zero mass inherit their parent's value.
#[derive(Clone, Debug)]
pub struct MartingaleDecomposition {
    q: usize,
    n: usize,
    levels: Vec<Vec<f64>>,
    masses: Vec<Vec<f64>>,
    identity_error: f64,
    martingale_error: f64,
}

impl MartingaleDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.levels[0][0]
    }

    /// Largest `|Σ_i V_i − (g − Eg)|` over all configurations.
    pub fn identity_error(&self) -> f64 {
        self.identity_error
    }

    /// Largest `|E[V_k | F_k]|` over positive-mass prefixes.
    pub fn martingale_error(&self) -> f64 {
        self.martingale_error
    }

    /// `V_k` at the configuration with enumeration index `config`, for the
    /// slot `k` in `0..n`.
    pub fn value(&self, k: usize, config: usize) -> f64 {
        let hi = self.q.pow((self.n - k - 1) as u32);
        let next = config / hi;
        self.levels[k + 1][next] - self.levels[k][next / self.q]
    }

    /// All `V_k` at one configuration.
    pub fn values_at(&self, config: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.value(k, config)).collect()
    }

    /// `E[V_i V_j]` for all pairs.
    pub fn covariances(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (c, m) in self.masses[self.n].iter().enumerate() {
            if *m == 0.0 {
                continue;
            }
            let v = self.values_at(c);
            for i in 0..self.n {
                for j in 0..self.n {
                    out[i][j] += m * v[i] * v[j];
                }
            }
        }
        out
    }

    /// Largest `|E[V_i V_j]|` with `i ≠ j`.
    pub fn orthogonality_defect(&self) -> f64 {
        let c = self.covariances();
        let mut worst: f64 = 0.0;
        for (i, row) in c.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}

/// Exact decomposition of the tabulated function `g` under `joint`. The
/// telescoping identity and the martingale property are checked before
/// returning.
pub fn martingale_decomposition(joint: &ExactJoint, g: &[f64]) -> Result<MartingaleDecomposition> {
    let (q, n) = (joint.q(), joint.n());
    if g.len() != joint.masses().len() {
        return Err(Error::MismatchedSpaces { left: joint.masses().len(), right: g.len() });
    }
    let pm = joint.prefix_masses();
    let masses: Vec<Vec<f64>> = (0..=n).map(|k| pm.level(k).to_vec()).collect();
    let mut levels = vec![Vec::new(); n + 1];
    levels[n] = g.to_vec();
    for k in (0..n).rev() {
        levels[k] = (0..q.pow(k as u32))
            .map(|p| {
                let z = masses[k][p];
                if z <= 0.0 {
                    return f64::NAN;
                }
                (0..q).map(|a| masses[k + 1][p * q + a] * levels[k + 1][p * q + a]).sum::<f64>() / z
            })
            .collect();
    }
    // zero-mass prefixes take the parent's value, so their increments vanish
    for k in 1..=n {
        for p in 0..levels[k].len() {
            if masses[k][p] <= 0.0 {
                levels[k][p] = levels[k - 1][p / q];
            }
        }
    }
    let mut d = MartingaleDecomposition { q, n, levels, masses, identity_error: 0.0, martingale_error: 0.0 };

    let mean = d.mean();
    let mut worst = (0.0f64, 0usize);
    for (c, gc) in g.iter().enumerate() {
        let total: f64 = d.values_at(c).iter().sum();
        let err = (total - (gc - mean)).abs();
        if err > worst.0 {
            worst = (err, c);
        }
    }
    d.identity_error = worst.0;
    if worst.0 > DECOMPOSITION_TOL {
        return Err(Error::CheckFailed(format!("Σ V_i differs from g − Eg by {:e} at configuration {}", worst.0, worst.1)));
    }
    for k in 0..n {
        for p in 0..d.levels[k].len() {
            let z = d.masses[k][p];
            if z <= 0.0 {
                continue;
            }
            let drift: f64 =
                (0..q).map(|a| d.masses[k + 1][p * q + a] * (d.levels[k + 1][p * q + a] - d.levels[k][p])).sum::<f64>() / z;
            d.martingale_error = d.martingale_error.max(drift.abs());
            if drift.abs() > DECOMPOSITION_TOL {
                return Err(Error::CheckFailed(format!("E[V_{k} | F_{k}] = {drift:e} at prefix {p}")));
            }
        }
    }
    Ok(d)
}

/// Smallest slack `(D^σ δg)_i − |V_i(σ)|` over positive-mass `σ` and slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackboneCheck {
    pub min_slack: f64,
    pub config: usize,
    pub slot: usize,
    pub checked: usize,
}

impl BackboneCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack >= -tol
    }
}

/// Checks `±V_i(σ) ≤ (D^σ δg)_i` on every positive-mass configuration, with
/// the canonical coupling rows of `table`.
pub fn backbone_check(d: &MartingaleDecomposition, table: &ExactCouplingTable, delta: &[f64]) -> Result<BackboneCheck> {
    if table.n() != d.n {
        return Err(Error::MismatchedSpaces { left: d.n, right: table.n() });
    }
    backbone_check_with(d, delta, |past, out| match table.row(past) {
        Some(r) => {
            out.copy_from_slice(&r.canonical);
            true
        }
        None => false,
    })
}

/// As [`backbone_check`], with row `past.len()` of `D^σ` written into the
/// buffer by `row`, which returns `false` for a past it cannot supply.
pub fn backbone_check_with<F>(d: &MartingaleDecomposition, delta: &[f64], row: F) -> Result<BackboneCheck>
where
    F: Fn(&[u8], &mut [f64]) -> bool,
{
    let (q, n) = (d.q, d.n);
    if delta.len() != n {
        return Err(Error::MismatchedSpaces { left: n, right: delta.len() });
    }
    let mut out = BackboneCheck { min_slack: f64::INFINITY, config: 0, slot: 0, checked: 0 };
    let mut cfg = vec![0u8; n];
    let mut buf = vec![0.0; n];
    for (c, m) in d.masses[n].iter().enumerate() {
        if *m <= 0.0 {
            continue;
        }
        crate::fields::decode_config(c, q, &mut cfg);
        for i in 0..n {
            if !row(&cfg[..i], &mut buf) {
                return Err(Error::DegenerateConditioning(format!("past {:?}", &cfg[..i])));
            }
            let bound: f64 = buf.iter().zip(delta).map(|(r, w)| r * w).sum();
            let slack = bound - d.value(i, c).abs();
            out.checked += 1;
            if slack < out.min_slack {
                out.min_slack = slack;
                out.config = c;
                out.slot = i;
            }
        }
    }
    Ok(out)
}
