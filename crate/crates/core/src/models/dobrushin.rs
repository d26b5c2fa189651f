use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{decode_config, enumeration_size};
use crate::linalg::Matrix;

use super::FieldModel;

/// Critical threshold for site percolation on the square lattice (numerical
/// literature value, about 0.592746).
pub const P_C_SQUARE_SITE: f64 = 0.5927;

/// Dobrushin coefficients of a finite-volume specification. Sites outside
/// the volume stay at the model's boundary condition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DobrushinData {
    /// `C_{x,y} = 2 sup |P(σ_x = · | σ) - P(σ_x = · | σ')|` over `σ, σ'`
    /// differing at `y` only (total variation for non-binary alphabets).
    pub c: Matrix,
    /// `Σ_{n ≥ 0} C^n` when `sup_x Σ_y C_{x,y} < 1`.
    pub delta: Option<Matrix>,
    /// Bound on the sup-norm of the dropped tail of the series.
    pub delta_tail: f64,
    /// `sup_x Σ_y C_{x,y}`.
    pub row_sum: f64,
    /// `p_y` as written: twice the largest change of the single-site law.
    pub p_verbatim: Vec<f64>,
    /// `p_y / 2`, the largest total-variation change of the single-site law.
    pub p_disagreement: Vec<f64>,
}

impl DobrushinData {
    pub fn dobrushin_condition(&self) -> bool {
        self.row_sum < 1.0
    }

    pub fn sup_p_verbatim(&self) -> f64 {
        self.p_verbatim.iter().copied().fold(0.0, f64::max)
    }

    pub fn sup_p_disagreement(&self) -> f64 {
        self.p_disagreement.iter().copied().fold(0.0, f64::max)
    }
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Exact `C`, `p` and the Neumann series `Δ` to sup-norm accuracy `tol`.
/// Each site's neighbourhood is enumerated, so its size is capped by `cap`.
pub fn dobrushin_matrix(model: &dyn FieldModel, tol: f64, cap: u64) -> Result<DobrushinData> {
    let n = model.volume().len();
    let q = model.alphabet().len();
    let mut c = Matrix::zeros(n, n);
    let mut p_verbatim = vec![0.0; n];
    let mut config = vec![0u8; n];
    let mut law = vec![0.0; q];
    for x in 0..n {
        let nb = model.neighbors(x);
        let total = enumeration_size(q, nb.len(), cap)?;
        let mut laws = Vec::with_capacity(total);
        let mut pattern = vec![0u8; nb.len()];
        for k in 0..total {
            decode_config(k, q, &mut pattern);
            for (s, v) in nb.iter().zip(&pattern) {
                config[*s] = *v;
            }
            model.conditional_into(x, &config, &mut law);
            laws.push(law.clone());
        }
        let mut sup = 0.0f64;
        for i in 0..total {
            for j in (i + 1)..total {
                sup = sup.max(tv(&laws[i], &laws[j]));
            }
        }
        p_verbatim[x] = 2.0 * sup;
        for (pos, y) in nb.iter().enumerate() {
            let stride = q.pow((nb.len() - 1 - pos) as u32);
            let mut s = 0.0f64;
            for i in 0..total {
                if (i / stride) % q != 0 {
                    continue;
                }
                for a in 0..q {
                    for b in (a + 1)..q {
                        s = s.max(tv(&laws[i + a * stride], &laws[i + b * stride]));
                    }
                }
            }
            c[(x, *y)] = 2.0 * s;
        }
    }
    let row_sum = c.max_row_sum();
    let (delta, delta_tail) = neumann(&c, row_sum, tol)?;
    let p_disagreement = p_verbatim.iter().map(|p| p / 2.0).collect();
    Ok(DobrushinData { c, delta, delta_tail, row_sum, p_verbatim, p_disagreement })
}

/// `Σ_{k ≤ N} C^k`, stopping once the certified tail `r^{N+1} / (1 - r)`
/// drops below `tol`, where `r` is the max row sum.
fn neumann(c: &Matrix, r: f64, tol: f64) -> Result<(Option<Matrix>, f64)> {
    if r >= 1.0 {
        return Ok((None, f64::INFINITY));
    }
    let n = c.rows();
    let mut sum = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    let mut tail = r / (1.0 - r);
    let mut k = 0;
    while tail > tol {
        power = power.matmul(c);
        sum = sum.add(&power);
        tail *= r;
        k += 1;
        if k > 100_000 {
            return Err(Error::NonConvergence { iterations: k, residual: tail });
        }
    }
    Ok((Some(sum), tail))
}
