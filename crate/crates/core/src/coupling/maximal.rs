use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

/// A joint law of two legs on finite outcome spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCoupling {
    pub joint: Matrix,
}

impl DiscreteCoupling {
    pub fn first_marginal(&self) -> Vec<f64> {
        (0..self.joint.rows()).map(|i| self.joint.row(i).iter().sum()).collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.joint.cols()];
        for i in 0..self.joint.rows() {
            for (o, v) in out.iter_mut().zip(self.joint.row(i)) {
                *o += v;
            }
        }
        out
    }

    /// `P(X_1 ≠ X_2)` for legs on a common space.
    pub fn disagreement(&self) -> f64 {
        let n = self.joint.rows().min(self.joint.cols());
        1.0 - (0..n).map(|i| self.joint[(i, i)]).sum::<f64>()
    }

    /// Expected cost under `cost[(i, j)]`.
    pub fn expected_cost(&self, cost: &Matrix) -> f64 {
        self.joint.as_slice().iter().zip(cost.as_slice()).map(|(p, c)| p * c).sum()
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).max(0.0)).sum()
}

/// Positive and negative parts of `p - q` and their common mass `tv`.
pub(crate) fn residuals(p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let r1: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a - b).max(0.0)).collect();
    let r2: Vec<f64> = p.iter().zip(q).map(|(a, b)| (b - a).max(0.0)).collect();
    let tv = 0.5 * (r1.iter().sum::<f64>() + r2.iter().sum::<f64>());
    (r1, r2, tv)
}

/// The maximal coupling: `min(p, q)` on the diagonal, and the normalised
/// residuals drawn independently off it.
pub fn maximal_coupling(p: &[f64], q: &[f64]) -> Result<DiscreteCoupling> {
    if p.len() != q.len() {
        return Err(Error::MismatchedSpaces { left: p.len(), right: q.len() });
    }
    let n = p.len();
    let (r1, r2, tv) = residuals(p, q);
    let mut joint = Matrix::zeros(n, n);
    for i in 0..n {
        joint[(i, i)] = p[i].min(q[i]);
        if tv > 0.0 && r1[i] > 0.0 {
            for j in 0..n {
                joint[(i, j)] += r1[i] * r2[j] / tv;
            }
        }
    }
    Ok(DiscreteCoupling { joint })
}

/// One draw from the maximal coupling of `p` and `q`.
pub fn sample_maximal(p: &[f64], q: &[f64], rng: &mut Rng) -> (u8, u8) {
    let tv = total_variation(p, q);
    let u: f64 = rng.gen();
    if u >= tv {
        let common: f64 = 1.0 - tv;
        let target = rng.gen::<f64>() * common;
        let mut acc = 0.0;
        let mut last = 0;
        for (i, (a, b)) in p.iter().zip(q).enumerate() {
            let m = a.min(*b);
            if m > 0.0 {
                last = i;
            }
            acc += m;
            if target < acc {
                return (i as u8, i as u8);
            }
        }
        return (last as u8, last as u8);
    }
    let pick = |w: &dyn Fn(usize) -> f64, rng: &mut Rng| {
        let target = rng.gen::<f64>() * tv;
        let mut acc = 0.0;
        let mut last = 0;
        for i in 0..p.len() {
            let m = w(i);
            if m > 0.0 {
                last = i;
            }
            acc += m;
            if target < acc {
                return i as u8;
            }
        }
        last as u8
    };
    let a = pick(&|i| (p[i] - q[i]).max(0.0), rng);
    let b = pick(&|i| (q[i] - p[i]).max(0.0), rng);
    (a, b)
}
