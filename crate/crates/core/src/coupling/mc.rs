//! Monte Carlo estimates of a row of the coupling matrix.
//!
//! Each run draws a past `σ_{<x}`, couples the continuations of
//! `(σ_{<x}, a)` and `(σ_{<x}, b)` and records where the legs differ. The
//! estimate of `D_{x,y}` is the disagreement frequency at `y`, maximised over
//! symbol pairs and averaged over the sampled pasts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{glauber_sample, inverse_cdf, FieldModel, IsingModel, SequentialLaw};
use crate::rng;
use crate::stats::binomial_interval;

use super::sequential::sequential_coupling_sample;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum McEstimator {
    /// Exact past-conditionals, coupled site by site.
    Sequential,
    /// Two heat-bath chains on the sites after `x`, started from a sampled
    /// configuration and driven by shared uniforms for `sweeps` sweeps.
    CoupledHeatBath { sweeps: usize, burn_in: usize },
}

/// Estimated row `x`, indexed by slot. Slots up to `x` hold the exact values
/// (0 before `x`, 1 at `x`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McCouplingRow {
    pub x: usize,
    pub runs: usize,
    pub estimator: McEstimator,
    pub estimate: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl McCouplingRow {
    fn from_counts(x: usize, runs: usize, estimator: McEstimator, counts: &[u64]) -> Self {
        let n = counts.len();
        let mut row = McCouplingRow {
            x,
            runs,
            estimator,
            estimate: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![0.0; n],
            half_width: vec![0.0; n],
        };
        row.estimate[x] = 1.0;
        row.lower[x] = 1.0;
        row.upper[x] = 1.0;
        for y in (x + 1)..n {
            let iv = binomial_interval(counts[y], runs as u64);
            row.estimate[y] = iv.point;
            row.lower[y] = iv.lower;
            row.upper[y] = iv.upper;
            row.half_width[y] = iv.half_width();
        }
        row
    }

    /// Keeps, entry by entry, whichever row has the larger estimate.
    fn max_with(mut self, other: McCouplingRow) -> Self {
        for y in 0..self.estimate.len() {
            if other.estimate[y] > self.estimate[y] {
                self.estimate[y] = other.estimate[y];
                self.lower[y] = other.lower[y];
                self.upper[y] = other.upper[y];
                self.half_width[y] = other.half_width[y];
            }
        }
        self
    }
}

/// Row `x` from the sequential coupling of exact past-conditionals. The past
/// is drawn from `law` itself in every run.
pub fn coupling_row_mc_sequential(
    law: &dyn SequentialLaw,
    x: usize,
    runs: usize,
    seed: u64,
) -> Result<McCouplingRow> {
    let (n, q) = (law.len(), law.q());
    if runs == 0 || x >= n {
        return Err(Error::InvalidParameter("need runs ≥ 1 and x inside the volume".into()));
    }
    let mut best: Option<McCouplingRow> = None;
    for a in 0..q as u8 {
        for b in (a + 1)..q as u8 {
            let pair_seed = rng::child_seed(seed, &format!("pair-{a}-{b}"));
            let counts = (0..runs)
                .into_par_iter()
                .map(|r| -> Result<Vec<u64>> {
                    let mut g = rng::stream(pair_seed, r as u64);
                    let mut past = Vec::with_capacity(x);
                    let mut law_buf = vec![0.0; q];
                    while past.len() < x {
                        law.next_law(&past, &mut law_buf)?;
                        past.push(inverse_cdf(&law_buf, rand::Rng::gen(&mut g)));
                    }
                    let mut c = vec![0u64; n];
                    // a or b may be impossible after this past; such runs count as agreement
                    let s = match sequential_coupling_sample(law, &past, a, b, &mut g) {
                        Ok(s) => s,
                        Err(Error::DegenerateConditioning(_)) => return Ok(c),
                        Err(e) => return Err(e),
                    };
                    for k in 0..s.legs[0].len() {
                        if s.disagrees_at(k) {
                            c[x + 1 + k] += 1;
                        }
                    }
                    Ok(c)
                })
                .try_reduce(|| vec![0u64; n], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))?;
            let row = McCouplingRow::from_counts(x, runs, McEstimator::Sequential, &counts);
            best = Some(match best {
                None => row,
                Some(b) => b.max_with(row),
            });
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("alphabet has a single symbol".into()))
}

/// Row `x` for the Ising model from coupled heat-bath chains. Each run draws
/// `σ` by Glauber dynamics from the all-plus configuration, fixes `σ_{<x}`,
/// sets `x` to `+` in one leg and `-` in the other, and runs `sweeps` shared
/// sweeps over the later slots.
pub fn coupling_row_mc_heat_bath(
    model: &IsingModel,
    x: usize,
    sweeps: usize,
    burn_in: usize,
    runs: usize,
    seed: u64,
) -> Result<McCouplingRow> {
    let n = model.volume().len();
    if runs == 0 || x >= n || sweeps == 0 {
        return Err(Error::InvalidParameter("need runs ≥ 1, sweeps ≥ 1 and x inside the volume".into()));
    }
    let plus = vec![1u8; n];
    let counts = (0..runs)
        .into_par_iter()
        .map(|r| {
            let sigma = glauber_sample(model, &plus, burn_in, seed, 2 * r as u64);
            let mut g = rng::stream(seed, 2 * r as u64 + 1);
            let mut a = sigma.clone();
            let mut b = sigma;
            a[x] = 1;
            b[x] = 0;
            for _ in 0..sweeps {
                model.coupled_sweep(&mut a, &mut b, x + 1, &mut g);
            }
            a.iter().zip(&b).map(|(u, v)| (u != v) as u64).collect::<Vec<u64>>()
        })
        .reduce(|| vec![0u64; n], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(McCouplingRow::from_counts(x, runs, McEstimator::CoupledHeatBath { sweeps, burn_in }, &counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Alphabet, DEFAULT_CAP};
    use crate::lattice::{site_distance, Volume};
    use crate::models::{Boundary, ExactJoint, ProductModel};

    #[test]
    fn iid_rows_vanish() {
        let m = ProductModel::iid(Volume::line(6), Alphabet::spins(), vec![0.5, 0.5]).unwrap();
        let row = coupling_row_mc_sequential(&m, 2, 500, 1).unwrap();
        assert!(row.estimate[3..].iter().all(|v| *v == 0.0));
        assert_eq!(row.estimate[2], 1.0);
    }

    #[test]
    fn zero_beta_heat_bath_rows_vanish() {
        let m = IsingModel::rectangle(4, 4, 0.0, Boundary::plus()).unwrap();
        let row = coupling_row_mc_heat_bath(&m, 3, 5, 5, 300, 2).unwrap();
        assert!(row.estimate[4..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sequential_estimates_are_reproducible() {
        let m = IsingModel::rectangle(2, 3, 0.4, Boundary::plus()).unwrap();
        let law = ExactJoint::from_model(&m, DEFAULT_CAP).unwrap().prefix_masses();
        let a = coupling_row_mc_sequential(&law, 1, 2000, 9).unwrap();
        let b = coupling_row_mc_sequential(&law, 1, 2000, 9).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(a.estimate.iter().zip(&a.upper).all(|(e, u)| e <= u));
    }

    #[test]
    fn heat_bath_rows_decay_with_distance() {
        let m = IsingModel::rectangle(8, 8, 0.2, Boundary::plus()).unwrap();
        let x = 0;
        let row = coupling_row_mc_heat_bath(&m, x, 10, 20, 4000, 5).unwrap();
        let origin = m.volume().site(x);
        let mut bins = vec![(0.0, 0usize); 5];
        for y in 1..64 {
            let d = site_distance(&origin, &m.volume().site(y)) as usize;
            bins[d].0 += row.estimate[y];
            bins[d].1 += 1;
        }
        let means: Vec<f64> = bins[1..].iter().filter(|b| b.1 > 0).map(|b| b.0 / b.1 as f64).collect();
        for w in means.windows(2) {
            assert!(w[1] <= w[0] + 0.01, "{means:?}");
        }
        assert!(means[0] > 0.05);
    }
}
