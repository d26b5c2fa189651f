//! The site-by-site coupling: two fields are grown in spiral order, each new
//! pair of symbols drawn from the maximal coupling of the two one-site laws
//! given the respective histories.

use crate::error::{Error, Result};
use crate::fields::encode_config;
use crate::models::SequentialLaw;
use crate::rng::Rng;

use super::maximal::{maximal_coupling, sample_maximal};

/// Exhaustive enumeration of the sequential coupling tree.
#[derive(Clone, Debug)]
pub struct SequentialTree {
    /// Probability that the legs differ at each generated coordinate.
    pub disagreement: Vec<f64>,
    /// Law of each leg over its generated coordinates, in enumeration order.
    pub leg_laws: [Vec<f64>; 2],
    /// `(leg 1, leg 2, probability)` for every leaf with positive mass.
    pub leaves: Vec<(Vec<u8>, Vec<u8>, f64)>,
}

/// Leaves are capped at `cap`.
pub fn sequential_coupling_tree(
    law1: &dyn SequentialLaw,
    history1: &[u8],
    law2: &dyn SequentialLaw,
    history2: &[u8],
    cap: u64,
) -> Result<SequentialTree> {
    let q = law1.q();
    let n = law1.len();
    if law2.q() != q || law2.len() != n || history1.len() != history2.len() {
        return Err(Error::MismatchedSpaces { left: law1.len(), right: law2.len() });
    }
    let start = history1.len();
    let m = n - start;
    let mut frontier = vec![(history1.to_vec(), history2.to_vec(), 1.0f64)];
    let mut disagreement = vec![0.0; m];
    let mut l1 = vec![0.0; q];
    let mut l2 = vec![0.0; q];
    for step in 0..m {
        let mut next = Vec::new();
        for (h1, h2, p) in &frontier {
            law1.next_law(h1, &mut l1)?;
            law2.next_law(h2, &mut l2)?;
            let c = maximal_coupling(&l1, &l2)?;
            for a in 0..q {
                for b in 0..q {
                    let w = c.joint[(a, b)];
                    if w <= 0.0 {
                        continue;
                    }
                    if a != b {
                        disagreement[step] += p * w;
                    }
                    let mut g1 = h1.clone();
                    g1.push(a as u8);
                    let mut g2 = h2.clone();
                    g2.push(b as u8);
                    next.push((g1, g2, p * w));
                }
            }
            if next.len() as u64 > cap {
                return Err(Error::Capacity { needed: next.len() as u128, cap });
            }
        }
        frontier = next;
    }
    let width = q.pow(m as u32);
    let mut leg_laws = [vec![0.0; width], vec![0.0; width]];
    let mut leaves = Vec::with_capacity(frontier.len());
    for (h1, h2, p) in frontier {
        let (f1, f2) = (h1[start..].to_vec(), h2[start..].to_vec());
        leg_laws[0][encode_config(&f1, q)] += p;
        leg_laws[1][encode_config(&f2, q)] += p;
        leaves.push((f1, f2, p));
    }
    Ok(SequentialTree { disagreement, leg_laws, leaves })
}

/// One draw of the sequential coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledSample {
    pub legs: [Vec<u8>; 2],
    /// First generated coordinate at which the legs differ.
    pub first_disagreement: Option<usize>,
}

impl CoupledSample {
    pub fn disagrees_at(&self, k: usize) -> bool {
        self.legs[0][k] != self.legs[1][k]
    }
}

/// Draws the coupled continuation of `past + a` and `past + b`; the returned
/// legs cover the coordinates after `past.len()`.
pub fn sequential_coupling_sample(
    law: &dyn SequentialLaw,
    past: &[u8],
    a: u8,
    b: u8,
    rng: &mut Rng,
) -> Result<CoupledSample> {
    let q = law.q();
    let n = law.len();
    let mut h1 = past.to_vec();
    h1.push(a);
    let mut h2 = past.to_vec();
    h2.push(b);
    let start = h1.len();
    let mut l1 = vec![0.0; q];
    let mut l2 = vec![0.0; q];
    let mut first = None;
    while h1.len() < n {
        law.next_law(&h1, &mut l1)?;
        law.next_law(&h2, &mut l2)?;
        let (x, y) = sample_maximal(&l1, &l2, rng);
        if x != y && first.is_none() {
            first = Some(h1.len() - start);
        }
        h1.push(x);
        h2.push(y);
    }
    Ok(CoupledSample { legs: [h1[start..].to_vec(), h2[start..].to_vec()], first_disagreement: first })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Alphabet, DEFAULT_CAP};
    use crate::lattice::Volume;
    use crate::models::{Boundary, ExactJoint, IsingModel, ProductModel};
    use crate::rng;

    #[test]
    fn equal_starts_never_split() {
        let m = IsingModel::rectangle(2, 2, 0.6, Boundary::plus()).unwrap();
        let law = ExactJoint::from_model(&m, DEFAULT_CAP).unwrap().prefix_masses();
        let mut r = rng::stream(4, 0);
        for _ in 0..100 {
            let s = sequential_coupling_sample(&law, &[1], 0, 0, &mut r).unwrap();
            assert_eq!(s.legs[0], s.legs[1]);
            assert_eq!(s.first_disagreement, None);
        }
    }

    #[test]
    fn iid_legs_agree_after_the_split() {
        let m = ProductModel::iid(Volume::line(6), Alphabet::spins(), vec![0.4, 0.6]).unwrap();
        let mut r = rng::stream(4, 1);
        for _ in 0..100 {
            let s = sequential_coupling_sample(&m, &[0, 1], 1, 0, &mut r).unwrap();
            assert_eq!(s.legs[0], s.legs[1]);
        }
        let t = sequential_coupling_tree(&m, &[0, 1, 1], &m, &[0, 1, 0], DEFAULT_CAP).unwrap();
        assert!(t.disagreement.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn tree_legs_have_the_conditional_laws() {
        let m = IsingModel::rectangle(2, 3, 0.45, Boundary::minus()).unwrap();
        let joint = ExactJoint::from_model(&m, DEFAULT_CAP).unwrap();
        let law = joint.prefix_masses();
        let past = [1u8, 0];
        let t = sequential_coupling_tree(&law, &[1, 0, 1], &law, &[1, 0, 0], DEFAULT_CAP).unwrap();
        for (leg, a) in [(0usize, 1u8), (1, 0)] {
            let mut p = past.to_vec();
            p.push(a);
            let f = joint.conditional_future(&p).unwrap();
            for (x, y) in t.leg_laws[leg].iter().zip(f.masses()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let total: f64 = t.leaves.iter().map(|l| l.2).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
