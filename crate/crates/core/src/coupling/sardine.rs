//! Checks that weights controlling mean differences also control a coupling.
//!
//! Given `P`, `Q` and weights `ρ` with `|E_P g − E_Q g| ≤ Σ ρ(x) δ_x g` for
//! all `g`, there is a coupling whose `φ`-weighted disagreement is at most
//! `Σ φ ρ`. Here the weights are taken from the sequential coupling of `P`
//! and `Q`, which makes the premise hold by construction, and the conclusion
//! is checked against the optimal transport cost.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::decode_config;
use crate::rng::Rng;

use super::sequential::sequential_coupling_tree;
use super::transport::{kr_optimal_coupling, TransportProblem};

/// A function on `A^Λ`, tabulated in enumeration order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TabulatedFunction {
    pub name: String,
    pub values: Vec<f64>,
}

impl TabulatedFunction {
    /// `δ_x g` for every slot by scanning all pairs differing at `x` only.
    pub fn variations(&self, q: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let mut stride = 1;
        for x in (0..n).rev() {
            for (k, v) in self.values.iter().enumerate() {
                let digit = (k / stride) % q;
                if digit != 0 {
                    continue;
                }
                let (mut lo, mut hi) = (*v, *v);
                for s in 1..q {
                    let w = self.values[k + s * stride];
                    lo = lo.min(w);
                    hi = hi.max(w);
                }
                out[x] = f64::max(out[x], hi - lo);
            }
            stride *= q;
        }
        out
    }
}

/// Random functions with `δ_x g ≤ φ(x)`: half are sums of one-site terms, half
/// are McShane extensions `min_k (a_k + C(σ, σ_k))` of random anchor values.
pub fn random_lipschitz_family(q: usize, n: usize, phi: &[f64], count: usize, rng: &mut Rng) -> Vec<TabulatedFunction> {
    let size = q.pow(n as u32);
    let configs: Vec<Vec<u8>> = (0..size)
        .map(|k| {
            let mut c = vec![0u8; n];
            decode_config(k, q, &mut c);
            c
        })
        .collect();
    let cost = |a: &[u8], b: &[u8]| -> f64 { (0..n).filter(|x| a[*x] != b[*x]).map(|x| phi[x]).sum() };
    (0..count)
        .map(|i| {
            let values = if i % 2 == 0 {
                let terms: Vec<Vec<f64>> = (0..n).map(|x| (0..q).map(|_| phi[x] * rng.gen::<f64>()).collect()).collect();
                configs.iter().map(|c| c.iter().enumerate().map(|(x, s)| terms[x][*s as usize]).sum()).collect()
            } else {
                let total: f64 = phi.iter().sum();
                let anchors: Vec<(usize, f64)> =
                    (0..rng.gen_range(1..=4)).map(|_| (rng.gen_range(0..size), total * rng.gen::<f64>())).collect();
                configs
                    .iter()
                    .map(|c| anchors.iter().map(|(k, a)| a + cost(c, &configs[*k])).fold(f64::INFINITY, f64::min))
                    .collect()
            };
            let kind = if i % 2 == 0 { "additive" } else { "mcshane" };
            TabulatedFunction { name: format!("{kind}-{i}"), values }
        })
        .collect()
}

/// Per-site disagreement of the sequential coupling of `P` and `Q`.
pub fn sequential_weights(problem: &TransportProblem, cap: u64) -> Result<Vec<f64>> {
    let (a, b) = (problem.p.prefix_masses(), problem.q.prefix_masses());
    Ok(sequential_coupling_tree(&a, &[], &b, &[], cap)?.disagreement)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PremiseViolation {
    pub function: String,
    pub slot: usize,
    pub variation: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SardineReport {
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    /// Functions with some `δ_x g > φ(x)`; they are left out of the duality check.
    pub premise_violations: Vec<PremiseViolation>,
    /// Functions for which the mean-difference estimate fails.
    pub mean_violations: Vec<String>,
    pub functions_checked: usize,
    pub optimal_cost: f64,
    pub duality_gap: f64,
    /// Per-site disagreement of the optimal coupling.
    pub disagreement: Vec<f64>,
    /// `Σ φ(x) P(X_1(x) ≠ X_2(x))` under the optimal coupling.
    pub coupled_cost: f64,
    /// `Σ φ(x) ρ(x)`.
    pub weighted_rho: f64,
    /// Largest `|E_P g − E_Q g|` over premise-satisfying functions.
    pub sup_mean_difference: f64,
    pub tolerance: f64,
}

impl SardineReport {
    pub fn conclusion_holds(&self) -> bool {
        self.coupled_cost <= self.weighted_rho + self.tolerance
    }

    pub fn weak_duality_holds(&self) -> bool {
        self.sup_mean_difference <= self.optimal_cost + self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.mean_violations.is_empty() && self.conclusion_holds() && self.weak_duality_holds()
    }
}

/// Checks premise, mean-difference estimate, conclusion and weak duality.
pub fn verify_sardine(
    problem: &TransportProblem,
    rho: &[f64],
    family: &[TabulatedFunction],
    tolerance: f64,
) -> Result<SardineReport> {
    let (q, n) = (problem.p.q(), problem.p.n());
    let size = problem.p.masses().len();
    if rho.len() != n || rho.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidParameter("one nonnegative weight per site required".into()));
    }
    let phi = &problem.phi;
    let mut premise_violations = Vec::new();
    let mut mean_violations = Vec::new();
    let mut sup_mean_difference: f64 = 0.0;
    for g in family {
        if g.values.len() != size {
            return Err(Error::MismatchedSpaces { left: size, right: g.values.len() });
        }
        let delta = g.variations(q, n);
        let diff = (problem.p.expectation(&g.values) - problem.q.expectation(&g.values)).abs();
        let bound: f64 = rho.iter().zip(&delta).map(|(r, d)| r * d).sum();
        if diff > bound + tolerance {
            mean_violations.push(g.name.clone());
        }
        let bad: Vec<PremiseViolation> = (0..n)
            .filter(|x| delta[*x] > phi[*x] + tolerance)
            .map(|x| PremiseViolation { function: g.name.clone(), slot: x, variation: delta[x], phi: phi[x] })
            .collect();
        if bad.is_empty() {
            sup_mean_difference = sup_mean_difference.max(diff);
        }
        premise_violations.extend(bad);
    }
    let (coupling, optimal_cost, sol) = kr_optimal_coupling(problem)?;
    let disagreement = problem.disagreement_profile(&coupling);
    let coupled_cost = disagreement.iter().zip(phi).map(|(d, w)| d * w).sum();
    let weighted_rho = rho.iter().zip(phi).map(|(r, w)| r * w).sum();
    Ok(SardineReport {
        rho: rho.to_vec(),
        phi: phi.clone(),
        premise_violations,
        mean_violations,
        functions_checked: family.len(),
        optimal_cost,
        duality_gap: sol.gap,
        disagreement,
        coupled_cost,
        weighted_rho,
        sup_mean_difference,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Alphabet, DEFAULT_CAP};
    use crate::lattice::Volume;
    use crate::models::{Boundary, ExactJoint, IsingModel, ProductModel};
    use crate::rng;

    fn joint_of(m: &dyn crate::models::FieldModel) -> ExactJoint {
        ExactJoint::from_model(m, DEFAULT_CAP).unwrap()
    }

    #[test]
    fn variations_match_a_hand_count() {
        // g = σ_0 + 2 σ_1 on {0,1}^2, slot 0 most significant
        let g = TabulatedFunction { name: "g".into(), values: vec![0.0, 2.0, 1.0, 3.0] };
        assert_eq!(g.variations(2, 2), vec![1.0, 2.0]);
    }

    #[test]
    fn family_respects_the_weights() {
        let phi = [0.5, 1.0, 2.0];
        let mut r = rng::stream(3, 0);
        for g in random_lipschitz_family(2, 3, &phi, 20, &mut r) {
            for (d, w) in g.variations(2, 3).iter().zip(&phi) {
                assert!(*d <= w + 1e-12, "{}", g.name);
            }
        }
    }

    #[test]
    fn equal_laws_are_trivial() {
        let m = IsingModel::rectangle(2, 2, 0.3, Boundary::plus()).unwrap();
        let p = joint_of(&m);
        let prob = TransportProblem::new(p.clone(), p, vec![1.0; 4]).unwrap();
        let rho = sequential_weights(&prob, DEFAULT_CAP).unwrap();
        assert!(rho.iter().all(|r| *r == 0.0));
        let fam = random_lipschitz_family(2, 4, &prob.phi, 10, &mut rng::stream(1, 0));
        let rep = verify_sardine(&prob, &rho, &fam, 1e-9).unwrap();
        assert!(rep.passed());
        assert!(rep.coupled_cost.abs() < 1e-12);
    }

    #[test]
    fn product_laws_differing_at_one_site() {
        let v = Volume::line(3);
        let a = ProductModel::new(v.clone(), Alphabet::spins(), vec![vec![0.5, 0.5], vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let b = ProductModel::new(v, Alphabet::spins(), vec![vec![0.5, 0.5], vec![0.6, 0.4], vec![0.5, 0.5]]).unwrap();
        let phi = vec![1.0, 3.0, 1.0];
        let prob = TransportProblem::new(joint_of(&a), joint_of(&b), phi).unwrap();
        let rho = sequential_weights(&prob, DEFAULT_CAP).unwrap();
        assert!((rho[1] - 0.4).abs() < 1e-12 && rho[0] == 0.0 && rho[2] == 0.0);
        let rep = verify_sardine(&prob, &rho, &[], 1e-9).unwrap();
        assert!((rep.optimal_cost - 3.0 * 0.4).abs() < 1e-12);
        assert!((rep.disagreement[1] - 0.4).abs() < 1e-12);
        assert!(rep.disagreement[0].abs() < 1e-12 && rep.disagreement[2].abs() < 1e-12);
    }

    #[test]
    fn premise_violations_are_reported() {
        let m = IsingModel::rectangle(2, 1, 0.3, Boundary::plus()).unwrap();
        let p = joint_of(&m);
        let prob = TransportProblem::new(p.clone(), p, vec![0.1, 0.1]).unwrap();
        let steep = TabulatedFunction { name: "steep".into(), values: vec![0.0, 0.0, 0.0, 5.0] };
        let rep = verify_sardine(&prob, &[0.0, 0.0], &[steep], 1e-9).unwrap();
        assert_eq!(rep.premise_violations.len(), 2);
        assert_eq!(rep.premise_violations[0].function, "steep");
    }

    #[test]
    fn opposite_boundaries_on_a_square() {
        let plus = IsingModel::rectangle(2, 2, 0.4, Boundary::plus()).unwrap();
        let minus = IsingModel::rectangle(2, 2, 0.4, Boundary::minus()).unwrap();
        let prob = TransportProblem::new(joint_of(&plus), joint_of(&minus), vec![1.0, 0.5, 2.0, 0.25]).unwrap();
        let rho = sequential_weights(&prob, DEFAULT_CAP).unwrap();
        let fam = random_lipschitz_family(2, 4, &prob.phi, 50, &mut rng::stream(2, 0));
        let rep = verify_sardine(&prob, &rho, &fam, 1e-9).unwrap();
        assert!(rep.premise_violations.is_empty());
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.duality_gap <= 1e-9);
        assert!(rep.optimal_cost > 0.0 && rep.coupled_cost <= rep.weighted_rho + 1e-12);
    }
}
