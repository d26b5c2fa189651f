//! Probability models on finite volumes.
//!
//! Every model exposes unnormalised log-weights and exact single-site
//! conditionals. Small volumes can be enumerated into an [`ExactJoint`];
//! larger ones are sampled with heat-bath dynamics.

mod dobrushin;
mod exact;
mod gibbs;
mod glauber;
mod ising;
mod markov;
mod product;

pub use dobrushin::{dobrushin_matrix, DobrushinData, P_C_SQUARE_SITE};
pub use exact::{ExactJoint, PrefixMass};
pub use gibbs::{GibbsModel, Potential, TermTemplate};
pub use glauber::{glauber_sample, GlauberSampler, DEFAULT_BURN_IN};
pub use ising::IsingModel;
pub use markov::MarkovChain;
pub use product::ProductModel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Alphabet;
use crate::lattice::{Site, Volume};
use crate::rng::Rng;

/// A finite-volume law over `A^Λ`.
pub trait FieldModel: Send + Sync {
    fn name(&self) -> &str;

    fn volume(&self) -> &Volume;

    fn alphabet(&self) -> &Alphabet;

    /// Unnormalised log-weight of a full configuration (may be `-inf`).
    fn log_weight(&self, config: &[u8]) -> f64;

    /// Slots (inside the volume) the conditional at `slot` depends on.
    fn neighbors(&self, slot: usize) -> Vec<usize>;

    /// Law of the symbol at `slot` given every other slot of `config`.
    fn conditional_into(&self, slot: usize, config: &[u8], out: &mut [f64]) {
        let mut c = config.to_vec();
        for (a, o) in out.iter_mut().enumerate() {
            c[slot] = a as u8;
            *o = self.log_weight(&c);
        }
        softmax_in_place(out);
    }

    /// One heat-bath sweep through the slots in spiral order.
    fn heat_bath_sweep(&self, config: &mut [u8], rng: &mut Rng, scratch: &mut Vec<f64>) {
        use rand::Rng as _;
        scratch.resize(self.alphabet().len(), 0.0);
        for slot in 0..config.len() {
            self.conditional_into(slot, config, scratch);
            config[slot] = inverse_cdf(scratch, rng.gen());
        }
    }
}

/// A law presented coordinate by coordinate: the distribution of coordinate
/// `k` given coordinates `0..k`.
pub trait SequentialLaw: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn q(&self) -> usize;

    /// Law of coordinate `history.len()` given `history`.
    fn next_law(&self, history: &[u8], out: &mut [f64]) -> Result<()>;
}

/// Boundary condition on the sites outside a volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Interactions reaching outside the volume are dropped.
    Free,
    /// Every outside site carries the same symbol.
    Uniform(u8),
    /// Outside sites listed one by one; unlisted sites are an error.
    Explicit(Vec<(Site, u8)>),
}

impl Boundary {
    /// All `+` for the spin alphabet.
    pub fn plus() -> Self {
        Boundary::Uniform(1)
    }

    pub fn minus() -> Self {
        Boundary::Uniform(0)
    }

    /// Symbol at an outside site, `None` for a free boundary.
    pub fn symbol_at(&self, site: &Site) -> Result<Option<u8>> {
        match self {
            Boundary::Free => Ok(None),
            Boundary::Uniform(s) => Ok(Some(*s)),
            Boundary::Explicit(list) => list
                .iter()
                .find(|(t, _)| t == site)
                .map(|(_, s)| Some(*s))
                .ok_or_else(|| Error::InvalidParameter(format!("boundary does not assign {site}"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Boundary::Free => "free".into(),
            Boundary::Uniform(1) => "plus".into(),
            Boundary::Uniform(0) => "minus".into(),
            Boundary::Uniform(s) => format!("uniform{s}"),
            Boundary::Explicit(_) => "explicit".into(),
        }
    }
}

/// Single-site conditional given a partial assignment. Every slot the
/// conditional depends on must be assigned.
pub fn single_site_conditional(
    model: &dyn FieldModel,
    slot: usize,
    partial: &[Option<u8>],
) -> Result<Vec<f64>> {
    let n = model.volume().len();
    if partial.len() != n || slot >= n {
        return Err(Error::InvalidParameter("partial configuration does not match the volume".into()));
    }
    for nb in model.neighbors(slot) {
        if partial[nb].is_none() {
            return Err(Error::UnassignedNeighbor { slot, missing: nb });
        }
    }
    let filled: Vec<u8> = partial.iter().map(|s| s.unwrap_or(0)).collect();
    let mut out = vec![0.0; model.alphabet().len()];
    model.conditional_into(slot, &filled, &mut out);
    Ok(out)
}

/// Symbol index drawn from `probs` by inverting the CDF at `u ∈ [0, 1)`.
pub fn inverse_cdf(probs: &[f64], u: f64) -> u8 {
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a as u8;
        }
    }
    // rounding left u above the total; take the last symbol with mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0) as u8
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
        return;
    }
    let mut z = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        z += *x;
    }
    v.iter_mut().for_each(|x| *x /= z);
}

pub(crate) fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    let s: f64 = p.iter().sum();
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("{what} is not a probability vector")));
    }
    Ok(())
}
