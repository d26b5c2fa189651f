use rand::Rng as _;

use crate::error::{Error, Result};
use crate::fields::Alphabet;
use crate::lattice::Volume;
use crate::rng::Rng;

use super::{Boundary, FieldModel};

/// Nearest-neighbour Ising model with weight
/// `exp(β Σ_{<xy> ⊂ Λ} σ_x σ_y + β Σ_{x ∈ Λ, y ∉ Λ, x ~ y} σ_x η_y)`.
#[derive(Clone, Debug)]
pub struct IsingModel {
    name: String,
    volume: Volume,
    alphabet: Alphabet,
    beta: f64,
    boundary: Boundary,
    nbrs: Vec<Vec<usize>>,
    /// Sum of boundary spins adjacent to each slot.
    ext: Vec<i32>,
    /// `P(+ | local field s)` at index `s + FIELD_OFFSET`.
    p_plus: Vec<f64>,
}

const FIELD_OFFSET: i32 = 8;

impl IsingModel {
    pub fn new(volume: Volume, beta: f64, boundary: Boundary) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be finite and nonnegative, got {beta}")));
        }
        let n = volume.len();
        let mut nbrs = vec![Vec::new(); n];
        let mut ext = vec![0i32; n];
        for (slot, site) in volume.sites().iter().enumerate() {
            for nb in site.neighbors() {
                match volume.slot(&nb) {
                    Some(t) => nbrs[slot].push(t),
                    None => {
                        if let Some(s) = boundary.symbol_at(&nb)? {
                            ext[slot] += match s {
                                0 => -1,
                                1 => 1,
                                _ => return Err(Error::InvalidParameter("spin boundary symbols are 0 or 1".into())),
                            };
                        }
                    }
                }
            }
        }
        let p_plus = (-FIELD_OFFSET..=FIELD_OFFSET)
            .map(|s| 1.0 / (1.0 + (-2.0 * beta * s as f64).exp()))
            .collect();
        Ok(IsingModel {
            name: format!("ising-{}", boundary.label()),
            volume,
            alphabet: Alphabet::spins(),
            beta,
            boundary,
            nbrs,
            ext,
            p_plus,
        })
    }

    /// `rows × cols` rectangle with the given boundary.
    pub fn rectangle(cols: usize, rows: usize, beta: f64, boundary: Boundary) -> Result<Self> {
        IsingModel::new(Volume::rectangle(cols, rows), beta, boundary)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    #[inline]
    fn local_field(&self, slot: usize, config: &[u8]) -> i32 {
        let mut s = self.ext[slot];
        for t in &self.nbrs[slot] {
            s += 2 * config[*t] as i32 - 1;
        }
        s
    }

    /// `P(σ_x = + | rest)` as a function of the local field.
    pub fn prob_plus(&self, slot: usize, config: &[u8]) -> f64 {
        self.p_plus[(self.local_field(slot, config) + FIELD_OFFSET) as usize]
    }

    /// One sweep over the slots `from..` for two chains driven by the same
    /// uniforms. Heat-bath updates are monotone, so the chains stay ordered
    /// if they start ordered.
    pub fn coupled_sweep(&self, a: &mut [u8], b: &mut [u8], from: usize, rng: &mut Rng) {
        for slot in from..a.len() {
            let u: f64 = rng.gen();
            a[slot] = (u >= 1.0 - self.prob_plus(slot, a)) as u8;
            b[slot] = (u >= 1.0 - self.prob_plus(slot, b)) as u8;
        }
    }
}

impl FieldModel for IsingModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn volume(&self) -> &Volume {
        &self.volume
    }

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn log_weight(&self, config: &[u8]) -> f64 {
        let mut e = 0i64;
        for slot in 0..config.len() {
            let sx = 2 * config[slot] as i64 - 1;
            e += sx * self.ext[slot] as i64;
            for t in &self.nbrs[slot] {
                if *t > slot {
                    e += sx * (2 * config[*t] as i64 - 1);
                }
            }
        }
        self.beta * e as f64
    }

    fn neighbors(&self, slot: usize) -> Vec<usize> {
        self.nbrs[slot].clone()
    }

    fn conditional_into(&self, slot: usize, config: &[u8], out: &mut [f64]) {
        let p = self.prob_plus(slot, config);
        out[0] = 1.0 - p;
        out[1] = p;
    }

    fn heat_bath_sweep(&self, config: &mut [u8], rng: &mut Rng, _scratch: &mut Vec<f64>) {
        for slot in 0..config.len() {
            let u: f64 = rng.gen();
            config[slot] = (u >= 1.0 - self.prob_plus(slot, config)) as u8;
        }
    }
}
