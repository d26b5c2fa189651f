use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Alphabet;
use crate::lattice::{site_distance, Site, Volume};

use super::{softmax_in_place, Boundary, FieldModel};

/// One translation-invariant interaction: the energy of the pattern seen on
/// `offsets + x`, for every `x`. `energies` is indexed like a configuration
/// on `offsets` (first offset most significant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermTemplate {
    pub offsets: Vec<Site>,
    pub energies: Vec<f64>,
}

impl TermTemplate {
    pub fn diameter(&self) -> u32 {
        let mut d = 0;
        for a in &self.offsets {
            for b in &self.offsets {
                d = d.max(site_distance(a, b));
            }
        }
        d
    }
}

/// A finite-range potential built from term templates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub range: u32,
    pub terms: Vec<TermTemplate>,
}

impl Potential {
    /// Spin potential `-J σ_x σ_{x+e} - h σ_x` with nearest-neighbour bonds.
    pub fn nearest_neighbor(dim: u8, coupling: f64, field: f64) -> Self {
        let o = Site::origin(dim);
        let mut terms = vec![TermTemplate { offsets: vec![o], energies: vec![field, -field] }];
        let bond = vec![-coupling, coupling, coupling, -coupling];
        terms.push(TermTemplate { offsets: vec![o, o.offset(1, 0)], energies: bond.clone() });
        if dim == 2 {
            terms.push(TermTemplate { offsets: vec![o, o.offset(0, 1)], energies: bond });
        }
        Potential { range: 1, terms }
    }

    fn validate(&self, dim: u8, q: usize) -> Result<()> {
        for t in &self.terms {
            if t.offsets.is_empty() || t.offsets.iter().any(|s| s.dim() != dim) {
                return Err(Error::InvalidParameter("term offsets must be nonempty and match the volume dimension".into()));
            }
            if t.diameter() > self.range {
                return Err(Error::InvalidParameter(format!(
                    "term of diameter {} exceeds range {}",
                    t.diameter(),
                    self.range
                )));
            }
            if t.energies.len() != q.pow(t.offsets.len() as u32) {
                return Err(Error::InvalidParameter("energy table has the wrong length".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Instance {
    template: usize,
    slots: Vec<usize>,
    strides: Vec<usize>,
    base: usize,
}

/// `γ_Λ(σ | η) ∝ exp(-β H_Λ^η(σ))` for a finite-range potential.
#[derive(Clone, Debug)]
pub struct GibbsModel {
    name: String,
    volume: Volume,
    alphabet: Alphabet,
    beta: f64,
    potential: Potential,
    boundary: Boundary,
    instances: Vec<Instance>,
    by_slot: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl GibbsModel {
    pub fn new(
        volume: Volume,
        alphabet: Alphabet,
        potential: Potential,
        beta: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let q = alphabet.len();
        potential.validate(volume.dim(), q)?;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be finite and nonnegative, got {beta}")));
        }
        let mut instances = Vec::new();
        for (ti, t) in potential.terms.iter().enumerate() {
            let k = t.offsets.len();
            let mut anchors: Vec<Site> = volume
                .sites()
                .iter()
                .flat_map(|s| t.offsets.iter().map(move |o| s.offset(-o.x(), -o.y())))
                .collect();
            anchors.sort();
            anchors.dedup();
            'anchor: for anchor in anchors {
                let mut inst = Instance { template: ti, slots: Vec::new(), strides: Vec::new(), base: 0 };
                for (p, o) in t.offsets.iter().enumerate() {
                    let site = anchor.translate(o);
                    let stride = q.pow((k - 1 - p) as u32);
                    match volume.slot(&site) {
                        Some(slot) => {
                            inst.slots.push(slot);
                            inst.strides.push(stride);
                        }
                        None => match boundary.symbol_at(&site)? {
                            Some(s) if (s as usize) < q => inst.base += s as usize * stride,
                            Some(s) => return Err(Error::InvalidParameter(format!("boundary symbol {s} out of range"))),
                            None => continue 'anchor,
                        },
                    }
                }
                instances.push(inst);
            }
        }
        let n = volume.len();
        let mut by_slot = vec![Vec::new(); n];
        for (i, inst) in instances.iter().enumerate() {
            for s in &inst.slots {
                if !by_slot[*s].contains(&i) {
                    by_slot[*s].push(i);
                }
            }
        }
        let neighbors = (0..n)
            .map(|x| {
                let mut nb: Vec<usize> = by_slot[x]
                    .iter()
                    .flat_map(|i| instances[*i].slots.iter().copied())
                    .filter(|s| *s != x)
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect();
        Ok(GibbsModel {
            name: "gibbs".into(),
            volume,
            alphabet,
            beta,
            potential,
            boundary,
            instances,
            by_slot,
            neighbors,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    fn energy(&self, inst: &Instance, config: &[u8]) -> f64 {
        let idx = inst.base
            + inst.slots.iter().zip(&inst.strides).map(|(s, k)| config[*s] as usize * k).sum::<usize>();
        self.potential.terms[inst.template].energies[idx]
    }

    /// `H_Λ^η(σ)`.
    pub fn hamiltonian(&self, config: &[u8]) -> f64 {
        self.instances.iter().map(|i| self.energy(i, config)).sum()
    }
}

impl FieldModel for GibbsModel {
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
        -self.beta * self.hamiltonian(config)
    }

    fn neighbors(&self, slot: usize) -> Vec<usize> {
        self.neighbors[slot].clone()
    }

    fn conditional_into(&self, slot: usize, config: &[u8], out: &mut [f64]) {
        let mut c = config.to_vec();
        for (a, o) in out.iter_mut().enumerate() {
            c[slot] = a as u8;
            let e: f64 = self.by_slot[slot].iter().map(|i| self.energy(&self.instances[*i], &c)).sum();
            *o = -self.beta * e;
        }
        softmax_in_place(out);
    }
}
