use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::{decode_config, encode_config, enumeration_size, Alphabet};

use super::{FieldModel, SequentialLaw};

/// A fully enumerated law on `A^n`, masses in enumeration order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactJoint {
    q: usize,
    n: usize,
    masses: Vec<f64>,
    log_z: f64,
}

impl ExactJoint {
    /// Normalised Boltzmann weights of `model`. Fails with a capacity error
    /// when `|A|^|Λ|` exceeds `cap`.
    pub fn from_model(model: &dyn FieldModel, cap: u64) -> Result<Self> {
        let q = model.alphabet().len();
        let n = model.volume().len();
        let total = enumeration_size(q, n, cap)?;
        let mut cfg = vec![0u8; n];
        let mut lw = Vec::with_capacity(total);
        for k in 0..total {
            decode_config(k, q, &mut cfg);
            lw.push(model.log_weight(&cfg));
        }
        let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Err(Error::DegenerateConditioning("every configuration has zero weight".into()));
        }
        let z: f64 = lw.iter().map(|w| (w - m).exp()).sum();
        let masses = lw.iter().map(|w| (w - m).exp() / z).collect();
        Ok(ExactJoint { q, n, masses, log_z: m + z.ln() })
    }

    /// Wraps explicit masses, which must sum to one within 1e-12.
    pub fn from_masses(q: usize, n: usize, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != q.pow(n as u32) {
            return Err(Error::InvalidParameter("mass vector has the wrong length".into()));
        }
        let s: f64 = masses.iter().sum();
        if masses.iter().any(|m| !(*m >= 0.0)) || (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("masses sum to {s}")));
        }
        Ok(ExactJoint { q, n, masses, log_z: 0.0 })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `ln Z` of the unnormalised weights this joint came from.
    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn mass_of(&self, config: &[u8]) -> f64 {
        self.masses[encode_config(config, self.q)]
    }

    /// `E f` for `f` tabulated in enumeration order.
    pub fn expectation(&self, table: &[f64]) -> f64 {
        self.masses.iter().zip(table).map(|(m, v)| m * v).sum()
    }

    /// Index range of the configurations extending `prefix`.
    pub fn block(&self, prefix: &[u8]) -> std::ops::Range<usize> {
        let width = self.q.pow((self.n - prefix.len()) as u32);
        let start = encode_config(prefix, self.q) * width;
        start..start + width
    }

    /// Law of the remaining coordinates given the first `past.len()`.
    pub fn conditional_future(&self, past: &[u8]) -> Result<ExactJoint> {
        if past.len() > self.n {
            return Err(Error::InvalidParameter("past longer than the volume".into()));
        }
        let block = &self.masses[self.block(past)];
        let z: f64 = block.iter().sum();
        if z <= 0.0 {
            return Err(Error::DegenerateConditioning(format!("past {past:?}")));
        }
        Ok(ExactJoint {
            q: self.q,
            n: self.n - past.len(),
            masses: block.iter().map(|m| m / z).collect(),
            log_z: 0.0,
        })
    }

    /// Law of coordinate `k`.
    pub fn coordinate_marginal(&self, k: usize) -> Vec<f64> {
        let stride = self.q.pow((self.n - 1 - k) as u32);
        let mut out = vec![0.0; self.q];
        for (idx, m) in self.masses.iter().enumerate() {
            out[(idx / stride) % self.q] += m;
        }
        out
    }

    pub fn prefix_masses(&self) -> PrefixMass {
        let mut levels = vec![self.masses.clone()];
        for _ in 0..self.n {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = prev.chunks(self.q).map(|c| c.iter().sum()).collect();
            levels.push(next);
        }
        levels.reverse();
        PrefixMass { q: self.q, n: self.n, levels }
    }

    /// CSV with one row per configuration: `configuration,mass`.
    pub fn write_csv<W: Write>(&self, alphabet: &Alphabet, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["configuration", "mass"])?;
        let mut cfg = vec![0u8; self.n];
        for (k, m) in self.masses.iter().enumerate() {
            decode_config(k, self.q, &mut cfg);
            w.write_record([alphabet.render(&cfg), format!("{m:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Masses of every prefix: `levels[k]` holds `P(σ_0..σ_{k-1} = prefix)` for
/// the `q^k` prefixes of length `k`.
#[derive(Clone, Debug)]
pub struct PrefixMass {
    q: usize,
    n: usize,
    levels: Vec<Vec<f64>>,
}

impl PrefixMass {
    pub fn mass(&self, prefix: &[u8]) -> f64 {
        self.levels[prefix.len()][encode_config(prefix, self.q)]
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }
}

impl SequentialLaw for PrefixMass {
    fn len(&self) -> usize {
        self.n
    }

    fn q(&self) -> usize {
        self.q
    }

    fn next_law(&self, history: &[u8], out: &mut [f64]) -> Result<()> {
        let k = history.len();
        let idx = encode_config(history, self.q);
        let z = self.levels[k][idx];
        if z <= 0.0 {
            return Err(Error::DegenerateConditioning(format!("history {history:?}")));
        }
        let next = &self.levels[k + 1][idx * self.q..(idx + 1) * self.q];
        for (o, m) in out.iter_mut().zip(next) {
            *o = m / z;
        }
        Ok(())
    }
}
