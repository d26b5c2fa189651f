use crate::error::{Error, Result};
use crate::fields::Alphabet;
use crate::lattice::Volume;

use super::{check_distribution, FieldModel, SequentialLaw};

/// Independent coordinates with per-slot marginals.
#[derive(Clone, Debug)]
pub struct ProductModel {
    name: String,
    volume: Volume,
    alphabet: Alphabet,
    marginals: Vec<Vec<f64>>,
}

impl ProductModel {
    pub fn new(volume: Volume, alphabet: Alphabet, marginals: Vec<Vec<f64>>) -> Result<Self> {
        if marginals.len() != volume.len() {
            return Err(Error::InvalidParameter("one marginal per site required".into()));
        }
        for m in &marginals {
            if m.len() != alphabet.len() {
                return Err(Error::InvalidParameter("marginal length differs from alphabet".into()));
            }
            check_distribution(m, "marginal")?;
        }
        Ok(ProductModel { name: "product".into(), volume, alphabet, marginals })
    }

    /// The same marginal at every site.
    pub fn iid(volume: Volume, alphabet: Alphabet, marginal: Vec<f64>) -> Result<Self> {
        let n = volume.len();
        ProductModel::new(volume, alphabet, vec![marginal; n])
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn marginal(&self, slot: usize) -> &[f64] {
        &self.marginals[slot]
    }
}

impl FieldModel for ProductModel {
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
        config.iter().zip(&self.marginals).map(|(s, m)| m[*s as usize].ln()).sum()
    }

    fn neighbors(&self, _slot: usize) -> Vec<usize> {
        Vec::new()
    }

    fn conditional_into(&self, slot: usize, _config: &[u8], out: &mut [f64]) {
        out.copy_from_slice(&self.marginals[slot]);
    }
}

impl SequentialLaw for ProductModel {
    fn len(&self) -> usize {
        self.volume.len()
    }

    fn q(&self) -> usize {
        self.alphabet.len()
    }

    fn next_law(&self, history: &[u8], out: &mut [f64]) -> Result<()> {
        for (k, s) in history.iter().enumerate() {
            if self.marginals[k][*s as usize] == 0.0 {
                return Err(Error::DegenerateConditioning(format!("symbol {s} at slot {k}")));
            }
        }
        out.copy_from_slice(&self.marginals[history.len()]);
        Ok(())
    }
}
