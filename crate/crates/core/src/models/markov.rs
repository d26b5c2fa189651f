use rand::Rng as _;

use crate::error::{Error, Result};
use crate::fields::Alphabet;
use crate::lattice::Volume;
use crate::linalg::Matrix;
use crate::rng::Rng;

use super::{check_distribution, FieldModel, SequentialLaw};

/// A time-homogeneous Markov chain on the sites `0..n` of Z.
#[derive(Clone, Debug)]
pub struct MarkovChain {
    name: String,
    volume: Volume,
    alphabet: Alphabet,
    init: Vec<f64>,
    trans: Matrix,
}

impl MarkovChain {
    pub fn new(alphabet: Alphabet, n: usize, init: Vec<f64>, trans: Matrix) -> Result<Self> {
        let q = alphabet.len();
        if init.len() != q || trans.rows() != q || trans.cols() != q {
            return Err(Error::InvalidParameter("chain parameters do not match the alphabet".into()));
        }
        check_distribution(&init, "initial law")?;
        for i in 0..q {
            check_distribution(trans.row(i), "transition row")?;
        }
        Ok(MarkovChain { name: "markov".into(), volume: Volume::line(n), alphabet, init, trans })
    }

    /// Two-state spin chain started uniformly, staying put with probability `stay`.
    pub fn two_state(n: usize, stay: f64) -> Result<Self> {
        let t = Matrix::from_rows(&[vec![stay, 1.0 - stay], vec![1.0 - stay, stay]]);
        MarkovChain::new(Alphabet::spins(), n, vec![0.5, 0.5], t)
    }

    /// A chain with strictly positive random parameters.
    pub fn random(alphabet: Alphabet, n: usize, rng: &mut Rng) -> Result<Self> {
        let q = alphabet.len();
        let row = |rng: &mut Rng| {
            let w: Vec<f64> = (0..q).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let init = row(rng);
        let rows: Vec<Vec<f64>> = (0..q).map(|_| row(rng)).collect();
        MarkovChain::new(alphabet, n, init, Matrix::from_rows(&rows))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn transition(&self) -> &Matrix {
        &self.trans
    }

    pub fn initial(&self) -> &[f64] {
        &self.init
    }
}

impl FieldModel for MarkovChain {
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
        let Some(first) = config.first() else { return 0.0 };
        let mut lw = self.init[*first as usize].ln();
        for w in config.windows(2) {
            lw += self.trans[(w[0] as usize, w[1] as usize)].ln();
        }
        lw
    }

    fn neighbors(&self, slot: usize) -> Vec<usize> {
        let n = self.volume.len();
        let mut v = Vec::with_capacity(2);
        if slot > 0 {
            v.push(slot - 1);
        }
        if slot + 1 < n {
            v.push(slot + 1);
        }
        v
    }

    fn conditional_into(&self, slot: usize, config: &[u8], out: &mut [f64]) {
        let n = config.len();
        let mut z = 0.0;
        for (a, o) in out.iter_mut().enumerate() {
            let left = if slot == 0 { self.init[a] } else { self.trans[(config[slot - 1] as usize, a)] };
            let right = if slot + 1 < n { self.trans[(a, config[slot + 1] as usize)] } else { 1.0 };
            *o = left * right;
            z += *o;
        }
        out.iter_mut().for_each(|o| *o /= z);
    }
}

impl SequentialLaw for MarkovChain {
    fn len(&self) -> usize {
        self.volume.len()
    }

    fn q(&self) -> usize {
        self.alphabet.len()
    }

    fn next_law(&self, history: &[u8], out: &mut [f64]) -> Result<()> {
        if self.log_weight(history) == f64::NEG_INFINITY {
            return Err(Error::DegenerateConditioning(format!("history {history:?}")));
        }
        match history.last() {
            None => out.copy_from_slice(&self.init),
            Some(s) => out.copy_from_slice(self.trans.row(*s as usize)),
        }
        Ok(())
    }
}
