//! Nonnegative sequences `a_1, a_2, …` given by an explicit head and a
//! certified envelope beyond it, so infinite sums come with a remainder.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};

/// Upper envelope for `a_j`, `j` past the head.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Zero,
    /// `scale · ratio^j`
    Geometric { scale: f64, ratio: f64 },
    /// `scale · exp(−rate · j^exponent)`
    Stretched { scale: f64, rate: f64, exponent: f64 },
    /// `scale · j^{−exponent}`
    PowerLaw { scale: f64, exponent: f64 },
}

impl Envelope {
    pub fn at(&self, j: f64) -> f64 {
        match *self {
            Envelope::Zero => 0.0,
            Envelope::Geometric { scale, ratio } => scale * ratio.powf(j),
            Envelope::Stretched { scale, rate, exponent } => scale * (-rate * j.powf(exponent)).exp(),
            Envelope::PowerLaw { scale, exponent } => scale * j.powf(-exponent),
        }
    }

    /// Envelope of `a_j^γ`.
    pub fn powered(&self, gamma: f64) -> Envelope {
        match *self {
            Envelope::Zero => Envelope::Zero,
            Envelope::Geometric { scale, ratio } => Envelope::Geometric { scale: scale.powf(gamma), ratio: ratio.powf(gamma) },
            Envelope::Stretched { scale, rate, exponent } => {
                Envelope::Stretched { scale: scale.powf(gamma), rate: rate * gamma, exponent }
            }
            Envelope::PowerLaw { scale, exponent } => Envelope::PowerLaw { scale: scale.powf(gamma), exponent: exponent * gamma },
        }
    }

    /// Upper bound on `Σ_{j > n} envelope(j)`; infinite when divergent.
    pub fn tail_sum(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Envelope::Zero => 0.0,
            Envelope::Geometric { scale, ratio } => {
                if scale == 0.0 {
                    0.0
                } else if ratio >= 1.0 {
                    f64::INFINITY
                } else {
                    scale * ratio.powf(nf + 1.0) / (1.0 - ratio)
                }
            }
            Envelope::Stretched { scale, rate, exponent } => {
                if scale == 0.0 {
                    0.0
                } else if rate <= 0.0 || exponent <= 0.0 {
                    f64::INFINITY
                } else {
                    // decreasing, so the sum is at most the integral from n
                    let s = 1.0 / exponent;
                    let x = rate * nf.powf(exponent);
                    scale * s * rate.powf(-s) * gamma(s) * gamma_ur(s, x.max(1e-300))
                }
            }
            Envelope::PowerLaw { scale, exponent } => {
                if scale == 0.0 {
                    0.0
                } else if exponent <= 1.0 {
                    f64::INFINITY
                } else if n == 0 {
                    scale * (1.0 + 1.0 / (exponent - 1.0))
                } else {
                    scale * nf.powf(1.0 - exponent) / (exponent - 1.0)
                }
            }
        }
    }
}

/// `head[k]` is `a_{k+1}`; for `j > head.len()`, `a_j ≤ tail.at(j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub head: Vec<f64>,
    pub tail: Envelope,
}

/// A truncated sum and the certified bound on what was left out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum {
    pub head: f64,
    pub remainder: f64,
}

impl SeriesSum {
    pub fn total(&self) -> f64 {
        self.head + self.remainder
    }

    pub fn is_finite(&self) -> bool {
        self.total().is_finite()
    }
}

impl Sequence {
    pub fn new(head: Vec<f64>, tail: Envelope) -> Result<Self> {
        if head.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::InvalidParameter("sequence entries must be nonnegative".into()));
        }
        Ok(Sequence { head, tail })
    }

    pub fn finite(head: Vec<f64>) -> Result<Self> {
        Sequence::new(head, Envelope::Zero)
    }

    pub fn zero() -> Self {
        Sequence { head: Vec::new(), tail: Envelope::Zero }
    }

    /// `a_j` for `j ≥ 1`, taking the envelope past the head.
    pub fn get(&self, j: usize) -> f64 {
        assert!(j >= 1);
        self.head.get(j - 1).copied().unwrap_or_else(|| self.tail.at(j as f64))
    }

    /// `Σ_j a_j^γ`.
    pub fn powered_sum(&self, gamma: f64) -> SeriesSum {
        SeriesSum {
            head: self.head.iter().map(|a| if *a == 0.0 { 0.0 } else { a.powf(gamma) }).sum(),
            remainder: self.tail.powered(gamma).tail_sum(self.head.len()),
        }
    }

    pub fn l1(&self) -> SeriesSum {
        self.powered_sum(1.0)
    }
}
