//! Configurations over a finite alphabet, local functions and their
//! variation vectors.
//!
//! A configuration on a volume is a `Vec<u8>` of symbol indices in slot
//! (spiral) order. Enumeration treats slot 0 as the most significant digit,
//! so all configurations sharing a prefix form one contiguous block.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Site, Volume};

/// Default cap on the number of configurations any exact routine enumerates.
pub const DEFAULT_CAP: u64 = 1 << 20;

/// Absolute slack allowed in every inequality verdict.
pub const SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl Alphabet {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if labels.is_empty() || labels.len() != values.len() || labels.len() > 255 {
            return invalid("alphabet needs 1..=255 labels, one numeric value each");
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != labels.len() {
            return invalid("duplicate alphabet labels");
        }
        let mut v = values.clone();
        v.sort_by(f64::total_cmp);
        if v.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate alphabet values");
        }
        Ok(Alphabet { labels, values })
    }

    /// `{-, +}` with values -1 and +1. Index 0 is `-`, index 1 is `+`.
    pub fn spins() -> Self {
        Alphabet { labels: vec!["-".into(), "+".into()], values: vec![-1.0, 1.0] }
    }

    /// Symbols labelled by their values.
    pub fn numeric(values: &[f64]) -> Result<Self> {
        Alphabet::new(values.iter().map(|v| format!("{v}")).collect(), values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn value(&self, symbol: u8) -> f64 {
        self.values[symbol as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self, symbol: u8) -> &str {
        &self.labels[symbol as usize]
    }

    pub fn symbol_of(&self, label: &str) -> Option<u8> {
        self.labels.iter().position(|l| l == label).map(|i| i as u8)
    }

    pub fn symbol_of_value(&self, value: f64) -> Option<u8> {
        self.values.iter().position(|v| *v == value).map(|i| i as u8)
    }

    /// Spread `max value - min value`.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        hi - lo
    }

    pub fn render(&self, config: &[u8]) -> String {
        let sep = if self.labels.iter().all(|l| l.chars().count() == 1) { "" } else { " " };
        config.iter().map(|s| self.label(*s)).collect::<Vec<_>>().join(sep)
    }
}

/// An assignment of symbols to the sites of a volume, in slot order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub symbols: Vec<u8>,
}

impl Configuration {
    pub fn new(symbols: Vec<u8>) -> Self {
        Configuration { symbols }
    }

    pub fn constant(len: usize, symbol: u8) -> Self {
        Configuration { symbols: vec![symbol; len] }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// `q^n`, or a capacity error if it exceeds `cap`.
pub fn enumeration_size(q: usize, n: usize, cap: u64) -> Result<usize> {
    let needed = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(Error::Capacity { needed, cap });
    }
    Ok(needed as usize)
}

/// Writes configuration number `index` into `out` (slot 0 most significant).
pub fn decode_config(mut index: usize, q: usize, out: &mut [u8]) {
    for s in out.iter_mut().rev() {
        *s = (index % q) as u8;
        index /= q;
    }
}

pub fn encode_config(config: &[u8], q: usize) -> usize {
    config.iter().fold(0, |acc, s| acc * q + *s as usize)
}

/// All `q^n` configurations in enumeration order.
pub fn all_configs(q: usize, n: usize, cap: u64) -> Result<Vec<Vec<u8>>> {
    let total = enumeration_size(q, n, cap)?;
    Ok((0..total)
        .map(|k| {
            let mut c = vec![0u8; n];
            decode_config(k, q, &mut c);
            c
        })
        .collect())
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Form {
    /// `g = offset + Σ_k coeff_k · value(σ_{s_k})`. Variations are then
    /// separable and computed exactly without enumerating `A^Λ`.
    Additive { coeffs: Vec<f64>, offset: f64 },
    General(Evaluator),
}

/// A real function of the symbols on a finite dependency set. The evaluator
/// receives the numeric symbol values at the support sites, in support order.
#[derive(Clone)]
pub struct LocalFunction {
    name: String,
    support: Vec<Site>,
    form: Form,
}

impl fmt::Debug for LocalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalFunction")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

impl LocalFunction {
    pub fn custom(
        name: impl Into<String>,
        support: Vec<Site>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        LocalFunction { name: name.into(), support, form: Form::General(Arc::new(f)) }
    }

    pub fn additive(name: impl Into<String>, support: Vec<Site>, coeffs: Vec<f64>, offset: f64) -> Self {
        assert_eq!(support.len(), coeffs.len());
        LocalFunction { name: name.into(), support, form: Form::Additive { coeffs, offset } }
    }

    /// `Σ_{x ∈ sites} σ_x`.
    pub fn magnetization(sites: Vec<Site>) -> Self {
        let n = sites.len();
        LocalFunction::additive("magnetization", sites, vec![1.0; n], 0.0)
    }

    pub fn single_spin(site: Site) -> Self {
        LocalFunction::additive("single_spin", vec![site], vec![1.0], 0.0)
    }

    pub fn pair_product(a: Site, b: Site) -> Self {
        LocalFunction::custom("pair_product", vec![a, b], |v| v[0] * v[1])
    }

    /// Sign of the sum, 0 on ties.
    pub fn majority(sites: Vec<Site>) -> Self {
        LocalFunction::custom("majority", sites, |v| {
            let s: f64 = v.iter().sum();
            if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// Indicator that the symbol values at `sites` equal `pattern`.
    pub fn pattern(sites: Vec<Site>, pattern: Vec<f64>) -> Self {
        assert_eq!(sites.len(), pattern.len());
        LocalFunction::custom("pattern", sites, move |v| {
            if v.iter().zip(&pattern).all(|(a, b)| a == b) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn constant(c: f64) -> Self {
        LocalFunction::custom("constant", Vec::new(), move |_| c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn support(&self) -> &[Site] {
        &self.support
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.form, Form::Additive { .. })
    }

    /// Evaluates on symbol values listed in support order.
    pub fn eval_values(&self, values: &[f64]) -> f64 {
        match &self.form {
            Form::Additive { coeffs, offset } => {
                offset + coeffs.iter().zip(values).map(|(c, v)| c * v).sum::<f64>()
            }
            Form::General(f) => f(values),
        }
    }

    /// `c · g`.
    pub fn scaled(&self, c: f64) -> Self {
        let name = format!("{c}*{}", self.name);
        match &self.form {
            Form::Additive { coeffs, offset } => LocalFunction::additive(
                name,
                self.support.clone(),
                coeffs.iter().map(|k| k * c).collect(),
                offset * c,
            ),
            Form::General(f) => {
                let f = f.clone();
                LocalFunction::custom(name, self.support.clone(), move |v| c * f(v))
            }
        }
    }

    /// `g + h` on the union of supports.
    pub fn plus(&self, other: &LocalFunction) -> Self {
        let mut support = self.support.clone();
        for s in &other.support {
            if !support.contains(s) {
                support.push(*s);
            }
        }
        let pick = |part: &[Site]| -> Vec<usize> {
            part.iter().map(|s| support.iter().position(|t| t == s).unwrap()).collect()
        };
        let (ia, ib) = (pick(&self.support), pick(&other.support));
        let (a, b) = (self.clone(), other.clone());
        LocalFunction::custom(format!("{}+{}", self.name, other.name), support, move |v| {
            let va: Vec<f64> = ia.iter().map(|k| v[*k]).collect();
            let vb: Vec<f64> = ib.iter().map(|k| v[*k]).collect();
            a.eval_values(&va) + b.eval_values(&vb)
        })
    }

    /// Binds the function to a volume so it can be evaluated on slot-ordered
    /// configurations.
    pub fn bind(&self, volume: &Volume, alphabet: &Alphabet) -> Result<BoundFunction> {
        let slots = self
            .support
            .iter()
            .map(|s| {
                volume.slot(s).ok_or_else(|| {
                    Error::InvalidParameter(format!("{} depends on {s}, outside the volume", self.name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundFunction { g: self.clone(), slots, values: alphabet.values().to_vec() })
    }

    /// Exact variation at `x`, by enumeration over `A^Λ` for general
    /// functions and over single symbols for additive ones.
    pub fn variation(&self, x: &Site, alphabet: &Alphabet, cap: u64) -> Result<f64> {
        let Some(k) = self.support.iter().position(|s| s == x) else {
            return Ok(0.0);
        };
        Ok(self.variations(alphabet, cap)?[k])
    }

    /// Variations at every support site, in support order.
    fn variations(&self, alphabet: &Alphabet, cap: u64) -> Result<Vec<f64>> {
        let q = alphabet.len();
        let n = self.support.len();
        if let Form::Additive { coeffs, .. } = &self.form {
            return Ok(coeffs.iter().map(|c| c.abs() * alphabet.spread()).collect());
        }
        let total = enumeration_size(q, n, cap)?;
        let vals = alphabet.values();
        let mut cfg = vec![0u8; n];
        let mut table = Vec::with_capacity(total);
        let mut buf = vec![0.0; n];
        for idx in 0..total {
            decode_config(idx, q, &mut cfg);
            for (b, s) in buf.iter_mut().zip(&cfg) {
                *b = vals[*s as usize];
            }
            table.push(self.eval_values(&buf));
        }
        // Changing slot k alone moves the index by multiples of q^(n-1-k).
        let mut out = vec![0.0f64; n];
        for (k, o) in out.iter_mut().enumerate() {
            let stride = q.pow((n - 1 - k) as u32);
            for idx in 0..total {
                let digit = (idx / stride) % q;
                if digit != 0 {
                    continue;
                }
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for a in 0..q {
                    let v = table[idx + a * stride];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                *o = o.max(hi - lo);
            }
        }
        Ok(out)
    }

    pub fn delta_vector(&self, alphabet: &Alphabet, cap: u64) -> Result<DeltaVector> {
        let vals = self.variations(alphabet, cap)?;
        let mut by_site = BTreeMap::new();
        for (s, v) in self.support.iter().zip(vals) {
            by_site.insert(*s, v);
        }
        Ok(DeltaVector::from_map(by_site))
    }
}

/// The vector `(δ_x g)_x` together with its norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaVector {
    pub entries: BTreeMap<Site, f64>,
    pub l1: f64,
    pub l2: f64,
}

impl DeltaVector {
    fn from_map(entries: BTreeMap<Site, f64>) -> Self {
        let l1 = entries.values().sum();
        let l2 = entries.values().map(|v| v * v).sum::<f64>().sqrt();
        DeltaVector { entries, l1, l2 }
    }

    pub fn get(&self, x: &Site) -> f64 {
        self.entries.get(x).copied().unwrap_or(0.0)
    }

    /// The vector laid out in slot order of `volume`.
    pub fn on_volume(&self, volume: &Volume) -> Vec<f64> {
        volume.sites().iter().map(|s| self.get(s)).collect()
    }
}

/// A local function resolved against a volume.
#[derive(Clone)]
pub struct BoundFunction {
    g: LocalFunction,
    slots: Vec<usize>,
    values: Vec<f64>,
}

impl BoundFunction {
    pub fn function(&self) -> &LocalFunction {
        &self.g
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn eval(&self, config: &[u8]) -> f64 {
        if let Form::Additive { coeffs, offset } = &self.g.form {
            return offset
                + coeffs
                    .iter()
                    .zip(&self.slots)
                    .map(|(c, s)| c * self.values[config[*s] as usize])
                    .sum::<f64>();
        }
        let buf: Vec<f64> = self.slots.iter().map(|s| self.values[config[*s] as usize]).collect();
        self.g.eval_values(&buf)
    }

    /// `g` evaluated on every configuration of the volume, in enumeration order.
    pub fn tabulate(&self, q: usize, n: usize, cap: u64) -> Result<Vec<f64>> {
        let total = enumeration_size(q, n, cap)?;
        let mut cfg = vec![0u8; n];
        Ok((0..total)
            .map(|k| {
                decode_config(k, q, &mut cfg);
                self.eval(&cfg)
            })
            .collect())
    }
}
