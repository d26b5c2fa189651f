//! Experiment configuration, read from JSON and validated on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Alphabet, LocalFunction};
use crate::lattice::Volume;
use crate::linalg::Matrix;
use crate::models::{Boundary, FieldModel, GibbsModel, IsingModel, MarkovChain, Potential, ProductModel};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    Plus,
    Minus,
    Free,
}

impl BoundarySpec {
    pub fn build(self) -> Boundary {
        match self {
            BoundarySpec::Plus => Boundary::plus(),
            BoundarySpec::Minus => Boundary::minus(),
            BoundarySpec::Free => Boundary::Free,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Independent spins with law `(P(−), P(+))` at every site.
    Iid { n: usize, marginal: Vec<f64> },
    /// Two-state chain on spins with the given stay probability.
    TwoState { n: usize, stay: f64 },
    /// Chain with random transitions on the alphabet `values`.
    RandomMarkov { n: usize, values: Vec<f64>, seed: u64 },
    /// Explicit chain on the alphabet `values`.
    Markov { n: usize, values: Vec<f64>, initial: Vec<f64>, transition: Vec<Vec<f64>> },
    /// Nearest-neighbour Gibbs measure on a line segment.
    Gibbs1d { n: usize, coupling: f64, field: f64, beta: f64, boundary: BoundarySpec },
    Ising { cols: usize, rows: usize, beta: f64, boundary: BoundarySpec },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn FieldModel>> {
        Ok(match self {
            ModelSpec::Iid { n, marginal } => Box::new(
                ProductModel::iid(Volume::line(*n), Alphabet::spins(), marginal.clone())?
                    .with_name(format!("iid-n{n}-p{}", marginal.get(1).copied().unwrap_or(f64::NAN))),
            ),
            ModelSpec::TwoState { n, stay } => {
                Box::new(MarkovChain::two_state(*n, *stay)?.with_name(format!("markov2-n{n}-stay{stay}")))
            }
            ModelSpec::RandomMarkov { n, values, seed } => {
                let mut g = rng::stream(*seed, 0);
                Box::new(
                    MarkovChain::random(Alphabet::numeric(values)?, *n, &mut g)?
                        .with_name(format!("markov-q{}-n{n}-seed{seed}", values.len())),
                )
            }
            ModelSpec::Markov { n, values, initial, transition } => {
                if transition.iter().any(|r| r.len() != values.len()) {
                    return Err(Error::Config("transition rows must match the alphabet size".into()));
                }
                let m = Matrix::from_rows(transition);
                Box::new(
                    MarkovChain::new(Alphabet::numeric(values)?, *n, initial.clone(), m)?
                        .with_name(format!("markov-q{}-n{n}", values.len())),
                )
            }
            ModelSpec::Gibbs1d { n, coupling, field, beta, boundary } => Box::new(
                GibbsModel::new(
                    Volume::line(*n),
                    Alphabet::spins(),
                    Potential::nearest_neighbor(1, *coupling, *field),
                    *beta,
                    boundary.build(),
                )?
                .with_name(format!("gibbs1d-n{n}-beta{beta}-{}", boundary.build().label())),
            ),
            ModelSpec::Ising { cols, rows, beta, boundary } => Box::new(
                IsingModel::rectangle(*cols, *rows, *beta, boundary.build())?
                    .with_name(format!("ising-{cols}x{rows}-beta{beta}-{}", boundary.build().label())),
            ),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Magnetization,
    SingleSpin { slot: usize },
    Majority,
    PairProduct { a: usize, b: usize },
}

impl FunctionSpec {
    pub fn build(&self, volume: &Volume) -> Result<LocalFunction> {
        let site = |slot: usize| -> Result<_> {
            if slot >= volume.len() {
                return Err(Error::Config(format!("slot {slot} outside a volume of {} sites", volume.len())));
            }
            Ok(volume.site(slot))
        };
        Ok(match self {
            FunctionSpec::Magnetization => LocalFunction::magnetization(volume.sites().to_vec()),
            FunctionSpec::SingleSpin { slot } => {
                LocalFunction::single_spin(site(*slot)?).with_name(format!("spin{slot}"))
            }
            FunctionSpec::Majority => LocalFunction::majority(volume.sites().to_vec()),
            FunctionSpec::PairProduct { a, b } => {
                LocalFunction::pair_product(site(*a)?, site(*b)?).with_name(format!("pair{a}-{b}"))
            }
        })
    }
}

fn default_t_points() -> usize {
    20
}

fn default_p_list() -> Vec<u32> {
    vec![1, 2, 3]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub models: Vec<ModelSpec>,
    pub functions: Vec<FunctionSpec>,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<u32>,
}

fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}

fn default_burn_in() -> usize {
    crate::models::DEFAULT_BURN_IN
}

/// Monte Carlo tail of one function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub model: ModelSpec,
    pub function: FunctionSpec,
    /// Multiples of `‖δg‖`.
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    pub samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    Exact,
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingMatrixConfig {
    pub model: ModelSpec,
    pub mode: MatrixMode,
    /// Row to estimate in Monte Carlo mode.
    #[serde(default)]
    pub x: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<u32>,
}

fn default_runs() -> usize {
    2000
}

fn default_sweeps() -> usize {
    20
}

fn default_family() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub p: ModelSpec,
    pub q: ModelSpec,
    /// Cost weights per slot; all ones when omitted.
    #[serde(default)]
    pub phi: Option<Vec<f64>>,
    #[serde(default = "default_family")]
    pub family: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CremeConfig {
    pub beta: f64,
    pub cols: usize,
    pub rows: usize,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    pub samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Decay rate of the coupling matrix; fitted when omitted.
    #[serde(default)]
    pub c: Option<f64>,
    /// Side of the exactly enumerated square used to fit the decay rate.
    #[serde(default = "default_fit_side")]
    pub fit_side: usize,
}

fn default_fit_side() -> usize {
    3
}

fn default_lowtemp_grid() -> Vec<f64> {
    vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 1.0]
}

fn default_rho_grid() -> Vec<f64> {
    vec![0.25, 0.5]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowtempConfig {
    pub beta: f64,
    pub cols: usize,
    pub rows: usize,
    /// Slot whose coupling row is estimated.
    #[serde(default)]
    pub x: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Chains per split of the magnetization tail.
    pub tail_samples: usize,
    #[serde(default = "default_lowtemp_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Mandatory when any randomized section is present.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub battery: Option<BatteryConfig>,
    #[serde(default)]
    pub tail: Option<TailConfig>,
    #[serde(default)]
    pub coupling_matrix: Option<CouplingMatrixConfig>,
    #[serde(default)]
    pub transport: Option<TransportConfig>,
    #[serde(default)]
    pub creme: Option<CremeConfig>,
    #[serde(default)]
    pub lowtemp: Option<LowtempConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn uses_monte_carlo(&self) -> bool {
        self.tail.is_some()
            || self.transport.is_some()
            || self.creme.is_some()
            || self.lowtemp.is_some()
            || self.coupling_matrix.as_ref().is_some_and(|c| c.mode == MatrixMode::Mc)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        if self.uses_monte_carlo() && self.seed.is_none() {
            return bad("a seed is required for Monte Carlo sections".into());
        }
        if let Some(b) = &self.battery {
            if b.models.is_empty() || b.functions.is_empty() {
                return bad("battery needs at least one model and one function".into());
            }
            if b.t_points == 0 || b.p_list.iter().any(|p| *p == 0) {
                return bad("battery t_points and p values must be positive".into());
            }
        }
        let grid_ok = |g: &[f64]| !g.is_empty() && g.iter().all(|t| *t > 0.0 && t.is_finite());
        if let Some(t) = &self.tail {
            if t.samples < 1000 {
                return bad(format!("tail needs at least 1000 samples, got {}", t.samples));
            }
            if !grid_ok(&t.t_grid) {
                return bad("tail t_grid must hold positive multiples".into());
            }
        }
        if let Some(c) = &self.creme {
            if !grid_ok(&c.t_grid) || c.samples < 1000 || c.fit_side < 2 {
                return bad("creme needs a positive t_grid, at least 1000 samples and fit_side ≥ 2".into());
            }
            if c.c.is_some_and(|v| !(v > 0.0)) {
                return bad("creme decay rate must be positive".into());
            }
        }
        if let Some(l) = &self.lowtemp {
            if !grid_ok(&l.t_grid) || l.tail_samples < 1000 || l.runs == 0 || l.sweeps == 0 {
                return bad("lowtemp needs a positive t_grid, tail_samples ≥ 1000 and positive runs and sweeps".into());
            }
            if l.x >= l.cols * l.rows {
                return bad(format!("lowtemp slot {} outside the volume", l.x));
            }
            if l.rho_grid.is_empty() || l.rho_grid.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
                return bad("lowtemp rho_grid values must lie in (0, 1]".into());
            }
        }
        if let Some(m) = &self.coupling_matrix {
            if m.runs == 0 || m.sweeps == 0 {
                return bad("coupling_matrix runs and sweeps must be positive".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let c = ExperimentConfig::from_json(
            r#"{
                "name": "t",
                "battery": {
                    "models": [
                        {"kind": "iid", "n": 3, "marginal": [0.5, 0.5]},
                        {"kind": "ising", "cols": 2, "rows": 2, "beta": 0.3, "boundary": "plus"},
                        {"kind": "random_markov", "n": 3, "values": [-1, 0, 1], "seed": 4}
                    ],
                    "functions": [{"kind": "magnetization"}, {"kind": "single_spin", "slot": 1}]
                }
            }"#,
        )
        .unwrap();
        let b = c.battery.unwrap();
        assert_eq!(b.t_points, 20);
        for m in &b.models {
            let model = m.build().unwrap();
            for f in &b.functions {
                f.build(model.volume()).unwrap();
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_json("{").is_err());
        assert!(ExperimentConfig::from_json(r#"{"name": "x", "bogus": 1}"#).is_err());
        let no_seed = r#"{"name": "x", "tail": {"model": {"kind": "iid", "n": 3, "marginal": [0.5, 0.5]},
            "function": {"kind": "magnetization"}, "samples": 5000}}"#;
        assert!(matches!(ExperimentConfig::from_json(no_seed), Err(Error::Config(_))));
        let few = no_seed.replace("\"name\": \"x\"", "\"name\": \"x\", \"seed\": 1").replace("5000", "10");
        assert!(ExperimentConfig::from_json(&few).is_err());
    }
}
