//! Tail probabilities `P(|g − Eg| ≥ t)`, exact or from independent chains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::BoundFunction;
use crate::models::{glauber_sample, ExactJoint, FieldModel};
use crate::rng;
use crate::stats::{self, binomial_interval, Interval, Z99};

/// Deviations within this of `t` count as reaching `t`.
pub const TAIL_SLACK: f64 = 1e-12;

/// Smallest chain count accepted by [`empirical_tail`].
pub const MIN_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Exact,
    Mc,
}

/// `P(|g − Eg| ≥ t)` with its 99% interval. The upper end also absorbs the
/// uncertainty in the estimated mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
    pub half_width: f64,
    pub kind: EstimatorKind,
}

impl TailEstimate {
    pub fn exact(t: f64, p: f64) -> Self {
        TailEstimate { t, estimate: p, lower: p, upper: p, samples: 0, half_width: 0.0, kind: EstimatorKind::Exact }
    }
}

/// Exact `P(|g − mean| ≥ t)` for a tabulated `g`.
pub fn exact_tail(joint: &ExactJoint, g: &[f64], mean: f64, t: f64) -> f64 {
    g.iter()
        .zip(joint.masses())
        .filter(|(v, _)| (*v - mean).abs() >= t - TAIL_SLACK)
        .map(|(_, m)| m)
        .sum::<f64>()
        .min(1.0)
}

/// Exact `E[(g − mean)^k]`.
pub fn central_moment(joint: &ExactJoint, g: &[f64], mean: f64, k: u32) -> f64 {
    g.iter().zip(joint.masses()).map(|(v, m)| m * (v - mean).powi(k as i32)).sum()
}

/// Draws `count` values of `g`, each the endpoint of its own heat-bath chain
/// started from the constant configuration `start`.
pub fn chain_values(
    model: &dyn FieldModel,
    g: &BoundFunction,
    start: u8,
    count: usize,
    burn_in: usize,
    seed: u64,
) -> Vec<f64> {
    let init = vec![start; model.volume().len()];
    (0..count)
        .into_par_iter()
        .map(|r| g.eval(&glauber_sample(model, &init, burn_in, seed, r as u64)))
        .collect()
}

/// Empirical tail together with the mean batch it was centred on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTail {
    pub mean: f64,
    pub mean_se: f64,
    /// `Z99 · mean_se`, subtracted from `t` for the upper end and added for
    /// the lower end.
    pub shift: f64,
    pub estimates: Vec<TailEstimate>,
}

/// Tail estimates from `values` centred at an independently estimated mean.
/// At each `t` the upper end is the interval top for the event
/// `|g − m̂| ≥ t − shift`, the lower end the interval bottom at `t + shift`.
/// When `range` holds the extreme values of `g` and the shifted event is
/// empty for every configuration, the upper end is exactly zero.
pub fn tail_from_values(
    values: &[f64],
    mean: f64,
    mean_se: f64,
    t_grid: &[f64],
    range: Option<(f64, f64)>,
) -> EmpiricalTail {
    let shift = Z99 * mean_se;
    let n = values.len() as u64;
    let reach = range.map_or(f64::INFINITY, |(lo, hi)| (hi - mean).max(mean - lo));
    let count = |thr: f64| values.iter().filter(|v| (*v - mean).abs() >= thr - TAIL_SLACK).count() as u64;
    let estimates = t_grid
        .iter()
        .map(|t| {
            let point = binomial_interval(count(*t), n);
            let thr = (t - shift).max(0.0);
            let hi = if thr - TAIL_SLACK > reach { Interval::exact(0.0) } else { binomial_interval(count(thr), n) };
            let lo = binomial_interval(count(t + shift), n);
            TailEstimate {
                t: *t,
                estimate: point.point,
                lower: lo.lower,
                upper: hi.upper,
                samples: values.len(),
                half_width: point.half_width(),
                kind: EstimatorKind::Mc,
            }
        })
        .collect();
    EmpiricalTail { mean, mean_se, shift, estimates }
}

/// Raw draws behind an [`EmpiricalTail`].
#[derive(Clone, Debug, PartialEq)]
pub struct TailSamples {
    pub mean_batch: Vec<f64>,
    pub values: Vec<f64>,
}

/// Monte Carlo tail of `g` at absolute thresholds `t_grid`: `samples`
/// independent chains from the all-`start` configuration for the tail, and
/// another `samples` chains on separate streams for the mean. `range` is
/// passed on to [`tail_from_values`].
#[allow(clippy::too_many_arguments)]
pub fn empirical_tail(
    model: &dyn FieldModel,
    g: &BoundFunction,
    start: u8,
    t_grid: &[f64],
    range: Option<(f64, f64)>,
    samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<(EmpiricalTail, TailSamples)> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let mean_batch = chain_values(model, g, start, samples, burn_in, rng::child_seed(seed, "tail-mean"));
    let values = chain_values(model, g, start, samples, burn_in, rng::child_seed(seed, "tail-values"));
    let mean = stats::mean(&mean_batch);
    let se = (stats::variance(&mean_batch) / samples as f64).sqrt();
    Ok((tail_from_values(&values, mean, se, t_grid, range), TailSamples { mean_batch, values }))
}
