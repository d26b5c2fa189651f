//! The exact verification battery: every enumerable model and function is
//! checked against the decomposition identities, the pathwise inequality and
//! the exponential and moment bounds, with nothing estimated.

use rayon::prelude::*;

use crate::bounds::{
    backbone_check, backbone_check_with, exponential_bound, martingale_decomposition, moment_bound, operator_norm_l2,
    variance_bound, MartingaleDecomposition, DECOMPOSITION_TOL, NORM_TOL,
};
use crate::coupling::ExactCouplingTable;
use crate::error::{Error, Result};
use crate::fields::{Alphabet, LocalFunction, DEFAULT_CAP};
use crate::lattice::Volume;
use crate::models::{ExactJoint, FieldModel, ProductModel};

use super::config::{BatteryConfig, BoundarySpec, FunctionSpec, ModelSpec};
use super::report::{BoundReport, Params, ReportRow, Verdict};
use super::tail::{central_moment, exact_tail};

/// Slack allowed on the pathwise inequality.
pub const BACKBONE_TOL: f64 = 1e-9;
/// Slack allowed on exact tail and moment comparisons.
pub const EXACT_TOL: f64 = 1e-12;

/// Ten models and four functions covering independent, chain and lattice laws.
pub fn default_battery() -> BatteryConfig {
    let gibbs = |beta: f64, boundary| ModelSpec::Gibbs1d { n: 6, coupling: 1.0, field: 0.0, beta, boundary };
    BatteryConfig {
        models: vec![
            ModelSpec::Iid { n: 5, marginal: vec![0.5, 0.5] },
            ModelSpec::Iid { n: 6, marginal: vec![0.3, 0.7] },
            ModelSpec::TwoState { n: 6, stay: 0.8 },
            ModelSpec::RandomMarkov { n: 6, values: vec![-1.0, 1.0], seed: 1 },
            ModelSpec::RandomMarkov { n: 6, values: vec![-1.0, 1.0], seed: 2 },
            ModelSpec::RandomMarkov { n: 5, values: vec![-1.0, 0.0, 1.0], seed: 3 },
            gibbs(0.5, BoundarySpec::Plus),
            gibbs(0.8, BoundarySpec::Free),
            ModelSpec::Ising { cols: 2, rows: 3, beta: 0.4, boundary: BoundarySpec::Plus },
            ModelSpec::Ising { cols: 2, rows: 3, beta: 0.4, boundary: BoundarySpec::Minus },
        ],
        functions: vec![
            FunctionSpec::Magnetization,
            FunctionSpec::SingleSpin { slot: 0 },
            FunctionSpec::Majority,
            FunctionSpec::PairProduct { a: 0, b: 1 },
        ],
        t_points: 20,
        p_list: vec![1, 2, 3],
    }
}

/// Everything about one model that does not depend on the function.
struct ModelData {
    model: Box<dyn FieldModel>,
    joint: ExactJoint,
    table: ExactCouplingTable,
    norm_envelope: f64,
    /// `(p, ‖𝒟^(2p)‖)`
    norm_moments: Vec<(u32, f64)>,
    iid: bool,
}

fn prepare(spec: &ModelSpec, p_list: &[u32]) -> Result<ModelData> {
    let model = spec.build()?;
    let joint = ExactJoint::from_model(model.as_ref(), DEFAULT_CAP)?;
    let table = ExactCouplingTable::new(&joint)?;
    let norm_envelope = operator_norm_l2(&table.envelope().entries, NORM_TOL)?;
    let norm_moments = p_list
        .iter()
        .map(|p| Ok((*p, operator_norm_l2(&table.moment(2 * p).entries, NORM_TOL)?)))
        .collect::<Result<_>>()?;
    Ok(ModelData { model, joint, table, norm_envelope, norm_moments, iid: matches!(spec, ModelSpec::Iid { .. }) })
}

/// Runs the battery. Model preparation runs in parallel; rows come out in
/// config order.
pub fn exact_battery(config: &BatteryConfig) -> Result<BoundReport> {
    let prepared: Vec<ModelData> =
        config.models.par_iter().map(|m| prepare(m, &config.p_list)).collect::<Result<_>>()?;
    let chunks: Vec<BoundReport> = prepared
        .par_iter()
        .map(|data| {
            let mut out = BoundReport::new("battery", None);
            for f in &config.functions {
                let g = f.build(data.model.volume())?;
                out.extend(check_function(data, &g, config)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut report = BoundReport::new("battery", None);
    for c in chunks {
        report.extend(c);
    }
    Ok(report)
}

fn check_function(data: &ModelData, f: &LocalFunction, config: &BatteryConfig) -> Result<BoundReport> {
    let model = data.model.as_ref();
    let (mname, fname) = (model.name(), f.name());
    let alphabet = model.alphabet();
    let (q, n) = (data.joint.q(), data.joint.n());
    let g = f.bind(model.volume(), alphabet)?.tabulate(q, n, DEFAULT_CAP)?;
    let delta = f.delta_vector(alphabet, DEFAULT_CAP)?.on_volume(model.volume());
    let norm_delta = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    let mut r = BoundReport::new("battery", None);
    let none = Params::default();

    let dec = martingale_decomposition(&data.joint, &g)?;
    r.push(ReportRow::exact(mname, fname, "decomposition-identity", none, 0.0, dec.identity_error(), DECOMPOSITION_TOL));
    r.push(ReportRow::exact(mname, fname, "martingale-property", none, 0.0, dec.martingale_error(), DECOMPOSITION_TOL));
    r.push(ReportRow::exact(
        mname,
        fname,
        "orthogonality",
        none,
        0.0,
        dec.orthogonality_defect(),
        DECOMPOSITION_TOL,
    ));

    let bb = backbone_check(&dec, &data.table, &delta)?;
    r.push(
        ReportRow::exact(mname, fname, "backbone", none, 0.0, -bb.min_slack, BACKBONE_TOL).with_note(format!(
            "{} pairs checked; tightest at config {} slot {}",
            bb.checked, bb.config, bb.slot
        )),
    );
    r.push(adversarial_control(data, &dec, &delta, mname, fname)?);

    let mean = dec.mean();
    let spread = g
        .iter()
        .zip(data.joint.masses())
        .filter(|(_, m)| **m > 0.0)
        .map(|(v, _)| (v - mean).abs())
        .fold(0.0, f64::max);
    for k in 1..=config.t_points {
        let t = k as f64 / config.t_points as f64 * spread;
        let params = Params { t: Some(t), ..Params::default() };
        let tail = exact_tail(&data.joint, &g, mean, t);
        let bound = exponential_bound(t, data.norm_envelope, norm_delta)?;
        r.push(
            ReportRow::exact(mname, fname, "exponential", params, bound.value, tail, EXACT_TOL)
                .with_note(format!("‖D̄‖ = {:.6}, ‖δg‖ = {:.6}", data.norm_envelope, norm_delta)),
        );
    }

    let var = central_moment(&data.joint, &g, mean, 2);
    for (p, norm) in &data.norm_moments {
        let params = Params { p: Some(*p), ..Params::default() };
        let m = central_moment(&data.joint, &g, mean, 2 * p);
        r.push(ReportRow::exact(mname, fname, "moment", params, moment_bound(*p, *norm, norm_delta)?, m, EXACT_TOL));
        if *p == 1 {
            r.push(ReportRow::exact(mname, fname, "variance", params, variance_bound(*norm, norm_delta), var, EXACT_TOL));
        }
    }
    if data.iid {
        r.push(ReportRow::exact(mname, fname, "variance-iid", none, norm_delta * norm_delta, var, EXACT_TOL));
    }
    Ok(r)
}

/// Lowers the single entry of `D^σ` whose removal most endangers the
/// pathwise inequality and re-runs the check. The row passes when the
/// corrupted check fails, showing the battery can detect a wrong matrix.
fn adversarial_control(
    data: &ModelData,
    dec: &MartingaleDecomposition,
    delta: &[f64],
    mname: &str,
    fname: &str,
) -> Result<ReportRow> {
    let (q, n) = (data.joint.q(), data.joint.n());
    let mut cfg = vec![0u8; n];
    // (margin after removal, past, column)
    let mut best: Option<(f64, Vec<u8>, usize)> = None;
    for (c, m) in data.joint.masses().iter().enumerate() {
        if *m <= 0.0 {
            continue;
        }
        crate::fields::decode_config(c, q, &mut cfg);
        for i in 0..n {
            let row = data
                .table
                .row(&cfg[..i])
                .ok_or_else(|| Error::DegenerateConditioning(format!("past {:?}", &cfg[..i])))?;
            let contrib: Vec<f64> = row.canonical.iter().zip(delta).map(|(a, b)| a * b).collect();
            let (j, top) = contrib.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (j, v)| {
                if *v > acc.1 {
                    (j, *v)
                } else {
                    acc
                }
            });
            let margin = contrib.iter().sum::<f64>() - top - dec.value(i, c).abs();
            if best.as_ref().is_none_or(|b| margin < b.0) {
                best = Some((margin, cfg[..i].to_vec(), j));
            }
        }
    }
    let none = Params::default();
    let Some((_, past, col)) = best else {
        return Ok(ReportRow::exact(mname, fname, "backbone-control", none, 0.0, 0.0, 0.0)
            .with_note("no positive-mass configuration")
            .as_info());
    };
    let corrupted = backbone_check_with(dec, delta, |p, out| match data.table.row(p) {
        Some(r) => {
            out.copy_from_slice(&r.canonical);
            if p == past.as_slice() {
                out[col] = 0.0;
            }
            true
        }
        None => false,
    })?;
    // detected when the corrupted slack drops below −tol
    let mut row = ReportRow::exact(mname, fname, "backbone-control", none, -BACKBONE_TOL, corrupted.min_slack, 0.0);
    row.verdict = if corrupted.holds(BACKBONE_TOL) { Verdict::Fail } else { Verdict::Pass };
    Ok(row.with_note(format!("entry ({}, {col}) zeroed after past {past:?}", past.len())))
}

/// Ten fair ±1 coins with `g = Σσ_i`: the envelope is the identity, so the
/// exponential bound is `2exp(−t²/20)`; each grid point compares it with
/// the binomial tail.
pub fn hoeffding_reduction(t_points: usize) -> Result<BoundReport> {
    let n = 10;
    let volume = Volume::line(n);
    let model = ProductModel::iid(volume.clone(), Alphabet::spins(), vec![0.5, 0.5])?.with_name("iid-fair-n10");
    let joint = ExactJoint::from_model(&model, DEFAULT_CAP)?;
    let table = ExactCouplingTable::new(&joint)?;
    let norm = operator_norm_l2(&table.envelope().entries, NORM_TOL)?;
    let f = LocalFunction::magnetization(volume.sites().to_vec());
    let g = f.bind(&volume, model.alphabet())?.tabulate(2, n, DEFAULT_CAP)?;
    let delta = f.delta_vector(model.alphabet(), DEFAULT_CAP)?.on_volume(&volume);
    let norm_delta = delta.iter().map(|d| d * d).sum::<f64>().sqrt();

    let mut r = BoundReport::new("hoeffding", None);
    let none = Params::default();
    r.push(ReportRow::exact(model.name(), f.name(), "envelope-norm", none, 1.0, norm, 1e-12));
    r.push(ReportRow::exact(model.name(), f.name(), "variation-norm-squared", none, 40.0, norm_delta * norm_delta, 1e-12));
    for k in 1..=t_points {
        let t = k as f64 / t_points as f64 * n as f64;
        let params = Params { t: Some(t), ..Params::default() };
        let bound = exponential_bound(t, norm, norm_delta)?.value;
        let closed = 2.0 * (-t * t / 20.0).exp();
        r.push(ReportRow::exact(model.name(), f.name(), "hoeffding-form", params, 1e-12 * closed, (bound - closed).abs(), 0.0));
        let tail = exact_tail(&joint, &g, 0.0, t);
        r.push(ReportRow::exact(model.name(), f.name(), "binomial-count", params, 0.0, (tail - binomial_tail(n, t)).abs(), 1e-14));
        r.push(ReportRow::exact(model.name(), f.name(), "exponential", params, bound, tail, EXACT_TOL));
    }
    Ok(r)
}

/// `P(|S_n| ≥ t)` for a sum of `n` fair ±1 coins, by counting.
fn binomial_tail(n: usize, t: f64) -> f64 {
    let mut c = 1.0f64;
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            c = c * (n - k + 1) as f64 / k as f64;
        }
        let s = 2.0 * k as f64 - n as f64;
        if s.abs() >= t - EXACT_TOL {
            total += c;
        }
    }
    total / 2f64.powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_tail_by_hand() {
        // P(|S_4| ≥ 4) = 2/16, P(|S_4| ≥ 2) = 10/16
        assert!((binomial_tail(4, 4.0) - 0.125).abs() < 1e-15);
        assert!((binomial_tail(4, 2.0) - 0.625).abs() < 1e-15);
        assert_eq!(binomial_tail(4, 0.0), 1.0);
    }

    #[test]
    fn small_battery_passes_and_control_detects() {
        let config = BatteryConfig {
            models: vec![
                ModelSpec::Iid { n: 4, marginal: vec![0.5, 0.5] },
                ModelSpec::Ising { cols: 2, rows: 2, beta: 0.4, boundary: BoundarySpec::Plus },
            ],
            functions: vec![FunctionSpec::Magnetization, FunctionSpec::SingleSpin { slot: 1 }],
            t_points: 5,
            p_list: vec![1, 2],
        };
        let r = exact_battery(&config).unwrap();
        let t = r.tally();
        assert_eq!(t.fail, 0, "{}", r.summary());
        assert!(r.rows.iter().any(|x| x.bound == "variance-iid"));
        let controls: Vec<_> = r.rows.iter().filter(|x| x.bound == "backbone-control").collect();
        assert_eq!(controls.len(), 4);
        assert!(controls.iter().all(|x| x.verdict == Verdict::Pass));
    }

    #[test]
    fn hoeffding_numbers() {
        let r = hoeffding_reduction(20).unwrap();
        assert_eq!(r.tally().fail, 0, "{}", r.summary());
        assert_eq!(r.rows.len(), 62);
    }
}
