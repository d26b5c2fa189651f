//! Single-purpose experiments: a Monte Carlo tail, a coupling matrix and a
//! transport problem, each turned into a report plus raw artifacts.

use crate::bounds::{exponential_bound, operator_norm_l2, NORM_TOL};
use crate::coupling::{
    coupling_row_mc_heat_bath, random_lipschitz_family, sequential_weights, verify_sardine, CouplingMatrix,
    ExactCouplingTable, McCouplingRow, SardineReport, TransportProblem,
};
use crate::error::{Error, Result};
use crate::fields::DEFAULT_CAP;
use crate::models::{ExactJoint, IsingModel};
use crate::rng;

use super::config::{CouplingMatrixConfig, MatrixMode, ModelSpec, TailConfig, TransportConfig};
use super::report::{BoundReport, Params, ReportRow, Verdict};
use super::tail::{empirical_tail, exact_tail, EmpiricalTail, TailSamples};

pub struct TailOutcome {
    pub report: BoundReport,
    pub tail: EmpiricalTail,
    pub samples: TailSamples,
    /// Exact tail at each grid point when the model is enumerable.
    pub exact: Option<Vec<f64>>,
}

/// Simulated tail of one function. When the model can be enumerated the
/// exact tail and the exponential bound with the exact envelope are added.
pub fn tail_experiment(config: &TailConfig, seed: u64) -> Result<TailOutcome> {
    let model = config.model.build()?;
    let f = config.function.build(model.volume())?;
    let alphabet = model.alphabet();
    let g = f.bind(model.volume(), alphabet)?;
    let delta = f.delta_vector(alphabet, DEFAULT_CAP)?.on_volume(model.volume());
    let norm_delta = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    let t_grid: Vec<f64> = config.t_grid.iter().map(|k| k * norm_delta).collect();
    let start = (alphabet.len() - 1) as u8;
    let exact = match ExactJoint::from_model(model.as_ref(), DEFAULT_CAP) {
        Ok(joint) => {
            let values = g.tabulate(joint.q(), joint.n(), DEFAULT_CAP)?;
            Some((joint, values))
        }
        Err(Error::Capacity { .. }) => None,
        Err(e) => return Err(e),
    };
    // extremes over positive-mass configurations bound every deviation
    let range = exact.as_ref().map(|(joint, values)| {
        values
            .iter()
            .zip(joint.masses())
            .filter(|(_, m)| **m > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)))
    });
    let (tail, samples) = empirical_tail(
        model.as_ref(),
        &g,
        start,
        &t_grid,
        range,
        config.samples,
        config.burn_in,
        rng::child_seed(seed, "tail"),
    )?;
    let (mname, fname) = (model.name(), f.name());
    let mut report = BoundReport::new("tail", Some(seed));
    report.note(format!(
        "mean estimated on an independent batch: {:.6} ± {:.2e}; thresholds shifted by {:.3e}",
        tail.mean, tail.mean_se, tail.shift
    ));

    let mut exact_tails = None;
    match exact {
        Some((joint, values)) => {
            let table = ExactCouplingTable::new(&joint)?;
            let norm = operator_norm_l2(&table.envelope().entries, NORM_TOL)?;
            let mean = joint.expectation(&values);
            let mut ex = Vec::new();
            for e in &tail.estimates {
                let params = Params { t: Some(e.t), ..Params::default() };
                let p = exact_tail(&joint, &values, mean, e.t);
                ex.push(p);
                let bound = exponential_bound(e.t, norm, norm_delta)?.value;
                report.push(ReportRow::mc(mname, fname, "exponential", params, bound, (e.estimate, e.lower, e.upper), e.samples, 0.0));
                let inside = e.lower <= p && p <= e.upper;
                let mut row = ReportRow::exact(mname, fname, "exact-tail", params, p, p, 0.0)
                    .as_info()
                    .with_note(format!("exact value {} the simulated interval", if inside { "inside" } else { "outside" }));
                row.observed = e.estimate;
                report.push(row);
            }
            exact_tails = Some(ex);
        }
        None => {
            report.note("model too large to enumerate: no exact envelope, tail reported as data");
            for e in &tail.estimates {
                let params = Params { t: Some(e.t), ..Params::default() };
                report.push(
                    ReportRow::mc(mname, fname, "empirical-tail", params, 1.0, (e.estimate, e.lower, e.upper), e.samples, 0.0)
                        .as_info(),
                );
            }
        }
    }
    Ok(TailOutcome { report, tail, samples, exact: exact_tails })
}

pub struct MatrixOutcome {
    pub report: BoundReport,
    /// Named exact matrices: the envelope and the requested moments.
    pub matrices: Vec<(String, CouplingMatrix)>,
    pub row: Option<McCouplingRow>,
}

/// Exact envelope and moment matrices, or one Monte Carlo row for an Ising
/// model too large to enumerate.
pub fn coupling_matrix_experiment(config: &CouplingMatrixConfig, seed: Option<u64>) -> Result<MatrixOutcome> {
    let mut report = BoundReport::new("coupling-matrix", seed);
    let none = Params::default();
    match config.mode {
        MatrixMode::Exact => {
            let model = config.model.build()?;
            let joint = ExactJoint::from_model(model.as_ref(), DEFAULT_CAP)?;
            let table = ExactCouplingTable::new(&joint)?;
            let mut matrices = vec![("envelope".to_string(), table.envelope())];
            for p in &config.p_list {
                matrices.push((format!("moment{}", 2 * p), table.moment(2 * p)));
            }
            for (name, m) in &matrices {
                let norm = operator_norm_l2(&m.entries, NORM_TOL)?;
                // entries are disagreement probabilities, so each lies in [0, 1]
                let worst = m.entries.as_slice().iter().fold(0.0f64, |a, v| a.max(v - 1.0).max(-v));
                report.push(ReportRow::exact(model.name(), name, "entries-in-unit-interval", none, 0.0, worst, 1e-12));
                report.push(ReportRow::exact(model.name(), name, "operator-norm", none, norm, norm, 0.0).as_info());
            }
            Ok(MatrixOutcome { report, matrices, row: None })
        }
        MatrixMode::Mc => {
            let seed = seed.ok_or_else(|| Error::Config("a seed is required in Monte Carlo mode".into()))?;
            let ModelSpec::Ising { cols, rows, beta, boundary } = &config.model else {
                return Err(Error::Config("Monte Carlo coupling rows need an Ising model".into()));
            };
            let model = IsingModel::rectangle(*cols, *rows, *beta, boundary.build())?;
            let row = coupling_row_mc_heat_bath(
                &model,
                config.x,
                config.sweeps,
                config.burn_in,
                config.runs,
                rng::child_seed(seed, "coupling-row"),
            )?;
            let name = format!("ising-{cols}x{rows}-beta{beta}");
            for (y, e) in row.estimate.iter().enumerate() {
                let mut r = ReportRow::mc(&name, &format!("row{}", config.x), "coupling-entry", none, 1.0, (*e, row.lower[y], row.upper[y]), row.runs, 0.0)
                    .with_note(format!("column {y}"));
                r.verdict = Verdict::Info;
                report.push(r);
            }
            Ok(MatrixOutcome { report, matrices: Vec::new(), row: Some(row) })
        }
    }
}

pub struct TransportOutcome {
    pub report: BoundReport,
    pub sardine: SardineReport,
    pub solution: crate::coupling::TransportSolution,
}

/// Optimal coupling of two exact laws under the weighted disagreement cost,
/// with the mean-difference estimate checked on a random Lipschitz family.
pub fn transport_experiment(config: &TransportConfig, seed: u64) -> Result<TransportOutcome> {
    let (mp, mq) = (config.p.build()?, config.q.build()?);
    let (p, q) = (ExactJoint::from_model(mp.as_ref(), DEFAULT_CAP)?, ExactJoint::from_model(mq.as_ref(), DEFAULT_CAP)?);
    let phi = config.phi.clone().unwrap_or_else(|| vec![1.0; p.n()]);
    let problem = TransportProblem::new(p, q, phi)?;
    let rho = sequential_weights(&problem, DEFAULT_CAP)?;
    let mut g = rng::stream(rng::child_seed(seed, "transport"), 0);
    let family = random_lipschitz_family(problem.p.q(), problem.p.n(), &problem.phi, config.family, &mut g);
    let tol = 1e-9;
    let sardine = verify_sardine(&problem, &rho, &family, tol)?;
    let (_, _, solution) = crate::coupling::kr_optimal_coupling(&problem)?;

    let name = format!("{} vs {}", mp.name(), mq.name());
    let none = Params::default();
    let mut report = BoundReport::new("transport", Some(seed));
    report.push(ReportRow::exact(&name, "coupling", "duality-gap", none, 0.0, sardine.duality_gap, tol));
    report.push(ReportRow::exact(&name, "coupling", "coupled-cost", none, sardine.weighted_rho, sardine.coupled_cost, tol));
    report.push(ReportRow::exact(&name, "family", "weak-duality", none, sardine.optimal_cost, sardine.sup_mean_difference, tol));
    report.push(
        ReportRow::exact(&name, "family", "mean-difference", none, 0.0, sardine.mean_violations.len() as f64, 0.0)
            .with_note(format!("{} functions checked", sardine.functions_checked)),
    );
    if !sardine.premise_violations.is_empty() {
        report.note(format!("{} premise violations left out of the duality check", sardine.premise_violations.len()));
    }
    Ok(TransportOutcome { report, sardine, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::config::{BoundarySpec, FunctionSpec};

    #[test]
    fn small_tail_has_exact_comparison() {
        let config = TailConfig {
            model: ModelSpec::Ising { cols: 2, rows: 2, beta: 0.3, boundary: BoundarySpec::Plus },
            function: FunctionSpec::Magnetization,
            t_grid: vec![0.25, 0.5, 1.0],
            samples: 4000,
            burn_in: 20,
        };
        let out = tail_experiment(&config, 1).unwrap();
        assert_eq!(out.exact.as_ref().unwrap().len(), 3);
        assert_eq!(out.report.tally().fail, 0);
    }

    #[test]
    fn exact_matrices_and_mc_row() {
        let mut config = CouplingMatrixConfig {
            model: ModelSpec::Ising { cols: 2, rows: 2, beta: 0.3, boundary: BoundarySpec::Plus },
            mode: MatrixMode::Exact,
            x: 0,
            runs: 200,
            sweeps: 5,
            burn_in: 5,
            p_list: vec![1],
        };
        let out = coupling_matrix_experiment(&config, None).unwrap();
        assert_eq!(out.matrices.len(), 2);
        assert_eq!(out.report.tally().fail, 0);
        config.mode = MatrixMode::Mc;
        assert!(coupling_matrix_experiment(&config, None).is_err());
        assert!(coupling_matrix_experiment(&config, Some(2)).unwrap().row.is_some());
    }

    #[test]
    fn transport_between_boundaries() {
        let config = TransportConfig {
            p: ModelSpec::Ising { cols: 2, rows: 2, beta: 0.4, boundary: BoundarySpec::Plus },
            q: ModelSpec::Ising { cols: 2, rows: 2, beta: 0.4, boundary: BoundarySpec::Minus },
            phi: None,
            family: 20,
        };
        let out = transport_experiment(&config, 3).unwrap();
        assert_eq!(out.report.tally().fail, 0, "{}", out.report.summary());
        assert!(out.sardine.passed());
    }
}
