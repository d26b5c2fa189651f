//! Low-temperature Ising experiment. Nothing here is certified: the coupling
//! row, its decay profile and the stretched-exponential tail constants are
//! all estimated, and the tail constants are checked on held-out chains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{extract_stretched_constant, stretched_bound, TailPoint};
use crate::coupling::{coupling_row_mc_heat_bath, McCouplingRow};
use crate::error::{Error, Result};
use crate::fields::{Alphabet, LocalFunction, DEFAULT_CAP};
use crate::lattice::{site_distance, Volume};
use crate::models::{glauber_sample, Boundary, FieldModel, IsingModel};
use crate::rng;
use crate::stats::{self, spearman, RankTest};

use super::config::LowtempConfig;
use super::report::{BoundReport, Params, Provenance, ReportRow, Verdict};
use super::tail::{chain_values, tail_from_values, EmpiricalTail};

/// Significance level of the rank test for decay.
pub const DECAY_ALPHA: f64 = 0.01;

/// Least-squares fit of `ln ψ(n) = ln C − c n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub prefactor: f64,
    pub rate: f64,
    pub points: usize,
}

/// Everything the experiment estimated, for the report and for plotting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailProfile {
    pub beta: f64,
    pub x: usize,
    pub row: McCouplingRow,
    /// `(distance, D̂_{x,y})` for every `y ≠ x`.
    pub distances: Vec<(u32, f64)>,
    /// `ψ(n)`: the largest `D̂_{x,y}` at distance `n`, indexed from 0.
    pub psi: Vec<f64>,
    pub rank_test: RankTest,
    pub decay_fit: Option<DecayFit>,
    pub norm_delta: f64,
    /// `P(ℓ_x ≥ j)` for `j = 1, 2, …` on split A.
    pub ell_tail: Vec<f64>,
    pub rho: f64,
    pub c: f64,
    /// `(ϱ, ĉ, bound at the largest t)` for every candidate exponent.
    pub candidates: Vec<(f64, f64, f64)>,
    pub split_a: EmpiricalTail,
    pub split_b: EmpiricalTail,
}

/// Fits `ψ` on the distances whose estimate is distinguishable from zero
/// (positive lower confidence end). `None` with fewer than two such points.
pub fn fit_decay(psi: &[f64], psi_lower: &[f64]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = psi
        .iter()
        .zip(psi_lower)
        .enumerate()
        .skip(1)
        .filter(|(_, (v, lo))| **lo > 0.0 && **v > 0.0)
        .map(|(n, (v, _))| (n as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(DecayFit { prefactor: (my - slope * mx).exp(), rate: -slope, points: pts.len() })
}

/// Proxy for `ℓ_x`: 0 when `x` is plus, otherwise one more than the
/// sup-norm diameter of the nearest-neighbour minus cluster containing `x`.
pub fn minus_cluster_extent(volume: &Volume, config: &[u8], x: usize) -> u32 {
    if config[x] != 0 {
        return 0;
    }
    let mut seen = vec![false; config.len()];
    let mut stack = vec![x];
    seen[x] = true;
    let origin = volume.site(x);
    let mut extent = 0;
    let mut members = vec![origin];
    while let Some(s) = stack.pop() {
        for nb in volume.site(s).neighbors() {
            if let Some(t) = volume.slot(&nb) {
                if !seen[t] && config[t] == 0 {
                    seen[t] = true;
                    stack.push(t);
                    members.push(nb);
                }
            }
        }
    }
    for a in &members {
        for b in &members {
            extent = extent.max(site_distance(a, b));
        }
    }
    extent + 1
}

/// `(magnetization, ℓ_x proxy)` from `count` independent chains.
fn sample_pairs(model: &IsingModel, x: usize, count: usize, burn_in: usize, seed: u64) -> Vec<(f64, u32)> {
    let v = model.volume();
    let plus = vec![1u8; v.len()];
    (0..count)
        .into_par_iter()
        .map(|r| {
            let s = glauber_sample(model, &plus, burn_in, seed, r as u64);
            let m = s.iter().map(|a| if *a == 1 { 1.0 } else { -1.0 }).sum::<f64>();
            (m, minus_cluster_extent(v, &s, x))
        })
        .collect()
}

pub struct LowtempOutcome {
    pub profile: TailProfile,
    pub report: BoundReport,
}

pub fn lowtemp_experiment(config: &LowtempConfig, seed: u64) -> Result<LowtempOutcome> {
    let model = IsingModel::rectangle(config.cols, config.rows, config.beta, Boundary::plus())?
        .with_name(format!("ising-{}x{}-beta{}-plus", config.cols, config.rows, config.beta));
    let v = model.volume().clone();
    if config.x >= v.len() {
        return Err(Error::InvalidParameter(format!("slot {} outside the volume", config.x)));
    }
    let (mname, fname) = (model.name().to_string(), "magnetization".to_string());
    let mut report = BoundReport::new("lowtemp", Some(seed));
    report.note(format!("β = {} is recorded, not certified to lie in the low-temperature regime", config.beta));
    let none = Params::default();

    // coupling row and its decay
    let row = coupling_row_mc_heat_bath(
        &model,
        config.x,
        config.sweeps,
        config.burn_in,
        config.runs,
        rng::child_seed(seed, "lowtemp-row"),
    )?;
    let origin = v.site(config.x);
    let distances: Vec<(u32, f64)> = (0..v.len())
        .filter(|y| *y != config.x)
        .map(|y| (site_distance(&origin, &v.site(y)), row.estimate[y]))
        .collect();
    let far = distances.iter().map(|d| d.0).max().unwrap_or(0) as usize;
    let mut psi = vec![0.0; far + 1];
    let mut psi_lower = vec![0.0; far + 1];
    psi[0] = 1.0;
    psi_lower[0] = 1.0;
    for y in (0..v.len()).filter(|y| *y != config.x) {
        let n = site_distance(&origin, &v.site(y)) as usize;
        psi[n] = f64::max(psi[n], row.estimate[y]);
        psi_lower[n] = f64::max(psi_lower[n], row.lower[y]);
    }
    let xs: Vec<f64> = distances.iter().map(|d| d.0 as f64).collect();
    let ys: Vec<f64> = distances.iter().map(|d| d.1).collect();
    let rank_test = spearman(&xs, &ys);
    let mut rank_row = ReportRow::exact(&mname, "coupling-row", "decay-rank-test", none, DECAY_ALPHA, rank_test.p_negative, 0.0)
        .with_provenance(Provenance::Mc { samples: config.runs, half_width: row.half_width.iter().copied().fold(0.0, f64::max) })
        .with_note(format!("Spearman ρ = {:.4} over {} slots", rank_test.rho, rank_test.n));
    if !(rank_test.rho < 0.0 && rank_test.p_negative < DECAY_ALPHA) {
        rank_row.verdict = Verdict::Fail;
    }
    report.push(rank_row);
    let decay_fit = fit_decay(&psi, &psi_lower);
    match decay_fit {
        Some(f) => report.push(
            ReportRow::exact(&mname, "coupling-row", "decay-fit", none, f.rate, f.rate, 0.0)
                .as_info()
                .with_provenance(Provenance::Fitted)
                .with_note(format!("ψ(n) ≈ {:.4} e^(−{:.4} n) from {} distances; empirical", f.prefactor, f.rate, f.points)),
        ),
        None => report.note("decay fit degenerate: fewer than two distances with a positive lower end"),
    }

    // magnetization tail, fitted on split A and checked on split B
    let f = LocalFunction::magnetization(v.sites().to_vec());
    let g = f.bind(&v, &Alphabet::spins())?;
    let delta = f.delta_vector(&Alphabet::spins(), DEFAULT_CAP)?.on_volume(&v);
    let norm_delta = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    let t_grid: Vec<f64> = config.t_grid.iter().map(|k| k * norm_delta).collect();
    let n = config.tail_samples;
    let mean_batch = chain_values(&model, &g, 1, n, config.burn_in, rng::child_seed(seed, "lowtemp-mean"));
    let mean = stats::mean(&mean_batch);
    let se = (stats::variance(&mean_batch) / n as f64).sqrt();
    let a = sample_pairs(&model, config.x, n, config.burn_in, rng::child_seed(seed, "lowtemp-a"));
    let b: Vec<f64> = chain_values(&model, &g, 1, n, config.burn_in, rng::child_seed(seed, "lowtemp-b"));
    let a_values: Vec<f64> = a.iter().map(|p| p.0).collect();
    let range = Some((-(v.len() as f64), v.len() as f64));
    let split_a = tail_from_values(&a_values, mean, se, &t_grid, range);
    let split_b = tail_from_values(&b, mean, se, &t_grid, range);
    report.note(format!(
        "mean from an independent batch: {mean:.6} ± {se:.2e}; thresholds shifted by {:.3e}",
        split_a.shift
    ));

    let max_ell = a.iter().map(|p| p.1).max().unwrap_or(0);
    let ell_tail: Vec<f64> =
        (1..=max_ell).map(|j| a.iter().filter(|p| p.1 >= j).count() as f64 / n as f64).collect();
    let ells: Vec<f64> = a.iter().map(|p| p.1 as f64).collect();
    let ell_mean = stats::mean(&ells);
    let ell_hw = stats::Z99 * (stats::variance(&ells) / n as f64).sqrt();
    report.push(
        ReportRow::exact(&mname, "ell-proxy", "ell-mean", none, ell_mean, ell_mean, 0.0)
            .as_info()
            .with_provenance(Provenance::Mc { samples: n, half_width: ell_hw })
            .with_note(format!(
                "P(ℓ ≥ j) for j = 1.. : {}",
                ell_tail.iter().map(|p| format!("{p:.3e}")).collect::<Vec<_>>().join(" ")
            )),
    );

    let points: Vec<TailPoint> =
        split_a.estimates.iter().map(|e| TailPoint { t: e.t, tail: e.upper, norm_delta }).collect();
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let mut candidates = Vec::new();
    for rho in &config.rho_grid {
        let c = extract_stretched_constant(&points, *rho);
        candidates.push((*rho, c, stretched_bound(t_max, *rho, c, norm_delta)?));
    }
    let &(rho, c, _) = candidates
        .iter()
        .min_by(|x, y| x.2.total_cmp(&y.2).then(x.0.total_cmp(&y.0)))
        .ok_or_else(|| Error::InvalidParameter("empty ϱ grid".into()))?;
    if !c.is_finite() {
        report.note("stretched fit degenerate: no grid point constrains the constant");
    }
    for (r, cc, at_max) in &candidates {
        report.push(
            ReportRow::exact(&mname, &fname, "stretched-fit", Params { rho: Some(*r), ..none }, *cc, *cc, 0.0)
                .as_info()
                .with_provenance(Provenance::Fitted)
                .with_note(format!("bound at the largest t: {at_max:.3e}; fitted on split A upper ends")),
        );
    }
    for e in &split_b.estimates {
        let params = Params { t: Some(e.t), rho: Some(rho), theta: Some(c), ..none };
        let bound = stretched_bound(e.t, rho, c, norm_delta)?;
        report.push(
            ReportRow::mc(&mname, &fname, "stretched-held-out", params, bound, (e.estimate, e.lower, e.upper), e.samples, 0.0)
                .with_note("constants fitted on split A; empirical"),
        );
    }

    let profile = TailProfile {
        beta: config.beta,
        x: config.x,
        row,
        distances,
        psi,
        rank_test,
        decay_fit,
        norm_delta,
        ell_tail,
        rho,
        c,
        candidates,
        split_a,
        split_b,
    };
    Ok(LowtempOutcome { profile, report })
}
