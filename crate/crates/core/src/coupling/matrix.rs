//! Exact coupling matrices `D^σ`, their envelope `D̄` and moment matrices
//! `𝒟^(p)`, computed from an enumerated joint law.
//!
//! Row `i` of `D^σ` depends on the past `σ_{<i}` only. For each pair of
//! symbols `a ≠ b` at `i` the two conditional futures are coupled maximally
//! with independent residuals; the entry at `j > i` is the probability that
//! the legs differ at `j`, maximised over the pair.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{decode_config, encode_config};
use crate::linalg::Matrix;
use crate::models::{ExactJoint, PrefixMass};

/// Largest `n · q^n` for which all rows are tabulated.
pub const TABLE_CAP: u64 = 1 << 24;

/// One row of `D^σ` with its envelopes: `lower` is the total variation of
/// the coordinate marginals, `upper` that of the full futures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub canonical: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Row `past.len()` of `D^σ` for any `σ` extending `past`.
pub fn coupling_row_exact(joint: &ExactJoint, past: &[u8]) -> Result<CouplingRow> {
    let (q, n) = (joint.q(), joint.n());
    let i = past.len();
    if i >= n {
        return Err(Error::InvalidParameter(format!("row {i} outside a volume of {n} sites")));
    }
    let masses = joint.masses();
    let pm: f64 = masses[joint.block(past)].iter().sum();
    if pm <= 0.0 {
        return Err(Error::DegenerateConditioning(format!("past {past:?}")));
    }
    let m = n - i - 1;
    let w = q.pow(m as u32);
    let mut ext = past.to_vec();
    ext.push(0);
    let futures: Vec<Option<Vec<f64>>> = (0..q)
        .map(|a| {
            ext[i] = a as u8;
            let block = &masses[joint.block(&ext)];
            let z: f64 = block.iter().sum();
            (z > 0.0).then(|| block.iter().map(|x| x / z).collect())
        })
        .collect();

    let mut row = CouplingRow { canonical: vec![0.0; n], lower: vec![0.0; n], upper: vec![0.0; n] };
    row.canonical[i] = 1.0;
    row.lower[i] = 1.0;
    row.upper[i] = 1.0;
    let mut m1 = vec![0.0; q];
    let mut m2 = vec![0.0; q];
    let mut fa = vec![0.0; q];
    let mut fb = vec![0.0; q];
    for a in 0..q {
        for b in (a + 1)..q {
            let (Some(f1), Some(f2)) = (&futures[a], &futures[b]) else { continue };
            let mut tv = 0.0;
            for (x, y) in f1.iter().zip(f2) {
                tv += (x - y).max(0.0);
            }
            for k in 0..m {
                let stride = q.pow((m - 1 - k) as u32);
                m1.iter_mut().chain(m2.iter_mut()).chain(fa.iter_mut()).chain(fb.iter_mut()).for_each(|v| *v = 0.0);
                for t in 0..w {
                    let c = (t / stride) % q;
                    let d = f1[t] - f2[t];
                    if d > 0.0 {
                        m1[c] += d;
                    } else {
                        m2[c] -= d;
                    }
                    fa[c] += f1[t];
                    fb[c] += f2[t];
                }
                let j = i + 1 + k;
                let canonical = if tv > 0.0 {
                    let overlap: f64 = m1.iter().zip(&m2).map(|(x, y)| x * y).sum();
                    ((tv * tv - overlap) / tv).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let lower = 0.5 * fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).sum::<f64>();
                row.canonical[j] = row.canonical[j].max(canonical);
                row.lower[j] = row.lower[j].max(lower.min(1.0));
                row.upper[j] = row.upper[j].max(tv.min(1.0));
            }
        }
    }
    Ok(row)
}

/// Rows of `D^σ` for every positive-mass past.
#[derive(Clone, Debug)]
pub struct ExactCouplingTable {
    q: usize,
    n: usize,
    rows: Vec<Vec<Option<CouplingRow>>>,
    prefix: PrefixMass,
}

impl ExactCouplingTable {
    pub fn new(joint: &ExactJoint) -> Result<Self> {
        let (q, n) = (joint.q(), joint.n());
        let needed = (n as u128) * (q as u128).pow(n as u32);
        if needed > TABLE_CAP as u128 {
            return Err(Error::Capacity { needed, cap: TABLE_CAP });
        }
        let prefix = joint.prefix_masses();
        let mut rows = Vec::with_capacity(n);
        let mut past = Vec::new();
        for i in 0..n {
            past.resize(i, 0);
            let level = prefix.level(i);
            let mut level_rows = Vec::with_capacity(level.len());
            for (idx, mass) in level.iter().enumerate() {
                if *mass <= 0.0 {
                    level_rows.push(None);
                    continue;
                }
                decode_config(idx, q, &mut past);
                level_rows.push(Some(coupling_row_exact(joint, &past)?));
            }
            rows.push(level_rows);
        }
        Ok(ExactCouplingTable { q, n, rows, prefix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prefix_masses(&self) -> &PrefixMass {
        &self.prefix
    }

    /// The row for `past`, `None` if the past has zero mass.
    pub fn row(&self, past: &[u8]) -> Option<&CouplingRow> {
        self.rows[past.len()][encode_config(past, self.q)].as_ref()
    }

    /// `D^σ` for a full configuration.
    pub fn realization(&self, sigma: &[u8]) -> Result<CouplingMatrix> {
        let mut d = Matrix::zeros(self.n, self.n);
        let mut lo = Matrix::zeros(self.n, self.n);
        let mut hi = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let row = self
                .row(&sigma[..i])
                .ok_or_else(|| Error::DegenerateConditioning(format!("past {:?}", &sigma[..i])))?;
            d.row_mut(i).copy_from_slice(&row.canonical);
            lo.row_mut(i).copy_from_slice(&row.lower);
            hi.row_mut(i).copy_from_slice(&row.upper);
        }
        Ok(CouplingMatrix::exact(MatrixKind::Realization, d, lo, hi))
    }

    /// `D̄`, the entrywise sup over positive-mass pasts.
    pub fn envelope(&self) -> CouplingMatrix {
        let mut d = Matrix::zeros(self.n, self.n);
        let mut lo = Matrix::zeros(self.n, self.n);
        let mut hi = Matrix::zeros(self.n, self.n);
        for (i, level) in self.rows.iter().enumerate() {
            for row in level.iter().flatten() {
                for j in 0..self.n {
                    d[(i, j)] = d[(i, j)].max(row.canonical[j]);
                    lo[(i, j)] = lo[(i, j)].max(row.lower[j]);
                    hi[(i, j)] = hi[(i, j)].max(row.upper[j]);
                }
            }
        }
        CouplingMatrix::exact(MatrixKind::Envelope, d, lo, hi)
    }

    /// `𝒟^(p)_{ij} = E[(D^σ_{ij})^p]^{1/p}`.
    pub fn moment(&self, p: u32) -> CouplingMatrix {
        let pe = p as f64;
        let acc = |pick: fn(&CouplingRow) -> &Vec<f64>| {
            let mut d = Matrix::zeros(self.n, self.n);
            for (i, level) in self.rows.iter().enumerate() {
                let masses = self.prefix.level(i);
                for (idx, row) in level.iter().enumerate() {
                    let Some(row) = row else { continue };
                    for (j, v) in pick(row).iter().enumerate() {
                        if *v > 0.0 {
                            d[(i, j)] += masses[idx] * v.powf(pe);
                        }
                    }
                }
            }
            d.map(|x| x.powf(1.0 / pe).min(1.0))
        };
        let d = acc(|r| &r.canonical);
        let lo = acc(|r| &r.lower);
        let hi = acc(|r| &r.upper);
        CouplingMatrix::exact(MatrixKind::Moment(p), d, lo, hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Realization,
    Envelope,
    Moment(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimation {
    Exact,
    MonteCarlo { runs: usize },
}

/// A coupling matrix with its provenance. Exact matrices carry the
/// coordinate-TV and full-TV envelopes; Monte Carlo ones carry 99%
/// confidence bounds and half-widths.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub kind: MatrixKind,
    pub entries: Matrix,
    pub lower: Matrix,
    pub upper: Matrix,
    pub half_width: Matrix,
    pub estimation: Estimation,
}

impl CouplingMatrix {
    pub fn exact(kind: MatrixKind, entries: Matrix, lower: Matrix, upper: Matrix) -> Self {
        let hw = Matrix::zeros(entries.rows(), entries.cols());
        CouplingMatrix { kind, entries, lower, upper, half_width: hw, estimation: Estimation::Exact }
    }

    /// CSV rows `i,j,value,lower,upper,half_width` for nonzero entries.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "value", "lower", "upper", "half_width"])?;
        for i in 0..self.entries.rows() {
            for j in 0..self.entries.cols() {
                if self.entries[(i, j)] == 0.0 && self.upper[(i, j)] == 0.0 {
                    continue;
                }
                w.write_record([
                    i.to_string(),
                    j.to_string(),
                    format!("{:.12e}", self.entries[(i, j)]),
                    format!("{:.12e}", self.lower[(i, j)]),
                    format!("{:.12e}", self.upper[(i, j)]),
                    format!("{:.12e}", self.half_width[(i, j)]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Alphabet, DEFAULT_CAP};
    use crate::lattice::Volume;
    use crate::models::{Boundary, IsingModel, MarkovChain, ProductModel};
    use crate::rng;

    fn table(model: &dyn crate::models::FieldModel) -> ExactCouplingTable {
        ExactCouplingTable::new(&ExactJoint::from_model(model, DEFAULT_CAP).unwrap()).unwrap()
    }

    #[test]
    fn iid_rows_are_identity_rows() {
        let m = ProductModel::iid(Volume::line(5), Alphabet::spins(), vec![0.3, 0.7]).unwrap();
        let t = table(&m);
        let id = Matrix::identity(5);
        assert!(t.envelope().entries.max_abs_diff(&id) < 1e-15);
        for p in [1, 2, 4, 6] {
            assert!(t.moment(p).entries.max_abs_diff(&id) < 1e-15);
        }
        assert!(t.realization(&[1, 0, 1, 1, 0]).unwrap().entries.max_abs_diff(&id) < 1e-15);
    }

    #[test]
    fn two_state_chain_first_off_diagonal() {
        for stay in [0.1, 0.35, 0.6, 0.9] {
            let m = MarkovChain::two_state(5, stay).unwrap();
            let t = table(&m);
            let mut r = rng::stream(2, 0);
            use rand::Rng as _;
            for _ in 0..10 {
                let sigma: Vec<u8> = (0..5).map(|_| r.gen_range(0..2)).collect();
                let d = t.realization(&sigma).unwrap().entries;
                for i in 0..5 {
                    assert_eq!(d[(i, i)], 1.0);
                    if i + 1 < 5 {
                        assert!((d[(i, i + 1)] - (2.0 * stay - 1.0).abs()).abs() < 1e-12);
                    }
                    for j in 0..i {
                        assert_eq!(d[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    /// Independent oracle: enumerate futures and residual products directly.
    fn brute_force_entry(joint: &ExactJoint, past: &[u8], j: usize) -> f64 {
        let (q, n) = (joint.q(), joint.n());
        let i = past.len();
        let m = n - i - 1;
        let mut best = 0.0f64;
        for a in 0..q as u8 {
            for b in 0..q as u8 {
                if a == b {
                    continue;
                }
                let mut pa = past.to_vec();
                pa.push(a);
                let mut pb = past.to_vec();
                pb.push(b);
                let (Ok(fa), Ok(fb)) = (joint.conditional_future(&pa), joint.conditional_future(&pb)) else {
                    continue;
                };
                let (fa, fb) = (fa.masses().to_vec(), fb.masses().to_vec());
                let tv: f64 = fa.iter().zip(&fb).map(|(x, y)| (x - y).max(0.0)).sum();
                if tv == 0.0 {
                    continue;
                }
                let mut cu = vec![0u8; m];
                let mut cv = vec![0u8; m];
                let mut dis = 0.0;
                for u in 0..fa.len() {
                    for v in 0..fb.len() {
                        decode_config(u, q, &mut cu);
                        decode_config(v, q, &mut cv);
                        if cu[j - i - 1] != cv[j - i - 1] {
                            dis += (fa[u] - fb[u]).max(0.0) * (fb[v] - fa[v]).max(0.0) / tv;
                        }
                    }
                }
                best = best.max(dis);
            }
        }
        best
    }

    #[test]
    fn canonical_entries_match_brute_force_and_envelopes() {
        let models: Vec<Box<dyn crate::models::FieldModel>> = vec![
            Box::new(IsingModel::rectangle(2, 3, 0.5, Boundary::plus()).unwrap()),
            Box::new(
                MarkovChain::random(Alphabet::numeric(&[-1.0, 0.0, 1.0]).unwrap(), 4, &mut rng::stream(3, 0))
                    .unwrap(),
            ),
        ];
        for m in models {
            let joint = ExactJoint::from_model(m.as_ref(), DEFAULT_CAP).unwrap();
            let t = ExactCouplingTable::new(&joint).unwrap();
            let n = joint.n();
            let q = joint.q();
            for i in 0..n {
                let mut past = vec![0u8; i];
                for idx in 0..q.pow(i as u32) {
                    decode_config(idx, q, &mut past);
                    let row = t.row(&past).unwrap();
                    for j in (i + 1)..n {
                        let oracle = brute_force_entry(&joint, &past, j);
                        assert!((row.canonical[j] - oracle).abs() < 1e-12);
                        assert!(row.lower[j] <= row.canonical[j] + 1e-12);
                        assert!(row.canonical[j] <= row.upper[j] + 1e-12);
                    }
                }
            }
            let env = t.envelope();
            for p in [1u32, 2, 4, 6] {
                let mp = t.moment(p);
                let mq = t.moment(p + 1);
                for i in 0..n {
                    for j in 0..n {
                        assert!(mp.entries[(i, j)] <= env.entries[(i, j)] + 1e-12);
                        assert!(mp.entries[(i, j)] <= mq.entries[(i, j)] + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn two_state_chain_second_moment_matrix() {
        // D^σ does not depend on σ for this chain, so every moment equals it.
        let m = MarkovChain::two_state(5, 0.6).unwrap();
        let t = table(&m);
        let env = t.envelope().entries;
        let d2 = t.moment(2).entries;
        assert!(env.max_abs_diff(&d2) < 1e-12);
        assert!((d2[(0, 1)] - 0.2).abs() < 1e-12);
        assert!((d2[(2, 3)] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn csv_export_has_one_line_per_nonzero_entry() {
        let m = MarkovChain::two_state(3, 0.7).unwrap();
        let mut buf = Vec::new();
        table(&m).envelope().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6);
    }
}
