use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The confidence interval straddles the bound.
    Inconclusive,
    /// Raw data reported without a claim.
    Info,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Info => "info",
        })
    }
}

/// Where the observed side of a row comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Mc { samples: usize, half_width: f64 },
    SuppliedConstant,
    Fitted,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Exact => f.write_str("exact"),
            Provenance::Mc { samples, half_width } => write!(f, "mc({samples}, {half_width:.3e})"),
            Provenance::SuppliedConstant => f.write_str("supplied-constant"),
            Provenance::Fitted => f.write_str("fitted"),
        }
    }
}

/// Optional parameters attached to a row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub t: Option<f64>,
    pub p: Option<u32>,
    pub rho: Option<f64>,
    pub theta: Option<f64>,
    pub eps: Option<f64>,
}

/// One claim `observed ≤ theoretical`. For Monte Carlo rows `observed_upper`
/// and `observed_lower` are the ends of the 99% interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub function: String,
    pub bound: String,
    pub params: Params,
    pub theoretical: f64,
    pub observed: f64,
    pub observed_lower: f64,
    pub observed_upper: f64,
    pub provenance: Provenance,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// `theoretical − observed_upper`; negative when the claim is at risk.
    pub slack: f64,
    pub note: String,
}

impl ReportRow {
    /// A row whose observed value is exact.
    pub fn exact(model: &str, function: &str, bound: &str, params: Params, theoretical: f64, observed: f64, tol: f64) -> Self {
        let verdict = if observed <= theoretical + tol { Verdict::Pass } else { Verdict::Fail };
        ReportRow {
            model: model.into(),
            function: function.into(),
            bound: bound.into(),
            params,
            theoretical,
            observed,
            observed_lower: observed,
            observed_upper: observed,
            provenance: Provenance::Exact,
            tolerance: tol,
            verdict,
            slack: theoretical - observed,
            note: String::new(),
        }
    }

    /// A Monte Carlo row: pass when the upper end clears the bound, fail when
    /// the lower end exceeds it, inconclusive otherwise.
    #[allow(clippy::too_many_arguments)]
    pub fn mc(
        model: &str,
        function: &str,
        bound: &str,
        params: Params,
        theoretical: f64,
        observed: (f64, f64, f64),
        samples: usize,
        tol: f64,
    ) -> Self {
        let (point, lower, upper) = observed;
        let verdict = if upper <= theoretical + tol {
            Verdict::Pass
        } else if lower > theoretical + tol {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        ReportRow {
            model: model.into(),
            function: function.into(),
            bound: bound.into(),
            params,
            theoretical,
            observed: point,
            observed_lower: lower,
            observed_upper: upper,
            provenance: Provenance::Mc { samples, half_width: 0.5 * (upper - lower) },
            tolerance: tol,
            verdict,
            slack: theoretical - upper,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    /// Demotes the row to raw data.
    pub fn as_info(mut self) -> Self {
        self.verdict = Verdict::Info;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub experiment: String,
    pub seed: Option<u64>,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub info: usize,
}

impl BoundReport {
    pub fn new(experiment: impl Into<String>, seed: Option<u64>) -> Self {
        BoundReport { experiment: experiment.into(), seed, rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn extend(&mut self, other: BoundReport) {
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
    }

    pub fn tally(&self) -> Tally {
        let mut t = Tally::default();
        for r in &self.rows {
            match r.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Fail => t.fail += 1,
                Verdict::Inconclusive => t.inconclusive += 1,
                Verdict::Info => t.info += 1,
            }
        }
        t
    }

    pub fn exact_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail && r.provenance == Provenance::Exact).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "model",
            "function",
            "bound",
            "t",
            "p",
            "rho",
            "theta",
            "eps",
            "theoretical",
            "observed",
            "observed_lower",
            "observed_upper",
            "provenance",
            "verdict",
            "slack",
            "note",
        ])?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                r.function.clone(),
                r.bound.clone(),
                opt(r.params.t),
                r.params.p.map(|p| p.to_string()).unwrap_or_default(),
                opt(r.params.rho),
                opt(r.params.theta),
                opt(r.params.eps),
                format!("{:e}", r.theoretical),
                format!("{:e}", r.observed),
                format!("{:e}", r.observed_lower),
                format!("{:e}", r.observed_upper),
                r.provenance.to_string(),
                r.verdict.to_string(),
                format!("{:e}", r.slack),
                r.note.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// A short table grouped by bound id.
    pub fn summary(&self) -> String {
        use std::collections::BTreeMap;
        let mut groups: BTreeMap<&str, Tally> = BTreeMap::new();
        for r in &self.rows {
            let t = groups.entry(r.bound.as_str()).or_default();
            match r.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Fail => t.fail += 1,
                Verdict::Inconclusive => t.inconclusive += 1,
                Verdict::Info => t.info += 1,
            }
        }
        let mut s = format!("{}\n", self.experiment);
        s += &format!("{:<28} {:>6} {:>6} {:>6} {:>6}\n", "bound", "pass", "fail", "incon", "info");
        for (b, t) in &groups {
            s += &format!("{:<28} {:>6} {:>6} {:>6} {:>6}\n", b, t.pass, t.fail, t.inconclusive, t.info);
        }
        let t = self.tally();
        s += &format!("{:<28} {:>6} {:>6} {:>6} {:>6}\n", "total", t.pass, t.fail, t.inconclusive, t.info);
        for n in &self.notes {
            s += &format!("note: {n}\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        let p = Params::default();
        assert_eq!(ReportRow::exact("m", "g", "b", p, 1.0, 1.0 + 1e-12, 1e-9).verdict, Verdict::Pass);
        assert_eq!(ReportRow::exact("m", "g", "b", p, 1.0, 1.1, 1e-9).verdict, Verdict::Fail);
        assert_eq!(ReportRow::mc("m", "g", "b", p, 0.5, (0.4, 0.3, 0.45), 10, 0.0).verdict, Verdict::Pass);
        assert_eq!(ReportRow::mc("m", "g", "b", p, 0.5, (0.49, 0.45, 0.55), 10, 0.0).verdict, Verdict::Inconclusive);
        assert_eq!(ReportRow::mc("m", "g", "b", p, 0.5, (0.6, 0.55, 0.65), 10, 0.0).verdict, Verdict::Fail);
    }

    #[test]
    fn exports_round_trip() {
        let mut r = BoundReport::new("demo", Some(3));
        r.push(ReportRow::exact("m", "g", "variance", Params { p: Some(1), ..Params::default() }, 2.0, 1.0, 0.0));
        r.push(ReportRow::exact("m", "g", "variance", Params::default(), 1.0, 2.0, 0.0));
        assert_eq!(r.exact_failures(), 1);
        let mut json = Vec::new();
        r.write_json(&mut json).unwrap();
        let back: BoundReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, r);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
        assert!(r.summary().contains("variance"));
    }
}
