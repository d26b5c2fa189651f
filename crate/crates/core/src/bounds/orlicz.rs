use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the Luxembourg bisection.
pub const LUX_TOL: f64 = 1e-9;

/// The Young function `Φ_ϱ(x) = e^{(|x|+h)^ϱ} − e^{h^ϱ}` with
/// `h = ((1−ϱ)/ϱ)^{1/ϱ}` for `ϱ < 1` and `h = 0` at `ϱ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrliczSpec {
    pub rho: f64,
    pub h: f64,
}

impl OrliczSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParameter(format!("ϱ must lie in (0, 1], got {rho}")));
        }
        let h = if rho < 1.0 { ((1.0 - rho) / rho).powf(1.0 / rho) } else { 0.0 };
        Ok(OrliczSpec { rho, h })
    }

    pub fn phi(&self, x: f64) -> f64 {
        let x = x.abs();
        if self.h == 0.0 {
            return x.powf(self.rho).exp_m1();
        }
        // e^{h^ϱ} (e^{(x+h)^ϱ − h^ϱ} − 1), with the exponent difference formed without cancellation
        let base = self.h.powf(self.rho);
        let diff = base * (self.rho * (x / self.h).ln_1p()).exp_m1();
        base.exp() * diff.exp_m1()
    }

    /// Smallest `λ` with `E Φ(Z/λ) ≤ 1` for a finite law given as
    /// `(value, probability)` pairs. `None` when no finite `λ` is found.
    pub fn luxembourg_norm(&self, law: &[(f64, f64)]) -> Option<f64> {
        let law: Vec<(f64, f64)> = law.iter().filter(|(z, p)| *p > 0.0 && *z != 0.0).copied().collect();
        if law.is_empty() {
            return Some(0.0);
        }
        let moment = |lambda: f64| -> f64 { law.iter().map(|(z, p)| p * self.phi(z / lambda)).sum() };
        let scale = law.iter().map(|(z, _)| z.abs()).fold(0.0, f64::max);
        let mut hi = scale;
        while moment(hi) > 1.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return None;
            }
        }
        let mut lo = hi / 2.0;
        while moment(lo) <= 1.0 {
            hi = lo;
            lo /= 2.0;
            if lo == 0.0 {
                return Some(0.0);
            }
        }
        while hi - lo > LUX_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if moment(mid) <= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    /// The norm of the empirical law of `samples`.
    pub fn luxembourg_norm_samples(&self, samples: &[f64]) -> Option<f64> {
        let w = 1.0 / samples.len() as f64;
        let law: Vec<(f64, f64)> = samples.iter().map(|z| (*z, w)).collect();
        self.luxembourg_norm(&law)
    }

    pub fn moment(&self, law: &[(f64, f64)], lambda: f64) -> f64 {
        law.iter().map(|(z, p)| p * self.phi(z / lambda)).sum()
    }
}
