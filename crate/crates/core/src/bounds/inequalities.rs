//! Evaluators for the concentration bounds. Every function takes the norms,
//! moments and constants explicitly, however they were obtained.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::orlicz::OrliczSpec;
use super::sequence::{Sequence, SeriesSum};
use super::zeta::zeta;

/// A bound value with an optional note on how it was reached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluated {
    pub value: f64,
    pub flag: Option<BoundFlag>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    /// A norm vanished, so the bound is 0 by convention for `t > 0`.
    ZeroNorm,
    /// A truncated series has an infinite remainder.
    Divergent,
}

impl Evaluated {
    fn plain(value: f64) -> Self {
        Evaluated { value, flag: None }
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {x}")))
    }
}

/// `2 exp(−2t² / (‖D̄‖² ‖δg‖²))`.
pub fn exponential_bound(t: f64, norm_d: f64, norm_delta: f64) -> Result<Evaluated> {
    check_nonneg("t", t)?;
    check_nonneg("‖D̄‖", norm_d)?;
    check_nonneg("‖δg‖", norm_delta)?;
    let scale = norm_d * norm_delta;
    if scale == 0.0 {
        let value = if t == 0.0 { 2.0 } else { 0.0 };
        return Ok(Evaluated { value, flag: Some(BoundFlag::ZeroNorm) });
    }
    Ok(Evaluated::plain(2.0 * (-2.0 * t * t / (scale * scale)).exp()))
}

/// `‖𝒟^(2)‖² ‖δg‖²`.
pub fn variance_bound(norm_d2: f64, norm_delta: f64) -> f64 {
    (norm_d2 * norm_delta).powi(2)
}

/// The factor `(20p)^{2p}` in front of the moment bounds.
pub fn moment_prefactor(p: u32) -> f64 {
    (20.0 * p as f64).powi(2 * p as i32)
}

/// `(20p)^{2p} ‖𝒟^(2p)‖^{2p} ‖δg‖^{2p}`.
pub fn moment_bound(p: u32, norm_d2p: f64, norm_delta: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    Ok(moment_prefactor(p) * (norm_d2p * norm_delta).powi(2 * p as i32))
}

/// `Σ_{j≥1} P(ℓ_0 ≥ j)^{1/2p} + ‖ψ‖_1`, an upper bound on the off-diagonal
/// part of `‖𝒟^(2p)‖`. The unit diagonal adds at most 1 on top of it.
pub fn prop2_norm_bound(l0_tail: &Sequence, psi: &Sequence, p: u32) -> Result<Evaluated> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let a = l0_tail.powered_sum(1.0 / (2.0 * p as f64));
    let b = psi.l1();
    let total = SeriesSum { head: a.head + b.head, remainder: a.remainder + b.remainder };
    let flag = (!total.is_finite()).then_some(BoundFlag::Divergent);
    Ok(Evaluated { value: total.total(), flag })
}

/// `(20p)^{2p} (ζ(1+ε/(2p−1))^{(2p−1)/2p} E[ℓ_0^{2pd+ε}]^{1/2p} + ‖ψ‖_1)^{2p} ‖δg‖^{2p}`,
/// with the moment `E[ℓ_0^{2pd+ε}]` supplied by the caller.
pub fn curanto_moment_bound(p: u32, eps: f64, moment_l0: f64, norm_psi: f64, norm_delta: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
    }
    check_nonneg("moment", moment_l0)?;
    check_nonneg("‖ψ‖", norm_psi)?;
    let q = 2.0 * p as f64;
    let z = zeta(1.0 + eps / (q - 1.0))?;
    let inner = z.powf((q - 1.0) / q) * moment_l0.powf(1.0 / q) + norm_psi;
    Ok(moment_prefactor(p) * inner.powf(q) * norm_delta.powf(q))
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("t must be positive, got {t}")))
    }
}

/// `4 exp(−c t^ϱ / ‖δg‖^ϱ)`.
pub fn stretched_bound(t: f64, rho: f64, c: f64, norm_delta: f64) -> Result<f64> {
    check_t(t)?;
    check_nonneg("c", c)?;
    if norm_delta == 0.0 {
        return Ok(0.0);
    }
    Ok(4.0 * (-c * (t / norm_delta).powf(rho)).exp())
}

/// `C_p ‖δg‖^{2p} / t^{2p}`.
pub fn polynomial_bound(t: f64, p: u32, cp: f64, norm_delta: f64) -> Result<f64> {
    check_t(t)?;
    check_nonneg("C_p", cp)?;
    Ok(cp * (norm_delta / t).powi(2 * p as i32))
}

/// `2 / Φ_ϱ(t / ‖g − Eg‖_Φ)`.
pub fn chebyshev_orlicz_bound(t: f64, spec: &OrliczSpec, lux_norm: f64) -> Result<f64> {
    check_t(t)?;
    if lux_norm == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 / spec.phi(t / lux_norm))
}

/// A measured tail `P(|g − Eg| ≥ t)` at one `t`, with the `‖δg‖` of its instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub tail: f64,
    pub norm_delta: f64,
}

/// Smallest `C_p` with `tail ≤ C_p ‖δg‖^{2p}/t^{2p}` at every point.
pub fn extract_polynomial_constant(points: &[TailPoint], p: u32) -> f64 {
    points
        .iter()
        .filter(|pt| pt.t > 0.0 && pt.tail > 0.0)
        .map(|pt| pt.tail * (pt.t / pt.norm_delta).powi(2 * p as i32))
        .fold(0.0, f64::max)
}

/// Largest `c` with `tail ≤ 4 exp(−c t^ϱ/‖δg‖^ϱ)` at every point; infinite
/// when no point constrains it.
pub fn extract_stretched_constant(points: &[TailPoint], rho: f64) -> f64 {
    points
        .iter()
        .filter(|pt| pt.t > 0.0 && pt.tail > 0.0)
        .map(|pt| -(pt.tail / 4.0).ln() / (pt.t / pt.norm_delta).powf(rho))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sequence::Envelope;
    use std::f64::consts::E;

    #[test]
    fn exponential_reduces_to_hoeffding() {
        let n = 10.0;
        for t in [0.0, 1.0, 3.0, 7.5] {
            let b = exponential_bound(t, 1.0, (4.0 * n as f64).sqrt()).unwrap();
            assert!((b.value - 2.0 * (-t * t / (2.0 * n)).exp()).abs() < 1e-15);
        }
        assert_eq!(exponential_bound(0.0, 1.3, 2.0).unwrap().value, 2.0);
        let zero = exponential_bound(1.0, 0.0, 2.0).unwrap();
        assert_eq!((zero.value, zero.flag), (0.0, Some(BoundFlag::ZeroNorm)));
    }

    #[test]
    fn doubling_delta_quarters_the_exponent() {
        let a = exponential_bound(2.0, 1.5, 1.0).unwrap().value;
        let b = exponential_bound(2.0, 1.5, 2.0).unwrap().value;
        assert!(((a / 2.0).ln() / 4.0 - (b / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn moment_substitutions() {
        assert_eq!(variance_bound(1.0, 3.0), 9.0);
        assert!((moment_bound(1, 1.2, 2.0).unwrap() - 400.0 * variance_bound(1.2, 2.0)).abs() < 1e-9);
        assert!(moment_bound(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn prop2_series() {
        let zero = prop2_norm_bound(&Sequence::zero(), &Sequence::zero(), 2).unwrap();
        assert_eq!(zero.value, 0.0);
        let geo = Sequence::new(vec![], Envelope::Geometric { scale: 1.0, ratio: (-1.0f64).exp() }).unwrap();
        let only_psi = prop2_norm_bound(&Sequence::zero(), &geo, 1).unwrap();
        assert!((only_psi.value - 1.0 / (E - 1.0)).abs() < 1e-14);
        let both = prop2_norm_bound(&geo, &geo, 1).unwrap();
        assert!((both.value - 1.0 / (E.sqrt() - 1.0) - 1.0 / (E - 1.0)).abs() < 1e-13);
        let heavy = Sequence::new(vec![], Envelope::PowerLaw { scale: 1.0, exponent: 1.5 }).unwrap();
        assert_eq!(prop2_norm_bound(&heavy, &Sequence::zero(), 1).unwrap().flag, Some(BoundFlag::Divergent));
    }

    #[test]
    fn curanto_substitutions() {
        assert_eq!(curanto_moment_bound(2, 0.5, 0.0, 0.0, 3.0).unwrap(), 0.0);
        // p = 1, ε = 1: ζ(2)^{1/2} E[ℓ³]^{1/2}, and ℓ ≤ L gives E[ℓ³] ≤ L³
        let l: f64 = 3.0;
        let got = curanto_moment_bound(1, 1.0, l.powi(3), 0.0, 1.0).unwrap();
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((got - 400.0 * z2 * l.powi(3)).abs() < 1e-9);
        assert!(curanto_moment_bound(1, 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn tails_decrease_to_zero() {
        let spec = OrliczSpec::new(1.0).unwrap();
        let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for k in 1..60 {
            let t = k as f64 * 0.5;
            let now = (
                stretched_bound(t, 0.5, 0.8, 1.0).unwrap(),
                polynomial_bound(t, 2, 3.0, 1.0).unwrap(),
                chebyshev_orlicz_bound(t, &spec, 1.0).unwrap(),
            );
            assert!(now.0 < last.0 && now.1 < last.1 && now.2 < last.2);
            last = now;
        }
        assert!(last.0 < 0.06 && last.1 < 1e-4 && last.2 < 1e-11);
        assert!((chebyshev_orlicz_bound(2.0, &spec, 2.0).unwrap() - 2.0 / (E - 1.0)).abs() < 1e-15);
        assert!(stretched_bound(0.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn extracted_constants_are_tight() {
        let pts = [
            TailPoint { t: 1.0, tail: 0.5, norm_delta: 2.0 },
            TailPoint { t: 3.0, tail: 0.01, norm_delta: 2.0 },
            TailPoint { t: 5.0, tail: 0.0, norm_delta: 2.0 },
        ];
        let cp = extract_polynomial_constant(&pts, 1);
        let c = extract_stretched_constant(&pts, 0.5);
        for pt in &pts {
            assert!(pt.tail <= polynomial_bound(pt.t, 1, cp, pt.norm_delta).unwrap() * (1.0 + 1e-12));
            assert!(pt.tail <= stretched_bound(pt.t, 0.5, c, pt.norm_delta).unwrap() * (1.0 + 1e-12));
        }
        assert!(extract_stretched_constant(&[], 0.5).is_infinite());
    }
}
