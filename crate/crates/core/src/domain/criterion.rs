//! The density test `σ(ρ)^{t/(t−1)} ≥ Λ (log log ρ^{-1})^{-1}` at sampled radii.
//!
//! Radii are carried as `ln(1/ρ)`, so radii far below `f64::MIN_POSITIVE`
//! (for instance `ρ = exp(−e^{10})`) can still be evaluated.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    /// `ln(1/ρ)`.
    pub log_inv_radius: f64,
    pub sigma: f64,
}

impl DensitySample {
    pub fn at_radius(radius: f64, sigma: f64) -> Self {
        Self {
            log_inv_radius: -math::ln(radius),
            sigma,
        }
    }

    pub fn radius(&self) -> f64 {
        math::exp(-self.log_inv_radius)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusCheck {
    pub log_inv_radius: f64,
    /// `None` when the radius was skipped.
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityVerdict {
    pub checks: Vec<RadiusCheck>,
    pub skipped: usize,
    /// True iff the inequality holds at every usable radius below the cutoff
    /// and at least one such radius exists.
    pub holds: bool,
}

/// Evaluates the criterion at every sample. Radii with `ρ ≥ e^{-1}` make
/// `log log ρ^{-1}` nonpositive and are skipped. Only radii with
/// `ρ < cutoff` enter the overall verdict.
pub fn criterion_density(
    samples: &[DensitySample],
    lambda: f64,
    t: f64,
    cutoff_log_inv: f64,
) -> DensityVerdict {
    let exponent = t / (t - 1.0);
    let mut checks = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    let mut any = false;
    let mut all = true;
    for s in samples {
        if !(s.log_inv_radius > 1.0) {
            skipped += 1;
            checks.push(RadiusCheck {
                log_inv_radius: s.log_inv_radius,
                lhs: None,
                rhs: None,
                holds: None,
            });
            continue;
        }
        let lhs = math::powf(s.sigma.max(0.0), exponent);
        let rhs = lambda / math::ln(s.log_inv_radius);
        let ok = lhs >= rhs;
        if s.log_inv_radius > cutoff_log_inv {
            any = true;
            all &= ok;
        }
        checks.push(RadiusCheck {
            log_inv_radius: s.log_inv_radius,
            lhs: Some(lhs),
            rhs: Some(rhs),
            holds: Some(ok),
        });
    }
    DensityVerdict {
        checks,
        skipped,
        holds: any && all,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_density_holds_for_small_radii() {
        let samples: Vec<_> = (2..40)
            .map(|k| DensitySample {
                log_inv_radius: math::exp(k as f64),
                sigma: 0.3,
            })
            .collect();
        // Small enough: the RHS lambda / log log ρ^{-1} must drop below 0.3^2.
        let v = criterion_density(&samples, 1.0, 2.0, math::exp(12.0));
        assert!(v.holds);
    }

    #[test]
    fn double_log_decay_fails() {
        // ρ = exp(−e^{10}): log log ρ^{-1} = 10, σ = 10^{-2}, t = 2.
        let s = DensitySample {
            log_inv_radius: math::exp(10.0),
            sigma: 1e-2,
        };
        let v = criterion_density(&[s], 1.0, 2.0, 0.0);
        let c = &v.checks[0];
        assert!((c.lhs.unwrap() - 1e-4).abs() < 1e-16);
        assert!((c.rhs.unwrap() - 0.1).abs() < 1e-12);
        assert!(!v.holds);
    }

    #[test]
    fn large_radius_is_skipped() {
        let v = criterion_density(&[DensitySample::at_radius(0.5, 1.0)], 1.0, 2.0, 0.0);
        assert_eq!(v.skipped, 1);
        assert_eq!(v.checks[0].holds, None);
        assert!(!v.holds);
    }
}
