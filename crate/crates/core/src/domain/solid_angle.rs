//! Monte-Carlo lower bounds on the solid angle under which a complement cap
//! is seen from points of the ball, and the resulting bounds on `σ̂(ρ)`.
//!
//! Lines are traced against the analytic [`ShapeSpec`], never against the
//! voxelization, so the estimate carries no grid-spacing bias.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::cap::{density, ComplementCap};
use super::interval::{Interval, IntervalSet};
use super::shape::ShapeSpec;
use crate::math;
use crate::rng::Sampler;
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolidAngleConfig {
    pub directions: usize,
    pub probes: usize,
    pub seed: u64,
}

impl Default for SolidAngleConfig {
    fn default() -> Self {
        Self {
            directions: 4096,
            probes: 512,
            seed: 0x005e_ed0f_c0de,
        }
    }
}

/// Smallest sample counts accepted by the estimator.
pub const MIN_DIRECTIONS: usize = 16;
pub const MIN_PROBES: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolidAngleEstimate {
    /// Estimated `inf_x |∢Θ(x)|` over the probes.
    pub value: f64,
    /// Standard error of the estimate at the minimising probe.
    pub std_error: f64,
    /// Probe attaining the minimum.
    pub argmin: Option<Point>,
    /// Per-probe estimates, in probe order.
    pub per_probe: Vec<f64>,
    pub full_measure: f64,
    pub config: SolidAngleConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolidAngleError {
    TooFewSamples { directions: usize, probes: usize },
}

impl core::fmt::Display for SolidAngleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolidAngleError::TooFewSamples { directions, probes } => write!(
                f,
                "need at least {MIN_DIRECTIONS} directions and {MIN_PROBES} probes, got {directions} and {probes}"
            ),
        }
    }
}

/// Whether the line through `x` with direction `xi` meets
/// `E = ∁Ω ∩ I(y, ρ)`.
fn line_meets_cap(shape: &ShapeSpec, y: &Point, rho: f64, x: &Point, xi: &Point) -> bool {
    let outside = shape.line_set(x, xi).complement();
    let rel = math::sub(x, y);
    let b = 2.0 * math::dot(&rel, xi);
    let c = math::dot(&rel, &rel) - rho * rho;
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return false;
    }
    let sq = math::sqrt(disc);
    let ball = IntervalSet::from_interval(Interval::closed(0.5 * (-b - sq), 0.5 * (-b + sq)));
    !outside.intersection(&ball).is_empty()
}

/// Draws probe points uniformly from `I(y, ρ) ∩ Ω` (the analytic Ω).
pub fn sample_probes(
    shape: &ShapeSpec,
    y: &Point,
    rho: f64,
    count: usize,
    seed: u64,
) -> Vec<Point> {
    let mut rng = Sampler::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 1000 * count.max(1) {
        attempts += 1;
        let p = rng.in_ball(shape.dim, y, rho);
        if shape.contains(&p, 0.0) {
            out.push(p);
        }
    }
    out
}

/// Solid-angle estimate for explicit probe points. The same seed yields the
/// same direction set, so estimates for nested caps are directly comparable.
pub fn solid_angle_at_probes(
    shape: &ShapeSpec,
    y: &Point,
    rho: f64,
    probes: &[Point],
    directions: usize,
    seed: u64,
) -> SolidAngleEstimate {
    let dim = shape.dim;
    let full = math::unit_sphere_area(dim);
    let mut rng = Sampler::new(seed);
    let dirs: Vec<Point> = (0..directions).map(|_| rng.direction(dim)).collect();
    let config = SolidAngleConfig {
        directions,
        probes: probes.len(),
        seed,
    };
    let mut per_probe = Vec::with_capacity(probes.len());
    let mut best = (f64::INFINITY, 0.0, None);
    for x in probes {
        let hits = dirs
            .iter()
            .filter(|xi| line_meets_cap(shape, y, rho, x, xi))
            .count();
        let p = hits as f64 / directions as f64;
        let value = p * full;
        let se = full * math::sqrt(p * (1.0 - p) / directions as f64);
        per_probe.push(value);
        if value < best.0 {
            best = (value, se, Some(*x));
        }
    }
    if probes.is_empty() {
        // E fills the ball: every admissible line meets it.
        best = (full, 0.0, None);
    }
    SolidAngleEstimate {
        value: best.0,
        std_error: best.1,
        argmin: best.2,
        per_probe,
        full_measure: full,
        config,
    }
}

/// Monte-Carlo estimate of `inf_{x ∈ I(y,ρ)∖E} |∢Θ(x)|`, where `Θ(x)` is the
/// set of unit directions whose line through `x` meets the cap.
pub fn solid_angle_lower_bound(
    shape: &ShapeSpec,
    cap: &ComplementCap,
    config: &SolidAngleConfig,
) -> Result<SolidAngleEstimate, SolidAngleError> {
    if config.directions < MIN_DIRECTIONS || config.probes < MIN_PROBES {
        return Err(SolidAngleError::TooFewSamples {
            directions: config.directions,
            probes: config.probes,
        });
    }
    if cap.is_empty() {
        return Ok(SolidAngleEstimate {
            value: 0.0,
            std_error: 0.0,
            argmin: None,
            per_probe: Vec::new(),
            full_measure: math::unit_sphere_area(shape.dim),
            config: *config,
        });
    }
    let probes = sample_probes(
        shape,
        &cap.center_point,
        cap.radius,
        config.probes,
        config.seed,
    );
    let mut est = solid_angle_at_probes(
        shape,
        &cap.center_point,
        cap.radius,
        &probes,
        config.directions,
        config.seed,
    );
    est.config.probes = config.probes;
    Ok(est)
}

/// Certified-modulo-sampling lower bound for `σ̂(ρ)`: the larger of the
/// volumetric bound `σ(ρ)·N·V_N / 2^N` and the solid-angle estimate.
pub fn sigma_hat_bounds(cap: &ComplementCap, angle: f64) -> f64 {
    if cap.is_empty() {
        return 0.0;
    }
    volumetric_bound(cap.dim, density(cap)).max(angle)
}

/// `σ·N·V_N / 2^N`, the inverse of the constant `2^N / (N V_N)` times `σ`.
pub fn volumetric_bound(dim: usize, sigma: f64) -> f64 {
    sigma * math::unit_sphere_area(dim) / math::powf(2.0, dim as f64)
}
