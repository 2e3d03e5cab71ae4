//! Level-set bookkeeping for De Giorgi–type estimates on computed fields:
//! the exponents `θ`, `β`, `θ₁`, sublevel measures `b(k,ρ)`, `u(k,ρ)`,
//! `ψ(k,ρ)`, Caccioppoli ratios, the `ψ` recursion along the shrinking
//! schedule, oscillations and the predicted decay envelope.
//!
//! All sets are taken over the non-exterior nodes of the field's grid. Volume
//! integrals use the vertex form of the cell rule: each of the `2^N` corner
//! shares `h^N/2^N` of a node is summed, which gives every node weight `h^N`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{criterion_density, DensitySample, DensityVerdict, GridDomain, NodeLabel};
use crate::math;
use crate::operator::{Field, Stencil};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub theta: f64,
    pub beta: f64,
    /// Defined only for `t < N`.
    pub theta1: Option<f64>,
}

/// `θ = 1/2 + √(1/4 + t/N)`, `β = (t + Nθ)/(θ − 1)` and, for `t < N`,
/// `θ₁ = 1/2 + √(1/4 + t/(N − t))`.
pub fn constants(t: f64, n: usize) -> Constants {
    let nf = n as f64;
    let theta = 0.5 + math::sqrt(0.25 + t / nf);
    let beta = (t + nf * theta) / (theta - 1.0);
    let theta1 = if t < nf {
        Some(0.5 + math::sqrt(0.25 + t / (nf - t)))
    } else {
        None
    };
    Constants {
        theta,
        beta,
        theta1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetStats {
    pub k: f64,
    pub rho: f64,
    /// `|B(k,ρ)|`.
    pub b: f64,
    /// `∫_{B(k,ρ)} (k − u)^t`.
    pub u_int: f64,
    /// `u^{θN/t} · b`.
    pub psi: f64,
}

fn region(domain: &GridDomain, y: &Point, rho: f64) -> Vec<usize> {
    domain
        .lattice
        .nodes_in_ball(y, rho)
        .into_iter()
        .filter(|&i| domain.label(i) != NodeLabel::Exterior)
        .collect()
}

fn node_volume(domain: &GridDomain) -> f64 {
    math::powf(domain.h(), domain.dim() as f64)
}

/// Measures of `B(k,ρ) = {x ∈ I(y,ρ) : u(x) ≤ k}`.
pub fn level_stats(
    domain: &GridDomain,
    u: &Field,
    y: &Point,
    k: f64,
    rho: f64,
    t: f64,
) -> LevelSetStats {
    let c = constants(t, domain.dim());
    let mut count = 0usize;
    let mut integral = 0.0;
    for i in region(domain, y, rho) {
        let v = u.values[i];
        if v <= k {
            count += 1;
            integral += math::powf(k - v, t);
        }
    }
    let vol = node_volume(domain);
    let b = count as f64 * vol;
    let u_int = integral * vol;
    let psi = if u_int > 0.0 {
        math::powf(u_int, c.theta * domain.dim() as f64 / t) * b
    } else {
        0.0
    };
    LevelSetStats {
        k,
        rho,
        b,
        u_int,
        psi,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliReport {
    pub k: f64,
    pub rho: f64,
    pub big_r: f64,
    /// `∫_{B(k,R)} |∇u|^t φ^t`.
    pub lhs: f64,
    /// `∫_{B(k,R)} |u − k|^t`.
    pub rhs: f64,
    /// `LHS / ((R − ρ)^{−t} RHS)`, zero when both sides vanish.
    pub c_emp: f64,
    /// `RHS = 0` while `LHS > tol`.
    pub violation: bool,
}

/// Radial cutoff: 1 inside `ρ`, linear down to 0 at `R`.
fn cutoff(dist: f64, rho: f64, big_r: f64) -> f64 {
    if dist <= rho {
        1.0
    } else if dist >= big_r {
        0.0
    } else {
        (big_r - dist) / (big_r - rho)
    }
}

/// Empirical constant in `∫_{B(k,R)} |∇u|^t φ^t ≤ c (R−ρ)^{−t} ∫_{B(k,R)} |u−k|^t`.
/// Gradients are the corner gradients of the energy; a corner term counts
/// when its corner node lies in `B(k,R)`; `φ` is sampled at cell centres.
#[allow(clippy::too_many_arguments)]
pub fn check_caccioppoli(
    domain: &GridDomain,
    stencil: &Stencil,
    u: &Field,
    y: &Point,
    k: f64,
    rho: f64,
    big_r: f64,
    t: f64,
    tol: f64,
) -> CaccioppoliReport {
    let lat = &domain.lattice;
    let dim = domain.dim();
    let h = domain.h();
    let weight = stencil.term_weight();
    let in_b = |i: usize| {
        domain.label(i) != NodeLabel::Exterior
            && u.values[i] <= k
            && math::dist(&lat.point(i), y) <= big_r
    };
    let mut lhs = 0.0;
    for &base in stencil.cells() {
        let p = lat.point(base);
        let mut centre = p;
        for c in centre.iter_mut().take(dim) {
            *c += 0.5 * h;
        }
        let phi = cutoff(math::dist(&centre, y), rho, big_r);
        if phi == 0.0 {
            continue;
        }
        for kappa in 0..1usize << dim {
            let mut disp = [0i64; 3];
            for (d, di) in disp.iter_mut().enumerate().take(dim) {
                *di = ((kappa >> d) & 1) as i64;
            }
            let node = (base as isize + lat.offset(disp)) as usize;
            if !in_b(node) {
                continue;
            }
            let g = stencil.corner_gradient(&u.values, base, kappa);
            lhs += weight * math::powf(math::dot(&g, &g), 0.5 * t) * math::powf(phi, t);
        }
    }
    let mut rhs = 0.0;
    for i in region(domain, y, big_r) {
        if u.values[i] <= k {
            rhs += math::powf((u.values[i] - k).abs(), t);
        }
    }
    rhs *= node_volume(domain);
    let violation = rhs == 0.0 && lhs > tol;
    let c_emp = if rhs > 0.0 {
        lhs * math::powf(big_r - rho, t) / rhs
    } else {
        0.0
    };
    CaccioppoliReport {
        k,
        rho,
        big_r,
        lhs,
        rhs,
        c_emp,
        violation,
    }
}

/// `r_m = r₀/2 + r₀/2^{m+1}`, `k_m = k₀ − d + d/2^m`, `m = 0..=levels`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationSchedule {
    pub r0: f64,
    pub k0: f64,
    pub d: f64,
    pub levels: usize,
}

impl IterationSchedule {
    pub fn radius(&self, m: usize) -> f64 {
        0.5 * self.r0 + self.r0 / math::powf(2.0, (m + 1) as f64)
    }

    pub fn level(&self, m: usize) -> f64 {
        self.k0 - self.d + self.d / math::powf(2.0, m as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiRecursionReport {
    pub schedule: IterationSchedule,
    pub stats: Vec<LevelSetStats>,
    /// Smallest `ĉ` with `ψ_{m+1} ≤ ĉ (r_m − r_{m+1})^{−Nθ} (k_m − k_{m+1})^{−t} ψ_m^θ`.
    pub c_hat: Option<f64>,
    /// `ψ_m ≤ 10 · ψ₀ 2^{−βm}` at every level.
    pub geometric_decay: bool,
    pub nonincreasing: bool,
    /// Fewer than three levels with `ψ > 0`.
    pub truncated: bool,
}

pub const PSI_DECAY_SLACK: f64 = 10.0;

pub fn check_psi_recursion(
    domain: &GridDomain,
    u: &Field,
    y: &Point,
    schedule: &IterationSchedule,
    t: f64,
) -> PsiRecursionReport {
    let n = domain.dim();
    let c = constants(t, n);
    let stats: Vec<LevelSetStats> = (0..=schedule.levels)
        .map(|m| level_stats(domain, u, y, schedule.level(m), schedule.radius(m), t))
        .collect();
    let mut c_hat: Option<f64> = None;
    for m in 0..schedule.levels {
        let (a, b) = (stats[m].psi, stats[m + 1].psi);
        if a <= 0.0 {
            continue;
        }
        let dr = schedule.radius(m) - schedule.radius(m + 1);
        let dk = schedule.level(m) - schedule.level(m + 1);
        let bound =
            math::powf(dr, -(n as f64) * c.theta) * math::powf(dk, -t) * math::powf(a, c.theta);
        let ratio = b / bound;
        c_hat = Some(c_hat.map_or(ratio, |x: f64| x.max(ratio)));
    }
    let psi0 = stats[0].psi;
    let geometric_decay = stats
        .iter()
        .enumerate()
        .all(|(m, s)| s.psi <= PSI_DECAY_SLACK * psi0 * math::powf(2.0, -c.beta * m as f64));
    let nonincreasing = stats.windows(2).all(|w| w[1].psi <= w[0].psi);
    let usable = stats.iter().filter(|s| s.psi > 0.0).count();
    PsiRecursionReport {
        schedule: *schedule,
        stats,
        c_hat,
        geometric_decay,
        nonincreasing,
        truncated: usable < 3,
    }
}

/// Smallest drop `d` for which a recursion constant `ĉ` (in the form fitted
/// by [`check_psi_recursion`]) closes the induction `ψ_m ≤ ψ₀ 2^{−βm}`
/// along the schedule: `ĉ^{1/t} r₀^{−Nθ/t} ψ₀^{(θ−1)/t} 2^{(β + t + 2Nθ)/t}`.
pub fn d_threshold(c_hat: f64, r0: f64, psi0: f64, t: f64, n: usize) -> f64 {
    let c = constants(t, n);
    let nt = n as f64 * c.theta;
    math::powf(c_hat, 1.0 / t)
        * math::powf(r0, -nt / t)
        * math::powf(psi0, (c.theta - 1.0) / t)
        * math::powf(2.0, (c.beta + t + 2.0 * nt) / t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Recursion along the schedule with the starting drop.
    pub trial: PsiRecursionReport,
    /// Smallest self-consistent drop found: `d ≥ d_threshold(ĉ(d))` with
    /// `ĉ(d)` fitted along the schedule built from `d` itself.
    pub d: Option<f64>,
    /// Recursion along the schedule with drop `d`.
    pub fitted: Option<PsiRecursionReport>,
    /// `|B(k₀ − d, r₀/2)|`.
    pub b_half: Option<f64>,
    pub empty: Option<bool>,
}

const SEARCH_STEPS: usize = 60;

/// Searches the smallest self-consistent drop `d`, starting from
/// `start.d`, and measures `|B(k₀ − d, r₀/2)|`, which the induction
/// predicts to vanish. `None` when `ψ₀ = 0` or no drop up to `2^60 d₀`
/// closes.
pub fn fit_threshold(
    domain: &GridDomain,
    u: &Field,
    y: &Point,
    start: &IterationSchedule,
    t: f64,
) -> ThresholdReport {
    let n = domain.dim();
    let fit = |d: f64| check_psi_recursion(domain, u, y, &IterationSchedule { d, ..*start }, t);
    let trial = fit(start.d);
    let psi0 = trial.stats[0].psi;
    let none = |trial| ThresholdReport {
        trial,
        d: None,
        fitted: None,
        b_half: None,
        empty: None,
    };
    if !(psi0 > 0.0) || !(start.d > 0.0) {
        return none(trial);
    }
    let closes = |rep: &PsiRecursionReport| match rep.c_hat {
        Some(c) if c > 0.0 => d_threshold(c, start.r0, psi0, t, n) <= rep.schedule.d,
        _ => true,
    };
    let mut hi = trial.clone();
    let mut steps = 0;
    while !closes(&hi) {
        steps += 1;
        if steps > SEARCH_STEPS {
            return none(trial);
        }
        hi = fit(2.0 * hi.schedule.d);
    }
    let mut lo = hi.schedule.d;
    for _ in 0..SEARCH_STEPS {
        let rep = fit(0.5 * lo);
        lo = rep.schedule.d;
        if !closes(&rep) {
            break;
        }
        hi = rep;
    }
    if lo < hi.schedule.d {
        for _ in 0..SEARCH_STEPS {
            let mid = math::sqrt(lo * hi.schedule.d);
            if !(mid > lo && mid < hi.schedule.d) {
                break;
            }
            let rep = fit(mid);
            if closes(&rep) {
                hi = rep;
            } else {
                lo = mid;
            }
        }
    }
    let d = hi.schedule.d;
    let b_half = level_stats(domain, u, y, start.k0 - d, 0.5 * start.r0, t).b;
    ThresholdReport {
        trial,
        d: Some(d),
        fitted: Some(hi),
        b_half: Some(b_half),
        empty: Some(b_half == 0.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationEntry {
    pub k: usize,
    pub r: f64,
    pub inf: f64,
    pub sup: f64,
    pub omega: f64,
    pub nodes: usize,
}

/// `i(r_k)`, `s(r_k)`, `ω(r_k)` over the non-exterior nodes of
/// `I(y, r_k)`, `r_k = r₀ q^{−k}`. Radii without nodes are skipped.
pub fn oscillation_sequence(
    domain: &GridDomain,
    u: &Field,
    y: &Point,
    r0: f64,
    ratio: f64,
    count: usize,
) -> Vec<OscillationEntry> {
    let mut out = Vec::new();
    for k in 0..=count {
        let r = r0 * math::powf(ratio, -(k as f64));
        let nodes = region(domain, y, r);
        if nodes.is_empty() {
            continue;
        }
        let (inf, sup) = nodes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = u.values[i];
                (lo.min(v), hi.max(v))
            });
        out.push(OscillationEntry {
            k,
            r,
            inf,
            sup,
            omega: sup - inf,
            nodes: nodes.len(),
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub c1: f64,
    pub t: f64,
    /// Measured `ω` must lie below `slack` times the envelope.
    pub slack: f64,
    /// Use `ω(r) ≤ ω(4r)/2 + (c + η^{−1}) r` instead of the product.
    pub lower_order: bool,
    /// The constant `c` of the lower-order envelope.
    pub lower_order_c: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            t: 2.0,
            slack: 2.0,
            lower_order: false,
            lower_order_c: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub k: usize,
    pub r: f64,
    /// `σ(2 r_k)`.
    pub sigma: f64,
    /// `None` when `σ = 0` (no decay is predicted at that radius).
    pub n0: Option<u64>,
    pub eta: f64,
    /// `1 − η/4`.
    pub factor: f64,
    pub envelope: f64,
    pub omega: Option<f64>,
    pub within: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub config: DecayConfig,
    pub entries: Vec<DecayEntry>,
    /// The log-log density test with `Λ = C₁ log 2` at the radii `2 r_k`.
    pub density: DensityVerdict,
    pub passed: bool,
}

/// `n₀ = max(1, ⌈C₁ σ^{−t/(t−1)}⌉)`, or `None` for `σ = 0`.
pub fn n0(c1: f64, sigma: f64, t: f64) -> Option<u64> {
    if !(sigma > 0.0) {
        return None;
    }
    let v = math::ceil(c1 * math::powf(sigma, -t / (t - 1.0)));
    if v >= u64::MAX as f64 {
        return None;
    }
    Some((v as u64).max(1))
}

/// `η = 2^{−(n₀+1)}`.
pub fn eta(n0: Option<u64>) -> f64 {
    match n0 {
        Some(n) => math::powf(2.0, -((n + 1) as f64)),
        None => 0.0,
    }
}

/// Envelope `∏_{j=1}^{k} (1 − η_j/4) ω(r₀)` for radii `r_k`, with `σ`
/// sampled at `2 r_k`, compared against the measured oscillations.
pub fn n0_and_decay(radii: &[f64], sigma: &[f64], omega: &[f64], cfg: &DecayConfig) -> DecayReport {
    let mut entries = Vec::with_capacity(radii.len());
    let omega0 = omega.first().copied().unwrap_or(0.0);
    let mut envelope = omega0;
    for (k, &r) in radii.iter().enumerate() {
        let s = sigma.get(k).copied().unwrap_or(0.0);
        let n = n0(cfg.c1, s, cfg.t);
        let e = eta(n);
        let factor = 1.0 - 0.25 * e;
        if k > 0 {
            envelope = if cfg.lower_order {
                let inv = if e > 0.0 { 1.0 / e } else { f64::INFINITY };
                0.5 * envelope + (cfg.lower_order_c + inv) * r
            } else {
                envelope * factor
            };
        }
        let measured = omega.get(k).copied();
        let within = measured.map(|w| w <= cfg.slack * envelope + 1e-15);
        entries.push(DecayEntry {
            k,
            r,
            sigma: s,
            n0: n,
            eta: e,
            factor,
            envelope,
            omega: measured,
            within,
        });
    }
    let samples: Vec<DensitySample> = radii
        .iter()
        .zip(sigma)
        .map(|(&r, &s)| DensitySample::at_radius(2.0 * r, s))
        .collect();
    let density = criterion_density(&samples, cfg.c1 * core::f64::consts::LN_2, cfg.t, 0.0);
    let passed = entries.iter().all(|e| e.within.unwrap_or(true));
    DecayReport {
        config: *cfg,
        entries,
        density,
        passed,
    }
}

/// `log ∏_{k=1}^{K} (1 − η_k/4)` with the lower bound
/// `η_k = (4 (k log 4 − log 2r₀))^{−1}`, summed in log space.
pub fn log_partial_product(r0: f64, count: u64) -> f64 {
    let l4 = math::ln(4.0);
    let base = math::ln(2.0 * r0);
    let mut sum = 0.0;
    for k in 1..=count {
        let eta = 1.0 / (4.0 * (k as f64 * l4 - base));
        sum += math::ln_1p(-0.25 * eta);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, ShapeSpec};
    use crate::rng::Sampler;

    #[test]
    fn theta_examples() {
        let c = constants(2.0, 2);
        assert!((c.theta - 1.618_033_988_749_895).abs() < 1e-12);
        assert!(c.theta1.is_none());
        assert!((constants(2.0, 8).theta - 1.207_106_781_186_547_5).abs() < 1e-12);
        for t in [1.5, 2.0, 3.0, 4.0] {
            for n in [2usize, 3, 8] {
                let c = constants(t, n);
                assert!((c.theta * c.theta - c.theta - t / n as f64).abs() < 1e-12);
                assert!(c.beta > 0.0);
                match c.theta1 {
                    Some(th) => {
                        assert!(t < n as f64);
                        assert!((th * th - th - t / (n as f64 - t)).abs() < 1e-12);
                    }
                    None => assert!(t >= n as f64),
                }
            }
        }
    }

    fn disk(h: f64) -> GridDomain {
        build_grid(&ShapeSpec::ball(2, &[0.0, 0.0], 1.0), h).unwrap()
    }

    #[test]
    fn level_stats_constant_and_empty() {
        let g = disk(1.0 / 16.0);
        let u = Field::constant(&g, 0.3);
        let y = [0.0; 3];
        let full = level_stats(&g, &u, &y, 0.5, 0.5, 2.0);
        let count = region(&g, &y, 0.5).len() as f64;
        let vol = count * g.h() * g.h();
        assert_eq!(full.b, vol);
        assert!((full.u_int - 0.04 * vol).abs() < 1e-15);
        let none = level_stats(&g, &u, &y, 0.2, 0.5, 2.0);
        assert_eq!((none.b, none.u_int, none.psi), (0.0, 0.0, 0.0));
    }

    #[test]
    fn level_stats_are_monotone() {
        let g = disk(1.0 / 16.0);
        let mut rng = Sampler::new(9);
        let u = Field::from_fn(&g, |_| rng.uniform());
        let y = [0.25, 0.0, 0.0];
        let mut last = level_stats(&g, &u, &y, 0.1, 0.2, 3.0);
        for (k, rho) in [(0.2, 0.3), (0.5, 0.3), (0.5, 0.6), (0.9, 0.7)] {
            let s = level_stats(&g, &u, &y, k, rho, 3.0);
            assert!(s.b >= last.b && s.u_int >= last.u_int && s.psi >= last.psi);
            last = s;
        }
    }

    #[test]
    fn caccioppoli_vanishes_on_constants() {
        let g = disk(1.0 / 16.0);
        let st = Stencil::new(&g);
        let u = Field::constant(&g, 1.0);
        let r = check_caccioppoli(&g, &st, &u, &[0.0; 3], 1.0, 0.2, 0.4, 2.0, 1e-12);
        assert_eq!((r.lhs, r.rhs, r.c_emp, r.violation), (0.0, 0.0, 0.0, false));
    }

    #[test]
    fn psi_zero_start() {
        let g = disk(1.0 / 16.0);
        let u = Field::constant(&g, 1.0);
        let s = IterationSchedule {
            r0: 0.4,
            k0: 0.5,
            d: 0.25,
            levels: 5,
        };
        let rep = check_psi_recursion(&g, &u, &[0.0; 3], &s, 2.0);
        assert!(rep.stats.iter().all(|s| s.psi == 0.0));
        assert!(rep.geometric_decay && rep.nonincreasing && rep.truncated);
        assert_eq!(rep.c_hat, None);
    }

    #[test]
    fn threshold_closes_the_induction() {
        let (t, n, r0, psi0, c_hat) = (3.0, 2, 0.25, 1e-3, 1e-6);
        let k = constants(t, n);
        let d = d_threshold(c_hat, r0, psi0, t, n);
        let s = IterationSchedule {
            r0,
            k0: 1.0,
            d,
            levels: 20,
        };
        let mut psi = psi0;
        for m in 0..20 {
            let dr = s.radius(m) - s.radius(m + 1);
            let dk = s.level(m) - s.level(m + 1);
            psi = c_hat
                * math::powf(dr, -(n as f64) * k.theta)
                * math::powf(dk, -t)
                * math::powf(psi, k.theta);
            let bound = psi0 * math::powf(2.0, -k.beta * (m + 1) as f64);
            assert!(psi <= bound * (1.0 + 1e-9), "m = {m}: {psi} > {bound}");
        }
        // A smaller drop lets the equality recursion escape the bound.
        let s = IterationSchedule { d: 0.5 * d, ..s };
        let dr = s.radius(0) - s.radius(1);
        let dk = s.level(0) - s.level(1);
        let psi1 = c_hat
            * math::powf(dr, -(n as f64) * k.theta)
            * math::powf(dk, -t)
            * math::powf(psi0, k.theta);
        assert!(psi1 > psi0 * math::powf(2.0, -k.beta));
    }

    #[test]
    fn schedule_shrinks() {
        let s = IterationSchedule {
            r0: 0.4,
            k0: 1.0,
            d: 0.5,
            levels: 8,
        };
        assert_eq!(s.radius(0), 0.4);
        assert_eq!(s.level(0), 1.0);
        for m in 0..8 {
            assert!(s.radius(m + 1) < s.radius(m) && s.radius(m + 1) > 0.2);
            assert!(s.level(m + 1) < s.level(m) && s.level(m + 1) > 0.5);
        }
    }

    #[test]
    fn oscillation_of_constant_is_zero() {
        let g = disk(1.0 / 16.0);
        let u = Field::constant(&g, 2.0);
        let seq = oscillation_sequence(&g, &u, &[0.0; 3], 0.5, 4.0, 3);
        assert!(seq.iter().all(|e| e.omega == 0.0));
        assert!(seq.iter().any(|e| e.k == 0));
    }

    #[test]
    fn full_density_envelope() {
        let radii = [0.1, 0.025, 0.00625];
        let rep = n0_and_decay(&radii, &[1.0; 3], &[1.0, 0.5, 0.2], &DecayConfig::default());
        for e in &rep.entries {
            assert_eq!(e.n0, Some(1));
            assert_eq!(e.eta, 0.25);
            assert_eq!(e.factor, 15.0 / 16.0);
        }
        assert_eq!(rep.entries[2].envelope, 15.0 * 15.0 / 256.0);
        assert!(rep.passed);
    }

    #[test]
    fn vanishing_density_predicts_nothing() {
        let rep = n0_and_decay(
            &[0.1, 0.05],
            &[0.5, 0.0],
            &[1.0, 1.0],
            &DecayConfig::default(),
        );
        assert_eq!(rep.entries[1].n0, None);
        assert_eq!(rep.entries[1].factor, 1.0);
        assert!(rep.passed);
    }
}
