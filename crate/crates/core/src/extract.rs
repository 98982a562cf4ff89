//! Inverse analysis of interferograms: dip location, retardance from the
//! H/V dip ratio, axis angle from a nulling search, and interface spacing.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Degeneracy, QoctError, Result};
use crate::interferometer::{lambda_argument, BeamSplitter, Interferogram, ReferenceArm, SampleResponse};

pub const DEFAULT_PROMINENCE: f64 = 0.05;
pub const DEFAULT_MAX_WINDING: u32 = 3;
/// Coarse nulling grid step, 1°.
pub const DEFAULT_COARSE_STEP: f64 = PI / 180.0;
/// Refinement stops once the search step drops below this (rad).
pub const REFINE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    InterfaceDip,
    MidpointFeature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Dip,
    Peak,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipFeature {
    /// Refined delay (m, reported axis).
    pub position: f64,
    /// `|1 − R|` at the sampled extremum.
    pub depth: f64,
    /// Full width at half depth (m).
    pub width: f64,
    pub kind: FeatureKind,
    pub polarity: Polarity,
    /// Grid index of the sampled extremum.
    pub index: usize,
}

/// Features of a normalized series relative to its baseline of 1.
pub fn find_features(delays: &[f64], values: &[f64], prominence: f64) -> Vec<DipFeature> {
    let n = values.len().min(delays.len());
    let mut features = Vec::new();
    let mut k = 0;
    while k < n {
        let polarity = if values[k] < 1.0 - prominence {
            Polarity::Dip
        } else if values[k] > 1.0 + prominence {
            Polarity::Peak
        } else {
            k += 1;
            continue;
        };
        let inside = |v: f64| match polarity {
            Polarity::Dip => v < 1.0 - prominence,
            Polarity::Peak => v > 1.0 + prominence,
        };
        let start = k;
        while k < n && inside(values[k]) {
            k += 1;
        }
        let run = start..k;
        let extreme = run
            .clone()
            .reduce(|a, b| match polarity {
                Polarity::Dip if values[b] < values[a] => b,
                Polarity::Peak if values[b] > values[a] => b,
                _ => a,
            })
            .unwrap_or(start);
        features.push(describe(delays, &values[..n], extreme, polarity));
    }
    features
}

fn describe(delays: &[f64], values: &[f64], k: usize, polarity: Polarity) -> DipFeature {
    let n = values.len();
    let mut position = delays[k];
    if k > 0 && k + 1 < n {
        let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
        let curvature = a - 2.0 * b + c;
        if curvature != 0.0 {
            let offset = (0.5 * (a - c) / curvature).clamp(-0.5, 0.5);
            let step = if offset >= 0.0 {
                delays[k + 1] - delays[k]
            } else {
                delays[k] - delays[k - 1]
            };
            position += offset * step;
        }
    }
    let depth = (1.0 - values[k]).abs();
    let half = |v: f64| (1.0 - v).abs() < 0.5 * depth;
    let crossing = |i: usize, j: usize| {
        // Linear interpolation between an inside point i and an outside point j.
        let (vi, vj) = ((1.0 - values[i]).abs(), (1.0 - values[j]).abs());
        let f = if vi != vj { (vi - 0.5 * depth) / (vi - vj) } else { 0.0 };
        delays[i] + f * (delays[j] - delays[i])
    };
    let mut lo = k;
    while lo > 0 && !half(values[lo - 1]) {
        lo -= 1;
    }
    let left = if lo > 0 { crossing(lo, lo - 1) } else { delays[0] };
    let mut hi = k;
    while hi + 1 < n && !half(values[hi + 1]) {
        hi += 1;
    }
    let right = if hi + 1 < n {
        crossing(hi, hi + 1)
    } else {
        delays[n - 1]
    };
    DipFeature {
        position,
        depth,
        width: right - left,
        kind: FeatureKind::InterfaceDip,
        polarity,
        index: k,
    }
}

/// Relative depth mismatch allowed between the two side lobes of a dispersed
/// midpoint feature.
const SIDE_LOBE_DEPTH_TOLERANCE: f64 = 0.1;

/// Dips and peaks of `R_T`. Peaks are always midpoint features. A dip is a
/// midpoint feature when it lies within one grid step of the mean of two
/// flanking dips, or when it is one of a pair of equally deep dips placed
/// symmetrically (to one grid step) about the mean of two deeper flanking
/// dips. The second case covers the side lobes of a midpoint feature spread
/// by group-velocity dispersion.
pub fn find_dips(ig: &Interferogram, prominence: f64) -> Vec<DipFeature> {
    if ig.is_empty() || ig.vanishing {
        return Vec::new();
    }
    let mut features = find_features(&ig.delays, &ig.r_t, prominence);
    let step = ig.step();
    let dips: Vec<(f64, f64)> = features
        .iter()
        .filter(|f| f.polarity == Polarity::Dip)
        .map(|f| (f.position, f.depth))
        .collect();
    let centred = |x: f64, a: f64, b: f64| a < x && x < b && (x - 0.5 * (a + b)).abs() <= step;
    let side_lobe = |&(x, depth): &(f64, f64)| {
        dips.iter().any(|&(y, other)| {
            y != x
                && (depth - other).abs() <= SIDE_LOBE_DEPTH_TOLERANCE * depth.max(other)
                && dips.iter().any(|&(a, da)| {
                    dips.iter().any(|&(b, db)| {
                        da > depth && db > depth && a < x.min(y) && x.max(y) < b && centred(0.5 * (x + y), a, b)
                    })
                })
        })
    };
    for f in &mut features {
        let flanked = dips
            .iter()
            .any(|&(a, _)| dips.iter().any(|&(b, _)| centred(f.position, a, b)));
        if f.polarity == Polarity::Peak || flanked || side_lobe(&(f.position, f.depth)) {
            f.kind = FeatureKind::MidpointFeature;
        }
    }
    features
}

/// `δ = atan(√(Λ_V/Λ_H))` as a two-argument arctangent, in `[0, π/2]`.
/// Inputs are normalized rates; tiny negative values from quadrature noise
/// are treated as zero.
pub fn delta_from_ratio(lambda_v: f64, lambda_h: f64) -> Result<f64> {
    let (v, h) = (lambda_v.max(0.0), lambda_h.max(0.0));
    if !(v + h > 1e-12) {
        return Err(Degeneracy::VanishingRates.into());
    }
    Ok(v.sqrt().atan2(h.sqrt()))
}

/// All non-negative retardances with the same dip ratio as `principal`,
/// `kπ ± δ_p` for `k ≤ max_winding`, ascending.
pub fn delta_branches(principal: f64, max_winding: u32) -> Vec<f64> {
    let mut out: Vec<f64> = (0..=max_winding)
        .flat_map(|k| {
            let base = k as f64 * PI;
            [base - principal, base + principal]
        })
        .filter(|&d| d >= 0.0)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullResult {
    pub theta: f64,
    pub phi: f64,
    /// Forward-model rate at `(θ*, φ*)`.
    pub rate: f64,
    /// Best rate on the coarse grid.
    pub coarse_rate: f64,
    pub evaluations: usize,
}

/// Maximizes `rate(θ, φ)` over the half-wave/quarter-wave angles. A coarse
/// grid over `[0, π)²` is followed by a compass search that halves its step
/// down to [`REFINE_TOLERANCE`]. Ties on the grid go to the smallest
/// `(θ, φ)`.
pub fn null_search<F>(rate: F, coarse_step: f64) -> Result<NullResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if !(coarse_step > 0.0 && coarse_step < FRAC_PI_2) {
        return Err(QoctError::Argument(format!(
            "coarse step must lie in (0, π/2), got {coarse_step}"
        )));
    }
    let n = (PI / coarse_step).round().max(2.0) as usize;
    let step = PI / n as f64;
    let grid: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| rate(i as f64 * step, j as f64 * step)).collect())
        .collect();
    let (mut best, mut lo, mut hi) = ((0, 0), f64::INFINITY, f64::NEG_INFINITY);
    for (i, row) in grid.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r > hi {
                hi = r;
                best = (i, j);
            }
            lo = lo.min(r);
        }
    }
    if !(hi - lo > 1e-9 * hi.abs().max(lo.abs())) {
        return Err(Degeneracy::FlatLandscape.into());
    }
    let (mut theta, mut phi) = (best.0 as f64 * step, best.1 as f64 * step);
    let mut current = hi;
    let mut evaluations = n * n;
    let mut h = 0.5 * step;
    while h >= REFINE_TOLERANCE {
        let mut moved = false;
        for (dt, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let r = rate(theta + dt, phi + dp);
            evaluations += 1;
            if r > current {
                current = r;
                theta += dt;
                phi += dp;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
        if evaluations > n * n + 1_000_000 {
            break;
        }
    }
    Ok(NullResult {
        theta: theta.rem_euclid(PI),
        phi: phi.rem_euclid(PI),
        rate: current,
        coarse_rate: hi,
        evaluations,
    })
}

/// Real and imaginary parts of the single-layer cascade projection (up to
/// its `i/√2` prefactor):
///
/// ```text
/// Re: cosδ cos2θ + sinδ [sin2θ cos2α + sin2(φ−θ) sin2α]
/// Im: −cosδ cos2(φ−θ) + sinδ [sin2θ sin2α − sin2(φ−θ) cos2α]
/// ```
pub fn null_residuals(theta: f64, phi: f64, alpha: f64, delta: f64) -> [f64; 2] {
    let (a, b) = ((2.0 * theta).cos(), (2.0 * (phi - theta)).cos());
    let (c, d) = ((2.0 * theta).sin(), (2.0 * (phi - theta)).sin());
    let (s2, c2) = (2.0 * alpha).sin_cos();
    let (sd, cd) = delta.sin_cos();
    [cd * a + sd * (c * c2 + d * s2), -cd * b + sd * (c * s2 - d * c2)]
}

/// Axis angle in `[0, π)` from a null at `(θ*, φ*)` with known retardance.
/// Both orthogonality conditions are linear in `(cos2α, sin2α)` and are
/// solved together.
pub fn alpha_from_null(theta: f64, phi: f64, delta: f64) -> Result<f64> {
    let sd = delta.sin();
    if sd.abs() < 1e-9 {
        return Err(Degeneracy::IndeterminateAlpha.into());
    }
    let (a, b) = ((2.0 * theta).cos(), (2.0 * (phi - theta)).cos());
    let (c, d) = ((2.0 * theta).sin(), (2.0 * (phi - theta)).sin());
    let det = c * c + d * d;
    if det < 1e-12 {
        return Err(Degeneracy::IndeterminateAlpha.into());
    }
    let cot = delta.cos() / sd;
    let (r1, r2) = (-a * cot, b * cot);
    let x = (c * r1 - d * r2) / det;
    let y = (d * r1 + c * r2) / det;
    Ok((0.5 * y.atan2(x)).rem_euclid(PI))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceEstimate {
    /// Dip position (m, reported axis).
    pub position: f64,
    pub depth: f64,
    pub width: f64,
    /// Normalized `Λ_H` and `Λ_V` at the dip.
    pub lambda_h: f64,
    pub lambda_v: f64,
    /// Round-trip retardance, principal value in `[0, π/2]`.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    /// Retardance of the deepest interface, principal value.
    pub delta_est: Option<f64>,
    /// Preimages of `delta_est` under the ratio folding.
    pub delta_branches: Vec<f64>,
    pub alpha_est: Option<f64>,
    /// Axis angle if the retardance is `π − delta_est` instead; the dip
    /// ratio cannot tell the two apart.
    pub alpha_alternate: Option<f64>,
    pub interfaces: Vec<InterfaceEstimate>,
    /// Spacing of consecutive interface dips on the reported axis, i.e.
    /// optical path `n_g·d` (m).
    pub separations: Vec<f64>,
    /// Same spacing on the raw `cτ` axis (m).
    pub raw_separations: Vec<f64>,
    /// Round-trip group delays `2·n_g·d/c` (s).
    pub group_delays: Vec<f64>,
    /// `|r₀/r₁|²` from the first two dip depths.
    pub reflectance_ratio: Option<f64>,
    pub midpoint_features: Vec<DipFeature>,
    pub nulling_angles: Option<(f64, f64)>,
    pub null_rate: Option<f64>,
    /// Orthogonality residuals at `(θ*, φ*, α_est, δ_est)`.
    pub residuals: Option<[f64; 2]>,
    pub diagnostics: Vec<String>,
}

/// Interface positions, spacings, depth ratio and per-dip retardance.
pub fn layer_report(ig: &Interferogram, features: &[DipFeature], max_winding: u32) -> Result<ExtractionReport> {
    if ig.vanishing {
        return Err(Degeneracy::VanishingRates.into());
    }
    let dips: Vec<&DipFeature> = features
        .iter()
        .filter(|f| f.kind == FeatureKind::InterfaceDip && f.polarity == Polarity::Dip)
        .collect();
    if dips.is_empty() {
        return Err(Degeneracy::NoDips.into());
    }
    let v = if ig.visibility > 0.0 { ig.visibility } else { 1.0 };
    let interfaces: Vec<InterfaceEstimate> = dips
        .iter()
        .map(|d| {
            let lambda_h = (1.0 - ig.r_h[d.index]) / v;
            let lambda_v = (1.0 - ig.r_v[d.index]) / v;
            InterfaceEstimate {
                position: d.position,
                depth: d.depth,
                width: d.width,
                lambda_h,
                lambda_v,
                delta: delta_from_ratio(lambda_v, lambda_h).ok(),
            }
        })
        .collect();
    let separations: Vec<f64> = interfaces.windows(2).map(|w| w[1].position - w[0].position).collect();
    let mut report = ExtractionReport {
        raw_separations: separations.iter().map(|s| 2.0 * s).collect(),
        group_delays: separations.iter().map(|s| lambda_argument(*s) / 2.0).collect(),
        separations,
        reflectance_ratio: (interfaces.len() >= 2).then(|| interfaces[0].depth / interfaces[1].depth),
        midpoint_features: features
            .iter()
            .filter(|f| f.kind == FeatureKind::MidpointFeature)
            .cloned()
            .collect(),
        ..Default::default()
    };
    let last = interfaces.last().expect("at least one dip");
    report.delta_est = last.delta;
    if let Some(d) = last.delta {
        report.delta_branches = delta_branches(d, max_winding);
    }
    if interfaces.len() == 1 {
        report.diagnostics.push("single interface: no separation".into());
    }
    if ig.clipped > 0 {
        report
            .diagnostics
            .push(format!("{} rate samples clipped at zero", ig.clipped));
    }
    report
        .diagnostics
        .push("sign of the retardance is not determined by the dip ratio".into());
    report.interfaces = interfaces;
    Ok(report)
}

/// Nulling search at delay `x_star` (reported axis) on a forward model.
pub fn null_at(response: &SampleResponse, bs: &BeamSplitter, x_star: f64, coarse_step: f64) -> Result<NullResult> {
    let m = response.coherence_matrix(lambda_argument(x_star));
    let l0 = response.lambda_constant();
    let v = bs.visibility();
    null_search(
        |theta, phi| {
            let p = ReferenceArm::cascade(theta, phi).state();
            l0 - v * p.inner(&m.apply(&p)).re
        },
        coarse_step,
    )
}

/// Adds a nulling result to a report: `α` from the null and the residuals.
pub fn attach_null(report: &mut ExtractionReport, null: &NullResult) -> Result<()> {
    report.nulling_angles = Some((null.theta, null.phi));
    report.null_rate = Some(null.rate);
    let delta = report.delta_est.ok_or(Degeneracy::VanishingRates)?;
    let alpha = alpha_from_null(null.theta, null.phi, delta)?;
    report.alpha_est = Some(alpha);
    report.alpha_alternate = alpha_from_null(null.theta, null.phi, PI - delta).ok();
    report.residuals = Some(null_residuals(null.theta, null.phi, alpha, delta));
    Ok(())
}

/// Full three-measurement protocol against a forward model: H and V scans,
/// dip analysis, and a null at the deepest interface dip.
pub fn extract(
    response: &SampleResponse,
    bs: &BeamSplitter,
    delays: &[f64],
    prominence: f64,
    max_winding: u32,
    coarse_step: f64,
) -> Result<ExtractionReport> {
    let ig = response.interferogram(bs, delays)?;
    let features = find_dips(&ig, prominence);
    let mut report = layer_report(&ig, &features, max_winding)?;
    let x_star = report.interfaces.last().expect("non-empty").position;
    let null = null_at(response, bs, x_star, coarse_step)?;
    attach_null(&mut report, &null)?;
    Ok(report)
}
