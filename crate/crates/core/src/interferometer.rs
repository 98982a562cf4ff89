//! Reference arm, beam splitter and the coincidence-rate engine.
//!
//! With `v(ω) = U₁(ω)e_s` and `p = U₂e_i` the sample projection is
//! `F(ω) = p†v(ω)`, and
//!
//! ```text
//! Λ₀   = ∫ |Φ(Ω)|² |v(ω₀+Ω)|² dΩ
//! Λ(t) = ∫ |Φ(Ω)|² F(ω₀+Ω) F*(ω₀−Ω) e^{−iΩt} dΩ
//! R(τ) = Λ₀ − V_BS·Re Λ(2τ)
//! ```
//!
//! Delays are reported as a one-way optical path `x = cτ/2`, so an interface
//! buried under a layer of group index `n_g` and thickness `z` shows up at
//! `x = n_g·z`. The raw interferometer delay is `cτ = 2x`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QoctError, Result};
use crate::jones::{wave_plate, PolarizationMatrix, PolarizationVector};
use crate::quadrature::simpson_weights;
use crate::sample::{dispersion_expansion, LayeredSample};
use crate::spdc::{Spectrum, SPEED_OF_LIGHT};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rates more negative than this fraction of Λ₀ are counted as clipped.
pub const CLIP_GUARD: f64 = 1e-9;

/// Half-wave plate at θ, optionally followed by a quarter-wave plate at φ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceArm {
    pub half_wave_angle: f64,
    #[serde(default)]
    pub quarter_wave_angle: Option<f64>,
}

impl ReferenceArm {
    pub fn rotator(theta: f64) -> Self {
        Self {
            half_wave_angle: theta,
            quarter_wave_angle: None,
        }
    }

    pub fn cascade(theta: f64, phi: f64) -> Self {
        Self {
            half_wave_angle: theta,
            quarter_wave_angle: Some(phi),
        }
    }

    /// `2θ = 0°`: the arm whose single-layer dip rate is `cos²δ`.
    pub fn horizontal() -> Self {
        Self::rotator(0.0)
    }

    /// `2θ = 90°`: the arm whose single-layer dip rate is `sin²δ`.
    pub fn vertical() -> Self {
        Self::rotator(std::f64::consts::FRAC_PI_4)
    }

    /// `U₂`. The half-wave angle is measured from the idler (`e_i`) axis, so
    /// `θ = 0` leaves `e_i` in place and `2θ = 90°` turns it into `e_s`.
    pub fn operator(&self) -> PolarizationMatrix {
        let half = wave_plate(std::f64::consts::PI, std::f64::consts::FRAC_PI_2 - self.half_wave_angle);
        match self.quarter_wave_angle {
            None => half,
            Some(phi) => wave_plate(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2 - phi) * half.scale(-I),
        }
    }

    /// `p = U₂e_i`.
    pub fn state(&self) -> PolarizationVector {
        self.operator().apply(&PolarizationVector::IDLER)
    }

    /// Closed form of `U₂e_i` as `(e_s, e_i)` components.
    pub fn analytic_state(&self) -> PolarizationVector {
        let t2 = 2.0 * self.half_wave_angle;
        match self.quarter_wave_angle {
            None => PolarizationVector::new(I * t2.sin(), I * t2.cos()),
            Some(phi) => {
                let d2 = 2.0 * (phi - self.half_wave_angle);
                PolarizationVector::new(
                    Complex64::new(t2.sin(), d2.sin()) * FRAC_1_SQRT_2,
                    Complex64::new(t2.cos(), d2.cos()) * FRAC_1_SQRT_2,
                )
            }
        }
    }
}

pub fn reference_operator(arm: &ReferenceArm) -> PolarizationMatrix {
    arm.operator()
}

/// Lossless beam splitter described by its power reflectance `|r|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    pub reflectance: f64,
}

impl BeamSplitter {
    pub fn new(reflectance: f64) -> Result<Self> {
        if !(reflectance > 0.0 && reflectance < 1.0) {
            return Err(QoctError::Argument(format!(
                "beam-splitter reflectance must lie in (0, 1), got {reflectance}"
            )));
        }
        Ok(Self { reflectance })
    }

    pub fn balanced() -> Self {
        Self { reflectance: 0.5 }
    }

    pub fn transmittance(&self) -> f64 {
        1.0 - self.reflectance
    }

    /// `V_BS = 2|r|²|t|²/(|r|⁴ + |t|⁴)`.
    pub fn visibility(&self) -> f64 {
        let (r, t) = (self.reflectance, self.transmittance());
        2.0 * r * t / (r * r + t * t)
    }
}

impl Default for BeamSplitter {
    fn default() -> Self {
        Self::balanced()
    }
}

/// Argument `t` of Λ for a reported delay `x`: `t = 2τ = 4x/c`.
pub fn lambda_argument(depth: f64) -> f64 {
    4.0 * depth / SPEED_OF_LIGHT
}

/// Rate argument `τ = 2x/c` for a reported delay `x`.
pub fn rate_delay(depth: f64) -> f64 {
    2.0 * depth / SPEED_OF_LIGHT
}

/// `F(ω) = p†v` for a projected state.
pub fn sample_projection_of(p: &PolarizationVector, v: &PolarizationVector) -> Complex64 {
    p.inner(v)
}

/// `F_m(ω) = e_i†U₂†u_m(ω)`.
pub fn sample_projection(sample: &LayeredSample, arm: &ReferenceArm, m: usize, omega: f64) -> Result<Complex64> {
    let u = crate::sample::interface_kernel(sample, m, omega)?;
    Ok(arm.state().inner(&u))
}

/// Sample response sampled on the spectral grid, reusable across arms and
/// delays.
#[derive(Clone, Debug)]
pub struct SampleResponse {
    pub omega0: f64,
    offsets: Vec<f64>,
    /// Quadrature weight times spectral weight, `q_k·w_k`.
    weights: Vec<f64>,
    /// `v(ω₀ + Ω_k)`.
    states: Vec<PolarizationVector>,
    lambda0: f64,
}

impl SampleResponse {
    pub fn new(sample: &LayeredSample, spectrum: &Spectrum) -> Result<Self> {
        if spectrum.len() < 3 {
            return Err(QoctError::Argument("spectrum needs at least 3 points".into()));
        }
        let q = simpson_weights(spectrum.len(), spectrum.step());
        let weights: Vec<f64> = q.iter().zip(&spectrum.weights).map(|(q, w)| q * w).collect();
        let states = spectrum
            .offsets
            .par_iter()
            .map(|o| sample.returned_state(spectrum.omega0 + o))
            .collect::<Result<Vec<_>>>()?;
        let lambda0 = weights.iter().zip(&states).map(|(c, v)| c * v.norm_sqr()).sum();
        Ok(Self {
            omega0: spectrum.omega0,
            offsets: spectrum.offsets.clone(),
            weights,
            states,
            lambda0,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Λ₀; independent of the reference arm.
    pub fn lambda_constant(&self) -> f64 {
        self.lambda0
    }

    fn mirror(&self, k: usize) -> usize {
        self.len() - 1 - k
    }

    /// `c_k F(ω₀+Ω_k) F*(ω₀−Ω_k)` for every grid point.
    fn products(&self, arm: &ReferenceArm) -> Vec<Complex64> {
        let p = arm.state();
        let f: Vec<Complex64> = self.states.iter().map(|v| p.inner(v)).collect();
        (0..self.len())
            .map(|k| self.weights[k] * f[k] * f[self.mirror(k)].conj())
            .collect()
    }

    fn transform(&self, products: &[Complex64], t: f64) -> Complex64 {
        products
            .iter()
            .zip(&self.offsets)
            .map(|(a, o)| a * Complex64::from_polar(1.0, -o * t))
            .sum()
    }

    /// Λ(t).
    pub fn lambda_varying(&self, arm: &ReferenceArm, t: f64) -> Complex64 {
        self.transform(&self.products(arm), t)
    }

    /// `M(t)` with `Λ(t) = p†M(t)p` for any reference state `p`.
    pub fn coherence_matrix(&self, t: f64) -> PolarizationMatrix {
        let mut m = PolarizationMatrix::ZERO;
        for k in 0..self.len() {
            let c = self.weights[k] * Complex64::from_polar(1.0, -self.offsets[k] * t);
            let a = self.states[k].0;
            let b = self.states[self.mirror(k)].0;
            for (row, ar) in m.0.iter_mut().zip(a) {
                for (entry, bs) in row.iter_mut().zip(b) {
                    *entry += c * ar * bs.conj();
                }
            }
        }
        m
    }

    fn clip(&self, raw: f64) -> (f64, bool) {
        if raw >= 0.0 {
            (raw, false)
        } else {
            (0.0, raw < -CLIP_GUARD * self.lambda0)
        }
    }

    /// `R(τ) = Λ₀ − V_BS·Re Λ(2τ)`, clamped at zero and optionally divided
    /// by Λ₀.
    pub fn coincidence_rate(&self, arm: &ReferenceArm, bs: &BeamSplitter, tau: f64, normalize: bool) -> f64 {
        let raw = self.lambda0 - bs.visibility() * self.lambda_varying(arm, 2.0 * tau).re;
        let (rate, _) = self.clip(raw);
        if normalize {
            normalized(rate, self.lambda0)
        } else {
            rate
        }
    }

    /// Rates over reported delays `x` (m). Delay points are evaluated in
    /// parallel; each value depends only on its own delay, so the output does
    /// not depend on the worker count.
    pub fn scan(&self, arm: &ReferenceArm, bs: &BeamSplitter, delays: &[f64]) -> Result<ArmScan> {
        check_delays(delays)?;
        let products = self.products(arm);
        let v = bs.visibility();
        let raw: Vec<f64> = delays
            .par_iter()
            .map(|&x| self.lambda0 - v * self.transform(&products, lambda_argument(x)).re)
            .collect();
        let mut clipped = 0;
        let rates = raw
            .iter()
            .map(|&r| {
                let (rate, flagged) = self.clip(r);
                clipped += flagged as usize;
                normalized(rate, self.lambda0)
            })
            .collect();
        Ok(ArmScan {
            arm: *arm,
            delays: delays.to_vec(),
            rates,
            lambda0: self.lambda0,
            visibility: v,
            clipped,
        })
    }

    /// H and V scans combined into an interferogram.
    pub fn interferogram(&self, bs: &BeamSplitter, delays: &[f64]) -> Result<Interferogram> {
        let h = self.scan(&ReferenceArm::horizontal(), bs, delays)?;
        let v = self.scan(&ReferenceArm::vertical(), bs, delays)?;
        Interferogram::combine(&h, &v)
    }
}

/// Λ₀ below this is treated as "nothing reflected".
const VANISHING_LAMBDA0: f64 = 1e-300;

fn normalized(rate: f64, lambda0: f64) -> f64 {
    if lambda0 > VANISHING_LAMBDA0 {
        rate / lambda0
    } else {
        0.0
    }
}

fn check_delays(delays: &[f64]) -> Result<()> {
    if delays.iter().any(|d| !d.is_finite()) {
        return Err(QoctError::Argument("delays must be finite".into()));
    }
    if delays.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QoctError::Argument("delay grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Uniform delay grid from `start` to `stop` inclusive.
pub fn delay_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(stop > start) {
        return Err(QoctError::Argument(format!(
            "delay grid needs points ≥ 2 and stop > start, got {points} points over [{start}, {stop}]"
        )));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points).map(|j| start + step * j as f64).collect())
}

/// Λ₀-normalized rates for one reference-arm setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmScan {
    pub arm: ReferenceArm,
    /// Reported delays `x = cτ/2` (m).
    pub delays: Vec<f64>,
    pub rates: Vec<f64>,
    pub lambda0: f64,
    pub visibility: f64,
    /// Points clamped from below `−1e-9·Λ₀`.
    pub clipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interferogram {
    /// Reported delays `x = cτ/2` (m); interface 0 sits at 0.
    pub delays: Vec<f64>,
    pub r_h: Vec<f64>,
    pub r_v: Vec<f64>,
    /// `R_H + R_V − 1` in normalized units.
    pub r_t: Vec<f64>,
    pub lambda0_h: f64,
    pub lambda0_v: f64,
    pub visibility: f64,
    pub clipped: usize,
    /// Set when nothing is reflected; all rates are then zero.
    pub vanishing: bool,
}

impl Interferogram {
    pub fn combine(h: &ArmScan, v: &ArmScan) -> Result<Self> {
        if h.delays != v.delays {
            return Err(QoctError::Argument("H and V scans use different delay grids".into()));
        }
        let vanishing = !(h.lambda0 > VANISHING_LAMBDA0 && v.lambda0 > VANISHING_LAMBDA0);
        let r_t = if vanishing {
            vec![0.0; h.delays.len()]
        } else {
            h.rates.iter().zip(&v.rates).map(|(a, b)| a + b - 1.0).collect()
        };
        Ok(Self {
            delays: h.delays.clone(),
            r_h: h.rates.clone(),
            r_v: v.rates.clone(),
            r_t,
            lambda0_h: h.lambda0,
            lambda0_v: v.lambda0,
            visibility: h.visibility,
            clipped: h.clipped + v.clipped,
            vanishing,
        })
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Mean delay spacing (m).
    pub fn step(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        (self.delays[self.len() - 1] - self.delays[0]) / (self.len() - 1) as f64
    }

    /// Raw interferometer delays `cτ` (m).
    pub fn raw_delays(&self) -> Vec<f64> {
        self.delays.iter().map(|x| 2.0 * x).collect()
    }

    /// Same rates with every value multiplied by `factor`, as a detector
    /// with a different gain would report them.
    pub fn rescaled(&self, factor: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect();
        Self {
            r_h: s(&self.r_h),
            r_v: s(&self.r_v),
            r_t: s(&self.r_t),
            lambda0_h: self.lambda0_h * factor,
            lambda0_v: self.lambda0_v * factor,
            ..self.clone()
        }
    }
}

pub fn lambda_constant(sample: &LayeredSample, spectrum: &Spectrum) -> Result<f64> {
    Ok(SampleResponse::new(sample, spectrum)?.lambda_constant())
}

pub fn lambda_varying(sample: &LayeredSample, spectrum: &Spectrum, arm: &ReferenceArm, t: f64) -> Result<Complex64> {
    Ok(SampleResponse::new(sample, spectrum)?.lambda_varying(arm, t))
}

pub fn coincidence_rate(
    sample: &LayeredSample,
    spectrum: &Spectrum,
    arm: &ReferenceArm,
    bs: &BeamSplitter,
    tau: f64,
) -> Result<f64> {
    Ok(SampleResponse::new(sample, spectrum)?.coincidence_rate(arm, bs, tau, false))
}

pub fn scan(
    sample: &LayeredSample,
    spectrum: &Spectrum,
    arm: &ReferenceArm,
    bs: &BeamSplitter,
    delays: &[f64],
) -> Result<ArmScan> {
    SampleResponse::new(sample, spectrum)?.scan(arm, bs, delays)
}

/// Closed-form `(F₀, F₁)` of a single layer at retardance `delta` and axis
/// `alpha`, with `u₀ = i e_i` and `u₁ = i(sinδ e^{2iα} e_s + cosδ e_i)`.
/// In rotator mode `F₁ = cosδ cos2θ + sinδ sin2θ e^{2iα}`.
pub fn analytic_projections(arm: &ReferenceArm, delta: f64, alpha: f64) -> (Complex64, Complex64) {
    let p = arm.analytic_state();
    let (ps, pi) = (p.0[0].conj(), p.0[1].conj());
    let (sd, cd) = delta.sin_cos();
    let f0 = I * pi;
    let f1 = I * (ps * sd * Complex64::from_polar(1.0, 2.0 * alpha) + pi * cd);
    (f0, f1)
}

fn two_layer_parts(sample: &LayeredSample) -> Result<(Complex64, Complex64, &crate::sample::Layer)> {
    if sample.interfaces.len() != 2 || sample.layers.len() != 1 {
        return Err(QoctError::Argument(format!(
            "closed form needs 2 interfaces and 1 layer, got {} and {}",
            sample.interfaces.len(),
            sample.layers.len()
        )));
    }
    let layer = &sample.layers[0];
    if !(layer.ordinary.is_constant() && layer.extraordinary.is_constant()) {
        return Err(QoctError::Argument("closed form needs constant-index layers".into()));
    }
    Ok((
        sample.interfaces[0].reflectance,
        sample.interfaces[1].reflectance,
        layer,
    ))
}

/// Two-interface Λ(t) assembled term by term from the analytic projections
/// and the second-order phase expansion:
///
/// ```text
/// Λ(t) = |r₀|² g⁽⁰⁾(t) + |r₁|² g⁽¹⁾(t − 4β′z)
///      + r₀* r₁ e^{i2β₀z} g_d⁽¹⁰⁾(t − 2β′z) + r₀ r₁* e^{−i2β₀z} g̃_d⁽⁰¹⁾(t − 2β′z)
/// ```
///
/// where the cross envelopes carry `e^{±izβ″Ω²}`. Exact for constant indices.
pub fn closed_form_two_layer(
    sample: &LayeredSample,
    spectrum: &Spectrum,
    arm: &ReferenceArm,
    t: f64,
) -> Result<Complex64> {
    let (r0, r1, layer) = two_layer_parts(sample)?;
    let omega0 = spectrum.omega0;
    let e = dispersion_expansion(layer, omega0)?;
    let z = layer.thickness;
    let q = simpson_weights(spectrum.len(), spectrum.step());
    let n = spectrum.len();
    let f1 = spectrum
        .offsets
        .iter()
        .map(|o| Ok(analytic_projections(arm, layer.retardance(omega0 + o)?, layer.axis_angle).1))
        .collect::<Result<Vec<_>>>()?;
    let f0 = analytic_projections(arm, 0.0, 0.0).0;

    let mut g0 = Complex64::new(0.0, 0.0);
    let mut g1 = Complex64::new(0.0, 0.0);
    let mut g10 = Complex64::new(0.0, 0.0);
    let mut g01 = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let o = spectrum.offsets[k];
        let c = q[k] * spectrum.weights[k];
        let (fp, fm) = (f1[k], f1[n - 1 - k]);
        let quad = z * e.beta2 * o * o;
        g0 += c * f0 * f0.conj() * Complex64::from_polar(1.0, -o * t);
        g1 += c * fp * fm.conj() * Complex64::from_polar(1.0, -o * (t - 4.0 * e.beta1 * z));
        g10 += c * fp * f0.conj() * Complex64::from_polar(1.0, quad - o * (t - 2.0 * e.beta1 * z));
        g01 += c * f0 * fm.conj() * Complex64::from_polar(1.0, -quad - o * (t - 2.0 * e.beta1 * z));
    }
    let phase = Complex64::from_polar(1.0, 2.0 * e.beta0 * z);
    Ok(r0.norm_sqr() * g0 + r1.norm_sqr() * g1 + r0.conj() * r1 * phase * g10 + r0 * r1.conj() * phase.conj() * g01)
}

/// Two-interface Λ₀ with its cross term:
/// `(|r₀|² + |r₁|²)∫w + 2 Re[r₀* r₁ e^{i2β₀z} ∫w cosδ e^{i2(β′Ω + ½β″Ω²)z}]`.
pub fn closed_form_lambda0_two_layer(sample: &LayeredSample, spectrum: &Spectrum) -> Result<f64> {
    let (r0, r1, layer) = two_layer_parts(sample)?;
    let e = dispersion_expansion(layer, spectrum.omega0)?;
    let z = layer.thickness;
    let q = simpson_weights(spectrum.len(), spectrum.step());
    let mut total = 0.0;
    let mut cross = Complex64::new(0.0, 0.0);
    for (k, &o) in spectrum.offsets.iter().enumerate() {
        let c = q[k] * spectrum.weights[k];
        total += c;
        let delta = layer.retardance(spectrum.omega0 + o)?;
        cross += c * delta.cos() * Complex64::from_polar(1.0, 2.0 * (e.beta_at(o) - e.beta0) * z);
    }
    let cross = r0.conj() * r1 * Complex64::from_polar(1.0, 2.0 * e.beta0 * z) * cross;
    Ok((r0.norm_sqr() + r1.norm_sqr()) * total + 2.0 * cross.re)
}
