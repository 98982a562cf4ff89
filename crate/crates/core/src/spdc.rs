//! Twin-photon source: collinear, degenerate type-II down-conversion with a
//! continuous-wave pump.
//!
//! Signal and idler are exactly anti-correlated in frequency (`ω₀ ± Ω`), so
//! the source is fully described by the spectral weight `|Φ(Ω)|²` sampled on
//! a grid of offsets `Ω`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{QoctError, Result};
use crate::materials::{IndexModel, UniaxialMaterial};
use crate::quadrature::simpson_weights;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative weight allowed at either end of a spectral grid.
pub const EDGE_THRESHOLD: f64 = 1e-4;

/// Vacuum wavelength (m) of angular frequency `omega` (rad/s).
pub fn wavelength_of(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}

/// Index seen by an extraordinary wave travelling at `theta` from the optic
/// axis: `1/n² = cos²θ/n_o² + sin²θ/n_e²`.
pub fn extraordinary_index_at_angle(n_o: f64, n_e: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    1.0 / ((c * c) / (n_o * n_o) + (s * s) / (n_e * n_e)).sqrt()
}

pub fn refractive_index(model: &IndexModel, wavelength: f64) -> Result<f64> {
    model.refractive_index(wavelength)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// How the spectral grid is laid out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub points: usize,
    /// Minimum number of sinc lobes covered on each side of the centre.
    pub min_lobes: usize,
    /// Fixed half-width in rad/s; overrides the lobe search.
    pub half_width: Option<f64>,
}

impl Default for SpectrumGrid {
    fn default() -> Self {
        Self {
            points: 4096,
            min_lobes: 3,
            half_width: None,
        }
    }
}

impl SpectrumGrid {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }
}

/// Spectral weights `w_k = |Φ(Ω_k)|²` on a uniform grid symmetric about 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Centre angular frequency ω₀ (rad/s).
    pub omega0: f64,
    /// Offsets Ω_k (rad/s), ascending and symmetric.
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `points` offsets spanning `[-half_width, half_width]`, exactly
/// antisymmetric: offset `N−1−k` is the negation of offset `k`. A grid with
/// `2n − 1` points reproduces every offset of the `n`-point grid bit for bit.
pub fn symmetric_offsets(points: usize, half_width: f64) -> Vec<f64> {
    let last = points - 1;
    let node = |k: usize| half_width * ((2 * k) as f64 / last as f64 - 1.0);
    (0..points)
        .map(|k| if 2 * k <= last { node(k) } else { -node(last - k) })
        .collect()
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn step(&self) -> f64 {
        if self.offsets.len() < 2 {
            return 0.0;
        }
        (self.offsets[self.offsets.len() - 1] - self.offsets[0]) / (self.offsets.len() - 1) as f64
    }

    pub fn half_width(&self) -> f64 {
        self.offsets.last().copied().unwrap_or(0.0)
    }

    pub fn quadrature_weights(&self) -> Vec<f64> {
        simpson_weights(self.len(), self.step())
    }

    /// `∫|Φ(Ω)|² dΩ` by composite Simpson.
    pub fn integral(&self) -> f64 {
        self.quadrature_weights()
            .iter()
            .zip(&self.weights)
            .map(|(q, w)| q * w)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w * factor).collect(),
            ..self.clone()
        }
    }

    /// Rescaled to unit integral.
    pub fn normalized(&self) -> Self {
        let total = self.integral();
        if total > 0.0 {
            self.scaled(1.0 / total)
        } else {
            self.clone()
        }
    }

    /// `(w(Ω) + w(−Ω))/2`.
    pub fn symmetrized(&self) -> Self {
        let n = self.len();
        Self {
            weights: (0..n)
                .map(|k| 0.5 * (self.weights[k] + self.weights[n - 1 - k]))
                .collect(),
            ..self.clone()
        }
    }

    /// `max |w(Ω) − w(−Ω)| / max w`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        let peak = self.peak();
        if peak <= 0.0 {
            return 0.0;
        }
        (0..n)
            .map(|k| (self.weights[k] - self.weights[n - 1 - k]).abs())
            .fold(0.0, f64::max)
            / peak
    }

    pub fn peak(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Largest end-point weight relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.peak();
        if peak <= 0.0 || self.is_empty() {
            return 0.0;
        }
        self.weights[0].max(self.weights[self.len() - 1]) / peak
    }

    fn check_edges(self) -> Result<Self> {
        let ratio = self.edge_ratio();
        if ratio >= EDGE_THRESHOLD {
            return Err(QoctError::Configuration(format!(
                "spectral grid too narrow: edge weight is {ratio:.3e} of the peak"
            )));
        }
        Ok(self)
    }
}

/// Gaussian spectrum `exp(−4 ln2 Ω²/ΔΩ²)`. Without an explicit half-width the
/// grid spans six FWHM.
pub fn gaussian_spectrum(omega0: f64, fwhm: f64, points: usize, half_width: Option<f64>) -> Result<Spectrum> {
    if !(fwhm > 0.0) {
        return Err(QoctError::Argument(format!("FWHM must be positive, got {fwhm}")));
    }
    if points < 3 {
        return Err(QoctError::Argument("spectral grid needs at least 3 points".into()));
    }
    let half_width = half_width.unwrap_or(3.0 * fwhm);
    let offsets = symmetric_offsets(points, half_width);
    let a = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
    let weights = offsets.iter().map(|o| (-a * o * o).exp()).collect();
    Spectrum {
        omega0,
        offsets,
        weights,
    }
    .check_edges()
}

/// Pump, crystal and phase-matching geometry of a type-II source. The pump
/// and the signal are extraordinary waves, the idler is ordinary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinPhotonSource {
    /// Pump vacuum wavelength (m).
    pub pump_wavelength: f64,
    /// Crystal length (m).
    pub crystal_length: f64,
    pub crystal: UniaxialMaterial,
    /// Angle between the optic axis and the propagation direction (rad).
    pub cut_angle: Option<f64>,
}

impl TwinPhotonSource {
    pub fn new(pump_wavelength: f64, crystal_length: f64, crystal: UniaxialMaterial) -> Result<Self> {
        if !(pump_wavelength > 0.0) || !(crystal_length > 0.0) {
            return Err(QoctError::Argument(
                "pump wavelength and crystal length must be positive".into(),
            ));
        }
        Ok(Self {
            pump_wavelength,
            crystal_length,
            crystal,
            cut_angle: None,
        })
    }

    /// Source with its cut angle solved for degenerate collinear phase matching.
    pub fn phase_matched(pump_wavelength: f64, crystal_length: f64, crystal: UniaxialMaterial) -> Result<Self> {
        let mut source = Self::new(pump_wavelength, crystal_length, crystal)?;
        source.cut_angle = Some(source.solve_cut_angle()?);
        Ok(source)
    }

    /// Degenerate centre frequency ω₀; the pump sits at exactly 2ω₀.
    pub fn center_frequency(&self) -> f64 {
        PI * SPEED_OF_LIGHT / self.pump_wavelength
    }

    pub fn pump_frequency(&self) -> f64 {
        2.0 * self.center_frequency()
    }

    fn extraordinary_wavenumber(&self, omega: f64, theta: f64) -> Result<f64> {
        let lambda = wavelength_of(omega);
        let n_o = self.crystal.ordinary.refractive_index(lambda)?;
        let n_e = self.crystal.extraordinary.refractive_index(lambda)?;
        Ok(extraordinary_index_at_angle(n_o, n_e, theta) * omega / SPEED_OF_LIGHT)
    }

    fn ordinary_wavenumber(&self, omega: f64) -> Result<f64> {
        Ok(self.crystal.ordinary.refractive_index(wavelength_of(omega))? * omega / SPEED_OF_LIGHT)
    }

    /// `Δk_z(Ω) = k_p(2ω₀) − k_s(ω₀+Ω) − k_i(ω₀−Ω)` at cut angle `theta`.
    pub fn phase_mismatch_at(&self, theta: f64, offset: f64) -> Result<f64> {
        let w0 = self.center_frequency();
        Ok(self.extraordinary_wavenumber(2.0 * w0, theta)?
            - self.extraordinary_wavenumber(w0 + offset, theta)?
            - self.ordinary_wavenumber(w0 - offset)?)
    }

    /// Phase mismatch (rad/m) at the configured cut angle.
    pub fn phase_mismatch(&self, offset: f64) -> Result<f64> {
        let theta = self
            .cut_angle
            .ok_or_else(|| QoctError::Configuration("cut angle not set; call solve_cut_angle first".into()))?;
        self.phase_mismatch_at(theta, offset)
    }

    /// Bisection for the cut angle in (0, π/2) that zeroes `Δk_z(0)`.
    pub fn solve_cut_angle(&self) -> Result<f64> {
        let f = |theta: f64| self.phase_mismatch_at(theta, 0.0);
        let mut lo = 1e-6;
        let mut hi = FRAC_PI_2 - 1e-6;
        let (mut f_lo, f_hi) = (f(lo)?, f(hi)?);
        let scale = self.crystal_length / 2.0;
        if (f_lo * scale).abs() < 1e-12 && (f_hi * scale).abs() < 1e-12 {
            return Err(QoctError::Configuration(
                "phase mismatch vanishes at every angle; cut angle is undefined".into(),
            ));
        }
        if f_lo * f_hi > 0.0 {
            return Err(QoctError::Configuration(format!(
                "no type-II phase-matching angle for a {:.1} nm pump",
                self.pump_wavelength * 1e9
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f_mid = f(mid)?;
            if f_mid == 0.0 {
                return Ok(mid);
            }
            if (f_lo < 0.0) == (f_mid < 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let theta = 0.5 * (lo + hi);
        let residual = f(theta)?.abs() * scale;
        if residual >= 1e-6 {
            return Err(QoctError::Configuration(format!(
                "cut-angle bisection stalled with |Δk L/2| = {residual:.3e}"
            )));
        }
        Ok(theta)
    }

    /// `|Φ(Ω)|² = |L sinc(Δk_z(Ω) L/2)|²`.
    pub fn weight(&self, offset: f64) -> Result<f64> {
        let x = self.phase_mismatch(offset)? * self.crystal_length / 2.0;
        let phi = self.crystal_length * sinc(x);
        Ok(phi * phi)
    }

    /// Offset `Ω` (signed by `side`) where `|Δk_z| L/2` first reaches
    /// `lobes·π`.
    pub fn lobe_edge(&self, lobes: usize, side: f64) -> Result<f64> {
        let target = lobes as f64 * PI;
        let x = |o: f64| -> Result<f64> { Ok(self.phase_mismatch(side * o)?.abs() * self.crystal_length / 2.0) };
        // Stay inside the dispersion band: at most ±25 % of ω₀.
        let max_offset = 0.25 * self.center_frequency();
        let mut hi = max_offset / 1024.0;
        while x(hi)? < target {
            hi *= 2.0;
            if hi > max_offset {
                return Err(QoctError::Configuration(format!(
                    "sinc lobe {lobes} lies outside the dispersion band"
                )));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if x(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Chooses the half-width: the narrowest sinc-zero position covering
    /// `min_lobes` on both sides at which both grid ends fall below
    /// [`EDGE_THRESHOLD`] of the peak.
    fn auto_half_width(&self, min_lobes: usize) -> Result<f64> {
        let floor = self.lobe_edge(min_lobes, 1.0)?.max(self.lobe_edge(min_lobes, -1.0)?);
        let peak = self.crystal_length * self.crystal_length;
        let mut candidates = Vec::new();
        for lobes in min_lobes..=64 {
            for side in [1.0, -1.0] {
                match self.lobe_edge(lobes, side) {
                    Ok(w) if w >= floor * (1.0 - 1e-12) => candidates.push(w),
                    Ok(_) => {}
                    Err(QoctError::Configuration(_)) => break,
                    Err(e) => return Err(e),
                }
            }
        }
        candidates.sort_by(f64::total_cmp);
        for w in candidates {
            let edge = self.weight(w)?.max(self.weight(-w)?);
            if edge < EDGE_THRESHOLD * peak {
                return Ok(w);
            }
        }
        Err(QoctError::Configuration(
            "no symmetric spectral window keeps both edges below threshold".into(),
        ))
    }

    /// Samples `|Φ(Ω)|²`; requires a solved cut angle.
    pub fn spectrum(&self, grid: &SpectrumGrid) -> Result<Spectrum> {
        if grid.points < 3 {
            return Err(QoctError::Argument("spectral grid needs at least 3 points".into()));
        }
        let half_width = match grid.half_width {
            Some(w) if w > 0.0 => w,
            Some(w) => return Err(QoctError::Argument(format!("half-width must be positive, got {w}"))),
            None => self.auto_half_width(grid.min_lobes.max(1))?,
        };
        let offsets = symmetric_offsets(grid.points, half_width);
        let weights = offsets.iter().map(|&o| self.weight(o)).collect::<Result<Vec<_>>>()?;
        Spectrum {
            omega0: self.center_frequency(),
            offsets,
            weights,
        }
        .check_edges()
    }
}
