//! Layered birefringent samples and their sample-arm operators.
//!
//! Layer `m` sits between interface `m − 1` and interface `m`. Each layer is a
//! linear retarder with an average phase `Δ_m = n̄ωd/c` and retardance
//! `δ_m = Δn·ωd/c`, where `Δn = n_o − n_e` (so quartz has `Δn < 0`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QoctError, Result};
use crate::jones::{quarter_wave_45, wave_plate, PolarizationMatrix, PolarizationVector, SIGMA_3};
use crate::materials::{quartz, IndexModel, UniaxialMaterial};
use crate::spdc::{wavelength_of, SPEED_OF_LIGHT};

/// Artificial group-velocity dispersion added to a layer's average
/// propagation constant: `β(ω) += ½β″(ω − ω_c)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectedGvd {
    /// β″ in s²/m.
    pub beta2: f64,
    /// Expansion centre ω_c in rad/s.
    pub center: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Thickness d_m (m).
    pub thickness: f64,
    /// Fast-axis angle α_m from the horizontal (rad).
    pub axis_angle: f64,
    pub ordinary: IndexModel,
    pub extraordinary: IndexModel,
    /// Evaluate δ at this frequency for every ω, ignoring its dispersion.
    #[serde(default)]
    pub frozen_retardance_at: Option<f64>,
    #[serde(default)]
    pub injected_gvd: Option<InjectedGvd>,
}

impl Layer {
    pub fn new(thickness: f64, axis_angle: f64, ordinary: IndexModel, extraordinary: IndexModel) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(QoctError::Argument(format!(
                "layer thickness must be positive, got {thickness}"
            )));
        }
        if !axis_angle.is_finite() {
            return Err(QoctError::Argument("layer axis angle must be finite".into()));
        }
        Ok(Self {
            thickness,
            axis_angle,
            ordinary,
            extraordinary,
            frozen_retardance_at: None,
            injected_gvd: None,
        })
    }

    pub fn of_material(thickness: f64, axis_angle: f64, material: &UniaxialMaterial) -> Result<Self> {
        Self::new(
            thickness,
            axis_angle,
            material.ordinary.clone(),
            material.extraordinary.clone(),
        )
    }

    /// Quartz with the constant indices `n_o = 1.53773`, `n_e = 1.54661`.
    pub fn quartz(thickness: f64, axis_angle: f64) -> Result<Self> {
        Self::of_material(thickness, axis_angle, &quartz())
    }

    pub fn with_frozen_retardance(mut self, omega: f64) -> Self {
        self.frozen_retardance_at = Some(omega);
        self
    }

    pub fn with_gvd(mut self, beta2: f64, center: f64) -> Self {
        self.injected_gvd = Some(InjectedGvd { beta2, center });
        self
    }

    fn indices(&self, omega: f64) -> Result<(f64, f64)> {
        let lambda = wavelength_of(omega);
        Ok((
            self.ordinary.refractive_index(lambda)?,
            self.extraordinary.refractive_index(lambda)?,
        ))
    }

    /// `n̄ = (n_o + n_e)/2`.
    pub fn mean_index(&self, omega: f64) -> Result<f64> {
        let (o, e) = self.indices(omega)?;
        Ok(0.5 * (o + e))
    }

    /// `Δn = n_o − n_e`.
    pub fn birefringence(&self, omega: f64) -> Result<f64> {
        let (o, e) = self.indices(omega)?;
        Ok(o - e)
    }

    /// Average propagation constant β(ω) in rad/m, including injected GVD.
    pub fn propagation_constant(&self, omega: f64) -> Result<f64> {
        let mut beta = self.mean_index(omega)? * omega / SPEED_OF_LIGHT;
        if let Some(g) = self.injected_gvd {
            let d = omega - g.center;
            beta += 0.5 * g.beta2 * d * d;
        }
        Ok(beta)
    }

    /// `δβ(ω) = Δn·ω/c`, frozen if requested.
    pub fn differential_constant(&self, omega: f64) -> Result<f64> {
        let w = self.frozen_retardance_at.unwrap_or(omega);
        Ok(self.birefringence(w)? * w / SPEED_OF_LIGHT)
    }

    /// Average phase delay `Δ_m(ω) = β(ω)·d`.
    pub fn average_phase(&self, omega: f64) -> Result<f64> {
        Ok(self.propagation_constant(omega)? * self.thickness)
    }

    /// Retardance `δ_m(ω) = δβ(ω)·d`, signed.
    pub fn retardance(&self, omega: f64) -> Result<f64> {
        Ok(self.differential_constant(omega)? * self.thickness)
    }

    /// Birefringent part `B_m = R(α)·b(δ)·R†(α)`.
    pub fn birefringence_matrix(&self, omega: f64) -> Result<PolarizationMatrix> {
        Ok(wave_plate(self.retardance(omega)?, self.axis_angle))
    }

    /// `B̃_m`, the same retarder at `−α`.
    pub fn tilde_matrix(&self, omega: f64) -> Result<PolarizationMatrix> {
        Ok(wave_plate(self.retardance(omega)?, -self.axis_angle))
    }
}

/// `S_m = e^{iΔ_m}·R(α_m)·b(δ_m)·R†(α_m)`.
pub fn layer_matrix(layer: &Layer, omega: f64) -> Result<PolarizationMatrix> {
    let phase = Complex64::from_polar(1.0, layer.average_phase(omega)?);
    Ok(layer.birefringence_matrix(omega)?.scale(phase))
}

/// Isotropic interface with amplitude reflectance `r`; its Jones operator is
/// `r·σ₃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub reflectance: Complex64,
}

impl Interface {
    pub fn new(reflectance: Complex64) -> Result<Self> {
        if !(reflectance.norm() <= 1.0 + 1e-12) {
            return Err(QoctError::Argument(format!(
                "|r| must not exceed 1, got {}",
                reflectance.norm()
            )));
        }
        Ok(Self { reflectance })
    }

    pub fn real(r: f64) -> Result<Self> {
        Self::new(Complex64::new(r, 0.0))
    }

    pub fn operator(&self) -> PolarizationMatrix {
        SIGMA_3.scale(self.reflectance)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LayeredSample {
    pub interfaces: Vec<Interface>,
    pub layers: Vec<Layer>,
}

/// Per-frequency sample quantities, accumulated interface by interface.
#[derive(Clone, Debug)]
pub struct InterfaceTerms {
    /// `φ^(m)` for m = 0..=N.
    pub phases: Vec<f64>,
    /// `u_m(ω)` for m = 0..=N.
    pub kernels: Vec<PolarizationVector>,
}

impl LayeredSample {
    /// `interfaces.len()` must be `layers.len() + 1`, except for the empty
    /// sample, which reflects nothing.
    pub fn new(interfaces: Vec<Interface>, layers: Vec<Layer>) -> Result<Self> {
        let empty = interfaces.is_empty() && layers.is_empty();
        if !empty && interfaces.len() != layers.len() + 1 {
            return Err(QoctError::Argument(format!(
                "{} layers need {} interfaces, got {}",
                layers.len(),
                layers.len() + 1,
                interfaces.len()
            )));
        }
        Ok(Self { interfaces, layers })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// A bare mirror with reflectance `r`.
    pub fn mirror(r: Complex64) -> Result<Self> {
        Self::new(vec![Interface::new(r)?], Vec::new())
    }

    /// Reflector buried under one layer, with no front-surface reflection.
    pub fn buried_reflector(layer: Layer, r1: Complex64) -> Result<Self> {
        Self::new(
            vec![Interface::new(Complex64::new(0.0, 0.0))?, Interface::new(r1)?],
            vec![layer],
        )
    }

    pub fn two_interface(layer: Layer, r0: Complex64, r1: Complex64) -> Result<Self> {
        Self::new(vec![Interface::new(r0)?, Interface::new(r1)?], vec![layer])
    }

    pub fn is_empty(&self) -> bool {
        self.interfaces.is_empty()
    }

    pub fn reflects(&self) -> bool {
        self.interfaces.iter().any(|i| i.reflectance.norm_sqr() > 0.0)
    }

    /// Phases `φ^(m)` and kernels `u_m` for all interfaces at `omega`.
    pub fn interface_terms(&self, omega: f64) -> Result<InterfaceTerms> {
        let q = quarter_wave_45();
        let qd = q.dagger();
        let n = self.interfaces.len();
        let mut phases = Vec::with_capacity(n);
        let mut kernels = Vec::with_capacity(n);
        let mut phase = 0.0;
        let mut forward = PolarizationMatrix::IDENTITY;
        let mut backward = PolarizationMatrix::IDENTITY;
        for m in 0..n {
            if m > 0 {
                let layer = &self.layers[m - 1];
                phase += layer.average_phase(omega)?;
                forward = forward * layer.birefringence_matrix(omega)?;
                backward = layer.tilde_matrix(omega)? * backward;
            }
            phases.push(phase);
            kernels.push((q * forward * SIGMA_3 * backward * qd).apply(&PolarizationVector::SIGNAL));
        }
        Ok(InterfaceTerms { phases, kernels })
    }

    /// `v(ω) = U₁(ω)·e_s = Σ_m r_m e^{i2φ^(m)} u_m(ω)`.
    pub fn returned_state(&self, omega: f64) -> Result<PolarizationVector> {
        let terms = self.interface_terms(omega)?;
        let zero = PolarizationVector::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        Ok(self
            .interfaces
            .iter()
            .zip(terms.phases.iter().zip(&terms.kernels))
            .fold(zero, |acc, (iface, (&phi, u))| {
                acc + u.scale(iface.reflectance * Complex64::from_polar(1.0, 2.0 * phi))
            }))
    }

    /// Index pairs `(l, k)` of layers whose birefringence matrices do not
    /// commute at `omega`; for such stacks the product order matters.
    pub fn non_commuting_layers(&self, omega: f64) -> Result<Vec<(usize, usize)>> {
        let mats = self
            .layers
            .iter()
            .map(|l| l.birefringence_matrix(omega))
            .collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::new();
        for l in 0..mats.len() {
            for k in l + 1..mats.len() {
                let commutator = mats[l] * mats[k] - mats[k] * mats[l];
                if commutator.distance(&PolarizationMatrix::ZERO) > 1e-12 {
                    pairs.push((l + 1, k + 1));
                }
            }
        }
        Ok(pairs)
    }
}

/// `H(ω) = Σ_m e^{i2φ^(m)} B^(m) r_m B̃^(m)` with `B^(m) = B₁⋯B_m` and
/// `B̃^(m) = B̃_m⋯B̃₁`.
pub fn transfer_function(sample: &LayeredSample, omega: f64) -> Result<PolarizationMatrix> {
    let mut h = PolarizationMatrix::ZERO;
    let mut phase = 0.0;
    let mut forward = PolarizationMatrix::IDENTITY;
    let mut backward = PolarizationMatrix::IDENTITY;
    for (m, iface) in sample.interfaces.iter().enumerate() {
        if m > 0 {
            let layer = &sample.layers[m - 1];
            phase += layer.average_phase(omega)?;
            forward = forward * layer.birefringence_matrix(omega)?;
            backward = layer.tilde_matrix(omega)? * backward;
        }
        let term = forward * iface.operator() * backward;
        h = h + term.scale(Complex64::from_polar(1.0, 2.0 * phase));
    }
    Ok(h)
}

/// `U₁(ω) = Q(45)·H(ω)·Q†(45)`.
pub fn sample_arm_operator(sample: &LayeredSample, omega: f64) -> Result<PolarizationMatrix> {
    let q = quarter_wave_45();
    Ok(q * transfer_function(sample, omega)? * q.dagger())
}

/// `u_m(ω) = Q(45)·B^(m)·σ₃·B̃^(m)·Q†(45)·e_s`.
pub fn interface_kernel(sample: &LayeredSample, m: usize, omega: f64) -> Result<PolarizationVector> {
    if m >= sample.interfaces.len() {
        return Err(QoctError::Argument(format!(
            "interface {m} out of range for a sample with {} interfaces",
            sample.interfaces.len()
        )));
    }
    let q = quarter_wave_45();
    let mut forward = PolarizationMatrix::IDENTITY;
    let mut backward = PolarizationMatrix::IDENTITY;
    for layer in &sample.layers[..m] {
        forward = forward * layer.birefringence_matrix(omega)?;
        backward = layer.tilde_matrix(omega)? * backward;
    }
    Ok((q * forward * SIGMA_3 * backward * q.dagger()).apply(&PolarizationVector::SIGNAL))
}

/// Second-order expansion of a layer's propagation constants about ω₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionExpansion {
    pub omega0: f64,
    /// β(ω₀), rad/m.
    pub beta0: f64,
    /// dβ/dω, s/m.
    pub beta1: f64,
    /// d²β/dω², s²/m.
    pub beta2: f64,
    /// δβ(ω₀), rad/m.
    pub delta_beta: f64,
    /// dδβ/dω, s/m.
    pub delta_beta1: f64,
}

impl DispersionExpansion {
    /// β(ω₀ + Ω) to second order.
    pub fn beta_at(&self, offset: f64) -> f64 {
        self.beta0 + self.beta1 * offset + 0.5 * self.beta2 * offset * offset
    }

    /// Group index `c·β′`.
    pub fn group_index(&self) -> f64 {
        SPEED_OF_LIGHT * self.beta1
    }
}

/// Expansion coefficients at `omega0`. Constant-index layers are handled
/// analytically; dispersive ones use central differences with step
/// `1e-4·ω₀`.
pub fn dispersion_expansion(layer: &Layer, omega0: f64) -> Result<DispersionExpansion> {
    let beta0 = layer.propagation_constant(omega0)?;
    let delta_beta = layer.differential_constant(omega0)?;
    let constant = layer.ordinary.is_constant() && layer.extraordinary.is_constant();
    if constant {
        let n_bar = layer.mean_index(omega0)?;
        let (gvd, offset) = layer.injected_gvd.map_or((0.0, 0.0), |g| (g.beta2, omega0 - g.center));
        let delta_beta1 = match layer.frozen_retardance_at {
            Some(_) => 0.0,
            None => layer.birefringence(omega0)? / SPEED_OF_LIGHT,
        };
        return Ok(DispersionExpansion {
            omega0,
            beta0,
            beta1: n_bar / SPEED_OF_LIGHT + gvd * offset,
            beta2: gvd,
            delta_beta,
            delta_beta1,
        });
    }
    let h = 1e-4 * omega0;
    let (bp, bm) = (
        layer.propagation_constant(omega0 + h)?,
        layer.propagation_constant(omega0 - h)?,
    );
    let (dp, dm) = (
        layer.differential_constant(omega0 + h)?,
        layer.differential_constant(omega0 - h)?,
    );
    Ok(DispersionExpansion {
        omega0,
        beta0,
        beta1: (bp - bm) / (2.0 * h),
        beta2: (bp - 2.0 * beta0 + bm) / (h * h),
        delta_beta,
        delta_beta1: (dp - dm) / (2.0 * h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jones::{SIGMA_1, SIGMA_2};
    use crate::materials::{quartz_sellmeier, Sellmeier, SellmeierTerm, QUARTZ_N_E, QUARTZ_N_O};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const OMEGA_800: f64 = 2.0 * PI * SPEED_OF_LIGHT / 800e-9;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn stack(thicknesses: &[f64], angles: &[f64], rs: &[Complex64]) -> LayeredSample {
        let layers = thicknesses
            .iter()
            .zip(angles)
            .map(|(&d, &a)| Layer::quartz(d, a).unwrap())
            .collect();
        LayeredSample::new(rs.iter().map(|&r| Interface::new(r).unwrap()).collect(), layers).unwrap()
    }

    #[test]
    fn quartz_layer_phases() {
        let layer = Layer::quartz(120e-6, 0.0).unwrap();
        let s = layer_matrix(&layer, OMEGA_800).unwrap();
        assert!(s.is_diagonal(1e-15));
        let delta = 2.0 * PI * (QUARTZ_N_O - QUARTZ_N_E) * 120e-6 / 800e-9;
        let diff = (s.0[0][0] / s.0[1][1]).arg();
        let wrapped = (delta + PI).rem_euclid(2.0 * PI) - PI;
        assert!((diff - wrapped).abs() < 1e-9, "{diff} vs {wrapped}");
        assert!(s.unitarity_defect() < 1e-12);
    }

    #[test]
    fn zero_thickness_limit_is_identity() {
        let layer = Layer::quartz(1e-300, 0.7).unwrap();
        assert!(
            layer_matrix(&layer, OMEGA_800)
                .unwrap()
                .distance(&PolarizationMatrix::IDENTITY)
                < 1e-12
        );
        assert!(Layer::quartz(0.0, 0.0).is_err());
    }

    #[test]
    fn tilde_is_the_negative_angle_matrix() {
        let layer = Layer::quartz(77e-6, 0.4).unwrap();
        let mut flipped = layer.clone();
        flipped.axis_angle = -0.4;
        let t = layer.tilde_matrix(OMEGA_800).unwrap();
        assert!(t.distance(&flipped.birefringence_matrix(OMEGA_800).unwrap()) < 1e-15);
        let conj = SIGMA_3 * layer.birefringence_matrix(OMEGA_800).unwrap() * SIGMA_3;
        assert!(t.distance(&conj) < 1e-15);
    }

    #[test]
    fn bare_mirror_and_single_reflector() {
        let mirror = LayeredSample::mirror(c(1.0)).unwrap();
        assert!(transfer_function(&mirror, OMEGA_800).unwrap().distance(&SIGMA_3) < 1e-15);
        // Q σ₃ Q† = σ₂.
        assert!(sample_arm_operator(&mirror, OMEGA_800).unwrap().distance(&SIGMA_2) < 1e-15);

        let layer = Layer::quartz(120e-6, 0.3).unwrap();
        let r1 = Complex64::new(0.6, 0.2);
        let s = LayeredSample::buried_reflector(layer.clone(), r1).unwrap();
        let expected = (layer.birefringence_matrix(OMEGA_800).unwrap()
            * SIGMA_3.scale(r1)
            * layer.tilde_matrix(OMEGA_800).unwrap())
        .scale(Complex64::from_polar(
            1.0,
            2.0 * layer.average_phase(OMEGA_800).unwrap(),
        ));
        assert!(transfer_function(&s, OMEGA_800).unwrap().distance(&expected) < 1e-12);

        let r0 = c(0.5);
        let two = LayeredSample::two_interface(layer, r0, r1).unwrap();
        let expected2 = SIGMA_3.scale(r0) + expected;
        assert!(transfer_function(&two, OMEGA_800).unwrap().distance(&expected2) < 1e-12);
    }

    #[test]
    fn empty_and_dark_samples() {
        let empty = LayeredSample::empty();
        assert_eq!(transfer_function(&empty, OMEGA_800).unwrap(), PolarizationMatrix::ZERO);
        let dark = stack(&[50e-6], &[0.2], &[c(0.0), c(0.0)]);
        assert!(
            transfer_function(&dark, OMEGA_800)
                .unwrap()
                .distance(&PolarizationMatrix::ZERO)
                == 0.0
        );
        assert!(!dark.reflects());
        assert!(LayeredSample::new(
            vec![Interface::real(1.0).unwrap()],
            vec![Layer::quartz(1e-6, 0.0).unwrap()]
        )
        .is_err());
        assert!(Interface::real(1.5).is_err());
    }

    #[test]
    fn first_kernel_is_frequency_independent() {
        let s = stack(&[30e-6], &[0.5], &[c(1.0), c(1.0)]);
        let u0 = interface_kernel(&s, 0, OMEGA_800).unwrap();
        let expected = (quarter_wave_45() * SIGMA_3 * quarter_wave_45().dagger()).apply(&PolarizationVector::SIGNAL);
        assert!(u0.distance(&expected) < 1e-15);
        assert!(u0.distance(&interface_kernel(&s, 0, 1.1 * OMEGA_800).unwrap()) < 1e-15);
        // σ₂ e_s = i e_i.
        assert!(u0.distance(&PolarizationVector::new(c(0.0), Complex64::new(0.0, 1.0))) < 1e-15);
        assert!(interface_kernel(&s, 2, OMEGA_800).is_err());
    }

    #[test]
    fn single_layer_kernel_matches_pauli_expansion() {
        // i[(i sinδ sin2α)I + cosδ σ₁ + sinδ cos2α σ₃] e_s
        for &(d, alpha) in &[(120e-6, 0.0), (83e-6, 0.37), (145e-6, 2.9)] {
            let layer = Layer::quartz(d, alpha).unwrap();
            let s = LayeredSample::buried_reflector(layer.clone(), c(1.0)).unwrap();
            let u1 = interface_kernel(&s, 1, OMEGA_800).unwrap();
            let delta = layer.retardance(OMEGA_800).unwrap();
            let (sd, cd) = delta.sin_cos();
            let bracket = PolarizationMatrix::IDENTITY.scale(Complex64::new(0.0, sd * (2.0 * alpha).sin()))
                + SIGMA_1.scale(c(cd))
                + SIGMA_3.scale(c(sd * (2.0 * alpha).cos()));
            let expected = bracket
                .apply(&PolarizationVector::SIGNAL)
                .scale(Complex64::new(0.0, 1.0));
            assert!(u1.distance(&expected) < 1e-12);
        }
    }

    #[test]
    fn returned_state_matches_operator() {
        let s = stack(
            &[40e-6, 25e-6],
            &[0.1, 1.2],
            &[c(0.3), Complex64::new(0.1, 0.4), c(-0.8)],
        );
        let v = s.returned_state(OMEGA_800).unwrap();
        let direct = sample_arm_operator(&s, OMEGA_800)
            .unwrap()
            .apply(&PolarizationVector::SIGNAL);
        assert!(v.distance(&direct) < 1e-12);
        assert_eq!(s.non_commuting_layers(OMEGA_800).unwrap(), vec![(1, 2)]);
        let aligned = stack(&[40e-6, 25e-6], &[0.3, 0.3 + PI / 2.0], &[c(0.3), c(0.3), c(0.3)]);
        assert!(aligned.non_commuting_layers(OMEGA_800).unwrap().is_empty());
    }

    #[test]
    fn constant_quartz_expansion() {
        let layer = Layer::quartz(100e-6, 0.0).unwrap();
        let e = dispersion_expansion(&layer, OMEGA_800).unwrap();
        let n_bar = 0.5 * (QUARTZ_N_O + QUARTZ_N_E);
        assert!((n_bar - 1.54217).abs() < 1e-12);
        assert!((e.beta1 - n_bar / SPEED_OF_LIGHT).abs() < 1e-24);
        assert_eq!(e.beta2, 0.0);
        let dn = QUARTZ_N_O - QUARTZ_N_E;
        assert!((e.delta_beta - dn * OMEGA_800 / SPEED_OF_LIGHT).abs() < 1e-9);
        assert!((e.delta_beta * 100e-6 - layer.retardance(OMEGA_800).unwrap()).abs() < 1e-12);
        let g = dispersion_expansion(&layer.clone().with_gvd(3e-26, OMEGA_800), OMEGA_800).unwrap();
        assert_eq!(g.beta2, 3e-26);
        assert_eq!(g.beta1, e.beta1);
    }

    // Analytic derivative of β(ω) = n(ω)ω/c for a Sellmeier model with
    // standard terms only.
    fn analytic_beta1(model: &Sellmeier, omega: f64) -> f64 {
        let lambda_um = wavelength_of(omega) * 1e6;
        let l2 = lambda_um * lambda_um;
        let n2 = model.n_squared(lambda_um);
        let dn2_dl: f64 = model
            .terms
            .iter()
            .map(|t| match *t {
                SellmeierTerm::Standard { b, c } => -2.0 * b * c * lambda_um / ((l2 - c) * (l2 - c)),
                SellmeierTerm::Pole { b, c } => -2.0 * b * lambda_um / ((l2 - c) * (l2 - c)),
            })
            .sum::<f64>()
            - 2.0 * model.ir * lambda_um;
        let n = n2.sqrt();
        let dn_dl = dn2_dl / (2.0 * n);
        // dλ/dω = −λ/ω
        let dn_dw = dn_dl * (-lambda_um / omega);
        (n + omega * dn_dw) / SPEED_OF_LIGHT
    }

    #[test]
    fn finite_difference_matches_analytic_sellmeier() {
        let q = quartz_sellmeier();
        let layer = Layer::of_material(100e-6, 0.0, &q).unwrap();
        let e = dispersion_expansion(&layer, OMEGA_800).unwrap();
        let (IndexModel::Sellmeier(o), IndexModel::Sellmeier(x)) = (&q.ordinary, &q.extraordinary) else {
            panic!("quartz-sellmeier must be dispersive");
        };
        let expected = 0.5 * (analytic_beta1(o, OMEGA_800) + analytic_beta1(x, OMEGA_800));
        assert!(
            ((e.beta1 - expected) / expected).abs() < 1e-8,
            "{} vs {}",
            e.beta1,
            expected
        );
        // Normal dispersion in the visible/near IR: group index above phase index, β″ > 0.
        assert!(e.group_index() > layer.mean_index(OMEGA_800).unwrap());
        assert!(e.beta2 > 0.0);
        let expected_d = analytic_beta1(o, OMEGA_800) - analytic_beta1(x, OMEGA_800);
        assert!(((e.delta_beta1 - expected_d) / expected_d).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn kernels_are_unit_vectors(
            d in prop::collection::vec(1e-6..300e-6f64, 1..5),
            a in prop::collection::vec(0.0..PI, 5),
            w in 0.8..1.2f64,
        ) {
            let rs = vec![c(1.0); d.len() + 1];
            let s = stack(&d, &a[..d.len()], &rs);
            let terms = s.interface_terms(w * OMEGA_800).unwrap();
            for (m, u) in terms.kernels.iter().enumerate() {
                prop_assert!((u.norm() - 1.0).abs() < 1e-12);
                prop_assert!(u.distance(&interface_kernel(&s, m, w * OMEGA_800).unwrap()) < 1e-12);
            }
        }

        #[test]
        fn layer_operators_are_unitary(d in 1e-6..500e-6f64, a in -PI..PI, w in 0.8..1.2f64) {
            let layer = Layer::quartz(d, a).unwrap();
            prop_assert!(layer_matrix(&layer, w * OMEGA_800).unwrap().unitarity_defect() < 1e-12);
            prop_assert!(layer.birefringence_matrix(w * OMEGA_800).unwrap().unitarity_defect() < 1e-12);
        }

        #[test]
        fn transfer_function_is_linear_in_each_reflectance(
            d in prop::collection::vec(1e-6..200e-6f64, 2),
            a in prop::collection::vec(0.0..PI, 2),
            scale in -1.0..1.0f64,
            which in 0usize..3,
        ) {
            let rs = [c(0.4), Complex64::new(0.2, -0.3), c(0.7)];
            let base = stack(&d, &a, &rs);
            let mut scaled_rs = rs;
            scaled_rs[which] *= scale;
            let scaled = stack(&d, &a, &scaled_rs);
            let mut only_rs = [c(0.0); 3];
            only_rs[which] = rs[which];
            let only = stack(&d, &a, &only_rs);
            let h = transfer_function(&base, OMEGA_800).unwrap();
            let expected = h + transfer_function(&only, OMEGA_800).unwrap().scale(c(scale - 1.0));
            prop_assert!(transfer_function(&scaled, OMEGA_800).unwrap().distance(&expected) < 1e-12);
        }

        #[test]
        fn tilde_product_equals_negated_angles(
            d in prop::collection::vec(1e-6..200e-6f64, 3),
            a in prop::collection::vec(-PI..PI, 3),
        ) {
            let w = OMEGA_800;
            let layers: Vec<Layer> = d.iter().zip(&a).map(|(&d, &a)| Layer::quartz(d, a).unwrap()).collect();
            let tilde = layers.iter().fold(PolarizationMatrix::IDENTITY, |acc, l| l.tilde_matrix(w).unwrap() * acc);
            let negated = layers.iter().fold(PolarizationMatrix::IDENTITY, |acc, l| {
                let mut n = l.clone();
                n.axis_angle = -n.axis_angle;
                n.birefringence_matrix(w).unwrap() * acc
            });
            prop_assert!(tilde.distance(&negated) < 1e-12);
        }

        #[test]
        fn aligned_stacks_are_diagonal(d in prop::collection::vec(1e-6..200e-6f64, 1..4), w in 0.8..1.2f64) {
            let a = vec![0.0; d.len()];
            let s = stack(&d, &a, &vec![Complex64::new(0.3, 0.1); d.len() + 1]);
            prop_assert!(transfer_function(&s, w * OMEGA_800).unwrap().is_diagonal(1e-12));
        }
    }
}
