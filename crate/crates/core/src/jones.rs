//! 2×2 complex polarization algebra.
//!
//! Basis ordering is `[e_s, e_i]`: the signal photon enters the sample arm
//! along `e_s = [1, 0]ᵀ` and the idler enters the reference arm along
//! `e_i = [0, 1]ᵀ`. Rotations follow `R(α) = exp(-iασ₂)`, which is the real
//! matrix `[[cos α, -sin α], [sin α, cos α]]`.
//!
//! Handedness: `Q(45)·e_s` is called left circular. Nothing downstream depends
//! on that label.

use std::f64::consts::FRAC_PI_4;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{QoctError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 Jones operator, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationMatrix(pub [[Complex64; 2]; 2]);

/// A two-component Jones vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationVector(pub [Complex64; 2]);

impl PolarizationMatrix {
    pub const IDENTITY: Self = Self([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Self = Self([[ZERO, ZERO], [ZERO, ZERO]]);

    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self::new(s * m[0][0], s * m[0][1], s * m[1][0], s * m[1][1])
    }

    pub fn apply(&self, v: &PolarizationVector) -> PolarizationVector {
        let m = &self.0;
        let [x, y] = v.0;
        PolarizationVector([m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y])
    }

    pub fn mul(&self, other: &Self) -> Self {
        let a = &self.0;
        let b = &other.0;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    /// Largest absolute entrywise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        d
    }

    /// `‖M†M − I‖_max`; zero for a lossless element.
    pub fn unitarity_defect(&self) -> f64 {
        self.dagger().mul(self).distance(&Self::IDENTITY)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.0[0][1].norm() <= tol && self.0[1][0].norm() <= tol
    }
}

impl Mul for PolarizationMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        PolarizationMatrix::mul(&self, &rhs)
    }
}

impl Mul<&PolarizationMatrix> for PolarizationMatrix {
    type Output = Self;
    fn mul(self, rhs: &Self) -> Self {
        PolarizationMatrix::mul(&self, rhs)
    }
}

impl Mul<PolarizationVector> for PolarizationMatrix {
    type Output = PolarizationVector;
    fn mul(self, rhs: PolarizationVector) -> PolarizationVector {
        self.apply(&rhs)
    }
}

impl Mul<Complex64> for PolarizationMatrix {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        self.scale(rhs)
    }
}

impl Add for PolarizationMatrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (self.0, rhs.0);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for PolarizationMatrix {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for PolarizationMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

impl PolarizationVector {
    /// Signal polarization, `[1, 0]ᵀ`.
    pub const SIGNAL: Self = Self([ONE, ZERO]);
    /// Idler polarization, `[0, 1]ᵀ`.
    pub const IDLER: Self = Self([ZERO, ONE]);

    pub const fn new(a: Complex64, b: Complex64) -> Self {
        Self([a, b])
    }

    /// Hermitian inner product `self† · other`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self([s * self.0[0], s * self.0[1]])
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.0[0] - other.0[0]).norm().max((self.0[1] - other.0[1]).norm())
    }

    /// Distance after removing the best global phase, i.e. how far two states
    /// are apart as physical polarizations.
    pub fn distance_up_to_phase(&self, other: &Self) -> f64 {
        let overlap = self.inner(other);
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.scale(phase).distance(other)
    }
}

impl Add for PolarizationVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

pub const SIGMA_1: PolarizationMatrix = PolarizationMatrix::new(ZERO, ONE, ONE, ZERO);
pub const SIGMA_2: PolarizationMatrix = PolarizationMatrix::new(ZERO, Complex64::new(0.0, -1.0), I, ZERO);
pub const SIGMA_3: PolarizationMatrix = PolarizationMatrix::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0));

/// Pauli matrix `σ_index` for `index ∈ {1, 2, 3}`.
pub fn pauli(index: u8) -> Result<PolarizationMatrix> {
    match index {
        1 => Ok(SIGMA_1),
        2 => Ok(SIGMA_2),
        3 => Ok(SIGMA_3),
        _ => Err(QoctError::Argument(format!(
            "Pauli index must be 1, 2 or 3, got {index}"
        ))),
    }
}

/// `exp(-iγσ) = cos γ·I − i sin γ·σ`, valid for any involutory `σ`.
pub fn exp_pauli(gamma: f64, sigma: &PolarizationMatrix) -> PolarizationMatrix {
    let (s, c) = gamma.sin_cos();
    PolarizationMatrix::IDENTITY.scale(c.into()) - sigma.scale(Complex64::new(0.0, s))
}

/// Rotation `R(α) = exp(-iασ₂)`.
pub fn rotator(alpha: f64) -> PolarizationMatrix {
    let (s, c) = alpha.sin_cos();
    PolarizationMatrix::from_real(c, -s, s, c)
}

/// Linear retarder with its fast axis along the first basis axis,
/// `b(δ) = exp(i(δ/2)σ₃)`.
pub fn retarder(retardance: f64) -> PolarizationMatrix {
    exp_pauli(-0.5 * retardance, &SIGMA_3)
}

/// Retarder of `retardance` with its fast axis at `axis_angle`:
/// `R(a)·b(δ)·R†(a)`.
pub fn wave_plate(retardance: f64, axis_angle: f64) -> PolarizationMatrix {
    let r = rotator(axis_angle);
    r * retarder(retardance) * r.dagger()
}

/// Quarter-wave plate at 45°, `Q(45) = exp(i(π/4)σ₁)`.
pub fn quarter_wave_45() -> PolarizationMatrix {
    exp_pauli(-FRAC_PI_4, &SIGMA_1)
}

pub fn dagger(m: &PolarizationMatrix) -> PolarizationMatrix {
    m.dagger()
}

pub fn apply(m: &PolarizationMatrix, v: &PolarizationVector) -> PolarizationVector {
    m.apply(v)
}

pub fn mul(a: &PolarizationMatrix, b: &PolarizationMatrix) -> PolarizationMatrix {
    a.mul(b)
}
