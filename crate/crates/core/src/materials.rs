//! Dispersion constants for the bundled materials.
//!
//! Wavelengths are in micrometres inside the Sellmeier formulas.

use serde::{Deserialize, Serialize};

use crate::error::{QoctError, Result};

/// Supported band of the dispersion models, in μm.
pub const BAND_UM: (f64, f64) = (0.4, 1.2);

/// One dispersion term. `Standard` is `B·λ²/(λ² − C)`; `Pole` is `B/(λ² − C)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SellmeierTerm {
    Standard { b: f64, c: f64 },
    Pole { b: f64, c: f64 },
}

/// `n² = a + Σ terms − ir·λ²` with λ in μm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sellmeier {
    pub a: f64,
    #[serde(default)]
    pub terms: Vec<SellmeierTerm>,
    #[serde(default)]
    pub ir: f64,
}

impl Sellmeier {
    pub fn n_squared(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let resonant: f64 = self
            .terms
            .iter()
            .map(|t| match *t {
                SellmeierTerm::Standard { b, c } => b * l2 / (l2 - c),
                SellmeierTerm::Pole { b, c } => b / (l2 - c),
            })
            .sum();
        self.a + resonant - self.ir * l2
    }
}

/// Refractive-index model of one polarization axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexModel {
    Constant { n: f64 },
    Sellmeier(Sellmeier),
}

impl IndexModel {
    pub fn constant(n: f64) -> Self {
        IndexModel::Constant { n }
    }

    /// Builds a Sellmeier model, rejecting coefficient sets whose index leaves
    /// (1, 3) anywhere in the supported band.
    pub fn sellmeier(model: Sellmeier) -> Result<Self> {
        let (lo, hi) = BAND_UM;
        for k in 0..=200 {
            let lambda = lo + (hi - lo) * k as f64 / 200.0;
            let n2 = model.n_squared(lambda);
            if !(n2.is_finite() && n2 > 1.0 && n2 < 9.0) {
                return Err(QoctError::Argument(format!(
                    "Sellmeier model gives n² = {n2} at {lambda} μm"
                )));
            }
        }
        Ok(IndexModel::Sellmeier(model))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, IndexModel::Constant { .. })
    }

    /// Index at a vacuum wavelength given in metres.
    pub fn refractive_index(&self, wavelength: f64) -> Result<f64> {
        match self {
            IndexModel::Constant { n } => Ok(*n),
            IndexModel::Sellmeier(s) => {
                let um = wavelength * 1e6;
                let (lo, hi) = BAND_UM;
                // Round-off from frequency conversions must not push an edge
                // wavelength out of the band.
                if !(lo * (1.0 - 1e-9)..=hi * (1.0 + 1e-9)).contains(&um) {
                    return Err(QoctError::Range(format!(
                        "wavelength {um:.4} μm outside the {lo}–{hi} μm band"
                    )));
                }
                Ok(s.n_squared(um).sqrt())
            }
        }
    }
}

/// Ordinary/extraordinary pair for a uniaxial material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniaxialMaterial {
    pub name: String,
    pub ordinary: IndexModel,
    pub extraordinary: IndexModel,
    pub citation: String,
}

/// β-barium borate. Eimerl, Davis, Velsko, Graham, Zalkin,
/// J. Appl. Phys. 62, 1968 (1987).
pub fn bbo() -> UniaxialMaterial {
    UniaxialMaterial {
        name: "bbo".into(),
        ordinary: IndexModel::Sellmeier(Sellmeier {
            a: 2.7359,
            terms: vec![SellmeierTerm::Pole { b: 0.01878, c: 0.01822 }],
            ir: 0.01354,
        }),
        extraordinary: IndexModel::Sellmeier(Sellmeier {
            a: 2.3753,
            terms: vec![SellmeierTerm::Pole { b: 0.01224, c: 0.01667 }],
            ir: 0.01516,
        }),
        citation: "D. Eimerl et al., J. Appl. Phys. 62, 1968 (1987)".into(),
    }
}

pub const QUARTZ_N_O: f64 = 1.53773;
pub const QUARTZ_N_E: f64 = 1.54661;

/// Crystalline quartz with dispersionless indices at 800 nm.
pub fn quartz() -> UniaxialMaterial {
    UniaxialMaterial {
        name: "quartz".into(),
        ordinary: IndexModel::constant(QUARTZ_N_O),
        extraordinary: IndexModel::constant(QUARTZ_N_E),
        citation: "constant indices at 800 nm".into(),
    }
}

/// Crystalline quartz, G. Ghosh, Opt. Commun. 163, 95 (1999).
pub fn quartz_sellmeier() -> UniaxialMaterial {
    UniaxialMaterial {
        name: "quartz-sellmeier".into(),
        ordinary: IndexModel::Sellmeier(Sellmeier {
            a: 1.28604141,
            terms: vec![
                SellmeierTerm::Standard {
                    b: 1.07044083,
                    c: 1.00585997e-2,
                },
                SellmeierTerm::Standard {
                    b: 1.10202242,
                    c: 100.0,
                },
            ],
            ir: 0.0,
        }),
        extraordinary: IndexModel::Sellmeier(Sellmeier {
            a: 1.28851804,
            terms: vec![
                SellmeierTerm::Standard {
                    b: 1.09509924,
                    c: 1.02101864e-2,
                },
                SellmeierTerm::Standard {
                    b: 1.15662475,
                    c: 100.0,
                },
            ],
            ir: 0.0,
        }),
        citation: "G. Ghosh, Opt. Commun. 163, 95 (1999)".into(),
    }
}

pub fn by_name(name: &str) -> Result<UniaxialMaterial> {
    match name.to_ascii_lowercase().as_str() {
        "bbo" => Ok(bbo()),
        "quartz" => Ok(quartz()),
        "quartz-sellmeier" => Ok(quartz_sellmeier()),
        other => Err(QoctError::Argument(format!("unknown material '{other}'"))),
    }
}
