//! Ready-made runs for the two quartz interferograms: a reflector buried
//! under 120 μm and a 145 μm plate reflecting at both faces. Both use the
//! constant quartz indices, α₁ = 0, frozen retardance and the 1.5 mm BBO
//! source pumped at 400 nm.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::config::{
    DelayConfig, InterfaceConfig, LayerConfig, MaterialSpec, RunConfig, SampleConfig, SampleRef, SourceConfig,
};
use crate::error::{QoctError, Result};
use crate::materials::{QUARTZ_N_E, QUARTZ_N_O};

pub const NAMES: [&str; 2] = ["fig4", "fig5"];

fn quartz_layer(d_um: f64) -> LayerConfig {
    LayerConfig {
        d_um,
        alpha_deg: 0.0,
        material: MaterialSpec::Indices {
            n_o: QUARTZ_N_O,
            n_e: QUARTZ_N_E,
        },
        freeze_retardance: true,
        gvd_fs2_per_mm: None,
    }
}

/// 1000 delays, 0.5 μm apart.
fn delays() -> DelayConfig {
    DelayConfig {
        start_um: -100.0,
        stop_um: 399.5,
        points: 1000,
    }
}

fn run(sample: SampleConfig) -> RunConfig {
    RunConfig {
        source: SourceConfig::default(),
        sample: SampleRef::Inline(sample),
        delays: delays(),
        beam_splitter_reflectance: 0.5,
        seed: None,
    }
}

/// Reflector with `|r₁|² = 1` under 120 μm of quartz; no front reflection.
pub fn fig4() -> RunConfig {
    run(SampleConfig {
        interfaces: vec![InterfaceConfig { r: [0.0, 0.0] }, InterfaceConfig { r: [1.0, 0.0] }],
        layers: vec![quartz_layer(120.0)],
    })
}

/// 145 μm quartz plate with `|r₀|² = |r₁|² = 1/2`.
pub fn fig5() -> RunConfig {
    run(SampleConfig {
        interfaces: vec![
            InterfaceConfig {
                r: [FRAC_1_SQRT_2, 0.0],
            },
            InterfaceConfig {
                r: [FRAC_1_SQRT_2, 0.0],
            },
        ],
        layers: vec![quartz_layer(145.0)],
    })
}

pub fn by_name(name: &str) -> Result<RunConfig> {
    match name {
        "fig4" => Ok(fig4()),
        "fig5" => Ok(fig5()),
        other => Err(QoctError::Argument(format!(
            "unknown preset '{other}' (available: {})",
            NAMES.join(", ")
        ))),
    }
}
