use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::config::*;
use crate::error::{Error, Result};

pub const PRESETS: [&str; 2] = ["fig2", "fig3"];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "fig2" => Ok(fig2()),
        "fig3" => Ok(fig3()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

fn pulse_pair() -> SequenceConfig {
    SequenceConfig::PiPair { rabi: 2.0, detuning: -2.0 }
}

fn heisenberg_kernel() -> SmoothingConfig {
    SmoothingConfig { sigma_r: FRAC_1_SQRT_2, sigma_p: FRAC_1_SQRT_2 }
}

fn even_times(stop: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|i| stop * i as f64 / intervals as f64).collect()
}

/// Localized Gaussian cloud, quantum fields against a test-particle
/// histogram.
fn fig2() -> ExperimentConfig {
    ExperimentConfig {
        name: "fig2".into(),
        assumptions: vec!["initial widths sigma_r = 1/k and sigma_p = hbar k are assumed, not measured".into()],
        grid: GridConfig { subdivision: 10, extent: 8, oversample: 8 },
        initial: InitialConfig { kind: InitialKind::Gaussian, sigma_r: 1.0, sigma_p: 1.0 },
        sequence: pulse_pair(),
        integrator: IntegratorConfig { dt: 1e-3 },
        sampling: SamplingConfig { times: even_times(PI, 8) },
        semiclassical: SemiclassicalConfig { particles: 1_000_000, seed: 2021, cell_r: 0.2, cell_p: 0.1 },
        smoothing: heisenberg_kernel(),
        output: OutputConfig::default(),
    }
}

/// Spatially delocalized thermal start, densely sampled entropy traces.
fn fig3() -> ExperimentConfig {
    ExperimentConfig {
        name: "fig3".into(),
        assumptions: Vec::new(),
        grid: GridConfig { subdivision: 10, extent: 8, oversample: 8 },
        initial: InitialConfig { kind: InitialKind::Delocalized, sigma_r: 0.0, sigma_p: 1.0 },
        sequence: pulse_pair(),
        integrator: IntegratorConfig { dt: 1e-3 },
        sampling: SamplingConfig { times: even_times(PI, 96) },
        semiclassical: SemiclassicalConfig { particles: 0, seed: 2021, cell_r: 0.2, cell_p: 0.1 },
        smoothing: heisenberg_kernel(),
        output: OutputConfig::default(),
    }
}
