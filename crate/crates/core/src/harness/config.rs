use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{LaserPulse, MomentumGrid, PositionGrid, PulseSequence};
use crate::quantum::{gaussian_mixed_state, thermal_diagonal_state, DensityMatrix, GaussianStateSpec};
use crate::semiclassical::{EnsembleSpec, PositionLaw};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Free-text assumptions carried into every output bundle.
    #[serde(default)]
    pub assumptions: Vec<String>,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub sequence: SequenceConfig,
    pub integrator: IntegratorConfig,
    pub sampling: SamplingConfig,
    pub semiclassical: SemiclassicalConfig,
    pub smoothing: SmoothingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub subdivision: usize,
    pub extent: usize,
    /// Position oversampling of the Wigner window (localized states).
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_oversample() -> usize {
    8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Gaussian,
    Delocalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Ignored for delocalized states.
    #[serde(default)]
    pub sigma_r: f64,
    pub sigma_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceConfig {
    /// Two back-to-back π pulses, backward then forward.
    PiPair { rabi: f64, detuning: f64 },
    Pulses {
        #[serde(default)]
        pulses: Vec<LaserPulse>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub times: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalConfig {
    /// Zero disables the test-particle run.
    pub particles: usize,
    pub seed: u64,
    pub cell_r: f64,
    pub cell_p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub sigma_r: f64,
    pub sigma_p: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: String,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 of the canonical serialization, with the output directory
    /// blanked so relocating a run does not change its identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir.clear();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.momentum_grid().map_err(|e| Error::Config(e.to_string()))?;
        if self.grid.oversample == 0 || self.grid.oversample % 2 != 0 {
            return bad(format!("grid.oversample must be even and positive, got {}", self.grid.oversample));
        }
        if !(self.initial.sigma_p > 0.0) {
            return bad("initial.sigma_p must be positive".into());
        }
        if self.initial.kind == InitialKind::Gaussian && !(self.initial.sigma_r > 0.0) {
            return bad("initial.sigma_r must be positive for a gaussian state".into());
        }
        self.pulses().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.integrator.dt > 0.0) || !self.integrator.dt.is_finite() {
            return bad("integrator.dt must be positive".into());
        }
        let times = &self.sampling.times;
        if times.is_empty() {
            return bad("sampling.times must not be empty".into());
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sampling.times must be finite, non-negative and strictly ascending".into());
        }
        let sc = &self.semiclassical;
        if sc.particles > 0 && (!(sc.cell_r > 0.0) || !(sc.cell_p > 0.0)) {
            return bad("semiclassical cells must be positive".into());
        }
        let sm = &self.smoothing;
        if !(sm.sigma_r > 0.0) || !(sm.sigma_p > 0.0) {
            return bad("smoothing widths must be positive".into());
        }
        Ok(())
    }

    pub fn momentum_grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::new(self.grid.subdivision, self.grid.extent)
    }

    pub fn pulses(&self) -> Result<PulseSequence> {
        match &self.sequence {
            SequenceConfig::PiPair { rabi, detuning } => PulseSequence::pi_pair(*rabi, *detuning),
            SequenceConfig::Pulses { pulses } => PulseSequence::new(pulses.clone()),
        }
    }

    /// Position grid for every quantum field: a window around the origin
    /// for localized states, two full periods for delocalized ones.
    pub fn position_grid(&self) -> Result<PositionGrid> {
        let g = self.momentum_grid()?;
        match self.initial.kind {
            InitialKind::Gaussian => PositionGrid::wigner_window(&g, self.grid.oversample),
            InitialKind::Delocalized => PositionGrid::conjugate(&g, 2),
        }
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        let g = self.momentum_grid()?;
        match self.initial.kind {
            InitialKind::Gaussian => {
                gaussian_mixed_state(&g, GaussianStateSpec::new(self.initial.sigma_r, self.initial.sigma_p))
            }
            InitialKind::Delocalized => thermal_diagonal_state(&g, self.initial.sigma_p),
        }
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        let position = match self.initial.kind {
            InitialKind::Gaussian => PositionLaw::Gaussian { sigma: self.initial.sigma_r },
            InitialKind::Delocalized => PositionLaw::Uniform { width: 2.0 * std::f64::consts::PI },
        };
        EnsembleSpec {
            particles: self.semiclassical.particles,
            position,
            sigma_p: self.initial.sigma_p,
            seed: self.semiclassical.seed,
        }
    }

    /// Whether the initial state is diagonal in |p, i⟩, the precondition of
    /// the phase-space-density bound.
    pub fn bound_applicable(&self) -> bool {
        self.initial.kind == InitialKind::Delocalized
    }
}
