//! Recoil units, momentum and position lattices, and laser pulse descriptions.
//!
//! Everything is expressed in recoil units: ħ = k = 1 and m = 1/2, so the
//! recoil frequency ħk²/2m is exactly one. Times are in 1/ω_rec, momenta in
//! ħk and positions in 1/k.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.0;
pub const WAVENUMBER: f64 = 1.0;
pub const MASS: f64 = 0.5;
/// Planck constant h = 2πħ.
pub const PLANCK: f64 = 2.0 * PI * HBAR;

/// The unit system shared by every module.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoilUnits {
    pub hbar: f64,
    pub k: f64,
    pub mass: f64,
}

impl Default for RecoilUnits {
    fn default() -> Self {
        Self { hbar: HBAR, k: WAVENUMBER, mass: MASS }
    }
}

impl RecoilUnits {
    pub fn recoil_frequency(&self) -> f64 {
        self.hbar * self.k * self.k / (2.0 * self.mass)
    }

    pub fn recoil_momentum(&self) -> f64 {
        self.hbar * self.k
    }
}

/// Uniform momentum lattice p ∈ [−n_rec·ħk, +n_rec·ħk] with `subdivision`
/// points per ħk, so that a photon kick is an integer index shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentumGrid {
    subdivision: usize,
    extent: usize,
}

impl MomentumGrid {
    pub fn new(subdivision: usize, extent: usize) -> Result<Self> {
        if subdivision < 2 || subdivision % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "momentum subdivision must be even and >= 2, got {subdivision}"
            )));
        }
        if extent == 0 {
            return Err(Error::InvalidParameter("momentum extent must be >= 1 recoil".into()));
        }
        Ok(Self { subdivision, extent })
    }

    /// Points per recoil momentum ħk.
    pub fn subdivision(&self) -> usize {
        self.subdivision
    }

    /// Half-width of the lattice in units of ħk.
    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn len(&self) -> usize {
        2 * self.extent * self.subdivision + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of p = 0.
    pub fn center(&self) -> usize {
        self.extent * self.subdivision
    }

    pub fn dp(&self) -> f64 {
        HBAR * WAVENUMBER / self.subdivision as f64
    }

    /// Momentum of lattice point `idx`. Computed as an integer ratio so the
    /// value is reproducible bit for bit.
    pub fn point(&self, idx: usize) -> f64 {
        (idx as f64 - self.center() as f64) / self.subdivision as f64 * (HBAR * WAVENUMBER)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of p + n_kicks·ħk, or `None` when it leaves the lattice.
    pub fn shift_index(&self, idx: usize, n_kicks: i64) -> Option<usize> {
        let shifted = idx as i64 + n_kicks * self.subdivision as i64;
        (0..self.len() as i64).contains(&shifted).then_some(shifted as usize)
    }
}

/// Uniform position lattice centred on r = 0: r_j = (j − ⌊n/2⌋)·Δr.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionGrid {
    len: usize,
    dr: f64,
}

impl PositionGrid {
    pub fn new(len: usize, dr: f64) -> Result<Self> {
        if len == 0 || !(dr > 0.0) || !dr.is_finite() {
            return Err(Error::InvalidParameter(format!("bad position grid (n = {len}, dr = {dr})")));
        }
        Ok(Self { len, dr })
    }

    /// Fourier conjugate of the momentum lattice: N_p·oversample points with
    /// Δr = 2πħ/(N_p·Δp·oversample). The grid covers one full period
    /// 2πħ/Δp of the lattice states.
    pub fn conjugate(grid: &MomentumGrid, oversample: usize) -> Result<Self> {
        if oversample == 0 {
            return Err(Error::InvalidParameter("oversample must be >= 1".into()));
        }
        let n = grid.len() * oversample;
        Self::new(n, PLANCK / (grid.len() as f64 * grid.dp() * oversample as f64))
    }

    /// Half of the conjugate period, |r| < πħ/Δp. This is the window on which
    /// the half-step Wigner transform is free of images.
    pub fn wigner_window(grid: &MomentumGrid, oversample: usize) -> Result<Self> {
        if oversample == 0 || oversample % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "Wigner window oversample must be even, got {oversample}"
            )));
        }
        let full = Self::conjugate(grid, oversample)?;
        Self::new(full.len / 2, full.dr)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn origin(&self) -> f64 {
        -((self.len / 2) as f64) * self.dr
    }

    pub fn point(&self, j: usize) -> f64 {
        (j as f64 - (self.len / 2) as f64) * self.dr
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.point(j)).collect()
    }

    pub fn span(&self) -> f64 {
        self.len as f64 * self.dr
    }
}

/// Propagation direction of a plane-wave pulse, k_L = ±k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Direction {
    /// Travelling towards +r (k_L = +k).
    Forward,
    /// Travelling towards −r (k_L = −k), "coming from the right".
    Backward,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }

    pub fn wavevector(self) -> f64 {
        self.sign() as f64 * WAVENUMBER
    }
}

impl TryFrom<i8> for Direction {
    type Error = String;

    fn try_from(value: i8) -> Result<Self, String> {
        match value {
            1 => Ok(Direction::Forward),
            -1 => Ok(Direction::Backward),
            other => Err(format!("direction must be +1 or -1, got {other}")),
        }
    }
}

impl From<Direction> for i8 {
    fn from(d: Direction) -> i8 {
        d.sign() as i8
    }
}

/// Rectangular plane-wave pulse, active on [t_start, t_stop).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserPulse {
    pub direction: Direction,
    /// Rabi frequency Ω ≥ 0.
    pub rabi: f64,
    /// Detuning δ⁰ = ω_L − (E₂ − E₁)/ħ.
    pub detuning: f64,
    /// Constant phase Φ.
    #[serde(default)]
    pub phase: f64,
    pub t_start: f64,
    pub t_stop: f64,
}

impl LaserPulse {
    pub fn new(
        direction: Direction,
        rabi: f64,
        detuning: f64,
        phase: f64,
        t_start: f64,
        t_stop: f64,
    ) -> Result<Self> {
        let pulse = Self { direction, rabi, detuning, phase, t_start, t_stop };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi >= 0.0) || !self.rabi.is_finite() {
            return Err(Error::InvalidParameter(format!("Rabi frequency must be >= 0, got {}", self.rabi)));
        }
        if !(self.t_stop > self.t_start) || !self.t_start.is_finite() || !self.t_stop.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pulse window must satisfy t_stop > t_start, got [{}, {}]",
                self.t_start, self.t_stop
            )));
        }
        if !self.detuning.is_finite() || !self.phase.is_finite() {
            return Err(Error::InvalidParameter("detuning and phase must be finite".into()));
        }
        Ok(())
    }

    pub fn wavevector(&self) -> f64 {
        self.direction.wavevector()
    }

    pub fn duration(&self) -> f64 {
        self.t_stop - self.t_start
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.t_start <= t && t < self.t_stop
    }

    /// Whether the pulse is on throughout the open interval (a, b).
    pub fn covers(&self, a: f64, b: f64) -> bool {
        self.t_start <= a && b <= self.t_stop
    }

    /// Detuning δ^{p±} = δ⁰ − (k_L/m)(p ± ħk_L/2) of the transition driven
    /// from the ground state at momentum p (`+`) or into the excited state
    /// at p (`−`).
    pub fn family_detuning(&self, p: f64, upper: bool) -> f64 {
        let kl = self.wavevector();
        let half = if upper { 0.5 } else { -0.5 } * HBAR * kl;
        self.detuning - kl / MASS * (p + half)
    }
}

/// Ordered collection of pulses. Pulses may overlap in time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pulses: Vec<LaserPulse>,
}

impl PulseSequence {
    pub fn new(pulses: Vec<LaserPulse>) -> Result<Self> {
        for p in &pulses {
            p.validate()?;
        }
        Ok(Self { pulses })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pulses(&self) -> &[LaserPulse] {
        &self.pulses
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// End of the last pulse, or 0 for an empty sequence.
    pub fn end_time(&self) -> f64 {
        self.pulses.iter().map(|p| p.t_stop).fold(0.0, f64::max)
    }

    pub fn duration(&self) -> f64 {
        let start = self.pulses.iter().map(|p| p.t_start).fold(f64::INFINITY, f64::min);
        if self.pulses.is_empty() {
            0.0
        } else {
            self.end_time() - start
        }
    }

    pub fn active_at(&self, t: f64) -> impl Iterator<Item = &LaserPulse> {
        self.pulses.iter().filter(move |p| p.is_active(t))
    }

    /// Pulses switched on for the whole of (a, b).
    pub fn active_over(&self, a: f64, b: f64) -> Vec<&LaserPulse> {
        self.pulses.iter().filter(|p| p.covers(a, b)).collect()
    }

    /// Sorted, de-duplicated time breakpoints: all pulse edges plus `extra`,
    /// clipped to [from, to].
    pub fn breakpoints(&self, from: f64, to: f64, extra: &[f64]) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .pulses
            .iter()
            .flat_map(|p| [p.t_start, p.t_stop])
            .chain(extra.iter().copied())
            .chain([from, to])
            .filter(|&t| t >= from && t <= to)
            .collect();
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        pts
    }

    /// Two back-to-back π-pulses: the first from the right (k_L = −k), the
    /// second from the left, each lasting π/Ω, with no gap.
    pub fn pi_pair(rabi: f64, detuning: f64) -> Result<Self> {
        let t_pi = pi_pulse_duration(rabi, 0.0)?;
        Self::new(vec![
            LaserPulse::new(Direction::Backward, rabi, detuning, 0.0, 0.0, t_pi)?,
            LaserPulse::new(Direction::Forward, rabi, detuning, 0.0, t_pi, 2.0 * t_pi)?,
        ])
    }
}

/// Half a generalized Rabi cycle, π/√(Ω² + δ_eff²).
pub fn pi_pulse_duration(rabi: f64, residual_detuning: f64) -> Result<f64> {
    if !(rabi > 0.0) {
        return Err(Error::InvalidParameter(format!("π-pulse needs Ω > 0, got {rabi}")));
    }
    Ok(PI / rabi.hypot(residual_detuning))
}

/// Split [a, b] into equal steps no longer than `dt`.
pub(crate) fn substeps(a: f64, b: f64, dt: f64) -> (usize, f64) {
    let len = b - a;
    let n = ((len / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (n, len / n as f64)
}
