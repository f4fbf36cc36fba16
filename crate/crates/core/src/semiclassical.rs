//! Test particles carrying Bloch variables, pushed by the mean radiation
//! force, and their position–momentum histograms.
//!
//! The laser field seen by a particle at r(t) is w_L = Ω_L·e^{−iΦ_L}·
//! e^{i(k_L r(t) − δ⁰_L t)} with the optical carrier removed, so that
//!
//!   dσ₂₂/dt = −dσ₁₁/dt = Σ_L Im(w_L* σ₂₁)
//!   dσ₂₁/dt = (i/2)·Σ_L w_L (σ₁₁ − σ₂₂)
//!   F = Im(σ₂₁ Σ_L ħk_L w_L*),   m dv/dt = F,   dr/dt = v.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{substeps, LaserPulse, PulseSequence, HBAR, MASS};
use crate::phase_space::{Axis, FieldKind, PhaseSpaceField};

/// Bloch-sphere tolerance checked after every step.
pub const BLOCH_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestParticle {
    pub r: f64,
    pub v: f64,
    pub s11: f64,
    pub s22: f64,
    pub s21: Complex64,
}

impl TestParticle {
    /// Particle in the ground state.
    pub fn at_rest(r: f64, v: f64) -> Self {
        Self { r, v, s11: 1.0, s22: 0.0, s21: Complex64::new(0.0, 0.0) }
    }

    pub fn momentum(&self) -> f64 {
        MASS * self.v
    }

    fn check(&self, t: f64) -> Result<()> {
        let vals = [self.r, self.v, self.s11, self.s22, self.s21.re, self.s21.im];
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { invariant: "non-finite particle state".into(), time: t });
        }
        let norm = (self.s11 + self.s22 - 1.0).abs();
        let coherence = self.s21.norm_sqr() - self.s11 * self.s22;
        if norm > BLOCH_TOLERANCE
            || coherence > BLOCH_TOLERANCE
            || self.s11 < -BLOCH_TOLERANCE
            || self.s22 < -BLOCH_TOLERANCE
        {
            return Err(Error::Diverged {
                invariant: format!(
                    "Bloch vector left the sphere (σ11 = {}, σ22 = {}, |σ21|² = {})",
                    self.s11,
                    self.s22,
                    self.s21.norm_sqr()
                ),
                time: t,
            });
        }
        Ok(())
    }
}

/// Whether the force acts back on the motion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionCoupling {
    /// v̇ = F/m.
    #[default]
    Ehrenfest,
    /// The particle keeps its initial velocity; only the internal state is
    /// driven.
    Prescribed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum PositionLaw {
    /// Normal distribution about the origin.
    Gaussian { sigma: f64 },
    /// Uniform on [−width/2, width/2).
    Uniform { width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub particles: usize,
    pub position: PositionLaw,
    pub sigma_p: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn gaussian(particles: usize, sigma_r: f64, sigma_p: f64, seed: u64) -> Self {
        Self { particles, position: PositionLaw::Gaussian { sigma: sigma_r }, sigma_p, seed }
    }
}

/// Draws for particle `index` come from ChaCha8 stream `index` of `seed`,
/// so they do not depend on how the ensemble is split across threads.
pub fn sample_particle(spec: &EnsembleSpec, index: u64) -> TestParticle {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let r = match spec.position {
        PositionLaw::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
        PositionLaw::Uniform { width } => width * (rng.random::<f64>() - 0.5),
    };
    let p = spec.sigma_p * rng.sample::<f64, _>(StandardNormal);
    TestParticle::at_rest(r, p / MASS)
}

pub fn sample_ensemble(spec: &EnsembleSpec) -> Result<Vec<TestParticle>> {
    if spec.particles == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one particle".into()));
    }
    let width_ok = match spec.position {
        PositionLaw::Gaussian { sigma } => sigma >= 0.0 && sigma.is_finite(),
        PositionLaw::Uniform { width } => width >= 0.0 && width.is_finite(),
    };
    if !width_ok || !(spec.sigma_p >= 0.0) || !spec.sigma_p.is_finite() {
        return Err(Error::InvalidParameter("ensemble widths must be finite and >= 0".into()));
    }
    Ok((0..spec.particles as u64).into_par_iter().map(|i| sample_particle(spec, i)).collect())
}

/// Time derivative of the lab-frame state.
fn lab_rhs(y: &TestParticle, t: f64, active: &[&LaserPulse], coupling: MotionCoupling) -> TestParticle {
    let mut ds22 = 0.0;
    let mut drive = Complex64::new(0.0, 0.0);
    let mut force = 0.0;
    for pulse in active {
        let kl = pulse.wavevector();
        let w = Complex64::from_polar(pulse.rabi, kl * y.r - pulse.detuning * t - pulse.phase);
        let x = (w.conj() * y.s21).im;
        ds22 += x;
        force += HBAR * kl * x;
        drive += w;
    }
    let dv = match coupling {
        MotionCoupling::Ehrenfest => force / MASS,
        MotionCoupling::Prescribed => 0.0,
    };
    TestParticle {
        r: y.v,
        v: dv,
        s11: -ds22,
        s22: ds22,
        s21: Complex64::new(0.0, 0.5) * drive * (y.s11 - y.s22),
    }
}

fn axpy(y: &TestParticle, k: &TestParticle, h: f64) -> TestParticle {
    TestParticle {
        r: y.r + h * k.r,
        v: y.v + h * k.v,
        s11: y.s11 + h * k.s11,
        s22: y.s22 + h * k.s22,
        s21: y.s21 + k.s21 * h,
    }
}

fn rk4_lab(y: &TestParticle, t: f64, h: f64, active: &[&LaserPulse], coupling: MotionCoupling) -> TestParticle {
    let k1 = lab_rhs(y, t, active, coupling);
    let k2 = lab_rhs(&axpy(y, &k1, 0.5 * h), t + 0.5 * h, active, coupling);
    let k3 = lab_rhs(&axpy(y, &k2, 0.5 * h), t + 0.5 * h, active, coupling);
    let k4 = lab_rhs(&axpy(y, &k3, h), t + h, active, coupling);
    TestParticle {
        r: y.r + h / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r),
        v: y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        s11: y.s11 + h / 6.0 * (k1.s11 + 2.0 * k2.s11 + 2.0 * k3.s11 + k4.s11),
        s22: y.s22 + h / 6.0 * (k1.s22 + 2.0 * k2.s22 + 2.0 * k3.s22 + k4.s22),
        s21: y.s21 + (k1.s21 + k2.s21 * 2.0 + k3.s21 * 2.0 + k4.s21) * (h / 6.0),
    }
}

/// One RK4 step of the coupled Bloch/motion equations from t to t + dt,
/// with the pulses active at the step midpoint.
pub fn bloch_step(
    particle: &TestParticle,
    pulses: &PulseSequence,
    t: f64,
    dt: f64,
    coupling: MotionCoupling,
) -> Result<TestParticle> {
    let active: Vec<&LaserPulse> = pulses.active_at(t + 0.5 * dt).collect();
    let next = if active.is_empty() {
        TestParticle { r: particle.r + particle.v * dt, ..*particle }
    } else {
        rk4_lab(particle, t, dt, &active, coupling)
    };
    next.check(t + dt)?;
    Ok(next)
}

/// State in the frame co-rotating with a single pulse: c = σ₂₁e^{−iφ},
/// φ = k_L r − δ⁰ t − Φ, which removes every explicit time dependence.
#[derive(Clone, Copy)]
struct Rotating {
    r: f64,
    v: f64,
    s11: f64,
    s22: f64,
    c_re: f64,
    c_im: f64,
}

impl Rotating {
    fn rhs(&self, rabi: f64, kl: f64, detuning: f64, kick: f64) -> Self {
        // dc/dt = (i/2)Ω(σ11 − σ22) − i(k_L v − δ⁰)c
        let shift = kl * self.v - detuning;
        let half = 0.5 * rabi * (self.s11 - self.s22);
        let ds22 = rabi * self.c_im;
        Self {
            r: self.v,
            v: kick * ds22,
            s11: -ds22,
            s22: ds22,
            c_re: shift * self.c_im,
            c_im: half - shift * self.c_re,
        }
    }

    fn add(&self, k: &Self, h: f64) -> Self {
        Self {
            r: self.r + h * k.r,
            v: self.v + h * k.v,
            s11: self.s11 + h * k.s11,
            s22: self.s22 + h * k.s22,
            c_re: self.c_re + h * k.c_re,
            c_im: self.c_im + h * k.c_im,
        }
    }
}

fn single_pulse_segment(
    p: &TestParticle,
    pulse: &LaserPulse,
    a: f64,
    n_steps: usize,
    h: f64,
    coupling: MotionCoupling,
) -> Result<TestParticle> {
    let kl = pulse.wavevector();
    let phase = |r: f64, t: f64| kl * r - pulse.detuning * t - pulse.phase;
    let c = p.s21 * Complex64::cis(-phase(p.r, a));
    let kick = match coupling {
        MotionCoupling::Ehrenfest => HBAR * kl / MASS,
        MotionCoupling::Prescribed => 0.0,
    };
    let (rabi, det) = (pulse.rabi, pulse.detuning);
    let mut y = Rotating { r: p.r, v: p.v, s11: p.s11, s22: p.s22, c_re: c.re, c_im: c.im };
    for step in 0..n_steps {
        let k1 = y.rhs(rabi, kl, det, kick);
        let k2 = y.add(&k1, 0.5 * h).rhs(rabi, kl, det, kick);
        let k3 = y.add(&k2, 0.5 * h).rhs(rabi, kl, det, kick);
        let k4 = y.add(&k3, h).rhs(rabi, kl, det, kick);
        let s = h / 6.0;
        y = Rotating {
            r: y.r + s * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r),
            v: y.v + s * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
            s11: y.s11 + s * (k1.s11 + 2.0 * k2.s11 + 2.0 * k3.s11 + k4.s11),
            s22: y.s22 + s * (k1.s22 + 2.0 * k2.s22 + 2.0 * k3.s22 + k4.s22),
            c_re: y.c_re + s * (k1.c_re + 2.0 * k2.c_re + 2.0 * k3.c_re + k4.c_re),
            c_im: y.c_im + s * (k1.c_im + 2.0 * k2.c_im + 2.0 * k3.c_im + k4.c_im),
        };
        let bloch = (y.s11 + y.s22 - 1.0).abs().max(y.c_re * y.c_re + y.c_im * y.c_im - y.s11 * y.s22);
        if !(bloch <= BLOCH_TOLERANCE) {
            let t = a + (step + 1) as f64 * h;
            let out = TestParticle {
                r: y.r,
                v: y.v,
                s11: y.s11,
                s22: y.s22,
                s21: Complex64::new(y.c_re, y.c_im) * Complex64::cis(phase(y.r, t)),
            };
            out.check(t)?;
            return Err(Error::Diverged { invariant: "Bloch vector left the sphere".into(), time: t });
        }
    }
    let t = a + n_steps as f64 * h;
    let out = TestParticle {
        r: y.r,
        v: y.v,
        s11: y.s11,
        s22: y.s22,
        s21: Complex64::new(y.c_re, y.c_im) * Complex64::cis(phase(y.r, t)),
    };
    out.check(t)?;
    Ok(out)
}

/// Integrates one particle from `t0` to `t_end`.
///
/// Pulse edges are step boundaries; each interval between them is split into
/// equal steps no longer than `dt`. Field-free intervals are a single exact
/// drift, and intervals with one pulse are integrated in that pulse's
/// rotating frame (the same equations as [`bloch_step`], without the
/// explicit phase).
pub fn propagate_particle(
    particle: &TestParticle,
    pulses: &PulseSequence,
    dt: f64,
    t0: f64,
    t_end: f64,
    coupling: MotionCoupling,
) -> Result<TestParticle> {
    let mut p = *particle;
    for seg in pulses.breakpoints(t0, t_end, &[]).windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let active = pulses.active_over(a, b);
        match active.as_slice() {
            [] => p.r += p.v * (b - a),
            [pulse] => {
                let (n, h) = substeps(a, b, dt);
                p = single_pulse_segment(&p, pulse, a, n, h, coupling)?;
            }
            _ => {
                let (n, h) = substeps(a, b, dt);
                for step in 0..n {
                    let t = a + step as f64 * h;
                    p = rk4_lab(&p, t, h, &active, coupling);
                    p.check(t + h)?;
                }
            }
        }
    }
    Ok(p)
}

/// Independent integration of every particle. On failure the error of the
/// lowest-index failing particle is returned.
pub fn propagate_ensemble(
    particles: &[TestParticle],
    pulses: &PulseSequence,
    dt: f64,
    t0: f64,
    t_end: f64,
    coupling: MotionCoupling,
) -> Result<Vec<TestParticle>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= t0) {
        return Err(Error::InvalidParameter(format!("t_end {t_end} precedes t0 {t0}")));
    }
    let results: Vec<Result<TestParticle>> = particles
        .par_iter()
        .map(|p| propagate_particle(p, pulses, dt, t0, t_end, coupling))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|e| Error::ParticleDiverged { index, source: Box::new(e) }))
        .collect()
}

/// Particle counts on half-open cells [origin + n·cell, origin + (n+1)·cell),
/// stored row-major with one row per momentum cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram2D {
    pub origin_r: f64,
    pub origin_p: f64,
    pub cell_r: f64,
    pub cell_p: f64,
    pub n_r: usize,
    pub n_p: usize,
    counts: Vec<u64>,
}

impl Histogram2D {
    /// Empty histogram on fixed cells.
    pub fn new(origin_r: f64, origin_p: f64, cell_r: f64, cell_p: f64, n_r: usize, n_p: usize) -> Result<Self> {
        if !(cell_r > 0.0) || !(cell_p > 0.0) || n_r == 0 || n_p == 0 {
            return Err(Error::InvalidParameter("histogram cells must be positive".into()));
        }
        Ok(Self { origin_r, origin_p, cell_r, cell_p, n_r, n_p, counts: vec![0; n_r * n_p] })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, ir: usize, ip: usize) -> u64 {
        self.counts[ip * self.n_r + ir]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    fn cell_of(&self, p: &TestParticle) -> Option<usize> {
        let ir = ((p.r - self.origin_r) / self.cell_r).floor();
        let ip = ((p.momentum() - self.origin_p) / self.cell_p).floor();
        let inside = ir >= 0.0 && ip >= 0.0 && (ir as usize) < self.n_r && (ip as usize) < self.n_p;
        inside.then(|| ip as usize * self.n_r + ir as usize)
    }

    /// Adds the particles falling inside; returns how many fell outside.
    pub fn fill(&mut self, particles: &[TestParticle]) -> u64 {
        let len = self.counts.len();
        let this = &*self;
        let (counts, outside) = particles
            .par_iter()
            .fold(
                || (vec![0u64; len], 0u64),
                |(mut acc, mut out), p| {
                    match this.cell_of(p) {
                        Some(i) => acc[i] += 1,
                        None => out += 1,
                    }
                    (acc, out)
                },
            )
            .reduce(
                || (vec![0u64; len], 0u64),
                |(mut a, oa), (b, ob)| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    (a, oa + ob)
                },
            );
        self.counts.iter_mut().zip(&counts).for_each(|(x, y)| *x += y);
        outside
    }

    /// Normalized density counts/(N·cell_r·cell_p) sampled at cell centres.
    pub fn to_field(&self) -> PhaseSpaceField {
        let n = self.total().max(1) as f64;
        let scale = 1.0 / (n * self.cell_r * self.cell_p);
        let r_axis = Axis::new(self.n_r, self.origin_r + 0.5 * self.cell_r, self.cell_r);
        let p_axis = Axis::new(self.n_p, self.origin_p + 0.5 * self.cell_p, self.cell_p);
        let values = self.counts.iter().map(|&c| c as f64 * scale).collect();
        PhaseSpaceField::new(FieldKind::Histogram, r_axis, p_axis, values)
            .expect("histogram shape matches its axes")
    }
}

/// Histogram on cells aligned to multiples of the cell size, just large
/// enough to hold every particle.
pub fn histogram(particles: &[TestParticle], cell_r: f64, cell_p: f64) -> Result<Histogram2D> {
    histogram_padded(particles, cell_r, cell_p, 0)
}

/// [`histogram`] with `margin` empty cells added on every side.
pub fn histogram_padded(particles: &[TestParticle], cell_r: f64, cell_p: f64, margin: usize) -> Result<Histogram2D> {
    if !(cell_r > 0.0) || !(cell_p > 0.0) {
        return Err(Error::InvalidParameter("histogram cells must be positive".into()));
    }
    if particles.is_empty() {
        return Err(Error::InvalidParameter("cannot histogram an empty ensemble".into()));
    }
    let (lo_r, hi_r, lo_p, hi_p) = particles.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| {
            let (ir, ip) = ((p.r / cell_r).floor(), (p.momentum() / cell_p).floor());
            (a.min(ir), b.max(ir), c.min(ip), d.max(ip))
        },
    );
    let m = margin as f64;
    let n_r = (hi_r - lo_r + 1.0 + 2.0 * m) as usize;
    let n_p = (hi_p - lo_p + 1.0 + 2.0 * m) as usize;
    let mut h = Histogram2D::new((lo_r - m) * cell_r, (lo_p - m) * cell_p, cell_r, cell_p, n_r, n_p)?;
    let outside = h.fill(particles);
    debug_assert_eq!(outside, 0);
    Ok(h)
}
