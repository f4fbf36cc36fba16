use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{bound_check, von_neumann_of, BoundVerdict, PsdReport};
use crate::phase_space::{husimi_direct, marginals, weierstrass_smooth, wigner, PhaseSpaceField};
use crate::quantum::{partial_trace_internal, propagate, DensityMatrix, Which};
use crate::semiclassical::{histogram_padded, propagate_ensemble, sample_ensemble, MotionCoupling, TestParticle};

/// Number of internal levels in the bound check.
pub const LEVELS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedField {
    pub label: String,
    pub time: f64,
    pub field: PhaseSpaceField,
}

/// One-dimensional density profile, e.g. a marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub label: String,
    pub time: f64,
    pub coordinate: &'static str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PmdGain {
    pub label: String,
    pub initial_max: f64,
    pub final_max: f64,
}

impl PmdGain {
    pub fn gain(&self) -> f64 {
        self.final_max / self.initial_max
    }
}

/// Unitarity diagnostics of one snapshot relative to the first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantRow {
    pub time: f64,
    pub trace_error: f64,
    pub hermiticity: f64,
    pub eigenvalue_drift: f64,
    pub s_vn_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Hold(BoundVerdict),
    Violation(String),
    /// The initial state is not diagonal in |p, i⟩.
    NotApplicable,
}

#[derive(Clone, Debug)]
pub struct Bundle {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub reports: Vec<PsdReport>,
    pub invariants: Vec<InvariantRow>,
    pub fields: Vec<NamedField>,
    pub profiles: Vec<Profile>,
    pub pmd_gains: Vec<PmdGain>,
    pub verdict: Verdict,
}

impl Bundle {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Violation(_) => 2,
            _ => 0,
        }
    }

    pub fn field(&self, label: &str) -> Option<&NamedField> {
        self.fields.iter().find(|f| f.label == label)
    }

    pub fn pmd_gain(&self, label: &str) -> Option<&PmdGain> {
        self.pmd_gains.iter().find(|g| g.label == label)
    }
}

/// Runs the whole experiment in memory; nothing is written.
///
/// A bound violation is reported through [`Bundle::verdict`]; integration
/// failures are errors.
pub fn run(config: &ExperimentConfig) -> Result<Bundle> {
    config.validate()?;
    let pulses = config.pulses()?;
    let r_grid = config.position_grid()?;
    let rho0 = config.initial_state()?;
    let times = &config.sampling.times;
    let snaps = propagate(&rho0, &pulses, config.integrator.dt, times)?;

    let sm = config.smoothing;
    let mut reports = Vec::with_capacity(snaps.len());
    let mut invariants = Vec::with_capacity(snaps.len());
    let mut eig0: Option<Vec<f64>> = None;
    let mut s0 = 0.0;
    for snap in &snaps {
        reports.push(PsdReport::compute(snap, sm.sigma_r, &r_grid)?);
        let eig = snap.eigenvalues();
        let s = von_neumann_of(&eig)?;
        let base = eig0.get_or_insert_with(|| {
            s0 = s;
            eig.clone()
        });
        let drift = eig.iter().zip(base.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        invariants.push(InvariantRow {
            time: snap.time(),
            trace_error: (snap.trace() - 1.0).norm(),
            hermiticity: snap.hermiticity_residue(),
            eigenvalue_drift: drift,
            s_vn_drift: (s - s0).abs(),
        });
    }

    let mut fields = Vec::new();
    let mut profiles = Vec::new();
    let first = snaps.first().expect("validated sampling is non-empty");
    let last = snaps.last().expect("validated sampling is non-empty");
    for (tag, snap) in [("initial", first), ("final", last)] {
        quantum_fields(snap, tag, config, &r_grid, &mut fields, &mut profiles)?;
    }

    let mut labels = vec!["wigner_total", "smoothed_total", "husimi"];
    if config.semiclassical.particles > 0 {
        semiclassical_fields(config, times[0], last.time(), &mut fields)?;
        labels.extend(["histogram", "histogram_smoothed"]);
    }
    let field_max = |label: String| -> f64 { fields.iter().find(|f| f.label == label).map_or(f64::NAN, |f| f.field.max()) };
    let pmd_gains = labels
        .iter()
        .map(|l| PmdGain {
            label: l.to_string(),
            initial_max: field_max(format!("{l}_initial")),
            final_max: field_max(format!("{l}_final")),
        })
        .collect();

    let verdict = if config.bound_applicable() {
        match bound_check(&reports, LEVELS) {
            Ok(v) => Verdict::Hold(v),
            Err(e @ Error::BoundViolation { .. }) => Verdict::Violation(e.to_string()),
            Err(e) => return Err(e),
        }
    } else {
        Verdict::NotApplicable
    };

    Ok(Bundle {
        config: config.clone(),
        config_hash: config.hash(),
        reports,
        invariants,
        fields,
        profiles,
        pmd_gains,
        verdict,
    })
}

/// [`run`] on a dedicated worker pool. Results do not depend on `threads`.
pub fn run_with_threads(config: &ExperimentConfig, threads: usize) -> Result<Bundle> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run(config))
}

fn quantum_fields(
    snap: &DensityMatrix,
    tag: &str,
    config: &ExperimentConfig,
    r_grid: &crate::lattice::PositionGrid,
    fields: &mut Vec<NamedField>,
    profiles: &mut Vec<Profile>,
) -> Result<()> {
    let sm = config.smoothing;
    let rho = snap.to_schrodinger();
    let t = snap.time();
    let mut push = |label: &str, field: PhaseSpaceField| {
        fields.push(NamedField { label: format!("{label}_{tag}"), time: t, field });
    };
    push("wigner_ground", wigner(&rho, Which::Ground, r_grid)?);
    push("wigner_excited", wigner(&rho, Which::Excited, r_grid)?);
    let total = wigner(&rho, Which::Total, r_grid)?;
    push("smoothed_total", weierstrass_smooth(&total, sm.sigma_r, sm.sigma_p)?);
    push("husimi", husimi_direct(&partial_trace_internal(&rho), sm.sigma_r, r_grid)?);

    let (pos, mom) = marginals(&total);
    let r_pts = total.r_axis.points();
    let p_pts = total.p_axis.points();
    profiles.push(Profile {
        label: format!("marginal_position_{tag}"),
        time: t,
        coordinate: "r",
        points: r_pts.into_iter().zip(pos).collect(),
    });
    profiles.push(Profile {
        label: format!("marginal_momentum_{tag}"),
        time: t,
        coordinate: "p",
        points: p_pts.into_iter().zip(mom).collect(),
    });
    push("wigner_total", total);
    Ok(())
}

fn semiclassical_fields(config: &ExperimentConfig, t_first: f64, t_last: f64, fields: &mut Vec<NamedField>) -> Result<()> {
    let sc = config.semiclassical;
    let sm = config.smoothing;
    let dt = config.integrator.dt;
    let pulses = config.pulses()?;
    let coupling = MotionCoupling::Ehrenfest;
    let mut particles = sample_ensemble(&config.ensemble())?;
    if t_first > 0.0 {
        particles = propagate_ensemble(&particles, &pulses, dt, 0.0, t_first, coupling)?;
    }
    let initial = particles.clone();
    let last = propagate_ensemble(&particles, &pulses, dt, t_first, t_last, coupling)?;
    // Room for the kernel tails on every side.
    let margin = (3.0 * (sm.sigma_r / sc.cell_r).max(sm.sigma_p / sc.cell_p)).ceil() as usize;
    let mut emit = |tag: &str, t: f64, ps: &[TestParticle]| -> Result<()> {
        let raw = histogram_padded(ps, sc.cell_r, sc.cell_p, margin)?.to_field();
        let smooth = weierstrass_smooth(&raw, sm.sigma_r, sm.sigma_p)?;
        fields.push(NamedField { label: format!("histogram_{tag}"), time: t, field: raw });
        fields.push(NamedField { label: format!("histogram_smoothed_{tag}"), time: t, field: smooth });
        Ok(())
    };
    emit("initial", t_first, &initial)?;
    emit("final", t_last, &last)?;
    Ok(())
}
