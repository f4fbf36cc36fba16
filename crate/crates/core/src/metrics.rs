//! Entropies, phase-space densities D = e^{−S} and the M-level bound check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{PositionGrid, PLANCK};
use crate::phase_space::{husimi_direct, FieldKind, PhaseSpaceField};
use crate::quantum::{momentum_populations, partial_trace_internal, DensityMatrix, ReducedDensityMatrix, Which};

/// Eigenvalues down to this are treated as round-off and clamped to zero.
pub const EIGENVALUE_FLOOR: f64 = -1e-8;
/// Populations down to this are clamped to zero.
pub const POPULATION_FLOOR: f64 = -1e-12;

/// States with a Hermitian spectrum.
pub trait Spectrum {
    fn spectrum(&self) -> Vec<f64>;
}

impl Spectrum for DensityMatrix {
    fn spectrum(&self) -> Vec<f64> {
        self.eigenvalues()
    }
}

impl Spectrum for ReducedDensityMatrix {
    fn spectrum(&self) -> Vec<f64> {
        self.eigenvalues()
    }
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// −Σ λ ln λ over the eigenvalues.
pub fn von_neumann<S: Spectrum>(state: &S) -> Result<f64> {
    von_neumann_of(&state.spectrum())
}

pub fn von_neumann_of(eigenvalues: &[f64]) -> Result<f64> {
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < EIGENVALUE_FLOOR {
        return Err(Error::NonPhysicalState { min_eigenvalue: min });
    }
    Ok(-eigenvalues.iter().map(|&l| xlnx(l.max(0.0))).sum::<f64>())
}

/// −Σ p ln p.
pub fn shannon_of(populations: &[f64]) -> Result<f64> {
    let min = populations.iter().copied().fold(f64::INFINITY, f64::min);
    if min < POPULATION_FLOOR {
        return Err(Error::NonPhysicalState { min_eigenvalue: min });
    }
    Ok(-populations.iter().map(|&p| xlnx(p.max(0.0))).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShannonBasis {
    /// |p, i⟩ populations of the full state.
    Full,
    /// |p⟩ populations of ρ_A.
    External,
    /// Ground-state populations alone. Not the entropy of any density
    /// matrix; reported as a pseudo-PSD only.
    GroundFiltered,
}

pub fn shannon(rho: &DensityMatrix, basis: ShannonBasis) -> Result<f64> {
    match basis {
        ShannonBasis::Full => {
            let mut pops = momentum_populations(rho, Which::Ground);
            pops.extend(momentum_populations(rho, Which::Excited));
            shannon_of(&pops)
        }
        ShannonBasis::External => shannon_of(&momentum_populations(rho, Which::Total)),
        ShannonBasis::GroundFiltered => shannon_of(&momentum_populations(rho, Which::Ground)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyFamily {
    Renyi,
    Tsallis,
}

/// Rényi ln(Σp^q)/(1−q) or Tsallis (1−Σp^q)/(q−1). `q = ∞` gives the Rényi
/// min-entropy.
pub fn generalized_entropy(probabilities: &[f64], family: EntropyFamily, q: f64) -> Result<f64> {
    if q == 1.0 {
        return Err(Error::UseShannon);
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter(format!("entropy order must be >= 0, got {q}")));
    }
    let probs: Vec<f64> = probabilities.iter().map(|p| p.max(0.0)).collect();
    if q.is_infinite() {
        return match family {
            EntropyFamily::Renyi => Ok(min_entropy(&probs)),
            EntropyFamily::Tsallis => Err(Error::InvalidParameter("Tsallis entropy needs a finite order".into())),
        };
    }
    let sum: f64 = probs.iter().filter(|&&p| p > 0.0).map(|p| p.powf(q)).sum();
    Ok(match family {
        EntropyFamily::Renyi => sum.ln() / (1.0 - q),
        EntropyFamily::Tsallis => (1.0 - sum) / (q - 1.0),
    })
}

/// −ln max p, the q → ∞ Rényi entropy.
pub fn min_entropy(probabilities: &[f64]) -> f64 {
    -probabilities.iter().copied().fold(0.0, f64::max).ln()
}

/// Wehrl entropy −∫Q ln(hQ) dr dp in units of phase-space cells h, so that
/// a coherent state gives 1 and e^{−S_W} is dimensionless.
pub fn wehrl(q: &PhaseSpaceField) -> Result<f64> {
    if q.kind != FieldKind::Husimi {
        return Err(Error::InvalidKind { expected: "husimi", found: q.kind.name() });
    }
    Ok(-q.values().iter().map(|&v| xlnx(PLANCK * v.max(0.0)) / PLANCK).sum::<f64>() * q.cell_area())
}

/// Entropies and phase-space densities of one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub time: f64,
    pub s_vn: f64,
    pub s_sh: f64,
    pub s_vn_a: f64,
    pub s_sh_a: f64,
    pub s_sh_g: f64,
    pub max_rho_a: f64,
    pub max_q: f64,
    pub s_wehrl: f64,
}

impl PsdReport {
    /// Computes every quantity; the Husimi function uses position width
    /// `husimi_sigma_r` on `r_grid`.
    pub fn compute(rho: &DensityMatrix, husimi_sigma_r: f64, r_grid: &PositionGrid) -> Result<Self> {
        let rho_s = rho.to_schrodinger();
        let rho_a = partial_trace_internal(&rho_s);
        let q = husimi_direct(&rho_a, husimi_sigma_r, r_grid)?;
        let pops_a = rho_a.populations();
        Ok(Self {
            time: rho.time(),
            s_vn: von_neumann(rho)?,
            s_sh: shannon(rho, ShannonBasis::Full)?,
            s_vn_a: von_neumann(&rho_a)?,
            s_sh_a: shannon_of(&pops_a)?,
            s_sh_g: shannon(rho, ShannonBasis::GroundFiltered)?,
            max_rho_a: pops_a.iter().copied().fold(0.0, f64::max),
            max_q: q.max(),
            s_wehrl: wehrl(&q)?,
        })
    }

    pub fn d_vn(&self) -> f64 {
        (-self.s_vn).exp()
    }

    pub fn d_sh(&self) -> f64 {
        (-self.s_sh).exp()
    }

    pub fn d_vn_a(&self) -> f64 {
        (-self.s_vn_a).exp()
    }

    pub fn d_sh_a(&self) -> f64 {
        (-self.s_sh_a).exp()
    }

    pub fn d_sh_g(&self) -> f64 {
        (-self.s_sh_g).exp()
    }

    pub fn d_wehrl(&self) -> f64 {
        (-self.s_wehrl).exp()
    }

    /// Gains of every density-like quantity relative to `reference`.
    pub fn gains(&self, reference: &PsdReport) -> Gains {
        Gains {
            d_vn: self.d_vn() / reference.d_vn(),
            d_sh: self.d_sh() / reference.d_sh(),
            d_vn_a: self.d_vn_a() / reference.d_vn_a(),
            d_sh_a: self.d_sh_a() / reference.d_sh_a(),
            d_sh_g: self.d_sh_g() / reference.d_sh_g(),
            max_rho_a: self.max_rho_a / reference.max_rho_a,
            max_q: self.max_q / reference.max_q,
            d_wehrl: self.d_wehrl() / reference.d_wehrl(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Gains {
    pub d_vn: f64,
    pub d_sh: f64,
    pub d_vn_a: f64,
    pub d_sh_a: f64,
    pub d_sh_g: f64,
    pub max_rho_a: f64,
    pub max_q: f64,
    pub d_wehrl: f64,
}

impl Gains {
    fn max_with(&self, o: &Gains) -> Gains {
        Gains {
            d_vn: self.d_vn.max(o.d_vn),
            d_sh: self.d_sh.max(o.d_sh),
            d_vn_a: self.d_vn_a.max(o.d_vn_a),
            d_sh_a: self.d_sh_a.max(o.d_sh_a),
            d_sh_g: self.d_sh_g.max(o.d_sh_g),
            max_rho_a: self.max_rho_a.max(o.max_rho_a),
            max_q: self.max_q.max(o.max_q),
            d_wehrl: self.d_wehrl.max(o.d_wehrl),
        }
    }
}

/// Outcome of a successful [`bound_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct BoundVerdict {
    pub levels: usize,
    /// Largest gain of each quantity over the series.
    pub max_gains: Gains,
}

/// Checks the M-level phase-space-density bound at every report of a series
/// that starts from a state diagonal in |p, i⟩:
///
/// - max ρ_A(t) ≤ M·max ρ_A(0)
/// - D_VN_A(t) ≤ M·D_VN_A(0) and D_Sh_A(t) ≤ D_VN_A(t)
/// - max Q(t) ≤ M·max Q(0)
/// - D_Sh(t) ≤ D_Sh(0)
///
/// The ground-filtered pseudo-PSD is reported but never checked.
pub fn bound_check(series: &[PsdReport], levels: usize) -> Result<BoundVerdict> {
    let Some(first) = series.first() else {
        return Err(Error::InvalidParameter("bound check needs at least one report".into()));
    };
    if levels == 0 {
        return Err(Error::InvalidParameter("number of levels must be positive".into()));
    }
    let m = levels as f64;
    let mut max_gains = first.gains(first);
    for rep in series {
        let g = rep.gains(first);
        max_gains = max_gains.max_with(&g);
        let violation = |quantity: &str, gain: f64, limit: f64| Error::BoundViolation {
            quantity: quantity.into(),
            time: rep.time,
            gain,
            limit,
        };
        let strict = m * (1.0 + 1e-6);
        if g.max_rho_a > strict {
            return Err(violation("max_rho_A", g.max_rho_a, m));
        }
        if g.d_vn_a > strict {
            return Err(violation("D_VN_A", g.d_vn_a, m));
        }
        if rep.d_sh_a() > rep.d_vn_a() * (1.0 + 1e-9) {
            return Err(violation("D_Sh_A/D_VN_A", rep.d_sh_a() / rep.d_vn_a(), 1.0));
        }
        if g.max_q > m * (1.0 + 1e-3) {
            return Err(violation("max_Q", g.max_q, m));
        }
        if g.d_sh > 1.0 + 1e-6 {
            return Err(violation("D_Sh", g.d_sh, 1.0));
        }
    }
    Ok(BoundVerdict { levels, max_gains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::MomentumGrid;
    use crate::phase_space::weierstrass_smooth;
    use crate::quantum::{gaussian_mixed_state, thermal_diagonal_state, GaussianStateSpec, Level, Picture};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    #[test]
    fn von_neumann_limits() {
        assert!(von_neumann_of(&[1.0, 0.0, 0.0]).unwrap().abs() < 1e-15);
        assert!((von_neumann_of(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-14);
        assert!(von_neumann_of(&[1.0 + 1e-9, -1e-9]).is_ok());
        assert!(matches!(von_neumann_of(&[1.1, -0.1]), Err(Error::NonPhysicalState { .. })));
    }

    #[test]
    fn diagonal_state_shannon_equals_von_neumann() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = thermal_diagonal_state(&g, 1.0).unwrap();
        let vn = von_neumann(&rho).unwrap();
        assert!((shannon(&rho, ShannonBasis::Full).unwrap() - vn).abs() < 1e-8);
        assert!((shannon(&rho, ShannonBasis::External).unwrap() - vn).abs() < 1e-8);
    }

    #[test]
    fn coherent_state_entropies() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(0.5, 1.0)).unwrap();
        assert!(von_neumann(&rho).unwrap().abs() < 1e-6);
        assert!(shannon(&rho, ShannonBasis::Full).unwrap() > 1.0);
    }

    #[test]
    fn generalized_entropy_cases() {
        let uniform = [0.125; 8];
        for q in [0.0, 0.5, 2.0, 3.7, f64::INFINITY] {
            let s = generalized_entropy(&uniform, EntropyFamily::Renyi, q).unwrap();
            assert!((s - 8f64.ln()).abs() < 1e-12, "q = {q}");
        }
        let lambda = [0.5, 0.3, 0.2];
        let purity: f64 = lambda.iter().map(|x| x * x).sum();
        let t2 = generalized_entropy(&lambda, EntropyFamily::Tsallis, 2.0).unwrap();
        assert!((t2 - (1.0 - purity)).abs() < 1e-15);
        for fam in [EntropyFamily::Renyi, EntropyFamily::Tsallis] {
            for q in [0.5, 2.0, 5.0] {
                assert!(generalized_entropy(&[1.0, 0.0], fam, q).unwrap().abs() < 1e-15);
            }
        }
        assert!(matches!(generalized_entropy(&lambda, EntropyFamily::Renyi, 1.0), Err(Error::UseShannon)));
        assert!((min_entropy(&lambda) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn wehrl_requires_husimi() {
        let f = PhaseSpaceField::new(
            FieldKind::Wigner,
            crate::phase_space::Axis::new(2, 0.0, 1.0),
            crate::phase_space::Axis::new(2, 0.0, 1.0),
            vec![0.25; 4],
        )
        .unwrap();
        assert!(matches!(wehrl(&f), Err(Error::InvalidKind { .. })));
    }

    #[test]
    fn coherent_state_wehrl_is_one() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(0.5, 1.0)).unwrap().to_schrodinger();
        let rg = PositionGrid::conjugate(&g, 2).unwrap();
        let q = husimi_direct(&partial_trace_internal(&rho), 0.5, &rg).unwrap();
        assert!((wehrl(&q).unwrap() - 1.0).abs() < 1e-4, "{}", wehrl(&q).unwrap());
    }

    #[test]
    fn smoothing_raises_wehrl() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(0.8, 1.0)).unwrap().to_schrodinger();
        let rg = PositionGrid::wigner_window(&g, 8).unwrap();
        let q = husimi_direct(&partial_trace_internal(&rho), 0.5, &rg).unwrap();
        let mut smoother = weierstrass_smooth(&q, 0.3, 0.3).unwrap();
        smoother.kind = FieldKind::Husimi;
        assert!(wehrl(&smoother).unwrap() > wehrl(&q).unwrap());
    }

    #[test]
    fn report_of_static_series_has_unit_gains() {
        let g = MomentumGrid::new(4, 4).unwrap();
        let rho = thermal_diagonal_state(&g, 0.8).unwrap();
        let rg = PositionGrid::conjugate(&g, 2).unwrap();
        let rep = PsdReport::compute(&rho, 0.5f64.sqrt(), &rg).unwrap();
        let verdict = bound_check(&[rep, rep, rep], 2).unwrap();
        let gains = verdict.max_gains;
        for x in [gains.d_vn, gains.d_sh, gains.d_vn_a, gains.d_sh_a, gains.max_rho_a, gains.max_q, gains.d_wehrl] {
            assert_eq!(x, 1.0);
        }
    }

    #[test]
    fn bound_violation_is_reported() {
        let g = MomentumGrid::new(4, 4).unwrap();
        let rg = PositionGrid::conjugate(&g, 2).unwrap();
        let rho = thermal_diagonal_state(&g, 0.8).unwrap();
        let first = PsdReport::compute(&rho, 0.5f64.sqrt(), &rg).unwrap();
        // all the population on one momentum: a gain far beyond 2
        let mut data = DMatrix::from_element(rho.dim(), rho.dim(), Complex64::new(0.0, 0.0));
        let c = rho.index(Level::Ground, g.center());
        data[(c, c)] = Complex64::new(1.0, 0.0);
        let cold = DensityMatrix::from_matrix(g, data, Picture::Interaction, 1.0).unwrap();
        let later = PsdReport::compute(&cold, 0.5f64.sqrt(), &rg).unwrap();
        match bound_check(&[first, later], 2) {
            Err(Error::BoundViolation { time, gain, .. }) => {
                assert_eq!(time, 1.0);
                assert!(gain > 2.0);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }
}
