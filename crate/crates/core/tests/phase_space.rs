mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use common::{random_reduced, random_state};
use psdlim::lattice::{MomentumGrid, PositionGrid, PulseSequence, MASS, PLANCK};
use psdlim::phase_space::*;
use psdlim::quantum::*;

fn default_grid() -> MomentumGrid {
    MomentumGrid::new(10, 8).unwrap()
}

fn at_time(rho: &DensityMatrix, t: f64) -> DensityMatrix {
    DensityMatrix::from_matrix(*rho.grid(), rho.matrix().clone(), Picture::Interaction, t).unwrap()
}

#[test]
fn free_flight_is_a_shear() {
    let g = MomentumGrid::new(4, 6).unwrap();
    let rho0 = random_state(g, 3, 0.8, true, 5);
    let p_axis = Axis::half_step(&g);
    for t in [0.1, 0.4, 1.0] {
        let snap = &propagate(&rho0, &PulseSequence::empty(), 1e-3, &[t]).unwrap()[0];
        let now = snap.to_schrodinger();
        let then = at_time(&rho0, 0.0).to_schrodinger();
        let mut worst: f64 = 0.0;
        for row in (0..p_axis.len).step_by(3) {
            let p = p_axis.point(row);
            for r in [-2.0, -0.7, 0.0, 0.3, 1.9] {
                for which in [Which::Ground, Which::Excited, Which::Total] {
                    let a = wigner_point(&now, which, r, row);
                    let b = wigner_point(&then, which, r - p * t / MASS, row);
                    worst = worst.max((a - b).norm());
                }
            }
        }
        assert!(worst < 1e-6, "t = {t}: {worst}");
    }
}

#[test]
fn interaction_picture_wigner_is_sheared_lab_wigner() {
    let g = default_grid();
    let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(1.0, 1.0)).unwrap();
    let seq = PulseSequence::pi_pair(2.0, -2.0).unwrap();
    let snaps = propagate(&rho, &seq, 1e-3, &[0.7, PI / 2.0, 2.9]).unwrap();
    let p_axis = Axis::half_step(&g);
    for snap in &snaps {
        let t = snap.time();
        let lab = snap.to_schrodinger();
        for row in (0..p_axis.len).step_by(17) {
            let p = p_axis.point(row);
            for r in [-3.0, -1.1, 0.0, 0.4, 2.5] {
                for which in [Which::Ground, Which::Excited] {
                    let a = wigner_point(&lab, which, r, row);
                    let b = wigner_point(snap, which, r - p * t / MASS, row);
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn two_mode_superposition_matches_closed_form() {
    // (|p0⟩ + |p1⟩)/√2: W = (1/h)[δ-rows at p0, p1] + (2/h)cos(r(p0 − p1)/ħ) on the midpoint row
    let g = default_grid();
    let (a0, a1) = (g.center() - 6, g.center() + 8);
    let amp = Complex64::new(1.0, 0.0);
    let rho = DensityMatrix::pure(g, &[(Level::Ground, a0, amp), (Level::Ground, a1, amp)]).unwrap();
    let r_grid = PositionGrid::wigner_window(&g, 8).unwrap();
    let w = wigner(&rho.to_schrodinger(), Which::Ground, &r_grid).unwrap();
    let dp = g.point(a0) - g.point(a1);
    for ip in 0..w.p_axis.len {
        for ir in 0..w.r_axis.len {
            let r = w.r_axis.point(ir);
            let expected = if ip == 2 * a0 || ip == 2 * a1 {
                1.0 / PLANCK
            } else if ip == a0 + a1 {
                2.0 / PLANCK * (r * dp).cos()
            } else {
                0.0
            };
            assert!((w.get(ir, ip) - expected).abs() < 1e-12);
        }
    }
    assert!(w.min() < -0.9 * 2.0 / PLANCK);
    let period = 2.0 * PI / dp.abs();
    let r0 = w.r_axis.point(10);
    let shifted = wigner_point(&rho, Which::Ground, r0 + period, a0 + a1).re;
    assert!((shifted - w.get(10, a0 + a1)).abs() < 1e-12);
}

#[test]
fn husimi_direct_equals_smoothed_wigner() {
    let g = default_grid();
    let r_grid = PositionGrid::wigner_window(&g, 8).unwrap();
    let seq = PulseSequence::pi_pair(2.0, -2.0).unwrap();
    let rho0 = gaussian_mixed_state(&g, GaussianStateSpec::new(1.0, 1.0)).unwrap();
    let snaps = propagate(&rho0, &seq, 1e-3, &[0.0, PI / 2.0]).unwrap();
    for snap in &snaps {
        let rho = snap.to_schrodinger();
        let w = wigner(&rho, Which::Total, &r_grid).unwrap();
        let smooth = weierstrass_smooth(&w, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let q = husimi_direct(&partial_trace_internal(&rho), FRAC_1_SQRT_2, &r_grid).unwrap();
        assert_eq!(smooth.kind, FieldKind::Husimi);
        assert!(smooth.same_grid(&q));
        let worst = smooth.values().iter().zip(q.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
        assert!(q.min() >= -1e-12);
        if snap.time() == 0.0 {
            assert!((q.integral() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn marginal_normalization_matches_field() {
    let g = default_grid();
    let r_grid = PositionGrid::wigner_window(&g, 8).unwrap();
    let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(1.2, 0.8)).unwrap();
    let w = wigner(&rho.to_schrodinger(), Which::Total, &r_grid).unwrap();
    let (pos, mom) = marginals(&w);
    let norm = w.integral();
    assert!((pos.iter().sum::<f64>() * w.r_axis.step - norm).abs() < 1e-8);
    assert!((mom.iter().sum::<f64>() * w.p_axis.step - norm).abs() < 1e-8);
    // widths of the Gaussian marginals
    let var = |xs: &[f64], axis: &Axis| {
        let total: f64 = xs.iter().sum();
        xs.iter().enumerate().map(|(i, v)| v * axis.point(i).powi(2)).sum::<f64>() / total
    };
    assert!((var(&pos, &w.r_axis).sqrt() - 1.2).abs() < 1e-3);
    assert!((var(&mom, &w.p_axis).sqrt() - 0.8).abs() < 1e-3);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let g = MomentumGrid::new(2, 3).unwrap();
    let n = 2 * g.len();
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    m[(2, 2)] = Complex64::new(1.0, 0.0);
    m[(3, 4)] = Complex64::new(0.0, 0.3);
    let rho = DensityMatrix::from_matrix(g, m, Picture::Schrodinger, 0.0).unwrap();
    let r_grid = PositionGrid::conjugate(&g, 2).unwrap();
    assert!(matches!(wigner(&rho, Which::Ground, &r_grid), Err(psdlim::Error::Diverged { .. })));
}

fn random_field(seed: u64, kind: FieldKind) -> PhaseSpaceField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (r, p) = (Axis::new(24, -2.4, 0.2), Axis::new(20, -1.0, 0.1));
    let values = (0..r.len * p.len).map(|_| rng.random::<f64>()).collect();
    PhaseSpaceField::new(kind, r, p, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn husimi_never_exceeds_inverse_planck(seed in 0u64..1_000_000, rank in 1usize..4) {
        let g = MomentumGrid::new(4, 6).unwrap();
        let rho_a = random_reduced(g, rank, 0.8, seed);
        let r_grid = PositionGrid::conjugate(&g, 2).unwrap();
        let q = husimi_direct(&rho_a, 0.6, &r_grid).unwrap();
        prop_assert!(q.max() <= 1.0 / PLANCK + 1e-12);
        prop_assert!(q.min() >= -1e-12);
    }

    #[test]
    fn smoothing_is_linear_and_positive(seed in 0u64..1_000_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = random_field(seed, FieldKind::Histogram);
        let h = random_field(seed + 1, FieldKind::Histogram);
        let combo: Vec<f64> = f.values().iter().zip(h.values()).map(|(x, y)| a * x + b * y).collect();
        let combo = PhaseSpaceField::new(FieldKind::Histogram, f.r_axis, f.p_axis, combo).unwrap();
        let (sf, sh, sc) = (
            weierstrass_smooth(&f, 0.5, 0.25).unwrap(),
            weierstrass_smooth(&h, 0.5, 0.25).unwrap(),
            weierstrass_smooth(&combo, 0.5, 0.25).unwrap(),
        );
        for ((x, y), z) in sf.values().iter().zip(sh.values()).zip(sc.values()) {
            prop_assert!((a * x + b * y - z).abs() < 1e-12);
        }
        prop_assert!(sf.min() >= -1e-12);
        prop_assert_eq!(sf.kind, FieldKind::Smoothed);
    }
}
