#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use psdlim::lattice::{Direction, LaserPulse, MomentumGrid, PulseSequence};
use psdlim::quantum::{DensityMatrix, Picture, ReducedDensityMatrix};

fn cnormal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random mixed state of `rank` pure components, each with a Gaussian
/// momentum envelope of width `sigma_p` so that the lattice edges stay empty.
/// Both internal levels are populated when `excited` is set.
pub fn random_state(grid: MomentumGrid, rank: usize, sigma_p: f64, excited: bool, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let dim = 2 * n;
    let mut data = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for _ in 0..rank {
        let weight: f64 = rng.random::<f64>() + 0.05;
        let psi: Vec<Complex64> = (0..dim)
            .map(|i| {
                let p = grid.point(i % n);
                let env = (-p * p / (4.0 * sigma_p * sigma_p)).exp();
                if i >= n && !excited {
                    Complex64::new(0.0, 0.0)
                } else {
                    cnormal(&mut rng) * env
                }
            })
            .collect();
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        for r in 0..dim {
            for c in 0..dim {
                data[(r, c)] += psi[r] * psi[c].conj() * (weight / norm);
            }
        }
    }
    let tr = data.trace();
    data /= tr;
    DensityMatrix::from_matrix(grid, data, Picture::Interaction, 0.0).unwrap()
}

pub fn random_reduced(grid: MomentumGrid, rank: usize, sigma_p: f64, seed: u64) -> ReducedDensityMatrix {
    let rho = random_state(grid, rank, sigma_p, false, seed);
    let n = grid.len();
    let block = rho.matrix().view((0, 0), (n, n)).into_owned();
    ReducedDensityMatrix::from_matrix(grid, block, Picture::Schrodinger, 0.0).unwrap()
}

/// Random pulse sequence: Ω in [0.5, 4], δ in [−4, 4], random directions
/// and phases, each pulse no longer than π and starting before `horizon`.
pub fn random_sequence(pulses: usize, horizon: f64, seed: u64) -> PulseSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let list = (0..pulses)
        .map(|_| {
            let direction = if rng.random::<bool>() { Direction::Forward } else { Direction::Backward };
            let rabi = rng.random_range(0.5..4.0);
            let detuning = rng.random_range(-4.0..4.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let start = rng.random_range(0.0..horizon);
            let duration = rng.random_range(0.05..std::f64::consts::PI);
            LaserPulse::new(direction, rabi, detuning, phase, start, start + duration).unwrap()
        })
        .collect();
    PulseSequence::new(list).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
