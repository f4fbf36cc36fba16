//! Position–momentum distributions: discrete Wigner transform, Husimi
//! function, Gaussian (Weierstrass) smoothing and marginals.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{MomentumGrid, PositionGrid, HBAR, PLANCK};
use crate::quantum::{partial_trace_internal, DensityMatrix, Level, Picture, ReducedDensityMatrix, Which};

/// Largest imaginary part tolerated in a Wigner value before it is dropped.
pub const WIGNER_IMAG_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Wigner,
    Husimi,
    Histogram,
    Smoothed,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Wigner => "wigner",
            FieldKind::Husimi => "husimi",
            FieldKind::Histogram => "histogram",
            FieldKind::Smoothed => "smoothed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wigner" => Some(FieldKind::Wigner),
            "husimi" => Some(FieldKind::Husimi),
            "histogram" => Some(FieldKind::Histogram),
            "smoothed" => Some(FieldKind::Smoothed),
            _ => None,
        }
    }
}

/// Uniform axis x_i = origin + i·step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub len: usize,
    pub origin: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(len: usize, origin: f64, step: f64) -> Self {
        Self { len, origin, step }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Half-step momentum lattice p̄_c = p_0 + c·Δp/2, c = 0..2N−2.
    pub fn half_step(grid: &MomentumGrid) -> Self {
        Self::new(2 * grid.len() - 1, grid.point(0), grid.dp() / 2.0)
    }
}

impl From<PositionGrid> for Axis {
    fn from(g: PositionGrid) -> Self {
        Self::new(g.len(), g.origin(), g.dr())
    }
}

/// Real function on an (r, p) lattice, stored row-major with one row per
/// momentum value.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    pub kind: FieldKind,
    pub r_axis: Axis,
    pub p_axis: Axis,
    values: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn new(kind: FieldKind, r_axis: Axis, p_axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() != r_axis.len * p_axis.len {
            return Err(Error::InvalidParameter(format!(
                "field needs {}x{} values, got {}",
                p_axis.len,
                r_axis.len,
                values.len()
            )));
        }
        Ok(Self { kind, r_axis, p_axis, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ir: usize, ip: usize) -> f64 {
        self.values[ip * self.r_axis.len + ir]
    }

    pub fn row(&self, ip: usize) -> &[f64] {
        &self.values[ip * self.r_axis.len..(ip + 1) * self.r_axis.len]
    }

    pub fn cell_area(&self) -> f64 {
        self.r_axis.step * self.p_axis.step
    }

    /// ∫∫ field dr dp as a cell sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// (r, p) of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let n = self.r_axis.len;
        (self.r_axis.point(i % n), self.p_axis.point(i / n))
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.r_axis == other.r_axis && self.p_axis == other.p_axis
    }
}

/// Single point of the Wigner transform of the stored matrix block, at
/// position `r` and half-step row `row` (p̄ = p_0 + row·Δp/2). Works in
/// either picture: applied to ρ^I it gives the interaction-picture Wigner
/// function.
pub fn wigner_point(rho: &DensityMatrix, which: Which, r: f64, row: usize) -> Complex64 {
    let block = block_for(rho, which);
    let dp = rho.grid().dp();
    antidiagonal(&block, row)
        .map(|(a, b, v)| v * Complex64::cis(r * (a as f64 - b as f64) * dp / HBAR))
        .sum::<Complex64>()
        * (2.0 / PLANCK)
}

fn block_for(rho: &DensityMatrix, which: Which) -> DMatrix<Complex64> {
    match which {
        Which::Ground => rho.block(Level::Ground, Level::Ground),
        Which::Excited => rho.block(Level::Excited, Level::Excited),
        Which::Total => partial_trace_internal(rho).matrix().clone(),
    }
}

/// Entries (a, b, ρ[a, b]) with a + b = c.
fn antidiagonal(m: &DMatrix<Complex64>, c: usize) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
    let n = m.nrows();
    let lo = c.saturating_sub(n - 1);
    let hi = c.min(n - 1);
    (lo..=hi).map(move |a| (a, c - a, m[(a, c - a)]))
}

/// Wigner function of a block,
/// W(r, p̄) = (2/h)·Σ_{a+b=c} ρ[a, b]·e^{i r (p_a − p_b)/ħ},
/// on the half-step momentum lattice. `Which::Total` is the Wigner function
/// of ρ_A, i.e. the sum of the ground and excited fields.
///
/// The r-dependence of each row repeats every πħ/Δp (up to sign), so
/// `r_grid` should lie inside |r| < πħ/(2Δp) for localized states, see
/// [`PositionGrid::wigner_window`].
pub fn wigner(rho: &DensityMatrix, which: Which, r_grid: &PositionGrid) -> Result<PhaseSpaceField> {
    if rho.picture() != Picture::Schrodinger {
        return Err(Error::WrongPicture { expected: Picture::Schrodinger, found: rho.picture() });
    }
    wigner_of_block(&block_for(rho, which), rho.grid(), r_grid, rho.time())
}

/// [`wigner`] of an external-only density matrix.
pub fn wigner_reduced(rho_a: &ReducedDensityMatrix, r_grid: &PositionGrid) -> Result<PhaseSpaceField> {
    if rho_a.picture() != Picture::Schrodinger {
        return Err(Error::WrongPicture { expected: Picture::Schrodinger, found: rho_a.picture() });
    }
    wigner_of_block(rho_a.matrix(), rho_a.grid(), r_grid, rho_a.time())
}

fn wigner_of_block(
    block: &DMatrix<Complex64>,
    grid: &MomentumGrid,
    r_grid: &PositionGrid,
    time: f64,
) -> Result<PhaseSpaceField> {
    if grid.subdivision() % 2 != 0 {
        return Err(Error::InvalidParameter("Wigner transform needs an even subdivision".into()));
    }
    let n = grid.len();
    let p_axis = Axis::half_step(grid);
    let r_axis = Axis::from(*r_grid);
    let nr = r_grid.len();
    // twiddle[j][k] = e^{i r_j k Δp}, k offset by n − 1
    let span = 2 * n - 1;
    let dp = grid.dp();
    let twiddle: Vec<Complex64> = (0..nr)
        .flat_map(|j| {
            let r = r_grid.point(j);
            (0..span).map(move |k| Complex64::cis(r * (k as f64 - (n - 1) as f64) * dp / HBAR))
        })
        .collect();

    let rows: Vec<(Vec<f64>, f64)> = (0..p_axis.len)
        .into_par_iter()
        .map(|c| {
            let diag: Vec<(usize, Complex64)> = antidiagonal(block, c)
                .map(|(a, b, v)| (a + n - 1 - b, v))
                .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
                .collect();
            let mut worst = 0.0f64;
            let row = (0..nr)
                .map(|j| {
                    let tw = &twiddle[j * span..(j + 1) * span];
                    let w: Complex64 = diag.iter().map(|&(k, v)| v * tw[k]).sum::<Complex64>() * (2.0 / PLANCK);
                    worst = worst.max(w.im.abs());
                    w.re
                })
                .collect();
            (row, worst)
        })
        .collect();

    let residue = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if residue > WIGNER_IMAG_TOLERANCE {
        return Err(Error::Diverged {
            invariant: format!("Wigner imaginary residue {residue:.3e}"),
            time,
        });
    }
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    PhaseSpaceField::new(FieldKind::Wigner, r_axis, p_axis, values)
}

/// Husimi function Q(r, p̄) = ⟨α|ρ_A|α⟩/h over minimum-uncertainty states
/// with position width σ_r (σ_p = ħ/2σ_r), on the half-step momentum
/// lattice. The coherent-state momentum amplitudes are normalized on the
/// lattice.
pub fn husimi_direct(rho_a: &ReducedDensityMatrix, sigma_r: f64, r_grid: &PositionGrid) -> Result<PhaseSpaceField> {
    if !(sigma_r > 0.0) || !sigma_r.is_finite() {
        return Err(Error::InvalidParameter(format!("σ_r must be positive, got {sigma_r}")));
    }
    let grid = rho_a.grid();
    let m = match rho_a.picture() {
        Picture::Schrodinger => rho_a.matrix().clone(),
        Picture::Interaction => {
            return Err(Error::WrongPicture { expected: Picture::Schrodinger, found: rho_a.picture() })
        }
    };
    let n = grid.len();
    let dp = grid.dp();
    let sigma_p = HBAR / (2.0 * sigma_r);
    let p_axis = Axis::half_step(grid);
    let r_axis = Axis::from(*r_grid);
    let nr = r_grid.len();
    let span = 2 * n - 1;
    // e^{−i u Δp r_j}, u offset by n − 1
    let twiddle: Vec<Complex64> = (0..nr)
        .flat_map(|j| {
            let r = r_grid.point(j);
            (0..span).map(move |k| Complex64::cis(-r * (k as f64 - (n - 1) as f64) * dp / HBAR))
        })
        .collect();

    let rows: Vec<Vec<f64>> = (0..p_axis.len)
        .into_par_iter()
        .map(|c| {
            let pbar = p_axis.point(c);
            let mut g: Vec<f64> = (0..n)
                .map(|a| (-(grid.point(a) - pbar).powi(2) / (4.0 * sigma_p * sigma_p)).exp())
                .collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.iter_mut().for_each(|x| *x /= norm);
            // h_u = Σ_a g_a g_{a+u} ρ[a, a+u]
            let hu: Vec<(usize, Complex64)> = (0..span)
                .filter_map(|k| {
                    let u = k as i64 - (n as i64 - 1);
                    let s: Complex64 = (0..n as i64)
                        .filter(|&a| (0..n as i64).contains(&(a + u)))
                        .map(|a| {
                            let (a, b) = (a as usize, (a + u) as usize);
                            m[(a, b)] * (g[a] * g[b])
                        })
                        .sum();
                    (s.norm() > 0.0).then_some((k, s))
                })
                .collect();
            (0..nr)
                .map(|j| {
                    let tw = &twiddle[j * span..(j + 1) * span];
                    let q: Complex64 = hu.iter().map(|&(k, v)| v * tw[k]).sum();
                    q.re / PLANCK
                })
                .collect()
        })
        .collect();
    PhaseSpaceField::new(FieldKind::Husimi, r_axis, p_axis, rows.concat())
}

/// Convolution with exp(−Δr²/2s_r² − Δp²/2s_p²)/(2π s_r s_p). The kernel is
/// sampled on the field's grid and normalized to unit discrete mass; the
/// convolution is linear (zero padded), cropped to the input grid.
///
/// A Wigner input smoothed with s_r·s_p = ħ/2 yields a Husimi field.
pub fn weierstrass_smooth(field: &PhaseSpaceField, s_r: f64, s_p: f64) -> Result<PhaseSpaceField> {
    let (dr, dp) = (field.r_axis.step, field.p_axis.step);
    if !(s_r > dr) || !(s_p > dp) || !s_r.is_finite() || !s_p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "smoothing kernel ({s_r}, {s_p}) must be wider than a grid cell ({dr}, {dp})"
        )));
    }
    let (nr, np) = (field.r_axis.len, field.p_axis.len);
    let kr = gaussian_kernel(s_r / dr, nr);
    let kp = gaussian_kernel(s_p / dp, np);
    let mut planner = FftPlanner::new();
    let conv_r = Convolver::new(&mut planner, &kr, nr);
    let conv_p = Convolver::new(&mut planner, &kp, np);

    let mut values = field.values.clone();
    values.par_chunks_mut(nr).for_each(|row| conv_r.apply(row));
    let mut columns: Vec<Vec<f64>> = (0..nr).map(|j| (0..np).map(|i| values[i * nr + j]).collect()).collect();
    columns.par_iter_mut().for_each(|col| conv_p.apply(col));
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * nr + j] = *v;
        }
    }
    let kind = if field.kind == FieldKind::Wigner && ((s_r * s_p) / (HBAR / 2.0) - 1.0).abs() < 1e-9 {
        FieldKind::Husimi
    } else {
        FieldKind::Smoothed
    };
    PhaseSpaceField::new(kind, field.r_axis, field.p_axis, values)
}

/// Symmetric sampled Gaussian of width `sigma` cells, unit sum, truncated
/// at 10σ or at the largest offset a same-size output can see.
fn gaussian_kernel(sigma: f64, n: usize) -> Vec<f64> {
    let radius = ((10.0 * sigma).ceil() as usize).min(n.saturating_sub(1)).max(1);
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|x| *x /= total);
    k
}

struct Convolver {
    len: usize,
    radius: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex64>,
}

impl Convolver {
    fn new(planner: &mut FftPlanner<f64>, kernel: &[f64], len: usize) -> Self {
        let radius = kernel.len() / 2;
        let size = len + kernel.len() - 1;
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        for (i, &k) in kernel.iter().enumerate() {
            spectrum[i] = Complex64::new(k / size as f64, 0.0);
        }
        forward.process(&mut spectrum);
        Self { len, radius, forward, inverse, spectrum }
    }

    fn apply(&self, data: &mut [f64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.spectrum.len()];
        for (b, &x) in buf.iter_mut().zip(data.iter()) {
            b.re = x;
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        for (i, x) in data.iter_mut().enumerate().take(self.len) {
            *x = buf[i + self.radius].re;
        }
    }
}

/// Position density ∫ field dp and momentum density ∫ field dr.
pub fn marginals(field: &PhaseSpaceField) -> (Vec<f64>, Vec<f64>) {
    let (nr, np) = (field.r_axis.len, field.p_axis.len);
    let mut pos = vec![0.0; nr];
    let mut mom = vec![0.0; np];
    for ip in 0..np {
        let row = field.row(ip);
        for (j, &v) in row.iter().enumerate() {
            pos[j] += v * field.p_axis.step;
        }
        mom[ip] = row.iter().sum::<f64>() * field.r_axis.step;
    }
    (pos, mom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{gaussian_mixed_state, momentum_populations, GaussianStateSpec};
    use std::f64::consts::PI;

    fn gaussian_field(sr: f64, sp: f64, r_axis: Axis, p_axis: Axis) -> PhaseSpaceField {
        let values = (0..p_axis.len)
            .flat_map(|i| {
                let p = p_axis.point(i);
                (0..r_axis.len).map(move |j| {
                    let r = r_axis.point(j);
                    (-r * r / (2.0 * sr * sr) - p * p / (2.0 * sp * sp)).exp() / (2.0 * PI * sr * sp)
                })
            })
            .collect();
        PhaseSpaceField::new(FieldKind::Wigner, r_axis, p_axis, values).unwrap()
    }

    #[test]
    fn wigner_needs_schrodinger_picture() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(1.0, 1.0)).unwrap();
        let rg = PositionGrid::wigner_window(&g, 2).unwrap();
        assert!(matches!(wigner(&rho, Which::Total, &rg), Err(Error::WrongPicture { .. })));
    }

    #[test]
    fn gaussian_state_peak() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(1.0, 1.0)).unwrap().to_schrodinger();
        let rg = PositionGrid::wigner_window(&g, 4).unwrap();
        let w = wigner(&rho, Which::Total, &rg).unwrap();
        let peak = 1.0 / (2.0 * PI);
        assert!((w.max() / peak - 1.0).abs() < 0.02, "{}", w.max());
        assert!((w.integral() - 1.0).abs() < 1e-6, "{}", w.integral());
        let (r0, p0) = w.argmax();
        assert!(r0.abs() < 1e-12 && p0.abs() < 1e-12);
    }

    #[test]
    fn two_mode_fringes() {
        // (|p0⟩ + |p1⟩)/√2 with p1 − p0 = ħk: on the midpoint row
        // W = (2/h)·cos(r (p1 − p0)/ħ), negative on half of each period.
        let g = MomentumGrid::new(2, 2).unwrap();
        let c = Complex64::new(1.0, 0.0);
        let (a, b) = (g.center() - 1, g.center() + 1);
        let rho = DensityMatrix::pure(g, &[(Level::Ground, a, c), (Level::Ground, b, c)]).unwrap();
        let row = a + b;
        for r in [0.0, 0.7, PI / 2.0, PI, 2.5] {
            let w = wigner_point(&rho, Which::Ground, r, row);
            let expect = (2.0 / PLANCK) * r.cos();
            assert!((w.re - expect).abs() < 1e-14 && w.im.abs() < 1e-14);
        }
        let period = PLANCK / (g.point(b) - g.point(a));
        let w0 = wigner_point(&rho, Which::Ground, 0.3, row).re;
        let w1 = wigner_point(&rho, Which::Ground, 0.3 + period, row).re;
        assert!((w0 - w1).abs() < 1e-14);
    }

    #[test]
    fn smoothing_widens_gaussian() {
        let r_axis = Axis::new(201, -10.0, 0.1);
        let p_axis = Axis::new(161, -8.0, 0.1);
        let f = gaussian_field(1.0, 0.8, r_axis, p_axis);
        let s = weierstrass_smooth(&f, 0.6, 0.5).unwrap();
        assert_eq!(s.kind, FieldKind::Smoothed);
        let expect = gaussian_field(1.0f64.hypot(0.6), 0.8f64.hypot(0.5), r_axis, p_axis);
        let diff = s.values().iter().zip(expect.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
        assert!((s.integral() - f.integral()).abs() < 1e-6);
    }

    #[test]
    fn smoothing_semigroup() {
        let r_axis = Axis::new(181, -9.0, 0.1);
        let p_axis = Axis::new(141, -7.0, 0.1);
        let f = gaussian_field(0.5, 0.4, r_axis, p_axis);
        let twice = weierstrass_smooth(&weierstrass_smooth(&f, 0.4, 0.3).unwrap(), 0.4, 0.3).unwrap();
        let once = weierstrass_smooth(&f, 0.4 * 2f64.sqrt(), 0.3 * 2f64.sqrt()).unwrap();
        let diff = twice.values().iter().zip(once.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn smoothing_rejects_undersampled_kernel() {
        let f = gaussian_field(1.0, 1.0, Axis::new(51, -5.0, 0.2), Axis::new(51, -5.0, 0.2));
        assert!(weierstrass_smooth(&f, 0.1, 1.0).is_err());
        assert!(weierstrass_smooth(&f, 1.0, 0.2).is_err());
    }

    #[test]
    fn heisenberg_kernel_on_wigner_gives_husimi() {
        let f = gaussian_field(1.0, 1.0, Axis::new(101, -5.0, 0.1), Axis::new(101, -5.0, 0.1));
        let s = (0.5f64).sqrt();
        assert_eq!(weierstrass_smooth(&f, s, s).unwrap().kind, FieldKind::Husimi);
        assert_eq!(weierstrass_smooth(&f, s, 2.0 * s).unwrap().kind, FieldKind::Smoothed);
    }

    #[test]
    fn smoothing_preserves_positivity() {
        let mut values = vec![0.0; 41 * 31];
        values[15 * 41 + 20] = 1.0;
        values[3 * 41 + 2] = 0.5;
        let f = PhaseSpaceField::new(FieldKind::Histogram, Axis::new(41, 0.0, 0.2), Axis::new(31, 0.0, 0.1), values)
            .unwrap();
        let s = weierstrass_smooth(&f, 0.5, 0.3).unwrap();
        assert!(s.min() >= -1e-12);
    }

    #[test]
    fn coherent_state_husimi_peak() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(0.5, 1.0).at(0.8, -0.5)).unwrap().to_schrodinger();
        let rho_a = partial_trace_internal(&rho);
        let rg = PositionGrid::wigner_window(&g, 8).unwrap();
        let q = husimi_direct(&rho_a, 0.5, &rg).unwrap();
        let (r0, p0) = q.argmax();
        assert!((p0 + 0.5).abs() < 1e-9);
        assert!((r0 - 0.8).abs() <= rg.dr());
        assert!(q.max() <= 1.0 / PLANCK * (1.0 + 1e-9));
        assert!((q.max() * PLANCK - 1.0).abs() < 1e-3, "{}", q.max() * PLANCK);
        assert!(q.min() >= -1e-12);
    }

    #[test]
    fn wigner_marginal_matches_populations() {
        let g = MomentumGrid::new(10, 8).unwrap();
        let rho = gaussian_mixed_state(&g, GaussianStateSpec::new(1.2, 0.9).at(0.5, 0.3)).unwrap().to_schrodinger();
        let rg = PositionGrid::wigner_window(&g, 4).unwrap();
        let w = wigner(&rho, Which::Total, &rg).unwrap();
        let (_, mom) = marginals(&w);
        let pops = momentum_populations(&rho, Which::Total);
        for (a, pop) in pops.iter().enumerate() {
            assert!((mom[2 * a] - pop / g.dp()).abs() < 1e-8);
        }
    }
}
