//! Exact propagation of the two-level × momentum density matrix.
//!
//! The state lives in the interaction picture, where free kinetic phases are
//! absorbed into the coupling. A plane-wave pulse L couples |p, g⟩ to
//! |p + ħk_L, e⟩ with matrix element −(Ω_L/2)·e^{−iΦ_L}·e^{−iδ_L^{p+}t}, and
//! the density matrix obeys dρ/dt = −i[H_I(t), ρ]/ħ.
//!
//! Basis ordering: index `a` is |p_a, g⟩ and `N + a` is |p_a, e⟩, with N the
//! momentum lattice size.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{substeps, LaserPulse, MomentumGrid, PulseSequence, HBAR, MASS};
use crate::linalg::{self, UnionFind};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance on |Tr ρ − 1| enforced after every step.
pub const TRACE_TOLERANCE: f64 = 1e-10;
/// Tolerance on max |ρ − ρ†| enforced after every step.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
/// Largest population allowed on the outermost lattice points of a block.
pub const EDGE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Picture {
    Interaction,
    Schrodinger,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Ground,
    Excited,
}

/// Which internal block(s) an observable is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Ground,
    Excited,
    Total,
}

/// Hermitian, unit-trace density matrix over |p, g/e⟩.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    grid: MomentumGrid,
    data: DMatrix<Complex64>,
    picture: Picture,
    time: f64,
}

impl DensityMatrix {
    pub fn from_matrix(
        grid: MomentumGrid,
        data: DMatrix<Complex64>,
        picture: Picture,
        time: f64,
    ) -> Result<Self> {
        let n = 2 * grid.len();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "density matrix must be {n}x{n}, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { grid, data, picture, time })
    }

    /// Pure state Σ c_k |p_k, level_k⟩, normalized.
    pub fn pure(grid: MomentumGrid, amplitudes: &[(Level, usize, Complex64)]) -> Result<Self> {
        let mut psi = vec![ZERO; 2 * grid.len()];
        for &(level, idx, c) in amplitudes {
            if idx >= grid.len() {
                return Err(Error::InvalidParameter(format!("momentum index {idx} off the lattice")));
            }
            psi[basis_index(&grid, level, idx)] += c;
        }
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("pure state has zero norm".into()));
        }
        let n = psi.len();
        let data = DMatrix::from_fn(n, n, |r, c| psi[r] * psi[c].conj() / norm);
        Ok(Self { grid, data, picture: Picture::Interaction, time: 0.0 })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn index(&self, level: Level, p_idx: usize) -> usize {
        basis_index(&self.grid, level, p_idx)
    }

    /// ⟨p_a, i| ρ |p_b, j⟩.
    pub fn get(&self, li: Level, a: usize, lj: Level, b: usize) -> Complex64 {
        self.data[(self.index(li, a), self.index(lj, b))]
    }

    pub fn block(&self, li: Level, lj: Level) -> DMatrix<Complex64> {
        let n = self.grid.len();
        let (r0, c0) = (level_offset(li, n), level_offset(lj, n));
        self.data.view((r0, c0), (n, n)).into_owned()
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn hermiticity_residue(&self) -> f64 {
        linalg::hermiticity_residue(&self.data)
    }

    /// Tr ρ², assuming Hermiticity.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Sorted eigenvalues (ascending).
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.data)
    }

    /// Populations on the outermost lattice points, [ground, excited].
    pub fn edge_populations(&self) -> [f64; 2] {
        let n = self.grid.len();
        let edge = |level| {
            let lo = self.index(level, 0);
            let hi = self.index(level, n - 1);
            self.data[(lo, lo)].re.abs() + self.data[(hi, hi)].re.abs()
        };
        [edge(Level::Ground), edge(Level::Excited)]
    }

    pub fn check_edges(&self) -> Result<()> {
        let [g, e] = self.edge_populations();
        if g >= EDGE_TOLERANCE {
            return Err(Error::Boundary { block: "ground", population: g });
        }
        if e >= EDGE_TOLERANCE {
            return Err(Error::Boundary { block: "excited", population: e });
        }
        Ok(())
    }

    /// Schrödinger-picture copy, ρ^{p'p}_{ij} = e^{−i(p'²−p²)t/2mħ}·ρ^I. The
    /// internal energies are a reference phase and taken as zero. A state
    /// already in the Schrödinger picture is returned unchanged.
    pub fn to_schrodinger(&self) -> Self {
        match self.picture {
            Picture::Schrodinger => self.clone(),
            Picture::Interaction => self.kinetic_rotated(-1.0, Picture::Schrodinger),
        }
    }

    /// Inverse of [`to_schrodinger`](Self::to_schrodinger).
    pub fn to_interaction(&self) -> Self {
        match self.picture {
            Picture::Interaction => self.clone(),
            Picture::Schrodinger => self.kinetic_rotated(1.0, Picture::Interaction),
        }
    }

    fn kinetic_rotated(&self, sign: f64, picture: Picture) -> Self {
        let n = self.grid.len();
        let t = self.time;
        let energy: Vec<f64> = (0..2 * n)
            .map(|i| {
                let p = self.grid.point(i % n);
                p * p / (2.0 * MASS * HBAR)
            })
            .collect();
        let data = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            self.data[(r, c)] * Complex64::cis(sign * (energy[r] - energy[c]) * t)
        });
        Self { grid: self.grid, data, picture, time: self.time }
    }
}

fn level_offset(level: Level, n: usize) -> usize {
    match level {
        Level::Ground => 0,
        Level::Excited => n,
    }
}

fn basis_index(grid: &MomentumGrid, level: Level, p_idx: usize) -> usize {
    level_offset(level, grid.len()) + p_idx
}

/// Reduced density matrix of the external motion, ρ_A = Tr_internal ρ.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensityMatrix {
    grid: MomentumGrid,
    data: DMatrix<Complex64>,
    picture: Picture,
    time: f64,
}

impl ReducedDensityMatrix {
    pub fn from_matrix(
        grid: MomentumGrid,
        data: DMatrix<Complex64>,
        picture: Picture,
        time: f64,
    ) -> Result<Self> {
        if data.nrows() != grid.len() || data.ncols() != grid.len() {
            return Err(Error::InvalidParameter("reduced matrix does not match the lattice".into()));
        }
        Ok(Self { grid, data, picture, time })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.data.diagonal().iter().map(|c| c.re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.data)
    }
}

/// ρ_A^{p'p} = ρ_gg^{p'p} + ρ_ee^{p'p}.
pub fn partial_trace_internal(rho: &DensityMatrix) -> ReducedDensityMatrix {
    let data = rho.block(Level::Ground, Level::Ground) + rho.block(Level::Excited, Level::Excited);
    ReducedDensityMatrix { grid: rho.grid, data, picture: rho.picture, time: rho.time }
}

/// Diagonal of the requested block(s).
pub fn momentum_populations(rho: &DensityMatrix, which: Which) -> Vec<f64> {
    let n = rho.grid.len();
    (0..n)
        .map(|a| {
            let g = rho.data[(a, a)].re;
            let e = rho.data[(n + a, n + a)].re;
            match which {
                Which::Ground => g,
                Which::Excited => e,
                Which::Total => g + e,
            }
        })
        .collect()
}

/// Thermal state: all atoms in |g⟩ with populations ∝ exp(−p²/2σ_p²).
pub fn thermal_diagonal_state(grid: &MomentumGrid, sigma_p: f64) -> Result<DensityMatrix> {
    if !(sigma_p > 0.0) || !sigma_p.is_finite() {
        return Err(Error::InvalidParameter(format!("σ_p must be positive, got {sigma_p}")));
    }
    let n = grid.len();
    let weights: Vec<f64> = (0..n)
        .map(|a| (-grid.point(a).powi(2) / (2.0 * sigma_p * sigma_p)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut data = DMatrix::from_element(2 * n, 2 * n, ZERO);
    for (a, w) in weights.iter().enumerate() {
        data[(a, a)] = Complex64::new(w / total, 0.0);
    }
    let rho = DensityMatrix { grid: *grid, data, picture: Picture::Interaction, time: 0.0 };
    rho.check_edges()?;
    Ok(rho)
}

/// Gaussian state with position width σ_r (None for full delocalization),
/// momentum width σ_p and mean (r₀, p₀).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianStateSpec {
    pub sigma_r: Option<f64>,
    pub sigma_p: f64,
    #[serde(default)]
    pub mean_r: f64,
    #[serde(default)]
    pub mean_p: f64,
}

impl GaussianStateSpec {
    pub fn new(sigma_r: f64, sigma_p: f64) -> Self {
        Self { sigma_r: Some(sigma_r), sigma_p, mean_r: 0.0, mean_p: 0.0 }
    }

    pub fn delocalized(sigma_p: f64) -> Self {
        Self { sigma_r: None, sigma_p, mean_r: 0.0, mean_p: 0.0 }
    }

    pub fn at(mut self, mean_r: f64, mean_p: f64) -> Self {
        self.mean_r = mean_r;
        self.mean_p = mean_p;
        self
    }
}

/// Ground-state Gaussian whose Wigner function is
/// (2πσ_rσ_p)⁻¹·exp(−(r−r₀)²/2σ_r² − (p−p₀)²/2σ_p²).
pub fn gaussian_mixed_state(grid: &MomentumGrid, spec: GaussianStateSpec) -> Result<DensityMatrix> {
    let sp = spec.sigma_p;
    if !(sp > 0.0) || !sp.is_finite() {
        return Err(Error::InvalidParameter(format!("σ_p must be positive, got {sp}")));
    }
    let sr = match spec.sigma_r {
        None => 0.0,
        Some(sr) => {
            if !(sr > 0.0) || !sr.is_finite() || sr * sp < HBAR / 2.0 * (1.0 - 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "σ_r·σ_p = {} is below ħ/2",
                    sr * sp
                )));
            }
            sr
        }
    };
    let n = grid.len();
    let mut data = DMatrix::from_element(2 * n, 2 * n, ZERO);
    for b in 0..n {
        for a in 0..n {
            let (pa, pb) = (grid.point(a), grid.point(b));
            let mean = 0.5 * (pa + pb) - spec.mean_p;
            let diff = pa - pb;
            let mag = (-mean * mean / (2.0 * sp * sp) - sr * sr * diff * diff / (2.0 * HBAR * HBAR)).exp();
            if spec.sigma_r.is_none() && a != b {
                continue;
            }
            data[(a, b)] = Complex64::from_polar(mag, -diff * spec.mean_r / HBAR);
        }
    }
    let tr = data.trace().re;
    data /= Complex64::new(tr, 0.0);
    let rho = DensityMatrix { grid: *grid, data, picture: Picture::Interaction, time: 0.0 };
    rho.check_edges()?;
    Ok(rho)
}

/// One coupling |q, g⟩ → |q + ħk_L, e⟩ in local block indices.
#[derive(Clone, Copy, Debug)]
struct Coupling {
    ground: usize,
    excited: usize,
    /// −(Ω/2)·e^{−iΦ}
    strength: Complex64,
    /// δ^{q+}
    rate: f64,
}

fn pulse_couplings(grid: &MomentumGrid, pulse: &LaserPulse) -> Vec<(usize, usize, Complex64, f64)> {
    let n = grid.len();
    let strength = Complex64::from_polar(-0.5 * pulse.rabi, -pulse.phase);
    (0..n)
        .filter_map(|a| {
            grid.shift_index(a, pulse.direction.sign()).map(|b| {
                (a, n + b, strength, pulse.family_detuning(grid.point(a), true))
            })
        })
        .collect()
}

/// out = −i(H x − x H) for the sparse coupling Hamiltonian with amplitudes
/// `amps` (H[e, g] = amp, H[g, e] = conj(amp)). `x` must be Hermitian, so
/// that the result is Y + Y† with Y = −iHx.
fn commutator(x: &DMatrix<Complex64>, couplings: &[Coupling], amps: &[Complex64], out: &mut DMatrix<Complex64>) {
    let n = x.nrows();
    let minus_i = Complex64::new(0.0, -1.0);
    let scaled: Vec<(usize, usize, Complex64, Complex64)> = couplings
        .iter()
        .zip(amps)
        .map(|(cp, &a)| (cp.excited, cp.ground, minus_i * a, minus_i * a.conj()))
        .collect();
    let xs = x.as_slice();
    let os = out.as_mut_slice();
    os.fill(ZERO);
    for (xc, oc) in xs.chunks_exact(n).zip(os.chunks_exact_mut(n)) {
        for &(e, g, a, ac) in &scaled {
            oc[e] += a * xc[g];
            oc[g] += ac * xc[e];
        }
    }
    for c in 0..n {
        for r in c..n {
            let v = os[c * n + r] + os[r * n + c].conj();
            os[c * n + r] = v;
            os[r * n + c] = v.conj();
        }
    }
}

fn amplitudes(couplings: &[Coupling], t: f64, out: &mut Vec<Complex64>) {
    out.clear();
    out.extend(couplings.iter().map(|c| c.strength * Complex64::cis(-c.rate * t)));
}

/// dρ^I/dt at time `t` from every pulse active at `t`. Photon-shifted
/// indices that leave the lattice contribute nothing.
pub fn coupling_rhs(rho: &DensityMatrix, t: f64, pulses: &PulseSequence) -> Result<DMatrix<Complex64>> {
    if rho.picture != Picture::Interaction {
        return Err(Error::WrongPicture { expected: Picture::Interaction, found: rho.picture });
    }
    let active: Vec<&LaserPulse> = pulses.active_at(t).collect();
    Ok(rhs_for(rho, t, &active))
}

fn rhs_for(rho: &DensityMatrix, t: f64, active: &[&LaserPulse]) -> DMatrix<Complex64> {
    let couplings: Vec<Coupling> = active
        .iter()
        .flat_map(|p| pulse_couplings(&rho.grid, p))
        .map(|(ground, excited, strength, rate)| Coupling { ground, excited, strength, rate })
        .collect();
    let mut amps = Vec::new();
    amplitudes(&couplings, t, &mut amps);
    let mut out = DMatrix::from_element(rho.dim(), rho.dim(), ZERO);
    commutator(&rho.data, &couplings, &amps, &mut out);
    out
}

/// A set of basis states closed under every pulse of the run, integrated
/// as an independent dense sub-problem.
struct Block {
    indices: Vec<usize>,
    state: DMatrix<Complex64>,
    /// Per pulse (same order as the sequence), couplings in local indices.
    couplings: Vec<Vec<Coupling>>,
    work: RkWork,
}

struct RkWork {
    k: [DMatrix<Complex64>; 4],
    tmp: DMatrix<Complex64>,
    couplings: Vec<Coupling>,
    amps: Vec<Complex64>,
}

impl RkWork {
    fn new(n: usize) -> Self {
        let z = || DMatrix::from_element(n, n, ZERO);
        Self { k: [z(), z(), z(), z()], tmp: z(), couplings: Vec::new(), amps: Vec::new() }
    }
}

impl Block {
    fn step(&mut self, active: &[usize], t: f64, h: f64) {
        let w = &mut self.work;
        w.couplings.clear();
        for &p in active {
            w.couplings.extend_from_slice(&self.couplings[p]);
        }
        if w.couplings.is_empty() {
            return;
        }
        let y = &mut self.state;
        let [k1, k2, k3, k4] = &mut w.k;

        amplitudes(&w.couplings, t, &mut w.amps);
        commutator(y, &w.couplings, &w.amps, k1);

        amplitudes(&w.couplings, t + 0.5 * h, &mut w.amps);
        offset(&mut w.tmp, y, k1, 0.5 * h);
        commutator(&w.tmp, &w.couplings, &w.amps, k2);
        offset(&mut w.tmp, y, k2, 0.5 * h);
        commutator(&w.tmp, &w.couplings, &w.amps, k3);

        amplitudes(&w.couplings, t + h, &mut w.amps);
        offset(&mut w.tmp, y, k3, h);
        commutator(&w.tmp, &w.couplings, &w.amps, k4);

        let sixth = h / 6.0;
        let ks = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
        for (i, v) in y.as_mut_slice().iter_mut().enumerate() {
            *v += (ks.0[i] + 2.0 * ks.1[i] + 2.0 * ks.2[i] + ks.3[i]) * sixth;
        }
    }
}

/// out = y + h·k
fn offset(out: &mut DMatrix<Complex64>, y: &DMatrix<Complex64>, k: &DMatrix<Complex64>, h: f64) {
    for ((o, a), b) in out.as_mut_slice().iter_mut().zip(y.as_slice()).zip(k.as_slice()) {
        *o = a + b * h;
    }
}

/// Fixed-step RK4 integration of [`coupling_rhs`], returning deep copies of
/// the state at each of `sample_times`.
///
/// Pulse edges and sample times are step boundaries: each interval between
/// consecutive breakpoints is split into equal steps no longer than `dt`.
/// Basis states that no pulse connects are integrated as separate blocks
/// when the initial state has no coherence between them.
pub fn propagate(
    rho: &DensityMatrix,
    pulses: &PulseSequence,
    dt: f64,
    sample_times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    if rho.picture != Picture::Interaction {
        return Err(Error::WrongPicture { expected: Picture::Interaction, found: rho.picture });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let t0 = rho.time;
    for w in sample_times.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(Error::InvalidParameter("sample times must be ascending".into()));
        }
    }
    if let Some(&first) = sample_times.first() {
        if !(first >= t0) {
            return Err(Error::InvalidParameter(format!("sample time {first} precedes the state time {t0}")));
        }
    }
    let Some(&t_end) = sample_times.last() else {
        return Ok(Vec::new());
    };

    let grid = rho.grid;
    let dim = rho.dim();
    let per_pulse: Vec<Vec<(usize, usize, Complex64, f64)>> =
        pulses.pulses().iter().map(|p| pulse_couplings(&grid, p)).collect();

    let mut uf = UnionFind::new(dim);
    for list in &per_pulse {
        for &(g, e, _, _) in list {
            uf.union(g, e);
        }
    }
    let mut comps = uf.components();
    let mut owner = vec![0usize; dim];
    for (ci, comp) in comps.iter().enumerate() {
        for &i in comp {
            owner[i] = ci;
        }
    }
    let decoupled = (0..dim).all(|c| (0..dim).all(|r| owner[r] == owner[c] || rho.data[(r, c)] == ZERO));
    if !decoupled {
        comps = vec![(0..dim).collect()];
        owner.fill(0);
    }

    let mut local = vec![0usize; dim];
    let mut blocks: Vec<Block> = comps
        .into_iter()
        .filter(|comp| comp.len() > 1)
        .map(|comp| {
            for (li, &gi) in comp.iter().enumerate() {
                local[gi] = li;
            }
            let couplings = per_pulse
                .iter()
                .map(|list| {
                    list.iter()
                        .filter(|(g, _, _, _)| comp.binary_search(g).is_ok())
                        .map(|&(g, e, strength, rate)| Coupling {
                            ground: local[g],
                            excited: local[e],
                            strength,
                            rate,
                        })
                        .collect()
                })
                .collect();
            let state = linalg::submatrix(&rho.data, &comp);
            let work = RkWork::new(comp.len());
            Block { indices: comp, state, couplings, work }
        })
        .collect();

    // Basis states outside every block never change, so their share of the
    // trace is fixed.
    let blocked_trace: f64 = blocks.iter().map(|b| b.state.trace().re).sum();
    let frozen_trace = rho.data.trace().re - blocked_trace;

    let breakpoints = pulses.breakpoints(t0, t_end, sample_times);
    let mut full = rho.data.clone();
    let mut snapshots = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let snapshot = |full: &mut DMatrix<Complex64>, blocks: &[Block], t: f64| -> Result<DensityMatrix> {
        for b in blocks {
            for (lc, &gc) in b.indices.iter().enumerate() {
                for (lr, &gr) in b.indices.iter().enumerate() {
                    full[(gr, gc)] = b.state[(lr, lc)];
                }
            }
        }
        let snap = DensityMatrix { grid, data: full.clone(), picture: Picture::Interaction, time: t };
        snap.check_edges()?;
        Ok(snap)
    };

    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        snapshots.push(snapshot(&mut full, &blocks, sample_times[next_sample])?);
        next_sample += 1;
    }
    for seg in breakpoints.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let active: Vec<usize> = pulses
            .pulses()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.covers(a, b))
            .map(|(i, _)| i)
            .collect();
        if !active.is_empty() {
            let (n_steps, h) = substeps(a, b, dt);
            for step in 0..n_steps {
                let t = a + step as f64 * h;
                for blk in blocks.iter_mut() {
                    blk.step(&active, t, h);
                }
                check_invariants(&blocks, frozen_trace, t + h)?;
            }
        }
        while next_sample < sample_times.len() && sample_times[next_sample] <= b {
            snapshots.push(snapshot(&mut full, &blocks, sample_times[next_sample])?);
            next_sample += 1;
        }
    }
    debug_assert_eq!(snapshots.len(), sample_times.len());
    Ok(snapshots)
}

fn check_invariants(blocks: &[Block], frozen_trace: f64, t: f64) -> Result<()> {
    let mut herm = 0.0f64;
    let mut trace = frozen_trace;
    let mut finite = true;
    for b in blocks {
        herm = herm.max(linalg::hermiticity_residue(&b.state));
        trace += b.state.trace().re;
        finite &= b.state.iter().all(|c| c.re.is_finite() && c.im.is_finite());
    }
    if !finite {
        return Err(Error::Diverged { invariant: "non-finite matrix element".into(), time: t });
    }
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::Diverged { invariant: format!("trace {trace:.15}"), time: t });
    }
    if herm > HERMITICITY_TOLERANCE {
        return Err(Error::Diverged { invariant: format!("hermiticity residue {herm:.3e}"), time: t });
    }
    Ok(())
}
