//! Small dense helpers over `nalgebra` complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Disjoint-set forest over `n` basis indices.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Components as sorted index lists, ordered by smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

/// Connected components of the non-zero pattern of a square matrix.
pub(crate) fn sparsity_components(m: &DMatrix<Complex64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut uf = UnionFind::new(n);
    for c in 0..n {
        for r in 0..n {
            if r != c && m[(r, c)] != Complex64::new(0.0, 0.0) {
                uf.union(r, c);
            }
        }
    }
    uf.components()
}

pub(crate) fn submatrix(m: &DMatrix<Complex64>, idx: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Eigenvalues of a Hermitian matrix, ascending. Decouples the matrix into
/// the connected blocks of its sparsity pattern first.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows());
    for comp in sparsity_components(m) {
        if comp.len() == 1 {
            out.push(m[(comp[0], comp[0])].re);
        } else {
            let sub = submatrix(m, &comp);
            out.extend(sub.symmetric_eigenvalues().iter().copied());
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// max |m − m†| over all entries.
pub fn hermiticity_residue(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let s = m.as_slice();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in c..n {
            worst = worst.max((s[c * n + r] - s[r * n + c].conj()).norm_sqr());
        }
    }
    worst.sqrt()
}

/// max |a − b| over all entries.
pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
