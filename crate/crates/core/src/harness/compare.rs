use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::io::{read_field, read_table};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub field: f64,
    pub report: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { field: 1e-6, report: 1e-6 }
    }
}

/// Largest absolute difference of one field file or one CSV column.
#[derive(Clone, Debug, PartialEq)]
pub struct Diff {
    pub file: String,
    /// Column name for CSV files, `values` for fields.
    pub item: String,
    pub max_abs: f64,
    pub tolerance: f64,
}

impl Diff {
    pub fn passed(&self) -> bool {
        self.max_abs <= self.tolerance
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiffReport {
    pub diffs: Vec<Diff>,
}

impl DiffReport {
    pub fn passed(&self) -> bool {
        self.diffs.iter().all(Diff::passed)
    }

    pub fn max_over(&self, mut select: impl FnMut(&Diff) -> bool) -> f64 {
        self.diffs.iter().filter(|d| select(d)).map(|d| d.max_abs).fold(0.0, f64::max)
    }
}

fn listing(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name.ends_with(".field") || name.ends_with(".csv") {
            names.insert(name);
        }
    }
    Ok(names)
}

fn incompatible(msg: String) -> Error {
    Error::IncompatibleBundles(msg)
}

/// Which outputs of a bundle take part in a comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scope {
    #[default]
    All,
    /// Skip test-particle histograms and their gain rows; their grids
    /// follow the sampled particles and change with the seed.
    Quantum,
}

fn semiclassical(name: &str) -> bool {
    name.starts_with("histogram")
}

/// Per-field and per-column maximum absolute differences of two bundles
/// written by [`super::write_bundle`].
pub fn compare(a: &Path, b: &Path, tol: Tolerances) -> Result<DiffReport> {
    compare_scoped(a, b, tol, Scope::All)
}

pub fn compare_scoped(a: &Path, b: &Path, tol: Tolerances, scope: Scope) -> Result<DiffReport> {
    let keep = |name: &str| scope == Scope::All || !semiclassical(name);
    let (mut na, mut nb) = (listing(a)?, listing(b)?);
    na.retain(|n| keep(n));
    nb.retain(|n| keep(n));
    if na != nb {
        let only: Vec<&String> = na.symmetric_difference(&nb).collect();
        return Err(incompatible(format!("file sets differ: {only:?}")));
    }
    let mut diffs = Vec::new();
    for name in &na {
        if name.ends_with(".field") {
            let (fa, fb) = (read_field(&a.join(name))?, read_field(&b.join(name))?);
            if !fa.field.same_grid(&fb.field) {
                return Err(incompatible(format!("{name}: grids differ")));
            }
            let max_abs = fa
                .field
                .values()
                .iter()
                .zip(fb.field.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            diffs.push(Diff { file: name.clone(), item: "values".into(), max_abs, tolerance: tol.field });
        } else {
            let (mut ta, mut tb) = (read_table(&a.join(name))?, read_table(&b.join(name))?);
            ta.rows.retain(|r| keep(&r[0]));
            tb.rows.retain(|r| keep(&r[0]));
            if ta.header != tb.header || ta.rows.len() != tb.rows.len() {
                return Err(incompatible(format!("{name}: table shapes differ")));
            }
            for (c, col) in ta.header.iter().enumerate() {
                let mut max_abs: f64 = 0.0;
                for (ra, rb) in ta.rows.iter().zip(&tb.rows) {
                    match (ra[c].parse::<f64>(), rb[c].parse::<f64>()) {
                        (Ok(x), Ok(y)) => max_abs = max_abs.max((x - y).abs()),
                        _ if ra[c] == rb[c] => {}
                        _ => return Err(incompatible(format!("{name}: `{}` vs `{}` in column {col}", ra[c], rb[c]))),
                    }
                }
                diffs.push(Diff { file: name.clone(), item: col.clone(), max_abs, tolerance: tol.report });
            }
        }
    }
    Ok(DiffReport { diffs })
}
