//! Finite pointed p-metric spaces.
//!
//! A [`PMetricSpace`] stores distances in their original units together with
//! the exponent `q` for which `d^q` satisfies the triangle inequality. Powers
//! `d^p` for any `p <= q` are computed on demand by callers, so one matrix
//! serves every admissible exponent.

use std::collections::HashSet;
use std::fmt;

use crate::error::{check_exponent, Error, Result};

/// Relative tolerance used for the q-triangle inequality.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// A single reason why a matrix fails to be a q-metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    NonSymmetric { i: usize, j: usize },
    NonzeroDiagonal { i: usize },
    NonPositive { i: usize, j: usize },
    /// `d(i,k)^q > d(i,j)^q + d(j,k)^q`.
    Triangle { i: usize, j: usize, k: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonSymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            Violation::NonzeroDiagonal { i } => write!(f, "d({i},{i}) != 0"),
            Violation::NonPositive { i, j } => write!(f, "d({i},{j}) <= 0"),
            Violation::Triangle { i, j, k } => {
                write!(f, "q-triangle fails for ({i},{j},{k})")
            }
        }
    }
}

/// Outcome of [`validate_p_metric`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Violating `(i, j, k)` triples of the q-triangle inequality.
    pub fn triangle_violations(&self) -> Vec<(usize, usize, usize)> {
        self.violations
            .iter()
            .filter_map(|v| match *v {
                Violation::Triangle { i, j, k } => Some((i, j, k)),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn summary(&self) -> String {
        let shown: Vec<String> = self.violations.iter().take(4).map(|v| v.to_string()).collect();
        let more = self.violations.len().saturating_sub(shown.len());
        if more > 0 {
            format!("{} (and {more} more)", shown.join("; "))
        } else {
            shown.join("; ")
        }
    }
}

fn check_square(dist: &[Vec<f64>]) -> Result<usize> {
    let m = dist.len();
    for (i, row) in dist.iter().enumerate() {
        if row.len() != m {
            return Err(Error::input(format!(
                "distance matrix is not square: row {i} has {} entries, expected {m}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::input(format!(
                "distance d({i},{j}) = {} is not a finite nonnegative number",
                row[j]
            )));
        }
    }
    Ok(m)
}

/// Checks symmetry, zero diagonal, positivity and the q-triangle inequality
/// `d(i,k)^q <= (d(i,j)^q + d(j,k)^q) (1 + tol)`.
pub fn validate_p_metric(dist: &[Vec<f64>], q: f64, tol: f64) -> Result<ValidationReport> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Exponent { p: q, q: 1.0 });
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::input("tolerance must be a finite nonnegative number"));
    }
    let m = check_square(dist)?;
    let mut violations = Vec::new();
    for i in 0..m {
        if dist[i][i] != 0.0 {
            violations.push(Violation::NonzeroDiagonal { i });
        }
        for j in (i + 1)..m {
            if dist[i][j] != dist[j][i] {
                violations.push(Violation::NonSymmetric { i, j });
            }
            if dist[i][j] <= 0.0 || dist[j][i] <= 0.0 {
                violations.push(Violation::NonPositive { i, j });
            }
        }
    }
    let pw: Vec<Vec<f64>> = dist
        .iter()
        .map(|row| row.iter().map(|d| d.powf(q)).collect())
        .collect();
    for i in 0..m {
        for k in (i + 1)..m {
            for j in 0..m {
                if j == i || j == k {
                    continue;
                }
                if pw[i][k] > (pw[i][j] + pw[j][k]) * (1.0 + tol) {
                    violations.push(Violation::Triangle { i, j, k });
                }
            }
        }
    }
    Ok(ValidationReport { violations })
}

/// Largest q-metric that is pointwise at most `dist`: all-pairs shortest
/// paths on `dist^q`, mapped back by the `1/q` power.
///
/// Entries whose shortest path is the direct edge are returned unchanged, so
/// the closure of a valid q-metric is the input itself.
pub fn p_metric_closure(dist: &[Vec<f64>], q: f64) -> Result<Vec<Vec<f64>>> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Exponent { p: q, q: 1.0 });
    }
    let m = check_square(dist)?;
    for i in 0..m {
        if dist[i][i] != 0.0 {
            return Err(Error::input(format!("d({i},{i}) must be 0")));
        }
        for j in (i + 1)..m {
            if dist[i][j] != dist[j][i] {
                return Err(Error::input(format!("matrix is not symmetric at ({i},{j})")));
            }
            if dist[i][j] <= 0.0 {
                return Err(Error::input(format!("d({i},{j}) must be positive")));
            }
        }
    }
    let mut pw: Vec<Vec<f64>> = dist
        .iter()
        .map(|row| row.iter().map(|d| d.powf(q)).collect())
        .collect();
    let mut changed = vec![vec![false; m]; m];
    // Updates must beat the direct edge by more than rounding noise.
    const MARGIN: f64 = 1e-12;
    for k in 0..m {
        for i in 0..m {
            if i == k {
                continue;
            }
            for j in 0..m {
                if j == i || j == k {
                    continue;
                }
                let via = pw[i][k] + pw[k][j];
                if via < pw[i][j] * (1.0 - MARGIN) {
                    pw[i][j] = via;
                    changed[i][j] = true;
                }
            }
        }
    }
    let mut out = dist.to_vec();
    for i in 0..m {
        for j in 0..m {
            if changed[i][j] || changed[j][i] {
                // Symmetrize explicitly; the two directions see the same paths.
                let v = pw[i][j].min(pw[j][i]);
                out[i][j] = v.powf(1.0 / q);
            }
        }
    }
    Ok(out)
}

/// A finite pointed q-metric space with labeled points.
#[derive(Clone, Debug, PartialEq)]
pub struct PMetricSpace {
    labels: Vec<String>,
    base: usize,
    q: f64,
    m: usize,
    dist: Vec<f64>,
}

impl PMetricSpace {
    /// Builds and validates a space. Fails with [`Error::InvalidMetric`] if
    /// the matrix is not a q-metric within [`METRIC_TOLERANCE`].
    pub fn new(labels: Vec<String>, base: usize, q: f64, dist: Vec<Vec<f64>>) -> Result<Self> {
        let m = dist.len();
        if m < 2 {
            return Err(Error::input("a p-metric space needs at least two points"));
        }
        if labels.len() != m {
            return Err(Error::input(format!(
                "{} labels given for a {m}-point distance matrix",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() || !seen.insert(l.as_str()) {
                return Err(Error::input(format!("point label {l:?} is empty or repeated")));
            }
        }
        if base >= m {
            return Err(Error::input(format!("base index {base} out of range")));
        }
        let report = validate_p_metric(&dist, q, METRIC_TOLERANCE)?;
        if !report.is_valid() {
            return Err(Error::InvalidMetric { q, report });
        }
        Ok(PMetricSpace {
            labels,
            base,
            q,
            m,
            dist: dist.into_iter().flatten().collect(),
        })
    }

    /// Space with labels `"0", "1", ...` and base point 0.
    pub fn from_matrix(q: f64, dist: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::new(labels, 0, q, dist)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.m + j]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.m).map(|r| r.to_vec()).collect()
    }

    /// Indices other than the base point, ascending.
    pub fn non_base(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.m).filter(move |&i| i != self.base)
    }

    /// Checks `0 < p <= q`.
    pub fn check_exponent(&self, p: f64) -> Result<()> {
        check_exponent(p, self.q)
    }

    /// Matrix of `d(i,j)^p`, row-major.
    pub(crate) fn powered(&self, p: f64) -> Vec<f64> {
        self.dist.iter().map(|d| d.powf(p)).collect()
    }

    /// Same points viewed as a p-metric space for a smaller exponent.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        self.check_exponent(p)?;
        let mut s = self.clone();
        s.q = p;
        Ok(s)
    }

    /// Same space with a different distinguished point.
    pub fn rebased(&self, base: usize) -> Result<Self> {
        if base >= self.m {
            return Err(Error::input(format!("base index {base} out of range")));
        }
        let mut s = self.clone();
        s.base = base;
        Ok(s)
    }

    /// Subspace on `keep` (sorted, deduplicated); must contain the base.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let keep = normalize_subset(keep, self.m)?;
        let base = keep
            .iter()
            .position(|&i| i == self.base)
            .ok_or_else(|| Error::input("restriction must keep the base point"))?;
        if keep.len() < 2 {
            return Err(Error::input("restriction must keep at least two points"));
        }
        let m = keep.len();
        let mut dist = Vec::with_capacity(m * m);
        for &i in &keep {
            for &j in &keep {
                dist.push(self.dist(i, j));
            }
        }
        Ok(PMetricSpace {
            labels: keep.iter().map(|&i| self.labels[i].clone()).collect(),
            base,
            q: self.q,
            m,
            dist,
        })
    }
}

/// Sorts and deduplicates an index set, rejecting out-of-range entries.
pub(crate) fn normalize_subset(keep: &[usize], m: usize) -> Result<Vec<usize>> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&i| i >= m) {
        return Err(Error::input(format!("index {bad} out of range for {m} points")));
    }
    Ok(keep)
}

/// Restriction of `space` to the points `keep` (which must contain the base).
pub fn restrict_subspace(space: &PMetricSpace, keep: &[usize]) -> Result<PMetricSpace> {
    space.restrict(keep)
}

/// A finitely supported element `sum a_x delta(x)`, stored densely over the
/// points of a space. The base point never carries a coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Molecule {
    coeffs: Vec<f64>,
}

impl Molecule {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::input(format!("coefficient {c} is not finite")));
        }
        Ok(Molecule { coeffs })
    }

    pub fn zeros(m: usize) -> Self {
        Molecule { coeffs: vec![0.0; m] }
    }

    pub fn from_pairs(m: usize, pairs: &[(usize, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; m];
        for &(i, a) in pairs {
            if i >= m {
                return Err(Error::input(format!("coefficient index {i} out of range")));
            }
            coeffs[i] += a;
        }
        Self::new(coeffs)
    }

    /// Builds a molecule from `label = value` pairs; unlisted points get 0.
    pub fn from_labeled(space: &PMetricSpace, pairs: &[(String, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; space.len()];
        for (label, a) in pairs {
            let i = space
                .index_of(label)
                .ok_or_else(|| Error::input(format!("unknown point label {label:?}")))?;
            if i == space.base() {
                return Err(Error::input(format!(
                    "the base point {label:?} cannot carry a coefficient"
                )));
            }
            coeffs[i] = *a;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coeffs[i]
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&i| self.coeffs[i] != 0.0).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn total(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Molecule { coeffs: self.coeffs.iter().map(|c| c * lambda).collect() }
    }

    pub fn sum(&self, other: &Molecule) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::input("molecules live on spaces of different size"));
        }
        Self::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect())
    }

    /// Checks that the molecule fits `space` and leaves the base empty.
    pub fn check_for(&self, space: &PMetricSpace) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::input(format!(
                "molecule has {} coefficients, space has {} points",
                self.len(),
                space.len()
            )));
        }
        if self.coeffs[space.base()] != 0.0 {
            return Err(Error::input("the base point cannot carry a coefficient"));
        }
        Ok(())
    }

    /// Coefficients at the sorted index set `keep`, re-indexed locally.
    pub fn restricted(&self, keep: &[usize]) -> Self {
        Molecule { coeffs: keep.iter().map(|&i| self.coeffs[i]).collect() }
    }

    /// Inverse of [`Molecule::restricted`]: places local coefficients back
    /// into an `m`-point molecule.
    pub fn lifted(&self, keep: &[usize], m: usize) -> Self {
        let mut coeffs = vec![0.0; m];
        for (local, &global) in keep.iter().enumerate() {
            coeffs[global] = self.coeffs[local];
        }
        Molecule { coeffs }
    }

    /// Image of the molecule under the isometry between the free spaces
    /// pointed at `old_base` and at `new_base`, induced by
    /// `delta(z) -> delta(z) - delta(old_base)`.
    pub fn rebased(&self, old_base: usize, new_base: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if old_base == new_base {
            return Molecule { coeffs };
        }
        let total = self.total();
        coeffs[old_base] = -total;
        coeffs[new_base] = 0.0;
        Molecule { coeffs }
    }
}
