//! Kernel functions, Gram matrices, centering in feature space and
//! Frobenius algebra.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result, Task};

/// Relative tolerance on `|K_ij − K_ji|`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// PSD acceptance: `λ_min ≥ −PSD_TOL · max|λ|`.
pub const PSD_TOL: f64 = 1e-8;

/// `m` points with `d` real features and one real label each.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: DMatrix<f64>,
    labels: DVector<f64>,
}

impl Sample {
    pub fn new(points: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        let m = points.nrows();
        if m < 2 {
            return Err(Error::invalid(format!("sample needs at least 2 points, got {m}")));
        }
        if labels.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: labels.len() });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % m, pos / m);
            return Err(Error::invalid(format!("non-finite feature at row {i}, column {j}")));
        }
        if let Some(i) = labels.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite label at row {i}")));
        }
        Ok(Sample { points, labels })
    }

    /// Builds a sample from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[f64]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::invalid(format!("row {bad} has {} features, expected {d}", rows[bad].len())));
        }
        let points = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Sample::new(points, DVector::from_column_slice(labels))
    }

    /// Checks the label constraint of `task` (±1 for classification).
    pub fn check_task(&self, task: Task) -> Result<()> {
        if task == Task::Classification {
            if let Some(i) = self.labels.iter().position(|&y| y != 1.0 && y != -1.0) {
                return Err(Error::invalid(format!(
                    "classification label {} at row {i} is not in {{-1, +1}}",
                    self.labels[i]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }

    /// Sub-sample with the given row indices, in order.
    pub fn select(&self, idx: &[usize]) -> Sample {
        let points = self.points.select_rows(idx);
        let labels = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.labels[i]));
        Sample { points, labels }
    }

    pub(crate) fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.points, self.labels)
    }

    pub(crate) fn from_parts_unchecked(points: DMatrix<f64>, labels: DVector<f64>) -> Self {
        Sample { points, labels }
    }
}

/// A kernel function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(−γ‖x − x′‖²)`
    Gaussian { gamma: f64 },
    /// `x·x′ + offset`
    Linear { offset: f64 },
    /// `x_k · x′_k` for the feature column `k`
    RankOne { feature_index: usize },
}

impl KernelSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::param(format!("gaussian gamma must be > 0, got {gamma}")))
            }
            KernelSpec::Linear { offset } if !(offset >= 0.0 && offset.is_finite()) => {
                Err(Error::param(format!("linear offset must be >= 0, got {offset}")))
            }
            KernelSpec::RankOne { feature_index } if feature_index >= dim => Err(Error::param(format!(
                "rank-one feature index {feature_index} out of range for {dim} features"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Linear { offset } => x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + offset,
            KernelSpec::RankOne { feature_index } => x[feature_index] * z[feature_index],
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            KernelSpec::Gaussian { gamma } => format!("gaussian(gamma={gamma})"),
            KernelSpec::Linear { offset } => format!("linear(offset={offset})"),
            KernelSpec::RankOne { feature_index } => format!("rank_one(feature={feature_index})"),
        }
    }
}

/// Symmetric PSD matrix with provenance flags.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    centered: bool,
    trace_one: bool,
}

impl GramMatrix {
    /// Validates symmetry and positive semi-definiteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let g = Self::symmetric(entries)?;
        let (lo, hi) = linalg::min_max_eigenvalue(&g.entries);
        let tolerance = PSD_TOL * lo.abs().max(hi.abs());
        if lo < -tolerance {
            return Err(Error::NotPsd { min_eigenvalue: lo, tolerance });
        }
        Ok(g)
    }

    /// Validates symmetry only. For matrices that are PSD by construction
    /// (Gram matrices of kernel functions, products of labels).
    pub fn symmetric(mut entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid(format!(
                "gram matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gram matrix has non-finite entries"));
        }
        let asym = linalg::asymmetry(&entries);
        if asym > SYMMETRY_TOL {
            return Err(Error::invalid(format!("gram matrix is not symmetric (relative asymmetry {asym:e})")));
        }
        let n = entries.nrows();
        for j in 0..n {
            for i in 0..j {
                let v = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Ok(GramMatrix { entries, centered: false, trace_one: false })
    }

    pub(crate) fn from_parts(entries: DMatrix<f64>, centered: bool, trace_one: bool) -> Self {
        GramMatrix { entries, centered, trace_one }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn is_trace_one(&self) -> bool {
        self.trace_one
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_product_unchecked(self, self).sqrt()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_max_eigenvalue(&self.entries).0
    }

    /// `c·K`; flags are kept except trace-one (unless `c == 1`).
    pub fn scaled(&self, c: f64) -> GramMatrix {
        GramMatrix {
            entries: &self.entries * c,
            centered: self.centered,
            trace_one: self.trace_one && c == 1.0,
        }
    }

    /// Principal submatrix on `idx` (rows and columns). Flags are dropped:
    /// a submatrix of a centered matrix is not centered.
    pub fn submatrix(&self, idx: &[usize]) -> GramMatrix {
        let entries = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        GramMatrix { entries, centered: false, trace_one: false }
    }

    /// Rectangular block `rows × cols`, e.g. test-by-train kernel values.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.entries[(rows[i], cols[j])])
    }
}

fn rows_of(points: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..points.nrows())
        .map(|i| points.row(i).iter().copied().collect())
        .collect()
}

/// Gram matrix of `spec` over the sample points.
///
/// Rows are computed in parallel; every entry has a fixed summation order,
/// so the result does not depend on the thread count.
pub fn gram(spec: &KernelSpec, sample: &Sample) -> Result<GramMatrix> {
    gram_points(spec, sample.points())
}

pub fn gram_points(spec: &KernelSpec, points: &DMatrix<f64>) -> Result<GramMatrix> {
    spec.validate(points.ncols())?;
    let rows = rows_of(points);
    let m = rows.len();
    let values: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| rows.iter().map(|z| spec.eval(&rows[i], z)).collect())
        .collect();
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite kernel value for {}", spec.describe())));
    }
    let entries = DMatrix::from_fn(m, m, |i, j| values[i][j]);
    Ok(GramMatrix::from_parts(entries, false, false))
}

/// Kernel values between `test` rows and `train` rows (`test × train`).
pub fn cross_gram(spec: &KernelSpec, test: &DMatrix<f64>, train: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spec.validate(train.ncols())?;
    if test.ncols() != train.ncols() {
        return Err(Error::DimensionMismatch { expected: train.ncols(), found: test.ncols() });
    }
    let tr = rows_of(train);
    let te = rows_of(test);
    let out = DMatrix::from_fn(te.len(), tr.len(), |i, j| spec.eval(&te[i], &tr[j]));
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite kernel value for {}", spec.describe())));
    }
    Ok(out)
}

/// Centers `K` in feature space:
/// `[K_c]_ij = K_ij − mean_i' K_i'j − mean_j' K_ij' + mean K`.
pub fn center(k: &GramMatrix) -> GramMatrix {
    if k.centered {
        return k.clone();
    }
    let m = k.dim();
    let mf = m as f64;
    let e = &k.entries;
    let row_means: Vec<f64> = (0..m).map(|i| e.row(i).sum() / mf).collect();
    let grand = row_means.iter().sum::<f64>() / mf;
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..=j {
            let v = e[(i, j)] - row_means[i] - row_means[j] + grand;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    GramMatrix::from_parts(out, true, k.trace_one)
}

/// `⟨A, B⟩_F = Tr[AᵀB]`.
pub fn frobenius_product(a: &GramMatrix, b: &GramMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(frobenius_product_unchecked(a, b))
}

pub(crate) fn frobenius_product_unchecked(a: &GramMatrix, b: &GramMatrix) -> f64 {
    linalg::frobenius(&a.entries, &b.entries)
}

/// Rescales `K` to unit trace.
pub fn trace_normalize(k: &GramMatrix) -> Result<GramMatrix> {
    let tr = k.trace();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::degenerate(format!("trace {tr} is not positive")));
    }
    if k.trace_one {
        return Ok(k.clone());
    }
    let mut out = k.scaled(1.0 / tr);
    out.trace_one = true;
    Ok(out)
}

/// Rescales `K` to unit Frobenius norm.
pub fn frobenius_normalize(k: &GramMatrix) -> Result<GramMatrix> {
    let n = k.frobenius_norm();
    if !(n > 0.0) {
        return Err(Error::degenerate("zero Frobenius norm"));
    }
    let mut out = k.scaled(1.0 / n);
    out.trace_one = k.trace_one && n == 1.0;
    Ok(out)
}

/// Ordered collection of `p ≥ 1` base Gram matrices over one sample.
///
/// Construction rejects kernels whose centered matrix vanishes; the
/// centered versions are cached.
#[derive(Debug, Clone)]
pub struct BaseKernelBank {
    kernels: Vec<GramMatrix>,
    centered: Vec<GramMatrix>,
    names: Vec<String>,
}

/// Relative size below which a centered kernel counts as zero.
const DEGENERATE_TOL: f64 = 1e-10;

impl BaseKernelBank {
    pub fn new(kernels: Vec<GramMatrix>) -> Result<Self> {
        let names = (0..kernels.len()).map(|k| format!("K{k}")).collect();
        Self::with_names(kernels, names)
    }

    pub fn with_names(kernels: Vec<GramMatrix>, names: Vec<String>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::invalid("kernel bank needs at least one base kernel"));
        }
        if names.len() != kernels.len() {
            return Err(Error::DimensionMismatch { expected: kernels.len(), found: names.len() });
        }
        let m = kernels[0].dim();
        if let Some(bad) = kernels.iter().find(|k| k.dim() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: bad.dim() });
        }
        let centered: Vec<GramMatrix> = kernels.iter().map(center).collect();
        let degenerate: Vec<usize> = kernels
            .iter()
            .zip(&centered)
            .enumerate()
            .filter(|(_, (k, kc))| {
                let scale = k.frobenius_norm();
                let n = kc.frobenius_norm();
                !(n > DEGENERATE_TOL * scale) || n == 0.0
            })
            .map(|(i, _)| i)
            .collect();
        if !degenerate.is_empty() {
            return Err(Error::DegenerateKernel {
                indices: degenerate,
                reason: "centered base kernel has zero Frobenius norm".into(),
            });
        }
        Ok(BaseKernelBank { kernels, centered, names })
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn sample_size(&self) -> usize {
        self.kernels[0].dim()
    }

    pub fn kernels(&self) -> &[GramMatrix] {
        &self.kernels
    }

    pub fn centered(&self) -> &[GramMatrix] {
        &self.centered
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `K_μ = Σ μ_k K_k`.
    pub fn combine(&self, mu: &[f64]) -> Result<GramMatrix> {
        self.check_weights(mu)?;
        let mut out = DMatrix::zeros(self.sample_size(), self.sample_size());
        for (k, &w) in self.kernels.iter().zip(mu) {
            if w != 0.0 {
                out += k.matrix() * w;
            }
        }
        let all_centered = self.kernels.iter().all(GramMatrix::is_centered);
        Ok(GramMatrix::from_parts(out, all_centered, false))
    }

    /// `[K_μ]_c = Σ μ_k [K_k]_c`.
    pub fn combine_centered(&self, mu: &[f64]) -> Result<GramMatrix> {
        self.check_weights(mu)?;
        let mut out = DMatrix::zeros(self.sample_size(), self.sample_size());
        for (k, &w) in self.centered.iter().zip(mu) {
            if w != 0.0 {
                out += k.matrix() * w;
            }
        }
        Ok(GramMatrix::from_parts(out, true, false))
    }

    /// Bank restricted to the sample rows `idx`.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let kernels = self.kernels.iter().map(|k| k.submatrix(idx)).collect();
        Self::with_names(kernels, self.names.clone())
    }

    fn check_weights(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: mu.len() });
        }
        Ok(())
    }
}
