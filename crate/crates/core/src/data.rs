//! Dataset loading (CSV, libsvm, synthetic), preprocessing and base-kernel
//! bank construction.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::kernel::{center, frobenius_normalize, gram, trace_normalize, BaseKernelBank, KernelSpec, Sample};
use crate::{rng, Error, Result, Task};

/// Which CSV column holds the label: a 0-based index, a header name, or
/// `"last"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("last".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum SyntheticGenerator {
    /// Points at `(−1, 0)` (label −1, fraction `alpha`) and `(1, 0)` (+1).
    TwoPoint { alpha: f64, m: usize },
    /// Two noisy concentric circles of radius 1 (+1) and 2 (−1) padded with
    /// `noise_dims` standard normal columns.
    Circles {
        m: usize,
        #[serde(default = "default_circle_noise")]
        noise: f64,
        #[serde(default)]
        noise_dims: usize,
    },
    /// `y = sin(πx₀) + x₁² + ε` with `x ~ U[−1, 1]^d`.
    Regression {
        m: usize,
        d: usize,
        #[serde(default = "default_regression_noise")]
        noise: f64,
    },
}

fn default_circle_noise() -> f64 {
    0.25
}

fn default_regression_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        label_column: LabelColumn,
    },
    Libsvm {
        path: PathBuf,
    },
    Synthetic {
        #[serde(flatten)]
        generator: SyntheticGenerator,
        #[serde(default)]
        seed: u64,
    },
}

/// Applied in field order: standardize features, center labels, scale
/// labels to `Ê[y²] = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Preprocessing {
    pub standardize_features: bool,
    pub center_labels: bool,
    pub unit_second_moment: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub source: DataSource,
    pub task: Task,
    #[serde(default)]
    pub preprocessing: Preprocessing,
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.task == Task::Classification && (self.preprocessing.center_labels || self.preprocessing.unit_second_moment) {
            return Err(Error::param("label centering and scaling apply to regression only"));
        }
        Ok(())
    }

    /// Resolves relative file paths against `base` (usually the directory
    /// of the config file).
    pub fn resolve_paths(&mut self, base: &Path) {
        match &mut self.source {
            DataSource::Csv { path, .. } | DataSource::Libsvm { path } if path.is_relative() => {
                *path = base.join(&*path);
            }
            _ => {}
        }
    }
}

pub fn load_dataset(cfg: &DatasetConfig) -> Result<Sample> {
    cfg.validate()?;
    let (mut points, mut labels) = match &cfg.source {
        DataSource::Csv { path, label_column } => read_csv(path, label_column)?,
        DataSource::Libsvm { path } => read_libsvm(path)?,
        DataSource::Synthetic { generator, seed } => synthesize(generator, *seed)?.into_parts(),
    };
    if cfg.task == Task::Classification {
        if let Some(i) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid(format!("classification label {} at row {i} is not in {{-1, +1}}", labels[i])));
        }
    }
    let pre = cfg.preprocessing;
    if pre.standardize_features {
        let constant = standardize_features(&mut points);
        if !constant.is_empty() {
            log::warn!("constant feature columns left at variance 0: {constant:?}");
        }
    }
    if pre.center_labels {
        labels.add_scalar_mut(-labels.mean());
    }
    if pre.unit_second_moment {
        let scale = (labels.norm_squared() / labels.len() as f64).sqrt();
        if scale == 0.0 {
            return Err(Error::invalid("all labels are zero; cannot scale to unit second moment"));
        }
        labels /= scale;
    }
    let sample = Sample::new(points, labels)?;
    sample.check_task(cfg.task)?;
    Ok(sample)
}

/// Shifts every column to mean zero and scales it to unit (population)
/// variance. Returns the indices of constant columns, which are only
/// shifted.
pub fn standardize_features(points: &mut DMatrix<f64>) -> Vec<usize> {
    let m = points.nrows() as f64;
    let mut constant = Vec::new();
    for (j, mut col) in points.column_iter_mut().enumerate() {
        let mean = col.sum() / m;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / m).sqrt();
        if sd > 0.0 {
            col /= sd;
        } else {
            constant.push(j);
        }
    }
    constant
}

fn parse_value(field: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("cannot parse {what} {field:?} as a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite {what} {field:?}") });
    }
    Ok(v)
}

fn read_csv(path: &Path, label_column: &LabelColumn) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(File::open(path)?);
    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec));
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{} is empty", path.display())));
    }
    let header = rows[0].1.iter().any(|f| f.parse::<f64>().is_err()).then(|| rows.remove(0).1);
    let width = rows.first().map_or(0, |r| r.1.len());
    if width < 2 {
        return Err(Error::invalid("CSV needs at least one feature column and one label column"));
    }
    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(Error::param(format!("label column {i} does not exist ({width} columns)")));
        }
        LabelColumn::Name(n) if n == "last" => width - 1,
        LabelColumn::Name(n) => header
            .as_ref()
            .and_then(|h| h.iter().position(|f| f == n))
            .ok_or_else(|| Error::param(format!("label column {n:?} not found in the header")))?,
    };
    let m = rows.len();
    let mut points = DMatrix::zeros(m, width - 1);
    let mut labels = DVector::zeros(m);
    for (i, (line, rec)) in rows.iter().enumerate() {
        let mut j = 0;
        for (c, field) in rec.iter().enumerate() {
            if c == label_idx {
                labels[i] = parse_value(field, *line, "label")?;
            } else {
                points[(i, j)] = parse_value(field, *line, "feature")?;
                j += 1;
            }
        }
    }
    Ok((points, labels))
}

fn read_libsvm(path: &Path) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_value(tokens.next().unwrap_or(""), line_no, "label")?;
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("expected index:value, got {tok:?}") })?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| Error::Parse { line: line_no, message: format!("feature index {idx:?} must be an integer ≥ 1") })?;
            row.push((idx - 1, parse_value(val, line_no, "feature")?));
            dim = dim.max(idx);
        }
        labels.push(label);
        entries.push(row);
    }
    let mut points = DMatrix::zeros(labels.len(), dim);
    for (i, row) in entries.iter().enumerate() {
        for &(j, v) in row {
            points[(i, j)] = v;
        }
    }
    Ok((points, DVector::from_vec(labels)))
}

pub fn synthesize(generator: &SyntheticGenerator, seed: u64) -> Result<Sample> {
    match *generator {
        SyntheticGenerator::TwoPoint { alpha, m } => synth_two_point(alpha, m, seed),
        SyntheticGenerator::Circles { m, noise, noise_dims } => synth_circles(m, noise, noise_dims, seed),
        SyntheticGenerator::Regression { m, d, noise } => synth_regression(m, d, noise, seed),
    }
}

/// `round(αm)` points at `(−1, 0)` labelled −1 and the rest at `(1, 0)`
/// labelled +1, in seeded random order. The count is clamped to
/// `[1, m − 1]` so both classes appear.
pub fn synth_two_point(alpha: f64, m: usize, seed: u64) -> Result<Sample> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if m < 2 {
        return Err(Error::param(format!("m = {m} cannot represent both classes")));
    }
    let negatives = ((alpha * m as f64).round() as usize).clamp(1, m - 1);
    let mut labels: Vec<f64> = (0..m).map(|i| if i < negatives { -1.0 } else { 1.0 }).collect();
    labels.shuffle(&mut rng::seeded(seed));
    let points = DMatrix::from_fn(m, 2, |i, j| if j == 0 { labels[i] } else { 0.0 });
    Sample::new(points, DVector::from_vec(labels))
}

fn synth_circles(m: usize, noise: f64, noise_dims: usize, seed: u64) -> Result<Sample> {
    if !(noise >= 0.0) {
        return Err(Error::param(format!("noise must be ≥ 0, got {noise}")));
    }
    let mut r = rng::seeded(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let d = 2 + noise_dims;
    let mut points = DMatrix::zeros(m, d);
    let mut labels = DVector::zeros(m);
    for i in 0..m {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let radius = if y > 0.0 { 1.0 } else { 2.0 };
        let theta = r.random_range(0.0..std::f64::consts::TAU);
        points[(i, 0)] = radius * theta.cos() + noise * normal.sample(&mut r);
        points[(i, 1)] = radius * theta.sin() + noise * normal.sample(&mut r);
        for j in 2..d {
            points[(i, j)] = normal.sample(&mut r);
        }
        labels[i] = y;
    }
    Sample::new(points, labels)
}

fn synth_regression(m: usize, d: usize, noise: f64, seed: u64) -> Result<Sample> {
    if d < 2 {
        return Err(Error::param("regression generator needs d ≥ 2"));
    }
    if !(noise >= 0.0) {
        return Err(Error::param(format!("noise must be ≥ 0, got {noise}")));
    }
    let mut r = rng::seeded(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let points = DMatrix::from_fn(m, d, |_, _| r.random_range(-1.0..1.0));
    let labels = DVector::from_fn(m, |i, _| {
        (std::f64::consts::PI * points[(i, 0)]).sin() + points[(i, 1)].powi(2) + noise * normal.sample(&mut r)
    });
    Sample::new(points, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BankFamily {
    /// Gaussian kernels with `γ = 2^g`, `g = gamma0, …, gamma1`.
    GaussianGrid { gamma0: i32, gamma1: i32 },
    /// `x_k x′_k` for the `top_k` highest-variance feature columns.
    RankOne { top_k: usize },
    Explicit { kernels: Vec<KernelSpec> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Normalization {
    pub trace_one: bool,
    pub frobenius_one: bool,
}

/// Each kernel is normalized first and centered second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankConfig {
    pub family: BankFamily,
    #[serde(default)]
    pub normalize: Normalization,
    #[serde(default)]
    pub center: bool,
}

impl BankConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.family {
            BankFamily::GaussianGrid { gamma0, gamma1 } if gamma0 > gamma1 => {
                return Err(Error::param(format!("gamma0 = {gamma0} exceeds gamma1 = {gamma1}")));
            }
            BankFamily::RankOne { top_k: 0 } => return Err(Error::param("top_k must be ≥ 1")),
            BankFamily::Explicit { kernels } if kernels.is_empty() => {
                return Err(Error::param("explicit bank needs at least one kernel"));
            }
            _ => {}
        }
        if self.normalize.trace_one && self.normalize.frobenius_one {
            return Err(Error::param("choose at most one of trace_one and frobenius_one"));
        }
        Ok(())
    }

    /// Kernel functions in bank order.
    pub fn specs(&self, sample: &Sample) -> Result<Vec<KernelSpec>> {
        self.validate()?;
        let specs = match &self.family {
            BankFamily::GaussianGrid { gamma0, gamma1 } => {
                (*gamma0..=*gamma1).map(|g| KernelSpec::Gaussian { gamma: 2f64.powi(g) }).collect()
            }
            BankFamily::RankOne { top_k } => top_variance_features(sample.points(), *top_k)?
                .into_iter()
                .map(|feature_index| KernelSpec::RankOne { feature_index })
                .collect(),
            BankFamily::Explicit { kernels } => kernels.clone(),
        };
        Ok(specs)
    }
}

/// The `k` columns of largest variance (ties to the lower index), returned
/// in ascending column order.
pub fn top_variance_features(points: &DMatrix<f64>, k: usize) -> Result<Vec<usize>> {
    let d = points.ncols();
    if k == 0 || k > d {
        return Err(Error::param(format!("top_k = {k} must lie in 1..={d}")));
    }
    let m = points.nrows() as f64;
    let variances: Vec<f64> = points
        .column_iter()
        .map(|c| {
            let mean = c.sum() / m;
            c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m
        })
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn build_bank(sample: &Sample, cfg: &BankConfig) -> Result<BaseKernelBank> {
    let specs = cfg.specs(sample)?;
    let mut kernels = Vec::with_capacity(specs.len());
    let mut degenerate = Vec::new();
    for (idx, spec) in specs.iter().enumerate() {
        let mut k = gram(spec, sample)?;
        let normalized = if cfg.normalize.trace_one {
            trace_normalize(&k)
        } else if cfg.normalize.frobenius_one {
            frobenius_normalize(&k)
        } else {
            Ok(k.clone())
        };
        match normalized {
            Ok(n) => k = n,
            Err(Error::DegenerateKernel { .. }) => {
                degenerate.push(idx);
                continue;
            }
            Err(e) => return Err(e),
        }
        if cfg.center {
            k = center(&k);
        }
        kernels.push(k);
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateKernel { indices: degenerate, reason: "kernel has zero norm".into() });
    }
    let names = specs.iter().map(KernelSpec::describe).collect();
    BaseKernelBank::with_names(kernels, names)
}
