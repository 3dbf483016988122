//! Per-kernel cross-validated accuracy against centered and uncentered
//! alignment with the target kernel.

use centalign::alignment::{centered_alignment, target_kernel, uncentered_alignment};
use centalign::data::{build_bank, load_dataset, BankConfig, DatasetConfig};
use centalign::kernel::BaseKernelBank;
use centalign::predictors::{krr_fit, misclassification, rmse, svm_fit, Model, SvmOptions};
use centalign::Task;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiment::fold_assignment;
use crate::stats::{mean, pearson};
use crate::SPEC_VERSION;

fn default_folds() -> usize {
    5
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateConfig {
    pub dataset: DatasetConfig,
    /// Build without `center` so that the uncentered alignment is
    /// informative.
    pub bank: BankConfig,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_one")]
    pub c: f64,
    #[serde(default = "default_one")]
    pub lambda0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub name: String,
    /// `1 −` mean CV error (misclassification or RMSE).
    pub accuracy: f64,
    pub centered_alignment: f64,
    pub uncentered_alignment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub spec_version: String,
    pub task: Task,
    pub folds: usize,
    pub seed: u64,
    pub kernels: Vec<KernelRow>,
    /// Pearson correlation of accuracy with `ρ̂`; `None` when undefined.
    pub corr_centered: Option<f64>,
    /// Pearson correlation of accuracy with `Â`; `None` when undefined.
    pub corr_uncentered: Option<f64>,
}

pub fn run_correlate(cfg: &CorrelateConfig) -> Result<CorrelationReport> {
    let sample = load_dataset(&cfg.dataset)?;
    let bank = build_bank(&sample, &cfg.bank)?;
    correlation_report(&bank, sample.labels().as_slice(), cfg.dataset.task, cfg.folds, cfg.seed, cfg.c, cfg.lambda0)
}

/// Plain `k`-fold CV of every base kernel alone (SVM with box `c` or KRR
/// with ridge `lambda0`), plus both alignments on the full sample.
pub fn correlation_report(
    bank: &BaseKernelBank,
    y: &[f64],
    task: Task,
    folds: usize,
    seed: u64,
    c: f64,
    lambda0: f64,
) -> Result<CorrelationReport> {
    if bank.len() < 3 {
        return Err(HarnessError::usage(format!("correlation needs at least 3 base kernels, got {}", bank.len())));
    }
    if folds < 2 || y.len() < 2 * folds {
        return Err(HarnessError::usage(format!("cannot split {} points into {folds} folds", y.len())));
    }
    let assignment = fold_assignment(y.len(), folds, seed);
    let ky = target_kernel(y);
    let rows: Vec<Result<KernelRow>> = (0..bank.len())
        .into_par_iter()
        .map(|k| {
            let kernel = &bank.kernels()[k];
            let mut errors = Vec::with_capacity(folds);
            for test in &assignment {
                let train: Vec<usize> = (0..y.len()).filter(|i| test.binary_search(i).is_err()).collect();
                let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();
                let k_train = kernel.submatrix(&train);
                let model: Model = match task {
                    Task::Classification => svm_fit(&k_train, &y_train, SvmOptions { c, ..SvmOptions::default() })?.into(),
                    Task::Regression => krr_fit(&k_train, &y_train, lambda0)?.into(),
                };
                let pred = model.predict(&kernel.block(test, &train))?;
                errors.push(match task {
                    Task::Classification => misclassification(&pred, &y_test),
                    Task::Regression => rmse(&pred, &y_test),
                });
            }
            Ok(KernelRow {
                name: bank.names()[k].clone(),
                accuracy: 1.0 - mean(&errors),
                centered_alignment: centered_alignment(kernel, &ky)?,
                uncentered_alignment: uncentered_alignment(kernel, &ky)?,
            })
        })
        .collect();
    let kernels = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let acc: Vec<f64> = kernels.iter().map(|r| r.accuracy).collect();
    let rho: Vec<f64> = kernels.iter().map(|r| r.centered_alignment).collect();
    let a: Vec<f64> = kernels.iter().map(|r| r.uncentered_alignment).collect();
    Ok(CorrelationReport {
        spec_version: SPEC_VERSION.to_owned(),
        task,
        folds,
        seed,
        corr_centered: pearson(&acc, &rho),
        corr_uncentered: pearson(&acc, &a),
        kernels,
    })
}
