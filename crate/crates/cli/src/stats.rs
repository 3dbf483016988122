//! Summary statistics, Pearson correlation and the paired one-sided t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{HarnessError, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); 0 for fewer than two
/// values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mu = mean(v);
    (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// `None` when either vector has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestDecision {
    pub n: usize,
    pub mean_difference: f64,
    /// `d̄ / (s_d/√n)`; `None` when the differences are all equal.
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub p_level: f64,
    /// `mean(a) > mean(b)` at the one-sided level.
    pub significant: bool,
    /// Zero variance and zero mean of the differences.
    pub inconclusive: bool,
}

/// Paired one-sided test of `mean(a) > mean(b)` on the differences
/// `a_i − b_i`.
pub fn paired_ttest(a: &[f64], b: &[f64], p_level: f64) -> Result<TTestDecision> {
    if a.len() != b.len() {
        return Err(HarnessError::usage(format!("paired samples differ in length ({} vs {})", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(HarnessError::usage("paired t-test needs at least two pairs"));
    }
    if !(p_level > 0.0 && p_level < 1.0) {
        return Err(HarnessError::usage(format!("p level must lie in (0, 1), got {p_level}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let dbar = mean(&d);
    let sd = std_dev(&d);
    if sd == 0.0 {
        return Ok(TTestDecision {
            n,
            mean_difference: dbar,
            t: None,
            p_value: None,
            p_level,
            significant: dbar > 0.0,
            inconclusive: dbar == 0.0,
        });
    }
    let t = dbar / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    let p = 1.0 - dist.cdf(t);
    Ok(TTestDecision {
        n,
        mean_difference: dbar,
        t: Some(t),
        p_value: Some(p),
        p_level,
        significant: p < p_level,
        inconclusive: false,
    })
}
