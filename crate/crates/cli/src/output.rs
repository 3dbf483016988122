//! JSON and CSV writers. JSON goes to a file or stdout; tables are CSV
//! with a header row.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::experiment::ExperimentRun;
use crate::stats::{mean, std_dev};

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    sink(out)?.write_all(to_json(value)?.as_bytes())?;
    Ok(())
}

pub fn write_csv<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn is_csv(out: Option<&Path>) -> bool {
    out.and_then(Path::extension).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// `dir/stem.json` → `dir/stem<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

#[derive(Serialize)]
struct CvRow {
    fold: String,
    test_error: f64,
    train_alignment: f64,
    validation_error: Option<f64>,
    radius: Option<f64>,
    lambda0: Option<f64>,
    c: Option<f64>,
}

/// One row per fold, then `mean` and `std` rows.
pub fn write_cv_table(out: Option<&Path>, run: &ExperimentRun) -> Result<()> {
    let mut rows: Vec<CvRow> = run
        .fold_results
        .iter()
        .map(|f| CvRow {
            fold: f.fold.to_string(),
            test_error: f.test_error,
            train_alignment: f.train_alignment,
            validation_error: Some(f.validation_error),
            radius: f.chosen.radius,
            lambda0: f.chosen.lambda0,
            c: f.chosen.c,
        })
        .collect();
    let errors: Vec<f64> = rows.iter().map(|r| r.test_error).collect();
    let aligns: Vec<f64> = rows.iter().map(|r| r.train_alignment).collect();
    for (name, f) in [("mean", mean as fn(&[f64]) -> f64), ("std", std_dev)] {
        rows.push(CvRow {
            fold: name.into(),
            test_error: f(&errors),
            train_alignment: f(&aligns),
            validation_error: None,
            radius: None,
            lambda0: None,
            c: None,
        });
    }
    write_csv(out, &rows)
}
