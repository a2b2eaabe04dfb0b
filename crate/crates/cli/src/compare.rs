//! Regression comparison of two result directories: exact (or toleranced)
//! matching for deterministic columns, a pooled-sigma overlap test for
//! Monte Carlo columns, and schema checks for everything that must line up
//! before values are compared at all.

use std::fs;
use std::path::Path;

use crate::csv;
use crate::manifest::Kind;
use crate::runner::{ResultRecord, SUMMARY_NAME};
use crate::CliError;

/// Wilson 95% interval width in units of sigma (2 x 1.96).
const CI_WIDTH_SIGMAS: f64 = 3.919928;

/// Comparison knobs. `deterministic` is the absolute tolerance on
/// deterministic numeric columns (0 means bytes must match or parse equal);
/// `sigma` is the allowed shift of a Monte Carlo estimate in units of the
/// pooled standard error of the two runs.
#[derive(Debug, Clone)]
pub struct CompareTolerances {
    pub deterministic: f64,
    pub sigma: f64,
}

impl Default for CompareTolerances {
    fn default() -> Self {
        CompareTolerances {
            deterministic: 0.0,
            sigma: 3.0,
        }
    }
}

/// Outcome of a comparison that got past the schema checks.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub pass: bool,
    pub rows: usize,
    pub cells_checked: usize,
    /// One line per mismatch, naming the column and row.
    pub failures: Vec<String>,
}

/// How one column is compared.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    /// Identifies the row; any difference is a schema mismatch.
    Key,
    /// Deterministic numeric output.
    Det,
    /// Monte Carlo estimate; the columns named here carry its interval.
    Mc { lo: &'static str, hi: &'static str },
    /// Derived from other columns; never compared.
    Skip,
}

fn column_class(kind: Kind, column: &str) -> Class {
    let mc_est = Class::Mc {
        lo: "ci_lo",
        hi: "ci_hi",
    };
    match kind {
        Kind::Gap => match column {
            "gap" | "residual" => Class::Det,
            _ => Class::Key,
        },
        Kind::Bootstrap => match column {
            "estimate" => mc_est,
            "k" | "ci_lo" | "ci_hi" => Class::Skip,
            _ => Class::Key,
        },
        Kind::Kmc | Kind::Persistence => match column {
            "F" => mc_est,
            "ci_lo" | "ci_hi" => Class::Skip,
            _ => Class::Key,
        },
        Kind::Perc => match column {
            "estimate" => mc_est,
            "survived" | "ci_lo" | "ci_hi" | "r_mean" | "l_mean" => Class::Skip,
            _ => Class::Key,
        },
        Kind::Bound => match column {
            "lower" | "upper" | "limit" => Class::Det,
            _ => Class::Key,
        },
        Kind::Blockcheck => match column {
            "mu_c1" | "formula" | "diagonalized" | "discrepancy" => Class::Det,
            _ => Class::Key,
        },
    }
}

/// A loaded result directory.
struct Loaded {
    record: ResultRecord,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn load(dir: &Path) -> Result<Loaded, CliError> {
    let summary_path = dir.join(SUMMARY_NAME);
    let text = fs::read_to_string(&summary_path)
        .map_err(|e| CliError::Validation(format!("reading {}: {e}", summary_path.display())))?;
    let record: ResultRecord = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", summary_path.display())))?;
    let csv_path = dir.join(&record.csv);
    let csv_text = fs::read_to_string(&csv_path)
        .map_err(|e| CliError::Validation(format!("reading {}: {e}", csv_path.display())))?;
    let (header, rows) = csv::parse(&csv_text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", csv_path.display())))?;
    if header != record.header {
        return Err(CliError::Validation(format!(
            "{}: CSV header does not match its summary",
            csv_path.display()
        )));
    }
    Ok(Loaded {
        record,
        header,
        rows,
    })
}

fn parse_num(v: &str, column: &str, row: usize) -> Result<f64, CliError> {
    v.parse::<f64>().map_err(|_| {
        CliError::Validation(format!(
            "column `{column}` row {row}: `{v}` is not numeric"
        ))
    })
}

/// Standard error implied by a row's Wilson interval.
fn row_sigma(row: &[f64; 3]) -> f64 {
    (row[2] - row[1]) / CI_WIDTH_SIGMAS
}

/// Compares a result directory against a baseline directory.
///
/// Preconditions (all reported as validation errors): both directories hold
/// a summary and its CSV, the kinds and headers match, the row counts
/// match, and the manifest hashes match unless `allow_hash_mismatch`.
/// Key columns must agree exactly; deterministic columns within
/// `tol.deterministic`; Monte Carlo estimates within `tol.sigma` pooled
/// standard errors.
pub fn compare_baseline(
    result_dir: &Path,
    baseline_dir: &Path,
    tol: &CompareTolerances,
    allow_hash_mismatch: bool,
) -> Result<CompareReport, CliError> {
    let result = load(result_dir)?;
    let baseline = load(baseline_dir)?;

    if result.record.kind != baseline.record.kind {
        return Err(CliError::Validation(format!(
            "schema mismatch: kind `{}` vs `{}`",
            result.record.kind, baseline.record.kind
        )));
    }
    if result.record.manifest_hash != baseline.record.manifest_hash && !allow_hash_mismatch {
        return Err(CliError::Validation(
            "manifest hashes differ; these are different experiments \
             (pass the hash override to compare anyway)"
                .into(),
        ));
    }
    if result.header != baseline.header {
        return Err(CliError::Validation("schema mismatch: headers differ".into()));
    }
    if result.rows.len() != baseline.rows.len() {
        return Err(CliError::Validation(format!(
            "schema mismatch: {} rows vs {}",
            result.rows.len(),
            baseline.rows.len()
        )));
    }

    let kind = result.record.kind;
    let classes: Vec<Class> = result
        .header
        .iter()
        .map(|c| column_class(kind, c))
        .collect();
    let col_index = |name: &str| result.header.iter().position(|h| h == name);

    let mut failures = Vec::new();
    let mut cells = 0usize;
    for (r, (ra, rb)) in result.rows.iter().zip(&baseline.rows).enumerate() {
        for (c, class) in classes.iter().enumerate() {
            let (a, b) = (ra[c].as_str(), rb[c].as_str());
            let column = &result.header[c];
            match *class {
                Class::Skip => {}
                Class::Key => {
                    cells += 1;
                    if a != b {
                        return Err(CliError::Validation(format!(
                            "schema mismatch: key column `{column}` row {r} differs ({a} vs {b})"
                        )));
                    }
                }
                Class::Det => {
                    cells += 1;
                    if a == b {
                        continue;
                    }
                    let (va, vb) = (parse_num(a, column, r)?, parse_num(b, column, r)?);
                    let diff = (va - vb).abs();
                    if !(diff <= tol.deterministic) {
                        failures.push(format!(
                            "column `{column}` row {r}: |{a} - {b}| = {diff:.3e} exceeds \
                             tolerance {:.3e}",
                            tol.deterministic
                        ));
                    }
                }
                Class::Mc { lo, hi } => {
                    cells += 1;
                    if a == b {
                        continue;
                    }
                    let (li, hi_i) = match (col_index(lo), col_index(hi)) {
                        (Some(l), Some(h)) => (l, h),
                        _ => {
                            return Err(CliError::Validation(format!(
                                "schema mismatch: `{column}` needs `{lo}`/`{hi}` columns"
                            )))
                        }
                    };
                    let va = [
                        parse_num(a, column, r)?,
                        parse_num(&ra[li], lo, r)?,
                        parse_num(&ra[hi_i], hi, r)?,
                    ];
                    let vb = [
                        parse_num(b, column, r)?,
                        parse_num(&rb[li], lo, r)?,
                        parse_num(&rb[hi_i], hi, r)?,
                    ];
                    let pooled = (row_sigma(&va).powi(2) + row_sigma(&vb).powi(2)).sqrt();
                    let shift = (va[0] - vb[0]).abs();
                    if !(shift <= tol.sigma * pooled) {
                        failures.push(format!(
                            "column `{column}` row {r}: shift {shift:.4e} exceeds \
                             {}-sigma allowance {:.4e}",
                            tol.sigma,
                            tol.sigma * pooled
                        ));
                    }
                }
            }
        }
    }

    Ok(CompareReport {
        pass: failures.is_empty(),
        rows: result.rows.len(),
        cells_checked: cells,
        failures,
    })
}
