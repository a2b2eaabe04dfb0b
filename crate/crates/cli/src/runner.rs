//! Experiment execution: grid expansion, per-kind dispatch into the core
//! library, result-row assembly, and the summary record. Grid points fan
//! out over the worker pool; rows are sorted back into grid order before
//! writing, and every Monte Carlo stream is derived from (seed, row index),
//! so outputs are byte-identical for any thread count.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use kcsm_core::bootstrap::spanning_probability;
use kcsm_core::kmc::{autocorrelation_rate, fit_exponential_rate, persistence_curve, TimeGrid};
use kcsm_core::lattice::{BoundaryCondition, DensityParams, Region};
use kcsm_core::perc::survival_probability;
use kcsm_core::rng::mix64;
use kcsm_core::spectral::{
    block_gap_verify, bound_evaluate, build_generator, exact_gap, BlockChainSpec, BlockPredicate,
    BoundForm, SpectralError,
};

use crate::csv::{self, fmt_f64};
use crate::manifest::{ExperimentManifest, Kind};
use crate::CliError;

/// Name of the CSV file a run writes into its output directory.
pub const CSV_NAME: &str = "results.csv";
/// Name of the JSON summary written next to it.
pub const SUMMARY_NAME: &str = "summary.json";

/// Default ceiling on the achieved eigenpair residual (`gap`).
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
/// Default eigensolver target tolerance (`gap`).
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;
/// Default ceiling on |closed form - diagonalized| (`blockcheck`).
pub const DEFAULT_DISCREPANCY_TOL: f64 = 1e-8;

/// Summary of one run, serialized as `summary.json`. The CSV rows live in
/// [`RunOutput::rows`]; the record carries everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub kind: Kind,
    /// Canonical-JSON hash of the manifest (seed override applied).
    pub manifest_hash: String,
    /// Package version plus the source description baked in at build time.
    pub version: String,
    pub wall_ms: u64,
    pub seed: u64,
    /// CSV file name inside the output directory.
    pub csv: String,
    pub header: Vec<String>,
    pub rows: usize,
    /// Conditions surfaced by the inner modules (non-ergodic instances,
    /// residuals above tolerance, poor fits), in row order.
    pub warnings: Vec<String>,
    /// Fit results for the curve kinds; absent elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<Value>,
}

/// A finished run: the summary record, the CSV rows, and the exit code the
/// process should end with (0 ok, 3 numerical failure, 4 non-ergodic under
/// strict mode).
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub rows: Vec<Vec<String>>,
    pub exit: i32,
}

/// One computed row plus its flags, before assembly.
struct RowOut {
    fields: Vec<String>,
    warnings: Vec<String>,
    nonergodic: bool,
    /// Set when this row crossed a numerical-failure gate.
    numerical: Option<String>,
}

impl RowOut {
    fn plain(fields: Vec<String>) -> Self {
        RowOut {
            fields,
            warnings: Vec::new(),
            nonergodic: false,
            numerical: None,
        }
    }
}

/// Everything a kind produces before the common assembly.
struct KindOutput {
    header: Vec<&'static str>,
    rows: Vec<RowOut>,
    fit: Option<Value>,
    extra_warnings: Vec<String>,
}

fn val<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

/// Solver breakdowns are numerical failures; everything else a spectral
/// routine can report is a problem with the requested instance.
fn spectral_err(e: SpectralError) -> CliError {
    match e {
        SpectralError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

/// Runs the jobs over the worker pool and restores grid order.
fn fan_out<J, F>(jobs: Vec<J>, run: F) -> Result<Vec<RowOut>, CliError>
where
    J: Send,
    F: Fn(usize, J) -> Result<RowOut, CliError> + Sync,
{
    let mut done: Vec<(usize, Result<RowOut, CliError>)> = jobs
        .into_par_iter()
        .enumerate()
        .map(|(i, job)| (i, run(i, job)))
        .collect();
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, r)| r).collect()
}

/// Executes a validated manifest and returns the assembled output. Files
/// are written separately by [`write_output`].
pub fn run_experiment(m: &ExperimentManifest, strict: bool) -> Result<RunOutput, CliError> {
    m.validate()?;
    let t0 = Instant::now();
    let body = match m.kind {
        Kind::Gap => run_gap(m)?,
        Kind::Bootstrap => run_bootstrap(m)?,
        Kind::Kmc => run_kmc(m)?,
        Kind::Persistence => run_persistence(m)?,
        Kind::Perc => run_perc(m)?,
        Kind::Bound => run_bound(m)?,
        Kind::Blockcheck => run_blockcheck(m)?,
    };

    let mut warnings: Vec<String> = Vec::new();
    let mut numerical: Option<String> = None;
    let mut nonergodic = false;
    for row in &body.rows {
        warnings.extend(row.warnings.iter().cloned());
        nonergodic |= row.nonergodic;
        if numerical.is_none() {
            numerical = row.numerical.clone();
        }
    }
    warnings.extend(body.extra_warnings.iter().cloned());

    let exit = if numerical.is_some() {
        3
    } else if strict && nonergodic {
        4
    } else {
        0
    };

    let record = ResultRecord {
        schema: crate::manifest::SCHEMA_VERSION,
        kind: m.kind,
        manifest_hash: m.hash(),
        version: version_string(),
        wall_ms: t0.elapsed().as_millis() as u64,
        seed: m.seed,
        csv: CSV_NAME.into(),
        header: body.header.iter().map(|s| s.to_string()).collect(),
        rows: body.rows.len(),
        warnings,
        fit: body.fit,
    };
    Ok(RunOutput {
        record,
        rows: body.rows.into_iter().map(|r| r.fields).collect(),
        exit,
    })
}

/// Writes `results.csv` and `summary.json` into `dir`, creating it.
pub fn write_output(dir: &Path, out: &RunOutput) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| val(format!("creating {}: {e}", dir.display())))?;
    csv::write(&dir.join(CSV_NAME), &out.record.header, &out.rows)
        .map_err(|e| val(format!("writing {CSV_NAME}: {e}")))?;
    let mut text = serde_json::to_string_pretty(&out.record).expect("record serializes");
    text.push('\n');
    fs::write(dir.join(SUMMARY_NAME), text)
        .map_err(|e| val(format!("writing {SUMMARY_NAME}: {e}")))?;
    Ok(())
}

/// Package version plus the source description captured at build time.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("KCSM_GIT_DESCRIBE"));

pub fn version_string() -> String {
    VERSION.to_string()
}

fn sides_label(sides: &[usize]) -> String {
    sides
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

/// The geometry list of a `gap` manifest, as per-axis side vectors.
fn gap_geometries(m: &ExperimentManifest, dim: usize) -> Vec<Vec<usize>> {
    if let Some(sides) = &m.grid.sides {
        sides.clone()
    } else {
        m.grid
            .l
            .as_ref()
            .expect("validated")
            .iter()
            .map(|&l| vec![l; dim])
            .collect()
    }
}

fn run_gap(m: &ExperimentManifest) -> Result<KindOutput, CliError> {
    let model_json = m.model.as_ref().expect("validated");
    let dim = model_json.build().map_err(val)?.dim();
    let qs = m.grid.q.clone().expect("validated");
    let tol = m.tolerances.clone().unwrap_or_default();
    let solver_tol = tol.solver.unwrap_or(DEFAULT_SOLVER_TOL);
    let residual_tol = tol.residual.unwrap_or(DEFAULT_RESIDUAL_TOL);
    let seed = m.seed;
    let bc_json = m.bc.clone();

    let mut jobs: Vec<(Vec<usize>, f64)> = Vec::new();
    for sides in gap_geometries(m, dim) {
        for &q in &qs {
            jobs.push((sides.clone(), q));
        }
    }

    let rows = fan_out(jobs, |i, (sides, q)| {
        let model = model_json.build().map_err(val)?;
        let region = Region::new(dim, &sides).map_err(val)?;
        let bc = match &bc_json {
            Some(b) => b.build(&region).map_err(val)?,
            None => BoundaryCondition::occupied_halo(),
        };
        let params = DensityParams::new(q).map_err(val)?;
        let gen = build_generator(&model, &region, &bc, params).map_err(spectral_err)?;
        let res = exact_gap(&gen, None, solver_tol).map_err(spectral_err)?;

        let mut row = RowOut::plain(vec![
            model.name().to_string(),
            dim.to_string(),
            sides_label(&sides),
            bc.label().to_string(),
            fmt_f64(q),
            res.states.to_string(),
            res.zero_multiplicity.to_string(),
            fmt_f64(res.gap),
            fmt_f64(res.residual),
            seed.to_string(),
        ]);
        if !res.ergodic {
            row.nonergodic = true;
            row.warnings.push(format!(
                "row {i}: non-ergodic ({} components; gap from the largest, {} of {} states)",
                res.zero_multiplicity, res.component_states, res.states
            ));
        }
        if res.residual > residual_tol {
            let msg = format!(
                "row {i}: residual {:.3e} above tolerance {residual_tol:.3e}",
                res.residual
            );
            row.warnings.push(msg.clone());
            row.numerical = Some(msg);
        }
        Ok(row)
    })?;

    Ok(KindOutput {
        header: vec![
            "model",
            "d",
            "sides",
            "bc",
            "q",
            "states",
            "components",
            "gap",
            "residual",
            "seed",
        ],
        rows,
        fit: None,
        extra_warnings: Vec::new(),
    })
}

fn run_bootstrap(m: &ExperimentManifest) -> Result<KindOutput, CliError> {
    let model_json = m.model.as_ref().expect("validated");
    let qs = m.grid.q.clone().expect("validated");
    let ls = m.grid.l.clone().expect("validated");
    let n = m.grid.n_samples.expect("validated");
    let seed = m.seed;

    let mut jobs: Vec<(usize, f64)> = Vec::new();
    for &l in &ls {
        for &q in &qs {
            jobs.push((l, q));
        }
    }

    let rows = fan_out(jobs, |i, (l, q)| {
        let model = model_json.build().map_err(val)?;
        let row_seed = mix64(seed ^ i as u64);
        let est = spanning_probability(&model, l, q, n, row_seed).map_err(val)?;
        Ok(RowOut::plain(vec![
            est.model.clone(),
            est.dim.to_string(),
            l.to_string(),
            fmt_f64(q),
            n.to_string(),
            est.hits.to_string(),
            fmt_f64(est.estimate),
            fmt_f64(est.ci_lo),
            fmt_f64(est.ci_hi),
            row_seed.to_string(),
        ]))
    })?;

    Ok(KindOutput {
        header: vec![
            "model", "d", "L", "q", "n", "k", "estimate", "ci_lo", "ci_hi", "seed",
        ],
        rows,
        fit: None,
        extra_warnings: Vec::new(),
    })
}

/// Shared setup of the curve kinds: region, boundary, density, time grid.
fn curve_inputs(
    m: &ExperimentManifest,
) -> Result<(Region, BoundaryCondition, DensityParams, TimeGrid, u64), CliError> {
    let model = m.model.as_ref().expect("validated").build().map_err(val)?;
    let l = m.grid.l.as_ref().expect("validated")[0];
    let q = m.grid.q.as_ref().expect("validated")[0];
    let region = Region::cube(model.dim(), l).map_err(val)?;
    let bc = match &m.bc {
        Some(b) => b.build(&region).map_err(val)?,
        None => BoundaryCondition::occupied_halo(),
    };
    let params = DensityParams::new(q).map_err(val)?;
    let (t_min, t_max, factor) = m.time_grid_params();
    let grid = TimeGrid::geometric(t_min, t_max, factor).map_err(val)?;
    let n = m.grid.n_samples.expect("validated");
    Ok((region, bc, params, grid, n))
}

fn fit_json(f: &kcsm_core::kmc::RateFit) -> Value {
    serde_json::json!({
        "rate": f.rate,
        "intercept": f.intercept,
        "r_squared": f.r_squared,
        "rate_se": f.rate_se,
        "n_used": f.n_used,
        "window": [f.window.0, f.window.1],
        "poor_fit": f.poor_fit,
    })
}

fn run_persistence(m: &ExperimentManifest) -> Result<KindOutput, CliError> {
    let model = m.model.as_ref().expect("validated").build().map_err(val)?;
    let (region, bc, params, grid, n) = curve_inputs(m)?;
    let curve =
        persistence_curve(&model, &region, &bc, params, &grid, n, m.seed).map_err(val)?;

    let rows = curve
        .times
        .iter()
        .zip(&curve.f_hat)
        .zip(curve.ci_lo.iter().zip(&curve.ci_hi))
        .map(|((&t, &f), (&lo, &hi))| {
            RowOut::plain(vec![fmt_f64(t), fmt_f64(f), fmt_f64(lo), fmt_f64(hi)])
        })
        .collect();

    // decay-rate fit over the well-resolved middle of the curve
    let mut extra_warnings = Vec::new();
    let fit = match fit_exponential_rate(&curve.times, &curve.f_hat, n, (0.02, 0.5)) {
        Ok(f) => {
            if f.poor_fit {
                extra_warnings.push(format!(
                    "poor fit: log-curve r_squared {:.4} below 0.9",
                    f.r_squared
                ));
            }
            Some(fit_json(&f))
        }
        Err(e) => {
            extra_warnings.push(format!("fit skipped: {e}"));
            None
        }
    };

    Ok(KindOutput {
        header: vec!["t", "F", "ci_lo", "ci_hi"],
        rows,
        fit,
        extra_warnings,
    })
}

fn run_kmc(m: &ExperimentManifest) -> Result<KindOutput, CliError> {
    let model = m.model.as_ref().expect("validated").build().map_err(val)?;
    let (region, bc, params, grid, n) = curve_inputs(m)?;
    // the autocorrelation experiment is the fit; too few usable points is a
    // numerical failure, not a validation problem
    let est = autocorrelation_rate(&model, &region, &bc, params, &grid, n, m.seed)
        .map_err(|e| CliError::Numerical(format!("autocorrelation: {e}")))?;

    let rows = est
        .times
        .iter()
        .zip(est.c_hat.iter().zip(&est.se))
        .map(|(&t, (&c, &se))| {
            RowOut::plain(vec![
                fmt_f64(t),
                fmt_f64(c),
                fmt_f64(c - 1.96 * se),
                fmt_f64(c + 1.96 * se),
            ])
        })
        .collect();

    let mut extra_warnings = Vec::new();
    if est.fit.poor_fit {
        extra_warnings.push(format!(
            "poor fit: log-curve r_squared {:.4} below 0.9",
            est.fit.r_squared
        ));
    }

    Ok(KindOutput {
        header: vec!["t", "F", "ci_lo", "ci_hi"],
        rows,
        fit: Some(fit_json(&est.fit)),
        extra_warnings,
    })
}

fn run_perc(m: &ExperimentManifest) -> Result<KindOutput, CliError> {
    let ps = m.grid.p.clone().expect("validated");
    let depths = m.grid.l.clone().expect("validated");
    let n = m.grid.n_samples.expect("validated");
    let seed = m.seed;

    let mut jobs: Vec<(usize, f64)> = Vec::new();
    for &depth in &depths {
        for &p in &ps {
            jobs.push((depth, p));
        }
    }

    let rows = fan_out(jobs, |i, (depth, p)| {
        let row_seed = mix64(seed ^ i as u64);
        let est = survival_probability(p, depth, n, row_seed).map_err(val)?;
        Ok(RowOut::plain(vec![
            fmt_f64(p),
            depth.to_string(),
            n.to_string(),
            est.survived.to_string(),
            fmt_f64(est.estimate),
            fmt_f64(est.ci_lo),
            fmt_f64(est.ci_hi),
            fmt_f64(est.r_mean),
            fmt_f64(est.l_mean),
            row_seed.to_string(),
        ]))
    })?;

    Ok(KindOutput {
        header: vec![
            "p", "L", "n", "survived", "estimate", "ci_lo", "ci_hi", "r_mean", "l_mean", "seed",
        ],
        rows,
        fit: None,
        extra_warnings: Vec::new(),
    })
}

/// How a `bound` manifest maps onto the closed-form families.
pub(crate) enum BoundPlan {
    /// One form evaluated over the q grid.
    Single(BoundForm),
    /// The per-side oriented family, evaluated over l x q.
    PerSide { c1: f64, c2: f64 },
}

/// Resolves the model tag and constants of a `bound` manifest, rejecting
/// constants the selected family does not use.
pub(crate) fn bound_form_for(m: &ExperimentManifest) -> Result<BoundPlan, CliError> {
    let model = m.model.as_ref().expect("validated");
    let c = m.constants.clone().unwrap_or_default();
    let used: &[&str];
    let plan = match (model.model.as_str(), model.j) {
        ("east", _) => {
            used = &["delta", "c_lower", "c_upper", "log_base"];
            BoundPlan::Single(BoundForm::East {
                delta: c.delta.unwrap_or(0.0),
                c_lower: c.c_lower.unwrap_or(1.0),
                c_upper: c.c_upper.unwrap_or(1.0),
                log_base: c.log_base.unwrap_or(std::f64::consts::E),
            })
        }
        ("fa", None | Some(1)) => {
            used = &["c"];
            BoundPlan::Single(BoundForm::Fa1f {
                d: model.d,
                c: c.c.unwrap_or(1.0),
            })
        }
        ("fa", Some(2)) if model.d == 2 => {
            used = &["c_lower", "lambda", "epsilon"];
            let default = match BoundForm::fa2f_default() {
                BoundForm::Fa2f { lambda, .. } => lambda,
                _ => unreachable!(),
            };
            BoundPlan::Single(BoundForm::Fa2f {
                c_lower: c.c_lower.unwrap_or(1.0),
                lambda: c.lambda.unwrap_or(default),
                epsilon: c.epsilon.unwrap_or(0.0),
            })
        }
        ("ne", _) => {
            used = &["c1", "c2"];
            BoundPlan::PerSide {
                c1: c.c1.unwrap_or(1.0),
                c2: c.c2.unwrap_or(0.5),
            }
        }
        (tag, j) => {
            let label = match j {
                Some(j) => format!("{tag} (j={j}, d={})", model.d),
                None => format!("{tag} (d={})", model.d),
            };
            return Err(CliError::Validation(format!(
                "no closed-form bound family for model {label}"
            )));
        }
    };

    // reject constants the family ignores, so typos fail loudly
    let supplied = [
        ("delta", c.delta.is_some()),
        ("c_lower", c.c_lower.is_some()),
        ("c_upper", c.c_upper.is_some()),
        ("log_base", c.log_base.is_some()),
        ("c", c.c.is_some()),
        ("lambda", c.lambda.is_some()),
        ("epsilon", c.epsilon.is_some()),
        ("c1", c.c1.is_some()),
        ("c2", c.c2.is_some()),
    ];
    for (name, set) in supplied {
        if set && !used.contains(&name) {
            return Err(CliError::Validation(format!(
                "constant `{name}` is not used by this bound family"
            )));
        }
    }

    // the per-side family needs an l grid; the others must not have one
    let have_l = m.grid.l.as_ref().is_some_and(|l| !l.is_empty());
    match &plan {
        BoundPlan::PerSide { .. } if !have_l => Err(CliError::Validation(
            "this bound family is per-side: supply a nonempty grid.l".into(),
        )),
        BoundPlan::Single(_) if have_l => Err(CliError::Validation(
            "grid.l only applies to the per-side bound family".into(),
        )),
        _ => Ok(plan),
    }
}

fn bound_row(form: &BoundForm, l: Option<usize>, q: f64) -> Result<RowOut, CliError> {
    let v = bound_evaluate(form, q).map_err(spectral_err)?;
    Ok(RowOut::plain(vec![
        form.name().to_string(),
        l.map(|l| l.to_string()).unwrap_or_default(),
        fmt_f64(q),
        fmt_f64(v.lower),
        fmt_f64(v.upper),
        v.limit_target.map(fmt_f64).unwrap_or_default(),
    ]))
}

fn run_bound(m: &ExperimentManifest) -> Result<KindOutput, CliError> {
    let plan = bound_form_for(m)?;
    let qs = m.grid.q.clone().expect("validated");
    let mut rows = Vec::new();
    match plan {
        BoundPlan::Single(form) => {
            for &q in &qs {
                rows.push(bound_row(&form, None, q)?);
            }
        }
        BoundPlan::PerSide { c1, c2 } => {
            for &l in m.grid.l.as_ref().expect("validated") {
                let form = BoundForm::Ne { l, c1, c2 };
                for &q in &qs {
                    rows.push(bound_row(&form, Some(l), q)?);
                }
            }
        }
    }
    Ok(KindOutput {
        header: vec!["model", "l", "q", "lower", "upper", "limit"],
        rows,
        fit: None,
        extra_warnings: Vec::new(),
    })
}

fn run_blockcheck(m: &ExperimentManifest) -> Result<KindOutput, CliError> {
    let block = m.block.as_ref().expect("validated");
    let qs = m.grid.q.clone().expect("validated");
    let tol = m
        .tolerances
        .clone()
        .unwrap_or_default()
        .discrepancy
        .unwrap_or(DEFAULT_DISCREPANCY_TOL);
    let predicate = match block.predicate.as_str() {
        "not-all-occupied" => BlockPredicate::NotAllOccupied,
        "all-empty" => BlockPredicate::AllEmpty,
        "first-site-empty" => BlockPredicate::FirstSiteEmpty,
        "mask-set" => BlockPredicate::MaskSet(block.masks.clone().expect("validated")),
        _ => unreachable!("validated"),
    };

    let mut rows = Vec::new();
    for (i, &q) in qs.iter().enumerate() {
        let spec = BlockChainSpec {
            n1: block.n1,
            n2: block.n2,
            q,
            predicate: predicate.clone(),
        };
        let check = block_gap_verify(&spec).map_err(spectral_err)?;
        let mut row = RowOut::plain(vec![
            block.n1.to_string(),
            block.n2.to_string(),
            fmt_f64(q),
            block.predicate.clone(),
            fmt_f64(check.mu_c1),
            fmt_f64(check.formula),
            fmt_f64(check.diagonalized),
            fmt_f64(check.discrepancy),
            check.states.to_string(),
        ]);
        if check.discrepancy > tol {
            let msg = format!(
                "row {i}: discrepancy {:.3e} above tolerance {tol:.3e}",
                check.discrepancy
            );
            row.warnings.push(msg.clone());
            row.numerical = Some(msg);
        }
        rows.push(row);
    }

    Ok(KindOutput {
        header: vec![
            "n1",
            "n2",
            "q",
            "predicate",
            "mu_c1",
            "formula",
            "diagonalized",
            "discrepancy",
            "states",
        ],
        rows,
        fit: None,
        extra_warnings: Vec::new(),
    })
}
