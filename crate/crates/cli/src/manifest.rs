//! Experiment manifests: one JSON document pins the experiment kind, the
//! model, the parameter grids, and the seed. A canonical hash of that
//! document identifies reruns of the same experiment independently of key
//! order or float spelling in the source file.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt;

use kcsm_core::lattice::{BcJson, ModelJson};

use crate::CliError;

/// Current manifest schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Experiment families the driver can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Gap,
    Bootstrap,
    Kmc,
    Persistence,
    Perc,
    Bound,
    Blockcheck,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Gap => "gap",
            Kind::Bootstrap => "bootstrap",
            Kind::Kmc => "kmc",
            Kind::Persistence => "persistence",
            Kind::Perc => "perc",
            Kind::Bound => "bound",
            Kind::Blockcheck => "blockcheck",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameter grids. Which fields a kind reads is documented per field;
/// setting one the kind does not read is a validation error, so typos fail
/// loudly instead of being ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Vacancy densities in (0,1). Read by every kind except `perc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    /// Cube sides (`gap`, `bootstrap`), the single cube side (`kmc`,
    /// `persistence`), slab depths (`perc`), or the box side of the
    /// per-side bound family (`bound` with the oriented model).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<usize>>,
    /// Explicit per-axis side lists; `gap` only, mutually exclusive with `l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<Vec<usize>>>,
    /// Site-occupation probabilities in [0,1]; `perc` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    /// Largest observation time; `kmc` and `persistence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// First observation time; defaults to `t_max / 100`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    /// Geometric spacing of the time grid; defaults to 1.25.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    /// Monte Carlo sample count; `bootstrap`, `kmc`, `persistence`, `perc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
}

/// Tolerance overrides. Absent fields keep the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest acceptable eigenpair residual before the run counts as a
    /// numerical failure (`gap`; default 1e-8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Eigensolver target tolerance (`gap`; default 1e-10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<f64>,
    /// Largest acceptable closed-form vs diagonalization discrepancy
    /// (`blockcheck`; default 1e-8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
}

/// Constants of the closed-form gap bounds (`bound` kind). Every field is
/// optional; the defaults are the unit-constant conventions of the library.
/// Setting a constant the selected form does not use is a validation error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConstants {
    /// East: exponent shift in the lower form, in [0,1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// East: lower prefactor. Also the two-spin form's lower exponent scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_lower: Option<f64>,
    /// East: upper prefactor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_upper: Option<f64>,
    /// East: base used when reporting the small-q exponent target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_base: Option<f64>,
    /// One-spin form: prefactor used on both sides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Two-spin form: upper exponent scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Two-spin form: subtracted slack in the upper exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Oriented model: lower exponential rate per side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Oriented model: upper exponential rate per side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
}

/// Two-block auxiliary chain description (`blockcheck` kind).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockJson {
    /// Spins in the gated block.
    pub n1: u32,
    /// Spins in the gating block.
    pub n2: u32,
    /// Gate event: `not-all-occupied`, `all-empty`, `first-site-empty`, or
    /// `mask-set` (which requires `masks`).
    pub predicate: String,
    /// Explicit gating-block configurations for `mask-set`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<Vec<u64>>,
}

/// A fully parsed experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    pub kind: Kind,
    /// Facilitation rule; required by every kind except `perc` and
    /// `blockcheck`, which must omit it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelJson>,
    /// Boundary condition; `gap`, `kmc`, and `persistence` only. Defaults
    /// to the all-occupied frozen halo.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bc: Option<BcJson>,
    pub grid: GridSpec,
    /// Base seed; per-row streams are derived from it. The `--seed` flag
    /// overrides it before hashing.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the `--out` flag overrides it. Not part of the
    /// manifest hash: where results land does not change what was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    /// Bound-form constants; `bound` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<BoundConstants>,
    /// Two-block chain description; `blockcheck` only (required there).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockJson>,
}

impl ExperimentManifest {
    /// Parses a manifest, rejecting unknown keys anywhere in the document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("manifest: {e}")))
    }

    /// Canonical JSON: serde maps sort keys, so serializing the parsed
    /// document normalizes key order and number spelling. The `out` field
    /// is dropped first — it names a destination, not an experiment.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        if let Value::Object(map) = &mut v {
            map.remove("out");
        }
        v.to_string()
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks schema version, field applicability, and value domains.
    /// Everything caught here is a validation failure (exit code 2).
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_inner().map_err(CliError::Validation)
    }

    fn validate_inner(&self) -> Result<(), String> {
        if self.schema != SCHEMA_VERSION {
            return Err(format!(
                "schema version {} unsupported; this build reads {SCHEMA_VERSION}",
                self.schema
            ));
        }
        self.check_field_applicability()?;
        self.check_grid()?;
        if let Some(model) = &self.model {
            model
                .build()
                .map_err(|e| format!("model: {e}"))?;
        }
        if self.kind == Kind::Bound {
            crate::runner::bound_form_for(self)
                .map_err(|e| format!("{e}"))
                .map(|_| ())?;
        }
        if self.kind == Kind::Blockcheck {
            let block = self.block.as_ref().expect("checked present");
            validate_block(block)?;
        }
        if let Some(t) = &self.tolerances {
            for (name, v) in [
                ("residual", t.residual),
                ("solver", t.solver),
                ("discrepancy", t.discrepancy),
            ] {
                if let Some(v) = v {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(format!("tolerances.{name} must be positive, got {v}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Rejects top-level fields that the kind does not read.
    fn check_field_applicability(&self) -> Result<(), String> {
        let kind = self.kind;
        let model_used = !matches!(kind, Kind::Perc | Kind::Blockcheck);
        if model_used && self.model.is_none() {
            return Err(format!("kind `{kind}` requires a `model`"));
        }
        if !model_used && self.model.is_some() {
            return Err(format!("kind `{kind}` does not read `model`"));
        }
        let bc_used = matches!(kind, Kind::Gap | Kind::Kmc | Kind::Persistence);
        if !bc_used && self.bc.is_some() {
            return Err(format!("kind `{kind}` does not read `bc`"));
        }
        let tol_used = matches!(kind, Kind::Gap | Kind::Blockcheck);
        if !tol_used && self.tolerances.is_some() {
            return Err(format!("kind `{kind}` does not read `tolerances`"));
        }
        if kind != Kind::Bound && self.constants.is_some() {
            return Err(format!("kind `{kind}` does not read `constants`"));
        }
        if kind == Kind::Blockcheck {
            if self.block.is_none() {
                return Err("kind `blockcheck` requires a `block` description".into());
            }
        } else if self.block.is_some() {
            return Err(format!("kind `{kind}` does not read `block`"));
        }
        Ok(())
    }

    fn check_grid(&self) -> Result<(), String> {
        let g = &self.grid;
        let kind = self.kind;

        // per-kind masks over the grid fields, in declaration order:
        // q, l, sides, p, t_max, t_min, factor, n_samples
        let set = [
            ("q", g.q.is_some()),
            ("l", g.l.is_some()),
            ("sides", g.sides.is_some()),
            ("p", g.p.is_some()),
            ("t_max", g.t_max.is_some()),
            ("t_min", g.t_min.is_some()),
            ("factor", g.factor.is_some()),
            ("n_samples", g.n_samples.is_some()),
        ];
        let allowed: &[&str] = match kind {
            Kind::Gap => &["q", "l", "sides"],
            Kind::Bootstrap => &["q", "l", "n_samples"],
            Kind::Kmc | Kind::Persistence => {
                &["q", "l", "t_max", "t_min", "factor", "n_samples"]
            }
            Kind::Perc => &["p", "l", "n_samples"],
            Kind::Bound => &["q", "l"],
            Kind::Blockcheck => &["q"],
        };
        for (name, is_set) in set {
            if is_set && !allowed.contains(&name) {
                return Err(format!("grid.{name} is not read by kind `{kind}`"));
            }
        }

        let need_q = kind != Kind::Perc;
        if need_q {
            let q = g.q.as_deref().unwrap_or(&[]);
            if q.is_empty() {
                return Err(format!("kind `{kind}` needs a nonempty grid.q"));
            }
            for &v in q {
                if !(v > 0.0 && v < 1.0) {
                    return Err(format!("grid.q value {v} outside (0,1)"));
                }
            }
        }
        match kind {
            Kind::Gap => {
                let have_l = g.l.as_ref().is_some_and(|l| !l.is_empty());
                let have_sides = g.sides.as_ref().is_some_and(|s| !s.is_empty());
                if have_l == have_sides {
                    return Err("gap needs exactly one of grid.l or grid.sides, nonempty".into());
                }
                let d = self.model.as_ref().and_then(|m| m.build().ok().map(|m| m.dim()));
                if let (Some(d), Some(sides)) = (d, &g.sides) {
                    for s in sides {
                        if s.len() != d {
                            return Err(format!(
                                "grid.sides entry {s:?} has {} axes; model is {d}-dimensional",
                                s.len()
                            ));
                        }
                        if s.iter().any(|&x| x == 0) {
                            return Err("grid.sides entries must be positive".into());
                        }
                    }
                }
                if let Some(l) = &g.l {
                    if l.iter().any(|&x| x == 0) {
                        return Err("grid.l entries must be positive".into());
                    }
                }
            }
            Kind::Bootstrap => {
                let l = g.l.as_deref().unwrap_or(&[]);
                if l.is_empty() || l.iter().any(|&x| x == 0) {
                    return Err("bootstrap needs a nonempty grid.l of positive sides".into());
                }
                need_samples(g)?;
            }
            Kind::Kmc | Kind::Persistence => {
                let l = g.l.as_deref().unwrap_or(&[]);
                if l.len() != 1 || l[0] == 0 {
                    return Err(format!(
                        "kind `{kind}` needs grid.l with exactly one positive side (the output has no side column)"
                    ));
                }
                let q = g.q.as_deref().unwrap_or(&[]);
                if q.len() != 1 {
                    return Err(format!(
                        "kind `{kind}` needs grid.q with exactly one density (the output has no q column)"
                    ));
                }
                let t_max = g.t_max.ok_or("missing grid.t_max")?;
                if !(t_max.is_finite() && t_max > 0.0) {
                    return Err(format!("grid.t_max must be positive, got {t_max}"));
                }
                if let Some(t_min) = g.t_min {
                    if !(t_min.is_finite() && t_min > 0.0 && t_min < t_max) {
                        return Err(format!("grid.t_min must lie in (0, t_max), got {t_min}"));
                    }
                }
                if let Some(f) = g.factor {
                    if !(f.is_finite() && f > 1.0) {
                        return Err(format!("grid.factor must exceed 1, got {f}"));
                    }
                }
                need_samples(g)?;
            }
            Kind::Perc => {
                let p = g.p.as_deref().unwrap_or(&[]);
                if p.is_empty() {
                    return Err("perc needs a nonempty grid.p".into());
                }
                for &v in p {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(format!("grid.p value {v} outside [0,1]"));
                    }
                }
                let l = g.l.as_deref().unwrap_or(&[]);
                if l.is_empty() || l.iter().any(|&x| x == 0) {
                    return Err("perc needs a nonempty grid.l of positive depths".into());
                }
                need_samples(g)?;
            }
            Kind::Bound | Kind::Blockcheck => {}
        }
        Ok(())
    }

    /// Sides of the time grid for `kmc`/`persistence`, with defaults filled.
    pub fn time_grid_params(&self) -> (f64, f64, f64) {
        let t_max = self.grid.t_max.unwrap_or(1.0);
        let t_min = self.grid.t_min.unwrap_or(t_max / 100.0);
        let factor = self.grid.factor.unwrap_or(1.25);
        (t_min, t_max, factor)
    }
}

fn need_samples(g: &GridSpec) -> Result<(), String> {
    match g.n_samples {
        Some(n) if n >= 1 => Ok(()),
        Some(n) => Err(format!("grid.n_samples must be at least 1, got {n}")),
        None => Err("missing grid.n_samples".into()),
    }
}

fn validate_block(block: &BlockJson) -> Result<(), String> {
    if block.n1 == 0 || block.n2 == 0 {
        return Err("block.n1 and block.n2 must be at least 1".into());
    }
    if block.n1 + block.n2 > 14 {
        return Err(format!(
            "block has {} spins; diagonalization is capped at 14",
            block.n1 + block.n2
        ));
    }
    match block.predicate.as_str() {
        "not-all-occupied" | "all-empty" | "first-site-empty" => {
            if block.masks.is_some() {
                return Err(format!(
                    "block.masks only applies to predicate `mask-set`, not `{}`",
                    block.predicate
                ));
            }
            Ok(())
        }
        "mask-set" => {
            let masks = block
                .masks
                .as_ref()
                .ok_or("predicate `mask-set` requires block.masks")?;
            if masks.is_empty() {
                return Err("block.masks must be nonempty".into());
            }
            let cap = 1u64 << block.n2;
            if let Some(&m) = masks.iter().find(|&&m| m >= cap) {
                return Err(format!(
                    "block mask {m} does not fit the {}-spin gating block",
                    block.n2
                ));
            }
            Ok(())
        }
        other => Err(format!(
            "unknown block predicate `{other}`; expected not-all-occupied, all-empty, first-site-empty, or mask-set"
        )),
    }
}
