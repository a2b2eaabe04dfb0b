use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::{BoundaryCondition, Coord, HaloFill, LatticeError, ModelSpec, Region, MAX_DIM};

/// JSON description of a facilitation rule.
///
/// Built-in tags: `east`, `fa` (with `j`), `mb`, `ne`, `unconstrained`;
/// `custom` supplies explicit offset classes as integer vectors.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub model: String,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<Vec<Vec<i64>>>>,
}

fn parse_coord(v: &[i64], dim: usize) -> Result<Coord, LatticeError> {
    if v.len() != dim || dim > MAX_DIM {
        return Err(LatticeError::BadCoordLen(v.to_vec(), dim));
    }
    let mut c = [0i64; MAX_DIM];
    c[..dim].copy_from_slice(v);
    Ok(c)
}

impl ModelJson {
    pub fn build(&self) -> Result<ModelSpec, LatticeError> {
        match self.model.as_str() {
            "east" => {
                if self.d != 1 {
                    return Err(LatticeError::BadDimension(self.d));
                }
                Ok(ModelSpec::east())
            }
            "fa" => ModelSpec::fa(self.d, self.j.unwrap_or(1)),
            "mb" => ModelSpec::mb(self.d),
            "ne" => {
                if self.d != 2 {
                    return Err(LatticeError::BadDimension(self.d));
                }
                Ok(ModelSpec::ne())
            }
            "unconstrained" => ModelSpec::unconstrained(self.d),
            "custom" => {
                let classes = self.classes.as_ref().ok_or(LatticeError::MissingClasses)?;
                let parsed = classes
                    .iter()
                    .map(|class| {
                        class
                            .iter()
                            .map(|off| parse_coord(off, self.d))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ModelSpec::custom("custom", self.d, parsed)
            }
            other => Err(LatticeError::UnknownModel(other.to_string())),
        }
    }

    pub fn east() -> Self {
        ModelJson {
            model: "east".into(),
            d: 1,
            j: None,
            classes: None,
        }
    }

    pub fn fa(d: usize, j: u32) -> Self {
        ModelJson {
            model: "fa".into(),
            d,
            j: Some(j),
            classes: None,
        }
    }
}

/// JSON description of a boundary condition, tagged by `mode`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", deny_unknown_fields)]
pub enum BcJson {
    /// `fill` is "occupied" (default) or "empty"; `empty_sites` lists
    /// exterior coordinates that override an occupied fill.
    #[serde(rename = "frozen-halo")]
    FrozenHalo {
        #[serde(default = "default_fill")]
        fill: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        empty_sites: Vec<Vec<i64>>,
    },
    /// Single empty exterior site; defaults to one step along the first axis
    /// from the region's maximum corner.
    #[serde(rename = "minimal-empty")]
    MinimalEmpty {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        site: Option<Vec<i64>>,
    },
    #[serde(rename = "restricted-component")]
    Restricted {},
}

fn default_fill() -> String {
    "occupied".into()
}

impl BcJson {
    pub fn build(&self, region: &Region) -> Result<BoundaryCondition, LatticeError> {
        match self {
            BcJson::FrozenHalo { fill, empty_sites } => {
                if !empty_sites.is_empty() {
                    let set: BTreeSet<Coord> = empty_sites
                        .iter()
                        .map(|v| parse_coord(v, region.dim()))
                        .collect::<Result<_, _>>()?;
                    return Ok(BoundaryCondition::FrozenHalo(HaloFill::Custom(set)));
                }
                match fill.as_str() {
                    "occupied" => Ok(BoundaryCondition::occupied_halo()),
                    "empty" => Ok(BoundaryCondition::empty_halo()),
                    other => Err(LatticeError::UnknownModel(format!("halo fill {other:?}"))),
                }
            }
            BcJson::MinimalEmpty { site } => match site {
                Some(v) => Ok(BoundaryCondition::MinimalEmpty(parse_coord(
                    v,
                    region.dim(),
                )?)),
                None => Ok(BoundaryCondition::minimal_empty_default(region)),
            },
            BcJson::Restricted {} => Ok(BoundaryCondition::Restricted),
        }
    }

    pub fn occupied_halo() -> Self {
        BcJson::FrozenHalo {
            fill: default_fill(),
            empty_sites: Vec::new(),
        }
    }
}
