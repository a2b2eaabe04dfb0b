use super::{l1_norm, Coord, LatticeError, MAX_DIM};

/// A facilitation rule: site `x` may refresh iff some offset class, translated
/// to `x`, is entirely empty. Stored in canonical minimal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    name: String,
    dim: usize,
    classes: Vec<Vec<Coord>>,
    range: i64,
    cooperative: Option<bool>,
}

impl ModelSpec {
    /// Validates offsets and canonicalizes: each class sorted and deduped,
    /// classes that contain another class dropped (redundant by monotonicity),
    /// remaining classes sorted. An empty class means "always permitted".
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        classes: Vec<Vec<Coord>>,
        cooperative: Option<bool>,
    ) -> Result<Self, LatticeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LatticeError::BadDimension(dim));
        }
        let mut canon: Vec<Vec<Coord>> = Vec::with_capacity(classes.len());
        for class in classes {
            let mut c = class;
            for off in &c {
                if *off == [0; MAX_DIM] {
                    return Err(LatticeError::OriginInClass);
                }
                if off[dim..].iter().any(|&v| v != 0) {
                    return Err(LatticeError::OffAxisOffset(*off, dim));
                }
            }
            c.sort_unstable();
            c.dedup();
            canon.push(c);
        }
        // antichain reduction: keep only classes not containing another class
        let minimal: Vec<Vec<Coord>> = canon
            .iter()
            .filter(|a| {
                !canon
                    .iter()
                    .any(|b| b.len() < a.len() && b.iter().all(|o| a.contains(o)))
            })
            .cloned()
            .collect();
        let mut classes = minimal;
        classes.sort_unstable();
        classes.dedup();
        let range = classes
            .iter()
            .flatten()
            .map(l1_norm)
            .max()
            .unwrap_or(0);
        Ok(ModelSpec {
            name: name.into(),
            dim,
            classes,
            range,
            cooperative,
        })
    }

    /// d=1 chain where a site needs its right neighbor empty.
    pub fn east() -> Self {
        Self::new("east", 1, vec![vec![[1, 0, 0, 0]]], Some(true)).unwrap()
    }

    /// Facilitated model: at least `j` of the 2d nearest neighbors empty,
    /// stored as the j-subsets of the neighbor set.
    pub fn fa(dim: usize, j: u32) -> Result<Self, LatticeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LatticeError::BadDimension(dim));
        }
        let max = 2 * dim as u32;
        if j == 0 || j > max {
            return Err(LatticeError::BadFacilitation { j, max });
        }
        let neighbors: Vec<Coord> = (0..dim)
            .flat_map(|k| {
                let mut plus = [0i64; MAX_DIM];
                plus[k] = 1;
                let mut minus = [0i64; MAX_DIM];
                minus[k] = -1;
                [plus, minus]
            })
            .collect();
        let mut classes = Vec::new();
        for mask in 0u32..1 << neighbors.len() {
            if mask.count_ones() == j {
                classes.push(
                    (0..neighbors.len())
                        .filter(|&b| mask >> b & 1 == 1)
                        .map(|b| neighbors[b])
                        .collect(),
                );
            }
        }
        let cooperative = j >= 2;
        Self::new(format!("fa-{j}f"), dim, classes, Some(cooperative))
    }

    /// Per-axis facilitation: each axis must offer an empty neighbor on one
    /// side; stored as the 2^d sign-choice transversals.
    pub fn mb(dim: usize) -> Result<Self, LatticeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LatticeError::BadDimension(dim));
        }
        let mut classes = Vec::new();
        for signs in 0u32..1 << dim {
            let class: Vec<Coord> = (0..dim)
                .map(|k| {
                    let mut c = [0i64; MAX_DIM];
                    c[k] = if signs >> k & 1 == 1 { 1 } else { -1 };
                    c
                })
                .collect();
            classes.push(class);
        }
        // d=1 degenerates to single-neighbor facilitation, which is not cooperative
        Self::new("mb", dim, classes, Some(dim >= 2))
    }

    /// d=2 model requiring both the north and east neighbors empty.
    pub fn ne() -> Self {
        Self::new(
            "ne",
            2,
            vec![vec![[1, 0, 0, 0], [0, 1, 0, 0]]],
            Some(true),
        )
        .unwrap()
    }

    /// No constraint: every site may always refresh.
    pub fn unconstrained(dim: usize) -> Result<Self, LatticeError> {
        Self::new("unconstrained", dim, vec![vec![]], Some(false))
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        classes: Vec<Vec<Coord>>,
    ) -> Result<Self, LatticeError> {
        Self::new(name, dim, classes, None)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[Vec<Coord>] {
        &self.classes
    }

    /// Max l1 norm over all offsets.
    pub fn range(&self) -> i64 {
        self.range
    }

    /// Whether a bounded empty seed can never empty the whole lattice;
    /// None for custom rules (not classified automatically).
    pub fn cooperative(&self) -> Option<bool> {
        self.cooperative
    }

    /// True if some class is empty, i.e. the constraint is identically 1.
    pub fn always_free(&self) -> bool {
        self.classes.iter().any(|c| c.is_empty())
    }
}
