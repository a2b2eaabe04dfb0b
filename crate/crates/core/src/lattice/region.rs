use super::LatticeError;

/// Maximum supported dimension. Coordinates are fixed-width; unused axes are 0.
pub const MAX_DIM: usize = 4;

/// Hard cap on enumerable sites (bit-packed configs, closure queues).
pub const MAX_SITES: usize = 1 << 26;

/// Lattice coordinate. Axes beyond the region's dimension must be zero.
pub type Coord = [i64; MAX_DIM];

pub fn l1_norm(c: &Coord) -> i64 {
    c.iter().map(|v| v.abs()).sum()
}

pub fn shifted(c: &Coord, by: &Coord) -> Coord {
    let mut out = *c;
    for k in 0..MAX_DIM {
        out[k] += by[k];
    }
    out
}

/// Unit vector along `axis` (0-based).
pub fn unit_offset(axis: usize) -> Coord {
    debug_assert!(axis < MAX_DIM);
    let mut c = [0i64; MAX_DIM];
    c[axis] = 1;
    c
}

/// Axis-aligned box of sites `[origin_k, origin_k + sides_k)` per axis.
///
/// Site indices are row-major with the last axis fastest; this ordering is the
/// state-enumeration contract shared by every other module.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    dim: usize,
    origin: Coord,
    sides: [usize; MAX_DIM], // 1 for axes >= dim
}

impl Region {
    pub fn new(dim: usize, sides: &[usize]) -> Result<Self, LatticeError> {
        Self::with_origin(dim, sides, [0; MAX_DIM])
    }

    pub fn with_origin(dim: usize, sides: &[usize], origin: Coord) -> Result<Self, LatticeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LatticeError::BadDimension(dim));
        }
        if sides.len() != dim || sides.iter().any(|&s| s == 0) {
            return Err(LatticeError::EmptySide);
        }
        let mut padded = [1usize; MAX_DIM];
        padded[..dim].copy_from_slice(sides);
        let count: u128 = padded.iter().map(|&s| s as u128).product();
        if count > MAX_SITES as u128 {
            return Err(LatticeError::TooManySites(count));
        }
        Ok(Region {
            dim,
            origin,
            sides: padded,
        })
    }

    /// Cube of side `l` in dimension `d`, origin at zero.
    pub fn cube(dim: usize, l: usize) -> Result<Self, LatticeError> {
        Self::new(dim, &vec![l; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides[..self.dim]
    }

    pub fn origin(&self) -> &Coord {
        &self.origin
    }

    pub fn n_sites(&self) -> usize {
        self.sides.iter().product()
    }

    pub fn contains(&self, c: &Coord) -> bool {
        for k in 0..MAX_DIM {
            let rel = c[k] - self.origin[k];
            if rel < 0 || rel >= self.sides[k] as i64 {
                return false;
            }
        }
        true
    }

    pub fn index(&self, c: &Coord) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        let mut idx = 0usize;
        for k in 0..self.dim {
            idx = idx * self.sides[k] + (c[k] - self.origin[k]) as usize;
        }
        Some(idx)
    }

    pub fn coord(&self, mut idx: usize) -> Coord {
        debug_assert!(idx < self.n_sites());
        let mut c = self.origin;
        for k in (0..self.dim).rev() {
            c[k] += (idx % self.sides[k]) as i64;
            idx /= self.sides[k];
        }
        c
    }

    /// Coordinate with every axis at its maximum.
    pub fn max_corner(&self) -> Coord {
        let mut c = self.origin;
        for k in 0..self.dim {
            c[k] += self.sides[k] as i64 - 1;
        }
        c
    }

    /// Minimum l1 distance from `c` to the region (0 if inside).
    pub fn l1_distance(&self, c: &Coord) -> i64 {
        let mut d = 0;
        for k in 0..MAX_DIM {
            let lo = self.origin[k];
            let hi = self.origin[k] + self.sides[k] as i64 - 1;
            d += (lo - c[k]).max(c[k] - hi).max(0);
        }
        d
    }

    pub fn sites(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.n_sites()).map(|i| self.coord(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_coord_roundtrip() {
        let r = Region::new(3, &[2, 3, 4]).unwrap();
        assert_eq!(r.n_sites(), 24);
        for i in 0..r.n_sites() {
            let c = r.coord(i);
            assert_eq!(r.index(&c), Some(i));
        }
        // last axis fastest
        assert_eq!(r.coord(0), [0, 0, 0, 0]);
        assert_eq!(r.coord(1), [0, 0, 1, 0]);
        assert_eq!(r.coord(4), [0, 1, 0, 0]);
    }

    #[test]
    fn origin_offsets_respected() {
        let r = Region::with_origin(2, &[2, 2], [5, -3, 0, 0]).unwrap();
        assert!(r.contains(&[5, -3, 0, 0]));
        assert!(r.contains(&[6, -2, 0, 0]));
        assert!(!r.contains(&[7, -2, 0, 0]));
        assert_eq!(r.index(&[5, -2, 0, 0]), Some(1));
        assert_eq!(r.max_corner(), [6, -2, 0, 0]);
    }

    #[test]
    fn site_cap_enforced() {
        assert!(Region::new(2, &[1 << 13, 1 << 13]).is_ok());
        assert!(matches!(
            Region::new(2, &[1 << 14, 1 << 13]),
            Err(LatticeError::TooManySites(_))
        ));
        assert!(matches!(Region::new(0, &[]), Err(LatticeError::BadDimension(0))));
        assert!(matches!(Region::new(1, &[0]), Err(LatticeError::EmptySide)));
    }

    #[test]
    fn l1_distance_outside() {
        let r = Region::new(2, &[3, 3]).unwrap();
        assert_eq!(r.l1_distance(&[1, 1, 0, 0]), 0);
        assert_eq!(r.l1_distance(&[3, 2, 0, 0]), 1);
        assert_eq!(r.l1_distance(&[-2, 4, 0, 0]), 4);
    }
}
