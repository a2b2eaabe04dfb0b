use super::{LatticeError, SpinConfig};

/// Bernoulli site density: q = probability a site is empty, p = 1 - q derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityParams {
    q: f64,
}

impl DensityParams {
    pub fn new(q: f64) -> Result<Self, LatticeError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(LatticeError::BadDensity(q));
        }
        Ok(DensityParams { q })
    }

    pub fn q(self) -> f64 {
        self.q
    }

    pub fn p(self) -> f64 {
        1.0 - self.q
    }

    /// Product-measure weight p^{#occupied} q^{#empty}.
    pub fn weight(self, cfg: &SpinConfig) -> f64 {
        let n1 = cfg.count_occupied() as i32;
        let n0 = cfg.len() as i32 - n1;
        self.p().powi(n1) * self.q.powi(n0)
    }
}
