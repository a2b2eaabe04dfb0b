//! Closed-form asymptotic gap bounds for the built-in models. Each form has
//! unspecified positive constants that the caller supplies; the functions
//! here only evaluate the published shapes, they prove nothing about a
//! finite volume.

use std::f64::consts::PI;

use super::SpectralError;

/// Which bound family to evaluate, with its caller-supplied constants.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundForm {
    /// d=1 East chain: lower c_lower * q^(log2(1/q)/(2-delta)),
    /// upper c_upper * q^(log2(1/q)/2). `log_base` fixes the base used when
    /// reporting the small-q limit of log(1/gap)/log(1/q)^2.
    East {
        delta: f64,
        c_lower: f64,
        c_upper: f64,
        log_base: f64,
    },
    /// One-spin-facilitated model; the exponents depend on the dimension.
    Fa1f { d: usize, c: f64 },
    /// Two-spin-facilitated model in d=2: lower exp(-c_lower/q^5),
    /// upper exp(-(lambda - epsilon)/q).
    Fa2f {
        c_lower: f64,
        lambda: f64,
        epsilon: f64,
    },
    /// North-East model on an l-sided box: exp(-c1*l) .. exp(-c2*l).
    Ne { l: usize, c1: f64, c2: f64 },
}

impl BoundForm {
    pub fn east_default() -> Self {
        BoundForm::East {
            delta: 0.0,
            c_lower: 1.0,
            c_upper: 1.0,
            log_base: std::f64::consts::E,
        }
    }

    pub fn fa1f_default(d: usize) -> Self {
        BoundForm::Fa1f { d, c: 1.0 }
    }

    pub fn fa2f_default() -> Self {
        BoundForm::Fa2f {
            c_lower: 1.0,
            lambda: PI * PI / 18.0,
            epsilon: 0.0,
        }
    }

    pub fn ne_default(l: usize) -> Self {
        BoundForm::Ne { l, c1: 1.0, c2: 0.5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundForm::East { .. } => "east",
            BoundForm::Fa1f { .. } => "fa-1f",
            BoundForm::Fa2f { .. } => "fa-2f",
            BoundForm::Ne { .. } => "ne",
        }
    }
}

/// Evaluated bound pair at one density.
#[derive(Debug, Clone, Copy)]
pub struct BoundValues {
    pub lower: f64,
    pub upper: f64,
    /// East only: small-q limit of log(1/gap)/log(1/q)^2 in the requested
    /// log base (1/(2 ln 2) ~ 0.7213 for natural logs).
    pub limit_target: Option<f64>,
}

/// Evaluates `form` at density `q`.
pub fn bound_evaluate(form: &BoundForm, q: f64) -> Result<BoundValues, SpectralError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SpectralError::DegenerateDensity(q));
    }
    match *form {
        BoundForm::East {
            delta,
            c_lower,
            c_upper,
            log_base,
        } => {
            if !(0.0..1.0).contains(&delta) {
                return Err(SpectralError::InvalidConstant("east delta must lie in [0,1)"));
            }
            if c_lower <= 0.0 || c_upper <= 0.0 {
                return Err(SpectralError::InvalidConstant("east prefactors must be positive"));
            }
            if !(log_base > 1.0) {
                return Err(SpectralError::InvalidConstant("log base must exceed 1"));
            }
            let log2_inv_q = (1.0 / q).log2();
            Ok(BoundValues {
                lower: c_lower * q.powf(log2_inv_q / (2.0 - delta)),
                upper: c_upper * q.powf(log2_inv_q / 2.0),
                limit_target: Some(log_base.ln() / (2.0 * std::f64::consts::LN_2)),
            })
        }
        BoundForm::Fa1f { d, c } => {
            if d == 0 {
                return Err(SpectralError::InvalidConstant("fa-1f needs dimension >= 1"));
            }
            if c <= 0.0 {
                return Err(SpectralError::InvalidConstant("fa-1f prefactor must be positive"));
            }
            let (lower, upper) = match d {
                1 => (q.powi(3) / c, c * q.powi(3)),
                2 => (q.powi(2) / (c * (1.0 / q).ln()), c * q.powi(2)),
                _ => (q.powi(2) / c, c * q.powf(1.0 + 2.0 / d as f64)),
            };
            Ok(BoundValues {
                lower,
                upper,
                limit_target: None,
            })
        }
        BoundForm::Fa2f {
            c_lower,
            lambda,
            epsilon,
        } => {
            if c_lower <= 0.0 || lambda <= 0.0 || epsilon < 0.0 || epsilon >= lambda {
                return Err(SpectralError::InvalidConstant(
                    "fa-2f needs c_lower > 0 and 0 <= epsilon < lambda",
                ));
            }
            Ok(BoundValues {
                lower: (-c_lower / q.powi(5)).exp(),
                upper: (-(lambda - epsilon) / q).exp(),
                limit_target: None,
            })
        }
        BoundForm::Ne { l, c1, c2 } => {
            if l == 0 {
                return Err(SpectralError::InvalidConstant("ne needs a box side >= 1"));
            }
            if !(c1 >= c2 && c2 > 0.0) {
                return Err(SpectralError::InvalidConstant("ne needs c1 >= c2 > 0"));
            }
            Ok(BoundValues {
                lower: (-c1 * l as f64).exp(),
                upper: (-c2 * l as f64).exp(),
                limit_target: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn east_at_half_matches_hand_value() {
        let out = bound_evaluate(&BoundForm::east_default(), 0.5).unwrap();
        // q^(log2(2)/2) = sqrt(1/2)
        let expect = 0.5f64.sqrt();
        assert!((out.upper - expect).abs() < 1e-15);
        assert!((out.lower - expect).abs() < 1e-15, "delta = 0 collapses the forms");
        assert!((out.limit_target.unwrap() - 0.7213475204444817).abs() < 1e-15);
    }

    #[test]
    fn east_limit_target_tracks_log_base() {
        let form = BoundForm::East {
            delta: 0.0,
            c_lower: 1.0,
            c_upper: 1.0,
            log_base: 2.0,
        };
        let out = bound_evaluate(&form, 0.3).unwrap();
        assert!((out.limit_target.unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fa1f_exponents_by_dimension() {
        let q = 0.2f64;
        let d1 = bound_evaluate(&BoundForm::fa1f_default(1), q).unwrap();
        assert!((d1.lower - 0.008).abs() < 1e-15);
        assert!((d1.upper - 0.008).abs() < 1e-15);
        let d2 = bound_evaluate(&BoundForm::fa1f_default(2), q).unwrap();
        assert!((d2.upper - 0.04).abs() < 1e-15);
        assert!((d2.lower - 0.04 / (5.0f64).ln()).abs() < 1e-15);
        let d3 = bound_evaluate(&BoundForm::fa1f_default(3), q).unwrap();
        assert!((d3.upper - q.powf(5.0 / 3.0)).abs() < 1e-15);
        assert!((d3.lower - 0.04).abs() < 1e-15);
    }

    #[test]
    fn fa2f_shape() {
        let out = bound_evaluate(&BoundForm::fa2f_default(), 0.5).unwrap();
        assert!((out.lower - (-32.0f64).exp()).abs() < 1e-25);
        let lambda = PI * PI / 18.0;
        assert!((out.upper - (-lambda / 0.5).exp()).abs() < 1e-15);
    }

    #[test]
    fn ne_is_exponential_in_side() {
        let out = bound_evaluate(&BoundForm::ne_default(3), 0.1).unwrap();
        assert!((out.lower - (-3.0f64).exp()).abs() < 1e-15);
        assert!((out.upper - (-1.5f64).exp()).abs() < 1e-15);
        assert!(out.lower <= out.upper);
    }

    #[test]
    fn constants_are_validated() {
        assert!(bound_evaluate(&BoundForm::east_default(), 0.0).is_err());
        assert!(bound_evaluate(
            &BoundForm::East {
                delta: 1.0,
                c_lower: 1.0,
                c_upper: 1.0,
                log_base: std::f64::consts::E
            },
            0.3
        )
        .is_err());
        assert!(bound_evaluate(&BoundForm::Fa1f { d: 0, c: 1.0 }, 0.3).is_err());
        assert!(bound_evaluate(&BoundForm::Ne { l: 2, c1: 0.5, c2: 1.0 }, 0.3).is_err());
    }
}
