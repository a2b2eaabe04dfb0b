use super::{GeneratorMatrix, SpectralError};

/// Variance of `f` under the generator's stationary weights.
pub fn variance(gen: &GeneratorMatrix, f: &[f64]) -> f64 {
    assert_eq!(f.len(), gen.n_states());
    let mean: f64 = gen.mu().iter().zip(f).map(|(&m, &v)| m * v).sum();
    gen.mu()
        .iter()
        .zip(f)
        .map(|(&m, &v)| m * (v - mean) * (v - mean))
        .sum()
}

/// Quadratic form of the negated generator:
/// (1/2) sum_ij mu_i r_ij (f_j - f_i)^2.
pub fn dirichlet_form(gen: &GeneratorMatrix, f: &[f64]) -> f64 {
    assert_eq!(f.len(), gen.n_states());
    let mut acc = 0.0;
    for i in 0..gen.n_states() {
        let mu_i = gen.mu()[i];
        for (j, r) in gen.row(i) {
            let d = f[j] - f[i];
            acc += mu_i * r * d * d;
        }
    }
    0.5 * acc
}

/// Rayleigh quotient D(f)/Var(f); never below the gap of an ergodic chain.
pub fn variational_ratio(gen: &GeneratorMatrix, f: &[f64]) -> Result<f64, SpectralError> {
    let var = variance(gen, f);
    let scale = f.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if var <= (1e-14 * scale) * (1e-14 * scale) || var == 0.0 {
        return Err(SpectralError::ConstantFunction);
    }
    Ok(dirichlet_form(gen, f) / var)
}
