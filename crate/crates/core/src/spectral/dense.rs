use faer::{Mat, Side};

use super::{GeneratorMatrix, SpectralError, DENSE_LIMIT};

fn neg_sym_dense(gen: &GeneratorMatrix) -> Result<Mat<f64>, SpectralError> {
    let n = gen.n_states();
    if n > DENSE_LIMIT {
        return Err(SpectralError::DenseTooLarge(n));
    }
    let s = (gen.q() * (1.0 - gen.q())).sqrt();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = gen.exit_rate(i);
        for (j, _) in gen.row(i) {
            m[(i, j)] = -s;
        }
    }
    Ok(m)
}

/// All eigenvalues of the negated symmetrized generator, ascending.
pub fn eigenvalues_neg_sym(gen: &GeneratorMatrix) -> Result<Vec<f64>, SpectralError> {
    let m = neg_sym_dense(gen)?;
    let vals = m
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("symmetric eigenvalue computation");
    Ok(vals)
}

/// Full eigendecomposition of the negated symmetrized generator:
/// eigenvalues ascending and the orthonormal eigenvector matrix.
pub fn eigenpairs_neg_sym(gen: &GeneratorMatrix) -> Result<(Vec<f64>, Mat<f64>), SpectralError> {
    let m = neg_sym_dense(gen)?;
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition");
    let n = gen.n_states();
    let vals: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Gap and achieved residual on an ergodic (connected) generator.
pub(crate) fn gap_dense(gen: &GeneratorMatrix) -> Result<(f64, f64), SpectralError> {
    let n = gen.n_states();
    let (vals, vecs) = eigenpairs_neg_sym(gen)?;
    let gap = vals[1];
    let v: Vec<f64> = (0..n).map(|i| vecs[(i, 1)]).collect();
    let mut mv = vec![0.0; n];
    gen.apply_neg_sym(&v, &mut mv);
    let residual = v
        .iter()
        .zip(&mv)
        .map(|(&vi, &mvi)| (mvi - gap * vi) * (mvi - gap * vi))
        .sum::<f64>()
        .sqrt();
    Ok((gap, residual))
}

/// Gap eigenvalue together with its eigenfunction in observable coordinates
/// (the symmetrized eigenvector divided by sqrt of the stationary weights),
/// normalized to unit variance. Ergodic generators only.
pub fn gap_eigenfunction(gen: &GeneratorMatrix) -> Result<(f64, Vec<f64>), SpectralError> {
    let n = gen.n_states();
    let (vals, vecs) = eigenpairs_neg_sym(gen)?;
    let f: Vec<f64> = (0..n)
        .map(|i| vecs[(i, 1)] / gen.mu()[i].sqrt())
        .collect();
    Ok((vals[1], f))
}
