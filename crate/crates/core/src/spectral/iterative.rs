use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{GeneratorMatrix, SpectralError};

/// Smallest nonzero eigenvalue of the negated symmetrized generator on a
/// connected component, by block inverse iteration with the exact kernel
/// vector deflated.
///
/// The kernel of the symmetrized operator is sqrt(mu), known in closed form,
/// so the iteration runs in its orthogonal complement: inner solves use
/// Jacobi-preconditioned conjugate gradients with the kernel projected out,
/// and a small Rayleigh-Ritz step orders the block. All reductions are
/// sequential, so results do not depend on worker count.
pub(crate) fn gap_iterative(
    gen: &GeneratorMatrix,
    tol: f64,
    max_outer: usize,
) -> Result<(f64, f64), SpectralError> {
    let n = gen.n_states();
    debug_assert!(n >= 2);
    let kernel = {
        let mut v: Vec<f64> = gen.mu().iter().map(|&m| m.sqrt()).collect();
        normalize(&mut v);
        v
    };
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / gen.exit_rate(i)).collect();
    let block = 3.min(n - 1);
    let mut rng = ChaCha12Rng::seed_from_u64(0x6a5e_ed00_0001);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut basis, &kernel, &mut rng);

    let mut best = (f64::INFINITY, f64::INFINITY);
    for _ in 0..max_outer {
        // inverse step: basis <- M^{-1} basis, restricted to the complement
        for col in basis.iter_mut() {
            *col = pcg(gen, col, &kernel, &inv_diag, 1e-8, 4 * n + 200);
        }
        orthonormalize(&mut basis, &kernel, &mut rng);
        // Rayleigh-Ritz on the block
        let mut images: Vec<Vec<f64>> = Vec::with_capacity(block);
        for col in &basis {
            let mut y = vec![0.0; n];
            gen.apply_neg_sym(col, &mut y);
            images.push(y);
        }
        let mut small = faer::Mat::<f64>::zeros(block, block);
        for a in 0..block {
            for b in 0..block {
                small[(a, b)] = dot(&basis[a], &images[b]);
            }
        }
        let evd = small
            .self_adjoint_eigen(faer::Side::Lower)
            .expect("block Rayleigh-Ritz");
        let theta = evd.S()[0];
        let rotated: Vec<Vec<f64>> = (0..block)
            .map(|k| {
                let mut v = vec![0.0; n];
                for (a, col) in basis.iter().enumerate() {
                    let w = evd.U()[(a, k)];
                    axpy(&mut v, w, col);
                }
                v
            })
            .collect();
        basis = rotated;
        // residual of the leading Ritz pair
        let mut mv = vec![0.0; n];
        gen.apply_neg_sym(&basis[0], &mut mv);
        let mut res = 0.0;
        for i in 0..n {
            let r = mv[i] - theta * basis[0][i];
            res += r * r;
        }
        let res = res.sqrt();
        if res < best.1 {
            best = (theta, res);
        }
        if res <= tol {
            return Ok((theta, res));
        }
    }
    Err(SpectralError::NoConvergence {
        residual: best.1,
        iters: max_outer,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

fn project_out(v: &mut [f64], unit: &[f64]) {
    let c = dot(v, unit);
    for (vi, ui) in v.iter_mut().zip(unit) {
        *vi -= c * ui;
    }
}

/// Modified Gram-Schmidt against the kernel and within the block; degenerate
/// columns are replaced by fresh random vectors.
fn orthonormalize(basis: &mut [Vec<f64>], kernel: &[f64], rng: &mut ChaCha12Rng) {
    let n = kernel.len();
    for k in 0..basis.len() {
        loop {
            project_out(&mut basis[k], kernel);
            for j in 0..k {
                let (head, tail) = basis.split_at_mut(k);
                project_out(&mut tail[0], &head[j]);
            }
            let norm = dot(&basis[k], &basis[k]).sqrt();
            if norm > 1e-12 {
                for x in basis[k].iter_mut() {
                    *x /= norm;
                }
                break;
            }
            basis[k] = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        }
    }
}

/// Jacobi-preconditioned CG for M y = rhs on the complement of the kernel.
fn pcg(
    gen: &GeneratorMatrix,
    rhs: &[f64],
    kernel: &[f64],
    inv_diag: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = rhs.len();
    let mut r = rhs.to_vec();
    project_out(&mut r, kernel);
    let rhs_norm = dot(&r, &r).sqrt();
    if rhs_norm == 0.0 {
        return vec![0.0; n];
    }
    let mut y = vec![0.0; n];
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    project_out(&mut z, kernel);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut w = vec![0.0; n];
    for it in 0..max_iter {
        gen.apply_neg_sym(&p, &mut w);
        let pw = dot(&p, &w);
        if pw <= 0.0 {
            break; // numerical breakdown; return current iterate
        }
        let alpha = rz / pw;
        axpy(&mut y, alpha, &p);
        axpy(&mut r, -alpha, &w);
        if it % 32 == 31 {
            project_out(&mut r, kernel);
        }
        if dot(&r, &r).sqrt() <= rel_tol * rhs_norm {
            break;
        }
        z = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
        project_out(&mut z, kernel);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    project_out(&mut y, kernel);
    y
}
