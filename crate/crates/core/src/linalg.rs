use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// Solves `(A + ridge I) x = b` for symmetric positive definite `A`, or
/// `None` when the Cholesky factorization fails.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>, ridge: f64) -> Option<DVector<f64>> {
    let mut m = a.clone();
    if ridge != 0.0 {
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
    }
    let chol = m.cholesky()?;
    let x = chol.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Per-column flag: true when every row holds the same value.
pub(crate) fn constant_columns(rows: &[&[f64]], p: usize) -> Vec<bool> {
    (0..p)
        .map(|j| {
            let first = rows[0][j];
            rows.iter().all(|r| r[j] == first)
        })
        .collect()
}

/// True when the columns `cols`, centered, are linearly independent to
/// working precision (smallest correlation-matrix eigenvalue above 1e-10).
pub(crate) fn full_rank(rows: &[&[f64]], cols: &[usize]) -> bool {
    let k = cols.len();
    if k == 0 {
        return true;
    }
    let n = rows.len() as f64;
    let means: Vec<f64> = cols
        .iter()
        .map(|&j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for r in rows {
        for a in 0..k {
            let da = r[cols[a]] - means[a];
            for b in 0..=a {
                gram[(a, b)] += da * (r[cols[b]] - means[b]);
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let scale: Vec<f64> = (0..k).map(|a| libm::sqrt(gram[(a, a)])).collect();
    if scale.iter().any(|&s| !(s > 0.0)) {
        return false;
    }
    for a in 0..k {
        for b in 0..k {
            gram[(a, b)] /= scale[a] * scale[b];
        }
    }
    // Smallest eigenvalue of the correlation matrix.
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min) > 1e-10
}
