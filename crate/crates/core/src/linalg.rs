use nalgebra::{DMatrix, DVector};

/// Dense design matrix; with `intercept` a leading column of ones is added.
pub(crate) fn design<'a, I>(rows: I, d: usize, intercept: bool) -> DMatrix<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = rows.into_iter().collect();
    let off = usize::from(intercept);
    DMatrix::from_fn(rows.len(), d + off, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            rows[i][j - off]
        }
    })
}

/// Solve a symmetric positive (semi)definite system, adding a small ridge
/// to the diagonal if the plain Cholesky factorization fails.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        let sol = ch.solve(b);
        if sol.iter().all(|v| v.is_finite()) {
            return Some(sol);
        }
    }
    let scale = (a.trace() / a.nrows() as f64).abs().max(1e-300);
    let mut jitter = 1e-12 * scale;
    for _ in 0..8 {
        let mut a2 = a.clone();
        for i in 0..a2.nrows() {
            a2[(i, i)] += jitter;
        }
        if let Some(ch) = a2.cholesky() {
            let sol = ch.solve(b);
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol);
            }
        }
        jitter *= 100.0;
    }
    None
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
