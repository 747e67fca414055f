//! Dense helpers shared by the model, bound and estimator modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a matrix is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Largest condition number accepted for a Gram matrix before inverting it.
pub const COND_LIMIT: f64 = 1e12;

/// Compact Householder factorization `B = Q R` with `Q` kept as a product of
/// reflectors, so the full `N x N` orthogonal factor never has to be stored.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    rows: usize,
    // reflector j acts on rows j..rows; stored as (v, tau) with v[0] = 1
    reflectors: Vec<(Vec<f64>, f64)>,
    r: DMatrix<f64>,
}

impl HouseholderQr {
    pub fn new(b: &DMatrix<f64>) -> Self {
        let (rows, cols) = b.shape();
        let steps = cols.min(rows);
        let mut work = b.clone();
        let mut reflectors = Vec::with_capacity(steps);
        for j in 0..steps {
            let x: Vec<f64> = (j..rows).map(|i| work[(i, j)]).collect();
            let (v, tau) = make_reflector(&x);
            apply_reflector(&mut work, j, &v, tau, j..cols);
            reflectors.push((v, tau));
        }
        let r = work.view((0, 0), (steps, cols)).upper_triangle();
        Self {
            rows,
            reflectors,
            r,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn rank_steps(&self) -> usize {
        self.reflectors.len()
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Overwrites `m` with `Q^T m`.
    pub fn apply_qt(&self, m: &mut DMatrix<f64>) {
        assert_eq!(m.nrows(), self.rows, "row count mismatch in apply_qt");
        let cols = m.ncols();
        for (j, (v, tau)) in self.reflectors.iter().enumerate() {
            apply_reflector(m, j, v, *tau, 0..cols);
        }
    }

    /// Overwrites `m` with `Q m`.
    pub fn apply_q(&self, m: &mut DMatrix<f64>) {
        assert_eq!(m.nrows(), self.rows, "row count mismatch in apply_q");
        let cols = m.ncols();
        for (j, (v, tau)) in self.reflectors.iter().enumerate().rev() {
            apply_reflector(m, j, v, *tau, 0..cols);
        }
    }

    /// Singular values of `R`, which coincide with those of the factored matrix.
    pub fn singular_values(&self) -> DVector<f64> {
        if self.r.is_empty() {
            return DVector::zeros(0);
        }
        self.r.clone().singular_values()
    }
}

fn make_reflector(x: &[f64]) -> (Vec<f64>, f64) {
    let alpha = x[0];
    let tail_sq: f64 = x[1..].iter().map(|t| t * t).sum();
    let mut v = x.to_vec();
    v[0] = 1.0;
    if tail_sq == 0.0 {
        // already in the desired form; a reflector with tau = 0 is the identity
        for t in v.iter_mut().skip(1) {
            *t = 0.0;
        }
        return (v, 0.0);
    }
    let norm = (alpha * alpha + tail_sq).sqrt();
    let beta = if alpha <= 0.0 { norm } else { -norm };
    let v0 = alpha - beta;
    for t in v.iter_mut().skip(1) {
        *t /= v0;
    }
    let tau = (beta - alpha) / beta;
    (v, tau)
}

fn apply_reflector(
    m: &mut DMatrix<f64>,
    start: usize,
    v: &[f64],
    tau: f64,
    cols: std::ops::Range<usize>,
) {
    if tau == 0.0 {
        return;
    }
    let rows = m.nrows();
    let data = m.as_mut_slice();
    for c in cols {
        let col = &mut data[c * rows + start..(c + 1) * rows];
        let s: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
        let s = tau * s;
        if s != 0.0 {
            for (a, b) in col.iter_mut().zip(v) {
                *a -= s * b;
            }
        }
    }
}

/// Checks that `b` has full column rank using the ratio of extreme singular values.
pub fn check_full_column_rank(singular_values: &DVector<f64>, expected: usize) -> Result<()> {
    if expected == 0 {
        return Ok(());
    }
    let max = singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let min = singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if singular_values.len() < expected || max == 0.0 {
        return Err(Error::RankDeficient {
            rank: 0,
            expected,
            ratio: 0.0,
        });
    }
    let ratio = min / max;
    if ratio <= RANK_TOL {
        let rank = singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * max)
            .count();
        return Err(Error::RankDeficient {
            rank,
            expected,
            ratio,
        });
    }
    Ok(())
}

/// `Tr{G^{-1}}` for a symmetric positive-definite Gram matrix, computed from its
/// eigenvalues with a condition-number guard.
pub fn spd_inverse_trace(gram: &DMatrix<f64>) -> Result<f64> {
    if !gram.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix must be square, got {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if gram.nrows() == 0 {
        return Ok(0.0);
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Gram matrix"));
    }
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond <= COND_LIMIT) {
        return Err(Error::IllConditioned {
            cond,
            limit: COND_LIMIT,
        });
    }
    Ok(eig.eigenvalues.iter().map(|l| 1.0 / l).sum())
}

/// Gathers the listed columns into a new matrix, preserving their order.
pub fn select_columns(h: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(h.nrows(), idx.len(), |i, j| h[(i, idx[j])])
}

/// Least-squares solution of `a x = y` through a Householder QR of `a`.
///
/// Fails with [`Error::RankDeficient`] when `a` has more columns than rows or
/// nearly collinear columns.
pub fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (rows, cols) = a.shape();
    if y.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, matrix has {rows} rows",
            y.len()
        )));
    }
    if cols == 0 {
        return Ok(DVector::zeros(0));
    }
    if cols > rows {
        return Err(Error::RankDeficient {
            rank: rows,
            expected: cols,
            ratio: 0.0,
        });
    }
    let qr = HouseholderQr::new(a);
    let r = qr.r();
    let diag_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    let diag_min = (0..cols)
        .map(|i| r[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    if diag_max == 0.0 || diag_min <= RANK_TOL * diag_max {
        let rank = (0..cols)
            .filter(|&i| r[(i, i)].abs() > RANK_TOL * diag_max)
            .count();
        return Err(Error::RankDeficient {
            rank,
            expected: cols,
            ratio: if diag_max > 0.0 { diag_min / diag_max } else { 0.0 },
        });
    }
    let mut rhs = DMatrix::from_column_slice(rows, 1, y.as_slice());
    qr.apply_qt(&mut rhs);
    let top = DVector::from_iterator(cols, rhs.column(0).iter().take(cols).cloned());
    r.solve_upper_triangular(&top)
        .ok_or(Error::NonFinite("triangular solve"))
}
