//! Sparse recovery on a (possibly deflated) linear system `y = H x + n`.
//!
//! Columns of `H` with negligible norm are never selected. After deflation
//! the interfering atoms collapse to zero columns, so greedy methods skip
//! them instead of fitting them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, select_columns};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    pub x_hat: DVector<f64>,
    pub support: Vec<usize>,
    pub iterations: usize,
    pub residual_norm: f64,
}

impl SparseEstimate {
    fn from_support(
        h: &DMatrix<f64>,
        y: &DVector<f64>,
        support: Vec<usize>,
        values: &DVector<f64>,
        iterations: usize,
    ) -> Self {
        let mut x_hat = DVector::zeros(h.ncols());
        for (&i, &v) in support.iter().zip(values.iter()) {
            x_hat[i] = v;
        }
        let residual_norm = (y - h * &x_hat).norm();
        Self {
            x_hat,
            support,
            iterations,
            residual_norm,
        }
    }

    fn zero(k: usize, y: &DVector<f64>) -> Self {
        Self {
            x_hat: DVector::zeros(k),
            support: Vec::new(),
            iterations: 0,
            residual_norm: y.norm(),
        }
    }

    /// Entries of `x_hat` at `indices`; missed atoms read as zero.
    pub fn restrict(&self, indices: &[usize]) -> DVector<f64> {
        DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.x_hat[i]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub sparsity: usize,
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub debias: bool,
}

impl SolverOptions {
    pub fn omp(sparsity: usize) -> Self {
        Self {
            sparsity,
            lambda: 0.0,
            max_iters: 500,
            tol: 1e-8,
            debias: false,
        }
    }

    pub fn cosamp(sparsity: usize) -> Self {
        Self {
            sparsity,
            lambda: 0.0,
            max_iters: 500,
            tol: 1e-6,
            debias: false,
        }
    }

    pub fn bpdn(lambda: f64) -> Self {
        Self {
            sparsity: 1,
            lambda,
            max_iters: 500,
            tol: 1e-6,
            debias: true,
        }
    }

    /// Universal threshold `sigma * sqrt(2 ln K)`.
    pub fn universal_lambda(noise_std: f64, k: usize) -> f64 {
        noise_std * (2.0 * (k as f64).ln()).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

fn check_system(h: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if h.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} rows, observation has length {}",
            h.nrows(),
            y.len()
        )));
    }
    if h.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solver input"));
    }
    Ok(())
}

/// Column norms, with negligible columns reported as zero.
fn active_norms(h: &DMatrix<f64>) -> Vec<f64> {
    let norms: Vec<f64> = h.column_iter().map(|c| c.norm()).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    norms
        .into_iter()
        .map(|n| if n > 1e-10 * max { n } else { 0.0 })
        .collect()
}

/// Indices of the `count` largest scores, ties to the lowest index. Zero
/// scores are never picked.
fn top_indices(scores: &[f64], count: usize, exclude: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len())
        .filter(|i| scores[*i] > 0.0 && !exclude.contains(i))
        .collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// One greedy step of OMP.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpStep {
    pub selected: usize,
    pub residual_norm: f64,
    /// Largest `|h_j^T r|` over the selected columns after the refit.
    pub max_selected_correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpPath {
    pub estimate: SparseEstimate,
    pub steps: Vec<OmpStep>,
}

/// Orthogonal matching pursuit.
pub fn omp(h: &DMatrix<f64>, y: &DVector<f64>, opts: &SolverOptions) -> Result<SparseEstimate> {
    omp_path(h, y, opts).map(|p| p.estimate)
}

/// OMP returning every intermediate step alongside the estimate.
pub fn omp_path(h: &DMatrix<f64>, y: &DVector<f64>, opts: &SolverOptions) -> Result<OmpPath> {
    opts.validate()?;
    check_system(h, y)?;
    if opts.sparsity > h.nrows().min(h.ncols()) {
        return Err(Error::InvalidArgument(format!(
            "sparsity {} exceeds min(rows, cols) = {}",
            opts.sparsity,
            h.nrows().min(h.ncols())
        )));
    }
    let norms = active_norms(h);
    let y_norm = y.norm();
    let mut support: Vec<usize> = Vec::with_capacity(opts.sparsity);
    let mut coef = DVector::zeros(0);
    let mut residual = y.clone();
    let mut steps = Vec::with_capacity(opts.sparsity);
    while support.len() < opts.sparsity {
        if residual.norm() <= opts.tol * y_norm {
            break;
        }
        let corr = h.tr_mul(&residual);
        let mut best = None;
        let mut best_score = 0.0;
        for (j, (&c, &n)) in corr.iter().zip(&norms).enumerate() {
            if n == 0.0 || support.contains(&j) {
                continue;
            }
            let score = c.abs() / n;
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        support.push(j);
        let sub = select_columns(h, &support);
        coef = lstsq(&sub, y)?;
        residual = y - &sub * &coef;
        let after = h.tr_mul(&residual);
        steps.push(OmpStep {
            selected: j,
            residual_norm: residual.norm(),
            max_selected_correlation: support.iter().map(|&i| after[i].abs()).fold(0.0, f64::max),
        });
    }
    let iterations = steps.len();
    Ok(OmpPath {
        estimate: SparseEstimate::from_support(h, y, support, &coef, iterations),
        steps,
    })
}

/// Compressive sampling matching pursuit.
pub fn cosamp(h: &DMatrix<f64>, y: &DVector<f64>, opts: &SolverOptions) -> Result<SparseEstimate> {
    opts.validate()?;
    check_system(h, y)?;
    let (rows, k) = h.shape();
    let s = opts.sparsity;
    if s > rows.min(k) {
        return Err(Error::InvalidArgument(format!(
            "sparsity {s} exceeds min(rows, cols) = {}",
            rows.min(k)
        )));
    }
    if 3 * s > rows {
        log::warn!("CoSaMP with sparsity {s} on {rows} rows: merged supports will be capped");
    }
    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Ok(SparseEstimate::zero(k, y));
    }
    let norms = active_norms(h);
    let mut support: Vec<usize> = Vec::new();
    let mut values = DVector::zeros(0);
    let mut residual = y.clone();
    let mut prev = y_norm;
    let mut iterations = 0;
    for it in 1..=opts.max_iters {
        iterations = it;
        let proxy = h.tr_mul(&residual);
        let scores: Vec<f64> = proxy
            .iter()
            .zip(&norms)
            .map(|(p, &n)| if n > 0.0 { p.abs() } else { 0.0 })
            .collect();
        let fresh = top_indices(&scores, 2 * s, &support);
        // the merged least-squares problem must stay overdetermined
        let room = rows.saturating_sub(support.len());
        let mut merged: Vec<usize> = support.iter().copied().chain(fresh.into_iter().take(room)).collect();
        merged.sort_unstable();
        if merged.is_empty() {
            break;
        }
        let b = lstsq(&select_columns(h, &merged), y)?;
        let mags: Vec<f64> = b.iter().map(|v| v.abs()).collect();
        let mut keep = top_indices(&mags, s, &[]);
        keep.sort_unstable();
        let next_support: Vec<usize> = keep.iter().map(|&i| merged[i]).collect();
        let next_values = DVector::from_iterator(keep.len(), keep.iter().map(|&i| b[i]));
        let next_residual = y - select_columns(h, &next_support) * &next_values;
        let norm = next_residual.norm();
        if it > 1 && norm >= prev {
            // cycling: keep the previous, better iterate
            break;
        }
        support = next_support;
        values = next_values;
        residual = next_residual;
        if norm <= opts.tol * y_norm || prev - norm <= opts.tol * prev {
            break;
        }
        prev = norm;
    }
    Ok(SparseEstimate::from_support(h, y, support, &values, iterations))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Largest eigenvalue of `H^T H` by power iteration.
pub fn lipschitz_estimate(h: &DMatrix<f64>) -> f64 {
    let k = h.ncols();
    if k == 0 || h.nrows() == 0 {
        return 0.0;
    }
    // deterministic start with no special alignment
    let mut v = DVector::from_fn(k, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7548776662).sin());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..1000 {
        let w = h.tr_mul(&(h * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - est).abs() <= 1e-10 * next {
            return next;
        }
        est = next;
    }
    est
}

fn lasso_objective(h: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * (y - h * x).norm_squared() + lambda * x.lp_norm(1)
}

/// Subgradient optimality residual of the lasso at `x`.
pub fn kkt_residual(h: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
    let g = h.tr_mul(&(y - h * x));
    g.iter()
        .zip(x.iter())
        .map(|(&gi, &xi)| {
            if xi != 0.0 {
                (gi - lambda * xi.signum()).abs()
            } else {
                (gi.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Basis pursuit denoising: minimizes `0.5 ||y - H x||^2 + lambda ||x||_1`
/// by monotone accelerated proximal gradient with restart.
pub fn bpdn(h: &DMatrix<f64>, y: &DVector<f64>, opts: &SolverOptions) -> Result<SparseEstimate> {
    if !(opts.lambda >= 0.0) || !opts.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and non-negative, got {}",
            opts.lambda
        )));
    }
    check_system(h, y)?;
    let k = h.ncols();
    let lambda = opts.lambda;
    let hty = h.tr_mul(y);
    let corr_max = hty.amax();
    if lambda >= corr_max || k == 0 {
        return Ok(SparseEstimate::zero(k, y));
    }
    let kkt_tol = 10.0 * opts.tol * if lambda > 0.0 { lambda } else { corr_max };
    let mut lip = lipschitz_estimate(h) * 1.01;

    let mut x = DVector::zeros(k);
    let mut f_x = lasso_objective(h, y, &x, lambda);
    let mut z = x.clone();
    let mut theta = 1.0_f64;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let grad = h.tr_mul(&(h * &z - y));
        let step = 1.0 / lip;
        let cand = (&z - grad * step).map(|v| soft_threshold(v, lambda * step));
        let f_cand = lasso_objective(h, y, &cand, lambda);
        if f_cand <= f_x {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            z = &cand + (&cand - &x) * ((theta - 1.0) / theta_next);
            theta = theta_next;
            let f_prev = f_x;
            x = cand;
            f_x = f_cand;
            let rel = (f_prev - f_x).abs() / f_x.max(f64::MIN_POSITIVE);
            if rel < opts.tol && kkt_residual(h, y, &x, lambda) <= kkt_tol {
                break;
            }
        } else if z == x {
            // a plain proximal step failed to descend: the curvature estimate is too low
            lip *= 2.0;
        } else {
            theta = 1.0;
            z = x.clone();
        }
    }

    let support: Vec<usize> = (0..k).filter(|&i| x[i] != 0.0).collect();
    if opts.debias && !support.is_empty() && support.len() <= h.nrows() {
        if let Ok(refit) = lstsq(&select_columns(h, &support), y) {
            return Ok(SparseEstimate::from_support(h, y, support, &refit, iterations));
        }
    }
    let values = DVector::from_iterator(support.len(), support.iter().map(|&i| x[i]));
    Ok(SparseEstimate::from_support(h, y, support, &values, iterations))
}

/// Least squares restricted to a known support.
pub fn oracle_ls(
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    true_support: &[usize],
) -> Result<SparseEstimate> {
    check_system(h, y)?;
    if let Some(&bad) = true_support.iter().find(|&&i| i >= h.ncols()) {
        return Err(Error::InvalidArgument(format!(
            "support index {bad} out of range for {} columns",
            h.ncols()
        )));
    }
    let coef = lstsq(&select_columns(h, true_support), y)?;
    Ok(SparseEstimate::from_support(h, y, true_support.to_vec(), &coef, 1))
}

/// Normalized squared error `(1/L) ||alpha_hat - alpha||^2`.
pub fn mse(alpha_hat: &DVector<f64>, alpha: &DVector<f64>) -> Result<f64> {
    if alpha_hat.len() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {}, truth has length {}",
            alpha_hat.len(),
            alpha.len()
        )));
    }
    if alpha.is_empty() {
        return Ok(0.0);
    }
    Ok((alpha_hat - alpha).norm_squared() / alpha.len() as f64)
}

/// Fraction of the true support recovered and number of declared atoms outside it.
pub fn support_metrics(estimate: &SparseEstimate, true_support: &[usize]) -> (f64, usize) {
    let hits = true_support
        .iter()
        .filter(|i| estimate.support.contains(i))
        .count();
    let false_alarms = estimate
        .support
        .iter()
        .filter(|i| !true_support.contains(i))
        .count();
    let hit_rate = if true_support.is_empty() {
        1.0
    } else {
        hits as f64 / true_support.len() as f64
    };
    (hit_rate, false_alarms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_dictionary, ProblemDims};
    use crate::stream_rng;

    fn sparse_vec(k: usize, entries: &[(usize, f64)]) -> DVector<f64> {
        let mut x = DVector::zeros(k);
        for &(i, v) in entries {
            x[i] = v;
        }
        x
    }

    #[test]
    fn omp_identity_recovery() {
        let h = DMatrix::identity(6, 6);
        let y = sparse_vec(6, &[(1, 2.0), (3, -1.0), (4, 0.5)]);
        let est = omp(&h, &y, &SolverOptions::omp(3)).unwrap();
        assert_eq!(est.x_hat, y);
        assert_eq!(est.support, vec![1, 3, 4]);
        assert_eq!(est.residual_norm, 0.0);
    }

    #[test]
    fn omp_orthonormal_picks_largest_correlations() {
        let dims = ProblemDims::new(8, 16, 2, 2).unwrap();
        let g = gen_dictionary(&dims, &mut stream_rng(1, 0));
        let q = g.columns(0, 4).into_owned().qr().q();
        let y = DVector::from_vec(vec![0.3, -1.2, 0.8, 0.1, 0.5, -0.2, 0.4, 0.9]);
        let est = omp(&q, &y, &SolverOptions::omp(2)).unwrap();
        let corr = q.tr_mul(&y);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()));
        let mut expect = order[..2].to_vec();
        expect.sort_unstable();
        let mut got = est.support.clone();
        got.sort_unstable();
        assert_eq!(got, expect);
        for &i in &expect {
            assert!((est.x_hat[i] - corr[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn omp_sparsity_precondition() {
        let h = DMatrix::identity(3, 3);
        let y = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(omp(&h, &y, &SolverOptions::omp(4)).is_err());
        assert!(omp(&h, &y, &SolverOptions::omp(0)).is_err());
    }

    #[test]
    fn omp_zero_observation() {
        let h = DMatrix::identity(3, 3);
        let est = omp(&h, &DVector::zeros(3), &SolverOptions::omp(2)).unwrap();
        assert!(est.support.is_empty());
        assert_eq!(est.x_hat, DVector::zeros(3));
    }

    #[test]
    fn omp_skips_annihilated_columns() {
        let mut h = DMatrix::identity(4, 5);
        h.set_column(2, &DVector::zeros(4));
        h[(0, 4)] = 1.0;
        h[(1, 4)] = 1.0;
        let y = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        let est = omp(&h, &y, &SolverOptions::omp(2)).unwrap();
        assert!(!est.support.contains(&2));
    }

    #[test]
    fn cosamp_identity_one_iteration() {
        let h = DMatrix::identity(8, 8);
        let y = sparse_vec(8, &[(2, 1.5), (6, -0.7)]);
        let est = cosamp(&h, &y, &SolverOptions::cosamp(2)).unwrap();
        assert_eq!(est.iterations, 1);
        assert!((&est.x_hat - &y).amax() < 1e-14);
        assert_eq!(est.support, vec![2, 6]);
    }

    #[test]
    fn cosamp_zero_observation() {
        let h = DMatrix::identity(5, 5);
        let est = cosamp(&h, &DVector::zeros(5), &SolverOptions::cosamp(2)).unwrap();
        assert!(est.support.is_empty());
        assert_eq!(est.x_hat, DVector::zeros(5));
    }

    #[test]
    fn bpdn_scalar_soft_threshold() {
        let h = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_element(1, 3.0);
        let opts = SolverOptions {
            debias: false,
            ..SolverOptions::bpdn(1.0)
        };
        let est = bpdn(&h, &y, &opts).unwrap();
        assert!((est.x_hat[0] - 2.0).abs() <= 10.0 * opts.tol, "{}", est.x_hat[0]);
        let tight = SolverOptions { tol: 1e-12, ..opts };
        let est = bpdn(&h, &y, &tight).unwrap();
        assert!((est.x_hat[0] - 2.0).abs() < 1e-10, "{}", est.x_hat[0]);
        let debiased = bpdn(&h, &y, &SolverOptions::bpdn(1.0)).unwrap();
        assert!((debiased.x_hat[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bpdn_null_threshold() {
        let dims = ProblemDims::new(6, 8, 1, 1).unwrap();
        let h = gen_dictionary(&dims, &mut stream_rng(2, 0));
        let y = DVector::from_vec(vec![0.5, -0.1, 0.3, 0.2, 0.0, 1.0]);
        let lambda = h.tr_mul(&y).amax();
        let est = bpdn(&h, &y, &SolverOptions::bpdn(lambda)).unwrap();
        assert_eq!(est.x_hat, DVector::zeros(8));
        assert!(est.support.is_empty());
    }

    #[test]
    fn bpdn_rejects_bad_input() {
        let h = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![f64::NAN, 1.0]);
        assert!(matches!(
            bpdn(&h, &y, &SolverOptions::bpdn(0.1)),
            Err(Error::NonFinite(_))
        ));
        let y = DVector::from_vec(vec![1.0, 1.0]);
        assert!(bpdn(&h, &y, &SolverOptions::bpdn(-1.0)).is_err());
    }

    #[test]
    fn lipschitz_matches_spectral_norm() {
        let dims = ProblemDims::new(6, 8, 1, 1).unwrap();
        let h = gen_dictionary(&dims, &mut stream_rng(3, 0));
        let sv = h.clone().singular_values().max();
        assert!((lipschitz_estimate(&h) - sv * sv).abs() < 1e-8 * sv * sv);
    }

    #[test]
    fn oracle_ls_small_cases() {
        let h = DMatrix::identity(4, 4);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let est = oracle_ls(&h, &y, &[0, 1, 2, 3]).unwrap();
        assert_eq!(est.x_hat, h.tr_mul(&y));
        assert!(oracle_ls(&h, &y, &[7]).is_err());
        let dup = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(oracle_ls(&dup, &DVector::zeros(3), &[0, 1]).is_err());
    }

    #[test]
    fn mse_values() {
        let a = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&DVector::zeros(2), &a).unwrap(), 1.0);
        let shifted = a.add_scalar(0.25);
        assert!((mse(&shifted, &a).unwrap() - 0.0625).abs() < 1e-15);
        assert!(mse(&DVector::zeros(3), &a).is_err());
    }

    #[test]
    fn support_metric_cases() {
        let est = |support: Vec<usize>| SparseEstimate {
            x_hat: DVector::zeros(10),
            support,
            iterations: 0,
            residual_norm: 0.0,
        };
        assert_eq!(support_metrics(&est(vec![1, 4]), &[1, 4]), (1.0, 0));
        assert_eq!(support_metrics(&est(vec![]), &[1, 4]), (0.0, 0));
        assert_eq!(support_metrics(&est(vec![2, 3]), &[1, 4]), (0.0, 2));
    }
}
