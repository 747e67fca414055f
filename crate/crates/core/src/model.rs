//! Random dictionaries, signal-plus-interference scenes and the deflation
//! operator that removes a known interfering subspace.
//!
//! A scene is `y = A a + B b + n`, where `A` and `B` are the dictionary
//! columns indexed by two disjoint supports. Deflation projects `y` and the
//! whole dictionary onto an orthonormal basis `U` of the orthogonal
//! complement of `span(B)`, which cancels the interference exactly while
//! leaving the noise white with unchanged variance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, HouseholderQr};

/// Integer problem sizes: `n` measurements, `k` atoms, `l_a` sources of
/// interest and `l_b` interferers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemDims {
    pub n: usize,
    pub k: usize,
    pub l_a: usize,
    pub l_b: usize,
}

impl ProblemDims {
    /// Validates `k > n > l_a + l_b >= 2` with `l_a >= 1`.
    ///
    /// `l_b = 0` is accepted and describes the interference-free model.
    pub fn new(n: usize, k: usize, l_a: usize, l_b: usize) -> Result<Self> {
        let dims = Self { n, k, l_a, l_b };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.l_a + self.l_b;
        if self.l_a == 0 {
            return Err(Error::InvalidDims("l_a must be at least 1".into()));
        }
        if l < 2 {
            return Err(Error::InvalidDims(format!(
                "l_a + l_b must be at least 2, got {l}"
            )));
        }
        if self.n <= l {
            return Err(Error::InvalidDims(format!(
                "need n > l_a + l_b, got n={} and l={l}",
                self.n
            )));
        }
        if self.k <= self.n {
            return Err(Error::InvalidDims(format!(
                "need k > n, got k={} and n={}",
                self.k, self.n
            )));
        }
        Ok(())
    }

    pub fn l(&self) -> usize {
        self.l_a + self.l_b
    }

    pub fn ratios(&self) -> AsymptoticRatios {
        AsymptoticRatios::from_dims(self)
    }
}

/// Limit ratios of the doubly asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRatios {
    /// `N / L_A`
    pub rho: f64,
    /// `L_B / L_A`
    pub c: f64,
    /// `rho - c`
    pub rho_tilde: f64,
    /// `N / L = rho / (1 + c)`
    pub rho_bar: f64,
}

impl AsymptoticRatios {
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if !rho.is_finite() || !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ratios must be finite with c >= 0, got rho={rho}, c={c}"
            )));
        }
        let ratios = Self {
            rho,
            c,
            rho_tilde: rho - c,
            rho_bar: rho / (1.0 + c),
        };
        if !(ratios.rho_bar > 1.0) {
            return Err(Error::Regime(format!(
                "need rho > 1, rho_tilde > 1 and rho_bar > 1, got rho={rho}, rho_tilde={}, rho_bar={}",
                ratios.rho_tilde, ratios.rho_bar
            )));
        }
        Ok(ratios)
    }

    pub fn from_dims(dims: &ProblemDims) -> Self {
        let l_a = dims.l_a as f64;
        let rho = dims.n as f64 / l_a;
        let c = dims.l_b as f64 / l_a;
        Self {
            rho,
            c,
            rho_tilde: rho - c,
            rho_bar: rho / (1.0 + c),
        }
    }
}

/// Disjoint sorted supports of the sources of interest (`t`) and of the interferers (`t_tilde`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportPair {
    pub t: Vec<usize>,
    pub t_tilde: Vec<usize>,
}

impl SupportPair {
    /// Union of both supports, interest first.
    pub fn joint(&self) -> Vec<usize> {
        self.t.iter().chain(&self.t_tilde).copied().collect()
    }
}

/// Entry law of a generated dictionary. Both have zero mean and variance `1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictionaryKind {
    #[default]
    Gaussian,
    Rademacher,
}

/// Prior of the amplitude vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudePrior {
    #[default]
    Gaussian,
    /// Random signs scaled to the requested variance.
    Rademacher,
}

/// One drawn instance of the signal-plus-interference model.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRealization {
    pub h: DMatrix<f64>,
    pub supports: SupportPair,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub noise_var: f64,
    pub noise: DVector<f64>,
    pub y: DVector<f64>,
}

impl SceneRealization {
    pub fn a_psi(&self) -> DMatrix<f64> {
        linalg::select_columns(&self.h, &self.supports.t)
    }

    pub fn b_psi(&self) -> DMatrix<f64> {
        linalg::select_columns(&self.h, &self.supports.t_tilde)
    }

    /// The full `K`-length sparse vector with `alpha` on `t` and `beta` on `t_tilde`.
    pub fn x(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.h.ncols());
        for (&i, &v) in self.supports.t.iter().zip(self.alpha.iter()) {
            x[i] = v;
        }
        for (&i, &v) in self.supports.t_tilde.iter().zip(self.beta.iter()) {
            x[i] = v;
        }
        x
    }
}

/// Deflated observation `U^T y` and dictionary `U^T H`, with the basis `U` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatedSystem {
    pub u: DMatrix<f64>,
    pub y_bar: DVector<f64>,
    pub h_bar: DMatrix<f64>,
}

impl DeflatedSystem {
    /// `F = U^T A`, i.e. the columns of `h_bar` indexed by `t`.
    pub fn f(&self, t: &[usize]) -> DMatrix<f64> {
        linalg::select_columns(&self.h_bar, t)
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> DMatrix<f64> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let z: f64 = StandardNormal.sample(rng);
        data.push(std * z);
    }
    DMatrix::from_vec(rows, cols, data)
}

/// `N x K` dictionary with i.i.d. Gaussian(0, 1/N) entries.
pub fn gen_dictionary<R: Rng + ?Sized>(dims: &ProblemDims, rng: &mut R) -> DMatrix<f64> {
    gen_dictionary_with(dims, DictionaryKind::Gaussian, rng)
}

pub fn gen_dictionary_with<R: Rng + ?Sized>(
    dims: &ProblemDims,
    kind: DictionaryKind,
    rng: &mut R,
) -> DMatrix<f64> {
    let std = 1.0 / (dims.n as f64).sqrt();
    match kind {
        DictionaryKind::Gaussian => gaussian_matrix(dims.n, dims.k, std, rng),
        DictionaryKind::Rademacher => {
            let data = (0..dims.n * dims.k)
                .map(|_| if rng.random::<bool>() { std } else { -std })
                .collect();
            DMatrix::from_vec(dims.n, dims.k, data)
        }
    }
}

/// Shifted-waveform basis `[Phi]_{k,k'} = g((k - k') T_S)`.
pub fn shifted_waveform_basis(
    waveform: impl Fn(f64) -> f64,
    sample_period: f64,
    k: usize,
) -> Result<DMatrix<f64>> {
    if !(sample_period > 0.0) || !sample_period.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sample period must be positive and finite, got {sample_period}"
        )));
    }
    // g is only evaluated on the 2K-1 distinct lags
    let lags: Vec<f64> = (0..2 * k.max(1) - 1)
        .map(|d| waveform((d as f64 - (k as f64 - 1.0)) * sample_period))
        .collect();
    if lags.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("waveform samples"));
    }
    Ok(DMatrix::from_fn(k, k, |r, c| lags[r + k - 1 - c]))
}

/// Steering-matrix dictionary `Psi * Phi` built from a known waveform and a
/// Gaussian(0, 1/N) measurement matrix `Psi`.
pub fn gen_steering_dictionary<R: Rng + ?Sized>(
    waveform: impl Fn(f64) -> f64,
    sample_period: f64,
    dims: &ProblemDims,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let phi = shifted_waveform_basis(waveform, sample_period, dims.k)?;
    let psi = gen_dictionary(dims, rng);
    Ok(psi * phi)
}

/// Uniformly random disjoint supports of sizes `l_a` and `l_b` over `0..k`, each sorted.
pub fn draw_supports<R: Rng + ?Sized>(
    k: usize,
    l_a: usize,
    l_b: usize,
    rng: &mut R,
) -> Result<SupportPair> {
    if l_a + l_b > k {
        return Err(Error::InvalidArgument(format!(
            "cannot place {l_a} + {l_b} disjoint atoms among {k} columns"
        )));
    }
    let picked = rand::seq::index::sample(rng, k, l_a + l_b).into_vec();
    let mut t = picked[..l_a].to_vec();
    let mut t_tilde = picked[l_a..].to_vec();
    t.sort_unstable();
    t_tilde.sort_unstable();
    Ok(SupportPair { t, t_tilde })
}

pub fn draw_amplitudes<R: Rng + ?Sized>(
    size: usize,
    variance: f64,
    prior: AmplitudePrior,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "amplitude variance must be positive, got {variance}"
        )));
    }
    let std = variance.sqrt();
    let v = match prior {
        AmplitudePrior::Gaussian => DVector::from_fn(size, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        }),
        AmplitudePrior::Rademacher => {
            DVector::from_fn(size, |_, _| if rng.random::<bool>() { std } else { -std })
        }
    };
    Ok(v)
}

/// Builds `y = A alpha + B beta + n` with white Gaussian noise of variance `noise_var`.
pub fn synthesize_observation<R: Rng + ?Sized>(
    h: DMatrix<f64>,
    supports: SupportPair,
    alpha: DVector<f64>,
    beta: DVector<f64>,
    noise_var: f64,
    rng: &mut R,
) -> Result<SceneRealization> {
    let (n, k) = h.shape();
    if supports.t.len() != alpha.len() || supports.t_tilde.len() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "supports have sizes ({}, {}) but amplitudes have lengths ({}, {})",
            supports.t.len(),
            supports.t_tilde.len(),
            alpha.len(),
            beta.len()
        )));
    }
    if supports.t.iter().chain(&supports.t_tilde).any(|&i| i >= k) {
        return Err(Error::DimensionMismatch(format!(
            "support index out of range for {k} columns"
        )));
    }
    if supports.t.iter().any(|i| supports.t_tilde.contains(i)) {
        return Err(Error::InvalidArgument("supports must be disjoint".into()));
    }
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    let noise = gaussian_matrix(n, 1, noise_var.sqrt(), rng).column(0).into_owned();
    let mut y = noise.clone();
    for (&i, &a) in supports.t.iter().zip(alpha.iter()) {
        y.axpy(a, &h.column(i), 1.0);
    }
    for (&i, &b) in supports.t_tilde.iter().zip(beta.iter()) {
        y.axpy(b, &h.column(i), 1.0);
    }
    Ok(SceneRealization {
        h,
        supports,
        alpha,
        beta,
        noise_var,
        noise,
        y,
    })
}

/// Projection onto the orthogonal complement of a known full-rank subspace,
/// held as the reflectors of a complete Householder QR.
#[derive(Debug, Clone)]
pub struct Deflator {
    qr: HouseholderQr,
    l_b: usize,
}

impl Deflator {
    pub fn new(b_psi: &DMatrix<f64>) -> Result<Self> {
        let (n, l_b) = b_psi.shape();
        if l_b >= n {
            return Err(Error::DimensionMismatch(format!(
                "interference subspace of dimension {l_b} leaves no complement in R^{n}"
            )));
        }
        if b_psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("interference matrix"));
        }
        let qr = HouseholderQr::new(b_psi);
        linalg::check_full_column_rank(&qr.singular_values(), l_b)?;
        Ok(Self { qr, l_b })
    }

    pub fn n(&self) -> usize {
        self.qr.rows()
    }

    pub fn l_b(&self) -> usize {
        self.l_b
    }

    /// The `N x (N - L_B)` basis `U` (trailing columns of the complete `Q`).
    pub fn basis(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut e = DMatrix::zeros(n, n - self.l_b);
        for j in 0..n - self.l_b {
            e[(self.l_b + j, j)] = 1.0;
        }
        self.qr.apply_q(&mut e);
        e
    }

    /// `U^T m` without forming `U`.
    pub fn project(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = m.clone();
        self.qr.apply_qt(&mut w);
        w.rows(self.l_b, self.n() - self.l_b).into_owned()
    }

    pub fn project_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        self.project(&m).column(0).into_owned()
    }
}

/// Orthonormal basis of the orthogonal complement of `span(b_psi)`.
pub fn orth_complement(b_psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(Deflator::new(b_psi)?.basis())
}

/// Applies `U^T` to the observation and to the dictionary of a scene.
pub fn deflate_system(u: &DMatrix<f64>, scene: &SceneRealization) -> Result<DeflatedSystem> {
    let n = scene.h.nrows();
    if u.nrows() != n || u.ncols() > n {
        return Err(Error::DimensionMismatch(format!(
            "basis is {}x{} but the scene has {n} measurements",
            u.nrows(),
            u.ncols()
        )));
    }
    let ut = u.transpose();
    Ok(DeflatedSystem {
        y_bar: &ut * &scene.y,
        h_bar: &ut * &scene.h,
        u: u.clone(),
    })
}

/// `I - B (B^T B)^{-1} B^T`, formed from the normal equations of `b_psi`.
pub fn projector_perp(b_psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, l_b) = b_psi.shape();
    if l_b == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    if l_b >= n {
        return Err(Error::DimensionMismatch(format!(
            "interference subspace of dimension {l_b} fills R^{n}"
        )));
    }
    linalg::check_full_column_rank(&b_psi.clone().singular_values(), l_b)?;
    let gram = b_psi.transpose() * b_psi;
    let chol = gram
        .cholesky()
        .ok_or(Error::RankDeficient {
            rank: 0,
            expected: l_b,
            ratio: 0.0,
        })?;
    let coef = chol.solve(&b_psi.transpose());
    Ok(DMatrix::identity(n, n) - b_psi * coef)
}

/// Draws `F` directly with i.i.d. Gaussian(0, 1/N) entries, bypassing the dictionary.
pub fn gen_iid_f<R: Rng + ?Sized>(dims: &ProblemDims, rng: &mut R) -> DMatrix<f64> {
    gaussian_matrix(dims.n - dims.l_b, dims.l_a, 1.0 / (dims.n as f64).sqrt(), rng)
}
