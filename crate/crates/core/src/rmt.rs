//! Marchenko-Pastur machinery for `W = rho F^T F`, where `F` is
//! `(N - L_B) x L_A` with i.i.d. zero-mean entries of variance `1/N`.
//!
//! The limiting spectral law of `W` has support `[(1 - sqrt(r))^2, (1 + sqrt(r))^2]`
//! with `r = rho_tilde`, absolutely continuous density
//! `sqrt((l+ - x)(x - l-)) / (2 pi x)` and an atom of mass `1 - r` at zero
//! when `r < 1`. Its Stieltjes transform solves
//! `S = -1/z + (r/z) S / (1 + S)`, its moments are Narayana polynomials in
//! `r`, and `S(0) = 1/(r - 1)` is what drives the inverse-trace limit
//! `(1/L_A) Tr{(F^T F)^{-1}} -> rho / (rho_tilde - 1)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{AsymptoticRatios, Deflator, ProblemDims};
use crate::quad::adaptive_simpson;
use crate::stats::MeanStderr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MPLaw {
    pub rho_tilde: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl MPLaw {
    pub fn new(rho_tilde: f64) -> Result<Self> {
        if !(rho_tilde > 0.0) || !rho_tilde.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "aspect ratio must be positive and finite, got {rho_tilde}"
            )));
        }
        let s = rho_tilde.sqrt();
        Ok(Self {
            rho_tilde,
            lambda_minus: (1.0 - s) * (1.0 - s),
            lambda_plus: (1.0 + s) * (1.0 + s),
        })
    }

    /// Mass of the atom at zero.
    pub fn zero_mass(&self) -> f64 {
        (1.0 - self.rho_tilde).max(0.0)
    }

    fn center_halfwidth(&self) -> (f64, f64) {
        (
            0.5 * (self.lambda_plus + self.lambda_minus),
            0.5 * (self.lambda_plus - self.lambda_minus),
        )
    }

    /// `∫ f dμ` over the continuous part, using `x = c - h cos(t)` so the
    /// square-root edges become a smooth `sin^2` weight.
    pub fn integrate_continuous(&self, f: impl Fn(f64) -> f64, upper: f64, tol: f64) -> f64 {
        let (c, h) = self.center_halfwidth();
        if upper <= self.lambda_minus {
            return 0.0;
        }
        let t_max = if upper >= self.lambda_plus {
            std::f64::consts::PI
        } else {
            ((c - upper) / h).clamp(-1.0, 1.0).acos()
        };
        let integrand = |t: f64| {
            let x = c - h * t.cos();
            let s = t.sin();
            if x <= 0.0 {
                return 0.0;
            }
            f(x) * h * h * s * s / (2.0 * std::f64::consts::PI * x)
        };
        adaptive_simpson(&integrand, 0.0, t_max, tol)
    }
}

pub fn mp_density(x: f64, law: &MPLaw) -> f64 {
    if !(x > law.lambda_minus && x < law.lambda_plus) {
        return 0.0;
    }
    ((law.lambda_plus - x) * (x - law.lambda_minus)).sqrt() / (2.0 * std::f64::consts::PI * x)
}

/// Cumulative distribution function, including the atom at zero when present.
pub fn mp_cdf(x: f64, law: &MPLaw) -> f64 {
    let atom = if x >= 0.0 { law.zero_mass() } else { 0.0 };
    if x <= law.lambda_minus {
        return atom;
    }
    if x >= law.lambda_plus {
        return 1.0;
    }
    (atom + law.integrate_continuous(|_| 1.0, x, 1e-12)).min(1.0)
}

fn quadratic_roots(z: Complex64, rho_tilde: f64) -> (Complex64, Complex64) {
    // z S^2 + (z + 1 - r) S + 1 = 0, solved without cancellation
    let b = z + Complex64::new(1.0 - rho_tilde, 0.0);
    let disc = (b * b - 4.0 * z).sqrt();
    let sign = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * disc);
    (q / z, Complex64::new(1.0, 0.0) / q)
}

/// Stieltjes transform `S(z) = ∫ dμ(λ) / (λ - z)` of the law.
///
/// Off the real axis the root with `Im S` of the same sign as `Im z` is
/// returned; on the real axis outside the support, the real root continuous
/// with the upper half-plane limit.
pub fn mp_stieltjes(z: Complex64, law: &MPLaw) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite("Stieltjes argument"));
    }
    let r = law.rho_tilde;
    if z.im == 0.0 {
        let x = z.re;
        if x >= law.lambda_minus && x <= law.lambda_plus {
            return Err(Error::InsideSupport {
                z: x,
                lo: law.lambda_minus,
                hi: law.lambda_plus,
            });
        }
        if x == 0.0 {
            if law.zero_mass() > 0.0 || r == 1.0 {
                return Err(Error::InsideSupport {
                    z: 0.0,
                    lo: 0.0,
                    hi: 0.0,
                });
            }
            return Ok(Complex64::new(1.0 / (r - 1.0), 0.0));
        }
        let (r1, r2) = quadratic_roots(z, r);
        let eps = 1e-7 * (1.0 + x.abs());
        let probe = mp_stieltjes(Complex64::new(x, eps), law)?;
        let pick = if (r1 - probe).norm() <= (r2 - probe).norm() { r1 } else { r2 };
        return Ok(Complex64::new(pick.re, 0.0));
    }
    let (r1, r2) = quadratic_roots(z, r);
    let pick = if r1.im * z.im > 0.0 { r1 } else { r2 };
    Ok(pick)
}

/// Absolute residual of `S + 1/z - (r/z) S/(1+S)`; at `z = 0` the limit form
/// `r S/(1+S) - 1` is used.
pub fn stieltjes_residual(z: Complex64, s: Complex64, law: &MPLaw) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    if z == Complex64::new(0.0, 0.0) {
        return (law.rho_tilde * s / (one + s) - one).norm();
    }
    (s + one / z - law.rho_tilde / z * s / (one + s)).norm()
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// k-th moment `Σ_{i=1..k} (1/k) C(k,i) C(k,i-1) r^i` (Narayana polynomial).
pub fn mp_moment(k: u32, law: &MPLaw) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (1..=k)
        .map(|i| binomial(k, i) * binomial(k, i - 1) / k as f64 * law.rho_tilde.powi(i as i32))
        .sum()
}

/// Sorted eigenvalues of a symmetric positive semi-definite product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub eigenvalues: Vec<f64>,
    pub dims: Option<ProblemDims>,
}

impl SpectralSample {
    pub fn new(mut eigenvalues: Vec<f64>, dims: Option<ProblemDims>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        if let Some(&min) = eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
            if !(min >= -1e-9) {
                return Err(Error::InvalidArgument(format!(
                    "spectrum of a PSD product has eigenvalue {min}"
                )));
            }
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { eigenvalues, dims })
    }

    /// Spectrum of `scale * F^T F`, computed on the small `L_A x L_A` side.
    pub fn of_gram(f: &DMatrix<f64>, scale: f64, dims: Option<ProblemDims>) -> Result<Self> {
        let gram = f.transpose() * f * scale;
        let eig = SymmetricEigen::new(gram);
        Self::new(eig.eigenvalues.iter().copied().collect(), dims)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `(1/L) Σ 1/(λ_i - z)` for real `z` below the spectrum.
    pub fn stieltjes_real(&self, z: f64) -> f64 {
        self.eigenvalues.iter().map(|l| 1.0 / (l - z)).sum::<f64>() / self.len() as f64
    }
}

/// `(1/L) Σ λ_i^k`, the k-th moment of the empirical spectral distribution.
pub fn esd_moments(sample: &SpectralSample, k: u32) -> f64 {
    sample.eigenvalues.iter().map(|l| l.powi(k as i32)).sum::<f64>() / sample.len() as f64
}

/// Kolmogorov-Smirnov distance between the empirical CDF and the law.
pub fn ks_distance(sample: &SpectralSample, law: &MPLaw) -> f64 {
    let n = sample.len() as f64;
    sample
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = mp_cdf(x, law);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Almost-sure limits of `(1/L_A) Tr{(F^T F)^{-1}}` and `(1/(N - L_B)) Tr{F^T F}`.
pub fn lemma1_limits(ratios: &AsymptoticRatios) -> Result<(f64, f64)> {
    if !(ratios.rho_tilde > 1.0) {
        return Err(Error::Regime(format!(
            "inverse trace diverges for rho_tilde = {} <= 1",
            ratios.rho_tilde
        )));
    }
    Ok((ratios.rho / (ratios.rho - ratios.c - 1.0), 1.0 / ratios.rho))
}

/// How `F` is drawn in [`verify_lemma1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FSource {
    /// Project Gaussian signal columns onto the complement of Gaussian interference columns.
    #[default]
    Deflated,
    /// Draw `F` directly with i.i.d. Gaussian(0, 1/N) entries.
    Iid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub dims: ProblemDims,
    pub trials: usize,
    pub limit_inverse_trace: f64,
    pub limit_trace: f64,
    pub inverse_trace: MeanStderr,
    pub trace: MeanStderr,
    pub rel_gap_inverse_trace: f64,
    pub rel_gap_trace: f64,
    pub per_trial_inverse_trace: Vec<f64>,
    pub per_trial_trace: Vec<f64>,
}

/// Draws one `F` for trial `trial` of the stream rooted at `seed`.
pub fn draw_f(dims: &ProblemDims, source: FSource, seed: u64, trial: u64) -> Result<DMatrix<f64>> {
    let mut rng = crate::stream_rng(seed, trial);
    let f = match source {
        FSource::Iid => crate::model::gen_iid_f(dims, &mut rng),
        FSource::Deflated => {
            // only the L_A + L_B active atoms are needed; they are i.i.d. like the rest
            let active = ProblemDims {
                k: dims.l_a + dims.l_b,
                ..*dims
            };
            let h = crate::model::gen_dictionary(&active, &mut rng);
            let a: Vec<usize> = (0..dims.l_a).collect();
            let b: Vec<usize> = (dims.l_a..dims.l_a + dims.l_b).collect();
            let defl = Deflator::new(&linalg::select_columns(&h, &b))?;
            defl.project(&linalg::select_columns(&h, &a))
        }
    };
    Ok(f)
}

/// Monte-Carlo check of both trace limits. Trials are independent streams
/// and run in parallel; results are gathered by trial index.
pub fn verify_lemma1(
    dims: &ProblemDims,
    trials: usize,
    source: FSource,
    seed: u64,
) -> Result<Lemma1Report> {
    dims.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let ratios = dims.ratios();
    if ratios.rho_tilde < 1.1 {
        return Err(Error::Regime(format!(
            "need rho_tilde >= 1.1 for a stable inverse trace, got {}",
            ratios.rho_tilde
        )));
    }
    let (limit_inv, limit_tr) = lemma1_limits(&ratios)?;
    let per_trial: Vec<Result<(f64, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let f = draw_f(dims, source, seed, t)?;
            let gram = f.transpose() * &f;
            let inv = linalg::spd_inverse_trace(&gram)? / dims.l_a as f64;
            let tr = gram.trace() / (dims.n - dims.l_b) as f64;
            Ok((inv, tr))
        })
        .collect();
    let per_trial: Vec<(f64, f64)> = per_trial.into_iter().collect::<Result<_>>()?;
    let inv: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
    let tr: Vec<f64> = per_trial.iter().map(|p| p.1).collect();
    let inverse_trace = MeanStderr::of(inv.iter().copied());
    let trace = MeanStderr::of(tr.iter().copied());
    Ok(Lemma1Report {
        dims: *dims,
        trials,
        limit_inverse_trace: limit_inv,
        limit_trace: limit_tr,
        rel_gap_inverse_trace: (inverse_trace.mean - limit_inv).abs() / limit_inv,
        rel_gap_trace: (trace.mean - limit_tr).abs() / limit_tr,
        inverse_trace,
        trace,
        per_trial_inverse_trace: inv,
        per_trial_trace: tr,
    })
}
