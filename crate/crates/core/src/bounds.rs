//! Expected Cramér-Rao bounds for three observation models:
//!
//! * deflated: the observation projected onto the complement of the known
//!   interference subspace, `C = s2 / L_A * Tr{(A^T P_B^perp A)^{-1}}`;
//! * joint: interference left in place and estimated as if it were signal,
//!   `C = s0 / L * Tr{([A B]^T [A B])^{-1}}`;
//! * ideal: no interference at all, `C = s1 / L_A * Tr{(A^T A)^{-1}}`.
//!
//! Each bound also has a closed form in the doubly asymptotic regime, written
//! in terms of the matching output SNR. Noise variances are calibrated by
//! inverting those asymptotic SNR definitions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::AsymptoticRatios;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundModel {
    Deflated,
    Joint,
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub sigma2: f64,
    pub snr_target_db: f64,
    pub sigma_alpha2: f64,
    pub sigma_beta2: f64,
    /// `sigma_alpha2 / sigma_beta2`, infinite without interference.
    pub sir: f64,
}

/// All three bounds for one dictionary draw at a common target SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub c_deflated: f64,
    pub c_joint: f64,
    pub c_ideal: f64,
    pub c_deflated_inf: f64,
    pub c_joint_inf: f64,
    pub c_ideal_inf: f64,
    pub snr_na_deflated: f64,
    pub snr_na_joint: f64,
    pub snr_na_ideal: f64,
    /// Noise variances of the deflated, joint and ideal models.
    pub sigma2: f64,
    pub sigma0_2: f64,
    pub sigma1_2: f64,
    pub ratios: AsymptoticRatios,
}

fn check_noise(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive and finite, got {sigma2}"
        )));
    }
    Ok(())
}

fn check_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "signal block has {} rows, interference block has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.ncols() == 0 {
        return Err(Error::InvalidArgument("signal block has no columns".into()));
    }
    Ok(())
}

/// `A^T P_B^perp A = A^T A - A^T B (B^T B)^{-1} B^T A`.
fn projected_gram(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ata = a.transpose() * a;
    if b.ncols() == 0 {
        return Ok(ata);
    }
    let btb = b.transpose() * b;
    // the guard mirrors the rank test on B itself: cond(B^T B) = cond(B)^2
    linalg::spd_inverse_trace(&btb)?;
    let chol = btb.cholesky().ok_or(Error::IllConditioned {
        cond: f64::INFINITY,
        limit: linalg::COND_LIMIT,
    })?;
    let bta = b.transpose() * a;
    let g = ata - bta.transpose() * chol.solve(&bta);
    // symmetrize against rounding
    Ok((&g + g.transpose()) * 0.5)
}

pub fn ecrb_deflated(a_psi: &DMatrix<f64>, b_psi: &DMatrix<f64>, sigma2: f64) -> Result<f64> {
    check_rows(a_psi, b_psi)?;
    check_noise(sigma2)?;
    let gram = projected_gram(a_psi, b_psi)?;
    Ok(sigma2 / a_psi.ncols() as f64 * linalg::spd_inverse_trace(&gram)?)
}

pub fn ecrb_joint(a_psi: &DMatrix<f64>, b_psi: &DMatrix<f64>, sigma0_2: f64) -> Result<f64> {
    check_rows(a_psi, b_psi)?;
    check_noise(sigma0_2)?;
    let stacked = DMatrix::from_fn(a_psi.nrows(), a_psi.ncols() + b_psi.ncols(), |i, j| {
        if j < a_psi.ncols() {
            a_psi[(i, j)]
        } else {
            b_psi[(i, j - a_psi.ncols())]
        }
    });
    let gram = stacked.transpose() * &stacked;
    Ok(sigma0_2 / stacked.ncols() as f64 * linalg::spd_inverse_trace(&gram)?)
}

pub fn ecrb_ideal(a_psi: &DMatrix<f64>, sigma1_2: f64) -> Result<f64> {
    if a_psi.ncols() == 0 {
        return Err(Error::InvalidArgument("signal block has no columns".into()));
    }
    check_noise(sigma1_2)?;
    let gram = a_psi.transpose() * a_psi;
    Ok(sigma1_2 / a_psi.ncols() as f64 * linalg::spd_inverse_trace(&gram)?)
}

/// Variances entering the non-asymptotic SNR of one model. `noise_var` is
/// the noise variance of that model (`sigma2`, `sigma0_2` or `sigma1_2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrVariances {
    pub sigma_alpha2: f64,
    pub sigma_beta2: f64,
    pub noise_var: f64,
}

/// Realized output SNR of a model for a given dictionary draw.
pub fn snr_na(
    model: BoundModel,
    a_psi: &DMatrix<f64>,
    b_psi: &DMatrix<f64>,
    v: SnrVariances,
) -> Result<f64> {
    check_rows(a_psi, b_psi)?;
    if !(v.noise_var > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SNR undefined for noise variance {}",
            v.noise_var
        )));
    }
    let n = a_psi.nrows() as f64;
    let snr = match model {
        BoundModel::Deflated => {
            let tr = projected_gram(a_psi, b_psi)?.trace();
            v.sigma_alpha2 * tr / (v.noise_var * (n - b_psi.ncols() as f64))
        }
        BoundModel::Joint => {
            (v.sigma_alpha2 * a_psi.norm_squared() + v.sigma_beta2 * b_psi.norm_squared())
                / (v.noise_var * n)
        }
        BoundModel::Ideal => v.sigma_alpha2 * a_psi.norm_squared() / (v.noise_var * n),
    };
    Ok(snr)
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "SNR must be positive and finite, got {snr}"
        )));
    }
    Ok(())
}

/// Asymptotic deflated bound `sigma_alpha2 / SNR / (rho_tilde - 1)`.
pub fn ecrb_deflated_asym(ratios: &AsymptoticRatios, sigma_alpha2: f64, snr: f64) -> Result<f64> {
    check_snr(snr)?;
    if !(ratios.rho_tilde > 1.0) {
        return Err(Error::Regime(format!(
            "deflated bound diverges for rho_tilde = {} <= 1",
            ratios.rho_tilde
        )));
    }
    Ok(sigma_alpha2 / snr / (ratios.rho_tilde - 1.0))
}

/// Asymptotic output SNR of the joint model.
pub fn snr0_asym(
    ratios: &AsymptoticRatios,
    sigma_alpha2: f64,
    sigma_beta2: f64,
    sigma0_2: f64,
) -> f64 {
    (sigma_alpha2 - sigma_beta2) / (sigma0_2 * ratios.rho) + sigma_beta2 / (sigma0_2 * ratios.rho_bar)
}

/// Asymptotic output SNR of the deflated (and of the ideal) model.
pub fn snr_asym(ratios: &AsymptoticRatios, sigma_alpha2: f64, sigma2: f64) -> f64 {
    sigma_alpha2 / (sigma2 * ratios.rho)
}

/// Asymptotic joint bound, expressed through the joint SNR and the SIR.
pub fn ecrb_joint_asym(
    ratios: &AsymptoticRatios,
    sigma_alpha2: f64,
    sigma_beta2: f64,
    sigma0_2: f64,
) -> Result<f64> {
    check_noise(sigma0_2)?;
    if !(ratios.rho_bar > 1.0) {
        return Err(Error::Regime(format!(
            "joint bound diverges for rho_bar = {} <= 1",
            ratios.rho_bar
        )));
    }
    let snr0 = snr0_asym(ratios, sigma_alpha2, sigma_beta2, sigma0_2);
    check_snr(snr0)?;
    let inv_sir = sigma_beta2 / sigma_alpha2;
    let mix = (1.0 - inv_sir) / ratios.rho + inv_sir / ratios.rho_bar;
    Ok(sigma_alpha2 / snr0 * mix * ratios.rho_bar / (ratios.rho_bar - 1.0))
}

/// Asymptotic ideal bound `sigma_alpha2 / SNR_1 / (rho - 1)`.
pub fn ecrb_ideal_asym(ratios: &AsymptoticRatios, sigma_alpha2: f64, snr1: f64) -> Result<f64> {
    check_snr(snr1)?;
    if !(ratios.rho > 1.0) {
        return Err(Error::Regime(format!(
            "ideal bound diverges for rho = {} <= 1",
            ratios.rho
        )));
    }
    Ok(sigma_alpha2 / snr1 / (ratios.rho - 1.0))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Noise variance that puts a model's asymptotic output SNR at `snr_db`.
pub fn calibrate_noise(
    snr_db: f64,
    sigma_alpha2: f64,
    sigma_beta2: f64,
    ratios: &AsymptoticRatios,
    model: BoundModel,
) -> Result<NoiseCalibration> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target SNR must be finite, got {snr_db}"
        )));
    }
    let snr = db_to_linear(snr_db);
    let sigma2 = match model {
        BoundModel::Deflated | BoundModel::Ideal => sigma_alpha2 / (ratios.rho * snr),
        BoundModel::Joint => {
            ((sigma_alpha2 - sigma_beta2) / ratios.rho + sigma_beta2 / ratios.rho_bar) / snr
        }
    };
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "calibration produced non-positive noise variance {sigma2}"
        )));
    }
    Ok(NoiseCalibration {
        sigma2,
        snr_target_db: snr_db,
        sigma_alpha2,
        sigma_beta2,
        sir: if sigma_beta2 > 0.0 {
            sigma_alpha2 / sigma_beta2
        } else {
            f64::INFINITY
        },
    })
}

impl BoundReport {
    /// Computes every bound for one dictionary draw, each model calibrated to
    /// the same asymptotic output SNR `snr_db`.
    pub fn compute(
        a_psi: &DMatrix<f64>,
        b_psi: &DMatrix<f64>,
        snr_db: f64,
        sigma_alpha2: f64,
        sigma_beta2: f64,
    ) -> Result<Self> {
        check_rows(a_psi, b_psi)?;
        let ratios = AsymptoticRatios::new(
            a_psi.nrows() as f64 / a_psi.ncols() as f64,
            b_psi.ncols() as f64 / a_psi.ncols() as f64,
        )?;
        let defl = calibrate_noise(snr_db, sigma_alpha2, sigma_beta2, &ratios, BoundModel::Deflated)?;
        let joint = calibrate_noise(snr_db, sigma_alpha2, sigma_beta2, &ratios, BoundModel::Joint)?;
        let ideal = calibrate_noise(snr_db, sigma_alpha2, sigma_beta2, &ratios, BoundModel::Ideal)?;
        let snr = db_to_linear(snr_db);
        let vars = |noise_var| SnrVariances {
            sigma_alpha2,
            sigma_beta2,
            noise_var,
        };
        Ok(Self {
            c_deflated: ecrb_deflated(a_psi, b_psi, defl.sigma2)?,
            c_joint: ecrb_joint(a_psi, b_psi, joint.sigma2)?,
            c_ideal: ecrb_ideal(a_psi, ideal.sigma2)?,
            c_deflated_inf: ecrb_deflated_asym(&ratios, sigma_alpha2, snr)?,
            c_joint_inf: ecrb_joint_asym(&ratios, sigma_alpha2, sigma_beta2, joint.sigma2)?,
            c_ideal_inf: ecrb_ideal_asym(&ratios, sigma_alpha2, snr)?,
            snr_na_deflated: snr_na(BoundModel::Deflated, a_psi, b_psi, vars(defl.sigma2))?,
            snr_na_joint: snr_na(BoundModel::Joint, a_psi, b_psi, vars(joint.sigma2))?,
            snr_na_ideal: snr_na(BoundModel::Ideal, a_psi, b_psi, vars(ideal.sigma2))?,
            sigma2: defl.sigma2,
            sigma0_2: joint.sigma2,
            sigma1_2: ideal.sigma2,
            ratios,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn ratios(rho: f64, c: f64) -> AsymptoticRatios {
        AsymptoticRatios::new(rho, c).unwrap()
    }

    #[test]
    fn deflated_orthonormal_block() {
        let a = DMatrix::from_column_slice(4, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b = col(&[1.0, 0.0, 0.0, 0.0]);
        assert!((ecrb_deflated(&a, &b, 0.25).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn deflated_one_dimensional_case() {
        let s = 1.0 / 3f64.sqrt();
        let a = col(&[s, s, s]);
        let b = col(&[1.0, 0.0, 0.0]);
        assert!((ecrb_deflated(&a, &b, 1.0).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn deflated_rejects_signal_inside_interference() {
        let a = col(&[2.0, 0.0, 0.0]);
        let b = col(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            ecrb_deflated(&a, &b, 1.0),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn joint_axes() {
        let a = col(&[0.0, 1.0, 0.0]);
        let b = col(&[1.0, 0.0, 0.0]);
        let c = ecrb_joint(&a, &b, 1.0).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
        assert!((ecrb_joint(&a, &b, 4.0).unwrap() - 4.0 * c).abs() < 1e-15);
        let dup = col(&[0.0, 1.0, 0.0]);
        assert!(ecrb_joint(&a, &dup, 1.0).is_err());
    }

    #[test]
    fn ideal_small_cases() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((ecrb_ideal(&a, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((ecrb_ideal(&col(&[2.0]), 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(ecrb_ideal(&col(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn snr_small_cases() {
        // A lives in the complement of B with L_A = N - L_B, so Tr = N - L_B
        let a = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let b = col(&[1.0, 0.0, 0.0]);
        let v = SnrVariances {
            sigma_alpha2: 1.0,
            sigma_beta2: 1.0,
            noise_var: 1.0,
        };
        assert!((snr_na(BoundModel::Deflated, &a, &b, v).unwrap() - 1.0).abs() < 1e-15);

        let a = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let none = DMatrix::zeros(4, 0);
        assert!((snr_na(BoundModel::Ideal, &a, &none, v).unwrap() - 0.5).abs() < 1e-15);

        let zero = SnrVariances { noise_var: 0.0, ..v };
        assert!(snr_na(BoundModel::Joint, &a, &none, zero).is_err());
    }

    #[test]
    fn deflated_asymptotic_values() {
        let r = ratios(10.0, 1.0);
        assert!((ecrb_deflated_asym(&r, 1.0, 10.0).unwrap() - 0.0125).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for rho in [3.0, 5.0, 10.0, 100.0, 1e4] {
            let v = ecrb_deflated_asym(&ratios(rho, 1.0), 1.0, 10.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-4);
        let bad = AsymptoticRatios {
            rho: 2.0,
            c: 1.0,
            rho_tilde: 1.0,
            rho_bar: 1.0,
        };
        assert!(matches!(
            ecrb_deflated_asym(&bad, 1.0, 10.0),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn joint_asymptotic_values() {
        let r = ratios(10.0, 1.0);
        assert!((snr0_asym(&r, 1.0, 1.0, 1.0) - 0.2).abs() < 1e-15);
        assert!((ecrb_joint_asym(&r, 1.0, 1.0, 1.0).unwrap() - 1.25).abs() < 1e-12);
        // at SIR = 1 the ratio term is 1/(rho_bar - 1) whatever rho is
        for rho in [6.0, 10.0, 40.0] {
            let c = rho / 5.0 - 1.0;
            let r = ratios(rho, c);
            let snr0 = snr0_asym(&r, 2.0, 2.0, 0.3);
            let v = ecrb_joint_asym(&r, 2.0, 2.0, 0.3).unwrap();
            assert!((v - 2.0 / snr0 / (r.rho_bar - 1.0)).abs() < 1e-12);
        }
        let bad = AsymptoticRatios {
            rho: 2.0,
            c: 1.0,
            rho_tilde: 1.0,
            rho_bar: 1.0,
        };
        assert!(ecrb_joint_asym(&bad, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ideal_asymptotic_values() {
        let r = ratios(10.0, 0.0);
        let v = ecrb_ideal_asym(&r, 1.0, 10.0).unwrap();
        assert!((v - 1.0 / 90.0).abs() < 1e-15);
        assert_eq!(v, ecrb_deflated_asym(&r, 1.0, 10.0).unwrap());
    }

    #[test]
    fn asymptotic_ordering() {
        for c in [0.5, 1.0, 3.0] {
            let r = ratios(10.0, c);
            assert!(
                ecrb_deflated_asym(&r, 1.0, 10.0).unwrap() > ecrb_ideal_asym(&r, 1.0, 10.0).unwrap()
            );
        }
    }

    #[test]
    fn calibration_inversions() {
        let r = ratios(10.0, 1.0);
        let c = calibrate_noise(10.0, 1.0, 1.0, &r, BoundModel::Deflated).unwrap();
        assert!((c.sigma2 - 0.01).abs() < 1e-15);
        assert_eq!(c.sir, 1.0);
        let c = calibrate_noise(0.0, 1.0, 1.0, &r, BoundModel::Ideal).unwrap();
        assert!((c.sigma2 - 0.1).abs() < 1e-15);
        let c = calibrate_noise(10.0, 1.0, 1.0, &r, BoundModel::Joint).unwrap();
        assert!((c.sigma2 - 0.02).abs() < 1e-15);
        assert!((snr0_asym(&r, 1.0, 1.0, c.sigma2) - 10.0).abs() < 1e-12);
        assert!(calibrate_noise(f64::NAN, 1.0, 1.0, &r, BoundModel::Joint).is_err());
        assert!(calibrate_noise(10.0, 0.0, 0.0, &r, BoundModel::Deflated).is_err());
    }

    #[test]
    fn no_interference_report() {
        let a = DMatrix::from_fn(20, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + (i == j) as u8 as f64);
        let b = DMatrix::zeros(20, 0);
        let r = BoundReport::compute(&a, &b, 10.0, 1.0, 1.0).unwrap();
        assert!((r.c_deflated - r.c_ideal).abs() <= 1e-9 * r.c_ideal);
        assert!(r.c_joint > 0.0);
    }
}
