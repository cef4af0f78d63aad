//! Eavesdropper attack strategies.
//!
//! The threat model grants E the global CSI (both channels), the modulation
//! order, and the system configuration. Three strategies are modeled:
//!
//! - against directional modulation with enough antennas (`N >= L`): estimate
//!   the beamformer from `y_E`, then reconstruct what the legitimate receiver
//!   would have seen;
//! - against directional modulation with `N < L`: detect the phases of the
//!   eavesdropped samples directly (estimation is impossible);
//! - against the zero-forcing benchmark (`N >= K`): undo the effective
//!   channel `H_E P` by pseudo-inverse and detect the recovered symbols.

use num_complex::Complex64;
use thiserror::Error;

use crate::complex_linalg::{default_rank_tol, pseudo_inverse, ComplexMatrix, LinalgError};
use crate::constellation::Constellation;
use crate::zf_precoder::ZfPrecoder;

#[derive(Debug, Error)]
pub enum EveError {
    #[error("estimation impossible: needs at least {needed} eavesdropper antennas, has {available}")]
    EstimationImpossible { needed: usize, available: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One eavesdropped block: the received samples plus everything the threat
/// model says E knows.
#[derive(Debug)]
pub struct EveObservation<'a> {
    pub y_e: &'a [Complex64],
    pub h_e: &'a ComplexMatrix,
    pub h_r: &'a ComplexMatrix,
    pub noise_variance: f64,
}

impl EveObservation<'_> {
    fn antennas(&self) -> usize {
        self.h_e.rows()
    }
}

/// Least-squares beamformer estimate `w_hat = H_E^+ y_E`, defined only when
/// `N >= L`. Noiseless, this recovers `w` exactly; with noise, inverting the
/// channel enhances the noise that reaches the detector.
pub fn dm_estimate_w(obs: &EveObservation) -> Result<Vec<Complex64>, EveError> {
    let n = obs.antennas();
    let l = obs.h_e.cols();
    if n < l {
        return Err(EveError::EstimationImpossible {
            needed: l,
            available: n,
        });
    }
    let pinv = pseudo_inverse(obs.h_e, default_rank_tol(n, l))?;
    Ok(pinv.matvec(obs.y_e))
}

/// Full-estimation attack on directional modulation: form `H_R w_hat` and
/// detect each element. Requires `N >= L`.
pub fn dm_attack_full(
    obs: &EveObservation,
    constellation: &Constellation,
) -> Result<Vec<usize>, EveError> {
    let w_hat = dm_estimate_w(obs)?;
    let reconstructed = obs.h_r.matvec(&w_hat);
    Ok(reconstructed
        .iter()
        .map(|z| constellation.detect(*z))
        .collect())
}

/// Direct-phase attack: detect the eavesdropped samples themselves. Used
/// when `N < L`. Yields `min(N, K)` decisions aligned to the first antennas;
/// under an independent channel the sample phases carry no information about
/// the intended symbols.
pub fn dm_attack_direct(obs: &EveObservation, constellation: &Constellation) -> Vec<usize> {
    let streams = obs.antennas().min(obs.h_r.rows());
    obs.y_e[..streams]
        .iter()
        .map(|z| constellation.detect(*z))
        .collect()
}

/// Benchmark attack: undo the effective channel `H_E P` by pseudo-inverse
/// and detect the recovered symbol estimates. Requires `N >= K` (and a full
/// column rank effective channel), which is why zero-forcing leaks even when
/// `N < L`.
pub fn zf_attack(
    obs: &EveObservation,
    precoder: &ZfPrecoder,
    constellation: &Constellation,
) -> Result<Vec<usize>, EveError> {
    let n = obs.antennas();
    let k = precoder.matrix().cols();
    if n < k {
        return Err(EveError::EstimationImpossible {
            needed: k,
            available: n,
        });
    }
    let effective = obs.h_e.matmul(precoder.matrix());
    let decomp = crate::complex_linalg::svd_complex(&effective)?;
    let tol = default_rank_tol(n, k);
    let sigma_max = decomp.singular_values.first().copied().unwrap_or(0.0);
    let sigma_min = decomp.singular_values.last().copied().unwrap_or(0.0);
    if sigma_min <= tol * sigma_max || sigma_min == 0.0 {
        return Err(EveError::EstimationImpossible {
            needed: k,
            available: n,
        });
    }
    let s_hat = pseudo_inverse(&effective, tol)?.matvec(obs.y_e);
    Ok(s_hat.iter().map(|z| constellation.detect(*z)).collect())
}
