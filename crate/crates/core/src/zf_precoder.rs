//! Zero-forcing benchmark: precode at the transmitter so the legitimate
//! receiver sees `beta * s` with no inter-stream interference.

use num_complex::Complex64;
use thiserror::Error;

use crate::complex_linalg::{default_rank_tol, pseudo_inverse, ComplexMatrix, LinalgError};
use crate::constellation::SymbolVector;

#[derive(Debug, Error)]
pub enum PrecoderError {
    #[error(
        "zero-forcing undefined for K={receive_antennas}, L={transmit_antennas}: {reason}"
    )]
    Undefined {
        receive_antennas: usize,
        transmit_antennas: usize,
        reason: String,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Right pseudo-inverse precoder `P = H_R^H (H_R H_R^H)^{-1} * beta`,
/// computed through the SVD for stability. Satisfies `H_R P = beta * I`.
#[derive(Debug, Clone)]
pub struct ZfPrecoder {
    p: ComplexMatrix,
    beta: f64,
}

impl ZfPrecoder {
    pub fn build(
        h_r: &ComplexMatrix,
        beta: f64,
        rank_tol: Option<f64>,
    ) -> Result<Self, PrecoderError> {
        let k = h_r.rows();
        let l = h_r.cols();
        let undefined = |reason: String| PrecoderError::Undefined {
            receive_antennas: k,
            transmit_antennas: l,
            reason,
        };
        if !(beta.is_finite() && beta > 0.0) {
            return Err(undefined(format!("beta must be positive, got {beta}")));
        }
        if k > l {
            return Err(undefined(
                "more receive streams than transmit antennas".into(),
            ));
        }
        let tol = rank_tol.unwrap_or_else(|| default_rank_tol(k, l));
        let decomp = crate::complex_linalg::svd_complex(h_r)?;
        let sigma_max = decomp.singular_values.first().copied().unwrap_or(0.0);
        let sigma_min = decomp.singular_values.last().copied().unwrap_or(0.0);
        if sigma_min <= tol * sigma_max || sigma_min == 0.0 {
            return Err(undefined("channel is row-rank deficient".into()));
        }
        let p = pseudo_inverse(h_r, tol)?.scale(Complex64::new(beta, 0.0));

        // The interference-free property is what downstream code relies on.
        let residual = {
            let prod = h_r.matmul(&p);
            ComplexMatrix::from_fn(k, k, |i, j| {
                let target = if i == j {
                    Complex64::new(beta, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                prod.get(i, j) - target
            })
            .frobenius_norm()
        };
        if residual > 1e-8 * beta * k as f64 {
            return Err(undefined(format!(
                "H_R * P deviates from beta * I by {residual:.3e}"
            )));
        }
        Ok(Self { p, beta })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Antenna feed vector `P s`; its squared norm is the consumed power for
    /// this channel use.
    pub fn transmit(&self, symbols: &SymbolVector) -> Vec<Complex64> {
        self.p.matvec(symbols.values())
    }
}
