//! M-PSK alphabet, symbol sampling, nearest-phase (ML) detection, and
//! symbol-error-rate accounting.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstellationError {
    #[error("modulation order must be a power of two >= 2, got {0}")]
    InvalidOrder(usize),
    #[error("symbol index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("truth has {truth} symbols but {decisions} decisions were supplied")]
    LengthMismatch { truth: usize, decisions: usize },
}

/// Wrap an angle into [-pi, pi).
pub fn wrap_phase(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Unit-energy M-PSK alphabet with point `m` at phase `2*pi*m / M`.
#[derive(Debug, Clone)]
pub struct Constellation {
    order: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self, ConstellationError> {
        if order < 2 || !order.is_power_of_two() {
            return Err(ConstellationError::InvalidOrder(order));
        }
        let points = (0..order)
            .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / order as f64))
            .collect();
        Ok(Self { order, points })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn phase(&self, index: usize) -> f64 {
        2.0 * PI * index as f64 / self.order as f64
    }

    /// Draw `k` i.i.d. uniform symbols. Deterministic given the stream state.
    pub fn sample_symbols(&self, k: usize, rng: &mut impl Rng) -> SymbolVector {
        let indices: Vec<usize> = (0..k).map(|_| rng.random_range(0..self.order)).collect();
        SymbolVector::from_indices(self, &indices).expect("sampled indices are in range")
    }

    /// Nearest-phase decision: the index minimizing the wrapped angular
    /// distance to the received sample. Boundary ties (and a zero sample)
    /// resolve to the smaller index.
    pub fn detect(&self, received: Complex64) -> usize {
        let theta = received.im.atan2(received.re);
        let step = 2.0 * PI / self.order as f64;
        let lo = (theta / step).floor();
        let lo_idx = (lo as i64).rem_euclid(self.order as i64) as usize;
        let hi_idx = (lo_idx + 1) % self.order;
        let d_lo = wrap_phase(theta - lo * step).abs();
        let d_hi = wrap_phase(theta - (lo + 1.0) * step).abs();
        if d_lo < d_hi {
            lo_idx
        } else if d_hi < d_lo {
            hi_idx
        } else {
            lo_idx.min(hi_idx)
        }
    }
}

/// A block of symbols destined for the legitimate receiver, one per receive
/// antenna: indices into the constellation plus their unit-magnitude values.
#[derive(Debug, Clone)]
pub struct SymbolVector {
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl SymbolVector {
    pub fn from_indices(
        constellation: &Constellation,
        indices: &[usize],
    ) -> Result<Self, ConstellationError> {
        for &index in indices {
            if index >= constellation.order() {
                return Err(ConstellationError::IndexOutOfRange {
                    index,
                    order: constellation.order(),
                });
            }
        }
        Ok(Self {
            indices: indices.to_vec(),
            values: indices.iter().map(|&m| constellation.point(m)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Fraction of positions where the decision differs from the truth.
pub fn ser(truth: &SymbolVector, decisions: &[usize]) -> Result<f64, ConstellationError> {
    ser_indices(truth.indices(), decisions)
}

/// SER between two index slices of equal length.
pub fn ser_indices(truth: &[usize], decisions: &[usize]) -> Result<f64, ConstellationError> {
    if truth.len() != decisions.len() {
        return Err(ConstellationError::LengthMismatch {
            truth: truth.len(),
            decisions: decisions.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let errors = truth
        .iter()
        .zip(decisions)
        .filter(|(t, d)| t != d)
        .count();
    Ok(errors as f64 / truth.len() as f64)
}
