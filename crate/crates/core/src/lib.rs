//! Directional-modulation beamforming for secure M-PSK transmission.
//!
//! The library designs transmit antenna weights so that the superposed signal
//! at each legitimate receive antenna lands on the intended PSK constellation
//! point (the symbol forms "in the air"), benchmarks the design against
//! zero-forcing precoding, models three eavesdropper attack strategies, and
//! evaluates security with seeded Monte Carlo symbol-error-rate experiments.
//!
//! Module map:
//! - [`complex_linalg`]: dense real/complex SVD, null-space bases,
//!   pseudo-inverses, minimum-norm solves;
//! - [`constellation`]: M-PSK alphabet, sampling, nearest-phase detection,
//!   SER accounting;
//! - [`dm_beamformer`]: the directional-modulation design problem and its
//!   reduction to a minimum-norm QP;
//! - [`qp_solver`]: the QP solver plus an exhaustive enumeration oracle;
//! - [`zf_precoder`]: the zero-forcing benchmark;
//! - [`eavesdropper`]: the three attack strategies;
//! - [`sim_engine`]: seeded Monte Carlo experiments and sweep aggregation;
//! - [`reference`]: reference quantities computed by independent routes,
//!   for verification.

pub mod complex_linalg;
pub mod constellation;
pub mod dm_beamformer;
pub mod eavesdropper;
pub mod qp_solver;
pub mod reference;
pub mod sim_engine;
pub mod zf_precoder;

pub use complex_linalg::{ComplexMatrix, RealMatrix};
pub use constellation::{Constellation, SymbolVector};
pub use dm_beamformer::{DmProblem, DmSolution};
pub use num_complex::Complex64;
pub use qp_solver::{QpInstance, QpSettings, QpSolution};
pub use sim_engine::{CurvePoint, ScenarioConfig, Scheme, SchemeSelect, SweepSpec, TrialRecord};
pub use zf_precoder::ZfPrecoder;
