//! Monte Carlo experiment engine: Rayleigh block-fading channels, AWGN,
//! per-trial execution of the directional-modulation and zero-forcing
//! pipelines, and aggregation into sweep curves.
//!
//! # Random streams
//!
//! Every trial draws from its own ChaCha8 stream keyed by
//! `(master seed, sweep-point index, trial index)` through a SplitMix64
//! expansion ([`trial_rng`]). Trials are therefore independent of scheduling:
//! any thread count produces bit-identical results. Within a trial the draw
//! order is fixed — `H_R`, `H_E`, symbols, receiver noise, eavesdropper
//! noise — and both schemes reuse the same draws, so DM and ZF are compared
//! on identical channel realizations.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::complex_linalg::ComplexMatrix;
use crate::constellation::{ser_indices, Constellation};
use crate::dm_beamformer::{self, DmError};
use crate::eavesdropper::{self, EveObservation};
use crate::qp_solver::QpSettings;
use crate::zf_precoder::{PrecoderError, ZfPrecoder};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {field}: {message}")]
    InvalidConfig {
        field: &'static str,
        message: String,
    },
}

/// Transmission scheme of a single curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Dm,
    Zf,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Dm => "dm",
            Scheme::Zf => "zf",
        }
    }
}

/// Which pipelines a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelect {
    Dm,
    Zf,
    Both,
}

impl SchemeSelect {
    pub fn schemes(self) -> &'static [Scheme] {
        match self {
            SchemeSelect::Dm => &[Scheme::Dm],
            SchemeSelect::Zf => &[Scheme::Zf],
            SchemeSelect::Both => &[Scheme::Dm, Scheme::Zf],
        }
    }

    pub fn includes(self, scheme: Scheme) -> bool {
        self.schemes().contains(&scheme)
    }
}

/// Sweep specification: which knob varies across curve points.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    None,
    /// Vary the number of transmit antennas L.
    TransmitAntennas(Vec<usize>),
    /// Vary the required level; each point sets both `gamma_sqrt` (DM) and
    /// `beta` (ZF) to the swept value, since they play the same
    /// amplitude role in the two schemes.
    GammaSqrt(Vec<f64>),
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scheme: SchemeSelect,
    /// K, antennas at the legitimate receiver (one PSK stream each).
    pub receive_antennas: usize,
    /// L, antennas at the transmitter.
    pub transmit_antennas: usize,
    /// N, antennas at the eavesdropper.
    pub eve_antennas: usize,
    pub modulation_order: usize,
    pub gamma_sqrt: f64,
    pub beta: f64,
    /// Per-entry variance of the complex channel coefficients.
    pub channel_variance: f64,
    pub noise_variance_r: f64,
    pub noise_variance_e: f64,
    pub trials: usize,
    pub seed: u64,
    pub sweep: SweepSpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeSelect::Both,
            receive_antennas: 4,
            transmit_antennas: 8,
            eve_antennas: 6,
            modulation_order: 8,
            gamma_sqrt: 8.0,
            beta: 8.0,
            channel_variance: 1.0,
            noise_variance_r: 1.0,
            noise_variance_e: 1.0,
            trials: 10_000,
            seed: 0,
            sweep: SweepSpec::None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive_count = |field, v: usize| {
            if v == 0 {
                Err(SimError::InvalidConfig {
                    field,
                    message: "must be at least 1".into(),
                })
            } else {
                Ok(())
            }
        };
        positive_count("K", self.receive_antennas)?;
        positive_count("L", self.transmit_antennas)?;
        positive_count("N", self.eve_antennas)?;
        positive_count("trials", self.trials)?;
        if self.modulation_order < 2 || !self.modulation_order.is_power_of_two() {
            return Err(SimError::InvalidConfig {
                field: "M",
                message: format!(
                    "must be a power of two >= 2, got {}",
                    self.modulation_order
                ),
            });
        }
        if !(self.gamma_sqrt.is_finite() && self.gamma_sqrt >= 0.0) {
            return Err(SimError::InvalidConfig {
                field: "gamma_sqrt",
                message: format!("must be finite and >= 0, got {}", self.gamma_sqrt),
            });
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(SimError::InvalidConfig {
                field: "beta",
                message: format!("must be finite and > 0, got {}", self.beta),
            });
        }
        if !(self.channel_variance.is_finite() && self.channel_variance > 0.0) {
            return Err(SimError::InvalidConfig {
                field: "channel_variance",
                message: format!("must be finite and > 0, got {}", self.channel_variance),
            });
        }
        for (field, v) in [
            ("noise_variance_R", self.noise_variance_r),
            ("noise_variance_E", self.noise_variance_e),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidConfig {
                    field,
                    message: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if let SweepSpec::TransmitAntennas(values) = &self.sweep {
            if values.is_empty() {
                return Err(SimError::InvalidConfig {
                    field: "sweep",
                    message: "transmit-antenna sweep needs at least one value".into(),
                });
            }
            if values.iter().any(|&l| l == 0) {
                return Err(SimError::InvalidConfig {
                    field: "sweep",
                    message: "transmit-antenna counts must be at least 1".into(),
                });
            }
        }
        if let SweepSpec::GammaSqrt(values) = &self.sweep {
            if values.is_empty() {
                return Err(SimError::InvalidConfig {
                    field: "sweep",
                    message: "level sweep needs at least one value".into(),
                });
            }
            if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(SimError::InvalidConfig {
                    field: "sweep",
                    message: "swept levels must be finite and > 0".into(),
                });
            }
        }
        Ok(())
    }

    /// The per-point configurations a sweep expands into, with the x value
    /// reported for each point.
    pub fn sweep_points(&self) -> Vec<(f64, ScenarioConfig)> {
        match &self.sweep {
            SweepSpec::None => vec![(self.transmit_antennas as f64, {
                let mut c = self.clone();
                c.sweep = SweepSpec::None;
                c
            })],
            SweepSpec::TransmitAntennas(values) => values
                .iter()
                .map(|&l| {
                    let mut c = self.clone();
                    c.transmit_antennas = l;
                    c.sweep = SweepSpec::None;
                    (l as f64, c)
                })
                .collect(),
            SweepSpec::GammaSqrt(values) => values
                .iter()
                .map(|&g| {
                    let mut c = self.clone();
                    c.gamma_sqrt = g;
                    c.beta = g;
                    c.sweep = SweepSpec::None;
                    (g, c)
                })
                .collect(),
        }
    }
}

/// Which attack the eavesdropper ended up using in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveStrategy {
    DmFullEstimation,
    DmDirectPhase,
    ZfRecovery,
    ZfDirectPhase,
}

/// Outcome class of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    /// The design problem had no solution for this draw (structural or an
    /// empty feasible set); excluded from averages but counted.
    SkippedInfeasible,
    /// The solver failed numerically; excluded from averages but counted.
    SkippedNumerical,
}

/// Per-trial metrics. The metric fields are NaN unless `status` is
/// [`TrialStatus::Ok`].
#[derive(Debug, Clone, Copy)]
pub struct TrialRecord {
    pub consumed_power: f64,
    pub ser_r: f64,
    pub ser_e: f64,
    pub eve_strategy: EveStrategy,
    pub status: TrialStatus,
}

/// Records for the schemes a trial ran.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub dm: Option<TrialRecord>,
    pub zf: Option<TrialRecord>,
}

/// One aggregated sweep point for one scheme.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    /// Swept value: L for antenna sweeps, sqrt(gamma) for level sweeps, L
    /// for single-point runs.
    pub x: f64,
    pub scheme: Scheme,
    pub receive_antennas: usize,
    pub transmit_antennas: usize,
    pub eve_antennas: usize,
    pub gamma_sqrt: f64,
    pub beta: f64,
    pub mean_power: f64,
    pub mean_ser_r: f64,
    pub mean_ser_e: f64,
    pub stderr_power: f64,
    pub stderr_ser_r: f64,
    pub stderr_ser_e: f64,
    /// Trials that produced metrics; skipped trials are excluded from the
    /// means. A zero here flags a point where every draw was infeasible.
    pub trials_used: usize,
    pub trials_requested: usize,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-trial substream: a ChaCha8 generator keyed by the
/// master seed, the sweep-point index, and the trial index.
pub fn trial_rng(master_seed: u64, point_index: usize, trial_index: usize) -> ChaCha8Rng {
    let mut state = master_seed
        .wrapping_add((point_index as u64).wrapping_mul(0xA076_1D64_78BD_642F))
        .wrapping_add((trial_index as u64).wrapping_mul(0xE703_7ED1_A0B4_28DB));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Matrix of i.i.d. circularly symmetric complex Gaussian entries with
/// per-entry variance `variance`.
pub fn sample_rayleigh(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut impl Rng,
) -> ComplexMatrix {
    assert!(variance > 0.0, "channel variance must be positive");
    let scale = (variance / 2.0).sqrt();
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Complex AWGN vector with total per-sample variance `variance`. A zero
/// variance still consumes the stream, so configurations differ only in
/// scale, not in draw alignment.
pub fn sample_awgn(len: usize, variance: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    assert!(variance >= 0.0, "noise variance must be nonnegative");
    let scale = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

/// `signal + n` with `n` i.i.d. complex Gaussian of the given total
/// variance; variance zero returns the signal unchanged.
pub fn add_awgn(signal: &[Complex64], variance: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let noise = sample_awgn(signal.len(), variance, rng);
    signal.iter().zip(&noise).map(|(s, n)| s + n).collect()
}

fn add_vectors(signal: &[Complex64], noise: &[Complex64]) -> Vec<Complex64> {
    signal.iter().zip(noise).map(|(s, n)| s + n).collect()
}

fn skipped(strategy: EveStrategy, status: TrialStatus) -> TrialRecord {
    TrialRecord {
        consumed_power: f64::NAN,
        ser_r: f64::NAN,
        ser_e: f64::NAN,
        eve_strategy: strategy,
        status,
    }
}

/// Run one quasi-static block at the config's own parameters (any sweep on
/// the config is ignored here; `run_scenario` expands sweeps first).
pub fn run_trial(cfg: &ScenarioConfig, rng: &mut impl Rng) -> TrialOutcome {
    let constellation =
        Constellation::new(cfg.modulation_order).expect("validated modulation order");
    let k = cfg.receive_antennas;
    let l = cfg.transmit_antennas;
    let n = cfg.eve_antennas;

    // Fixed draw order; both schemes share these realizations.
    let h_r = sample_rayleigh(k, l, cfg.channel_variance, rng);
    let h_e = sample_rayleigh(n, l, cfg.channel_variance, rng);
    let symbols = constellation.sample_symbols(k, rng);
    let noise_r = sample_awgn(k, cfg.noise_variance_r, rng);
    let noise_e = sample_awgn(n, cfg.noise_variance_e, rng);

    let dm = cfg.scheme.includes(Scheme::Dm).then(|| {
        match dm_beamformer::build_problem(&h_r, &symbols, cfg.gamma_sqrt, None)
            .and_then(|p| dm_beamformer::solve(&p, &QpSettings::default()))
        {
            Ok(sol) => {
                let y_r = add_vectors(&h_r.matvec(&sol.w), &noise_r);
                let decisions_r: Vec<usize> =
                    y_r.iter().map(|z| constellation.detect(*z)).collect();
                let ser_r = ser_indices(symbols.indices(), &decisions_r)
                    .expect("one decision per stream");

                let y_e = add_vectors(&h_e.matvec(&sol.w), &noise_e);
                let obs = EveObservation {
                    y_e: &y_e,
                    h_e: &h_e,
                    h_r: &h_r,
                    noise_variance: cfg.noise_variance_e,
                };
                let (decisions_e, strategy) = if n >= l {
                    match eavesdropper::dm_attack_full(&obs, &constellation) {
                        Ok(d) => (d, EveStrategy::DmFullEstimation),
                        Err(_) => (
                            eavesdropper::dm_attack_direct(&obs, &constellation),
                            EveStrategy::DmDirectPhase,
                        ),
                    }
                } else {
                    (
                        eavesdropper::dm_attack_direct(&obs, &constellation),
                        EveStrategy::DmDirectPhase,
                    )
                };
                let ser_e = ser_indices(&symbols.indices()[..decisions_e.len()], &decisions_e)
                    .expect("aligned streams");
                TrialRecord {
                    consumed_power: sol.power,
                    ser_r,
                    ser_e,
                    eve_strategy: strategy,
                    status: TrialStatus::Ok,
                }
            }
            Err(DmError::InfeasibleStructure { .. }) | Err(DmError::EmptyFeasibleSet(_)) => {
                skipped(EveStrategy::DmDirectPhase, TrialStatus::SkippedInfeasible)
            }
            Err(_) => skipped(EveStrategy::DmDirectPhase, TrialStatus::SkippedNumerical),
        }
    });

    let zf = cfg.scheme.includes(Scheme::Zf).then(|| {
        match ZfPrecoder::build(&h_r, cfg.beta, None) {
            Ok(precoder) => {
                let x = precoder.transmit(&symbols);
                let consumed_power: f64 = x.iter().map(|v| v.norm_sqr()).sum();
                let y_r = add_vectors(&h_r.matvec(&x), &noise_r);
                let decisions_r: Vec<usize> =
                    y_r.iter().map(|z| constellation.detect(*z)).collect();
                let ser_r = ser_indices(symbols.indices(), &decisions_r)
                    .expect("one decision per stream");

                let y_e = add_vectors(&h_e.matvec(&x), &noise_e);
                let obs = EveObservation {
                    y_e: &y_e,
                    h_e: &h_e,
                    h_r: &h_r,
                    noise_variance: cfg.noise_variance_e,
                };
                let (decisions_e, strategy) = if n >= k {
                    match eavesdropper::zf_attack(&obs, &precoder, &constellation) {
                        Ok(d) => (d, EveStrategy::ZfRecovery),
                        Err(_) => (
                            eavesdropper::dm_attack_direct(&obs, &constellation),
                            EveStrategy::ZfDirectPhase,
                        ),
                    }
                } else {
                    (
                        eavesdropper::dm_attack_direct(&obs, &constellation),
                        EveStrategy::ZfDirectPhase,
                    )
                };
                let ser_e = ser_indices(&symbols.indices()[..decisions_e.len()], &decisions_e)
                    .expect("aligned streams");
                TrialRecord {
                    consumed_power,
                    ser_r,
                    ser_e,
                    eve_strategy: strategy,
                    status: TrialStatus::Ok,
                }
            }
            Err(PrecoderError::Undefined { .. }) => {
                skipped(EveStrategy::ZfDirectPhase, TrialStatus::SkippedInfeasible)
            }
            Err(_) => skipped(EveStrategy::ZfDirectPhase, TrialStatus::SkippedNumerical),
        }
    });

    TrialOutcome { dm, zf }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn aggregate(x: f64, scheme: Scheme, cfg: &ScenarioConfig, records: &[TrialRecord]) -> CurvePoint {
    let used: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.status == TrialStatus::Ok)
        .collect();
    let powers: Vec<f64> = used.iter().map(|r| r.consumed_power).collect();
    let ser_r: Vec<f64> = used.iter().map(|r| r.ser_r).collect();
    let ser_e: Vec<f64> = used.iter().map(|r| r.ser_e).collect();
    let (mean_power, stderr_power) = mean_and_stderr(&powers);
    let (mean_ser_r, stderr_ser_r) = mean_and_stderr(&ser_r);
    let (mean_ser_e, stderr_ser_e) = mean_and_stderr(&ser_e);
    CurvePoint {
        x,
        scheme,
        receive_antennas: cfg.receive_antennas,
        transmit_antennas: cfg.transmit_antennas,
        eve_antennas: cfg.eve_antennas,
        gamma_sqrt: cfg.gamma_sqrt,
        beta: cfg.beta,
        mean_power,
        mean_ser_r,
        mean_ser_e,
        stderr_power,
        stderr_ser_r,
        stderr_ser_e,
        trials_used: used.len(),
        trials_requested: records.len(),
    }
}

/// Run the whole scenario: expand the sweep, run `trials` independent
/// blocks per point (in parallel on the current rayon pool), and aggregate
/// one [`CurvePoint`] per (sweep value, scheme). Deterministic for a given
/// config, independent of the thread count.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<CurvePoint>, SimError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (point_index, (x, point_cfg)) in cfg.sweep_points().into_iter().enumerate() {
        let outcomes: Vec<TrialOutcome> = (0..point_cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(point_cfg.seed, point_index, trial);
                run_trial(&point_cfg, &mut rng)
            })
            .collect();
        for &scheme in cfg.scheme.schemes() {
            let records: Vec<TrialRecord> = outcomes
                .iter()
                .filter_map(|o| match scheme {
                    Scheme::Dm => o.dm,
                    Scheme::Zf => o.zf,
                })
                .collect();
            out.push(aggregate(x, scheme, &point_cfg, &records));
        }
    }
    Ok(out)
}
