//! Scenario presets for the three standard experiments.

use dirmod_core::sim_engine::{ScenarioConfig, SchemeSelect, SweepSpec};

/// Default trials per sweep point.
pub const DEFAULT_TRIALS: usize = 10_000;

fn base(seed: u64, trials: usize) -> ScenarioConfig {
    ScenarioConfig {
        scheme: SchemeSelect::Both,
        modulation_order: 8,
        gamma_sqrt: 8.0,
        beta: 8.0,
        channel_variance: 1.0,
        noise_variance_r: 1.0,
        noise_variance_e: 1.0,
        trials,
        seed,
        ..Default::default()
    }
}

fn antenna_sweep() -> SweepSpec {
    SweepSpec::TransmitAntennas((5..=12).collect())
}

/// Average consumed power versus the number of transmit antennas, for
/// receiver sizes K in {2, 3, 4} with N = 6 and sqrt(gamma) = beta = 8.
pub fn fig2(seed: u64, trials: usize) -> Vec<ScenarioConfig> {
    [2, 3, 4]
        .into_iter()
        .map(|k| ScenarioConfig {
            receive_antennas: k,
            eve_antennas: 6,
            sweep: antenna_sweep(),
            ..base(seed, trials)
        })
        .collect()
}

/// Average SER versus the number of transmit antennas for K = 4 and
/// eavesdropper sizes N in {6, 8}, sqrt(gamma) = beta = 8.
pub fn fig3(seed: u64, trials: usize) -> Vec<ScenarioConfig> {
    [6, 8]
        .into_iter()
        .map(|n| ScenarioConfig {
            receive_antennas: 4,
            eve_antennas: n,
            sweep: antenna_sweep(),
            ..base(seed, trials)
        })
        .collect()
}

/// Average SER versus the required component level for L = 8, N = 6; each
/// sweep point sets both sqrt(gamma) and beta to the swept value.
pub fn fig4(seed: u64, trials: usize) -> Vec<ScenarioConfig> {
    vec![ScenarioConfig {
        receive_antennas: 4,
        transmit_antennas: 8,
        eve_antennas: 6,
        sweep: SweepSpec::GammaSqrt(vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0]),
        ..base(seed, trials)
    }]
}

pub fn by_name(name: &str, seed: u64, trials: usize) -> Option<Vec<ScenarioConfig>> {
    match name {
        "fig2" => Some(fig2(seed, trials)),
        "fig3" => Some(fig3(seed, trials)),
        "fig4" => Some(fig4(seed, trials)),
        _ => None,
    }
}
