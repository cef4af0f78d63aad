//! Flat key=value scenario files.
//!
//! The format is line-oriented: `key=value` pairs, `#` comments, blank
//! lines, and optional `[scenario N]` section headers for multi-scenario
//! files. A `[points]` header ends parsing, which lets a run manifest double
//! as a config file. Serialization and parsing round-trip exactly.

use dirmod_core::sim_engine::{ScenarioConfig, SchemeSelect, SweepSpec};

use crate::CliError;

pub fn scheme_label(s: SchemeSelect) -> &'static str {
    match s {
        SchemeSelect::Dm => "dm",
        SchemeSelect::Zf => "zf",
        SchemeSelect::Both => "both",
    }
}

fn parse_scheme(v: &str) -> Result<SchemeSelect, CliError> {
    match v {
        "dm" => Ok(SchemeSelect::Dm),
        "zf" => Ok(SchemeSelect::Zf),
        "both" => Ok(SchemeSelect::Both),
        other => Err(CliError::Config(format!(
            "scheme: expected dm, zf, or both, got {other}"
        ))),
    }
}

/// Serialize one scenario as key=value lines (no section header).
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    push("scheme", scheme_label(cfg.scheme).to_string());
    push("K", cfg.receive_antennas.to_string());
    push("L", cfg.transmit_antennas.to_string());
    push("N", cfg.eve_antennas.to_string());
    push("M", cfg.modulation_order.to_string());
    push("gamma_sqrt", cfg.gamma_sqrt.to_string());
    push("beta", cfg.beta.to_string());
    push("channel_variance", cfg.channel_variance.to_string());
    push("noise_variance_R", cfg.noise_variance_r.to_string());
    push("noise_variance_E", cfg.noise_variance_e.to_string());
    push("trials", cfg.trials.to_string());
    push("seed", cfg.seed.to_string());
    match &cfg.sweep {
        SweepSpec::None => push("sweep", "none".to_string()),
        SweepSpec::TransmitAntennas(values) => {
            push("sweep", "L".to_string());
            push(
                "sweep_values",
                values
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        SweepSpec::GammaSqrt(values) => {
            push("sweep", "gamma_sqrt".to_string());
            push(
                "sweep_values",
                values
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
    }
    out
}

#[derive(Default)]
struct Partial {
    cfg: ScenarioConfig,
    sweep_kind: Option<String>,
    sweep_values: Option<String>,
}

impl Partial {
    fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |key: &str, value: &str, what: &str| {
            CliError::Config(format!("{key}: expected {what}, got {value}"))
        };
        match key {
            "scheme" => self.cfg.scheme = parse_scheme(value)?,
            "K" => {
                self.cfg.receive_antennas =
                    value.parse().map_err(|_| bad(key, value, "a count"))?
            }
            "L" => {
                self.cfg.transmit_antennas =
                    value.parse().map_err(|_| bad(key, value, "a count"))?
            }
            "N" => self.cfg.eve_antennas = value.parse().map_err(|_| bad(key, value, "a count"))?,
            "M" => {
                self.cfg.modulation_order =
                    value.parse().map_err(|_| bad(key, value, "a count"))?
            }
            "gamma_sqrt" => {
                self.cfg.gamma_sqrt = value.parse().map_err(|_| bad(key, value, "a number"))?
            }
            "beta" => self.cfg.beta = value.parse().map_err(|_| bad(key, value, "a number"))?,
            "channel_variance" => {
                self.cfg.channel_variance =
                    value.parse().map_err(|_| bad(key, value, "a number"))?
            }
            "noise_variance_R" => {
                self.cfg.noise_variance_r =
                    value.parse().map_err(|_| bad(key, value, "a number"))?
            }
            "noise_variance_E" => {
                self.cfg.noise_variance_e =
                    value.parse().map_err(|_| bad(key, value, "a number"))?
            }
            "trials" => {
                self.cfg.trials = value.parse().map_err(|_| bad(key, value, "a count"))?
            }
            "seed" => {
                self.cfg.seed = value
                    .parse()
                    .map_err(|_| bad(key, value, "a 64-bit integer"))?
            }
            "sweep" => self.sweep_kind = Some(value.to_string()),
            "sweep_values" => self.sweep_values = Some(value.to_string()),
            other => {
                return Err(CliError::Config(format!("unknown config key: {other}")));
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = self.cfg;
        cfg.sweep = match self.sweep_kind.as_deref() {
            None | Some("none") => SweepSpec::None,
            Some("L") => {
                let raw = self.sweep_values.ok_or_else(|| {
                    CliError::Config("sweep=L requires sweep_values".to_string())
                })?;
                let values = raw
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        CliError::Config(format!("sweep_values: expected counts, got {raw}"))
                    })?;
                SweepSpec::TransmitAntennas(values)
            }
            Some("gamma_sqrt") => {
                let raw = self.sweep_values.ok_or_else(|| {
                    CliError::Config("sweep=gamma_sqrt requires sweep_values".to_string())
                })?;
                let values = raw
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        CliError::Config(format!("sweep_values: expected numbers, got {raw}"))
                    })?;
                SweepSpec::GammaSqrt(values)
            }
            Some(other) => {
                return Err(CliError::Config(format!(
                    "sweep: expected none, L, or gamma_sqrt, got {other}"
                )))
            }
        };
        Ok(cfg)
    }
}

/// Parse a config file (or a manifest) into its scenario list.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioConfig>, CliError> {
    let mut done: Vec<ScenarioConfig> = Vec::new();
    let mut current: Option<Partial> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if line == "[points]" {
                break;
            }
            if line.starts_with("[scenario") && line.ends_with(']') {
                if let Some(partial) = current.take() {
                    done.push(partial.finish()?);
                }
                current = Some(Partial::default());
                continue;
            }
            return Err(CliError::Config(format!(
                "line {}: unknown section {line}",
                lineno + 1
            )));
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected key=value, got {line}", lineno + 1))
        })?;
        current
            .get_or_insert_with(Partial::default)
            .apply(key.trim(), value.trim())?;
    }
    if let Some(partial) = current.take() {
        done.push(partial.finish()?);
    }
    if done.is_empty() {
        return Err(CliError::Config("config contains no scenarios".to_string()));
    }
    Ok(done)
}

/// Explicit flag values that override whatever a preset or config file set.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub scheme: Option<SchemeSelect>,
    pub receive_antennas: Option<usize>,
    pub transmit_antennas: Option<usize>,
    pub eve_antennas: Option<usize>,
    pub modulation_order: Option<usize>,
    pub gamma_sqrt: Option<f64>,
    pub beta: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = self.receive_antennas {
            cfg.receive_antennas = v;
        }
        if let Some(v) = self.transmit_antennas {
            cfg.transmit_antennas = v;
        }
        if let Some(v) = self.eve_antennas {
            cfg.eve_antennas = v;
        }
        if let Some(v) = self.modulation_order {
            cfg.modulation_order = v;
        }
        if let Some(v) = self.gamma_sqrt {
            cfg.gamma_sqrt = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_a_single_scenario() {
        let cfg = ScenarioConfig {
            seed: 42,
            trials: 123,
            sweep: SweepSpec::TransmitAntennas(vec![5, 6, 7]),
            ..Default::default()
        };
        let text = serialize_scenario(&cfg);
        let parsed = parse_scenarios(&text).unwrap();
        assert_eq!(parsed, vec![cfg]);
    }

    #[test]
    fn round_trips_gamma_sweep_floats() {
        let cfg = ScenarioConfig {
            gamma_sqrt: 2.5,
            beta: 2.5,
            sweep: SweepSpec::GammaSqrt(vec![0.5, 1.25, 10.0]),
            ..Default::default()
        };
        let parsed = parse_scenarios(&serialize_scenario(&cfg)).unwrap();
        assert_eq!(parsed, vec![cfg]);
    }

    #[test]
    fn parses_sections_and_stops_at_points() {
        let text = "\
# comment
[scenario 0]
scheme=dm
K=2
[scenario 1]
scheme=zf
K=3
[points]
x,scheme,ignored
";
        let parsed = parse_scenarios(text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].scheme, SchemeSelect::Dm);
        assert_eq!(parsed[0].receive_antennas, 2);
        assert_eq!(parsed[1].scheme, SchemeSelect::Zf);
        assert_eq!(parsed[1].receive_antennas, 3);
    }

    #[test]
    fn names_the_offending_key() {
        let err = parse_scenarios("K=four\n").unwrap_err();
        assert!(err.to_string().contains("K"));
        let err = parse_scenarios("bogus=1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
