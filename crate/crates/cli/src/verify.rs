//! The `verify` subcommand: cross-validates the QP solver against the
//! exhaustive enumeration oracle on randomized instances, and checks the
//! Monte Carlo detector against the quadrature SER reference.

use std::fmt::Write as _;

use dirmod_core::complex_linalg::RealMatrix;
use dirmod_core::constellation::Constellation;
use dirmod_core::qp_solver::{self, QpError, QpInstance, QpSolution};
use dirmod_core::reference::psk_ser_reference;
use dirmod_core::sim_engine::{add_awgn, trial_rng};
use rand::Rng;
use rayon::prelude::*;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub instances: usize,
    pub seed: u64,
    pub ser_trials: usize,
    pub objective_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            instances: 1000,
            seed: 0,
            ser_trials: 200_000,
            objective_tol: 1e-8,
        }
    }
}

#[derive(Debug, Default)]
pub struct VerifyReport {
    pub qp_instances: usize,
    pub qp_infeasible: usize,
    pub ser_cases: usize,
}

/// Campaign stream ids; campaigns never share substreams.
const QP_STREAM: usize = 0;
const SER_STREAM: usize = 1;

fn render_instance(g: &RealMatrix, h: &[f64], seed: u64, index: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "replay: campaign seed {seed}, instance {index} ({} x {})",
        g.rows(),
        g.cols()
    );
    for r in 0..g.rows() {
        let row: Vec<String> = g.row(r).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "G[{r}] = {}", row.join(" "));
    }
    let hrow: Vec<String> = h.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "h = {}", hrow.join(" "));
    out
}

fn random_qp(seed: u64, index: usize) -> (QpInstance, RealMatrix, Vec<f64>) {
    let mut rng = trial_rng(seed, QP_STREAM, index);
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=11);
    let scale = [0.1, 1.0, 10.0][rng.random_range(0..3)];
    let mut g = RealMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let mut h: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
    // One instance in ten gets a deliberately contradictory pair of rows so
    // both routes exercise their infeasibility reporting.
    if rng.random_range(0..10) == 0 {
        let j = rng.random_range(0..m);
        let negated: Vec<f64> = g.row(j).iter().map(|v| -v).collect();
        let mut flat: Vec<f64> = g.entries().to_vec();
        flat.extend(negated);
        g = RealMatrix::new(m + 1, n, flat).expect("finite entries");
        h.push(-h[j] + scale);
    }
    let inst = QpInstance::new(g.clone(), h.clone()).expect("valid instance");
    (inst, g, h)
}

fn check_kkt(inst: &QpInstance, sol: &QpSolution) -> Result<(), String> {
    let h = inst.bounds();
    let h_inf = h.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = inst.tolerance();
    // Degenerate cones blow the minimizer (and its multipliers) up by
    // orders of magnitude; the stationarity and complementarity rounding
    // floors grow along with them.
    let relax = 1.0 + sol.objective;
    let slacks: Vec<f64> = inst
        .constraints()
        .matvec(&sol.x)
        .iter()
        .zip(h)
        .map(|(gx, hi)| gx - hi)
        .collect();
    if let Some(s) = slacks.iter().find(|s| **s < -tol * (1.0 + h_inf)) {
        return Err(format!("primal violation {s:.3e}"));
    }
    let xnorm = sol.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gt_u = inst.constraints().transpose_matvec(&sol.duals);
    for (xi, gi) in sol.x.iter().zip(&gt_u) {
        if (2.0 * xi - gi).abs() > tol * (1.0 + xnorm) * relax {
            return Err(format!("stationarity residual {:.3e}", (2.0 * xi - gi).abs()));
        }
    }
    for (i, (u, s)) in sol.duals.iter().zip(&slacks).enumerate() {
        if *u < -tol {
            return Err(format!("negative dual {u:.3e} at row {i}"));
        }
        if (u * s).abs() > tol * (1.0 + h_inf) * relax {
            return Err(format!("complementarity residual {:.3e} at row {i}", (u * s).abs()));
        }
    }
    Ok(())
}

fn check_certificate(
    g: &RealMatrix,
    h: &[f64],
    certificate: &Option<Vec<f64>>,
) -> Result<(), String> {
    let Some(cert) = certificate else {
        return Ok(());
    };
    if cert.iter().any(|c| *c < 0.0) {
        return Err("certificate has negative entries".to_string());
    }
    let gt = g.transpose_matvec(cert);
    let scale: f64 = cert.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
    if gt.iter().any(|v| v.abs() > 1e-6 * scale) {
        return Err("certificate does not annihilate G^T".to_string());
    }
    let hc: f64 = cert.iter().zip(h).map(|(c, hi)| c * hi).sum();
    if hc <= 0.0 {
        return Err(format!("certificate has h^T u = {hc:.3e} <= 0"));
    }
    Ok(())
}

fn qp_campaign(opts: &VerifyOptions) -> Result<(usize, usize), CliError> {
    let failures: Vec<String> = (0..opts.instances)
        .into_par_iter()
        .filter_map(|index| {
            let (inst, g, h) = random_qp(opts.seed, index);
            let outcome = match (
                qp_solver::solve(&inst),
                qp_solver::solve_by_active_set_enumeration(&inst),
            ) {
                (Ok(a), Ok(b)) => {
                    // Scale-aware gap: the campaign includes rescaled
                    // instances whose objectives reach 1e5, where an
                    // absolute gap would measure f64 resolution, not
                    // solver agreement.
                    let gap = (a.objective - b.objective).abs();
                    let budget = opts.objective_tol * (1.0 + a.objective.min(b.objective));
                    if gap > budget {
                        Err(format!(
                            "objective gap {gap:.3e} exceeds {budget:.3e} (solver {}, oracle {})",
                            a.objective, b.objective
                        ))
                    } else {
                        check_kkt(&inst, &a)
                    }
                }
                (
                    Err(QpError::Infeasible { certificate, .. }),
                    Err(QpError::Infeasible { .. }),
                ) => check_certificate(&g, &h, &certificate),
                (a, b) => Err(format!("route disagreement: solver {a:?}, oracle {b:?}")),
            };
            outcome.err().map(|msg| {
                format!("{msg}\n{}", render_instance(&g, &h, opts.seed, index))
            })
        })
        .collect();
    if let Some(first) = failures.first() {
        return Err(CliError::Verification(format!(
            "QP campaign failed ({} of {} instances):\n{first}",
            failures.len(),
            opts.instances
        )));
    }
    let infeasible = (0..opts.instances)
        .into_par_iter()
        .filter(|&index| {
            let (inst, _, _) = random_qp(opts.seed, index);
            matches!(qp_solver::solve(&inst), Err(QpError::Infeasible { .. }))
        })
        .count();
    Ok((opts.instances, infeasible))
}

fn ser_campaign(opts: &VerifyOptions) -> Result<usize, CliError> {
    let cases: &[(usize, f64, f64)] = &[
        (8, 2.0, 1.0),
        (8, 4.0, 1.0),
        (8, 8.0, 1.0),
        (4, 1.5, 2.0),
        (2, 1.0, 1.0),
    ];
    for (case_idx, &(order, amplitude, variance)) in cases.iter().enumerate() {
        let constellation = Constellation::new(order).expect("power-of-two order");
        let mut rng = trial_rng(opts.seed, SER_STREAM, case_idx);
        let mut errors = 0usize;
        for _ in 0..opts.ser_trials {
            let m = rng.random_range(0..order);
            let sent = constellation.point(m) * amplitude;
            let received = add_awgn(&[sent], variance, &mut rng)[0];
            if constellation.detect(received) != m {
                errors += 1;
            }
        }
        let empirical = errors as f64 / opts.ser_trials as f64;
        let reference = psk_ser_reference(order, amplitude, variance);
        let stderr = (reference * (1.0 - reference) / opts.ser_trials as f64).sqrt();
        let tol = 3.0 * stderr;
        if (empirical - reference).abs() > tol {
            return Err(CliError::Verification(format!(
                "SER campaign failed: case {case_idx} (M={order}, A={amplitude}, var={variance}): \
                 empirical {empirical} vs reference {reference} (tolerance {tol:.3e}); \
                 replay with campaign seed {} and {} trials",
                opts.seed, opts.ser_trials
            )));
        }
    }
    Ok(cases.len())
}

/// Run both campaigns; any failure carries a replayable description of the
/// offending case.
pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport, CliError> {
    if opts.instances == 0 {
        return Err(CliError::Config("instances must be at least 1".to_string()));
    }
    if opts.ser_trials == 0 {
        return Err(CliError::Config("trials must be at least 1".to_string()));
    }
    if !(opts.objective_tol.is_finite() && opts.objective_tol >= 0.0) {
        return Err(CliError::Config(
            "objective-tol must be finite and >= 0".to_string(),
        ));
    }
    let (qp_instances, qp_infeasible) = qp_campaign(opts)?;
    let ser_cases = ser_campaign(opts)?;
    Ok(VerifyReport {
        qp_instances,
        qp_infeasible,
        ser_cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign_passes() {
        let opts = VerifyOptions {
            instances: 60,
            ser_trials: 20_000,
            ..Default::default()
        };
        let report = run_verify(&opts).unwrap();
        assert_eq!(report.qp_instances, 60);
        assert_eq!(report.ser_cases, 5);
        assert!(report.qp_infeasible > 0, "campaign should include infeasible draws");
    }

    #[test]
    fn zero_objective_tolerance_fails_with_replay_info() {
        let opts = VerifyOptions {
            instances: 60,
            ser_trials: 1000,
            objective_tol: 0.0,
            ..Default::default()
        };
        let err = run_verify(&opts).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("replay"), "message should carry the replay case: {msg}");
    }

    #[test]
    fn campaigns_are_seed_reproducible() {
        let opts = VerifyOptions {
            instances: 30,
            ser_trials: 5000,
            ..Default::default()
        };
        let a = run_verify(&opts).unwrap();
        let b = run_verify(&opts).unwrap();
        assert_eq!(a.qp_infeasible, b.qp_infeasible);
    }
}
