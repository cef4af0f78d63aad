//! Directional-modulation beamformer design.
//!
//! Given the legitimate channel `H_R`, a block of PSK symbols `s`, and a
//! required in-phase/quadrature level `sqrt(gamma)`, the design picks the
//! minimum-power antenna weights `w` such that each receive antenna observes
//! a signal with exactly the intended symbol phase and at least the required
//! component levels.
//!
//! The pipeline: linearize the per-antenna phase equality into one real row
//! per receive antenna, rewrite everything over the stacked real vector
//! `[Re(w); Im(w)]`, eliminate the phase equalities by restricting to an
//! orthonormal null-space basis `E`, and solve the remaining minimum-norm
//! problem `min ||lambda||^2  s.t.  G lambda >= h` with the QP solver. The
//! beamformer is recovered as `w_tilde = E lambda`.

use num_complex::Complex64;
use thiserror::Error;

use crate::complex_linalg::{
    default_rank_tol, null_space_basis, ComplexMatrix, LinalgError, RealMatrix,
};
use crate::constellation::{wrap_phase, SymbolVector};
use crate::qp_solver::{self, QpError, QpInstance, QpSettings};

#[derive(Debug, Error)]
pub enum DmError {
    #[error(
        "no null-space direction for K={receive_antennas} receive and \
         L={transmit_antennas} transmit antennas; the design requires L > K/2"
    )]
    InfeasibleStructure {
        receive_antennas: usize,
        transmit_antennas: usize,
    },
    #[error("the level constraints carve an empty feasible set")]
    EmptyFeasibleSet(#[source] QpError),
    #[error("beamformer solve failed")]
    Numerical(#[source] QpError),
    #[error("inconsistent inputs: {0}")]
    Shape(String),
    #[error("solution failed validation: {0}")]
    Validation(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Post-solve bound on the per-antenna phase error, radians.
const PHASE_RESIDUAL_BOUND: f64 = 1e-6;
/// Post-solve bound on constraint violation.
const SLACK_BOUND: f64 = -1e-8;

/// The assembled design problem with every derived block kept for
/// inspection and testing.
#[derive(Debug, Clone)]
pub struct DmProblem {
    pub h_r: ComplexMatrix,
    pub symbols: SymbolVector,
    pub gamma_sqrt: f64,
    /// `[Re(H_R), -Im(H_R)]`, K x 2L.
    pub h_r1: RealMatrix,
    /// `[Im(H_R), Re(H_R)]`, K x 2L.
    pub h_r2: RealMatrix,
    /// Phase-equality rows, K x 2L; row i has null space
    /// `{w_tilde : arg(h_i^T w) = arg(s_i) mod pi}`.
    pub phase_constraints: RealMatrix,
    /// Orthonormal null-space basis of the phase rows, 2L x (2L - rank).
    pub null_basis: RealMatrix,
    /// Stacked level-constraint matrix, 2K x dim.
    pub g: RealMatrix,
    /// Stacked level requirements, length 2K.
    pub h: Vec<f64>,
}

/// A solved design: the reduced variable, the stacked real weights, the
/// complex beamformer, and its diagnostics.
#[derive(Debug, Clone)]
pub struct DmSolution {
    pub lambda: Vec<f64>,
    pub w_tilde: Vec<f64>,
    pub w: Vec<Complex64>,
    /// Consumed transmit power `||w||^2`.
    pub power: f64,
    /// Worst-case wrapped phase error over the receive antennas, radians.
    pub phase_residual: f64,
    /// `G lambda - h`; all entries must be >= -1e-8.
    pub constraint_slacks: Vec<f64>,
}

/// One real row per receive antenna expressing the phase equality
/// `arg(h_i^T w) = arg(s_i)` in the rotated form
/// `sin(theta_i) * Re(h_i^T w) - cos(theta_i) * Im(h_i^T w) = 0`,
/// which stays bounded where a tangent-based row would blow up
/// (symbol phases of +-pi/2).
pub fn build_phase_constraints(h_r: &ComplexMatrix, symbols: &SymbolVector) -> RealMatrix {
    let k = h_r.rows();
    let l = h_r.cols();
    assert_eq!(k, symbols.len(), "one symbol per receive antenna");
    RealMatrix::from_fn(k, 2 * l, |i, j| {
        let s = symbols.values()[i];
        let theta = s.im.atan2(s.re);
        let (sin_t, cos_t) = theta.sin_cos();
        // H_R1 = [Re, -Im] and H_R2 = [Im, Re], assembled inline.
        let (re, im) = if j < l {
            let e = h_r.get(i, j);
            (e.re, e.im)
        } else {
            let e = h_r.get(i, j - l);
            (-e.im, e.re)
        };
        sin_t * re - cos_t * im
    })
}

/// Assemble the full design problem. Fails with
/// [`DmError::InfeasibleStructure`] when the phase rows leave no null-space
/// direction, which is exactly the `L <= K/2` regime for generic channels.
pub fn build_problem(
    h_r: &ComplexMatrix,
    symbols: &SymbolVector,
    gamma_sqrt: f64,
    rank_tol: Option<f64>,
) -> Result<DmProblem, DmError> {
    let k = h_r.rows();
    let l = h_r.cols();
    if k == 0 || l == 0 {
        return Err(DmError::Shape("channel must be at least 1x1".into()));
    }
    if symbols.len() != k {
        return Err(DmError::Shape(format!(
            "channel has {k} receive antennas but {} symbols were supplied",
            symbols.len()
        )));
    }
    if !(gamma_sqrt.is_finite() && gamma_sqrt >= 0.0) {
        return Err(DmError::Shape(format!(
            "gamma_sqrt must be finite and nonnegative, got {gamma_sqrt}"
        )));
    }

    let h_r1 = RealMatrix::from_fn(k, 2 * l, |i, j| {
        if j < l {
            h_r.get(i, j).re
        } else {
            -h_r.get(i, j - l).im
        }
    });
    let h_r2 = RealMatrix::from_fn(k, 2 * l, |i, j| {
        if j < l {
            h_r.get(i, j).im
        } else {
            h_r.get(i, j - l).re
        }
    });

    let phase_constraints = build_phase_constraints(h_r, symbols);
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(k, 2 * l));
    let null_basis = null_space_basis(&phase_constraints, tol)?;
    if null_basis.cols() == 0 {
        return Err(DmError::InfeasibleStructure {
            receive_antennas: k,
            transmit_antennas: l,
        });
    }

    let dim = null_basis.cols();
    let upper = h_r1.matmul(&null_basis);
    let lower = h_r2.matmul(&null_basis);
    let g = RealMatrix::from_fn(2 * k, dim, |row, col| {
        if row < k {
            symbols.values()[row].re * upper.get(row, col)
        } else {
            symbols.values()[row - k].im * lower.get(row - k, col)
        }
    });
    let h: Vec<f64> = (0..2 * k)
        .map(|row| {
            let s = symbols.values()[row % k];
            let part = if row < k { s.re } else { s.im };
            gamma_sqrt * part * part
        })
        .collect();

    Ok(DmProblem {
        h_r: h_r.clone(),
        symbols: symbols.clone(),
        gamma_sqrt,
        h_r1,
        h_r2,
        phase_constraints,
        null_basis,
        g,
        h,
    })
}

/// Solve the assembled problem with the given QP settings and reconstruct
/// the complex beamformer.
pub fn solve(problem: &DmProblem, qp: &QpSettings) -> Result<DmSolution, DmError> {
    let inst = QpInstance::with_settings(problem.g.clone(), problem.h.clone(), qp)
        .map_err(DmError::Numerical)?;
    let qp_sol = qp_solver::solve(&inst).map_err(|e| match e {
        QpError::Infeasible { .. } => DmError::EmptyFeasibleSet(e),
        other => DmError::Numerical(other),
    })?;

    let lambda = qp_sol.x;
    let w_tilde = problem.null_basis.matvec(&lambda);
    let l = problem.h_r.cols();
    let w: Vec<Complex64> = (0..l)
        .map(|i| Complex64::new(w_tilde[i], w_tilde[l + i]))
        .collect();
    let power: f64 = w.iter().map(|c| c.norm_sqr()).sum();

    let received = problem.h_r.matvec(&w);
    let phase_residual = received
        .iter()
        .zip(problem.symbols.values())
        .map(|(r, s)| wrap_phase(r.im.atan2(r.re) - s.im.atan2(s.re)).abs())
        .fold(0.0f64, f64::max);
    let constraint_slacks: Vec<f64> = problem
        .g
        .matvec(&lambda)
        .iter()
        .zip(&problem.h)
        .map(|(gx, hi)| gx - hi)
        .collect();

    if phase_residual > PHASE_RESIDUAL_BOUND {
        return Err(DmError::Validation(format!(
            "phase residual {phase_residual:.3e} exceeds {PHASE_RESIDUAL_BOUND:.1e}"
        )));
    }
    if let Some(worst) = constraint_slacks
        .iter()
        .cloned()
        .reduce(f64::min)
        .filter(|w| *w < SLACK_BOUND)
    {
        return Err(DmError::Validation(format!(
            "constraint slack {worst:.3e} below {SLACK_BOUND:.1e}"
        )));
    }

    Ok(DmSolution {
        lambda,
        w_tilde,
        w,
        power,
        phase_residual,
        constraint_slacks,
    })
}

/// Noise-free receive vector `H w`.
pub fn received_noiseless(h: &ComplexMatrix, w: &[Complex64]) -> Vec<Complex64> {
    h.matvec(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Constellation;
    use crate::qp_solver::solve_by_active_set_enumeration;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_channel(k: usize, l: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(k, l, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_case(
        k: usize,
        l: usize,
        seed: u64,
    ) -> (ComplexMatrix, SymbolVector, Constellation) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Constellation::new(8).unwrap();
        let h_r = random_channel(k, l, &mut rng);
        let s = c.sample_symbols(k, &mut rng);
        (h_r, s, c)
    }

    #[test]
    fn phase_rows_at_axis_symbols() {
        let c = Constellation::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h_r = random_channel(2, 3, &mut rng);
        // Symbol 0 has phase 0; symbol 2 has phase pi/2 (the tan-singular case).
        let s = SymbolVector::from_indices(&c, &[0, 2]).unwrap();
        let rows = build_phase_constraints(&h_r, &s);
        let problem = build_problem(&h_r, &s, 1.0, None).unwrap();
        for j in 0..6 {
            // theta = 0: row is -H_R2[i, :]   (forces Im(h^T w) = 0)
            assert!((rows.get(0, j) + problem.h_r2.get(0, j)).abs() < 1e-12);
            // theta = pi/2: row is H_R1[i, :] (forces Re(h^T w) = 0)
            assert!((rows.get(1, j) - problem.h_r1.get(1, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn problem_shapes_follow_the_antenna_counts() {
        let (h_r, s, _) = random_case(4, 8, 2);
        let p = build_problem(&h_r, &s, 8.0, None).unwrap();
        assert_eq!(p.h_r1.rows(), 4);
        assert_eq!(p.h_r1.cols(), 16);
        assert_eq!(p.null_basis.rows(), 16);
        assert_eq!(p.null_basis.cols(), 12);
        assert_eq!(p.g.rows(), 8);
        assert_eq!(p.g.cols(), 12);
        assert_eq!(p.h.len(), 8);

        let (h_r, s, _) = random_case(1, 1, 3);
        let p = build_problem(&h_r, &s, 8.0, None).unwrap();
        assert_eq!(p.null_basis.cols(), 1);
        assert_eq!(p.g.rows(), 2);
    }

    #[test]
    fn too_few_transmit_antennas_is_structurally_infeasible() {
        let (h_r, s, _) = random_case(3, 1, 4);
        match build_problem(&h_r, &s, 8.0, None) {
            Err(DmError::InfeasibleStructure {
                receive_antennas: 3,
                transmit_antennas: 1,
            }) => {}
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn null_basis_annihilates_phase_rows() {
        let (h_r, s, _) = random_case(4, 8, 5);
        let p = build_problem(&h_r, &s, 8.0, None).unwrap();
        let prod = p.phase_constraints.matmul(&p.null_basis);
        for c in 0..prod.cols() {
            let norm: f64 = (0..prod.rows())
                .map(|r| prod.get(r, c) * prod.get(r, c))
                .sum::<f64>()
                .sqrt();
            assert!(norm <= 1e-8 * p.phase_constraints.frobenius_norm());
        }
    }

    #[test]
    fn single_antenna_closed_form() {
        let c = Constellation::new(8).unwrap();
        let s = SymbolVector::from_indices(&c, &[1]).unwrap(); // phase pi/4
        for (h, expected_power) in [
            (Complex64::new(1.0, 0.0), 64.0),
            (Complex64::new(2.0, 0.0), 16.0),
        ] {
            let h_r = ComplexMatrix::new(1, 1, vec![h]).unwrap();
            let p = build_problem(&h_r, &s, 8.0, None).unwrap();
            let sol = solve(&p, &QpSettings::default()).unwrap();
            assert!(
                (sol.power - expected_power).abs() <= 1e-10 * expected_power,
                "power {} vs {}",
                sol.power,
                expected_power
            );
            let w_expect = Complex64::from_polar(8.0, PI / 4.0) / h;
            assert!((sol.w[0] - w_expect).norm() < 1e-9);
        }
    }

    #[test]
    fn matches_enumeration_oracle_on_small_instances() {
        for seed in 0..40 {
            let (h_r, s, _) = random_case(2, 3, 1000 + seed);
            let p = build_problem(&h_r, &s, 8.0, None).unwrap();
            let sol = solve(&p, &QpSettings::default()).unwrap();
            let inst = QpInstance::new(p.g.clone(), p.h.clone()).unwrap();
            let oracle = solve_by_active_set_enumeration(&inst).unwrap();
            assert!(
                (sol.power - oracle.objective).abs() <= 1e-6 * oracle.objective.max(1e-12),
                "seed {seed}: {} vs {}",
                sol.power,
                oracle.objective
            );
        }
    }

    #[test]
    fn received_noiseless_basics() {
        let (h_r, _, _) = random_case(3, 4, 6);
        let zero = vec![Complex64::new(0.0, 0.0); 4];
        assert!(received_noiseless(&h_r, &zero)
            .iter()
            .all(|v| v.norm() == 0.0));
        let eye = ComplexMatrix::identity(4);
        let w: Vec<Complex64> = (0..4)
            .map(|i| Complex64::new(i as f64, -(i as f64)))
            .collect();
        let out = received_noiseless(&eye, &w);
        for (a, b) in out.iter().zip(&w) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn solved_instance_meets_phase_and_level_constraints() {
        let gamma_sqrt = 8.0;
        for seed in 0..25 {
            let (h_r, s, _) = random_case(4, 8, 2000 + seed);
            let p = build_problem(&h_r, &s, gamma_sqrt, None).unwrap();
            let sol = solve(&p, &QpSettings::default()).unwrap();
            let received = received_noiseless(&h_r, &sol.w);
            for (r, sv) in received.iter().zip(s.values()) {
                let phase_err = wrap_phase(r.im.atan2(r.re) - sv.im.atan2(sv.re)).abs();
                assert!(phase_err <= 1e-6);
                assert!(sv.re * r.re >= gamma_sqrt * sv.re * sv.re - 1e-8);
                assert!(sv.im * r.im >= gamma_sqrt * sv.im * sv.im - 1e-8);
                // amplitude consequence
                assert!(r.norm() >= gamma_sqrt - 1e-6);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn norm_is_preserved_through_the_basis(seed in 0u64..5000) {
            let (h_r, s, _) = random_case(3, 6, seed);
            let p = build_problem(&h_r, &s, 4.0, None).unwrap();
            let sol = solve(&p, &QpSettings::default()).unwrap();
            let lambda_sq: f64 = sol.lambda.iter().map(|v| v * v).sum();
            prop_assert!((sol.power - lambda_sq).abs() <= 1e-10 * lambda_sq.max(1e-30));
            let wt_sq: f64 = sol.w_tilde.iter().map(|v| v * v).sum();
            prop_assert!((sol.power - wt_sq).abs() <= 1e-10 * wt_sq.max(1e-30));
        }

        #[test]
        fn scaling_the_level_scales_the_solution(seed in 0u64..5000, c in 0.1f64..10.0) {
            let (h_r, s, _) = random_case(2, 4, seed);
            let base = solve(&build_problem(&h_r, &s, 4.0, None).unwrap(), &QpSettings::default()).unwrap();
            let scaled = solve(&build_problem(&h_r, &s, 4.0 * c, None).unwrap(), &QpSettings::default()).unwrap();
            prop_assert!((scaled.power - c * c * base.power).abs() <= 1e-7 * (1.0 + c * c * base.power));
            for (a, b) in scaled.w.iter().zip(&base.w) {
                prop_assert!((a - b * c).norm() <= 1e-7 * (1.0 + (b * c).norm()));
            }
        }

        #[test]
        fn sign_ambiguity_is_resolved(seed in 0u64..5000) {
            let (h_r, s, _) = random_case(4, 6, seed);
            let p = build_problem(&h_r, &s, 2.0, None).unwrap();
            let sol = solve(&p, &QpSettings::default()).unwrap();
            let received = received_noiseless(&h_r, &sol.w);
            for (r, sv) in received.iter().zip(s.values()) {
                prop_assert!(sv.re * r.re >= -1e-9);
                prop_assert!(sv.im * r.im >= -1e-9);
            }
        }
    }
}
