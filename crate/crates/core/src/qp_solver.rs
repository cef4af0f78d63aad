//! Minimum-norm quadratic programming: `min ||x||^2` subject to `G x >= h`,
//! with KKT-certified solutions and an exhaustive small-instance oracle.
//!
//! The solver is a dual active-set method for projecting the origin onto the
//! constraint polyhedron. It starts at the unconstrained minimum `x = 0`,
//! repeatedly pulls in the most violated constraint, and drops working
//! constraints whose multiplier would turn negative. No phase-one problem is
//! needed, every iterate satisfies the stationarity condition
//! `2x = G^T u`, and an empty polyhedron surfaces as a Farkas certificate
//! (`u >= 0`, `G^T u = 0`, `h^T u > 0`).

use thiserror::Error;

use crate::complex_linalg::{least_squares_min_norm, LinalgError, RealMatrix};

/// Relative threshold for treating the projected constraint normal as zero.
const Z_TOL: f64 = 1e-11;
/// Absolute floor applied to all scaled tolerances.
const TOL_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("infeasible: constraint {most_violated} cannot be satisfied")]
    Infeasible {
        most_violated: usize,
        /// Farkas certificate when available: u >= 0 with G^T u = 0 and
        /// h^T u > 0. The enumeration oracle reports `None`.
        certificate: Option<Vec<f64>>,
    },
    #[error("no KKT point after {iterations} iterations")]
    IterationLimit { iterations: usize },
    #[error("invalid instance: {0}")]
    BadInstance(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Solver knobs shared by every entry point that runs the QP.
#[derive(Debug, Clone)]
pub struct QpSettings {
    pub tolerance: f64,
    /// `None` selects the size-dependent default `10 * (m + n)^2`.
    pub max_iterations: Option<usize>,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: None,
        }
    }
}

/// A minimum-norm problem instance: `min ||x||^2  s.t.  G x >= h`.
#[derive(Debug, Clone)]
pub struct QpInstance {
    g: RealMatrix,
    h: Vec<f64>,
    tolerance: f64,
    max_iterations: usize,
}

impl QpInstance {
    pub fn new(g: RealMatrix, h: Vec<f64>) -> Result<Self, QpError> {
        Self::with_settings(g, h, &QpSettings::default())
    }

    pub fn with_settings(
        g: RealMatrix,
        h: Vec<f64>,
        settings: &QpSettings,
    ) -> Result<Self, QpError> {
        if g.cols() == 0 {
            return Err(QpError::BadInstance("n must be >= 1".into()));
        }
        if g.rows() != h.len() {
            return Err(QpError::BadInstance(format!(
                "G has {} rows but h has {} entries",
                g.rows(),
                h.len()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(QpError::BadInstance("h contains non-finite entries".into()));
        }
        if !(settings.tolerance.is_finite() && settings.tolerance > 0.0) {
            return Err(QpError::BadInstance("tolerance must be positive".into()));
        }
        let default_iter = 10 * (g.rows() + g.cols()).pow(2);
        Ok(Self {
            g,
            h,
            tolerance: settings.tolerance,
            max_iterations: settings.max_iterations.unwrap_or(default_iter),
        })
    }

    pub fn constraints(&self) -> &RealMatrix {
        &self.g
    }

    pub fn bounds(&self) -> &[f64] {
        &self.h
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn scaled_tol(&self) -> f64 {
        let h_inf = self.h.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        (self.tolerance * (1.0 + h_inf)).max(TOL_FLOOR)
    }
}

/// A KKT-certified solution.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per constraint row; zero off the active set.
    pub duals: Vec<f64>,
    /// Rows satisfied with equality within tolerance at the solution.
    pub active_set: Vec<usize>,
    /// Largest of the scaled primal, stationarity, and complementarity
    /// residuals.
    pub kkt_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn finish(inst: &QpInstance, x: Vec<f64>, duals: Vec<f64>) -> QpSolution {
    let g = &inst.g;
    let h_inf = inst.h.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = inst.tolerance * (1.0 + h_inf);
    let slacks: Vec<f64> = g
        .matvec(&x)
        .iter()
        .zip(&inst.h)
        .map(|(gx, hi)| gx - hi)
        .collect();
    let active_set: Vec<usize> = slacks
        .iter()
        .enumerate()
        .filter(|(_, s)| s.abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    let primal = slacks.iter().fold(0.0f64, |a, s| a.max(-s)) / (1.0 + h_inf);
    let gt_u = g.transpose_matvec(&duals);
    let stationarity = x
        .iter()
        .zip(&gt_u)
        .fold(0.0f64, |a, (xi, gi)| a.max((2.0 * xi - gi).abs()))
        / (1.0 + norm(&x));
    let complementarity = duals
        .iter()
        .zip(&slacks)
        .fold(0.0f64, |a, (u, s)| a.max((u * s).abs()))
        / (1.0 + h_inf);
    QpSolution {
        objective: x.iter().map(|v| v * v).sum(),
        x,
        duals,
        active_set,
        kkt_residual: primal.max(stationarity).max(complementarity),
    }
}

/// Replace the iterate with a fresh minimum-norm solve on the terminal
/// active set, which sheds the rounding accumulated across pivots. Keeps the
/// original iterate if the re-solve does not preserve feasibility.
fn polish(inst: &QpInstance, active: &[usize], x: &mut [f64]) {
    if active.is_empty() {
        return;
    }
    let g = &inst.g;
    let g_a = RealMatrix::from_fn(active.len(), g.cols(), |r, c| g.get(active[r], c));
    let h_a: Vec<f64> = active.iter().map(|&i| inst.h[i]).collect();
    let Ok(candidate) = least_squares_min_norm(&g_a, &h_a) else {
        return;
    };
    let tol_feas = inst.scaled_tol();
    let feasible = g
        .matvec(&candidate)
        .iter()
        .zip(&inst.h)
        .all(|(gx, hi)| gx - hi >= -tol_feas);
    let drift: f64 = candidate
        .iter()
        .zip(x.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if feasible && drift <= 1e-6 * (1.0 + norm(x)) {
        x.copy_from_slice(&candidate);
    }
}

/// Solve the instance. Returns the unique minimizer (the objective is
/// strictly convex) or an infeasibility/iteration-limit error.
pub fn solve(inst: &QpInstance) -> Result<QpSolution, QpError> {
    let g = &inst.g;
    let (m, n) = (g.rows(), g.cols());
    let tol_feas = inst.scaled_tol();

    let mut x = vec![0.0; n];
    let mut active: Vec<usize> = Vec::new();
    let mut multipliers: Vec<f64> = Vec::new();
    let mut iterations = 0usize;

    loop {
        // Most violated constraint outside the working set.
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let slack: f64 = g.row(i).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - inst.h[i];
            if slack < -tol_feas && worst.map_or(true, |(_, w)| slack < w) {
                worst = Some((i, slack));
            }
        }
        let Some((p, _)) = worst else {
            polish(inst, &active, &mut x);
            let mut duals = vec![0.0; m];
            for (&i, &u) in active.iter().zip(&multipliers) {
                duals[i] = u;
            }
            return Ok(finish(inst, x, duals));
        };

        let g_p = g.row(p).to_vec();
        let mut u_p = 0.0;
        loop {
            iterations += 1;
            if iterations > inst.max_iterations {
                return Err(QpError::IterationLimit { iterations });
            }

            // Split g_p into its component in the span of the working-set
            // normals (coefficients r) and the orthogonal remainder z.
            let n_mat = RealMatrix::from_fn(n, active.len(), |row, col| g.get(active[col], row));
            let r = least_squares_min_norm(&n_mat, &g_p)?;
            let nr = n_mat.matvec(&r);
            let z: Vec<f64> = g_p.iter().zip(&nr).map(|(a, b)| a - b).collect();
            let z_norm_sqr: f64 = z.iter().map(|v| v * v).sum();
            let z_is_zero = z_norm_sqr.sqrt() <= Z_TOL * norm(&g_p).max(1.0);

            // Dual step: first working constraint whose multiplier hits zero.
            let mut t_dual = f64::INFINITY;
            let mut drop_idx = None;
            for (j, (&u, &rj)) in multipliers.iter().zip(&r).enumerate() {
                if rj > TOL_FLOOR {
                    let t = u / (2.0 * rj);
                    if t < t_dual {
                        t_dual = t;
                        drop_idx = Some(j);
                    }
                }
            }

            // Primal step: distance along z until constraint p becomes tight.
            let slack_p: f64 =
                g_p.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - inst.h[p];
            let t_primal = if z_is_zero {
                f64::INFINITY
            } else {
                -slack_p / z_norm_sqr
            };

            if !t_dual.is_finite() && !t_primal.is_finite() {
                // g_p is a non-positive combination of working normals:
                // Farkas certificate of an empty polyhedron.
                let mut certificate = vec![0.0; m];
                certificate[p] = 1.0;
                for (&i, &rj) in active.iter().zip(&r) {
                    certificate[i] = -rj.min(0.0);
                }
                return Err(QpError::Infeasible {
                    most_violated: p,
                    certificate: Some(certificate),
                });
            }

            let step = t_dual.min(t_primal);
            if !z_is_zero {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += step * zi;
                }
            }
            for (u, &rj) in multipliers.iter_mut().zip(&r) {
                *u -= 2.0 * step * rj;
            }
            u_p += 2.0 * step;

            if t_primal <= t_dual {
                active.push(p);
                multipliers.push(u_p);
                break;
            }
            let j = drop_idx.expect("finite dual step implies a drop candidate");
            active.remove(j);
            multipliers.remove(j);
        }
    }
}

/// Exact minimizer by exhaustive active-set enumeration; the testing oracle.
///
/// For every subset `W` of constraint rows, solves the equality-constrained
/// minimum-norm problem `min ||x||^2  s.t.  G_W x = h_W` by the normal
/// equations (minimum-norm least squares), then keeps the feasible candidate
/// of smallest objective. Requires `m <= 16`.
pub fn solve_by_active_set_enumeration(inst: &QpInstance) -> Result<QpSolution, QpError> {
    let g = &inst.g;
    let m = g.rows();
    if m > 16 {
        return Err(QpError::BadInstance(format!(
            "enumeration oracle supports at most 16 rows, got {m}"
        )));
    }
    let tol = inst.scaled_tol();

    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let g_w = RealMatrix::from_fn(rows.len(), g.cols(), |r, c| g.get(rows[r], c));
        let h_w: Vec<f64> = rows.iter().map(|&i| inst.h[i]).collect();
        let x = least_squares_min_norm(&g_w, &h_w)?;
        let consistent = g_w
            .matvec(&x)
            .iter()
            .zip(&h_w)
            .all(|(gx, hi)| (gx - hi).abs() <= tol);
        if !consistent {
            continue;
        }
        let feasible = g
            .matvec(&x)
            .iter()
            .zip(&inst.h)
            .all(|(gx, hi)| gx - hi >= -tol);
        if !feasible {
            continue;
        }
        let objective: f64 = x.iter().map(|v| v * v).sum();
        if best.as_ref().map_or(true, |(b, _, _)| objective < *b) {
            best = Some((objective, x, rows));
        }
    }

    match best {
        Some((_, x, rows)) => {
            // Multipliers for the winning subset from stationarity 2x = G_W^T u.
            let n_mat = RealMatrix::from_fn(g.cols(), rows.len(), |r, c| g.get(rows[c], r));
            let two_x: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            let u_w = least_squares_min_norm(&n_mat, &two_x)?;
            let mut duals = vec![0.0; m];
            for (&i, &u) in rows.iter().zip(&u_w) {
                duals[i] = u;
            }
            Ok(finish(inst, x, duals))
        }
        None => {
            let x_ls = least_squares_min_norm(g, &inst.h)?;
            let most_violated = g
                .matvec(&x_ls)
                .iter()
                .zip(&inst.h)
                .enumerate()
                .max_by(|a, b| {
                    let va = a.1 .1 - a.1 .0;
                    let vb = b.1 .1 - b.1 .0;
                    va.partial_cmp(&vb).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap_or(0);
            Err(QpError::Infeasible {
                most_violated,
                certificate: None,
            })
        }
    }
}
