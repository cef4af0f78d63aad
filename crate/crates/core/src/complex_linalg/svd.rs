//! Singular value decomposition via one-sided Jacobi, for both real and
//! complex matrices, plus the derived operations the pipeline needs:
//! null-space bases, Moore-Penrose pseudo-inverses, and minimum-norm
//! least-squares solves.
//!
//! The decomposition is *full*: `U` is rows x rows and `V` is cols x cols, so
//! trailing columns of `V` span the null space even for wide matrices.

use num_complex::Complex64;

use super::{default_rank_tol, ComplexMatrix, LinalgError, RealMatrix};

/// Relative threshold below which a column pair counts as orthogonal.
const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

/// Scalar abstraction shared by the real and complex Jacobi kernels.
pub(crate) trait JacobiScalar: Copy {
    const ZERO: Self;
    const ONE: Self;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn scale(self, r: f64) -> Self;
    fn mul(self, other: Self) -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
}

impl JacobiScalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn conj(self) -> Self {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, r: f64) -> Self {
        self * r
    }
    fn mul(self, other: Self) -> Self {
        self * other
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
}

impl JacobiScalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn scale(self, r: f64) -> Self {
        self * r
    }
    fn mul(self, other: Self) -> Self {
        self * other
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
}

fn dot_conj<S: JacobiScalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::ZERO;
    for (x, y) in a.iter().zip(b) {
        acc = acc.add(x.conj().mul(*y));
    }
    acc
}

fn col_norm_sqr<S: JacobiScalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Rotate the column pair `(p, q)` of `cols` by the unitary
/// `[[c, s], [-s*phase, c*phase]]` acting from the right.
fn rotate_pair<S: JacobiScalar>(cols: &mut [Vec<S>], p: usize, q: usize, c: f64, s: f64, phase: S) {
    let len = cols[p].len();
    for i in 0..len {
        let ap = cols[p][i];
        let aq = cols[q][i].mul(phase);
        cols[p][i] = ap.scale(c).sub(aq.scale(s));
        cols[q][i] = ap.scale(s).add(aq.scale(c));
    }
}

/// One-sided Jacobi on `a` (n columns of length m, m >= n not required but
/// intended). Accumulates the applied rotations into `v` (n columns of
/// length n, initialized to the identity by the caller). On return the
/// columns of `a` are mutually orthogonal.
fn orthogonalize_columns<S: JacobiScalar>(
    a: &mut [Vec<S>],
    v: &mut [Vec<S>],
) -> Result<(), LinalgError> {
    let n = a.len();
    if n <= 1 {
        return Ok(());
    }
    for _sweep in 0..MAX_SWEEPS {
        // Deflate columns that have shrunk to rounding noise; their
        // directions are meaningless and would otherwise cycle forever.
        let max_norm = a
            .iter()
            .map(|c| col_norm_sqr(c).sqrt())
            .fold(0.0f64, f64::max);
        let deflate = n as f64 * f64::EPSILON * max_norm;
        for col in a.iter_mut() {
            if col_norm_sqr(col).sqrt() <= deflate {
                col.fill(S::ZERO);
            }
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = col_norm_sqr(&a[p]);
                let beta = col_norm_sqr(&a[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot_conj(&a[p], &a[q]);
                let g = gamma.norm_sqr().sqrt();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.scale(1.0 / g).conj();
                let tau = (beta - alpha) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(a, p, q, c, s, phase);
                rotate_pair(v, p, q, c, s, phase);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(LinalgError::SvdNoConvergence { sweeps: MAX_SWEEPS })
}

/// Extend `basis` (orthonormal columns of length `dim`) to `want` columns by
/// greedily orthogonalizing the best coordinate vector each round.
fn complete_orthonormal<S: JacobiScalar>(basis: &mut Vec<Vec<S>>, dim: usize, want: usize) {
    while basis.len() < want {
        let mut best: Option<(f64, Vec<S>)> = None;
        for cand in 0..dim {
            let mut r = vec![S::ZERO; dim];
            r[cand] = S::ONE;
            for _pass in 0..2 {
                for col in basis.iter() {
                    let coeff = dot_conj(col, &r);
                    for (ri, ci) in r.iter_mut().zip(col) {
                        *ri = ri.sub(ci.mul(coeff));
                    }
                }
            }
            let norm = col_norm_sqr(&r).sqrt();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, r));
            }
        }
        let (norm, mut r) = best.expect("dim > 0 whenever completion is required");
        for ri in r.iter_mut() {
            *ri = ri.scale(1.0 / norm);
        }
        basis.push(r);
    }
}

struct RawSvd<S> {
    /// rows x rows, orthonormal columns.
    u_cols: Vec<Vec<S>>,
    /// min(rows, cols) values, descending.
    singular_values: Vec<f64>,
    /// cols x cols, orthonormal columns; `M = U diag(sigma) V^H`.
    v_cols: Vec<Vec<S>>,
}

/// Full SVD of the matrix given as `cols` (length-`rows` columns). Requires
/// rows >= cols; the public wrappers transpose first when needed.
fn jacobi_svd_tall<S: JacobiScalar>(
    mut cols: Vec<Vec<S>>,
    rows: usize,
) -> Result<RawSvd<S>, LinalgError> {
    let n = cols.len();
    debug_assert!(rows >= n);
    let mut v_cols: Vec<Vec<S>> = (0..n)
        .map(|j| {
            let mut e = vec![S::ZERO; n];
            e[j] = S::ONE;
            e
        })
        .collect();
    orthogonalize_columns(&mut cols, &mut v_cols)?;

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| col_norm_sqr(c).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let sorted_v: Vec<Vec<S>> = order.iter().map(|&j| v_cols[j].clone()).collect();

    // Normalize the nonzero columns into U; exact-zero columns get their
    // slots filled from the orthonormal completion below.
    let mut u_fixed: Vec<Vec<S>> = Vec::new();
    let mut pending_slots: Vec<usize> = Vec::new();
    let mut u_slots: Vec<Option<Vec<S>>> = vec![None; rows];
    for (slot, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            let col: Vec<S> = cols[j].iter().map(|x| x.scale(1.0 / norms[j])).collect();
            u_fixed.push(col.clone());
            u_slots[slot] = Some(col);
        } else {
            pending_slots.push(slot);
        }
    }
    pending_slots.extend(n..rows);
    complete_orthonormal(&mut u_fixed, rows, rows);
    let mut filler = u_fixed.split_off(rows - pending_slots.len());
    for slot in pending_slots {
        u_slots[slot] = Some(filler.remove(0));
    }
    let u_cols: Vec<Vec<S>> = u_slots.into_iter().map(|c| c.unwrap()).collect();

    Ok(RawSvd {
        u_cols,
        singular_values,
        v_cols: sorted_v,
    })
}

fn jacobi_svd<S: JacobiScalar>(cols: Vec<Vec<S>>, rows: usize) -> Result<RawSvd<S>, LinalgError> {
    let n = cols.len();
    if rows >= n {
        return jacobi_svd_tall(cols, rows);
    }
    // Wide case: decompose the conjugate transpose and swap factors,
    // M^H = U' S V'^H implies M = V' S U'^H.
    let t_cols: Vec<Vec<S>> = (0..rows)
        .map(|r| cols.iter().map(|col| col[r].conj()).collect())
        .collect();
    let raw = jacobi_svd_tall(t_cols, n)?;
    Ok(RawSvd {
        u_cols: raw.v_cols,
        singular_values: raw.singular_values,
        v_cols: raw.u_cols,
    })
}

/// Full singular value decomposition of a real matrix.
///
/// `u` is rows x rows, `v` is cols x cols, both with orthonormal columns, and
/// `m = u * diag(singular_values) * v^T` with the rectangular diagonal
/// embedding. Singular values are nonnegative and sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: RealMatrix,
    pub singular_values: Vec<f64>,
    pub v: RealMatrix,
}

/// Full SVD of a complex matrix; `m = u * diag(singular_values) * v^H`.
#[derive(Debug, Clone)]
pub struct ComplexSvdResult {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

fn real_cols(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.cols()).map(|j| m.col(j)).collect()
}

fn cols_to_real(cols: &[Vec<f64>], rows: usize) -> RealMatrix {
    RealMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

fn cols_to_complex(cols: &[Vec<Complex64>], rows: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// Full SVD of a real matrix via one-sided Jacobi.
pub fn svd(m: &RealMatrix) -> Result<SvdResult, LinalgError> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(SvdResult {
            u: RealMatrix::identity(m.rows()),
            singular_values: Vec::new(),
            v: RealMatrix::identity(m.cols()),
        });
    }
    let raw = jacobi_svd(real_cols(m), m.rows())?;
    Ok(SvdResult {
        u: cols_to_real(&raw.u_cols, m.rows()),
        singular_values: raw.singular_values,
        v: cols_to_real(&raw.v_cols, m.cols()),
    })
}

/// Full SVD of a complex matrix via one-sided Jacobi with complex rotations.
pub fn svd_complex(m: &ComplexMatrix) -> Result<ComplexSvdResult, LinalgError> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(ComplexSvdResult {
            u: ComplexMatrix::identity(m.rows()),
            singular_values: Vec::new(),
            v: ComplexMatrix::identity(m.cols()),
        });
    }
    let cols: Vec<Vec<Complex64>> = (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j)).collect())
        .collect();
    let raw = jacobi_svd(cols, m.rows())?;
    Ok(ComplexSvdResult {
        u: cols_to_complex(&raw.u_cols, m.rows()),
        singular_values: raw.singular_values,
        v: cols_to_complex(&raw.v_cols, m.cols()),
    })
}

/// Orthonormal basis for the null space of `m`: the right singular vectors
/// whose singular values fall at or below `rank_tol * sigma_max`, plus every
/// column of `v` beyond `min(rows, cols)`. Returns a cols x nullity matrix
/// (possibly with zero columns).
pub fn null_space_basis(m: &RealMatrix, rank_tol: f64) -> Result<RealMatrix, LinalgError> {
    let decomp = svd(m)?;
    let sigma_max = decomp.singular_values.first().copied().unwrap_or(0.0);
    let rank = decomp
        .singular_values
        .iter()
        .filter(|&&s| s > rank_tol * sigma_max && s > 0.0)
        .count();
    let n = m.cols();
    Ok(RealMatrix::from_fn(n, n - rank, |r, c| {
        decomp.v.get(r, rank + c)
    }))
}

/// Moore-Penrose pseudo-inverse of a complex matrix, with singular values at
/// or below `rank_tol * sigma_max` truncated.
pub fn pseudo_inverse(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix, LinalgError> {
    let decomp = svd_complex(m)?;
    let sigma_max = decomp.singular_values.first().copied().unwrap_or(0.0);
    let inv: Vec<f64> = decomp
        .singular_values
        .iter()
        .map(|&s| {
            if s > rank_tol * sigma_max && s > 0.0 {
                1.0 / s
            } else {
                0.0
            }
        })
        .collect();
    Ok(ComplexMatrix::from_fn(m.cols(), m.rows(), |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &w) in inv.iter().enumerate() {
            if w != 0.0 {
                acc += decomp.v.get(i, k) * w * decomp.u.get(j, k).conj();
            }
        }
        acc
    }))
}

/// Minimum-norm least-squares solution of `a x = b` via SVD truncation at the
/// default rank tolerance.
pub fn least_squares_min_norm(a: &RealMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(a.rows(), b.len(), "least_squares shape mismatch");
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(vec![0.0; a.cols()]);
    }
    let decomp = svd(a)?;
    let rank_tol = default_rank_tol(a.rows(), a.cols());
    let sigma_max = decomp.singular_values.first().copied().unwrap_or(0.0);
    let mut x = vec![0.0; a.cols()];
    for (k, &s) in decomp.singular_values.iter().enumerate() {
        if s <= rank_tol * sigma_max || s == 0.0 {
            continue;
        }
        let mut coeff = 0.0;
        for (i, &bi) in b.iter().enumerate() {
            coeff += decomp.u.get(i, k) * bi;
        }
        coeff /= s;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += decomp.v.get(j, k) * coeff;
        }
    }
    Ok(x)
}
