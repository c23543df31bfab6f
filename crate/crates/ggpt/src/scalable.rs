//! Frame scalability: find nonnegative scales making a frame tight.
//!
//! The condition "`(s_j h_j)` is tight with bound `alpha`" is linear in
//! `t_j = s_j^2`: it reads `sum_j t_j h_j h_j^T = alpha I`. After normalizing
//! the frame energy this becomes a nonnegative-least-squares feasibility
//! problem on the distinct entries of a symmetric matrix, solved here by the
//! Lawson-Hanson active-set method.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::frames::{frame_bounds, trace_formula_bound, Frame, FrameError};

/// Default Frobenius tolerance for the scalability decision, applied after
/// normalizing the frame so that `sum_j t_j ||h_j||^2 = dim`.
pub const DEFAULT_SCALABILITY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ScalableError {
    #[error("family does not span: not a frame (lower bound {lower:.3e})")]
    NotAFrame { lower: f64 },
    #[error("NNLS solver stalled after {iterations} iterations")]
    SolverStalled { iterations: usize },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Outcome of a scalability decision.
#[derive(Debug, Clone, Serialize)]
pub struct ScalabilityResult {
    pub scalable: bool,
    /// Nonnegative scales `s_j`, present iff scalable. Normalized so the
    /// scaling preserves total frame energy: `sum s_j^2 ||h_j||^2 = sum ||h_j||^2`.
    pub scales: Option<Vec<f64>>,
    /// Tight frame bound of `(s_j h_j)`, present iff scalable. With the
    /// energy-preserving normalization it equals the trace-formula bound of
    /// the input frame.
    pub frame_bound: Option<f64>,
    /// Frobenius distance of the optimally scaled frame operator from
    /// `alpha I`, in units of `alpha`.
    pub residual: f64,
    /// Set when the optimal scales zero out enough vectors that the scaled
    /// family no longer spans; the frame is then reported not scalable.
    pub span_collapsed: bool,
}

/// Lawson-Hanson nonnegative least squares: minimize `||columns * t - target||_2`
/// subject to `t >= 0`.
///
/// Returns the minimizer and the Euclidean residual at it. Fails with
/// `SolverStalled` if the active-set iteration exceeds `10 * n * m` steps.
pub fn nnls_solve(
    columns: &DMatrix<f64>,
    target: &DVector<f64>,
    tol: f64,
) -> Result<(DVector<f64>, f64), ScalableError> {
    let (m, n) = columns.shape();
    assert!(m >= 1 && n >= 1, "NNLS needs at least one row and one column");
    assert_eq!(target.len(), m, "target length must match the row count");

    let cap = 10 * n * m;
    let mut iterations = 0usize;

    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];

    // Dual threshold at the problem's own scale.
    let grad0 = columns.transpose() * target;
    let dual_tol = tol * grad0.amax().max(1.0);

    loop {
        let residual = target - columns * &x;
        let w = columns.transpose() * &residual;

        // Most violated stationarity condition among the clamped variables.
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if !passive[j] && w[j] > dual_tol && best.is_none_or(|(_, bw)| w[j] > bw) {
                best = Some((j, w[j]));
            }
        }
        let Some((enter, _)) = best else {
            let norm = (target - columns * &x).norm();
            return Ok((x, norm));
        };
        passive[enter] = true;

        // Inner loop: solve the unconstrained problem on the passive set and
        // back off along the segment to x until it is feasible.
        loop {
            iterations += 1;
            if iterations > cap {
                return Err(ScalableError::SolverStalled { iterations: cap });
            }

            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = columns.select_columns(idx.iter());
            let z_sub = sub
                .svd(true, true)
                .solve(target, 1e-14)
                .expect("SVD least-squares solve cannot fail");

            if z_sub.iter().all(|&z| z > 0.0) {
                x.fill(0.0);
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z_sub[k];
                }
                break;
            }

            // Largest step toward z that keeps every passive variable >= 0.
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z_sub[k] <= 0.0 {
                    let step = x[j] / (x[j] - z_sub[k]);
                    if step < alpha {
                        alpha = step;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z_sub[k] - x[j]);
            }
            // Clamp and deactivate anything that hit the boundary.
            for &j in &idx {
                if x[j] <= 1e-14 * grad0.amax().max(1.0) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                // Everything left the passive set; re-enter the outer loop.
                break;
            }
        }
    }
}

/// Symmetric matrices vectorized so the Euclidean norm equals the Frobenius
/// norm: upper triangle with off-diagonal entries weighted by `sqrt(2)`.
fn vech_weighted(m: &DMatrix<f64>) -> DVector<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    let w = 2f64.sqrt();
    for i in 0..d {
        for j in i..d {
            out.push(if i == j { m[(i, j)] } else { w * m[(i, j)] });
        }
    }
    DVector::from_vec(out)
}

/// Decide scalability of `frame` and return scales if they exist.
///
/// Fails with `NotAFrame` when the input does not span. Otherwise solves the
/// NNLS feasibility problem for `sum_j t_j h_j h_j^T = I` on the
/// energy-normalized frame and converts the minimizer back to scales.
pub fn find_scales(frame: &Frame, tol: f64) -> Result<ScalabilityResult, ScalableError> {
    let bounds = frame_bounds(frame, tol);
    if !bounds.spanning(tol) {
        return Err(ScalableError::NotAFrame { lower: bounds.lower });
    }

    let dim = frame.dim();
    let n = frame.len();

    // Normalize total energy so one absolute tolerance covers all inputs.
    let energy = trace_formula_bound(frame);
    let nu = energy.sqrt();
    let normalized = frame.scaled(&vec![1.0 / nu; n]);

    let rows = dim * (dim + 1) / 2;
    let mut columns = DMatrix::zeros(rows, n);
    for (j, h) in normalized.vectors().iter().enumerate() {
        let outer = h * h.transpose();
        columns.set_column(j, &vech_weighted(&outer));
    }
    let target = vech_weighted(&DMatrix::identity(dim, dim));

    let (t, residual) = nnls_solve(&columns, &target, tol)?;

    // Rescale the minimizer so the scaling preserves the input's energy.
    let t_energy: f64 = t
        .iter()
        .zip(normalized.vectors())
        .map(|(&tj, h)| tj * h.norm_squared())
        .sum();
    if t_energy <= 0.0 {
        // NNLS returned the zero vector: nothing can be scaled to identity.
        return Ok(ScalabilityResult {
            scalable: false,
            scales: None,
            frame_bound: None,
            residual,
            span_collapsed: false,
        });
    }
    let scale_fix = dim as f64 / t_energy;
    let scales: Vec<f64> = t.iter().map(|&tj| (tj * scale_fix).sqrt()).collect();

    let scaled = frame.scaled(&scales);
    let alpha = trace_formula_bound(&scaled);
    let scaled_bounds = frame_bounds(&scaled, tol);
    let span_collapsed = residual <= tol && !scaled_bounds.spanning(tol);
    let scalable = residual <= tol && !span_collapsed;

    Ok(ScalabilityResult {
        scalable,
        scales: scalable.then_some(scales),
        frame_bound: scalable.then_some(alpha),
        residual,
        span_collapsed,
    })
}
