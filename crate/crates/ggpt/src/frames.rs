//! Finite frame primitives over real Euclidean spaces.
//!
//! A frame here is an ordered, finite, possibly redundant family of vectors.
//! The family spans the space exactly when the lower frame bound (the
//! smallest eigenvalue of the frame operator) is strictly positive. All
//! operations take coordinates with respect to an orthonormal basis, so the
//! standard dot product is the ambient inner product.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Default relative tolerance for spectral decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame must contain at least one vector")]
    Empty,
    #[error("vector length {got} does not match frame dimension {dim}")]
    DimensionMismatch { dim: usize, got: usize },
    #[error("frame operator is singular: lower bound {lower:.3e} <= tol {tol:.3e}")]
    SingularFrameOperator { lower: f64, tol: f64 },
}

/// An ordered finite family of vectors in `R^dim`.
///
/// Zero vectors are permitted (they contribute nothing to the frame
/// operator); the family itself must be nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    dim: usize,
    vectors: Vec<DVector<f64>>,
}

impl Frame {
    pub fn new(dim: usize, vectors: Vec<DVector<f64>>) -> Result<Self, FrameError> {
        if vectors.is_empty() {
            return Err(FrameError::Empty);
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(FrameError::DimensionMismatch { dim, got: v.len() });
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self, FrameError> {
        Self::new(dim, rows.iter().map(|r| DVector::from_row_slice(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    /// The frame with every vector multiplied by the matching scale.
    pub fn scaled(&self, scales: &[f64]) -> Frame {
        assert_eq!(scales.len(), self.vectors.len(), "one scale per frame vector");
        Frame {
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .zip(scales)
                .map(|(v, &s)| v * s)
                .collect(),
        }
    }
}

/// Optimal two-sided energy bounds of a vector family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameBounds {
    /// Smallest eigenvalue of the frame operator.
    pub lower: f64,
    /// Largest eigenvalue of the frame operator.
    pub upper: f64,
    /// Whether the bounds coincide up to `tol`, relative to the dominant
    /// scale: `upper - lower <= tol * max(upper, 1)`.
    pub tight: bool,
    pub tol: f64,
}

impl FrameBounds {
    /// Spanning test: the family is a frame exactly when the lower bound is
    /// bounded away from zero at the dominant scale.
    pub fn spanning(&self, tol: f64) -> bool {
        self.lower > tol * self.upper.max(1.0)
    }
}

/// Inner products of `vector` against every frame vector, in frame order.
pub fn analysis_coefficients(
    frame: &Frame,
    vector: &DVector<f64>,
) -> Result<DVector<f64>, FrameError> {
    if vector.len() != frame.dim {
        return Err(FrameError::DimensionMismatch { dim: frame.dim, got: vector.len() });
    }
    Ok(DVector::from_iterator(
        frame.len(),
        frame.vectors.iter().map(|h| h.dot(vector)),
    ))
}

/// The frame operator `S = sum_j h_j h_j^T`, symmetric positive semidefinite.
pub fn frame_operator(frame: &Frame) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(frame.dim, frame.dim);
    for h in &frame.vectors {
        s.ger(1.0, h, h, 1.0);
    }
    s
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let vals = m.clone().symmetric_eigenvalues();
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    DVector::from_vec(v)
}

/// Optimal frame bounds: the extreme eigenvalues of the frame operator.
pub fn frame_bounds(frame: &Frame, tol: f64) -> FrameBounds {
    let vals = symmetric_eigenvalues(&frame_operator(frame));
    let lower = vals[0].max(0.0);
    let upper = vals[vals.len() - 1].max(0.0);
    FrameBounds { lower, upper, tight: (upper - lower) <= tol * upper.max(1.0), tol }
}

/// The canonical dual frame `(S^{-1} h_j)_j`.
///
/// Fails with `SingularFrameOperator` when the family does not span.
pub fn canonical_dual(frame: &Frame, tol: f64) -> Result<Frame, FrameError> {
    let s = frame_operator(frame);
    let eig = s.symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max().max(0.0);
    if min <= tol * max.max(1.0) {
        return Err(FrameError::SingularFrameOperator { lower: min, tol });
    }
    // S^{-1} = Q diag(1/lambda) Q^T from the spectral decomposition.
    let q = &eig.eigenvectors;
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let s_inv = q * inv_diag * q.transpose();
    Ok(Frame {
        dim: frame.dim,
        vectors: frame.vectors.iter().map(|h| &s_inv * h).collect(),
    })
}

/// `trace(S)/dim = (1/dim) sum_j ||h_j||^2`; equals the frame bound whenever
/// the frame is tight.
pub fn trace_formula_bound(frame: &Frame) -> f64 {
    frame.vectors.iter().map(|h| h.norm_squared()).sum::<f64>() / frame.dim as f64
}
