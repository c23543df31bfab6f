//! The generalized primal equation and everything around it.
//!
//! For an s-tight IC measurement `pi` with scales `s_j` and bound `alpha`,
//! the statistics of any measurement `xi` follow from the statistics of `pi`:
//!
//! ```text
//! p^xi_k(x) - xi_k(m) = (1/(alpha mu)) sum_j C_kj (p^pi_j(x) - pi_j(m))
//! ```
//!
//! with `C_kj = s_j^2 (mu xi_k(v_j) - pi_j(m) xi_k(m))` computable from any
//! instrument balanced at `m`. For tight IC measurements (scales
//! `1/sqrt(pi_j(m))`) the same equation holds with the column-stochastic
//! matrix `K_kj = xi_k(w_j)`, and with the canonical instrument it becomes
//! the classical law of total probability plus a correction term, with
//! constant `A = 1/(alpha mu)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::frames::{frame_bounds, frame_operator};
use crate::measurement::Measurement;

#[derive(Debug, Error)]
pub enum UrgleichungError {
    #[error("conditional probability undefined: pi_{outcome}(x) = {value:.3e} <= tol")]
    UndefinedConditional { outcome: usize, value: f64 },
    #[error("scales do not make the traceless frame tight (residual {residual:.3e})")]
    InconsistentScales { residual: f64 },
    #[error("measurement is not tight IC")]
    NotTightIc,
    #[error("invalid probability vector: {detail}")]
    InvalidProbabilities { detail: String },
    #[error("measurements live on different models: {left} vs {right}")]
    ModelMismatch { left: String, right: String },
    #[error("expected {expected} scales, got {got}")]
    ScaleCountMismatch { expected: usize, got: usize },
    #[error("invalid instrument: {detail}")]
    InvalidInstrument { detail: String },
}

/// Per-outcome state-update maps `Lambda_j` with `e(Lambda_j(x)) = pi_j(x)`.
#[derive(Debug, Clone)]
pub enum Instrument {
    /// `Lambda_j(x) = pi_j(x) w_j`: the post-measurement state is always
    /// `w_j`, independent of the input.
    Canonical,
    /// Affine maps `Lambda_j(x) = L_j x + o_j` on model coordinates.
    Custom { linear: Vec<DMatrix<f64>>, offset: Vec<DVector<f64>> },
}

impl Instrument {
    /// Validate affine maps against the measurement they implement:
    /// `e(Lambda_j(x)) = pi_j(x)` must hold on the state hyperplane.
    pub fn custom(
        pi: &Measurement,
        linear: Vec<DMatrix<f64>>,
        offset: Vec<DVector<f64>>,
        tol: f64,
    ) -> Result<Self, UrgleichungError> {
        let dim = pi.model().dim_v();
        if linear.len() != pi.len() || offset.len() != pi.len() {
            return Err(UrgleichungError::InvalidInstrument {
                detail: format!("need {} maps, got {}/{}", pi.len(), linear.len(), offset.len()),
            });
        }
        for (j, (l, o)) in linear.iter().zip(&offset).enumerate() {
            if l.shape() != (dim, dim) || o.len() != dim {
                return Err(UrgleichungError::InvalidInstrument {
                    detail: format!("map {j} has the wrong shape"),
                });
            }
            // Row 0 of the affine map is the functional e(Lambda_j(.)). On
            // the hyperplane e(x) = 1 it must agree with pi_j: equal on the
            // traceless coordinates, and matching value at m.
            let f = pi.effects()[j].coords();
            for i in 1..dim {
                if (l[(0, i)] - f[i]).abs() > tol {
                    return Err(UrgleichungError::InvalidInstrument {
                        detail: format!("e(Lambda_{j}(.)) differs from pi_{j} on V0"),
                    });
                }
            }
            if (l[(0, 0)] + o[0] - f[0]).abs() > tol {
                return Err(UrgleichungError::InvalidInstrument {
                    detail: format!("e(Lambda_{j}(m)) differs from pi_{j}(m)"),
                });
            }
        }
        Ok(Self::Custom { linear, offset })
    }

    /// `Lambda_j(x)` in model coordinates.
    pub fn apply(&self, pi: &Measurement, j: usize, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Canonical => &pi.states()[j] * pi.effects()[j].evaluate(x),
            Self::Custom { linear, offset } => &linear[j] * x + &offset[j],
        }
    }

    /// Whether `Lambda_j(m) = mu v_j` for every outcome.
    pub fn is_balanced_at_m(&self, pi: &Measurement, tol: f64) -> bool {
        let m = pi.model().m_coords();
        let mu = pi.model().mu();
        (0..pi.len()).all(|j| {
            let at_m = self.apply(pi, j, &m);
            (at_m - &pi.vectors()[j] * mu).norm() <= tol
        })
    }
}

fn check_models(pi: &Measurement, xi: &Measurement) -> Result<(), UrgleichungError> {
    if pi.model() != xi.model() {
        return Err(UrgleichungError::ModelMismatch {
            left: pi.model().name().to_string(),
            right: xi.model().name().to_string(),
        });
    }
    Ok(())
}

/// Conditional probabilities `p_{k|j}(x) = xi_k(Lambda_j(x)) / e(Lambda_j(x))`
/// as an `n' x n` matrix (row k, column j).
pub fn conditional_probabilities(
    pi: &Measurement,
    xi: &Measurement,
    instrument: &Instrument,
    x: &DVector<f64>,
    tol: f64,
) -> Result<DMatrix<f64>, UrgleichungError> {
    check_models(pi, xi)?;
    let mut cond = DMatrix::zeros(xi.len(), pi.len());
    for j in 0..pi.len() {
        let post = instrument.apply(pi, j, x);
        let weight = post[0];
        if weight <= tol {
            return Err(UrgleichungError::UndefinedConditional { outcome: j, value: weight });
        }
        for k in 0..xi.len() {
            cond[(k, j)] = xi.effects()[k].evaluate(&post) / weight;
        }
    }
    Ok(cond)
}

/// The C-matrix `C_kj = s_j^2 (mu xi_k(v_j) - pi_j(m) xi_k(m))`.
///
/// For any instrument balanced at `m` this equals
/// `s_j^2 (xi_k(Lambda_j(m)) - pi_j(m) xi_k(m))`, so it depends on `pi` and
/// `xi` alone.
pub fn c_matrix(pi: &Measurement, xi: &Measurement, scales: &[f64]) -> DMatrix<f64> {
    assert_eq!(scales.len(), pi.len(), "one scale per outcome of pi");
    let mu = pi.model().mu();
    DMatrix::from_fn(xi.len(), pi.len(), |k, j| {
        let s2 = scales[j] * scales[j];
        s2 * (mu * xi.effects()[k].evaluate(&pi.vectors()[j])
            - pi.probs_m()[j] * xi.effects()[k].on_m())
    })
}

/// The K-matrix `K_kj = xi_k(w_j)`; every column is a probability vector.
pub fn k_matrix(pi: &Measurement, xi: &Measurement) -> DMatrix<f64> {
    DMatrix::from_fn(xi.len(), pi.len(), |k, j| xi.effects()[k].evaluate(&pi.states()[j]))
}

/// Outcome of a state reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    /// Model coordinates of the reconstructed vector; `e(x) = 1` always.
    pub state: Vec<f64>,
    /// Whether the reconstruction lies in the cone. Not enforced: noisy
    /// probabilities may reconstruct outside the state space.
    pub in_cone: bool,
}

fn check_probabilities(pi: &Measurement, p: &[f64], tol: f64) -> Result<(), UrgleichungError> {
    if p.len() != pi.len() {
        return Err(UrgleichungError::InvalidProbabilities {
            detail: format!("expected {} entries, got {}", pi.len(), p.len()),
        });
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol.max(1e-10) {
        return Err(UrgleichungError::InvalidProbabilities {
            detail: format!("entries sum to {sum}, expected 1"),
        });
    }
    Ok(())
}

fn check_scales_tight(
    pi: &Measurement,
    scales: &[f64],
    alpha: f64,
    tol: f64,
) -> Result<(), UrgleichungError> {
    if scales.len() != pi.len() {
        return Err(UrgleichungError::ScaleCountMismatch { expected: pi.len(), got: scales.len() });
    }
    let scaled = pi.traceless_frame().scaled(scales);
    let dim = scaled.dim();
    let op = frame_operator(&scaled);
    let residual = (&op - DMatrix::identity(dim, dim) * alpha).norm() / alpha.abs().max(1e-300);
    let bounds = frame_bounds(&scaled, tol);
    if residual > tol * (dim as f64).sqrt() || !bounds.spanning(tol) {
        return Err(UrgleichungError::InconsistentScales { residual });
    }
    Ok(())
}

/// Reconstruct the state with statistics `p` through the dual frame of the
/// traceless parts: `x = m + (1/alpha) sum_j s_j^2 (p_j - pi_j(m)) P0(v_j)`.
pub fn reconstruct_state(
    pi: &Measurement,
    scales: &[f64],
    alpha: f64,
    p: &[f64],
    tol: f64,
) -> Result<Reconstruction, UrgleichungError> {
    check_scales_tight(pi, scales, alpha, tol)?;
    check_probabilities(pi, p, tol)?;
    let model = pi.model();
    let mut v0 = DVector::zeros(model.dim_v0());
    for (j, v) in pi.vectors().iter().enumerate() {
        let weight = scales[j] * scales[j] * (p[j] - pi.probs_m()[j]) / alpha;
        v0 += model.project_p0(v) * weight;
    }
    let mut state = model.m_coords();
    state.rows_mut(1, model.dim_v0()).copy_from(&v0);
    let in_cone = model.cone_contains(&state, tol);
    Ok(Reconstruction { state: state.as_slice().to_vec(), in_cone })
}

/// Predict the statistics of `xi` from the statistics `p` of `pi` through
/// the primal equation: `p^xi_k = xi_k(m) + (1/(alpha mu)) sum_j C_kj (p_j - pi_j(m))`.
pub fn predict_statistics(
    pi: &Measurement,
    xi: &Measurement,
    scales: &[f64],
    p: &[f64],
    tol: f64,
) -> Result<DVector<f64>, UrgleichungError> {
    check_models(pi, xi)?;
    let alpha = pi.s_tight_bound(scales);
    check_scales_tight(pi, scales, alpha, tol)?;
    check_probabilities(pi, p, tol)?;
    let c = c_matrix(pi, xi, scales);
    let a = 1.0 / (alpha * pi.model().mu());
    let deviation = DVector::from_iterator(
        pi.len(),
        p.iter().zip(pi.probs_m()).map(|(&pj, &pmj)| pj - pmj),
    );
    let correction = c * deviation * a;
    Ok(DVector::from_iterator(
        xi.len(),
        xi.effects().iter().zip(correction.iter()).map(|(f, d)| f.on_m() + d),
    ))
}

/// The three equivalent total-probability forms of the primal equation for a
/// tight IC measurement with the canonical instrument, evaluated at a state.
#[derive(Debug, Clone, Serialize)]
pub struct LtpDecomposition {
    /// `A = 1/(alpha mu)`.
    pub a_constant: f64,
    /// `p^xi_k(x) - p^xi_k(m)` per outcome of xi.
    pub lhs: Vec<f64>,
    /// The classical law-of-total-probability term `sum_j p_{k|j}(x) p_j(x)`.
    pub classical_term: Vec<f64>,
    /// The correction `(1 - 1/A)(p^xi_k(x) - p^xi_k(m))`.
    pub correction_term: Vec<f64>,
    /// `beta_j = (1 - A) pi_j(m)`: the outcome-dependent offset in the
    /// QBist-style form (iii).
    pub beta: Vec<f64>,
    /// Max residual of `lhs = A sum_j p_{k|j}(x)(p_j(x) - p_j(m))`.
    pub residual_primal: f64,
    /// Max residual of `p^xi = classical term + correction term`.
    pub residual_corrected: f64,
    /// Max residual of `p^xi_k = sum_j p_{k|j}(x)(A p_j(x) + beta_j)`.
    pub residual_qbist: f64,
}

/// Evaluate the canonical-instrument primal equation in its three forms.
///
/// Requires `pi` tight IC; the conditional probabilities are those of the
/// canonical instrument.
pub fn ltp_decomposition(
    pi: &Measurement,
    xi: &Measurement,
    x: &DVector<f64>,
    tol: f64,
) -> Result<LtpDecomposition, UrgleichungError> {
    check_models(pi, xi)?;
    if !pi.classify(tol).tight_ic {
        return Err(UrgleichungError::NotTightIc);
    }
    let a = 1.0 / (pi.tight_bound_formula() * pi.model().mu());
    let cond = conditional_probabilities(pi, xi, &Instrument::Canonical, x, tol)?;

    let p_pi = pi.apply(x);
    let p_xi = xi.apply(x);
    let pm_pi = pi.probs_m();
    let m = pi.model().m_coords();
    let pm_xi = xi.apply(&m);

    let mut lhs = Vec::with_capacity(xi.len());
    let mut classical = Vec::with_capacity(xi.len());
    let mut correction = Vec::with_capacity(xi.len());
    let (mut r1, mut r2, mut r3) = (0f64, 0f64, 0f64);
    for k in 0..xi.len() {
        let dk = p_xi[k] - pm_xi[k];
        let mut primal = 0.0;
        let mut ltp = 0.0;
        let mut qbist = 0.0;
        for j in 0..pi.len() {
            primal += cond[(k, j)] * (p_pi[j] - pm_pi[j]);
            ltp += cond[(k, j)] * p_pi[j];
            qbist += cond[(k, j)] * (a * p_pi[j] + (1.0 - a) * pm_pi[j]);
        }
        r1 = r1.max((dk - a * primal).abs());
        r2 = r2.max((p_xi[k] - ltp - (1.0 - 1.0 / a) * dk).abs());
        r3 = r3.max((p_xi[k] - qbist).abs());
        lhs.push(dk);
        classical.push(ltp);
        correction.push((1.0 - 1.0 / a) * dk);
    }

    Ok(LtpDecomposition {
        a_constant: a,
        lhs,
        classical_term: classical,
        correction_term: correction,
        beta: beta_weights(pi),
        residual_primal: r1,
        residual_corrected: r2,
        residual_qbist: r3,
    })
}

/// `beta_j = (1 - A) pi_j(m)` with `A = 1/(alpha mu)` from the tight-IC
/// bound formula. Constant over j exactly when `pi` is unbiased.
pub fn beta_weights(pi: &Measurement) -> Vec<f64> {
    let a = 1.0 / (pi.tight_bound_formula() * pi.model().mu());
    pi.probs_m().iter().map(|&pm| (1.0 - a) * pm).collect()
}

/// Max residual of the primal equation over `n_samples` seeded random
/// states: small iff `pi` is s-tight with the given scales.
pub fn verify_primal_equation(
    pi: &Measurement,
    xi: &Measurement,
    scales: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<f64, UrgleichungError> {
    check_models(pi, xi)?;
    if scales.len() != pi.len() {
        return Err(UrgleichungError::ScaleCountMismatch { expected: pi.len(), got: scales.len() });
    }
    let model = pi.model();
    let alpha = pi.s_tight_bound(scales);
    let inv_alpha_mu = 1.0 / (alpha * model.mu());
    let c = c_matrix(pi, xi, scales);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual = 0f64;
    for _ in 0..n_samples {
        let x = model.sample_state(&mut rng);
        let p_pi = pi.apply(&x);
        let deviation = DVector::from_iterator(
            pi.len(),
            p_pi.iter().zip(pi.probs_m()).map(|(&pj, &pmj)| pj - pmj),
        );
        let rhs = &c * deviation * inv_alpha_mu;
        for k in 0..xi.len() {
            let lhs = xi.effects()[k].evaluate(&x) - xi.effects()[k].on_m();
            max_residual = max_residual.max((lhs - rhs[k]).abs());
        }
    }
    Ok(max_residual)
}

/// The primal-equation data of a (pi, xi) pair at given scales, with the
/// residuals of the identities that relate its pieces.
#[derive(Debug, Clone, Serialize)]
pub struct UrgleichungData {
    /// `C_kj`, row-major.
    pub c_matrix: Vec<Vec<f64>>,
    /// `K_kj`, row-major.
    pub k_matrix: Vec<Vec<f64>>,
    pub alpha: f64,
    /// `A = 1/(alpha mu)`.
    pub a_constant: f64,
    pub residuals: BTreeMap<String, f64>,
}

impl UrgleichungData {
    pub fn compute(
        pi: &Measurement,
        xi: &Measurement,
        scales: &[f64],
    ) -> Result<Self, UrgleichungError> {
        check_models(pi, xi)?;
        if scales.len() != pi.len() {
            return Err(UrgleichungError::ScaleCountMismatch {
                expected: pi.len(),
                got: scales.len(),
            });
        }
        let c = c_matrix(pi, xi, scales);
        let k = k_matrix(pi, xi);
        let alpha = pi.s_tight_bound(scales);
        let a_constant = 1.0 / (alpha * pi.model().mu());

        let mut residuals = BTreeMap::new();
        let k_col = (0..k.ncols())
            .map(|j| (k.column(j).sum() - 1.0).abs())
            .fold(0.0, f64::max);
        residuals.insert("k_column_sums".to_string(), k_col);
        let c_col = (0..c.ncols()).map(|j| c.column(j).sum().abs()).fold(0.0, f64::max);
        residuals.insert("c_column_sums".to_string(), c_col);
        residuals.insert("ck_identity_on_basis".to_string(), ck_identity_residual(pi, &c, &k));

        Ok(Self {
            c_matrix: matrix_rows(&c),
            k_matrix: matrix_rows(&k),
            alpha,
            a_constant,
            residuals,
        })
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// `max_b ||(C - K) delta_pi e_b||` over the coordinate basis of V, the
/// identity distinguishing tight IC measurements.
pub fn ck_identity_residual(pi: &Measurement, c: &DMatrix<f64>, k: &DMatrix<f64>) -> f64 {
    let model = pi.model();
    let dim = model.dim_v();
    // delta_pi as a matrix on coordinates: row j is (0, P0(v_j)).
    let mut delta = DMatrix::zeros(pi.len(), dim);
    for (j, v) in pi.vectors().iter().enumerate() {
        delta.view_mut((j, 1), (1, dim - 1)).copy_from(&model.project_p0(v).transpose());
    }
    let diff = (c - k) * delta;
    (0..dim).map(|b| diff.column(b).norm()).fold(0.0, f64::max)
}
