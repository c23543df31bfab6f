//! Measurements and their frame-theoretic classification.
//!
//! A measurement is a family of nonzero effects summing to the unit effect.
//! Through the Riesz identification each effect becomes a vector `v_j`, a
//! normalized state `w_j = v_j / e(v_j)` and an outcome probability
//! `pm_j = pi_j(m)` on the distinguished state. The traceless parts
//! `(P0 v_j)` form the frame in `V0` whose properties define the classes:
//!
//! - informationally complete: the traceless parts span `V0`;
//! - morphophoric: they are a tight frame;
//! - s-tight IC: they are a scalable frame, with scales `s_j`;
//! - tight IC: s-tight with the specific scales `1/sqrt(pm_j)`;
//! - chi-ray: every `w_j` is maximally distant from `m`, i.e.
//!   `||w_j - m||_0^2 = chi`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::frames::{frame_bounds, frame_operator, trace_formula_bound, Frame};
use crate::model::{EffectFunctional, GgptModel, MeasurementValidity};
use crate::scalable::{find_scales, ScalableError};

/// Default relative tolerance for classification decisions.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MeasurementError {
    #[error("effects do not sum to unit effect (residual {residual:.3e})")]
    EffectSumMismatch { residual: f64 },
    #[error("effect {index} lies outside the dual cone")]
    EffectOutsideDualCone { index: usize },
    #[error("effect {index} is (numerically) zero")]
    ZeroEffect { index: usize },
    #[error("effect {index} has nonpositive probability {value:.3e} on m")]
    NonpositiveOutcomeProbability { index: usize, value: f64 },
    #[error("effect {index} has {got} coordinates, model needs {expected}")]
    EffectDimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("measurements live on different models: {left} vs {right}")]
    ModelMismatch { left: String, right: String },
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error(transparent)]
    Scalable(#[from] ScalableError),
}

/// A validated measurement with its derived Riesz data.
#[derive(Debug, Clone)]
pub struct Measurement {
    model: GgptModel,
    effects: Vec<EffectFunctional>,
    vectors: Vec<DVector<f64>>,
    states: Vec<DVector<f64>>,
    probs_m: Vec<f64>,
    sum_residual: f64,
}

/// Classification flags with the residual of every underlying test.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub ic: bool,
    pub morphophoric: bool,
    /// Tight frame bound of the traceless parts, present iff morphophoric.
    pub morphophoric_bound: Option<f64>,
    pub tight_ic: bool,
    /// Tight frame bound of `(P0 v_j / sqrt(pm_j))`, present iff tight IC.
    pub tight_ic_bound: Option<f64>,
    pub s_tight: bool,
    /// Scales from the NNLS feasibility solve, present iff s-tight.
    pub s_tight_scales: Option<Vec<f64>>,
    /// Tight bound of the optimally scaled frame, present iff s-tight.
    pub s_tight_bound: Option<f64>,
    pub chi_ray: bool,
    /// Raw residual of every test, for re-thresholding by callers.
    pub residuals: BTreeMap<String, f64>,
    pub tol: f64,
}

/// Residuals of the lift identity `S = S0 + (1/mu) P_m` and of the tight
/// criterion `S = alpha P0 + (1/mu) P_m`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LiftIdentity {
    /// Frobenius residual of `S - S0 - (1/mu) P_m`; zero for every
    /// measurement up to round-off.
    pub residual: f64,
    /// Frobenius residual of `S - alpha P0 - (1/mu) P_m` minimized over
    /// alpha; zero iff the measurement is tight IC.
    pub tight_residual: f64,
    /// The minimizing alpha (the candidate tight bound).
    pub tight_bound: f64,
}

impl Measurement {
    /// Validate a family of effects and derive `v_j`, `w_j` and `pm_j`.
    pub fn new(
        model: GgptModel,
        effects: Vec<EffectFunctional>,
        tol: f64,
    ) -> Result<Self, MeasurementError> {
        for (index, f) in effects.iter().enumerate() {
            if f.coords().len() != model.dim_v() {
                return Err(MeasurementError::EffectDimensionMismatch {
                    index,
                    expected: model.dim_v(),
                    got: f.coords().len(),
                });
            }
        }
        let validity = model.validate_measurement(&effects, tol);
        Self::reject_invalid(&validity, tol)?;

        let vectors: Vec<DVector<f64>> =
            effects.iter().map(|f| model.effect_to_vector(f)).collect();
        let mut states = Vec::with_capacity(effects.len());
        let mut probs_m = Vec::with_capacity(effects.len());
        for (index, (f, v)) in effects.iter().zip(&vectors).enumerate() {
            let pm = f.on_m();
            if pm <= tol {
                return Err(MeasurementError::NonpositiveOutcomeProbability { index, value: pm });
            }
            states.push(v * (model.mu() / pm));
            probs_m.push(pm);
        }
        Ok(Self { model, effects, vectors, states, probs_m, sum_residual: validity.sum_residual })
    }

    fn reject_invalid(v: &MeasurementValidity, tol: f64) -> Result<(), MeasurementError> {
        if v.sum_residual > tol {
            return Err(MeasurementError::EffectSumMismatch { residual: v.sum_residual });
        }
        if let Some(index) = v.nonzero.iter().position(|&ok| !ok) {
            return Err(MeasurementError::ZeroEffect { index });
        }
        if let Some(index) = v.in_dual_cone.iter().position(|&ok| !ok) {
            return Err(MeasurementError::EffectOutsideDualCone { index });
        }
        Ok(())
    }

    /// Weighted disjoint union `(t_1 pi^1) u ... u (t_k pi^k)`.
    ///
    /// The parts must share a model; the weights must make the union a valid
    /// measurement (nonnegative, summing to one).
    pub fn weighted_union(
        parts: &[(f64, &Measurement)],
        tol: f64,
    ) -> Result<Self, MeasurementError> {
        assert!(!parts.is_empty(), "union of no measurements");
        let model = parts[0].1.model.clone();
        for (_, m) in parts {
            if m.model != model {
                return Err(MeasurementError::ModelMismatch {
                    left: model.name().to_string(),
                    right: m.model.name().to_string(),
                });
            }
        }
        let mut effects = Vec::new();
        for (t, m) in parts {
            effects.extend(m.effects.iter().map(|f| f.scaled(*t)));
        }
        Self::new(model, effects, tol)
    }

    pub fn model(&self) -> &GgptModel {
        &self.model
    }

    pub fn effects(&self) -> &[EffectFunctional] {
        &self.effects
    }

    /// Riesz vectors `v_j = T^{-1}(pi_j)`.
    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    /// Normalized states `w_j = v_j / e(v_j)`.
    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    /// Outcome probabilities `pm_j = pi_j(m)` on the distinguished state.
    pub fn probs_m(&self) -> &[f64] {
        &self.probs_m
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// `|| sum_j pi_j - e ||` recorded at construction.
    pub fn sum_residual(&self) -> f64 {
        self.sum_residual
    }

    /// Whether all outcome probabilities on `m` coincide, within `tol`.
    pub fn is_unbiased(&self, tol: f64) -> bool {
        let mean = 1.0 / self.len() as f64;
        self.probs_m.iter().all(|&p| (p - mean).abs() <= tol * mean.max(1.0))
    }

    /// The outcome statistics `(pi_j(x))_j` on a state.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.effects.iter().map(|f| f.evaluate(x)))
    }

    /// The frame `(P0 v_j)_j` in `V0`.
    pub fn traceless_frame(&self) -> Frame {
        Frame::new(
            self.model.dim_v0(),
            self.vectors.iter().map(|v| self.model.project_p0(v)).collect(),
        )
        .expect("measurements are nonempty")
    }

    /// The frame `(P0 v_j / sqrt(pm_j))_j` whose tightness defines tight IC.
    pub fn tight_scaled_frame(&self) -> Frame {
        let scales: Vec<f64> = self.probs_m.iter().map(|&p| 1.0 / p.sqrt()).collect();
        self.traceless_frame().scaled(&scales)
    }

    /// The ratio of the `dim V0`-th largest to the largest singular value of
    /// the traceless family; positive exactly when the family spans.
    fn ic_singular_ratio(&self) -> f64 {
        let tf = self.traceless_frame();
        let d = tf.dim();
        let mut mat = DMatrix::zeros(d, tf.len());
        for (j, v) in tf.vectors().iter().enumerate() {
            mat.set_column(j, v);
        }
        let mut sv: Vec<f64> = mat.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax <= 0.0 || sv.len() < d {
            return 0.0;
        }
        sv[d - 1] / smax
    }

    /// Informational completeness: the traceless parts span `V0`.
    pub fn is_ic(&self, tol: f64) -> bool {
        self.ic_singular_ratio() > tol
    }

    /// Tight frame bound of `(s_j P0 v_j)` by the trace formula, evaluated
    /// through the effect norms:
    /// `alpha = (1/dim V0) sum_j s_j^2 (||pi_j||^2 - pm_j^2 / mu)`.
    pub fn s_tight_bound(&self, scales: &[f64]) -> f64 {
        assert_eq!(scales.len(), self.len(), "one scale per outcome");
        let mu = self.model.mu();
        let sum: f64 = scales
            .iter()
            .zip(&self.vectors)
            .zip(&self.probs_m)
            .map(|((&s, v), &pm)| {
                let norm_sq = mu * v[0] * v[0] + v.rows(1, v.len() - 1).norm_squared();
                s * s * (norm_sq - pm * pm / mu)
            })
            .sum();
        sum / self.model.dim_v0() as f64
    }

    /// The bound `alpha = (sum_j pi_j(w_j) - 1) / (mu dim V0)`, the
    /// trace-formula value at the tight-IC scales `1/sqrt(pm_j)`.
    pub fn tight_bound_formula(&self) -> f64 {
        let sum: f64 = self
            .effects
            .iter()
            .zip(&self.states)
            .map(|(f, w)| f.evaluate(w))
            .sum();
        (sum - 1.0) / (self.model.mu() * self.model.dim_v0() as f64)
    }

    /// Full classification at relative tolerance `tol`.
    pub fn classify(&self, tol: f64) -> ClassificationReport {
        let mut residuals = BTreeMap::new();
        residuals.insert("effect_sum".to_string(), self.sum_residual);

        let ic_ratio = self.ic_singular_ratio();
        let ic = ic_ratio > tol;
        residuals.insert("ic".to_string(), ic_ratio);

        let tf = self.traceless_frame();
        let bounds_m = frame_bounds(&tf, tol);
        let gap_m = (bounds_m.upper - bounds_m.lower) / bounds_m.upper.max(1.0);
        residuals.insert("morphophoric".to_string(), gap_m);
        let morphophoric = bounds_m.tight && bounds_m.spanning(tol);

        let tf_tight = self.tight_scaled_frame();
        let bounds_t = frame_bounds(&tf_tight, tol);
        let gap_t = (bounds_t.upper - bounds_t.lower) / bounds_t.upper.max(1.0);
        residuals.insert("tight_ic".to_string(), gap_t);
        let tight_ic = bounds_t.tight && bounds_t.spanning(tol);
        let alpha_t = trace_formula_bound(&tf_tight);
        let alpha_eq = self.tight_bound_formula();
        residuals.insert(
            "tight_ic_bound_match".to_string(),
            (alpha_t - alpha_eq).abs() / alpha_eq.abs().max(f64::MIN_POSITIVE),
        );

        let (s_tight, scales, alpha_s) = match find_scales(&tf, tol) {
            Ok(res) => {
                residuals.insert("s_tight".to_string(), res.residual);
                (res.scalable, res.scales, res.frame_bound)
            }
            Err(_) => {
                residuals.insert("s_tight".to_string(), f64::INFINITY);
                (false, None, None)
            }
        };

        let chi = self.model.chi();
        let chi_dev = self
            .states
            .iter()
            .map(|w| (self.model.project_p0(w).norm_squared() - chi).abs())
            .fold(0.0, f64::max);
        residuals.insert("chi_ray".to_string(), chi_dev / chi);
        let chi_ray = chi_dev <= tol * chi;

        ClassificationReport {
            ic,
            morphophoric,
            morphophoric_bound: morphophoric.then(|| trace_formula_bound(&tf)),
            tight_ic,
            tight_ic_bound: tight_ic.then_some(alpha_t),
            s_tight,
            s_tight_scales: scales,
            s_tight_bound: alpha_s,
            chi_ray,
            residuals,
            tol,
        }
    }

    /// Residuals of the lift identity, computed on the frame operator of
    /// `(v_j / sqrt(pm_j))` over all of V in orthonormal coordinates.
    pub fn lift_identity(&self) -> LiftIdentity {
        let dim = self.model.dim_v();
        let d0 = self.model.dim_v0();
        let mu = self.model.mu();

        let mut s = DMatrix::zeros(dim, dim);
        for (v, &pm) in self.vectors.iter().zip(&self.probs_m) {
            let vt = self.model.to_orthonormal(v);
            s.ger(1.0 / pm, &vt, &vt, 1.0);
        }

        let s0 = frame_operator(&self.tight_scaled_frame());
        let mut expected = DMatrix::zeros(dim, dim);
        expected[(0, 0)] = 1.0 / mu;
        expected.view_mut((1, 1), (d0, d0)).copy_from(&s0);
        let residual = (&s - &expected).norm();

        // Minimize || S - alpha P0 - (1/mu) P_m ||_F over alpha.
        let alpha = s.view((1, 1), (d0, d0)).trace() / d0 as f64;
        let mut tight_expected = DMatrix::identity(dim, dim) * alpha;
        tight_expected[(0, 0)] = 1.0 / mu;
        let tight_residual = (&s - &tight_expected).norm();

        LiftIdentity { residual, tight_residual, tight_bound: alpha }
    }

    /// Shorthand for the universal part of the lift identity.
    pub fn lift_identity_residual(&self) -> f64 {
        self.lift_identity().residual
    }

    /// `|alpha mu - (chi/mu)/dim V0|` for chi-ray tight IC measurements in a
    /// self-dual model.
    pub fn chi_ray_constants_residual(&self, tol: f64) -> Result<f64, MeasurementError> {
        if self.model.duality() != crate::model::DualityClass::SelfDual {
            return Err(MeasurementError::PreconditionNotMet(
                "model is not self-dual".to_string(),
            ));
        }
        let report = self.classify(tol);
        if !report.tight_ic {
            return Err(MeasurementError::PreconditionNotMet(
                "measurement is not tight IC".to_string(),
            ));
        }
        if !report.chi_ray {
            return Err(MeasurementError::PreconditionNotMet(
                "measurement is not chi-ray".to_string(),
            ));
        }
        let alpha = report.tight_ic_bound.expect("present when tight IC");
        let model = &self.model;
        Ok((alpha * model.mu() - (model.chi() / model.mu()) / model.dim_v0() as f64).abs())
    }
}
