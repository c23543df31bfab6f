//! GGPT state spaces: coordinates, inner product, projections, effects.
//!
//! A model is the tuple (V, C, e, m, mu, <.,.>_0). Every vector `x` in `V` is
//! stored in the basis `(m, u_1, ..., u_D)` where `(u_i)` is an orthonormal
//! basis of the traceless subspace `V0 = ker e`, so
//!
//! - coordinate 0 is `e(x)`, and `m` itself has coordinates `(1; 0, ..., 0)`;
//! - the inner product is `<x, y> = mu * x_0 y_0 + sum_i x_i y_i`;
//! - dropping coordinate 0 realizes the orthogonal projection `P0` onto `V0`,
//!   and the standard dot product on what remains is `<.,.>_0`.
//!
//! Functionals are stored by their values `(f(m); f(u_1), ..., f(u_D))`, so
//! evaluation is the plain coordinate dot product. The Riesz vector of a
//! functional is `T^{-1}(f) = (f(m)/mu; f(u_1), ..., f(u_D))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("vector length {got} does not match dim V = {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("effect has (numerically) zero trace component: e(v) = {value:.3e} <= tol")]
    ZeroTraceEffect { value: f64 },
}

/// Declared compatibility between the cone and its positive dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualityClass {
    InfraDual,
    SupraDual,
    SelfDual,
}

/// The geometries shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelKind {
    /// Hermitian d x d matrices ordered by positive semidefiniteness,
    /// `e = trace`, `m = I/d`, Hilbert-Schmidt inner product.
    Quantum { d: usize },
    /// `R^n` ordered by the nonnegative orthant, `e = coordinate sum`,
    /// `m = uniform distribution`, standard dot product.
    Classical { n: usize },
}

/// A functional on V stored by its values on the basis `(m, u_1, ..., u_D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectFunctional {
    coords: DVector<f64>,
}

impl EffectFunctional {
    pub fn new(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self { coords: DVector::from_row_slice(coords) }
    }

    /// The unit effect `e`, with values `(1; 0, ..., 0)`.
    pub fn unit(dim_v0: usize) -> Self {
        let mut coords = DVector::zeros(dim_v0 + 1);
        coords[0] = 1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// `f(m)`.
    pub fn on_m(&self) -> f64 {
        self.coords[0]
    }

    /// Evaluate on a vector given in model coordinates:
    /// `f(x) = f(m) x_0 + sum_i f(u_i) x_i`.
    pub fn evaluate(&self, x: &DVector<f64>) -> f64 {
        self.coords.dot(x)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { coords: &self.coords * t }
    }
}

/// A GGPT instance: dimensions, size parameter, geometry constant and the
/// cone membership oracles of one of the built-in kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct GgptModel {
    name: String,
    kind: ModelKind,
    dim_v0: usize,
    mu: f64,
    chi: f64,
    duality: DualityClass,
    equinorm: bool,
}

impl GgptModel {
    /// Quantum theory on C^d: `dim V0 = d^2 - 1`, `mu = 1/d`, `chi = (d-1)/d`,
    /// self-dual, equinorm.
    pub fn quantum(d: usize) -> Self {
        assert!(d >= 2, "quantum model needs d >= 2");
        Self {
            name: format!("quantum(d={d})"),
            kind: ModelKind::Quantum { d },
            dim_v0: d * d - 1,
            mu: 1.0 / d as f64,
            chi: (d as f64 - 1.0) / d as f64,
            duality: DualityClass::SelfDual,
            equinorm: true,
        }
    }

    /// Classical theory on n outcomes: `dim V0 = n - 1`, `mu = 1/n`,
    /// `chi = 1 - 1/n`, self-dual, equinorm.
    pub fn classical(n: usize) -> Self {
        assert!(n >= 2, "classical model needs n >= 2");
        Self {
            name: format!("classical(n={n})"),
            kind: ModelKind::Classical { n },
            dim_v0: n - 1,
            mu: 1.0 / n as f64,
            chi: 1.0 - 1.0 / n as f64,
            duality: DualityClass::SelfDual,
            equinorm: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v0 + 1
    }

    pub fn dim_v0(&self) -> usize {
        self.dim_v0
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// The stored analytic `chi = max over states of ||x - m||_0^2`.
    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn duality(&self) -> DualityClass {
        self.duality
    }

    pub fn equinorm(&self) -> bool {
        self.equinorm
    }

    /// Coordinates of the distinguished state `m`.
    pub fn m_coords(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim_v());
        x[0] = 1.0;
        x
    }

    pub fn unit_effect(&self) -> EffectFunctional {
        EffectFunctional::unit(self.dim_v0)
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), ModelError> {
        if x.len() != self.dim_v() {
            return Err(ModelError::DimensionMismatch { expected: self.dim_v(), got: x.len() });
        }
        Ok(())
    }

    /// `<x, y> = mu x_0 y_0 + sum_i x_i y_i`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let mut acc = self.mu * x[0] * y[0];
        for i in 1..x.len() {
            acc += x[i] * y[i];
        }
        Ok(acc)
    }

    /// `P0 x = x - e(x) m`: drop coordinate 0. The result is expressed in the
    /// orthonormal basis `(u_i)`, so the dot product realizes `<.,.>_0`.
    pub fn project_p0(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(1, x.len() - 1).into_owned()
    }

    /// Re-embed a `V0` vector as `(0; v)`.
    pub fn embed_v0(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(v.len() + 1);
        x.rows_mut(1, v.len()).copy_from(v);
        x
    }

    /// Coordinates in the orthonormal basis `(m/sqrt(mu), u_1, ..., u_D)`,
    /// in which the inner product is the plain dot product.
    pub fn to_orthonormal(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        y[0] *= self.mu.sqrt();
        y
    }

    /// Riesz vector of a functional: `T^{-1}(f) = (f(m)/mu; f(u_1), ...)`.
    /// Satisfies `inner(effect_to_vector(f), x) = f(x)` for all x.
    pub fn effect_to_vector(&self, f: &EffectFunctional) -> DVector<f64> {
        let mut v = f.coords().clone();
        v[0] /= self.mu;
        v
    }

    /// `w = v / e(v)`, the state proportional to v.
    pub fn normalize_state(&self, v: &DVector<f64>, tol: f64) -> Result<DVector<f64>, ModelError> {
        self.check_dim(v)?;
        if v[0] <= tol {
            return Err(ModelError::ZeroTraceEffect { value: v[0] });
        }
        Ok(v / v[0])
    }

    /// Report-style validity check of a family of effects as a measurement:
    /// nonzero effects in the dual cone summing to the unit effect.
    pub fn validate_measurement(
        &self,
        effects: &[EffectFunctional],
        tol: f64,
    ) -> MeasurementValidity {
        let mut sum = DVector::zeros(self.dim_v());
        let mut in_dual_cone = Vec::with_capacity(effects.len());
        let mut nonzero = Vec::with_capacity(effects.len());
        for f in effects {
            sum += f.coords();
            in_dual_cone.push(self.dual_cone_contains(f, tol));
            nonzero.push(f.coords().norm() > tol);
        }
        let sum_residual = (&sum - self.unit_effect().coords()).norm();
        let valid = sum_residual <= tol
            && in_dual_cone.iter().all(|&b| b)
            && nonzero.iter().all(|&b| b)
            && !effects.is_empty();
        MeasurementValidity { sum_residual, in_dual_cone, nonzero, valid }
    }

    /// Cone membership of a vector in model coordinates, within `tol`.
    pub fn cone_contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self.kind {
            ModelKind::Quantum { d } => {
                let mat = self.coords_to_hermitian(x);
                let scale = x.amax().max(1.0);
                min_eigenvalue(&mat, d) >= -tol * scale
            }
            ModelKind::Classical { n } => {
                let v = self.coords_to_classical(x);
                let scale = x.amax().max(1.0);
                (0..n).all(|i| v[i] >= -tol * scale)
            }
        }
    }

    /// Dual-cone membership of a functional, within `tol`. For the built-in
    /// self-dual models this is cone membership of the Riesz vector.
    pub fn dual_cone_contains(&self, f: &EffectFunctional, tol: f64) -> bool {
        self.cone_contains(&self.effect_to_vector(f), tol)
    }

    // --- quantum coordinate charts -------------------------------------

    /// Generalized Gell-Mann basis of the traceless Hermitian d x d matrices,
    /// orthonormal for the Hilbert-Schmidt inner product. Deterministic
    /// order: symmetric pairs (j < k, lexicographic), then antisymmetric
    /// pairs (same order), then the d-1 diagonal matrices.
    pub fn gell_mann_basis(d: usize) -> Vec<DMatrix<Complex64>> {
        let mut basis = Vec::with_capacity(d * d - 1);
        let inv_r2 = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        for j in 0..d {
            for k in (j + 1)..d {
                let mut m = DMatrix::zeros(d, d);
                m[(j, k)] = inv_r2;
                m[(k, j)] = inv_r2;
                basis.push(m);
            }
        }
        for j in 0..d {
            for k in (j + 1)..d {
                let mut m = DMatrix::zeros(d, d);
                m[(j, k)] = Complex64::new(0.0, -1.0) * inv_r2;
                m[(k, j)] = Complex64::new(0.0, 1.0) * inv_r2;
                basis.push(m);
            }
        }
        for l in 1..d {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut m = DMatrix::zeros(d, d);
            for r in 0..l {
                m[(r, r)] = Complex64::new(norm, 0.0);
            }
            m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
            basis.push(m);
        }
        basis
    }

    /// Model coordinates of a Hermitian matrix: `(Tr M; Tr(M u_i))`.
    pub fn hermitian_to_coords(&self, m: &DMatrix<Complex64>) -> DVector<f64> {
        let ModelKind::Quantum { d } = self.kind else {
            panic!("hermitian_to_coords requires a quantum model");
        };
        assert_eq!(m.nrows(), d);
        assert_eq!(m.ncols(), d);
        let mut x = DVector::zeros(self.dim_v());
        x[0] = m.trace().re;
        for (i, u) in Self::gell_mann_basis(d).iter().enumerate() {
            x[i + 1] = (m * u).trace().re;
        }
        x
    }

    /// Hermitian matrix of a coordinate vector: `x_0 I/d + sum_i x_i u_i`.
    pub fn coords_to_hermitian(&self, x: &DVector<f64>) -> DMatrix<Complex64> {
        let ModelKind::Quantum { d } = self.kind else {
            panic!("coords_to_hermitian requires a quantum model");
        };
        assert_eq!(x.len(), self.dim_v());
        let mut m = DMatrix::identity(d, d) * Complex64::new(x[0] / d as f64, 0.0);
        for (i, u) in Self::gell_mann_basis(d).iter().enumerate() {
            m += u * Complex64::new(x[i + 1], 0.0);
        }
        m
    }

    /// Effect of a Hermitian POVM element under the trace pairing:
    /// values `(Tr(Pi m); Tr(Pi u_i)) = (Tr(Pi)/d; Tr(Pi u_i))`.
    pub fn effect_from_hermitian(&self, pi: &DMatrix<Complex64>) -> EffectFunctional {
        let mut coords = self.hermitian_to_coords(pi);
        coords[0] *= self.mu;
        EffectFunctional::new(coords)
    }

    // --- classical coordinate charts ------------------------------------

    /// Orthonormal basis of `{x in R^n : sum x_i = 0}`, deterministic:
    /// `u_l = (1, ..., 1, -l, 0, ..., 0) / sqrt(l(l+1))` with `l` ones.
    pub fn simplex_basis(n: usize) -> Vec<DVector<f64>> {
        (1..n)
            .map(|l| {
                let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
                DVector::from_fn(n, |i, _| {
                    if i < l {
                        norm
                    } else if i == l {
                        -(l as f64) * norm
                    } else {
                        0.0
                    }
                })
            })
            .collect()
    }

    /// Model coordinates of a vector in `R^n`: `(sum_i y_i; u_l . y)`.
    pub fn classical_to_coords(&self, y: &DVector<f64>) -> DVector<f64> {
        let ModelKind::Classical { n } = self.kind else {
            panic!("classical_to_coords requires a classical model");
        };
        assert_eq!(y.len(), n);
        let mut x = DVector::zeros(self.dim_v());
        x[0] = y.sum();
        for (l, u) in Self::simplex_basis(n).iter().enumerate() {
            x[l + 1] = u.dot(y);
        }
        x
    }

    /// The `R^n` vector of a coordinate vector: `x_0 m + sum_l x_l u_l`.
    pub fn coords_to_classical(&self, x: &DVector<f64>) -> DVector<f64> {
        let ModelKind::Classical { n } = self.kind else {
            panic!("coords_to_classical requires a classical model");
        };
        assert_eq!(x.len(), self.dim_v());
        let mut y = DVector::from_element(n, x[0] / n as f64);
        for (l, u) in Self::simplex_basis(n).iter().enumerate() {
            y += u * x[l + 1];
        }
        y
    }

    /// Effect of a functional given by outcome weights `g` (acting by the
    /// dot product): values `(g . m; g . u_l)`.
    pub fn effect_from_weights(&self, g: &DVector<f64>) -> EffectFunctional {
        let mut coords = self.classical_to_coords(g);
        coords[0] *= self.mu;
        EffectFunctional::new(coords)
    }

    // --- sampling --------------------------------------------------------

    /// Coordinates of a uniformly random pure state (extreme point of B).
    pub fn sample_pure_state<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        match self.kind {
            ModelKind::Quantum { d } => {
                // Normalized complex Gaussian vector: Haar-uniform pure state.
                let mut psi = DVector::from_fn(d, |_, _| {
                    Complex64::new(gaussian(rng), gaussian(rng))
                });
                psi /= Complex64::new(psi.norm(), 0.0);
                let rho = &psi * psi.adjoint();
                self.hermitian_to_coords(&rho)
            }
            ModelKind::Classical { n } => {
                let j = rng.gen_range(0..n);
                let mut y = DVector::zeros(n);
                y[j] = 1.0;
                self.classical_to_coords(&y)
            }
        }
    }

    /// Coordinates of a random state covering interior and near-boundary
    /// points: quantum models mix a uniform pure state with `m` by a uniform
    /// weight; classical models sample uniformly on the simplex.
    pub fn sample_state<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        match self.kind {
            ModelKind::Quantum { .. } => {
                let pure = self.sample_pure_state(rng);
                let t: f64 = rng.gen_range(0.0..1.0);
                &pure * t + self.m_coords() * (1.0 - t)
            }
            ModelKind::Classical { n } => {
                let mut y = DVector::from_fn(n, |_, _| -f64::ln(rng.gen_range(1e-300..1.0)));
                y /= y.sum();
                self.classical_to_coords(&y)
            }
        }
    }
}

/// Standard normal variate by Box-Muller.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

fn min_eigenvalue(m: &DMatrix<Complex64>, d: usize) -> f64 {
    debug_assert_eq!(m.nrows(), d);
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of `validate_measurement`.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurementValidity {
    /// `|| sum_j pi_j - e ||` over the functional coordinates.
    pub sum_residual: f64,
    /// Per-effect dual-cone membership.
    pub in_dual_cone: Vec<bool>,
    /// Per-effect nonzeroness.
    pub nonzero: Vec<bool>,
    pub valid: bool,
}
