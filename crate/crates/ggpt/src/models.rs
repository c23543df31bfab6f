//! Built-in GGPT instances and reference measurement constructors.
//!
//! Besides the quantum and classical model constructors this module houses
//! the three-parameter qubit POVM family
//!
//! ```text
//! Pi_1 = aI + bZ,  Pi_2 = aI - bZ,  Pi_3 = (1-2a)/3 I + cX,
//! Pi_4 = (1-2a)/3 I - c/2 X + sqrt(3)c/2 Y,
//! Pi_5 = (1-2a)/3 I - c/2 X - sqrt(3)c/2 Y
//! ```
//!
//! with `a in (0, 1/2)`, `b in (0, a]`, `c in (0, (1-2a)/3]` (the maximal
//! ranges keeping all effects positive semidefinite), plus a parameter sweep
//! classifying the family over a grid.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::measurement::{Measurement, MeasurementError, DEFAULT_TOL};
use crate::model::{EffectFunctional, GgptModel};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("weights must be nonnegative and sum to one (got sum {sum})")]
    BadWeights { sum: f64 },
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
}

/// Quantum theory on C^d.
pub fn quantum_model(d: usize) -> GgptModel {
    GgptModel::quantum(d)
}

/// Classical probability theory on n outcomes.
pub fn classical_model(n: usize) -> GgptModel {
    GgptModel::classical(n)
}

fn pauli() -> [DMatrix<Complex64>; 3] {
    let i = Complex64::new(0.0, 1.0);
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    [
        DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

fn qubit_from_matrices(matrices: &[DMatrix<Complex64>]) -> Measurement {
    let model = GgptModel::quantum(2);
    let effects: Vec<EffectFunctional> =
        matrices.iter().map(|m| model.effect_from_hermitian(m)).collect();
    Measurement::new(model, effects, DEFAULT_TOL).expect("built-in POVM is valid")
}

/// The qubit SIC tetrahedron `Pi_j = (1/4)(I + (1/sqrt(3)) n_j . sigma)` with
/// `n_j` in {(1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1)}.
pub fn qubit_sic() -> Measurement {
    sic_with_orientation(1.0)
}

/// The SIC tetrahedron with every Bloch vector negated; another 2-design,
/// useful as an independent reference measurement.
pub fn qubit_sic_reflected() -> Measurement {
    sic_with_orientation(-1.0)
}

fn sic_with_orientation(sign: f64) -> Measurement {
    let [sx, sy, sz] = pauli();
    let dirs: [[f64; 3]; 4] =
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let r3 = 3f64.sqrt();
    let eye = DMatrix::<Complex64>::identity(2, 2);
    let matrices: Vec<DMatrix<Complex64>> = dirs
        .iter()
        .map(|n| {
            let bloch = (&sx * Complex64::new(n[0], 0.0)
                + &sy * Complex64::new(n[1], 0.0)
                + &sz * Complex64::new(n[2], 0.0))
                * Complex64::new(sign / r3, 0.0);
            (&eye + bloch) * Complex64::new(0.25, 0.0)
        })
        .collect();
    qubit_from_matrices(&matrices)
}

/// The two-outcome Z eigenbasis measurement {(I+Z)/2, (I-Z)/2}.
pub fn z_basis() -> Measurement {
    let [_, _, sz] = pauli();
    let eye = DMatrix::<Complex64>::identity(2, 2);
    let half = Complex64::new(0.5, 0.0);
    qubit_from_matrices(&[(&eye + &sz) * half, (&eye - &sz) * half])
}

/// Weighted union of the X, Y and Z eigenbasis measurements: six effects
/// `w_i (I +- sigma_i)/2` in the order X+, X-, Y+, Y-, Z+, Z-.
pub fn mub_union(weights: &[f64; 3]) -> Result<Measurement, BuildError> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(BuildError::BadWeights { sum });
    }
    let eye = DMatrix::<Complex64>::identity(2, 2);
    let mut matrices = Vec::with_capacity(6);
    for (sigma, &w) in pauli().iter().zip(weights) {
        let w = Complex64::new(w / 2.0, 0.0);
        matrices.push((&eye + sigma) * w);
        matrices.push((&eye - sigma) * w);
    }
    Ok(qubit_from_matrices(&matrices))
}

/// The classical fine-grained measurement: the n coordinate functionals.
pub fn fine_grained(n: usize) -> Measurement {
    let model = GgptModel::classical(n);
    let effects: Vec<EffectFunctional> = (0..n)
        .map(|j| {
            let mut g = DVector::zeros(n);
            g[j] = 1.0;
            model.effect_from_weights(&g)
        })
        .collect();
    Measurement::new(model, effects, DEFAULT_TOL).expect("fine-grained measurement is valid")
}

/// Named reference measurements.
#[derive(Debug, Clone, Copy)]
pub enum NamedMeasurement {
    QubitSic,
    MubUnion([f64; 3]),
    ZBasis,
    FineGrained(usize),
}

pub fn named_measurement(name: NamedMeasurement) -> Result<Measurement, BuildError> {
    match name {
        NamedMeasurement::QubitSic => Ok(qubit_sic()),
        NamedMeasurement::MubUnion(w) => mub_union(&w),
        NamedMeasurement::ZBasis => Ok(z_basis()),
        NamedMeasurement::FineGrained(n) => Ok(fine_grained(n)),
    }
}

/// The three-parameter qubit POVM family; see the module docs for the
/// effects and the admissible ranges.
pub fn example_family(a: f64, b: f64, c: f64) -> Result<Measurement, BuildError> {
    if !(a > 0.0 && a < 0.5) {
        return Err(BuildError::ParamOutOfRange(format!("a = {a} not in (0, 1/2)")));
    }
    if !(b > 0.0 && b <= a) {
        return Err(BuildError::ParamOutOfRange(format!("b = {b} not in (0, a] with a = {a}")));
    }
    let c_max = (1.0 - 2.0 * a) / 3.0;
    if !(c > 0.0 && c <= c_max + 1e-15) {
        return Err(BuildError::ParamOutOfRange(format!(
            "c = {c} not in (0, (1-2a)/3] with (1-2a)/3 = {c_max}"
        )));
    }
    let [sx, sy, sz] = pauli();
    let eye = DMatrix::<Complex64>::identity(2, 2);
    let re = |x: f64| Complex64::new(x, 0.0);
    let g = (1.0 - 2.0 * a) / 3.0;
    let r3 = 3f64.sqrt();
    let matrices = [
        &eye * re(a) + &sz * re(b),
        &eye * re(a) - &sz * re(b),
        &eye * re(g) + &sx * re(c),
        &eye * re(g) - &sx * re(c / 2.0) + &sy * re(r3 * c / 2.0),
        &eye * re(g) - &sx * re(c / 2.0) - &sy * re(r3 * c / 2.0),
    ];
    Ok(qubit_from_matrices(&matrices))
}

/// A deterministic six-outcome qubit measurement whose traceless parts are
/// NOT a scalable frame: three Bloch directions clustered within 20 degrees
/// in the xy-plane (plus the balancing vector, which doubles one of them),
/// and a z pair. Every nonnegative combination of the xy outer products
/// stays strictly inside a half-plane, so no scaling reaches the identity.
pub fn clustered_non_scalable() -> Measurement {
    let model = GgptModel::quantum(2);
    let delta = 0.1;
    let d10 = 10f64.to_radians();
    let d20 = 20f64.to_radians();
    let t1 = [delta, 0.0, 0.0];
    let t2 = [delta * d10.cos(), delta * d10.sin(), 0.0];
    let t3 = [delta * d20.cos(), delta * d20.sin(), 0.0];
    let t4 = [-(t1[0] + t2[0] + t3[0]), -(t1[1] + t2[1] + t3[1]), 0.0];
    let t5 = [0.0, 0.0, delta];
    let t6 = [0.0, 0.0, -delta];
    let pm = [0.15, 0.15, 0.15, 0.25, 0.15, 0.15];
    let effects: Vec<EffectFunctional> = [t1, t2, t3, t4, t5, t6]
        .iter()
        .zip(pm)
        .map(|(t, p)| EffectFunctional::from_slice(&[p, t[0], t[1], t[2]]))
        .collect();
    Measurement::new(model, effects, DEFAULT_TOL).expect("clustered POVM is valid")
}

/// A random valid measurement with `outcomes` effects.
///
/// Quantum models draw Wishart-distributed positive operators and symmetrize
/// them to sum to the identity; classical models draw, per coordinate, a
/// uniform point of the outcome simplex.
pub fn random_measurement<R: Rng>(
    model: &GgptModel,
    outcomes: usize,
    rng: &mut R,
) -> Measurement {
    assert!(outcomes >= 1);
    match model.kind() {
        crate::model::ModelKind::Quantum { d } => {
            let mut raw: Vec<DMatrix<Complex64>> = (0..outcomes)
                .map(|_| {
                    let g = DMatrix::from_fn(d, d, |_, _| {
                        Complex64::new(normal(rng), normal(rng))
                    });
                    &g * g.adjoint()
                })
                .collect();
            let mut total = DMatrix::<Complex64>::zeros(d, d);
            for a in &raw {
                total += a;
            }
            // total^{-1/2} via the Hermitian eigendecomposition.
            let eig = total.symmetric_eigen();
            let mut inv_sqrt = DMatrix::<Complex64>::zeros(d, d);
            for k in 0..d {
                let lambda = eig.eigenvalues[k];
                let q = eig.eigenvectors.column(k);
                let proj = q * q.adjoint();
                inv_sqrt += proj * Complex64::new(1.0 / lambda.sqrt(), 0.0);
            }
            for a in &mut raw {
                *a = &inv_sqrt * &*a * &inv_sqrt;
            }
            let effects: Vec<EffectFunctional> =
                raw.iter().map(|m| model.effect_from_hermitian(m)).collect();
            Measurement::new(model.clone(), effects, DEFAULT_TOL)
                .expect("symmetrized random POVM is valid")
        }
        crate::model::ModelKind::Classical { n } => {
            let mut columns = vec![DVector::zeros(n); outcomes];
            for coord in 0..n {
                let draws: Vec<f64> =
                    (0..outcomes).map(|_| -f64::ln(rng.gen_range(1e-300..1.0))).collect();
                let total: f64 = draws.iter().sum();
                for (column, v) in columns.iter_mut().zip(&draws) {
                    column[coord] = v / total;
                }
            }
            let effects: Vec<EffectFunctional> =
                columns.iter().map(|g| model.effect_from_weights(g)).collect();
            Measurement::new(model.clone(), effects, DEFAULT_TOL)
                .expect("random stochastic measurement is valid")
        }
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

/// Grid resolution of the family sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepGrid {
    pub na: usize,
    pub nb: usize,
    pub nc: usize,
}

/// One classified grid point of the family sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub ic: bool,
    pub morphophoric: bool,
    pub tight_ic: bool,
    pub s_tight: bool,
    pub chi_ray: bool,
    pub alpha_s: Option<f64>,
}

/// Classify the family over the grid. The open interval ends are excluded by
/// half-step offsets in `a`; the half-open ranges of `b` and `c` include
/// their closed upper endpoints (`b = a` and `c = (1-2a)/3`, the rank-1 edge).
pub fn sweep_family(grid: SweepGrid, tol: f64) -> Vec<SweepRecord> {
    assert!(grid.na >= 2 && grid.nb >= 2 && grid.nc >= 2, "step counts must be >= 2");
    let mut records = Vec::with_capacity(grid.na * grid.nb * grid.nc);
    for ia in 0..grid.na {
        let a = 0.5 * (ia as f64 + 0.5) / grid.na as f64;
        for ib in 0..grid.nb {
            let b = a * (ib as f64 + 1.0) / grid.nb as f64;
            for ic in 0..grid.nc {
                let c = (1.0 - 2.0 * a) / 3.0 * (ic as f64 + 1.0) / grid.nc as f64;
                let meas = example_family(a, b, c).expect("grid points are in range");
                let r = meas.classify(tol);
                records.push(SweepRecord {
                    a,
                    b,
                    c,
                    ic: r.ic,
                    morphophoric: r.morphophoric,
                    tight_ic: r.tight_ic,
                    s_tight: r.s_tight,
                    chi_ray: r.chi_ray,
                    alpha_s: r.s_tight_bound,
                });
            }
        }
    }
    records
}
