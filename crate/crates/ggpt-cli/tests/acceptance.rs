//! Acceptance suite: every criterion as one test with a printed verdict.
//!
//! Run with `cargo test -p ggpt-cli --test acceptance -- --nocapture` to see
//! one line per criterion.

use std::path::Path;
use std::time::Instant;

use ggpt::frames::frame_bounds;
use ggpt::io::{EffectSpec, MeasurementFile};
use ggpt::measurement::Measurement;
use ggpt::model::GgptModel;
use ggpt::models;
use ggpt::scalable::find_scales;
use ggpt::urgleichung;
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-8;

fn pass(criterion: usize, what: &str) {
    println!("[acceptance] criterion {criterion} ({what}): PASS");
}

fn tight_scales(m: &Measurement) -> Vec<f64> {
    m.probs_m().iter().map(|&p| 1.0 / p.sqrt()).collect()
}

fn nnls_scales(m: &Measurement) -> Vec<f64> {
    find_scales(&m.traceless_frame(), TOL)
        .unwrap()
        .scales
        .expect("measurement must be s-tight")
}

fn biased_tight_union() -> Measurement {
    Measurement::weighted_union(
        &[(0.3, &models::qubit_sic()), (0.7, &models::qubit_sic_reflected())],
        TOL,
    )
    .unwrap()
}

/// Every s-tight measurement exercised by criteria 5 and 8, with an
/// informationally complete partner on the same model.
fn s_tight_corpus() -> Vec<(&'static str, Measurement, Measurement)> {
    let sic = models::qubit_sic();
    let refl = models::qubit_sic_reflected();
    vec![
        ("qubit SIC", sic.clone(), refl.clone()),
        ("reflected SIC", refl.clone(), sic.clone()),
        ("MUB union equal", models::mub_union(&[1.0 / 3.0; 3]).unwrap(), sic.clone()),
        ("MUB union biased", models::mub_union(&[0.5, 0.25, 0.25]).unwrap(), sic.clone()),
        (
            "family rank-1 tight",
            models::example_family(1.0 / 6.0, 1.0 / 6.0, 2.0 / 9.0).unwrap(),
            sic.clone(),
        ),
        (
            "family rank-1 morphophoric",
            models::example_family(
                (3f64.sqrt() - 1.0) / 4.0,
                (3f64.sqrt() - 1.0) / 4.0,
                (3.0 - 3f64.sqrt()) / 6.0,
            )
            .unwrap(),
            sic.clone(),
        ),
        (
            "family morphophoric tight",
            models::example_family(0.2, 0.1, 2.0 * 3f64.sqrt() * 0.1 / 3.0).unwrap(),
            sic.clone(),
        ),
        ("family generic", models::example_family(0.2, 0.15, 0.1).unwrap(), sic.clone()),
        ("biased SIC union", biased_tight_union(), sic.clone()),
        ("classical fine 3", models::fine_grained(3), models::fine_grained(3)),
        ("classical fine 5", models::fine_grained(5), models::fine_grained(5)),
    ]
}

#[test]
fn criterion_1_example_family_surfaces() {
    let started = Instant::now();
    let n = 50usize;
    let mut near_morph = 0usize;
    let mut near_tight = 0usize;
    for ia in 0..n {
        let a = 0.5 * (ia as f64 + 0.5) / n as f64;
        let c_max = (1.0 - 2.0 * a) / 3.0;
        let cell = c_max / n as f64;
        for ib in 0..n {
            let b = a * (ib as f64 + 1.0) / n as f64;
            let c_morph = 2.0 * 3f64.sqrt() * b / 3.0;
            let c_tight = (4.0 * b * b * (1.0 - 2.0 * a) / (9.0 * a)).sqrt();
            for ic in 0..n {
                let c = c_max * (ic as f64 + 1.0) / n as f64;
                let meas = models::example_family(a, b, c).unwrap();
                let report = meas.classify(TOL);
                assert!(report.s_tight, "every family point is s-tight (a={a} b={b} c={c})");
                assert!(report.ic);

                // The measured spectral gaps must reproduce the analytic
                // distance from the class surfaces.
                let bm = frame_bounds(&meas.traceless_frame(), TOL);
                let gap_m = bm.upper - bm.lower;
                let want_m = 3.0 * (c + c_morph) * (c - c_morph).abs();
                assert!(
                    (gap_m - want_m).abs() <= 1e-10 + 1e-9 * want_m,
                    "morphophoric gap at ({a},{b},{c}): {gap_m} vs {want_m}"
                );

                let bt = frame_bounds(&meas.tight_scaled_frame(), TOL);
                let gap_t = bt.upper - bt.lower;
                let want_t = 9.0 / (1.0 - 2.0 * a) * (c + c_tight) * (c - c_tight).abs();
                assert!(
                    (gap_t - want_t).abs() <= 1e-10 + 1e-9 * want_t,
                    "tight gap at ({a},{b},{c}): {gap_t} vs {want_t}"
                );

                // Flagged sets coincide with the one-cell bands around the
                // surfaces (ties within 1e-9 of the cell boundary skipped).
                let dist_m = (c - c_morph).abs();
                if (dist_m - cell).abs() > 1e-9 * cell {
                    let in_band = dist_m <= cell;
                    let flagged = gap_m <= 3.0 * (c + c_morph) * cell;
                    assert_eq!(in_band, flagged, "morphophoric band at ({a},{b},{c})");
                    if in_band {
                        near_morph += 1;
                    }
                }
                let dist_t = (c - c_tight).abs();
                if (dist_t - cell).abs() > 1e-9 * cell {
                    let in_band = dist_t <= cell;
                    let flagged = gap_t <= 9.0 / (1.0 - 2.0 * a) * (c + c_tight) * cell;
                    assert_eq!(in_band, flagged, "tight band at ({a},{b},{c})");
                    if in_band {
                        near_tight += 1;
                    }
                }

                // At the strict tolerance, a raised flag pins the point to
                // the surface within a fraction of a cell.
                if report.morphophoric {
                    assert!(dist_m <= cell);
                }
                if report.tight_ic {
                    assert!(dist_t <= cell);
                }
            }
        }
    }
    assert!(near_morph > 1000, "the morphophoric surface must cross the grid");
    assert!(near_tight > 1000, "the tight surface must cross the grid");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "sweep took {elapsed:?}, target < 60 s");
    pass(1, "example-family surfaces on a 50^3 grid");
}

#[test]
fn criterion_2_distinguished_points() {
    let r = models::example_family(1.0 / 6.0, 1.0 / 6.0, 2.0 / 9.0).unwrap().classify(TOL);
    assert!(r.ic && r.tight_ic && r.chi_ray && !r.morphophoric);

    let x = (3f64.sqrt() - 1.0) / 4.0;
    let r = models::example_family(x, x, (3.0 - 3f64.sqrt()) / 6.0).unwrap().classify(TOL);
    assert!(r.ic && r.morphophoric && r.chi_ray && !r.tight_ic);

    let r = models::example_family(0.2, 0.1, 2.0 * 3f64.sqrt() * 0.1 / 3.0)
        .unwrap()
        .classify(TOL);
    assert!(r.morphophoric && r.tight_ic);
    pass(2, "distinguished family points");
}

#[test]
fn criterion_3_universal_lift_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut checked = 0usize;
    for model in [
        GgptModel::quantum(2),
        GgptModel::quantum(3),
        GgptModel::classical(3),
        GgptModel::classical(5),
    ] {
        for _ in 0..50 {
            let outcomes = rng.gen_range(2..9);
            let meas = models::random_measurement(&model, outcomes, &mut rng);
            let residual = meas.lift_identity_residual();
            assert!(
                residual <= 1e-10,
                "lift identity failed on {} with {outcomes} outcomes: {residual}",
                model.name()
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 200);
    pass(3, "lift identity on 200 randomized measurements");
}

#[test]
fn criterion_4_constants_relation() {
    // Qubit SIC: alpha mu = (2/3)(1/2) = 1/3.
    let sic = models::qubit_sic();
    assert!(sic.chi_ray_constants_residual(TOL).unwrap() <= 1e-10);
    let alpha = sic.classify(TOL).tight_ic_bound.unwrap();
    assert!((alpha * sic.model().mu() - 1.0 / 3.0).abs() <= 1e-10);

    let family = models::example_family(1.0 / 6.0, 1.0 / 6.0, 2.0 / 9.0).unwrap();
    assert!(family.chi_ray_constants_residual(TOL).unwrap() <= 1e-10);

    // Classical fine-grained: alpha mu = 1.
    for n in [3usize, 5] {
        let fg = models::fine_grained(n);
        assert!(fg.chi_ray_constants_residual(TOL).unwrap() <= 1e-10);
        let alpha = fg.classify(TOL).tight_ic_bound.unwrap();
        assert!((alpha * fg.model().mu() - 1.0).abs() <= 1e-10);
    }
    pass(4, "alpha*mu = (chi/mu)/dim V0 for chi-ray tight IC");
}

#[test]
fn criterion_5_primal_equation_equivalence() {
    // Forward: every s-tight measurement satisfies the equation against any
    // partner, at its own NNLS scales.
    for (seed, (name, pi, xi)) in s_tight_corpus().into_iter().enumerate() {
        let scales = nnls_scales(&pi);
        let residual =
            urgleichung::verify_primal_equation(&pi, &xi, &scales, 100, seed as u64).unwrap();
        assert!(residual <= 1e-10, "{name}: forward residual {residual}");
    }

    // The forward direction holds for every partner, IC or not.
    let sic = models::qubit_sic();
    let residual = urgleichung::verify_primal_equation(
        &sic,
        &models::z_basis(),
        &nnls_scales(&sic),
        100,
        41,
    )
    .unwrap();
    assert!(residual <= 1e-10, "forward vs non-IC partner: {residual}");

    // Converse: a non-s-tight measurement fails against an IC reference for
    // any proposed scales.
    let bad = models::clustered_non_scalable();
    let ones = vec![1.0; bad.len()];
    let residual = urgleichung::verify_primal_equation(&bad, &sic, &ones, 100, 99).unwrap();
    assert!(residual > 1e-3, "non-s-tight residual only {residual}");
    pass(5, "primal equation forward <= 1e-10, converse > 1e-3");
}

#[test]
fn criterion_6_tight_case_identity() {
    // (C - K) delta_pi vanishes on a basis of V for tight IC measurements at
    // the canonical scales 1/sqrt(pm_j).
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let tight_corpus: Vec<(&str, Measurement, Measurement)> = vec![
        ("qubit SIC", models::qubit_sic(), models::z_basis()),
        ("MUB union equal", models::mub_union(&[1.0 / 3.0; 3]).unwrap(), models::qubit_sic()),
        (
            "family rank-1 tight",
            models::example_family(1.0 / 6.0, 1.0 / 6.0, 2.0 / 9.0).unwrap(),
            models::qubit_sic(),
        ),
        ("biased SIC union", biased_tight_union(), models::z_basis()),
        (
            "classical fine 3",
            models::fine_grained(3),
            models::random_measurement(&GgptModel::classical(3), 4, &mut rng),
        ),
        (
            "classical fine 5",
            models::fine_grained(5),
            models::random_measurement(&GgptModel::classical(5), 3, &mut rng),
        ),
    ];
    for (name, pi, xi) in &tight_corpus {
        assert!(pi.classify(TOL).tight_ic, "{name} must be tight IC");
        let data = urgleichung::UrgleichungData::compute(pi, xi, &tight_scales(pi)).unwrap();
        let r = data.residuals["ck_identity_on_basis"];
        assert!(r <= 1e-10, "{name}: ||(C-K) delta_pi|| = {r}");
    }

    // A biased s-tight but non-tight measurement separates C from K.
    let pi = models::mub_union(&[0.5, 0.25, 0.25]).unwrap();
    assert!(!pi.classify(TOL).tight_ic);
    let data =
        urgleichung::UrgleichungData::compute(&pi, &models::qubit_sic(), &nnls_scales(&pi))
            .unwrap();
    assert!(data.residuals["ck_identity_on_basis"] > 1e-3);
    pass(6, "C delta_pi = K delta_pi iff tight IC");
}

#[test]
fn criterion_7_ltp_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(700);

    // Qubit SIC: A = 3, all three forms within 1e-10.
    let pi = models::qubit_sic();
    let xi = models::z_basis();
    for _ in 0..20 {
        let x = pi.model().sample_state(&mut rng);
        let ltp = urgleichung::ltp_decomposition(&pi, &xi, &x, TOL).unwrap();
        assert!((ltp.a_constant - 3.0).abs() <= 1e-10);
        assert!(ltp.residual_primal <= 1e-10);
        assert!(ltp.residual_corrected <= 1e-10);
        assert!(ltp.residual_qbist <= 1e-10);
    }

    // Classical fine-grained: A = 1 and the correction term vanishes.
    let pi = models::fine_grained(4);
    let xi = models::random_measurement(&GgptModel::classical(4), 3, &mut rng);
    for _ in 0..20 {
        let x = pi.model().sample_state(&mut rng);
        let ltp = urgleichung::ltp_decomposition(&pi, &xi, &x, TOL).unwrap();
        assert!((ltp.a_constant - 1.0).abs() <= 1e-12);
        for c in &ltp.correction_term {
            assert!(c.abs() <= 1e-12, "correction term must vanish exactly");
        }
        assert!(ltp.residual_primal <= 1e-10);
    }

    // beta_j = (1 - A) pm_j: zero spread iff unbiased.
    let beta = urgleichung::beta_weights(&models::qubit_sic());
    let spread = |b: &[f64]| {
        b.iter().fold(f64::MIN, |a, &x| a.max(x)) - b.iter().fold(f64::MAX, |a, &x| a.min(x))
    };
    assert!(spread(&beta) <= 1e-12, "unbiased SIC has constant beta");
    let beta = urgleichung::beta_weights(&models::mub_union(&[0.5, 0.25, 0.25]).unwrap());
    assert!(spread(&beta) > 1e-3, "biased measurement has spread-out beta");
    pass(7, "LTP forms: A = 3 (SIC), A = 1 (classical), beta spread");
}

fn write_measurement(meas: &Measurement, path: &Path) {
    let file = MeasurementFile {
        model: Some(meas.model().kind()),
        effects: meas
            .effects()
            .iter()
            .map(|f| EffectSpec::Coords { coords: f.coords().as_slice().to_vec() })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file).unwrap()).unwrap();
}

#[test]
fn criterion_8_reconstruction_roundtrip() {
    // Library path: 100 random states per s-tight measurement.
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    for (name, pi, _) in s_tight_corpus() {
        let scales = nnls_scales(&pi);
        let alpha = pi.s_tight_bound(&scales);
        for _ in 0..100 {
            let x = pi.model().sample_state(&mut rng);
            let p = pi.apply(&x);
            let rec =
                urgleichung::reconstruct_state(&pi, &scales, alpha, p.as_slice(), TOL).unwrap();
            let err = (DVector::from_row_slice(&rec.state) - &x).norm();
            assert!(err <= 1e-8, "{name}: roundtrip error {err}");
        }
    }

    // CLI path: statistics of a known state reproduce its coordinates
    // through file I/O and the reconstruct subcommand.
    let dir = tempfile::tempdir().unwrap();
    let pi = models::qubit_sic();
    let povm_path = dir.path().join("sic.json");
    write_measurement(&pi, &povm_path);
    let x = pi.model().sample_state(&mut rng);
    let p = pi.apply(&x);
    let probs_path = dir.path().join("probs.json");
    std::fs::write(&probs_path, serde_json::to_string(&p.as_slice().to_vec()).unwrap()).unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_ggpt"))
        .args(["reconstruct", "--povm"])
        .arg(&povm_path)
        .arg("--probs-file")
        .arg(&probs_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let state: Vec<f64> =
        v["state"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let err = (DVector::from_row_slice(&state) - &x).norm();
    assert!(err <= 1e-8, "CLI roundtrip error {err}");
    pass(8, "reconstruction roundtrip, library and CLI");
}

#[test]
fn criterion_9_scalability_solver() {
    use ggpt::frames::Frame;

    let r3 = 3f64.sqrt();
    let mercedes =
        Frame::from_rows(2, &[vec![1.0, 0.0], vec![-0.5, r3 / 2.0], vec![-0.5, -r3 / 2.0]])
            .unwrap();
    let redundant = Frame::from_rows(2, &[
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()],
    ])
    .unwrap();
    let d10 = 10f64.to_radians();
    let d20 = 20f64.to_radians();
    let cluster = Frame::from_rows(2, &[
        vec![1.0, 0.0],
        vec![d10.cos(), d10.sin()],
        vec![d20.cos(), d20.sin()],
    ])
    .unwrap();

    let res = find_scales(&mercedes, TOL).unwrap();
    assert!(res.scalable);
    let s = res.scales.as_ref().unwrap();
    assert!(s.iter().all(|&v| (v - s[0]).abs() <= 1e-8 * s[0]));
    assert!((res.frame_bound.unwrap() - 1.5).abs() <= 1e-8);

    let res = find_scales(&redundant, TOL).unwrap();
    assert!(res.scalable);
    let s = res.scales.as_ref().unwrap();
    assert!((s[0] - s[1]).abs() <= 1e-8 * s[0]);
    assert!(s[2] <= 1e-8 * s[0], "the oblique vector gets scale zero");

    let res = find_scales(&cluster, TOL).unwrap();
    assert!(!res.scalable);
    assert!(res.residual > 1e-3);

    // Verdicts are invariant under global rescaling.
    for (frame, expect) in [(&mercedes, true), (&redundant, true), (&cluster, false)] {
        for factor in [1e-3, 1.0, 1e3] {
            let scaled = frame.scaled(&vec![factor; frame.len()]);
            let res = find_scales(&scaled, TOL).unwrap();
            assert_eq!(res.scalable, expect, "verdict changed at factor {factor}");
        }
    }
    pass(9, "scalability fixtures and scale invariance");
}
