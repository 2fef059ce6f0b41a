use super::wigner::{wigner_grid, Axis};
use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

type C = Complex<f64>;

fn max_abs_diff(a: &ComplexMatrix<f64>, b: &ComplexMatrix<f64>, rows: usize) -> f64 {
    let mut m = 0.0f64;
    for i in 0..rows {
        for j in 0..rows {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix<f64> {
    ComplexMatrix::from_fn(d, d, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_phases(rng: &mut ChaCha8Rng, d: usize) -> SnapPhases<f64> {
    SnapPhases::new((0..d).map(|_| rng.random_range(-PI..PI)).collect()).unwrap()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn zero_displacement_is_identity() {
    let d = build_displacement(0.0, 100).unwrap();
    let id = ComplexMatrix::<f64>::identity(100, 100);
    assert!(max_abs_diff(&d, &id, 100) < 1e-13);
}

#[test]
fn displacement_vacuum_amplitude() {
    let d = build_displacement(0.5, 100).unwrap();
    assert!((d[(0, 0)] - C::new((-0.125f64).exp(), 0.0)).norm() < 1e-12);
    assert!((d[(0, 0)].re - 0.882497).abs() < 1e-6);
    // coherent-state amplitudes e^{-a^2/2} a^n / sqrt(n!)
    for n in 0..12 {
        let expect = (-0.125f64).exp() * 0.5f64.powi(n as i32) / factorial(n).sqrt();
        assert!((d[(n, 0)] - C::new(expect, 0.0)).norm() < 1e-12, "n = {n}");
    }
}

#[test]
fn displacement_inverse() {
    let space = FockSpace::<f64>::new(100).unwrap();
    let prod = space.displacement(1.3) * space.displacement(-1.3);
    let id = ComplexMatrix::<f64>::identity(100, 100);
    assert!(max_abs_diff(&prod, &id, 100) < 1e-10);
}

#[test]
fn displacement_matches_pade_exponential() {
    let space = FockSpace::<f64>::new(30).unwrap();
    for &alpha in &[-1.7, 0.3, 2.0] {
        let expm = (space.generator() * C::new(alpha, 0.0)).exp();
        assert!(max_abs_diff(&space.displacement(alpha), &expm, 30) < 1e-11, "alpha = {alpha}");
    }
}

#[test]
fn complex_constructor_agrees_on_real_axis() {
    let a = build_displacement(0.8, 40).unwrap();
    let b = build_displacement_complex(C::new(0.8, 0.0), 40).unwrap();
    assert!(max_abs_diff(&a, &b, 40) < 1e-12);
}

#[test]
fn displacement_rejects_bad_input() {
    assert!(matches!(build_displacement(f64::NAN, 10), Err(Error::NonFinite(_))));
    assert!(matches!(build_displacement(0.1, 1), Err(Error::DimTooSmall(1))));
    assert!(matches!(check_displacement(7.0, 100, true), Err(Error::UnsafeDisplacement { .. })));
    assert!(check_displacement(7.0, 100, false).is_ok());
    assert_eq!(displacement_bound(100), 6.0);
    assert_eq!(reliable_levels(2.0, 100), 60);
}

#[test]
fn snap_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let zero = build_snap(&SnapPhases::<f64>::zeros(8));
    assert_eq!(zero, ComplexMatrix::identity(8, 8));

    let theta = random_phases(&mut rng, 8);
    let prod = build_snap(&theta) * build_snap(&theta.negated());
    assert!(max_abs_diff(&prod, &ComplexMatrix::identity(8, 8), 8) < 1e-15);

    let parity = build_snap(&SnapPhases::rotation(PI, 8));
    for n in 0..8 {
        let expect = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((parity[(n, n)] - C::new(expect, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn block_special_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = 30;
    let id = build_block(1.1, &SnapPhases::<f64>::zeros(d)).unwrap();
    assert!(max_abs_diff(&id, &ComplexMatrix::identity(d, d), d) < 1e-12);

    let theta = random_phases(&mut rng, d);
    let b0 = build_block(0.0, &theta).unwrap();
    assert!(max_abs_diff(&b0, &build_snap(&theta), d) < 1e-13);

    let b = build_block(0.5, &theta).unwrap();
    let disp = build_displacement(0.5, d).unwrap();
    let explicit = disp.adjoint() * build_snap(&theta) * &disp;
    assert!(max_abs_diff(&b, &explicit, d) < 1e-12);
}

#[test]
fn hs_inner_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let id = ComplexMatrix::<f64>::identity(7, 7);
    assert!((hs_inner(&id, &id).unwrap() - C::new(7.0, 0.0)).norm() < 1e-15);

    let a = random_matrix(&mut rng, 7);
    let b = random_matrix(&mut rng, 7);
    let aa = hs_inner(&a, &a).unwrap();
    assert!(aa.im.abs() < 1e-14 && aa.re > 0.0);
    assert!((aa.re - a.norm_squared()).abs() < 1e-12);

    let direct = (a.adjoint() * &b).trace();
    let ab = hs_inner(&a, &b).unwrap();
    assert!((ab - direct).norm() < 1e-12);
    assert!((ab - hs_inner(&b, &a).unwrap().conj()).norm() < 1e-14);

    let small = ComplexMatrix::<f64>::identity(3, 3);
    assert!(hs_inner(&a, &small).is_err());
}

#[test]
fn trace_norm_values() {
    assert!((trace_norm(&ComplexMatrix::<f64>::identity(6, 6)).unwrap() - 6.0).abs() < 1e-12);
    let diag = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
        C::new(2.0, 0.0),
        C::new(-3.0, 0.0),
        C::new(0.0, 0.0),
    ]));
    assert!((trace_norm(&diag).unwrap() - 5.0).abs() < 1e-12);

    // oracle: square roots of the eigenvalues of a^dagger a
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let a = random_matrix(&mut rng, 9) + ComplexMatrix::identity(9, 9) * C::new(3.0, 0.0);
        let eig = SymmetricEigen::new(a.adjoint() * &a);
        let oracle: f64 = eig.eigenvalues.iter().map(|&e| e.sqrt()).sum();
        let got = trace_norm(&a).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-10);
    }

    let mut bad = ComplexMatrix::<f64>::identity(2, 2);
    bad[(0, 1)] = C::new(f64::NAN, 0.0);
    assert!(trace_norm(&bad).is_err());
}

#[test]
fn apply_sequence_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = 40;
    let psi = fock_state::<f64>(3, d);
    assert_eq!(apply_sequence(&BlockSequence::empty(d), &psi).unwrap(), psi);

    let blocks: Vec<_> = (0..3).map(|_| Block::new(rng.random_range(-1.0..1.0), random_phases(&mut rng, d))).collect();
    let seq = BlockSequence::new(d, blocks).unwrap();
    let one = BlockSequence::new(d, vec![seq.blocks[0].clone()]).unwrap();
    let dense_one = build_block(seq.blocks[0].alpha, &seq.blocks[0].theta).unwrap() * &psi;
    let got = apply_sequence(&one, &psi).unwrap();
    assert!((got - dense_one).norm() < 1e-12);

    let space = FockSpace::new(d).unwrap();
    let dense = space.sequence_unitary(&seq) * &psi;
    assert!((apply_sequence(&seq, &psi).unwrap() - dense).norm() < 1e-12);

    assert!(apply_sequence(&seq, &fock_state::<f64>(0, d + 1)).is_err());
}

#[test]
fn apply_sequence_preserves_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 100;
    let blocks: Vec<_> = (0..5).map(|_| Block::new(rng.random_range(-2.0..2.0), random_phases(&mut rng, d))).collect();
    let seq = BlockSequence::new(d, blocks).unwrap();
    let mut psi = StateVector::<f64>::zeros(d);
    for n in 0..6 {
        psi[n] = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    psi /= C::new(psi.norm(), 0.0);
    let out = apply_sequence(&seq, &psi).unwrap();
    assert!((out.norm() - 1.0).abs() < 1e-9);
}

#[test]
fn frame_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = FockSpace::<f64>::new(17).unwrap();
    let psi = StateVector::from_fn(17, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let back = space.from_frame(&space.to_frame(&psi));
    assert!((back - &psi).norm() < 1e-13);
    // a displacement is diagonal in the frame
    let phi = space.to_frame(&psi);
    let displaced = space.to_frame(&(space.displacement(0.7) * &psi));
    for n in 0..17 {
        let expect = phi[n] * crate::scalar::cis(-0.7 * space.freqs()[n]);
        assert!((displaced[n] - expect).norm() < 1e-12);
    }
}

#[test]
fn unitarity_on_reliable_block() {
    let space = FockSpace::<f64>::new(100).unwrap();
    let id = ComplexMatrix::<f64>::identity(100, 100);
    for &alpha in &[-2.0, -0.9, 0.4, 2.0] {
        let d = space.displacement(alpha);
        assert!(max_abs_diff(&(d.adjoint() * &d), &id, 60) < 1e-10);
    }
}

#[test]
fn parity_flips_displacement() {
    let space = FockSpace::<f64>::new(100).unwrap();
    let parity = build_snap(&SnapPhases::rotation(PI, 100));
    for &alpha in &[-1.5, 0.6, 2.0] {
        let lhs = &parity * space.displacement(alpha) * &parity;
        assert!(max_abs_diff(&lhs, &space.displacement(-alpha), 60) < 1e-9);
    }
}

#[test]
fn phase_absorption() {
    let d = 60;
    let space = FockSpace::<f64>::new(d).unwrap();
    for &(alpha, phi) in &[(0.9, 0.4), (1.6, -2.1), (-0.5, 3.0)] {
        let lhs = build_snap(&SnapPhases::rotation(phi, d))
            * space.displacement(alpha)
            * build_snap(&SnapPhases::rotation(-phi, d));
        let rhs = build_displacement_complex(C::from_polar(alpha, phi), d).unwrap();
        assert!(max_abs_diff(&lhs, &rhs, 30) < 1e-9, "alpha {alpha} phi {phi}");
    }
}

#[test]
fn gate_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = 100;
    let t1 = random_phases(&mut rng, d);
    let t2 = random_phases(&mut rng, d);
    let sum = SnapPhases::new(t1.as_slice().iter().zip(t2.as_slice()).map(|(a, b)| a + b).collect()).unwrap();
    let prod = build_snap(&t2) * build_snap(&t1);
    assert!(max_abs_diff(&prod, &build_snap(&sum), d) < 1e-14);

    let space = FockSpace::<f64>::new(d).unwrap();
    let lhs = space.displacement(0.8) * space.displacement(-1.9);
    assert!(max_abs_diff(&lhs, &space.displacement(-1.1), 60) < 1e-10);
}

#[test]
fn wigner_fock_states() {
    let space = FockSpace::<f64>::new(40).unwrap();
    let axis = Axis::new(-1.0, 1.0);
    let vac = wigner_grid(&space, &fock_state(0, 40), axis, axis, 3).unwrap();
    assert!((vac[(1, 1)] - 1.0 / PI).abs() < 1e-12);
    // off-centre vacuum value e^{-(x^2+p^2)} / pi
    assert!((vac[(2, 0)] - (-2.0f64).exp() / PI).abs() < 1e-12);
    let one = wigner_grid(&space, &fock_state(1, 40), axis, axis, 3).unwrap();
    assert!((one[(1, 1)] + 1.0 / PI).abs() < 1e-12);
}

#[test]
fn wigner_vacuum_normalization() {
    let space = FockSpace::<f64>::new(80).unwrap();
    let res = 201;
    let axis = Axis::new(-5.0, 5.0);
    let w = wigner_grid(&space, &fock_state(0, 80), axis, axis, res).unwrap();
    let h = 10.0 / (res - 1) as f64;
    let weight = |i: usize| if i == 0 || i == res - 1 { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for i in 0..res {
        for j in 0..res {
            total += weight(i) * weight(j) * w[(i, j)];
        }
    }
    assert!((total * h * h - 1.0).abs() < 1e-3);
}

#[test]
fn wigner_rejects_bad_grid() {
    let space = FockSpace::<f64>::new(10).unwrap();
    let psi = fock_state(0, 10);
    assert!(wigner_grid(&space, &psi, Axis::new(0.0, 1.0), Axis::new(0.0, 1.0), 1).is_err());
    assert!(wigner_grid(&space, &psi, Axis::new(1.0, 1.0), Axis::new(0.0, 1.0), 5).is_err());
}

#[test]
fn single_precision_block_tracks_double() {
    let d = 20;
    let theta = SnapPhases::rotation(0.3, d);
    let b64 = build_block(0.7, &theta).unwrap();
    let b32 = build_block(0.7f32, &theta.cast::<f32>()).unwrap();
    for i in 0..d {
        for j in 0..d {
            let diff = C::new(b32[(i, j)].re as f64, b32[(i, j)].im as f64) - b64[(i, j)];
            assert!(diff.norm() < 1e-4);
        }
    }
}
