use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tdcis::cis::{CisState, Gauge, Symmetry};
use tdcis::potential::AbsorbingPotential;
use tdcis::propagator::*;
use tdcis::system::{System, SystemSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * c(0.5)
}

fn random_vector(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// e^{-iH dt} v through the full eigendecomposition of a Hermitian H.
fn dense_exp_hermitian(h: &DMatrix<Complex64>, v: &[Complex64], dt: f64) -> Vec<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let u = &eig.eigenvectors;
    let coeff = u.adjoint() * nalgebra::DVector::from_column_slice(v);
    let phased = nalgebra::DVector::from_iterator(
        coeff.len(),
        coeff.iter().zip(eig.eigenvalues.iter()).map(|(a, e)| a * Complex64::from_polar(1.0, -e * dt)),
    );
    (u * phased).iter().copied().collect()
}

/// Taylor series with scaling and squaring, independent of any eigensolver.
fn dense_exp_general(h: &DMatrix<Complex64>, v: &[Complex64], dt: f64) -> Vec<Complex64> {
    let s = 8;
    let a = h * (-I * dt / (1 << s) as f64);
    let n = h.nrows();
    let mut e = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..30 {
        term = &term * &a / c(k as f64);
        e += &term;
    }
    for _ in 0..s {
        e = &e * &e;
    }
    (e * nalgebra::DVector::from_column_slice(v)).iter().copied().collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn model(l_max: usize, e_cut: f64) -> System {
    System::build(&SystemSpec::soft_core_model(-1.0, 2.0, 60.0, 600, l_max, e_cut)).unwrap()
}

#[test]
fn rk4_zero_rhs_is_identity() {
    let mut y = random_vector(5, 1);
    let y0 = y.clone();
    rk4_step(&mut y, 0.0, 0.3, |_, _, out| out.iter_mut().for_each(|z| *z = c(0.0)));
    assert_eq!(y, y0);
}

#[test]
fn rk4_scalar_phase_and_richardson_ratio() {
    let eps = 0.7;
    let err = |dt: f64| {
        let mut y = vec![c(1.0)];
        rk4_step(&mut y, 0.0, dt, |_, x, out| out[0] = -I * eps * x[0]);
        (y[0] - Complex64::from_polar(1.0, -eps * dt)).norm()
    };
    assert!(err(0.1) < (0.07f64).powi(5));
    let ratio = err(0.1) / err(0.05);
    assert!((ratio - 32.0).abs() < 2.0, "ratio {ratio}");
}

#[test]
fn lanczos_identity_scaled() {
    let n = 6;
    let gen = DenseGenerator { matrix: DMatrix::identity(n, n) * c(1.7), symmetry: Symmetry::Hermitian };
    let mut psi = random_vector(n, 2);
    let want: Vec<Complex64> = psi.iter().map(|z| z * Complex64::from_polar(1.0, -1.7 * 0.3)).collect();
    let info = lanczos_step(&mut psi, 0.0, 0.3, &gen, 10);
    assert_eq!(info.dim, 1);
    assert!(info.breakdown);
    assert!(max_diff(&psi, &want) < 1e-14);
}

#[test]
fn lanczos_two_level_diagonal() {
    let mut m = DMatrix::zeros(2, 2);
    m[(0, 0)] = c(-0.4);
    m[(1, 1)] = c(1.3);
    let gen = DenseGenerator { matrix: m, symmetry: Symmetry::Hermitian };
    let mut psi = vec![c(0.6), Complex64::new(0.0, 0.8)];
    let dt = 0.9;
    let want = [psi[0] * Complex64::from_polar(1.0, 0.4 * dt), psi[1] * Complex64::from_polar(1.0, -1.3 * dt)];
    lanczos_step(&mut psi, 0.0, dt, &gen, 2);
    assert!(max_diff(&psi, &want) < 1e-14);
}

#[test]
fn lanczos_matches_dense_exponential() {
    let h = random_hermitian(50, 3);
    let v = random_vector(50, 4);
    let want = dense_exp_hermitian(&h, &v, 0.01);
    let mut psi = v.clone();
    lanczos_step(&mut psi, 0.0, 0.01, &DenseGenerator { matrix: h, symmetry: Symmetry::Hermitian }, 12);
    assert!(max_diff(&psi, &want) < 1e-10);
}

#[test]
fn krylov_error_falls_with_dimension() {
    let h = random_hermitian(60, 5);
    let v = random_vector(60, 6);
    let dt = 0.2;
    let want = dense_exp_hermitian(&h, &v, dt);
    let gen = DenseGenerator { matrix: h, symmetry: Symmetry::Hermitian };
    let mut prev = f64::INFINITY;
    for nk in 2..=16 {
        let mut psi = v.clone();
        lanczos_step(&mut psi, 0.0, dt, &gen, nk);
        let e = max_diff(&psi, &want);
        assert!(e < prev || e < 1e-13, "N={nk}: {e} after {prev}");
        prev = e;
    }
    assert!(prev < 1e-12);
}

#[test]
fn non_hermitian_krylov_matches_taylor_oracle() {
    let n = 40;
    let h = random_hermitian(n, 7);
    let mut rng = StdRng::seed_from_u64(8);
    // complex-symmetric: real symmetric part plus a negative imaginary diagonal
    let gamma: Vec<Complex64> = (0..n).map(|_| -I * rng.gen_range(0.0..0.5)).collect();
    let absorb = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(gamma));
    let cs = h.map(|z| c(z.re)) + &absorb;
    let general = h.clone() + &absorb;
    let v = random_vector(n, 9);
    let dt = 0.05;
    for (m, sym) in [(cs, Symmetry::ComplexSymmetric), (general, Symmetry::General)] {
        let want = dense_exp_general(&m, &v, dt);
        let mut psi = v.clone();
        lanczos_step(&mut psi, 0.0, dt, &DenseGenerator { matrix: m, symmetry: sym }, 14);
        assert!(max_diff(&psi, &want) < 1e-10, "{sym:?}: {}", max_diff(&psi, &want));
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        assert!(norm < 1.0);
    }
}

#[test]
fn plan_validation() {
    assert!(PropagationPlan::new(0.0, 1.0, 0.0, Method::Rk4, 0).unwrap_err().is_config());
    assert!(PropagationPlan::new(0.0, 1.0, -0.1, Method::Rk4, 0).unwrap_err().is_config());
    assert!(PropagationPlan::new(0.0, 1.0, 0.1, Method::Lanczos, 1).unwrap_err().is_config());
    assert!(PropagationPlan::new(0.0, f64::INFINITY, 0.1, Method::Rk4, 0).unwrap_err().is_config());
    let p = PropagationPlan::new(0.0, 1.0, 0.3, Method::Lanczos, 2).unwrap();
    assert_eq!(p.steps(), 3);
    assert!((p.signed_dt() * 3.0 - 1.0).abs() < 1e-15);
    let back = PropagationPlan::new(1.0, 0.0, 0.25, Method::Lanczos, 2).unwrap();
    assert_eq!(back.signed_dt(), -0.25);
}

#[test]
fn ground_state_is_stationary_without_field() {
    let sys = model(3, 3.0);
    let pulse = Pulse::new(0.0, 0.5, 50.0, 0.0).unwrap();
    for method in [Method::Rk4, Method::Lanczos] {
        let gen = Driven { h: &sys.velocity, pulse: &pulse };
        let plan = PropagationPlan::new(0.0, 50.0, 0.05, method, 12).unwrap();
        let mut s = CisState::ground(sys.basis.clone());
        let traj = propagate(&mut s, &plan, &gen, &mut []).unwrap();
        for p in &traj.points {
            assert!((p.alpha0.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}

fn weak_pulse() -> Pulse {
    Pulse::new(2e-3, 0.5, 40.0, 0.0).unwrap()
}

#[test]
fn forward_then_backward_recovers_state() {
    let sys = model(3, 3.0);
    let pulse = weak_pulse();
    let gen = Driven { h: &sys.velocity, pulse: &pulse };
    let mut s = CisState::ground(sys.basis.clone());
    let fwd = PropagationPlan::new(-80.0, 80.0, 0.1, Method::Lanczos, 12).unwrap();
    propagate(&mut s, &fwd, &gen, &mut []).unwrap();
    assert!(s.alpha0().norm_sqr() < 1.0 - 1e-6);
    let bwd = PropagationPlan::new(80.0, -80.0, 0.1, Method::Lanczos, 12).unwrap();
    propagate(&mut s, &bwd, &gen, &mut []).unwrap();
    let g = CisState::ground(sys.basis.clone());
    assert!(max_diff(s.data(), g.data()) < 1e-9, "{}", max_diff(s.data(), g.data()));
}

#[test]
fn rk4_and_lanczos_agree_on_weak_pulse() {
    let sys = model(2, 1.5);
    let pulse = weak_pulse();
    let gen = Driven { h: &sys.velocity, pulse: &pulse };
    let run = |method| {
        let mut s = CisState::ground(sys.basis.clone());
        let plan = PropagationPlan::new(-80.0, 80.0, 0.02, method, 12).unwrap();
        propagate(&mut s, &plan, &gen, &mut []).unwrap().points.last().unwrap().channel_populations[0]
    };
    let (a, b) = (run(Method::Rk4), run(Method::Lanczos));
    assert!(a > 1e-7);
    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
}

#[test]
fn norm_is_conserved_without_absorber() {
    let sys = model(2, 1.5);
    let pulse = Pulse::new(0.02, 0.5, 30.0, 0.0).unwrap();
    for gauge in [Gauge::Velocity, Gauge::Length] {
        let gen = Driven { h: sys.hamiltonian(gauge), pulse: &pulse };
        let mut s = CisState::ground(sys.basis.clone());
        let plan = PropagationPlan::new(-100.0, 100.0, 0.02, Method::Lanczos, 10).unwrap();
        assert_eq!(plan.steps(), 10_000);
        let traj = propagate(&mut s, &plan, &gen, &mut []).unwrap();
        let drift = traj.points.iter().map(|p| (p.norm - 1.0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "{gauge:?}: {drift}");
    }
    // RK4 with a step well inside its stability region
    let gen = Driven { h: &sys.velocity, pulse: &pulse };
    let mut s = CisState::ground(sys.basis.clone());
    let plan = PropagationPlan::new(-10.0, 10.0, 0.002, Method::Rk4, 0).unwrap();
    let traj = propagate(&mut s, &plan, &gen, &mut []).unwrap();
    let drift = traj.points.iter().map(|p| (p.norm - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-10, "rk4: {drift}");
}

#[test]
fn field_free_energy_is_constant() {
    let sys = System::build(&tdcis::system::SystemSpec {
        coupling: tdcis::cis::CouplingMode::Interchannel,
        ..SystemSpec::soft_core_model(-3.0, 2.0, 40.0, 400, 2, 2.0)
    })
    .unwrap();
    let pulse = Pulse::new(0.0, 1.0, 10.0, 0.0).unwrap();
    let gen = Driven { h: &sys.velocity, pulse: &pulse };
    let data = random_vector(sys.basis.dim(), 11);
    let mut s = CisState::from_vec(sys.basis.clone(), data).unwrap();
    let e0 = sys.velocity.field_free_energy(s.data());
    for _ in 0..1000 {
        lanczos_step(s.data_mut(), 0.0, 0.05, &gen, 12);
    }
    let e1 = sys.velocity.field_free_energy(s.data());
    assert!((e1 - e0).abs() < 1e-10, "{e0} -> {e1}");
}

#[test]
fn degenerate_absorber_keeps_norm() {
    let sys = model(2, 1.5);
    let cap = AbsorbingPotential::new(60.0, 0.01).unwrap();
    let h = sys.length.with_cap(cap);
    let dense = h.dense(0.1);
    assert!((&dense - dense.adjoint()).norm() < 1e-13);
    let pulse = Pulse::new(0.02, 0.5, 30.0, 0.0).unwrap();
    let gen = Driven { h: &h, pulse: &pulse };
    let mut s = CisState::ground(sys.basis.clone());
    let plan = PropagationPlan::new(-60.0, 60.0, 0.1, Method::Lanczos, 12).unwrap();
    let traj = propagate(&mut s, &plan, &gen, &mut []).unwrap();
    assert!((traj.points.last().unwrap().norm - 1.0).abs() < 1e-10);
}

#[test]
fn absorber_drains_norm_monotonically() {
    let sys = model(3, 3.0);
    let cap = AbsorbingPotential::new(30.0, 2e-3).unwrap();
    let pulse = Pulse::new(0.05, 0.8, 20.0, 0.0).unwrap();
    for gauge in [Gauge::Length, Gauge::Velocity] {
        let h = sys.hamiltonian(gauge).with_cap(cap);
        let gen = Driven { h: &h, pulse: &pulse };
        let mut s = CisState::ground(sys.basis.clone());
        let plan = PropagationPlan::new(-40.0, 200.0, 0.1, Method::Lanczos, 14).unwrap();
        let traj = propagate(&mut s, &plan, &gen, &mut []).unwrap();
        let end = traj.points.last().unwrap().norm;
        assert!(end < 1.0 - 1e-4, "{gauge:?}: final norm {end}");
        // after the pulse the norm can only fall
        let after: Vec<f64> = traj.points.iter().filter(|p| p.t > 40.0).map(|p| p.norm).collect();
        assert!(after.windows(2).all(|w| w[1] <= w[0] + 1e-13), "{gauge:?}");
    }
}

#[test]
fn gauges_agree_on_one_photon_ionization() {
    let sys = model(3, 6.0);
    let pulse = Pulse::new(1e-3, 0.5, 60.0, 0.0).unwrap();
    let run = |gauge| {
        let gen = Driven { h: sys.hamiltonian(gauge), pulse: &pulse };
        let mut s = CisState::ground(sys.basis.clone());
        let plan = PropagationPlan::new(-180.0, 180.0, 0.1, Method::Lanczos, 12).unwrap();
        propagate(&mut s, &plan, &gen, &mut []).unwrap();
        1.0 - s.alpha0().norm_sqr()
    };
    let (v, l) = (run(Gauge::Velocity), run(Gauge::Length));
    assert!(v > 1e-8);
    assert!((v / l - 1.0).abs() < 0.01, "velocity {v} length {l}");
}

#[test]
fn weak_field_depopulation_is_linear_in_intensity() {
    let sys = model(3, 3.0);
    let depop = |f0: f64| {
        let pulse = Pulse::new(f0, 0.5, 40.0, 0.0).unwrap();
        let gen = Driven { h: &sys.velocity, pulse: &pulse };
        let mut s = CisState::ground(sys.basis.clone());
        let plan = PropagationPlan::new(-120.0, 120.0, 0.1, Method::Lanczos, 12).unwrap();
        propagate(&mut s, &plan, &gen, &mut []).unwrap();
        1.0 - s.alpha0().norm_sqr()
    };
    let fs = [1e-4, 2e-4, 4e-4, 8e-4];
    let xs: Vec<f64> = fs.iter().map(|f: &f64| (f * f).ln()).collect();
    let ys: Vec<f64> = fs.iter().map(|&f| depop(f).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 1.0).abs() < 0.02, "slope {slope}");
}

struct Recorder {
    at: Vec<f64>,
    seen: Vec<(f64, f64)>,
}

impl Hook for Recorder {
    fn times(&self) -> Vec<f64> {
        self.at.clone()
    }
    fn fire(&mut self, t: f64, state: &mut CisState) -> tdcis::Result<()> {
        self.seen.push((t, state.norm_sqr()));
        Ok(())
    }
}

#[test]
fn hooks_fire_on_nearest_step() {
    let sys = model(1, 1.0);
    let pulse = weak_pulse();
    let gen = Driven { h: &sys.velocity, pulse: &pulse };
    let mut rec = Recorder { at: vec![0.26, -5.0, 0.74], seen: vec![] };
    let plan = PropagationPlan::new(0.0, 1.0, 0.1, Method::Rk4, 0).unwrap();
    let mut s = CisState::ground(sys.basis.clone());
    let traj = propagate(&mut s, &plan, &gen, &mut [&mut rec]).unwrap();
    let times: Vec<f64> = rec.seen.iter().map(|x| x.0).collect();
    assert_eq!(times.len(), 3);
    assert!((times[0] - 0.0).abs() < 1e-12);
    assert!((times[1] - 0.3).abs() < 1e-12);
    assert!((times[2] - 0.7).abs() < 1e-12);
    assert_eq!(traj.hook_times.len(), 3);
    assert_eq!(traj.points.len(), 11);
}

#[test]
fn non_finite_state_reports_step() {
    let sys = model(1, 0.5);
    let mut big = DMatrix::identity(sys.basis.dim(), sys.basis.dim()) * c(0.1);
    big[(0, 0)] = c(f64::NAN);
    let gen = DenseGenerator { matrix: big, symmetry: Symmetry::General };
    let mut s = CisState::ground(sys.basis.clone());
    let plan = PropagationPlan::new(0.0, 1.0, 0.1, Method::Rk4, 0).unwrap();
    match propagate(&mut s, &plan, &gen, &mut []) {
        Err(tdcis::Error::NonFinite { step }) => assert_eq!(step, 0),
        other => panic!("expected NaN abort, got {other:?}"),
    }
}

#[test]
fn pulse_shape_and_lab_units() {
    let p = Pulse::new(0.05, 0.057, 300.0, 0.0).unwrap();
    for &t in &[-400.0, -20.0, 0.0, 150.0, 333.0] {
        let want = 0.05 * (-2.0 * std::f64::consts::LN_2 * t * t / 90000.0).exp() * (0.057 * t).cos();
        assert!((p.field(t) - want).abs() < 1e-15);
    }
    // intensity FWHM: the field envelope is F0/√2 at ±τ/2
    assert!((p.envelope(150.0) - 0.05 / 2f64.sqrt()).abs() < 1e-15);
    let lab = Pulse::from_lab(1e14, 27.211386245988, 1.0, 0.0).unwrap();
    assert!((lab.omega - 1.0).abs() < 1e-12);
    assert!((lab.peak_intensity_wcm2() / 1e14 - 1.0).abs() < 1e-12);
    assert!((lab.tau - 41.341373335).abs() < 1e-6);
    assert!(Pulse::new(-1.0, 1.0, 1.0, 0.0).unwrap_err().is_config());
    assert!(Pulse::new(1.0, 0.0, 1.0, 0.0).unwrap_err().is_config());
    assert!(Pulse::new(1.0, 1.0, 0.0, 0.0).unwrap_err().is_config());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn vector_potential_integrates_the_field(
        f0 in 1e-3f64..0.1, omega in 0.02f64..2.0, tau in 20.0f64..400.0, phase in 0.0f64..6.3,
        x in -2.0f64..2.0, span in 0.01f64..3.0,
    ) {
        let p = Pulse::new(f0, omega, tau, phase).unwrap();
        let (t1, t2) = (x * tau, x * tau + span * tau);
        let integral = tdcis::quad::integrate_adaptive(t1, t2, 1e-13, |t| p.field(t));
        let da = p.vector_potential(t2) - p.vector_potential(t1);
        prop_assert!((da + integral).abs() < 1e-10, "A difference {} vs -∫F {}", da, -integral);
        prop_assert_eq!(p.vector_potential(-7.0 * tau), 0.0);
    }

    #[test]
    fn hermitian_steps_are_unitary(seed in 0u64..500, dt in 0.001f64..0.5, nk in 2usize..20) {
        let h = random_hermitian(24, seed);
        let mut v = random_vector(24, seed + 1);
        lanczos_step(&mut v, 0.0, dt, &DenseGenerator { matrix: h, symmetry: Symmetry::Hermitian }, nk);
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
    }
}
