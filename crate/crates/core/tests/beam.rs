use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::{LN_2, PI};
use tdcis::beam::*;
use tdcis::Error;

fn beam() -> BeamProfile {
    BeamProfile::new(2.5e-4, 0.08, 3.0e12, None).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// ∫ 2πρ S(F(ρ, z)) dρ dz by Gauss-Legendre directly in (ρ, z).
fn direct(s: &dyn Fn(f64) -> f64, b: &BeamProfile) -> f64 {
    let (x, w) = tdcis::quad::gauss_legendre(40);
    let map = |a: f64, c: f64, k: usize| (0.5 * (a + c) + 0.5 * (c - a) * x[k], 0.5 * (c - a) * w[k]);
    let zp = 32;
    let hz = (b.z_max - b.z_min) / zp as f64;
    let mut total = 0.0;
    for pz in 0..zp {
        for kz in 0..x.len() {
            let (z, wz) = map(b.z_min + pz as f64 * hz, b.z_min + (pz + 1) as f64 * hz, kz);
            let rmax = 7.0 * b.w2(z).sqrt();
            let rp = 16;
            let hr = rmax / rp as f64;
            let mut slice = 0.0;
            for pr in 0..rp {
                for kr in 0..x.len() {
                    let (r, wr) = map(pr as f64 * hr, (pr + 1) as f64 * hr, kr);
                    slice += wr * 2.0 * PI * r * s(b.fluence(r, z));
                }
            }
            total += wz * slice;
        }
    }
    total
}

#[test]
fn profile_geometry() {
    let b = beam();
    for z in [-0.2, -0.05, 0.0, 0.03, 0.17] {
        assert!(rel(b.w2(z), b.w0 * b.w0 * (1.0 + (z / b.z0).powi(2))) < 1e-15);
        let f = 0.3 * b.peak_fluence(z);
        let r = b.rho(f, z).unwrap();
        assert!(rel(b.fluence(r, z), f) < 1e-12);
        // ρ|∂ρ/∂F| against a central difference
        let h = 1e-6 * f;
        let d = (b.rho(f + h, z).unwrap() - b.rho(f - h, z).unwrap()) / (2.0 * h);
        assert!(rel(r * d.abs(), b.jacobian_weight(f, z)) < 1e-6);
    }
    assert!(b.rho(2.0 * b.peak_fluence(0.0), 0.0).is_none());
    assert!((b.z_min + 0.24).abs() < 1e-15 && (b.z_max - 0.24).abs() < 1e-15);
    assert!(BeamProfile::new(0.0, 1.0, 1.0, None).is_err());
    assert!(BeamProfile::new(1.0, 1.0, 1.0, Some((1.0, -1.0))).is_err());
}

#[test]
fn peak_fluence_falls_off_axis() {
    let b = beam();
    let zs: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
    assert!(zs.windows(2).all(|w| b.peak_fluence(w[1]) < b.peak_fluence(w[0])));
    assert!((b.peak_fluence(0.1) - b.peak_fluence(-0.1)).abs() < 1e-9 * b.peak_fluence(0.1));
    assert_eq!(b.max_fluence(), b.peak_fluence(0.0));
}

#[test]
fn linear_signal_integrates_to_photon_number() {
    let b = beam();
    let sigma = 7.3e-18;
    let v = volume_signal(&|f: f64| sigma * f, &b, VolumeIntegration::default()).unwrap();
    let expect = sigma * 4.0 * b.n_phot * LN_2 * (b.z_max - b.z_min);
    assert!(rel(v.value, expect) < 1e-3, "{} vs {expect}", v.value);
    assert!(rel(v.value, expect) < 1e-12);
    for z in [-0.2, 0.0, 0.11] {
        let s = slice_signal(&|f: f64| sigma * f, &b, z, 16).unwrap();
        assert!(rel(s, sigma * 4.0 * b.n_phot * LN_2) < 1e-12);
    }
}

#[test]
fn zero_signal() {
    let v = volume_signal(&|_f: f64| 0.0, &beam(), VolumeIntegration::default()).unwrap();
    assert_eq!(v.value, 0.0);
    assert_eq!(v.rel_change(), 0.0);
}

#[test]
fn quadratic_signal_matches_monte_carlo() {
    let b = beam();
    let s = |f: f64| 1e-30 * f * f;
    let v = volume_signal(&s, &b, VolumeIntegration::default()).unwrap();
    // z uniform, ρ uniform on [0, 4 w(z)], weighted by 2πρ
    let mut rng = rand::rngs::StdRng::seed_from_u64(20240611);
    let n = 6_000_000;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        let z = b.z_min + (b.z_max - b.z_min) * rng.gen::<f64>();
        let rmax = 4.0 * b.w2(z).sqrt();
        let vol = rmax * (b.z_max - b.z_min);
        let r = rmax * rng.gen::<f64>();
        let x = 2.0 * PI * r * s(b.fluence(r, z)) * vol;
        sum += x;
        sum2 += x * x;
    }
    let mean = sum / n as f64;
    let err = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!(err < 1e-3 * mean, "Monte Carlo error too large: {}", err / mean);
    assert!(rel(v.value, mean) < 5e-3, "{} vs {mean}", v.value);
    // closed form: π/2 (4 n ln2 / π)² (z0/w0²) [atan(z/z0)]
    let k = 4.0 * b.n_phot * LN_2 / PI;
    let exact = 1e-30 * PI / 2.0 * k * k * b.z0 / (b.w0 * b.w0)
        * ((b.z_max / b.z0).atan() - (b.z_min / b.z0).atan());
    assert!(rel(v.value, exact) < 1e-10, "{} vs {exact}", v.value);
}

#[test]
fn library_monte_carlo_is_consistent() {
    let b = beam();
    let s = |f: f64| 1e-30 * f * f;
    let v = volume_signal(&s, &b, VolumeIntegration::default()).unwrap();
    let mc = monte_carlo_volume(&s, &b, 400_000, 7).unwrap();
    assert!((mc.value - v.value).abs() < 5.0 * mc.std_error, "{mc:?} vs {}", v.value);
    assert_eq!(mc, monte_carlo_volume(&s, &b, 400_000, 7).unwrap());
    assert!(monte_carlo_volume(&s, &b, 1, 7).is_err());
}

#[test]
fn tabulated_signal_parsing_and_domain() {
    let t = TabulatedSignal::parse("# F S\n0 0\n1e10, 2\n2e10 4\n\n4e10 8 # tail\n").unwrap();
    assert_eq!(t.f_max(), 4e10);
    assert!((t.value(1.5e10).unwrap() - 3.0).abs() < 1e-9);
    assert!(matches!(t.value(5e10), Err(Error::Domain(_))));
    let b = beam();
    let r = volume_signal(&t, &b, VolumeIntegration::default());
    assert!(matches!(r, Err(Error::Domain(_))), "peak fluence {:e}", b.max_fluence());
    assert!(matches!(TabulatedSignal::parse("1 2 3\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(TabulatedSignal::parse("1 x\n2 3\n"), Err(Error::Parse { line: 1, .. })));
    assert!(TabulatedSignal::parse("1 2\n").is_err());
}

#[test]
fn tabulated_signal_extends_below_as_power_law() {
    let t = TabulatedSignal::new(vec![1.0, 2.0, 4.0], vec![3.0, 12.0, 48.0]).unwrap();
    assert!(rel(t.value(0.25).unwrap(), 3.0 / 16.0) < 1e-12);
}

#[test]
fn tabulated_quadratic_reproduces_the_closure() {
    let b = beam();
    let fmax = 1.01 * b.max_fluence();
    let f: Vec<f64> = (0..400).map(|k| fmax * 10f64.powf(-8.0 + 8.0 * k as f64 / 399.0)).collect();
    let s: Vec<f64> = f.iter().map(|x| 1e-30 * x * x).collect();
    let t = TabulatedSignal::new(f, s).unwrap();
    let a = volume_signal(&t, &b, VolumeIntegration::default()).unwrap().value;
    let c = volume_signal(&|x: f64| 1e-30 * x * x, &b, VolumeIntegration::default()).unwrap().value;
    assert!(rel(a, c) < 1e-4, "{a} vs {c}");
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let b = beam();
    let s = |f: f64| 1e-20 * f.powf(1.7);
    let run = |n| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| {
            volume_signal(&s, &b, VolumeIntegration::default()).unwrap().value
        })
    };
    assert_eq!(run(1).to_bits(), run(4).to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn change_of_variables_matches_direct_quadrature(
        c1 in 0.0f64..2.0, c2 in 0.0f64..2.0, c3 in 0.0f64..2.0,
        w0 in 1e-4f64..1e-3, z0 in 0.01f64..0.5, zf in 0.5f64..5.0,
    ) {
        let b = BeamProfile::new(w0, z0, 1e12, Some((-zf * z0, 0.7 * zf * z0))).unwrap();
        let u = b.max_fluence();
        let s = move |f: f64| { let x = f / u; c1 * x + c2 * x * x + c3 * x * x * x };
        let v = volume_signal(&s, &b, VolumeIntegration::default()).unwrap();
        let d = direct(&s, &b);
        prop_assert!(rel(v.value, d) < 1e-3, "{} vs {}", v.value, d);
        prop_assert!(v.rel_change() < 1e-6);
    }

    #[test]
    fn order_is_not_diluted(n in 1i32..4, k in 0.1f64..10.0) {
        let b = beam();
        let b2 = BeamProfile { n_phot: k * b.n_phot, ..b };
        let s = move |f: f64| (f * 1e-12).powi(n);
        let a = volume_signal(&s, &b, VolumeIntegration::default()).unwrap().value;
        let c = volume_signal(&s, &b2, VolumeIntegration::default()).unwrap().value;
        prop_assert!(rel(c, a * k.powi(n)) < 1e-12);
    }
}
