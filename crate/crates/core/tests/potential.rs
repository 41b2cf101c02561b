use proptest::prelude::*;
use tdcis::grid::{build_grid, solve_orbitals, Mapping, RadialGrid};
use tdcis::potential::*;
use tdcis::tridiag::Selection;
use tdcis::units::HARTREE_EV;

/// Numerov integration of the zero-energy radial equation; the number of
/// nodes equals the number of bound states of angular momentum `l`.
fn shooting_bound_states(depth: f64, width: f64, l: usize) -> usize {
    let h: f64 = 1e-3;
    let n = 30_000;
    let ll = (l * (l + 1)) as f64;
    let g = |r: f64| ll / (r * r) + 2.0 * soft_core_value(depth, width, r);
    let mut u_prev = h.powi(l as i32 + 1);
    let mut u = (2.0 * h).powi(l as i32 + 1);
    let mut nodes = 0;
    for k in 2..n {
        let (r0, r1, r2) = ((k - 1) as f64 * h, k as f64 * h, (k + 1) as f64 * h);
        let (g0, g1, g2) = (g(r0), g(r1), g(r2));
        let c = h * h / 12.0;
        let next = (2.0 * u * (1.0 + 5.0 * c * g1) - u_prev * (1.0 - c * g0)) / (1.0 - c * g2);
        if next * u < 0.0 {
            nodes += 1;
        }
        u_prev = u;
        u = next;
    }
    nodes
}

fn grid_bound_states(g: &RadialGrid, v: &RadialPotential, l: usize) -> usize {
    g.radial_hamiltonian(v.values(), l).count_below(0.0)
}

#[test]
fn soft_core_bound_states_match_shooting() {
    let g = build_grid(80.0, 3200, Mapping::Uniform).unwrap();
    let v = soft_core(&g, -5.0, 2.0).unwrap();
    let mut total = 0;
    for l in 0..5 {
        let expected = shooting_bound_states(-5.0, 2.0, l);
        assert_eq!(grid_bound_states(&g, &v, l), expected, "l = {l}");
        total += expected;
    }
    assert!(total >= 4);
}

#[test]
fn soft_core_model_wells() {
    let g = build_grid(60.0, 1200, Mapping::Uniform).unwrap();
    let v = soft_core(&g, -1.0, 2.0).unwrap();
    assert_eq!(grid_bound_states(&g, &v, 0), 1);
    assert_eq!(grid_bound_states(&g, &v, 1), 0);
    let e = g.radial_eigenpairs(v.values(), 0, Selection::Lowest(1)).unwrap()[0].0;
    assert!((e + 0.1962).abs() < 1e-3, "ground level {e}");
}

#[test]
fn hfs_helium() {
    let g = build_grid(60.0, 3000, Mapping::SqrtMapped).unwrap();
    let v = hfs_scf(&g, 2.0, 2, 0.3, 1e-9).unwrap();
    assert_eq!(v.kind, PotentialKind::Hfs);
    let e = g.radial_eigenpairs(v.values(), 0, Selection::Lowest(1)).unwrap()[0].0;
    assert!(e < 0.0);
    assert!((e / -0.918 - 1.0).abs() < 0.15, "1s at {e}");
}

#[test]
fn hfs_argon_outer_shell() {
    let g = build_grid(200.0, 4000, Mapping::SqrtMapped).unwrap();
    let v = hfs_scf(&g, 18.0, 18, 0.3, 1e-8).unwrap();
    let (occ, _) = solve_orbitals(&g, &v, 0, -1.0).unwrap();
    let homo = occ.iter().map(|o| o.energy).fold(f64::NEG_INFINITY, f64::max);
    let top = occ.iter().find(|o| o.energy == homo).unwrap();
    assert_eq!(top.label, "3p");
    let ip = -homo * HARTREE_EV;
    assert!((ip / 15.8 - 1.0).abs() < 0.10, "3p binding {ip} eV");
}

#[test]
fn hfs_tail_and_origin() {
    for (z, n) in [(2.0, 2usize), (4.0, 4), (10.0, 10), (11.0, 10)] {
        let g = build_grid(100.0, 3000, Mapping::SqrtMapped).unwrap();
        let v = hfs_scf(&g, z, n, 0.3, 1e-8).unwrap();
        let vals = v.values();
        let r = g.r();
        let ratio = vals[0] / (-z / r[0]);
        assert!((0.99..=1.01).contains(&ratio), "Z={z}: inner ratio {ratio}");
        let tail = -(v.z_eff() + 1.0);
        // beyond the last switch the potential is exactly the tail
        let last_inner = (0..r.len()).rev().find(|&k| vals[k] != tail / r[k]).unwrap();
        assert!(last_inner + 1 < r.len());
        assert!(r[last_inner] < 30.0, "Z={z}: crossover at {}", r[last_inner]);
        for k in last_inner + 1..r.len() {
            assert_eq!(vals[k], tail / r[k]);
        }
        if n as f64 == z {
            let k = r.len() - 1;
            assert!((vals[k] * r[k] + 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn latter_switch_is_continuous() {
    let g = build_grid(100.0, 20000, Mapping::SqrtMapped).unwrap();
    let (v, density) = hfs_scf_with_density(&g, 10.0, 10, 0.3, 1e-8).unwrap();
    let raw = hfs_untailed(&g, 10.0, &density);
    let vals = v.values();
    let r = g.r();
    let tail: Vec<f64> = r.iter().map(|x| -(v.z_eff() + 1.0) / x).collect();
    let mut switches = 0;
    for k in 1..r.len() {
        let d0 = raw[k - 1] - tail[k - 1];
        let d1 = raw[k] - tail[k];
        if d0.signum() != d1.signum() {
            switches += 1;
            // both branches cross inside [r_{k-1}, r_k]; locate the crossing
            // on their linear interpolants and compare the branch values there
            let s = d0 / (d0 - d1);
            let left = raw[k - 1] + s * (raw[k] - raw[k - 1]);
            let right = tail[k - 1] + s * (tail[k] - tail[k - 1]);
            assert!((left - right).abs() < 1e-8, "crossing near r={}", r[k]);
            // and the assembled potential has no jump beyond the branch variation
            let jump = (vals[k] - vals[k - 1]).abs();
            let var = (raw[k] - raw[k - 1]).abs().max((tail[k] - tail[k - 1]).abs());
            assert!(jump <= var + 1e-12, "switch at r={}: jump {jump} vs {var}", r[k]);
        }
    }
    assert!(switches >= 1);
    for k in 0..r.len() {
        assert_eq!(vals[k], raw[k].min(tail[k]));
    }
}

#[test]
fn hfs_converged_density_is_a_fixed_point() {
    let g = build_grid(60.0, 2000, Mapping::SqrtMapped).unwrap();
    let tol = 1e-9;
    let (v, density) = hfs_scf_with_density(&g, 10.0, 10, 0.3, tol).unwrap();
    let step = hfs_iterate(&g, 10.0, 10, &density).unwrap();
    assert_eq!(step.potential, v.values());
    let mixed: Vec<f64> = density.iter().zip(&step.density).map(|(a, b)| 0.7 * a + 0.3 * b).collect();
    let again = hfs_iterate(&g, 10.0, 10, &mixed).unwrap();
    for (a, b) in again.energies.iter().zip(&step.energies) {
        assert!((a - b).abs() < tol, "energy moved by {}", (a - b).abs());
    }
    let charge = g.dot(&density, &vec![1.0; density.len()]);
    assert!((charge - 10.0).abs() < 1e-8);
}

#[test]
fn hfs_rejects_bad_input() {
    let g = build_grid(30.0, 300, Mapping::SqrtMapped).unwrap();
    assert!(hfs_scf(&g, 3.0, 3, 0.3, 1e-8).unwrap_err().is_config());
    assert!(hfs_scf(&g, 2.0, 2, 0.0, 1e-8).unwrap_err().is_config());
    assert!(hfs_scf(&g, 2.0, 2, 1.5, 1e-8).unwrap_err().is_config());
}

#[test]
fn hfs_non_convergence_carries_history() {
    let g = build_grid(30.0, 600, Mapping::SqrtMapped).unwrap();
    match hfs_scf(&g, 10.0, 10, 0.01, 1e-15) {
        Err(tdcis::Error::ScfConvergence { residuals }) => assert_eq!(residuals.len(), HFS_MAX_ITER),
        other => panic!("expected SCF failure, got {other:?}"),
    }
}

#[test]
fn cap_examples() {
    let cap = AbsorbingPotential::new(40.0, 0.01).unwrap();
    assert_eq!(cap_value(&cap, 40.0).norm(), 0.0);
    assert!((cap_value(&cap, 41.0).im + 0.01).abs() < 1e-15);
    let off = AbsorbingPotential::new(40.0, 0.0).unwrap();
    assert!((0..100).all(|k| cap_value(&off, k as f64).norm() == 0.0));
    assert!(AbsorbingPotential::new(-1.0, 0.1).unwrap_err().is_config());
    assert!(AbsorbingPotential::new(1.0, -0.1).unwrap_err().is_config());
}

#[test]
fn potential_file_round_trip_is_exact() {
    let g = build_grid(50.0, 500, Mapping::SqrtMapped).unwrap();
    let v = hfs_scf(&g, 4.0, 4, 0.3, 1e-8).unwrap();
    let (r, back) = read_potential(&write_potential(&g, &v)).unwrap();
    assert_eq!(r, g.r());
    assert_eq!(back.values(), v.values());
    assert_eq!((back.z, back.n_elec), (4.0, 4));
    let text2 = write_potential(&g, &back);
    assert_eq!(read_potential(&text2).unwrap().1, back);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cap_is_zero_inside_and_absorbing_outside(r_cap in 0.0f64..100.0, eta in 0.0f64..1.0, r in 0.0f64..200.0) {
        let cap = AbsorbingPotential::new(r_cap, eta).unwrap();
        let v = cap_value(&cap, r);
        prop_assert_eq!(v.re, 0.0);
        if r <= r_cap {
            prop_assert_eq!(v.im, 0.0);
        } else {
            prop_assert!(v.im <= 0.0);
            prop_assert!((v.im + eta * (r - r_cap).powi(2)).abs() <= 1e-12 * (1.0 + v.im.abs()));
        }
    }

    #[test]
    fn soft_core_is_negative_and_monotone(depth in -10.0f64..-0.01, width in 0.1f64..10.0, r in 0.0f64..50.0) {
        let a = soft_core_value(depth, width, r);
        let b = soft_core_value(depth, width, r + 0.1);
        prop_assert!(a <= 0.0 && a >= depth);
        prop_assert!(b >= a);
    }
}
