use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use tdcis::cis::*;
use tdcis::grid::{build_grid, solve_orbitals, Mapping, Orbital};
use tdcis::potential::soft_core;
use tdcis::system::{PotentialSpec, System, SystemSpec};

fn hfs_spec(z: f64, n_elec: usize, coupling: CouplingMode, msel: MSelection) -> SystemSpec {
    SystemSpec {
        r_max: 30.0,
        n_points: 300,
        mapping: Mapping::SqrtMapped,
        potential: PotentialSpec::Hfs { z, n_elec, mixing: 0.3, tol: 1e-10 },
        l_max: 2,
        e_cut: 2.0,
        active_shells: Vec::new(),
        m_selection: msel,
        coupling,
        l_max_multipole: None,
    }
}

fn beryllium(coupling: CouplingMode) -> System {
    System::build(&hfs_spec(4.0, 4, coupling, MSelection::Linear)).unwrap()
}

fn random_state(basis: &Arc<CisBasis>, seed: u64) -> CisState {
    let mut rng = StdRng::seed_from_u64(seed);
    let data: Vec<Complex64> =
        (0..basis.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut s = CisState::from_vec(basis.clone(), data).unwrap();
    let n = s.norm_sqr().sqrt();
    for z in s.data_mut() {
        *z /= n;
    }
    s
}

fn small_orbitals() -> (tdcis::grid::RadialGrid, Vec<Orbital>) {
    let g = build_grid(30.0, 200, Mapping::SqrtMapped).unwrap();
    let v = soft_core(&g, -5.0, 2.0).unwrap();
    let (occ, virt) = solve_orbitals(&g, &v, 2, 1.0).unwrap();
    let mut all = vec![occ[0].clone()];
    for l in 0..=2 {
        for m in -(l as i32)..=(l as i32) {
            all.extend(virt.orbitals(l, m).into_iter().take(3));
        }
    }
    (g, all)
}

fn oref(o: &Orbital) -> OrbitalRef<'_> {
    OrbitalRef { radial: &o.radial, l: o.l, m: o.m }
}

#[test]
fn direct_element_matches_double_quadrature() {
    let g = build_grid(20.0, 200, Mapping::Uniform).unwrap();
    let v = soft_core(&g, -5.0, 2.0).unwrap();
    let s = g.radial_eigenpairs(v.values(), 0, tdcis::tridiag::Selection::Lowest(2)).unwrap();
    let (u1, u2) = (&s[0].1, &s[1].1);
    let r = g.r();
    let w = g.weights();
    let mut brute = 0.0;
    for i in 0..r.len() {
        for j in 0..r.len() {
            brute += w[i] * w[j] * u1[i] * u1[i] * u2[j] * u2[j] / r[i].max(r[j]);
        }
    }
    let o1 = OrbitalRef { radial: u1, l: 0, m: 0 };
    let o2 = OrbitalRef { radial: u2, l: 0, m: 0 };
    let v = coulomb_element(&g, o1, o2, o1, o2);
    assert!((v - brute).abs() < 1e-8, "{v} vs {brute}");
    assert!(v > 0.0);
}

#[test]
fn exchange_element_matches_double_quadrature() {
    let g = build_grid(20.0, 160, Mapping::SqrtMapped).unwrap();
    let v = soft_core(&g, -5.0, 2.0).unwrap();
    let s = g.radial_eigenpairs(v.values(), 0, tdcis::tridiag::Selection::Lowest(1)).unwrap();
    let p = g.radial_eigenpairs(v.values(), 1, tdcis::tridiag::Selection::Lowest(1)).unwrap();
    let (us, up) = (&s[0].1, &p[0].1);
    let r = g.r();
    let w = g.weights();
    // ⟨s p|p s⟩ for m = 0 uses only k = 1 with (c^1(1,0;0,0))² = 1/3
    let mut brute = 0.0;
    for i in 0..r.len() {
        for j in 0..r.len() {
            let (lo, hi) = (r[i].min(r[j]), r[i].max(r[j]));
            brute += w[i] * w[j] * us[i] * up[i] * up[j] * us[j] * lo / (hi * hi);
        }
    }
    brute /= 3.0;
    let os = OrbitalRef { radial: us, l: 0, m: 0 };
    let op = OrbitalRef { radial: up, l: 1, m: 0 };
    let v = coulomb_element(&g, os, op, op, os);
    assert!((v - brute).abs() < 1e-10, "{v} vs {brute}");
}

#[test]
fn raw_elements_have_pair_symmetry() {
    let (g, orbs) = small_orbitals();
    let mut rng = StdRng::seed_from_u64(7);
    let mut nonzero = 0;
    for _ in 0..300 {
        let pick: Vec<&Orbital> = (0..4).map(|_| &orbs[rng.gen_range(0..orbs.len())]).collect();
        let (p, q, r, s) = (pick[0], pick[1], pick[2], pick[3]);
        let a = coulomb_element(&g, oref(p), oref(q), oref(r), oref(s));
        let b = coulomb_element(&g, oref(q), oref(p), oref(s), oref(r));
        // swapping both electron labels leaves the integrand unchanged
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        assert!(a.is_finite());
        if a.abs() > 1e-8 {
            nonzero += 1;
        }
    }
    assert!(nonzero > 10);
}

#[test]
fn coupling_modes_filter_blocks() {
    let inter = beryllium(CouplingMode::Interchannel);
    let intra = beryllium(CouplingMode::Intrachannel);
    let mf = beryllium(CouplingMode::MeanFieldOnly);
    let blocks = inter.basis.blocks();
    let cross = |t: &CoulombTable| t.blocks.iter().filter(|b| blocks[b.row].channel != blocks[b.col].channel).count();
    assert!(cross(inter.velocity.coulomb()) > 0);
    assert_eq!(cross(intra.velocity.coulomb()), 0);
    assert!(!intra.velocity.coulomb().is_empty());
    assert!(mf.velocity.coulomb().is_empty());
    for b in &inter.velocity.coulomb().blocks {
        assert!(b.matrix.iter().all(|x| x.is_finite()));
    }
    // intrachannel blocks equal the diagonal-channel blocks of interchannel
    for b in &intra.velocity.coulomb().blocks {
        let twin = inter.velocity.coulomb().blocks.iter().find(|c| c.row == b.row && c.col == b.col).unwrap();
        assert_eq!(twin.matrix, b.matrix);
    }
}

#[test]
fn table_entries_match_raw_elements() {
    let sys = beryllium(CouplingMode::Interchannel);
    let basis = &sys.basis;
    let g = basis.grid();
    for cb in sys.velocity.coulomb().blocks.iter().step_by(3) {
        let (ba, bb) = (basis.blocks()[cb.row], basis.blocks()[cb.col]);
        let (hi, hj) = (&basis.channels()[ba.channel], &basis.channels()[bb.channel]);
        let oi = OrbitalRef { radial: basis.hole_radial(ba.channel), l: hi.l, m: hi.m };
        let oj = OrbitalRef { radial: basis.hole_radial(bb.channel), l: hj.l, m: hj.m };
        let va = basis.virtuals().orbitals(ba.l, ba.m);
        let vb = basis.virtuals().orbitals(bb.l, bb.m);
        for (a, b) in [(0, 0), (1, 2), (va.len() - 1, vb.len() - 1)] {
            let (oa, ob) = (oref(&va[a]), oref(&vb[b]));
            let expected = 2.0 * coulomb_element(g, oa, oj, oi, ob) - coulomb_element(g, oa, oj, ob, oi);
            let got = cb.matrix[(a, b)];
            assert!((got - expected).abs() < 1e-12, "block ({},{}) [{a},{b}]: {got} vs {expected}", cb.row, cb.col);
        }
    }
}

#[test]
fn multipole_truncation_below_minimum_is_rejected() {
    let mut spec = hfs_spec(10.0, 10, CouplingMode::Interchannel, MSelection::Linear);
    spec.l_max_multipole = Some(1);
    assert!(System::build(&spec).unwrap_err().is_config());
    spec.l_max_multipole = Some(2);
    assert!(System::build(&spec).is_ok());
}

#[test]
fn dipole_selection_rules_and_hermiticity() {
    let (g, orbs) = small_orbitals();
    for p in &orbs {
        for q in &orbs {
            for gauge in [Gauge::Velocity, Gauge::Length] {
                let d = orbital_element(gauge, &g, p, q);
                let back = orbital_element(gauge, &g, q, p);
                assert!((d - back.conj()).norm() < 1e-14);
                if p.l == q.l || p.m != q.m || p.l.abs_diff(q.l) != 1 {
                    assert_eq!(d.norm(), 0.0);
                }
                match gauge {
                    Gauge::Velocity => assert_eq!(d.re, 0.0),
                    Gauge::Length => assert_eq!(d.im, 0.0),
                }
            }
        }
    }
}

#[test]
fn hamiltonian_is_hermitian_without_absorber() {
    let sys = beryllium(CouplingMode::Interchannel);
    for gauge in [Gauge::Velocity, Gauge::Length] {
        let h = sys.hamiltonian(gauge).dense(0.37);
        let err = (&h - h.adjoint()).norm() / h.norm();
        assert!(err < 1e-13, "{gauge:?}: {err}");
        assert_eq!(sys.hamiltonian(gauge).symmetry(), Symmetry::Hermitian);
    }
    let cap = tdcis::potential::AbsorbingPotential::new(20.0, 0.01).unwrap();
    let hl = sys.length.with_cap(cap).dense(0.37);
    assert!((&hl - hl.transpose()).norm() / hl.norm() < 1e-13);
    assert_eq!(sys.length.with_cap(cap).symmetry(), Symmetry::ComplexSymmetric);
    assert_eq!(sys.velocity.with_cap(cap).symmetry(), Symmetry::General);
}

#[test]
fn rhs_diagonal_limit() {
    let sys = beryllium(CouplingMode::MeanFieldOnly);
    let basis = &sys.basis;
    let b = basis.blocks()[2];
    let idx = b.offset + 1;
    let mut s = CisState::zeros(basis.clone());
    s.data_mut()[idx] = Complex64::new(1.0, 0.0);
    let d = sys.velocity.eom_rhs(&s, 0.0).unwrap();
    let e = basis.virtuals().block(b.l).energies[1] - basis.channels()[b.channel].energy;
    for (k, z) in d.data().iter().enumerate() {
        if k == idx {
            assert!((z - Complex64::new(0.0, -e)).norm() < 1e-14);
        } else {
            assert_eq!(z.norm(), 0.0);
        }
    }
}

#[test]
fn rhs_first_order_excitation() {
    let sys = beryllium(CouplingMode::Interchannel);
    let basis = &sys.basis;
    let a_t = 0.02;
    let d = sys.velocity.eom_rhs(&CisState::ground(basis.clone()), a_t).unwrap();
    assert_eq!(d.alpha0().norm(), 0.0);
    for b in basis.blocks() {
        let ch = &basis.channels()[b.channel];
        let hole = &basis.occupied()[ch.orbital];
        for (k, a) in basis.virtuals().orbitals(b.l, b.m).iter().enumerate() {
            let p_ai = orbital_element(Gauge::Velocity, basis.grid(), a, hole);
            let expected = Complex64::new(0.0, -1.0) * std::f64::consts::SQRT_2 * a_t * p_ai;
            assert!((d.data()[b.offset + k] - expected).norm() < 1e-14);
        }
    }
}

#[test]
fn rhs_preserves_norm() {
    for coupling in [CouplingMode::Interchannel, CouplingMode::Intrachannel] {
        let sys = beryllium(coupling);
        for (seed, gauge) in [(1, Gauge::Velocity), (2, Gauge::Length)] {
            let s = random_state(&sys.basis, seed);
            let d = sys.hamiltonian(gauge).eom_rhs(&s, 0.11).unwrap();
            let rate: f64 = s.data().iter().zip(d.data()).map(|(a, b)| (a.conj() * b).re).sum();
            assert!(rate.abs() < 1e-12, "{coupling:?} {gauge:?}: {rate}");
        }
    }
}

#[test]
fn rhs_rejects_foreign_state() {
    let a = beryllium(CouplingMode::MeanFieldOnly);
    let b = beryllium(CouplingMode::MeanFieldOnly);
    let s = CisState::ground(b.basis.clone());
    assert!(matches!(a.velocity.eom_rhs(&s, 0.0), Err(tdcis::Error::Contract(_))));
}

#[test]
fn mode_nesting() {
    let sys = beryllium(CouplingMode::Interchannel);
    let dip = Arc::new(build_dipole_table(&sys.basis, Gauge::Velocity));
    let h_inter =
        CisHamiltonian::from_shared(sys.basis.clone(), dip.clone(), Arc::new(CoulombTable::empty(CouplingMode::Interchannel)));
    let h_intra =
        CisHamiltonian::from_shared(sys.basis.clone(), dip, Arc::new(CoulombTable::empty(CouplingMode::Intrachannel)));
    let s = random_state(&sys.basis, 3);
    assert_eq!(h_inter.eom_rhs(&s, 0.3).unwrap().data(), h_intra.eom_rhs(&s, 0.3).unwrap().data());

    let mut spec = hfs_spec(4.0, 4, CouplingMode::Interchannel, MSelection::Linear);
    spec.active_shells = vec!["2s".into()];
    let one_inter = System::build(&spec).unwrap();
    spec.coupling = CouplingMode::Intrachannel;
    let one_intra = System::build(&spec).unwrap();
    assert_eq!(one_inter.basis.channels().len(), 1);
    let s1 = random_state(&one_inter.basis, 4);
    let s2 = CisState::from_vec(one_intra.basis.clone(), s1.data().to_vec()).unwrap();
    assert_eq!(
        one_inter.velocity.eom_rhs(&s1, 0.2).unwrap().data(),
        one_intra.velocity.eom_rhs(&s2, 0.2).unwrap().data()
    );
}

#[test]
fn unknown_active_shell_is_config_error() {
    let mut spec = hfs_spec(4.0, 4, CouplingMode::Interchannel, MSelection::Linear);
    spec.active_shells = vec!["3d".into()];
    assert!(System::build(&spec).unwrap_err().is_config());
}

#[test]
fn channel_wavefunction_reproduces_basis() {
    let sys = beryllium(CouplingMode::MeanFieldOnly);
    let basis = &sys.basis;
    let zero = CisState::zeros(basis.clone());
    for c in 0..basis.channels().len() {
        let w = channel_wavefunction(&zero, c);
        assert!(w.iter().all(|pw| pw.radial.iter().all(|z| z.norm() == 0.0)));
    }
    let b = basis.blocks()[1];
    let mut s = CisState::zeros(basis.clone());
    s.data_mut()[b.offset + 2] = Complex64::new(1.0, 0.0);
    let waves = channel_wavefunction(&s, b.channel);
    let pw = waves.iter().find(|pw| pw.l == b.l && pw.m == b.m).unwrap();
    let u = basis.virtuals().block(b.l).radial.column(2);
    for (z, x) in pw.radial.iter().zip(u.iter()) {
        assert_eq!(z.re, *x);
        assert_eq!(z.im, 0.0);
    }
    let r = random_state(basis, 9);
    for c in 0..basis.channels().len() {
        let n = wave_norm_sqr(basis.grid(), &channel_wavefunction(&r, c));
        assert!((n - r.channel_population(c)).abs() < 1e-12);
    }
}

#[test]
fn ground_excitation_is_the_only_zero_mode_in_mean_field() {
    // with no Coulomb coupling the CIS spectrum is the set of orbital
    // energy differences
    let sys = beryllium(CouplingMode::MeanFieldOnly);
    let h: DMatrix<Complex64> = sys.velocity.dense(0.0);
    let mut ev: Vec<f64> = h.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut diffs = vec![0.0];
    for b in sys.basis.blocks() {
        let e_i = sys.basis.channels()[b.channel].energy;
        diffs.extend(sys.basis.virtuals().block(b.l).energies.iter().map(|e| e - e_i));
    }
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in ev.iter().zip(&diffs) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn linear_polarization_keeps_m_blocks_empty() {
    let sys = System::build(&hfs_spec(10.0, 10, CouplingMode::Interchannel, MSelection::Full)).unwrap();
    let basis = &sys.basis;
    assert!(basis.channels().iter().any(|c| c.m != 0));
    let pulse = tdcis::pulse::Pulse::new(0.05, 1.0, 20.0, 0.0).unwrap();
    let gen = tdcis::propagator::Driven { h: &sys.velocity, pulse: &pulse };
    let plan = tdcis::propagator::PropagationPlan::new(-40.0, 40.0, 0.2, tdcis::propagator::Method::Lanczos, 12).unwrap();
    let mut s = CisState::ground(basis.clone());
    tdcis::propagator::propagate(&mut s, &plan, &gen, &mut []).unwrap();
    let mut allowed = 0.0;
    for b in basis.blocks() {
        let m_i = basis.channels()[b.channel].m;
        let pop: f64 = s.block(basis.blocks().iter().position(|x| x == b).unwrap()).iter().map(|z| z.norm_sqr()).sum();
        if b.m != m_i {
            assert_eq!(pop, 0.0, "block l={} m={} of hole m={m_i}", b.l, b.m);
        } else {
            allowed += pop;
        }
    }
    assert!(allowed > 1e-6);
}

#[test]
fn coulomb_dump_lists_every_entry() {
    let sys = beryllium(CouplingMode::Intrachannel);
    let t = sys.velocity.coulomb();
    let dump = t.dump();
    let rows = dump.lines().filter(|l| !l.starts_with('#')).count();
    let entries: usize = t.blocks.iter().map(|b| b.matrix.len()).sum();
    assert_eq!(rows, entries);
    let first = dump.lines().nth(1).unwrap();
    let v: f64 = first.split_whitespace().nth(4).unwrap().parse().unwrap();
    assert_eq!(v, t.blocks[0].matrix[(0, 0)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rhs_is_linear(seed in 0u64..1000, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let sys = beryllium(CouplingMode::Interchannel);
        let x = random_state(&sys.basis, seed);
        let y = random_state(&sys.basis, seed + 1);
        let mix: Vec<Complex64> = x.data().iter().zip(y.data()).map(|(p, q)| p * a + q * b).collect();
        let z = CisState::from_vec(sys.basis.clone(), mix).unwrap();
        let dx = sys.velocity.eom_rhs(&x, 0.05).unwrap();
        let dy = sys.velocity.eom_rhs(&y, 0.05).unwrap();
        let dz = sys.velocity.eom_rhs(&z, 0.05).unwrap();
        for k in 0..dz.data().len() {
            let e = dx.data()[k] * a + dy.data()[k] * b;
            prop_assert!((dz.data()[k] - e).norm() < 1e-12);
        }
    }
}
