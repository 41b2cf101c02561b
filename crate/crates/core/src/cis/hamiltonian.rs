use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::{CisBasis, CisState};
use super::coulomb::CoulombTable;
use super::dipole::{DipoleTable, Gauge};
use crate::error::{Error, Result};
use crate::grid::{RadialGrid, VirtualSpace};
use crate::potential::AbsorbingPotential;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Algebraic structure of an operator, used to pick the Krylov recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    ComplexSymmetric,
    General,
}

/// Per-l real symmetric matrices ⟨a|f(r)|b⟩ of a radial multiplicative
/// operator in the virtual space.
#[derive(Debug, Clone)]
pub struct RadialBlocks {
    pub blocks: Vec<DMatrix<f64>>,
}

impl RadialBlocks {
    pub fn project(grid: &RadialGrid, virt: &VirtualSpace, f: impl Fn(f64) -> f64) -> Self {
        let fw: Vec<f64> = grid.r().iter().zip(grid.weights()).map(|(r, w)| w * f(*r)).collect();
        let blocks = virt
            .blocks
            .iter()
            .map(|b| {
                let mut right = b.radial.clone();
                for (i, s) in fw.iter().enumerate() {
                    right.row_mut(i).scale_mut(*s);
                }
                b.radial.transpose() * right
            })
            .collect();
        Self { blocks }
    }
}

/// y += s · M x for real M and complex vectors.
pub fn gemv_rc(m: &DMatrix<f64>, x: &[Complex64], y: &mut [Complex64], s: Complex64) {
    let rows = m.nrows();
    for (j, xj) in x.iter().enumerate() {
        let c = s * xj;
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let col = &m.as_slice()[j * rows..(j + 1) * rows];
        for (yi, mij) in y.iter_mut().zip(col) {
            yi.re += mij * c.re;
            yi.im += mij * c.im;
        }
    }
}

/// y += s · Mᵀ x for real M and complex vectors.
pub fn gemv_rc_t(m: &DMatrix<f64>, x: &[Complex64], y: &mut [Complex64], s: Complex64) {
    let rows = m.nrows();
    for (j, yj) in y.iter_mut().enumerate() {
        let col = &m.as_slice()[j * rows..(j + 1) * rows];
        let mut re = 0.0;
        let mut im = 0.0;
        for (mij, xi) in col.iter().zip(x) {
            re += mij * xi.re;
            im += mij * xi.im;
        }
        *yj += s * Complex64::new(re, im);
    }
}

#[derive(Debug, Clone)]
struct VvCoupling {
    lo: usize,
    hi: usize,
    l: usize,
    scalar: Complex64,
}

#[derive(Debug, Clone)]
struct HoleCoupling {
    /// Output channel block and input block of the partner hole.
    out_block: usize,
    in_block: usize,
    value: Complex64,
}

/// The CIS Hamiltonian H0 + c(t)·O (+ CAP), where O is p_z (velocity) or z
/// (length) and c(t) the matching field coefficient.
#[derive(Debug, Clone)]
pub struct CisHamiltonian {
    basis: Arc<CisBasis>,
    dipole: Arc<DipoleTable>,
    coulomb: Arc<CoulombTable>,
    cap: Option<(AbsorbingPotential, Arc<RadialBlocks>)>,
    diag: Vec<f64>,
    ground: Vec<Complex64>,
    vv: Vec<VvCoupling>,
    holes: Vec<HoleCoupling>,
    ground_factor: f64,
}

impl CisHamiltonian {
    pub fn new(basis: Arc<CisBasis>, dipole: DipoleTable, coulomb: CoulombTable) -> Self {
        Self::from_shared(basis, Arc::new(dipole), Arc::new(coulomb))
    }

    pub fn from_shared(basis: Arc<CisBasis>, dipole: Arc<DipoleTable>, coulomb: Arc<CoulombTable>) -> Self {
        let ground_factor = std::f64::consts::SQRT_2;
        let mut diag = vec![0.0; basis.dim()];
        let mut ground = vec![ZERO; basis.dim()];
        for b in basis.blocks() {
            let ch = &basis.channels()[b.channel];
            let vb = basis.virtuals().block(b.l);
            for (k, idx) in b.range().enumerate() {
                diag[idx] = vb.energies[k] - ch.energy;
            }
            if let Some(col) = dipole.virt_hole_column(b.l, b.m, ch.orbital, ch.l, ch.m, b.len) {
                for (k, idx) in b.range().enumerate() {
                    ground[idx] = col[k] * ground_factor;
                }
            }
        }
        let mut vv = Vec::new();
        for (bi, b) in basis.blocks().iter().enumerate() {
            if let Some(bj) = basis.block_index(b.channel, b.l + 1, b.m) {
                if dipole.up_radial(b.l).is_some() {
                    vv.push(VvCoupling { lo: bi, hi: bj, l: b.l, scalar: dipole.up_scalar(b.l, b.m) });
                }
            }
        }
        let mut holes = Vec::new();
        for (c, ch) in basis.channels().iter().enumerate() {
            for (cp, chp) in basis.channels().iter().enumerate() {
                let v = dipole.hole_hole(chp.orbital, ch.orbital);
                if v.norm() == 0.0 {
                    continue;
                }
                for b in basis.channel_blocks(c) {
                    if let Some(bp) = basis.block_index(cp, b.l, b.m) {
                        let out_block = basis.block_index(c, b.l, b.m).unwrap();
                        holes.push(HoleCoupling { out_block, in_block: bp, value: v });
                    }
                }
            }
        }
        Self { basis, dipole, coulomb, cap: None, diag, ground, vv, holes, ground_factor }
    }

    /// Same operator with an absorber added (or replaced).
    pub fn with_cap(&self, cap: AbsorbingPotential) -> Self {
        let blocks = RadialBlocks::project(self.basis.grid(), self.basis.virtuals(), |r| cap.strength(r));
        let mut out = self.clone();
        out.cap = if cap.eta > 0.0 { Some((cap, Arc::new(blocks))) } else { None };
        out
    }

    pub fn without_cap(&self) -> Self {
        let mut out = self.clone();
        out.cap = None;
        out
    }

    pub fn basis(&self) -> &Arc<CisBasis> {
        &self.basis
    }

    pub fn dipole(&self) -> &DipoleTable {
        &self.dipole
    }

    pub fn coulomb(&self) -> &CoulombTable {
        &self.coulomb
    }

    pub fn gauge(&self) -> Gauge {
        self.dipole.gauge
    }

    pub fn cap(&self) -> Option<AbsorbingPotential> {
        self.cap.as_ref().map(|c| c.0)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn ground_factor(&self) -> f64 {
        self.ground_factor
    }

    pub fn symmetry(&self) -> Symmetry {
        match (&self.cap, self.dipole.gauge) {
            (None, _) => Symmetry::Hermitian,
            (Some(_), Gauge::Length) => Symmetry::ComplexSymmetric,
            (Some(_), Gauge::Velocity) => Symmetry::General,
        }
    }

    /// y = H(c) x with c = A(t) (velocity) or F(t) (length).
    pub fn apply(&self, coupling: f64, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim());
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * d;
        }
        let blocks = self.basis.blocks();
        for cb in &self.coulomb.blocks {
            let (r, c) = (blocks[cb.row].range(), blocks[cb.col].range());
            let (xs, ys) = (&x[c], &mut y[r]);
            gemv_rc(&cb.matrix, xs, ys, Complex64::new(1.0, 0.0));
        }
        if let Some((_, cap)) = &self.cap {
            let s = Complex64::new(0.0, -1.0);
            for b in blocks {
                let xs = x[b.range()].to_vec();
                gemv_rc(&cap.blocks[b.l], &xs, &mut y[b.range()], s);
            }
        }
        if coupling != 0.0 {
            let c = Complex64::new(coupling, 0.0);
            let mut y0 = ZERO;
            for (gi, xi) in self.ground.iter().zip(x) {
                y0 += gi.conj() * xi;
            }
            y[0] += c * y0;
            let x0 = x[0];
            for (yi, gi) in y.iter_mut().zip(&self.ground) {
                *yi += c * gi * x0;
            }
            for v in &self.vv {
                let radial = self.dipole.up_radial(v.l).unwrap();
                let (lo, hi) = (blocks[v.lo].range(), blocks[v.hi].range());
                let xlo = x[lo.clone()].to_vec();
                let xhi = x[hi.clone()].to_vec();
                gemv_rc(radial, &xlo, &mut y[hi], c * v.scalar);
                gemv_rc_t(radial, &xhi, &mut y[lo], c * v.scalar.conj());
            }
            for h in &self.holes {
                let (o, i) = (blocks[h.out_block].range(), blocks[h.in_block].range());
                let s = -c * h.value;
                for (k, idx) in i.enumerate() {
                    let v = x[idx];
                    y[o.start + k] += s * v;
                }
            }
        }
    }

    /// i d/dt x = H x, returned as d/dt x = -i H x.
    pub fn eom_rhs(&self, state: &CisState, coupling: f64) -> Result<CisState> {
        if !Arc::ptr_eq(state.basis(), &self.basis) {
            return Err(Error::Contract("state and tables were built on different bases".into()));
        }
        let mut out = CisState::zeros(self.basis.clone());
        self.apply(coupling, state.data(), out.data_mut());
        for z in out.data_mut() {
            *z = Complex64::new(z.im, -z.re);
        }
        Ok(out)
    }

    /// ⟨x|H0|x⟩ without field or absorber.
    pub fn field_free_energy(&self, x: &[Complex64]) -> f64 {
        let h = self.without_cap();
        let mut y = vec![ZERO; x.len()];
        h.apply(0.0, x, &mut y);
        x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense matrix of H(c), for small systems and oracles.
    pub fn dense(&self, coupling: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![ZERO; n];
        let mut y = vec![ZERO; n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply(coupling, &e, &mut y);
            m.column_mut(j).copy_from_slice(&y);
            e[j] = ZERO;
        }
        m
    }
}
