use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::basis::CisBasis;
use crate::angular::ck;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Which Coulomb couplings between particle-hole amplitudes are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// All hole pairs (i, i').
    Interchannel,
    /// Only i = i'.
    Intrachannel,
    /// No two-body coupling.
    MeanFieldOnly,
}

impl CouplingMode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "interchannel" => CouplingMode::Interchannel,
            "intrachannel" => CouplingMode::Intrachannel,
            "mean-field-only" => CouplingMode::MeanFieldOnly,
            _ => return None,
        })
    }
}

/// Y^k[f](r_j) = Σ_m w_m f_m r_<^k / r_>^{k+1}, applied to every column of `f`.
pub fn yk_columns(grid: &RadialGrid, k: usize, f: &DMatrix<f64>) -> DMatrix<f64> {
    let r = grid.r();
    let w = grid.weights();
    let n = r.len();
    let kk = k as i32;
    let rk: Vec<f64> = r.iter().map(|x| x.powi(kk)).collect();
    let rk1: Vec<f64> = r.iter().map(|x| x.powi(kk + 1)).collect();
    let mut out = DMatrix::zeros(n, f.ncols());
    for c in 0..f.ncols() {
        let col = f.column(c);
        let mut acc = 0.0;
        let mut inner = vec![0.0; n];
        for j in 0..n {
            acc += w[j] * col[j] * rk[j];
            inner[j] = acc / rk1[j];
        }
        let mut acc = 0.0;
        let mut o = out.column_mut(c);
        for j in (0..n).rev() {
            o[j] = inner[j] + acc * rk[j];
            acc += w[j] * col[j] / rk1[j];
        }
    }
    out
}

pub fn yk(grid: &RadialGrid, k: usize, f: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_column_slice(f.len(), 1, f);
    yk_columns(grid, k, &m).column(0).iter().copied().collect()
}

/// Slater radial integral R^k(p r; q s) = ∫∫ u_p u_r(1) r_<^k/r_>^{k+1} u_q u_s(2).
pub fn slater_rk(grid: &RadialGrid, k: usize, up: &[f64], ur: &[f64], uq: &[f64], us: &[f64]) -> f64 {
    let f2: Vec<f64> = uq.iter().zip(us).map(|(a, b)| a * b).collect();
    let y = yk(grid, k, &f2);
    grid.weights().iter().enumerate().map(|(j, w)| w * up[j] * ur[j] * y[j]).sum()
}

/// A radial function with angular labels, for raw two-body elements.
#[derive(Debug, Clone, Copy)]
pub struct OrbitalRef<'a> {
    pub radial: &'a [f64],
    pub l: usize,
    pub m: i32,
}

/// Raw v_pqrs = ⟨pq|1/r12|rs⟩ via the multipole expansion.
pub fn coulomb_element(grid: &RadialGrid, p: OrbitalRef, q: OrbitalRef, r: OrbitalRef, s: OrbitalRef) -> f64 {
    if p.m + q.m != r.m + s.m {
        return 0.0;
    }
    let kmin = p.l.abs_diff(r.l).max(q.l.abs_diff(s.l));
    let kmax = (p.l + r.l).min(q.l + s.l);
    let mut v = 0.0;
    for k in kmin..=kmax {
        let a = ck(k, p.l, p.m, r.l, r.m) * ck(k, s.l, s.m, q.l, q.m);
        if a != 0.0 {
            v += a * slater_rk(grid, k, p.radial, r.radial, q.radial, s.radial);
        }
    }
    v
}

/// Dense (2v_{ai'ib} - v_{ai'bi}) block between a row block (i, l_a, m_a)
/// and a column block (i', l_b, m_b).
#[derive(Debug, Clone)]
pub struct CoulombBlock {
    pub row: usize,
    pub col: usize,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct CoulombTable {
    pub mode: CouplingMode,
    pub l_max_multipole: usize,
    pub blocks: Vec<CoulombBlock>,
}

impl CoulombTable {
    pub fn empty(mode: CouplingMode) -> Self {
        Self { mode, l_max_multipole: 0, blocks: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Text dump: `row_block col_block a b value`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# coulomb mode={:?} lmax={}; columns: row_block col_block a b value", self.mode, self.l_max_multipole);
        for b in &self.blocks {
            for i in 0..b.matrix.nrows() {
                for j in 0..b.matrix.ncols() {
                    let _ = writeln!(s, "{} {} {i} {j} {:.16e}", b.row, b.col, b.matrix[(i, j)]);
                }
            }
        }
        s
    }
}

/// Smallest multipole order that keeps the hole-hole (direct) angular
/// content exact.
pub fn min_multipole(basis: &CisBasis) -> usize {
    2 * basis.max_hole_l()
}

/// Multipole order that makes every coupling exact.
pub fn default_multipole(basis: &CisBasis) -> usize {
    basis.virtuals().l_max + basis.max_hole_l()
}

pub fn build_coulomb_table(basis: &CisBasis, mode: CouplingMode, l_max_multipole: Option<usize>) -> Result<CoulombTable> {
    let lmax = l_max_multipole.unwrap_or_else(|| default_multipole(basis));
    if lmax < min_multipole(basis) {
        return Err(Error::Config(format!(
            "multipole truncation {lmax} is below the minimum {} required by the active holes",
            min_multipole(basis)
        )));
    }
    if mode == CouplingMode::MeanFieldOnly {
        return Ok(CoulombTable { mode, l_max_multipole: lmax, blocks: Vec::new() });
    }
    let grid = basis.grid();
    let w = grid.weights();
    let n = grid.n_points();
    let nb = basis.blocks().len();
    let pairs: Vec<(usize, usize)> = (0..nb)
        .flat_map(|a| (0..nb).map(move |b| (a, b)))
        .filter(|&(a, b)| {
            let (ba, bb) = (&basis.blocks()[a], &basis.blocks()[b]);
            let (ci, cj) = (&basis.channels()[ba.channel], &basis.channels()[bb.channel]);
            let allowed = match mode {
                CouplingMode::Interchannel => true,
                CouplingMode::Intrachannel => ba.channel == bb.channel,
                CouplingMode::MeanFieldOnly => false,
            };
            allowed && ba.m - ci.m == bb.m - cj.m
        })
        .collect();
    let blocks: Vec<CoulombBlock> = pairs
        .par_iter()
        .filter_map(|&(ra, cb)| {
            let ba = basis.blocks()[ra];
            let bb = basis.blocks()[cb];
            let hi = &basis.channels()[ba.channel];
            let hj = &basis.channels()[bb.channel];
            let ui = basis.hole_radial(ba.channel);
            let uj = basis.hole_radial(bb.channel);
            let ua = &basis.virtuals().block(ba.l).radial;
            let ub = &basis.virtuals().block(bb.l).radial;
            let mut mat = DMatrix::<f64>::zeros(ba.len, bb.len);
            let mut any = false;
            // 2 v_{a i' i b}: densities (a i) and (i' b)
            let kmin = ba.l.abs_diff(hi.l).max(bb.l.abs_diff(hj.l));
            let kmax = (ba.l + hi.l).min(bb.l + hj.l).min(lmax);
            for k in kmin..=kmax {
                let ang = ck(k, ba.l, ba.m, hi.l, hi.m) * ck(k, bb.l, bb.m, hj.l, hj.m);
                if ang == 0.0 {
                    continue;
                }
                let mut left = ua.clone();
                for i in 0..n {
                    left.row_mut(i).scale_mut(ui[i] * w[i]);
                }
                let mut right = ub.clone();
                for i in 0..n {
                    right.row_mut(i).scale_mut(uj[i]);
                }
                let y = yk_columns(grid, k, &right);
                mat += (left.transpose() * y) * (2.0 * ang);
                any = true;
            }
            // v_{a i' b i}: densities (a b) and (i' i)
            let kmin = ba.l.abs_diff(bb.l).max(hi.l.abs_diff(hj.l));
            let kmax = (ba.l + bb.l).min(hi.l + hj.l).min(lmax);
            for k in kmin..=kmax {
                let ang = ck(k, ba.l, ba.m, bb.l, bb.m) * ck(k, hi.l, hi.m, hj.l, hj.m);
                if ang == 0.0 {
                    continue;
                }
                let dens: Vec<f64> = (0..n).map(|i| ui[i] * uj[i]).collect();
                let y = yk(grid, k, &dens);
                let wy = DVector::from_iterator(n, (0..n).map(|i| w[i] * y[i]));
                let mut right = ub.clone();
                for i in 0..n {
                    right.row_mut(i).scale_mut(wy[i]);
                }
                mat -= (ua.transpose() * right) * ang;
                any = true;
            }
            any.then_some(CoulombBlock { row: ra, col: cb, matrix: mat })
        })
        .collect();
    Ok(CoulombTable { mode, l_max_multipole: lmax, blocks })
}
