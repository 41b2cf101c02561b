use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::CisBasis;
use crate::angular::cos_up;
use crate::grid::{Orbital, RadialGrid};

/// Form of the light-matter coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// A(t)·p_z
    Velocity,
    /// F(t)·z
    Length,
}

impl Gauge {
    /// Phase of ⟨l+1|O|l⟩ relative to its real radial-angular factor.
    pub fn up_phase(self) -> Complex64 {
        match self {
            Gauge::Velocity => Complex64::new(0.0, -1.0),
            Gauge::Length => Complex64::new(1.0, 0.0),
        }
    }
}

/// Real radial factor of ⟨hi, l+1|O|lo, l⟩ (angular part excluded).
pub fn radial_up(gauge: Gauge, grid: &RadialGrid, hi: &[f64], lo: &[f64], l: usize) -> f64 {
    let r = grid.r();
    let w = grid.weights();
    let n = r.len();
    match gauge {
        Gauge::Length => (0..n).map(|k| w[k] * hi[k] * lo[k] * r[k]).sum(),
        Gauge::Velocity => {
            let mut s = 0.0;
            for k in 0..n {
                let prev = if k == 0 { 0.0 } else { lo[k - 1] };
                let next = if k + 1 < n { lo[k + 1] } else { 0.0 };
                s += hi[k] * 0.5 * (next - prev) - (l + 1) as f64 * w[k] * hi[k] * lo[k] / r[k];
            }
            s
        }
    }
}

/// ⟨p|O|q⟩ for two orbitals on the same grid.
pub fn orbital_element(gauge: Gauge, grid: &RadialGrid, p: &Orbital, q: &Orbital) -> Complex64 {
    if p.m != q.m {
        return Complex64::new(0.0, 0.0);
    }
    if p.l == q.l + 1 {
        gauge.up_phase() * cos_up(q.l, q.m) * radial_up(gauge, grid, &p.radial, &q.radial, q.l)
    } else if q.l == p.l + 1 {
        (gauge.up_phase() * cos_up(p.l, p.m) * radial_up(gauge, grid, &q.radial, &p.radial, p.l)).conj()
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Dipole couplings in one gauge: virtual-virtual radial blocks, hole-virtual
/// vectors and the hole-hole matrix.
#[derive(Debug, Clone)]
pub struct DipoleTable {
    pub gauge: Gauge,
    /// up[l]: k_{l+1} × k_l real radial factors between virtual blocks.
    up: Vec<DMatrix<f64>>,
    /// For each occupied orbital, ⟨a|O|i⟩ radial factors for l_a = l_i + 1 and l_i - 1.
    hole_up: Vec<Option<Vec<f64>>>,
    hole_down: Vec<Option<Vec<f64>>>,
    /// ⟨i'|O|i⟩ over occupied orbitals.
    hole_hole: DMatrix<Complex64>,
}

fn diff_matrix(u: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = u.shape();
    let mut d = DMatrix::zeros(n, k);
    for j in 0..k {
        for i in 0..n {
            let prev = if i == 0 { 0.0 } else { u[(i - 1, j)] };
            let next = if i + 1 < n { u[(i + 1, j)] } else { 0.0 };
            d[(i, j)] = 0.5 * (next - prev);
        }
    }
    d
}

pub fn build_dipole_table(basis: &CisBasis, gauge: Gauge) -> DipoleTable {
    let grid = basis.grid();
    let virt = basis.virtuals();
    let w = grid.weights();
    let r = grid.r();
    let n = grid.n_points();
    let mut up = Vec::new();
    for l in 0..virt.blocks.len().saturating_sub(1) {
        let lo = &virt.blocks[l].radial;
        let hi = &virt.blocks[l + 1].radial;
        let m = match gauge {
            Gauge::Length => {
                let mut wl = lo.clone();
                for i in 0..n {
                    wl.row_mut(i).scale_mut(w[i] * r[i]);
                }
                hi.transpose() * wl
            }
            Gauge::Velocity => {
                let mut t = diff_matrix(lo);
                for j in 0..lo.ncols() {
                    for i in 0..n {
                        t[(i, j)] -= (l + 1) as f64 * w[i] * lo[(i, j)] / r[i];
                    }
                }
                hi.transpose() * t
            }
        };
        up.push(m);
    }
    let occ = basis.occupied();
    let mut hole_up = Vec::new();
    let mut hole_down = Vec::new();
    for o in occ {
        let l = o.l;
        hole_up.push(virt.blocks.get(l + 1).map(|b| {
            (0..b.len())
                .map(|j| radial_up(gauge, grid, b.radial.column(j).as_slice(), &o.radial, l))
                .collect()
        }));
        hole_down.push(if l == 0 {
            None
        } else {
            virt.blocks.get(l - 1).map(|b| {
                (0..b.len())
                    .map(|j| radial_up(gauge, grid, &o.radial, b.radial.column(j).as_slice(), l - 1))
                    .collect()
            })
        });
    }
    let no = occ.len();
    let hole_hole = DMatrix::from_fn(no, no, |a, b| orbital_element(gauge, grid, &occ[a], &occ[b]));
    DipoleTable { gauge, up, hole_up, hole_down, hole_hole }
}

impl DipoleTable {
    /// ⟨a, l+1, m|O|b, l, m⟩.
    pub fn virt_up(&self, l: usize, m: i32, a: usize, b: usize) -> Complex64 {
        match self.up.get(l) {
            Some(mat) => self.gauge.up_phase() * cos_up(l, m) * mat[(a, b)],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Scalar factor s with ⟨l+1, m|O|l, m⟩ = s · up_radial(l).
    pub fn up_scalar(&self, l: usize, m: i32) -> Complex64 {
        self.gauge.up_phase() * cos_up(l, m)
    }

    pub fn up_radial(&self, l: usize) -> Option<&DMatrix<f64>> {
        self.up.get(l)
    }

    /// ⟨a, l_a, m_a|O|b, l_b, m_b⟩ between virtuals.
    pub fn virt_virt(&self, la: usize, ma: i32, a: usize, lb: usize, mb: i32, b: usize) -> Complex64 {
        if ma != mb {
            Complex64::new(0.0, 0.0)
        } else if la == lb + 1 {
            self.virt_up(lb, mb, a, b)
        } else if lb == la + 1 {
            self.virt_up(la, ma, b, a).conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// ⟨a, l_a, m_a|O|i⟩ for occupied orbital index `i` with (l_i, m_i).
    pub fn virt_hole(&self, la: usize, ma: i32, a: usize, i: usize, li: usize, mi: i32) -> Complex64 {
        if ma != mi {
            return Complex64::new(0.0, 0.0);
        }
        if la == li + 1 {
            match &self.hole_up[i] {
                Some(v) => self.gauge.up_phase() * cos_up(li, mi) * v[a],
                None => Complex64::new(0.0, 0.0),
            }
        } else if li == la + 1 {
            match &self.hole_down[i] {
                Some(v) => (self.gauge.up_phase() * cos_up(la, ma) * v[a]).conj(),
                None => Complex64::new(0.0, 0.0),
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Full column ⟨a|O|i⟩ over the virtual block (l_a, m_a), if nonzero.
    pub fn virt_hole_column(&self, la: usize, ma: i32, i: usize, li: usize, mi: i32, len: usize) -> Option<Vec<Complex64>> {
        if ma != mi || (la != li + 1 && li != la + 1) {
            return None;
        }
        Some((0..len).map(|a| self.virt_hole(la, ma, a, i, li, mi)).collect())
    }

    /// ⟨i'|O|i⟩.
    pub fn hole_hole(&self, ip: usize, i: usize) -> Complex64 {
        self.hole_hole[(ip, i)]
    }

    /// Text dump: `kind l m row col re im`, 17 significant digits.
    pub fn dump(&self, basis: &CisBasis) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dipole gauge={:?}; columns: kind l m row col re im", self.gauge);
        for (l, mat) in self.up.iter().enumerate() {
            for a in 0..mat.nrows() {
                for b in 0..mat.ncols() {
                    let v = self.virt_up(l, 0, a, b);
                    let _ = writeln!(s, "vv {l} 0 {a} {b} {:.16e} {:.16e}", v.re, v.im);
                }
            }
        }
        let occ = basis.occupied();
        for (i, o) in occ.iter().enumerate() {
            for la in [o.l + 1, o.l.wrapping_sub(1)] {
                if let Some(b) = basis.virtuals().blocks.get(la) {
                    for a in 0..b.len() {
                        let v = self.virt_hole(la, o.m, a, i, o.l, o.m);
                        let _ = writeln!(s, "vh {la} {} {a} {i} {:.16e} {:.16e}", o.m, v.re, v.im);
                    }
                }
            }
        }
        for ip in 0..occ.len() {
            for i in 0..occ.len() {
                let v = self.hole_hole[(ip, i)];
                let _ = writeln!(s, "hh {} {} {ip} {i} {:.16e} {:.16e}", occ[i].l, occ[i].m, v.re, v.im);
            }
        }
        s
    }
}
