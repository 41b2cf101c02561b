//! Radial grids, orbitals and the field-free radial eigensolver.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::RadialPotential;
use crate::tridiag::{Selection, SymTridiagonal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapping {
    Uniform,
    /// r = r_max (k/n)², denser near the nucleus.
    SqrtMapped,
}

/// Radial nodes r_1 < ... < r_n = r_max with quadrature weights. The radial
/// functions vanish at r = 0 and at r_max.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    mapping: Mapping,
    r: Vec<f64>,
    w: Vec<f64>,
}

pub fn build_grid(r_max: f64, n_points: usize, mapping: Mapping) -> Result<RadialGrid> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::Config(format!("r_max must be positive, got {r_max}")));
    }
    if n_points < 16 {
        return Err(Error::Config(format!("need at least 16 grid points, got {n_points}")));
    }
    let n = n_points;
    let nf = n as f64;
    let (r, w) = match mapping {
        Mapping::Uniform => {
            let h = r_max / nf;
            ((1..=n).map(|k| k as f64 * h).collect(), vec![h; n])
        }
        Mapping::SqrtMapped => {
            let r: Vec<f64> = (1..=n).map(|k| r_max * (k as f64 / nf).powi(2)).collect();
            // trapezoid in x = k/n with an end correction for the linear
            // Jacobian; exact for constants
            let mut w: Vec<f64> = (1..=n).map(|k| 2.0 * r_max * k as f64 / (nf * nf)).collect();
            w[n - 1] *= 0.5;
            let corr = r_max / (6.0 * nf * nf);
            w[0] += corr;
            w[n - 1] -= corr;
            (r, w)
        }
    };
    Ok(RadialGrid { r_max, mapping, r, w })
}

impl RadialGrid {
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_points(&self) -> usize {
        self.r.len()
    }

    pub fn mapping(&self) -> Mapping {
        self.mapping
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.r.iter().zip(&self.w).map(|(r, w)| w * f(*r)).sum()
    }

    /// Σ w_k a_k b_k.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    /// Index of the first node with r ≥ `r`.
    pub fn index_at(&self, r: f64) -> usize {
        self.r.partition_point(|&x| x < r)
    }

    /// Symmetrized finite-difference radial Hamiltonian
    /// -½ d²/dr² + l(l+1)/(2r²) + V on the interior nodes (the last node is
    /// the Dirichlet boundary).
    pub fn radial_hamiltonian(&self, v: &[f64], l: usize) -> SymTridiagonal {
        let m = self.r.len() - 1;
        let cent = (l * (l + 1)) as f64 * 0.5;
        let mut d = vec![0.0; m];
        let mut e = vec![0.0; m - 1];
        for k in 0..m {
            let rm = if k == 0 { 0.0 } else { self.r[k - 1] };
            let dm = self.r[k] - rm;
            let dp = self.r[k + 1] - self.r[k];
            d[k] = 0.5 * (1.0 / dp + 1.0 / dm) / self.w[k] + v[k] + cent / (self.r[k] * self.r[k]);
            if k + 1 < m {
                e[k] = -0.5 / (dp * (self.w[k] * self.w[k + 1]).sqrt());
            }
        }
        SymTridiagonal::new(d, e)
    }

    /// Radial eigenpairs for angular momentum `l`, with radial functions
    /// normalized as Σ w u² = 1 and sampled on every node (zero at r_max).
    pub fn radial_eigenpairs(&self, v: &[f64], l: usize, sel: Selection) -> Result<Vec<(f64, Vec<f64>)>> {
        let t = self.radial_hamiltonian(v, l);
        let pairs = t.eigenpairs(sel, l)?;
        Ok(pairs
            .into_iter()
            .map(|(e, vec)| {
                let mut u: Vec<f64> = vec.iter().zip(&self.w).map(|(x, w)| x / w.sqrt()).collect();
                u.push(0.0);
                // sign convention: positive slope at the origin
                if let Some(first) = u.iter().find(|x| x.abs() > 1e-300) {
                    if *first < 0.0 {
                        u.iter_mut().for_each(|x| *x = -*x);
                    }
                }
                (e, u)
            })
            .collect())
    }
}

/// A spatial orbital φ(r) = u(r)/r Y_lm. Radial parts of a central-field
/// Hamiltonian are real, so samples are stored as reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbital {
    pub label: String,
    pub n: usize,
    pub l: usize,
    pub m: i32,
    pub energy: f64,
    pub radial: Vec<f64>,
    pub occupied: bool,
}

/// Virtual radial functions of one angular momentum, stored column-wise.
#[derive(Debug, Clone)]
pub struct VirtualBlock {
    pub l: usize,
    pub energies: Vec<f64>,
    /// n_points × count, column j is u_j.
    pub radial: DMatrix<f64>,
}

impl VirtualBlock {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct VirtualSpace {
    pub e_cut: f64,
    pub l_max: usize,
    pub blocks: Vec<VirtualBlock>,
}

impl VirtualSpace {
    pub fn block(&self, l: usize) -> &VirtualBlock {
        &self.blocks[l]
    }

    /// Orbitals of angular momentum `l` with magnetic number `m`.
    pub fn orbitals(&self, l: usize, m: i32) -> Vec<Orbital> {
        let b = &self.blocks[l];
        b.energies
            .iter()
            .enumerate()
            .map(|(j, &e)| Orbital {
                label: format!("v{j}{}", l_letter(l)),
                n: j,
                l,
                m,
                energy: e,
                radial: b.radial.column(j).iter().copied().collect(),
                occupied: false,
            })
            .collect()
    }

    pub fn total_per_m(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }
}

pub fn l_letter(l: usize) -> char {
    const L: &[u8] = b"spdfghiklmnoqrtuv";
    L.get(l).map(|&c| c as char).unwrap_or('x')
}

/// Subshells (n, l) up to n = 8 in filling order.
pub fn madelung_order() -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (1..=8).flat_map(|n| (0..n).map(move |l| (n, l))).collect();
    out.sort_by_key(|&(n, l)| (n + l, n));
    out
}

/// Closed subshells holding `n_elec` electrons.
pub fn aufbau(n_elec: usize) -> Result<Vec<(usize, usize)>> {
    let mut left = n_elec;
    let mut shells = Vec::new();
    for (n, l) in madelung_order() {
        if left == 0 {
            break;
        }
        let cap = 2 * (2 * l + 1);
        if left < cap {
            return Err(Error::Config(format!(
                "{n_elec} electrons do not fill closed subshells (stopped at {n}{})",
                l_letter(l)
            )));
        }
        shells.push((n, l));
        left -= cap;
    }
    Ok(shells)
}

/// Occupied orbitals and the virtual space of the field-free Hamiltonian.
pub fn solve_orbitals(
    grid: &RadialGrid,
    potential: &RadialPotential,
    l_max: usize,
    e_cut: f64,
) -> Result<(Vec<Orbital>, VirtualSpace)> {
    let shells = aufbau(potential.n_elec)?;
    let l_occ = shells.iter().map(|s| s.1).max().unwrap_or(0);
    let l_top = l_max.max(l_occ);
    let v = potential.values();
    let per_l: Vec<Result<Vec<(f64, Vec<f64>)>>> = (0..=l_top)
        .into_par_iter()
        .map(|l| {
            let n_occ = shells.iter().filter(|s| s.1 == l).count();
            let t = grid.radial_hamiltonian(v, l);
            let n_below = if l <= l_max { t.count_below(e_cut) } else { 0 };
            let count = n_below.max(n_occ);
            grid.radial_eigenpairs(v, l, Selection::Lowest(count))
        })
        .collect();
    let mut occupied = Vec::new();
    let mut blocks = Vec::new();
    for (l, res) in per_l.into_iter().enumerate() {
        let pairs = res?;
        let n_occ = shells.iter().filter(|s| s.1 == l).count();
        if pairs.len() < n_occ {
            return Err(Error::Numerical(format!("only {} radial states found for l={l}", pairs.len())));
        }
        let mut shell_ns: Vec<usize> = shells.iter().filter(|s| s.1 == l).map(|s| s.0).collect();
        shell_ns.sort();
        for (idx, n) in shell_ns.iter().enumerate() {
            let (e, u) = &pairs[idx];
            for m in -(l as i32)..=(l as i32) {
                occupied.push(Orbital {
                    label: format!("{n}{}", l_letter(l)),
                    n: *n,
                    l,
                    m,
                    energy: *e,
                    radial: u.clone(),
                    occupied: true,
                });
            }
        }
        if l <= l_max {
            let virt: Vec<&(f64, Vec<f64>)> = pairs.iter().skip(n_occ).filter(|p| p.0 <= e_cut).collect();
            let np = grid.n_points();
            let mut mat = DMatrix::<f64>::zeros(np, virt.len());
            for (j, (_, u)) in virt.iter().enumerate() {
                mat.column_mut(j).copy_from_slice(u);
            }
            blocks.push(VirtualBlock { l, energies: virt.iter().map(|p| p.0).collect(), radial: mat });
        }
    }
    occupied.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap().then(a.m.cmp(&b.m)));
    Ok((occupied, VirtualSpace { e_cut, l_max, blocks }))
}

/// Text dump: one `@orbital` header per orbital followed by `r re im` rows.
pub fn write_orbitals(grid: &RadialGrid, orbitals: &[Orbital]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# columns: r (bohr), Re u, Im u");
    for o in orbitals {
        let _ = writeln!(
            s,
            "@orbital label={} n={} l={} m={} energy={:.16e} occupied={}",
            o.label,
            o.n,
            o.l,
            o.m,
            o.energy,
            o.occupied as u8
        );
        for (r, u) in grid.r().iter().zip(&o.radial) {
            let _ = writeln!(s, "{r:.16e} {u:.16e} {:.16e}", 0.0);
        }
    }
    s
}

pub fn read_orbitals(text: &str) -> Result<Vec<Orbital>> {
    let mut out: Vec<Orbital> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
        if let Some(rest) = line.strip_prefix("@orbital") {
            let mut o = Orbital {
                label: String::new(),
                n: 0,
                l: 0,
                m: 0,
                energy: 0.0,
                radial: Vec::new(),
                occupied: false,
            };
            for kv in rest.split_whitespace() {
                let (k, v) = kv.split_once('=').ok_or_else(|| perr("expected key=value"))?;
                match k {
                    "label" => o.label = v.to_string(),
                    "n" => o.n = v.parse().map_err(|_| perr("bad number"))?,
                    "l" => o.l = v.parse().map_err(|_| perr("bad number"))?,
                    "m" => o.m = v.parse().map_err(|_| perr("bad number"))?,
                    "energy" => o.energy = v.parse().map_err(|_| perr("bad number"))?,
                    "occupied" => o.occupied = v == "1",
                    _ => return Err(perr("unknown orbital header key")),
                }
            }
            out.push(o);
        } else {
            let o = out.last_mut().ok_or_else(|| perr("data before header"))?;
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr("bad number"))?;
            if cols.len() != 3 {
                return Err(perr("expected r re im"));
            }
            o.radial.push(cols[1]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let g = build_grid(100.0, 1000, Mapping::Uniform).unwrap();
        for (k, r) in g.r().iter().enumerate() {
            assert!((r - (k + 1) as f64 * 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_integrate_constant() {
        let g = build_grid(1.0, 16, Mapping::Uniform).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let g = build_grid(37.0, 123, Mapping::SqrtMapped).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 37.0).abs() < 1e-10 * 37.0);
    }

    #[test]
    fn sqrt_mapped_exponential() {
        let g = build_grid(200.0, 2000, Mapping::SqrtMapped).unwrap();
        assert!(g.r()[0] < 0.1);
        let want = 0.5 * (1.0 - (-400f64).exp());
        assert!((g.integrate(|r| (-2.0 * r).exp()) - want).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(0.0, 100, Mapping::Uniform).is_err());
        assert!(build_grid(10.0, 15, Mapping::Uniform).is_err());
    }

    #[test]
    fn madelung_filling() {
        assert_eq!(aufbau(2).unwrap(), vec![(1, 0)]);
        assert_eq!(aufbau(18).unwrap(), vec![(1, 0), (2, 0), (2, 1), (3, 0), (3, 1)]);
        let xe = aufbau(54).unwrap();
        assert_eq!(xe.len(), 11);
        assert_eq!(xe[10], (5, 1));
        assert!(aufbau(3).is_err());
    }
}
