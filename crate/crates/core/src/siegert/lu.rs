//! Block-sparse LU of a shifted CIS Hamiltonian. Blocks follow the basis
//! layout (α₀ first, then one block per channel and virtual (l, m)); fill-in
//! is created only where elimination needs it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cis::CisHamiltonian;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

type Block = Option<DMatrix<Complex64>>;

/// H(F) - σ stored as dense blocks with a sparsity pattern.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub offsets: Vec<usize>,
    pub blocks: Vec<Vec<Block>>,
}

impl BlockMatrix {
    /// Extracts H(coupling) - σ column by column through the operator.
    pub fn from_operator(h: &CisHamiltonian, coupling: f64, sigma: Complex64) -> Self {
        let basis = h.basis();
        let mut offsets = vec![0usize, 1];
        for b in basis.blocks() {
            offsets.push(b.offset + b.len);
        }
        let nb = offsets.len() - 1;
        let n = h.dim();
        let owner: Vec<usize> = (0..nb).flat_map(|b| std::iter::repeat_n(b, offsets[b + 1] - offsets[b])).collect();
        let mut blocks: Vec<Vec<Block>> = vec![vec![None; nb]; nb];
        let mut e = vec![ZERO; n];
        let mut y = vec![ZERO; n];
        for col in 0..n {
            e[col] = Complex64::new(1.0, 0.0);
            h.apply(coupling, &e, &mut y);
            e[col] = ZERO;
            y[col] -= sigma;
            let cb = owner[col];
            let c = col - offsets[cb];
            for rb in 0..nb {
                let rows = &y[offsets[rb]..offsets[rb + 1]];
                if rows.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    continue;
                }
                let m = blocks[rb][cb].get_or_insert_with(|| {
                    DMatrix::zeros(offsets[rb + 1] - offsets[rb], offsets[cb + 1] - offsets[cb])
                });
                m.column_mut(c).copy_from_slice(rows);
            }
        }
        Self { offsets, blocks }
    }

    pub fn n_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }
}

/// Factorization L U with dense inverted pivot blocks.
#[derive(Debug, Clone)]
pub struct BlockLu {
    offsets: Vec<usize>,
    /// Strictly lower blocks L_ik (i > k).
    lower: Vec<Vec<(usize, DMatrix<Complex64>)>>,
    /// Strictly upper blocks U_kj (j > k).
    upper: Vec<Vec<(usize, DMatrix<Complex64>)>>,
    pivot_inv: Vec<DMatrix<Complex64>>,
}

impl BlockLu {
    pub fn factor(mut a: BlockMatrix) -> Result<Self> {
        let nb = a.n_blocks();
        let mut lower = vec![Vec::new(); nb];
        let mut upper = vec![Vec::new(); nb];
        let mut pivot_inv = Vec::with_capacity(nb);
        for k in 0..nb {
            let akk = a.blocks[k][k]
                .take()
                .ok_or_else(|| Error::Numerical(format!("block LU: empty pivot block {k}")))?;
            let inv = akk
                .lu()
                .try_inverse()
                .ok_or_else(|| Error::Numerical(format!("block LU: singular pivot block {k}")))?;
            let ups: Vec<(usize, DMatrix<Complex64>)> =
                (k + 1..nb).filter_map(|j| a.blocks[k][j].take().map(|m| (j, m))).collect();
            for i in k + 1..nb {
                let Some(aik) = a.blocks[i][k].take() else { continue };
                let lik = &aik * &inv;
                for (j, ukj) in &ups {
                    let upd = &lik * ukj;
                    match &mut a.blocks[i][*j] {
                        Some(m) => *m -= upd,
                        slot @ None => *slot = Some(-upd),
                    }
                }
                lower[i].push((k, lik));
            }
            upper[k] = ups;
            pivot_inv.push(inv);
        }
        Ok(Self { offsets: a.offsets, lower, upper, pivot_inv })
    }

    /// x = (H - σ)⁻¹ b.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let nb = self.pivot_inv.len();
        let off = &self.offsets;
        let mut y = b.to_vec();
        for i in 0..nb {
            for (k, lik) in &self.lower[i] {
                let yk = nalgebra::DVector::from_column_slice(&y[off[*k]..off[k + 1]]);
                let d = lik * yk;
                for (t, v) in y[off[i]..off[i + 1]].iter_mut().zip(d.iter()) {
                    *t -= v;
                }
            }
        }
        let mut x = vec![ZERO; b.len()];
        for k in (0..nb).rev() {
            let mut rhs = nalgebra::DVector::from_column_slice(&y[off[k]..off[k + 1]]);
            for (j, ukj) in &self.upper[k] {
                let xj = nalgebra::DVector::from_column_slice(&x[off[*j]..off[j + 1]]);
                rhs -= ukj * xj;
            }
            let xk = &self.pivot_inv[k] * rhs;
            x[off[k]..off[k + 1]].copy_from_slice(xk.as_slice());
        }
        x
    }
}
