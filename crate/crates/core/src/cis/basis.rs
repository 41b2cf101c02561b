use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Orbital, RadialGrid, VirtualSpace};

/// Which virtual magnetic numbers accompany each hole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MSelection {
    /// m_a = m_i only; sufficient for linear polarization from the ground state.
    Linear,
    /// Every m_a with |m_a| ≤ l_a.
    Full,
}

/// An active hole.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelIndex {
    /// Index into the occupied orbital list.
    pub orbital: usize,
    pub label: String,
    pub l: usize,
    pub m: i32,
    pub energy: f64,
}

/// Contiguous amplitudes α_i^a for one hole and one virtual (l, m).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub channel: usize,
    pub l: usize,
    pub m: i32,
    pub offset: usize,
    pub len: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Layout of the CIS vector: index 0 holds α₀, then one block per
/// (channel, l_a, m_a).
#[derive(Debug, Clone)]
pub struct CisBasis {
    grid: RadialGrid,
    occupied: Vec<Orbital>,
    virtuals: VirtualSpace,
    channels: Vec<ChannelIndex>,
    blocks: Vec<Block>,
    channel_blocks: Vec<Vec<usize>>,
    m_selection: MSelection,
    dim: usize,
}

impl CisBasis {
    /// `active` lists occupied-orbital indices that may host a hole; `None`
    /// activates every occupied orbital.
    pub fn new(
        grid: RadialGrid,
        occupied: Vec<Orbital>,
        virtuals: VirtualSpace,
        active: Option<&[usize]>,
        m_selection: MSelection,
    ) -> Result<Self> {
        let n = grid.n_points();
        if occupied.iter().any(|o| o.radial.len() != n)
            || virtuals.blocks.iter().any(|b| b.radial.nrows() != n)
        {
            return Err(Error::Contract("orbitals do not share the grid".into()));
        }
        let idx: Vec<usize> = match active {
            Some(a) => a.to_vec(),
            None => (0..occupied.len()).collect(),
        };
        if idx.is_empty() {
            return Err(Error::Config("no active channels".into()));
        }
        let mut channels = Vec::new();
        for &i in &idx {
            let o = occupied
                .get(i)
                .ok_or_else(|| Error::Config(format!("active channel {i} is not an occupied orbital")))?;
            channels.push(ChannelIndex { orbital: i, label: o.label.clone(), l: o.l, m: o.m, energy: o.energy });
        }
        let mut blocks = Vec::new();
        let mut channel_blocks = Vec::new();
        let mut offset = 1;
        for (c, ch) in channels.iter().enumerate() {
            let mut mine = Vec::new();
            for vb in &virtuals.blocks {
                let l = vb.l;
                let ms: Vec<i32> = match m_selection {
                    MSelection::Linear => {
                        if ch.m.unsigned_abs() as usize <= l {
                            vec![ch.m]
                        } else {
                            vec![]
                        }
                    }
                    MSelection::Full => (-(l as i32)..=(l as i32)).collect(),
                };
                for m in ms {
                    if vb.is_empty() {
                        continue;
                    }
                    mine.push(blocks.len());
                    blocks.push(Block { channel: c, l, m, offset, len: vb.len() });
                    offset += vb.len();
                }
            }
            channel_blocks.push(mine);
        }
        Ok(Self { grid, occupied, virtuals, channels, blocks, channel_blocks, m_selection, dim: offset })
    }

    /// Activates the occupied subshells whose labels (e.g. "2p") are listed.
    pub fn with_shells(
        grid: RadialGrid,
        occupied: Vec<Orbital>,
        virtuals: VirtualSpace,
        shells: &[String],
        m_selection: MSelection,
    ) -> Result<Self> {
        for s in shells {
            if !occupied.iter().any(|o| &o.label == s) {
                return Err(Error::Config(format!("active shell {s} is not occupied")));
            }
        }
        let idx: Vec<usize> = (0..occupied.len()).filter(|&i| shells.contains(&occupied[i].label)).collect();
        Self::new(grid, occupied, virtuals, Some(&idx), m_selection)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn occupied(&self) -> &[Orbital] {
        &self.occupied
    }

    pub fn virtuals(&self) -> &VirtualSpace {
        &self.virtuals
    }

    pub fn channels(&self) -> &[ChannelIndex] {
        &self.channels
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn m_selection(&self) -> MSelection {
        self.m_selection
    }

    pub fn channel_blocks(&self, c: usize) -> impl Iterator<Item = &Block> {
        self.channel_blocks[c].iter().map(move |&b| &self.blocks[b])
    }

    pub fn block_index(&self, c: usize, l: usize, m: i32) -> Option<usize> {
        self.channel_blocks[c].iter().copied().find(|&b| self.blocks[b].l == l && self.blocks[b].m == m)
    }

    /// Hole radial function of channel `c`.
    pub fn hole_radial(&self, c: usize) -> &[f64] {
        &self.occupied[self.channels[c].orbital].radial
    }

    pub fn max_hole_l(&self) -> usize {
        self.channels.iter().map(|c| c.l).max().unwrap_or(0)
    }
}

/// The CIS vector (α₀, α_i^a) tied to its basis.
#[derive(Debug, Clone)]
pub struct CisState {
    basis: Arc<CisBasis>,
    data: Vec<Complex64>,
}

impl CisState {
    pub fn zeros(basis: Arc<CisBasis>) -> Self {
        let n = basis.dim();
        Self { basis, data: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// The Hartree-Fock-like reference: α₀ = 1.
    pub fn ground(basis: Arc<CisBasis>) -> Self {
        let mut s = Self::zeros(basis);
        s.data[0] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn from_vec(basis: Arc<CisBasis>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != basis.dim() {
            return Err(Error::Contract(format!("vector length {} != basis dimension {}", data.len(), basis.dim())));
        }
        Ok(Self { basis, data })
    }

    pub fn basis(&self) -> &Arc<CisBasis> {
        &self.basis
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn alpha0(&self) -> Complex64 {
        self.data[0]
    }

    pub fn block(&self, b: usize) -> &[Complex64] {
        &self.data[self.basis.blocks()[b].range()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn channel_population(&self, c: usize) -> f64 {
        self.basis.channel_blocks(c).map(|b| self.data[b.range()].iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// χ_i resolved per virtual (l, m): radial samples Σ_a α_i^a u_a(r).
#[derive(Debug, Clone, PartialEq)]
pub struct PartialWave {
    pub l: usize,
    pub m: i32,
    pub radial: Vec<Complex64>,
}

pub fn channel_wavefunction(state: &CisState, c: usize) -> Vec<PartialWave> {
    let basis = state.basis();
    let n = basis.grid().n_points();
    basis
        .channel_blocks(c)
        .map(|b| {
            let u = &basis.virtuals().block(b.l).radial;
            let amps = &state.data()[b.range()];
            let mut radial = vec![Complex64::new(0.0, 0.0); n];
            for (j, a) in amps.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (out, v) in radial.iter_mut().zip(u.column(j).iter()) {
                    *out += a * v;
                }
            }
            PartialWave { l: b.l, m: b.m, radial }
        })
        .collect()
}

/// Σ_{l,m} Σ_k w_k |χ(r_k)|².
pub fn wave_norm_sqr(grid: &RadialGrid, waves: &[PartialWave]) -> f64 {
    waves
        .iter()
        .map(|pw| pw.radial.iter().zip(grid.weights()).map(|(z, w)| w * z.norm_sqr()).sum::<f64>())
        .sum()
}
