//! Two-mode Fock states stored block-wise by total quanta.
//!
//! Throughout the crate the slot `l` of block `n` is the basis vector
//! `|n₁, n₂⟩ = |n - l, l⟩`, i.e. mode-1 occupation descending. Every
//! [`BlockMatrix`] uses the same convention for rows and columns.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// One of the two oscillators.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    /// Occupation of this mode for slot `l` of block `n_total`.
    pub fn occupation(self, n_total: usize, l: usize) -> usize {
        match self {
            Mode::One => n_total - l,
            Mode::Two => l,
        }
    }
}

/// Amplitudes `C^{n₁,n₂}` for all `n₁ + n₂ ≤ n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    blocks: Vec<Vec<Complex64>>,
}

impl TwoModeState {
    /// All-zero amplitudes (not normalized).
    pub fn zeros(n_max: usize) -> Self {
        Self {
            blocks: (0..=n_max).map(|n| vec![Complex64::new(0.0, 0.0); n + 1]).collect(),
        }
    }

    /// `|0, 0⟩` truncated at `n_max`.
    pub fn vacuum(n_max: usize) -> Self {
        Self::basis(n_max, 0, 0).expect("vacuum fits every truncation")
    }

    /// The Fock basis vector `|n1, n2⟩`.
    pub fn basis(n_max: usize, n1: usize, n2: usize) -> Result<Self> {
        let mut st = Self::zeros(n_max);
        st.set(n1, n2, Complex64::new(1.0, 0.0))?;
        Ok(st)
    }

    /// Builds a state from per-block amplitude vectors; block `n` must have
    /// length `n + 1`.
    pub fn from_blocks(blocks: Vec<Vec<Complex64>>) -> Option<Self> {
        if blocks.is_empty() || blocks.iter().enumerate().any(|(n, b)| b.len() != n + 1) {
            return None;
        }
        Some(Self { blocks })
    }

    pub fn n_max(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, n_total: usize) -> &[Complex64] {
        &self.blocks[n_total]
    }

    pub fn block_mut(&mut self, n_total: usize) -> &mut [Complex64] {
        &mut self.blocks[n_total]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[Complex64]> {
        self.blocks.iter().map(Vec::as_slice)
    }

    /// Amplitude `C^{n1,n2}`; zero outside the truncation.
    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        self.blocks
            .get(n1 + n2)
            .map_or(Complex64::new(0.0, 0.0), |b| b[n2])
    }

    pub fn set(&mut self, n1: usize, n2: usize, value: Complex64) -> Result<()> {
        let n_max = self.n_max();
        let block = self
            .blocks
            .get_mut(n1 + n2)
            .ok_or(Error::TruncationTooSmall { needed: n1 + n2, n_max })?;
        block[n2] = value;
        Ok(())
    }

    /// `√(Σ |C|²)`.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().flatten().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.iter().map(|z| z * factor).collect()).collect(),
        }
    }

    /// `⟨self|other⟩`, taken over the common truncation.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest total-quanta block carrying nonzero weight.
    pub fn support(&self) -> Option<usize> {
        self.blocks.iter().rposition(|b| b.iter().any(|z| z.norm_sqr() > 0.0))
    }

    /// Number distribution `P(n)` of one mode.
    pub fn number_distribution(&self, mode: Mode) -> Vec<f64> {
        let mut p = vec![0.0; self.n_max() + 1];
        for (n, block) in self.blocks.iter().enumerate() {
            for (l, z) in block.iter().enumerate() {
                p[mode.occupation(n, l)] += z.norm_sqr();
            }
        }
        p
    }
}

/// `|φ⟩ ⊗ |0⟩` with `φ` normalized; `phi[n]` is the amplitude of `|n⟩`.
pub fn make_product_state(phi: &[Complex64], n_max: usize) -> Result<TwoModeState> {
    let norm = phi.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let needed = phi.len().saturating_sub(1);
    if needed > n_max {
        return Err(Error::TruncationTooSmall { needed, n_max });
    }
    let mut st = TwoModeState::zeros(n_max);
    for (n, &a) in phi.iter().enumerate() {
        st.blocks[n][0] = a / norm;
    }
    Ok(st)
}

/// `|0⟩ ⊗ |φ⟩` with `φ` normalized: the target of a complete exchange.
pub fn make_swapped_product_state(phi: &[Complex64], n_max: usize) -> Result<TwoModeState> {
    let st = make_product_state(phi, n_max)?;
    let mut out = TwoModeState::zeros(n_max);
    for n in 0..=n_max {
        out.blocks[n][n] = st.blocks[n][0];
    }
    Ok(out)
}

/// Free function form of [`TwoModeState::norm`].
pub fn norm(state: &TwoModeState) -> f64 {
    state.norm()
}

/// Complex square matrix acting inside the block of `n_total` quanta.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    pub n_total: usize,
    pub entries: DMatrix<Complex64>,
}

impl BlockMatrix {
    pub fn new(n_total: usize, entries: DMatrix<Complex64>) -> Self {
        assert_eq!(entries.nrows(), n_total + 1);
        assert_eq!(entries.ncols(), n_total + 1);
        Self { n_total, entries }
    }

    pub fn identity(n_total: usize) -> Self {
        Self::new(n_total, DMatrix::identity(n_total + 1, n_total + 1))
    }

    pub fn dim(&self) -> usize {
        self.n_total + 1
    }

    /// Entry for row `(n − l_row, l_row)` and column `(n − l_col, l_col)`.
    pub fn get(&self, l_row: usize, l_col: usize) -> Complex64 {
        self.entries[(l_row, l_col)]
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n_total, other.n_total);
        Self::new(self.n_total, &self.entries * &other.entries)
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.n_total, self.entries.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.n_total, self.entries.transpose())
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.entries[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `max |Mᵢⱼ − Nᵢⱼ|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |(M†M − I)ᵢⱼ|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.n_total))
    }
}
