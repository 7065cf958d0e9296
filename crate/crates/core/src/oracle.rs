//! Brute-force reference: the Hamiltonian written out as a matrix in each
//! block of fixed total quanta and exponentiated by eigendecomposition.
//!
//! Nothing here goes through the rotation operator; only the parameter and
//! block types are shared with the analytic path.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::EvolutionOperator;
use crate::params::{derive_mixing, CouplingParams};
use crate::state::BlockMatrix;

/// `H/ħ` restricted to `n_total` quanta, index `l ↦ (n − l, l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianBlock {
    pub n_total: usize,
    pub matrix: DMatrix<f64>,
}

pub fn build_block(params: &CouplingParams, n_total: usize) -> HamiltonianBlock {
    let dim = n_total + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for l in 0..dim {
        let (n1, n2) = (n_total - l, l);
        h[(l, l)] = n1 as f64 * params.omega1 + n2 as f64 * params.omega2;
        if n1 >= 1 {
            // ⟨n₁−1, n₂+1| a₁a₂⁺ |n₁, n₂⟩ = √(n₁(n₂+1))
            let v = params.lambda * ((n1 * (n2 + 1)) as f64).sqrt();
            h[(l + 1, l)] = v;
            h[(l, l + 1)] = v;
        }
    }
    HamiltonianBlock { n_total, matrix: h }
}

fn eigen(block: &HamiltonianBlock) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(block.matrix.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure(block.n_total))
}

/// Eigenvalues in ascending order.
pub fn spectrum(block: &HamiltonianBlock) -> Result<Vec<f64>> {
    let mut ev: Vec<f64> = eigen(block)?.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `e^{−iHt} = V diag(e^{−iεⱼt}) Vᵀ`.
pub fn expm_evolution(block: &HamiltonianBlock, t: f64) -> Result<BlockMatrix> {
    let eig = eigen(block)?;
    let dim = block.n_total + 1;
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phased = DMatrix::from_fn(dim, dim, |i, j| v[(i, j)] * Complex64::from_polar(1.0, -eig.eigenvalues[j] * t));
    Ok(BlockMatrix::new(block.n_total, phased * v.transpose()))
}

/// Largest element-wise deviation between the analytic `U(t)` block and
/// the exponentiated Hamiltonian over `t_grid`.
pub fn compare_to_analytic(params: &CouplingParams, n_total: usize, t_grid: &[f64]) -> Result<f64> {
    assert!(!t_grid.is_empty(), "time grid must be nonempty");
    let evo = EvolutionOperator::new(*params, n_total)?;
    let h = build_block(params, n_total);
    let mut worst = 0.0f64;
    for &t in t_grid {
        let exact = expm_evolution(&h, t)?;
        worst = worst.max(evo.ut_block(n_total, t).max_abs_diff(&exact));
    }
    Ok(worst)
}

/// Largest deviation between the block spectrum and the normal-mode
/// energies `k₁ω₁' + k₂ω₂'`, `k₁ + k₂ = n_total`.
pub fn spectrum_deviation(params: &CouplingParams, n_total: usize) -> Result<f64> {
    let mix = derive_mixing(params)?;
    let mut expected: Vec<f64> = (0..=n_total)
        .map(|k2| (n_total - k2) as f64 * mix.omega1p + k2 as f64 * mix.omega2p)
        .collect();
    expected.sort_by(f64::total_cmp);
    let found = spectrum(&build_block(params, n_total))?;
    Ok(found.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
