//! Eigen-decomposition of the single-excitation Hamiltonian.
//!
//! Two solvers produce the same [`SpectralDecomposition`]: a general dense
//! symmetric solver ([`diagonalize_dense`]) and an `O(N²)` secular-equation
//! solver for the `J = 0` arrowhead structure ([`diagonalize_arrowhead`]).

mod arrowhead;
mod dense;

pub use arrowhead::{
    arrowhead_eigen, arrowhead_eigenvalues, arrowhead_spectrum, diagonalize_arrowhead,
    ArrowheadEigen,
};
pub use dense::{dense_eigenvalues, diagonalize_dense};

use crate::model::{HamiltonianMatrix, ModelParams};

/// Emitter norms below this are treated as a pure photon state.
pub const PURE_PHOTON_NORM: f64 = 1e-14;

/// Eigenpairs in ascending energy order with derived per-state weights.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    energies: Vec<f64>,
    /// Column-major: state `α` occupies `vectors[α·dim .. (α+1)·dim]`.
    vectors: Vec<f64>,
    photon_weights: Vec<f64>,
    emitter_norms: Vec<f64>,
}

impl SpectralDecomposition {
    /// Build from unsorted eigenpairs (`vectors` column-major, one column per energy).
    pub(crate) fn from_pairs(dim: usize, energies: Vec<f64>, vectors: Vec<f64>) -> Self {
        debug_assert_eq!(energies.len(), dim);
        debug_assert_eq!(vectors.len(), dim * dim);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let sorted_already = order.iter().enumerate().all(|(k, &o)| k == o);
        let (energies, vectors) = if sorted_already {
            (energies, vectors)
        } else {
            let mut e = Vec::with_capacity(dim);
            let mut v = Vec::with_capacity(dim * dim);
            for &o in &order {
                e.push(energies[o]);
                v.extend_from_slice(&vectors[o * dim..(o + 1) * dim]);
            }
            (e, v)
        };
        let photon = dim - 1;
        let mut photon_weights = Vec::with_capacity(dim);
        let mut emitter_norms = Vec::with_capacity(dim);
        for col in vectors.chunks_exact(dim) {
            photon_weights.push(col[photon] * col[photon]);
            emitter_norms.push(col[..photon].iter().map(|x| x * x).sum());
        }
        Self {
            dim,
            energies,
            vectors,
            photon_weights,
            emitter_norms,
        }
    }

    /// Number of eigenstates, `N + 1`.
    pub fn num_states(&self) -> usize {
        self.dim
    }

    pub fn num_emitters(&self) -> usize {
        self.dim - 1
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Eigenvector `ψ_α` in the `|i,0⟩ / |G,1⟩` basis.
    pub fn vector(&self, alpha: usize) -> &[f64] {
        &self.vectors[alpha * self.dim..(alpha + 1) * self.dim]
    }

    /// Raw component `⟨i|ψ_α⟩`.
    #[inline]
    pub fn component(&self, alpha: usize, i: usize) -> f64 {
        self.vectors[alpha * self.dim + i]
    }

    /// `PW_α = |⟨G,1|ψ_α⟩|²`.
    pub fn photon_weights(&self) -> &[f64] {
        &self.photon_weights
    }

    /// `𝒩_α = 1 − PW_α`, accumulated from the emitter components.
    pub fn emitter_norms(&self) -> &[f64] {
        &self.emitter_norms
    }

    pub fn is_pure_photon(&self, alpha: usize) -> bool {
        self.emitter_norms[alpha] < PURE_PHOTON_NORM
    }

    /// Normalized emitter amplitude `a_{αj} = ⟨j,0|ψ_α⟩/√𝒩_α`; zero for a pure photon state.
    pub fn amplitude(&self, alpha: usize, j: usize) -> f64 {
        if self.is_pure_photon(alpha) {
            0.0
        } else {
            self.component(alpha, j) / self.emitter_norms[alpha].sqrt()
        }
    }

    /// `|a_{αj}|²` for all emitters `j`.
    pub fn emitter_weights(&self, alpha: usize) -> Vec<f64> {
        let v = self.vector(alpha);
        if self.is_pure_photon(alpha) {
            return vec![0.0; self.dim - 1];
        }
        let inv = 1.0 / self.emitter_norms[alpha];
        v[..self.dim - 1].iter().map(|x| x * x * inv).collect()
    }

    /// `max |VᵀV − 𝟙|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim {
            let va = self.vector(a);
            for b in a..self.dim {
                let dot: f64 = va.iter().zip(self.vector(b)).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max_α ‖Hψ_α − E_αψ_α‖`.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            let v = self.vector(a);
            let mut r2 = 0.0;
            for i in 0..n {
                let hv: f64 = h.row(i).iter().zip(v).map(|(x, y)| x * y).sum();
                r2 += (hv - self.energies[a] * v[i]).powi(2);
            }
            worst = worst.max(r2.sqrt());
        }
        worst
    }
}

/// Indices (ascending energy) of the dark states.
///
/// With a cavity coupling the two states of largest photon weight are the
/// polaritons and are excluded, ties broken towards the spectral edges. With
/// `g_c = 0` there are no polaritons: only the pure photon state is removed
/// and all `N` emitter eigenstates are returned.
pub fn dark_state_indices(decomp: &SpectralDecomposition, params: &ModelParams) -> Vec<usize> {
    let n = decomp.num_states();
    if params.collective_coupling == 0.0 {
        return (0..n).filter(|&a| !decomp.is_pure_photon(a)).collect();
    }
    let pw = decomp.photon_weights();
    let center = 0.5 * (n as f64 - 1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pw[b].total_cmp(&pw[a]).then_with(|| {
            let da = (a as f64 - center).abs();
            let db = (b as f64 - center).abs();
            db.total_cmp(&da)
        })
    });
    let excluded = [order[0], order[1]];
    (0..n)
        .filter(|a| !excluded.contains(a) && !decomp.is_pure_photon(*a))
        .collect()
}
