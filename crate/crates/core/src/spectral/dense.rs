use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, Par};

use super::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::model::HamiltonianMatrix;

fn to_faer(h: &HamiltonianMatrix) -> Mat<f64> {
    let n = h.dim();
    let data = h.as_row_major();
    Mat::from_fn(n, n, |i, j| data[i * n + j])
}

fn failure(h: &HamiltonianMatrix, err: impl std::fmt::Debug) -> Error {
    Error::Computation(format!(
        "dense symmetric eigensolver did not converge ({err:?}); dim = {}, ‖H‖_F = {:.6e}, ‖H‖_∞ = {:.6e}",
        h.dim(),
        h.norm_frobenius(),
        h.norm_inf()
    ))
}

/// Sequential LAPACK-style symmetric EVD. Parallelism lives at the realization
/// level, and a fixed operation order keeps results independent of the pool size.
fn evd(h: &HamiltonianMatrix, vectors: bool) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    let n = h.dim();
    let a = to_faer(h);
    let mut s = Diag::<f64>::zeros(n);
    let mut u = vectors.then(|| Mat::<f64>::zeros(n, n));
    let compute = if vectors {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<f64>(n, compute, Par::Seq, Default::default()));
    self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| failure(h, e))?;
    let s = s.column_vector();
    Ok(((0..n).map(|k| s[k]).collect(), u))
}

/// Full eigen-decomposition through a dense symmetric solver.
pub fn diagonalize_dense(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let (energies, u) = evd(h, true)?;
    let u = u.expect("eigenvectors requested");
    let mut vectors = Vec::with_capacity(n * n);
    for col in 0..n {
        vectors.extend((0..n).map(|row| u[(row, col)]));
    }
    Ok(SpectralDecomposition::from_pairs(n, energies, vectors))
}

/// Eigenvalues only, ascending.
pub fn dense_eigenvalues(h: &HamiltonianMatrix) -> Result<Vec<f64>> {
    let mut e = evd(h, false)?.0;
    e.sort_by(f64::total_cmp);
    Ok(e)
}
