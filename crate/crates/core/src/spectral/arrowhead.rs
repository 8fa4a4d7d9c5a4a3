//! Eigen-decomposition of real symmetric arrowhead matrices
//!
//! ```text
//!     [ d_1           z_1 ]
//!     [      ⋱         ⋮  ]
//!     [          d_n  z_n ]
//!     [ z_1  …   z_n   α  ]
//! ```
//!
//! After deflation (vanishing `z_j`, clusters of equal `d_j`) the eigenvalues
//! are the roots of the secular function `f(λ) = λ − α − Σ z_j²/(λ − d_j)`,
//! exactly one in every gap between consecutive poles plus one on each side.
//! Every root is stored relative to its nearest pole so that the differences
//! `λ − d_j` entering the eigenvectors are computed without cancellation, and
//! the coupling vector is recomputed from the roots (Löwner's formula) so that
//! the closed-form eigenvectors `(z_j/(λ − d_j), …, 1)` are orthogonal to
//! working precision. Total cost is `O(n²)`.

use super::SpectralDecomposition;
use crate::error::{usage, Error, Result};
use crate::model::{DisorderRealization, ModelParams};
use crate::numeric::CompensatedSum;

const EPS: f64 = f64::EPSILON;
/// Relative gap below which neighbouring diagonal entries are merged.
const CLUSTER_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

/// Eigenvalues (ascending) and column-major eigenvectors of an arrowhead matrix.
/// The apex is the last row of every eigenvector.
#[derive(Debug, Clone)]
pub struct ArrowheadEigen {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl ArrowheadEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn into_decomposition(self) -> SpectralDecomposition {
        let dim = self.dim();
        SpectralDecomposition::from_pairs(dim, self.eigenvalues, self.vectors)
    }
}

/// A pole of the reduced (deflated) secular problem.
struct Pole {
    value: f64,
    coupling: f64,
    /// Original indices and the unit direction they carry.
    members: Vec<(usize, f64)>,
}

/// Root `λ = poles[origin].value + offset`.
#[derive(Clone, Copy)]
struct Root {
    origin: usize,
    offset: f64,
}

struct Deflated {
    poles: Vec<Pole>,
    /// Decoupled eigenpairs: eigenvalue and sparse eigenvector over emitter indices.
    decoupled: Vec<(f64, Vec<(usize, f64)>)>,
}

fn validate(diag: &[f64], coupling: &[f64], apex: f64) -> Result<()> {
    if diag.len() != coupling.len() {
        return usage(format!(
            "arrowhead diagonal has {} entries but coupling has {}",
            diag.len(),
            coupling.len()
        ));
    }
    if diag.iter().chain(coupling).any(|v| !v.is_finite()) || !apex.is_finite() {
        return usage("arrowhead entries must be finite");
    }
    Ok(())
}

fn deflate(diag: &[f64], coupling: &[f64], apex: f64) -> Deflated {
    let n = diag.len();
    let znorm = coupling.iter().map(|z| z * z).sum::<f64>().sqrt();
    let dmax = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let scale = dmax.max(apex.abs()).max(znorm);
    let z_tol = 8.0 * EPS * scale;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let spread = match (order.first(), order.last()) {
        (Some(&a), Some(&b)) => diag[b] - diag[a],
        _ => 0.0,
    };
    let d_tol = CLUSTER_TOL * spread.max(EPS * scale);

    let mut decoupled = Vec::new();
    let mut poles: Vec<Pole> = Vec::new();
    let mut cluster: Vec<usize> = Vec::new();

    let flush = |cluster: &mut Vec<usize>, poles: &mut Vec<Pole>, decoupled: &mut Vec<_>| {
        match cluster.len() {
            0 => {}
            1 => {
                let j = cluster[0];
                poles.push(Pole {
                    value: diag[j],
                    coupling: coupling[j],
                    members: vec![(j, 1.0)],
                });
            }
            m => {
                let r = cluster.iter().map(|&j| coupling[j].powi(2)).sum::<f64>().sqrt();
                let u: Vec<f64> = cluster.iter().map(|&j| coupling[j] / r).collect();
                let mean = cluster.iter().map(|&j| diag[j]).sum::<f64>() / m as f64;
                // Householder reflector mapping u onto ∓e₀; its remaining columns
                // span the complement of u inside the cluster.
                let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
                let mut v = u.clone();
                v[0] += sign;
                let vv: f64 = v.iter().map(|x| x * x).sum();
                for k in 1..m {
                    let col: Vec<(usize, f64)> = (0..m)
                        .map(|i| {
                            let delta = if i == k { 1.0 } else { 0.0 };
                            (cluster[i], delta - 2.0 * v[i] * v[k] / vv)
                        })
                        .collect();
                    let rayleigh = col.iter().map(|&(j, c)| c * c * diag[j]).sum::<f64>();
                    decoupled.push((rayleigh, col));
                }
                poles.push(Pole {
                    value: mean,
                    coupling: r,
                    members: cluster.iter().copied().zip(u).collect(),
                });
            }
        }
        cluster.clear();
    };

    for &j in &order {
        if coupling[j].abs() <= z_tol {
            decoupled.push((diag[j], vec![(j, 1.0)]));
            continue;
        }
        if let Some(&last) = cluster.last() {
            if diag[j] - diag[last] > d_tol {
                flush(&mut cluster, &mut poles, &mut decoupled);
            }
        }
        cluster.push(j);
    }
    flush(&mut cluster, &mut poles, &mut decoupled);
    Deflated { poles, decoupled }
}

/// Secular function and its pieces at `x` (relative to pole `origin`).
struct SecularEval {
    f: f64,
    /// Sum of terms from poles at or left of the left bracketing pole.
    psi_left: f64,
    dpsi_left: f64,
    psi_right: f64,
    dpsi_right: f64,
    /// Bound on the rounding error of `f`.
    err: f64,
}

fn eval_secular(
    values: &[f64],
    z2: &[f64],
    origin: f64,
    shift: f64,
    split: usize,
    x: f64,
) -> SecularEval {
    let mut left = CompensatedSum::default();
    let mut right = CompensatedSum::default();
    let (mut dl, mut dr, mut mag) = (0.0, 0.0, 0.0);
    for (j, (&d, &w)) in values.iter().zip(z2).enumerate() {
        let den = x - (d - origin);
        let t = w / den;
        mag += t.abs();
        if j < split {
            left.add(-t);
            dl += t / den;
        } else {
            right.add(-t);
            dr += t / den;
        }
    }
    let (pl, pr) = (left.value(), right.value());
    let lin = shift + x;
    SecularEval {
        f: lin + pl + pr,
        psi_left: pl,
        dpsi_left: dl,
        psi_right: pr,
        dpsi_right: dr,
        err: 4.0 * EPS * (mag + lin.abs() + shift.abs()),
    }
}

/// Solve for the root bracketed by poles `left`/`right` (either may be absent
/// for the outermost roots), returning it relative to the pole `origin`.
#[allow(clippy::too_many_arguments)]
fn solve_root(
    values: &[f64],
    z2: &[f64],
    apex: f64,
    origin: usize,
    left: Option<usize>,
    right: Option<usize>,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let o = values[origin];
    let shift = o - apex;
    let split = left.map_or(0, |l| l + 1);
    let p_left = left.map(|l| values[l] - o);
    let p_right = right.map(|r| values[r] - o);

    let mut x = 0.5 * (lo + hi);
    for iter in 0..MAX_ITER {
        let ev = eval_secular(values, z2, o, shift, split, x);
        if ev.f == 0.0 || ev.f.abs() <= ev.err {
            return Ok(x);
        }
        if ev.f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * EPS * lo.abs().max(hi.abs()) {
            return Ok(x);
        }

        // Rational model: one pole per side matched in value and slope. The unit
        // slope of the linear term is lent to the farther pole between two
        // poles, and kept exactly when a side has no pole.
        let step = match (p_left, p_right) {
            (Some(pl), Some(pr)) => {
                let (ul, ur) = (x - pl, x - pr);
                let (extra_l, extra_r) = if ul > -ur { (1.0, 0.0) } else { (0.0, 1.0) };
                let sl = (ev.dpsi_left + extra_l) * ul * ul;
                let sr = (ev.dpsi_right + extra_r) * ur * ur;
                let c = ev.f + sl / ul + sr / ur;
                let b = c * (ul + ur) - sl - sr;
                quadratic_step(c, b, ul * ur * ev.f, -ul, -ur)
            }
            (None, Some(pr)) => {
                let ur = x - pr;
                let sr = ev.dpsi_right * ur * ur;
                let c = shift + x + ev.psi_right + sr / ur;
                quadratic_step(1.0, c + ur, ur * ev.f, f64::NEG_INFINITY, -ur)
            }
            (Some(pl), None) => {
                let ul = x - pl;
                let sl = ev.dpsi_left * ul * ul;
                let c = shift + x + ev.psi_left + sl / ul;
                quadratic_step(1.0, c + ul, ul * ev.f, -ul, f64::INFINITY)
            }
            (None, None) => unreachable!("a root always has at least one neighbouring pole"),
        };
        let candidate = step.map(|s| x + s);
        let next = match candidate {
            Some(c) if c > lo && c < hi && (iter < 40 || iter % 2 == 0) => c,
            _ => 0.5 * (lo + hi),
        };
        if (next - x).abs() <= 2.0 * EPS * next.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Computation(format!(
        "secular root near pole {origin} did not converge: bracket [{lo:e}, {hi:e}] relative to {o}"
    )))
}

/// Root of `a η² + b η + c = 0` lying in `(min, max)`, if any.
fn quadratic_step(a: f64, b: f64, c: f64, min: f64, max: f64) -> Option<f64> {
    let inside = |e: f64| e.is_finite() && e > min && e < max;
    if a == 0.0 {
        let e = -c / b;
        return inside(e).then_some(e);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = (q / a, if q != 0.0 { c / q } else { f64::NAN });
    match (inside(r1), inside(r2)) {
        (true, true) => Some(if r1.abs() < r2.abs() { r1 } else { r2 }),
        (true, false) => Some(r1),
        (false, true) => Some(r2),
        (false, false) => None,
    }
}

fn solve_roots(poles: &[Pole], apex: f64) -> Result<Vec<Root>> {
    let k = poles.len();
    let values: Vec<f64> = poles.iter().map(|p| p.value).collect();
    let z2: Vec<f64> = poles.iter().map(|p| p.coupling * p.coupling).collect();
    let znorm = z2.iter().sum::<f64>().sqrt();
    let mut roots = Vec::with_capacity(k + 1);

    // Below the lowest pole.
    {
        let mut lo = (apex - values[0]).min(0.0) - znorm;
        lo -= 1e-3 * lo.abs().max(EPS * values[0].abs()).max(f64::MIN_POSITIVE);
        let offset = solve_root(&values, &z2, apex, 0, None, Some(0), lo, 0.0)?;
        roots.push(Root { origin: 0, offset });
    }
    // Interior gaps.
    for r in 1..k {
        let (a, b) = (r - 1, r);
        let gap = values[b] - values[a];
        let mid = 0.5 * gap;
        let ev = eval_secular(&values, &z2, values[a], values[a] - apex, b, mid);
        let root = if ev.f >= 0.0 {
            let offset = solve_root(&values, &z2, apex, a, Some(a), Some(b), 0.0, mid)?;
            Root { origin: a, offset }
        } else {
            let offset = solve_root(&values, &z2, apex, b, Some(a), Some(b), -mid, 0.0)?;
            Root { origin: b, offset }
        };
        roots.push(root);
    }
    // Above the highest pole.
    {
        let last = k - 1;
        let mut hi = (apex - values[last]).max(0.0) + znorm;
        hi += 1e-3 * hi.abs().max(EPS * values[last].abs()).max(f64::MIN_POSITIVE);
        let offset = solve_root(&values, &z2, apex, last, Some(last), None, 0.0, hi)?;
        roots.push(Root { origin: last, offset });
    }
    Ok(roots)
}

/// `d_j − λ_r`, computed from the root's pole-relative representation.
#[inline]
fn pole_minus_root(values: &[f64], j: usize, root: Root) -> f64 {
    (values[j] - values[root.origin]) - root.offset
}

/// Coupling magnitudes for which the computed roots are the exact spectrum.
fn lowner_couplings(poles: &[Pole], roots: &[Root]) -> Vec<f64> {
    let values: Vec<f64> = poles.iter().map(|p| p.value).collect();
    let k = poles.len();
    (0..k)
        .map(|j| {
            let dj = values[j];
            let mut prod =
                pole_minus_root(&values, j, roots[j]) * (-pole_minus_root(&values, j, roots[j + 1]));
            for l in 0..j {
                prod *= pole_minus_root(&values, j, roots[l]) / (dj - values[l]);
            }
            for l in j + 1..k {
                prod *= pole_minus_root(&values, j, roots[l + 1]) / (dj - values[l]);
            }
            prod.max(0.0).sqrt().copysign(poles[j].coupling)
        })
        .collect()
}

/// Eigenvalues and eigenvectors of the arrowhead matrix with diagonal `diag`,
/// border `coupling` and apex `apex`.
pub fn arrowhead_eigen(diag: &[f64], coupling: &[f64], apex: f64) -> Result<ArrowheadEigen> {
    validate(diag, coupling, apex)?;
    let n = diag.len();
    let dim = n + 1;
    let Deflated { poles, decoupled } = deflate(diag, coupling, apex);

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim);
    for (value, members) in decoupled {
        let mut v = vec![0.0; dim];
        for (j, c) in members {
            v[j] = c;
        }
        pairs.push((value, v));
    }

    if poles.is_empty() {
        let mut v = vec![0.0; dim];
        v[n] = 1.0;
        pairs.push((apex, v));
    } else {
        let roots = solve_roots(&poles, apex)?;
        let zhat = lowner_couplings(&poles, &roots);
        let values: Vec<f64> = poles.iter().map(|p| p.value).collect();
        let mut y = vec![0.0; poles.len()];
        for &root in &roots {
            let mut norm2 = 1.0;
            for (j, yj) in y.iter_mut().enumerate() {
                *yj = -zhat[j] / pole_minus_root(&values, j, root);
                norm2 += *yj * *yj;
            }
            let inv = 1.0 / norm2.sqrt();
            let mut v = vec![0.0; dim];
            for (pole, &yj) in poles.iter().zip(&y) {
                for &(idx, u) in &pole.members {
                    v[idx] = yj * u * inv;
                }
            }
            v[n] = inv;
            pairs.push((values[root.origin] + root.offset, v));
        }
    }

    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut eigenvalues = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim * dim);
    for (e, v) in pairs {
        eigenvalues.push(e);
        vectors.extend(v);
    }
    Ok(ArrowheadEigen {
        eigenvalues,
        vectors,
    })
}

/// Eigenvalues only (ascending); skips the `O(n²)` eigenvector stage.
pub fn arrowhead_eigenvalues(diag: &[f64], coupling: &[f64], apex: f64) -> Result<Vec<f64>> {
    validate(diag, coupling, apex)?;
    let Deflated { poles, decoupled } = deflate(diag, coupling, apex);
    let mut out: Vec<f64> = decoupled.into_iter().map(|(e, _)| e).collect();
    if poles.is_empty() {
        out.push(apex);
    } else {
        let roots = solve_roots(&poles, apex)?;
        out.extend(roots.iter().map(|r| poles[r.origin].value + r.offset));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn arrowhead_inputs(
    disorder: &DisorderRealization,
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    params.validate()?;
    if params.hopping != 0.0 {
        return usage(format!(
            "arrowhead solver requires J = 0, got J = {}",
            params.hopping
        ));
    }
    if disorder.w.len() != params.n {
        return usage(format!(
            "disorder realization has {} energies, expected {}",
            disorder.w.len(),
            params.n
        ));
    }
    let we = params.emitter_frequency();
    let diag = disorder.w.iter().map(|w| we + w).collect();
    let coupling = vec![params.coupling(); params.n];
    Ok((diag, coupling, params.cavity_frequency()))
}

/// Structured `O(N²)` decomposition of the `J = 0` Hamiltonian.
pub fn diagonalize_arrowhead(
    disorder: &DisorderRealization,
    params: &ModelParams,
) -> Result<SpectralDecomposition> {
    let (diag, coupling, apex) = arrowhead_inputs(disorder, params)?;
    Ok(arrowhead_eigen(&diag, &coupling, apex)?.into_decomposition())
}

/// Eigenvalues of the `J = 0` Hamiltonian without eigenvectors.
pub fn arrowhead_spectrum(disorder: &DisorderRealization, params: &ModelParams) -> Result<Vec<f64>> {
    let (diag, coupling, apex) = arrowhead_inputs(disorder, params)?;
    arrowhead_eigenvalues(&diag, &coupling, apex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, LatticeSpec};
    use crate::model::{build_hamiltonian, sample_disorder};
    use crate::spectral::{dense_eigenvalues, diagonalize_dense};
    use proptest::prelude::*;

    fn dense_of(diag: &[f64], z: &[f64], apex: f64) -> crate::model::HamiltonianMatrix {
        let n = diag.len();
        let dim = n + 1;
        let mut m = vec![0.0; dim * dim];
        for j in 0..n {
            m[j * dim + j] = diag[j];
            m[j * dim + n] = z[j];
            m[n * dim + j] = z[j];
        }
        m[n * dim + n] = apex;
        crate::model::HamiltonianMatrix::from_row_major(dim, m).unwrap()
    }

    /// Characteristic polynomial of the 3×3 arrowhead, roots by bisection on
    /// the interlacing brackets: an oracle independent of the secular solver.
    fn cubic_roots(w1: f64, w2: f64, g: f64) -> [f64; 3] {
        let p = |l: f64| (l - w1) * (l - w2) * l - g * g * ((l - w1) + (l - w2));
        let bisect = |mut a: f64, mut b: f64| {
            let sa = p(a).signum();
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if p(m).signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let r = 10.0 * (g + w1.abs() + w2.abs());
        [bisect(-r, w1), bisect(w1, w2), bisect(w2, r)]
    }

    #[test]
    fn two_emitters_strong_coupling_dark_level_at_midpoint() {
        let u = 0.7;
        let g = 1e4;
        let oracle = cubic_roots(-u, u, g);
        let e = arrowhead_eigenvalues(&[-u, u], &[g, g], 0.0).unwrap();
        assert!(oracle[1].abs() < 1e-6);
        assert!(e[1].abs() < 1e-6);
        for (a, b) in e.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-9 * g, "{a} vs {b}");
        }
    }

    #[test]
    fn asymmetric_two_emitter_roots_match_cubic() {
        let oracle = cubic_roots(-0.3, 1.1, 0.4);
        let e = arrowhead_eigenvalues(&[1.1, -0.3], &[0.4, 0.4], 0.0).unwrap();
        for (a, b) in e.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn clean_limit_deflates_to_polaritons() {
        let n = 50;
        let gc = 3.0;
        let p = ModelParams::new(n, 0.0, 0.0, gc).unwrap();
        let d = sample_disorder(&p, 0, 0);
        let dec = diagonalize_arrowhead(&d, &p).unwrap();
        let e = dec.energies();
        assert!((e[0] + gc).abs() < 1e-12 && (e[n] - gc).abs() < 1e-12);
        assert!(e[1..n].iter().all(|x| x.abs() < 1e-12));
        assert!((dec.photon_weights()[0] - 0.5).abs() < 1e-12);
        assert!(dec.orthonormality_error() < 1e-12);
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let p = ModelParams::new(6, 2.0, 0.0, 0.0).unwrap();
        let d = sample_disorder(&p, 5, 1);
        let dec = diagonalize_arrowhead(&d, &p).unwrap();
        let mut expect = d.w.clone();
        expect.push(0.0);
        expect.sort_by(f64::total_cmp);
        assert_eq!(dec.energies(), &expect[..]);
        assert_eq!(dec.orthonormality_error(), 0.0);
    }

    #[test]
    fn degenerate_entries_are_deflated() {
        let diag = [0.5, -1.0, 0.5, 2.0, 0.5, -1.0];
        let z = [0.3, -0.2, 0.1, 0.4, 0.25, 0.6];
        let a = arrowhead_eigen(&diag, &z, 0.1).unwrap();
        let h = dense_of(&diag, &z, 0.1);
        let dense = dense_eigenvalues(&h).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
        let dec = a.into_decomposition();
        assert!(dec.orthonormality_error() < 1e-13);
        assert!(dec.max_residual(&h) < 1e-13);
        // 0.5 appears three times, −1 twice: two and one exact eigenvalues survive.
        let count = |v: f64| dec.energies().iter().filter(|e| (*e - v).abs() < 1e-15).count();
        assert_eq!(count(0.5), 2);
        assert_eq!(count(-1.0), 1);
    }

    #[test]
    fn requires_zero_hopping() {
        let p = ModelParams::new(4, 1.0, 1.0, 1.0).unwrap();
        let d = sample_disorder(&p, 0, 0);
        assert!(matches!(diagonalize_arrowhead(&d, &p), Err(Error::Usage(_))));
    }

    #[test]
    fn photon_weight_closed_form() {
        let n = 300;
        let p = ModelParams::new(n, 25.0, 0.0, 30.0).unwrap();
        let d = sample_disorder(&p, 8, 0);
        let dec = diagonalize_arrowhead(&d, &p).unwrap();
        let gc2 = 900.0;
        for (a, &e) in dec.energies().iter().enumerate() {
            let s: f64 = d.w.iter().map(|w| gc2 / (e - w).powi(2)).sum::<f64>() / n as f64;
            let pw = 1.0 / (1.0 + s);
            assert!((pw - dec.photon_weights()[a]).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_dense_on_random_instance() {
        let n = 500;
        let p = ModelParams::new(n, 25.0, 0.0, 30.0).unwrap();
        let d = sample_disorder(&p, 99, 0);
        let lat = LatticeSpec::chain(n, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(&lat, &p, &d).unwrap();
        let dense = diagonalize_dense(&h).unwrap();
        let fast = diagonalize_arrowhead(&d, &p).unwrap();
        let scale = dense.energies().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for (a, b) in fast.energies().iter().zip(dense.energies()) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
        assert!(fast.orthonormality_error() < 1e-10);
        assert!(fast.max_residual(&h) < 1e-9 * h.norm_inf());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn interlacing_and_orthogonality(
            w in proptest::collection::vec(-5.0f64..5.0, 2..40),
            gc in 0.0f64..20.0,
            apex in -3.0f64..3.0,
        ) {
            let n = w.len();
            let g = gc / (n as f64).sqrt();
            let z = vec![g; n];
            let a = arrowhead_eigen(&w, &z, apex).unwrap();
            let mut sorted = w.clone();
            sorted.sort_by(f64::total_cmp);
            let e = &a.eigenvalues;
            for k in 0..n {
                prop_assert!(e[k] <= sorted[k]);
                prop_assert!(sorted[k] <= e[k + 1]);
            }
            let h = dense_of(&w, &z, apex);
            let dense = dense_eigenvalues(&h).unwrap();
            let scale = h.norm_inf().max(1.0);
            for (x, y) in e.iter().zip(&dense) {
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
            let dec = a.into_decomposition();
            prop_assert!(dec.orthonormality_error() < 1e-11);
            prop_assert!(dec.max_residual(&h) < 1e-10 * scale);
        }
    }
}
