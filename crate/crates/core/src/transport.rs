//! Boundary-driven transport: an excitation pumped into site 1 and drained
//! from site N at rate `γ`, in the space of at most one excitation.
//!
//! The Hamiltonian conserves the excitation number and both jump operators
//! map between the vacuum and the single-excitation sector, so starting from
//! the vacuum the density operator stays block diagonal: a vacuum population
//! `p` and an `(N+1)×(N+1)` block `B`,
//!
//! ```text
//! dB/dt = −i(H_eff B − B H_eff†) + γ p |1⟩⟨1|,   H_eff = H − i(γ/2)|N⟩⟨N|
//! dp/dt = −γ p + γ ⟨N|B|N⟩
//! ```
//!
//! Three integrators are provided. [`Integrator::Rk4`] and
//! [`Integrator::Adaptive`] step these equations directly. [`Integrator::Kernel`]
//! uses the equivalent renewal form: with `ψ(τ) = e^{−iH_eff τ}|1⟩`,
//!
//! ```text
//! B(t) = γ ∫₀ᵗ p(s) ψ(t−s)ψ(t−s)† ds,   p(t) = 1 − γ ∫₀ᵗ p(s) ‖ψ(t−s)‖² ds,
//! ```
//!
//! so only an `N+1` vector is propagated and the current follows from a
//! scalar Volterra equation. It is the method of choice for long windows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::model::HamiltonianMatrix;
use crate::ode::{dopri5, Rk4, Tolerance};
use crate::spectral::dense_eigenvalues;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
/// Stability/accuracy factor for fixed-step integration: `dt ≤ STEP_FACTOR / max(‖H‖, γ)`.
pub const STEP_FACTOR: f64 = 0.02;

/// Vacuum population and single-excitation density block (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSystemState {
    pub p_vac: f64,
    pub dim: usize,
    pub block: Vec<Complex64>,
}

impl OpenSystemState {
    pub fn vacuum(dim: usize) -> Self {
        Self {
            p_vac: 1.0,
            dim,
            block: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn block_trace(&self) -> f64 {
        (0..self.dim).map(|i| self.block[i * self.dim + i].re).sum()
    }

    /// `|p + tr B − 1|`.
    pub fn conservation_error(&self) -> f64 {
        (self.p_vac + self.block_trace() - 1.0).abs()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.block[i * n + j] - self.block[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the block.
    pub fn min_block_eigenvalue(&self) -> Result<f64> {
        let e = hermitian_eigenvalues(&self.block, self.dim)?;
        Ok(e.first().copied().unwrap_or(0.0))
    }

    /// The full `(N+2)×(N+2)` density matrix, vacuum last.
    pub fn embed(&self) -> Vec<Complex64> {
        let n = self.dim;
        let d = n + 1;
        let mut rho = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..n {
            rho[i * d..i * d + n].copy_from_slice(&self.block[i * n..(i + 1) * n]);
        }
        rho[d * d - 1] = Complex64::new(self.p_vac, 0.0);
        rho
    }
}

/// Eigenvalues of a Hermitian matrix through its real symmetric `2n×2n` embedding.
fn hermitian_eigenvalues(a: &[Complex64], n: usize) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut data = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = a[i * n + j];
            data[i * m + j] = z.re;
            data[(i + n) * m + j + n] = z.re;
            data[i * m + j + n] = -z.im;
            data[(i + n) * m + j] = z.im;
        }
    }
    // Symmetrize away rounding so the embedding passes the symmetry check.
    for i in 0..m {
        for j in i + 1..m {
            let s = 0.5 * (data[i * m + j] + data[j * m + i]);
            data[i * m + j] = s;
            data[j * m + i] = s;
        }
    }
    let e = dense_eigenvalues(&HamiltonianMatrix::from_row_major(m, data)?)?;
    // Every eigenvalue appears twice in the embedding.
    Ok(e.into_iter().step_by(2).collect())
}

/// `½‖ρ_a − ρ_b‖₁` for Hermitian matrices of dimension `n`.
pub fn trace_distance(a: &[Complex64], b: &[Complex64], n: usize) -> Result<f64> {
    if a.len() != n * n || b.len() != n * n {
        return usage("trace distance of mismatched matrices");
    }
    let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(0.5 * hermitian_eigenvalues(&diff, n)?.iter().map(|x| x.abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrator {
    /// Fixed-step RK4 on the block equations.
    Rk4,
    /// Dormand–Prince 5(4) on the block equations.
    Adaptive { rtol: f64, atol: f64 },
    /// Renewal (Volterra) formulation with RK4 propagation of `ψ(τ)`.
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenSystemOptions {
    pub gamma: f64,
    pub t_end: f64,
    /// Spacing of the output grid (and of the Volterra grid for [`Integrator::Kernel`]).
    pub sample_step: f64,
    pub integrator: Integrator,
    /// Switch off the drain at site N (diagnostics only).
    #[serde(default = "yes")]
    pub drain: bool,
    /// Keep the state at every output time (block integrators only).
    #[serde(default)]
    pub record_states: bool,
}

fn yes() -> bool {
    true
}

impl OpenSystemOptions {
    pub fn new(gamma: f64, t_end: f64, sample_step: f64, integrator: Integrator) -> Self {
        Self {
            gamma,
            t_end,
            sample_step,
            integrator,
            drain: true,
            record_states: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return usage(format!("pump rate must be nonnegative, got {}", self.gamma));
        }
        if !(self.t_end > 0.0) || !(self.sample_step > 0.0) || self.sample_step > self.t_end {
            return usage("transport needs 0 < sample_step ≤ t_end");
        }
        if let Integrator::Adaptive { rtol, atol } = self.integrator {
            if !(rtol > 0.0 && atol > 0.0) {
                return usage("adaptive tolerances must be positive");
            }
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let steps = (self.t_end / self.sample_step).round().max(1.0) as usize;
        let h = self.t_end / steps as f64;
        (0..=steps).map(|k| k as f64 * h).collect()
    }
}

/// Current `I(t) = ⟨N|B(t)|N⟩` and vacuum population on the output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace {
    pub times: Vec<f64>,
    pub current: Vec<f64>,
    pub vacuum: Vec<f64>,
    pub final_state: Option<OpenSystemState>,
    pub states: Vec<OpenSystemState>,
    pub max_conservation_error: f64,
}

/// Sparse real symmetric matrix in row-compressed form.
struct Csr {
    n: usize,
    start: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn new(h: &HamiltonianMatrix) -> Self {
        let n = h.dim();
        let mut start = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        for i in 0..n {
            start.push(col.len());
            for (j, &v) in h.row(i).iter().enumerate() {
                if v != 0.0 {
                    col.push(j);
                    val.push(v);
                }
            }
        }
        start.push(col.len());
        Self { n, start, col, val }
    }

    #[inline]
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[i]..self.start[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }
}

/// Largest `|E|` of the Hamiltonian.
pub fn spectral_norm(h: &HamiltonianMatrix) -> Result<f64> {
    let e = dense_eigenvalues(h)?;
    Ok(e.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

fn fine_step(h: &HamiltonianMatrix, gamma: f64) -> Result<f64> {
    let scale = spectral_norm(h)?.max(gamma);
    Ok(if scale > 0.0 { STEP_FACTOR / scale } else { f64::INFINITY })
}

/// Right-hand side of the block equations; state = row-major block then `p`.
struct BlockRhs {
    csr: Csr,
    gamma: f64,
    drain: bool,
    scratch: Vec<Complex64>,
}

impl BlockRhs {
    fn eval(&mut self, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.csr.n;
        let (b, p) = (&y[..n * n], y[n * n].re);
        // C = H·B; for Hermitian B, B·H = C†.
        let c = &mut self.scratch;
        c.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for r in 0..n {
            let crow = &mut c[r * n..(r + 1) * n];
            for (k, v) in self.csr.row(r) {
                for (cz, bz) in crow.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                    *cz += bz * v;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                dy[i * n + j] = -I * (c[i * n + j] - c[j * n + i].conj());
            }
        }
        let last = n - 2;
        let half = 0.5 * self.gamma;
        if self.drain {
            for j in 0..n {
                dy[last * n + j] -= b[last * n + j] * half;
                dy[j * n + last] -= b[j * n + last] * half;
            }
        }
        dy[0] += Complex64::new(self.gamma * p, 0.0);
        let out = if self.drain { self.gamma * b[last * n + last].re } else { 0.0 };
        dy[n * n] = Complex64::new(-self.gamma * p + out, 0.0);
    }
}

fn state_from(y: &[Complex64], n: usize) -> OpenSystemState {
    OpenSystemState {
        p_vac: y[n * n].re,
        dim: n,
        block: y[..n * n].to_vec(),
    }
}

/// Integrate the boundary-driven dynamics from the vacuum.
pub fn evolve_open(h: &HamiltonianMatrix, opts: &OpenSystemOptions) -> Result<CurrentTrace> {
    opts.validate()?;
    if h.num_emitters() < 2 {
        return usage("transport needs at least two emitters");
    }
    match opts.integrator {
        Integrator::Kernel => evolve_kernel(h, opts),
        _ => evolve_block(h, opts),
    }
}

fn evolve_block(h: &HamiltonianMatrix, opts: &OpenSystemOptions) -> Result<CurrentTrace> {
    let n = h.dim();
    let last = n - 2;
    let mut rhs = BlockRhs {
        csr: Csr::new(h),
        gamma: opts.gamma,
        drain: opts.drain,
        scratch: vec![Complex64::new(0.0, 0.0); n * n],
    };
    let mut y = vec![Complex64::new(0.0, 0.0); n * n + 1];
    y[n * n] = Complex64::new(1.0, 0.0);
    let times = opts.grid();
    let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| rhs.eval(y, dy);
    let max_step = fine_step(h, opts.gamma)?;
    let mut rk4 = Rk4::new(y.len());
    let mut trace = CurrentTrace {
        times: times.clone(),
        current: Vec::with_capacity(times.len()),
        vacuum: Vec::with_capacity(times.len()),
        final_state: None,
        states: Vec::new(),
        max_conservation_error: 0.0,
    };
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            let t0 = times[k - 1];
            match opts.integrator {
                Integrator::Rk4 => rk4.integrate(&mut f, t0, t, &mut y, max_step),
                Integrator::Adaptive { rtol, atol } => {
                    dopri5(&mut f, t0, t, &mut y, Tolerance { rtol, atol }, max_step, 50_000_000)
                        .map_err(|e| Error::Computation(format!("open-system integration: {e}")))?;
                }
                Integrator::Kernel => unreachable!(),
            }
        }
        let state = state_from(&y, n);
        trace.max_conservation_error = trace.max_conservation_error.max(state.conservation_error());
        trace.current.push(y[last * n + last].re);
        trace.vacuum.push(state.p_vac);
        if opts.record_states {
            trace.states.push(state);
        }
    }
    trace.final_state = Some(state_from(&y, n));
    Ok(trace)
}

/// Propagates `ψ' = −i H_eff ψ` and reports each fine step to `visit`.
fn propagate_amplitude(
    h: &HamiltonianMatrix,
    gamma: f64,
    drain: bool,
    intervals: usize,
    coarse: f64,
    sub: usize,
    mut visit: impl FnMut(usize, usize, &[Complex64]),
) {
    let csr = Csr::new(h);
    let n = h.dim();
    let last = n - 2;
    let half = if drain { 0.5 * gamma } else { 0.0 };
    let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        for (r, d) in dy.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in csr.row(r) {
                acc += y[k] * v;
            }
            *d = -I * acc;
        }
        dy[last] -= y[last] * half;
    };
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    psi[0] = Complex64::new(1.0, 0.0);
    let mut rk4 = Rk4::new(n);
    let delta = coarse / sub as f64;
    visit(0, 0, &psi);
    for j in 0..intervals {
        for s in 1..=sub {
            let t = (j * sub + s - 1) as f64 * delta;
            rk4.step(&mut f, t, &mut psi, delta);
            visit(j, s, &psi);
        }
    }
}

/// Simpson weight of fine point `s` in a panel of `sub` (even) subintervals.
#[inline]
fn simpson(s: usize, sub: usize) -> f64 {
    if s == 0 || s == sub {
        1.0
    } else if s % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

fn evolve_kernel(h: &HamiltonianMatrix, opts: &OpenSystemOptions) -> Result<CurrentTrace> {
    let n = h.dim();
    let last = n - 2;
    let gamma = opts.gamma;
    let times = opts.grid();
    let intervals = times.len() - 1;
    let coarse = times[1] - times[0];
    let delta = fine_step(h, gamma)?.min(0.5 * coarse);
    let mut sub = (coarse / delta).ceil() as usize;
    sub += sub % 2;
    let fine = coarse / sub as f64;

    // Interval moments M0 = ∫ f, M1 = ∫ φ f with φ ∈ [0, 1] the position in the interval.
    let mut norm_m0 = vec![0.0; intervals];
    let mut norm_m1 = vec![0.0; intervals];
    let mut out_m0 = vec![0.0; intervals];
    let mut out_m1 = vec![0.0; intervals];
    let mut prev_norm = 1.0;
    let mut prev_out = 0.0;
    propagate_amplitude(h, gamma, opts.drain, intervals, coarse, sub, |j, s, psi| {
        let (nv, kv) = if s == 0 && j == 0 {
            return;
        } else {
            (psi.iter().map(|z| z.norm_sqr()).sum::<f64>(), psi[last].norm_sqr())
        };
        if s == 1 {
            // Start of interval j: the previous fine value is the left endpoint.
            let w = fine / 3.0;
            norm_m0[j] += w * prev_norm;
            out_m0[j] += w * prev_out;
        }
        let w = fine / 3.0 * simpson(s, sub);
        let phi = s as f64 / sub as f64;
        norm_m0[j] += w * nv;
        norm_m1[j] += w * phi * nv;
        out_m0[j] += w * kv;
        out_m1[j] += w * phi * kv;
        if s == sub {
            prev_norm = nv;
            prev_out = kv;
        }
    });

    // p_n (1 + γ A_0) = 1 − γ Σ_{m<n} p_m w_{n,m},
    // w_{n,m} = [m < n] M1_{n−m−1} + [m > 0] (M0 − M1)_{n−m}.
    let a_norm: Vec<f64> = norm_m0.iter().zip(&norm_m1).map(|(a, b)| a - b).collect();
    let a_out: Vec<f64> = out_m0.iter().zip(&out_m1).map(|(a, b)| a - b).collect();
    let weight = |a: &[f64], b: &[f64], nidx: usize, m: usize| {
        let mut w = 0.0;
        if m < nidx {
            w += b[nidx - m - 1];
        }
        if m > 0 {
            w += a[nidx - m];
        }
        w
    };
    let mut p = vec![1.0; times.len()];
    let mut current = vec![0.0; times.len()];
    for nidx in 1..times.len() {
        let mut s = 0.0;
        for m in 0..nidx {
            s += p[m] * weight(&a_norm, &norm_m1, nidx, m);
        }
        p[nidx] = (1.0 - gamma * s) / (1.0 + gamma * a_norm[0]);
        let mut c = 0.0;
        for m in 0..=nidx {
            c += p[m] * weight(&a_out, &out_m1, nidx, m);
        }
        current[nidx] = gamma * c;
    }

    let mut trace = CurrentTrace {
        times: times.clone(),
        current,
        vacuum: p.clone(),
        final_state: None,
        states: Vec::new(),
        max_conservation_error: 0.0,
    };
    if opts.record_states {
        // B(T) = γ ∫₀ᵀ p(T − τ) ψ(τ)ψ(τ)† dτ with p piecewise linear.
        let t_end = times[intervals];
        let p_at = |t: f64| {
            let x = (t / coarse).clamp(0.0, intervals as f64);
            let k = (x.floor() as usize).min(intervals - 1);
            let th = x - k as f64;
            p[k] * (1.0 - th) + p[k + 1] * th
        };
        let mut block = vec![Complex64::new(0.0, 0.0); n * n];
        propagate_amplitude(h, gamma, opts.drain, intervals, coarse, sub, |j, s, psi| {
            let tau = (j * sub + s) as f64 * fine;
            let w = if s == 0 {
                fine / 3.0
            } else if s == sub && j + 1 < intervals {
                2.0 * fine / 3.0
            } else {
                fine / 3.0 * simpson(s, sub)
            };
            let coeff = gamma * w * p_at(t_end - tau);
            for a in 0..n {
                let za = psi[a] * coeff;
                for b in 0..n {
                    block[a * n + b] += za * psi[b].conj();
                }
            }
        });
        let state = OpenSystemState {
            p_vac: p[intervals],
            dim: n,
            block,
        };
        trace.max_conservation_error = state.conservation_error();
        trace.final_state = Some(state);
    }
    Ok(trace)
}

/// Dense Lindblad integration on the full `(N+2)`-dimensional space (vacuum last).
/// Returns `ρ` at each requested time.
pub fn full_space_evolution(
    h: &HamiltonianMatrix,
    gamma: f64,
    times: &[f64],
    tol: Tolerance,
) -> Result<Vec<Vec<Complex64>>> {
    let n = h.dim();
    let d = n + 1;
    let vac = n;
    let site1 = 0;
    let site_n = n - 2;
    let amp = (0.5 * gamma).sqrt();
    // Jump operators as (row, col, value) single entries.
    let jumps = [(site1, vac, amp), (vac, site_n, amp)];
    let hd: Vec<f64> = (0..d * d)
        .map(|k| {
            let (i, j) = (k / d, k % d);
            if i < n && j < n {
                h.get(i, j)
            } else {
                0.0
            }
        })
        .collect();
    let mut f = |_t: f64, rho: &[Complex64], drho: &mut [Complex64]| {
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += rho[k * d + j] * hd[i * d + k] - rho[i * d + k] * hd[k * d + j];
                }
                drho[i * d + j] = -I * acc;
            }
        }
        for &(r, c, a) in &jumps {
            // L = a|r⟩⟨c|: 2LρL† = 2a²ρ_cc|r⟩⟨r|, L†L = a²|c⟩⟨c|.
            let a2 = a * a;
            drho[r * d + r] += rho[c * d + c] * (2.0 * a2);
            for k in 0..d {
                drho[c * d + k] -= rho[c * d + k] * a2;
                drho[k * d + c] -= rho[k * d + c] * a2;
            }
        }
    };
    let mut rho = vec![Complex64::new(0.0, 0.0); d * d];
    rho[vac * d + vac] = Complex64::new(1.0, 0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        if target < t {
            return usage("full-space oracle needs an increasing time grid");
        }
        dopri5(&mut f, t, target, &mut rho, tol, 1e-3, 50_000_000)?;
        t = target;
        out.push(rho.clone());
    }
    Ok(out)
}

/// Trapezoidal average of `I` over `[t1, t2]`, interpolating linearly inside grid cells.
pub fn averaged_current(times: &[f64], current: &[f64], window: (f64, f64)) -> Result<f64> {
    let (t1, t2) = window;
    if times.len() != current.len() || times.len() < 2 {
        return usage("current trace and time grid disagree");
    }
    let eps = 1e-9 * times[times.len() - 1].abs().max(1.0);
    if !(t1 < t2) || t1 < times[0] - eps || t2 > times[times.len() - 1] + eps {
        return usage(format!(
            "averaging window [{t1}, {t2}] not inside the grid [{}, {}]",
            times[0],
            times[times.len() - 1]
        ));
    }
    let interp = |t: f64| {
        let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
        let (a, b) = (times[k - 1], times[k]);
        let th = ((t - a) / (b - a)).clamp(0.0, 1.0);
        current[k - 1] * (1.0 - th) + current[k] * th
    };
    let mut pts = vec![(t1, interp(t1))];
    pts.extend(
        times
            .iter()
            .zip(current)
            .filter(|(&t, _)| t > t1 && t < t2)
            .map(|(&t, &c)| (t, c)),
    );
    pts.push((t2, interp(t2)));
    let integral: f64 = pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    Ok(integral / (t2 - t1))
}

/// Window average with the averages of the first and second halves, exposing drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowAverage {
    pub mean: f64,
    pub first_half: f64,
    pub second_half: f64,
}

pub fn window_average(times: &[f64], current: &[f64], window: (f64, f64)) -> Result<WindowAverage> {
    let mid = 0.5 * (window.0 + window.1);
    Ok(WindowAverage {
        mean: averaged_current(times, current, window)?,
        first_half: averaged_current(times, current, (window.0, mid))?,
        second_half: averaged_current(times, current, (mid, window.1))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, LatticeSpec};
    use crate::model::{build_hamiltonian, sample_disorder, ModelParams};

    fn chain(n: usize, w: f64, j: f64, gc: f64, seed: u64) -> HamiltonianMatrix {
        let lat = LatticeSpec::chain(n, Boundary::Open).unwrap();
        let p = ModelParams::new(n, w, j, gc).unwrap();
        build_hamiltonian(&lat, &p, &sample_disorder(&p, seed, 0)).unwrap()
    }

    const TIGHT: Integrator = Integrator::Adaptive { rtol: 1e-11, atol: 1e-13 };

    #[test]
    fn no_pump_no_current() {
        let h = chain(4, 2.0, 1.0, 1.0, 0);
        let tr = evolve_open(&h, &OpenSystemOptions::new(0.0, 5.0, 0.5, Integrator::Rk4)).unwrap();
        assert!(tr.current.iter().all(|&c| c == 0.0));
        assert!(tr.vacuum.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn block_reduction_matches_full_space() {
        for n in 2..=4 {
            let h = chain(n, 3.0, 1.0, 2.0, n as u64);
            let mut opts = OpenSystemOptions::new(0.3, 10.0, 2.5, TIGHT);
            opts.record_states = true;
            let tr = evolve_open(&h, &opts).unwrap();
            let full = full_space_evolution(&h, 0.3, &tr.times, Tolerance { rtol: 1e-11, atol: 1e-13 }).unwrap();
            for (s, rho) in tr.states.iter().zip(&full) {
                let d = trace_distance(&s.embed(), rho, n + 2).unwrap();
                assert!(d < 1e-8, "N = {n}: {d}");
            }
        }
    }

    #[test]
    fn integrators_agree() {
        let h = chain(5, 4.0, 1.0, 3.0, 9);
        let gamma = 0.2;
        let reference = evolve_open(&h, &OpenSystemOptions::new(gamma, 30.0, 0.05, TIGHT)).unwrap();
        let rk4 = evolve_open(&h, &OpenSystemOptions::new(gamma, 30.0, 0.05, Integrator::Rk4)).unwrap();
        for k in 0..reference.times.len() {
            assert!((rk4.current[k] - reference.current[k]).abs() < 1e-9);
        }
        // The renewal form is second order in the Volterra step.
        let kernel_error = |step: f64| {
            let mut kopts = OpenSystemOptions::new(gamma, 30.0, step, Integrator::Kernel);
            kopts.record_states = true;
            let kernel = evolve_open(&h, &kopts).unwrap();
            let stride = (step / 0.05).round() as usize;
            let mut worst = 0.0f64;
            for (k, (c, p)) in kernel.current.iter().zip(&kernel.vacuum).enumerate() {
                worst = worst
                    .max((c - reference.current[k * stride]).abs())
                    .max((p - reference.vacuum[k * stride]).abs());
            }
            let fa = reference.final_state.clone().unwrap();
            let fb = kernel.final_state.unwrap();
            (worst, trace_distance(&fa.embed(), &fb.embed(), 7).unwrap())
        };
        let (coarse, coarse_state) = kernel_error(0.1);
        let (fine, fine_state) = kernel_error(0.05);
        assert!(coarse < 5e-5 && coarse_state < 1e-4, "{coarse} {coarse_state}");
        assert!(fine < coarse / 3.0 && fine_state < coarse_state / 3.0, "{fine} {fine_state}");
    }

    #[test]
    fn physical_state_along_trajectory() {
        let h = chain(4, 2.0, 1.0, 1.5, 3);
        let mut opts = OpenSystemOptions::new(0.5, 20.0, 1.0, Integrator::Rk4);
        opts.record_states = true;
        let tr = evolve_open(&h, &opts).unwrap();
        assert!(tr.max_conservation_error < 1e-9);
        for s in &tr.states {
            assert!(s.hermiticity_error() < 1e-12);
            assert!(s.min_block_eigenvalue().unwrap() > -1e-9);
            assert!(s.p_vac >= 0.0);
        }
        assert!(tr.current.iter().all(|&c| c >= -1e-12));
    }

    #[test]
    fn pump_only_population_grows() {
        let h = chain(3, 2.0, 1.0, 1.0, 4);
        for integrator in [Integrator::Rk4, Integrator::Kernel] {
            let mut opts = OpenSystemOptions::new(0.4, 10.0, 0.25, integrator);
            opts.drain = false;
            let tr = evolve_open(&h, &opts).unwrap();
            let excited: Vec<f64> = tr.vacuum.iter().map(|p| 1.0 - p).collect();
            assert!(excited.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }

    #[test]
    fn window_average_identity() {
        // dp/dt = −γp + γI gives ∫I = ∫p + Δp/γ.
        let h = chain(5, 3.0, 1.0, 2.0, 5);
        let gamma = 0.3;
        let tr = evolve_open(&h, &OpenSystemOptions::new(gamma, 40.0, 0.05, Integrator::Rk4)).unwrap();
        let k1 = 400;
        let k2 = 800;
        let (t1, t2) = (tr.times[k1], tr.times[k2]);
        let lhs = averaged_current(&tr.times, &tr.current, (t1, t2)).unwrap();
        let rhs = averaged_current(&tr.times, &tr.vacuum, (t1, t2)).unwrap()
            + (tr.vacuum[k2] - tr.vacuum[k1]) / (gamma * (t2 - t1));
        assert!((lhs - rhs).abs() < 1e-4, "{lhs} vs {rhs}");
    }

    #[test]
    fn averaging_window() {
        let t: Vec<f64> = (0..11).map(f64::from).collect();
        let c = vec![2.5; 11];
        assert!((averaged_current(&t, &c, (1.3, 7.9)).unwrap() - 2.5).abs() < 1e-14);
        let ramp: Vec<f64> = t.clone();
        assert!((averaged_current(&t, &ramp, (2.0, 6.0)).unwrap() - 4.0).abs() < 1e-14);
        assert!(averaged_current(&t, &c, (5.0, 12.0)).is_err());
        let w = window_average(&t, &ramp, (0.0, 10.0)).unwrap();
        assert!((w.first_half - 2.5).abs() < 1e-14 && (w.second_half - 7.5).abs() < 1e-14);
    }
}
