//! Explicit Runge–Kutta integrators for first-order systems `y' = f(t, y)`
//! over real or complex state vectors.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar type a state vector is made of.
pub trait Field: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {
    /// Magnitude used in error norms.
    fn magnitude(self) -> f64;
}

impl Field for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Field for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// `y ← y + a·x`.
#[inline]
fn axpy<T: Field>(y: &mut [T], a: f64, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + xi * a;
    }
}

/// Classical fourth-order Runge–Kutta with reusable stage buffers.
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Field> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![T::default(); dim],
            k2: vec![T::default(); dim],
            k3: vec![T::default(); dim],
            k4: vec![T::default(); dim],
            tmp: vec![T::default(); dim],
        }
    }

    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [T], h: f64)
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        f(t, y, &mut self.k1);
        self.tmp.copy_from_slice(y);
        axpy(&mut self.tmp, 0.5 * h, &self.k1);
        f(t + 0.5 * h, &self.tmp, &mut self.k2);
        self.tmp.copy_from_slice(y);
        axpy(&mut self.tmp, 0.5 * h, &self.k2);
        f(t + 0.5 * h, &self.tmp, &mut self.k3);
        self.tmp.copy_from_slice(y);
        axpy(&mut self.tmp, h, &self.k3);
        f(t + h, &self.tmp, &mut self.k4);
        for i in 0..y.len() {
            let incr = self.k1[i] + self.k2[i] * 2.0 + self.k3[i] * 2.0 + self.k4[i];
            y[i] = y[i] + incr * (h / 6.0);
        }
    }

    /// Integrate from `t0` to `t1` in `ceil((t1 − t0)/max_step)` equal steps.
    pub fn integrate<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [T], max_step: f64)
    where
        F: FnMut(f64, &[T], &mut [T]),
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return;
        }
        let steps = (span / max_step).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for s in 0..steps {
            self.step(f, t0 + s as f64 * h, y, h);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdaptiveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_step: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Dormand–Prince 5(4) with step-size control, integrating from `t0` to `t1`.
pub fn dopri5<T, F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y: &mut [T],
    tol: Tolerance,
    initial_step: f64,
    max_steps: usize,
) -> Result<AdaptiveStats>
where
    T: Field,
    F: FnMut(f64, &[T], &mut [T]),
{
    let n = y.len();
    let mut k: Vec<Vec<T>> = (0..7).map(|_| vec![T::default(); n]).collect();
    let mut tmp = vec![T::default(); n];
    let mut y5 = vec![T::default(); n];
    let mut stats = AdaptiveStats::default();
    let mut t = t0;
    let mut h = initial_step.min(t1 - t0);
    if t1 <= t0 {
        return Ok(stats);
    }
    f(t, y, &mut k[0]);
    while t < t1 {
        if stats.accepted + stats.rejected >= max_steps {
            return Err(Error::Computation(format!(
                "adaptive integrator exceeded {max_steps} steps at t = {t:.6e} (h = {h:.3e}, target {t1:.6e})"
            )));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let stage = |tmp: &mut Vec<T>, k: &[Vec<T>], coeffs: &[f64]| {
            tmp.copy_from_slice(y);
            for (kc, &c) in k.iter().zip(coeffs) {
                axpy(tmp, h * c, kc);
            }
        };
        stage(&mut tmp, &k, &[A21]);
        f(t + h / 5.0, &tmp, &mut k[1]);
        stage(&mut tmp, &k, &[A31, A32]);
        f(t + 0.3 * h, &tmp, &mut k[2]);
        stage(&mut tmp, &k, &[A41, A42, A43]);
        f(t + 0.8 * h, &tmp, &mut k[3]);
        stage(&mut tmp, &k, &[A51, A52, A53, A54]);
        f(t + 8.0 / 9.0 * h, &tmp, &mut k[4]);
        stage(&mut tmp, &k, &[A61, A62, A63, A64, A65]);
        f(t + h, &tmp, &mut k[5]);
        stage(&mut y5, &k, &[B1, 0.0, B3, B4, B5, B6]);
        f(t + h, &y5, &mut k[6]);

        let mut err2 = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let scale = tol.atol + tol.rtol * y[i].magnitude().max(y5[i].magnitude());
            err2 += (e.magnitude() / scale).powi(2);
        }
        let err = (err2 / n.max(1) as f64).sqrt();
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&y5);
            k.swap(0, 6);
            stats.accepted += 1;
            stats.last_step = h;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Computation(format!(
                    "adaptive step underflow at t = {t:.6e} (error ratio {err:.3e})"
                )));
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_fourth_order_on_exponential() {
        let err = |h: f64| {
            let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
            let mut y = [1.0];
            Rk4::new(1).integrate(&mut f, 0.0, 1.0, &mut y, h);
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn complex_rotation_is_accurate() {
        let w = 3.0;
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = Complex64::new(0.0, -w) * y[0];
        };
        let mut y = [Complex64::new(1.0, 0.0)];
        let stats = dopri5(
            &mut f,
            0.0,
            10.0,
            &mut y,
            Tolerance { rtol: 1e-10, atol: 1e-12 },
            0.01,
            100_000,
        )
        .unwrap();
        let exact = Complex64::from_polar(1.0, -30.0);
        assert!((y[0] - exact).norm() < 1e-8, "{:?}", y[0]);
        assert!(stats.accepted > 0);

        let mut y = [Complex64::new(1.0, 0.0)];
        Rk4::new(1).integrate(&mut f, 0.0, 10.0, &mut y, 1e-3);
        assert!((y[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn step_budget_is_reported() {
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -1e6 * y[0];
        let mut y = [1.0];
        let r = dopri5(&mut f, 0.0, 1.0, &mut y, Tolerance { rtol: 1e-10, atol: 1e-12 }, 0.1, 10);
        assert!(matches!(r, Err(Error::Computation(_))));
    }
}
