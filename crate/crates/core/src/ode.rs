//! Adaptive Dormand–Prince 5(4) integrator over fixed-size real state vectors.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; `f64::INFINITY` for none.
    pub max_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
// Error weights: 5th-order minus embedded 4th-order coefficients.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let ch = c * h;
        for i in 0..N {
            out[i] += ch * k[i];
        }
    }
    out
}

/// Integrate `y' = f(x, y)` from `x0` to `x1` (`x1 > x0`).
///
/// `observe(x, y)` is called after every accepted step (and once at `x0`);
/// returning `ControlFlow::Break` stops the integration early at that point.
/// Returns the final `(x, y)`.
pub fn integrate<const N: usize, F, O>(
    f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    tol: Tolerances,
    mut observe: O,
) -> Result<(f64, [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N]) -> ControlFlow<()>,
{
    let mut x = x0;
    let mut y = y0;
    if observe(x, &y).is_break() || x1 <= x0 {
        return Ok((x, y));
    }
    let span = x1 - x0;
    let mut k1 = f(x, &y);
    let mut h = initial_step(&f, x, &y, &k1, tol).min(span).min(tol.max_step);
    let h_min = 1e-14 * span.max(x0.abs()).max(1e-300);
    let mut last_factor_rejected = false;
    loop {
        let last = x + h >= x1 - 1e-13 * span;
        if last {
            h = x1 - x;
        }
        let k2 = f(x + C2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = f(x + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(x + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(
            x + C5 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = f(
            x + h,
            &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let x_new = if last { x1 } else { x + h };
        let k7 = f(x_new, &y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();

        if err.is_nan() {
            return Err(Error::StepUnderflow { x, h });
        }
        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            if observe(x, &y).is_break() || last {
                return Ok((x, y));
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            if last_factor_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac.clamp(0.2, 10.0)).min(tol.max_step);
            last_factor_rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_factor_rejected = true;
            if h < h_min {
                return Err(Error::StepUnderflow { x, h });
            }
        }
    }
}

fn initial_step<const N: usize, F>(f: &F, x: f64, y: &[f64; N], k1: &[f64; N], tol: Tolerances) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = tol.atol + tol.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (k1[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y, &[(1.0, k1)], h0);
    let k2 = f(x + h0, &y1);
    let mut d2 = 0.0;
    for i in 0..N {
        let sc = tol.atol + tol.rtol * y[i].abs();
        d2 += ((k2[i] - k1[i]) / sc).powi(2);
    }
    let d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
