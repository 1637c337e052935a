//! Shooting-method reference for well levels.
//!
//! Integrates `psi'' = -q(x)^2 psi` from both outer boundaries to the middle
//! of the system and roots the Wronskian mismatch there. It shares nothing
//! with the determinant construction beyond the region list.

use std::ops::ControlFlow;

use crate::error::{ensure, Result};
use crate::ode::{self, Tolerances};
use crate::roots::brent;

use super::wells::{energy_grid, OuterWalls, WellSystem};

const TOL: Tolerances = Tolerances {
    rtol: 1e-13,
    atol: 1e-16,
    max_step: f64::INFINITY,
};

/// `(psi, psi')` at distance `stop` from the start of `regions`.
fn shoot(regions: &[(f64, f64)], e: f64, start: [f64; 2], stop: f64) -> Result<[f64; 2]> {
    let mut y = start;
    let mut x = 0.0;
    for &(depth, width) in regions {
        let end = (x + width).min(stop);
        if end > x {
            let q2 = depth - e;
            let (_, y1) = ode::integrate(|_, y: &[f64; 2]| [y[1], -q2 * y[0]], x, y, end, TOL, |_, _| {
                ControlFlow::Continue(())
            })?;
            // Keep magnitudes bounded across long evanescent stretches.
            let m = y1[0].abs().max(y1[1].abs());
            y = if m > 1e50 { [y1[0] / m, y1[1] / m] } else { y1 };
        }
        x += width;
        if x >= stop {
            break;
        }
    }
    Ok(y)
}

/// Wronskian of the left and right solutions at the midpoint.
pub fn mismatch(ws: &WellSystem, e: f64) -> Result<f64> {
    let regions = ws.regions();
    let total: f64 = regions.iter().map(|r| r.1).sum();
    let mid = 0.5 * total;
    let start = match ws.outer {
        OuterWalls::Infinite => [0.0, 1.0],
        OuterWalls::Finite => [1.0, e.sqrt()],
    };
    let left = shoot(&regions, e, start, mid)?;
    let rev: Vec<(f64, f64)> = regions.iter().rev().copied().collect();
    let right = shoot(&rev, e, start, total - mid)?;
    // The mirrored integration runs in -x, flipping the derivative.
    let (pr, dpr) = (right[0], -right[1]);
    Ok(left[0] * dpr - left[1] * pr)
}

/// Levels as roots of [`mismatch`] on the same energy grid as the
/// determinant scan, polished by Brent's method.
pub fn shooting_levels(ws: &WellSystem, grid: usize) -> Result<Vec<f64>> {
    ensure(grid >= 2, || "grid too small".into())?;
    let es = energy_grid(ws.max_depth(), grid);
    let f = |e: f64| mismatch(ws, e).unwrap_or(f64::NAN);
    let vals: Vec<f64> = {
        use rayon::prelude::*;
        es.par_iter().map(|&e| f(e)).collect()
    };
    crate::roots::sign_changes(&vals)
        .into_iter()
        .map(|i| brent(f, es[i], es[i + 1], 1e-14 * es[i]))
        .collect()
}
