//! Allowed bands of a periodic lattice of identical cells.

use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::oracle::cell_matrix;
use crate::potential::{compress, Potential, DEFAULT_SLABS};
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    /// True when the band runs into an end of the scanned window.
    pub clipped: bool,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    pub bands: Vec<Band>,
    pub e_lo: f64,
    pub e_hi: f64,
    pub grid: usize,
}

impl BandSet {
    /// Bands not touching the window ends.
    pub fn interior(&self) -> Vec<Band> {
        self.bands.iter().copied().filter(|b| !b.clipped).collect()
    }

    /// Forbidden intervals between consecutive bands.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.bands.windows(2).map(|w| (w[0].hi, w[1].lo)).collect()
    }

    pub fn total_width(&self) -> f64 {
        self.bands.iter().map(Band::width).sum()
    }
}

/// Trace of the cell monodromy matrix.
pub fn bloch_trace(cell: &Potential, e: f64) -> f64 {
    let m = cell_matrix(cell, e, DEFAULT_SLABS);
    m[0][0] + m[1][1]
}

/// Bands where `|tr M(E)| <= 2`, edges bisected to `1e-13` relative.
pub fn band_structure(cell: &Potential, e_lo: f64, e_hi: f64, grid: usize) -> Result<BandSet> {
    ensure(e_lo >= 0.0 && e_hi > e_lo, || format!("invalid energy range [{e_lo}, {e_hi}]"))?;
    ensure(grid >= 2, || format!("grid needs >= 2 points, got {grid}"))?;
    ensure(cell.extent() > 0.0, || "empty cell".into())?;
    let g = |e: f64| bloch_trace(cell, e).abs() - 2.0;
    let es: Vec<f64> = (0..grid).map(|i| e_lo + (e_hi - e_lo) * i as f64 / (grid - 1) as f64).collect();
    let allowed: Vec<bool> = es.par_iter().map(|&e| g(e) <= 0.0).collect();
    let edge = |a: f64, b: f64| bisect(g, a, b, 1e-13 * b.abs().max(1e-300));
    let mut bands = Vec::new();
    let mut start: Option<(f64, bool)> = allowed[0].then_some((e_lo, true));
    for i in 1..grid {
        match (allowed[i - 1], allowed[i]) {
            (false, true) => start = Some((edge(es[i - 1], es[i])?, false)),
            (true, false) => {
                let (lo, clipped) = start.take().expect("band start recorded");
                bands.push(Band {
                    lo,
                    hi: edge(es[i - 1], es[i])?,
                    clipped,
                });
            }
            _ => {}
        }
    }
    if let Some((lo, _)) = start {
        bands.push(Band { lo, hi: e_hi, clipped: true });
    }
    Ok(BandSet {
        bands,
        e_lo,
        e_hi,
        grid,
    })
}

/// Bands of the cell with its barriers compressed by each factor.
pub fn compression_scan(cell: &Potential, factors: &[f64], e_lo: f64, e_hi: f64, grid: usize) -> Result<Vec<(f64, BandSet)>> {
    factors
        .iter()
        .map(|&f| Ok((f, band_structure(&compress(cell, f)?, e_lo, e_hi, grid)?)))
        .collect()
}
