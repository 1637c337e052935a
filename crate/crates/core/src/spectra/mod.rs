//! Bound states of multi-well systems and bands of periodic cells.

pub mod bands;
pub mod shooting;
pub mod wells;

pub use bands::{band_structure, compression_scan, BandSet};
pub use shooting::shooting_levels;
pub use wells::{bound_levels, level_scan, LevelEvent, LevelScan, LevelSet, OuterWalls, WellSystem};

/// Nearest-neighbour tight-binding dispersion on a simple cubic lattice:
/// `E0 - alpha - 2 gamma (cos kx a + cos ky a + cos kz a)`.
pub fn tight_binding_energy(kx: f64, ky: f64, kz: f64, a: f64, e0: f64, alpha: f64, gamma: f64) -> f64 {
    e0 - alpha - 2.0 * gamma * ((kx * a).cos() + (ky * a).cos() + (kz * a).cos())
}
