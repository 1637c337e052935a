//! Exact slab transfer-matrix solver for piecewise-constant potentials.
//!
//! This is the reference every other scattering route is checked against. It
//! propagates the pair `(psi, psi')` from the transmitted side back to `x = 0`
//! through real 2x2 slab matrices, renormalizing as it goes so that thick
//! opaque barriers never overflow.
//!
//! Phase conventions (shared by [`ScatterData`] everywhere in the crate):
//! the left-incident wave is `e^{i k_l x}` with `x = 0` at the left edge; `R`
//! is referenced to `x = 0`; `T` is the amplitude of `e^{i k_r (x - X)}` on the
//! right, i.e. referenced across the full extent `X`. Right-incident
//! coefficients mirror this: `R_rev` is referenced to `x = X`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::{Potential, Slab, DEFAULT_SLABS};

/// Scattering coefficients of a finite structure at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterData {
    /// Left-incident transmission amplitude.
    pub t: Complex64,
    /// Left-incident reflection amplitude (referenced at the left edge).
    pub r: Complex64,
    /// Right-incident transmission amplitude.
    pub t_rev: Complex64,
    /// Right-incident reflection amplitude (referenced at the right edge).
    pub r_rev: Complex64,
    pub k_left: f64,
    pub k_right: f64,
    /// Spatial extent of the structure.
    pub width: f64,
    /// `1 - (k_r/k_l)|T|^2 - |R|^2`; zero for lossless structures.
    pub loss: f64,
}

impl ScatterData {
    /// Zero-width transparent element in a medium with wave number `k`.
    pub fn identity(k: f64) -> Self {
        Self::free(k, 0.0)
    }

    /// A free stretch of length `length`.
    pub fn free(k: f64, length: f64) -> Self {
        let phase = Complex64::from_polar(1.0, k * length);
        Self {
            t: phase,
            r: Complex64::new(0.0, 0.0),
            t_rev: phase,
            r_rev: Complex64::new(0.0, 0.0),
            k_left: k,
            k_right: k,
            width: length,
            loss: 0.0,
        }
    }

    /// Abrupt step between two media at a single point.
    pub fn step(k_left: f64, k_right: f64) -> Self {
        let s = k_left + k_right;
        Self {
            t: Complex64::new(2.0 * k_left / s, 0.0),
            r: Complex64::new((k_left - k_right) / s, 0.0),
            t_rev: Complex64::new(2.0 * k_right / s, 0.0),
            r_rev: Complex64::new((k_right - k_left) / s, 0.0),
            k_left,
            k_right,
            width: 0.0,
            loss: 0.0,
        }
    }

    /// Energy transmittance `D = (k_r/k_l)|T|^2`.
    pub fn transmittance(&self) -> f64 {
        transmittance(self)
    }

    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    /// Transmission amplitude in the convention where the transmitted wave is
    /// `T e^{i k_r x}` with `x` measured from the left edge.
    pub fn t_left_edge(&self) -> Complex64 {
        self.t * Complex64::from_polar(1.0, -self.k_right * self.width)
    }

    /// Recompute `loss` from the current amplitudes.
    pub fn with_computed_loss(mut self) -> Self {
        self.loss = 1.0 - self.transmittance() - self.reflectance();
        self
    }

    /// The same structure seen from the other side.
    pub fn mirrored(&self) -> Self {
        Self {
            t: self.t_rev,
            r: self.r_rev,
            t_rev: self.t,
            r_rev: self.r,
            k_left: self.k_right,
            k_right: self.k_left,
            width: self.width,
            loss: 0.0,
        }
        .with_computed_loss()
    }
}

/// `D = (k_right / k_left) |T|^2`.
pub fn transmittance(s: &ScatterData) -> f64 {
    s.k_right / s.k_left * s.t.norm_sqr()
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Slabs per non-constant segment.
    pub n_slab: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            n_slab: DEFAULT_SLABS,
        }
    }
}

/// Above this `kappa * d` a slab matrix is evaluated scaled by `e^{-kappa d}`.
const LOG_FORM_THRESHOLD: f64 = 300.0;

/// Real slab propagator entries `(C, S, Q)` scaled by `e^{-scale}`.
///
/// The unscaled propagator from the left edge to the right edge of a slab of
/// width `d` with `q^2 = E - U` is `[[C, S], [-Q, C]]` acting on `(psi, psi')`,
/// where `C = cos(q d)`, `S = sin(q d)/q`, `Q = q sin(q d) = q^2 S`. The
/// expressions are analytic in `q^2`, covering the evanescent branch and the
/// linear `q = 0` solution without special cases at the call site.
pub(crate) fn slab_entries(q2: f64, d: f64) -> (f64, f64, f64, f64) {
    let x = q2 * d * d;
    if x.abs() < 1e-6 {
        // Series in x = q^2 d^2; truncation error below 1e-24 relative.
        let c = 1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0;
        let s = d * (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0);
        return (c, s, q2 * s, 0.0);
    }
    if q2 > 0.0 {
        let q = q2.sqrt();
        let (sn, cs) = (q * d).sin_cos();
        (cs, sn / q, q * sn, 0.0)
    } else {
        let kappa = (-q2).sqrt();
        let kd = kappa * d;
        if kd > LOG_FORM_THRESHOLD {
            let e = (-2.0 * kd).exp();
            let c = 0.5 * (1.0 + e);
            let sh = 0.5 * (1.0 - e);
            (c, sh / kappa, -kappa * sh, kd)
        } else {
            let (sh, ch) = (kd.sinh(), kd.cosh());
            (ch, sh / kappa, -kappa * sh, 0.0)
        }
    }
}

/// Left-incident coefficients `(T, R)` by backward propagation.
fn left_incident(slabs: &[Slab], energy: f64, k_l: f64, k_r: f64) -> Result<(Complex64, Complex64)> {
    let i = Complex64::i();
    let mut psi = Complex64::new(1.0, 0.0);
    let mut dpsi = i * k_r;
    let mut log_scale = 0.0f64;
    for slab in slabs.iter().rev() {
        let (c, s, q, scale) = slab_entries(energy - slab.height, slab.width);
        // Inverse propagator [[C, -S], [Q, C]] maps right-edge values to the left edge.
        let p = psi * c - dpsi * s;
        let dp = psi * q + dpsi * c;
        psi = p;
        dpsi = dp;
        log_scale += scale;
        let m = psi.norm().max(dpsi.norm());
        if !m.is_finite() {
            return Err(Error::Conditioning(format!(
                "non-finite wave function at energy {energy}"
            )));
        }
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            psi /= m;
            dpsi /= m;
            log_scale += m.ln();
        }
    }
    let a = 0.5 * (psi + dpsi / (i * k_l));
    let b = 0.5 * (psi - dpsi / (i * k_l));
    if a.norm() == 0.0 || !a.norm().is_finite() {
        return Err(Error::Conditioning(format!(
            "degenerate incident amplitude at energy {energy}"
        )));
    }
    let t = (-log_scale).exp() / a;
    Ok((t, b / a))
}

/// Exact coefficients of `p` at `energy`, both incident directions.
pub fn solve_exact(p: &Potential, energy: f64) -> Result<ScatterData> {
    solve_exact_with(p, energy, OracleOptions::default())
}

pub fn solve_exact_with(p: &Potential, energy: f64, opts: OracleOptions) -> Result<ScatterData> {
    let k_l = p.k_left(energy)?;
    let k_r = p.k_right(energy)?;
    let slabs = p.slabs(opts.n_slab);
    solve_slabs(&slabs, energy, k_l, k_r)
}

/// Coefficients of an explicit slab list embedded between media `k_l`, `k_r`.
pub fn solve_slabs(slabs: &[Slab], energy: f64, k_l: f64, k_r: f64) -> Result<ScatterData> {
    if !(k_l > 0.0 && k_r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "medium wave numbers must be positive, got {k_l}, {k_r}"
        )));
    }
    let (t, r) = left_incident(slabs, energy, k_l, k_r)?;
    let rev: Vec<Slab> = slabs.iter().rev().copied().collect();
    let (t_rev, r_rev) = left_incident(&rev, energy, k_r, k_l)?;
    Ok(ScatterData {
        t,
        r,
        t_rev,
        r_rev,
        k_left: k_l,
        k_right: k_r,
        width: slabs.iter().map(|s| s.width).sum(),
        loss: 0.0,
    }
    .with_computed_loss())
}

/// Real `(psi, psi')` monodromy matrix across the potential, left to right.
///
/// `psi(X) = M[0][0] psi(0) + M[0][1] psi'(0)`, and so on. Its trace decides
/// the Bloch condition when `p` is one period of a lattice.
pub fn cell_matrix(p: &Potential, energy: f64, n_slab: usize) -> [[f64; 2]; 2] {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for slab in p.slabs(n_slab) {
        let (c, s, q, scale) = slab_entries(energy - slab.height, slab.width);
        let f = scale.exp();
        let prop = [[c * f, s * f], [-q * f, c * f]];
        m = [
            [
                prop[0][0] * m[0][0] + prop[0][1] * m[1][0],
                prop[0][0] * m[0][1] + prop[0][1] * m[1][1],
            ],
            [
                prop[1][0] * m[0][0] + prop[1][1] * m[1][0],
                prop[1][0] * m[0][1] + prop[1][1] * m[1][1],
            ],
        ];
    }
    m
}
