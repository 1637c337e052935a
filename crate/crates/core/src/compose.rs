//! Scattering-composition algebra for chains of barriers.
//!
//! Two elements separated by a free gap `L` combine by summing the multiple
//! reflections between them as a geometric series:
//!
//! ```text
//! T12 = T1 e^{ikL} T2 / (1 - R~1 R2 e^{2ikL})
//! R12 = R1 + T1 R2 T~1 e^{2ikL} / (1 - R~1 R2 e^{2ikL})
//! ```
//!
//! With every element carrying its own extent-referenced coefficients (see
//! [`crate::oracle`]), the same formulas chain any number of elements and the
//! result is directly comparable with a whole-structure oracle solve.

use std::ops::ControlFlow;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::ode::{self, Tolerances};
use crate::oracle::{solve_exact, ScatterData};
use crate::potential::{Potential, Segment};

/// Free stretch joining two elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapJoin {
    pub length: f64,
    pub k: f64,
}

impl GapJoin {
    pub fn new(length: f64, k: f64) -> Result<Self> {
        ensure(length.is_finite() && length >= 0.0, || format!("gap length must be >= 0, got {length}"))?;
        ensure(k.is_finite() && k > 0.0, || format!("gap wave number must be > 0, got {k}"))?;
        Ok(Self { length, k })
    }

    fn phase(&self, n: f64) -> Complex64 {
        Complex64::from_polar(1.0, n * self.k * self.length)
    }
}

/// Loss densities per unit length for the reflection (`w`) and transmission
/// (`w_prime`) channels of an infinitesimal slab.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossModel {
    pub w: Complex64,
    pub w_prime: Complex64,
}

impl LossModel {
    pub fn is_lossless(&self) -> bool {
        self.w == Complex64::default() && self.w_prime == Complex64::default()
    }
}

/// Denominator magnitude below which composition is reported as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-14;

fn check_media(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        Ok(())
    } else {
        Err(Error::MediaMismatch { left: a, right: b })
    }
}

fn round_trip(s1: &ScatterData, gap: &GapJoin, s2: &ScatterData) -> Result<Complex64> {
    check_media(s1.k_right, gap.k)?;
    check_media(gap.k, s2.k_left)?;
    let den = 1.0 - s1.r_rev * s2.r * gap.phase(2.0);
    if den.norm() < SINGULAR_DENOMINATOR {
        return Err(Error::SingularDenominator(den.norm()));
    }
    Ok(den)
}

/// Combine `s1`, a gap, and `s2` (left to right).
pub fn compose_pair(s1: &ScatterData, gap: &GapJoin, s2: &ScatterData) -> Result<ScatterData> {
    let den = round_trip(s1, gap, s2)?;
    let e1 = gap.phase(1.0);
    let e2 = gap.phase(2.0);
    Ok(ScatterData {
        t: s1.t * e1 * s2.t / den,
        r: s1.r + s1.t * s2.r * s1.t_rev * e2 / den,
        t_rev: s2.t_rev * e1 * s1.t_rev / den,
        r_rev: s2.r_rev + s2.t_rev * s1.r_rev * s2.t * e2 / den,
        k_left: s1.k_left,
        k_right: s2.k_right,
        width: s1.width + gap.length + s2.width,
        loss: 0.0,
    }
    .with_computed_loss())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTransmittance {
    pub d: f64,
    pub d_min: f64,
    pub d_max: f64,
}

/// Total transmittance of a pair from the individual transmittances and the
/// round-trip factor, plus the phase-independent bounds
/// `(1-r1^2)(1-r2^2)/(1 +- r1 r2)^2`.
pub fn transmittance_pair(s1: &ScatterData, gap: &GapJoin, s2: &ScatterData) -> Result<PairTransmittance> {
    let den = round_trip(s1, gap, s2)?;
    let (d1, d2) = (s1.transmittance(), s2.transmittance());
    let d = d1 * d2 / (den * den.conj()).re;
    let (r1, r2) = (s1.r_rev.norm(), s2.r.norm());
    let num = 1.0 + r1 * r1 * r2 * r2 - r1 * r1 - r2 * r2;
    Ok(PairTransmittance {
        d,
        d_min: num / (1.0 + r1 * r2).powi(2),
        d_max: num / (1.0 - r1 * r2).powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceCheck {
    pub met: bool,
    /// `|R~1 - R2* e^{-2ikL}|`.
    pub residual: f64,
    /// `| |R~1| - |R2| |`; unit transmission needs this to vanish.
    pub modulus_gap: f64,
}

pub fn resonance_condition_met(s1: &ScatterData, s2: &ScatterData, gap: &GapJoin, tol: f64) -> ResonanceCheck {
    let residual = (s1.r_rev - s2.r.conj() * gap.phase(-2.0)).norm();
    ResonanceCheck {
        met: residual < tol,
        residual,
        modulus_gap: (s1.r_rev.norm() - s2.r.norm()).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainItem {
    Element(ScatterData),
    Gap(GapJoin),
}

/// Normalize a chain into elements separated by (possibly zero) gaps.
fn normalize(items: &[ChainItem]) -> Result<(Vec<ScatterData>, Vec<GapJoin>)> {
    ensure(!items.is_empty(), || "empty chain".into())?;
    let mut elems = Vec::new();
    let mut gaps = Vec::new();
    let mut pending: Option<GapJoin> = None;
    for item in items {
        match *item {
            ChainItem::Gap(g) => {
                pending = Some(match pending {
                    Some(p) => {
                        check_media(p.k, g.k)?;
                        GapJoin::new(p.length + g.length, g.k)?
                    }
                    None => g,
                });
            }
            ChainItem::Element(s) => {
                if elems.is_empty() {
                    if let Some(g) = pending.take() {
                        elems.push(ScatterData::free(g.k, g.length));
                    }
                }
                if !elems.is_empty() {
                    let g = pending.take().unwrap_or(GapJoin { length: 0.0, k: s.k_left });
                    gaps.push(g);
                }
                elems.push(s);
            }
        }
    }
    if let Some(g) = pending {
        match elems.is_empty() {
            true => elems.push(ScatterData::free(g.k, g.length)),
            false => {
                gaps.push(GapJoin { length: 0.0, k: g.k });
                elems.push(ScatterData::free(g.k, g.length));
            }
        }
    }
    Ok((elems, gaps))
}

/// Left fold of [`compose_pair`] over the chain.
pub fn compose_chain(items: &[ChainItem]) -> Result<ScatterData> {
    let (elems, gaps) = normalize(items)?;
    let mut acc = elems[0];
    for (g, e) in gaps.iter().zip(&elems[1..]) {
        acc = compose_pair(&acc, g, e)?;
    }
    Ok(acc)
}

/// Right fold: `e1 + (e2 + (e3 + ...))`. Agrees with [`compose_chain`] since
/// composition is associative.
pub fn compose_chain_right(items: &[ChainItem]) -> Result<ScatterData> {
    let (elems, gaps) = normalize(items)?;
    let mut acc = *elems.last().unwrap();
    for (g, e) in gaps.iter().zip(&elems[..elems.len() - 1]).rev() {
        acc = compose_pair(e, g, &acc)?;
    }
    Ok(acc)
}

/// Closed-form transmittance of three elements in matched media, written out
/// as the expanded denominator
/// `1 - R~1 R2 e1 - R~2 R3 e2 + R~1 R~2 R2 R3 e1 e2 - R~1 T2^2 R3 e^{2ik(a2+L1+L2)}`
/// with `T2` the left-edge-referenced transmission of the middle element.
pub fn triple_transmittance(
    s1: &ScatterData,
    l1: f64,
    s2: &ScatterData,
    l2: f64,
    s3: &ScatterData,
) -> f64 {
    let k = s2.k_left;
    let e = |x: f64| Complex64::from_polar(1.0, 2.0 * k * x);
    let t2 = s2.t_left_edge();
    let den = 1.0 - s1.r_rev * s2.r * e(l1) - s2.r_rev * s3.r * e(l2)
        + s1.r_rev * s2.r_rev * s2.r * s3.r * e(l1 + l2)
        - s1.r_rev * t2 * t2 * s3.r * e(s2.width + l1 + l2);
    s1.transmittance() * s2.transmittance() * s3.transmittance() / den.norm_sqr()
}

/// A uniform free stretch of length `length` carrying loss densities, as the
/// continuum limit of chained thin lossy slabs.
pub fn lossy_gap_block(k: f64, length: f64, loss: &LossModel) -> Result<ScatterData> {
    if loss.is_lossless() || length == 0.0 {
        return Ok(ScatterData::free(k, length));
    }
    let i = Complex64::i();
    let (w, wp) = (loss.w, loss.w_prime);
    // State: R~ (re, im), ln T referenced at the left edge (re, im).
    let rhs = |_x: f64, y: &[f64; 4]| {
        let rr = Complex64::new(y[0], y[1]);
        let drr = -w * (1.0 + rr * rr) - 2.0 * wp * rr + 2.0 * i * k * rr;
        let dlt = -wp - w * rr;
        [drr.re, drr.im, dlt.re, dlt.im]
    };
    let tol = Tolerances {
        rtol: 1e-12,
        atol: 1e-14,
        max_step: f64::INFINITY,
    };
    let (_, y) = ode::integrate(rhs, 0.0, [0.0; 4], length, tol, |_, _| ControlFlow::Continue(()))?;
    let rr = Complex64::new(y[0], y[1]);
    let t = Complex64::new(y[2], y[3]).exp() * Complex64::from_polar(1.0, k * length);
    // Uniform medium: mirror symmetric, so both sides see the same coefficients.
    Ok(ScatterData {
        t,
        r: rr,
        t_rev: t,
        r_rev: rr,
        k_left: k,
        k_right: k,
        width: length,
        loss: 0.0,
    }
    .with_computed_loss())
}

/// [`compose_pair`] with the gap filled by a lossy medium.
pub fn compose_pair_lossy(
    s1: &ScatterData,
    gap: &GapJoin,
    s2: &ScatterData,
    loss: &LossModel,
) -> Result<ScatterData> {
    if loss.is_lossless() {
        return compose_pair(s1, gap, s2);
    }
    let block = lossy_gap_block(gap.k, gap.length, loss)?;
    let zero = GapJoin { length: 0.0, k: gap.k };
    let left = compose_pair(s1, &zero, &block)?;
    let out = compose_pair(&left, &zero, s2)?;
    let tol = 1e-12;
    let w_rev = 1.0 - out.k_left / out.k_right * out.t_rev.norm_sqr() - out.r_rev.norm_sqr();
    for w in [out.loss, w_rev] {
        if !(-tol..=1.0 + tol).contains(&w) {
            return Err(Error::LossOutOfRange(w));
        }
    }
    Ok(out)
}

/// Distribution of the central slab height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeightDistribution {
    Fixed(f64),
    Uniform { mean: f64, half_width: f64 },
    Normal { mean: f64, std_dev: f64 },
}

impl HeightDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Fixed(m) => m,
            Self::Uniform { mean, .. } | Self::Normal { mean, .. } => mean,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Fixed(m) => m.is_finite(),
            Self::Uniform { mean, half_width } => mean.is_finite() && half_width.is_finite() && half_width >= 0.0,
            Self::Normal { mean, std_dev } => mean.is_finite() && std_dev.is_finite() && std_dev >= 0.0,
        };
        ensure(ok, || format!("invalid height distribution {self:?}"))
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Fixed(m) => m,
            Self::Uniform { mean, half_width } => {
                if half_width == 0.0 {
                    mean
                } else {
                    mean + half_width * (2.0 * rng.random::<f64>() - 1.0)
                }
            }
            Self::Normal { mean, std_dev } => {
                if std_dev == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std_dev).expect("validated").sample(rng)
                }
            }
        }
    }
}

/// Two fixed outer barriers with a thin fluctuating slab between them, all
/// adjacent (no gaps), evaluated at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSetup {
    pub left: Potential,
    pub right: Potential,
    pub center_width: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// 95% confidence half-width of `mean`.
    pub half_width: f64,
    /// Transmittance with the center at its mean height.
    pub d_at_mean: f64,
    pub samples: usize,
}

impl FluctuationEstimate {
    /// `(d_at_mean - mean) / std_error`; positive when averaging lowers D.
    pub fn significance(&self) -> f64 {
        if self.std_error == 0.0 {
            0.0
        } else {
            (self.d_at_mean - self.mean) / self.std_error
        }
    }
}

const CHUNK: usize = 1024;

impl FluctuationSetup {
    fn outer(&self) -> Result<(ScatterData, ScatterData)> {
        ensure(self.center_width > 0.0, || "center slab width must be positive".into())?;
        Ok((solve_exact(&self.left, self.energy)?, solve_exact(&self.right, self.energy)?))
    }

    fn with_outer(&self, left: &ScatterData, right: &ScatterData, height: f64) -> Result<f64> {
        let slab = Potential::new(vec![Segment::constant(self.center_width, height)?])
            .with_media(self.left.right_level, self.right.left_level);
        let c = solve_exact(&slab, self.energy)?;
        let lc = compose_pair(left, &GapJoin { length: 0.0, k: left.k_right }, &c)?;
        Ok(compose_pair(&lc, &GapJoin { length: 0.0, k: c.k_right }, right)?.transmittance())
    }

    /// Transmittance with the center slab at `height`.
    pub fn transmittance(&self, height: f64) -> Result<f64> {
        let (l, r) = self.outer()?;
        self.with_outer(&l, &r, height)
    }

    /// Center height in `[h_lo, h_hi]` maximizing the transmittance, with
    /// that transmittance.
    pub fn most_transparent_height(&self, h_lo: f64, h_hi: f64) -> Result<(f64, f64)> {
        ensure(h_hi > h_lo, || format!("invalid height range [{h_lo}, {h_hi}]"))?;
        let (l, r) = self.outer()?;
        let d = |h: f64| self.with_outer(&l, &r, h).unwrap_or(f64::NEG_INFINITY);
        let n = 400;
        let hs: Vec<f64> = (0..=n).map(|i| h_lo + (h_hi - h_lo) * i as f64 / n as f64).collect();
        let best = (0..=n).max_by(|&a, &b| d(hs[a]).total_cmp(&d(hs[b]))).unwrap();
        let (a, b) = (hs[best.saturating_sub(1)], hs[(best + 1).min(n)]);
        let (h, neg) = crate::roots::golden_min(|h| -d(h), a, b, 1e-12 * (h_hi - h_lo).max(1.0));
        Ok((h, -neg))
    }
}

pub fn averaged_transmittance_center_fluct(
    setup: &FluctuationSetup,
    dist: &HeightDistribution,
    samples: usize,
    seed: u64,
) -> Result<FluctuationEstimate> {
    dist.validate()?;
    ensure(samples >= 1000, || format!("need >= 1000 samples, got {samples}"))?;
    let (left, right) = setup.outer()?;
    let d_at_mean = setup.with_outer(&left, &right, dist.mean())?;
    let n_chunks = samples.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            (0..n)
                .map(|_| setup.with_outer(&left, &right, dist.sample(&mut rng)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = chunks.into_iter().flatten().collect();
    let n = values.len() as f64;
    // Shifted sum: exact for degenerate (zero-variance) ensembles.
    let shift = values[0];
    let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    Ok(FluctuationEstimate {
        mean,
        std_error,
        half_width: 1.96 * std_error,
        d_at_mean,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::solve_exact;
    use crate::potential::{build_rect_pair, Segment};
    use crate::units::UnitSystem;

    fn barrier(h: f64, w: f64) -> Potential {
        Potential::new(vec![Segment::constant(w, h).unwrap()])
    }

    #[test]
    fn identity_second_element_returns_first() {
        let s1 = solve_exact(&barrier(2.0, 1.3), 0.7).unwrap();
        let id = ScatterData::identity(s1.k_right);
        let out = compose_pair(&s1, &GapJoin::new(0.0, s1.k_right).unwrap(), &id).unwrap();
        assert!((out.t - s1.t).norm() < 1e-15);
        assert!((out.r - s1.r).norm() < 1e-15);
        assert!((out.r_rev - s1.r_rev).norm() < 1e-15);
        assert_eq!(out.width, s1.width);
    }

    #[test]
    fn split_potential_recomposes_to_oracle() {
        let segs = vec![
            Segment::constant(0.8, 1.7).unwrap(),
            Segment::constant(0.5, -0.4).unwrap(),
            Segment::constant(1.2, 0.9).unwrap(),
            Segment::constant(0.6, 2.5).unwrap(),
        ];
        let e = 1.1;
        let whole = solve_exact(&Potential::new(segs.clone()), e).unwrap();
        let a = solve_exact(&Potential::new(segs[..2].to_vec()), e).unwrap();
        let b = solve_exact(&Potential::new(segs[2..].to_vec()), e).unwrap();
        let c = compose_pair(&a, &GapJoin::new(0.0, a.k_right).unwrap(), &b).unwrap();
        for (x, y) in [(c.t, whole.t), (c.r, whole.r), (c.t_rev, whole.t_rev), (c.r_rev, whole.r_rev)] {
            assert!((x - y).norm() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn media_mismatch_is_rejected() {
        let s = solve_exact(&barrier(2.0, 1.0), 1.0).unwrap();
        let err = compose_pair(&s, &GapJoin::new(1.0, 0.5).unwrap(), &s).unwrap_err();
        assert!(matches!(err, Error::MediaMismatch { .. }));
    }

    #[test]
    fn singular_denominator_is_reported() {
        let mut s = ScatterData::identity(1.0);
        s.r_rev = Complex64::new(1.0, 0.0);
        let mut s2 = ScatterData::identity(1.0);
        s2.r = Complex64::new(1.0, 0.0);
        let err = compose_pair(&s, &GapJoin::new(std::f64::consts::PI, 1.0).unwrap(), &s2).unwrap_err();
        assert!(matches!(err, Error::SingularDenominator(_)));
    }

    #[test]
    fn transparent_elements_give_unit_bounds() {
        let id = ScatterData::identity(1.0);
        let pt = transmittance_pair(&id, &GapJoin::new(2.0, 1.0).unwrap(), &id).unwrap();
        assert_eq!((pt.d, pt.d_min, pt.d_max), (1.0, 1.0, 1.0));
        let chk = resonance_condition_met(&id, &id, &GapJoin::new(2.0, 1.0).unwrap(), 1e-12);
        assert!(chk.met && chk.residual == 0.0);
    }

    #[test]
    fn worst_phase_reaches_lower_bound() {
        // Equal reflection moduli rho, phase chosen so R~1 R2 e^{2ikL} = -rho^2.
        let s = solve_exact(&barrier(2.0, 0.9), 0.8).unwrap();
        let rho = s.r.norm();
        let k = s.k_right;
        let phase = (s.r_rev * s.r).arg();
        let l = (std::f64::consts::PI - phase).rem_euclid(2.0 * std::f64::consts::PI) / (2.0 * k);
        let pt = transmittance_pair(&s, &GapJoin::new(l, k).unwrap(), &s).unwrap();
        let expect = (1.0 - rho * rho).powi(2) / (1.0 + rho * rho).powi(2);
        assert!((pt.d_min - expect).abs() < 1e-14);
        assert!((pt.d - pt.d_min).abs() < 1e-12);
        assert!((pt.d_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_pair_matches_composed_transmittance_and_is_periodic() {
        let s1 = solve_exact(&barrier(2.0, 0.9), 0.8).unwrap();
        let s2 = solve_exact(&barrier(1.4, 1.6), 0.8).unwrap();
        let k = s1.k_right;
        for l in [0.0, 0.37, 1.9, 4.4] {
            let g = GapJoin::new(l, k).unwrap();
            let pt = transmittance_pair(&s1, &g, &s2).unwrap();
            let c = compose_pair(&s1, &g, &s2).unwrap();
            assert!((pt.d - c.transmittance()).abs() < 1e-13);
            assert!(pt.d >= pt.d_min - 1e-12 && pt.d <= pt.d_max + 1e-12);
            for n in 1..4 {
                let g2 = GapJoin::new(l + n as f64 * std::f64::consts::PI / k, k).unwrap();
                let d2 = transmittance_pair(&s1, &g2, &s2).unwrap().d;
                assert!((d2 - pt.d).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mismatched_moduli_never_resonate() {
        let s1 = solve_exact(&barrier(2.0, 0.9), 0.8).unwrap();
        let s2 = solve_exact(&barrier(3.0, 1.5), 0.8).unwrap();
        assert!((s1.r_rev.norm() - s2.r.norm()).abs() > 1e-3);
        let k = s1.k_right;
        let period = std::f64::consts::PI / k;
        for i in 0..2000 {
            let g = GapJoin::new(period * i as f64 / 2000.0, k).unwrap();
            let chk = resonance_condition_met(&s1, &s2, &g, 1e-6);
            assert!(!chk.met);
            assert!(transmittance_pair(&s1, &g, &s2).unwrap().d < 1.0 - 1e-6);
        }
    }

    #[test]
    fn chain_folds_agree_and_match_recursion() {
        let e = 0.6;
        let parts = [barrier(1.5, 0.7), barrier(2.2, 0.3), barrier(1.1, 1.2)];
        let s: Vec<ScatterData> = parts.iter().map(|p| solve_exact(p, e).unwrap()).collect();
        let k = e.sqrt();
        let (l1, l2) = (0.9, 2.3);
        let items = [
            ChainItem::Element(s[0]),
            ChainItem::Gap(GapJoin::new(l1, k).unwrap()),
            ChainItem::Element(s[1]),
            ChainItem::Gap(GapJoin::new(l2, k).unwrap()),
            ChainItem::Element(s[2]),
        ];
        let left = compose_chain(&items).unwrap();
        let right = compose_chain_right(&items).unwrap();
        assert!((left.t - right.t).norm() < 1e-13 && (left.r - right.r).norm() < 1e-13);
        let closed = triple_transmittance(&s[0], l1, &s[1], l2, &s[2]);
        assert!((closed - left.transmittance()).abs() < 1e-12);
        let single = compose_chain(&items[..1]).unwrap();
        assert_eq!(single, s[0]);
    }

    #[test]
    fn resonant_pair_pairs_stay_transparent() {
        let u = UnitSystem::electron_angstrom();
        let e = u.from_ev(0.3);
        // Resonant spacing found by the oracle search in the resonance module.
        let pair = build_rect_pair(u.from_ev(0.9), 2.8, 6.585_4).unwrap();
        let s = solve_exact(&pair, e).unwrap();
        let k = s.k_right;
        let base = s.transmittance();
        assert!(base > 1.0 - 1e-6);
        for b in [0.0, 1.0, 3.3, 10.0] {
            let d = compose_pair(&s, &GapJoin::new(b, k).unwrap(), &s).unwrap().transmittance();
            assert!(d > 1.0 - 1e-5);
        }
    }

    #[test]
    fn lossless_limit_matches_plain_composition() {
        let s1 = solve_exact(&barrier(2.0, 0.9), 0.8).unwrap();
        let s2 = solve_exact(&barrier(1.4, 1.6), 0.8).unwrap();
        let g = GapJoin::new(1.7, s1.k_right).unwrap();
        let a = compose_pair_lossy(&s1, &g, &s2, &LossModel::default()).unwrap();
        let b = compose_pair(&s1, &g, &s2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_transmission_loss_matches_first_order() {
        let k = 1.0;
        let len = 0.05;
        let wp = 0.01;
        let loss = LossModel {
            w: Complex64::default(),
            w_prime: Complex64::new(wp, 0.0),
        };
        let block = lossy_gap_block(k, len, &loss).unwrap();
        // Pure transmission-channel loss in a free medium: |T|^2 = e^{-2 w' L}.
        let expect = 1.0 - 2.0 * wp * len;
        assert!(block.t.norm_sqr() < 1.0);
        assert!((block.t.norm_sqr() - expect).abs() < 2.0 * (wp * len).powi(2));
        assert!(block.loss > 0.0 && block.loss < 1.0);
    }

    #[test]
    fn lossy_chain_keeps_reciprocity_but_not_reflection_symmetry() {
        let e = 0.8;
        let s1 = solve_exact(&barrier(2.0, 0.9), e).unwrap();
        let s2 = solve_exact(&barrier(1.4, 1.6), e).unwrap();
        let k = s1.k_right;
        let loss = LossModel {
            w: Complex64::new(0.02, 0.01),
            w_prime: Complex64::new(0.05, 0.0),
        };
        let out = compose_pair_lossy(&s1, &GapJoin::new(1.3, k).unwrap(), &s2, &loss).unwrap();
        assert!((out.t - out.t_rev).norm() < 1e-10);
        assert!((out.r.arg() - out.r_rev.arg()).abs() > 1e-3);
        assert!(out.loss > 0.0);
        // W differs between the two directions once loss breaks the |R| = |R~| symmetry.
        assert!((out.r.norm() - out.r_rev.norm()).abs() > 1e-6);
    }

    #[test]
    fn zero_variance_ensemble_equals_deterministic_value() {
        let setup = FluctuationSetup {
            left: barrier(1.0, 1.0),
            right: barrier(1.0, 1.0),
            center_width: 0.05,
            energy: 0.5,
        };
        let est = averaged_transmittance_center_fluct(&setup, &HeightDistribution::Fixed(8.0), 2000, 1).unwrap();
        assert_eq!(est.mean, est.d_at_mean);
        assert_eq!(est.std_error, 0.0);
        let zero_uniform = HeightDistribution::Uniform { mean: 8.0, half_width: 0.0 };
        let est2 = averaged_transmittance_center_fluct(&setup, &zero_uniform, 2000, 7).unwrap();
        assert_eq!(est2.mean, est.mean);
        assert!(averaged_transmittance_center_fluct(&setup, &HeightDistribution::Fixed(f64::NAN), 2000, 1).is_err());
        assert!(averaged_transmittance_center_fluct(&setup, &HeightDistribution::Fixed(1.0), 10, 1).is_err());
    }

    fn resonant_setup() -> FluctuationSetup {
        let u = UnitSystem::electron_angstrom();
        let bar = barrier(u.from_ev(1.0), 2.5);
        FluctuationSetup {
            left: bar.clone(),
            right: bar,
            center_width: 0.1,
            energy: u.from_ev(3.0),
        }
    }

    #[test]
    fn averaging_around_a_transparency_maximum_lowers_d() {
        let setup = resonant_setup();
        let u = UnitSystem::electron_angstrom();
        let (h, d) = setup.most_transparent_height(0.0, u.from_ev(20.0)).unwrap();
        assert!(d > 1.0 - 1e-9 && h > u.from_ev(1.0));
        let dist = HeightDistribution::Uniform { mean: h, half_width: 0.2 * h };
        let est = averaged_transmittance_center_fluct(&setup, &dist, 20_000, 3).unwrap();
        assert!(est.mean < est.d_at_mean);
        assert!(est.significance() > 5.0, "z = {}", est.significance());
    }

    #[test]
    fn ensemble_is_deterministic_and_seed_consistent() {
        let setup = resonant_setup();
        let (h, _) = setup.most_transparent_height(0.0, 6.0).unwrap();
        let dist = HeightDistribution::Normal { mean: h, std_dev: 0.1 * h };
        let a = averaged_transmittance_center_fluct(&setup, &dist, 5000, 11).unwrap();
        let b = averaged_transmittance_center_fluct(&setup, &dist, 5000, 11).unwrap();
        assert_eq!(a, b);
        let c = averaged_transmittance_center_fluct(&setup, &dist, 5000, 12).unwrap();
        let combined = (a.std_error.powi(2) + c.std_error.powi(2)).sqrt();
        assert!((a.mean - c.mean).abs() < 4.0 * combined);
    }
}
