//! Resonant geometries and energies: gap lengths and energies where a
//! composite structure transmits with unit probability.
//!
//! For two elements separated by a gap `L`, unit transmission needs equal
//! reflection moduli `|R~1| = |R2|` and the phase match
//! `arg R~1 + arg R2 + 2kL = 0 (mod 2 pi)`. Both are checked here; the
//! whole-structure oracle remains the final judge of every returned value.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::compose::{transmittance_pair, GapJoin};
use crate::error::{ensure, Error, Result};
use crate::oracle::{solve_exact, ScatterData};
use crate::potential::{build_barrier_chain, build_rect_pair, Potential, Segment};
use crate::roots::{brent, golden_min};

/// Required `D` for any reported gap length.
pub const UNIT_D_TOL: f64 = 1e-8;
/// Required `D` for reported resonant energies.
pub const PEAK_D_TOL: f64 = 1e-9;
/// Polishing tolerance in the control variable.
pub const POLISH_TOL: f64 = 1e-12;
/// Modulus mismatch above which no family is attempted.
pub const MODULUS_TOL: f64 = 1e-6;

/// Gap lengths `L_n = l0 + n * period` sharing unit transmission at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceFamily {
    pub energy: f64,
    pub k: f64,
    /// Smallest non-negative resonant gap.
    pub l0: f64,
    /// `pi / k`.
    pub period: f64,
    /// Inclusive index range of members inside the requested window.
    pub n_range: Option<(i64, i64)>,
    /// Why the family is empty, if it is.
    pub diagnostic: Option<String>,
}

impl ResonanceFamily {
    fn empty(energy: f64, k: f64, why: String) -> Self {
        Self {
            energy,
            k,
            l0: f64::NAN,
            period: PI / k,
            n_range: None,
            diagnostic: Some(why),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n_range.is_none()
    }

    pub fn gap(&self, n: i64) -> f64 {
        self.l0 + n as f64 * self.period
    }

    /// `(n, L_n)` for every member.
    pub fn members(&self) -> Vec<(i64, f64)> {
        match self.n_range {
            Some((lo, hi)) => (lo..=hi).map(|n| (n, self.gap(n))).collect(),
            None => Vec::new(),
        }
    }
}

fn rect_pair_cos(u: f64, a: f64, e: f64) -> Result<f64> {
    ensure(u.is_finite() && a > 0.0 && e > 0.0 && e < u, || {
        format!("closed form needs 0 < E < U and a > 0, got U = {u}, a = {a}, E = {e}")
    })?;
    let kappa = (u - e).sqrt();
    let c2 = (2.0 * kappa * a).cosh();
    let big_a = 8.0 * e * e - 8.0 * e * u + u * u;
    let x = (u * u - big_a * c2) / (big_a - u * u * c2);
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::NoResonance(format!(
            "arccos argument {x} outside [-1, 1] for U = {u}, a = {a}, E = {e}"
        )));
    }
    Ok(x)
}

/// Closed-form resonant gap of two equal rectangular barriers (height `u`,
/// width `a`) at energy `e`, branch index `n`. Internal units.
///
/// Below `U/2` the minus branch applies and needs `n >= 1`; at or above it
/// the plus branch with `n >= 0`. The result is re-checked with the oracle.
pub fn rect_pair_resonant_l(u: f64, a: f64, e: f64, n: i64) -> Result<f64> {
    let x = rect_pair_cos(u, a, e)?;
    let k = e.sqrt();
    let lower = e < 0.5 * u;
    ensure(n >= if lower { 1 } else { 0 }, || {
        format!("branch index {n} out of range for E {} U/2", if lower { "<" } else { ">=" })
    })?;
    let sign = if lower { -1.0 } else { 1.0 };
    let l = (TAU * n as f64 + sign * x.acos()) / (2.0 * k);
    let d = solve_exact(&build_rect_pair(u, a, l)?, e)?.transmittance();
    if d < 1.0 - UNIT_D_TOL {
        return Err(Error::Conditioning(format!(
            "closed-form gap {l} re-evaluates to D = {d}"
        )));
    }
    Ok(l)
}

/// Smallest closed-form resonant gap (the minimal valid branch index).
pub fn rect_pair_minimal_l(u: f64, a: f64, e: f64) -> Result<f64> {
    rect_pair_resonant_l(u, a, e, if e < 0.5 * u { 1 } else { 0 })
}

/// Phase-condition family for `s1`, a gap, `s2` at the scattering energy.
/// Members are the `L_n >= 0` inside `[l_lo, l_hi]`.
pub fn find_resonant_l(s1: &ScatterData, s2: &ScatterData, energy: f64, l_lo: f64, l_hi: f64) -> Result<ResonanceFamily> {
    ensure(l_lo >= 0.0 && l_hi >= l_lo, || format!("invalid gap range [{l_lo}, {l_hi}]"))?;
    ensure((s1.k_right - s2.k_left).abs() <= 1e-12 * s1.k_right, || {
        format!("gap media differ: {} vs {}", s1.k_right, s2.k_left)
    })?;
    let k = s1.k_right;
    let (m1, m2) = (s1.r_rev.norm(), s2.r.norm());
    if (m1 - m2).abs() > MODULUS_TOL {
        return Ok(ResonanceFamily::empty(
            energy,
            k,
            format!("reflection moduli differ: |R~1| = {m1:.9}, |R2| = {m2:.9}"),
        ));
    }
    let phase = s1.r_rev.arg() + s2.r.arg();
    let l0 = (-phase).rem_euclid(TAU) / (2.0 * k);
    let period = PI / k;
    let n_lo = ((l_lo - l0) / period).ceil() as i64;
    let n_hi = ((l_hi - l0) / period).floor() as i64;
    let mut fam = ResonanceFamily {
        energy,
        k,
        l0,
        period,
        n_range: None,
        diagnostic: None,
    };
    if n_hi < n_lo.max(0) {
        fam.diagnostic = Some(format!("no member within [{l_lo}, {l_hi}]"));
        return Ok(fam);
    }
    fam.n_range = Some((n_lo.max(0), n_hi));
    for (_, l) in fam.members() {
        let d = transmittance_pair(s1, &GapJoin::new(l, k)?, s2)?.d;
        if d < 1.0 - UNIT_D_TOL {
            return Err(Error::Conditioning(format!("family member L = {l} has D = {d}")));
        }
    }
    Ok(fam)
}

/// `left`, a free gap of length `l`, then `right`.
pub fn join_with_gap(left: &Potential, l: f64, right: &Potential) -> Result<Potential> {
    ensure(l >= 0.0, || format!("gap must be >= 0, got {l}"))?;
    let mid = if l > 0.0 {
        Potential::new(vec![Segment::gap(l)?]).with_media(left.right_level, left.right_level)
    } else {
        Potential::free().with_media(left.right_level, left.right_level)
    };
    Ok(left.clone().then(&mid).then(right))
}

/// Polished minima of `|R|` over a control variable: `(x, D)` for each
/// grid-local minimum whose polished `D` reaches `1 - d_tol`.
fn polished_peaks<F>(f: F, lo: f64, hi: f64, grid: usize, d_tol: f64) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<ScatterData> + Sync,
{
    ensure(hi > lo && grid >= 3, || format!("invalid scan [{lo}, {hi}] with {grid} points"))?;
    let xs: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
    let rs: Vec<f64> = xs
        .par_iter()
        .map(|&x| f(x).map(|s| s.r.norm()))
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid {
        let left = if i == 0 { f64::INFINITY } else { rs[i - 1] };
        let right = if i + 1 == grid { f64::INFINITY } else { rs[i + 1] };
        if !(rs[i] <= left && rs[i] < right) {
            continue;
        }
        let (a, b) = (xs[i.saturating_sub(1)], xs[(i + 1).min(grid - 1)]);
        let (x, _) = golden_min(|x| f(x).map_or(f64::INFINITY, |s| s.r.norm()), a, b, POLISH_TOL);
        let d = f(x)?.transmittance();
        if d >= 1.0 - d_tol {
            match out.last_mut() {
                Some(last) if (x - last.0).abs() < 10.0 * POLISH_TOL => {
                    if d > last.1 {
                        *last = (x, d);
                    }
                }
                _ => out.push((x, d)),
            }
        }
    }
    Ok(out)
}

/// Gap lengths in `[l_lo, l_hi]` giving unit transmission, by oracle search.
pub fn search_resonant_gaps(
    left: &Potential,
    right: &Potential,
    energy: f64,
    l_lo: f64,
    l_hi: f64,
    grid: usize,
) -> Result<Vec<f64>> {
    let peaks = polished_peaks(
        |l| solve_exact(&join_with_gap(left, l.max(0.0), right)?, energy),
        l_lo,
        l_hi,
        grid,
        UNIT_D_TOL,
    )?;
    Ok(peaks.into_iter().map(|(l, _)| l).collect())
}

/// Oracle search for the smallest resonant gap of a rectangular pair in
/// `[0, l_max]`.
pub fn search_rect_pair_l(u: f64, a: f64, e: f64, l_max: f64) -> Result<Vec<f64>> {
    let barrier = Potential::new(vec![Segment::constant(a, u)?]);
    let period = PI / e.sqrt();
    let grid = ((l_max / period * 200.0).ceil() as usize).max(200);
    search_resonant_gaps(&barrier, &barrier, e, 0.0, l_max, grid)
}

/// Energies in `[e_lo, e_hi]` with `D(E) >= 1 - 1e-9`, polished to 1e-12.
pub fn find_resonant_e(p: &Potential, e_lo: f64, e_hi: f64, grid: usize) -> Result<Vec<f64>> {
    find_peaks(p, e_lo, e_hi, grid, PEAK_D_TOL)
}

/// [`find_resonant_e`] with an explicit acceptance threshold `1 - d_tol`.
pub fn find_peaks(p: &Potential, e_lo: f64, e_hi: f64, grid: usize, d_tol: f64) -> Result<Vec<f64>> {
    ensure(e_lo > 0.0 && e_hi > e_lo, || format!("invalid energy range [{e_lo}, {e_hi}]"))?;
    ensure(grid >= 100, || format!("energy grid needs >= 100 points, got {grid}"))?;
    let floor = p.left_level.max(p.right_level);
    ensure(e_lo > floor, || format!("energy range must lie above the media (level {floor})"))?;
    let peaks = polished_peaks(|e| solve_exact(p, e), e_lo, e_hi, grid, d_tol)?;
    Ok(peaks.into_iter().map(|(e, _)| e).collect())
}

/// Energies where `|R~_left(E)| = |R_right(E)|`: the necessary condition for
/// a gap length making `left + gap + right` transparent at that energy.
pub fn matched_modulus_energies(
    left: &Potential,
    right: &Potential,
    e_lo: f64,
    e_hi: f64,
    grid: usize,
) -> Result<Vec<f64>> {
    ensure(e_hi > e_lo && grid >= 3, || format!("invalid scan [{e_lo}, {e_hi}]"))?;
    let mismatch = |e: f64| -> f64 {
        match (solve_exact(left, e), solve_exact(right, e)) {
            (Ok(a), Ok(b)) => a.r_rev.norm() - b.r.norm(),
            _ => f64::NAN,
        }
    };
    let es: Vec<f64> = (0..grid).map(|i| e_lo + (e_hi - e_lo) * i as f64 / (grid - 1) as f64).collect();
    let vals: Vec<f64> = es.par_iter().map(|&e| mismatch(e)).collect();
    let mut out = Vec::new();
    for i in crate::roots::sign_changes(&vals) {
        out.push(brent(mismatch, es[i], es[i + 1], POLISH_TOL)?);
    }
    Ok(out)
}

/// Chain of identical rectangular barriers grouped in pairs: barriers within
/// a pair sit `intra_gap` apart, consecutive pairs `inter_gap` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairChain {
    pub height: f64,
    pub width: f64,
    pub intra_gap: f64,
    pub inter_gap: f64,
}

impl PairChain {
    pub fn build(&self, n: usize) -> Result<Potential> {
        ensure(n >= 1, || "chain needs at least one barrier".into())?;
        let barriers = vec![(self.height, self.width); n];
        let gaps: Vec<f64> = (1..n)
            .map(|i| if i % 2 == 1 { self.intra_gap } else { self.inter_gap })
            .collect();
        build_barrier_chain(&barriers, &gaps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub n: usize,
    pub peaks: Vec<f64>,
    /// Smallest spacing between adjacent peaks; `None` with fewer than two.
    pub min_spacing: Option<f64>,
    pub warning: Option<String>,
}

/// Peak threshold for counting resonances in density scans.
pub const DENSITY_D_TOL: f64 = 1e-6;

pub fn resonance_density(chain: &PairChain, ns: &[usize], e_lo: f64, e_hi: f64, grid: usize) -> Result<Vec<DensityRow>> {
    let step = (e_hi - e_lo) / (grid - 1) as f64;
    ns.iter()
        .map(|&n| {
            let peaks = find_peaks(&chain.build(n)?, e_lo, e_hi, grid, DENSITY_D_TOL)?;
            let min_spacing = peaks.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
            let warning = min_spacing
                .filter(|&s| s < 5.0 * step)
                .map(|s| format!("N = {n}: peak spacing {s:e} is within 5 grid steps ({step:e})"));
            Ok(DensityRow {
                n,
                peaks,
                min_spacing,
                warning,
            })
        })
        .collect()
}
