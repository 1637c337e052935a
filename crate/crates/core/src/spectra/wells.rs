//! Bound levels of a row of rectangular wells separated by barriers.
//!
//! Energies are binding energies: the barriers and the outside sit at level
//! zero, well `i` has its floor at `-U_i`, and a level `E` in `(0, max U_i)`
//! oscillates with `q_i = sqrt(U_i - E)` inside well `i` and decays with
//! `kappa = sqrt(E)` inside barriers.
//!
//! Each region carries the regular basis `C(t) = cos(q t)`,
//! `S(t) = sin(q t) / q` in its local coordinate (continued analytically to
//! `cosh`/`sinh` when `q^2 < 0`), so every entry of the matching system is an
//! entire function of `E` and its determinant changes sign exactly at levels.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::oracle::slab_entries;
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterWalls {
    /// `psi = 0` at the outer edges of the first and last wells.
    Infinite,
    /// Semi-infinite outside at level zero; `psi` decays as `e^{-kappa |x|}`.
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Well {
    pub depth: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellSystem {
    pub wells: Vec<Well>,
    /// Widths of the barriers between consecutive wells.
    pub barriers: Vec<f64>,
    pub outer: OuterWalls,
}

impl WellSystem {
    pub fn new(wells: Vec<Well>, barriers: Vec<f64>, outer: OuterWalls) -> Result<Self> {
        ensure(!wells.is_empty(), || "need at least one well".into())?;
        ensure(barriers.len() + 1 == wells.len(), || {
            format!("{} wells need {} barriers, got {}", wells.len(), wells.len() - 1, barriers.len())
        })?;
        ensure(
            wells.iter().all(|w| w.depth > 0.0 && w.depth.is_finite() && w.width > 0.0 && w.width.is_finite()),
            || "well depths and widths must be positive".into(),
        )?;
        ensure(barriers.iter().all(|b| *b >= 0.0 && b.is_finite()), || {
            "barrier widths must be >= 0".into()
        })?;
        Ok(Self { wells, barriers, outer })
    }

    pub fn max_depth(&self) -> f64 {
        self.wells.iter().map(|w| w.depth).fold(0.0, f64::max)
    }

    /// `(depth, width)` of every region left to right; barriers have depth 0.
    pub fn regions(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2 * self.wells.len());
        for (i, w) in self.wells.iter().enumerate() {
            if i > 0 {
                out.push((0.0, self.barriers[i - 1]));
            }
            out.push((w.depth, w.width));
        }
        out
    }

    /// Determinant of the matching system at binding energy `e`.
    pub fn determinant(&self, e: f64) -> f64 {
        let regions = self.regions();
        let nr = regions.len();
        let finite = self.outer == OuterWalls::Finite;
        // Unknowns: (psi, psi') at the left edge of each region, then the
        // outside amplitudes when the walls are finite.
        let n = 2 * nr + if finite { 2 } else { 0 };
        let mut m = DMatrix::<f64>::zeros(n, n);
        let kappa = e.max(0.0).sqrt();
        let mut row = 0;
        if finite {
            // psi(0) = cL, psi'(0) = kappa cL.
            let cl = 2 * nr;
            m[(row, 0)] = 1.0;
            m[(row, cl)] = -1.0;
            m[(row + 1, 1)] = 1.0;
            m[(row + 1, cl)] = -kappa;
        } else {
            m[(row, 0)] = 1.0;
        }
        row += if finite { 2 } else { 1 };
        for (j, &(depth, width)) in regions.iter().enumerate() {
            let (c, s, q, scale) = slab_entries(depth - e, width);
            let f = (-scale).exp();
            let (a, b) = (2 * j, 2 * j + 1);
            if j + 1 < nr {
                m[(row, a)] = c;
                m[(row, b)] = s;
                m[(row, a + 2)] = -f;
                m[(row + 1, a)] = -q;
                m[(row + 1, b)] = c;
                m[(row + 1, b + 2)] = -f;
                row += 2;
            } else if finite {
                // psi(X) = cR, psi'(X) = -kappa cR.
                let cr = 2 * nr + 1;
                m[(row, a)] = c;
                m[(row, b)] = s;
                m[(row, cr)] = -f;
                m[(row + 1, a)] = -q;
                m[(row + 1, b)] = c;
                m[(row + 1, cr)] = kappa * f;
                row += 2;
            } else {
                m[(row, a)] = c;
                m[(row, b)] = s;
                row += 1;
            }
        }
        debug_assert_eq!(row, n);
        m.determinant()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    /// Binding energies, ascending.
    pub levels: Vec<f64>,
    pub grid: usize,
    pub warnings: Vec<String>,
}

/// Energy grid used by the level scans: cell midpoints of `(0, e_max)`.
pub(crate) fn energy_grid(e_max: f64, grid: usize) -> Vec<f64> {
    (0..grid).map(|j| e_max * (j as f64 + 0.5) / grid as f64).collect()
}

/// Refine every sign change of `f` on the grid to `1e-12` relative.
pub(crate) fn refine_roots<F: Fn(f64) -> f64 + Sync>(f: F, es: &[f64]) -> Result<Vec<f64>> {
    let vals: Vec<f64> = es.par_iter().map(|&e| f(e)).collect();
    crate::roots::sign_changes(&vals)
        .into_iter()
        .map(|i| bisect(&f, es[i], es[i + 1], 1e-12 * es[i]))
        .collect()
}

pub(crate) fn spacing_warnings(levels: &[f64], step: f64) -> Vec<String> {
    levels
        .windows(2)
        .filter(|w| w[1] - w[0] < 5.0 * step)
        .map(|w| format!("levels {:e} and {:e} are closer than 5 grid steps", w[0], w[1]))
        .collect()
}

/// Levels from sign changes of the matching determinant.
pub fn bound_levels(ws: &WellSystem, grid: usize) -> Result<LevelSet> {
    ensure(grid >= 500, || format!("energy grid needs >= 500 points, got {grid}"))?;
    let e_max = ws.max_depth();
    let es = energy_grid(e_max, grid);
    let levels = refine_roots(|e| ws.determinant(e), &es)?;
    let warnings = spacing_warnings(&levels, e_max / grid as f64);
    Ok(LevelSet { levels, grid, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelEvent {
    None,
    Appear,
    Disappear,
}

impl LevelEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Appear => "appear",
            Self::Disappear => "disappear",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedLevel {
    pub id: usize,
    pub energy: f64,
    pub event: LevelEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanStep {
    pub value: f64,
    /// Present levels (events `None`/`Appear`) followed by `Disappear`
    /// markers carrying the last known energy.
    pub levels: Vec<TrackedLevel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelScan {
    pub steps: Vec<ScanStep>,
    /// Steps where nearest-continuation matching was ambiguous.
    pub ambiguities: Vec<(f64, String)>,
    pub warnings: Vec<String>,
}

impl LevelScan {
    /// Largest total drift of any level present at every step, relative to
    /// the mean level spacing at the first step.
    pub fn relative_shift(&self) -> Option<f64> {
        self.relative_shift_below(f64::INFINITY)
    }

    /// [`Self::relative_shift`] restricted to levels starting at or below `e_max`.
    pub fn relative_shift_below(&self, e_max: f64) -> Option<f64> {
        let first = &self.steps.first()?.levels;
        let present: Vec<&TrackedLevel> = first
            .iter()
            .filter(|l| l.event != LevelEvent::Disappear && l.energy <= e_max)
            .collect();
        if present.len() < 2 {
            return None;
        }
        let lo = present.iter().map(|l| l.energy).fold(f64::INFINITY, f64::min);
        let hi = present.iter().map(|l| l.energy).fold(f64::NEG_INFINITY, f64::max);
        let spacing = (hi - lo) / (present.len() - 1) as f64;
        let mut worst: f64 = 0.0;
        for l in &present {
            let track: Vec<f64> = self
                .steps
                .iter()
                .filter_map(|s| s.levels.iter().find(|x| x.id == l.id && x.event != LevelEvent::Disappear))
                .map(|x| x.energy)
                .collect();
            if track.len() == self.steps.len() {
                let (a, b) = track.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
                worst = worst.max(b - a);
            }
        }
        Some(worst / spacing)
    }
}

/// Levels as barrier widths `vary` are set to each value of the scan.
pub fn level_scan(ws: &WellSystem, vary: &[usize], lo: f64, hi: f64, steps: usize, grid: usize) -> Result<LevelScan> {
    ensure(lo > 0.0 && hi > lo, || format!("scan range must be positive and increasing, got [{lo}, {hi}]"))?;
    ensure(steps >= 20, || format!("level scan needs >= 20 steps, got {steps}"))?;
    ensure(!vary.is_empty() && vary.iter().all(|&i| i < ws.barriers.len()), || {
        format!("barrier indices {vary:?} out of range for {} barriers", ws.barriers.len())
    })?;
    let values: Vec<f64> = (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect();
    let sets: Vec<LevelSet> = values
        .par_iter()
        .map(|&b| {
            let mut w = ws.clone();
            for &i in vary {
                w.barriers[i] = b;
            }
            bound_levels(&w, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(track_levels(&values, &sets))
}

/// Nearest-continuation tracking of level sets across scan steps.
pub fn track_levels(values: &[f64], sets: &[LevelSet]) -> LevelScan {
    let mut steps = Vec::with_capacity(values.len());
    let mut ambiguities = Vec::new();
    let mut warnings = Vec::new();
    let mut prev: Vec<(usize, f64)> = Vec::new();
    let mut next_id = 0;
    for (si, (&value, set)) in values.iter().zip(sets).enumerate() {
        warnings.extend(set.warnings.iter().map(|w| format!("at {value}: {w}")));
        let cur = &set.levels;
        // Admissible matches stay within half the local spacing of both lists.
        let half_gap = |list: &[f64], i: usize| {
            let l = if i > 0 { list[i] - list[i - 1] } else { f64::INFINITY };
            let r = if i + 1 < list.len() { list[i + 1] - list[i] } else { f64::INFINITY };
            0.5 * l.min(r)
        };
        let prev_e: Vec<f64> = prev.iter().map(|p| p.1).collect();
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (pi, &pe) in prev_e.iter().enumerate() {
            for (ci, &ce) in cur.iter().enumerate() {
                let d = (ce - pe).abs();
                if d < half_gap(&prev_e, pi).min(half_gap(cur, ci)) {
                    cands.push((d, pi, ci));
                }
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pm = vec![None; prev.len()];
        let mut cm = vec![None; cur.len()];
        for (_, pi, ci) in cands {
            if pm[pi].is_none() && cm[ci].is_none() {
                pm[pi] = Some(ci);
                cm[ci] = Some(pi);
            }
        }
        let matched: Vec<usize> = cm.iter().flatten().copied().collect();
        if matched.windows(2).any(|w| w[1] < w[0]) {
            ambiguities.push((value, "level order changed between steps".into()));
        }
        let unmatched_prev = pm.iter().filter(|m| m.is_none()).count();
        let unmatched_cur = cm.iter().filter(|m| m.is_none()).count();
        if si > 0 && unmatched_prev > 0 && unmatched_cur > 0 {
            ambiguities.push((
                value,
                format!("{unmatched_prev} level(s) lost and {unmatched_cur} gained in one step"),
            ));
        }
        let mut levels = Vec::with_capacity(cur.len());
        let mut now = Vec::with_capacity(cur.len());
        for (ci, &e) in cur.iter().enumerate() {
            let (id, event) = match cm[ci] {
                Some(pi) => (prev[pi].0, LevelEvent::None),
                None => {
                    next_id += 1;
                    (next_id - 1, if si == 0 { LevelEvent::None } else { LevelEvent::Appear })
                }
            };
            levels.push(TrackedLevel { id, energy: e, event });
            now.push((id, e));
        }
        for (pi, &(id, e)) in prev.iter().enumerate() {
            if pm[pi].is_none() {
                levels.push(TrackedLevel {
                    id,
                    energy: e,
                    event: LevelEvent::Disappear,
                });
            }
        }
        steps.push(ScanStep { value, levels });
        prev = now;
    }
    LevelScan {
        steps,
        ambiguities,
        warnings,
    }
}
