//! Piecewise 1-D potentials in internal units (`hbar = 1`, `m = 1/2`).
//!
//! A [`Potential`] is an ordered list of [`Segment`]s starting at `x = 0`,
//! embedded between two uniform media whose levels fix the asymptotic wave
//! numbers `k_left = sqrt(E - left_level)` and `k_right = sqrt(E - right_level)`.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant { height: f64 },
    Linear { start: f64, slope: f64 },
    /// Heights on a uniform sub-grid spanning the segment, endpoints included.
    Sampled { heights: Vec<f64> },
}

/// Overrides the default barrier/well classification used by [`compress`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Barrier,
    Well,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub width: f64,
    pub profile: Profile,
    pub role: Option<Role>,
}

impl Segment {
    pub fn constant(width: f64, height: f64) -> Result<Self> {
        Self::new(width, Profile::Constant { height })
    }

    pub fn gap(width: f64) -> Result<Self> {
        Self::constant(width, 0.0)
    }

    pub fn linear(width: f64, start: f64, slope: f64) -> Result<Self> {
        Self::new(width, Profile::Linear { start, slope })
    }

    pub fn sampled(width: f64, heights: Vec<f64>) -> Result<Self> {
        Self::new(width, Profile::Sampled { heights })
    }

    pub fn new(width: f64, profile: Profile) -> Result<Self> {
        ensure(width.is_finite() && width > 0.0, || {
            format!("segment width must be positive, got {width}")
        })?;
        match &profile {
            Profile::Constant { height } => {
                ensure(height.is_finite(), || "non-finite height".into())?
            }
            Profile::Linear { start, slope } => ensure(start.is_finite() && slope.is_finite(), || {
                "non-finite linear profile".into()
            })?,
            Profile::Sampled { heights } => {
                ensure(heights.len() >= 2, || {
                    format!("sampled profile needs >= 2 points, got {}", heights.len())
                })?;
                ensure(heights.iter().all(|h| h.is_finite()), || {
                    "non-finite sampled height".into()
                })?;
            }
        }
        Ok(Self {
            width,
            profile,
            role: None,
        })
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = Some(role);
        self
    }

    /// Height at local coordinate `t` in `[0, width]` (linear interpolation
    /// for sampled profiles).
    pub fn height_at(&self, t: f64) -> f64 {
        match &self.profile {
            Profile::Constant { height } => *height,
            Profile::Linear { start, slope } => start + slope * t,
            Profile::Sampled { heights } => {
                let n = heights.len() - 1;
                let u = (t / self.width * n as f64).clamp(0.0, n as f64);
                let i = (u.floor() as usize).min(n - 1);
                let f = u - i as f64;
                heights[i] * (1.0 - f) + heights[i + 1] * f
            }
        }
    }

    pub fn max_height(&self) -> f64 {
        match &self.profile {
            Profile::Constant { height } => *height,
            Profile::Linear { start, slope } => start.max(start + slope * self.width),
            Profile::Sampled { heights } => heights.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    pub fn role(&self) -> Role {
        self.role.unwrap_or(if self.max_height() > 0.0 {
            Role::Barrier
        } else {
            Role::Well
        })
    }

    /// Sub-interval boundaries (local coordinates) across which the profile is
    /// smooth: the whole segment for constant/linear, each sub-grid cell for
    /// sampled profiles.
    pub fn smooth_pieces(&self) -> Vec<(f64, f64)> {
        match &self.profile {
            Profile::Sampled { heights } => {
                let n = heights.len() - 1;
                let h = self.width / n as f64;
                (0..n)
                    .map(|i| (i as f64 * h, if i + 1 == n { self.width } else { (i + 1) as f64 * h }))
                    .collect()
            }
            _ => vec![(0.0, self.width)],
        }
    }

    fn reversed(&self) -> Self {
        let profile = match &self.profile {
            Profile::Constant { height } => Profile::Constant { height: *height },
            Profile::Linear { start, slope } => Profile::Linear {
                start: start + slope * self.width,
                slope: -slope,
            },
            Profile::Sampled { heights } => Profile::Sampled {
                heights: heights.iter().rev().copied().collect(),
            },
        };
        Self {
            width: self.width,
            profile,
            role: self.role,
        }
    }
}

/// A constant slab used by the transfer-matrix oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub segments: Vec<Segment>,
    pub left_level: f64,
    pub right_level: f64,
}

/// Default number of slabs used to discretize one non-constant segment.
pub const DEFAULT_SLABS: usize = 2048;

impl Potential {
    /// Potential embedded in a zero-level medium on both sides.
    pub fn new(segments: Vec<Segment>) -> Self {
        Self {
            segments,
            left_level: 0.0,
            right_level: 0.0,
        }
    }

    pub fn with_media(mut self, left_level: f64, right_level: f64) -> Self {
        self.left_level = left_level;
        self.right_level = right_level;
        self
    }

    pub fn free() -> Self {
        Self::new(Vec::new())
    }

    pub fn extent(&self) -> f64 {
        self.segments.iter().map(|s| s.width).sum()
    }

    /// Height at global position `x` (the medium levels outside `[0, extent]`).
    pub fn height_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return self.left_level;
        }
        let mut start = 0.0;
        for s in &self.segments {
            if x <= start + s.width {
                return s.height_at(x - start);
            }
            start += s.width;
        }
        self.right_level
    }

    pub fn k_left(&self, energy: f64) -> Result<f64> {
        medium_k(energy, self.left_level, "left")
    }

    pub fn k_right(&self, energy: f64) -> Result<f64> {
        medium_k(energy, self.right_level, "right")
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.segments
            .iter()
            .all(|s| matches!(s.profile, Profile::Constant { .. }))
    }

    /// Mirror image about the midpoint; media swap sides.
    pub fn reversed(&self) -> Self {
        Self {
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
            left_level: self.right_level,
            right_level: self.left_level,
        }
    }

    /// Piecewise-constant slabs: constant segments map to one slab, linear
    /// segments to `n_slab` midpoint slabs, and each sampled sub-grid cell to
    /// enough midpoint slabs of its linear interpolant that the segment gets at
    /// least `n_slab` slabs in total.
    pub fn slabs(&self, n_slab: usize) -> Vec<Slab> {
        let n_slab = n_slab.max(1);
        let mut out = Vec::new();
        for s in &self.segments {
            match &s.profile {
                Profile::Constant { height } => out.push(Slab {
                    width: s.width,
                    height: *height,
                }),
                Profile::Linear { .. } => push_midpoint_slabs(&mut out, s, 0.0, s.width, n_slab),
                Profile::Sampled { heights } => {
                    let cells = heights.len() - 1;
                    let per = n_slab.div_ceil(cells);
                    for (a, b) in s.smooth_pieces() {
                        push_midpoint_slabs(&mut out, s, a, b, per);
                    }
                }
            }
        }
        out
    }

    /// Concatenate `other` to the right of `self`, keeping self's left medium
    /// and other's right medium.
    pub fn then(mut self, other: &Potential) -> Self {
        self.segments.extend(other.segments.iter().cloned());
        self.right_level = other.right_level;
        self
    }
}

fn push_midpoint_slabs(out: &mut Vec<Slab>, s: &Segment, a: f64, b: f64, n: usize) {
    let h = (b - a) / n as f64;
    for i in 0..n {
        let mid = a + (i as f64 + 0.5) * h;
        out.push(Slab {
            width: h,
            height: s.height_at(mid),
        });
    }
}

fn medium_k(energy: f64, level: f64, side: &'static str) -> Result<f64> {
    if energy > level {
        Ok((energy - level).sqrt())
    } else {
        Err(Error::BelowMedium {
            energy,
            level,
            side,
        })
    }
}

/// Local wave number `sqrt(E - U)` in internal units. Real above the local
/// height, positive imaginary (`i kappa`) below it, zero at a turning point.
pub fn wave_number(energy: f64, height: f64) -> Complex64 {
    let d = energy - height;
    if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    }
}

/// Two equal rectangular barriers of height `u` and width `a` separated by a
/// free gap `l`. A zero gap collapses into one barrier of width `2a`.
pub fn build_rect_pair(u: f64, a: f64, l: f64) -> Result<Potential> {
    ensure(u >= 0.0 && u.is_finite(), || format!("barrier height must be >= 0, got {u}"))?;
    ensure(l >= 0.0 && l.is_finite(), || format!("gap must be >= 0, got {l}"))?;
    let barrier = Segment::constant(a, u)?;
    if l == 0.0 {
        return Ok(Potential::new(vec![Segment::constant(2.0 * a, u)?]));
    }
    Ok(Potential::new(vec![
        barrier.clone(),
        Segment::gap(l)?,
        barrier,
    ]))
}

/// Alternating chain: `widths_barrier[i]` at `heights[i]`, separated by
/// `gaps[i]` (one fewer gap than barriers).
pub fn build_barrier_chain(barriers: &[(f64, f64)], gaps: &[f64]) -> Result<Potential> {
    ensure(!barriers.is_empty(), || "chain needs at least one barrier".into())?;
    ensure(gaps.len() + 1 == barriers.len(), || {
        format!("{} barriers need {} gaps, got {}", barriers.len(), barriers.len() - 1, gaps.len())
    })?;
    let mut segs = Vec::with_capacity(2 * barriers.len());
    for (i, &(h, w)) in barriers.iter().enumerate() {
        if i > 0 && gaps[i - 1] > 0.0 {
            segs.push(Segment::gap(gaps[i - 1])?);
        }
        segs.push(Segment::constant(w, h)?);
    }
    Ok(Potential::new(segs))
}

/// Scale the widths of barrier segments by `factor`; wells keep their width.
pub fn compress(p: &Potential, factor: f64) -> Result<Potential> {
    ensure(factor > 0.0 && factor <= 1.0 && factor.is_finite(), || {
        format!("compression factor must be in (0, 1], got {factor}")
    })?;
    let mut out = p.clone();
    for s in &mut out.segments {
        if s.role() == Role::Barrier {
            s.width *= factor;
        }
    }
    Ok(out)
}
