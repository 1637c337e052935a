//! TOML run configuration and its conversion to internal units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Potential, Profile, Role, Segment};
use crate::spectra::wells::{OuterWalls, Well, WellSystem};
use crate::units::{EnergyUnit, LengthUnit, UnitSystem};

use super::Command;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmit: Option<TransmitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance: Option<ResonanceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riccati: Option<RiccatiSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wells: Option<WellsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<BandsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    #[serde(default)]
    pub energy: EnergyUnit,
    #[serde(default)]
    pub length: LengthUnit,
    /// Particle mass in electron masses.
    #[serde(default = "one")]
    pub mass_ratio: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for UnitsSection {
    fn default() -> Self {
        Self {
            energy: EnergyUnit::default(),
            length: LengthUnit::default(),
            mass_ratio: 1.0,
        }
    }
}

/// Converts user-facing values to internal units and back.
#[derive(Debug, Clone, Copy)]
pub struct Units {
    pub system: UnitSystem,
    pub energy: EnergyUnit,
    pub length: LengthUnit,
}

impl Units {
    pub fn new(s: &UnitsSection) -> Result<Self> {
        if !(s.mass_ratio > 0.0 && s.mass_ratio.is_finite()) {
            return Err(Error::Config(format!("units.mass_ratio must be positive, got {}", s.mass_ratio)));
        }
        Ok(Self {
            system: UnitSystem::with_mass_ratio(s.mass_ratio),
            energy: s.energy,
            length: s.length,
        })
    }
    pub fn e_in(&self, v: f64) -> f64 {
        self.system.energy_in(v, self.energy)
    }
    pub fn e_out(&self, v: f64) -> f64 {
        self.system.energy_out(v, self.energy)
    }
    pub fn l_in(&self, v: f64) -> f64 {
        self.system.length_in(v, self.length)
    }
    pub fn l_out(&self, v: f64) -> f64 {
        self.system.length_out(v, self.length)
    }
    /// Inverse-length quantities such as loss densities.
    pub fn inv_l_in(&self, v: f64) -> f64 {
        v / self.l_in(1.0)
    }
}

/// A single value or an inclusive grid `from..=to` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Point(f64),
    Range { from: f64, to: f64, steps: usize },
}

impl Sweep {
    pub fn values(&self, what: &str) -> Result<Vec<f64>> {
        match *self {
            Sweep::Point(v) => {
                finite(v, what)?;
                Ok(vec![v])
            }
            Sweep::Range { from, to, steps } => {
                finite(from, what)?;
                finite(to, what)?;
                if steps < 2 {
                    return Err(Error::Config(format!("{what}: a range needs steps >= 2, got {steps}")));
                }
                if from == to {
                    return Err(Error::Config(format!("{what}: degenerate range from = to = {from}")));
                }
                Ok((0..steps)
                    .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
                    .collect())
            }
        }
    }
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what}: value {v} is not finite")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Constant,
    Gap,
    Linear,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleSpec {
    Barrier,
    Well,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    /// Energy per length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<RoleSpec>,
    /// Free-form label, echoed but otherwise ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub left_level: f64,
    #[serde(default)]
    pub right_level: f64,
    #[serde(default)]
    pub segment: Vec<SegmentSpec>,
}

impl SegmentSpec {
    fn build(&self, u: &Units, idx: usize) -> Result<Segment> {
        let need = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| Error::Config(format!("segment {idx} ({:?}) needs `{field}`", self.kind)))
        };
        let width = u.l_in(self.width);
        let profile = match self.kind {
            SegmentKind::Constant => Profile::Constant {
                height: u.e_in(need(self.height, "height")?),
            },
            SegmentKind::Gap => Profile::Constant { height: 0.0 },
            SegmentKind::Linear => Profile::Linear {
                start: u.e_in(need(self.start, "start")?),
                slope: u.e_in(need(self.slope, "slope")?) / u.l_in(1.0),
            },
            SegmentKind::Sampled => Profile::Sampled {
                heights: self
                    .heights
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("segment {idx} (sampled) needs `heights`")))?
                    .iter()
                    .map(|&h| u.e_in(h))
                    .collect(),
            },
        };
        let seg = Segment::new(width, profile).map_err(|e| Error::Config(format!("segment {idx}: {e}")))?;
        Ok(match self.role {
            Some(RoleSpec::Barrier) => seg.with_role(Role::Barrier),
            Some(RoleSpec::Well) => seg.with_role(Role::Well),
            None => seg,
        })
    }
}

impl PotentialSpec {
    pub fn build(&self, u: &Units) -> Result<Potential> {
        self.build_range(u, 0..self.segment.len())
    }

    /// Potential from a sub-range of the segments, keeping the media.
    pub fn build_range(&self, u: &Units, range: std::ops::Range<usize>) -> Result<Potential> {
        let segs = self.segment[range.clone()]
            .iter()
            .zip(range)
            .map(|(s, i)| s.build(u, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Potential::new(segs).with_media(u.e_in(self.left_level), u.e_in(self.right_level)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitSection {
    pub energy: Sweep,
    /// Index of the segment whose width is swept by `gap`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_segment: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<Sweep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectCase {
    pub height: f64,
    pub width: f64,
    pub energy: f64,
    /// Reference gap to compare against, reported on the first row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ResonanceSection {
    /// Closed-form gaps of equal rectangular pairs next to the oracle search.
    RectPair { cases: Vec<RectCase>, l_max: f64 },
    /// Resonant widths of one gap segment of `[potential]` at fixed energy.
    Gap {
        gap_segment: usize,
        energy: f64,
        #[serde(default)]
        l_min: f64,
        l_max: f64,
        #[serde(default = "default_grid")]
        grid: usize,
    },
    /// Unit-transmission energies of `[potential]`.
    Energy {
        e_min: f64,
        e_max: f64,
        #[serde(default = "default_grid")]
        grid: usize,
    },
    /// Minimal resonance spacing of pair chains with `n` barriers.
    Density {
        height: f64,
        width: f64,
        intra_gap: f64,
        inter_gap: f64,
        n: Vec<usize>,
        e_min: f64,
        e_max: f64,
        #[serde(default = "default_grid")]
        grid: usize,
    },
}

fn default_grid() -> usize {
    2000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiccatiForm {
    #[default]
    Complex,
    Real,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    /// `[re, im]` per unit length.
    #[serde(default)]
    pub w: [f64; 2],
    #[serde(default)]
    pub w_prime: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiSection {
    pub energy: f64,
    #[serde(default)]
    pub form: RiccatiForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSpec>,
    /// Largest step in length units; also the output resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellSpec {
    pub depth: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    /// Indices of the barriers set to the scanned width.
    pub barriers: Vec<usize>,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellsSection {
    pub wells: Vec<WellSpec>,
    #[serde(default)]
    pub barriers: Vec<f64>,
    #[serde(default = "default_outer")]
    pub outer: OuterWalls,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
}

fn default_outer() -> OuterWalls {
    OuterWalls::Infinite
}

impl WellsSection {
    pub fn build(&self, u: &Units) -> Result<WellSystem> {
        WellSystem::new(
            self.wells
                .iter()
                .map(|w| Well {
                    depth: u.e_in(w.depth),
                    width: u.l_in(w.width),
                })
                .collect(),
            self.barriers.iter().map(|&b| u.l_in(b)).collect(),
            self.outer,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsSection {
    pub e_min: f64,
    pub e_max: f64,
    #[serde(default = "default_band_grid")]
    pub grid: usize,
    #[serde(default = "default_factors")]
    pub factors: Vec<f64>,
}

fn default_band_grid() -> usize {
    4000
}

fn default_factors() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Fixed,
    Uniform,
    Normal,
}

/// A number, or `"optimal"` for the most transparent height in `search`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanSpec {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub kind: DistKind,
    pub mean: MeanSpec,
    #[serde(default)]
    pub half_width: f64,
    #[serde(default)]
    pub std_dev: f64,
    /// Read `half_width` and `std_dev` as fractions of the mean.
    #[serde(default)]
    pub relative: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub left: PotentialSpec,
    pub right: PotentialSpec,
    pub center_width: f64,
    pub energy: f64,
    pub distribution: DistributionSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100_000
}

/// Extract the TOML text from a config file or a previous output.
///
/// Outputs carry their config as `#% ` comment lines (CSV) or in
/// `header.config` (JSON); plain files are taken as-is.
pub fn config_text(raw: &str) -> Result<String> {
    if raw.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(raw).map_err(|e| Error::Config(format!("json: {e}")))?;
        return v["header"]["config"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| Error::Config("json input has no header.config".into()));
    }
    let echoed: Vec<&str> = raw
        .lines()
        .filter_map(|l| l.strip_prefix("#%"))
        .map(|l| l.strip_prefix(' ').unwrap_or(l))
        .collect();
    if echoed.is_empty() {
        Ok(raw.to_owned())
    } else {
        Ok(echoed.join("\n") + "\n")
    }
}

pub fn parse(raw: &str) -> Result<Config> {
    toml::from_str(&config_text(raw)?).map_err(|e| Error::Config(e.to_string()))
}

pub fn to_toml(cfg: &Config) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
}
