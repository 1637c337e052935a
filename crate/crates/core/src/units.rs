//! Unit conversions between laboratory units and the internal natural units.
//!
//! Internally every computation uses `hbar = 1` and `m = 1/2`, so the free
//! wave number is simply `k = sqrt(E)`. The internal length unit is a physical
//! length (one angstrom by default) and the internal energy unit follows from
//! it: `eps0 = hbar^2 / (2 m l0^2)`. For an electron and `l0 = 1 A` this is
//! about 3.81 eV.

use serde::{Deserialize, Serialize};

/// CODATA 2018 reduced Planck constant, J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// CODATA 2018 electron mass, kg.
pub const ELECTRON_MASS_SI: f64 = 9.109_383_701_5e-31;
/// Exact elementary charge, C (so 1 eV = this many J).
pub const ELEMENTARY_CHARGE_SI: f64 = 1.602_176_634e-19;

const ANGSTROM_SI: f64 = 1e-10;
const CM_SI: f64 = 1e-2;
const ERG_SI: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Particle mass, kg.
    pub mass: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Internal length unit, m.
    pub length_unit: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::electron_angstrom()
    }
}

impl UnitSystem {
    pub fn electron_angstrom() -> Self {
        Self {
            mass: ELECTRON_MASS_SI,
            hbar: HBAR_SI,
            length_unit: ANGSTROM_SI,
        }
    }

    /// Same length unit, particle mass given as a multiple of the electron mass.
    pub fn with_mass_ratio(ratio: f64) -> Self {
        Self {
            mass: ratio * ELECTRON_MASS_SI,
            ..Self::electron_angstrom()
        }
    }

    /// Internal energy unit in joules: hbar^2 / (2 m l0^2).
    pub fn energy_unit(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass * self.length_unit * self.length_unit)
    }

    pub fn energy_unit_ev(&self) -> f64 {
        self.energy_unit() / ELEMENTARY_CHARGE_SI
    }

    pub fn from_ev(&self, e: f64) -> f64 {
        e * ELEMENTARY_CHARGE_SI / self.energy_unit()
    }
    pub fn to_ev(&self, e: f64) -> f64 {
        e * self.energy_unit() / ELEMENTARY_CHARGE_SI
    }
    pub fn from_erg(&self, e: f64) -> f64 {
        e * ERG_SI / self.energy_unit()
    }
    pub fn to_erg(&self, e: f64) -> f64 {
        e * self.energy_unit() / ERG_SI
    }
    pub fn from_angstrom(&self, x: f64) -> f64 {
        x * ANGSTROM_SI / self.length_unit
    }
    pub fn to_angstrom(&self, x: f64) -> f64 {
        x * self.length_unit / ANGSTROM_SI
    }
    pub fn from_cm(&self, x: f64) -> f64 {
        x * CM_SI / self.length_unit
    }
    pub fn to_cm(&self, x: f64) -> f64 {
        x * self.length_unit / CM_SI
    }

    /// `sqrt(2m)/hbar` expressed in A^-1 eV^-1/2.
    pub fn wave_number_scale_ev_angstrom(&self) -> f64 {
        (2.0 * self.mass * ELEMENTARY_CHARGE_SI).sqrt() / self.hbar * ANGSTROM_SI
    }
}

/// Energy unit accepted at the input boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnergyUnit {
    #[default]
    Ev,
    Erg,
    Natural,
}

/// Length unit accepted at the input boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    Angstrom,
    Cm,
    Natural,
}

impl UnitSystem {
    pub fn energy_in(&self, value: f64, unit: EnergyUnit) -> f64 {
        match unit {
            EnergyUnit::Ev => self.from_ev(value),
            EnergyUnit::Erg => self.from_erg(value),
            EnergyUnit::Natural => value,
        }
    }
    pub fn energy_out(&self, value: f64, unit: EnergyUnit) -> f64 {
        match unit {
            EnergyUnit::Ev => self.to_ev(value),
            EnergyUnit::Erg => self.to_erg(value),
            EnergyUnit::Natural => value,
        }
    }
    pub fn length_in(&self, value: f64, unit: LengthUnit) -> f64 {
        match unit {
            LengthUnit::Angstrom => self.from_angstrom(value),
            LengthUnit::Cm => self.from_cm(value),
            LengthUnit::Natural => value,
        }
    }
    pub fn length_out(&self, value: f64, unit: LengthUnit) -> f64 {
        match unit {
            LengthUnit::Angstrom => self.to_angstrom(value),
            LengthUnit::Cm => self.to_cm(value),
            LengthUnit::Natural => value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn electron_energy_unit_is_about_3_81_ev() {
        let u = UnitSystem::electron_angstrom();
        assert!((u.energy_unit_ev() - 3.809_982).abs() < 1e-5);
        assert!((u.wave_number_scale_ev_angstrom() - 0.512_317).abs() < 1e-6);
    }

    #[test]
    fn reference_scale_conversions() {
        let u = UnitSystem::electron_angstrom();
        assert!((u.from_cm(2.8e-8) - 2.8).abs() < 1e-12);
        // 1 erg = 6.241509e11 eV
        assert!((u.to_ev(u.from_erg(5e-12)) - 3.120_754_5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn round_trips_are_identity(x in 1e-6f64..1e6) {
            let u = UnitSystem::with_mass_ratio(0.067);
            for (a, b) in [
                (u.to_ev(u.from_ev(x)), x),
                (u.to_erg(u.from_erg(x)), x),
                (u.to_angstrom(u.from_angstrom(x)), x),
                (u.to_cm(u.from_cm(x)), x),
            ] {
                prop_assert!(((a - b) / b).abs() < 1e-12);
            }
        }
    }
}
