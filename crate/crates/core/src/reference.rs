//! Synthesis results for the static and reconfigurable TH-PPM
//! receivers on three targets, kept as constants for comparison reports; the
//! simulator never derives them.
//!
//! ASIC area is kept unitless because no unit is given for it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    AsicAms035,
    SpartanIii,
    Virtex5,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::AsicAms035, Target::SpartanIii, Target::Virtex5];

    pub fn name(&self) -> &'static str {
        match self {
            Target::AsicAms035 => "ASIC-AMS-0.35um",
            Target::SpartanIii => "Spartan-III",
            Target::Virtex5 => "Virtex-5",
        }
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asic" | "asic-ams-0.35um" => Ok(Target::AsicAms035),
            "spartan-iii" | "spartan3" | "spartan-3" | "spartan" => Ok(Target::SpartanIii),
            "virtex-5" | "virtex5" | "virtex" => Ok(Target::Virtex5),
            _ => Err(Error::Lookup(format!("target `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Version {
    Static,
    Reconfigurable,
}

impl Version {
    pub const ALL: [Version; 2] = [Version::Static, Version::Reconfigurable];

    pub fn name(&self) -> &'static str {
        match self {
            Version::Static => "static",
            Version::Reconfigurable => "reconfigurable",
        }
    }
}

impl FromStr for Version {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(Version::Static),
            "reconfigurable" | "reconf" => Ok(Version::Reconfigurable),
            _ => Err(Error::Lookup(format!("version `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeMetric {
    /// ASIC total area, unit not given.
    Area(f64),
    Gates(u32),
}

impl SizeMetric {
    pub fn value(&self) -> f64 {
        match *self {
            SizeMetric::Area(a) => a,
            SizeMetric::Gates(g) => f64::from(g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRecord {
    pub target: Target,
    pub version: Version,
    /// Achieved clock after place-and-route (FPGA) or synthesis (ASIC), MHz.
    pub frequency_mhz: f64,
    /// Synthesis-only estimate; FPGA tables only.
    pub synthesis_frequency_mhz: Option<f64>,
    pub clock_ns: Option<f64>,
    pub size: SizeMetric,
    pub power_mw: Option<f64>,
    /// Cells as they appear in the printed table.
    pub printed: &'static [&'static str],
}

impl fmt::Display for ReferenceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {} MHz", self.target.name(), self.version.name(), self.frequency_mhz)?;
        match self.size {
            SizeMetric::Area(a) => write!(f, ", area {a}")?,
            SizeMetric::Gates(g) => write!(f, ", {g} gates")?,
        }
        if let Some(p) = self.power_mw {
            write!(f, ", {p:.4} mW")?;
        }
        Ok(())
    }
}

pub const RECORDS: [ReferenceRecord; 6] = [
    ReferenceRecord {
        target: Target::AsicAms035,
        version: Version::Static,
        frequency_mhz: 333.0,
        synthesis_frequency_mhz: None,
        clock_ns: Some(3.0),
        size: SizeMetric::Area(152123.9375),
        power_mw: Some(23.8080),
        printed: &["333 MHz", "3 ns", "152123.937500", "23.8080 mW"],
    },
    ReferenceRecord {
        target: Target::AsicAms035,
        version: Version::Reconfigurable,
        frequency_mhz: 50.0,
        synthesis_frequency_mhz: None,
        clock_ns: Some(20.0),
        size: SizeMetric::Area(1254628.5),
        power_mw: Some(18.8108),
        printed: &["50 MHz", "20 ns", "1254628.500000", "18.8108 mW"],
    },
    ReferenceRecord {
        target: Target::SpartanIii,
        version: Version::Static,
        frequency_mhz: 129.416,
        synthesis_frequency_mhz: Some(160.8),
        clock_ns: None,
        size: SizeMetric::Gates(6466),
        power_mw: None,
        printed: &["160,8 MHz", "129,416 MHz", "6466"],
    },
    ReferenceRecord {
        target: Target::SpartanIii,
        version: Version::Reconfigurable,
        frequency_mhz: 62.672,
        synthesis_frequency_mhz: Some(84.9),
        clock_ns: None,
        size: SizeMetric::Gates(55054),
        power_mw: None,
        printed: &["84,9 MHz", "62,672 MHz", "55054"],
    },
    ReferenceRecord {
        target: Target::Virtex5,
        version: Version::Static,
        frequency_mhz: 382.117,
        synthesis_frequency_mhz: Some(448.7),
        clock_ns: None,
        size: SizeMetric::Gates(6232),
        power_mw: None,
        printed: &["448,7 MHz", "382,117 MHz", "6232"],
    },
    ReferenceRecord {
        target: Target::Virtex5,
        version: Version::Reconfigurable,
        frequency_mhz: 104.3,
        synthesis_frequency_mhz: Some(128.9),
        clock_ns: None,
        size: SizeMetric::Gates(15422),
        power_mw: None,
        printed: &["128,9 MHz", "104,3 MHz", "15422"],
    },
];

pub fn lookup_reference(target: Target, version: Version) -> Result<&'static ReferenceRecord> {
    RECORDS
        .iter()
        .find(|r| r.target == target && r.version == version)
        .ok_or_else(|| Error::Lookup(format!("{} / {}", target.name(), version.name())))
}

/// Looks a record up by names such as `("asic", "static")`.
pub fn lookup_by_name(target: &str, version: &str) -> Result<&'static ReferenceRecord> {
    lookup_reference(target.parse()?, version.parse()?)
}
