//! Time-hopping frame structure and the slot-rate model.
//!
//! A frame of duration `Tf = Nc * Tc` is split into `Nc` slots of `Tc`
//! seconds; each frame carries one pulse in the slot named by the current
//! time-hopping chip. The slot-rate model reports `1 / Tc` (one bit per
//! slot) next to the symbol rate `1 / Tf` that the simulator actually
//! transmits at.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};
use crate::scalar::TimeScalar;

/// Largest value carried by an 8-bit parameter port.
pub const PORT_MAX: u32 = 255;

pub type FrameConfig = FrameTiming<f64>;
pub type ExactFrameConfig = FrameTiming<Rational64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming<T> {
    tc: T,
    nc: u32,
}

impl<T: TimeScalar> FrameTiming<T> {
    pub fn new(tc: T, nc: u32) -> Result<Self> {
        if tc.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
            return param(format!("slot duration must be > 0, got {tc:?}"));
        }
        if nc == 0 || nc > PORT_MAX {
            return param(format!("slots per frame must be in 1..=255, got {nc}"));
        }
        Ok(Self { tc, nc })
    }

    pub fn tc(&self) -> T {
        self.tc
    }

    pub fn nc(&self) -> u32 {
        self.nc
    }

    pub fn tf(&self) -> T {
        frame_duration(self)
    }

    /// Checks that the slot duration is a whole number of ticks no larger
    /// than the 8-bit port allows. Returns the tick count.
    pub fn tc_ticks(&self, tick: T) -> Result<u32> {
        let ratio = (self.tc / tick).approx_f64();
        match crate::scalar::near_integer(ratio) {
            Some(n) if (1..=u64::from(PORT_MAX)).contains(&n) => Ok(n as u32),
            _ => Err(Error::Range {
                port: "Tc".into(),
                value: ratio.round() as i64,
            }),
        }
    }
}

pub fn frame_duration<T: TimeScalar>(cfg: &FrameTiming<T>) -> T {
    T::from_count(cfg.nc) * cfg.tc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport<T> {
    /// One bit per slot: `1 / Tc`, bits/s.
    pub paper_rate: T,
    /// One symbol per frame: `1 / Tf`, symbols/s.
    pub symbol_rate: T,
}

pub fn data_rate<T: TimeScalar>(cfg: &FrameTiming<T>) -> RateReport<T> {
    RateReport {
        paper_rate: T::one() / cfg.tc,
        symbol_rate: T::one() / frame_duration(cfg),
    }
}

/// Time-hopping sequence; chip `j` selects the slot of frame `j mod len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ThCode {
    chips: Vec<u8>,
}

impl ThCode {
    pub fn new(chips: Vec<u8>) -> Result<Self> {
        if chips.is_empty() {
            return param("TH code must have at least one chip");
        }
        if chips.len() > PORT_MAX as usize {
            return param(format!("TH code length {} exceeds 255", chips.len()));
        }
        Ok(Self { chips })
    }

    pub fn chips(&self) -> &[u8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn chip(&self, frame: usize) -> u8 {
        self.chips[frame % self.chips.len()]
    }

    pub fn check_fits(&self, nc: u32) -> Result<()> {
        if let Some(&c) = self.chips.iter().find(|&&c| u32::from(c) >= nc) {
            return param(format!("TH chip {c} does not fit in {nc} slots"));
        }
        Ok(())
    }
}

impl fmt::Display for ThCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.chips.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for ThCode {
    type Err = Error;

    /// Parses comma-separated chip values, e.g. `"3,1,2"`.
    fn from_str(s: &str) -> Result<Self> {
        let chips = s
            .split(',')
            .map(|t| {
                let t = t.trim();
                let v: i64 = t
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad TH chip `{t}`")))?;
                chip_value(v)
            })
            .collect::<Result<Vec<u8>>>()?;
        ThCode::new(chips)
    }
}

fn chip_value(v: i64) -> Result<u8> {
    u8::try_from(v).map_err(|_| Error::Range {
        port: "code_j_data".into(),
        value: v,
    })
}

/// Seeded uniform chips on `[0, nc)` from ChaCha8.
pub fn generate_th_code(seed: u64, length: usize, nc: u32) -> Result<ThCode> {
    if length == 0 || length > PORT_MAX as usize {
        return param(format!("TH code length must be in 1..=255, got {length}"));
    }
    if nc == 0 || nc > PORT_MAX {
        return param(format!("slots per frame must be in 1..=255, got {nc}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chips = (0..length).map(|_| rng.random_range(0..nc) as u8).collect();
    ThCode::new(chips)
}

/// Storage behind the `load_code` / `lg_code` / `code_j_data` /
/// `unload_code` ports.
///
/// Asserting `load_code` with a length latches `lg_code`; the chips then
/// arrive one per clock on `code_j_data` and replace the stored code when
/// the last one lands. `unload_code` clears the store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeRegister {
    stored: Vec<u8>,
    pending: Option<PendingLoad>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PendingLoad {
    expected: usize,
    buf: Vec<u8>,
}

impl CodeRegister {
    pub fn with_code(code: &ThCode) -> Self {
        Self {
            stored: code.chips.clone(),
            pending: None,
        }
    }

    pub fn load_code(&mut self, lg_code: i64) -> Result<()> {
        let n = u8::try_from(lg_code).map_err(|_| Error::Range {
            port: "lg_code".into(),
            value: lg_code,
        })?;
        if n == 0 {
            self.stored.clear();
            self.pending = None;
        } else {
            self.pending = Some(PendingLoad {
                expected: n as usize,
                buf: Vec::with_capacity(n as usize),
            });
        }
        Ok(())
    }

    /// One clock of `code_j_data`.
    pub fn code_j_data(&mut self, value: i64) -> Result<()> {
        let chip = chip_value(value)?;
        let Some(p) = self.pending.as_mut() else {
            return param("code_j_data clocked without load_code");
        };
        p.buf.push(chip);
        if p.buf.len() == p.expected {
            self.stored = std::mem::take(&mut p.buf);
            self.pending = None;
        }
        Ok(())
    }

    pub fn unload_code(&mut self) {
        self.stored.clear();
        self.pending = None;
    }

    pub fn is_loading(&self) -> bool {
        self.pending.is_some()
    }

    pub fn read(&self) -> &[u8] {
        &self.stored
    }

    pub fn lg_code(&self) -> u8 {
        self.stored.len() as u8
    }

    pub fn code(&self) -> Option<ThCode> {
        ThCode::new(self.stored.clone()).ok()
    }
}

/// Full serial load: `load_code` with `lg_code`, then one chip per cycle.
/// `lg_code == 0` unloads. Returns `None` when the store ends up empty.
pub fn code_register_load(
    existing: Option<&ThCode>,
    lg_code: i64,
    chip_stream: &[i64],
) -> Result<Option<ThCode>> {
    if lg_code < 0 || chip_stream.len() as i64 != lg_code {
        if !(0..=i64::from(PORT_MAX)).contains(&lg_code) {
            return Err(Error::Range {
                port: "lg_code".into(),
                value: lg_code,
            });
        }
        return param(format!(
            "lg_code {lg_code} does not match {} delivered chips",
            chip_stream.len()
        ));
    }
    let mut reg = existing.map(CodeRegister::with_code).unwrap_or_default();
    reg.load_code(lg_code)?;
    for &c in chip_stream {
        reg.code_j_data(c)?;
    }
    Ok(reg.code())
}

/// Exact timing from a slot length in clock ticks.
pub fn exact_timing(tc_ticks: u32, clock_hz: i64, nc: u32) -> Result<FrameTiming<Rational64>> {
    if clock_hz <= 0 {
        return param("clock rate must be positive");
    }
    FrameTiming::new(Rational64::new(i64::from(tc_ticks), clock_hz), nc)
}
