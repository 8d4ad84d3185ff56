//! Transmit path: bits onto a time-hopped pulse train, then the DAC model.

use crate::error::{param, Result};
use crate::framing::{FrameConfig, ThCode};
use crate::scalar::{near_integer, Scalar};
use crate::waveform::{synthesize_pulse, PulseSpec, Waveform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModScheme {
    /// Binary PPM; bit 1 is delayed by `delta` seconds.
    Ppm { delta: f64 },
    Ook,
    Bpam,
}

impl ModScheme {
    /// Orthogonal PPM: the shift equals the pulse duration.
    pub fn orthogonal_ppm(pulse: &PulseSpec) -> Self {
        ModScheme::Ppm {
            delta: pulse.duration,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModScheme::Ppm { .. } => "ppm",
            ModScheme::Ook => "ook",
            ModScheme::Bpam => "bpam",
        }
    }

    pub fn ppm_delta(&self) -> f64 {
        match *self {
            ModScheme::Ppm { delta } => delta,
            _ => 0.0,
        }
    }
}

/// Frame geometry in whole samples at one sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub slot: usize,
    pub frame: usize,
    pub ppm_shift: usize,
}

impl FrameLayout {
    pub fn at_rate(frame: &FrameConfig, scheme: &ModScheme, fs: f64) -> Result<Self> {
        let slot = whole_samples(frame.tc() * fs, "slot duration")?;
        let ppm_shift = match scheme {
            ModScheme::Ppm { delta } => whole_samples(delta * fs, "PPM shift")?,
            _ => 0,
        };
        if slot == 0 {
            return param("slot shorter than one sample");
        }
        Ok(Self {
            slot,
            frame: slot * frame.nc() as usize,
            ppm_shift,
        })
    }

    /// First sample of the unshifted pulse position in frame `j`.
    pub fn pulse_start(&self, j: usize, code: &ThCode) -> usize {
        j * self.frame + code.chip(j) as usize * self.slot
    }
}

fn whole_samples(x: f64, what: &str) -> Result<usize> {
    near_integer(x)
        .map(|n| n as usize)
        .ok_or_else(|| crate::Error::Parameter(format!("{what} is not a whole number of samples ({x})")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxConfig {
    pub pulse: PulseSpec,
    pub frame: FrameConfig,
    pub code: ThCode,
    pub scheme: ModScheme,
}

impl TxConfig {
    pub fn new(pulse: PulseSpec, frame: FrameConfig, code: ThCode, scheme: ModScheme) -> Result<Self> {
        let cfg = Self {
            pulse,
            frame,
            code,
            scheme,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        self.code.check_fits(self.frame.nc())?;
        let layout = self.layout()?;
        let plen = self.pulse.sample_count();
        if plen > layout.slot {
            return param(format!(
                "pulse ({plen} samples) longer than a slot ({} samples)",
                layout.slot
            ));
        }
        if let ModScheme::Ppm { delta } = self.scheme {
            if delta.is_nan() || delta <= 0.0 {
                return param("PPM shift must be > 0");
            }
            if layout.ppm_shift + plen > layout.slot {
                return param("PPM shift pushes the pulse out of its slot");
            }
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.pulse.sample_rate
    }

    pub fn layout(&self) -> Result<FrameLayout> {
        FrameLayout::at_rate(&self.frame, &self.scheme, self.pulse.sample_rate)
    }

    pub fn frame_samples(&self) -> Result<usize> {
        Ok(self.layout()?.frame)
    }
}

pub fn modulate<T: Scalar>(bits: &[bool], cfg: &TxConfig) -> Result<Waveform<T>> {
    modulate_from(bits, 0, cfg)
}

/// Modulates `bits` as frames `first_frame..first_frame + bits.len()`: the
/// hop chips follow the absolute frame index, the output starts at
/// `first_frame`'s boundary.
pub fn modulate_from<T: Scalar>(bits: &[bool], first_frame: usize, cfg: &TxConfig) -> Result<Waveform<T>> {
    if bits.is_empty() {
        return param("no bits to modulate");
    }
    cfg.validate()?;
    let layout = cfg.layout()?;
    let pulse: Waveform<T> = synthesize_pulse(&cfg.pulse)?;
    let mut out = vec![T::zero(); bits.len() * layout.frame];

    for (i, &bit) in bits.iter().enumerate() {
        let j = first_frame + i;
        let start = layout.pulse_start(j, &cfg.code) - first_frame * layout.frame;
        let (offset, sign) = match cfg.scheme {
            ModScheme::Ppm { .. } => (if bit { layout.ppm_shift } else { 0 }, T::one()),
            ModScheme::Ook if !bit => continue,
            ModScheme::Ook => (0, T::one()),
            ModScheme::Bpam => (0, if bit { T::one() } else { -T::one() }),
        };
        let dst = &mut out[start + offset..start + offset + pulse.len()];
        for (d, &p) in dst.iter_mut().zip(pulse.samples()) {
            *d = sign * p;
        }
    }
    Ok(Waveform::from_parts(out, cfg.pulse.sample_rate))
}

/// Uniform quantizer model shared by the DAC and ADC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DacModel {
    pub sample_rate: f64,
    pub bits: u8,
    pub full_scale: f64,
}

impl DacModel {
    pub fn new(sample_rate: f64, bits: u8, full_scale: f64) -> Result<Self> {
        validate_quantizer(sample_rate, bits, full_scale)?;
        Ok(Self {
            sample_rate,
            bits,
            full_scale,
        })
    }

    pub fn lsb(&self) -> f64 {
        lsb(self.bits, self.full_scale)
    }
}

pub(crate) fn validate_quantizer(sample_rate: f64, bits: u8, full_scale: f64) -> Result<()> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return param(format!("converter rate must be > 0, got {sample_rate}"));
    }
    if !(1..=16).contains(&bits) {
        return param(format!("converter resolution must be 1..=16 bits, got {bits}"));
    }
    if !(full_scale.is_finite() && full_scale > 0.0) {
        return param(format!("full scale must be > 0, got {full_scale}"));
    }
    Ok(())
}

fn lsb(bits: u8, full_scale: f64) -> f64 {
    2.0 * full_scale / f64::from(1u32 << bits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized<T> {
    pub waveform: Waveform<T>,
    /// Samples whose magnitude exceeded full scale.
    pub clipped: usize,
}

/// Mid-rise quantization to `2^bits` levels over `[-fs, +fs]`; returns the
/// clip count.
pub(crate) fn quantize_mid_rise<T: Scalar>(samples: &mut [T], bits: u8, full_scale: f64) -> usize {
    let step = T::of(lsb(bits, full_scale));
    let half_levels = f64::from(1u32 << (bits - 1));
    let lo = T::of(-half_levels);
    let hi = T::of(half_levels - 1.0);
    let fs = T::of(full_scale);
    let half = T::of(0.5);
    let mut clipped = 0;
    for s in samples.iter_mut() {
        if s.abs() > fs {
            clipped += 1;
        }
        let idx = (*s / step).floor().max(lo).min(hi);
        *s = (idx + half) * step;
    }
    clipped
}

pub fn dac_quantize<T: Scalar>(w: &Waveform<T>, dac: &DacModel) -> Quantized<T> {
    let mut samples = w.samples().to_vec();
    let clipped = quantize_mid_rise(&mut samples, dac.bits, dac.full_scale);
    Quantized {
        waveform: Waveform::from_parts(samples, w.sample_rate()),
        clipped,
    }
}
