//! Receive path: ADC dimensioning (Nyquist and band-pass sub-sampling),
//! coherent correlation demodulation and the Monte Carlo BER harness.
//!
//! Synchronization and channel knowledge are perfect: the receiver knows the
//! frame timing, hop code and scheme of the transmitter.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::channel::{noise_sigma, NoiseStream};
use crate::error::{param, Error, Result};
use crate::framing::{FrameConfig, ThCode};
use crate::modem::{modulate_from, quantize_mid_rise, validate_quantizer, FrameLayout, ModScheme, TxConfig};
use crate::scalar::{near_integer, Scalar};
use crate::spectrum::Band;
use crate::waveform::{signal_energy, synthesize_pulse, Waveform};

/// Relative slack on the sampling inequalities.
const RATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcMode {
    Nyquist,
    Subsampling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcModel {
    pub sample_rate: f64,
    pub bits: u8,
    pub full_scale: f64,
    pub mode: AdcMode,
}

impl AdcModel {
    pub fn new(sample_rate: f64, bits: u8, full_scale: f64, mode: AdcMode) -> Result<Self> {
        validate_quantizer(sample_rate, bits, full_scale)?;
        Ok(Self {
            sample_rate,
            bits,
            full_scale,
            mode,
        })
    }

    /// Checks the sampling rate against `band`. Returns the Nyquist zone
    /// the band lands in (1 for plain Nyquist sampling).
    pub fn check_placement(&self, band: &Band) -> Result<u32> {
        let fs = self.sample_rate;
        let ge = |a: f64, b: f64| a >= b * (1.0 - RATE_EPS);
        match self.mode {
            AdcMode::Nyquist => {
                if ge(fs, 2.0 * band.f_high) {
                    Ok(1)
                } else {
                    Err(Error::Dimensioning(format!(
                        "sample_rate >= 2 * f_high fails: {fs} < {}",
                        2.0 * band.f_high
                    )))
                }
            }
            AdcMode::Subsampling => {
                if !ge(fs, 2.0 * band.bandwidth) {
                    return Err(Error::Dimensioning(format!(
                        "sample_rate >= 2 * bandwidth fails: {fs} < {}",
                        2.0 * band.bandwidth
                    )));
                }
                nyquist_zone(band, fs).ok_or_else(|| {
                    Error::Dimensioning(format!(
                        "no integer n >= 1 with 2*f_high/n <= {fs} <= 2*f_low/(n-1) for band [{}, {}] Hz",
                        band.f_low, band.f_high
                    ))
                })
            }
        }
    }
}

/// Largest `n` with `2 f_high / n <= fs <= 2 f_low / (n - 1)`.
fn nyquist_zone(band: &Band, fs: f64) -> Option<u32> {
    let max_n = (band.f_high / band.bandwidth * (1.0 + RATE_EPS)).floor() as u32;
    (1..=max_n.max(1)).rev().find(|&n| {
        let lower = 2.0 * band.f_high / f64::from(n);
        let upper = if n == 1 {
            f64::INFINITY
        } else {
            2.0 * band.f_low / f64::from(n - 1)
        };
        fs >= lower * (1.0 - RATE_EPS) && fs <= upper * (1.0 + RATE_EPS)
    })
}

fn decimation_ratio(input_rate: f64, output_rate: f64) -> Result<usize> {
    match near_integer(input_rate / output_rate) {
        Some(r) if r >= 1 => Ok(r as usize),
        _ => param(format!(
            "input rate {input_rate} Hz is not an integer multiple of ADC rate {output_rate} Hz"
        )),
    }
}

fn decimate_quantize<T: Scalar>(samples: &[T], ratio: usize, adc: &AdcModel) -> Vec<T> {
    let mut out: Vec<T> = samples.iter().step_by(ratio).copied().collect();
    quantize_mid_rise(&mut out, adc.bits, adc.full_scale);
    out
}

/// Validates the ADC against `band`, decimates by the integer rate ratio
/// (phase 0) and quantizes.
pub fn adc_sample<T: Scalar>(w: &Waveform<T>, adc: &AdcModel, band: &Band) -> Result<Waveform<T>> {
    adc.check_placement(band)?;
    let ratio = decimation_ratio(w.sample_rate(), adc.sample_rate)?;
    Ok(Waveform::from_parts(
        decimate_quantize(w.samples(), ratio, adc),
        adc.sample_rate,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxConfig<T> {
    pub adc: AdcModel,
    /// Signal band the ADC placement is checked against.
    pub band: Band,
    pub frame: FrameConfig,
    pub code: ThCode,
    pub scheme: ModScheme,
    /// Expected pulse at the ADC rate.
    pub template: Waveform<T>,
}

impl<T: Scalar> RxConfig<T> {
    pub fn new(
        adc: AdcModel,
        band: Band,
        frame: FrameConfig,
        code: ThCode,
        scheme: ModScheme,
        template: Waveform<T>,
    ) -> Result<Self> {
        let cfg = Self {
            adc,
            band,
            frame,
            code,
            scheme,
            template,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Receiver mirroring `tx`, with the template taken through the same
    /// decimation and quantization as the signal.
    pub fn matched(tx: &TxConfig, adc: AdcModel, band: Band) -> Result<Self> {
        let pulse: Waveform<T> = synthesize_pulse(&tx.pulse)?;
        let template = adc_sample(&pulse, &adc, &band)?;
        Self::new(adc, band, tx.frame, tx.code.clone(), tx.scheme, template)
    }

    pub fn validate(&self) -> Result<()> {
        self.adc.check_placement(&self.band)?;
        if self.template.sample_rate() != self.adc.sample_rate {
            return param("template is not at the ADC rate");
        }
        if signal_energy(&self.template).partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
            return param("template has no energy");
        }
        self.code.check_fits(self.frame.nc())?;
        self.layout().map(|_| ())
    }

    pub fn layout(&self) -> Result<FrameLayout> {
        FrameLayout::at_rate(&self.frame, &self.scheme, self.adc.sample_rate)
    }
}

fn correlate<T: Scalar>(rx: &[T], start: usize, template: &[T]) -> T {
    let end = (start + template.len()).min(rx.len());
    if start >= end {
        return T::zero();
    }
    rx[start..end]
        .iter()
        .zip(template)
        .fold(T::zero(), |acc, (&r, &t)| acc + r * t)
}

pub fn demodulate<T: Scalar>(rx: &Waveform<T>, cfg: &RxConfig<T>) -> Result<Vec<bool>> {
    demodulate_from(rx, 0, cfg)
}

/// Demodulates a stream whose first sample sits on `first_frame`'s boundary.
/// Exact ties decide bit 0.
pub fn demodulate_from<T: Scalar>(rx: &Waveform<T>, first_frame: usize, cfg: &RxConfig<T>) -> Result<Vec<bool>> {
    let layout = cfg.layout()?;
    let frames = rx.len() / layout.frame;
    if frames == 0 {
        return param(format!(
            "received {} samples, shorter than one frame ({})",
            rx.len(),
            layout.frame
        ));
    }
    let r = rx.samples();
    let t = cfg.template.samples();
    let ook_threshold = t.iter().fold(T::zero(), |a, &x| a + x * x) / T::of(2.0);

    Ok((0..frames)
        .map(|i| {
            let j = first_frame + i;
            let start = layout.pulse_start(j, &cfg.code) - first_frame * layout.frame;
            let z = correlate(r, start, t);
            match cfg.scheme {
                ModScheme::Bpam => z > T::zero(),
                ModScheme::Ook => z > ook_threshold,
                ModScheme::Ppm { .. } => correlate(r, start + layout.ppm_shift, t) > z,
            }
        })
        .collect())
}

/// Transmitted energy per bit: the pulse energy, halved for OOK where only
/// ones carry a pulse.
pub fn energy_per_bit(tx: &TxConfig) -> Result<f64> {
    let e = signal_energy(&synthesize_pulse::<f64>(&tx.pulse)?);
    Ok(match tx.scheme {
        ModScheme::Ook => e / 2.0,
        _ => e,
    })
}

pub fn eb_convention(scheme: &ModScheme) -> &'static str {
    match scheme {
        ModScheme::Ook => "Eb = average transmitted energy per bit (half the pulse energy)",
        _ => "Eb = transmitted pulse energy per bit",
    }
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Closed-form coherent BER: `Q(sqrt(2 Eb/N0))` for BPAM, `Q(sqrt(Eb/N0))`
/// for orthogonal PPM and for OOK with average-energy Eb.
pub fn theoretical_ber(scheme: &ModScheme, ebn0_db: f64) -> f64 {
    let g = 10f64.powf(ebn0_db / 10.0);
    match scheme {
        ModScheme::Bpam => q_function((2.0 * g).sqrt()),
        ModScheme::Ppm { .. } | ModScheme::Ook => q_function(g.sqrt()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRow {
    pub ebn0_db: f64,
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci95_halfwidth: f64,
}

impl BerRow {
    pub fn new(ebn0_db: f64, errors: u64, bits: u64) -> Self {
        let ber = errors as f64 / bits as f64;
        Self {
            ebn0_db,
            errors,
            bits,
            ber,
            ci95_halfwidth: 1.96 * (ber * (1.0 - ber) / bits as f64).sqrt(),
        }
    }

    /// True when the measured BER lies inside the 95% binomial interval
    /// around `expected`.
    pub fn agrees_with(&self, expected: f64) -> bool {
        let half = 1.96 * (expected * (1.0 - expected) / self.bits as f64).sqrt();
        (self.ber - expected).abs() <= half
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub scheme: ModScheme,
    pub rows: Vec<BerRow>,
}

impl BerCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# scheme: {}", self.scheme.name())?;
        writeln!(out, "# {}", eb_convention(&self.scheme))?;
        writeln!(out, "ebn0_db,bits,errors,ber,ci95")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{:.8e},{:.8e}", r.ebn0_db, r.bits, r.errors, r.ber, r.ci95_halfwidth)?;
        }
        Ok(())
    }
}

const BLOCK_BITS: usize = 4096;

pub fn check_consistent<T: Scalar>(tx: &TxConfig, rx: &RxConfig<T>) -> Result<usize> {
    tx.validate()?;
    rx.validate()?;
    if tx.frame != rx.frame || tx.code != rx.code || tx.scheme != rx.scheme {
        return param("transmitter and receiver frame/code/scheme differ");
    }
    decimation_ratio(tx.sample_rate(), rx.adc.sample_rate)
}

/// Seeded Monte Carlo BER at each Eb/N0.
///
/// Point `i` draws its bits from ChaCha8 stream `2i` and its noise from
/// stream `2i + 1` of `seed`, so rows do not depend on scheduling.
pub fn ber_sweep<T: Scalar>(
    tx: &TxConfig,
    rx: &RxConfig<T>,
    ebn0_list: &[f64],
    nbits: usize,
    seed: u64,
) -> Result<BerCurve> {
    if nbits < 1000 {
        return param(format!("need at least 1000 bits per point, got {nbits}"));
    }
    let ratio = check_consistent(tx, rx)?;
    let eb = energy_per_bit(tx)?;
    let rows = ebn0_list
        .par_iter()
        .enumerate()
        .map(|(i, &ebn0)| {
            let sigma = noise_sigma(eb, ebn0, tx.sample_rate())?;
            let mut bit_rng = ChaCha8Rng::seed_from_u64(seed);
            bit_rng.set_stream(2 * i as u64);
            let mut noise = NoiseStream::split(seed, 2 * i as u64 + 1);
            let mut errors = 0u64;
            let mut frame = 0;
            while frame < nbits {
                let n = BLOCK_BITS.min(nbits - frame);
                let bits: Vec<bool> = (0..n).map(|_| bit_rng.random()).collect();
                let tx_wave: Waveform<T> = modulate_from(&bits, frame, tx)?;
                let mut samples = tx_wave.into_samples();
                if ebn0 != f64::INFINITY {
                    noise.apply(&mut samples, sigma);
                }
                let rx_wave = Waveform::from_parts(decimate_quantize(&samples, ratio, &rx.adc), rx.adc.sample_rate);
                let decided = demodulate_from(&rx_wave, frame, rx)?;
                errors += bits.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
                frame += n;
            }
            Ok(BerRow::new(ebn0, errors, nbits as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        scheme: tx.scheme,
        rows,
    })
}
