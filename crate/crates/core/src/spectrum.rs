//! Periodogram estimate of a pulse's spectrum occupation and the 10 dB
//! bandwidth test that defines an ultra-wideband signal.

use std::io::{self, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{param, Error, Result};
use crate::scalar::Scalar;
use crate::waveform::Waveform;

/// Minimum 10 dB bandwidth of an ultra-wideband emission, hertz.
pub const UWB_MIN_BANDWIDTH_HZ: f64 = 500e6;
pub const UWB_LEVEL_DB: f64 = 10.0;

/// One-sided magnitude-squared DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub freqs: Vec<f64>,
    pub psd: Vec<T>,
    /// Maximum bin in dB (`10 log10` of the linear value).
    pub peak_db: T,
    pub nfft: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub f_low: f64,
    pub f_high: f64,
    pub bandwidth: f64,
}

impl Band {
    pub fn new(f_low: f64, f_high: f64) -> Result<Self> {
        if !(f_low.is_finite() && f_high.is_finite() && 0.0 <= f_low && f_low < f_high) {
            return param(format!("invalid band [{f_low}, {f_high}] Hz"));
        }
        Ok(Self {
            f_low,
            f_high,
            bandwidth: f_high - f_low,
        })
    }
}

impl<T: Scalar> Spectrum<T> {
    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() < 2 {
            0.0
        } else {
            self.freqs[1] - self.freqs[0]
        }
    }

    fn peak(&self) -> (usize, T) {
        self.psd
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
    }

    /// Writes `freq_hz,psd_db` rows, dB relative to the peak bin.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "freq_hz,psd_db")?;
        let (_, peak) = self.peak();
        for (f, &p) in self.freqs.iter().zip(&self.psd) {
            let db = if p > T::zero() && peak > T::zero() {
                (10.0 * (p / peak).to_f64_lossy().log10()).max(-300.0)
            } else {
                -300.0
            };
            writeln!(out, "{f},{db:.6}")?;
        }
        Ok(())
    }
}

pub fn estimate_spectrum<T: Scalar>(w: &Waveform<T>, nfft: usize) -> Result<Spectrum<T>> {
    if w.is_empty() {
        return Err(Error::Degenerate("empty waveform".into()));
    }
    if !nfft.is_power_of_two() {
        return param(format!("nfft {nfft} is not a power of two"));
    }
    if nfft < w.len() {
        return param(format!("nfft {nfft} shorter than waveform ({} samples)", w.len()));
    }
    let mut buf: Vec<Complex<T>> = w
        .samples()
        .iter()
        .map(|&s| Complex::new(s, T::zero()))
        .chain(std::iter::repeat(Complex::new(T::zero(), T::zero())))
        .take(nfft)
        .collect();
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let bins = nfft / 2 + 1;
    let df = w.sample_rate() / nfft as f64;
    let psd: Vec<T> = buf[..bins].iter().map(|c| c.norm_sqr()).collect();
    let freqs = (0..bins).map(|k| k as f64 * df).collect();
    let peak = psd.iter().fold(T::zero(), |m, &v| if v > m { v } else { m });
    Ok(Spectrum {
        freqs,
        psd,
        peak_db: T::of(10.0) * peak.log10(),
        nfft,
    })
}

/// Outermost frequencies where the psd reaches `level_db` below its peak,
/// interpolated linearly between bins.
pub fn bandwidth_at_level<T: Scalar>(s: &Spectrum<T>, level_db: f64) -> Result<Band> {
    if level_db.is_nan() || level_db <= 0.0 {
        return param(format!("level must be > 0 dB below peak, got {level_db}"));
    }
    let (_, peak) = s.peak();
    if peak <= T::zero() {
        return Err(Error::Degenerate("spectrum has no positive bin".into()));
    }
    let thr = peak.to_f64_lossy() * 10f64.powf(-level_db / 10.0);
    let p: Vec<f64> = s.psd.iter().map(|v| v.to_f64_lossy()).collect();
    let lo = p.iter().position(|&v| v >= thr).expect("peak is above threshold");
    let hi = p.iter().rposition(|&v| v >= thr).expect("peak is above threshold");

    let cross = |below: usize, above: usize| {
        let frac = (thr - p[below]) / (p[above] - p[below]);
        s.freqs[below] + frac * (s.freqs[above] - s.freqs[below])
    };
    let f_low = if lo == 0 { s.freqs[0] } else { cross(lo - 1, lo) };
    let f_high = if hi + 1 == p.len() {
        s.freqs[hi]
    } else {
        cross(hi + 1, hi)
    };
    Ok(Band {
        f_low,
        f_high,
        bandwidth: f_high - f_low,
    })
}

pub fn is_uwb_compliant<T: Scalar>(s: &Spectrum<T>) -> Result<bool> {
    Ok(bandwidth_at_level(s, UWB_LEVEL_DB)?.bandwidth > UWB_MIN_BANDWIDTH_HZ)
}
