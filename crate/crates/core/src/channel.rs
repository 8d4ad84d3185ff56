//! AWGN, multi-user superposition and free-space range estimation.

use std::cmp::Ordering;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, Error, Result};
use crate::scalar::Scalar;
use crate::waveform::Waveform;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnSpec {
    /// Target Eb/N0 in dB; `+inf` disables the noise.
    pub ebn0_db: f64,
    pub seed: u64,
}

impl AwgnSpec {
    pub fn new(ebn0_db: f64, seed: u64) -> Self {
        Self { ebn0_db, seed }
    }

    pub fn noiseless() -> Self {
        Self {
            ebn0_db: f64::INFINITY,
            seed: 0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.ebn0_db == f64::INFINITY
    }
}

/// Per-sample standard deviation for a discrete-time white noise of
/// two-sided density `N0/2`: `sigma^2 = (N0/2) * fs`.
pub fn noise_sigma(energy_per_bit: f64, ebn0_db: f64, sample_rate: f64) -> Result<f64> {
    if !(energy_per_bit.is_finite() && energy_per_bit > 0.0) {
        return param(format!("energy per bit must be > 0, got {energy_per_bit}"));
    }
    if ebn0_db.is_nan() {
        return param("Eb/N0 is NaN");
    }
    let n0 = energy_per_bit / 10f64.powf(ebn0_db / 10.0);
    Ok((n0 / 2.0 * sample_rate).sqrt())
}

/// Seeded Gaussian sample stream. Applying it chunk by chunk draws the same
/// sequence as applying it once to the concatenation.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent sub-stream `stream` of the generator keyed by `seed`.
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn apply<T: Scalar>(&mut self, samples: &mut [T], sigma: f64) {
        for s in samples {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *s += T::of(sigma * z);
        }
    }
}

pub fn add_awgn<T: Scalar>(w: &Waveform<T>, energy_per_bit: f64, spec: &AwgnSpec) -> Result<Waveform<T>> {
    let sigma = noise_sigma(energy_per_bit, spec.ebn0_db, w.sample_rate())?;
    let mut samples = w.samples().to_vec();
    if !spec.is_noiseless() {
        NoiseStream::new(spec.seed).apply(&mut samples, sigma);
    }
    Waveform::new(samples, w.sample_rate())
}

/// Sample-wise sum with each waveform delayed by its offset (in samples).
///
/// Inputs are summed in a canonical order, so the result does not depend on
/// how the list is permuted.
pub fn superpose<T: Scalar>(waveforms: &[Waveform<T>], offsets: &[usize]) -> Result<Waveform<T>> {
    if waveforms.is_empty() {
        return param("nothing to superpose");
    }
    if waveforms.len() != offsets.len() {
        return param(format!(
            "{} waveforms but {} offsets",
            waveforms.len(),
            offsets.len()
        ));
    }
    let fs = waveforms[0].sample_rate();
    if waveforms.iter().any(|w| w.sample_rate() != fs) {
        return param("waveforms have different sample rates");
    }
    let mut order: Vec<usize> = (0..waveforms.len()).collect();
    order.sort_by(|&a, &b| canonical_cmp(&waveforms[a], offsets[a], &waveforms[b], offsets[b]));

    let len = waveforms
        .iter()
        .zip(offsets)
        .map(|(w, &o)| o + w.len())
        .max()
        .unwrap_or(0);
    let mut out = vec![T::zero(); len];
    for i in order {
        for (d, &s) in out[offsets[i]..].iter_mut().zip(waveforms[i].samples()) {
            *d += s;
        }
    }
    Ok(Waveform::from_parts(out, fs))
}

fn canonical_cmp<T: Scalar>(a: &Waveform<T>, oa: usize, b: &Waveform<T>, ob: usize) -> Ordering {
    oa.cmp(&ob).then_with(|| {
        for (x, y) in a.samples().iter().zip(b.samples()) {
            let o = x.to_f64_lossy().total_cmp(&y.to_f64_lossy());
            if o != Ordering::Equal {
                return o;
            }
        }
        a.len().cmp(&b.len())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub center_freq_hz: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub rx_sensitivity_dbm: f64,
    /// 2.0 is free space.
    pub path_loss_exponent: f64,
}

impl LinkBudget {
    pub fn free_space(tx_power_dbm: f64, center_freq_hz: f64, rx_sensitivity_dbm: f64) -> Self {
        Self {
            tx_power_dbm,
            center_freq_hz,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            rx_sensitivity_dbm,
            path_loss_exponent: 2.0,
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_freq_hz
    }

    /// Allowed path loss, dB.
    pub fn margin_db(&self) -> f64 {
        self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi - self.rx_sensitivity_dbm
    }
}

/// Distance at which the received power falls to the sensitivity. Path loss
/// is free-space Friis up to 1 m, then `10 n log10(d)`; `n = 2` is plain Friis.
pub fn friis_range(budget: &LinkBudget) -> Result<f64> {
    if !(budget.center_freq_hz.is_finite() && budget.center_freq_hz > 0.0) {
        return param(format!("center frequency must be > 0, got {}", budget.center_freq_hz));
    }
    if !(budget.path_loss_exponent.is_finite() && budget.path_loss_exponent > 0.0) {
        return param("path-loss exponent must be > 0");
    }
    let margin = budget.margin_db();
    if !margin.is_finite() || margin < 0.0 {
        return Err(Error::Domain(format!(
            "link margin {margin} dB is negative: transmit power is below sensitivity"
        )));
    }
    let fspl_1m = 20.0 * (4.0 * std::f64::consts::PI / budget.wavelength()).log10();
    Ok(10f64.powf((margin - fspl_1m) / (10.0 * budget.path_loss_exponent)))
}

/// `freq_hz,tx_dbm,range_m` for every frequency / power pair.
pub fn write_range_table<W: Write>(
    base: &LinkBudget,
    freqs_hz: &[f64],
    tx_dbm: &[f64],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "freq_hz,tx_dbm,range_m")?;
    for &f in freqs_hz {
        for &p in tx_dbm {
            let b = LinkBudget {
                tx_power_dbm: p,
                center_freq_hz: f,
                ..*base
            };
            match friis_range(&b) {
                Ok(d) => writeln!(out, "{f},{p},{d:.6}")?,
                Err(_) => writeln!(out, "{f},{p},0")?,
            }
        }
    }
    Ok(())
}
