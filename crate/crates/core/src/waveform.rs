//! Pulse synthesis as RAM-style sample tables, plus the sampled-signal
//! container used everywhere between transmitter, channel and receiver.

use std::io::{self, Write};

use crate::error::{param, Result};
use crate::scalar::{ceil_count, Scalar};

/// Ratio between a Gaussian-family pulse's support and its standard deviation.
pub const GAUSSIAN_SUPPORT_SIGMAS: f64 = 7.0;

/// Uniformly sampled real signal in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    samples: Vec<T>,
    sample_rate: f64,
}

impl<T: Scalar> Waveform<T> {
    pub fn new(samples: Vec<T>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return param(format!("sample rate must be positive, got {sample_rate}"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return param(format!("sample {i} is not finite"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![T::zero(); len], sample_rate)
    }

    /// Caller guarantees the invariants (finite samples, positive rate).
    pub(crate) fn from_parts(samples: Vec<T>, sample_rate: f64) -> Self {
        debug_assert!(sample_rate > 0.0);
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn peak(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |m, &s| if s.abs() > m { s.abs() } else { m })
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::from_parts(self.samples.iter().map(|&s| s * k).collect(), self.sample_rate)
    }

    /// Converts to another sample precision.
    pub fn cast<U: Scalar>(&self) -> Waveform<U> {
        Waveform::from_parts(
            self.samples.iter().map(|s| U::of(s.to_f64_lossy())).collect(),
            self.sample_rate,
        )
    }

    /// Writes `index,value` rows after a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,value")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{s}")?;
        }
        Ok(())
    }
}

/// Energy into 1 ohm: sum of squared samples times the sample period.
pub fn signal_energy<T: Scalar>(w: &Waveform<T>) -> T {
    let sum = w.samples.iter().fold(T::zero(), |acc, &s| acc + s * s);
    sum / T::of(w.sample_rate)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    Gaussian,
    /// First derivative of the Gaussian.
    GaussianMonocycle,
    /// Second derivative of the Gaussian.
    GaussianDoublet,
    Rectangular,
    /// Arbitrary table, resampled over the pulse support by linear interpolation.
    Custom(Vec<f64>),
}

impl PulseShape {
    pub fn name(&self) -> &'static str {
        match self {
            PulseShape::Gaussian => "gaussian",
            PulseShape::GaussianMonocycle => "gaussian-monocycle",
            PulseShape::GaussianDoublet => "gaussian-doublet",
            PulseShape::Rectangular => "rectangular",
            PulseShape::Custom(_) => "custom",
        }
    }

    fn validate(&self) -> Result<()> {
        if let PulseShape::Custom(table) = self {
            if table.is_empty() {
                return param("custom pulse table is empty");
            }
            if table.iter().any(|v| !v.is_finite()) {
                return param("custom pulse table has non-finite entries");
            }
            if table.iter().all(|&v| v == 0.0) {
                return param("custom pulse table is all zeros");
            }
        }
        Ok(())
    }
}

/// One point of the waveform / amplitude / duration trade space.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    pub shape: PulseShape,
    /// Peak absolute value, volts.
    pub amplitude: f64,
    /// Support, seconds.
    pub duration: f64,
    pub sample_rate: f64,
}

impl PulseSpec {
    pub fn new(shape: PulseShape, amplitude: f64, duration: f64, sample_rate: f64) -> Result<Self> {
        let spec = Self {
            shape,
            amplitude,
            duration,
            sample_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return param(format!("pulse amplitude must be > 0, got {}", self.amplitude));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return param(format!("pulse duration must be > 0, got {}", self.duration));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return param(format!("sample rate must be > 0, got {}", self.sample_rate));
        }
        if self.duration * self.sample_rate < 2.0 - 1e-9 {
            return param("pulse must span at least 2 samples");
        }
        self.shape.validate()
    }

    pub fn sample_count(&self) -> usize {
        ceil_count(self.duration * self.sample_rate)
    }
}

/// Renders the pulse into a peak-normalized table scaled to `spec.amplitude`.
pub fn synthesize_pulse<T: Scalar>(spec: &PulseSpec) -> Result<Waveform<T>> {
    spec.validate()?;
    let n = spec.sample_count();
    let fs = T::of(spec.sample_rate);
    let sigma = T::of(spec.duration / GAUSSIAN_SUPPORT_SIGMAS);
    let half = T::of((n as f64 - 1.0) / 2.0);
    // Sample instants symmetric about the pulse center.
    let t = |k: usize| (T::of(k as f64) - half) / fs;
    let g = |x: T| (-(x * x) / (T::of(2.0) * sigma * sigma)).exp();

    let raw: Vec<T> = match &spec.shape {
        PulseShape::Gaussian => (0..n).map(|k| g(t(k))).collect(),
        PulseShape::GaussianMonocycle => (0..n).map(|k| t(k) * g(t(k))).collect(),
        PulseShape::GaussianDoublet => (0..n)
            .map(|k| {
                let x = t(k) / sigma;
                (T::one() - x * x) * g(t(k))
            })
            .collect(),
        PulseShape::Rectangular => vec![T::one(); n],
        PulseShape::Custom(table) => resample_linear(table, n),
    };

    let peak = raw
        .iter()
        .fold(T::zero(), |m, &s| if s.abs() > m { s.abs() } else { m });
    if peak == T::zero() {
        return param("pulse table has no energy");
    }
    let amp = T::of(spec.amplitude);
    let samples = raw.into_iter().map(|s| (s / peak) * amp).collect();
    Ok(Waveform::from_parts(samples, spec.sample_rate))
}

fn resample_linear<T: Scalar>(table: &[f64], n: usize) -> Vec<T> {
    let m = table.len();
    if m == 1 || n == 1 {
        return vec![T::of(table[0]); n];
    }
    let step = (m - 1) as f64 / (n - 1) as f64;
    (0..n)
        .map(|k| {
            let pos = k as f64 * step;
            let i = (pos.floor() as usize).min(m - 2);
            let frac = pos - i as f64;
            T::of(table[i] * (1.0 - frac) + table[i + 1] * frac)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(shape: PulseShape, amplitude: f64, duration: f64, fs: f64) -> PulseSpec {
        PulseSpec::new(shape, amplitude, duration, fs).unwrap()
    }

    #[test]
    fn rectangular_is_constant() {
        let w: Waveform<f64> = synthesize_pulse(&spec(PulseShape::Rectangular, 1.0, 2e-9, 10e9)).unwrap();
        assert_eq!(w.len(), 20);
        assert!(w.samples().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn monocycle_sums_to_zero() {
        for (d, fs) in [(1e-9, 20e9), (0.5e-9, 50e9), (2e-9, 7e9), (0.7e-9, 33e9)] {
            let w: Waveform<f64> =
                synthesize_pulse(&spec(PulseShape::GaussianMonocycle, 1.5, d, fs)).unwrap();
            let sum: f64 = w.samples().iter().sum();
            assert!(sum.abs() < 1e-6 * w.len() as f64 * 1.5, "sum {sum}");
        }
    }

    #[test]
    fn gaussian_peak_at_center() {
        let w: Waveform<f64> = synthesize_pulse(&spec(PulseShape::Gaussian, 2.0, 1e-9, 20e9)).unwrap();
        assert_eq!(w.len(), 20);
        let max = w.samples().iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - 2.0).abs() < 1e-6);
        assert!((w.samples()[w.len() / 2] - max).abs() < 1e-12);
    }

    #[test]
    fn symmetry_of_gaussian_family() {
        for (shape, odd) in [
            (PulseShape::Gaussian, false),
            (PulseShape::GaussianMonocycle, true),
            (PulseShape::GaussianDoublet, false),
        ] {
            let w: Waveform<f64> = synthesize_pulse(&spec(shape, 1.0, 1e-9, 31e9)).unwrap();
            let s = w.samples();
            for k in 0..s.len() {
                let mirror = s[s.len() - 1 - k];
                let expect = if odd { -mirror } else { mirror };
                assert!((s[k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_tails_low() {
        let w: Waveform<f64> = synthesize_pulse(&spec(PulseShape::Gaussian, 1.0, 1e-9, 101e9)).unwrap();
        // Outermost sample sits just inside 3.5 sigma.
        assert!(w.samples()[0] < 2.5e-3);
    }

    #[test]
    fn custom_table_resampled() {
        let s = spec(PulseShape::Custom(vec![0.0, 1.0, 0.0]), 3.0, 1e-9, 5e9);
        let w: Waveform<f64> = synthesize_pulse(&s).unwrap();
        assert_eq!(w.samples(), &[0.0, 1.5, 3.0, 1.5, 0.0]);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(PulseSpec::new(PulseShape::Gaussian, 0.0, 1e-9, 1e10).is_err());
        assert!(PulseSpec::new(PulseShape::Gaussian, 1.0, -1e-9, 1e10).is_err());
        assert!(PulseSpec::new(PulseShape::Gaussian, 1.0, 1e-9, 0.0).is_err());
        assert!(PulseSpec::new(PulseShape::Gaussian, 1.0, 1e-10, 1e10).is_err());
        assert!(PulseSpec::new(PulseShape::Custom(vec![]), 1.0, 1e-9, 1e10).is_err());
        assert!(PulseSpec::new(PulseShape::Custom(vec![1.0, f64::NAN]), 1.0, 1e-9, 1e10).is_err());
    }

    #[test]
    fn energy_examples() {
        let z = Waveform::<f64>::zeros(10, 1e9).unwrap();
        assert_eq!(signal_energy(&z), 0.0);
        let ones = Waveform::new(vec![1.0f64; 20], 10e9).unwrap();
        assert!((signal_energy(&ones) - 2.0e-9).abs() < 1e-21);
        let half = ones.scaled(0.5);
        assert!((signal_energy(&half) - signal_energy(&ones) / 4.0).abs() < 1e-21);
    }

    #[test]
    fn deterministic_and_f32_agrees() {
        let s = spec(PulseShape::GaussianDoublet, 1.0, 0.5e-9, 40e9);
        let a: Waveform<f64> = synthesize_pulse(&s).unwrap();
        let b: Waveform<f64> = synthesize_pulse(&s).unwrap();
        assert_eq!(a, b);
        let c: Waveform<f32> = synthesize_pulse(&s).unwrap();
        for (x, y) in a.samples().iter().zip(c.samples()) {
            assert!((x - f64::from(*y)).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(Waveform::new(vec![1.0, f64::INFINITY], 1e9).is_err());
        assert!(Waveform::new(vec![1.0f64], -1.0).is_err());
    }
}
