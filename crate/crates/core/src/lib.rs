//! Discrete-time baseband model of a time-hopping impulse-radio UWB
//! transceiver whose PHY parameters can be changed while it runs.
//!
//! Signal-path types are generic over the sample type ([`Scalar`], `f32` or
//! `f64`); frame timing is generic over [`TimeScalar`] so the rate model can
//! also run on exact rationals. The aliases below fix the common choices.

pub mod channel;
pub mod error;
pub mod framing;
pub mod modem;
pub mod receiver;
pub mod reconfig;
pub mod reference;
pub mod scalar;
pub mod spectrum;
pub mod waveform;

pub use channel::{add_awgn, friis_range, superpose, AwgnSpec, LinkBudget};
pub use error::{Error, Result};
pub use framing::{
    code_register_load, data_rate, frame_duration, generate_th_code, ExactFrameConfig, FrameConfig, FrameTiming,
    RateReport, ThCode,
};
pub use modem::{dac_quantize, modulate, DacModel, ModScheme, Quantized, TxConfig};
pub use receiver::{adc_sample, ber_sweep, demodulate, AdcMode, AdcModel, BerCurve, BerRow, RxConfig};
pub use reconfig::{
    run_stream, run_stream_with_profile, PhyProfile, PhyRegisterFile, Port, ReconfigEvent, RegisterValues,
    RegisterWrite, SchemeKind, StreamRun,
};
pub use reference::{lookup_reference, ReferenceRecord, Target, Version};
pub use scalar::{Scalar, TimeScalar};
pub use spectrum::{bandwidth_at_level, estimate_spectrum, is_uwb_compliant, Band, Spectrum};
pub use waveform::{signal_energy, synthesize_pulse, PulseShape, PulseSpec, Waveform};

pub type SampledWaveform = Waveform<f64>;
pub type SampledWaveformF32 = Waveform<f32>;
pub type SpectrumEstimate = Spectrum<f64>;
pub type SpectrumEstimateF32 = Spectrum<f32>;
pub type Receiver = RxConfig<f64>;
pub type ReceiverF32 = RxConfig<f32>;
pub type ExactRateReport = RateReport<num_rational::Rational64>;
