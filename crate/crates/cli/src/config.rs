//! Experiment configuration files.
//!
//! TOML with one table per section. Every section and key is optional and
//! falls back to the defaults below (a BPAM link with a 1 ns monocycle).
//! Units are SI: seconds, hertz, volts, dB / dBm.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use uwbsim_core::channel::AwgnSpec;
use uwbsim_core::*;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; code generation, sweeps and streams default to it.
    pub seed: u64,
    pub pulse: PulseSection,
    pub frame: FrameSection,
    pub code: CodeSection,
    pub scheme: SchemeSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dac: Option<DacSection>,
    pub adc: AdcSection,
    pub channel: ChannelSection,
    pub sweep: SweepSection,
    pub spectrum: SpectrumSection,
    pub reconfig: ReconfigSection,
    pub compare: CompareSection,
    /// Keyed by frame index: `[events.100]` then `tc_ticks = 10`.
    pub events: BTreeMap<String, BTreeMap<String, EventValue>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            pulse: PulseSection::default(),
            frame: FrameSection::default(),
            code: CodeSection::default(),
            scheme: SchemeSection::default(),
            dac: None,
            adc: AdcSection::default(),
            channel: ChannelSection::default(),
            sweep: SweepSection::default(),
            spectrum: SpectrumSection::default(),
            reconfig: ReconfigSection::default(),
            compare: CompareSection::default(),
            events: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    /// gaussian, gaussian-monocycle, gaussian-doublet, rectangular or custom.
    pub shape: String,
    pub amplitude: f64,
    pub duration: f64,
    pub sample_rate: f64,
    /// Samples of the custom shape.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<f64>,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            shape: "gaussian-monocycle".into(),
            amplitude: 1.0,
            duration: 1e-9,
            sample_rate: 10e9,
            table: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    pub tc: f64,
    pub nc: u32,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self { tc: 2e-9, nc: 4 }
    }
}

/// Either explicit `chips = "3,1,2"` or a generated code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chips: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub length: usize,
}

impl Default for CodeSection {
    fn default() -> Self {
        Self {
            chips: None,
            seed: None,
            length: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    /// ppm, ook or bpam.
    pub kind: String,
    /// PPM shift in seconds; orthogonal (pulse duration) when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppm_delta: Option<f64>,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            kind: "bpam".into(),
            ppm_delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DacSection {
    pub bits: u8,
    pub full_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdcSection {
    pub sample_rate: f64,
    pub bits: u8,
    pub full_scale: f64,
    /// nyquist or subsampling.
    pub mode: String,
    /// Signal band; defaults to [0, sample_rate / 2].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_high: Option<f64>,
}

impl Default for AdcSection {
    fn default() -> Self {
        Self {
            sample_rate: 10e9,
            bits: 16,
            full_scale: 8.0,
            mode: "nyquist".into(),
            band_low: None,
            band_high: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub rx_sensitivity_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub path_loss_exponent: f64,
    pub freqs_hz: Vec<f64>,
    pub tx_powers_dbm: Vec<f64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            rx_sensitivity_dbm: -80.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            path_loss_exponent: 2.0,
            freqs_hz: vec![1e9, 2e9, 4e9, 8e9],
            tx_powers_dbm: vec![0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub ebn0_db: Vec<f64>,
    pub nbits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            ebn0_db: vec![0.0, 2.0, 4.0, 6.0],
            nbits: 100_000,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub nfft: usize,
    pub level_db: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            nfft: 1 << 16,
            level_db: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconfigSection {
    pub nbits: usize,
    /// Volts per amplitude code.
    pub amplitude_lsb: f64,
    /// Noiseless when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ebn0_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for ReconfigSection {
    fn default() -> Self {
        Self {
            nbits: 200,
            amplitude_lsb: 0.01,
            ebn0_db: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub targets: Vec<String>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            targets: Target::ALL.iter().map(|t| t.name().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventValue {
    Int(i64),
    /// `code = "1,0,3"` loads a new TH code.
    Text(String),
    /// `unload_code = true`.
    Flag(bool),
}

/// Everything a subcommand needs, checked up front.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub tx: TxConfig,
    pub rx: Receiver,
    pub dac: Option<DacModel>,
    pub budgets: Vec<LinkBudget>,
    pub events: Vec<ReconfigEvent>,
    pub targets: Vec<Target>,
}

fn invalid(section: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("[{section}] {e}"))
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
}

fn shape(p: &PulseSection) -> Result<PulseShape, CliError> {
    let s = match p.shape.to_ascii_lowercase().as_str() {
        "gaussian" => PulseShape::Gaussian,
        "gaussian-monocycle" | "monocycle" => PulseShape::GaussianMonocycle,
        "gaussian-doublet" | "doublet" => PulseShape::GaussianDoublet,
        "rectangular" | "rect" => PulseShape::Rectangular,
        "custom" => PulseShape::Custom(p.table.clone()),
        other => return Err(invalid("pulse", format!("unknown shape `{other}`"))),
    };
    if !p.table.is_empty() && !matches!(s, PulseShape::Custom(_)) {
        return Err(invalid("pulse", "`table` is only used with shape = \"custom\""));
    }
    Ok(s)
}

fn scheme_kind(s: &SchemeSection) -> Result<SchemeKind, CliError> {
    match s.kind.to_ascii_lowercase().as_str() {
        "ppm" => Ok(SchemeKind::Ppm),
        "ook" => Ok(SchemeKind::Ook),
        "bpam" => Ok(SchemeKind::Bpam),
        other => Err(invalid("scheme", format!("unknown kind `{other}`"))),
    }
}

fn events(raw: &BTreeMap<String, BTreeMap<String, EventValue>>) -> Result<Vec<ReconfigEvent>, CliError> {
    let mut out = Vec::with_capacity(raw.len());
    for (key, regs) in raw {
        let at_frame: usize = key
            .parse()
            .map_err(|_| invalid("events", format!("`{key}` is not a frame index")))?;
        let mut writes = Vec::new();
        for (name, value) in regs {
            let w = match (name.as_str(), value) {
                ("code", EventValue::Text(s)) => RegisterWrite::LoadCode(
                    s.split(',')
                        .map(|c| c.trim().parse::<i64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| invalid("events", format!("frame {key}: bad code `{s}`")))?,
                ),
                ("unload_code", EventValue::Flag(true)) => RegisterWrite::UnloadCode,
                (_, EventValue::Int(v)) => {
                    let port: Port = name.parse().map_err(|e| invalid("events", format!("frame {key}: {e}")))?;
                    RegisterWrite::Set(port, *v)
                }
                _ => return Err(invalid("events", format!("frame {key}: bad value for `{name}`"))),
            };
            writes.push(w);
        }
        out.push(ReconfigEvent { at_frame, writes });
    }
    out.sort_by_key(|e| e.at_frame);
    Ok(out)
}

impl ExperimentConfig {
    pub fn code_seed(&self) -> u64 {
        self.code.seed.unwrap_or(self.seed)
    }

    pub fn sweep_seed(&self) -> u64 {
        self.sweep.seed.unwrap_or(self.seed)
    }

    pub fn stream_seed(&self) -> u64 {
        self.reconfig.seed.unwrap_or(self.seed)
    }

    pub fn band(&self) -> Result<Band, CliError> {
        let lo = self.adc.band_low.unwrap_or(0.0);
        let hi = self.adc.band_high.unwrap_or(self.adc.sample_rate / 2.0);
        Band::new(lo, hi).map_err(|e| invalid("adc", e))
    }

    /// Validates every section and builds the core objects. Generated
    /// values (the TH code) are written back so the echo is complete.
    pub fn resolve(mut self) -> Result<Resolved, CliError> {
        let p = &self.pulse;
        let pulse = PulseSpec::new(shape(p)?, p.amplitude, p.duration, p.sample_rate).map_err(|e| invalid("pulse", e))?;
        let frame = FrameConfig::new(self.frame.tc, self.frame.nc).map_err(|e| invalid("frame", e))?;
        let code = match &self.code.chips {
            Some(s) => s.parse::<ThCode>().map_err(|e| invalid("code", e))?,
            None => generate_th_code(self.code_seed(), self.code.length, self.frame.nc).map_err(|e| invalid("code", e))?,
        };
        self.code.chips = Some(code.to_string());
        self.code.length = code.len();
        let scheme = match (scheme_kind(&self.scheme)?, self.scheme.ppm_delta) {
            (SchemeKind::Ppm, Some(delta)) => ModScheme::Ppm { delta },
            (SchemeKind::Ppm, None) => ModScheme::orthogonal_ppm(&pulse),
            (_, Some(_)) => return Err(invalid("scheme", "`ppm_delta` given for a non-PPM scheme")),
            (SchemeKind::Ook, None) => ModScheme::Ook,
            (SchemeKind::Bpam, None) => ModScheme::Bpam,
        };
        let tx = TxConfig::new(pulse, frame, code, scheme).map_err(|e| invalid("frame", e))?;

        let dac = self
            .dac
            .as_ref()
            .map(|d| DacModel::new(tx.sample_rate(), d.bits, d.full_scale))
            .transpose()
            .map_err(|e| invalid("dac", e))?;

        let mode = match self.adc.mode.to_ascii_lowercase().as_str() {
            "nyquist" => AdcMode::Nyquist,
            "subsampling" | "sub-sampling" => AdcMode::Subsampling,
            other => return Err(invalid("adc", format!("unknown mode `{other}`"))),
        };
        let adc = AdcModel::new(self.adc.sample_rate, self.adc.bits, self.adc.full_scale, mode).map_err(|e| invalid("adc", e))?;
        let rx = Receiver::matched(&tx, adc, self.band()?).map_err(|e| invalid("adc", e))?;

        let ch = &self.channel;
        if ch.freqs_hz.is_empty() || ch.tx_powers_dbm.is_empty() {
            return Err(invalid("channel", "need at least one frequency and one power"));
        }
        let mut budgets = Vec::new();
        for &f in &ch.freqs_hz {
            for &p in &ch.tx_powers_dbm {
                let b = LinkBudget {
                    tx_gain_dbi: ch.tx_gain_dbi,
                    rx_gain_dbi: ch.rx_gain_dbi,
                    path_loss_exponent: ch.path_loss_exponent,
                    ..LinkBudget::free_space(p, f, ch.rx_sensitivity_dbm)
                };
                friis_range(&b).map_err(|e| invalid("channel", e))?;
                budgets.push(b);
            }
        }

        if self.sweep.ebn0_db.is_empty() {
            return Err(invalid("sweep", "empty Eb/N0 list"));
        }
        if self.sweep.nbits < 1000 {
            return Err(invalid("sweep", "nbits must be at least 1000"));
        }
        if self.sweep.ebn0_db.iter().any(|x| x.is_nan()) {
            return Err(invalid("sweep", "Eb/N0 is NaN"));
        }
        if !self.spectrum.nfft.is_power_of_two() || self.spectrum.nfft < tx.pulse.sample_count() {
            return Err(invalid("spectrum", "nfft must be a power of two no shorter than the pulse"));
        }
        if self.spectrum.level_db.is_nan() || self.spectrum.level_db <= 0.0 {
            return Err(invalid("spectrum", "level_db must be positive"));
        }
        if self.reconfig.nbits == 0 {
            return Err(invalid("reconfig", "nbits must be positive"));
        }
        let events = events(&self.events)?;
        let targets = self
            .compare
            .targets
            .iter()
            .map(|t| t.parse::<Target>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| invalid("compare", e))?;

        Ok(Resolved {
            config: self,
            tx,
            rx,
            dac,
            budgets,
            events,
            targets,
        })
    }
}

impl Resolved {
    /// Register mapping used by `reconfig-demo`: one tick per ADC clock,
    /// the configured pulse at RAM index 0.
    pub fn profile(&self) -> Result<(PhyProfile, RegisterValues), CliError> {
        let fs_tx = self.tx.sample_rate();
        let ratio = fs_tx / self.rx.adc.sample_rate;
        let oversample = ratio.round();
        if oversample < 1.0 || (ratio - oversample).abs() > 1e-9 * ratio {
            return Err(invalid("reconfig", "pulse rate must be an integer multiple of the ADC rate"));
        }
        let scheme = match self.tx.scheme {
            ModScheme::Ppm { delta } if delta == self.tx.pulse.duration => SchemeKind::Ppm,
            ModScheme::Ppm { .. } => return Err(invalid("reconfig", "register mapping only supports orthogonal PPM")),
            ModScheme::Ook => SchemeKind::Ook,
            ModScheme::Bpam => SchemeKind::Bpam,
        };
        let profile = PhyProfile {
            adc: self.rx.adc,
            band: self.rx.band,
            oversample: oversample as usize,
            scheme,
            waveforms: vec![
                self.tx.pulse.shape.clone(),
                PulseShape::Gaussian,
                PulseShape::GaussianMonocycle,
                PulseShape::GaussianDoublet,
                PulseShape::Rectangular,
            ],
            amplitude_lsb: self.config.reconfig.amplitude_lsb,
        };
        let regs = profile.registers_for(&self.tx, 0).map_err(|e| invalid("reconfig", e))?;
        Ok((profile, regs))
    }

    pub fn channel(&self) -> AwgnSpec {
        match self.config.reconfig.ebn0_db {
            Some(db) => AwgnSpec::new(db, self.config.stream_seed()),
            None => AwgnSpec::noiseless(),
        }
    }

    /// The resolved configuration as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(&self.config).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_uses_defaults() {
        let r = parse("").unwrap().resolve().unwrap();
        assert_eq!(r.tx.scheme, ModScheme::Bpam);
        assert_eq!(r.tx.code.len(), 16);
        assert_eq!(r.budgets.len(), 4);
        assert_eq!(r.targets.len(), 3);
    }

    #[test]
    fn echo_round_trips() {
        let r = parse("seed = 9\n[scheme]\nkind = \"ppm\"\n[events.5]\ntc_ticks = 10\n").unwrap().resolve().unwrap();
        let again = parse(&r.echo()).unwrap();
        assert_eq!(again, r.config);
        assert!(again.code.chips.is_some());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[pulse]\nshape = \"triangle\"",
            "[frame]\nnc = 0",
            "[frame]\nnc = 300",
            "[code]\nchips = \"1,9\"\n[frame]\nnc = 4",
            "[scheme]\nkind = \"qam\"",
            "[scheme]\nkind = \"ook\"\nppm_delta = 1e-9",
            "[adc]\nmode = \"subsampling\"\nband_low = 3e9\nband_high = 4.2e9\nsample_rate = 2e9",
            "[sweep]\nnbits = 10",
            "[sweep]\nebn0_db = []",
            "[spectrum]\nnfft = 1000",
            "[channel]\nrx_sensitivity_dbm = 10.0",
            "[compare]\ntargets = [\"stratix\"]",
            "[events.x]\ntc_ticks = 1",
            "[events.3]\nbogus = 1",
            "[events.3]\ncode = \"1,a\"",
            "unknown_key = 1",
        ] {
            let r = parse(text).and_then(|c| c.resolve());
            assert!(matches!(r, Err(CliError::Validation(_))), "{text}");
        }
    }

    #[test]
    fn events_are_sorted_numerically() {
        let c = parse("[events.100]\ntc_ticks = 10\n[events.20]\ncode = \"1,0\"\n[events.3]\nunload_code = true\n").unwrap();
        let ev = c.resolve().unwrap().events;
        assert_eq!(ev.iter().map(|e| e.at_frame).collect::<Vec<_>>(), vec![3, 20, 100]);
        assert_eq!(ev[1].writes, vec![RegisterWrite::LoadCode(vec![1, 0])]);
        assert_eq!(ev[0].writes, vec![RegisterWrite::UnloadCode]);
    }

    #[test]
    fn default_profile_maps_to_registers() {
        let r = parse("").unwrap().resolve().unwrap();
        let (p, regs) = r.profile().unwrap();
        assert_eq!(regs.tc_ticks, 20);
        assert_eq!(regs.pulse_duration, 10);
        assert_eq!(regs.pulse_amplitude, 100);
        assert_eq!(p.tx_config(&regs).unwrap(), r.tx);
    }
}
