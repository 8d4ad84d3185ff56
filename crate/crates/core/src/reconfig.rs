//! Reconfigurable-parameter engine.
//!
//! The PHY exposes 8-bit parameter ports (`nb_Tc_par_frame_TH`, `Tc`, the
//! serial code-load ports) to the MAC. Writes land in a staged shadow copy;
//! asserting `sig_reconf` makes the staged copy active, all registers at
//! once, on the next frame boundary. A staged combination that fails
//! validation is dropped and the radio keeps running on the old one.
//!
//! The pulse waveform / amplitude / duration registers are an extension
//! beyond the listed receiver entity, which only carries the timing and
//! code ports: the waveform register indexes a RAM table of pulse shapes,
//! amplitude and duration are 8-bit codes scaled by a [`PhyProfile`].

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::channel::{noise_sigma, AwgnSpec, NoiseStream};
use crate::error::{param, Error, Result};
use crate::framing::{data_rate, CodeRegister, FrameConfig, ThCode};
use crate::modem::{modulate_from, ModScheme, TxConfig};
use crate::receiver::{check_consistent, demodulate_from, energy_per_bit, AdcModel, RxConfig};
use crate::scalar::{near_integer, Scalar};
use crate::spectrum::Band;
use crate::waveform::{PulseShape, PulseSpec, Waveform};

/// Input ports that take an 8-bit value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    NbTcParFrameTh,
    Tc,
    /// Starts a serial code load of this many chips (0 unloads).
    LgCode,
    /// One chip of an ongoing code load.
    CodeJData,
    PulseWaveform,
    PulseAmplitude,
    PulseDuration,
}

impl Port {
    pub const ALL: [Port; 7] = [
        Port::NbTcParFrameTh,
        Port::Tc,
        Port::LgCode,
        Port::CodeJData,
        Port::PulseWaveform,
        Port::PulseAmplitude,
        Port::PulseDuration,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Port::NbTcParFrameTh => "nb_tc_par_frame_th",
            Port::Tc => "tc_ticks",
            Port::LgCode => "lg_code",
            Port::CodeJData => "code_j_data",
            Port::PulseWaveform => "pulse_waveform",
            Port::PulseAmplitude => "pulse_amplitude",
            Port::PulseDuration => "pulse_duration",
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Port {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "nb_tc_par_frame_th" | "nc" => Port::NbTcParFrameTh,
            "tc" | "tc_ticks" => Port::Tc,
            "lg_code" => Port::LgCode,
            "code_j_data" => Port::CodeJData,
            "pulse_waveform" => Port::PulseWaveform,
            "pulse_amplitude" => Port::PulseAmplitude,
            "pulse_duration" => Port::PulseDuration,
            _ => return param(format!("unknown register `{s}`")),
        })
    }
}

/// One complete parameter set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegisterValues {
    pub nb_tc_par_frame_th: u8,
    pub tc_ticks: u8,
    pub code: Vec<u8>,
    pub pulse_waveform: u8,
    pub pulse_amplitude: u8,
    pub pulse_duration: u8,
}

impl RegisterValues {
    pub fn lg_code(&self) -> u8 {
        self.code.len() as u8
    }

    /// Register-level consistency checked on every commit.
    pub fn validate(&self) -> Result<()> {
        if self.tc_ticks < 1 {
            return Err(Error::Commit("Tc must be at least one tick".into()));
        }
        if self.nb_tc_par_frame_th < 1 {
            return Err(Error::Commit("nb_Tc_par_frame_TH must be at least 1".into()));
        }
        if self.code.is_empty() {
            return Err(Error::Commit("no TH code loaded".into()));
        }
        if let Some(&c) = self.code.iter().find(|&&c| c >= self.nb_tc_par_frame_th) {
            return Err(Error::Commit(format!(
                "code chip {c} not below nb_Tc_par_frame_TH = {}",
                self.nb_tc_par_frame_th
            )));
        }
        Ok(())
    }

    pub fn th_code(&self) -> Result<ThCode> {
        ThCode::new(self.code.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhyRegisterFile {
    active: RegisterValues,
    staged: RegisterValues,
    loader: CodeRegister,
    sig_reconf: bool,
}

impl PhyRegisterFile {
    pub fn new(initial: RegisterValues) -> Result<Self> {
        initial.validate()?;
        let code = ThCode::new(initial.code.clone())?;
        Ok(Self {
            staged: initial.clone(),
            active: initial,
            loader: CodeRegister::with_code(&code),
            sig_reconf: false,
        })
    }

    pub fn active(&self) -> &RegisterValues {
        &self.active
    }

    pub fn staged(&self) -> &RegisterValues {
        &self.staged
    }

    pub fn sig_reconf(&self) -> bool {
        self.sig_reconf
    }

    /// Stages `value` on `port`; the active set is untouched.
    pub fn write_register(&mut self, port: Port, value: i64) -> Result<()> {
        let v = u8::try_from(value).map_err(|_| Error::Range {
            port: port.name().into(),
            value,
        })?;
        match port {
            Port::NbTcParFrameTh => self.staged.nb_tc_par_frame_th = v,
            Port::Tc => self.staged.tc_ticks = v,
            Port::PulseWaveform => self.staged.pulse_waveform = v,
            Port::PulseAmplitude => self.staged.pulse_amplitude = v,
            Port::PulseDuration => self.staged.pulse_duration = v,
            Port::LgCode => {
                self.loader.load_code(value)?;
                self.staged.code = self.loader.read().to_vec();
            }
            Port::CodeJData => {
                self.loader.code_j_data(value)?;
                self.staged.code = self.loader.read().to_vec();
            }
        }
        Ok(())
    }

    pub fn write_named(&mut self, name: &str, value: i64) -> Result<()> {
        self.write_register(name.parse()?, value)
    }

    /// Serial code load: `lg_code` then one `code_j_data` per chip.
    pub fn load_code(&mut self, chips: &[i64]) -> Result<()> {
        if chips.len() > 255 {
            return Err(Error::Range {
                port: "lg_code".into(),
                value: chips.len() as i64,
            });
        }
        self.write_register(Port::LgCode, chips.len() as i64)?;
        chips
            .iter()
            .try_for_each(|&c| self.write_register(Port::CodeJData, c))
    }

    pub fn unload_code(&mut self) {
        self.loader.unload_code();
        self.staged.code.clear();
    }

    pub fn read_staged(&self, port: Port) -> i64 {
        read_port(&self.staged, port)
    }

    pub fn read_active(&self, port: Port) -> i64 {
        read_port(&self.active, port)
    }

    pub fn assert_sig_reconf(&mut self) {
        self.sig_reconf = true;
    }

    /// Latches the staged set. Returns whether the active set changed.
    pub fn commit(&mut self) -> Result<bool> {
        self.commit_with(|_| Ok(()))
    }

    /// Like [`commit`](Self::commit) with an extra check on the staged set;
    /// on any failure the active set is kept and `sig_reconf` is released.
    pub fn commit_with(&mut self, check: impl FnOnce(&RegisterValues) -> Result<()>) -> Result<bool> {
        if !self.sig_reconf {
            return Err(Error::Commit("sig_reconf not asserted".into()));
        }
        self.sig_reconf = false;
        if self.loader.is_loading() {
            return Err(Error::Commit("code load still in progress".into()));
        }
        self.staged.validate()?;
        check(&self.staged)?;
        let changed = self.staged != self.active;
        self.active = self.staged.clone();
        Ok(changed)
    }

    /// Called at every frame boundary; commits when `sig_reconf` is pending.
    pub fn frame_boundary(&mut self) -> Result<bool> {
        if self.sig_reconf {
            self.commit()
        } else {
            Ok(false)
        }
    }
}

fn read_port(r: &RegisterValues, port: Port) -> i64 {
    i64::from(match port {
        Port::NbTcParFrameTh => r.nb_tc_par_frame_th,
        Port::Tc => r.tc_ticks,
        Port::LgCode => r.lg_code(),
        Port::CodeJData => r.code.last().copied().unwrap_or(0),
        Port::PulseWaveform => r.pulse_waveform,
        Port::PulseAmplitude => r.pulse_amplitude,
        Port::PulseDuration => r.pulse_duration,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Orthogonal binary PPM, shift equal to the pulse duration.
    Ppm,
    Ook,
    Bpam,
}

/// Physical meaning of the register values.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyProfile {
    /// One register tick is one ADC clock period.
    pub adc: AdcModel,
    pub band: Band,
    /// Transmit sample rate as a multiple of the ADC rate.
    pub oversample: usize,
    pub scheme: SchemeKind,
    /// Pulse RAM indexed by the waveform register.
    pub waveforms: Vec<PulseShape>,
    /// Volts per amplitude code.
    pub amplitude_lsb: f64,
}

impl PhyProfile {
    pub fn tick(&self) -> f64 {
        1.0 / self.adc.sample_rate
    }

    pub fn tx_sample_rate(&self) -> f64 {
        self.adc.sample_rate * self.oversample as f64
    }

    pub fn frame(&self, regs: &RegisterValues) -> Result<FrameConfig> {
        FrameConfig::new(f64::from(regs.tc_ticks) * self.tick(), u32::from(regs.nb_tc_par_frame_th))
    }

    pub fn pulse(&self, regs: &RegisterValues) -> Result<PulseSpec> {
        let shape = self
            .waveforms
            .get(regs.pulse_waveform as usize)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "pulse waveform {} not in RAM table ({} entries)",
                    regs.pulse_waveform,
                    self.waveforms.len()
                ))
            })?
            .clone();
        PulseSpec::new(
            shape,
            f64::from(regs.pulse_amplitude) * self.amplitude_lsb,
            f64::from(regs.pulse_duration) * self.tick(),
            self.tx_sample_rate(),
        )
    }

    pub fn tx_config(&self, regs: &RegisterValues) -> Result<TxConfig> {
        let pulse = self.pulse(regs)?;
        let scheme = match self.scheme {
            SchemeKind::Ppm => ModScheme::orthogonal_ppm(&pulse),
            SchemeKind::Ook => ModScheme::Ook,
            SchemeKind::Bpam => ModScheme::Bpam,
        };
        TxConfig::new(pulse, self.frame(regs)?, regs.th_code()?, scheme)
    }

    pub fn rx_config<T: Scalar>(&self, regs: &RegisterValues) -> Result<RxConfig<T>> {
        RxConfig::matched(&self.tx_config(regs)?, self.adc, self.band)
    }

    /// Inverse mapping for a transmitter configuration that lands on the
    /// register grid.
    pub fn registers_for(&self, tx: &TxConfig, waveform_index: u8) -> Result<RegisterValues> {
        let ticks = |x: f64, what: &str| -> Result<u8> {
            near_integer(x / self.tick())
                .and_then(|n| u8::try_from(n).ok())
                .ok_or_else(|| Error::Parameter(format!("{what} is not a whole number of ticks in 0..=255")))
        };
        let amp = near_integer(tx.pulse.amplitude / self.amplitude_lsb)
            .and_then(|n| u8::try_from(n).ok())
            .ok_or_else(|| Error::Parameter("amplitude is not an 8-bit multiple of the LSB".into()))?;
        Ok(RegisterValues {
            nb_tc_par_frame_th: u8::try_from(tx.frame.nc()).map_err(|_| Error::Parameter("Nc > 255".into()))?,
            tc_ticks: ticks(tx.frame.tc(), "Tc")?,
            code: tx.code.chips().to_vec(),
            pulse_waveform: waveform_index,
            pulse_amplitude: amp,
            pulse_duration: ticks(tx.pulse.duration, "pulse duration")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegisterWrite {
    Set(Port, i64),
    /// Full `load_code` sequence.
    LoadCode(Vec<i64>),
    UnloadCode,
}

impl RegisterWrite {
    fn apply(&self, rf: &mut PhyRegisterFile) -> Result<()> {
        match self {
            RegisterWrite::Set(p, v) => rf.write_register(*p, *v),
            RegisterWrite::LoadCode(chips) => rf.load_code(chips),
            RegisterWrite::UnloadCode => {
                rf.unload_code();
                Ok(())
            }
        }
    }
}

/// Writes staged before frame `at_frame`, latched at its leading boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconfigEvent {
    pub at_frame: usize,
    pub writes: Vec<RegisterWrite>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame: usize,
    /// Index into [`StreamOutcome::commits`].
    pub config_id: usize,
    pub tc_ticks: u8,
    pub nc: u8,
    /// Index of the TH code among the distinct codes seen in the run.
    pub code_id: usize,
    pub tf_ns: f64,
    pub paper_rate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub decoded: Vec<bool>,
    pub trace: Vec<FrameTrace>,
    /// Every configuration that was active at some point, in order.
    pub commits: Vec<RegisterValues>,
}

impl StreamOutcome {
    pub fn bit_errors(&self, sent: &[bool]) -> usize {
        sent.iter().zip(&self.decoded).filter(|(a, b)| a != b).count()
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "frame,tc_ticks,nc,code_id,tf_ns,paper_rate_mbps")?;
        for t in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.frame, t.tc_ticks, t.nc, t.code_id, t.tf_ns, t.paper_rate_mbps
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamRun {
    pub bits: Vec<bool>,
    pub events: Vec<ReconfigEvent>,
    pub initial: RegisterValues,
    pub result: Option<StreamOutcome>,
}

impl StreamRun {
    pub fn new(bits: Vec<bool>, events: Vec<ReconfigEvent>, initial: RegisterValues) -> Self {
        Self {
            bits,
            events,
            initial,
            result: None,
        }
    }
}

struct Side<T> {
    tx: TxConfig,
    rx: RxConfig<T>,
    ratio: usize,
    sigma: f64,
}

fn build_side<T: Scalar>(
    regs: &RegisterValues,
    tx_side: &impl Fn(&RegisterValues) -> Result<TxConfig>,
    rx_side: &impl Fn(&RegisterValues) -> Result<RxConfig<T>>,
    channel: &AwgnSpec,
) -> Result<Side<T>> {
    let tx = tx_side(regs)?;
    let rx = rx_side(regs)?;
    let ratio = check_consistent(&tx, &rx)?;
    let sigma = noise_sigma(energy_per_bit(&tx)?, channel.ebn0_db, tx.sample_rate())?;
    Ok(Side { tx, rx, ratio, sigma })
}

/// Runs the transmitter, channel and receiver frame by frame, applying the
/// event schedule to both ends' register files.
pub fn run_stream<T: Scalar>(
    mut run: StreamRun,
    tx_side: impl Fn(&RegisterValues) -> Result<TxConfig>,
    rx_side: impl Fn(&RegisterValues) -> Result<RxConfig<T>>,
    channel: &AwgnSpec,
) -> Result<StreamRun> {
    let abort = |frame: usize| move |e: Error| Error::StreamAborted {
        frame,
        cause: Box::new(e),
    };
    if run.bits.is_empty() {
        return param("no bits to stream");
    }
    if run.events.windows(2).any(|w| w[0].at_frame > w[1].at_frame) {
        return param("events are not sorted by frame");
    }
    if let Some(e) = run.events.iter().find(|e| e.at_frame >= run.bits.len()) {
        return param(format!("event at frame {} is past the end of the stream", e.at_frame));
    }

    let mut tx_rf = PhyRegisterFile::new(run.initial.clone()).map_err(abort(0))?;
    let mut rx_rf = tx_rf.clone();
    let mut side = build_side(&run.initial, &tx_side, &rx_side, channel).map_err(abort(0))?;
    let mut commits = vec![run.initial.clone()];
    let mut codes = vec![run.initial.code.clone()];
    let mut code_id = 0;
    let mut noise = NoiseStream::new(channel.seed);

    let mut decoded = Vec::with_capacity(run.bits.len());
    let mut trace = Vec::with_capacity(run.bits.len());
    let mut next_event = 0;

    for (j, &bit) in run.bits.iter().enumerate() {
        let mut pending = false;
        while next_event < run.events.len() && run.events[next_event].at_frame == j {
            for w in &run.events[next_event].writes {
                w.apply(&mut tx_rf).map_err(abort(j))?;
                w.apply(&mut rx_rf).map_err(abort(j))?;
            }
            next_event += 1;
            pending = true;
        }
        if pending {
            tx_rf.assert_sig_reconf();
            rx_rf.assert_sig_reconf();
            let mut next = None;
            let changed = tx_rf
                .commit_with(|staged| {
                    next = Some(build_side(staged, &tx_side, &rx_side, channel)?);
                    Ok(())
                })
                .map_err(abort(j))?;
            rx_rf.commit().map_err(abort(j))?;
            debug_assert_eq!(tx_rf.active(), rx_rf.active());
            if changed {
                side = next.expect("validated side");
                let regs = tx_rf.active().clone();
                code_id = match codes.iter().position(|c| *c == regs.code) {
                    Some(i) => i,
                    None => {
                        codes.push(regs.code.clone());
                        codes.len() - 1
                    }
                };
                commits.push(regs);
            }
        }

        let wave: Waveform<T> = modulate_from(&[bit], j, &side.tx).map_err(abort(j))?;
        let mut samples = wave.into_samples();
        if !channel.is_noiseless() {
            noise.apply(&mut samples, side.sigma);
        }
        let mut adc_samples: Vec<T> = samples.iter().step_by(side.ratio).copied().collect();
        crate::modem::quantize_mid_rise(&mut adc_samples, side.rx.adc.bits, side.rx.adc.full_scale);
        let rx_wave = Waveform::from_parts(adc_samples, side.rx.adc.sample_rate);
        let d = demodulate_from(&rx_wave, j, &side.rx).map_err(abort(j))?;
        decoded.push(d[0]);

        let regs = tx_rf.active();
        let frame = side.tx.frame;
        trace.push(FrameTrace {
            frame: j,
            config_id: commits.len() - 1,
            tc_ticks: regs.tc_ticks,
            nc: regs.nb_tc_par_frame_th,
            code_id,
            tf_ns: frame.tf() * 1e9,
            paper_rate_mbps: data_rate(&frame).paper_rate / 1e6,
        });
    }

    run.result = Some(StreamOutcome {
        decoded,
        trace,
        commits,
    });
    Ok(run)
}

/// [`run_stream`] with both ends built from one profile.
pub fn run_stream_with_profile<T: Scalar>(run: StreamRun, profile: &PhyProfile, channel: &AwgnSpec) -> Result<StreamRun> {
    run_stream(run, |r| profile.tx_config(r), |r| profile.rx_config::<T>(r), channel)
}
