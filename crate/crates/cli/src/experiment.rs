//! Subcommand runners. Each writes one artifact into the output directory,
//! headed by `#` comment lines that echo the resolved config and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;
use uwbsim_core::channel::write_range_table;
use uwbsim_core::receiver::theoretical_ber;
use uwbsim_core::reference::SizeMetric;
use uwbsim_core::*;

use crate::config::Resolved;
use crate::CliError;

/// Relative tolerance of the closed-form bandwidth check.
const SPECTRUM_ORACLE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    PulseSpectrum,
    BerSweep,
    RangeTable,
    ReconfigDemo,
    CompareRef,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::PulseSpectrum => "pulse-spectrum",
            Subcommand::BerSweep => "ber-sweep",
            Subcommand::RangeTable => "range-table",
            Subcommand::ReconfigDemo => "reconfig-demo",
            Subcommand::CompareRef => "compare-ref",
        }
    }

    fn artifact(self) -> &'static str {
        match self {
            Subcommand::PulseSpectrum => "pulse_spectrum.csv",
            Subcommand::BerSweep => "ber_sweep.csv",
            Subcommand::RangeTable => "range_table.csv",
            Subcommand::ReconfigDemo => "reconfig_trace.csv",
            Subcommand::CompareRef => "compare_ref.txt",
        }
    }

    /// Seed that drives this subcommand's randomness.
    fn seed(self, r: &Resolved) -> u64 {
        match self {
            Subcommand::BerSweep => r.config.sweep_seed(),
            Subcommand::ReconfigDemo => r.config.stream_seed(),
            _ => r.config.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    pub timestamp: bool,
    pub check_oracles: bool,
}

/// What a run produced: the artifact path, summary lines for stdout, and
/// failed oracle checks (empty when none ran or all passed).
#[derive(Debug)]
pub struct Outcome {
    pub artifact: PathBuf,
    pub summary: Vec<String>,
    pub oracle_failures: Vec<String>,
}

struct Report {
    results: Vec<String>,
    failures: Vec<String>,
    body: Vec<u8>,
}

impl Report {
    fn new() -> Self {
        Self {
            results: Vec::new(),
            failures: Vec::new(),
            body: Vec::new(),
        }
    }

    fn oracle(&mut self, check: bool, ok: bool, line: String) {
        if check {
            self.results.push(format!("oracle {}: {line}", if ok { "pass" } else { "FAIL" }));
            if !ok {
                self.failures.push(line);
            }
        }
    }
}

fn sim(e: Error) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn run(cmd: Subcommand, r: &Resolved, opts: &Options) -> Result<Outcome, CliError> {
    let mut report = Report::new();
    match cmd {
        Subcommand::PulseSpectrum => pulse_spectrum(r, opts, &mut report)?,
        Subcommand::BerSweep => ber(r, opts, &mut report)?,
        Subcommand::RangeTable => range_table(r, opts, &mut report)?,
        Subcommand::ReconfigDemo => reconfig_demo(r, opts, &mut report)?,
        Subcommand::CompareRef => compare_ref(r, opts, &mut report)?,
    }

    let mut text = format!("# uwbsim {}\n", cmd.name());
    if opts.timestamp {
        let now = OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default();
        writeln!(text, "# generated: {now}").unwrap();
    }
    writeln!(text, "# seed: {}", cmd.seed(r)).unwrap();
    writeln!(text, "# config:").unwrap();
    for line in r.echo().lines() {
        if line.is_empty() {
            text.push_str("#\n");
        } else {
            writeln!(text, "#   {line}").unwrap();
        }
    }
    for line in &report.results {
        writeln!(text, "# {line}").unwrap();
    }
    let mut bytes = text.into_bytes();
    bytes.extend_from_slice(&report.body);

    let artifact = write_artifact(&opts.out, cmd.artifact(), &bytes)?;
    Ok(Outcome {
        artifact,
        summary: report.results,
        oracle_failures: report.failures,
    })
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn pulse_spectrum(r: &Resolved, opts: &Options, rep: &mut Report) -> Result<(), CliError> {
    let mut w: SampledWaveform = synthesize_pulse(&r.tx.pulse).map_err(sim)?;
    if let Some(dac) = &r.dac {
        let q = dac_quantize(&w, dac);
        rep.results.push(format!("dac: {} bits, {} clipped samples", dac.bits, q.clipped));
        w = q.waveform;
    }
    let level = r.config.spectrum.level_db;
    let s = estimate_spectrum(&w, r.config.spectrum.nfft).map_err(sim)?;
    let band = bandwidth_at_level(&s, level).map_err(sim)?;
    let compliant = is_uwb_compliant(&s).map_err(sim)?;
    rep.results.push(format!("pulse energy: {:.6e} J", signal_energy(&w)));
    rep.results.push(format!(
        "{level} dB band: {:.6e} Hz to {:.6e} Hz, bandwidth {:.6e} Hz ({:.1} MHz)",
        band.f_low,
        band.f_high,
        band.bandwidth,
        band.bandwidth / 1e6
    ));
    rep.results.push(format!("uwb compliant: {compliant}"));
    if opts.check_oracles {
        match oracle_bandwidth(&r.tx.pulse, level) {
            Some(expected) => {
                let rel = (band.bandwidth - expected) / expected;
                rep.oracle(
                    true,
                    rel.abs() <= SPECTRUM_ORACLE_TOL,
                    format!(
                        "closed-form bandwidth {:.1} MHz, measured {:.1} MHz ({:+.2}%)",
                        expected / 1e6,
                        band.bandwidth / 1e6,
                        rel * 100.0
                    ),
                );
            }
            None => rep.results.push("oracle: no closed form for this shape".into()),
        }
    }
    s.write_csv(&mut rep.body).map_err(|e| CliError::Io(e.to_string()))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Analytic one-sided bandwidth at `level_db` below peak for the ideal
/// continuous pulse, or `None` when there is no closed form.
pub fn oracle_bandwidth(pulse: &PulseSpec, level_db: f64) -> Option<f64> {
    let ratio = 10f64.powf(-level_db / 10.0);
    let tau = pulse.duration;
    // Gaussian derivative of order m: PSD ~ f^(2m) exp(-(2 pi f sigma)^2).
    let order = match pulse.shape {
        PulseShape::Rectangular => {
            let sinc2 = |x: f64| {
                let px = std::f64::consts::PI * x;
                (px.sin() / px).powi(2) - ratio
            };
            return Some(bisect(sinc2, 1e-9, 1.0) / tau);
        }
        PulseShape::Gaussian => 0,
        PulseShape::GaussianMonocycle => 1,
        PulseShape::GaussianDoublet => 2,
        PulseShape::Custom(_) => return None,
    };
    let sigma = tau / waveform::GAUSSIAN_SUPPORT_SIGMAS;
    let w = 2.0 * std::f64::consts::PI * sigma;
    if order == 0 {
        return Some((-ratio.ln()).sqrt() / w);
    }
    let m = f64::from(order);
    let f0 = m.sqrt() / w;
    // Relative PSD in terms of u = f / f0.
    let rel = |u: f64| u.powf(2.0 * m) * (m * (1.0 - u * u)).exp() - ratio;
    let lo = bisect(rel, 1e-9, 1.0);
    let hi = bisect(rel, 1.0, 10.0);
    Some((hi - lo) * f0)
}

fn ber(r: &Resolved, opts: &Options, rep: &mut Report) -> Result<(), CliError> {
    let sw = &r.config.sweep;
    let curve = ber_sweep(&r.tx, &r.rx, &sw.ebn0_db, sw.nbits, r.config.sweep_seed()).map_err(sim)?;
    for row in &curve.rows {
        let line = format!(
            "{} dB: {} errors / {} bits, ber {:.6e} ± {:.2e}",
            row.ebn0_db, row.errors, row.bits, row.ber, row.ci95_halfwidth
        );
        rep.results.push(line);
    }
    for row in &curve.rows {
        let expected = theoretical_ber(&r.tx.scheme, row.ebn0_db);
        rep.oracle(
            opts.check_oracles,
            row.agrees_with(expected),
            format!("{} dB: measured {:.6e}, closed form {:.6e}", row.ebn0_db, row.ber, expected),
        );
    }
    curve.write_csv(&mut rep.body).map_err(|e| CliError::Io(e.to_string()))
}

fn range_table(r: &Resolved, opts: &Options, rep: &mut Report) -> Result<(), CliError> {
    let ch = &r.config.channel;
    let base = r.budgets[0];
    for &p in &ch.tx_powers_dbm {
        let ranges = ch
            .freqs_hz
            .iter()
            .map(|&f| {
                friis_range(&LinkBudget {
                    tx_power_dbm: p,
                    center_freq_hz: f,
                    ..base
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(sim)?;
        let mut order: Vec<(f64, f64)> = ch.freqs_hz.iter().copied().zip(ranges).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let decreasing = order.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 < w[0].1);
        rep.oracle(
            opts.check_oracles,
            decreasing,
            format!("{p} dBm: range strictly decreases with frequency"),
        );
    }
    write_range_table(&base, &ch.freqs_hz, &ch.tx_powers_dbm, &mut rep.body).map_err(|e| CliError::Io(e.to_string()))
}

fn reconfig_demo(r: &Resolved, opts: &Options, rep: &mut Report) -> Result<(), CliError> {
    let (profile, initial) = r.profile()?;
    let mut rng = ChaCha8Rng::seed_from_u64(r.config.stream_seed());
    let bits: Vec<bool> = (0..r.config.reconfig.nbits).map(|_| rng.random()).collect();
    let channel = r.channel();
    let run = StreamRun::new(bits.clone(), r.events.clone(), initial);
    let out = run_stream_with_profile::<f64>(run, &profile, &channel)
        .map_err(sim)?
        .result
        .expect("completed stream");
    let errors = out.bit_errors(&bits);
    rep.results.push(format!("frames: {}, bit errors: {errors}", out.trace.len()));
    for (i, c) in out.commits.iter().enumerate() {
        let first = out.trace.iter().find(|t| t.config_id == i).map_or(0, |t| t.frame);
        rep.results.push(format!(
            "config {i} from frame {first}: nc={} tc_ticks={} code={} waveform={} amplitude={} duration={}",
            c.nb_tc_par_frame_th,
            c.tc_ticks,
            c.code.iter().map(u8::to_string).collect::<Vec<_>>().join(","),
            c.pulse_waveform,
            c.pulse_amplitude,
            c.pulse_duration
        ));
    }
    if channel.is_noiseless() {
        rep.oracle(opts.check_oracles, errors == 0, format!("noiseless stream decodes with {errors} errors"));
    }
    out.write_trace_csv(&mut rep.body).map_err(|e| CliError::Io(e.to_string()))
}

fn size(s: SizeMetric) -> String {
    match s {
        SizeMetric::Area(a) => format!("area {a}"),
        SizeMetric::Gates(g) => format!("{g} gates"),
    }
}

fn compare_ref(r: &Resolved, opts: &Options, rep: &mut Report) -> Result<(), CliError> {
    let mut body = String::new();
    for &target in &r.targets {
        let s = lookup_reference(target, Version::Static).map_err(sim)?;
        let c = lookup_reference(target, Version::Reconfigurable).map_err(sim)?;
        writeln!(body, "{}", target.name()).unwrap();
        writeln!(body, "  frequency: {} MHz vs {} MHz", s.frequency_mhz, c.frequency_mhz).unwrap();
        if let (Some(a), Some(b)) = (s.synthesis_frequency_mhz, c.synthesis_frequency_mhz) {
            writeln!(body, "  synthesis estimate: {a} MHz vs {b} MHz").unwrap();
        }
        if let (Some(a), Some(b)) = (s.clock_ns, c.clock_ns) {
            writeln!(body, "  clock: {a} ns vs {b} ns").unwrap();
        }
        writeln!(body, "  size: {} vs {}", size(s.size), size(c.size)).unwrap();
        if let (Some(a), Some(b)) = (s.power_mw, c.power_mw) {
            writeln!(body, "  power: {a:.4} mW vs {b:.4} mW").unwrap();
        }
        writeln!(body, "  printed: [{}] vs [{}]", s.printed.join(" | "), c.printed.join(" | ")).unwrap();
        rep.oracle(
            opts.check_oracles,
            c.frequency_mhz < s.frequency_mhz && c.size.value() > s.size.value(),
            format!("{}: reconfigurable is slower and larger", target.name()),
        );
    }
    rep.results.push("columns: static vs reconfigurable".into());
    rep.body = body.into_bytes();
    Ok(())
}
