//! Acceptance suite: one check per criterion, each printing a single
//! `ACCEPT <id> PASS|FAIL` line. Runs without the libtest harness so every
//! line is shown; exits nonzero when any criterion fails.

use std::time::{Duration, Instant};

use num_rational::Rational64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwbsim_core::channel::AwgnSpec;
use uwbsim_core::receiver::{energy_per_bit, q_function};
use uwbsim_core::reference::{SizeMetric, RECORDS};
use uwbsim_core::*;

const BER_BITS: usize = 100_000;
const BER_POINTS_DB: [f64; 4] = [0.0, 2.0, 4.0, 6.0];
const BER_SEED: u64 = 1;
const BER_BUDGET: Duration = Duration::from_secs(60);
const EQUIV_BITS: usize = 10_000;
const UWB_EXPECTED_HZ: f64 = 915e6;
const UWB_REL_TOL: f64 = 0.05;
const FRIIS_EXPECTED_M: f64 = 59.6;
const FRIIS_TOL_M: f64 = 0.1;

type Verdict = (&'static str, bool, String);

fn report(id: &'static str, ok: bool, detail: String) -> Verdict {
    (id, ok, detail)
}

fn random_bits(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

/// 1 ns monocycle at 10 GS/s, 2 ns slots, 4 slots per frame.
fn ber_link(ppm: bool) -> (TxConfig, Receiver) {
    let pulse = PulseSpec::new(PulseShape::GaussianMonocycle, 1.0, 1e-9, 10e9).unwrap();
    let scheme = if ppm { ModScheme::orthogonal_ppm(&pulse) } else { ModScheme::Bpam };
    let frame = FrameConfig::new(2e-9, 4).unwrap();
    let code = generate_th_code(11, 16, 4).unwrap();
    let tx = TxConfig::new(pulse, frame, code, scheme).unwrap();
    let adc = AdcModel::new(10e9, 16, 8.0, AdcMode::Nyquist).unwrap();
    let rx = Receiver::matched(&tx, adc, Band::new(0.0, 5e9).unwrap()).unwrap();
    (tx, rx)
}

fn ber_criterion(id: &'static str, ppm: bool, oracle: impl Fn(f64) -> f64) -> Verdict {
    let (tx, rx) = ber_link(ppm);
    let start = Instant::now();
    let curve = ber_sweep(&tx, &rx, &BER_POINTS_DB, BER_BITS, BER_SEED).unwrap();
    let elapsed = start.elapsed();
    let mut ok = elapsed < BER_BUDGET;
    let mut detail = Vec::new();
    for row in &curve.rows {
        let expected = oracle(10f64.powf(row.ebn0_db / 10.0));
        let half = 1.96 * (expected * (1.0 - expected) / row.bits as f64).sqrt();
        let inside = row.agrees_with(expected);
        ok &= inside;
        detail.push(format!(
            "{} dB ber={:.5} oracle={:.5}±{:.5}{}",
            row.ebn0_db,
            row.ber,
            expected,
            half,
            if inside { "" } else { " (outside)" }
        ));
    }
    detail.push(format!("{:.2} s", elapsed.as_secs_f64()));
    report(id, ok, detail.join("; "))
}

fn a01_ber_bpam() -> Verdict {
    ber_criterion("01-ber-bpam", false, |g| q_function((2.0 * g).sqrt()))
}

fn a02_ber_orthogonal_ppm() -> Verdict {
    ber_criterion("02-ber-ppm", true, |g| q_function(g.sqrt()))
}

fn equiv_profile() -> PhyProfile {
    PhyProfile {
        adc: AdcModel::new(10e9, 16, 8.0, AdcMode::Nyquist).unwrap(),
        band: Band::new(0.0, 5e9).unwrap(),
        oversample: 1,
        scheme: SchemeKind::Ppm,
        waveforms: vec![PulseShape::Gaussian, PulseShape::GaussianMonocycle],
        amplitude_lsb: 0.01,
    }
}

fn equiv_registers() -> RegisterValues {
    RegisterValues {
        nb_tc_par_frame_th: 4,
        tc_ticks: 20,
        code: vec![2, 0, 3, 1, 1, 3, 0, 2],
        pulse_waveform: 1,
        pulse_amplitude: 100,
        pulse_duration: 10,
    }
}

fn a03_static_reconfig_equivalence() -> Verdict {
    let profile = equiv_profile();
    let regs = equiv_registers();
    let tx = profile.tx_config(&regs).unwrap();
    let rx = profile.rx_config::<f64>(&regs).unwrap();
    let eb = energy_per_bit(&tx).unwrap();
    let no_op = vec![
        ReconfigEvent {
            at_frame: 1234,
            writes: vec![RegisterWrite::Set(Port::Tc, 20), RegisterWrite::Set(Port::NbTcParFrameTh, 4)],
        },
        ReconfigEvent {
            at_frame: 6000,
            writes: vec![RegisterWrite::LoadCode(regs.code.iter().map(|&c| i64::from(c)).collect())],
        },
    ];
    let mut ok = true;
    let mut cases = 0;
    for seed in [1u64, 7, 42] {
        for ebn0 in [0.0, 4.0, 8.0] {
            let bits = random_bits(EQUIV_BITS, seed ^ 0xb175);
            let ch = AwgnSpec::new(ebn0, seed);
            let w: SampledWaveform = modulate(&bits, &tx).unwrap();
            let noisy = add_awgn(&w, eb, &ch).unwrap();
            let stat = demodulate(&adc_sample(&noisy, &rx.adc, &rx.band).unwrap(), &rx).unwrap();
            for events in [vec![], no_op.clone()] {
                let run = StreamRun::new(bits.clone(), events, regs.clone());
                let out = run_stream_with_profile::<f64>(run, &profile, &ch).unwrap().result.unwrap();
                ok &= out.decoded == stat;
                cases += 1;
            }
        }
    }
    report(
        "03-static-reconfig-equivalence",
        ok,
        format!("{cases} runs of {EQUIV_BITS} bits, decisions identical: {ok}"),
    )
}

fn a04_rate_identities_exact() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    for _ in 0..100 {
        let tc = Rational64::new(rng.random_range(1..=10_000), rng.random_range(1..=1_000_000_000));
        let nc = rng.random_range(1..=255u32);
        let cfg = ExactFrameConfig::new(tc, nc).unwrap();
        let r = data_rate(&cfg);
        ok &= r.paper_rate * cfg.tc() == Rational64::from_integer(1);
        ok &= r.paper_rate == Rational64::from_integer(i64::from(nc)) * r.symbol_rate;
        ok &= frame_duration(&cfg) == tc * Rational64::from_integer(i64::from(nc));
    }
    report("04-rate-identities", ok, "100 random rational configs".into())
}

fn a05_uwb_gate() -> Verdict {
    let rect = PulseSpec::new(PulseShape::Rectangular, 1.0, 1e-9, 100e9).unwrap();
    let s = estimate_spectrum(&synthesize_pulse::<f64>(&rect).unwrap(), 1 << 16).unwrap();
    let bw = bandwidth_at_level(&s, 10.0).unwrap().bandwidth;
    let rect_ok = is_uwb_compliant(&s).unwrap();

    let fc = 1e9;
    let fs = 20e9;
    let cycles = 100.0;
    let n = (cycles / fc * fs) as usize;
    let burst: Vec<f64> = (0..n).map(|k| (2.0 * std::f64::consts::PI * fc * k as f64 / fs).sin()).collect();
    let bs = estimate_spectrum(&SampledWaveform::new(burst, fs).unwrap(), 1 << 16).unwrap();
    let burst_bw = bandwidth_at_level(&bs, 10.0).unwrap().bandwidth;
    let burst_ok = is_uwb_compliant(&bs).unwrap();

    let within = ((bw - UWB_EXPECTED_HZ) / UWB_EXPECTED_HZ).abs() <= UWB_REL_TOL;
    report(
        "05-uwb-gate",
        within && rect_ok && !burst_ok,
        format!(
            "rect 1 ns: {:.1} MHz (target {:.0} MHz ±{:.0}%), compliant={rect_ok}; 100-cycle burst: {:.1} MHz, compliant={burst_ok}",
            bw / 1e6,
            UWB_EXPECTED_HZ / 1e6,
            UWB_REL_TOL * 100.0,
            burst_bw / 1e6
        ),
    )
}

/// Gaussian-windowed 3.5 GHz cosine over 5 ns, tabulated at 20 GS/s.
fn bandpass_pulse() -> PulseSpec {
    let fs = 20e9;
    let dur = 5e-9;
    let n = 100;
    let sigma = dur / 7.0;
    let table = (0..n)
        .map(|k| {
            let t = (k as f64 - (n as f64 - 1.0) / 2.0) / fs;
            (2.0 * std::f64::consts::PI * 3.5e9 * t).cos() * (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    PulseSpec::new(PulseShape::Custom(table), 0.5, dur, fs).unwrap()
}

fn a06_subsampling() -> Verdict {
    let pulse = bandpass_pulse();
    let s = estimate_spectrum(&synthesize_pulse::<f64>(&pulse).unwrap(), 1 << 14).unwrap();
    let occupied = bandwidth_at_level(&s, 10.0).unwrap();
    let band = Band::new(3.0e9, 4.0e9).unwrap();
    let fits = occupied.f_low >= band.f_low && occupied.f_high <= band.f_high;

    let sub = AdcModel::new(2e9, 12, 1.0, AdcMode::Subsampling).unwrap();
    let nyq = AdcModel::new(20e9, 12, 1.0, AdcMode::Nyquist).unwrap();
    let zone = sub.check_placement(&band);
    let mut ok = fits && zone.is_ok();
    let mut detail = vec![format!(
        "pulse band {:.2}-{:.2} GHz, 3.0-4.0 GHz @ 2 GS/s -> {zone:?}",
        occupied.f_low / 1e9,
        occupied.f_high / 1e9
    )];

    let frame = FrameConfig::new(10e-9, 4).unwrap();
    let code = generate_th_code(6, 32, 4).unwrap();
    let bits = random_bits(EQUIV_BITS, 6);
    for scheme in [ModScheme::Bpam, ModScheme::orthogonal_ppm(&pulse), ModScheme::Ook] {
        let tx = TxConfig::new(pulse.clone(), frame, code.clone(), scheme).unwrap();
        let w: SampledWaveform = modulate(&bits, &tx).unwrap();
        let mut decided = Vec::new();
        for adc in [sub, nyq] {
            let rx = Receiver::matched(&tx, adc, band).unwrap();
            decided.push(demodulate(&adc_sample(&w, &rx.adc, &rx.band).unwrap(), &rx).unwrap());
        }
        let same = decided[0] == decided[1] && decided[1] == bits;
        ok &= same;
        detail.push(format!("{} identical={same}", scheme.name()));
    }

    let wide = Band::new(3.0e9, 4.2e9).unwrap();
    let rejected = sub.check_placement(&wide);
    let rej_ok = matches!(rejected, Err(Error::Dimensioning(_)));
    ok &= rej_ok;
    detail.push(format!("3.0-4.2 GHz @ 2 GS/s rejected with dimensioning error: {rej_ok}"));
    report("06-subsampling", ok, detail.join("; "))
}

fn a07_dynamic_reconfiguration() -> Verdict {
    let profile = equiv_profile();
    let regs = RegisterValues {
        pulse_duration: 5,
        ..equiv_registers()
    };
    let bits = random_bits(200, 7);
    let halve = ReconfigEvent {
        at_frame: 100,
        writes: vec![RegisterWrite::Set(Port::Tc, 10)],
    };
    let out = run_stream_with_profile::<f64>(StreamRun::new(bits.clone(), vec![halve], regs.clone()), &profile, &AwgnSpec::noiseless())
        .unwrap()
        .result
        .unwrap();
    let errs = out.bit_errors(&bits);
    let tf0 = out.trace[0].tf_ns;
    let halved = out.trace.iter().all(|t| if t.frame < 100 { t.tf_ns == tf0 } else { t.tf_ns == tf0 / 2.0 });

    let swap = ReconfigEvent {
        at_frame: 100,
        writes: vec![RegisterWrite::LoadCode(vec![3, 1, 1, 0, 2])],
    };
    let out2 = run_stream_with_profile::<f64>(StreamRun::new(bits.clone(), vec![swap], regs), &profile, &AwgnSpec::noiseless())
        .unwrap()
        .result
        .unwrap();
    let swap_errs = out2.bit_errors(&bits);
    let swapped = out2.trace[99].code_id == 0 && out2.trace[100].code_id == 1;
    report(
        "07-dynamic-reconfig",
        errs == 0 && halved && swap_errs == 0 && swapped,
        format!(
            "Tc halved: {errs} errors, Tf {tf0} ns -> {} ns at frame 100 ({halved}); code swap: {swap_errs} errors ({swapped})",
            out.trace[100].tf_ns
        ),
    )
}

fn a08_friis() -> Verdict {
    let ranges: Vec<f64> = [1e9, 2e9, 4e9, 8e9]
        .iter()
        .map(|&f| friis_range(&LinkBudget::free_space(0.0, f, -80.0)).unwrap())
        .collect();
    let decreasing = ranges.windows(2).all(|w| w[1] < w[0]);
    let spot = friis_range(&LinkBudget::free_space(0.0, 4e9, -80.0)).unwrap();
    let spot_ok = (spot - FRIIS_EXPECTED_M).abs() <= FRIIS_TOL_M;
    report(
        "08-friis",
        decreasing && spot_ok,
        format!("ranges {ranges:.2?} m, 4 GHz spot {spot:.4} m"),
    )
}

/// Printed decimal convention uses a comma.
fn printed_mhz(cell: &str) -> f64 {
    cell.trim_end_matches(" MHz").replace(',', ".").parse().unwrap()
}

fn a09_reference_records() -> Verdict {
    let fixture: [(&str, Version, &[&str]); 6] = [
        ("asic", Version::Static, &["333 MHz", "3 ns", "152123.937500", "23.8080 mW"]),
        ("asic", Version::Reconfigurable, &["50 MHz", "20 ns", "1254628.500000", "18.8108 mW"]),
        ("spartan3", Version::Static, &["160,8 MHz", "129,416 MHz", "6466"]),
        ("spartan3", Version::Reconfigurable, &["84,9 MHz", "62,672 MHz", "55054"]),
        ("virtex5", Version::Static, &["448,7 MHz", "382,117 MHz", "6232"]),
        ("virtex5", Version::Reconfigurable, &["128,9 MHz", "104,3 MHz", "15422"]),
    ];
    let mut ok = RECORDS.len() == fixture.len();
    for (t, v, cells) in fixture {
        let r = lookup_reference(t.parse().unwrap(), v).unwrap();
        ok &= r.printed == cells;
        match r.size {
            SizeMetric::Area(a) => {
                ok &= r.frequency_mhz == printed_mhz(cells[0]);
                ok &= format!("{a:.6}") == cells[2];
                ok &= r.power_mw.map(|p| format!("{p:.4} mW")).as_deref() == Some(cells[3]);
            }
            SizeMetric::Gates(g) => {
                ok &= r.synthesis_frequency_mhz == Some(printed_mhz(cells[0]));
                ok &= r.frequency_mhz == printed_mhz(cells[1]);
                ok &= g.to_string() == cells[2];
            }
        }
    }
    let mut ordering = Vec::new();
    for target in Target::ALL {
        let s = lookup_reference(target, Version::Static).unwrap();
        let r = lookup_reference(target, Version::Reconfigurable).unwrap();
        let holds = r.frequency_mhz < s.frequency_mhz && r.size.value() > s.size.value();
        ok &= holds;
        ordering.push(format!("{} {}", target.name(), holds));
    }
    report(
        "09-reference-records",
        ok,
        format!("printed cells match; ordering: {}", ordering.join(", ")),
    )
}

#[derive(Debug, Clone)]
enum Op {
    Write(Port, i64),
    Named(usize, i64),
    Load(Vec<i64>),
    Unload,
    Sig,
    Commit,
    Boundary,
}

fn op() -> impl Strategy<Value = Op> {
    let port = prop::sample::select(Port::ALL.to_vec());
    let value = prop_oneof![-300i64..600, Just(255i64), Just(256), Just(-1), Just(i64::MAX), Just(i64::MIN)];
    prop_oneof![
        (port, value.clone()).prop_map(|(p, v)| Op::Write(p, v)),
        (0usize..7, value.clone()).prop_map(|(i, v)| Op::Named(i, v)),
        prop::collection::vec(value, 0..8).prop_map(Op::Load),
        Just(Op::Unload),
        Just(Op::Sig),
        Just(Op::Commit),
        Just(Op::Boundary),
    ]
}

fn in_range(f: &PhyRegisterFile) -> bool {
    Port::ALL.iter().all(|&p| {
        (0..=255).contains(&f.read_staged(p)) && (0..=255).contains(&f.read_active(p))
    }) && f.staged().code.len() <= 255
        && f.active().code.len() <= 255
}

fn a10_register_dimensioning() -> Verdict {
    let mut rejected = true;
    for port in Port::ALL {
        let mut f = PhyRegisterFile::new(equiv_registers()).unwrap();
        if port == Port::CodeJData {
            f.write_register(Port::LgCode, 4).unwrap();
        }
        let before = f.clone();
        rejected &= matches!(f.write_register(port, 256), Err(Error::Range { value: 256, .. }));
        rejected &= f.write_named(port.name(), 256).is_err();
        rejected &= f.staged() == before.staged() && f.active() == before.active();
    }
    let mut f = PhyRegisterFile::new(equiv_registers()).unwrap();
    rejected &= f.load_code(&vec![0; 256]).is_err();

    let cfg = ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    };
    let property = proptest::test_runner::TestRunner::new(cfg).run(&prop::collection::vec(op(), 1..64), |ops| {
        let mut f = PhyRegisterFile::new(equiv_registers()).unwrap();
        for op in ops {
            let _ = match op {
                Op::Write(p, v) => f.write_register(p, v),
                Op::Named(i, v) => f.write_named(Port::ALL[i].name(), v),
                Op::Load(chips) => f.load_code(&chips),
                Op::Unload => {
                    f.unload_code();
                    Ok(())
                }
                Op::Sig => {
                    f.assert_sig_reconf();
                    Ok(())
                }
                Op::Commit => f.commit().map(|_| ()),
                Op::Boundary => f.frame_boundary().map(|_| ()),
            };
            prop_assert!(in_range(&f));
            prop_assert!(f.active().validate().is_ok());
        }
        Ok(())
    });
    report(
        "10-register-dimensioning",
        rejected && property.is_ok(),
        format!("256 rejected on every port: {rejected}; random API sequences in range: {property:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("01-ber-bpam", a01_ber_bpam),
        ("02-ber-ppm", a02_ber_orthogonal_ppm),
        ("03-static-reconfig-equivalence", a03_static_reconfig_equivalence),
        ("04-rate-identities", a04_rate_identities_exact),
        ("05-uwb-gate", a05_uwb_gate),
        ("06-subsampling", a06_subsampling),
        ("07-dynamic-reconfig", a07_dynamic_reconfiguration),
        ("08-friis", a08_friis),
        ("09-reference-records", a09_reference_records),
        ("10-register-dimensioning", a10_register_dimensioning),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let (id, ok, detail) = match std::panic::catch_unwind(check) {
            Ok(v) => v,
            Err(_) => (id, false, "panicked".to_string()),
        };
        println!("ACCEPT {id} {}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
