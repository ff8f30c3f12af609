use motionread_core::atomic::{beta_table, calibrated_beta_table, coupling_weight, zeeman_detuning};
use motionread_core::constants::TWO_PI;
use motionread_core::estimators::{classify, detect_jumps, histogram};
use motionread_core::motional::{coherent_distribution, fit_coherent_beta, rsb_flopping_curve, sample_flopping_curve};
use motionread_core::nmr::{fit_rabi_rate, resonance_curve, sample_resonance_curve};
use motionread_core::trajectory::{
    clock_detection_fidelity, predicted_level_sigma, readout_p_down, simulate_clock_windows, simulate_zeeman,
    zeeman_classifier,
};
use motionread_core::{ClockTrajectoryConfig, FluorescenceConfig, NmrConfig, TrialSeed, Truncation, ZeemanLabel};
use serde::Serialize;

use crate::config::{
    BetaTableParams, ClockDetectParams, FidelitySweepParams, NmrScanParams, RsbCalibrateParams, ZeemanJumpsParams,
};
use crate::output::Outputs;
use crate::CliError;

type Run = Result<(), CliError>;

#[derive(Serialize)]
struct BetaRow {
    m: f64,
    c_m: f64,
    c_m_sq: f64,
    delta_over_2pi_hz: f64,
    beta_forward: f64,
    lamb_dicke_violated: bool,
    beta_calibrated: f64,
}

pub fn beta_table_run(p: &BetaTableParams, out: &mut Outputs) -> Run {
    let forward = beta_table(&p.drive)?;
    let calibrated = calibrated_beta_table(&p.drive, p.beta_stretched)?;
    let rows: Vec<BetaRow> = ZeemanLabel::ALL
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let c = coupling_weight(m);
            BetaRow {
                m: m.value(),
                c_m: c,
                c_m_sq: c * c,
                delta_over_2pi_hz: zeeman_detuning(m, &p.drive) / TWO_PI,
                beta_forward: forward[i].beta,
                lamb_dicke_violated: forward[i].lamb_dicke_violated,
                beta_calibrated: calibrated[i],
            }
        })
        .collect();
    out.write_csv("beta_table.csv", &rows)
}

#[derive(Serialize)]
struct FlopRow {
    beta_true: f64,
    t_s: f64,
    p_down_expected: f64,
    successes: u64,
    trials: u64,
}

#[derive(Serialize)]
struct FitRow {
    beta_true: f64,
    beta_fit: f64,
    sigma: f64,
    lower: f64,
    upper: f64,
}

/// Curve `i` samples from stream 0 of trial `(seed, i)`.
pub fn rsb_calibrate_run(p: &RsbCalibrateParams, seed: u64, out: &mut Outputs) -> Run {
    let betas = match &p.betas {
        Some(b) => b.clone(),
        None => calibrated_beta_table(&p.drive, p.beta_stretched)?.to_vec(),
    };
    let times: Vec<f64> = (0..p.n_points).map(|i| p.t_max * i as f64 / (p.n_points - 1) as f64).collect();
    let mut curve = Vec::new();
    let mut fits = Vec::new();
    for (i, &beta) in betas.iter().enumerate() {
        let dist = coherent_distribution(beta, Truncation::Auto)?;
        let expected = rsb_flopping_curve(&dist, &p.sideband, &times);
        let mut rng = TrialSeed::new(seed, i as u64).rng(0);
        let points = sample_flopping_curve(&dist, &p.sideband, &times, p.trials_per_point, &mut rng);
        for (pt, e) in points.iter().zip(&expected) {
            curve.push(FlopRow {
                beta_true: beta,
                t_s: pt.t_seconds,
                p_down_expected: *e,
                successes: pt.successes,
                trials: pt.trials,
            });
        }
        let fit = fit_coherent_beta(&points, &p.sideband)?;
        fits.push(FitRow { beta_true: beta, beta_fit: fit.beta, sigma: fit.sigma, lower: fit.interval.0, upper: fit.interval.1 });
    }
    out.write_csv("rsb_curves.csv", &curve)?;
    out.write_csv("rsb_fits.csv", &fits)
}

#[derive(Serialize)]
struct TraceRow<S> {
    time_s: f64,
    true_state: S,
    signal: f64,
    class: usize,
}

#[derive(Serialize)]
struct HistRow {
    center: f64,
    count: u64,
}

pub fn clock_detect_run(p: &ClockDetectParams, seed: u64, out: &mut Outputs) -> Run {
    let (record, counts) = simulate_clock_windows(&p.trajectory, TrialSeed::new(seed, 0))?;
    let classes = classify(&record.signal, &p.classifier);
    let rows: Vec<_> = (0..record.len())
        .map(|i| TraceRow {
            time_s: record.times[i],
            true_state: record.true_state[i].to_string(),
            signal: record.signal[i],
            class: classes.get(i / p.classifier.averaging_window).copied().unwrap_or(0),
        })
        .collect();
    out.write_csv("clock_trajectory.csv", &rows)?;
    out.write_json("clock_events.json", &record.events)?;
    out.write_json("clock_jumps.json", &detect_jumps(&record.signal, &p.classifier))?;

    let h = histogram(&record.signal, p.histogram_bin_width)?;
    let hist: Vec<_> = h.centers.iter().zip(&h.counts).map(|(&center, &count)| HistRow { center, count }).collect();
    out.write_csv("clock_histogram.csv", &hist)?;

    let n_bins = p.trajectory.fluorescence.n_bins;
    let mut header = vec!["time_s".to_string()];
    header.extend((0..n_bins).map(|k| format!("bin_{k}")));
    let table: Vec<Vec<String>> = counts
        .iter()
        .zip(&record.times)
        .map(|(c, t)| std::iter::once(t.to_string()).chain(c.counts.iter().map(|x| x.to_string())).collect())
        .collect();
    out.write_table("clock_counts.csv", &header, &table)
}

#[derive(Serialize)]
struct LevelRow {
    m: f64,
    beta: f64,
    p_down: f64,
    level: f64,
    sigma: f64,
    class: usize,
}

#[derive(Serialize)]
struct PeakRow {
    center: f64,
    count: u64,
    significant_peak: bool,
}

#[derive(Serialize)]
struct ZeemanSummary {
    record_time_s: f64,
    points: usize,
    expected_transition_rate_per_s: f64,
    injected_transitions: usize,
    detectable_transitions: usize,
    detected_jumps: usize,
    detected_rate_per_s: f64,
    classes: Vec<Vec<f64>>,
    significant_peaks: usize,
}

pub fn zeeman_jumps_run(p: &ZeemanJumpsParams, seed: u64, out: &mut Outputs) -> Run {
    let cfg = &p.trajectory;
    let betas = calibrated_beta_table(&cfg.drive, cfg.beta_stretched)?;
    let p_down = readout_p_down(cfg)?;
    let sigma = predicted_level_sigma(cfg)?;
    let (classifier, groups) = zeeman_classifier(cfg, p.resolution_z)?;
    let class_of = |m: ZeemanLabel| groups.iter().position(|g| g.contains(&m)).expect("groups cover all sublevels");

    let levels: Vec<LevelRow> = ZeemanLabel::ALL
        .iter()
        .enumerate()
        .map(|(i, &m)| LevelRow {
            m: m.value(),
            beta: betas[i],
            p_down: p_down[i],
            level: cfg.readout.level(p_down[i]),
            sigma: sigma[i],
            class: class_of(m),
        })
        .collect();
    out.write_csv("zeeman_levels.csv", &levels)?;

    let record = simulate_zeeman(cfg, TrialSeed::new(seed, 0))?;
    let classes = classify(&record.signal, &classifier);
    let rows: Vec<_> = (0..record.len())
        .map(|i| TraceRow { time_s: record.times[i], true_state: record.true_state[i], signal: record.signal[i], class: classes[i] })
        .collect();
    out.write_csv("zeeman_trajectory.csv", &rows)?;
    out.write_json("zeeman_events.json", &record.events)?;
    let jumps = detect_jumps(&record.signal, &classifier);
    out.write_json("zeeman_jumps.json", &jumps)?;

    let h = histogram(&record.signal, p.histogram_bin_width)?;
    let peaks = h.significant_peaks(3.0);
    let hist: Vec<_> = h
        .centers
        .iter()
        .zip(&h.counts)
        .enumerate()
        .map(|(i, (&center, &count))| PeakRow { center, count, significant_peak: peaks.contains(&i) })
        .collect();
    out.write_csv("zeeman_histogram.csv", &hist)?;

    let record_time = record.times.last().copied().unwrap_or(0.0);
    let summary = ZeemanSummary {
        record_time_s: record_time,
        points: record.len(),
        expected_transition_rate_per_s: cfg.expected_transition_rate(),
        injected_transitions: record.events.len(),
        detectable_transitions: record.events.iter().filter(|e| class_of(e.from) != class_of(e.to)).count(),
        detected_jumps: jumps.len(),
        detected_rate_per_s: if record_time > 0.0 { jumps.len() as f64 / record_time } else { 0.0 },
        classes: groups.iter().map(|g| g.iter().map(|m| m.value()).collect()).collect(),
        significant_peaks: peaks.len(),
    };
    out.write_json("zeeman_summary.json", &summary)
}

#[derive(Serialize)]
struct NmrRow {
    curve: f64,
    t_s: f64,
    expected_signal: f64,
    mc_signal: f64,
    mc_err: f64,
}

#[derive(Serialize)]
struct CrossPrediction {
    detuning_in_rabi: f64,
    reduced_chi2: f64,
}

#[derive(Serialize)]
struct NmrFitSummary {
    omega_b_true: f64,
    omega_b_fit: f64,
    sigma: f64,
    reduced_chi2: f64,
    predictions: Vec<CrossPrediction>,
}

/// Curve `c` samples point `i` from stream `i` of trial `(seed, c)`. The
/// resonant Rabi rate is fitted to the zero-detuning curve and then used,
/// without refitting, to predict every other curve.
pub fn nmr_scan_run(p: &NmrScanParams, seed: u64, out: &mut Outputs) -> Run {
    let times = p.times();
    let map = p.readout()?;
    let mut rows = Vec::new();
    let mut sampled = Vec::new();
    for (c, &ratio) in p.detunings_in_rabi.iter().enumerate() {
        let cfg = p.curve_config(ratio);
        let expected = resonance_curve(&cfg, &times, &map)?;
        let mc = sample_resonance_curve(&cfg, &times, &map, p.cycles_per_point, TrialSeed::new(seed, c as u64))?;
        for i in 0..times.len() {
            rows.push(NmrRow {
                curve: ratio,
                t_s: times[i],
                expected_signal: expected[i],
                mc_signal: mc[i].mean,
                mc_err: mc[i].err,
            });
        }
        sampled.push((ratio, mc));
    }
    out.write_csv("nmr_scan.csv", &rows)?;

    if let Some((_, resonant)) = sampled.iter().find(|(r, _)| *r == 0.0) {
        let y: Vec<f64> = resonant.iter().map(|s| s.mean).collect();
        let e: Vec<f64> = resonant.iter().map(|s| s.err.max(1e-9)).collect();
        let fit = fit_rabi_rate(&times, &y, Some(&e), &map)?;
        let mut predictions = Vec::new();
        for (ratio, mc) in sampled.iter().filter(|(r, _)| *r != 0.0) {
            let cfg = p.curve_config(*ratio);
            let predicted = NmrConfig { omega_b_rabi: fit.omega_b_rabi, ..cfg };
            let predicted_cfg = NmrConfig { dt: predicted.dt.min(predicted.max_dt()), ..predicted };
            let model = resonance_curve(&predicted_cfg, &times, &map)?;
            let chi2: f64 = mc.iter().zip(&model).map(|(s, m)| ((s.mean - m) / s.err.max(1e-9)).powi(2)).sum();
            predictions.push(CrossPrediction { detuning_in_rabi: *ratio, reduced_chi2: chi2 / times.len() as f64 });
        }
        out.write_json(
            "nmr_fit.json",
            &NmrFitSummary {
                omega_b_true: p.nmr.omega_b_rabi,
                omega_b_fit: fit.omega_b_rabi,
                sigma: fit.sigma,
                reduced_chi2: fit.reduced_chi2(),
                predictions,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    sweep: &'static str,
    integration_time_s: f64,
    mean_rate: f64,
    threshold: f64,
    balanced: f64,
    pooled: f64,
    worst: f64,
    error_s0: f64,
    error_p0: f64,
}

/// Point `j` of the sweep draws from `TrialSeed::new(seed, j)`.
pub fn fidelity_sweep_run(p: &FidelitySweepParams, seed: u64, out: &mut Outputs) -> Run {
    let mut points: Vec<(&'static str, f64, f64)> = Vec::new();
    let rate = p.trajectory.fluorescence.mean_rate;
    points.extend(p.integration_times.iter().map(|&t| ("integration_time", t, rate)));
    points.extend(p.mean_rates.iter().map(|&r| ("mean_rate", p.reference_time, r)));
    let mut rows = Vec::new();
    for (j, (sweep, time, rate)) in points.into_iter().enumerate() {
        let cfg = ClockTrajectoryConfig {
            fluorescence: FluorescenceConfig { mean_rate: rate, ..p.trajectory.fluorescence.clone() },
            ..p.trajectory.clone()
        };
        let f = clock_detection_fidelity(&cfg, time, p.trajectories, TrialSeed::new(seed, j as u64))?;
        rows.push(SweepRow {
            sweep,
            integration_time_s: time,
            mean_rate: rate,
            threshold: f.threshold,
            balanced: f.balanced,
            pooled: f.pooled,
            worst: f.worst,
            error_s0: f.error_a,
            error_p0: f.error_b,
        });
    }
    out.write_csv("fidelity_sweep.csv", &rows)
}
