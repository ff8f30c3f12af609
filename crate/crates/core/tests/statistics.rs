use motionread_core::atomic::clebsch_gordan_stretched;
use motionread_core::estimators::detect_jumps;
use motionread_core::fluorescence::{expected_counts, simulate_sequence};
use motionread_core::motional::displaced_thermal;
use motionread_core::nmr::{fit_rabi_rate, resonance_curve, sample_resonance_curve};
use motionread_core::trajectory::clock_hidden_path;
use motionread_core::{
    ClassifierConfig, ClockState, ClockTrajectoryConfig, FluorescenceConfig, HalfInt, NmrConfig, ReadoutMap,
    TrialSeed, Truncation,
};
use rand::Rng;
use rand_distr::{Distribution, Normal as NormalSampler};
use statrs::distribution::{ChiSquared, ContinuousCDF, Exp};

fn ln_factorial(n: i64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Racah's closed form for `<j1 m1; j2 m2 | J M>`, all arguments doubled.
fn racah(j1: i64, m1: i64, j2: i64, m2: i64, jj: i64, mm: i64) -> f64 {
    if m1 + m2 != mm {
        return 0.0;
    }
    let f = |x: i64| ln_factorial(x / 2);
    let pre = 0.5
        * ((jj + 1) as f64).ln()
        + 0.5 * (f(jj + j1 - j2) + f(jj - j1 + j2) + f(j1 + j2 - jj) - f(j1 + j2 + jj + 2))
        + 0.5 * (f(jj + mm) + f(jj - mm) + f(j1 - m1) + f(j1 + m1) + f(j2 - m2) + f(j2 + m2));
    let mut sum = 0.0;
    for k in 0..=(j1 + j2 + jj) / 2 {
        let k2 = 2 * k;
        let args = [k2, j1 + j2 - jj - k2, j1 - m1 - k2, j2 + m2 - k2, jj - j2 + m1 + k2, jj - j1 - m2 + k2];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (-args.iter().map(|&a| f(a)).sum::<f64>()).exp();
    }
    pre.exp() * sum
}

#[test]
fn stretched_coupling_matches_racah_formula() {
    for tj in 1..=7 {
        for tm in (-tj..=tj).step_by(2) {
            let got = clebsch_gordan_stretched(HalfInt::from_twice(tj as i32), HalfInt::from_twice(tm as i32)).unwrap();
            let want = racah(tj, tm, 2, 2, tj + 2, tm + 2);
            assert!((got - want).abs() < 1e-12, "j2 = {tj}, m2 = {tm}: {got} vs {want}");
        }
    }
}

#[test]
fn displaced_thermal_matches_glauber_mixture() {
    let (beta, nbar) = (2.0, 0.5);
    let dist = displaced_thermal(beta, nbar, Truncation::Auto).unwrap();
    let samples = 40_000;
    let n_check = 12;
    let mut rng = TrialSeed::new(3, 0).rng(0);
    let normal = NormalSampler::new(0.0, (nbar / 2.0).sqrt()).unwrap();
    let mut sum = vec![0.0; n_check];
    let mut sum_sq = vec![0.0; n_check];
    for _ in 0..samples {
        let re = beta + normal.sample(&mut rng);
        let im = normal.sample(&mut rng);
        let x: f64 = re * re + im * im;
        for n in 0..n_check {
            let p = (-x + n as f64 * x.ln() - ln_factorial(n as i64)).exp();
            sum[n] += p;
            sum_sq[n] += p * p;
        }
    }
    let s = samples as f64;
    for n in 0..n_check {
        let mean = sum[n] / s;
        let se = ((sum_sq[n] / s - mean * mean) / s).sqrt();
        assert!((dist.get(n) - mean).abs() < 5.0 * se + 1e-12, "n = {n}: {} vs {mean} +- {se}", dist.get(n));
    }
}

#[test]
fn folded_counts_pass_poisson_chi_square() {
    let cfg = FluorescenceConfig::default();
    let sequences = 3000;
    let mut totals = vec![0u64; cfg.n_bins];
    for k in 0..sequences {
        let c = simulate_sequence(1.0, &cfg, &mut TrialSeed::new(17, k).rng(0));
        for (t, x) in totals.iter_mut().zip(&c.counts) {
            *t += x;
        }
    }
    let expected = expected_counts(1.0, &cfg);
    let chi2: f64 = totals
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let e = e * sequences as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let limit = ChiSquared::new(cfg.n_bins as f64).unwrap().inverse_cdf(0.999);
    assert!(chi2 < limit, "chi2 = {chi2}, limit {limit}");
}

#[test]
fn clock_dwell_times_are_exponential() {
    let cfg = ClockTrajectoryConfig {
        p_drive: 0.0,
        initial: ClockState::P0,
        total_time: 1000.0,
        ..ClockTrajectoryConfig::default()
    };
    let tau = cfg.p0_lifetime.unwrap();
    let mut dwell: Vec<f64> = (0..2000)
        .map(|i| {
            let events = clock_hidden_path(&cfg, &mut TrialSeed::new(29, i).rng(0));
            assert_eq!(events.len(), 1);
            events[0].time
        })
        .collect();
    dwell.sort_by(f64::total_cmp);
    let exp = Exp::new(1.0 / tau).unwrap();
    let n = dwell.len() as f64;
    let d = dwell
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = exp.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    // Kolmogorov-Smirnov critical value at the 1 % level
    assert!(d < 1.63 / n.sqrt(), "D = {d}");
}

#[test]
fn jump_detection_recovers_telegraph_rate() {
    let q = 0.02;
    let len = 1000;
    let cfg = ClassifierConfig { thresholds: vec![0.5], averaging_window: 1 };
    let noise = NormalSampler::new(0.0, 0.1).unwrap();
    let mut detected = 0usize;
    for seed in 0..100 {
        let mut rng = TrialSeed::new(41, seed).rng(0);
        let mut state = 0.0;
        let series: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_bool(q) {
                    state = 1.0 - state;
                }
                state + noise.sample(&mut rng)
            })
            .collect();
        detected += detect_jumps(&series, &cfg).len();
    }
    let trials = (100 * (len - 1)) as f64;
    let rate = detected as f64 / trials;
    let se = (q * (1.0 - q) / trials).sqrt();
    assert!((rate - q).abs() < 3.0 * se, "rate {rate} vs {q} +- {se}");
}

#[test]
fn rabi_fit_covers_truth_and_predicts_detuned_curve() {
    let map = ReadoutMap::default();
    let resonant = NmrConfig::default();
    let detuned = NmrConfig { delta_b: 2.0 * resonant.omega_b_rabi, ..resonant.clone() };
    let times: Vec<f64> = (0..31).map(|i| resonant.t_max * i as f64 / 30.0).collect();
    let seeds = 20;
    let mut covered = 0;
    let mut reduced = Vec::new();
    for s in 0..seeds {
        let data = sample_resonance_curve(&resonant, &times, &map, 200, TrialSeed::new(53, s)).unwrap();
        let y: Vec<f64> = data.iter().map(|p| p.mean).collect();
        let e: Vec<f64> = data.iter().map(|p| p.err).collect();
        let fit = fit_rabi_rate(&times, &y, Some(&e), &map).unwrap();
        if (fit.omega_b_rabi - resonant.omega_b_rabi).abs() < 3.0 * fit.sigma {
            covered += 1;
        }
        let other = sample_resonance_curve(&detuned, &times, &map, 200, TrialSeed::new(59, s)).unwrap();
        let predicted = NmrConfig {
            omega_b_rabi: fit.omega_b_rabi,
            delta_b: detuned.delta_b,
            ..resonant.clone()
        };
        let model = resonance_curve(&predicted, &times, &map).unwrap();
        let chi2: f64 = other.iter().zip(&model).map(|(p, m)| ((p.mean - m) / p.err).powi(2)).sum();
        reduced.push(chi2 / times.len() as f64);
    }
    assert!(covered >= 18, "{covered}/{seeds} fits cover the truth at 3 sigma");
    let mean = reduced.iter().sum::<f64>() / reduced.len() as f64;
    assert!((0.5..=2.0).contains(&mean), "mean reduced chi2 {mean}");
}
