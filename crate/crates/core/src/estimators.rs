//! State recovery from detection signals: demodulation of folded
//! fluorescence, threshold classification, histograms, jump detection and
//! discrimination fidelity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluorescence::BinnedCounts;
use crate::validate::{Checker, Validate, Violation};

/// In-phase and quadrature modulation amplitudes, as fractions of the mean.
pub fn demodulate_iq(counts: &BinnedCounts, phase: f64) -> Result<(f64, f64)> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::ZeroCounts);
    }
    let k = counts.n_bins() as f64;
    let w = std::f64::consts::TAU / k;
    let (mut i, mut q) = (0.0, 0.0);
    for (bin, &c) in counts.counts.iter().enumerate() {
        let theta = (bin as f64 + 0.5) * w - phase;
        i += c as f64 * theta.cos();
        q += c as f64 * theta.sin();
    }
    // least squares of the bin-integrated model
    // c_k = a (1 + A sinc(w/2) cos(theta_k - phase)) on equispaced bins
    let sinc = (0.5 * w).sin() / (0.5 * w);
    let norm = 2.0 / (total as f64 * sinc);
    Ok((i * norm, q * norm))
}

/// Modulation amplitude at the calibrated phase, relative to the mean count.
pub fn demodulate(counts: &BinnedCounts, phase: f64) -> Result<f64> {
    demodulate_iq(counts, phase).map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Strictly increasing class boundaries; `k` thresholds give `k + 1` classes.
    pub thresholds: Vec<f64>,
    /// Consecutive values pooled (by their mean) per decision.
    pub averaging_window: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { thresholds: vec![0.05], averaging_window: 1 }
    }
}

impl Validate for ClassifierConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        c.check(
            self.thresholds.windows(2).all(|w| w[0] < w[1]),
            "thresholds",
            "must be strictly increasing",
        );
        c.check(self.thresholds.iter().all(|t| t.is_finite()), "thresholds", "must be finite");
        c.check(self.averaging_window >= 1, "averaging_window", "must be >= 1");
        c.out
    }
}

impl ClassifierConfig {
    /// Class of a single pooled value. A value on a threshold goes to the lower class.
    pub fn class_of(&self, value: f64) -> usize {
        self.thresholds.iter().take_while(|&&t| value > t).count()
    }
}

/// Means of consecutive non-overlapping windows; a trailing partial window is
/// averaged over what it holds.
pub fn pool(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    values.chunks(window).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Class label per pooled window.
pub fn classify(values: &[f64], cfg: &ClassifierConfig) -> Vec<usize> {
    pool(values, cfg.averaging_window).into_iter().map(|v| cfg.class_of(v)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Local maxima with their prominence: height above the higher of the
    /// two valley floors that separate them from a taller point. Counts
    /// outside the histogram range are zero.
    pub fn peak_prominences(&self) -> Vec<(usize, f64)> {
        let c: Vec<f64> = self.counts.iter().map(|&x| x as f64).collect();
        let n = c.len();
        let mut peaks = Vec::new();
        let mut i = 0;
        while i < n {
            // plateaus count once, at their left edge
            let mut j = i;
            while j + 1 < n && c[j + 1] == c[i] {
                j += 1;
            }
            let left_lower = i == 0 || c[i - 1] < c[i];
            let right_lower = j + 1 == n || c[j + 1] < c[i];
            if left_lower && right_lower && c[i] > 0.0 {
                let mut left_min = c[i];
                let mut k = i;
                while k > 0 && c[k - 1] <= c[i] {
                    k -= 1;
                    left_min = left_min.min(c[k]);
                }
                let left_min = if k == 0 { left_min.min(0.0) } else { left_min };
                let mut right_min = c[i];
                let mut k = j;
                while k + 1 < n && c[k + 1] <= c[i] {
                    k += 1;
                    right_min = right_min.min(c[k]);
                }
                let right_min = if k + 1 == n { right_min.min(0.0) } else { right_min };
                peaks.push((i, c[i] - left_min.max(right_min)));
            }
            i = j + 1;
        }
        peaks
    }

    /// Indices of local maxima with prominence of at least `min_prominence` counts.
    pub fn resolved_peaks(&self, min_prominence: f64) -> Vec<usize> {
        self.peak_prominences().into_iter().filter(|&(_, p)| p >= min_prominence).map(|(i, _)| i).collect()
    }

    /// Local maxima whose prominence exceeds `z` Poisson standard deviations
    /// of the peak count.
    pub fn significant_peaks(&self, z: f64) -> Vec<usize> {
        self.peak_prominences()
            .into_iter()
            .filter(|&(i, p)| p >= z * (self.counts[i] as f64).sqrt())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Fixed-width, left-closed histogram with bin edges on multiples of `bin_width`.
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::Domain(format!("bin width must be > 0, got {bin_width}")));
    }
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Ok(Histogram { bin_width, centers: vec![], counts: vec![] });
    }
    let index = |v: f64| (v / bin_width).floor() as i64;
    let lo = finite.iter().map(|&v| index(v)).min().unwrap();
    let hi = finite.iter().map(|&v| index(v)).max().unwrap();
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for &v in &finite {
        counts[(index(v) - lo) as usize] += 1;
    }
    let centers = (lo..=hi).map(|k| (k as f64 + 0.5) * bin_width).collect();
    Ok(Histogram { bin_width, centers, counts })
}

/// A change of class between consecutive pooled windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Jump {
    /// Position in the input series of the first value of the new window.
    pub index: usize,
    pub from: usize,
    pub to: usize,
}

pub fn detect_jumps(values: &[f64], cfg: &ClassifierConfig) -> Vec<Jump> {
    let labels = classify(values, cfg);
    labels
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(i, w)| Jump { index: (i + 1) * cfg.averaging_window.max(1), from: w[0], to: w[1] })
        .collect()
}

/// Discrimination of two signal ensembles by a single threshold.
///
/// `balanced` is one minus the mean of the two misclassification fractions;
/// `pooled` weights each ensemble by its size; `worst` is the smaller of the
/// two per-state retention fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fidelity {
    pub threshold: f64,
    pub balanced: f64,
    pub pooled: f64,
    pub worst: f64,
    pub error_a: f64,
    pub error_b: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fidelity at `threshold`. The ensemble with the larger mean is expected
/// above the threshold; values equal to it count as below.
pub fn detection_fidelity(a: &[f64], b: &[f64], threshold: f64) -> Result<Fidelity> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("both ensembles must be non-empty".into()));
    }
    let a_high = mean(a) >= mean(b);
    let frac_above = |xs: &[f64]| xs.iter().filter(|&&x| x > threshold).count() as f64 / xs.len() as f64;
    let (error_a, error_b) = if a_high {
        (1.0 - frac_above(a), frac_above(b))
    } else {
        (frac_above(a), 1.0 - frac_above(b))
    };
    let na = a.len() as f64;
    let nb = b.len() as f64;
    Ok(Fidelity {
        threshold,
        balanced: 1.0 - 0.5 * (error_a + error_b),
        pooled: 1.0 - (error_a * na + error_b * nb) / (na + nb),
        worst: 1.0 - error_a.max(error_b),
        error_a,
        error_b,
    })
}

/// Threshold maximising the balanced fidelity, searched over midpoints of the
/// pooled sorted values.
pub fn best_threshold(a: &[f64], b: &[f64]) -> Result<Fidelity> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("both ensembles must be non-empty".into()));
    }
    let a_high = mean(a) >= mean(b);
    let (high, low) = if a_high { (a, b) } else { (b, a) };
    let mut events: Vec<(f64, bool)> =
        high.iter().map(|&x| (x, true)).chain(low.iter().map(|&x| (x, false))).collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    // sweep the threshold upward: every value passed moves below it
    let (nh, nl) = (high.len() as f64, low.len() as f64);
    let mut below_high = 0.0;
    let mut below_low = 0.0;
    let mut best = (f64::NEG_INFINITY, events[0].0 - 1.0);
    let mut i = 0;
    loop {
        let threshold = if i == 0 {
            events[0].0 - 1.0
        } else if i == events.len() {
            events[i - 1].0
        } else {
            0.5 * (events[i - 1].0 + events[i].0)
        };
        let score = 1.0 - 0.5 * (below_high / nh + (nl - below_low) / nl);
        if score > best.0 + 1e-15 {
            best = (score, threshold);
        }
        if i == events.len() {
            break;
        }
        let v = events[i].0;
        while i < events.len() && events[i].0 == v {
            if events[i].1 {
                below_high += 1.0;
            } else {
                below_low += 1.0;
            }
            i += 1;
        }
    }
    detection_fidelity(a, b, best.1)
}
