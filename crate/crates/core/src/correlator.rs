//! Coincidence histograms from time-tagged records, the gated-dark-count
//! background model, and temporal-filter post-selection.
//!
//! The signed time difference is τ = t_D − t_C, and every ordered
//! cross-detector pair within the correlation window is counted
//! (multi-stop), not only nearest neighbors.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::config::{ExperimentConfig, RunMode};
use crate::error::{Error, Result};
use crate::records::{DetectionRecord, Detector};

pub const HISTOGRAM_HEADER: &str = "#photon-beat-histogram v1";

/// Binned coincidence counts versus detection-time difference.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationHistogram {
    pub bin_width: f64,
    /// Pulse period carried as metadata for peak bookkeeping.
    pub period: f64,
    pub n_records: u64,
    /// Bins sit at centers k·bin_width for k in −k_max..=k_max.
    pub k_max: i64,
    pub counts: Vec<u64>,
    pub background: Vec<f64>,
    pub corrected: Vec<f64>,
}

/// Number of bins on each side needed to cover `max_tau`.
fn half_bins(bin_width: f64, max_tau: f64) -> i64 {
    ((max_tau / bin_width - 0.5).ceil() as i64).max(0)
}

impl CorrelationHistogram {
    pub fn n_bins(&self) -> usize {
        (2 * self.k_max + 1) as usize
    }

    pub fn centers(&self) -> Vec<f64> {
        (-self.k_max..=self.k_max)
            .map(|k| k as f64 * self.bin_width)
            .collect()
    }

    pub fn index_of(&self, k: i64) -> usize {
        (k + self.k_max) as usize
    }

    /// Bin index holding time difference `tau`, if in range.
    pub fn bin_for(&self, tau: f64) -> Option<usize> {
        let k = (tau / self.bin_width).round() as i64;
        (k.abs() <= self.k_max).then(|| self.index_of(k))
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sum of corrected counts over bins whose |τ| rounds to `k_period`
    /// periods.
    pub fn peak_integral(&self, k_period: i64) -> f64 {
        self.centers()
            .iter()
            .zip(self.corrected.iter())
            .filter(|(&c, _)| (c.abs() / self.period).round() as i64 == k_period)
            .map(|(_, &v)| v)
            .sum()
    }

    /// Replace the background model; corrected = counts − background.
    pub fn with_background(mut self, background: Vec<f64>) -> Result<Self> {
        if background.len() != self.counts.len() {
            return Err(Error::GridMismatch(format!(
                "background has {} bins, histogram {}",
                background.len(),
                self.counts.len()
            )));
        }
        self.corrected = self
            .counts
            .iter()
            .zip(background.iter())
            .map(|(&c, &b)| c as f64 - b)
            .collect();
        self.background = background;
        Ok(self)
    }
}

/// Histogram all ordered cross-detector pairs with |t_D − t_C| ≤ `max_tau`.
pub fn correlate(
    records: &[DetectionRecord],
    bin_width: f64,
    max_tau: f64,
    period: f64,
) -> Result<CorrelationHistogram> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bin_width must be positive, got {bin_width}"
        )));
    }
    if !(max_tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max_tau must be positive, got {max_tau}"
        )));
    }
    for (i, pair) in records.windows(2).enumerate() {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(Error::UnsortedRecords(i + 1));
        }
    }
    let k_max = half_bins(bin_width, max_tau);
    let mut counts = vec![0u64; (2 * k_max + 1) as usize];

    let c_times: Vec<f64> = records
        .iter()
        .filter(|r| r.detector == Detector::C)
        .map(|r| r.timestamp)
        .collect();
    let d_times: Vec<f64> = records
        .iter()
        .filter(|r| r.detector == Detector::D)
        .map(|r| r.timestamp)
        .collect();

    let mut lo = 0usize;
    for &tc in &c_times {
        while lo < d_times.len() && d_times[lo] < tc - max_tau {
            lo += 1;
        }
        for &td in &d_times[lo..] {
            if td > tc + max_tau {
                break;
            }
            let k = ((td - tc) / bin_width).round() as i64;
            if k.abs() <= k_max {
                counts[(k + k_max) as usize] += 1;
            }
        }
    }

    let corrected = counts.iter().map(|&c| c as f64).collect();
    Ok(CorrelationHistogram {
        bin_width,
        period,
        n_records: records.len() as u64,
        k_max,
        counts,
        background: vec![0.0; (2 * k_max + 1) as usize],
        corrected,
    })
}

/// Expected accidental counts per bin: dark×dark plus dark×photon pairs
/// from the periodic gate structure, for a run of `n_trains` trains.
///
/// Computed by tiling the single-train intensity profiles of both record
/// classes over train offsets and cross-correlating on a fine grid; the
/// photon×photon channel is the signal and is excluded.
pub fn background_estimate(
    cfg: &ExperimentConfig,
    n_trains: u64,
    bin_width: f64,
    max_tau: f64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let parts = background_parts(cfg, n_trains, bin_width, max_tau)?;
    let e_dark = 1.0 - (-cfg.dark_rate * cfg.gate_open).exp();
    Ok(parts.combine(e_dark))
}

/// Dark rate (counts/ns in gate) that makes the expected background
/// maxima average `target_per_bin` counts per bin for a run of `n_trains`.
pub fn calibrate_dark_rate(
    cfg: &ExperimentConfig,
    n_trains: u64,
    bin_width: f64,
    max_tau: f64,
    target_per_bin: f64,
) -> Result<f64> {
    let parts = background_parts(cfg, n_trains, bin_width, max_tau)?;
    let peaks = peak_bin_indices(bin_width, max_tau, cfg.period);
    if peaks.is_empty() {
        return Err(Error::InvalidParameter(
            "histogram extent holds no background maxima".into(),
        ));
    }
    let avg = |v: &[f64]| peaks.iter().map(|&i| v[i]).sum::<f64>() / peaks.len() as f64;
    // Peak average is quadratic in the per-gate dark occupancy e:
    // dd·e² + dp·e = target.
    let a = avg(&parts.dark_dark);
    let b = avg(&parts.dark_photon);
    if a <= 0.0 {
        return Err(Error::NumericalFailure(
            "dark-dark background has no support at the maxima".into(),
        ));
    }
    let disc = b * b + 4.0 * a * target_per_bin;
    let e = (-b + disc.sqrt()) / (2.0 * a);
    if !(0.0..1.0).contains(&e) {
        return Err(Error::NumericalFailure(format!(
            "calibration needs per-gate dark occupancy {e:.3}, outside [0, 1)"
        )));
    }
    // Invert the at-most-one-count-per-gate truncation: e = 1 − exp(−ρ·gate).
    Ok(-(1.0 - e).ln() / cfg.gate_open)
}

/// Bin indices of the background maxima (τ ≈ k·period) inside the extent.
pub fn peak_bin_indices(bin_width: f64, max_tau: f64, period: f64) -> Vec<usize> {
    let k_max = half_bins(bin_width, max_tau);
    let mut out = Vec::new();
    let mut j = -((max_tau / period).floor() as i64);
    while j as f64 * period <= max_tau {
        let k = ((j as f64 * period) / bin_width).round() as i64;
        if k.abs() <= k_max {
            let idx = (k + k_max) as usize;
            if out.last() != Some(&idx) {
                out.push(idx);
            }
        }
        j += 1;
    }
    out
}

struct BackgroundParts {
    /// Per-bin coefficient of e² (dark-dark pairs at unit gate occupancy).
    dark_dark: Vec<f64>,
    /// Per-bin coefficient of e (dark-photon + photon-dark pairs).
    dark_photon: Vec<f64>,
}

impl BackgroundParts {
    fn combine(&self, e_dark: f64) -> Vec<f64> {
        self.dark_dark
            .iter()
            .zip(self.dark_photon.iter())
            .map(|(&dd, &dp)| dd * e_dark * e_dark + dp * e_dark)
            .collect()
    }
}

fn background_parts(
    cfg: &ExperimentConfig,
    n_trains: u64,
    bin_width: f64,
    max_tau: f64,
) -> Result<BackgroundParts> {
    if !(bin_width > 0.0) || !(max_tau > 0.0) {
        return Err(Error::InvalidParameter(
            "bin_width and max_tau must be positive".into(),
        ));
    }
    // Fine grid over one train.
    let df = (bin_width / 12.0).min(4.0);
    let stride_cells = (cfg.train_stride() / df).ceil() as usize;
    let n = cfg.photons_per_train;

    // Per-detector dark profile at unit per-gate occupancy: density 1/gate
    // inside each gate.
    let mut dark = vec![0.0; stride_cells];
    // Per-detector photon profile: expected detections per ns.
    let mut photon = vec![0.0; stride_cells];
    let sigma = cfg.tau_p / std::f64::consts::SQRT_2;
    for slot in 0..=n {
        let center = cfg.slot_center(slot);
        let (p_a, p_b) = slot_occupancy(cfg, slot);
        let photon_rate = 0.5 * (p_a * cfg.eta_a + p_b * cfg.eta_b);
        let lo = ((center - 0.5 * cfg.gate_open) / df).floor() as usize;
        let hi = (((center + 0.5 * cfg.gate_open) / df).ceil() as usize).min(stride_cells);
        for i in lo..hi {
            let t = (i as f64 + 0.5) * df;
            if (t - center).abs() <= 0.5 * cfg.gate_open {
                dark[i] += 1.0 / cfg.gate_open;
                let u = (t - center) / sigma;
                photon[i] += photon_rate * (-0.5 * u * u).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            }
        }
    }

    let k_max = half_bins(bin_width, max_tau);
    let n_bins = (2 * k_max + 1) as usize;
    let mut dark_dark = vec![0.0; n_bins];
    let mut dark_photon = vec![0.0; n_bins];

    let max_lag_cells = (max_tau / df).ceil() as i64 + 1;
    let stride_lag = cfg.train_stride() / df;
    for lag in -max_lag_cells..=max_lag_cells {
        let tau = lag as f64 * df;
        // Train pairs at offset j contribute the single-train correlation
        // at lag − j·stride, weighted by how many such pairs the run holds.
        let j_lo = ((lag as f64 - stride_cells as f64) / stride_lag).floor() as i64;
        let j_hi = ((lag as f64 + stride_cells as f64) / stride_lag).ceil() as i64;
        let mut dd = 0.0;
        let mut dp = 0.0;
        for j in j_lo..=j_hi {
            let pairs = n_trains.saturating_sub(j.unsigned_abs());
            if pairs == 0 {
                continue;
            }
            let inner = lag - (j as f64 * stride_lag).round() as i64;
            let w = pairs as f64;
            dd += w * xcorr_at(&dark, &dark, inner);
            dp += w * (xcorr_at(&dark, &photon, inner) + xcorr_at(&photon, &dark, inner));
        }
        if dd == 0.0 && dp == 0.0 {
            continue;
        }
        // Spread this lag's τ-cell over the bins it overlaps, clipped to
        // the |τ| ≤ max_tau acceptance used when correlating records.
        let cell_lo = (tau - 0.5 * df).max(-max_tau);
        let cell_hi = (tau + 0.5 * df).min(max_tau);
        if cell_hi <= cell_lo {
            continue;
        }
        let k_from = ((cell_lo / bin_width) + 0.5).floor() as i64;
        let k_to = ((cell_hi / bin_width) - 0.5).ceil() as i64;
        for k in k_from..=k_to {
            if k.abs() > k_max {
                continue;
            }
            let bin_lo = (k as f64 - 0.5) * bin_width;
            let bin_hi = (k as f64 + 0.5) * bin_width;
            let overlap = (cell_hi.min(bin_hi) - cell_lo.max(bin_lo)).max(0.0);
            if overlap > 0.0 {
                let idx = (k + k_max) as usize;
                dark_dark[idx] += dd * df * overlap;
                dark_photon[idx] += dp * df * overlap;
            }
        }
    }

    Ok(BackgroundParts {
        dark_dark,
        dark_photon,
    })
}

/// Probability that an A-path / B-path photon occupies arrival slot `slot`.
fn slot_occupancy(cfg: &ExperimentConfig, slot: u32) -> (f64, f64) {
    let n = cfg.photons_per_train;
    match cfg.mode {
        RunMode::SinglePath => {
            let p_b = if slot < n { cfg.emission_prob } else { 0.0 };
            (0.0, p_b)
        }
        _ => {
            let p_a = if slot >= 1 { cfg.emission_prob / 2.0 } else { 0.0 };
            let p_b = if slot < n { cfg.emission_prob / 2.0 } else { 0.0 };
            (p_a, p_b)
        }
    }
}

fn xcorr_at(a: &[f64], b: &[f64], lag: i64) -> f64 {
    let n = a.len() as i64;
    let start = 0.max(-lag);
    let end = n.min(n - lag);
    if start >= end {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in start..end {
        acc += a[i as usize] * b[(i + lag) as usize];
    }
    acc
}

/// corrected = counts − background; raw counts preserved, negative
/// corrected values retained.
pub fn subtract_background(
    hist: &CorrelationHistogram,
    background: &[f64],
) -> Result<CorrelationHistogram> {
    hist.clone().with_background(background.to_vec())
}

/// Flat background from the mean of bins far from every correlation peak,
/// for ingested data with no known gate/dark model.
pub fn background_from_data(hist: &CorrelationHistogram) -> Vec<f64> {
    let far: Vec<f64> = hist
        .centers()
        .iter()
        .zip(hist.counts.iter())
        .filter(|(&c, _)| {
            let nearest = (c / hist.period).round() * hist.period;
            (c - nearest).abs() > hist.period / 4.0
        })
        .map(|(_, &v)| v as f64)
        .collect();
    let level = if far.is_empty() {
        0.0
    } else {
        far.iter().sum::<f64>() / far.len() as f64
    };
    vec![level; hist.n_bins()]
}

/// Result of temporal-filter post-selection.
#[derive(Debug, Clone)]
pub struct FilteredPairs {
    /// Signed τ of every retained cross-detector pair.
    pub taus: Vec<f64>,
    pub retained: usize,
    /// All cross-detector pairs with |τ| ≤ max_tau considered.
    pub total: usize,
    pub acceptance_fraction: f64,
}

/// Keep only cross-detector pairs with |t_D − t_C| < `window`, out of all
/// pairs with |τ| ≤ `max_tau`.
pub fn temporal_filter(
    records: &[DetectionRecord],
    window: f64,
    max_tau: f64,
) -> Result<FilteredPairs> {
    if !(window > 0.0) {
        return Err(Error::InvalidWindow(window));
    }
    let c_times: Vec<f64> = records
        .iter()
        .filter(|r| r.detector == Detector::C)
        .map(|r| r.timestamp)
        .collect();
    let d_times: Vec<f64> = records
        .iter()
        .filter(|r| r.detector == Detector::D)
        .map(|r| r.timestamp)
        .collect();
    let mut taus = Vec::new();
    let mut total = 0usize;
    let mut lo = 0usize;
    for &tc in &c_times {
        while lo < d_times.len() && d_times[lo] < tc - max_tau {
            lo += 1;
        }
        for &td in &d_times[lo..] {
            if td > tc + max_tau {
                break;
            }
            total += 1;
            let tau = td - tc;
            if tau.abs() < window {
                taus.push(tau);
            }
        }
    }
    let retained = taus.len();
    Ok(FilteredPairs {
        taus,
        retained,
        total,
        acceptance_fraction: if total == 0 {
            0.0
        } else {
            retained as f64 / total as f64
        },
    })
}

/// Write a histogram as metadata lines plus
/// `tau_ns<TAB>counts<TAB>background<TAB>corrected` rows.
pub fn write_histogram<W: Write>(mut w: W, hist: &CorrelationHistogram) -> Result<()> {
    let io = |e| Error::io("writing histogram", e);
    writeln!(w, "{HISTOGRAM_HEADER}").map_err(io)?;
    writeln!(w, "# bin_width_ns: {}", hist.bin_width).map_err(io)?;
    writeln!(w, "# period_ns: {}", hist.period).map_err(io)?;
    writeln!(w, "# n_records: {}", hist.n_records).map_err(io)?;
    writeln!(w, "# k_max: {}", hist.k_max).map_err(io)?;
    writeln!(w, "# columns: tau_ns\tcounts\tbackground\tcorrected").map_err(io)?;
    for (i, center) in hist.centers().iter().enumerate() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            center, hist.counts[i], hist.background[i], hist.corrected[i]
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn read_histogram<R: BufRead>(r: R, path: &Path) -> Result<CorrelationHistogram> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty histogram file".into()))?;
    let first = first.map_err(|e| Error::io("reading histogram", e))?;
    if first.trim_end() != HISTOGRAM_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `{HISTOGRAM_HEADER}`, got `{first}`"),
        ));
    }
    let mut bin_width = None;
    let mut period = None;
    let mut n_records = None;
    let mut k_max = None;
    let mut rows: Vec<(u64, f64, f64)> = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io("reading histogram", e))?;
        let t = line.trim_end();
        if t.is_empty() {
            continue;
        }
        if let Some(meta) = t.strip_prefix('#') {
            if let Some((key, value)) = meta.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "bin_width_ns" => bin_width = value.parse().ok(),
                    "period_ns" => period = value.parse().ok(),
                    "n_records" => n_records = value.parse().ok(),
                    "k_max" => k_max = value.parse().ok(),
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = t.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                lineno + 1,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let counts: u64 = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno + 1, "bad counts".into()))?;
        let background: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno + 1, "bad background".into()))?;
        let corrected: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(lineno + 1, "bad corrected".into()))?;
        rows.push((counts, background, corrected));
    }
    let bin_width = bin_width.ok_or_else(|| parse_err(0, "missing bin_width_ns".into()))?;
    let period = period.ok_or_else(|| parse_err(0, "missing period_ns".into()))?;
    let n_records = n_records.ok_or_else(|| parse_err(0, "missing n_records".into()))?;
    let k_max: i64 = k_max.ok_or_else(|| parse_err(0, "missing k_max".into()))?;
    if rows.len() as i64 != 2 * k_max + 1 {
        return Err(parse_err(
            0,
            format!("expected {} rows, got {}", 2 * k_max + 1, rows.len()),
        ));
    }
    Ok(CorrelationHistogram {
        bin_width,
        period,
        n_records,
        k_max,
        counts: rows.iter().map(|r| r.0).collect(),
        background: rows.iter().map(|r| r.1).collect(),
        corrected: rows.iter().map(|r| r.2).collect(),
    })
}

pub fn read_histogram_file(path: &Path) -> Result<CorrelationHistogram> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening histogram {}", path.display()), e))?;
    read_histogram(std::io::BufReader::new(f), path)
}

pub fn write_histogram_file(path: &Path, hist: &CorrelationHistogram) -> Result<()> {
    let f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating histogram {}", path.display()), e))?;
    write_histogram(std::io::BufWriter::new(f), hist)
}
