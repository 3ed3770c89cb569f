//! Parameter extraction from correlation histograms: reference-peak fits,
//! the five-parameter beat-model fit, per-bin visibility curves, and
//! temporal-filter scans.

use crate::correlator::{temporal_filter, CorrelationHistogram};
use crate::error::{Error, Result};
use crate::model::BeatModel;
use crate::records::DetectionRecord;
use crate::simplex;

/// Simplex convergence tolerance in scaled parameters.
const SIMPLEX_TOL: f64 = 1e-6;
/// Evaluation budget per fit.
const MAX_EVALS: usize = 10_000;
/// Minimum integral of the reference peak before fitting is meaningful.
const MIN_PEAK_COUNTS: f64 = 100.0;
/// Sub-samples per bin when averaging the model over the square time bin.
const BIN_SUBSAMPLES: usize = 16;

/// Gaussian fit of a reference (perpendicular) central peak.
#[derive(Debug, Clone)]
pub struct ReferenceFit {
    /// Peak counts per bin at τ = 0.
    pub amplitude: f64,
    /// Photon width: the fitted peak 1/e half-width divided by √2.
    pub tau_p: f64,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
}

/// Result of the five-parameter beat-model fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: BeatModel,
    pub chi2: f64,
    pub dof: usize,
    /// Approximate standard errors (amplitude, tau_p, delta, delta_omega,
    /// v0) from the χ² curvature along coordinate directions.
    pub param_errors: [f64; 5],
    pub converged: bool,
    pub evaluations: usize,
}

/// Model counts per bin: the beat law averaged over each square time bin,
/// matching histograms that are by construction bin convolutions.
pub fn beat_model_bins(params: &BeatModel, centers: &[f64], bin_width: f64) -> Vec<f64> {
    centers
        .iter()
        .map(|&c| {
            let mut acc = 0.0;
            for k in 0..BIN_SUBSAMPLES {
                let tau = c + ((k as f64 + 0.5) / BIN_SUBSAMPLES as f64 - 0.5) * bin_width;
                acc += beat_shape(params, tau);
            }
            params.amplitude * acc / BIN_SUBSAMPLES as f64
        })
        .collect()
}

/// Unit-amplitude parallel correlation shape.
fn beat_shape(p: &BeatModel, tau: f64) -> f64 {
    let gauss = (-tau * tau / (2.0 * p.tau_p * p.tau_p)).exp();
    let deph = (-(0.5 * p.delta_omega * tau).powi(2)).exp();
    gauss * (1.0 - p.v0 * deph * (p.delta * tau).cos())
}

fn gaussian_bins(amplitude: f64, tau_p: f64, centers: &[f64], bin_width: f64) -> Vec<f64> {
    centers
        .iter()
        .map(|&c| {
            let mut acc = 0.0;
            for k in 0..BIN_SUBSAMPLES {
                let tau = c + ((k as f64 + 0.5) / BIN_SUBSAMPLES as f64 - 0.5) * bin_width;
                acc += (-tau * tau / (2.0 * tau_p * tau_p)).exp();
            }
            amplitude * acc / BIN_SUBSAMPLES as f64
        })
        .collect()
}

/// Bins of the central-peak fit region: |τ| within twice the convolved
/// peak width, clear of the ±period side peaks.
fn fit_region(hist: &CorrelationHistogram, width_hint: f64) -> Vec<usize> {
    let half = (2.0 * std::f64::consts::SQRT_2 * width_hint)
        .max(4.0 * hist.bin_width)
        .min(0.45 * hist.period);
    hist.centers()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c.abs() <= half)
        .map(|(i, _)| i)
        .collect()
}

/// Moment-based width estimate of the central peak.
fn moment_width(hist: &CorrelationHistogram) -> f64 {
    let centers = hist.centers();
    let mut m0 = 0.0;
    let mut m2 = 0.0;
    for (i, &c) in centers.iter().enumerate() {
        if c.abs() <= 0.45 * hist.period {
            let v = hist.corrected[i].max(0.0);
            m0 += v;
            m2 += v * c * c;
        }
    }
    if m0 <= 0.0 {
        return hist.bin_width * 4.0;
    }
    // Second moment of the convolved Gaussian peak is tau_p².
    (m2 / m0).sqrt().max(hist.bin_width)
}

/// Weighted least-squares Gaussian fit of a reference central peak.
pub fn fit_reference(hist: &CorrelationHistogram) -> Result<ReferenceFit> {
    let width0 = moment_width(hist);
    let region = fit_region(hist, width0 / std::f64::consts::SQRT_2);
    let centers = hist.centers();
    let integral: f64 = region.iter().map(|&i| hist.corrected[i]).sum();
    if integral < MIN_PEAK_COUNTS {
        return Err(Error::InsufficientCounts {
            got: integral,
            need: MIN_PEAK_COUNTS,
        });
    }
    let region_centers: Vec<f64> = region.iter().map(|&i| centers[i]).collect();
    let data: Vec<f64> = region.iter().map(|&i| hist.corrected[i]).collect();
    let weights: Vec<f64> = region
        .iter()
        .map(|&i| 1.0 / (hist.counts[i] as f64).max(1.0))
        .collect();

    let a0 = data.iter().cloned().fold(f64::MIN, f64::max).max(1e-9);
    let t0 = width0;
    let objective = |x: &[f64]| -> f64 {
        let (a, tau_p) = (x[0], x[1]);
        if a <= 0.0 || tau_p <= 0.0 {
            return f64::INFINITY;
        }
        let model = gaussian_bins(a, tau_p, &region_centers, hist.bin_width);
        chi2_of(&data, &model, &weights)
    };
    let result = simplex::minimize_with_restarts(
        objective,
        &[a0, t0],
        &[0.2 * a0, 0.15 * t0],
        &[a0, t0],
        SIMPLEX_TOL,
        MAX_EVALS,
        3,
    );
    let dof = region.len().saturating_sub(2);
    Ok(ReferenceFit {
        amplitude: result.x[0],
        tau_p: result.x[1].abs(),
        chi2: result.value,
        dof,
        converged: result.converged,
    })
}

fn chi2_of(data: &[f64], model: &[f64], weights: &[f64]) -> f64 {
    data.iter()
        .zip(model.iter())
        .zip(weights.iter())
        .map(|((d, m), w)| (d - m) * (d - m) * w)
        .sum()
}

/// Initial beat frequency from the discrete-Fourier peak of the
/// interference ratio over the central region.
fn init_delta(ratio: &[f64], centers: &[f64], bin_width: f64) -> f64 {
    let omega_max = std::f64::consts::PI / bin_width;
    let mut best = (0.0, f64::MIN);
    let n_freq = 400;
    for m in 0..=n_freq {
        let omega = omega_max * m as f64 / n_freq as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (&r, &t) in ratio.iter().zip(centers.iter()) {
            re += r * (omega * t).cos();
            im += r * (omega * t).sin();
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (omega, power);
        }
    }
    best.0
}

/// Fit the five-parameter beat model to a parallel-polarization histogram
/// against a perpendicular reference on the same bin grid.
///
/// Both runs are integrated to the same side-peak target, so they share one
/// envelope: the χ² is minimized jointly over the parallel data (beat
/// model) and the reference data (Gaussian with the same amplitude and
/// width). A parallel-only fit is degenerate at realistic statistics — a
/// wide, low envelope times a half-period beat mimics the coherence dip —
/// and the shared-envelope term removes that basin.
pub fn fit_beat(
    hist_parallel: &CorrelationHistogram,
    hist_reference: &CorrelationHistogram,
) -> Result<FitResult> {
    fit_beat_impl(hist_parallel, hist_reference, None)
}

fn fit_beat_impl(
    hist_parallel: &CorrelationHistogram,
    hist_reference: &CorrelationHistogram,
    start_override: Option<[f64; 5]>,
) -> Result<FitResult> {
    if hist_parallel.bin_width != hist_reference.bin_width
        || hist_parallel.k_max != hist_reference.k_max
    {
        return Err(Error::GridMismatch(format!(
            "parallel ({} bins of {} ns) vs reference ({} bins of {} ns)",
            hist_parallel.n_bins(),
            hist_parallel.bin_width,
            hist_reference.n_bins(),
            hist_reference.bin_width
        )));
    }
    let reference = fit_reference(hist_reference)?;
    let region = fit_region(hist_parallel, reference.tau_p);
    let populated = region
        .iter()
        .filter(|&&i| hist_parallel.counts[i] > 0)
        .count();
    if populated < 5 {
        return Err(Error::DegenerateInput(format!(
            "only {populated} populated bins in the central region"
        )));
    }

    let centers = hist_parallel.centers();
    let region_centers: Vec<f64> = region.iter().map(|&i| centers[i]).collect();
    let data: Vec<f64> = region.iter().map(|&i| hist_parallel.corrected[i]).collect();
    let weights: Vec<f64> = region
        .iter()
        .map(|&i| 1.0 / (hist_parallel.counts[i] as f64).max(1.0))
        .collect();
    let data_ref: Vec<f64> = region
        .iter()
        .map(|&i| hist_reference.corrected[i])
        .collect();
    let weights_ref: Vec<f64> = region
        .iter()
        .map(|&i| 1.0 / (hist_reference.counts[i] as f64).max(1.0))
        .collect();

    // Interference ratio 1 − parallel/reference per bin for initialization.
    let ref_model = gaussian_bins(
        reference.amplitude,
        reference.tau_p,
        &region_centers,
        hist_parallel.bin_width,
    );
    let ratio: Vec<f64> = data
        .iter()
        .zip(ref_model.iter())
        .map(|(&p, &r)| 1.0 - p / r.max(1.0))
        .collect();

    let delta0 = init_delta(&ratio, &region_centers, hist_parallel.bin_width);
    let zero_idx = region_centers
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    let v0_init = ratio[zero_idx].clamp(0.05, 0.98);

    let objective = |x: &[f64]| -> f64 {
        let (a, tau_p, delta, delta_omega, v0) = (x[0], x[1], x[2], x[3], x[4]);
        if a <= 0.0 || tau_p <= hist_parallel.bin_width / 4.0 || !(0.0..=1.0).contains(&v0) {
            return f64::INFINITY;
        }
        let trial = BeatModel {
            amplitude: a,
            tau_p,
            delta,
            delta_omega,
            v0,
        };
        let model = beat_model_bins(&trial, &region_centers, hist_parallel.bin_width);
        let model_ref = gaussian_bins(a, tau_p, &region_centers, hist_parallel.bin_width);
        chi2_of(&data, &model, &weights) + chi2_of(&data_ref, &model_ref, &weights_ref)
    };

    // Dephasing-width start: reading the 1/e point of the noisy ratio off
    // the data is fragile, so pick the best δω from a log-spaced candidate
    // set (plus zero) under the full objective, the other starts fixed.
    let base = 2.0 / reference.tau_p;
    let delta_omega0 = std::iter::once(0.0)
        .chain((-8..=4).map(|k| base * 2.0_f64.powf(k as f64 * 0.5)))
        .min_by(|&a, &b| {
            let fa = objective(&[reference.amplitude, reference.tau_p, delta0, a, v0_init]);
            let fb = objective(&[reference.amplitude, reference.tau_p, delta0, b, v0_init]);
            fa.total_cmp(&fb)
        })
        .unwrap();

    let x0 = start_override.unwrap_or([
        reference.amplitude,
        reference.tau_p,
        delta0,
        delta_omega0,
        v0_init,
    ]);
    let steps = [
        0.2 * reference.amplitude,
        0.15 * reference.tau_p,
        (0.15 * delta0).max(2.0 * std::f64::consts::PI * 0.15e-3),
        (0.3 * delta_omega0).max(2.0 * std::f64::consts::PI * 0.05e-3),
        0.15,
    ];
    let scales = [
        reference.amplitude,
        reference.tau_p,
        std::f64::consts::PI / hist_parallel.bin_width,
        delta_omega0.max(1e-4),
        1.0,
    ];
    let result =
        simplex::minimize_with_restarts(&objective, &x0, &steps, &scales, SIMPLEX_TOL, MAX_EVALS, 4);

    // The shape is even in both frequencies; report them non-negative.
    let params = BeatModel::new(
        result.x[0],
        result.x[1].abs(),
        result.x[2].abs(),
        result.x[3].abs(),
        result.x[4].clamp(0.0, 1.0),
    )?;
    let dof = (2 * region.len()).saturating_sub(5);
    if dof == 0 {
        return Err(Error::DegenerateInput(
            "fewer bins than free parameters".into(),
        ));
    }

    // Curvature-based errors: Δχ² = 1 along each coordinate.
    let mut param_errors = [f64::INFINITY; 5];
    let f0 = result.value;
    for j in 0..5 {
        let h = 0.05 * steps[j];
        let mut plus = result.x.clone();
        plus[j] += h;
        let mut minus = result.x.clone();
        minus[j] -= h;
        let curvature = (objective(&plus) - 2.0 * f0 + objective(&minus)) / (h * h);
        if curvature > 0.0 && curvature.is_finite() {
            param_errors[j] = (2.0 / curvature).sqrt();
        }
    }

    Ok(FitResult {
        params,
        chi2: f0,
        dof,
        param_errors,
        converged: result.converged,
        evaluations: result.evaluations,
    })
}

/// Per-bin interference visibility with propagated Poisson errors.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityPoint {
    pub tau: f64,
    /// `(visibility, standard error)`; None where the reference bin holds
    /// fewer than 5 counts.
    pub estimate: Option<(f64, f64)>,
}

/// `(reference − parallel)/reference` per bin; the τ = 0 bin estimates v₀.
pub fn visibility_curve(
    hist_parallel: &CorrelationHistogram,
    hist_reference: &CorrelationHistogram,
) -> Result<Vec<VisibilityPoint>> {
    if hist_parallel.bin_width != hist_reference.bin_width
        || hist_parallel.k_max != hist_reference.k_max
    {
        return Err(Error::GridMismatch("visibility curve inputs".into()));
    }
    let centers = hist_parallel.centers();
    Ok((0..hist_parallel.n_bins())
        .map(|i| {
            let tau = centers[i];
            if hist_reference.counts[i] < 5 {
                return VisibilityPoint {
                    tau,
                    estimate: None,
                };
            }
            let p = hist_parallel.corrected[i];
            let r = hist_reference.corrected[i];
            let value = 1.0 - p / r;
            let sp = (hist_parallel.counts[i] as f64).max(1.0).sqrt();
            let sr = (hist_reference.counts[i] as f64).max(1.0).sqrt();
            let sigma = ((sp / r).powi(2) + (p * sr / (r * r)).powi(2)).sqrt();
            VisibilityPoint {
                tau,
                estimate: Some((value, sigma)),
            }
        })
        .collect())
}

/// One row of a temporal-filter scan.
#[derive(Debug, Clone, Copy)]
pub struct FilterScanRow {
    pub window: f64,
    /// `1 − retained_parallel/retained_reference`; None when the window
    /// retains no reference coincidences.
    pub visibility: Option<f64>,
    /// Fraction of the reference run's central coincidences retained.
    pub acceptance: f64,
    pub retained_parallel: usize,
    pub retained_reference: usize,
}

/// Temporal-filter scan over ascending windows. Both record sets must have
/// been integrated to the same side-peak target so raw retained counts are
/// directly comparable.
pub fn filter_scan(
    records_parallel: &[DetectionRecord],
    records_reference: &[DetectionRecord],
    windows: &[f64],
    max_tau: f64,
) -> Result<Vec<FilterScanRow>> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter("no filter windows given".into()));
    }
    for pair in windows.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidParameter(
                "filter windows must be strictly ascending".into(),
            ));
        }
    }
    windows
        .iter()
        .map(|&w| {
            let par = temporal_filter(records_parallel, w, max_tau)?;
            let reference = temporal_filter(records_reference, w, max_tau)?;
            let visibility = (reference.retained > 0)
                .then(|| 1.0 - par.retained as f64 / reference.retained as f64);
            Ok(FilterScanRow {
                window: w,
                visibility,
                acceptance: reference.acceptance_fraction,
                retained_parallel: par.retained,
                retained_reference: reference.retained,
            })
        })
        .collect()
}
