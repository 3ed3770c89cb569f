//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the measured values. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria too).

use std::f64::consts::PI;
use std::time::Instant;

use photon_beat::analysis::{filter_scan, fit_beat, fit_reference, visibility_curve};
use photon_beat::cli::oracle_deviation;
use photon_beat::config::{khz_to_rad_ns, mhz_to_rad_ns, rad_ns_to_khz, rad_ns_to_mhz};
use photon_beat::correlator::{
    background_estimate, calibrate_dark_rate, correlate, peak_bin_indices, CorrelationHistogram,
};
use photon_beat::model::{coherent_baseline, filtered_visibility, BeatModel, Wavepacket};
use photon_beat::montecarlo::{run, run_trains, RunOutput};
use photon_beat::{ExperimentConfig, RunMode};

const BIN: f64 = 48.0;
const PERIOD: f64 = 5300.0;

fn report(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:02} [{}]: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn base_config(mode: RunMode, seed: u64, target: u64) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        seed,
        target_side_peak: target,
        photons_per_train: 8,
        emission_prob: 1.0,
        dark_rate: 0.0,
        v0: 1.0,
        ..ExperimentConfig::default()
    }
}

fn histogram(out: &RunOutput, max_tau: f64) -> CorrelationHistogram {
    correlate(&out.records, BIN, max_tau, PERIOD).expect("correlate")
}

/// Expected central and one-sign side-peak pair rates per train, by direct
/// expectation over the emission/routing states. Independent of the
/// simulator's code path.
fn expected_peak_rates(cfg: &ExperimentConfig) -> (f64, f64) {
    let n = cfg.photons_per_train as i64;
    let p = cfg.emission_prob;
    let single = cfg.mode == RunMode::SinglePath;
    let state_probs = |slot: i64| -> [f64; 3] {
        if slot < 0 || slot >= n {
            [1.0, 0.0, 0.0]
        } else if single {
            [1.0 - p, 0.0, p]
        } else {
            [1.0 - p, p / 2.0, p / 2.0]
        }
    };
    let mut central = 0.0;
    if !single {
        for m in 1..n {
            central += state_probs(m - 1)[1] * state_probs(m)[2] * 0.5 * cfg.eta_a * cfg.eta_b;
        }
    }
    let mut side = 0.0;
    for m in 0..n {
        for s0 in 0..3 {
            for s1 in 0..3 {
                for s2 in 0..3 {
                    let w =
                        state_probs(m - 1)[s0] * state_probs(m)[s1] * state_probs(m + 1)[s2];
                    if w == 0.0 {
                        continue;
                    }
                    let a1 = if s0 == 1 { 1.0 } else { 0.0 };
                    let b1 = if s1 == 2 { 1.0 } else { 0.0 };
                    let a2 = if s1 == 1 { 1.0 } else { 0.0 };
                    let b2 = if s2 == 2 { 1.0 } else { 0.0 };
                    let click_c = 0.5 * (a1 * cfg.eta_a + b1 * cfg.eta_b);
                    let click_d = 0.5 * (a2 * cfg.eta_a + b2 * cfg.eta_b);
                    side += w * click_c * click_d;
                }
            }
        }
    }
    (central, side)
}

#[test]
fn criterion_01_oracle_equivalence() {
    let start = Instant::now();
    let max_dev = oracle_deviation(32).expect("oracle comparison");
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        max_dev < 1e-9 && elapsed < 1.0,
        &format!("joint density vs exact verifier on 32 bins: max |Δp| = {max_dev:.3e} (< 1e-9), {elapsed:.2} s"),
    );
}

#[test]
fn criterion_02_reference_peak_width() {
    let start = Instant::now();
    let cfg = base_config(RunMode::TwoPathPerpendicular, 21, 20_000);
    let out = run(&cfg).expect("simulation");
    let hist = histogram(&out, PERIOD / 2.0);
    let fit = fit_reference(&hist).expect("reference fit");
    let width = fit.tau_p * std::f64::consts::SQRT_2;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = out.side_peak_pairs >= 980
        && fit.converged
        && (width - 636.4).abs() / 636.4 < 0.03
        && elapsed < 30.0;
    report(
        2,
        pass,
        &format!(
            "{} side pairs (>= 980); fitted 1/e half-width {width:.1} ns (636 ± 3%), {elapsed:.1} s",
            out.side_peak_pairs
        ),
    );
}

#[test]
fn criterion_03_coherence_dip_width() {
    let start = Instant::now();
    let mut cfg = base_config(RunMode::TwoPathParallel, 31, 100_000);
    cfg.delta = 0.0;
    let out_par = run(&cfg).expect("parallel run");
    let out_ref =
        run(&base_config(RunMode::TwoPathPerpendicular, 32, 100_000)).expect("reference");
    let fit = fit_beat(
        &histogram(&out_par, PERIOD / 2.0),
        &histogram(&out_ref, PERIOD / 2.0),
    )
    .expect("dip fit");
    let dip_width = 2.0 / fit.params.delta_omega;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (dip_width - 461.3).abs() / 461.3 < 0.05 && elapsed < 30.0;
    report(
        3,
        pass,
        &format!(
            "fitted dip 1/e half-width {dip_width:.1} ns (461 ± 5%); Δ = {:.4} MHz, v0 = {:.3}, χ²/dof = {:.2}, {elapsed:.1} s",
            rad_ns_to_mhz(fit.params.delta),
            fit.params.v0,
            fit.chi2 / fit.dof as f64
        ),
    );
}

#[test]
fn criterion_04_quantum_beat() {
    let start = Instant::now();
    let cfg = base_config(RunMode::TwoPathParallel, 41, 50_000);
    let out_par = run(&cfg).expect("parallel run");
    let out_ref = run(&base_config(RunMode::TwoPathPerpendicular, 42, 50_000)).expect("reference");
    let par = histogram(&out_par, PERIOD / 2.0);
    let reference = histogram(&out_ref, PERIOD / 2.0);
    let centers = par.centers();

    // First correlation maxima on each side of zero, searched up to the
    // first beat minimum beyond them.
    let search = |sign: f64| -> f64 {
        centers
            .iter()
            .enumerate()
            .filter(|(_, &c)| c * sign > 0.0 && c.abs() < 2.2 * PI / cfg.delta)
            .max_by(|a, b| par.corrected[a.0].total_cmp(&par.corrected[b.0]))
            .map(|(_, &c)| c)
            .unwrap()
    };
    let tau_plus = search(1.0);
    let tau_minus = search(-1.0);
    let expected_tau = PI / cfg.delta;
    let in_one_bin =
        (tau_plus - expected_tau).abs() <= BIN && (-tau_minus - expected_tau).abs() <= BIN;

    // Parallel-to-reference ratio summed over both maxima bins.
    let sum_at = |hist: &CorrelationHistogram, taus: [f64; 2]| -> f64 {
        taus.iter()
            .map(|&t| hist.corrected[hist.bin_for(t).unwrap()])
            .sum()
    };
    let ratio = sum_at(&par, [tau_plus, tau_minus]) / sum_at(&reference, [tau_plus, tau_minus]);

    // The tau = 0 bin sits at (1 - v0) of the reference up to the square
    // time-bin convolution of the beat.
    let zero_ratio = par.corrected[par.bin_for(0.0).unwrap()]
        / reference.corrected[reference.bin_for(0.0).unwrap()];
    let zero_ok = (zero_ratio - (1.0 - cfg.v0)).abs() < 0.06;

    let elapsed = start.elapsed().as_secs_f64();
    let pass = in_one_bin && (ratio - 1.88).abs() < 0.15 && zero_ok && elapsed < 30.0;
    report(
        4,
        pass,
        &format!(
            "maxima at {tau_plus:.0}/{tau_minus:.0} ns (|τ| = 167 ± 48); max/reference ratio {ratio:.3} (1.88 ± 0.15); τ=0 ratio {zero_ratio:.3} vs 1−v0 = {:.3}; {elapsed:.1} s",
            1.0 - cfg.v0
        ),
    );
}

#[test]
fn criterion_05_visibility() {
    // Part 1: v0 = 0.92, extracted τ=0 visibility above 0.90.
    let mut cfg = base_config(RunMode::TwoPathParallel, 51, 150_000);
    cfg.delta = 0.0;
    cfg.v0 = 0.92;
    let out_par = run(&cfg).expect("parallel run");
    let out_ref =
        run(&base_config(RunMode::TwoPathPerpendicular, 52, 150_000)).expect("reference");
    let par = histogram(&out_par, PERIOD / 2.0);
    let reference = histogram(&out_ref, PERIOD / 2.0);
    let curve = visibility_curve(&par, &reference).expect("visibility curve");
    let (v_zero, sigma) = curve
        .iter()
        .find(|p| p.tau == 0.0)
        .and_then(|p| p.estimate)
        .expect("defined at zero");

    // Part 2: v0 = 1, no dephasing: full fringe contrast of the beat.
    let mut cfg2 = base_config(RunMode::TwoPathParallel, 53, 50_000);
    cfg2.delta_omega = 0.0;
    let out_par2 = run(&cfg2).expect("beat run");
    let out_ref2 =
        run(&base_config(RunMode::TwoPathPerpendicular, 54, 50_000)).expect("reference");
    let fit = fit_beat(
        &histogram(&out_par2, PERIOD / 2.0),
        &histogram(&out_ref2, PERIOD / 2.0),
    )
    .expect("beat fit");
    // With no dephasing the fringe visibility of 1 − v0·cos(Δτ) is v0.
    let fringe = fit.params.v0;

    let pass = v_zero > 0.90 && (fringe - 1.0).abs() <= 0.02;
    report(
        5,
        pass,
        &format!(
            "τ=0 visibility {v_zero:.4} ± {sigma:.4} (> 0.90 at v0 = 0.92); fitted fringe visibility {fringe:.4} (1.00 ± 0.02)"
        ),
    );
}

#[test]
fn criterion_06_coherent_baseline() {
    let start = Instant::now();
    let mut pass = true;
    for delta in [0.3e-3, mhz_to_rad_ns(3.0), 0.8] {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=100_000 {
            let tau = i as f64 / 100_000.0 * 2.0 * PI / delta;
            let v = coherent_baseline(delta, tau);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let vis = (hi - lo) / (hi + lo);
        pass &= (vis - 0.5).abs() < 1e-9;
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        6,
        pass && elapsed < 1.0,
        &format!("coherent-field fringe visibility 0.5 exactly, {elapsed:.2} s"),
    );
}

#[test]
fn criterion_07_fit_recovery() {
    let start = Instant::now();
    let true_delta = mhz_to_rad_ns(3.0);
    let true_delta_omega = khz_to_rad_ns(690.0);
    let mut successes = 0;
    let mut details = Vec::new();
    for i in 0..20u64 {
        let mut cfg = base_config(RunMode::TwoPathParallel, 700 + i, 10_000);
        cfg.v0 = 0.92;
        let out_par = run(&cfg).expect("parallel run");
        let out_ref =
            run(&base_config(RunMode::TwoPathPerpendicular, 800 + i, 10_000)).expect("reference");
        let fit = fit_beat(
            &histogram(&out_par, PERIOD / 2.0),
            &histogram(&out_ref, PERIOD / 2.0),
        )
        .expect("fit");
        let d_err = (fit.params.delta - true_delta).abs() / true_delta;
        let w_err = (fit.params.delta_omega - true_delta_omega).abs() / true_delta_omega;
        if d_err < 0.05 && w_err < 0.15 {
            successes += 1;
        } else {
            details.push(format!("seed {i}: Δ err {d_err:.3}, δω err {w_err:.3}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        7,
        successes >= 18 && elapsed < 300.0,
        &format!(
            "{successes}/20 runs recovered Δ within 5% and δω within 15% ({}), {elapsed:.1} s",
            if details.is_empty() {
                "all".to_string()
            } else {
                details.join("; ")
            }
        ),
    );
}

#[test]
fn criterion_08_temporal_filter() {
    let windows = [48.0, 200.0, 460.0, 920.0];
    // Analytic side.
    let model = BeatModel::new(1.0, 450.0, 0.0, khz_to_rad_ns(690.0), 1.0).unwrap();
    let analytic: Vec<f64> = windows
        .iter()
        .map(|&w| filtered_visibility(&model, w).unwrap())
        .collect();
    let analytic_ok = analytic[0] >= 0.99 && analytic.windows(2).all(|p| p[1] < p[0]);

    // Simulated side.
    let mut cfg = base_config(RunMode::TwoPathParallel, 81, 20_000);
    cfg.delta = 0.0;
    let out_par = run(&cfg).expect("parallel run");
    let out_ref = run(&base_config(RunMode::TwoPathPerpendicular, 82, 20_000)).expect("reference");
    let rows = filter_scan(&out_par.records, &out_ref.records, &windows, PERIOD / 2.0)
        .expect("filter scan");
    let vis: Vec<f64> = rows.iter().map(|r| r.visibility.unwrap()).collect();
    let sim_ok = vis[0] >= 0.99 && vis.windows(2).all(|p| p[1] < p[0]);

    report(
        8,
        analytic_ok && sim_ok,
        &format!(
            "analytic visibility {:?}; simulated {:?}; both start >= 0.99 and strictly decrease",
            analytic
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>(),
            vis.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_09_antibunching() {
    let mut cfg = base_config(RunMode::SinglePath, 91, 980);
    cfg.photons_per_train = 4;
    let out = run(&cfg).expect("single-path run");
    let hist = histogram(&out, 2.5 * PERIOD);
    let centers = hist.centers();
    let central_counts: u64 = centers
        .iter()
        .zip(hist.counts.iter())
        .filter(|(&c, _)| c.abs() < PERIOD / 2.0)
        .map(|(_, &v)| v)
        .sum();
    let side = hist.peak_integral(1);
    report(
        9,
        central_counts == 0 && side > 0.0,
        &format!(
            "single path: {central_counts} coincidences with |τ| < 2.65 µs (expect 0); ±5.3 µs peaks hold {side:.0}"
        ),
    );
}

#[test]
fn criterion_10_transform_limit() {
    // Brute-force Fourier oracle for the spectral 1/e half-width.
    let start = Instant::now();
    let wp = Wavepacket::new(0.0, 450.0, 0.0).unwrap();
    let n = 8192;
    let span = 12.0 * wp.tau_p;
    let h = 2.0 * span / n as f64;
    let samples: Vec<f64> = (0..n)
        .map(|i| wp.envelope(-span + (i as f64 + 0.5) * h).re)
        .collect();
    let spectral = |omega: f64| -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &s) in samples.iter().enumerate() {
            let t = -span + (i as f64 + 0.5) * h;
            re += s * (omega * t).cos();
            im += s * (omega * t).sin();
        }
        re * re + im * im
    };
    let peak = spectral(0.0);
    let target = peak / std::f64::consts::E;
    let (mut lo, mut hi) = (0.0, 0.02);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if spectral(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fft_khz = 0.5 * (lo + hi) / (2.0 * PI) * 1e6;
    let closed_khz = photon_beat::model::transform_limited_bandwidth(450.0).unwrap() * 1e3;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (closed_khz - 354.0).abs() <= 1.0 && (fft_khz - closed_khz).abs() <= 1.0;
    report(
        10,
        pass,
        &format!(
            "closed form {closed_khz:.2} kHz (354 ± 1), Fourier oracle {fft_khz:.2} kHz, {elapsed:.1} s"
        ),
    );
}

#[test]
fn criterion_11_background() {
    // Integration scale fixed by a 980-coincidence photon run.
    let photon_cfg = ExperimentConfig {
        seed: 111,
        ..ExperimentConfig::default()
    };
    let photon_run = run(&photon_cfg).expect("photon run");
    let n_trains = photon_run.trains;

    // Photon-free configuration with the dark rate calibrated so the
    // background maxima average 3.2 counts per 48 ns bin at that scale.
    let max_tau = 2.5 * PERIOD;
    let mut dark_cfg = photon_cfg.clone();
    dark_cfg.emission_prob = 0.0;
    dark_cfg.dark_rate = 1e-5; // placeholder for validation; calibrated below
    let rate = calibrate_dark_rate(&dark_cfg, n_trains, BIN, max_tau, 3.2).expect("calibration");
    dark_cfg.dark_rate = rate;

    let model = background_estimate(&dark_cfg, n_trains, BIN, max_tau).expect("background model");
    let peaks = peak_bin_indices(BIN, max_tau, PERIOD);
    let model_peak_avg: f64 = peaks.iter().map(|&i| model[i]).sum::<f64>() / peaks.len() as f64;

    let out = run_trains(&dark_cfg, 0..n_trains).expect("dark run");
    let hist = correlate(&out.records, BIN, max_tau, PERIOD).expect("correlate");
    let hist = hist.with_background(model.clone()).expect("subtract");

    // Corrected histogram: mean over bins within 3 standard errors of zero.
    let n_bins = hist.n_bins() as f64;
    let mean = hist.corrected.iter().sum::<f64>() / n_bins;
    let se = (hist.background.iter().sum::<f64>()).sqrt() / n_bins;
    let mean_ok = mean.abs() <= 3.0 * se;

    // A single 980-scale run holds ~16 counts at the maxima, so the peak
    // average is read off replicate runs at that scale.
    let replicates = 25u64;
    let mut obs_sum = 0.0;
    for r in 0..replicates {
        let mut replica = dark_cfg.clone();
        replica.seed = 111 + 1000 * r;
        let out_r = run_trains(&replica, 0..n_trains).expect("dark replica");
        let hist_r = correlate(&out_r.records, BIN, max_tau, PERIOD).expect("correlate");
        obs_sum += peaks.iter().map(|&i| hist_r.counts[i] as f64).sum::<f64>();
    }
    let obs_peak_avg = obs_sum / (replicates * peaks.len() as u64) as f64;
    let obs_ok = (obs_peak_avg - 3.2).abs() <= 0.3;

    report(
        11,
        (model_peak_avg - 3.2).abs() < 1e-6 && mean_ok && obs_ok,
        &format!(
            "calibrated rate {rate:.3e}/ns: model peak avg {model_peak_avg:.3}/bin, observed {obs_peak_avg:.2} over {replicates} replicate runs (3.2 ± 0.3); corrected mean {mean:.4} (|..| <= 3·SE = {:.4}) at {n_trains} trains",
            3.0 * se
        ),
    );
}

#[test]
fn criterion_12_peak_ratio() {
    let mut detail = String::new();
    let mut pass = true;
    for (eta_a, expect, tol, seed) in [(1.0, 1.5, 0.15, 121), (0.38, 2.0, 0.2, 122)] {
        let mut cfg = base_config(RunMode::TwoPathPerpendicular, seed, 10_000);
        cfg.photons_per_train = 20;
        cfg.eta_a = eta_a;
        let (central_rate, side_rate) = expected_peak_rates(&cfg);
        let enumerated = side_rate / central_rate;

        let out = run(&cfg).expect("simulation");
        let hist = histogram(&out, 1.5 * PERIOD);
        let central = hist.peak_integral(0);
        let side_per_sign = hist.peak_integral(1) / 2.0;
        let simulated = side_per_sign / central;

        pass &= (simulated - expect).abs() <= tol;
        // The simulation must also agree with the exact enumeration.
        let sigma = simulated * (1.0 / central + 1.0 / (2.0 * side_per_sign)).sqrt();
        pass &= (simulated - enumerated).abs() <= 4.0 * sigma;
        detail.push_str(&format!(
            "eta_a/eta_b = {eta_a}: enumerated {enumerated:.3}, simulated {simulated:.3} (expect {expect} ± {tol}); "
        ));
    }
    report(12, pass, detail.trim_end_matches("; "));
}

#[test]
fn config_units_round_trip() {
    // Shared sanity for the suite's unit conversions.
    assert!((rad_ns_to_mhz(mhz_to_rad_ns(3.0)) - 3.0).abs() < 1e-12);
    assert!((rad_ns_to_khz(khz_to_rad_ns(690.0)) - 690.0).abs() < 1e-12);
}
