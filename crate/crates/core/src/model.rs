//! Closed-form joint photodetection densities for two single photons meeting
//! at a 50:50 beam splitter, and the derived observables: coherence dip,
//! quantum beat, visibility, and temporal-filter post-selection.
//!
//! Units: time in ns, angular frequency in rad/ns. Cyclic frequencies only
//! appear at the edges (config files, reports) and convert via ω = 2πf.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A single photon's temporal mode: Gaussian envelope with a carrier offset.
///
/// `tau_p` is the 1/e half-width of the *intensity* envelope, so the
/// intensity is `(π τ_p²)^{-1/2} exp(-(t-t₀)²/τ_p²)` and integrates to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavepacket {
    pub t_center: f64,
    pub tau_p: f64,
    /// Carrier offset from a common reference, rad/ns.
    pub detuning: f64,
}

impl Wavepacket {
    pub fn new(t_center: f64, tau_p: f64, detuning: f64) -> Result<Self> {
        if !(tau_p > 0.0) || !tau_p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wavepacket tau_p must be positive, got {tau_p}"
            )));
        }
        Ok(Wavepacket {
            t_center,
            tau_p,
            detuning,
        })
    }

    /// Complex mode amplitude at time `t`.
    pub fn envelope(&self, t: f64) -> Complex64 {
        let u = t - self.t_center;
        let norm = (PI * self.tau_p * self.tau_p).powf(-0.25);
        let mag = norm * (-u * u / (2.0 * self.tau_p * self.tau_p)).exp();
        let phase = -self.detuning * u;
        Complex64::from_polar(mag, phase)
    }

    /// Intensity `|ξ(t)|²`, a probability density over arrival time.
    pub fn intensity(&self, t: f64) -> f64 {
        let u = t - self.t_center;
        (PI * self.tau_p * self.tau_p).powf(-0.5) * (-u * u / (self.tau_p * self.tau_p)).exp()
    }
}

/// Relative polarization of the two input photons. Parallel photons
/// interfere; perpendicular photons are routed independently and serve as
/// the interference-free reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Parallel,
    Perpendicular,
}

/// Detector-pair channel of an ordered double detection: the first letter
/// names the detector that clicked first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Cd,
    Dc,
    Cc,
    Dd,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Cd, Channel::Dc, Channel::Cc, Channel::Dd];

    pub fn is_cross(self) -> bool {
        matches!(self, Channel::Cd | Channel::Dc)
    }
}

/// Square sampling grid shared by both time axes of a [`JointDensity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n_bins: usize,
}

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 bins, got {n_bins}"
            )));
        }
        if !(t_max > t_min) {
            return Err(Error::InvalidParameter(format!(
                "grid span is empty: [{t_min}, {t_max}]"
            )));
        }
        Ok(GridSpec {
            t_min,
            t_max,
            n_bins,
        })
    }

    /// Default grid around a pair of wavepackets: ±4·τ_p beyond both
    /// centers, 4 ns spacing.
    pub fn around(a: &Wavepacket, b: &Wavepacket) -> Self {
        let tau = a.tau_p.max(b.tau_p);
        let t_min = a.t_center.min(b.t_center) - 4.0 * tau;
        let t_max = a.t_center.max(b.t_center) + 4.0 * tau;
        let n_bins = ((t_max - t_min) / 4.0).ceil() as usize;
        GridSpec {
            t_min,
            t_max,
            n_bins: n_bins.max(2),
        }
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / self.n_bins as f64
    }

    /// Bin-center sample points.
    pub fn centers(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_bins)
            .map(|i| self.t_min + (i as f64 + 0.5) * dt)
            .collect()
    }
}

/// Joint density of an ordered double detection on a square (t₁, t₂) grid,
/// per detector-pair channel, in ns⁻².
///
/// `t₁` is the first detection time and `t₂` the second. Every channel
/// density is symmetric under swapping `t₁ ↔ t₂`, and each unordered click
/// pair shows up in two ordered cells, so the probability mass carried by a
/// single cell is `value · dt² / 2` and the four channels together carry
/// total mass one.
#[derive(Debug, Clone)]
pub struct JointDensity {
    grid: GridSpec,
    centers: Vec<f64>,
    /// CD/DC channel density (antisymmetric amplitude combination).
    cross: Vec<f64>,
    /// CC/DD channel density (symmetric amplitude combination).
    same: Vec<f64>,
}

/// Fraction of envelope mass allowed outside the grid before
/// [`joint_density`] rejects the grid.
pub const GRID_MASS_LIMIT: f64 = 1e-6;

impl JointDensity {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn n_bins(&self) -> usize {
        self.grid.n_bins
    }

    /// Density value of `channel` at grid cell `(i, j)`.
    pub fn value(&self, channel: Channel, i: usize, j: usize) -> f64 {
        let idx = i * self.grid.n_bins + j;
        match channel {
            Channel::Cd | Channel::Dc => self.cross[idx],
            Channel::Cc | Channel::Dd => self.same[idx],
        }
    }

    /// Probability mass assigned to one ordered cell: `value · dt² / 2`.
    pub fn cell_probability(&self, channel: Channel, i: usize, j: usize) -> f64 {
        let dt = self.grid.dt();
        0.5 * self.value(channel, i, j) * dt * dt
    }

    /// Total probability of the ordered outcome described by `channel`.
    pub fn channel_probability(&self, channel: Channel) -> f64 {
        let dt = self.grid.dt();
        let v = match channel {
            Channel::Cd | Channel::Dc => &self.cross,
            Channel::Cc | Channel::Dd => &self.same,
        };
        0.5 * v.iter().sum::<f64>() * dt * dt
    }

    /// Sum of all four channels over all ordered cells; one for unit
    /// detection efficiency on an adequate grid.
    pub fn total_probability(&self) -> f64 {
        Channel::ALL
            .iter()
            .map(|&c| self.channel_probability(c))
            .sum()
    }
}

fn mass_outside(wp: &Wavepacket, t_min: f64, t_max: f64) -> f64 {
    // Equispaced sums of a Gaussian intensity are accurate far beyond the
    // 1e-6 decision threshold here.
    let n = 4096usize;
    let h = (t_max - t_min) / n as f64;
    let inside: f64 = (0..n)
        .map(|i| wp.intensity(t_min + (i as f64 + 0.5) * h))
        .sum::<f64>()
        * h;
    (1.0 - inside).max(0.0)
}

/// Joint photodetection density of two single photons at a 50:50 beam
/// splitter on the given grid.
///
/// Parallel polarization interferes: the CD/DC channels carry the
/// antisymmetric amplitude combination `¼|ξ_A(t₁)ξ_B(t₂) − ξ_B(t₁)ξ_A(t₂)|²`
/// and CC/DD the symmetric one. Perpendicular polarization drops the cross
/// term, leaving `¼(|ξ_A(t₁)ξ_B(t₂)|² + |ξ_B(t₁)ξ_A(t₂)|²)` in every channel.
pub fn joint_density(
    wp_a: &Wavepacket,
    wp_b: &Wavepacket,
    pol: Polarization,
    grid: GridSpec,
) -> Result<JointDensity> {
    for (which, wp) in [("A", wp_a), ("B", wp_b)] {
        let fraction = mass_outside(wp, grid.t_min, grid.t_max);
        if fraction > GRID_MASS_LIMIT {
            return Err(Error::GridTooSmall {
                which,
                fraction,
                limit: GRID_MASS_LIMIT,
            });
        }
    }

    let centers = grid.centers();
    let xi_a: Vec<Complex64> = centers.iter().map(|&t| wp_a.envelope(t)).collect();
    let xi_b: Vec<Complex64> = centers.iter().map(|&t| wp_b.envelope(t)).collect();

    let n = grid.n_bins;
    let mut cross = vec![0.0; n * n];
    let mut same = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let u = xi_a[i] * xi_b[j];
            let w = xi_b[i] * xi_a[j];
            let idx = i * n + j;
            match pol {
                Polarization::Parallel => {
                    cross[idx] = 0.25 * (u - w).norm_sqr();
                    same[idx] = 0.25 * (u + w).norm_sqr();
                }
                Polarization::Perpendicular => {
                    let v = 0.25 * (u.norm_sqr() + w.norm_sqr());
                    cross[idx] = v;
                    same[idx] = v;
                }
            }
        }
    }

    Ok(JointDensity {
        grid,
        centers,
        cross,
        same,
    })
}

/// Five-parameter analytic model of the cross-detector correlation:
/// amplitude, photon width, beat frequency Δ, inhomogeneous broadening δω,
/// and initial superposition purity v₀.
///
/// Convention: the ensemble average of `cos((Δ+δ)τ)` over relative-detuning
/// jitter `δ ~ Normal(0, (δω/√2)²)` equals `exp(−(δω·τ/2)²)·cos(Δτ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatModel {
    pub amplitude: f64,
    pub tau_p: f64,
    /// Beat frequency Δ, rad/ns.
    pub delta: f64,
    /// Inhomogeneous broadening δω, rad/ns.
    pub delta_omega: f64,
    /// Initial superposition purity / interference contrast, in [0, 1].
    pub v0: f64,
}

impl BeatModel {
    pub fn new(amplitude: f64, tau_p: f64, delta: f64, delta_omega: f64, v0: f64) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be >= 0, got {amplitude}"
            )));
        }
        if !(tau_p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau_p must be positive, got {tau_p}"
            )));
        }
        if !(delta_omega >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_omega must be >= 0, got {delta_omega}"
            )));
        }
        if !(0.0..=1.0).contains(&v0) {
            return Err(Error::InvalidParameter(format!(
                "v0 must lie in [0, 1], got {v0}"
            )));
        }
        Ok(BeatModel {
            amplitude,
            tau_p,
            delta,
            delta_omega,
            v0,
        })
    }

    /// Dephasing envelope `exp(−(δω·τ/2)²)`.
    pub fn dephasing(&self, tau: f64) -> f64 {
        let x = 0.5 * self.delta_omega * tau;
        (-x * x).exp()
    }
}

/// Cross-detector correlation density at detection-time difference `tau`.
///
/// Perpendicular: `amplitude · (2√(2π)·τ_p)⁻¹ · exp(−τ²/(2τ_p²))`, the
/// self-convolution of two photon envelopes. Parallel multiplies that by
/// `1 − v₀·exp(−(δω·τ/2)²)·cos(Δτ)`.
pub fn cross_correlation(model: &BeatModel, pol: Polarization, tau: f64) -> f64 {
    let base = model.amplitude / (2.0 * (2.0 * PI).sqrt() * model.tau_p)
        * (-tau * tau / (2.0 * model.tau_p * model.tau_p)).exp();
    match pol {
        Polarization::Perpendicular => base,
        Polarization::Parallel => {
            base * (1.0 - model.v0 * model.dephasing(tau) * (model.delta * tau).cos())
        }
    }
}

/// Cross-correlation modulation of two interfering *coherent* fields with
/// frequency difference `delta`: `1 − ½·cos(Δτ)`, fringe visibility 0.5.
pub fn coherent_baseline(delta: f64, tau: f64) -> f64 {
    1.0 - 0.5 * (delta * tau).cos()
}

/// Interference visibility at detection-time difference `tau`:
/// `v₀·exp(−(δω·τ/2)²)`. At τ = 0 this is the initial purity.
pub fn visibility(model: &BeatModel, tau: f64) -> f64 {
    model.v0 * model.dephasing(tau)
}

/// Mutual coherence time: the 1/e half-width `2/δω` of the dephasing
/// envelope.
pub fn coherence_time(delta_omega: f64) -> Result<f64> {
    if !(delta_omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coherence time needs delta_omega > 0, got {delta_omega} (unbounded as delta_omega -> 0)"
        )));
    }
    Ok(2.0 / delta_omega)
}

/// Spectral-intensity 1/e half-width of a transform-limited Gaussian
/// photon of width `tau_p` ns, in MHz: `1/(2π·τ_p)`.
pub fn transform_limited_bandwidth(tau_p: f64) -> Result<f64> {
    if !(tau_p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau_p must be positive, got {tau_p}"
        )));
    }
    Ok(1e3 / (2.0 * PI * tau_p))
}

/// Visibility retained by a temporal filter that accepts only detections
/// with `|τ| < window`:
/// `∫₋w^w p⊥(τ)·v₀·e^{−(δω·τ/2)²}·cos(Δτ) dτ / ∫₋w^w p⊥(τ) dτ`.
pub fn filtered_visibility(model: &BeatModel, window: f64) -> Result<f64> {
    if !(window > 0.0) {
        return Err(Error::InvalidWindow(window));
    }
    let weight = |tau: f64| (-tau * tau / (2.0 * model.tau_p * model.tau_p)).exp();
    let num = simpson(-window, window, 4096, |tau| {
        weight(tau) * model.v0 * model.dephasing(tau) * (model.delta * tau).cos()
    });
    let den = simpson(-window, window, 4096, weight);
    Ok(num / den)
}

/// Composite Simpson rule with `n` (even) intervals.
pub(crate) fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}
