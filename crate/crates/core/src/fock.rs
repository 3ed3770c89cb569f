//! Exact brute-force verifier for the beam-splitter model: two photons on
//! discretized temporal modes, full Fock-space expansion of the output
//! state, and exact joint-detection distributions for small instances.
//!
//! Everything here is derived by expanding creation operators, not by the
//! closed-form channel densities of [`crate::model`], so agreement between
//! the two is a real cross-check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Channel, Wavepacket};

/// Largest supported bin count; the oracle exists for verification, where
/// the quadratic cost stays trivial.
pub const MAX_BINS: usize = 64;

/// Fraction of envelope mass allowed outside the discretization span.
pub const SPAN_MASS_LIMIT: f64 = 1e-3;

/// Two single photons, one per input port, on a shared time-bin basis.
#[derive(Debug, Clone)]
pub struct TimeBinState {
    centers: Vec<f64>,
    dt: f64,
    amp_a: Vec<Complex64>,
    amp_b: Vec<Complex64>,
    /// Norm of the raw envelope samples before renormalization, as a
    /// discretization-quality diagnostic.
    raw_norm_a: f64,
    raw_norm_b: f64,
}

impl TimeBinState {
    pub fn n_bins(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn amp_a(&self) -> &[Complex64] {
        &self.amp_a
    }

    pub fn amp_b(&self) -> &[Complex64] {
        &self.amp_b
    }

    pub fn raw_norms(&self) -> (f64, f64) {
        (self.raw_norm_a, self.raw_norm_b)
    }
}

/// Sample two wavepackets onto `n_bins` bins spanning `[t_min, t_max]` and
/// renormalize each amplitude vector to unit Euclidean norm.
pub fn build_state(
    wp_a: &Wavepacket,
    wp_b: &Wavepacket,
    n_bins: usize,
    t_min: f64,
    t_max: f64,
) -> Result<TimeBinState> {
    if !(2..=MAX_BINS).contains(&n_bins) {
        return Err(Error::InvalidParameter(format!(
            "n_bins must be in 2..={MAX_BINS}, got {n_bins}"
        )));
    }
    if !(t_max > t_min) {
        return Err(Error::InvalidParameter(format!(
            "empty span [{t_min}, {t_max}]"
        )));
    }
    let dt = (t_max - t_min) / n_bins as f64;
    let centers: Vec<f64> = (0..n_bins)
        .map(|i| t_min + (i as f64 + 0.5) * dt)
        .collect();

    let sample = |wp: &Wavepacket, which: &'static str| -> Result<(Vec<Complex64>, f64)> {
        let raw: Vec<Complex64> = centers
            .iter()
            .map(|&t| wp.envelope(t) * dt.sqrt())
            .collect();
        let norm_sq: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
        let deficit = (1.0 - norm_sq).max(0.0);
        if deficit > SPAN_MASS_LIMIT {
            return Err(Error::GridTooSmall {
                which,
                fraction: deficit,
                limit: SPAN_MASS_LIMIT,
            });
        }
        let norm = norm_sq.sqrt();
        Ok((raw.iter().map(|z| z / norm).collect(), norm))
    };

    let (amp_a, raw_norm_a) = sample(wp_a, "A")?;
    let (amp_b, raw_norm_b) = sample(wp_b, "B")?;
    Ok(TimeBinState {
        centers,
        dt,
        amp_a,
        amp_b,
        raw_norm_a,
        raw_norm_b,
    })
}

/// Build a state directly from amplitude vectors (renormalized).
pub fn state_from_amplitudes(
    centers: Vec<f64>,
    amp_a: Vec<Complex64>,
    amp_b: Vec<Complex64>,
) -> Result<TimeBinState> {
    let n = centers.len();
    if !(2..=MAX_BINS).contains(&n) || amp_a.len() != n || amp_b.len() != n {
        return Err(Error::InvalidParameter(
            "amplitude vectors and centers must share a length in 2..=64".into(),
        ));
    }
    let dt = if n >= 2 { centers[1] - centers[0] } else { 1.0 };
    let normalize = |v: Vec<Complex64>| -> Result<(Vec<Complex64>, f64)> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero amplitude vector".into()));
        }
        Ok((v.iter().map(|z| z / norm).collect(), norm))
    };
    let (amp_a, raw_norm_a) = normalize(amp_a)?;
    let (amp_b, raw_norm_b) = normalize(amp_b)?;
    Ok(TimeBinState {
        centers,
        dt,
        amp_a,
        amp_b,
        raw_norm_a,
        raw_norm_b,
    })
}

/// Exact probabilities of every ordered double detection
/// `(channel, first bin, second bin)`. Probabilities sum to one.
///
/// Each unordered click pair is split evenly between its two ordered cells,
/// matching the bookkeeping of [`crate::model::JointDensity`]; a same-bin
/// same-detector event has a single cell and carries its full weight.
#[derive(Debug, Clone)]
pub struct DetectionDistribution {
    n_bins: usize,
    cd: Vec<f64>,
    dc: Vec<f64>,
    cc: Vec<f64>,
    dd: Vec<f64>,
}

impl DetectionDistribution {
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn prob(&self, channel: Channel, i: usize, j: usize) -> f64 {
        let idx = i * self.n_bins + j;
        match channel {
            Channel::Cd => self.cd[idx],
            Channel::Dc => self.dc[idx],
            Channel::Cc => self.cc[idx],
            Channel::Dd => self.dd[idx],
        }
    }

    pub fn channel_total(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Cd => self.cd.iter().sum(),
            Channel::Dc => self.dc.iter().sum(),
            Channel::Cc => self.cc.iter().sum(),
            Channel::Dd => self.dd.iter().sum(),
        }
    }

    pub fn total(&self) -> f64 {
        Channel::ALL.iter().map(|&c| self.channel_total(c)).sum()
    }
}

/// Output mode label: detector plus time bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Mode {
    /// 0 = C, 1 = D.
    detector: u8,
    bin: usize,
}

/// Expand the two-photon output state over unordered mode pairs.
///
/// The beam splitter maps the input operators as a†_A = (c† − d†)/√2 and
/// a†_B = (c† + d†)/√2, so the product of the two single-photon creation
/// polynomials is expanded term by term into monomial coefficients.
fn monomial_coefficients(state: &TimeBinState) -> Vec<((Mode, Mode), Complex64)> {
    let n = state.n_bins();
    // Dense upper-triangular storage over the 2n output modes.
    let m = 2 * n;
    let mut coef = vec![Complex64::new(0.0, 0.0); m * m];
    let inv2 = Complex64::new(0.5, 0.0);
    for (i, &a) in state.amp_a.iter().enumerate() {
        for (j, &b) in state.amp_b.iter().enumerate() {
            let w = inv2 * a * b;
            // (c†_i − d†_i)(c†_j + d†_j) = c_i c_j + c_i d_j − d_i c_j − d_i d_j
            let terms = [
                (Mode { detector: 0, bin: i }, Mode { detector: 0, bin: j }, 1.0),
                (Mode { detector: 0, bin: i }, Mode { detector: 1, bin: j }, 1.0),
                (Mode { detector: 1, bin: i }, Mode { detector: 0, bin: j }, -1.0),
                (Mode { detector: 1, bin: i }, Mode { detector: 1, bin: j }, -1.0),
            ];
            for (m1, m2, sign) in terms {
                let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
                let lo_idx = lo.detector as usize * n + lo.bin;
                let hi_idx = hi.detector as usize * n + hi.bin;
                coef[lo_idx * m + hi_idx] += w * sign;
            }
        }
    }
    let mut out = Vec::new();
    for lo_idx in 0..m {
        for hi_idx in lo_idx..m {
            let c = coef[lo_idx * m + hi_idx];
            if c.norm_sqr() > 0.0 {
                let mode = |idx: usize| Mode {
                    detector: (idx / n) as u8,
                    bin: idx % n,
                };
                out.push(((mode(lo_idx), mode(hi_idx)), c));
            }
        }
    }
    out
}

/// Exact joint-detection distribution of the interfering state.
pub fn detection_distribution(state: &TimeBinState) -> DetectionDistribution {
    let n = state.n_bins();
    let mut dist = DetectionDistribution {
        n_bins: n,
        cd: vec![0.0; n * n],
        dc: vec![0.0; n * n],
        cc: vec![0.0; n * n],
        dd: vec![0.0; n * n],
    };
    for ((m1, m2), r) in monomial_coefficients(state) {
        // A doubly occupied mode a†²|0⟩ has norm √2, so the normalized
        // amplitude picks up a factor √2 over the raw monomial coefficient.
        let p = if m1 == m2 {
            2.0 * r.norm_sqr()
        } else {
            r.norm_sqr()
        };
        deposit(&mut dist, m1, m2, p);
    }
    dist
}

/// Distribution for fully distinguishable photons (perpendicular
/// polarization): each photon routes independently with no interference.
pub fn detection_distribution_distinguishable(state: &TimeBinState) -> DetectionDistribution {
    let n = state.n_bins();
    let mut dist = DetectionDistribution {
        n_bins: n,
        cd: vec![0.0; n * n],
        dc: vec![0.0; n * n],
        cc: vec![0.0; n * n],
        dd: vec![0.0; n * n],
    };
    for (i, &a) in state.amp_a.iter().enumerate() {
        for (j, &b) in state.amp_b.iter().enumerate() {
            let w = 0.25 * a.norm_sqr() * b.norm_sqr();
            for det_a in 0..2u8 {
                for det_b in 0..2u8 {
                    deposit(
                        &mut dist,
                        Mode {
                            detector: det_a,
                            bin: i,
                        },
                        Mode {
                            detector: det_b,
                            bin: j,
                        },
                        w,
                    );
                }
            }
        }
    }
    dist
}

fn deposit(dist: &mut DetectionDistribution, m1: Mode, m2: Mode, p: f64) {
    let n = dist.n_bins;
    if m1 == m2 {
        let idx = m1.bin * n + m1.bin;
        match m1.detector {
            0 => dist.cc[idx] += p,
            _ => dist.dd[idx] += p,
        }
        return;
    }
    // Unordered pair split evenly between its two ordered descriptions.
    let half = 0.5 * p;
    for (first, second) in [(m1, m2), (m2, m1)] {
        let idx = first.bin * n + second.bin;
        match (first.detector, second.detector) {
            (0, 0) => dist.cc[idx] += half,
            (0, 1) => dist.cd[idx] += half,
            (1, 0) => dist.dc[idx] += half,
            _ => dist.dd[idx] += half,
        }
    }
}

/// Normalized one-photon state left behind after a first detection,
/// resolved over the output modes of both detectors.
#[derive(Debug, Clone)]
pub struct ConditionalState {
    pub c: Vec<Complex64>,
    pub d: Vec<Complex64>,
    /// Probability of the conditioning detection itself.
    pub first_probability: f64,
}

impl ConditionalState {
    /// Probability of the second detection landing on detector C in `bin`.
    pub fn prob_c(&self, bin: usize) -> f64 {
        self.c[bin].norm_sqr()
    }

    pub fn prob_d(&self, bin: usize) -> f64 {
        self.d[bin].norm_sqr()
    }
}

/// Detector label for conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstDetector {
    C,
    D,
}

/// Apply the annihilation operator of the first detection and renormalize,
/// exposing the post-detection single-photon superposition.
pub fn conditional_state(
    state: &TimeBinState,
    first: FirstDetector,
    first_bin: usize,
) -> Result<ConditionalState> {
    let n = state.n_bins();
    if first_bin >= n {
        return Err(Error::InvalidParameter(format!(
            "first_bin {first_bin} out of range (n_bins = {n})"
        )));
    }
    let a_k = state.amp_a[first_bin];
    let b_k = state.amp_b[first_bin];
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..n {
        let a_m = state.amp_a[m];
        let b_m = state.amp_b[m];
        match first {
            FirstDetector::C => {
                c[m] = 0.5 * (a_k * b_m + b_k * a_m);
                d[m] = 0.5 * (a_k * b_m - b_k * a_m);
            }
            FirstDetector::D => {
                c[m] = 0.5 * (b_k * a_m - a_k * b_m);
                d[m] = -0.5 * (a_k * b_m + b_k * a_m);
            }
        }
    }
    let norm_sq: f64 = c.iter().chain(d.iter()).map(|z| z.norm_sqr()).sum();
    if norm_sq < 1e-15 {
        return Err(Error::ZeroProbabilityEvent {
            detector: match first {
                FirstDetector::C => 'C',
                FirstDetector::D => 'D',
            },
            bin: first_bin,
        });
    }
    let norm = norm_sq.sqrt();
    for z in c.iter_mut().chain(d.iter_mut()) {
        *z /= norm;
    }
    Ok(ConditionalState {
        c,
        d,
        first_probability: norm_sq,
    })
}
