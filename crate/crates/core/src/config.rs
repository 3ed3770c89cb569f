//! Experiment description and its key=value file format.
//!
//! Internally all times are ns and all angular frequencies rad/ns; the file
//! format uses unit-suffixed keys (MHz, kHz, per-µs) and converts on read.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

/// Routing mode of the two-path interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    TwoPathParallel,
    TwoPathPerpendicular,
    SinglePath,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::TwoPathParallel => "two_path_parallel",
            RunMode::TwoPathPerpendicular => "two_path_perpendicular",
            RunMode::SinglePath => "single_path",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two_path_parallel" => Ok(RunMode::TwoPathParallel),
            "two_path_perpendicular" => Ok(RunMode::TwoPathPerpendicular),
            "single_path" => Ok(RunMode::SinglePath),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode `{other}` (expected two_path_parallel, two_path_perpendicular or single_path)"
            ))),
        }
    }
}

/// Full description of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Trigger period, ns.
    pub period: f64,
    /// Photon emission slots per atom train.
    pub photons_per_train: u32,
    /// Emission probability per trigger slot.
    pub emission_prob: f64,
    pub mode: RunMode,
    /// Detection probability for photons routed via the delayed path A.
    pub eta_a: f64,
    /// Detection probability for photons routed via the direct path B.
    pub eta_b: f64,
    /// Photon intensity 1/e half-width, ns.
    pub tau_p: f64,
    /// Mean frequency difference between paired photons, rad/ns.
    pub delta: f64,
    /// Inhomogeneous broadening, rad/ns.
    pub delta_omega: f64,
    /// Initial superposition purity scaling the interference term.
    pub v0: f64,
    /// Dark-count rate per detector inside an open gate, counts/ns.
    pub dark_rate: f64,
    /// Open gate width per slot, ns.
    pub gate_open: f64,
    /// Correlation bin width, ns.
    pub bin_width: f64,
    /// Stop once this many cross-detector pairs sit in the ±period peaks.
    pub target_side_peak: u64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            period: 5300.0,
            photons_per_train: 2,
            emission_prob: 1.0,
            mode: RunMode::TwoPathParallel,
            eta_a: 1.0,
            eta_b: 1.0,
            tau_p: 450.0,
            delta: mhz_to_rad_ns(3.0),
            delta_omega: khz_to_rad_ns(690.0),
            v0: 0.92,
            dark_rate: 0.0,
            gate_open: 2650.0,
            bin_width: 48.0,
            target_side_peak: 980,
            seed: 1,
        }
    }
}

pub fn mhz_to_rad_ns(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz * 1e-3
}

pub fn rad_ns_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e3
}

pub fn khz_to_rad_ns(f_khz: f64) -> f64 {
    2.0 * PI * f_khz * 1e-6
}

pub fn rad_ns_to_khz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e6
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
            Ok(())
        };
        prob("emission_prob", self.emission_prob)?;
        prob("eta_a", self.eta_a)?;
        prob("eta_b", self.eta_b)?;
        prob("v0", self.v0)?;
        if !(self.period > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "period_ns must be positive, got {}",
                self.period
            )));
        }
        if !(self.gate_open > 0.0 && self.gate_open < self.period) {
            return Err(Error::InvalidConfig(format!(
                "gate_open_ns must satisfy 0 < gate < period, got {}",
                self.gate_open
            )));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bin_width_ns must be positive, got {}",
                self.bin_width
            )));
        }
        if !(self.tau_p > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tau_p_ns must be positive, got {}",
                self.tau_p
            )));
        }
        if self.delta_omega < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "delta_omega must be >= 0, got {}",
                self.delta_omega
            )));
        }
        if self.dark_rate < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "dark_rate must be >= 0, got {}",
                self.dark_rate
            )));
        }
        if self.photons_per_train == 0 {
            return Err(Error::InvalidConfig(
                "photons_per_train must be at least 1".into(),
            ));
        }
        if self.target_side_peak == 0 {
            return Err(Error::InvalidConfig(
                "target_side_peak must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Arrival slots per train: emission slots plus one for the delayed path.
    pub fn arrival_slots(&self) -> u32 {
        self.photons_per_train + 1
    }

    /// Time allotted to one train. One idle slot beyond the last arrival
    /// slot keeps trains more than a period apart, so ±period coincidences
    /// are always intra-train.
    pub fn train_stride(&self) -> f64 {
        (self.photons_per_train as f64 + 2.0) * self.period
    }

    /// Envelope center of arrival slot `s` relative to the train start.
    pub fn slot_center(&self, s: u32) -> f64 {
        (s as f64 + 0.5) * self.period
    }

    /// Parse the key=value config format. Unknown keys are an error.
    pub fn from_key_values(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("`{key}` expects a number, got `{v}`"),
                })
            };
            match key {
                "period_ns" => cfg.period = parse_f64(value)?,
                "photons_per_train" => {
                    cfg.photons_per_train = value.parse().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        message: format!("`{key}` expects an integer, got `{value}`"),
                    })?
                }
                "emission_prob" => cfg.emission_prob = parse_f64(value)?,
                "mode" => cfg.mode = RunMode::parse(value)?,
                "eta_a" => cfg.eta_a = parse_f64(value)?,
                "eta_b" => cfg.eta_b = parse_f64(value)?,
                "tau_p_ns" => cfg.tau_p = parse_f64(value)?,
                "delta_mhz" => cfg.delta = mhz_to_rad_ns(parse_f64(value)?),
                "delta_omega_khz" => cfg.delta_omega = khz_to_rad_ns(parse_f64(value)?),
                "v0" => cfg.v0 = parse_f64(value)?,
                "dark_rate_per_us" => cfg.dark_rate = parse_f64(value)? * 1e-3,
                "gate_open_ns" => cfg.gate_open = parse_f64(value)?,
                "bin_width_ns" => cfg.bin_width = parse_f64(value)?,
                "target_side_peak" => {
                    cfg.target_side_peak = value.parse().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        message: format!("`{key}` expects an integer, got `{value}`"),
                    })?
                }
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        message: format!("`{key}` expects an integer, got `{value}`"),
                    })?
                }
                other => return Err(Error::UnknownConfigKey(other.to_string())),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_key_values(&text, path)
    }
}
