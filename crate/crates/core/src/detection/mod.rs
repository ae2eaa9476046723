//! Pulsed-excitation Monte-Carlo engine and the single-ion experiments built
//! on it.
//!
//! Per pulse, each emitter is excited with a fixed probability at the start
//! of the pulse period, decays exponentially, and its photon is kept if it
//! arrives inside the chopper-gated detection window and survives the
//! collection efficiency. Dark counts form a homogeneous Poisson process in
//! the window. Randomness for pulse `k` comes from its own substream, so a
//! stream is identical no matter how pulses are spread over threads.

mod decay;
mod events;
mod hbt;
mod spectrum;
mod stark;

pub use decay::{simulate_pl_decay, DecayHistogram};
pub use events::{generate_events, EmitterSource, PhotonEvent, PhotonEventStream};
pub use hbt::{
    coincidence_histogram, estimate_g2, g2_from_snr, simulate_hbt, CoincidenceHistogram, G2Estimate,
    HbtResult,
};
pub use spectrum::{simulate_pl_spectrum, PlSpectrum, SpectrumScan};
pub use stark::{simulate_stark_g2, simulate_stark_scan, triangular_waveform, PeakCenter, StarkScan, StarkStep};

use crate::emitter::{enhanced_lifetime, IonRecord};
use crate::error::{ensure, Error, Result};
use crate::physics::CavityMode;

/// Largest number of pulses a single simulation may request.
pub const MAX_PULSES: u64 = 2_000_000_000;

/// Timing of the excitation/detection cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSequenceConfig {
    /// s.
    pub pulse_period: f64,
    pub num_pulses: u64,
    pub excitation_probability: f64,
    /// s.
    pub detection_window: f64,
    /// Gate-closed interval after each pulse, s.
    pub chopper_blanking: f64,
}

impl PulseSequenceConfig {
    pub fn new(
        pulse_period: f64,
        num_pulses: u64,
        excitation_probability: f64,
        detection_window: f64,
        chopper_blanking: f64,
    ) -> Result<Self> {
        let cfg = Self {
            pulse_period,
            num_pulses,
            excitation_probability,
            detection_window,
            chopper_blanking,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.pulse_period > 0.0 && self.pulse_period.is_finite(),
            "pulse_period",
            format!("must be positive, got {}", self.pulse_period),
        )?;
        ensure(
            self.detection_window > 0.0,
            "detection_window",
            format!("must be positive, got {}", self.detection_window),
        )?;
        ensure(
            self.chopper_blanking >= 0.0,
            "chopper_blanking",
            format!("must be non-negative, got {}", self.chopper_blanking),
        )?;
        ensure(
            self.detection_window + self.chopper_blanking <= self.pulse_period,
            "detection_window",
            "detection window plus chopper blanking exceeds the pulse period",
        )?;
        ensure(
            (0.0..=1.0).contains(&self.excitation_probability),
            "excitation_probability",
            format!("must lie in [0, 1], got {}", self.excitation_probability),
        )?;
        if self.num_pulses > MAX_PULSES {
            return Err(Error::ResourceGuard(format!(
                "{} pulses requested, limit is {MAX_PULSES}",
                self.num_pulses
            )));
        }
        Ok(())
    }

    /// Probability that a photon emitted with `lifetime` lands inside the
    /// gated window.
    pub fn capture_fraction(&self, lifetime: f64) -> f64 {
        let start = self.chopper_blanking;
        let end = start + self.detection_window;
        (-start / lifetime).exp() - (-end / lifetime).exp()
    }
}

/// End-to-end detection chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Collection times detection efficiency.
    pub efficiency: f64,
    /// Total noise rate of all channels together, Hz; split evenly.
    pub dark_rate: f64,
    pub num_channels: u8,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_rate: f64, num_channels: u8) -> Result<Self> {
        let d = Self {
            efficiency,
            dark_rate,
            num_channels,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            (0.0..=1.0).contains(&self.efficiency),
            "efficiency",
            format!("must lie in [0, 1], got {}", self.efficiency),
        )?;
        ensure(
            self.dark_rate >= 0.0 && self.dark_rate.is_finite(),
            "dark_rate",
            format!("must be non-negative, got {}", self.dark_rate),
        )?;
        ensure(
            self.num_channels == 1 || self.num_channels == 2,
            "num_channels",
            format!("must be 1 or 2, got {}", self.num_channels),
        )
    }

    /// Mean noise counts per window summed over channels.
    pub fn noise_per_window(&self, config: &PulseSequenceConfig) -> f64 {
        self.dark_rate * config.detection_window
    }
}

/// Mean signal and noise counts per detection window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSummary {
    pub mean_signal_per_window: f64,
    pub mean_noise_per_window: f64,
    pub snr: f64,
}

impl DetectionSummary {
    pub fn new(mean_signal_per_window: f64, mean_noise_per_window: f64) -> Self {
        let snr = if mean_noise_per_window > 0.0 {
            mean_signal_per_window / mean_noise_per_window
        } else {
            f64::INFINITY
        };
        Self {
            mean_signal_per_window,
            mean_noise_per_window,
            snr,
        }
    }

    /// Analytic expectation for the given emitters.
    pub fn expected(
        sources: &[EmitterSource],
        config: &PulseSequenceConfig,
        detector: &DetectorModel,
    ) -> Self {
        let signal = sources
            .iter()
            .map(|s| s.excitation_probability * detector.efficiency * config.capture_fraction(s.lifetime))
            .sum();
        Self::new(signal, detector.noise_per_window(config))
    }

    /// Estimate from a stream: total counts per window minus the detector's
    /// configured noise.
    pub fn measured(stream: &PhotonEventStream) -> Self {
        let total = stream.events.len() as f64 / stream.config.num_pulses.max(1) as f64;
        let noise = stream.detector.noise_per_window(&stream.config);
        Self::new(total - noise, noise)
    }
}

/// Emission parameters of an ion sitting in `cavity`.
pub fn ion_source(ion: &IonRecord, cavity: &CavityMode, config: &PulseSequenceConfig) -> EmitterSource {
    EmitterSource {
        lifetime: enhanced_lifetime(ion, cavity),
        excitation_probability: config.excitation_probability,
    }
}
