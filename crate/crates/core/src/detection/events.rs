use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;

use super::{DetectorModel, PulseSequenceConfig};
use crate::error::{ensure, Result};
use crate::rng::{substream, Purpose};

/// Pulses per parallel work item. Fixed, so chunking never depends on the
/// number of worker threads.
const CHUNK: u64 = 1 << 14;

/// An emitter as seen by the pulse engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterSource {
    /// s.
    pub lifetime: f64,
    pub excitation_probability: f64,
}

/// One detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonEvent {
    pub pulse_index: u64,
    pub channel: u8,
    /// Seconds since the detection window opened.
    pub time_in_window: f64,
}

/// Time-tagged detections, sorted by `(pulse_index, time_in_window)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonEventStream {
    pub events: Vec<PhotonEvent>,
    pub config: PulseSequenceConfig,
    pub detector: DetectorModel,
    pub seed: u64,
}

impl PhotonEventStream {
    /// Detections per channel.
    pub fn channel_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.detector.num_channels as usize];
        for e in &self.events {
            counts[e.channel as usize] += 1;
        }
        counts
    }
}

/// Runs the pulse engine for `config.num_pulses` pulses.
pub fn generate_events(
    sources: &[EmitterSource],
    config: &PulseSequenceConfig,
    detector: &DetectorModel,
    seed: u64,
) -> Result<PhotonEventStream> {
    config.validate()?;
    detector.validate()?;
    for s in sources {
        ensure(
            s.lifetime > 0.0 && s.lifetime.is_finite(),
            "lifetime",
            format!("must be positive, got {}", s.lifetime),
        )?;
        ensure(
            (0.0..=1.0).contains(&s.excitation_probability),
            "excitation_probability",
            format!("must lie in [0, 1], got {}", s.excitation_probability),
        )?;
    }

    let decays: Vec<Exp<f64>> = sources
        .iter()
        .map(|s| Exp::new(1.0 / s.lifetime).expect("positive rate"))
        .collect();
    let channels = detector.num_channels as usize;
    let dark_mean = detector.noise_per_window(config) / channels as f64;
    let dark = (dark_mean > 0.0).then(|| Poisson::new(dark_mean).expect("positive mean"));
    let gate_open = config.chopper_blanking;
    let gate_close = gate_open + config.detection_window;

    let pulse = |k: u64, out: &mut Vec<PhotonEvent>| {
        let mut rng = substream(seed, Purpose::Pulse, k);
        let first = out.len();
        for (source, decay) in sources.iter().zip(&decays) {
            if rng.random::<f64>() >= source.excitation_probability {
                continue;
            }
            let t = decay.sample(&mut rng);
            if t < gate_open || t >= gate_close {
                continue;
            }
            if rng.random::<f64>() >= detector.efficiency {
                continue;
            }
            let channel = if channels == 2 { rng.random::<bool>() as u8 } else { 0 };
            out.push(PhotonEvent {
                pulse_index: k,
                channel,
                time_in_window: t - gate_open,
            });
        }
        if let Some(dark) = &dark {
            for channel in 0..channels as u8 {
                let n = dark.sample(&mut rng) as u64;
                for _ in 0..n {
                    out.push(PhotonEvent {
                        pulse_index: k,
                        channel,
                        time_in_window: rng.random::<f64>() * config.detection_window,
                    });
                }
            }
        }
        if out.len() - first > 1 {
            out[first..].sort_by(|a, b| a.time_in_window.total_cmp(&b.time_in_window));
        }
    };

    let num_chunks = config.num_pulses.div_ceil(CHUNK);
    let chunks: Vec<Vec<PhotonEvent>> = (0..num_chunks)
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::new();
            let end = ((c + 1) * CHUNK).min(config.num_pulses);
            for k in c * CHUNK..end {
                pulse(k, &mut out);
            }
            out
        })
        .collect();

    Ok(PhotonEventStream {
        events: chunks.concat(),
        config: *config,
        detector: *detector,
        seed,
    })
}
