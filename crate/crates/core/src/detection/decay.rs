use super::{generate_events, ion_source, DetectorModel, PulseSequenceConfig};
use crate::emitter::IonRecord;
use crate::error::{ensure, Result};
use crate::physics::CavityMode;

/// Photon arrival-time histogram over the detection window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayHistogram {
    /// `counts.len() + 1` edges, s since the window opened.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl DecayHistogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Time-resolved PL of one ion under pulsed excitation.
pub fn simulate_pl_decay(
    ion: &IonRecord,
    cavity: &CavityMode,
    config: &PulseSequenceConfig,
    detector: &DetectorModel,
    num_bins: usize,
    seed: u64,
) -> Result<DecayHistogram> {
    ensure(num_bins > 0, "num_bins", "at least one bin is required")?;
    let source = ion_source(ion, cavity, config);
    let stream = generate_events(&[source], config, detector, seed)?;

    let width = config.detection_window / num_bins as f64;
    let bin_edges = (0..=num_bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0u64; num_bins];
    for e in &stream.events {
        let bin = ((e.time_in_window / width) as usize).min(num_bins - 1);
        counts[bin] += 1;
    }
    Ok(DecayHistogram { bin_edges, counts })
}
