use super::{DetectorModel, PulseSequenceConfig};
use crate::emitter::{effective_pl_linewidth, enhanced_lifetime, IonRecord, SpectralDiffusionModel};
use crate::error::{ensure, Result};
use crate::physics::{sample_poisson, CavityMode};
use crate::rng::{substream, Purpose};

/// Laser frequencies of a PL-excitation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumScan {
    /// Absolute laser frequencies, Hz, strictly increasing.
    pub laser_frequencies: Vec<f64>,
    /// Total time over which the spectrum is accumulated; sets how much
    /// spectral diffusion the peaks show. s.
    pub measurement_duration: f64,
}

impl SpectrumScan {
    /// `points` evenly spaced frequencies over `[start, end]`.
    pub fn linear(start: f64, end: f64, points: usize, measurement_duration: f64) -> Self {
        let step = if points > 1 { (end - start) / (points - 1) as f64 } else { 0.0 };
        Self {
            laser_frequencies: (0..points).map(|i| start + i as f64 * step).collect(),
            measurement_duration,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure(!self.laser_frequencies.is_empty(), "scan_grid", "scan grid is empty")?;
        ensure(
            self.laser_frequencies.windows(2).all(|w| w[1] > w[0]),
            "scan_grid",
            "scan grid must be strictly increasing",
        )
    }
}

/// Detected counts against laser frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PlSpectrum {
    pub laser_frequencies: Vec<f64>,
    pub counts: Vec<u64>,
    /// Mean of the Poisson draw at each point.
    pub expected: Vec<f64>,
    /// Mean noise counts per point.
    pub noise_floor: f64,
}

impl PlSpectrum {
    /// Laser frequency relative to `reference`, Hz.
    pub fn detunings(&self, reference: f64) -> Vec<f64> {
        self.laser_frequencies.iter().map(|f| f - reference).collect()
    }

    /// Number of separate regions where counts exceed `threshold`. Regions
    /// closer than `merge_distance` (Hz) are counted once.
    pub fn count_peaks(&self, threshold: f64, merge_distance: f64) -> usize {
        let mut peaks = 0;
        let mut last_above: Option<f64> = None;
        for (&f, &c) in self.laser_frequencies.iter().zip(&self.counts) {
            if (c as f64) <= threshold {
                continue;
            }
            match last_above {
                Some(prev) if f - prev <= merge_distance => {}
                _ => peaks += 1,
            }
            last_above = Some(f);
        }
        peaks
    }
}

fn lorentzian_factor(detuning: f64, fwhm: f64) -> f64 {
    let x = 2.0 * detuning / fwhm;
    1.0 / (1.0 + x * x)
}

/// PL-excitation spectrum of an ion ensemble coupled to `cavity`.
///
/// Every scan point integrates `config.num_pulses` pulses. An ion's
/// excitation probability is scaled by a Lorentzian of width
/// [`effective_pl_linewidth`] around its transition, and its photons are
/// weighted by the fraction of its (Purcell-shortened) decay that lands in
/// the detection window.
pub fn simulate_pl_spectrum(
    ensemble: &[IonRecord],
    cavity: &CavityMode,
    scan: &SpectrumScan,
    config: &PulseSequenceConfig,
    detector: &DetectorModel,
    diffusion: &SpectralDiffusionModel,
    seed: u64,
) -> Result<PlSpectrum> {
    scan.validate()?;
    config.validate()?;
    detector.validate()?;

    struct Line {
        center: f64,
        fwhm: f64,
        brightness: f64,
    }
    let lines = ensemble
        .iter()
        .map(|ion| {
            let fwhm = effective_pl_linewidth(ion, cavity, diffusion, scan.measurement_duration)?;
            let lifetime = enhanced_lifetime(ion, cavity);
            Ok(Line {
                center: ion.center_frequency,
                fwhm,
                brightness: config.excitation_probability
                    * detector.efficiency
                    * config.capture_fraction(lifetime),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pulses = config.num_pulses as f64;
    let noise_floor = pulses * detector.noise_per_window(config);
    let expected: Vec<f64> = scan
        .laser_frequencies
        .iter()
        .map(|&f| {
            let signal: f64 = lines
                .iter()
                .map(|l| l.brightness * lorentzian_factor(f - l.center, l.fwhm))
                .sum();
            pulses * signal + noise_floor
        })
        .collect();
    let counts = expected
        .iter()
        .enumerate()
        .map(|(i, &mean)| sample_poisson(mean, &mut substream(seed, Purpose::ScanPoint, i as u64)))
        .collect();

    Ok(PlSpectrum {
        laser_frequencies: scan.laser_frequencies.clone(),
        counts,
        expected,
        noise_floor,
    })
}
