use super::{simulate_hbt, simulate_pl_spectrum, DetectorModel, G2Estimate, PlSpectrum, PulseSequenceConfig, SpectrumScan};
use crate::detection::estimate_g2;
use crate::emitter::{stark_shift, IonRecord, SpectralDiffusionModel, StarkModel};
use crate::error::{ensure, Error, Result};
use crate::fitting::{fit, lorentzian_peak, Dataset, FitOptions};
use crate::physics::CavityMode;
use crate::rng::{derive_seed, Purpose};

/// One voltage step of a Stark scan.
#[derive(Debug, Clone, PartialEq)]
pub struct StarkStep {
    /// V.
    pub voltage: f64,
    /// V/m.
    pub field: f64,
    /// Shift applied to the ion, Hz.
    pub true_shift: f64,
    pub spectrum: PlSpectrum,
}

/// Fitted line center at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakCenter {
    pub voltage: f64,
    pub field: f64,
    /// Hz relative to the reference passed to [`StarkScan::peak_centers`].
    pub center: f64,
    pub sigma: f64,
}

/// Spectra recorded while the electrode voltage follows a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct StarkScan {
    pub steps: Vec<StarkStep>,
}

impl StarkScan {
    /// Step × frequency count map.
    pub fn count_map(&self) -> Vec<Vec<u64>> {
        self.steps.iter().map(|s| s.spectrum.counts.clone()).collect()
    }

    /// Lorentzian line center of every step, relative to `reference`.
    pub fn peak_centers(&self, reference: f64) -> Result<Vec<PeakCenter>> {
        self.steps
            .iter()
            .map(|step| {
                let x = step.spectrum.detunings(reference);
                let y: Vec<f64> = step.spectrum.counts.iter().map(|&c| c as f64).collect();
                let sigma = y.iter().map(|&c| c.max(1.0).sqrt()).collect();
                let result = fit(&lorentzian_peak(), &Dataset::weighted(x, y, sigma)?, &FitOptions::default())?;
                if !result.converged {
                    return Err(Error::Fit(format!(
                        "line center at {} V: {}",
                        step.voltage,
                        result.diagnostic.unwrap_or_default()
                    )));
                }
                Ok(PeakCenter {
                    voltage: step.voltage,
                    field: step.field,
                    center: result.parameters[1],
                    sigma: result.standard_errors[1],
                })
            })
            .collect()
    }
}

/// Triangular waveform from `low` to `high` and back, `cycles` times, with
/// `steps_per_leg` increments on each leg.
pub fn triangular_waveform(low: f64, high: f64, steps_per_leg: usize, cycles: usize) -> Vec<f64> {
    let n = steps_per_leg.max(1);
    let mut out = vec![low];
    for _ in 0..cycles {
        out.extend((1..=n).map(|i| low + (high - low) * i as f64 / n as f64));
        out.extend((1..=n).map(|i| high - (high - low) * i as f64 / n as f64));
    }
    out
}

/// PL spectra of `ion` at each voltage of `waveform`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_stark_scan(
    ion: &IonRecord,
    cavity: &CavityMode,
    stark: &StarkModel,
    waveform: &[f64],
    scan: &SpectrumScan,
    config: &PulseSequenceConfig,
    detector: &DetectorModel,
    diffusion: &SpectralDiffusionModel,
    seed: u64,
) -> Result<StarkScan> {
    ensure(!waveform.is_empty(), "voltage_waveform", "waveform is empty")?;
    let steps = waveform
        .iter()
        .enumerate()
        .map(|(i, &voltage)| {
            let shift = stark_shift(stark, voltage);
            let spectrum = simulate_pl_spectrum(
                &[ion.shifted(shift)],
                cavity,
                scan,
                config,
                detector,
                diffusion,
                derive_seed(seed, Purpose::StarkStep, i as u64),
            )?;
            Ok(StarkStep {
                voltage,
                field: stark.field(voltage),
                true_shift: shift,
                spectrum,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StarkScan { steps })
}

/// g²(0) of the Stark-shifted ion at each voltage.
#[allow(clippy::too_many_arguments)]
pub fn simulate_stark_g2(
    ion: &IonRecord,
    cavity: &CavityMode,
    stark: &StarkModel,
    voltages: &[f64],
    config: &PulseSequenceConfig,
    detector: &DetectorModel,
    max_separation: u64,
    seed: u64,
) -> Result<Vec<(f64, G2Estimate)>> {
    ensure(!voltages.is_empty(), "voltages", "no voltages given")?;
    voltages
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let shifted = ion.shifted(stark_shift(stark, v));
            let run = simulate_hbt(
                &shifted,
                cavity,
                config,
                detector,
                max_separation,
                derive_seed(seed, Purpose::StarkStep, 1 << 32 | i as u64),
            )?;
            Ok((stark.field(v), estimate_g2(&run.histogram)?))
        })
        .collect()
}
