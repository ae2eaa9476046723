use ionsim_core::detection::{
    generate_events, simulate_hbt, simulate_pl_decay, simulate_pl_spectrum, simulate_stark_scan,
    triangular_waveform, DetectorModel, EmitterSource, PulseSequenceConfig, SpectrumScan,
};
use ionsim_core::emitter::{effective_pl_linewidth, IonRecord, SpectralDiffusionModel, StarkModel};
use ionsim_core::fitting::{exponential_decay, fit, linear_model, lorentzian_peak, Dataset, FitOptions};
use ionsim_core::physics::{
    sample_ensemble_with_mean, CavityMode, EnsembleSpec, FrequencyWindow, HostCrystal, InhomogeneousLine,
    IntensityRatioDistribution,
};

fn cavity() -> CavityMode {
    CavityMode::new(1533.8952, 5e4, 0.09).unwrap()
}

/// Poisson-weighted fit of integer counts.
fn count_data(x: Vec<f64>, counts: &[u64]) -> Dataset {
    let y: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let sigma = y.iter().map(|&c| c.max(1.0).sqrt()).collect();
    Dataset::weighted(x, y, sigma).unwrap()
}

#[test]
fn mean_counts_converge_to_closed_form() {
    let cfg = PulseSequenceConfig::new(100e-6, 1_000_000, 0.6, 90e-6, 5e-6).unwrap();
    let det = DetectorModel::new(0.3, 500.0, 1).unwrap();
    let tau: f64 = 20e-6;
    let src = [EmitterSource { lifetime: tau, excitation_probability: 0.6 }];
    let stream = generate_events(&src, &cfg, &det, 2024).unwrap();

    let capture = (-5e-6 / tau).exp() - (-95e-6 / tau).exp();
    let expected = 0.3 * 0.6 * capture + 500.0 * 90e-6;
    let n = cfg.num_pulses as f64;
    let mean = stream.events.len() as f64 / n;
    let sigma = (expected / n).sqrt();
    assert!((mean - expected).abs() < 4.0 * sigma, "{mean} vs {expected} ± {sigma}");
}

#[test]
fn zero_noise_single_ion_never_coincides() {
    let c = cavity();
    let ion = IonRecord::new(c.resonance_frequency(), 1.8e-3, 143.0, 0.45).unwrap();
    let cfg = PulseSequenceConfig::new(100e-6, 1_000_000, 0.9, 90e-6, 5e-6).unwrap();
    let det = DetectorModel::new(0.8, 0.0, 2).unwrap();
    let run = simulate_hbt(&ion, &c, &cfg, &det, 5, 17).unwrap();
    let zero = run.histogram.separations.iter().position(|&k| k == 0).unwrap();
    assert_eq!(run.histogram.coincidences[zero], 0);
    assert!(run.histogram.coincidences.iter().sum::<u64>() > 0);
}

#[test]
fn decay_histogram_fit_recovers_lifetime() {
    let c = cavity();
    let tau = 133.8e-6;
    let ion = IonRecord::new(c.resonance_frequency(), tau, 0.0, 0.0).unwrap();
    let cfg = PulseSequenceConfig::new(600e-6, 1_000_000, 0.5, 500e-6, 0.0).unwrap();
    let det = DetectorModel::new(0.1, 12.7, 1).unwrap();
    let h = simulate_pl_decay(&ion, &c, &cfg, &det, 100, 7).unwrap();
    let r = fit(&exponential_decay(), &count_data(h.bin_centers(), &h.counts), &FitOptions::default()).unwrap();
    assert!(r.converged);
    let (got, err) = (r.parameters[1], r.standard_errors[1]);
    assert!((got - tau).abs() < 3.0 * err, "{got} ± {err}");
}

#[test]
fn single_ion_spectrum_width_matches_linewidth() {
    let c = cavity();
    let f0 = c.resonance_frequency();
    let ion = IonRecord::new(f0, 1.8e-3, 143.0, 0.45).unwrap();
    let diffusion = SpectralDiffusionModel::pl_default();
    let scan = SpectrumScan::linear(f0 - 100e6, f0 + 100e6, 201, 60.0);
    let cfg = PulseSequenceConfig::new(100e-6, 60_000, 0.5, 90e-6, 5e-6).unwrap();
    let det = DetectorModel::new(0.1, 12.7, 1).unwrap();
    let s = simulate_pl_spectrum(&[ion], &c, &scan, &cfg, &det, &diffusion, 11).unwrap();
    let r = fit(&lorentzian_peak(), &count_data(s.detunings(f0), &s.counts), &FitOptions::default()).unwrap();
    assert!(r.converged);
    let want = effective_pl_linewidth(&ion, &c, &diffusion, 60.0).unwrap();
    let (got, err) = (r.parameters[2], r.standard_errors[2]);
    assert!((got - want).abs() < 3.0 * err, "{got} ± {err} vs {want}");
    assert!(r.parameters[1].abs() < 3.0 * r.standard_errors[1]);
}

#[test]
fn ensemble_spectrum_shows_several_peaks() {
    let c = cavity();
    let f0 = c.resonance_frequency();
    let spec = EnsembleSpec {
        host: HostCrystal::erbium_lithium_niobate(50.0).unwrap(),
        line: InhomogeneousLine::gaussian(ionsim_core::physics::wavelength_nm_to_frequency(1531.8), 145.3e9).unwrap(),
        cavity: c,
        cavity_volume: 4.5e-19,
        window: FrequencyWindow::new(f0, c.linewidth()),
        intensity_ratios: IntensityRatioDistribution::Uniform { min: 0.0, max: 0.45 },
        bare_lifetime: 1.8e-3,
    };
    let ions = sample_ensemble_with_mean(&spec, 12.7, 5).unwrap();
    let (lo, hi) = spec.window.bounds();
    let scan = SpectrumScan::linear(lo, hi, 1951, 60.0);
    let cfg = PulseSequenceConfig::new(100e-6, 60_000, 0.5, 90e-6, 5e-6).unwrap();
    let det = DetectorModel::new(0.1, 12.7, 1).unwrap();
    let s = simulate_pl_spectrum(&ions, &c, &scan, &cfg, &det, &SpectralDiffusionModel::pl_default(), 5).unwrap();
    let peaks = s.count_peaks(5.0 * s.noise_floor, 30e6);
    assert!(peaks <= ions.len());
    assert!((3..=30).contains(&peaks), "{peaks} peaks from {} ions", ions.len());
}

#[test]
fn stark_ramp_is_linear_and_returns_home() {
    let c = cavity();
    let f0 = c.resonance_frequency();
    let ion = IonRecord::new(f0 + 500e6, 1.8e-3, 143.0, 0.45).unwrap();
    let stark = StarkModel::from_khz_per_v_per_mm(182.9, 2e-3).unwrap();
    let waveform = triangular_waveform(0.0, 640.0, 8, 1);
    let scan = SpectrumScan::linear(ion.center_frequency - 40e6, ion.center_frequency + 100e6, 141, 60.0);
    let cfg = PulseSequenceConfig::new(100e-6, 60_000, 0.5, 90e-6, 5e-6).unwrap();
    let det = DetectorModel::new(0.1, 12.7, 1).unwrap();
    let run = simulate_stark_scan(
        &ion,
        &c,
        &stark,
        &waveform,
        &scan,
        &cfg,
        &det,
        &SpectralDiffusionModel::pl_default(),
        21,
    )
    .unwrap();
    let centers = run.peak_centers(ion.center_frequency).unwrap();
    let peak = centers.iter().map(|p| p.center).fold(f64::NEG_INFINITY, f64::max);
    assert!((peak - 58.53e6).abs() < 2e6, "{peak}");

    let data = Dataset::weighted(
        centers.iter().map(|p| p.field).collect(),
        centers.iter().map(|p| p.center).collect(),
        centers.iter().map(|p| p.sigma).collect(),
    )
    .unwrap();
    let r = fit(&linear_model(), &data, &FitOptions::default()).unwrap();
    assert!((r.parameters[0] / 182.9 - 1.0).abs() < 0.02, "slope {}", r.parameters[0]);

    let first = centers.first().unwrap();
    let last = centers.last().unwrap();
    let diff = last.center - first.center;
    assert!(diff.abs() < 3.0 * first.sigma.hypot(last.sigma), "{diff}");
    assert_eq!(run.steps.first().unwrap().true_shift, run.steps.last().unwrap().true_shift);
}
