//! Runs one configured experiment and lays its result out as a dataset.

use ionsim_core::detection::{
    estimate_g2, g2_from_snr, simulate_hbt, simulate_pl_decay, simulate_pl_spectrum, simulate_stark_g2,
    simulate_stark_scan, triangular_waveform, DetectorModel, PulseSequenceConfig, SpectrumScan,
};
use ionsim_core::emitter::{
    enhanced_lifetime, fourier_limit_linewidth, IonRecord, SpectralDiffusionModel, StarkModel,
};
use ionsim_core::physics::{
    accessible_ion_count, line_density, local_field_correction, purcell_factor, sample_ensemble_with_mean,
    wavelength_nm_to_frequency, CavityMode, EnsembleSpec, FrequencyWindow, HostCrystal, InhomogeneousLine,
    IntensityRatioDistribution, Sideband,
};
use ionsim_core::spectroscopy::{
    extrapolate_zero_power, fit_hole, hole_power_series, observed_hole_width, simulate_2ppe, simulate_shb_scan,
    HoleBurnConfig, SpectroscopyModel,
};

use crate::config::{ExperimentConfig, Kind};
use crate::dataset::{format_float, CsvDataset};
use crate::error::{CliError, CliResult};

/// Most pulses a single run may simulate across all of its measurements.
pub const MAX_RUN_PULSES: u64 = 1_000_000_000;
/// Most scan points (summed over steps) of a single run.
pub const MAX_SCAN_POINTS: u64 = 10_000_000;

/// Simulates `cfg` and returns the dataset with `result.*` metadata but
/// without provenance lines; see [`finish`].
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<CsvDataset> {
    let ctx = Ctx { cfg };
    match cfg.kind {
        Kind::Purcell => ctx.purcell(),
        Kind::IonCount => ctx.ion_count(),
        Kind::PlDecay => ctx.pl_decay(),
        Kind::Hbt => ctx.hbt(),
        Kind::PlSpectrum => ctx.pl_spectrum(),
        Kind::StarkScan => ctx.stark_scan(),
        Kind::Shb => ctx.shb(),
        Kind::Echo => ctx.echo(),
    }
}

/// Appends seed, config hash and the canonical config to `ds`.
pub fn finish(mut ds: CsvDataset, cfg: &ExperimentConfig) -> CliResult<CsvDataset> {
    ds.validate()?;
    ds.meta("seed", cfg.seed);
    ds.meta("config_hash", cfg.hash());
    for line in cfg.canonical().lines().filter(|l| !l.is_empty()) {
        ds.meta("config", line);
    }
    Ok(ds)
}

/// `points` values evenly spaced over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `points` values evenly spaced in log over `[lo, hi]`.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), points).into_iter().map(f64::exp).collect()
}

fn poisson_sigma(counts: &[u64]) -> Vec<f64> {
    counts.iter().map(|&c| (c.max(1) as f64).sqrt()).collect()
}

fn as_f64(counts: &[u64]) -> Vec<f64> {
    counts.iter().map(|&c| c as f64).collect()
}

fn guard_pulses(total: u64) -> CliResult<()> {
    if total > MAX_RUN_PULSES {
        return Err(CliError::Resource(format!(
            "run would simulate {total} pulses, limit is {MAX_RUN_PULSES}"
        )));
    }
    Ok(())
}

fn guard_points(total: u64) -> CliResult<()> {
    if total > MAX_SCAN_POINTS {
        return Err(CliError::Resource(format!(
            "run would evaluate {total} scan points, limit is {MAX_SCAN_POINTS}"
        )));
    }
    Ok(())
}

fn usize_of(cfg: &ExperimentConfig, key: &str) -> CliResult<usize> {
    usize::try_from(cfg.integer(key)).map_err(|_| CliError::invalid(key, "too large"))
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
}

impl Ctx<'_> {
    fn core<T>(&self, r: ionsim_core::Result<T>) -> CliResult<T> {
        r.map_err(|e| CliError::from_core(e, Some(self.cfg)))
    }

    fn n(&self, key: &str) -> f64 {
        self.cfg.number(key)
    }

    fn cavity(&self) -> CliResult<CavityMode> {
        self.core(CavityMode::new(
            self.n("cavity.wavelength"),
            self.n("cavity.quality_factor"),
            self.n("cavity.mode_volume"),
        ))
    }

    fn host(&self) -> CliResult<HostCrystal> {
        self.core(HostCrystal::new(
            self.n("host.refractive_index"),
            self.n("host.site_density"),
            self.n("host.doping"),
            self.n("host.branching_ratio"),
        ))
    }

    fn ion(&self, cavity: &CavityMode) -> CliResult<IonRecord> {
        let ratio = self.n("ion.intensity_ratio");
        let fp = match self.cfg.number_or_auto("ion.purcell_factor") {
            Some(v) => v,
            None => self.core(purcell_factor(cavity, &self.host()?, ratio))?,
        };
        self.core(IonRecord::new(
            cavity.resonance_frequency() + self.n("ion.detuning"),
            self.n("ion.bare_lifetime"),
            fp,
            ratio,
        ))
    }

    fn pulses(&self, count: u64) -> CliResult<PulseSequenceConfig> {
        self.core(PulseSequenceConfig::new(
            self.n("pulses.period"),
            count,
            self.n("pulses.excitation_probability"),
            self.n("pulses.window"),
            self.n("pulses.blanking"),
        ))
    }

    fn detector(&self) -> CliResult<DetectorModel> {
        let channels = u8::try_from(self.cfg.integer("detector.channels")).unwrap_or(0);
        self.core(DetectorModel::new(
            self.n("detector.efficiency"),
            self.n("detector.dark_rate"),
            channels,
        ))
    }

    fn diffusion(&self) -> CliResult<SpectralDiffusionModel> {
        self.core(SpectralDiffusionModel::new(
            self.n("diffusion.intrinsic_width"),
            self.n("diffusion.max_added_width"),
            self.n("diffusion.rate"),
            self.n("diffusion.laser_jitter"),
        ))
    }

    fn line(&self) -> CliResult<InhomogeneousLine> {
        let center = wavelength_nm_to_frequency(self.n("line.center_wavelength"));
        let weight = self.n("line.sideband_weight");
        let sideband = (weight != 0.0).then(|| Sideband {
            center_frequency: center + self.n("line.sideband_offset"),
            fwhm: self.n("line.sideband_fwhm"),
            weight,
        });
        self.core(InhomogeneousLine::new(center, self.n("line.fwhm"), sideband))
    }

    fn purcell(&self) -> CliResult<CsvDataset> {
        let cavity = self.cavity()?;
        let host = self.host()?;
        let ratio = self.n("ion.intensity_ratio");
        let fp = self.core(purcell_factor(&cavity, &host, ratio))?;
        let ion = self.core(IonRecord::new(
            cavity.resonance_frequency(),
            self.n("ion.bare_lifetime"),
            fp,
            ratio,
        ))?;
        let lifetime = enhanced_lifetime(&ion, &cavity);
        let mut ds = CsvDataset::new(
            [
                "intensity_ratio",
                "purcell_factor",
                "local_field_correction",
                "cavity_linewidth (Hz)",
                "enhanced_lifetime (s)",
                "fourier_limit (Hz)",
            ]
            .map(String::from)
            .to_vec(),
        );
        ds.push_row(vec![
            ratio,
            fp,
            self.core(local_field_correction(host.refractive_index))?,
            cavity.linewidth(),
            lifetime,
            self.core(fourier_limit_linewidth(lifetime))?,
        ]);
        Ok(ds)
    }

    fn ion_count(&self) -> CliResult<CsvDataset> {
        let cavity = self.cavity()?;
        let host = self.host()?;
        let line = self.line()?;
        let points = usize_of(self.cfg, "sweep.points")?;
        guard_points(points as u64)?;
        let detunings = linspace(self.n("sweep.detuning_min"), self.n("sweep.detuning_max"), points);
        if self.cfg.word("output.view") == "density" {
            let density = detunings
                .iter()
                .map(|d| line_density(&line, line.center_frequency + d))
                .collect();
            return Ok(CsvDataset::from_columns(vec![
                ("detuning (Hz)", detunings),
                ("density (1/Hz)", density),
            ]));
        }

        let volume = self.n("sweep.cavity_volume");
        let width = self.cfg.number_or_auto("sweep.window_width").unwrap_or(cavity.linewidth());
        let count = |d: f64| {
            accessible_ion_count(volume, &host, &line, FrequencyWindow::new(line.center_frequency + d, width))
        };
        let counts = detunings
            .iter()
            .map(|&d| count(d))
            .collect::<ionsim_core::Result<Vec<f64>>>();
        let counts = self.core(counts)?;
        let peak = self.core(count(0.0))?;

        let mut ds = CsvDataset::new(vec!["detuning (Hz)".into(), "ion_count".into(), "in_band".into()]);
        let mut edges = Vec::new();
        for (target, label) in [(100.0, "n100"), (1.0, "n1")] {
            for (side, name) in [(-1.0, "negative"), (1.0, "positive")] {
                if peak > target {
                    let edge = self.core(crossing(&count, target, side * line.fwhm))?;
                    edges.push((format!("{label}_{name} (Hz)"), edge));
                }
            }
        }
        ds.columns.extend(edges.iter().map(|e| e.0.clone()));
        for (&d, &n) in detunings.iter().zip(&counts) {
            let mut row = vec![d, n, f64::from(u8::from((1.0..=100.0).contains(&n)))];
            row.extend(edges.iter().map(|e| e.1));
            ds.push_row(row);
        }
        ds.meta("result.window_width", format_float(width));
        ds.meta("result.peak_ion_count", format_float(peak));
        Ok(ds)
    }

    fn pl_decay(&self) -> CliResult<CsvDataset> {
        let cavity = self.cavity()?;
        let ion = self.ion(&cavity)?;
        let count = self.cfg.integer("pulses.count");
        guard_pulses(count)?;
        let pulses = self.pulses(count)?;
        let bins = usize_of(self.cfg, "histogram.bins")?;
        let h = self.core(simulate_pl_decay(&ion, &cavity, &pulses, &self.detector()?, bins, self.cfg.seed))?;
        let mut ds = CsvDataset::from_columns(vec![
            ("time (s)", h.bin_centers()),
            ("counts", as_f64(&h.counts)),
            ("counts_sigma", poisson_sigma(&h.counts)),
        ]);
        ds.meta("result.lifetime", format_float(enhanced_lifetime(&ion, &cavity)));
        Ok(ds)
    }

    fn hbt(&self) -> CliResult<CsvDataset> {
        let cavity = self.cavity()?;
        let ion = self.ion(&cavity)?;
        let count = self.cfg.integer("pulses.count");
        guard_pulses(count)?;
        let pulses = self.pulses(count)?;
        let run = self.core(simulate_hbt(
            &ion,
            &cavity,
            &pulses,
            &self.detector()?,
            self.cfg.integer("hbt.max_separation"),
            self.cfg.seed,
        ))?;
        let h = &run.histogram;
        let mut ds = CsvDataset::from_columns(vec![
            ("separation (pulses)", h.separations.iter().map(|&k| k as f64).collect()),
            ("coincidences", as_f64(&h.coincidences)),
            ("coincidences_sigma", poisson_sigma(&h.coincidences)),
            ("pulse_pairs", as_f64(&h.pulse_pairs)),
        ]);
        let snr = run.expected.snr;
        ds.meta("result.signal_per_window", format_float(run.expected.mean_signal_per_window));
        ds.meta("result.noise_per_window", format_float(run.expected.mean_noise_per_window));
        ds.meta("result.snr", format_float(snr));
        ds.meta("result.g2_from_snr", format_float(self.core(g2_from_snr(snr))?));
        if let Ok(g2) = estimate_g2(h) {
            ds.meta("result.g2_zero", format_float(g2.g2_zero));
            ds.meta("result.g2_sigma", format_float(g2.sigma));
        }
        Ok(ds)
    }

    fn scan(&self, reference: f64) -> CliResult<SpectrumScan> {
        let points = usize_of(self.cfg, "scan.points")?;
        Ok(SpectrumScan::linear(
            reference + self.n("scan.start"),
            reference + self.n("scan.stop"),
            points,
            self.n("scan.duration"),
        ))
    }

    fn pl_spectrum(&self) -> CliResult<CsvDataset> {
        let cavity = self.cavity()?;
        let f0 = cavity.resonance_frequency();
        let scan = self.scan(f0)?;
        let count = self.cfg.integer("pulses.count");
        let pulses = self.pulses(count)?;
        let mut meta = Vec::new();
        let ions = if self.cfg.word("output.view") == "single" {
            vec![self.ion(&cavity)?]
        } else {
            let width = self.cfg.number_or_auto("ensemble.window_width").unwrap_or(cavity.linewidth());
            let spec = EnsembleSpec {
                host: self.host()?,
                line: self.line()?,
                cavity,
                cavity_volume: self.n("ensemble.cavity_volume"),
                window: FrequencyWindow::new(f0, width),
                intensity_ratios: IntensityRatioDistribution::Uniform {
                    min: self.n("ensemble.intensity_min"),
                    max: self.n("ensemble.intensity_max"),
                },
                bare_lifetime: self.n("ion.bare_lifetime"),
            };
            let mean = match self.cfg.number_or_auto("ensemble.mean_ion_count") {
                Some(m) => m,
                None => self.core(spec.mean_ion_count())?,
            };
            meta.push(("result.mean_ion_count", format_float(mean)));
            self.core(sample_ensemble_with_mean(&spec, mean, self.cfg.seed))?
        };
        guard_points(scan.laser_frequencies.len() as u64 * ions.len().max(1) as u64)?;
        let s = self.core(simulate_pl_spectrum(
            &ions,
            &cavity,
            &scan,
            &pulses,
            &self.detector()?,
            &self.diffusion()?,
            self.cfg.seed,
        ))?;
        let mut ds = CsvDataset::from_columns(vec![
            ("detuning (Hz)", s.detunings(f0)),
            ("counts", as_f64(&s.counts)),
            ("counts_sigma", poisson_sigma(&s.counts)),
            ("expected", s.expected.clone()),
        ]);
        for (k, v) in meta {
            ds.meta(k, v);
        }
        ds.meta("result.ions", ions.len());
        ds.meta("result.noise_floor", format_float(s.noise_floor));
        ds.meta("result.peaks", s.count_peaks(5.0 * s.noise_floor, 30e6));
        Ok(ds)
    }

    fn stark_scan(&self) -> CliResult<CsvDataset> {
        let cavity = self.cavity()?;
        let ion = self.ion(&cavity)?;
        let stark = self.core(StarkModel::new(
            self.n("stark.coefficient"),
            self.n("stark.electrode_separation"),
            self.n("stark.sign"),
        ))?;
        let (low, high) = (self.n("waveform.low"), self.n("waveform.high"));
        let detector = self.detector()?;

        if self.cfg.word("output.view") == "g2" {
            if detector.num_channels != 2 {
                return Err(CliError::invalid("detector.channels", "the g2 view needs 2 channels"));
            }
            let points = usize_of(self.cfg, "g2.points")?;
            let count = self.cfg.integer("g2.pulses");
            guard_pulses(count.saturating_mul(points as u64))?;
            let voltages = linspace(low, high, points);
            let g2 = self.core(simulate_stark_g2(
                &ion,
                &cavity,
                &stark,
                &voltages,
                &self.pulses(count)?,
                &detector,
                self.cfg.integer("hbt.max_separation"),
                self.cfg.seed,
            ))?;
            return Ok(CsvDataset::from_columns(vec![
                ("field (V/m)", g2.iter().map(|p| p.0).collect()),
                ("g2", g2.iter().map(|p| p.1.g2_zero).collect()),
                ("g2_sigma", g2.iter().map(|p| p.1.sigma).collect()),
                ("voltage (V)", voltages),
            ]));
        }

        let waveform = triangular_waveform(
            low,
            high,
            usize_of(self.cfg, "waveform.steps_per_leg")?,
            usize_of(self.cfg, "waveform.cycles")?,
        );
        let scan = self.scan(ion.center_frequency)?;
        guard_points(waveform.len() as u64 * scan.laser_frequencies.len() as u64)?;
        let run = self.core(simulate_stark_scan(
            &ion,
            &cavity,
            &stark,
            &waveform,
            &scan,
            &self.pulses(self.cfg.integer("pulses.count"))?,
            &detector,
            &self.diffusion()?,
            self.cfg.seed,
        ))?;

        if self.cfg.word("output.view") == "map" {
            let mut ds = CsvDataset::new(vec![
                "detuning (Hz)".into(),
                "counts".into(),
                "step".into(),
                "voltage (V)".into(),
            ]);
            for (i, step) in run.steps.iter().enumerate() {
                for (d, &c) in step.spectrum.detunings(ion.center_frequency).into_iter().zip(&step.spectrum.counts) {
                    ds.push_row(vec![d, c as f64, i as f64, step.voltage]);
                }
            }
            return Ok(ds);
        }

        let centers = self.core(run.peak_centers(ion.center_frequency))?;
        Ok(CsvDataset::from_columns(vec![
            ("field (V/m)", centers.iter().map(|c| c.field).collect()),
            ("shift (Hz)", centers.iter().map(|c| c.center).collect()),
            ("shift_sigma (Hz)", centers.iter().map(|c| c.sigma).collect()),
            ("voltage (V)", centers.iter().map(|c| c.voltage).collect()),
            ("true_shift (Hz)", run.steps.iter().map(|s| s.true_shift).collect()),
        ]))
    }

    fn spectroscopy_model(&self) -> CliResult<SpectroscopyModel> {
        let model = SpectroscopyModel {
            homogeneous_width: self.n("model.homogeneous_width"),
            saturation_power: self.n("model.saturation_power"),
            ..SpectroscopyModel::high_field()
        };
        self.core(model.validate())?;
        Ok(model)
    }

    fn shb(&self) -> CliResult<CsvDataset> {
        let model = self.spectroscopy_model()?;
        let diffusion = self.diffusion()?;
        let noise = self.n("noise.level");
        let base = HoleBurnConfig {
            burn_power: self.n("burn.power"),
            burn_duration: self.n("burn.duration"),
            read_delay: self.n("burn.read_delay"),
            chirp_span: self.n("burn.chirp_span"),
            chirp_duration: self.n("burn.chirp_duration"),
            num_samples: usize_of(self.cfg, "burn.samples")?,
        };
        let points = usize_of(self.cfg, "series.points")?;
        guard_points(base.num_samples as u64 * points.max(1) as u64)?;
        let seed = self.cfg.seed;

        match self.cfg.word("output.view") {
            "power-series" => {
                let powers = logspace(self.n("series.power_min"), self.n("series.power_max"), points);
                let series = self.core(hole_power_series(&model, &base, &powers, &diffusion, noise, seed))?;
                let truth = powers
                    .iter()
                    .map(|&p| observed_hole_width(&model, &HoleBurnConfig { burn_power: p, ..base }, &diffusion))
                    .collect::<ionsim_core::Result<Vec<f64>>>();
                let mut ds = CsvDataset::from_columns(vec![
                    ("burn_power", powers),
                    ("width (Hz)", series.iter().map(|p| p.width).collect()),
                    ("width_sigma (Hz)", series.iter().map(|p| p.sigma.unwrap_or(0.0)).collect()),
                    ("model_width (Hz)", self.core(truth)?),
                ]);
                if let Ok(z) = extrapolate_zero_power(&series) {
                    ds.meta("result.zero_power_width", format_float(z.zero_power_width));
                    ds.meta("result.zero_power_width_sigma", format_float(z.zero_power_width_sigma));
                }
                Ok(ds)
            }
            "delay-series" => {
                let delays = logspace(self.n("series.delay_min"), self.n("series.delay_max"), points);
                let mut ds = CsvDataset::new(vec![
                    "read_delay (s)".into(),
                    "width (Hz)".into(),
                    "width_sigma (Hz)".into(),
                    "model_width (Hz)".into(),
                ]);
                for (i, &delay) in delays.iter().enumerate() {
                    let config = HoleBurnConfig { read_delay: delay, ..base };
                    let trace = self.core(simulate_shb_scan(&model, &config, &diffusion, noise, seed.wrapping_add(i as u64)))?;
                    let r = self.core(fit_hole(&trace))?;
                    if !r.converged {
                        return Err(CliError::Analysis(format!(
                            "hole at delay {delay} s: {}",
                            r.diagnostic.unwrap_or_default()
                        )));
                    }
                    ds.push_row(vec![delay, r.parameters[2], r.standard_errors[2], trace.hole_width]);
                }
                Ok(ds)
            }
            _ => {
                let trace = self.core(simulate_shb_scan(&model, &base, &diffusion, noise, seed))?;
                let mut ds = CsvDataset::from_columns(vec![
                    ("detuning (Hz)", trace.detunings.clone()),
                    ("transmission", trace.transmission.clone()),
                ]);
                ds.meta("result.hole_width", format_float(trace.hole_width));
                Ok(ds)
            }
        }
    }

    fn echo(&self) -> CliResult<CsvDataset> {
        let model = SpectroscopyModel {
            memory_time: self.n("model.memory_time"),
            mims_exponent: self.n("model.mims_exponent"),
            echo_amplitude: self.n("model.echo_amplitude"),
            ..SpectroscopyModel::high_field()
        };
        let points = usize_of(self.cfg, "delays.points")?;
        guard_points(points as u64)?;
        let delays = linspace(self.n("delays.min"), self.n("delays.max"), points);
        let noise = self.n("noise.level");
        let echo = self.core(simulate_2ppe(&model, &delays, noise, self.cfg.seed))?;
        let sigma = echo.intensities.iter().map(|v| (noise * v).abs()).collect();
        Ok(CsvDataset::from_columns(vec![
            ("t12 (s)", echo.delays),
            ("intensity", echo.intensities),
            ("intensity_sigma", sigma),
        ]))
    }
}

/// Detuning on the side given by the sign of `step` where `count` falls to
/// `target`, by bracketing and bisection.
fn crossing(count: &impl Fn(f64) -> ionsim_core::Result<f64>, target: f64, step: f64) -> ionsim_core::Result<f64> {
    let (mut inner, mut outer) = (0.0, step);
    for _ in 0..60 {
        if count(outer)? < target {
            break;
        }
        inner = outer;
        outer *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (inner + outer);
        if mid == inner || mid == outer {
            break;
        }
        if count(mid)? >= target {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    Ok(0.5 * (inner + outer))
}
