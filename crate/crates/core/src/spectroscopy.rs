//! Ensemble spectroscopy: spectral-hole widths with power broadening and
//! spectral diffusion, zero-power extrapolation, and two-pulse photon-echo
//! decay.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use crate::emitter::{diffusion_width, SpectralDiffusionModel};
use crate::error::{ensure, Error, Result};
use crate::fitting::{fit, hole_power_model, lorentzian_peak, Dataset, FitOptions, FitResult};
use crate::rng::{substream, Purpose};

/// Homogeneous and echo parameters of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectroscopyModel {
    /// Γ_hom, Hz.
    pub homogeneous_width: f64,
    /// P_sat, in the units used for burn powers.
    pub saturation_power: f64,
    /// T_M, s.
    pub memory_time: f64,
    pub mims_exponent: f64,
    pub echo_amplitude: f64,
}

impl SpectroscopyModel {
    pub fn new(
        homogeneous_width: f64,
        saturation_power: f64,
        memory_time: f64,
        mims_exponent: f64,
        echo_amplitude: f64,
    ) -> Result<Self> {
        let m = Self {
            homogeneous_width,
            saturation_power,
            memory_time,
            mims_exponent,
            echo_amplitude,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.homogeneous_width > 0.0 && self.homogeneous_width.is_finite(),
            "homogeneous_width",
            format!("must be positive, got {}", self.homogeneous_width),
        )?;
        ensure(
            self.saturation_power > 0.0 && self.saturation_power.is_finite(),
            "saturation_power",
            format!("must be positive, got {}", self.saturation_power),
        )?;
        ensure(
            self.memory_time > 0.0 && self.memory_time.is_finite(),
            "memory_time",
            format!("must be positive, got {}", self.memory_time),
        )?;
        ensure(
            self.mims_exponent >= 1.0 && self.mims_exponent.is_finite(),
            "mims_exponent",
            format!("must be at least 1, got {}", self.mims_exponent),
        )?;
        ensure(self.echo_amplitude.is_finite(), "echo_amplitude", "must be finite")
    }

    /// Ensemble at 1 T: 61 kHz homogeneous width (holes of 122 kHz at zero
    /// power), powers normalized to P_sat, and the echo decay with
    /// T_M = 89.7 µs, m = 2.023.
    pub fn high_field() -> Self {
        Self {
            homogeneous_width: 61e3,
            saturation_power: 1.0,
            memory_time: 89.7e-6,
            mims_exponent: 2.023,
            echo_amplitude: 1.0,
        }
    }

    /// Ensemble at zero field: 1.51 MHz homogeneous width.
    pub fn zero_field() -> Self {
        Self {
            homogeneous_width: 1.51e6,
            ..Self::high_field()
        }
    }
}

/// Waiting-time broadening of holes at 1 T: 122 kHz at short delay,
/// saturating 640 kHz more at 60 s⁻¹.
pub fn high_field_hole_diffusion() -> SpectralDiffusionModel {
    SpectralDiffusionModel {
        intrinsic_width: 122e3,
        max_added_width: 640e3,
        rate: 60.0,
        laser_jitter_width: 0.0,
    }
}

/// Burn/read sequence of a hole-burning measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleBurnConfig {
    /// Units of the model's P_sat.
    pub burn_power: f64,
    /// s.
    pub burn_duration: f64,
    /// Delay between burning and reading, s.
    pub read_delay: f64,
    /// Hz.
    pub chirp_span: f64,
    /// s.
    pub chirp_duration: f64,
    /// Samples of the read trace across the chirp.
    pub num_samples: usize,
}

impl HoleBurnConfig {
    /// 50 µs burn, read after 380 µs with a 500 µs chirp over 10 MHz.
    pub fn standard(burn_power: f64) -> Self {
        Self {
            burn_power,
            burn_duration: 50e-6,
            read_delay: 380e-6,
            chirp_span: 10e6,
            chirp_duration: 500e-6,
            num_samples: 2001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("burn_power", self.burn_power),
            ("burn_duration", self.burn_duration),
            ("read_delay", self.read_delay),
            ("chirp_span", self.chirp_span),
            ("chirp_duration", self.chirp_duration),
        ] {
            ensure(v > 0.0 && v.is_finite(), name, format!("must be positive, got {v}"))?;
        }
        ensure(self.num_samples >= 3, "num_samples", "at least 3 samples are required")
    }
}

/// `Γ_hom (1 + sqrt(1 + P/P_sat))`, Hz.
pub fn hole_width(power: f64, model: &SpectroscopyModel) -> Result<f64> {
    ensure(power >= 0.0, "burn_power", format!("must be non-negative, got {power}"))?;
    Ok(model.homogeneous_width * (1.0 + (1.0 + power / model.saturation_power).sqrt()))
}

/// Width of the hole seen after `config.read_delay`, Hz.
pub fn observed_hole_width(
    model: &SpectroscopyModel,
    config: &HoleBurnConfig,
    diffusion: &SpectralDiffusionModel,
) -> Result<f64> {
    Ok(hole_width(config.burn_power, model)? + diffusion_width(diffusion, config.read_delay)?
        - diffusion.intrinsic_width)
}

/// Read-pulse transmission across the chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct ShbTrace {
    /// Read detuning from the burn frequency, Hz.
    pub detunings: Vec<f64>,
    /// Relative transmission increase; 1 at the hole center.
    pub transmission: Vec<f64>,
    /// FWHM of the underlying hole, Hz.
    pub hole_width: f64,
}

/// Lorentzian hole of unit depth on the chirp grid plus Gaussian noise of
/// standard deviation `noise_level`.
pub fn simulate_shb_scan(
    model: &SpectroscopyModel,
    config: &HoleBurnConfig,
    diffusion: &SpectralDiffusionModel,
    noise_level: f64,
    seed: u64,
) -> Result<ShbTrace> {
    model.validate()?;
    config.validate()?;
    ensure(
        noise_level >= 0.0 && noise_level.is_finite(),
        "noise_level",
        format!("must be non-negative, got {noise_level}"),
    )?;
    let width = observed_hole_width(model, config, diffusion)?;
    ensure(
        config.chirp_span > width,
        "chirp_span",
        format!("{} Hz chirp is narrower than the {} Hz hole", config.chirp_span, width),
    )?;
    let mut rng = substream(seed, Purpose::HoleBurn, 0);
    let n = config.num_samples;
    let step = config.chirp_span / (n - 1) as f64;
    let detunings: Vec<f64> = (0..n).map(|i| -0.5 * config.chirp_span + i as f64 * step).collect();
    let transmission = detunings
        .iter()
        .map(|&d| {
            let u = 2.0 * d / width;
            let noise: f64 = StandardNormal.sample(&mut rng);
            1.0 / (1.0 + u * u) + noise_level * noise
        })
        .collect();
    Ok(ShbTrace {
        detunings,
        transmission,
        hole_width: width,
    })
}

/// Lorentzian fit of a hole trace.
pub fn fit_hole(trace: &ShbTrace) -> Result<FitResult> {
    let data = Dataset::new(trace.detunings.clone(), trace.transmission.clone())?;
    fit(&lorentzian_peak(), &data, &FitOptions::default())
}

/// Measured hole width at one burn power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleWidthPoint {
    pub power: f64,
    /// Hz.
    pub width: f64,
    /// One-sigma uncertainty of `width`, if known.
    pub sigma: Option<f64>,
}

/// Simulates and fits a hole at each burn power.
pub fn hole_power_series(
    model: &SpectroscopyModel,
    base: &HoleBurnConfig,
    powers: &[f64],
    diffusion: &SpectralDiffusionModel,
    noise_level: f64,
    seed: u64,
) -> Result<Vec<HoleWidthPoint>> {
    powers
        .iter()
        .enumerate()
        .map(|(i, &power)| {
            let config = HoleBurnConfig { burn_power: power, ..*base };
            let trace = simulate_shb_scan(model, &config, diffusion, noise_level, seed.wrapping_add(i as u64))?;
            let result = fit_hole(&trace)?;
            if !result.converged {
                return Err(Error::Fit(format!(
                    "hole at power {power}: {}",
                    result.diagnostic.unwrap_or_default()
                )));
            }
            Ok(HoleWidthPoint {
                power,
                width: result.parameters[2],
                sigma: Some(result.standard_errors[2]),
            })
        })
        .collect()
}

/// Result of fitting the power-broadening law.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroPowerFit {
    pub homogeneous_width: f64,
    pub homogeneous_width_sigma: f64,
    pub saturation_power: f64,
    pub saturation_power_sigma: f64,
    /// `2 Γ_hom`, Hz.
    pub zero_power_width: f64,
    pub zero_power_width_sigma: f64,
    pub fit: FitResult,
}

/// Fits `Γ_hom (1 + sqrt(1 + P/P_sat))` to measured widths. Points carrying
/// a `sigma` are weighted by it; it must then be given for all of them.
pub fn extrapolate_zero_power(points: &[HoleWidthPoint]) -> Result<ZeroPowerFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "{} points cannot constrain the power-broadening law",
            points.len()
        )));
    }
    let lo = points.iter().map(|p| p.power).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.power).fold(f64::NEG_INFINITY, f64::max);
    ensure(lo >= 0.0, "burn_power", "powers must be non-negative")?;
    if hi == lo {
        return Err(Error::Fit("all points share the same burn power".into()));
    }
    ensure(
        lo == 0.0 || hi >= 10.0 * lo * (1.0 - 1e-9),
        "burn_power",
        "powers must span at least one decade",
    )?;

    let x: Vec<f64> = points.iter().map(|p| p.power).collect();
    let y: Vec<f64> = points.iter().map(|p| p.width).collect();
    let data = match points.iter().map(|p| p.sigma).collect::<Option<Vec<f64>>>() {
        Some(sigma) => Dataset::weighted(x, y, sigma)?,
        None => {
            ensure(
                points.iter().all(|p| p.sigma.is_none()),
                "sigma",
                "give an uncertainty for every point or for none",
            )?;
            Dataset::new(x, y)?
        }
    };
    let result = fit(&hole_power_model(), &data, &FitOptions::default())?;
    if !result.converged {
        return Err(Error::Fit(result.diagnostic.unwrap_or_else(|| "no convergence".into())));
    }
    let (g, gs) = (result.parameters[0], result.standard_errors[0]);
    Ok(ZeroPowerFit {
        homogeneous_width: g,
        homogeneous_width_sigma: gs,
        saturation_power: result.parameters[1],
        saturation_power_sigma: result.standard_errors[1],
        zero_power_width: 2.0 * g,
        zero_power_width_sigma: 2.0 * gs,
        fit: result,
    })
}

/// Echo intensity `I₀ exp(−2 (2 t₁₂ / T_M)^m)`.
pub fn mims_decay(t12: f64, model: &SpectroscopyModel) -> Result<f64> {
    ensure(t12 >= 0.0, "t12", format!("must be non-negative, got {t12}"))?;
    Ok(model.echo_amplitude * (-2.0 * (2.0 * t12 / model.memory_time).powf(model.mims_exponent)).exp())
}

/// Echo intensities against pulse separation.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoDecay {
    /// t₁₂, s.
    pub delays: Vec<f64>,
    pub intensities: Vec<f64>,
}

/// Two-pulse echo decay with multiplicative log-normal noise `exp(σ z)`.
pub fn simulate_2ppe(model: &SpectroscopyModel, delays: &[f64], noise_level: f64, seed: u64) -> Result<EchoDecay> {
    model.validate()?;
    ensure(!delays.is_empty(), "delays", "no delays given")?;
    ensure(delays[0] > 0.0, "delays", "delays must be positive")?;
    ensure(
        delays.windows(2).all(|w| w[1] > w[0]),
        "delays",
        "delays must be strictly increasing",
    )?;
    ensure(
        noise_level >= 0.0 && noise_level.is_finite(),
        "noise_level",
        format!("must be non-negative, got {noise_level}"),
    )?;
    let mut rng = substream(seed, Purpose::Echo, 0);
    let intensities = delays
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            Ok(mims_decay(t, model)? * (noise_level * z).exp())
        })
        .collect::<Result<_>>()?;
    Ok(EchoDecay {
        delays: delays.to_vec(),
        intensities,
    })
}

/// `1 / (π T_M)`, Hz.
pub fn homogeneous_from_memory_time(memory_time: f64) -> Result<f64> {
    ensure(
        memory_time > 0.0,
        "memory_time",
        format!("must be positive, got {memory_time}"),
    )?;
    Ok(1.0 / (PI * memory_time))
}
