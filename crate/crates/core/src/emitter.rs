//! Per-ion dynamics: Purcell-modified lifetime, Fourier-limited linewidth,
//! linear Stark shift and phenomenological spectral diffusion.

use std::f64::consts::PI;

use crate::error::{ensure, Result};
use crate::physics::CavityMode;

/// One emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonRecord {
    /// Optical transition frequency, Hz.
    pub center_frequency: f64,
    /// Excited-state lifetime without cavity, s.
    pub bare_lifetime: f64,
    /// Purcell factor at the ion's location (branching ratio and local field
    /// correction included), evaluated on cavity resonance.
    pub purcell_factor: f64,
    /// |E/E_max|² at the ion's location.
    pub intensity_ratio: f64,
}

impl IonRecord {
    pub fn new(
        center_frequency: f64,
        bare_lifetime: f64,
        purcell_factor: f64,
        intensity_ratio: f64,
    ) -> Result<Self> {
        ensure(center_frequency.is_finite(), "center_frequency", "must be finite")?;
        ensure(
            bare_lifetime > 0.0 && bare_lifetime.is_finite(),
            "bare_lifetime",
            format!("must be positive, got {bare_lifetime}"),
        )?;
        ensure(
            purcell_factor >= 0.0 && purcell_factor.is_finite(),
            "purcell_factor",
            format!("must be non-negative, got {purcell_factor}"),
        )?;
        ensure(
            (0.0..=1.0).contains(&intensity_ratio),
            "intensity_ratio",
            format!("must lie in [0, 1], got {intensity_ratio}"),
        )?;
        Ok(Self {
            center_frequency,
            bare_lifetime,
            purcell_factor,
            intensity_ratio,
        })
    }

    /// The same ion with its transition shifted by `shift` Hz.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            center_frequency: self.center_frequency + shift,
            ..*self
        }
    }
}

/// Lorentzian cavity weight `1 / (1 + (2δ/Δf)²)` at detuning `δ`.
pub fn cavity_spectral_weight(cavity: &CavityMode, detuning: f64) -> f64 {
    let x = 2.0 * detuning / cavity.linewidth();
    1.0 / (1.0 + x * x)
}

/// Lifetime `T₁ / (1 + F_p·L(δ))` with `δ` the ion-cavity detuning.
pub fn enhanced_lifetime(ion: &IonRecord, cavity: &CavityMode) -> f64 {
    let weight = cavity_spectral_weight(cavity, ion.center_frequency - cavity.resonance_frequency());
    ion.bare_lifetime / (1.0 + ion.purcell_factor * weight)
}

/// Lifetime-limited linewidth `1 / (π T₁)`, Hz.
pub fn fourier_limit_linewidth(lifetime: f64) -> Result<f64> {
    ensure(
        lifetime > 0.0,
        "lifetime",
        format!("must be positive, got {lifetime}"),
    )?;
    Ok(1.0 / (PI * lifetime))
}

/// Linear DC Stark response of one ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkModel {
    /// Hz per (V/m).
    pub coefficient: f64,
    /// m.
    pub electrode_separation: f64,
    /// +1 or -1.
    pub sign: f64,
}

impl StarkModel {
    pub fn new(coefficient: f64, electrode_separation: f64, sign: f64) -> Result<Self> {
        ensure(coefficient.is_finite(), "coefficient", "must be finite")?;
        ensure(
            electrode_separation > 0.0 && electrode_separation.is_finite(),
            "electrode_separation",
            format!("must be positive, got {electrode_separation}"),
        )?;
        ensure(
            sign == 1.0 || sign == -1.0,
            "sign",
            format!("must be +1 or -1, got {sign}"),
        )?;
        Ok(Self {
            coefficient,
            electrode_separation,
            sign,
        })
    }

    /// Coefficient given in the customary kHz per (V/mm).
    pub fn from_khz_per_v_per_mm(khz_per_v_per_mm: f64, electrode_separation: f64) -> Result<Self> {
        Self::new(khz_per_v_per_mm, electrode_separation, 1.0)
    }

    /// Field between the electrodes at `voltage`, V/m.
    pub fn field(&self, voltage: f64) -> f64 {
        voltage / self.electrode_separation
    }
}

/// Transition shift at `voltage`, Hz.
pub fn stark_shift(model: &StarkModel, voltage: f64) -> f64 {
    model.sign * model.coefficient * model.field(voltage)
}

/// Saturating-exponential spectral diffusion plus laser jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDiffusionModel {
    /// Γ₀, Hz.
    pub intrinsic_width: f64,
    /// Γ_SD, Hz.
    pub max_added_width: f64,
    /// s⁻¹.
    pub rate: f64,
    /// Hz.
    pub laser_jitter_width: f64,
}

impl SpectralDiffusionModel {
    pub fn new(
        intrinsic_width: f64,
        max_added_width: f64,
        rate: f64,
        laser_jitter_width: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("intrinsic_width", intrinsic_width),
            ("max_added_width", max_added_width),
            ("rate", rate),
            ("laser_jitter_width", laser_jitter_width),
        ] {
            ensure(
                v >= 0.0 && v.is_finite(),
                name,
                format!("must be finite and non-negative, got {v}"),
            )?;
        }
        Ok(Self {
            intrinsic_width,
            max_added_width,
            rate,
            laser_jitter_width,
        })
    }

    /// No broadening at all.
    pub fn none() -> Self {
        Self {
            intrinsic_width: 0.0,
            max_added_width: 0.0,
            rate: 0.0,
            laser_jitter_width: 0.0,
        }
    }

    /// Zero-field single-ion PL calibration: 3 MHz intrinsic width, 8 MHz of
    /// diffusion accumulating at 1 s⁻¹ and 2 MHz of laser jitter. Gives
    /// about 13 MHz over a one-minute scan.
    pub fn pl_default() -> Self {
        Self {
            intrinsic_width: 3.0e6,
            max_added_width: 8.0e6,
            rate: 1.0,
            laser_jitter_width: 2.0e6,
        }
    }
}

/// `Γ₀ + Γ_SD (1 − e^{−R t})`, Hz.
pub fn diffusion_width(model: &SpectralDiffusionModel, waiting_time: f64) -> Result<f64> {
    ensure(
        waiting_time >= 0.0,
        "waiting_time",
        format!("must be non-negative, got {waiting_time}"),
    )?;
    Ok(model.intrinsic_width + model.max_added_width * -(-model.rate * waiting_time).exp_m1())
}

/// Lorentzian FWHM of a PL peak recorded over `measurement_duration`.
pub fn effective_pl_linewidth(
    ion: &IonRecord,
    cavity: &CavityMode,
    diffusion: &SpectralDiffusionModel,
    measurement_duration: f64,
) -> Result<f64> {
    ensure(
        measurement_duration > 0.0,
        "measurement_duration",
        format!("must be positive, got {measurement_duration}"),
    )?;
    Ok(diffusion_width(diffusion, measurement_duration)?
        + diffusion.laser_jitter_width
        + fourier_limit_linewidth(enhanced_lifetime(ion, cavity))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cavity() -> CavityMode {
        CavityMode::new(1533.8952, 5e4, 0.09).unwrap()
    }

    fn resonant_ion(bare: f64, fp: f64) -> IonRecord {
        IonRecord::new(cavity().resonance_frequency(), bare, fp, 0.45).unwrap()
    }

    #[test]
    fn lifetime_examples() {
        let c = cavity();
        assert_eq!(enhanced_lifetime(&resonant_ion(1.8e-3, 0.0), &c), 1.8e-3);
        assert_relative_eq!(
            enhanced_lifetime(&resonant_ion(1.8e-3, 143.0), &c),
            12.5e-6,
            max_relative = 1e-12
        );
        let detuned = resonant_ion(1.8e-3, 143.0).shifted(0.5 * c.linewidth());
        assert_relative_eq!(
            enhanced_lifetime(&detuned, &c),
            1.8e-3 / (1.0 + 71.5),
            max_relative = 1e-9
        );
    }

    #[test]
    fn fourier_examples() {
        let f = fourier_limit_linewidth(12.5e-6).unwrap();
        assert!((f - 25.46e3).abs() < 0.01e3, "{f}");
        let f = fourier_limit_linewidth(133.8e-6).unwrap();
        assert!((f - 2.379e3).abs() < 0.001e3, "{f}");
        assert_relative_eq!(fourier_limit_linewidth(1.0 / PI).unwrap(), 1.0, max_relative = 1e-15);
        assert!(fourier_limit_linewidth(0.0).is_err());
        assert!(fourier_limit_linewidth(-1.0).is_err());
    }

    #[test]
    fn stark_examples() {
        let m = StarkModel::from_khz_per_v_per_mm(182.9, 2e-3).unwrap();
        assert_eq!(stark_shift(&m, 0.0), 0.0);
        assert_relative_eq!(stark_shift(&m, 640.0), 58.528e6, max_relative = 1e-12);
        let lit = StarkModel::from_khz_per_v_per_mm(250.0, 2e-3).unwrap();
        assert_relative_eq!(stark_shift(&lit, 640.0), 80.0e6, max_relative = 1e-12);
        assert!(StarkModel::new(1.0, 0.0, 1.0).is_err());
        assert!(StarkModel::new(1.0, 1e-3, 0.5).is_err());
    }

    #[test]
    fn diffusion_examples() {
        let m = SpectralDiffusionModel::new(122e3, 878e3, 60.0, 0.0).unwrap();
        assert_eq!(diffusion_width(&m, 0.0).unwrap(), 122e3);
        let w = diffusion_width(&m, 50e-3).unwrap();
        assert!((w - 0.96e6).abs() < 0.005e6, "{w}");
        let flat = SpectralDiffusionModel::new(122e3, 0.0, 60.0, 0.0).unwrap();
        assert_eq!(diffusion_width(&flat, 1e9).unwrap(), 122e3);
        assert!(diffusion_width(&m, -1.0).is_err());
        assert!(SpectralDiffusionModel::new(-1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pl_linewidth_examples() {
        let c = cavity();
        let ion = resonant_ion(1.8e-3, 143.0);
        let w = effective_pl_linewidth(&ion, &c, &SpectralDiffusionModel::none(), 60.0).unwrap();
        assert!((w - 25.46e3).abs() < 0.01e3);

        // 25 kHz Fourier term (T₁ = 1/(π·25 kHz)) + 2 MHz jitter + 10 MHz diffusion.
        let ion = resonant_ion(1.0 / (PI * 25e3), 0.0);
        let m = SpectralDiffusionModel::new(10e6, 0.0, 0.0, 2e6).unwrap();
        let w = effective_pl_linewidth(&ion, &c, &m, 60.0).unwrap();
        assert_relative_eq!(w, 12.025e6, max_relative = 1e-12);

        let ion = resonant_ion(1.8e-3, 143.0);
        let w = effective_pl_linewidth(&ion, &c, &SpectralDiffusionModel::pl_default(), 60.0).unwrap();
        assert!((10e6..=35e6).contains(&w), "{w}");
        assert!(effective_pl_linewidth(&ion, &c, &m, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn lifetime_times_rate_factor_is_bare(
            bare in 1e-6f64..1e-2,
            fp in 0.0f64..2000.0,
            detuning in -2e10f64..2e10,
        ) {
            let c = cavity();
            let ion = IonRecord::new(c.resonance_frequency() + detuning, bare, fp, 0.3).unwrap();
            let t = enhanced_lifetime(&ion, &c);
            let weight = cavity_spectral_weight(&c, ion.center_frequency - c.resonance_frequency());
            let back = t * (1.0 + fp * weight);
            prop_assert!(((back - bare) / bare).abs() < 1e-12);
        }

        #[test]
        fn stark_is_odd(k in -1e3f64..1e3, d in 1e-4f64..1e-2, v in -1e3f64..1e3) {
            let m = StarkModel::new(k, d, 1.0).unwrap();
            prop_assert_eq!(stark_shift(&m, -v), -stark_shift(&m, v));
        }

        #[test]
        fn diffusion_monotone_and_bounded(
            g0 in 0.0f64..1e7,
            gsd in 0.0f64..1e7,
            rate in 0.0f64..1e3,
            t1 in 0.0f64..10.0,
            dt in 0.0f64..10.0,
        ) {
            let m = SpectralDiffusionModel::new(g0, gsd, rate, 0.0).unwrap();
            let a = diffusion_width(&m, t1).unwrap();
            let b = diffusion_width(&m, t1 + dt).unwrap();
            prop_assert!(b >= a);
            prop_assert!(b <= g0 + gsd);
            prop_assert!(a >= g0);
        }
    }
}
