//! Static device and ensemble physics.
//!
//! Geometry of the optical mode is expressed in µm / µm³, ion counting in
//! m³ / m⁻³, and frequencies in Hz.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::emitter::IonRecord;
use crate::error::{ensure, Error, Result};
use crate::quad::adaptive_simpson;
use crate::rng::{substream, Purpose};
use crate::SPEED_OF_LIGHT;

/// Lithium-site density of congruent lithium niobate, m⁻³.
pub const LN_SITE_DENSITY: f64 = 1.885e28;
/// Refractive index of lithium niobate at 1.5 µm.
pub const LN_REFRACTIVE_INDEX: f64 = 2.30;
/// Branching ratio of the Er³⁺ Z1-Y1 transition.
pub const ER_Z1Y1_BRANCHING_RATIO: f64 = 0.22;
/// Largest Poisson mean `sample_ensemble` accepts.
pub const MAX_ENSEMBLE_MEAN: f64 = 1e7;

/// One cell of a discretized field distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldCell {
    /// Cell centre, µm.
    pub position: [f64; 3],
    pub relative_permittivity: f64,
    /// |E|², arbitrary units.
    pub intensity: f64,
    /// µm³.
    pub cell_volume: f64,
}

/// Discretized electric-field intensity and permittivity of a cavity mode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldGrid {
    cells: Vec<FieldCell>,
}

impl FieldGrid {
    pub fn new(cells: Vec<FieldCell>) -> Result<Self> {
        for c in &cells {
            ensure(
                c.cell_volume > 0.0 && c.cell_volume.is_finite(),
                "cell_volume",
                format!("must be positive, got {}", c.cell_volume),
            )?;
            ensure(
                c.relative_permittivity >= 1.0 && c.relative_permittivity.is_finite(),
                "relative_permittivity",
                format!("must be >= 1, got {}", c.relative_permittivity),
            )?;
            ensure(
                c.intensity >= 0.0 && c.intensity.is_finite(),
                "intensity",
                format!("must be finite and non-negative, got {}", c.intensity),
            )?;
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[FieldCell] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Effective mode volume `Σ εI·dV / max(εI)`, in µm³.
pub fn mode_volume(grid: &FieldGrid) -> Result<f64> {
    ensure(!grid.is_empty(), "grid", "field grid is empty")?;
    let peak = grid
        .cells()
        .iter()
        .map(|c| c.relative_permittivity * c.intensity)
        .fold(0.0_f64, f64::max);
    ensure(peak > 0.0, "grid", "field intensity is zero everywhere")?;
    let integral: f64 = grid
        .cells()
        .iter()
        .map(|c| c.relative_permittivity * c.intensity * c.cell_volume)
        .sum();
    Ok(integral / peak)
}

/// Optical cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode {
    resonance_wavelength: f64,
    quality_factor: f64,
    mode_volume: f64,
}

impl CavityMode {
    /// `wavelength_nm` in nm, `mode_volume` in µm³.
    pub fn new(wavelength_nm: f64, quality_factor: f64, mode_volume: f64) -> Result<Self> {
        ensure(
            wavelength_nm > 0.0 && wavelength_nm.is_finite(),
            "resonance_wavelength",
            format!("must be positive, got {wavelength_nm}"),
        )?;
        ensure(
            quality_factor > 0.0 && quality_factor.is_finite(),
            "quality_factor",
            format!("must be positive, got {quality_factor}"),
        )?;
        ensure(
            mode_volume > 0.0 && mode_volume.is_finite(),
            "mode_volume",
            format!("must be positive, got {mode_volume}"),
        )?;
        Ok(Self {
            resonance_wavelength: wavelength_nm,
            quality_factor,
            mode_volume,
        })
    }

    /// Resonance wavelength in nm.
    pub fn resonance_wavelength(&self) -> f64 {
        self.resonance_wavelength
    }

    pub fn quality_factor(&self) -> f64 {
        self.quality_factor
    }

    /// µm³.
    pub fn mode_volume(&self) -> f64 {
        self.mode_volume
    }

    /// Hz.
    pub fn resonance_frequency(&self) -> f64 {
        wavelength_nm_to_frequency(self.resonance_wavelength)
    }

    /// Full width at half maximum, Hz.
    pub fn linewidth(&self) -> f64 {
        self.resonance_frequency() / self.quality_factor
    }
}

/// Vacuum wavelength (nm) to frequency (Hz).
pub fn wavelength_nm_to_frequency(wavelength_nm: f64) -> f64 {
    SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Doped host crystal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostCrystal {
    pub refractive_index: f64,
    /// Substitutional site density, m⁻³.
    pub site_density: f64,
    /// Atomic fraction of sites occupied by the dopant, ppm.
    pub doping_ppm: f64,
    pub branching_ratio: f64,
}

impl HostCrystal {
    pub fn new(
        refractive_index: f64,
        site_density: f64,
        doping_ppm: f64,
        branching_ratio: f64,
    ) -> Result<Self> {
        ensure(
            refractive_index > 1.0 && refractive_index.is_finite(),
            "refractive_index",
            format!("must exceed 1, got {refractive_index}"),
        )?;
        ensure(
            site_density > 0.0 && site_density.is_finite(),
            "site_density",
            format!("must be positive, got {site_density}"),
        )?;
        ensure(
            doping_ppm > 0.0 && doping_ppm.is_finite(),
            "doping",
            format!("must be positive, got {doping_ppm}"),
        )?;
        ensure(
            branching_ratio > 0.0 && branching_ratio <= 1.0,
            "branching_ratio",
            format!("must lie in (0, 1], got {branching_ratio}"),
        )?;
        Ok(Self {
            refractive_index,
            site_density,
            doping_ppm,
            branching_ratio,
        })
    }

    /// Er:LiNbO₃ at the given doping.
    pub fn erbium_lithium_niobate(doping_ppm: f64) -> Result<Self> {
        Self::new(
            LN_REFRACTIVE_INDEX,
            LN_SITE_DENSITY,
            doping_ppm,
            ER_Z1Y1_BRANCHING_RATIO,
        )
    }

    /// Dopant density, m⁻³.
    pub fn ion_density(&self) -> f64 {
        self.site_density * self.doping_ppm * 1e-6
    }
}

/// `((n² + 2) / 3)²`.
pub fn local_field_correction(n: f64) -> Result<f64> {
    ensure(n >= 1.0, "refractive_index", format!("must be >= 1, got {n}"))?;
    let x = (n * n + 2.0) / 3.0;
    Ok(x * x)
}

/// Purcell factor of an emitter at a location where the field intensity is
/// `intensity_ratio` times its maximum, including branching ratio and local
/// field correction.
pub fn purcell_factor(cavity: &CavityMode, host: &HostCrystal, intensity_ratio: f64) -> Result<f64> {
    ensure(
        (0.0..=1.0).contains(&intensity_ratio),
        "intensity_ratio",
        format!("must lie in [0, 1], got {intensity_ratio}"),
    )?;
    let lambda_um = cavity.resonance_wavelength() * 1e-3;
    let reduced = lambda_um / host.refractive_index;
    let chi = local_field_correction(host.refractive_index)?;
    Ok(3.0 / (4.0 * PI * PI)
        * reduced.powi(3)
        * (cavity.quality_factor() / cavity.mode_volume())
        * intensity_ratio
        * host.branching_ratio
        / chi)
}

/// Secondary Gaussian component of the inhomogeneous line (phonon sideband).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sideband {
    pub center_frequency: f64,
    pub fwhm: f64,
    /// Fraction of the ions in the sideband, in `[0, 1)`.
    pub weight: f64,
}

/// Normalized distribution of ion transition frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InhomogeneousLine {
    pub center_frequency: f64,
    pub fwhm: f64,
    pub sideband: Option<Sideband>,
}

impl InhomogeneousLine {
    pub fn gaussian(center_frequency: f64, fwhm: f64) -> Result<Self> {
        Self::new(center_frequency, fwhm, None)
    }

    pub fn new(center_frequency: f64, fwhm: f64, sideband: Option<Sideband>) -> Result<Self> {
        ensure(
            center_frequency.is_finite(),
            "center_frequency",
            "must be finite",
        )?;
        ensure(
            fwhm > 0.0 && fwhm.is_finite(),
            "fwhm",
            format!("must be positive, got {fwhm}"),
        )?;
        if let Some(sb) = sideband {
            ensure(
                sb.fwhm > 0.0 && sb.fwhm.is_finite(),
                "sideband_fwhm",
                format!("must be positive, got {}", sb.fwhm),
            )?;
            ensure(
                (0.0..1.0).contains(&sb.weight),
                "sideband_weight",
                format!("must lie in [0, 1), got {}", sb.weight),
            )?;
        }
        Ok(Self {
            center_frequency,
            fwhm,
            sideband,
        })
    }

    /// `(weight, center, fwhm)` of each mixture component.
    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> {
        let w = self.sideband.map_or(0.0, |s| s.weight);
        std::iter::once((1.0 - w, self.center_frequency, self.fwhm)).chain(
            self.sideband
                .filter(|s| s.weight > 0.0)
                .map(|s| (s.weight, s.center_frequency, s.fwhm)),
        )
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, f: f64) -> f64 {
        self.components()
            .map(|(w, c, fwhm)| {
                let z = (f - c) / (fwhm / (2.0 * (2.0 * LN_2).sqrt()));
                w * 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
            })
            .sum()
    }

    /// Upper bound of the density over `[lo, hi]`.
    fn density_bound(&self, lo: f64, hi: f64) -> f64 {
        self.components()
            .map(|(w, c, fwhm)| w * gaussian_density(c.clamp(lo, hi), c, fwhm))
            .sum()
    }
}

fn gaussian_density(f: f64, center: f64, fwhm: f64) -> f64 {
    let peak = 2.0 * (LN_2 / PI).sqrt() / fwhm;
    let u = (f - center) / fwhm;
    peak * (-4.0 * LN_2 * u * u).exp()
}

/// Ion frequency density `D(f)`, Hz⁻¹.
pub fn line_density(line: &InhomogeneousLine, f: f64) -> f64 {
    line.components()
        .map(|(w, c, fwhm)| w * gaussian_density(f, c, fwhm))
        .sum()
}

/// Contiguous frequency interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyWindow {
    pub center: f64,
    pub width: f64,
}

impl FrequencyWindow {
    pub fn new(center: f64, width: f64) -> Self {
        Self { center, width }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.center - 0.5 * self.width, self.center + 0.5 * self.width)
    }
}

/// Mean number of ions with transition frequencies inside the window and
/// located inside `cavity_volume` (m³).
pub fn accessible_ion_count(
    cavity_volume: f64,
    host: &HostCrystal,
    line: &InhomogeneousLine,
    window: FrequencyWindow,
) -> Result<f64> {
    ensure(
        cavity_volume > 0.0 && cavity_volume.is_finite(),
        "cavity_volume",
        format!("must be positive, got {cavity_volume}"),
    )?;
    ensure(
        window.width >= 0.0 && window.width.is_finite(),
        "window_width",
        format!("must be non-negative, got {}", window.width),
    )?;
    if window.width == 0.0 {
        return Ok(0.0);
    }
    Ok(cavity_volume * host.ion_density() * window_fraction(line, window))
}

/// Fraction of the line inside the window, by adaptive quadrature.
fn window_fraction(line: &InhomogeneousLine, window: FrequencyWindow) -> f64 {
    let (lo, hi) = window.bounds();
    let density = |f: f64| line_density(line, f);
    let crude = window.width * (density(lo) + 4.0 * density(window.center) + density(hi)) / 6.0;
    let floor = 1e-16 * window.width * line.density_bound(lo, hi);
    let tol = (1e-11 * crude.abs()).max(floor).max(f64::MIN_POSITIVE);
    adaptive_simpson(density, lo, hi, tol)
}

/// Distribution of per-ion field intensity ratios |E/E_max|².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityRatioDistribution {
    Fixed(f64),
    Uniform { min: f64, max: f64 },
}

impl IntensityRatioDistribution {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            Self::Fixed(r) => (r, r),
            Self::Uniform { min, max } => (min, max),
        };
        ensure(
            0.0 <= lo && lo <= hi && hi <= 1.0,
            "intensity_ratio",
            format!("distribution must lie within [0, 1], got [{lo}, {hi}]"),
        )
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Fixed(r) => r,
            Self::Uniform { min, max } if max > min => rng.random_range(min..max),
            Self::Uniform { min, .. } => min,
        }
    }
}

/// Everything needed to draw a random ion ensemble for one cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub host: HostCrystal,
    pub line: InhomogeneousLine,
    pub cavity: CavityMode,
    /// Volume in which ions couple to the cavity, m³.
    pub cavity_volume: f64,
    pub window: FrequencyWindow,
    pub intensity_ratios: IntensityRatioDistribution,
    /// Lifetime without cavity enhancement, s.
    pub bare_lifetime: f64,
}

impl EnsembleSpec {
    pub fn mean_ion_count(&self) -> Result<f64> {
        accessible_ion_count(self.cavity_volume, &self.host, &self.line, self.window)
    }
}

/// Draws a Poisson number of ions with mean [`accessible_ion_count`], each
/// with a frequency from the line restricted to the window and an intensity
/// ratio from the supplied distribution.
pub fn sample_ensemble(spec: &EnsembleSpec, seed: u64) -> Result<Vec<IonRecord>> {
    let mean = spec.mean_ion_count()?;
    sample_ensemble_with_mean(spec, mean, seed)
}

/// [`sample_ensemble`] with an explicit Poisson mean, for cases where the
/// ion number is known from elsewhere (e.g. a measured line shape).
pub fn sample_ensemble_with_mean(spec: &EnsembleSpec, mean: f64, seed: u64) -> Result<Vec<IonRecord>> {
    ensure(
        mean >= 0.0 && mean.is_finite(),
        "mean_ion_count",
        format!("must be finite and non-negative, got {mean}"),
    )?;
    if mean > MAX_ENSEMBLE_MEAN {
        return Err(Error::ResourceGuard(format!(
            "mean ion number {mean:.3e} exceeds the limit of {MAX_ENSEMBLE_MEAN:.0e}"
        )));
    }
    ensure(
        spec.window.width > 0.0,
        "window_width",
        "ions can only be drawn from a window of positive width",
    )?;
    ensure(
        spec.bare_lifetime > 0.0,
        "bare_lifetime",
        format!("must be positive, got {}", spec.bare_lifetime),
    )?;
    spec.intensity_ratios.validate()?;

    let mut rng = substream(seed, Purpose::Ensemble, 0);
    let count = sample_poisson(mean, &mut rng);
    let (lo, hi) = spec.window.bounds();
    let bound = spec.line.density_bound(lo, hi);
    let mut ions = Vec::with_capacity(count as usize);
    for _ in 0..count {
        // Rejection sampling against the window's density bound.
        let frequency = loop {
            let f = rng.random_range(lo..hi);
            if rng.random::<f64>() * bound <= line_density(&spec.line, f) {
                break f;
            }
        };
        let ratio = spec.intensity_ratios.sample(&mut rng);
        let purcell = purcell_factor(&spec.cavity, &spec.host, ratio)?;
        ions.push(IonRecord::new(frequency, spec.bare_lifetime, purcell, ratio)?);
    }
    Ok(ions)
}

pub(crate) fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive mean");
    dist.sample(rng) as u64
}
