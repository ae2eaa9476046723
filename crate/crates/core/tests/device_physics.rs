use std::f64::consts::PI;

use ionsim_core::physics::{
    accessible_ion_count, line_density, mode_volume, purcell_factor, CavityMode, FieldCell, FieldGrid, FrequencyWindow,
    HostCrystal, InhomogeneousLine, Sideband,
};
use ionsim_core::quad::adaptive_simpson;
use proptest::prelude::*;

/// Gaussian intensity `exp(−2(x²/wx² + y²/wy² + z²/wz²))` sampled on a cubic
/// grid out to three waists. Its continuum mode volume is
/// `(π/2)^{3/2} wx wy wz`.
fn gaussian_grid(w: [f64; 3], per_axis: usize, permittivity: f64) -> FieldGrid {
    let h: Vec<f64> = w.iter().map(|wi| 6.0 * wi / per_axis as f64).collect();
    let mut cells = Vec::with_capacity(per_axis.pow(3));
    for i in 0..per_axis {
        for j in 0..per_axis {
            for k in 0..per_axis {
                let p = [i, j, k].map(|n| n as f64 + 0.5 - per_axis as f64 / 2.0);
                let r = [p[0] * h[0], p[1] * h[1], p[2] * h[2]];
                let s: f64 = (0..3).map(|a| (r[a] / w[a]).powi(2)).sum();
                cells.push(FieldCell {
                    position: r,
                    relative_permittivity: permittivity,
                    intensity: (-2.0 * s).exp(),
                    cell_volume: h[0] * h[1] * h[2],
                });
            }
        }
    }
    FieldGrid::new(cells).unwrap()
}

#[test]
fn synthetic_device_grid_gives_nominal_volume() {
    // Waists chosen so the continuum volume is 0.09 µm³.
    let product = 0.09 / (PI / 2.0).powf(1.5);
    let wz = (product / (0.6 * 0.25)).cbrt();
    let w = [0.6 * wz, 0.25 * wz, wz];
    let v = mode_volume(&gaussian_grid(w, 41, 4.84)).unwrap();
    assert!((v - 0.09).abs() < 0.09 * 1e-3, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mode_volume_ignores_intensity_scale(scale in 1e-6f64..1e6) {
        let grid = gaussian_grid([0.3, 0.2, 0.5], 9, 4.84);
        let scaled = FieldGrid::new(
            grid.cells()
                .iter()
                .map(|c| FieldCell { intensity: c.intensity * scale, ..*c })
                .collect(),
        )
        .unwrap();
        let a = mode_volume(&grid).unwrap();
        let b = mode_volume(&scaled).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-12);
    }

    #[test]
    fn purcell_scales_as_documented(ratio in 0.01f64..1.0, beta in 0.01f64..1.0, volume in 0.01f64..10.0) {
        let base_cavity = CavityMode::new(1532.0, 5e4, 0.09).unwrap();
        let cavity = CavityMode::new(1532.0, 5e4, volume).unwrap();
        let host = HostCrystal::new(2.30, 1.885e28, 50.0, beta).unwrap();
        let unit = HostCrystal::new(2.30, 1.885e28, 50.0, 1.0).unwrap();
        let reference = purcell_factor(&base_cavity, &unit, 1.0).unwrap();
        let got = purcell_factor(&cavity, &host, ratio).unwrap();
        let want = reference * ratio * beta * 0.09 / volume;
        prop_assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn ion_count_is_additive(split in 0.05f64..0.95, center in -300e9f64..300e9, width in 1e9f64..50e9) {
        let host = HostCrystal::erbium_lithium_niobate(50.0).unwrap();
        let line = InhomogeneousLine::gaussian(0.0, 145.3e9).unwrap();
        let lo = center - width / 2.0;
        let w1 = width * split;
        let whole = accessible_ion_count(4.5e-19, &host, &line, FrequencyWindow::new(center, width)).unwrap();
        let a = accessible_ion_count(4.5e-19, &host, &line, FrequencyWindow::new(lo + w1 / 2.0, w1)).unwrap();
        let w2 = width - w1;
        let b = accessible_ion_count(4.5e-19, &host, &line, FrequencyWindow::new(lo + w1 + w2 / 2.0, w2)).unwrap();
        prop_assert!(((a + b - whole) / whole).abs() < 1e-9, "{a} + {b} vs {whole}");
    }

    #[test]
    fn ion_count_monotone_in_width(w in 1e8f64..1e11) {
        let host = HostCrystal::erbium_lithium_niobate(50.0).unwrap();
        let line = InhomogeneousLine::gaussian(0.0, 145.3e9).unwrap();
        let a = accessible_ion_count(4.5e-19, &host, &line, FrequencyWindow::new(1e10, w)).unwrap();
        let b = accessible_ion_count(4.5e-19, &host, &line, FrequencyWindow::new(1e10, 1.1 * w)).unwrap();
        prop_assert!(b > a);
    }
}

#[test]
fn ion_count_matches_closed_form() {
    // Independent oracle: V·ρ·(Φ(hi) − Φ(lo)) with the normal CDF from erfc.
    let host = HostCrystal::erbium_lithium_niobate(50.0).unwrap();
    let fwhm = 145.3e9;
    let sd = fwhm / (8.0 * 2f64.ln()).sqrt();
    let phi = |f: f64| 0.5 * libm::erfc(-f / (sd * 2f64.sqrt()));
    let line = InhomogeneousLine::gaussian(0.0, fwhm).unwrap();
    for center in [0.0, 50e9, 267.5e9, -180e9] {
        let n = accessible_ion_count(4.5e-19, &host, &line, FrequencyWindow::new(center, 4e9)).unwrap();
        let want = 4.5e-19 * 50e-6 * 1.885e28 * (phi(center + 2e9) - phi(center - 2e9));
        assert!(((n - want) / want).abs() < 1e-6, "{center}: {n} vs {want}");
    }
}

#[test]
fn density_with_sideband_is_normalized() {
    let line = InhomogeneousLine::new(
        0.0,
        145.3e9,
        Some(Sideband {
            center_frequency: 200e9,
            fwhm: 100e9,
            weight: 0.2,
        }),
    )
    .unwrap();
    let total = adaptive_simpson(|f| line_density(&line, f), -2e12, 2.2e12, 1e-12);
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}
