use ionsim_core::emitter::SpectralDiffusionModel;
use ionsim_core::fitting::{fit, mims_decay_model, Dataset, FitOptions};
use ionsim_core::spectroscopy::{
    extrapolate_zero_power, fit_hole, hole_power_series, hole_width, mims_decay, simulate_2ppe, simulate_shb_scan,
    HoleBurnConfig, HoleWidthPoint, SpectroscopyModel,
};
use proptest::prelude::*;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn hole_fit_within_three_sigma_at_three_percent_noise() {
    let model = SpectroscopyModel::high_field();
    for (i, power) in [0.3, 1.0, 3.0].into_iter().enumerate() {
        let cfg = HoleBurnConfig::standard(power);
        let trace = simulate_shb_scan(&model, &cfg, &SpectralDiffusionModel::none(), 0.03, 60 + i as u64).unwrap();
        let r = fit_hole(&trace).unwrap();
        assert!(r.converged);
        let (got, err) = (r.parameters[2], r.standard_errors[2]);
        assert!((got - trace.hole_width).abs() < 3.0 * err, "{got} ± {err} vs {}", trace.hole_width);
    }
}

#[test]
fn zero_field_extrapolation_from_noisy_series() {
    let model = SpectroscopyModel::zero_field();
    let base = HoleBurnConfig {
        chirp_span: 40e6,
        ..HoleBurnConfig::standard(1.0)
    };
    let points = hole_power_series(
        &model,
        &base,
        &log_grid(0.28, 2.8, 6),
        &SpectralDiffusionModel::none(),
        0.03,
        8,
    )
    .unwrap();
    let r = extrapolate_zero_power(&points).unwrap();
    assert!((r.zero_power_width - 3.02e6).abs() < 0.1e6, "{}", r.zero_power_width);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extrapolation_inverts_forward_model(log_gamma in 3.0f64..6.0, log_p in -1.5f64..1.5) {
        let model = SpectroscopyModel {
            homogeneous_width: 10f64.powf(log_gamma),
            saturation_power: 10f64.powf(log_p),
            ..SpectroscopyModel::high_field()
        };
        let points: Vec<HoleWidthPoint> = log_grid(0.01, 1000.0, 12)
            .into_iter()
            .map(|p| HoleWidthPoint { power: p, width: hole_width(p, &model).unwrap(), sigma: None })
            .collect();
        let r = extrapolate_zero_power(&points).unwrap();
        prop_assert!((r.homogeneous_width / model.homogeneous_width - 1.0).abs() < 1e-4);
        prop_assert!((r.saturation_power / model.saturation_power - 1.0).abs() < 1e-4);
    }

    #[test]
    fn mims_log_log_slope_is_exponent(m in 1.0f64..4.0, t_m in 10e-6f64..500e-6) {
        let model = SpectroscopyModel { memory_time: t_m, mims_exponent: m, ..SpectroscopyModel::high_field() };
        let pts: Vec<(f64, f64)> = log_grid(0.01 * t_m, 0.5 * t_m, 15)
            .into_iter()
            .map(|t| {
                let i = mims_decay(t, &model).unwrap();
                (t.ln(), (-(i / model.echo_amplitude).ln()).ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        prop_assert!((slope - m).abs() < 1e-6, "{slope} vs {m}");
    }

    #[test]
    fn mims_monotone(m in 1.0f64..4.0) {
        let model = SpectroscopyModel { mims_exponent: m, ..SpectroscopyModel::high_field() };
        let v: Vec<f64> = (0..100).map(|i| mims_decay(i as f64 * 1e-6, &model).unwrap()).collect();
        prop_assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn echo_fit_recovers_memory_time() {
    let model = SpectroscopyModel::high_field();
    let delays: Vec<f64> = (0..20).map(|i| 5e-6 + 145e-6 * i as f64 / 19.0).collect();
    let echo = simulate_2ppe(&model, &delays, 0.05, 31).unwrap();
    let sigma = echo.intensities.iter().map(|v| 0.05 * v).collect();
    let data = Dataset::weighted(echo.delays.clone(), echo.intensities.clone(), sigma).unwrap();
    let r = fit(&mims_decay_model(), &data, &FitOptions::default()).unwrap();
    assert!(r.converged);
    assert!((r.parameters[1] - 89.7e-6).abs() < 1e-6, "T_M {}", r.parameters[1]);
    assert!((r.parameters[2] - 2.023).abs() < 0.09, "m {}", r.parameters[2]);
}
