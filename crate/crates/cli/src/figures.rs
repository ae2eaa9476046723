//! Bundled recipes that regenerate each figure's datasets and a one-row
//! summary of its headline numbers.

use ionsim_core::fitting::{
    exponential_decay, fit, gaussian_line, linear_model, mims_decay_model, Dataset, FitModel, FitOptions, FitResult,
};
use ionsim_core::physics::wavelength_nm_to_frequency;
use ionsim_core::spectroscopy::{extrapolate_zero_power, homogeneous_from_memory_time, HoleWidthPoint};
use ionsim_core::SPEED_OF_LIGHT;
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};
use crate::dataset::CsvDataset;
use crate::error::{CliError, CliResult};
use crate::experiments::{finish, run_experiment};

pub const FIGURES: [&str; 9] = [
    "fig2a", "fig2c", "fig3a", "fig3b", "fig3c", "fig4b", "fig5", "figS2", "figS3",
];

/// One output file of a figure, named without extension.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub dataset: CsvDataset,
}

const FIG2A: &str = "
kind = ion-count
seed = 1

[output]
view = density

[sweep]
detuning_min = -600e9
detuning_max = 600e9
points = 1201
";

const FIG2C: &str = "
kind = ion-count
seed = 1

[sweep]
detuning_min = -400e9
detuning_max = 400e9
points = 801
";

const FIG3A: &str = "
kind = pl-spectrum
seed = 3

[ensemble]
mean_ion_count = 12.7
";

// Purcell factor chosen so the enhanced lifetime is 133.8 µs.
const FIG3B: &str = "
kind = pl-decay
seed = 4

[ion]
purcell_factor = 12.452914798206278

[pulses]
period = 600e-6
count = 1000000
window = 500e-6
blanking = 0
";

// 2.20e-2 signal and 1.15e-3 noise counts per 90 µs window.
const FIG3C: &str = "
kind = hbt
seed = 5

[pulses]
count = 10000000

[detector]
efficiency = 0.06568932941732064
dark_rate = 12.777777777777779
";

const FIG4B_SHIFT: &str = "
kind = stark-scan
seed = 6

[ion]
detuning = 500e6

[waveform]
steps_per_leg = 8
";

const FIG4B_G2: &str = "
kind = stark-scan
seed = 7

[ion]
detuning = 0

[output]
view = g2

[detector]
channels = 2
efficiency = 0.06568932941732064
dark_rate = 12.777777777777779

[g2]
points = 5
pulses = 2000000
";

const FIG5_HIGH_FIELD: &str = "
kind = shb
seed = 8

[output]
view = power-series

[model]
homogeneous_width = 61e3
";

const FIG5_ZERO_FIELD: &str = "
kind = shb
seed = 9

[output]
view = power-series

[model]
homogeneous_width = 1.51e6

[burn]
chirp_span = 40e6
";

const FIGS2: &str = "
kind = shb
seed = 10

[output]
view = delay-series

[burn]
power = 28

[diffusion]
intrinsic_width = 122e3
max_added_width = 640e3
rate = 60

[series]
delay_min = 0.5e-3
delay_max = 50e-3
points = 11
";

const FIGS3: &str = "
kind = echo
seed = 11
";

fn recipes(figure: &str) -> Option<Vec<(&'static str, &'static str)>> {
    Some(match figure {
        "fig2a" => vec![("line", FIG2A)],
        "fig2c" => vec![("ion_count", FIG2C)],
        "fig3a" => vec![("spectrum", FIG3A)],
        "fig3b" => vec![("decay", FIG3B)],
        "fig3c" => vec![("hbt", FIG3C)],
        "fig4b" => vec![("shift", FIG4B_SHIFT), ("g2", FIG4B_G2)],
        "fig5" => vec![("high_field", FIG5_HIGH_FIELD), ("zero_field", FIG5_ZERO_FIELD)],
        "figS2" => vec![("delay", FIGS2)],
        "figS3" => vec![("echo", FIGS3)],
        _ => return None,
    })
}

fn unknown_figure(figure: &str) -> CliError {
    CliError::Usage(format!("unknown figure `{figure}`; available: {}", FIGURES.join(", ")))
}

/// Canned configs of `figure`, parsed.
pub fn figure_configs(figure: &str) -> CliResult<Vec<(&'static str, ExperimentConfig)>> {
    recipes(figure)
        .ok_or_else(|| unknown_figure(figure))?
        .into_iter()
        .map(|(name, text)| Ok((name, ExperimentConfig::parse(text, &[])?)))
        .collect()
}

/// Hash over all canned configs of a figure, in recipe order.
pub fn figure_hash(configs: &[(&str, ExperimentConfig)]) -> String {
    let mut h = Sha256::new();
    for (_, cfg) in configs {
        h.update(cfg.canonical().as_bytes());
    }
    hex(&h.finalize())
}

/// Runs every recipe of `figure` and summarizes the results.
pub fn reproduce(figure: &str) -> CliResult<Vec<Artifact>> {
    let configs = figure_configs(figure)?;
    let mut artifacts = Vec::new();
    for (name, cfg) in &configs {
        artifacts.push(Artifact {
            name: format!("{figure}_{name}"),
            dataset: finish(run_experiment(cfg)?, cfg)?,
        });
    }
    let data: Vec<&CsvDataset> = artifacts.iter().map(|a| &a.dataset).collect();
    let mut summary = summarize(figure, &configs, &data)?;
    summary.validate()?;
    let name = format!("{figure}_summary");
    summary.meta("figure", figure);
    summary.meta("dataset", &name);
    summary.meta("seed", configs[0].1.seed);
    summary.meta("config_hash", figure_hash(&configs));
    artifacts.push(Artifact { name, dataset: summary });
    Ok(artifacts)
}

fn converged(r: FitResult, what: &str) -> CliResult<FitResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(CliError::Analysis(format!(
            "{what}: {}",
            r.diagnostic.unwrap_or_else(|| "fit did not converge".into())
        )))
    }
}

/// Fits column 1 against column 0, weighted by column 2 when asked.
fn fit_columns(ds: &CsvDataset, model: &FitModel, weighted: bool) -> CliResult<FitResult> {
    let core = |e| CliError::from_core(e, None);
    let data = if weighted {
        Dataset::weighted(ds.column(0), ds.column(1), ds.column(2))
    } else {
        Dataset::new(ds.column(0), ds.column(1))
    }
    .map_err(core)?;
    converged(fit(model, &data, &FitOptions::default()).map_err(core)?, model.name)
}

fn meta_number(ds: &CsvDataset, key: &str) -> CliResult<f64> {
    ds.meta_value(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Analysis(format!("dataset lacks `{key}`")))
}

fn one_row(columns: Vec<(&str, f64)>) -> CsvDataset {
    CsvDataset::from_columns(columns.into_iter().map(|(n, v)| (n, vec![v])).collect())
}

fn summarize(figure: &str, configs: &[(&str, ExperimentConfig)], data: &[&CsvDataset]) -> CliResult<CsvDataset> {
    let cfg = &configs[0].1;
    let ds = data[0];
    Ok(match figure {
        "fig2a" => {
            let r = fit_columns(ds, &gaussian_line(), false)?;
            let f = wavelength_nm_to_frequency(cfg.number("line.center_wavelength")) + r.parameters[1];
            let nm_per_hz = SPEED_OF_LIGHT / (f * f) * 1e9;
            one_row(vec![
                ("center_wavelength (nm)", SPEED_OF_LIGHT / f * 1e9),
                ("center_wavelength_sigma (nm)", nm_per_hz * r.standard_errors[1]),
                ("fwhm (Hz)", r.parameters[2]),
                ("fwhm_sigma (Hz)", r.standard_errors[2]),
            ])
        }
        "fig2c" => {
            let edge = |name: &str| {
                ds.column_index(name)
                    .map(|i| ds.rows[0][i])
                    .ok_or_else(|| CliError::Analysis(format!("line never reaches the `{name}` count")))
            };
            let (n100_neg, n1_neg) = (edge("n100_negative")?, edge("n1_negative")?);
            let (n100_pos, n1_pos) = (edge("n100_positive")?, edge("n1_positive")?);
            one_row(vec![
                ("peak_ion_count", meta_number(ds, "result.peak_ion_count")?),
                ("n100_negative (Hz)", n100_neg),
                ("n1_negative (Hz)", n1_neg),
                ("n100_positive (Hz)", n100_pos),
                ("n1_positive (Hz)", n1_pos),
                ("band_width_negative (Hz)", n100_neg - n1_neg),
                ("band_width_positive (Hz)", n1_pos - n100_pos),
            ])
        }
        "fig3a" => one_row(vec![
            ("mean_ion_count", meta_number(ds, "result.mean_ion_count")?),
            ("ions", meta_number(ds, "result.ions")?),
            ("resolved_peaks", meta_number(ds, "result.peaks")?),
            ("noise_floor", meta_number(ds, "result.noise_floor")?),
        ]),
        "fig3b" => {
            let r = fit_columns(ds, &exponential_decay(), true)?;
            let want = meta_number(ds, "result.lifetime")?;
            one_row(vec![
                ("lifetime (s)", r.parameters[1]),
                ("lifetime_sigma (s)", r.standard_errors[1]),
                ("configured_lifetime (s)", want),
                ("pull", (r.parameters[1] - want) / r.standard_errors[1]),
            ])
        }
        "fig3c" => {
            let g2 = meta_number(ds, "result.g2_zero")?;
            let sigma = meta_number(ds, "result.g2_sigma")?;
            let oracle = meta_number(ds, "result.g2_from_snr")?;
            one_row(vec![
                ("g2_zero", g2),
                ("g2_sigma", sigma),
                ("g2_from_snr", oracle),
                ("snr", meta_number(ds, "result.snr")?),
                ("pull", (g2 - oracle) / sigma),
            ])
        }
        "fig4b" => {
            let r = fit_columns(ds, &linear_model(), true)?;
            let shifts = ds.column(1);
            let sigmas = ds.column(2);
            let last = shifts.len() - 1;
            let peak = shifts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let g2 = data[1].column(1);
            one_row(vec![
                ("slope (kHz/(V/mm))", r.parameters[0]),
                ("slope_sigma (kHz/(V/mm))", r.standard_errors[0]),
                ("configured_slope (kHz/(V/mm))", cfg.number("stark.coefficient")),
                ("peak_shift (Hz)", peak),
                ("hysteresis (Hz)", shifts[last] - shifts[0]),
                ("hysteresis_sigma (Hz)", sigmas[last].hypot(sigmas[0])),
                ("mean_g2", g2.iter().sum::<f64>() / g2.len() as f64),
                ("max_g2", g2.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            ])
        }
        "fig5" => {
            let mut cols = Vec::new();
            for (i, label) in [(0, "high_field"), (1, "zero_field")] {
                let d = data[i];
                let points: Vec<HoleWidthPoint> = d
                    .rows
                    .iter()
                    .map(|r| HoleWidthPoint {
                        power: r[0],
                        width: r[1],
                        sigma: Some(r[2]),
                    })
                    .collect();
                let z = extrapolate_zero_power(&points).map_err(|e| CliError::from_core(e, None))?;
                cols.push((format!("{label}_zero_power_width (Hz)"), z.zero_power_width));
                cols.push((format!("{label}_zero_power_width_sigma (Hz)"), z.zero_power_width_sigma));
                cols.push((format!("{label}_saturation_power"), z.saturation_power));
            }
            one_row(cols.iter().map(|(n, v)| (n.as_str(), *v)).collect())
        }
        "figS2" => {
            let first = &ds.rows[0];
            let last = &ds.rows[ds.rows.len() - 1];
            one_row(vec![
                ("initial_delay (s)", first[0]),
                ("initial_width (Hz)", first[1]),
                ("final_delay (s)", last[0]),
                ("final_width (Hz)", last[1]),
                ("final_width_sigma (Hz)", last[2]),
                ("final_model_width (Hz)", last[3]),
            ])
        }
        "figS3" => {
            let r = fit_columns(ds, &mims_decay_model(), true)?;
            let t_m = r.parameters[1];
            one_row(vec![
                ("memory_time (s)", t_m),
                ("memory_time_sigma (s)", r.standard_errors[1]),
                ("mims_exponent", r.parameters[2]),
                ("mims_exponent_sigma", r.standard_errors[2]),
                ("echo_amplitude", r.parameters[0]),
                (
                    "homogeneous_width (Hz)",
                    homogeneous_from_memory_time(t_m).map_err(|e| CliError::from_core(e, None))?,
                ),
            ])
        }
        other => return Err(unknown_figure(other)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_valid_configs() {
        for f in FIGURES {
            assert!(!figure_configs(f).unwrap().is_empty(), "{f}");
        }
        assert_eq!(figure_configs("fig9").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn fig3b_config_gives_target_lifetime() {
        let cfg = &figure_configs("fig3b").unwrap()[0].1;
        let tau = cfg.number("ion.bare_lifetime") / (1.0 + cfg.number("ion.purcell_factor"));
        assert!((tau - 133.8e-6).abs() < 1e-12);
    }
}
