//! Subcommand bodies. Each returns the error whose exit code the binary
//! reports.

use std::fs;
use std::path::{Path, PathBuf};

use ionsim_core::fitting::{fit, model_by_name, Dataset, FitOptions, MODEL_NAMES};

use crate::config::ExperimentConfig;
use crate::dataset::{format_float, CsvDataset};
use crate::error::{CliError, CliResult};
use crate::experiments::{finish, run_experiment};
use crate::figures::{figure_configs, figure_hash, reproduce};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Runs the experiment in `config_text` with `overrides` and returns the CSV.
pub fn run_text(config_text: &str, overrides: &[String]) -> CliResult<String> {
    let cfg = ExperimentConfig::parse(config_text, overrides)?;
    Ok(finish(run_experiment(&cfg)?, &cfg)?.to_csv())
}

pub fn run(config: &Path, output: &Path, overrides: &[String]) -> CliResult<()> {
    let csv = run_text(&read(config)?, overrides)?;
    write(output, &csv)
}

/// Path of the fitted-curve file next to `output`.
pub fn curve_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = output.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    output.with_file_name(format!("{stem}_curve.{ext}"))
}

/// Fits `model` to columns 0 (x) and 1 (y) of a dataset, weighting by
/// column 2 when its name ends in `_sigma`. Writes the parameter table and
/// the curve even when the fit does not converge.
pub fn fit_file(dataset: &Path, model_name: &str, output: &Path) -> CliResult<()> {
    let model = model_by_name(model_name).ok_or_else(|| {
        CliError::Usage(format!("unknown model `{model_name}`; available: {}", MODEL_NAMES.join(", ")))
    })?;
    let ds = CsvDataset::parse(&read(dataset)?)?;
    if ds.columns.len() < 2 {
        return Err(CliError::Usage("dataset needs an x and a y column".into()));
    }
    let weighted = ds
        .columns
        .get(2)
        .is_some_and(|c| c.split(" (").next().is_some_and(|n| n.ends_with("_sigma")));
    let (x, y) = (ds.column(0), ds.column(1));
    let data = if weighted {
        Dataset::weighted(x.clone(), y.clone(), ds.column(2))
    } else {
        Dataset::new(x.clone(), y.clone())
    }
    .map_err(|e| CliError::invalid("dataset", e.to_string()))?;
    let r = fit(&model, &data, &FitOptions::default()).map_err(|e| CliError::from_core(e, None))?;

    let mut table = String::from("parameter,value,stderr\n");
    for ((name, v), e) in r.parameter_names.iter().zip(&r.parameters).zip(&r.standard_errors) {
        table.push_str(&format!("{name},{},{}\n", format_float(*v), format_float(*e)));
    }
    table.push_str(&format!("# model = {}\n", r.model));
    table.push_str(&format!("# converged = {}\n", r.converged));
    table.push_str(&format!("# iterations = {}\n", r.iterations));
    table.push_str(&format!("# residual_sum_of_squares = {}\n", format_float(r.residual_sum_of_squares)));
    table.push_str(&format!("# weighted = {weighted}\n"));
    if let Some(d) = &r.diagnostic {
        table.push_str(&format!("# diagnostic = {d}\n"));
    }
    if let Some(h) = ds.meta_value("config_hash") {
        table.push_str(&format!("# source_config_hash = {h}\n"));
    }
    write(output, &table)?;

    let mut curve = CsvDataset::from_columns(vec![
        (ds.columns[0].as_str(), x.clone()),
        (ds.columns[1].as_str(), y),
        ("fit", model.curve(&r.parameters, &x)),
    ]);
    curve.meta("model", r.model);
    write(&curve_path(output), &curve.to_csv())?;

    if !r.converged {
        return Err(CliError::Analysis(
            r.diagnostic.unwrap_or_else(|| format!("no convergence after {} iterations", r.iterations)),
        ));
    }
    Ok(())
}

/// Writes every artifact of `figure` to `out_dir` and returns the paths.
pub fn reproduce_to(figure: &str, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let artifacts = reproduce(figure)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    artifacts
        .iter()
        .map(|a| {
            let path = out_dir.join(format!("{}.csv", a.name));
            write(&path, &a.dataset.to_csv())?;
            Ok(path)
        })
        .collect()
}

/// Regenerates a dataset from its own metadata.
pub fn regenerate(text: &str) -> CliResult<String> {
    let ds = CsvDataset::parse(text)?;
    let stored_hash = ds
        .meta_value("config_hash")
        .ok_or_else(|| CliError::invalid("config_hash", "dataset carries no config hash"))?;
    if let Some(figure) = ds.meta_value("figure") {
        let configs = figure_configs(figure)?;
        if figure_hash(&configs) != stored_hash {
            return Err(CliError::invalid("config_hash", format!("does not match the bundled {figure} recipe")));
        }
        let name = ds.meta_value("dataset").unwrap_or_default();
        return reproduce(figure)?
            .into_iter()
            .find(|a| a.name == name)
            .map(|a| a.dataset.to_csv())
            .ok_or_else(|| CliError::invalid("dataset", format!("{figure} has no dataset `{name}`")));
    }
    let config: Vec<&str> = ds.meta_values("config").collect();
    if config.is_empty() {
        return Err(CliError::invalid("config", "dataset carries no embedded config"));
    }
    let cfg = ExperimentConfig::parse(&config.join("\n"), &[])?;
    if cfg.hash() != stored_hash {
        return Err(CliError::invalid("config_hash", "does not match the embedded config"));
    }
    if ds.meta_value("seed") != Some(cfg.seed.to_string().as_str()) {
        return Err(CliError::invalid("seed", "does not match the embedded config"));
    }
    Ok(finish(run_experiment(&cfg)?, &cfg)?.to_csv())
}

/// Regenerates `input`. With `output`, writes the result there; otherwise
/// compares it with `input` and fails unless the bytes agree.
pub fn replay(input: &Path, output: Option<&Path>) -> CliResult<bool> {
    let original = read(input)?;
    let again = regenerate(&original)?;
    match output {
        Some(path) => {
            write(path, &again)?;
            Ok(again == original)
        }
        None if again == original => Ok(true),
        None => Err(CliError::invalid("replay", format!("{} does not regenerate byte-identically", input.display()))),
    }
}
