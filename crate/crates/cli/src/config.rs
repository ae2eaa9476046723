//! Experiment configuration: `key = value` lines grouped under `[section]`
//! headers, `#` comments, plus dotted command-line overrides.
//!
//! ```text
//! kind = hbt
//! seed = 7
//!
//! [detector]
//! dark_rate = 12.7   # Hz, all channels together
//! ```

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::dataset::format_float;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    PlSpectrum,
    PlDecay,
    Hbt,
    StarkScan,
    Shb,
    Echo,
    Purcell,
    IonCount,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::PlSpectrum,
        Kind::PlDecay,
        Kind::Hbt,
        Kind::StarkScan,
        Kind::Shb,
        Kind::Echo,
        Kind::Purcell,
        Kind::IonCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::PlSpectrum => "pl-spectrum",
            Kind::PlDecay => "pl-decay",
            Kind::Hbt => "hbt",
            Kind::StarkScan => "stark-scan",
            Kind::Shb => "shb",
            Kind::Echo => "echo",
            Kind::Purcell => "purcell",
            Kind::IonCount => "ion-count",
        }
    }

    pub fn from_name(name: &str) -> Option<Kind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepted form of a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueType {
    Number,
    Integer,
    /// A number or the word `auto`.
    NumberOrAuto,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefaultValue {
    Required,
    Number(f64),
    Integer(u64),
    Word(&'static str),
}

/// One accepted key of a kind.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    /// `section.key`.
    pub key: &'static str,
    pub ty: ValueType,
    pub default: DefaultValue,
    pub unit: &'static str,
    pub help: &'static str,
}

const fn num(key: &'static str, default: f64, unit: &'static str, help: &'static str) -> Param {
    Param {
        key,
        ty: ValueType::Number,
        default: DefaultValue::Number(default),
        unit,
        help,
    }
}

const fn int(key: &'static str, default: u64, help: &'static str) -> Param {
    Param {
        key,
        ty: ValueType::Integer,
        default: DefaultValue::Integer(default),
        unit: "",
        help,
    }
}

const fn required(key: &'static str, unit: &'static str, help: &'static str) -> Param {
    Param {
        key,
        ty: ValueType::Number,
        default: DefaultValue::Required,
        unit,
        help,
    }
}

const fn auto(key: &'static str, unit: &'static str, help: &'static str) -> Param {
    Param {
        key,
        ty: ValueType::NumberOrAuto,
        default: DefaultValue::Word("auto"),
        unit,
        help,
    }
}

const fn view(choices: &'static [&'static str]) -> Param {
    Param {
        key: "output.view",
        ty: ValueType::Choice(choices),
        default: DefaultValue::Word(choices[0]),
        unit: "",
        help: "which dataset to emit",
    }
}

const CAVITY: &[Param] = &[
    num("cavity.wavelength", 1533.8952, "nm", "resonance wavelength"),
    num("cavity.quality_factor", 5e4, "", "loaded quality factor"),
    num("cavity.mode_volume", 0.09, "µm³", "effective mode volume"),
];

const HOST: &[Param] = &[
    num("host.refractive_index", 2.30, "", "refractive index"),
    num("host.site_density", 1.885e28, "m⁻³", "substitutional site density"),
    num("host.doping", 50.0, "ppm", "dopant fraction of sites"),
    num("host.branching_ratio", 0.22, "", "branching ratio of the cavity-coupled transition"),
];

const ION: &[Param] = &[
    num("ion.detuning", 0.0, "Hz", "transition frequency relative to the cavity resonance"),
    num("ion.bare_lifetime", 1.8e-3, "s", "lifetime without cavity"),
    num("ion.intensity_ratio", 0.45, "", "|E/E_max|² at the ion"),
    Param {
        key: "ion.purcell_factor",
        ty: ValueType::NumberOrAuto,
        default: DefaultValue::Number(143.0),
        unit: "",
        help: "on-resonance Purcell factor, or auto to derive it from cavity, host and intensity ratio",
    },
];

const PULSES: &[Param] = &[
    num("pulses.period", 100e-6, "s", "pulse repetition period"),
    int("pulses.count", 1_000_000, "pulses per measurement"),
    num("pulses.excitation_probability", 0.5, "", "probability an ion is excited per pulse"),
    num("pulses.window", 90e-6, "s", "detection window"),
    num("pulses.blanking", 5e-6, "s", "chopper blanking before the window opens"),
];

const DETECTOR_EFFICIENCY: Param = num("detector.efficiency", 0.1, "", "collection times detection efficiency");
const DARK_RATE: Param = num("detector.dark_rate", 12.7, "Hz", "noise rate of all channels together");
const ONE_CHANNEL: Param = int("detector.channels", 1, "number of detector channels (1 or 2)");

const DIFFUSION: &[Param] = &[
    num("diffusion.intrinsic_width", 3e6, "Hz", "intrinsic linewidth Γ₀"),
    num("diffusion.max_added_width", 8e6, "Hz", "saturated diffusion broadening Γ_SD"),
    num("diffusion.rate", 1.0, "s⁻¹", "diffusion rate R"),
    num("diffusion.laser_jitter", 2e6, "Hz", "laser frequency jitter"),
];

const HOLE_DIFFUSION: &[Param] = &[
    num("diffusion.intrinsic_width", 0.0, "Hz", "hole width at zero waiting time Γ₀"),
    num("diffusion.max_added_width", 0.0, "Hz", "saturated diffusion broadening Γ_SD"),
    num("diffusion.rate", 0.0, "s⁻¹", "diffusion rate R"),
    num("diffusion.laser_jitter", 0.0, "Hz", "laser frequency jitter"),
];

const LINE: &[Param] = &[
    num("line.center_wavelength", 1531.8, "nm", "center of the inhomogeneous line"),
    num("line.fwhm", 145.3e9, "Hz", "inhomogeneous FWHM"),
    num("line.sideband_offset", 0.0, "Hz", "sideband center relative to the line center"),
    num("line.sideband_fwhm", 1e9, "Hz", "sideband FWHM"),
    num("line.sideband_weight", 0.0, "", "fraction of ions in the sideband"),
];

const SCAN: &[Param] = &[
    num("scan.start", -1.95e9, "Hz", "first laser detuning"),
    num("scan.stop", 1.95e9, "Hz", "last laser detuning"),
    int("scan.points", 1951, "laser frequencies in the scan"),
    num("scan.duration", 60.0, "s", "accumulation time of the whole spectrum"),
];

const SPECTRUM_EXTRA: &[Param] = &[
    num("ensemble.cavity_volume", 4.5e-19, "m³", "volume in which ions couple to the cavity"),
    auto("ensemble.mean_ion_count", "", "Poisson mean of the ion number, or auto for the accessible count"),
    num("ensemble.intensity_min", 0.0, "", "smallest intensity ratio"),
    num("ensemble.intensity_max", 0.45, "", "largest intensity ratio"),
    auto("ensemble.window_width", "Hz", "frequency window of the ensemble, or auto for the cavity linewidth"),
];

const DECAY_EXTRA: &[Param] = &[int("histogram.bins", 100, "time bins across the window")];

const HBT_EXTRA: &[Param] = &[
    DETECTOR_EFFICIENCY,
    required("detector.dark_rate", "Hz", "noise rate of all channels together"),
    int("detector.channels", 2, "number of detector channels (must be 2)"),
    int("hbt.max_separation", 20, "largest pulse separation histogrammed"),
];

const STARK_EXTRA: &[Param] = &[
    num("stark.coefficient", 182.9, "kHz/(V/mm)", "linear Stark coefficient"),
    num("stark.electrode_separation", 2e-3, "m", "electrode gap"),
    num("stark.sign", 1.0, "", "direction of the shift, +1 or -1"),
    num("waveform.low", 0.0, "V", "lowest voltage"),
    num("waveform.high", 640.0, "V", "highest voltage"),
    int("waveform.steps_per_leg", 10, "voltage steps per ramp"),
    int("waveform.cycles", 1, "up-down cycles"),
    num("scan.start", -40e6, "Hz", "first laser detuning from the unshifted ion"),
    num("scan.stop", 100e6, "Hz", "last laser detuning from the unshifted ion"),
    int("scan.points", 141, "laser frequencies per step"),
    num("scan.duration", 60.0, "s", "accumulation time per step"),
    int("g2.points", 5, "voltages, evenly spaced over the ramp, for the g2 view"),
    int("g2.pulses", 1_000_000, "pulses per voltage for the g2 view"),
    int("hbt.max_separation", 20, "largest pulse separation histogrammed"),
    view(&["shift", "map", "g2"]),
];

const SHB_EXTRA: &[Param] = &[
    num("model.homogeneous_width", 61e3, "Hz", "homogeneous linewidth Γ_hom"),
    num("model.saturation_power", 1.0, "", "saturation power, sets the unit of burn powers"),
    num("burn.power", 0.28, "", "burn power in the unit of the saturation power"),
    num("burn.duration", 50e-6, "s", "burn pulse length"),
    num("burn.read_delay", 380e-6, "s", "wait between burn and read"),
    num("burn.chirp_span", 10e6, "Hz", "read chirp span"),
    num("burn.chirp_duration", 500e-6, "s", "read chirp length"),
    int("burn.samples", 2001, "samples across the read chirp"),
    num("noise.level", 0.03, "", "Gaussian noise relative to the hole depth"),
    num("series.power_min", 0.28, "", "lowest burn power of the power series"),
    num("series.power_max", 2.8, "", "highest burn power of the power series"),
    num("series.delay_min", 380e-6, "s", "shortest read delay of the delay series"),
    num("series.delay_max", 0.1, "s", "longest read delay of the delay series"),
    int("series.points", 6, "log-spaced points of either series"),
    view(&["trace", "power-series", "delay-series"]),
];

const ECHO_EXTRA: &[Param] = &[
    num("model.memory_time", 89.7e-6, "s", "memory time T_M"),
    num("model.mims_exponent", 2.023, "", "Mims exponent m"),
    num("model.echo_amplitude", 1.0, "", "echo amplitude at zero delay"),
    num("delays.min", 5e-6, "s", "shortest pulse separation"),
    num("delays.max", 150e-6, "s", "longest pulse separation"),
    int("delays.points", 20, "pulse separations, evenly spaced"),
    num("noise.level", 0.05, "", "log-normal noise width"),
];

const ION_COUNT_EXTRA: &[Param] = &[
    num("sweep.cavity_volume", 4.5e-19, "m³", "volume in which ions couple to the cavity"),
    num("sweep.detuning_min", -400e9, "Hz", "first cavity detuning from the line center"),
    num("sweep.detuning_max", 400e9, "Hz", "last cavity detuning from the line center"),
    int("sweep.points", 801, "detunings in the sweep"),
    auto("sweep.window_width", "Hz", "frequency window per cavity position, or auto for the cavity linewidth"),
    view(&["sweep", "density"]),
];

const PURCELL_ION: &[Param] = &[
    num("ion.intensity_ratio", 0.45, "", "|E/E_max|² at the ion"),
    num("ion.bare_lifetime", 1.8e-3, "s", "lifetime without cavity"),
];

/// Accepted keys of `kind`, sorted by key. Later blocks override earlier
/// entries with the same key.
pub fn schema(kind: Kind) -> Vec<Param> {
    let blocks: Vec<&[Param]> = match kind {
        Kind::Purcell => vec![CAVITY, HOST, PURCELL_ION],
        Kind::IonCount => vec![CAVITY, HOST, LINE, ION_COUNT_EXTRA],
        Kind::PlDecay => vec![CAVITY, HOST, ION, PULSES, &[DETECTOR_EFFICIENCY, DARK_RATE, ONE_CHANNEL], DECAY_EXTRA],
        Kind::Hbt => vec![
            CAVITY,
            HOST,
            ION,
            PULSES,
            HBT_EXTRA,
        ],
        Kind::PlSpectrum => vec![
            CAVITY,
            HOST,
            ION,
            PULSES,
            &[DETECTOR_EFFICIENCY, DARK_RATE, ONE_CHANNEL],
            DIFFUSION,
            LINE,
            SCAN,
            SPECTRUM_EXTRA,
        ],
        Kind::StarkScan => vec![
            CAVITY,
            HOST,
            ION,
            PULSES,
            &[DETECTOR_EFFICIENCY, DARK_RATE, ONE_CHANNEL],
            DIFFUSION,
            STARK_EXTRA,
        ],
        Kind::Shb => vec![HOLE_DIFFUSION, SHB_EXTRA],
        Kind::Echo => vec![ECHO_EXTRA],
    };
    let mut map: BTreeMap<&'static str, Param> = BTreeMap::new();
    for p in blocks.into_iter().flatten() {
        map.insert(p.key, *p);
    }
    // The pulse count of a spectrum is per scan point.
    if matches!(kind, Kind::PlSpectrum | Kind::StarkScan) {
        map.insert("pulses.count", int("pulses.count", 60_000, "pulses per scan point"));
    }
    // The per-ion block of a spectrum is only used when no ensemble is drawn.
    if kind == Kind::PlSpectrum {
        map.insert(
            "output.view",
            Param {
                key: "output.view",
                ty: ValueType::Choice(&["ensemble", "single"]),
                default: DefaultValue::Word("ensemble"),
                unit: "",
                help: "random ensemble in the cavity window, or the single configured ion",
            },
        );
    }
    map.into_values().collect()
}

/// Human-readable key listing for every kind.
pub fn keys_help() -> String {
    let mut out = String::from("Configuration keys by kind (`kind` and `seed` are top-level):\n");
    for kind in Kind::ALL {
        out.push_str(&format!("\n  kind = {kind}\n"));
        for p in schema(kind) {
            let default = match p.default {
                DefaultValue::Required => "required".to_string(),
                DefaultValue::Number(v) => format_float(v),
                DefaultValue::Integer(v) => v.to_string(),
                DefaultValue::Word(w) => w.to_string(),
            };
            let unit = if p.unit.is_empty() { String::new() } else { format!(" [{}]", p.unit) };
            let choices = match p.ty {
                ValueType::Choice(c) => format!(" ({})", c.join("|")),
                _ => String::new(),
            };
            out.push_str(&format!("    {:<32} {}{unit}{choices}; default {default}\n", p.key, p.help));
        }
    }
    out
}

/// Where a raw entry came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Location {
    Line { line: usize, col: usize },
    Override(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line { line, col } => write!(f, "{line}:{col}"),
            Location::Override(i) => write!(f, "override {}", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// `section.key`, or a bare key for top-level entries.
    pub key: String,
    pub value: String,
    pub key_at: Location,
    pub value_at: Location,
}

fn parse_error(at: &Location, message: impl Into<String>) -> CliError {
    CliError::Parse {
        location: at.to_string(),
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Splits config text into entries. Only syntax is checked here.
pub fn parse_entries(text: &str) -> CliResult<Vec<Entry>> {
    let mut section: Option<String> = None;
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let indent = content.len() - content.trim_start().len();
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let at = |col: usize| Location::Line {
            line: line_no,
            col: col + 1,
        };
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(parse_error(&at(indent + trimmed.len()), "expected `]` closing the section header"));
            };
            let name = name.trim();
            if !is_ident(name) {
                return Err(parse_error(&at(indent + 1), format!("invalid section name `{name}`")));
            }
            section = Some(name.to_string());
            continue;
        }
        let Some(eq) = trimmed.find('=') else {
            return Err(parse_error(&at(indent + trimmed.len()), "expected `key = value`"));
        };
        let key = trimmed[..eq].trim();
        if !is_ident(key) {
            return Err(parse_error(&at(indent), format!("invalid key `{key}`")));
        }
        let after = &trimmed[eq + 1..];
        let value = after.trim();
        let value_col = indent + eq + 1 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(parse_error(&at(value_col), format!("missing value for `{key}`")));
        }
        let full = match &section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        if entries.iter().any(|e| e.key == full) {
            return Err(parse_error(&at(indent), format!("duplicate key `{full}`")));
        }
        entries.push(Entry {
            key: full,
            value: value.to_string(),
            key_at: at(indent),
            value_at: at(value_col),
        });
    }
    Ok(entries)
}

/// Parses `section.key=value` command-line overrides.
pub fn parse_overrides(overrides: &[String]) -> CliResult<Vec<Entry>> {
    overrides
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let at = Location::Override(i);
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| parse_error(&at, format!("expected `key=value`, got `{o}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let valid = match key.split_once('.') {
                Some((s, k)) => is_ident(s) && is_ident(k),
                None => is_ident(key),
            };
            if !valid {
                return Err(parse_error(&at, format!("invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(parse_error(&at, format!("missing value for `{key}`")));
            }
            Ok(Entry {
                key: key.to_string(),
                value: value.to_string(),
                key_at: at.clone(),
                value_at: at,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Integer(u64),
    Word(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => f.write_str(&format_float(*v)),
            Value::Integer(v) => write!(f, "{v}"),
            Value::Word(w) => f.write_str(w),
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_integer(s: &str) -> Option<u64> {
    s.parse::<u64>().ok().or_else(|| {
        parse_number(s).filter(|v| *v >= 0.0 && v.fract() == 0.0 && *v < 1.8e19).map(|v| v as u64)
    })
}

fn convert(ty: ValueType, entry: &Entry) -> CliResult<Value> {
    let s = entry.value.as_str();
    let bad = |what: &str| parse_error(&entry.value_at, format!("`{}` expects {what}, got `{s}`", entry.key));
    match ty {
        ValueType::Number => parse_number(s).map(Value::Number).ok_or_else(|| bad("a finite number")),
        ValueType::Integer => parse_integer(s).map(Value::Integer).ok_or_else(|| bad("a non-negative integer")),
        ValueType::NumberOrAuto if s == "auto" => Ok(Value::Word("auto".into())),
        ValueType::NumberOrAuto => parse_number(s).map(Value::Number).ok_or_else(|| bad("a number or `auto`")),
        ValueType::Choice(choices) if choices.contains(&s) => Ok(Value::Word(s.to_string())),
        ValueType::Choice(choices) => Err(bad(&format!("one of {}", choices.join(", ")))),
    }
}

/// A fully resolved configuration: every key of the kind's schema present.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    values: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    /// Parses config text and applies overrides in order; the last writer
    /// wins.
    pub fn parse(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut entries = parse_entries(text)?;
        entries.extend(parse_overrides(overrides)?);
        Self::resolve(&entries)
    }

    pub fn resolve(entries: &[Entry]) -> CliResult<Self> {
        let mut latest: BTreeMap<&str, &Entry> = BTreeMap::new();
        for e in entries {
            latest.insert(e.key.as_str(), e);
        }
        let kind_entry = latest
            .remove("kind")
            .ok_or_else(|| CliError::invalid("kind", "missing; one of pl-spectrum, pl-decay, hbt, stark-scan, shb, echo, purcell, ion-count"))?;
        let kind = Kind::from_name(&kind_entry.value).ok_or_else(|| {
            parse_error(&kind_entry.value_at, format!("unknown experiment kind `{}`", kind_entry.value))
        })?;
        let seed = match latest.remove("seed") {
            Some(e) => parse_integer(&e.value)
                .ok_or_else(|| parse_error(&e.value_at, format!("`seed` expects a 64-bit unsigned integer, got `{}`", e.value)))?,
            None => 0,
        };
        let params = schema(kind);
        if let Some((key, _)) = latest.iter().find(|(k, _)| !params.iter().any(|p| p.key == **k)) {
            return Err(CliError::invalid(*key, format!("unknown key for kind {kind}")));
        }
        let mut values = BTreeMap::new();
        for p in &params {
            let value = match latest.get(p.key) {
                Some(e) => convert(p.ty, e)?,
                None => match p.default {
                    DefaultValue::Required => {
                        return Err(CliError::invalid(p.key, format!("required for kind {kind} but missing")))
                    }
                    DefaultValue::Number(v) => Value::Number(v),
                    DefaultValue::Integer(v) => Value::Integer(v),
                    DefaultValue::Word(w) => Value::Word(w.to_string()),
                },
            };
            values.insert(p.key.to_string(), value);
        }
        Ok(Self { kind, seed, values })
    }

    /// Canonical text: every key, sections and keys sorted.
    pub fn canonical(&self) -> String {
        let mut out = format!("kind = {}\nseed = {}\n", self.kind, self.seed);
        let mut current = "";
        for (key, value) in &self.values {
            let (section, name) = key.split_once('.').expect("schema keys are dotted");
            if section != current {
                out.push_str(&format!("\n[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{name} = {value}\n"));
        }
        out
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }

    fn get(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("`{key}` is not a key of kind {}", self.kind))
    }

    pub fn number(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Number(v) => *v,
            Value::Integer(v) => *v as f64,
            Value::Word(w) => panic!("`{key}` holds `{w}`, not a number"),
        }
    }

    /// `None` when the key is `auto`.
    pub fn number_or_auto(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Value::Word(_) => None,
            _ => Some(self.number(key)),
        }
    }

    pub fn integer(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Integer(v) => *v,
            other => panic!("`{key}` holds `{other}`, not an integer"),
        }
    }

    pub fn word(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Word(w) => w,
            other => panic!("`{key}` holds `{other}`, not a word"),
        }
    }

    /// Full `section.key` whose key part is `name`, if unique in this kind.
    pub fn qualify(&self, name: &str) -> Option<String> {
        let name = match name {
            "resonance_wavelength" => "wavelength",
            "num_channels" => "channels",
            "pulse_period" => "period",
            "detection_window" => "window",
            "chopper_blanking" => "blanking",
            "laser_jitter_width" => "laser_jitter",
            "num_samples" => "samples",
            "noise_level" => "level",
            "num_bins" => "bins",
            other => other,
        };
        let mut hits = self.values.keys().filter(|k| k.split_once('.').map(|(_, n)| n) == Some(name));
        let first = hits.next()?;
        hits.next().is_none().then(|| first.clone())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_overrides() {
        let text = "kind = hbt  # comment\nseed = 9\n\n[detector]\ndark_rate = 12.7\n";
        let cfg = ExperimentConfig::parse(text, &["detector.dark_rate=3".into(), "seed=4".into()]).unwrap();
        assert_eq!(cfg.kind, Kind::Hbt);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.number("detector.dark_rate"), 3.0);
        assert_eq!(cfg.integer("detector.channels"), 2);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = ExperimentConfig::parse("kind = hbt\n[detector\n", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("2:10:"), "{err}");

        let err = ExperimentConfig::parse("kind = hbt\n  dark_rate 12\n", &[]).unwrap_err();
        assert!(err.to_string().starts_with("2:15:"), "{err}");

        let err = ExperimentConfig::parse("kind = hbt\n[detector]\ndark_rate = fast\n", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("3:13:"), "{err}");
    }

    #[test]
    fn missing_and_unknown_keys_are_invariant_violations() {
        let err = ExperimentConfig::parse("kind = hbt\n", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("detector.dark_rate"), "{err}");

        let err = ExperimentConfig::parse("kind = purcell\n[cavity]\ncolour = red\n", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("cavity.colour"), "{err}");
    }

    #[test]
    fn canonical_text_round_trips() {
        for kind in Kind::ALL {
            let mut text = format!("kind = {kind}\nseed = 18446744073709551615\n");
            if kind == Kind::Hbt {
                text.push_str("[detector]\ndark_rate = 1.2777e1\n");
            }
            let cfg = ExperimentConfig::parse(&text, &[]).unwrap();
            let again = ExperimentConfig::parse(&cfg.canonical(), &[]).unwrap();
            assert_eq!(cfg, again);
            assert_eq!(cfg.hash(), again.hash());
        }
    }

    #[test]
    fn qualify_finds_section() {
        let cfg = ExperimentConfig::parse("kind = pl-decay\n", &[]).unwrap();
        assert_eq!(cfg.qualify("dark_rate").as_deref(), Some("detector.dark_rate"));
        assert_eq!(cfg.qualify("nonexistent"), None);
    }
}
