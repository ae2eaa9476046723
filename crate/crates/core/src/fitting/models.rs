use std::f64::consts::LN_2;

use super::Dataset;

/// A parametric curve `y = f(θ, x)` with an initial-guess heuristic and box
/// bounds on its parameters.
#[derive(Clone)]
pub struct FitModel {
    pub name: &'static str,
    pub parameter_names: &'static [&'static str],
    pub bounds: Vec<(f64, f64)>,
    function: fn(&[f64], f64) -> f64,
    guess: fn(&Dataset) -> Vec<f64>,
    /// Indices of width-like parameters that enter squared; reported as
    /// their absolute value.
    even: &'static [usize],
}

impl std::fmt::Debug for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FitModel")
            .field("name", &self.name)
            .field("parameter_names", &self.parameter_names)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl FitModel {
    pub fn num_parameters(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn evaluate(&self, theta: &[f64], x: f64) -> f64 {
        (self.function)(theta, x)
    }

    pub fn curve(&self, theta: &[f64], xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.evaluate(theta, x)).collect()
    }

    pub fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        self.project(&(self.guess)(data))
    }

    pub(crate) fn project(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.bounds)
            .map(|(&t, &(lo, hi))| t.clamp(lo, hi))
            .collect()
    }

    pub(crate) fn canonicalize(&self, mut theta: Vec<f64>) -> Vec<f64> {
        for &i in self.even {
            theta[i] = theta[i].abs();
        }
        theta
    }
}

pub const MODEL_NAMES: &[&str] = &[
    "gaussian_line",
    "lorentzian_peak",
    "exponential_decay",
    "mims_decay_model",
    "linear_model",
    "hole_power_model",
];

pub fn model_by_name(name: &str) -> Option<FitModel> {
    Some(match name {
        "gaussian_line" => gaussian_line(),
        "lorentzian_peak" => lorentzian_peak(),
        "exponential_decay" => exponential_decay(),
        "mims_decay_model" => mims_decay_model(),
        "linear_model" => linear_model(),
        "hole_power_model" => hole_power_model(),
        _ => return None,
    })
}

const FREE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);
const POSITIVE: (f64, f64) = (f64::MIN_POSITIVE, f64::INFINITY);

/// Index of the largest value; ties go to the smallest index.
fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if v > y[best] {
            best = i;
        }
    }
    best
}

/// Amplitude, center, FWHM and offset read directly off a single peak.
fn peak_guess(data: &Dataset) -> Vec<f64> {
    let (x, y) = (&data.x, &data.y);
    if x.is_empty() {
        return vec![1.0, 0.0, 1.0, 0.0];
    }
    let offset = y.iter().copied().fold(f64::INFINITY, f64::min);
    let i = argmax(y);
    let amplitude = y[i] - offset;
    let half = offset + 0.5 * amplitude;
    let mut lo = i;
    while lo > 0 && y[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < y.len() && y[hi + 1] >= half {
        hi += 1;
    }
    let mut width = (x[hi] - x[lo]).abs();
    if width == 0.0 {
        let span = (x[x.len() - 1] - x[0]).abs();
        width = if x.len() > 1 { span / (x.len() - 1) as f64 } else { 1.0 };
    }
    if width == 0.0 {
        width = 1.0;
    }
    vec![amplitude, x[i], width, offset]
}

fn gaussian(theta: &[f64], x: f64) -> f64 {
    let u = (x - theta[1]) / theta[2];
    theta[0] * (-4.0 * LN_2 * u * u).exp() + theta[3]
}

/// Gaussian line parametrized by its FWHM.
pub fn gaussian_line() -> FitModel {
    FitModel {
        name: "gaussian_line",
        parameter_names: &["amplitude", "center", "fwhm", "offset"],
        bounds: vec![FREE; 4],
        function: gaussian,
        guess: peak_guess,
        even: &[2],
    }
}

fn lorentzian(theta: &[f64], x: f64) -> f64 {
    let u = 2.0 * (x - theta[1]) / theta[2];
    theta[0] / (1.0 + u * u) + theta[3]
}

/// Lorentzian peak parametrized by its FWHM.
pub fn lorentzian_peak() -> FitModel {
    FitModel {
        name: "lorentzian_peak",
        parameter_names: &["amplitude", "center", "fwhm", "offset"],
        bounds: vec![FREE; 4],
        function: lorentzian,
        guess: peak_guess,
        even: &[2],
    }
}

/// Least-squares line through `(x, y)`; `None` when x has no spread.
fn regress(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn span(x: &[f64]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

fn exponential(theta: &[f64], x: f64) -> f64 {
    theta[0] * (-x / theta[1]).exp() + theta[2]
}

fn exponential_guess(data: &Dataset) -> Vec<f64> {
    // Log-linear regression above the smallest sample, restricted to points
    // well clear of that baseline so its noise does not flatten the slope.
    let floor = data.y.iter().copied().fold(f64::INFINITY, f64::min);
    let peak = data.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let base = if floor > 0.0 { floor } else { 0.0 };
    let cut = 0.05 * (peak - base);
    let points: Vec<(f64, f64)> = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(_, &y)| y - base > cut && y > 0.0)
        .map(|(&x, &y)| (x, (y - base).ln()))
        .collect();
    match regress(&points) {
        Some((slope, intercept)) if slope < 0.0 => vec![intercept.exp(), -1.0 / slope, base],
        _ => {
            let amplitude = data.y.iter().copied().fold(0.0, f64::max);
            vec![amplitude.max(f64::MIN_POSITIVE), span(&data.x), 0.0]
        }
    }
}

/// `amplitude·exp(−x/lifetime) + offset`.
pub fn exponential_decay() -> FitModel {
    FitModel {
        name: "exponential_decay",
        parameter_names: &["amplitude", "lifetime", "offset"],
        bounds: vec![FREE, POSITIVE, FREE],
        function: exponential,
        guess: exponential_guess,
        even: &[],
    }
}

fn mims(theta: &[f64], t: f64) -> f64 {
    theta[0] * (-2.0 * (2.0 * t / theta[1]).powf(theta[2])).exp()
}

fn mims_guess(data: &Dataset) -> Vec<f64> {
    let i0 = data.y.iter().copied().fold(0.0, f64::max) * 1.0001;
    if !(i0 > 0.0) {
        return vec![1.0, span(&data.x), 2.0];
    }
    // ln(−ln(y/I0)) = ln 2 + m ln 2 + m ln t − m ln T_M
    let points: Vec<(f64, f64)> = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(&t, &y)| t > 0.0 && y > 0.0 && y < i0)
        .map(|(&t, &y)| (t.ln(), (-(y / i0).ln()).ln()))
        .collect();
    match regress(&points) {
        Some((m, b)) if m > 0.0 => {
            let t_m = 2.0 * (-(b - LN_2) / m).exp();
            vec![i0, t_m, m.clamp(1.0, 4.0)]
        }
        _ => vec![i0, span(&data.x), 2.0],
    }
}

/// Stretched-exponential echo decay `I0·exp(−2(2t/T_M)^m)`.
pub fn mims_decay_model() -> FitModel {
    FitModel {
        name: "mims_decay_model",
        parameter_names: &["I0", "T_M", "m"],
        bounds: vec![FREE, POSITIVE, (1.0, 4.0)],
        function: mims,
        guess: mims_guess,
        even: &[],
    }
}

fn line(theta: &[f64], x: f64) -> f64 {
    theta[0] * x + theta[1]
}

fn line_guess(data: &Dataset) -> Vec<f64> {
    let points: Vec<(f64, f64)> = data.x.iter().copied().zip(data.y.iter().copied()).collect();
    let mean = if points.is_empty() { 0.0 } else { data.y.iter().sum::<f64>() / points.len() as f64 };
    match regress(&points) {
        Some((slope, intercept)) => vec![slope, intercept],
        None => vec![0.0, mean],
    }
}

/// `slope·x + intercept`.
pub fn linear_model() -> FitModel {
    FitModel {
        name: "linear_model",
        parameter_names: &["slope", "intercept"],
        bounds: vec![FREE; 2],
        function: line,
        guess: line_guess,
        even: &[],
    }
}

fn hole_power(theta: &[f64], p: f64) -> f64 {
    theta[0] * (1.0 + (1.0 + p / theta[1]).sqrt())
}

fn hole_power_guess(data: &Dataset) -> Vec<f64> {
    if data.x.is_empty() {
        return vec![1.0, 1.0];
    }
    let i = data
        .x
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let p_max = data.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_sat = if p_max > 0.0 { p_max / 10.0 } else { 1.0 };
    vec![0.5 * data.y[i], p_sat]
}

/// Power-broadened hole width `Γ_hom·(1 + sqrt(1 + P/P_sat))`.
pub fn hole_power_model() -> FitModel {
    FitModel {
        name: "hole_power_model",
        parameter_names: &["gamma_hom", "P_sat"],
        bounds: vec![FREE, POSITIVE],
        function: hole_power,
        guess: hole_power_guess,
        even: &[],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
    }

    #[test]
    fn decay_guess_within_factor_two() {
        let x: Vec<f64> = (0..100).map(|i| i as f64 * 1e-6).collect();
        let y = x.iter().map(|t| 50.0 * (-t / 20e-6).exp()).collect();
        let g = exponential_decay().initial_guess(&Dataset::new(x, y).unwrap());
        assert!(g[1] > 10e-6 && g[1] < 40e-6, "{g:?}");
    }

    #[test]
    fn mims_guess_is_close_on_noiseless_data() {
        let x: Vec<f64> = (1..60).map(|i| i as f64 * 4e-6).collect();
        let y = x.iter().map(|&t| mims(&[1.0, 100e-6, 2.2], t)).collect();
        let g = mims_decay_model().initial_guess(&Dataset::new(x, y).unwrap());
        assert!((g[1] / 100e-6 - 1.0).abs() < 0.25, "{g:?}");
        assert!((g[2] - 2.2).abs() < 0.5, "{g:?}");
    }

    #[test]
    fn lookup_by_name() {
        for name in MODEL_NAMES {
            assert_eq!(model_by_name(name).unwrap().name, *name);
        }
        assert!(model_by_name("voigt").is_none());
    }
}
