//! Pulsed Hanbury Brown-Twiss correlation.
//!
//! All detections within one pulse's window count as a single time bin, so
//! the correlation is a function of pulse separation only. The coincidence
//! count at separation `k` is `Σ_p n₀(p)·n₁(p+k)` over pulses `p`.

use super::{generate_events, ion_source, DetectionSummary, DetectorModel, PhotonEventStream, PulseSequenceConfig};
use crate::emitter::IonRecord;
use crate::error::{ensure, Error, Result};
use crate::physics::CavityMode;

/// Two-channel coincidences against pulse separation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    /// Channel-1 pulse index minus channel-0 pulse index.
    pub separations: Vec<i64>,
    pub coincidences: Vec<u64>,
    /// Number of pulse pairs contributing to each separation.
    pub pulse_pairs: Vec<u64>,
}

impl CoincidenceHistogram {
    pub fn new(separations: Vec<i64>, coincidences: Vec<u64>, pulse_pairs: Vec<u64>) -> Result<Self> {
        ensure(
            separations.len() == coincidences.len() && separations.len() == pulse_pairs.len(),
            "histogram",
            "separations, coincidences and pulse_pairs differ in length",
        )?;
        ensure(
            pulse_pairs.iter().all(|&n| n > 0),
            "pulse_pairs",
            "every separation needs at least one pulse pair",
        )?;
        Ok(Self {
            separations,
            coincidences,
            pulse_pairs,
        })
    }

    /// Coincidences per pulse pair.
    pub fn rates(&self) -> Vec<f64> {
        self.coincidences
            .iter()
            .zip(&self.pulse_pairs)
            .map(|(&c, &n)| c as f64 / n as f64)
            .collect()
    }

    /// Rates normalized to the mean distinct-pulse rate.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let reference = self.distinct_rate()?.0;
        Ok(self.rates().into_iter().map(|r| r / reference).collect())
    }

    fn distinct_rate(&self) -> Result<(f64, u64)> {
        let (sum, n, counts) = self
            .separations
            .iter()
            .zip(self.rates())
            .zip(&self.coincidences)
            .filter(|((&k, _), _)| k != 0)
            .fold((0.0, 0usize, 0u64), |(s, n, c), ((_, r), &cnt)| (s + r, n + 1, c + cnt));
        if n == 0 {
            return Err(Error::Undefined("no distinct-pulse separations".into()));
        }
        if counts == 0 {
            return Err(Error::Undefined(
                "no distinct-pulse coincidences; g2(0) has no reference".into(),
            ));
        }
        Ok((sum / n as f64, counts))
    }
}

/// `g²(0)` with its one-standard-deviation counting error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Estimate {
    pub g2_zero: f64,
    pub sigma: f64,
}

/// Same-pulse coincidence rate over the mean distinct-pulse rate.
pub fn estimate_g2(hist: &CoincidenceHistogram) -> Result<G2Estimate> {
    ensure(
        hist.separations.len() >= 2,
        "histogram",
        "at least two separation bins are required",
    )?;
    let zero = hist
        .separations
        .iter()
        .position(|&k| k == 0)
        .ok_or_else(|| Error::domain("histogram", "no zero-separation bin"))?;
    let (reference, distinct_counts) = hist.distinct_rate()?;
    let same_counts = hist.coincidences[zero];
    let same_rate = same_counts as f64 / hist.pulse_pairs[zero] as f64;
    let g2_zero = same_rate / reference;
    // Poisson counting errors of numerator and denominator. An empty
    // zero bin is assigned the weight of a single count.
    let sigma = if same_counts > 0 {
        g2_zero * (1.0 / same_counts as f64 + 1.0 / distinct_counts as f64).sqrt()
    } else {
        (1.0 / hist.pulse_pairs[zero] as f64) / reference
    };
    Ok(G2Estimate { g2_zero, sigma })
}

/// `(2·SNR + 1) / (SNR + 1)²`: g²(0) of an ideal single emitter mixed with
/// Poissonian noise.
pub fn g2_from_snr(snr: f64) -> Result<f64> {
    ensure(snr >= 0.0, "snr", format!("must be non-negative, got {snr}"))?;
    if snr.is_infinite() {
        return Ok(0.0);
    }
    Ok((2.0 * snr + 1.0) / ((snr + 1.0) * (snr + 1.0)))
}

/// Builds the coincidence histogram for separations `-max_separation..=max_separation`.
pub fn coincidence_histogram(stream: &PhotonEventStream, max_separation: u64) -> Result<CoincidenceHistogram> {
    ensure(
        stream.detector.num_channels == 2,
        "num_channels",
        "coincidences need a two-channel detector",
    )?;
    ensure(max_separation >= 1, "max_separation", "must be at least 1")?;
    let n = stream.config.num_pulses;
    ensure(
        max_separation < n,
        "max_separation",
        format!("must be below the number of pulses ({n})"),
    )?;

    // Sparse per-pulse counts, sorted by pulse index.
    let mut ch0: Vec<(u64, u64)> = Vec::new();
    let mut ch1: Vec<(u64, u64)> = Vec::new();
    for e in &stream.events {
        let list = if e.channel == 0 { &mut ch0 } else { &mut ch1 };
        match list.last_mut() {
            Some((p, c)) if *p == e.pulse_index => *c += 1,
            _ => list.push((e.pulse_index, 1)),
        }
    }

    let m = max_separation as i64;
    let mut separations = Vec::new();
    let mut coincidences = Vec::new();
    let mut pulse_pairs = Vec::new();
    for k in -m..=m {
        let mut total = 0u64;
        let mut j = 0usize;
        for &(p, c0) in &ch0 {
            let target = p as i64 + k;
            while j < ch1.len() && (ch1[j].0 as i64) < target {
                j += 1;
            }
            if j < ch1.len() && ch1[j].0 as i64 == target {
                total += c0 * ch1[j].1;
            }
        }
        separations.push(k);
        coincidences.push(total);
        pulse_pairs.push(n - k.unsigned_abs());
    }
    CoincidenceHistogram::new(separations, coincidences, pulse_pairs)
}

/// Coincidence histogram plus the signal/noise summary of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct HbtResult {
    pub histogram: CoincidenceHistogram,
    pub expected: DetectionSummary,
    pub measured: DetectionSummary,
}

/// HBT measurement on one ion behind a balanced splitter.
pub fn simulate_hbt(
    ion: &IonRecord,
    cavity: &CavityMode,
    config: &PulseSequenceConfig,
    detector: &DetectorModel,
    max_separation: u64,
    seed: u64,
) -> Result<HbtResult> {
    ensure(
        detector.num_channels == 2,
        "num_channels",
        "an HBT measurement needs a two-channel detector",
    )?;
    let source = ion_source(ion, cavity, config);
    let stream = generate_events(&[source], config, detector, seed)?;
    Ok(HbtResult {
        histogram: coincidence_histogram(&stream, max_separation)?,
        expected: DetectionSummary::expected(&[source], config, detector),
        measured: DetectionSummary::measured(&stream),
    })
}
