//! Deterministic synthetic EEG for desk-scale experiments.
//!
//! Each channel is Voss-McCartney pink noise plus a class-dependent
//! component: a 3 Hz-range oscillation during SEIZ spans and beta-band
//! (13-30 Hz) ripple during BCKG spans. Spans alternate BCKG/SEIZ in fixed
//! `segment_s` blocks. A montage bias (`gain * x + offset`) is applied last.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::labels::{LabelEvent, LabelSet};
use super::recording::{ChannelSignal, Recording};
use crate::{EventClass, ReferenceScheme};

/// 10-20 electrodes of a standard clinical referential recording.
pub const STANDARD_1020: [&str; 21] = [
    "FP1", "FP2", "F7", "F3", "FZ", "F4", "F8", "A1", "T3", "C3", "CZ", "C4", "T4", "A2", "T5",
    "P3", "PZ", "P4", "T6", "O1", "O2",
];

const PINK_ROWS: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeizureProfile {
    /// Centre frequency of the rhythmic burst.
    pub freq_hz: f64,
    /// Per-segment frequency jitter, uniform in `±jitter_hz`.
    pub jitter_hz: f64,
    pub amplitude: f64,
}

impl Default for SeizureProfile {
    fn default() -> Self {
        SeizureProfile {
            freq_hz: 3.0,
            jitter_hz: 0.3,
            amplitude: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundProfile {
    pub band_hz: (f64, f64),
    pub components: usize,
    /// Amplitude of each ripple component.
    pub amplitude: f64,
}

impl Default for BackgroundProfile {
    fn default() -> Self {
        BackgroundProfile {
            band_hz: (13.0, 30.0),
            components: 3,
            amplitude: 6.0,
        }
    }
}

/// Distortion applied to every channel to emulate a reference-dependent bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MontageBias {
    pub gain: f64,
    pub offset: f64,
}

impl Default for MontageBias {
    fn default() -> Self {
        MontageBias {
            gain: 1.0,
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub electrodes: Vec<String>,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Length of each alternating BCKG/SEIZ span.
    pub segment_s: f64,
    /// Standard deviation of the pink-noise floor, in microvolts.
    pub pink_amplitude: f64,
    pub seizure: SeizureProfile,
    pub background: BackgroundProfile,
    pub bias: MontageBias,
    pub reference: ReferenceScheme,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            electrodes: STANDARD_1020.iter().map(|s| s.to_string()).collect(),
            sample_rate_hz: 250.0,
            duration_s: 60.0,
            segment_s: 10.0,
            pink_amplitude: 10.0,
            seizure: SeizureProfile::default(),
            background: BackgroundProfile::default(),
            bias: MontageBias::default(),
            reference: ReferenceScheme::Unknown,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sample_rate_hz) {
            return Err(SynthError::InvalidConfig(format!(
                "sample rate {} must be positive",
                self.sample_rate_hz
            )));
        }
        if !positive(self.duration_s) {
            return Err(SynthError::InvalidConfig(format!(
                "duration {} must be positive",
                self.duration_s
            )));
        }
        if !positive(self.segment_s) {
            return Err(SynthError::InvalidConfig(format!(
                "segment length {} must be positive",
                self.segment_s
            )));
        }
        if self.electrodes.is_empty() {
            return Err(SynthError::InvalidConfig("no electrodes".into()));
        }
        let (lo, hi) = self.background.band_hz;
        if !(lo > 0.0 && lo <= hi) {
            return Err(SynthError::InvalidConfig(format!("bad background band {lo}..{hi}")));
        }
        Ok(())
    }
}

/// Voss-McCartney pink noise: a bank of white rows where row `k` is redrawn
/// every `2^k` samples, plus one fresh white term per sample.
struct PinkNoise {
    rows: [f64; PINK_ROWS],
    sum: f64,
    counter: u64,
    scale: f64,
}

impl PinkNoise {
    fn new(rng: &mut ChaCha8Rng, std_dev: f64) -> Self {
        let mut rows = [0.0; PINK_ROWS];
        for r in rows.iter_mut() {
            *r = rng.sample(StandardNormal);
        }
        PinkNoise {
            sum: rows.iter().sum(),
            rows,
            counter: 0,
            scale: std_dev / ((PINK_ROWS + 1) as f64).sqrt(),
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.counter = self.counter.wrapping_add(1);
        let k = self.counter.trailing_zeros() as usize;
        if k < PINK_ROWS {
            let fresh: f64 = rng.sample(StandardNormal);
            self.sum += fresh - self.rows[k];
            self.rows[k] = fresh;
        }
        let white: f64 = rng.sample(StandardNormal);
        (self.sum + white) * self.scale
    }
}

struct SegmentPlan {
    start: usize,
    stop: usize,
    class: EventClass,
    seiz_freq: f64,
    seiz_phase: f64,
    ripple: Vec<(f64, f64)>,
}

fn plan_segments(cfg: &SynthConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<SegmentPlan> {
    let fs = cfg.sample_rate_hz;
    let seg_len = ((cfg.segment_s * fs).round() as usize).max(1);
    let mut plans = Vec::new();
    let mut start = 0;
    let mut idx = 0;
    while start < n {
        let stop = (start + seg_len).min(n);
        let class = if idx % 2 == 0 {
            EventClass::Bckg
        } else {
            EventClass::Seiz
        };
        let j = cfg.seizure.jitter_hz;
        let seiz_freq = cfg.seizure.freq_hz + if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 };
        let seiz_phase = rng.random_range(0.0..TAU);
        let (lo, hi) = cfg.background.band_hz;
        let ripple = (0..cfg.background.components)
            .map(|_| (rng.random_range(lo..=hi), rng.random_range(0.0..TAU)))
            .collect();
        plans.push(SegmentPlan {
            start,
            stop,
            class,
            seiz_freq,
            seiz_phase,
            ripple,
        });
        start = stop;
        idx += 1;
    }
    plans
}

/// Generates a recording and its labels. A pure function of `(cfg, seed)`.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<(Recording, LabelSet), SynthError> {
    cfg.validate()?;
    let fs = cfg.sample_rate_hz;
    let n = (cfg.duration_s * fs).round() as usize;
    if n == 0 {
        return Err(SynthError::InvalidConfig("duration shorter than one sample".into()));
    }

    let mut plan_rng = ChaCha8Rng::seed_from_u64(seed);
    let plans = plan_segments(cfg, n, &mut plan_rng);
    // channel-level amplitude factors, shared plan stream
    let gains: Vec<f64> = cfg
        .electrodes
        .iter()
        .map(|_| plan_rng.random_range(0.8..1.2))
        .collect();

    let channels: Vec<ChannelSignal> = crate::par::map_range(cfg.electrodes.len(), |ch| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ch as u64 + 1);
        let mut pink = PinkNoise::new(&mut rng, cfg.pink_amplitude);
        let mut samples = Vec::with_capacity(n);
        for plan in &plans {
            for i in plan.start..plan.stop {
                let t = i as f64 / fs;
                let mut x = pink.next(&mut rng);
                match plan.class {
                    EventClass::Seiz => {
                        x += gains[ch]
                            * cfg.seizure.amplitude
                            * (TAU * plan.seiz_freq * t + plan.seiz_phase).sin();
                    }
                    EventClass::Bckg => {
                        for &(f, phase) in &plan.ripple {
                            x += gains[ch] * cfg.background.amplitude * (TAU * f * t + phase).sin();
                        }
                    }
                }
                samples.push(cfg.bias.gain * x + cfg.bias.offset);
            }
        }
        ChannelSignal::new(cfg.electrodes[ch].clone(), samples)
    });

    let id = format!("synth-{seed}");
    let rec = Recording::new(id.clone(), fs, channels, cfg.reference)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let events = plans
        .iter()
        .map(|p| LabelEvent {
            start_s: p.start as f64 / fs,
            stop_s: p.stop as f64 / fs,
            class: p.class,
        })
        .collect();
    let labels = LabelSet::new(id, events).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    Ok((rec, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            electrodes: vec!["FP1".into(), "F7".into(), "A1".into()],
            duration_s: 20.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&small(), 9).unwrap();
        let b = generate_synthetic(&small(), 9).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&small(), 10).unwrap();
        assert_ne!(a.0.channels()[0].samples, c.0.channels()[0].samples);
    }

    #[test]
    fn unit_bias_differs_only_in_tag() {
        let le = SynthConfig {
            reference: ReferenceScheme::Le,
            ..small()
        };
        let ar = SynthConfig {
            reference: ReferenceScheme::Ar,
            ..small()
        };
        let (a, la) = generate_synthetic(&le, 3).unwrap();
        let (b, lb) = generate_synthetic(&ar, 3).unwrap();
        assert_eq!(a.channels(), b.channels());
        assert_eq!(la, lb);
        assert_eq!(a.reference_scheme(), ReferenceScheme::Le);
        assert_eq!(b.reference_scheme(), ReferenceScheme::Ar);
    }

    #[test]
    fn rejects_non_positive_rate_or_duration() {
        let mut cfg = small();
        cfg.sample_rate_hz = 0.0;
        assert!(generate_synthetic(&cfg, 1).is_err());
        let mut cfg = small();
        cfg.duration_s = -1.0;
        assert!(generate_synthetic(&cfg, 1).is_err());
    }

    #[test]
    fn labels_alternate_and_cover_recording() {
        let (rec, labels) = generate_synthetic(&small(), 1).unwrap();
        let ev = labels.events();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].class, EventClass::Bckg);
        assert_eq!(ev[1].class, EventClass::Seiz);
        assert_eq!(ev[1].stop_s, rec.duration_s());
    }

    /// Direct O(n^2) periodogram; independent of the feature FFT path.
    fn periodogram_peak_hz(x: &[f64], fs: f64) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut best = (0.0, 0usize);
        for k in 1..=n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                let a = TAU * (k * i) as f64 / n as f64;
                re += (v - mean) * a.cos();
                im -= (v - mean) * a.sin();
            }
            let p = re * re + im * im;
            if p > best.0 {
                best = (p, k);
            }
        }
        best.1 as f64 * fs / n as f64
    }

    #[test]
    fn seizure_spectrum_peaks_below_5hz() {
        let (rec, labels) = generate_synthetic(&small(), 5).unwrap();
        let seiz = labels.events().iter().find(|e| e.class == EventClass::Seiz).unwrap();
        let fs = rec.sample_rate_hz();
        let a = (seiz.start_s * fs) as usize;
        let b = a + 1000;
        for ch in rec.channels() {
            let peak = periodogram_peak_hz(&ch.samples[a..b], fs);
            assert!(peak < 5.0, "{}: peak at {peak} Hz", ch.label);
        }
    }
}
