use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{
    deltas, differential_energy, frame_count, FeatureConfig, FeatureError, FeatureSequence,
    FilterSpacing, WindowKind,
};

/// Log energy and cepstra of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFeatures {
    pub ef: f64,
    pub cepstra: Vec<f64>,
}

/// Precomputed window, FFT plan, filterbank and DCT basis for one
/// `(config, sample rate)` pair. Shareable across threads.
pub struct Extractor {
    cfg: FeatureConfig,
    fs: f64,
    window_len: usize,
    step: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    /// `filters[m]` holds `(bin, weight)` pairs with non-zero weight.
    filters: Vec<Vec<(usize, f64)>>,
    /// `dct[j - 1][m]` for cepstral index `j` in `1..=num_cepstra`.
    dct: Vec<Vec<f64>>,
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

impl Extractor {
    pub fn new(cfg: &FeatureConfig, fs: f64) -> Result<Self, FeatureError> {
        cfg.validate()?;
        let (window_len, step) = cfg.lengths(fs);
        if window_len < 2 || step == 0 {
            return Err(FeatureError::InvalidConfig(format!(
                "window {window_len} / step {step} samples at {fs} Hz is too small"
            )));
        }
        let n = window_len;
        let window = (0..n)
            .map(|i| {
                let phase = 2.0 * PI * i as f64 / (n - 1) as f64;
                match cfg.window {
                    WindowKind::Hann => 0.5 - 0.5 * phase.cos(),
                    WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n);

        let nyquist = fs / 2.0;
        let nf = cfg.num_filters;
        let edges: Vec<f64> = match cfg.spacing {
            FilterSpacing::Linear => (0..nf + 2).map(|i| nyquist * i as f64 / (nf + 1) as f64).collect(),
            FilterSpacing::Mel => {
                let top = hz_to_mel(nyquist);
                (0..nf + 2)
                    .map(|i| mel_to_hz(top * i as f64 / (nf + 1) as f64))
                    .collect()
            }
        };
        let bins = n / 2 + 1;
        let filters = (0..nf)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..bins)
                    .filter_map(|k| {
                        let f = k as f64 * fs / n as f64;
                        let w = if f > lo && f <= mid {
                            (f - lo) / (mid - lo)
                        } else if f > mid && f < hi {
                            (hi - f) / (hi - mid)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect()
            })
            .collect();

        let scale = (2.0 / nf as f64).sqrt();
        let dct = (1..=cfg.num_cepstra)
            .map(|j| {
                (0..nf)
                    .map(|m| scale * (PI * j as f64 * (m as f64 + 0.5) / nf as f64).cos())
                    .collect()
            })
            .collect();

        Ok(Extractor {
            cfg: cfg.clone(),
            fs,
            window_len,
            step,
            window,
            fft,
            filters,
            dct,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn sample_rate(&self) -> f64 {
        self.fs
    }

    /// The analysis window coefficients.
    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// One-sided power spectrum of the windowed frame, scaled so that its sum
    /// equals the windowed frame's time-domain energy.
    pub fn power_spectrum(&self, frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let n = self.window_len;
        if frame.len() != n {
            return Err(FeatureError::FrameLength {
                expected: n,
                found: frame.len(),
            });
        }
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(&x, &w)| Complex::new(x * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        Ok((0..=n / 2)
            .map(|k| {
                let p = buf[k].norm_sqr() * inv_n;
                // interior bins stand for their negative-frequency mirror too
                if k == 0 || (n % 2 == 0 && k == n / 2) {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect())
    }

    pub fn base(&self, frame: &[f64]) -> Result<BaseFeatures, FeatureError> {
        let power = self.power_spectrum(frame)?;
        let floor = self.cfg.energy_floor;
        let ef = power.iter().sum::<f64>().max(floor).ln();
        let log_bank: Vec<f64> = self
            .filters
            .iter()
            .map(|f| f.iter().map(|&(k, w)| w * power[k]).sum::<f64>().max(floor).ln())
            .collect();
        let cepstra = self
            .dct
            .iter()
            .map(|basis| basis.iter().zip(&log_bank).map(|(b, l)| b * l).sum())
            .collect();
        Ok(BaseFeatures { ef, cepstra })
    }

    /// Full feature sequence for one channel.
    pub fn sequence(&self, label: &str, samples: &[f64]) -> Result<FeatureSequence, FeatureError> {
        let frames = frame_count(samples.len(), self.fs, &self.cfg)?;
        let layout = self.cfg.layout();
        let base_dims = layout.base_dims();
        let nc = self.cfg.num_cepstra;

        // base tracks, column-major: [Ef, c1..c_nc, Ed]
        let mut tracks = vec![Vec::with_capacity(frames); base_dims];
        for t in 0..frames {
            let start = t * self.step;
            let b = self.base(&samples[start..start + self.window_len])?;
            tracks[0].push(b.ef);
            for (j, c) in b.cepstra.into_iter().enumerate() {
                tracks[j + 1].push(c);
            }
        }
        let m = self.cfg.diff_energy_halfwidth;
        tracks[nc + 1] = (0..frames).map(|t| differential_energy(&tracks[0], t, m)).collect();

        let n = self.cfg.delta_halfwidth;
        let d: Vec<Vec<f64>> = tracks.iter().map(|tr| deltas(tr, n)).collect();
        let dd: Vec<Vec<f64>> = d[..nc + 1].iter().map(|tr| deltas(tr, n)).collect();

        let dims = layout.dims();
        let mut data = Vec::with_capacity(frames * dims);
        for t in 0..frames {
            data.extend(tracks.iter().map(|tr| tr[t]));
            data.extend(d.iter().map(|tr| tr[t]));
            data.extend(dd.iter().map(|tr| tr[t]));
        }
        Ok(FeatureSequence::from_rows(label, self.cfg.frame_s, dims, data))
    }
}

/// Convenience wrapper building a one-off [`Extractor`].
pub fn base_features(frame: &[f64], fs: f64, cfg: &FeatureConfig) -> Result<BaseFeatures, FeatureError> {
    Extractor::new(cfg, fs)?.base(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(n: usize, fs: f64, f: f64, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn zero_frame_gives_floor_and_zero_cepstra() {
        let cfg = FeatureConfig::default();
        let b = base_features(&[0.0; 50], 250.0, &cfg).unwrap();
        assert_eq!(b.ef, cfg.energy_floor.ln());
        assert_eq!(b.cepstra.len(), 7);
        for c in b.cepstra {
            assert!(c.abs() < 1e-12, "{c}");
        }
    }

    #[test]
    fn parseval_against_time_domain() {
        let cfg = FeatureConfig::default();
        let ex = Extractor::new(&cfg, 250.0).unwrap();
        for (f, amp) in [(3.0, 40.0), (17.5, 2.0), (61.0, 0.1)] {
            let x = sine(50, 250.0, f, amp);
            let spec: f64 = ex.power_spectrum(&x).unwrap().iter().sum();
            let time: f64 = x.iter().zip(ex.window()).map(|(x, w)| (w * x).powi(2)).sum();
            assert!((spec - time).abs() <= 1e-6 * time);
        }
        // odd-length window
        let ex = Extractor::new(&cfg, 255.0).unwrap();
        assert_eq!(ex.window_len(), 51);
        let x = sine(51, 255.0, 9.0, 5.0);
        let spec: f64 = ex.power_spectrum(&x).unwrap().iter().sum();
        let time: f64 = x.iter().zip(ex.window()).map(|(x, w)| (w * x).powi(2)).sum();
        assert!((spec - time).abs() <= 1e-6 * time);
    }

    #[test]
    fn gain_shifts_only_log_energy() {
        let cfg = FeatureConfig::default();
        let ex = Extractor::new(&cfg, 250.0).unwrap();
        let x: Vec<f64> = sine(50, 250.0, 7.0, 3.0)
            .iter()
            .zip(sine(50, 250.0, 31.0, 1.0))
            .map(|(a, b)| a + b + 0.5)
            .collect();
        let g = 3.7;
        let y: Vec<f64> = x.iter().map(|v| g * v).collect();
        let a = ex.base(&x).unwrap();
        let b = ex.base(&y).unwrap();
        assert!((b.ef - a.ef - 2.0 * g.ln()).abs() < 1e-9);
        for (ca, cb) in a.cepstra.iter().zip(&b.cepstra) {
            assert!((ca - cb).abs() < 1e-9);
        }
    }

    #[test]
    fn filterbank_covers_every_filter() {
        for spacing in [FilterSpacing::Linear, FilterSpacing::Mel] {
            let cfg = FeatureConfig {
                spacing,
                ..FeatureConfig::default()
            };
            let ex = Extractor::new(&cfg, 250.0).unwrap();
            assert_eq!(ex.filters.len(), 8);
            assert!(ex.filters.iter().all(|f| !f.is_empty()), "{spacing:?}");
        }
    }

    #[test]
    fn wrong_frame_length() {
        let ex = Extractor::new(&FeatureConfig::default(), 250.0).unwrap();
        assert_eq!(
            ex.base(&[0.0; 10]).unwrap_err(),
            FeatureError::FrameLength {
                expected: 50,
                found: 10
            }
        );
    }
}
