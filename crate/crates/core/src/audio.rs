//! Audio preprocessing: resampling, peak normalization, stationary noise
//! removal by spectral subtraction, and log-energy voice activity detection.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft_in_place, Complex};

/// Sample rate every downstream stage assumes.
pub const PIPELINE_RATE: u32 = 16_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    /// Samples must be finite and within [−1, 1].
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite() || x.abs() > 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "sample {i} is {} (must be finite and within [-1, 1])",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Averages interleaved channels into one.
    pub fn from_interleaved(interleaved: &[f64], channels: usize, sample_rate: u32) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidInput("zero channels".into()));
        }
        let mono = interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect();
        Self::new(mono, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Sub-signal covering `span`, clamped to the signal bounds.
    pub fn slice(&self, span: &SegmentSpan) -> AudioSignal {
        let sr = f64::from(self.sample_rate);
        let start = ((span.start_s * sr).round() as usize).min(self.len());
        let end = ((span.end_s * sr).round() as usize).clamp(start, self.len());
        AudioSignal {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// A speech segment `[start_s, end_s)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl SegmentSpan {
    pub const MAX_LEN_S: f64 = 10.0;

    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !(start_s >= 0.0 && start_s < end_s && end_s.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "segment [{start_s}, {end_s}) is not a valid span"
            )));
        }
        Ok(Self { start_s, end_s })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Windowed-sinc (Blackman) resampling to `target_rate`.
pub fn resample(signal: &AudioSignal, target_rate: u32) -> AudioSignal {
    if signal.sample_rate == target_rate || signal.is_empty() {
        return AudioSignal {
            samples: signal.samples.clone(),
            sample_rate: target_rate,
        };
    }
    const ZERO_CROSSINGS: f64 = 16.0;
    let src = f64::from(signal.sample_rate);
    let dst = f64::from(target_rate);
    let step = src / dst;
    // cutoff relative to the input Nyquist
    let ratio = (dst / src).min(1.0);
    let half_width = ZERO_CROSSINGS / ratio;
    let n_in = signal.len();
    let n_out = ((n_in as f64) * dst / src).ceil() as usize;
    let x = &signal.samples;
    let samples = (0..n_out)
        .map(|n| {
            let t = n as f64 * step;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(n_in - 1);
            let mut acc = 0.0;
            for (k, &xk) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let d = t - k as f64;
                let u = d / half_width;
                let window = 0.42 + 0.5 * (PI * u).cos() + 0.08 * (2.0 * PI * u).cos();
                acc += xk * ratio * sinc(ratio * d) * window;
            }
            acc.clamp(-1.0, 1.0)
        })
        .collect();
    AudioSignal {
        samples,
        sample_rate: target_rate,
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

pub const DEFAULT_TARGET_DBFS: f64 = -3.0;

/// Scales the signal so its peak sits at `target_dbfs`.
pub fn normalize_volume(signal: &AudioSignal, target_dbfs: f64) -> Result<AudioSignal> {
    let peak = signal.peak();
    if peak <= 0.0 {
        return Err(Error::SilentSignal);
    }
    let target = 10f64.powf(target_dbfs / 20.0);
    if target > 1.0 {
        return Err(Error::InvalidInput(alloc::format!(
            "target {target_dbfs} dBFS is above full scale"
        )));
    }
    let gain = target / peak;
    Ok(AudioSignal {
        samples: signal.samples.iter().map(|x| (x * gain).clamp(-1.0, 1.0)).collect(),
        sample_rate: signal.sample_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    /// STFT frame length in samples (power of two).
    pub frame_len: usize,
    pub hop: usize,
    /// Fraction of lowest-energy frames that define the noise profile.
    pub noise_fraction: f64,
    /// Magnitude floor as a fraction of the noisy magnitude.
    pub floor: f64,
    /// Multiplier on the noise profile before subtraction.
    pub oversubtraction: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            frame_len: 512,
            hop: 256,
            noise_fraction: 0.1,
            floor: 0.05,
            oversubtraction: 2.0,
        }
    }
}

/// Magnitude spectral subtraction with a noise profile taken from the
/// lowest-energy frames. Output has the input's length.
pub fn denoise_stationary(signal: &AudioSignal, config: &DenoiseConfig) -> Result<AudioSignal> {
    let n = signal.len();
    let fl = config.frame_len;
    if !fl.is_power_of_two() || config.hop == 0 || config.hop > fl {
        return Err(Error::InvalidInput("denoise frame/hop configuration".into()));
    }
    if n < fl {
        return Err(Error::SignalTooShort { needed: fl, got: n });
    }
    let hop = config.hop;
    let pad = fl / 2;
    let n_frames = (n + 2 * pad - fl).div_ceil(hop) + 1;
    let padded_len = (n_frames - 1) * hop + fl;
    let mut padded = vec![0.0; padded_len];
    padded[pad..pad + n].copy_from_slice(&signal.samples);

    // sqrt-Hann analysis and synthesis windows
    let window: Vec<f64> = (0..fl)
        .map(|i| (0.5 - 0.5 * (2.0 * PI * i as f64 / fl as f64).cos()).sqrt())
        .collect();

    let mut spectra: Vec<Vec<Complex>> = Vec::with_capacity(n_frames);
    let mut energies: Vec<f64> = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let frame = &padded[f * hop..f * hop + fl];
        energies.push(frame.iter().map(|x| x * x).sum());
        let mut buf: Vec<Complex> = frame
            .iter()
            .zip(&window)
            .map(|(x, w)| Complex::new(x * w, 0.0))
            .collect();
        fft_in_place(&mut buf, false);
        spectra.push(buf);
    }

    let mut order: Vec<usize> = (0..n_frames).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let n_noise = ((n_frames as f64 * config.noise_fraction).ceil() as usize).clamp(1, n_frames);
    let mut noise = vec![0.0; fl];
    for &f in &order[..n_noise] {
        for (acc, c) in noise.iter_mut().zip(&spectra[f]) {
            *acc += c.norm();
        }
    }
    for v in noise.iter_mut() {
        *v /= n_noise as f64;
    }

    let mut out = vec![0.0; padded_len];
    let mut weight = vec![0.0; padded_len];
    for (f, spec) in spectra.iter_mut().enumerate() {
        for (c, &nm) in spec.iter_mut().zip(&noise) {
            let mag = c.norm();
            if mag == 0.0 {
                continue;
            }
            let cleaned = (mag - config.oversubtraction * nm).max(config.floor * mag);
            *c = c.scale(cleaned / mag);
        }
        fft_in_place(spec, true);
        for (i, (c, w)) in spec.iter().zip(&window).enumerate() {
            out[f * hop + i] += c.re * w;
            weight[f * hop + i] += w * w;
        }
    }
    let samples = (pad..pad + n)
        .map(|i| {
            if weight[i] > 1e-10 {
                (out[i] / weight[i]).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(AudioSignal {
        samples,
        sample_rate: signal.sample_rate,
    })
}

/// Decibel reference for absolute VAD thresholds: frame mean-square 1e−10,
/// so a full-scale frame sits near 100 dB.
pub const VAD_REFERENCE_POWER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VadThreshold {
    /// Fixed log-energy level in dB re [`VAD_REFERENCE_POWER`].
    Absolute { db: f64 },
    /// Loudest frame's level minus a margin; invariant to signal gain.
    RelativeToPeak { margin_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadConfig {
    pub threshold: VadThreshold,
    pub frame_len_s: f64,
    pub hop_s: f64,
    /// Voiced runs separated by less than this are merged.
    pub min_gap_s: f64,
    /// Spans shorter than this are dropped.
    pub min_span_s: f64,
    pub max_len_s: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            threshold: VadThreshold::Absolute { db: 65.0 },
            frame_len_s: 0.025,
            hop_s: 0.010,
            min_gap_s: 0.3,
            min_span_s: 0.1,
            max_len_s: SegmentSpan::MAX_LEN_S,
        }
    }
}

/// Per-frame log energy in dB re [`VAD_REFERENCE_POWER`]. Silent frames give −∞.
pub fn frame_log_energy_db(samples: &[f64], frame_len: usize, hop: usize) -> Vec<f64> {
    frame_starts(samples.len(), frame_len, hop)
        .map(|s| {
            let frame = &samples[s..(s + frame_len).min(samples.len())];
            let ms = frame.iter().map(|x| x * x).sum::<f64>() / frame.len().max(1) as f64;
            if ms > 0.0 {
                10.0 * (ms / VAD_REFERENCE_POWER).log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Frame start offsets; a signal shorter than one frame yields a single frame.
fn frame_starts(n: usize, frame_len: usize, hop: usize) -> impl Iterator<Item = usize> {
    let count = if n <= frame_len { 1 } else { (n - frame_len) / hop + 1 };
    (0..count).map(move |i| i * hop)
}

/// Energy-threshold voice activity detection producing spans of at most
/// `config.max_len_s` seconds.
pub fn vad_segment(signal: &AudioSignal, config: &VadConfig) -> Result<Vec<SegmentSpan>> {
    if signal.is_empty() {
        return Err(Error::Empty("signal"));
    }
    if !(config.max_len_s > 0.0 && config.hop_s > 0.0 && config.frame_len_s >= config.hop_s) {
        return Err(Error::InvalidInput("vad frame/hop/max length configuration".into()));
    }
    let sr = f64::from(signal.sample_rate);
    let frame_len = ((config.frame_len_s * sr).round() as usize).max(1);
    let hop = ((config.hop_s * sr).round() as usize).max(1);
    let energies = frame_log_energy_db(&signal.samples, frame_len, hop);
    let threshold = match config.threshold {
        VadThreshold::Absolute { db } => db,
        VadThreshold::RelativeToPeak { margin_db } => {
            energies.iter().copied().fold(f64::NEG_INFINITY, f64::max) - margin_db
        }
    };
    let voiced: Vec<bool> = energies
        .iter()
        .map(|&e| e.is_finite() && e >= threshold)
        .collect();

    // frame i stands for [center − hop/2, center + hop/2), stretched to the
    // signal ends for the first and last frames
    let n = signal.len();
    let last = voiced.len() - 1;
    let region = |i: usize| -> (f64, f64) {
        let center = (i * hop) as f64 + frame_len.min(n) as f64 / 2.0;
        let start = if i == 0 { 0.0 } else { (center - hop as f64 / 2.0).max(0.0) };
        let end = if i == last { n as f64 } else { (center + hop as f64 / 2.0).min(n as f64) };
        (start / sr, end / sr)
    };

    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < voiced.len() {
        if !voiced[i] {
            i += 1;
            continue;
        }
        let j = (i..voiced.len()).take_while(|&k| voiced[k]).last().unwrap_or(i);
        let (start, _) = region(i);
        let (_, end) = region(j);
        match runs.last_mut() {
            Some(prev) if start - prev.1 < config.min_gap_s => prev.1 = end,
            _ => runs.push((start, end)),
        }
        i = j + 1;
    }

    let mut spans = Vec::new();
    for (start, end) in runs {
        let mut k = 0usize;
        loop {
            let s = start + k as f64 * config.max_len_s;
            if s >= end {
                break;
            }
            let e = (start + (k + 1) as f64 * config.max_len_s).min(end);
            if e - s >= config.min_span_s {
                spans.push(SegmentSpan { start_s: s, end_s: e });
            }
            k += 1;
        }
    }
    Ok(spans)
}

/// Denoise → normalize → VAD with the given settings; silent recordings
/// yield no spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub denoise: Option<DenoiseConfig>,
    pub normalize_dbfs: Option<f64>,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self {
            denoise: Some(DenoiseConfig::default()),
            normalize_dbfs: Some(DEFAULT_TARGET_DBFS),
        }
    }
}

impl Preprocess {
    pub fn apply(&self, signal: &AudioSignal) -> Result<AudioSignal> {
        let mut s = signal.clone();
        if let Some(cfg) = &self.denoise {
            if s.len() >= cfg.frame_len {
                s = denoise_stationary(&s, cfg)?;
            }
        }
        if let Some(db) = self.normalize_dbfs {
            if s.peak() > 0.0 {
                s = normalize_volume(&s, db)?;
            }
        }
        Ok(s)
    }
}
