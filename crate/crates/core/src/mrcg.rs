//! Multi-resolution cochleagram (MRCG) features.
//!
//! A 64-channel 4th-order gammatone filterbank produces per-frame channel
//! energies. Four cochleagrams at different resolutions are stacked per
//! frame (4 × 64 = 256 rows), first and second regression deltas are
//! appended (768 rows), and nine functionals summarize each row over the
//! segment (6,912 values).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Samples are scaled to 16-bit PCM units before energies are taken, so the
/// log(1 + E) compression behaves logarithmically for audible input.
const PCM_SCALE: f64 = 32_768.0;

pub const N_RESOLUTIONS: usize = 4;
pub const FUNCTIONAL_NAMES: [&str; 9] = [
    "mean", "std", "min", "max", "range", "mode", "median", "skewness", "kurtosis",
];
const MODE_BINS: usize = 32;

/// Equivalent rectangular bandwidth (Glasberg & Moore) in Hz.
pub fn erb(freq_hz: f64) -> f64 {
    24.7 * (4.37e-3 * freq_hz + 1.0)
}

fn erb_rate(freq_hz: f64) -> f64 {
    21.4 * (4.37e-3 * freq_hz + 1.0).log10()
}

fn inverse_erb_rate(rate: f64) -> f64 {
    (10f64.powf(rate / 21.4) - 1.0) / 4.37e-3
}

/// `n` center frequencies equally spaced on the ERB-rate scale, both ends included.
pub fn erb_space(low_hz: f64, high_hz: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![low_hz];
    }
    let (lo, hi) = (erb_rate(low_hz), erb_rate(high_hz));
    (0..n)
        .map(|i| {
            if i == n - 1 {
                high_hz
            } else {
                inverse_erb_rate(lo + (hi - lo) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// Real-valued 4th-order gammatone responses (channels × samples), computed
/// as a cascade of four one-pole low-pass filters on the signal demodulated
/// to each center frequency. Unit gain at the center frequency.
pub fn gammatone_responses(samples: &[f64], sample_rate: u32, center_freqs: &[f64]) -> Vec<Vec<f64>> {
    let fs = f64::from(sample_rate);
    center_freqs
        .iter()
        .map(|&fc| {
            let omega = 2.0 * PI * fc / fs;
            let a = (-2.0 * PI * 1.019 * erb(fc) / fs).exp();
            let g = 1.0 - a;
            let (step_re, step_im) = (omega.cos(), omega.sin());
            let mut state = [(0.0f64, 0.0f64); 4];
            // phasor e^{jωn}, re-anchored periodically to bound drift
            let (mut pr, mut pi) = (1.0f64, 0.0f64);
            let mut out = Vec::with_capacity(samples.len());
            for (n, &x) in samples.iter().enumerate() {
                if n % 512 == 0 {
                    let phase = (omega * n as f64) % (2.0 * PI);
                    pr = phase.cos();
                    pi = phase.sin();
                }
                // x · e^{−jωn}
                let mut zr = x * PCM_SCALE * pr;
                let mut zi = -x * PCM_SCALE * pi;
                for s in state.iter_mut() {
                    s.0 = g * zr + a * s.0;
                    s.1 = g * zi + a * s.1;
                    zr = s.0;
                    zi = s.1;
                }
                // 2 Re(e^{jωn} z)
                out.push(2.0 * (pr * zr - pi * zi));
                let nr = pr * step_re - pi * step_im;
                pi = pr * step_im + pi * step_re;
                pr = nr;
            }
            out
        })
        .collect()
}

/// Channels × frames matrix of log(1 + frame energy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cochleagram {
    pub values: Matrix,
    pub center_freqs_hz: Vec<f64>,
    pub frame_len_s: f64,
    pub hop_s: f64,
}

impl Cochleagram {
    pub fn channels(&self) -> usize {
        self.values.rows()
    }

    pub fn frames(&self) -> usize {
        self.values.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrcgConfig {
    pub n_channels: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub frame_len_s: f64,
    pub hop_s: f64,
    /// Frame length of the coarse-time cochleagram.
    pub long_frame_len_s: f64,
    /// Side lengths of the two mean-filter smoothings of the base cochleagram.
    pub small_smoothing: usize,
    pub large_smoothing: usize,
    /// Regression half-width for Δ and ΔΔ.
    pub delta_width: usize,
}

impl Default for MrcgConfig {
    fn default() -> Self {
        Self {
            n_channels: 64,
            low_hz: 50.0,
            high_hz: 8000.0,
            frame_len_s: 0.020,
            hop_s: 0.010,
            long_frame_len_s: 0.200,
            small_smoothing: 11,
            large_smoothing: 23,
            delta_width: 2,
        }
    }
}

impl MrcgConfig {
    pub fn rows_per_frame(&self) -> usize {
        3 * N_RESOLUTIONS * self.n_channels
    }

    pub fn segment_len(&self) -> usize {
        self.rows_per_frame() * FUNCTIONAL_NAMES.len()
    }
}

/// Prefix sums of squared responses, one vector per channel.
struct EnergyIntegrals {
    prefix: Vec<Vec<f64>>,
}

impl EnergyIntegrals {
    fn new(responses: &[Vec<f64>]) -> Self {
        let prefix = responses
            .iter()
            .map(|r| {
                let mut p = Vec::with_capacity(r.len() + 1);
                let mut acc = 0.0;
                p.push(0.0);
                for &v in r {
                    acc += v * v;
                    p.push(acc);
                }
                p
            })
            .collect();
        Self { prefix }
    }

    /// Energy of channel `ch` over samples `[start, end)`, clipped to the signal.
    fn energy(&self, ch: usize, start: isize, end: isize) -> f64 {
        let p = &self.prefix[ch];
        let n = (p.len() - 1) as isize;
        let s = start.clamp(0, n) as usize;
        let e = end.clamp(0, n) as usize;
        (p[e] - p[s]).max(0.0)
    }
}

fn frame_count(n: usize, frame_len: usize, hop: usize) -> Result<usize> {
    if n < frame_len || frame_len == 0 {
        return Err(Error::SignalTooShort {
            needed: frame_len,
            got: n,
        });
    }
    Ok((n - frame_len) / hop + 1)
}

fn to_samples(secs: f64, sr: u32) -> usize {
    (secs * f64::from(sr)).round() as usize
}

/// Cochleagram on the grid of `frame_len`-sample frames every `hop` samples.
/// When `window` differs from `frame_len` the energy window is centered on
/// each grid frame's center and zero-padded beyond the signal.
fn cochleagram_on_grid(
    integrals: &EnergyIntegrals,
    n_frames: usize,
    frame_len: usize,
    hop: usize,
    window: usize,
) -> Matrix {
    let channels = integrals.prefix.len();
    let mut m = Matrix::zeros(channels, n_frames);
    for ch in 0..channels {
        for f in 0..n_frames {
            let center2 = (2 * f * hop + frame_len) as isize; // twice the center
            let start = (center2 - window as isize) / 2;
            let e = integrals.energy(ch, start, start + window as isize);
            m[(ch, f)] = e.ln_1p();
        }
    }
    m
}

/// 64-channel gammatone cochleagram with `frame_len_s` frames every `hop_s`.
pub fn gammatone_cochleagram(
    signal: &AudioSignal,
    n_channels: usize,
    frame_len_s: f64,
    hop_s: f64,
) -> Result<Cochleagram> {
    let config = MrcgConfig {
        n_channels,
        frame_len_s,
        hop_s,
        ..MrcgConfig::default()
    };
    let sr = signal.sample_rate();
    let frame_len = to_samples(frame_len_s, sr);
    let hop = to_samples(hop_s, sr).max(1);
    let n_frames = frame_count(signal.len(), frame_len, hop)?;
    let centers = erb_space(config.low_hz, config.high_hz, n_channels);
    let responses = gammatone_responses(signal.samples(), sr, &centers);
    let integrals = EnergyIntegrals::new(&responses);
    Ok(Cochleagram {
        values: cochleagram_on_grid(&integrals, n_frames, frame_len, hop, frame_len),
        center_freqs_hz: centers,
        frame_len_s,
        hop_s,
    })
}

/// Mean over the `side × side` neighborhood of each cell, truncated at the
/// borders (divides by the number of in-range cells).
pub fn mean_filter(m: &Matrix, side: usize) -> Matrix {
    let (rows, cols) = (m.rows(), m.cols());
    let r = side / 2;
    // summed-area table with a zero border
    let mut sat = vec![0.0; (rows + 1) * (cols + 1)];
    let w = cols + 1;
    for i in 0..rows {
        for j in 0..cols {
            sat[(i + 1) * w + j + 1] = m[(i, j)] + sat[i * w + j + 1] + sat[(i + 1) * w + j] - sat[i * w + j];
        }
    }
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let (i0, i1) = (i.saturating_sub(r), (i + r + 1).min(rows));
        for j in 0..cols {
            let (j0, j1) = (j.saturating_sub(r), (j + r + 1).min(cols));
            let sum = sat[i1 * w + j1] - sat[i0 * w + j1] - sat[i1 * w + j0] + sat[i0 * w + j0];
            out[(i, j)] = sum / ((i1 - i0) * (j1 - j0)) as f64;
        }
    }
    out
}

/// Regression deltas over ±`width` frames with edge replication, row-wise.
pub fn deltas(m: &Matrix, width: usize) -> Matrix {
    let (rows, cols) = (m.rows(), m.cols());
    let denom = 2.0 * (1..=width).map(|k| (k * k) as f64).sum::<f64>();
    let mut out = Matrix::zeros(rows, cols);
    if cols == 0 || width == 0 {
        return out;
    }
    for i in 0..rows {
        let row = m.row(i);
        for t in 0..cols {
            let mut acc = 0.0;
            for k in 1..=width {
                let ahead = row[(t + k).min(cols - 1)];
                let behind = row[t.saturating_sub(k)];
                acc += k as f64 * (ahead - behind);
            }
            out[(i, t)] = acc / denom;
        }
    }
    out
}

/// Frame-level MRCG with Δ and ΔΔ: 768 rows for the default configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatureMatrix {
    pub values: Matrix,
    pub row_names: Vec<String>,
}

impl FrameFeatureMatrix {
    pub fn frames(&self) -> usize {
        self.values.cols()
    }
}

pub fn frame_row_names(config: &MrcgConfig) -> Vec<String> {
    let mut names = Vec::with_capacity(config.rows_per_frame());
    for prefix in ["", "d_", "dd_"] {
        for res in 1..=N_RESOLUTIONS {
            for ch in 0..config.n_channels {
                names.push(format!("{prefix}cg{res}_ch{ch:02}"));
            }
        }
    }
    names
}

pub fn mrcg_frames(signal: &AudioSignal, config: &MrcgConfig) -> Result<FrameFeatureMatrix> {
    let sr = signal.sample_rate();
    let frame_len = to_samples(config.frame_len_s, sr);
    let hop = to_samples(config.hop_s, sr).max(1);
    let long = to_samples(config.long_frame_len_s, sr);
    if signal.len() < long {
        return Err(Error::SignalTooShort {
            needed: long,
            got: signal.len(),
        });
    }
    let n_frames = frame_count(signal.len(), frame_len, hop)?;
    let centers = erb_space(config.low_hz, config.high_hz, config.n_channels);
    let responses = gammatone_responses(signal.samples(), sr, &centers);
    let integrals = EnergyIntegrals::new(&responses);

    let cg1 = cochleagram_on_grid(&integrals, n_frames, frame_len, hop, frame_len);
    let cg2 = cochleagram_on_grid(&integrals, n_frames, frame_len, hop, long);
    let cg3 = mean_filter(&cg1, config.small_smoothing);
    let cg4 = mean_filter(&cg1, config.large_smoothing);

    let ch = config.n_channels;
    let mut stacked = Matrix::zeros(N_RESOLUTIONS * ch, n_frames);
    for (r, cg) in [&cg1, &cg2, &cg3, &cg4].into_iter().enumerate() {
        for c in 0..ch {
            stacked.row_mut(r * ch + c).copy_from_slice(cg.row(c));
        }
    }
    let d1 = deltas(&stacked, config.delta_width);
    let d2 = deltas(&d1, config.delta_width);
    let block = N_RESOLUTIONS * ch;
    let mut values = Matrix::zeros(3 * block, n_frames);
    for (b, m) in [&stacked, &d1, &d2].into_iter().enumerate() {
        for i in 0..block {
            values.row_mut(b * block + i).copy_from_slice(m.row(i));
        }
    }
    Ok(FrameFeatureMatrix {
        values,
        row_names: frame_row_names(config),
    })
}

/// The nine functionals of one feature track, in [`FUNCTIONAL_NAMES`] order.
///
/// Standard deviation uses n − 1. Skewness is the bias-adjusted Fisher form
/// and kurtosis the bias-adjusted excess form; both are 0 for constant
/// tracks and for tracks too short to define them (n < 3 and n < 4). Mode is
/// the center of the fullest of 32 equal-width bins between min and max.
pub fn track_functionals(xs: &[f64]) -> [f64; 9] {
    let n = xs.len();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        min = min.min(x);
        max = max.max(x);
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let constant = max == min;
    let std = if n >= 2 && !constant { (m2 / (nf - 1.0)).sqrt() } else { 0.0 };
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let skewness = if n >= 3 && !constant && m2 > 0.0 {
        let g1 = m3 / m2.powf(1.5);
        g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
    } else {
        0.0
    };
    let kurtosis = if n >= 4 && !constant && m2 > 0.0 {
        let g2 = m4 / (m2 * m2) - 3.0;
        (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0)
    } else {
        0.0
    };
    let mode = if constant {
        min
    } else {
        let width = (max - min) / MODE_BINS as f64;
        let mut counts = [0usize; MODE_BINS];
        for &x in xs {
            let idx = (((x - min) / width) as usize).min(MODE_BINS - 1);
            counts[idx] += 1;
        }
        let best = counts
            .iter()
            .enumerate()
            .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
        min + (best as f64 + 0.5) * width
    };
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = crate::math::median_sorted(&sorted);
    [mean, std, min, max, max - min, mode, median, skewness, kurtosis]
}

/// Named per-segment feature vector: each frame row's nine functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

pub fn functional_names(row_names: &[String]) -> Vec<String> {
    row_names
        .iter()
        .flat_map(|row| FUNCTIONAL_NAMES.iter().map(move |f| format!("{row}_{f}")))
        .collect()
}

pub fn functionals(frames: &FrameFeatureMatrix) -> Result<SegmentFeatureVector> {
    if frames.frames() == 0 {
        return Err(Error::Empty("frames"));
    }
    let values = (0..frames.values.rows())
        .flat_map(|i| track_functionals(frames.values.row(i)))
        .collect();
    Ok(SegmentFeatureVector {
        names: functional_names(&frames.row_names),
        values,
    })
}

/// Full per-segment extraction: MRCG frames followed by functionals.
pub fn segment_features(signal: &AudioSignal, config: &MrcgConfig) -> Result<SegmentFeatureVector> {
    functionals(&mrcg_frames(signal, config)?)
}
