//! The 13-feature "minimal" timing set: vocalisation and pause duration
//! statistics, speech rate, vocalisation count and recording duration.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioSignal, SegmentSpan};
use crate::error::{Error, Result};
use crate::math::{mean, median, sample_sd};

pub const MINIMAL_NAMES: [&str; 13] = [
    "voc_mean",
    "voc_sd",
    "voc_median",
    "voc_min",
    "voc_max",
    "pause_mean",
    "pause_sd",
    "pause_median",
    "pause_min",
    "pause_max",
    "speech_rate",
    "voc_count",
    "total_duration",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocalisationProfile {
    pub vocalisation_durations_s: Vec<f64>,
    /// Gaps between consecutive spans; touching spans contribute no pause.
    pub pause_durations_s: Vec<f64>,
    pub total_speech_s: f64,
    pub syllable_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeechRateConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    /// Length of the Hann smoother applied to the envelope, in frames.
    pub smoothing_frames: usize,
    /// Peaks below this fraction of the loudest envelope value are ignored.
    pub min_height: f64,
    /// Minimum prominence as a fraction of the peak's height.
    pub min_prominence: f64,
}

impl Default for SpeechRateConfig {
    fn default() -> Self {
        Self {
            frame_len_s: 0.025,
            hop_s: 0.010,
            smoothing_frames: 13,
            min_height: 0.1,
            min_prominence: 0.25,
        }
    }
}

fn check_spans(spans: &[SegmentSpan]) -> Result<()> {
    if spans.is_empty() {
        return Err(Error::Empty("span list"));
    }
    for w in spans.windows(2) {
        if w[1].start_s < w[0].end_s {
            return Err(Error::InvalidInput(alloc::format!(
                "spans overlap or are unsorted at {}s",
                w[1].start_s
            )));
        }
    }
    Ok(())
}

/// Smoothed RMS envelope of one voiced stretch.
fn envelope(samples: &[f64], frame_len: usize, hop: usize, smoothing: usize) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let count = if samples.len() <= frame_len { 1 } else { (samples.len() - frame_len) / hop + 1 };
    let raw: Vec<f64> = (0..count)
        .map(|i| {
            let f = &samples[i * hop..(i * hop + frame_len).min(samples.len())];
            (f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt()
        })
        .collect();
    if smoothing <= 1 {
        return raw;
    }
    let half = smoothing / 2;
    let weights: Vec<f64> = (0..smoothing)
        .map(|k| {
            let x = (k as f64 + 1.0) / (smoothing as f64 + 1.0);
            (core::f64::consts::PI * x).sin().powi(2)
        })
        .collect();
    (0..raw.len())
        .map(|t| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (k, w) in weights.iter().enumerate() {
                let idx = t as isize + k as isize - half as isize;
                if idx >= 0 && (idx as usize) < raw.len() {
                    acc += w * raw[idx as usize];
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect()
}

/// Interior local maxima that clear the height and prominence gates.
fn count_peaks(env: &[f64], global_max: f64, cfg: &SpeechRateConfig) -> usize {
    let n = env.len();
    let mut count = 0;
    for i in 1..n.saturating_sub(1) {
        let v = env[i];
        if !(v > env[i - 1] && v >= env[i + 1]) || v < cfg.min_height * global_max {
            continue;
        }
        // lowest point before reaching something higher, on each side
        let mut left_base = v;
        for j in (0..i).rev() {
            if env[j] > v {
                break;
            }
            left_base = left_base.min(env[j]);
        }
        let mut right_base = v;
        for &e in &env[i + 1..] {
            if e > v {
                break;
            }
            right_base = right_base.min(e);
        }
        if v - left_base.max(right_base) >= cfg.min_prominence * v {
            count += 1;
        }
    }
    count
}

pub fn vocalisation_profile(
    spans: &[SegmentSpan],
    signal: &AudioSignal,
    cfg: &SpeechRateConfig,
) -> Result<VocalisationProfile> {
    check_spans(spans)?;
    let vocalisation_durations_s: Vec<f64> = spans.iter().map(|s| s.duration_s()).collect();
    let pause_durations_s: Vec<f64> = spans
        .windows(2)
        .map(|w| w[1].start_s - w[0].end_s)
        .filter(|&g| g > 0.0)
        .collect();
    let sr = f64::from(signal.sample_rate());
    let frame_len = ((cfg.frame_len_s * sr).round() as usize).max(1);
    let hop = ((cfg.hop_s * sr).round() as usize).max(1);
    let envelopes: Vec<Vec<f64>> = spans
        .iter()
        .map(|s| envelope(signal.slice(s).samples(), frame_len, hop, cfg.smoothing_frames))
        .collect();
    let global_max = envelopes.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    let syllable_count = if global_max > 0.0 {
        envelopes.iter().map(|e| count_peaks(e, global_max, cfg)).sum()
    } else {
        0
    };
    Ok(VocalisationProfile {
        total_speech_s: vocalisation_durations_s.iter().sum(),
        vocalisation_durations_s,
        pause_durations_s,
        syllable_count,
    })
}

fn five_stats(xs: &[f64]) -> [f64; 5] {
    if xs.is_empty() {
        return [0.0; 5];
    }
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [mean(xs), sample_sd(xs), median(xs), min, max]
}

impl VocalisationProfile {
    /// The 13 features in [`MINIMAL_NAMES`] order; `recording_s` is the full
    /// recording length.
    pub fn to_vector(&self, recording_s: f64) -> [f64; 13] {
        let v = five_stats(&self.vocalisation_durations_s);
        let p = five_stats(&self.pause_durations_s);
        let rate = if self.total_speech_s > 0.0 {
            self.syllable_count as f64 / self.total_speech_s
        } else {
            0.0
        };
        [
            v[0],
            v[1],
            v[2],
            v[3],
            v[4],
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            rate,
            self.vocalisation_durations_s.len() as f64,
            recording_s,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalVector {
    pub names: Vec<String>,
    pub values: [f64; 13],
}

pub fn minimal_vector(spans: &[SegmentSpan], signal: &AudioSignal) -> Result<MinimalVector> {
    minimal_vector_with(spans, signal, &SpeechRateConfig::default())
}

pub fn minimal_vector_with(
    spans: &[SegmentSpan],
    signal: &AudioSignal,
    cfg: &SpeechRateConfig,
) -> Result<MinimalVector> {
    let profile = vocalisation_profile(spans, signal, cfg)?;
    Ok(MinimalVector {
        names: MINIMAL_NAMES.iter().map(|s| String::from(*s)).collect(),
        values: profile.to_vector(signal.duration_s()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn span(a: f64, b: f64) -> SegmentSpan {
        SegmentSpan::new(a, b).unwrap()
    }

    /// Carrier tone whose amplitude follows sin² bursts of `burst_s` each.
    fn syllables(n_bursts: usize, burst_s: f64) -> Vec<f64> {
        let sr = 16_000.0;
        let n = (n_bursts as f64 * burst_s * sr) as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 / sr;
                let env = (PI * (t % burst_s) / burst_s).sin().powi(2);
                0.6 * env * (2.0 * PI * 220.0 * t).sin()
            })
            .collect()
    }

    #[test]
    fn arithmetic_on_given_spans() {
        let sig = AudioSignal::new(vec![0.0; 160_000], 16_000).unwrap();
        let v = minimal_vector(&[span(0.0, 2.0), span(3.0, 5.0)], &sig).unwrap();
        assert_eq!(v.values[0], 2.0);
        assert_eq!(v.values[1], 0.0);
        assert_eq!(v.values[5], 1.0);
        assert_eq!(v.values[11], 2.0);
        assert_eq!(v.values[12], 10.0);
    }

    #[test]
    fn single_span_has_zero_pause_stats() {
        let sig = AudioSignal::new(vec![0.0; 160_000], 16_000).unwrap();
        let v = minimal_vector(&[span(0.0, 10.0)], &sig).unwrap();
        assert_eq!(&v.values[5..10], &[0.0; 5]);
        assert_eq!(v.values[11], 1.0);
    }

    #[test]
    fn empty_and_overlapping_spans_error() {
        let sig = AudioSignal::new(vec![0.0; 1600], 16_000).unwrap();
        assert_eq!(minimal_vector(&[], &sig), Err(Error::Empty("span list")));
        assert!(minimal_vector(&[span(0.0, 0.05), span(0.04, 0.08)], &sig).is_err());
    }

    #[test]
    fn eight_peaks_over_four_voiced_seconds() {
        // two 2 s voiced stretches with four 0.5 s syllables each, 1 s pause
        let mut s = syllables(4, 0.5);
        s.extend(vec![0.0; 16_000]);
        s.extend(syllables(4, 0.5));
        let sig = AudioSignal::new(s, 16_000).unwrap();
        let spans = [span(0.0, 2.0), span(3.0, 5.0)];
        let profile = vocalisation_profile(&spans, &sig, &SpeechRateConfig::default()).unwrap();
        assert_eq!(profile.syllable_count, 8);
        let v = minimal_vector(&spans, &sig).unwrap();
        assert!((v.values[10] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn faster_syllables_raise_the_rate() {
        let sig = AudioSignal::new(syllables(10, 0.25), 16_000).unwrap();
        let v = minimal_vector(&[span(0.0, 2.5)], &sig).unwrap();
        assert!((v.values[10] - 4.0).abs() < 1e-12, "{}", v.values[10]);
    }
}
