//! Synthetic speech-like cohorts for end-to-end tests.
//!
//! A recording is half a second of faint background noise followed by
//! vocalisations separated by pauses. A vocalisation is low-pass filtered
//! white noise under a 4 Hz syllable envelope. The two groups differ only in
//! the filter's spectral tilt and in pause lengths; vocalisation lengths and
//! counts share one distribution.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use adress::wav::write_wav;
use adress_core::audio::AudioSignal;
use adress_core::dataset::Group;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RATE: u32 = 16_000;
const BACKGROUND: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub subject_id: String,
    pub group: Group,
    pub mmse: u8,
    pub age_low: u32,
    pub gender: &'static str,
    pub audio: PathBuf,
}

pub struct Style {
    /// One-pole low-pass coefficient range; larger is darker.
    pub tilt: (f64, f64),
    pub pause_s: (f64, f64),
}

pub fn style(g: Group) -> Style {
    match g {
        Group::Ad => Style { tilt: (0.85, 0.95), pause_s: (1.2, 2.0) },
        Group::NonAd => Style { tilt: (0.1, 0.4), pause_s: (0.4, 0.8) },
    }
}

pub fn recording(g: Group, rng: &mut ChaCha8Rng) -> AudioSignal {
    let st = style(g);
    let a = rng.random_range(st.tilt.0..st.tilt.1);
    let n_voc = rng.random_range(4..=7);
    let mut out: Vec<f64> = Vec::new();
    let push_silence = |out: &mut Vec<f64>, secs: f64, rng: &mut ChaCha8Rng| {
        for _ in 0..(secs * RATE as f64) as usize {
            out.push(BACKGROUND * rng.random_range(-1.0..1.0));
        }
    };
    push_silence(&mut out, 0.5, rng);
    for k in 0..n_voc {
        let len = rng.random_range(0.8..2.5);
        let n = (len * RATE as f64) as usize;
        let mut y = 0.0;
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                y = a * y + (1.0 - a) * rng.random_range(-1.0..1.0);
                y
            })
            .collect();
        let rms = (v.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
        for (i, x) in v.iter_mut().enumerate() {
            let t = i as f64 / RATE as f64;
            let env = 0.3 + 0.7 * (std::f64::consts::PI * 4.0 * t).sin().powi(2);
            *x = (0.1 * env * *x / rms).clamp(-1.0, 1.0);
        }
        out.extend(v);
        let pause = if k + 1 < n_voc { rng.random_range(st.pause_s.0..st.pause_s.1) } else { 0.5 };
        push_silence(&mut out, pause, rng);
    }
    AudioSignal::new(out, RATE).unwrap()
}

/// `n_per_group` AD and non-AD subjects with audio under `dir`; returns the
/// subjects and the manifest path.
pub fn write_cohort(dir: &Path, n_per_group: usize, seed: u64) -> (Vec<SyntheticSubject>, PathBuf) {
    let audio_dir = dir.join("audio");
    std::fs::create_dir_all(&audio_dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subjects = Vec::new();
    for i in 0..2 * n_per_group {
        let group = if i % 2 == 0 { Group::Ad } else { Group::NonAd };
        let id = format!("S{i:03}");
        let audio = audio_dir.join(format!("{id}.wav"));
        write_wav(&audio, &recording(group, &mut rng)).unwrap();
        let mmse = match group {
            Group::Ad => rng.random_range(10..=24),
            Group::NonAd => rng.random_range(26..=30),
        };
        subjects.push(SyntheticSubject {
            subject_id: id,
            group,
            mmse,
            age_low: 50 + 5 * (i as u32 % 6),
            gender: if (i / 2) % 2 == 0 { "M" } else { "F" },
            audio,
        });
    }
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &subjects);
    (subjects, manifest)
}

pub fn write_manifest(path: &Path, subjects: &[SyntheticSubject]) {
    let mut text = String::from("subject_id,group,mmse,age_low,age_high,gender,audio_path,transcript_path\n");
    for s in subjects {
        text += &format!(
            "{},{},{},{},{},{},{},\n",
            s.subject_id,
            s.group,
            s.mmse,
            s.age_low,
            s.age_low + 5,
            s.gender,
            s.audio.display()
        );
    }
    std::fs::write(path, text).unwrap();
}

/// Every regular file under `dir`, relative path and bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
