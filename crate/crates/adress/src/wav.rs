//! PCM WAV input and output.

use std::path::Path;

use adress_core::audio::{resample, AudioSignal, PIPELINE_RATE};

use crate::error::{Error, Result};

/// Reads a WAV file, averages channels to mono, scales to [−1, 1] and
/// resamples to the pipeline rate.
pub fn read_audio(path: &Path) -> Result<AudioSignal> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = f64::from(1u32 << (spec.bits_per_sample - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(|v| f64::from(v).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
    };
    if interleaved.is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            source: adress_core::Error::Empty("audio"),
        });
    }
    let signal = AudioSignal::from_interleaved(&interleaved, usize::from(spec.channels), spec.sample_rate).map_err(
        |source| Error::Data {
            path: path.to_path_buf(),
            source,
        },
    )?;
    Ok(if signal.sample_rate() == PIPELINE_RATE {
        signal
    } else {
        resample(&signal, PIPELINE_RATE)
    })
}

/// Writes 16-bit mono PCM.
pub fn write_wav(path: &Path, signal: &AudioSignal) -> Result<()> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in signal.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(wav_err)?;
    }
    w.finalize().map_err(wav_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, channels: u16, rate: u32, samples: &[i16]) {
        let spec = hound::WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn full_scale_square_wave() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sq.wav");
        let samples: Vec<i16> = (0..16_000).map(|i| if (i / 40) % 2 == 0 { i16::MAX } else { i16::MIN }).collect();
        write_raw(&p, 1, 16_000, &samples);
        let sig = read_audio(&p).unwrap();
        assert_eq!(sig.len(), 16_000);
        assert_eq!(sig.peak(), 1.0);
    }

    #[test]
    fn identical_stereo_channels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        let mono: Vec<i16> = (0..1600).map(|i| ((i as f64 * 0.05).sin() * 10_000.0) as i16).collect();
        let stereo: Vec<i16> = mono.iter().flat_map(|&s| [s, s]).collect();
        write_raw(&p, 2, 16_000, &stereo);
        let sig = read_audio(&p).unwrap();
        for (a, b) in sig.samples().iter().zip(&mono) {
            assert_eq!(*a, f64::from(*b) / 32768.0);
        }
    }

    #[test]
    fn eight_khz_is_resampled() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lo.wav");
        write_raw(&p, 1, 8_000, &[100; 8_000]);
        let sig = read_audio(&p).unwrap();
        assert_eq!(sig.sample_rate(), 16_000);
        assert_eq!(sig.len(), 16_000);
    }

    #[test]
    fn missing_and_empty_files_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.wav");
        let err = read_audio(&missing).unwrap_err().to_string();
        assert!(err.contains("nope.wav"), "{err}");
        let empty = dir.path().join("empty.wav");
        write_raw(&empty, 1, 16_000, &[]);
        assert!(read_audio(&empty).is_err());
    }

    #[test]
    fn pcm16_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.wav");
        let sig = AudioSignal::new((0..800).map(|i| (i as f64 - 400.0) / 512.0 / 2.0).collect(), 16_000).unwrap();
        write_wav(&p, &sig).unwrap();
        let back = read_audio(&p).unwrap();
        for (a, b) in sig.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 0.5 / 32768.0);
        }
    }
}
