//! Corpus-level stages: segmentation, feature extraction, import, filtering
//! and evaluation. Work is spread over a rayon pool; results keep manifest
//! order so outputs do not depend on the number of workers.

use std::path::Path;

use adress_core::audio::{vad_segment, AudioSignal, SegmentSpan};
use adress_core::chat::{linguistic_measures, parse_chat, ParseMode};
use adress_core::dataset::{DatasetManifest, Split, SubjectRecord};
use adress_core::experiment::{EvalMode, Experiment, ExperimentInputs, ExperimentReport, FeatureSet};
use adress_core::features::{FeatureMatrix, FeatureRow};
use adress_core::math::{mean, sample_sd};
use adress_core::minimal::minimal_vector;
use adress_core::mrcg::{segment_features, MrcgConfig};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{io, Error, Result};
use crate::tables::{self, SegmentRecord};
use crate::wav::{read_audio, write_wav};

/// Speaker whose utterances feed the linguistic measures.
pub const PARTICIPANT: &str = "PAR";

pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn subject_context(r: &SubjectRecord) -> impl Fn(adress_core::Error) -> Error + '_ {
    move |e| Error::Core(e.context(format!("subject `{}`", r.subject_id)))
}

/// Reads and preprocesses one recording.
pub fn load_signal(cfg: &PipelineConfig, r: &SubjectRecord) -> Result<AudioSignal> {
    let raw = read_audio(Path::new(&r.audio_path))?;
    cfg.preprocess().apply(&raw).map_err(subject_context(r))
}

/// Consecutive chunks of at most `max_len_s` covering the whole signal.
fn fixed_chunks(duration_s: f64, max_len_s: f64) -> adress_core::Result<Vec<SegmentSpan>> {
    let mut spans = Vec::new();
    let mut start = 0.0;
    while start < duration_s {
        let end = (start + max_len_s).min(duration_s);
        spans.push(SegmentSpan::new(start, end)?);
        start = end;
    }
    Ok(spans)
}

pub fn segment_signal(cfg: &PipelineConfig, signal: &AudioSignal) -> adress_core::Result<Vec<SegmentSpan>> {
    if cfg.stages.vad {
        vad_segment(signal, &cfg.vad)
    } else {
        fixed_chunks(signal.duration_s(), cfg.vad.max_len_s)
    }
}

/// Segments every recording in the manifest. With `audio_dir`, each segment
/// is also written as `<subject>_<index>.wav`.
pub fn segment_corpus(
    cfg: &PipelineConfig,
    manifest: &DatasetManifest,
    audio_dir: Option<&Path>,
) -> Result<Vec<SegmentRecord>> {
    if let Some(dir) = audio_dir {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let per_subject: Vec<Vec<SegmentRecord>> = manifest
        .records()
        .par_iter()
        .map(|r| {
            let signal = load_signal(cfg, r)?;
            let spans = segment_signal(cfg, &signal).map_err(subject_context(r))?;
            let mut out = Vec::with_capacity(spans.len());
            for (i, span) in spans.into_iter().enumerate() {
                if let Some(dir) = audio_dir {
                    write_wav(&dir.join(format!("{}_{i:03}.wav", r.subject_id)), &signal.slice(&span))?;
                }
                out.push(SegmentRecord {
                    subject_id: r.subject_id.clone(),
                    segment_index: i as u32,
                    span,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_subject.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub counts: Vec<(String, usize)>,
    pub mean: f64,
    pub sd: f64,
}

pub fn segment_summary(manifest: &DatasetManifest, segments: &[SegmentRecord]) -> SegmentSummary {
    let counts: Vec<(String, usize)> = manifest
        .records()
        .iter()
        .map(|r| {
            let n = segments.iter().filter(|s| s.subject_id == r.subject_id).count();
            (r.subject_id.clone(), n)
        })
        .collect();
    let xs: Vec<f64> = counts.iter().map(|c| c.1 as f64).collect();
    SegmentSummary {
        mean: if xs.is_empty() { 0.0 } else { mean(&xs) },
        sd: if xs.len() < 2 { 0.0 } else { sample_sd(&xs) },
        counts,
    }
}

impl std::fmt::Display for SegmentSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (s, n) in &self.counts {
            writeln!(f, "{s}\t{n}")?;
        }
        write!(f, "mean\t{:.2}\nsd\t{:.2}", self.mean, self.sd)
    }
}

/// Extracted feature matrix plus non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub matrix: FeatureMatrix,
    pub warnings: Vec<String>,
}

fn spans_for<'a>(segments: &'a [SegmentRecord], subject: &str) -> Vec<&'a SegmentRecord> {
    segments.iter().filter(|s| s.subject_id == subject).collect()
}

/// Per-segment MRCG functionals; columns are `mrcg.<name>`.
pub fn extract_mrcg(cfg: &PipelineConfig, manifest: &DatasetManifest, segments: &[SegmentRecord]) -> Result<Extracted> {
    let mcfg = MrcgConfig::default();
    let per_subject: Vec<Vec<(Vec<String>, FeatureRow)>> = manifest
        .records()
        .par_iter()
        .map(|r| {
            let segs = spans_for(segments, &r.subject_id);
            if segs.is_empty() {
                return Ok(Vec::new());
            }
            let signal = load_signal(cfg, r)?;
            segs.par_iter()
                .map(|s| {
                    let v = segment_features(&signal.slice(&s.span), &mcfg).map_err(|e| {
                        Error::Core(e.context(format!("subject `{}`, segment {}", r.subject_id, s.segment_index)))
                    })?;
                    Ok((
                        v.names,
                        FeatureRow {
                            subject_id: r.subject_id.clone(),
                            segment_index: s.segment_index,
                            duration_s: s.span.duration_s(),
                            values: v.values,
                        },
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let mut columns = None;
    let mut rows = Vec::new();
    for (r, subject_rows) in manifest.records().iter().zip(per_subject) {
        if subject_rows.is_empty() {
            warnings.push(format!("subject `{}` has no segments", r.subject_id));
        }
        for (names, row) in subject_rows {
            columns.get_or_insert(names);
            rows.push(row);
        }
    }
    let columns = columns.unwrap_or_else(|| adress_core::mrcg::functional_names(&adress_core::mrcg::frame_row_names(&mcfg)));
    let matrix = FeatureMatrix::new(columns, rows)?.namespaced("mrcg");
    Ok(Extracted { matrix, warnings })
}

/// One row of vocalisation/pause features per subject; `duration_s` is the
/// recording length.
pub fn extract_minimal(
    cfg: &PipelineConfig,
    manifest: &DatasetManifest,
    segments: &[SegmentRecord],
) -> Result<Extracted> {
    let rows: Vec<(Vec<String>, FeatureRow)> = manifest
        .records()
        .par_iter()
        .map(|r| {
            let signal = load_signal(cfg, r)?;
            let spans: Vec<SegmentSpan> = spans_for(segments, &r.subject_id).iter().map(|s| s.span).collect();
            let v = minimal_vector(&spans, &signal).map_err(subject_context(r))?;
            Ok((
                v.names,
                FeatureRow {
                    subject_id: r.subject_id.clone(),
                    segment_index: 0,
                    duration_s: signal.duration_s(),
                    values: v.values.to_vec(),
                },
            ))
        })
        .collect::<Result<_>>()?;
    let columns = adress_core::minimal::MINIMAL_NAMES.iter().map(|s| s.to_string()).collect();
    let matrix = FeatureMatrix::new(columns, rows.into_iter().map(|r| r.1).collect())?.namespaced("minimal");
    Ok(Extracted {
        matrix,
        warnings: Vec::new(),
    })
}

/// One row of transcript measures per subject. Measures that are undefined
/// for a transcript are stored as NaN and imputed later.
pub fn extract_linguistic(manifest: &DatasetManifest) -> Result<Extracted> {
    let rows: Vec<(FeatureRow, Vec<String>)> = manifest
        .records()
        .par_iter()
        .map(|r| {
            let path = r.transcript_path.as_deref().ok_or_else(|| {
                Error::Config(format!("subject `{}` has no transcript_path", r.subject_id))
            })?;
            let bytes = std::fs::read(path).map_err(io(path))?;
            let text = String::from_utf8_lossy(&bytes);
            let t = parse_chat(&text, ParseMode::Tolerant).map_err(subject_context(r))?;
            let m = linguistic_measures(&t, PARTICIPANT).map_err(subject_context(r))?;
            let warnings = t.warnings.iter().map(|w| format!("{path}:{}: {}", w.line, w.message)).collect();
            let values = m.to_named().into_iter().map(|(_, v)| v.unwrap_or(f64::NAN)).collect();
            Ok((
                FeatureRow {
                    subject_id: r.subject_id.clone(),
                    segment_index: 0,
                    duration_s: m.duration_s,
                    values,
                },
                warnings,
            ))
        })
        .collect::<Result<_>>()?;
    let columns = adress_core::chat::MEASURE_NAMES.iter().map(|s| s.to_string()).collect();
    let mut warnings = Vec::new();
    let mut out = Vec::new();
    for (row, w) in rows {
        out.push(row);
        warnings.extend(w);
    }
    let matrix = FeatureMatrix::new(columns, out)?.namespaced("linguistic");
    Ok(Extracted { matrix, warnings })
}

pub fn extract_set(
    cfg: &PipelineConfig,
    manifest: &DatasetManifest,
    segments: &[SegmentRecord],
    set: &str,
) -> Result<Extracted> {
    match set {
        "mrcg" => extract_mrcg(cfg, manifest, segments),
        "minimal" => extract_minimal(cfg, manifest, segments),
        "linguistic" => extract_linguistic(manifest),
        other => Err(Error::Config(format!(
            "unknown feature set `{other}`; extractable sets are {}",
            crate::config::EXTRACTABLE_SETS.join(", ")
        ))),
    }
}

/// Segments from the configured table, or computed on the fly.
pub fn corpus_segments(cfg: &PipelineConfig, manifest: &DatasetManifest) -> Result<Vec<SegmentRecord>> {
    match &cfg.segments {
        Some(p) => tables::read_segments(p),
        None => segment_corpus(cfg, manifest, None),
    }
}

fn load_store(path: &Path, name: &str) -> Result<FeatureMatrix> {
    tables::read_feature_store(path).map_err(|e| match e {
        Error::Core(inner) => Error::Core(inner.context(format!("feature set `{name}`"))),
        other => other,
    })
}

/// Loads manifests and feature stores named in the config and runs every
/// (feature set, model, fold) job on the pool.
pub fn evaluate(cfg: &PipelineConfig, pool: &rayon::ThreadPool) -> Result<ExperimentReport> {
    let exp_cfg = cfg.experiment();
    cfg.validate_paths()?;
    let train = tables::load_manifest(cfg.require_manifest()?, Split::Train)?;
    let test = match (cfg.mode, &cfg.test_manifest) {
        (EvalMode::TrainTest, Some(p)) => Some(tables::load_manifest(p, Split::Test)?),
        (EvalMode::TrainTest, None) => return Err(Error::Config("train_test mode needs `test_manifest`".into())),
        (EvalMode::Loso, _) => None,
    };
    if cfg.features.is_empty() {
        return Err(Error::Config("no feature sets configured (add `features.<name> = <store>`)".into()));
    }
    let mut sets = Vec::new();
    for f in &cfg.features {
        let test_matrix = match (cfg.mode, &f.test) {
            (EvalMode::TrainTest, Some(p)) => Some(load_store(p, &f.name)?),
            (EvalMode::TrainTest, None) => {
                return Err(Error::Config(format!("train_test mode needs `features.{}.test`", f.name)))
            }
            (EvalMode::Loso, _) => None,
        };
        sets.push(FeatureSet {
            name: f.name.clone(),
            train: load_store(&f.train, &f.name)?,
            test: test_matrix,
            duration_filter: f.duration_filter,
        });
    }
    let inputs = ExperimentInputs {
        train: &train,
        test: test.as_ref(),
        feature_sets: &sets,
    };
    run_parallel(&exp_cfg, inputs, pool)
}

pub fn run_parallel(
    cfg: &adress_core::experiment::ExperimentConfig,
    inputs: ExperimentInputs<'_>,
    pool: &rayon::ThreadPool,
) -> Result<ExperimentReport> {
    let exp = Experiment::new(cfg, inputs)?;
    let outcomes = pool.install(|| {
        exp.jobs()
            .into_par_iter()
            .map(|job| exp.run_job(job))
            .collect::<adress_core::Result<Vec<_>>>()
    })?;
    Ok(exp.assemble(outcomes)?)
}
