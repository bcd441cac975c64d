//! Delimited-text formats: manifests, segment lists, feature stores and
//! externally computed feature tables.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use adress_core::audio::SegmentSpan;
use adress_core::dataset::{validate_mmse, AgeBand, BalanceTable, DatasetManifest, GroupCell, Split, SubjectRecord};
use adress_core::features::{FeatureMatrix, FeatureRow};
use serde::Deserialize;

use crate::error::{csv_err, io, Error, Result};

pub const MANIFEST_HEADER: [&str; 8] = [
    "subject_id",
    "group",
    "mmse",
    "age_low",
    "age_high",
    "gender",
    "audio_path",
    "transcript_path",
];

fn table_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Table {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(io(path))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    subject_id: String,
    group: String,
    mmse: i64,
    age_low: u32,
    age_high: u32,
    gender: String,
    audio_path: String,
    transcript_path: Option<String>,
}

/// Loads a manifest; relative audio and transcript paths are resolved
/// against the manifest's directory.
pub fn load_manifest(path: &Path, split: Split) -> Result<DatasetManifest> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(table_err(path, 1, format!("expected header `{}`", MANIFEST_HEADER.join(","))));
    }
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &str| -> String {
        let pb = Path::new(p);
        if pb.is_absolute() {
            p.to_string()
        } else {
            base.join(pb).to_string_lossy().into_owned()
        }
    };
    let mut records = Vec::new();
    for raw in rdr.records() {
        let raw = raw.map_err(csv_err(path))?;
        let line = line_of(&raw);
        let row: ManifestRow = raw
            .deserialize(Some(&header))
            .map_err(|e| table_err(path, line, e.to_string()))?;
        let bad = |e: adress_core::Error| table_err(path, line, e.to_string());
        records.push(SubjectRecord {
            group: row.group.parse().map_err(bad)?,
            mmse: validate_mmse(&row.subject_id, row.mmse).map_err(bad)?,
            age_band: AgeBand::new(row.age_low, row.age_high).map_err(bad)?,
            gender: row.gender.parse().map_err(bad)?,
            audio_path: resolve(&row.audio_path),
            transcript_path: row.transcript_path.filter(|t| !t.is_empty()).map(|t| resolve(&t)),
            subject_id: row.subject_id,
        });
    }
    DatasetManifest::new(split, records).map_err(|source| Error::Data {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(MANIFEST_HEADER).map_err(csv_err(path))?;
    for r in manifest.records() {
        w.write_record([
            r.subject_id.clone(),
            r.group.to_string(),
            r.mmse.to_string(),
            r.age_band.low.to_string(),
            r.age_band.high.to_string(),
            format!("{:?}", r.gender),
            r.audio_path.clone(),
            r.transcript_path.clone().unwrap_or_default(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}"))
}

/// Balance table in the layout age band × (AD M, F, MMSE mean, sd,
/// non-AD M, F, MMSE mean, sd).
pub fn write_balance_csv(out: impl Write, table: &BalanceTable) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "age", "ad_m", "ad_f", "ad_mmse_mean", "ad_mmse_sd", "nonad_m", "nonad_f", "nonad_mmse_mean", "nonad_mmse_sd",
    ])?;
    let cells = |c: &GroupCell| [c.male.to_string(), c.female.to_string(), fmt_opt(c.mmse_mean), fmt_opt(c.mmse_sd)];
    for row in table.rows.iter().chain([&table.total]) {
        let mut rec = vec![row.label.clone()];
        rec.extend(cells(&row.ad));
        rec.extend(cells(&row.non_ad));
        w.write_record(rec)?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub subject_id: String,
    pub segment_index: u32,
    pub span: SegmentSpan,
}

pub const SEGMENT_HEADER: [&str; 4] = ["subject_id", "segment_index", "start_s", "end_s"];

/// Shortest representation that parses back to the same f64.
fn exact(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_segments(path: &Path, segments: &[SegmentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SEGMENT_HEADER).map_err(csv_err(path))?;
    for s in segments {
        w.write_record([
            s.subject_id.clone(),
            s.segment_index.to_string(),
            exact(s.span.start_s),
            exact(s.span.end_s),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

#[derive(Debug, Deserialize)]
struct SegmentRow {
    subject_id: String,
    segment_index: u32,
    start_s: f64,
    end_s: f64,
}

pub fn read_segments(path: &Path) -> Result<Vec<SegmentRecord>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().collect::<Vec<_>>() != SEGMENT_HEADER {
        return Err(table_err(path, 1, format!("expected header `{}`", SEGMENT_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for raw in rdr.records() {
        let raw = raw.map_err(csv_err(path))?;
        let line = line_of(&raw);
        let row: SegmentRow = raw
            .deserialize(Some(&header))
            .map_err(|e| table_err(path, line, e.to_string()))?;
        let span = SegmentSpan::new(row.start_s, row.end_s).map_err(|e| table_err(path, line, e.to_string()))?;
        out.push(SegmentRecord {
            subject_id: row.subject_id,
            segment_index: row.segment_index,
            span,
        });
    }
    Ok(out)
}

/// Spans per subject in file order.
pub fn spans_by_subject(segments: &[SegmentRecord]) -> BTreeMap<String, Vec<(u32, SegmentSpan)>> {
    let mut m: BTreeMap<String, Vec<(u32, SegmentSpan)>> = BTreeMap::new();
    for s in segments {
        m.entry(s.subject_id.clone()).or_default().push((s.segment_index, s.span));
    }
    m
}

pub const STORE_KEY_COLUMNS: [&str; 3] = ["subject_id", "segment_index", "duration_s"];

/// 17 significant digits: enough to round-trip every f64.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn write_feature_store(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<&str> = STORE_KEY_COLUMNS.to_vec();
    header.extend(m.columns().iter().map(String::as_str));
    w.write_record(&header).map_err(csv_err(path))?;
    for r in m.rows() {
        let mut rec = vec![r.subject_id.clone(), r.segment_index.to_string(), fmt17(r.duration_s)];
        rec.extend(r.values.iter().map(|&v| fmt17(v)));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

fn parse_value(s: &str) -> std::result::Result<f64, String> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

pub fn read_feature_store(path: &Path) -> Result<FeatureMatrix> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.len() < 3 || header.iter().take(3).collect::<Vec<_>>() != STORE_KEY_COLUMNS {
        return Err(table_err(path, 1, "feature store must start with subject_id,segment_index,duration_s"));
    }
    let columns: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let mut rows = Vec::new();
    for raw in rdr.records() {
        let raw = raw.map_err(csv_err(path))?;
        let line = line_of(&raw);
        let segment_index = raw[1]
            .parse::<u32>()
            .map_err(|_| table_err(path, line, format!("bad segment_index `{}`", &raw[1])))?;
        let duration_s = parse_value(&raw[2]).map_err(|m| table_err(path, line, m))?;
        let values = raw
            .iter()
            .skip(3)
            .map(parse_value)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|m| table_err(path, line, m))?;
        rows.push(FeatureRow {
            subject_id: raw[0].to_string(),
            segment_index,
            duration_s,
            values,
        });
    }
    FeatureMatrix::new(columns, rows).map_err(|source| Error::Data {
        path: path.to_path_buf(),
        source,
    })
}

/// Imports a table of externally computed features.
///
/// Required column: `subject_id`. Optional: `segment_index` (default 0) and
/// `duration_s`; without it durations are joined from `segments`. Every other
/// column becomes `<set_name>.<column>`. Empty cells read as missing values.
pub fn import_external_features(
    path: &Path,
    set_name: &str,
    manifest: &DatasetManifest,
    segments: Option<&[SegmentRecord]>,
) -> Result<FeatureMatrix> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    let pos = |name: &str| header.iter().position(|h| h == name);
    let subject_col = pos("subject_id").ok_or_else(|| table_err(path, 1, "missing subject_id column"))?;
    let segment_col = pos("segment_index");
    let duration_col = pos("duration_s");
    if duration_col.is_none() && segments.is_none() {
        return Err(table_err(path, 1, "no duration_s column and no segment table to join durations from"));
    }
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&i| Some(i) != segment_col && Some(i) != duration_col && i != subject_col)
        .collect();
    let columns: Vec<String> = feature_cols.iter().map(|&i| format!("{set_name}.{}", &header[i])).collect();
    let durations: HashMap<(String, u32), f64> = segments
        .unwrap_or_default()
        .iter()
        .map(|s| ((s.subject_id.clone(), s.segment_index), s.span.duration_s()))
        .collect();
    let mut rows = Vec::new();
    for raw in rdr.records() {
        let raw = match raw {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(match e.kind() {
                    csv::ErrorKind::UnequalLengths { expected_len, len, .. } => table_err(
                        path,
                        line,
                        format!("column count mismatch: expected {expected_len}, found {len}"),
                    ),
                    _ => Error::Csv {
                        path: path.to_path_buf(),
                        source: e,
                    },
                });
            }
        };
        let line = line_of(&raw);
        let subject_id = raw[subject_col].to_string();
        if manifest.get(&subject_id).is_none() {
            return Err(table_err(path, line, format!("unknown subject `{subject_id}`")));
        }
        let segment_index = match segment_col {
            Some(c) => raw[c]
                .parse::<u32>()
                .map_err(|_| table_err(path, line, format!("bad segment_index `{}`", &raw[c])))?,
            None => 0,
        };
        let duration_s = match duration_col {
            Some(c) => parse_value(&raw[c]).map_err(|m| table_err(path, line, m))?,
            None => *durations.get(&(subject_id.clone(), segment_index)).ok_or_else(|| {
                table_err(path, line, format!("no segment ({subject_id}, {segment_index}) to take a duration from"))
            })?,
        };
        let values = feature_cols
            .iter()
            .map(|&i| parse_value(&raw[i]))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|m| table_err(path, line, m))?;
        rows.push(FeatureRow {
            subject_id,
            segment_index,
            duration_s,
            values,
        });
    }
    if rows.is_empty() {
        return Err(table_err(path, 1, "no data rows"));
    }
    FeatureMatrix::new(columns, rows).map_err(|source| Error::Data {
        path: path.to_path_buf(),
        source,
    })
}

/// Column-filter report as `column,r,status`.
pub fn write_filter_report(path: &Path, report: &adress_core::features::ColumnFilterReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["column", "r", "status"]).map_err(csv_err(path))?;
    for c in &report.retained {
        w.write_record([c.as_str(), "", "retained"]).map_err(csv_err(path))?;
    }
    for (c, r) in &report.removed {
        w.write_record([c.clone(), exact(*r), "removed".into()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn path_in(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
