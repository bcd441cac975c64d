//! Subject metadata, dataset manifests and demographic balance tables.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{mean, sample_sd};

pub const MMSE_MAX: u8 = 30;

/// Diagnostic group. `Ad` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "AD")]
    Ad,
    #[serde(rename = "nonAD")]
    NonAd,
}

impl Group {
    pub fn other(self) -> Group {
        match self {
            Group::Ad => Group::NonAd,
            Group::NonAd => Group::Ad,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Ad => "AD",
            Group::NonAd => "nonAD",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "AD" | "ad" | "Ad" => Ok(Group::Ad),
            "nonAD" | "NonAD" | "non-AD" | "nonad" | "NonAd" => Ok(Group::NonAd),
            other => Err(Error::InvalidInput(alloc::format!("unknown group `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl FromStr for Gender {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "M" | "m" | "male" => Ok(Gender::M),
            "F" | "f" | "female" => Ok(Gender::F),
            other => Err(Error::InvalidInput(alloc::format!("unknown gender `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
}

/// Half-open age interval `[low, high)` in years on the 5-year grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgeBand {
    pub low: u32,
    pub high: u32,
}

impl AgeBand {
    pub const WIDTH: u32 = 5;

    pub fn new(low: u32, high: u32) -> Result<Self> {
        if low >= high {
            return Err(Error::InvalidInput(alloc::format!(
                "age band [{low}, {high}) is empty"
            )));
        }
        if low % Self::WIDTH != 0 || high - low != Self::WIDTH {
            return Err(Error::InvalidInput(alloc::format!(
                "age band [{low}, {high}) is not on the 5-year grid"
            )));
        }
        Ok(Self { low, high })
    }

    /// The six bands [50,55) … [75,80) that every balance table lists.
    pub fn standard_grid() -> impl Iterator<Item = AgeBand> {
        (50..80).step_by(5).map(|low| AgeBand { low, high: low + 5 })
    }
}

impl fmt::Display for AgeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.low, self.high)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub group: Group,
    pub mmse: u8,
    pub age_band: AgeBand,
    pub gender: Gender,
    pub audio_path: String,
    pub transcript_path: Option<String>,
}

/// Range-checks a raw MMSE value.
pub fn validate_mmse(subject: &str, mmse: i64) -> Result<u8> {
    if (0..=i64::from(MMSE_MAX)).contains(&mmse) {
        Ok(mmse as u8)
    } else {
        Err(Error::MmseOutOfRange {
            subject: subject.to_string(),
            mmse,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub split: Split,
    records: Vec<SubjectRecord>,
}

impl DatasetManifest {
    pub fn new(split: Split, records: Vec<SubjectRecord>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let mut paths = BTreeSet::new();
        for r in &records {
            validate_mmse(&r.subject_id, i64::from(r.mmse))?;
            if !ids.insert(r.subject_id.as_str()) {
                return Err(Error::DuplicateSubject(r.subject_id.clone()));
            }
            if !paths.insert(r.audio_path.as_str()) {
                return Err(Error::DuplicateAudioPath(r.audio_path.clone()));
            }
        }
        Ok(Self { split, records })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, subject_id: &str) -> Option<&SubjectRecord> {
        self.records.iter().find(|r| r.subject_id == subject_id)
    }

    /// Returns a manifest without `subject_id`, or an unchanged clone.
    pub fn without(&self, subject_id: &str) -> Self {
        Self {
            split: self.split,
            records: self
                .records
                .iter()
                .filter(|r| r.subject_id != subject_id)
                .cloned()
                .collect(),
        }
    }
}

/// Counts and MMSE summary for one group within one age band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCell {
    pub male: usize,
    pub female: usize,
    pub mmse_mean: Option<f64>,
    /// Sample sd; `None` for fewer than two subjects.
    pub mmse_sd: Option<f64>,
}

impl GroupCell {
    fn from_scores(male: usize, female: usize, scores: &[f64]) -> Self {
        Self {
            male,
            female,
            mmse_mean: (!scores.is_empty()).then(|| mean(scores)),
            mmse_sd: (scores.len() >= 2).then(|| sample_sd(scores)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub label: String,
    pub ad: GroupCell,
    pub non_ad: GroupCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceTable {
    pub rows: Vec<BalanceRow>,
    pub total: BalanceRow,
}

fn summarize<'a>(label: String, records: impl Iterator<Item = &'a SubjectRecord> + Clone) -> BalanceRow {
    let cell = |g: Group| {
        let members = records.clone().filter(move |r| r.group == g);
        let male = members.clone().filter(|r| r.gender == Gender::M).count();
        let female = members.clone().filter(|r| r.gender == Gender::F).count();
        let scores: Vec<f64> = members.map(|r| f64::from(r.mmse)).collect();
        GroupCell::from_scores(male, female, &scores)
    };
    BalanceRow {
        label,
        ad: cell(Group::Ad),
        non_ad: cell(Group::NonAd),
    }
}

/// Age-band × group × gender counts with MMSE mean (sd), plus a totals row.
pub fn balance_report(manifest: &DatasetManifest) -> BalanceTable {
    let mut bands: BTreeSet<AgeBand> = AgeBand::standard_grid().collect();
    bands.extend(manifest.records.iter().map(|r| r.age_band));
    let rows = bands
        .into_iter()
        .map(|band| {
            summarize(
                band.to_string(),
                manifest.records.iter().filter(move |r| r.age_band == band),
            )
        })
        .collect();
    BalanceTable {
        rows,
        total: summarize("Total".to_string(), manifest.records.iter()),
    }
}
