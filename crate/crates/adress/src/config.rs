//! Pipeline configuration: a flat `key = value` file, overridden by
//! `ADRESS_*` environment variables, overridden by command-line flags.
//!
//! ```text
//! # comments start with '#'
//! manifest = data/train.csv
//! task = classification
//! models = lda, dt, knn
//! features.mrcg = out/features/mrcg.csv
//! filter.threshold = 0.2
//! model.svm.box_constraint = 0.1
//! ```
//!
//! Environment variables use the `ADRESS_` prefix, upper case, with `__`
//! standing for `.`: `ADRESS_FILTER__THRESHOLD=0.3`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adress_core::audio::{DenoiseConfig, Preprocess, SegmentSpan, VadConfig, VadThreshold, DEFAULT_TARGET_DBFS};
use adress_core::experiment::{EvalMode, ExperimentConfig, FilterScope, Task};
use adress_core::features::CorrelationFilter;
use adress_core::learners::{GprHyper, ModelKind, ModelSpec};

use crate::error::{io, Error, Result};

pub const DEFAULT_SEED: u64 = 20_200_901;
pub const ENV_PREFIX: &str = "ADRESS_";

/// Feature sets computed by `extract`; anything else must be imported.
pub const EXTRACTABLE_SETS: [&str; 3] = ["mrcg", "minimal", "linguistic"];

/// Sets with one row per subject; the duration filter is off for them by
/// default.
pub const SUBJECT_LEVEL_SETS: [&str; 2] = ["minimal", "linguistic"];

const PLAIN_KEYS: [&str; 23] = [
    "manifest",
    "test_manifest",
    "segments",
    "task",
    "mode",
    "seed",
    "jobs",
    "out",
    "models",
    "extract.sets",
    "stages.denoise",
    "stages.normalize",
    "stages.vad",
    "stages.standardize",
    "stages.duration_filter",
    "filter.threshold",
    "filter.scope",
    "filter.p_gate",
    "normalize.dbfs",
    "vad.threshold_db",
    "vad.margin_db",
    "vad.min_gap_s",
    "vad.max_len_s",
];

const PATH_KEYS: [&str; 4] = ["manifest", "test_manifest", "segments", "out"];

const MODEL_PARAMS: [&str; 14] = [
    "leaf_size",
    "k",
    "box_constraint",
    "kkt_tolerance",
    "max_iterations",
    "n_trees",
    "learn_rate",
    "features_per_split",
    "lda_ridge_scale",
    "svr_epsilon_scale",
    "rbf_gamma",
    "gpr.length_scale",
    "gpr.signal_sd",
    "gpr.noise_sd",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Stages {
    pub denoise: bool,
    pub normalize: bool,
    pub vad: bool,
    pub standardize: bool,
    pub duration_filter: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSource {
    pub name: String,
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub duration_filter: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub test_manifest: Option<PathBuf>,
    pub segments: Option<PathBuf>,
    pub task: Task,
    pub mode: EvalMode,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub models: Vec<ModelSpec>,
    pub extract_sets: Vec<String>,
    pub stages: Stages,
    pub filter: CorrelationFilter,
    pub filter_scope: FilterScope,
    pub normalize_dbfs: f64,
    pub vad: VadConfig,
    pub features: Vec<FeatureSource>,
}

/// Raw key/value layers in increasing precedence.
#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    pub file: Option<PathBuf>,
    pub env: Vec<(String, String)>,
    pub flags: Vec<(String, String)>,
}

impl ConfigSources {
    /// Environment layer taken from the current process.
    pub fn with_process_env(mut self) -> Self {
        self.env = std::env::vars().collect();
        self
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn is_path_key(key: &str) -> bool {
    PATH_KEYS.contains(&key) || (key.starts_with("features.") && !key.ends_with(".duration_filter"))
}

fn check_key(key: &str) -> Result<()> {
    if PLAIN_KEYS.contains(&key) {
        return Ok(());
    }
    if let Some(rest) = key.strip_prefix("features.") {
        let parts: Vec<&str> = rest.split('.').collect();
        return match parts.as_slice() {
            [name] | [name, "test" | "duration_filter"] if !name.is_empty() => Ok(()),
            _ => Err(cfg_err(format!("unknown key `{key}`"))),
        };
    }
    if let Some(rest) = key.strip_prefix("model.") {
        let (model, param) = rest.split_once('.').ok_or_else(|| cfg_err(format!("unknown key `{key}`")))?;
        model.parse::<ModelKind>().map_err(|e| cfg_err(e.to_string()))?;
        if !MODEL_PARAMS.contains(&param) {
            return Err(cfg_err(format!("unknown model parameter `{param}` in `{key}`")));
        }
        return Ok(());
    }
    Err(cfg_err(format!("unknown key `{key}`")))
}

/// Parses `key = value` lines; relative paths are resolved against `base`.
pub fn parse_pairs(text: &str, base: Option<&Path>, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("{origin}:{}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        check_key(&k).map_err(|e| cfg_err(format!("{origin}:{}: {e}", i + 1)))?;
        let v = match base {
            Some(b) if is_path_key(&k) && !v.is_empty() && Path::new(&v).is_relative() => {
                b.join(&v).to_string_lossy().into_owned()
            }
            _ => v,
        };
        out.push((k, v));
    }
    Ok(out)
}

fn env_pairs(env: &[(String, String)]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (name, value) in env {
        if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
            let key = rest.to_ascii_lowercase().replace("__", ".");
            check_key(&key).map_err(|e| cfg_err(format!("environment variable {name}: {e}")))?;
            out.push((key, value.clone()));
        }
    }
    out.sort();
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(cfg_err(format!("`{key}`: expected a boolean, got `{v}`"))),
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

impl PipelineConfig {
    pub fn load(sources: &ConfigSources) -> Result<Self> {
        let mut pairs = Vec::new();
        if let Some(path) = &sources.file {
            let text = std::fs::read_to_string(path).map_err(io(path))?;
            pairs.extend(parse_pairs(&text, path.parent(), &path.display().to_string())?);
        }
        pairs.extend(env_pairs(&sources.env)?);
        for (k, v) in &sources.flags {
            check_key(k)?;
            pairs.push((k.clone(), v.clone()));
        }
        Self::from_pairs(&pairs)
    }

    /// Later pairs win.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in pairs {
            check_key(k)?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied();
        let path = |k: &str| get(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        let flag = |k: &str, default: bool| get(k).map_or(Ok(default), |v| parse_bool(k, v));

        let task: Task = get("task").map_or(Ok(Task::Classification), |v| v.parse().map_err(Error::Core))?;
        let mode: EvalMode = get("mode").map_or(Ok(EvalMode::Loso), |v| v.parse().map_err(Error::Core))?;
        let seed = get("seed").map_or(Ok(DEFAULT_SEED), |v| parse("seed", v))?;
        let jobs = get("jobs").map(|v| parse::<usize>("jobs", v)).transpose()?;
        if jobs == Some(0) {
            return Err(cfg_err("`jobs` must be at least 1"));
        }

        let kinds: Vec<ModelKind> = match get("models") {
            Some(v) => list(v)
                .iter()
                .map(|m| m.parse::<ModelKind>().map_err(Error::Core))
                .collect::<Result<_>>()?,
            None => match task {
                Task::Classification => ModelKind::CLASSIFIERS.to_vec(),
                Task::Regression => ModelKind::REGRESSORS.to_vec(),
            },
        };
        for k in &kinds {
            if k.is_classifier() != (task == Task::Classification) {
                return Err(cfg_err(format!("model `{}` does not fit a {task:?} task", k.key())));
            }
        }
        let mut models: Vec<ModelSpec> = kinds.into_iter().map(ModelSpec::new).collect();
        apply_model_params(&kv, &mut models)?;

        let extract_sets = get("extract.sets").map_or_else(|| vec!["mrcg".into(), "minimal".into()], list);
        for s in &extract_sets {
            if !EXTRACTABLE_SETS.contains(&s.as_str()) {
                return Err(cfg_err(format!(
                    "unknown feature set `{s}`; extractable sets are {}",
                    EXTRACTABLE_SETS.join(", ")
                )));
            }
        }

        let stages = Stages {
            denoise: flag("stages.denoise", true)?,
            normalize: flag("stages.normalize", true)?,
            vad: flag("stages.vad", true)?,
            standardize: flag("stages.standardize", true)?,
            duration_filter: flag("stages.duration_filter", true)?,
        };

        let mut filter = CorrelationFilter::default();
        if let Some(v) = get("filter.threshold") {
            filter.threshold = parse("filter.threshold", v)?;
            if !(0.0..=1.0).contains(&filter.threshold) {
                return Err(cfg_err("`filter.threshold` must lie in [0, 1]"));
            }
        }
        if let Some(v) = get("filter.p_gate") {
            filter.p_gate = if v == "off" { None } else { Some(parse("filter.p_gate", v)?) };
        }
        let filter_scope: FilterScope =
            get("filter.scope").map_or(Ok(FilterScope::Fold), |v| v.parse().map_err(Error::Core))?;

        let normalize_dbfs = get("normalize.dbfs").map_or(Ok(DEFAULT_TARGET_DBFS), |v| parse("normalize.dbfs", v))?;
        let mut vad = VadConfig::default();
        match (get("vad.threshold_db"), get("vad.margin_db")) {
            (Some(_), Some(_)) => return Err(cfg_err("set only one of `vad.threshold_db` and `vad.margin_db`")),
            (Some(v), None) => vad.threshold = VadThreshold::Absolute { db: parse("vad.threshold_db", v)? },
            (None, Some(v)) => vad.threshold = VadThreshold::RelativeToPeak { margin_db: parse("vad.margin_db", v)? },
            (None, None) => {}
        }
        if let Some(v) = get("vad.min_gap_s") {
            vad.min_gap_s = parse("vad.min_gap_s", v)?;
        }
        if let Some(v) = get("vad.max_len_s") {
            vad.max_len_s = parse("vad.max_len_s", v)?;
            if !(vad.max_len_s > 0.0 && vad.max_len_s <= SegmentSpan::MAX_LEN_S) {
                return Err(cfg_err(format!("`vad.max_len_s` must lie in (0, {}]", SegmentSpan::MAX_LEN_S)));
            }
        }

        let mut names: Vec<&str> = kv
            .keys()
            .filter_map(|k| k.strip_prefix("features."))
            .map(|r| r.split('.').next().unwrap_or(r))
            .collect();
        names.dedup();
        let mut features = Vec::new();
        for name in names {
            let train = path(&format!("features.{name}"))
                .ok_or_else(|| cfg_err(format!("feature set `{name}` has no `features.{name}` path")))?;
            let dkey = format!("features.{name}.duration_filter");
            let default_filter = stages.duration_filter && !SUBJECT_LEVEL_SETS.contains(&name);
            features.push(FeatureSource {
                name: name.to_string(),
                train,
                test: path(&format!("features.{name}.test")),
                duration_filter: flag(&dkey, default_filter)?,
            });
        }

        Ok(Self {
            manifest: path("manifest"),
            test_manifest: path("test_manifest"),
            segments: path("segments"),
            task,
            mode,
            seed,
            jobs,
            out: path("out").unwrap_or_else(|| PathBuf::from("out")),
            models,
            extract_sets,
            stages,
            filter,
            filter_scope,
            normalize_dbfs,
            vad,
            features,
        })
    }

    pub fn require_manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| cfg_err("no manifest given (use --manifest or `manifest = ...`)"))
    }

    pub fn require_segments(&self) -> Result<&Path> {
        self.segments
            .as_deref()
            .ok_or_else(|| cfg_err("no segment table given (set `segments = ...`)"))
    }

    pub fn preprocess(&self) -> Preprocess {
        Preprocess {
            denoise: self.stages.denoise.then(DenoiseConfig::default),
            normalize_dbfs: self.stages.normalize.then_some(self.normalize_dbfs),
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            task: self.task,
            mode: self.mode,
            seed: self.seed,
            models: self.models.iter().map(|m| m.clone().with_seed(self.seed)).collect(),
            filter: self.filter,
            filter_scope: self.filter_scope,
            standardize: self.stages.standardize,
        }
    }

    /// Checks that every referenced input exists.
    pub fn validate_paths(&self) -> Result<()> {
        let mut paths: Vec<&Path> = Vec::new();
        paths.extend(self.manifest.as_deref());
        paths.extend(self.test_manifest.as_deref());
        paths.extend(self.segments.as_deref());
        for f in &self.features {
            paths.push(&f.train);
            paths.extend(f.test.as_deref());
        }
        for p in paths {
            if !p.exists() {
                return Err(cfg_err(format!("`{}` does not exist", p.display())));
            }
        }
        Ok(())
    }
}

fn apply_model_params(kv: &BTreeMap<&str, &str>, models: &mut [ModelSpec]) -> Result<()> {
    for (key, value) in kv.range("model."..) {
        let Some(rest) = key.strip_prefix("model.") else { break };
        let (model, param) = rest.split_once('.').expect("checked key");
        let kind: ModelKind = model.parse().map_err(Error::Core)?;
        let Some(spec) = models.iter_mut().find(|m| m.kind == kind) else {
            return Err(cfg_err(format!("`{key}` configures model `{}`, which is not selected", kind.key())));
        };
        let h = &mut spec.hyper;
        match param {
            "leaf_size" => h.leaf_size = parse(key, value)?,
            "k" => h.k = parse(key, value)?,
            "box_constraint" => h.box_constraint = parse(key, value)?,
            "kkt_tolerance" => h.kkt_tolerance = parse(key, value)?,
            "max_iterations" => h.max_iterations = parse(key, value)?,
            "n_trees" => h.n_trees = parse(key, value)?,
            "learn_rate" => h.learn_rate = parse(key, value)?,
            "features_per_split" => h.features_per_split = Some(parse(key, value)?),
            "lda_ridge_scale" => h.lda_ridge_scale = parse(key, value)?,
            "svr_epsilon_scale" => h.svr_epsilon_scale = parse(key, value)?,
            "rbf_gamma" => h.rbf_gamma = Some(parse(key, value)?),
            _ => {}
        }
    }
    for spec in models.iter_mut() {
        let p = |name: &str| kv.get(format!("model.{}.gpr.{name}", spec.kind.key()).as_str()).copied();
        match (p("length_scale"), p("signal_sd"), p("noise_sd")) {
            (None, None, None) => {}
            (Some(l), Some(s), Some(n)) => {
                spec.hyper.gpr = GprHyper::Fixed {
                    length_scale: parse("gpr.length_scale", l)?,
                    signal_sd: parse("gpr.signal_sd", s)?,
                    noise_sd: parse("gpr.noise_sd", n)?,
                }
            }
            _ => return Err(cfg_err("fixed GPR hyperparameters need length_scale, signal_sd and noise_sd together")),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        let c = PipelineConfig::from_pairs(&[]).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.task, Task::Classification);
        assert_eq!(c.mode, EvalMode::Loso);
        assert_eq!(c.models.len(), 5);
        assert_eq!(c.filter.threshold, 0.2);
        assert!(c.stages.denoise && c.stages.standardize);
    }

    #[test]
    fn file_env_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "# run\nseed = 1\njobs = 2\nmanifest = m.csv # train\nfilter.threshold = 0.3\n").unwrap();
        let c = PipelineConfig::load(&ConfigSources {
            file: Some(file),
            env: pairs(&[("ADRESS_SEED", "2"), ("ADRESS_FILTER__THRESHOLD", "0.4"), ("HOME", "/x")]),
            flags: pairs(&[("seed", "3")]),
        })
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.jobs, Some(2));
        assert_eq!(c.filter.threshold, 0.4);
        assert_eq!(c.manifest.unwrap(), dir.path().join("m.csv"));
    }

    #[test]
    fn unknown_keys_and_models_are_errors() {
        for bad in [
            vec![("modles", "lda")],
            vec![("models", "lda, qda")],
            vec![("model.lda.depth", "3")],
            vec![("task", "regression"), ("models", "lda")],
            vec![("extract.sets", "mrcg, egemaps")],
            vec![("jobs", "0")],
            vec![("models", "lda"), ("model.svm.k", "3")],
        ] {
            let err = PipelineConfig::from_pairs(&pairs(&bad)).unwrap_err();
            assert!(matches!(err, Error::Config(_) | Error::Core(adress_core::Error::Config(_))), "{bad:?}: {err}");
        }
        let err = PipelineConfig::load(&ConfigSources { env: pairs(&[("ADRESS_NOPE", "1")]), ..Default::default() });
        assert!(err.is_err());
    }

    #[test]
    fn feature_sets_and_model_params() {
        let c = PipelineConfig::from_pairs(&pairs(&[
            ("task", "regression"),
            ("models", "linreg, gpr"),
            ("model.gpr.gpr.length_scale", "2"),
            ("model.gpr.gpr.signal_sd", "3"),
            ("model.gpr.gpr.noise_sd", "1"),
            ("features.mrcg", "a.csv"),
            ("features.minimal", "b.csv"),
            ("features.minimal.test", "bt.csv"),
            ("features.egemaps", "c.csv"),
            ("features.egemaps.duration_filter", "off"),
        ]))
        .unwrap();
        let f: Vec<(&str, bool)> = c.features.iter().map(|f| (f.name.as_str(), f.duration_filter)).collect();
        assert_eq!(f, [("egemaps", false), ("minimal", false), ("mrcg", true)]);
        assert_eq!(c.features[1].test.as_deref(), Some(Path::new("bt.csv")));
        assert_eq!(
            c.models[1].hyper.gpr,
            GprHyper::Fixed { length_scale: 2.0, signal_sd: 3.0, noise_sd: 1.0 }
        );
    }
}
