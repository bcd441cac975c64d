use std::path::PathBuf;
use std::process::ExitCode;

use adress::config::{ConfigSources, PipelineConfig};
use adress::{pipeline, report, tables};
use adress_core::dataset::{balance_report, Split};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adress", version, about = "Speech-based dementia screening baselines")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// loso or train_test.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Any configuration key, e.g. `--set filter.threshold=0.3`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Voice activity segmentation: writes segments.csv and per-segment WAVs.
    Segment {
        /// Skip writing per-segment audio.
        #[arg(long)]
        no_audio: bool,
    },
    /// Computes feature stores under <out>/features.
    Extract {
        /// Comma-separated: mrcg, minimal, linguistic.
        #[arg(long)]
        sets: Option<String>,
    },
    /// Converts an external feature table into a feature store.
    ImportFeatures {
        #[arg(long)]
        name: String,
        #[arg(long)]
        input: PathBuf,
        /// Segment table to take durations from when the input has none.
        #[arg(long)]
        segments: Option<PathBuf>,
    },
    /// Applies the duration-correlation filter to a feature store.
    Filter {
        #[arg(long)]
        input: PathBuf,
    },
    /// Runs every feature set × model and writes the report bundle.
    Evaluate,
    /// Prints a report bundle's tables, and the balance table of --manifest.
    Report {
        /// Defaults to <out>/report.json.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn sources(g: &GlobalArgs, extra: Vec<(String, String)>) -> Result<ConfigSources> {
    let mut flags = Vec::new();
    for kv in &g.set {
        let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        flags.push((k.trim().to_string(), v.trim().to_string()));
    }
    let path = |p: &PathBuf| p.to_string_lossy().into_owned();
    if let Some(p) = &g.manifest {
        flags.push(("manifest".into(), path(p)));
    }
    if let Some(s) = g.seed {
        flags.push(("seed".into(), s.to_string()));
    }
    if let Some(j) = g.jobs {
        flags.push(("jobs".into(), j.to_string()));
    }
    if let Some(m) = &g.mode {
        flags.push(("mode".into(), m.clone()));
    }
    if let Some(o) = &g.out {
        flags.push(("out".into(), path(o)));
    }
    flags.extend(extra);
    Ok(ConfigSources {
        file: g.config.clone(),
        env: Vec::new(),
        flags,
    }
    .with_process_env())
}

fn run(cli: Cli) -> Result<()> {
    let extra = match &cli.command {
        Command::Extract { sets: Some(s) } => vec![("extract.sets".to_string(), s.clone())],
        _ => Vec::new(),
    };
    let cfg = PipelineConfig::load(&sources(&cli.global, extra)?)?;
    let pool = pipeline::thread_pool(cfg.jobs)?;
    let out = cfg.out.clone();
    let mkdir = |p: &PathBuf| std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()));

    match cli.command {
        Command::Segment { no_audio } => {
            let manifest = tables::load_manifest(cfg.require_manifest()?, Split::Train)?;
            mkdir(&out)?;
            let audio_dir = (!no_audio).then(|| out.join("segments"));
            let segs = pool.install(|| pipeline::segment_corpus(&cfg, &manifest, audio_dir.as_deref()))?;
            tables::write_segments(&out.join("segments.csv"), &segs)?;
            println!("{}", pipeline::segment_summary(&manifest, &segs));
        }
        Command::Extract { .. } => {
            let manifest = tables::load_manifest(cfg.require_manifest()?, Split::Train)?;
            let dir = out.join("features");
            mkdir(&dir)?;
            let segs = pool.install(|| pipeline::corpus_segments(&cfg, &manifest))?;
            for set in &cfg.extract_sets {
                let ex = pool.install(|| pipeline::extract_set(&cfg, &manifest, &segs, set))?;
                for w in &ex.warnings {
                    eprintln!("warning: {w}");
                }
                let p = dir.join(format!("{set}.csv"));
                tables::write_feature_store(&p, &ex.matrix)?;
                println!("{set}: {} rows x {} columns -> {}", ex.matrix.n_rows(), ex.matrix.n_cols(), p.display());
            }
        }
        Command::ImportFeatures { name, input, segments } => {
            let manifest = tables::load_manifest(cfg.require_manifest()?, Split::Train)?;
            let segs = segments.or(cfg.segments.clone()).map(|p| tables::read_segments(&p)).transpose()?;
            let m = tables::import_external_features(&input, &name, &manifest, segs.as_deref())?;
            let dir = out.join("features");
            mkdir(&dir)?;
            let p = dir.join(format!("{name}.csv"));
            tables::write_feature_store(&p, &m)?;
            println!("{name}: {} rows x {} columns -> {}", m.n_rows(), m.n_cols(), p.display());
        }
        Command::Filter { input } => {
            let m = tables::read_feature_store(&input)?;
            let (kept, rep) = cfg.filter.apply(&m).with_context(|| format!("filtering {}", input.display()))?;
            let dir = out.join("filtered");
            mkdir(&dir)?;
            let stem = input.file_stem().map_or("features".into(), |s| s.to_string_lossy().into_owned());
            tables::write_feature_store(&dir.join(format!("{stem}.csv")), &kept)?;
            tables::write_filter_report(&dir.join(format!("{stem}.filter.csv")), &rep)?;
            println!("{stem}: retained {} of {} columns", rep.retained.len(), m.n_cols());
        }
        Command::Evaluate => {
            let rep = pipeline::evaluate(&cfg, &pool)?;
            mkdir(&out)?;
            report::write_bundle(&out, &rep)?;
            print!("{}", report::render(&rep));
        }
        Command::Report { input } => {
            if let Some(p) = &cfg.manifest {
                let manifest = tables::load_manifest(p, Split::Train)?;
                tables::write_balance_csv(std::io::stdout().lock(), &balance_report(&manifest))?;
                println!();
            }
            let p = input.unwrap_or_else(|| out.join(report::REPORT_JSON));
            if p.exists() || cfg.manifest.is_none() {
                print!("{}", report::render(&report::read_report(&p)?));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
