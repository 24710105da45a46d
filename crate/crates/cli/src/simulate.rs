//! `simulate`: resolves flags (or a manifest) into a sweep, runs it and
//! writes `<out>/<timestamp>_seed<seed>/{results.csv,manifest.json}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use gncoset::construction::{load_spec, CodeSpecFile};
use gncoset::pdf::{DampingSchedule, EarlyTermination, ScheduleEntry};
use gncoset::sc::{FastConfig, ScMode};
use gncoset::sim::{parse_snr_range, run_sweep_with, SimConfig};
use gncoset::{CodeSpec, QuantSpec};
use serde::{Deserialize, Serialize};

use crate::{EtChoice, ScChoice, SimulateArgs};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.csv";

/// Everything the results depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub spec: CodeSpecFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_source: Option<String>,
    pub esn0_db: Vec<f64>,
    pub t_max: usize,
    pub quant: String,
    pub schedule: Vec<ScheduleEntry>,
    pub seed: u64,
    pub max_frames: u64,
    pub target_block_errors: u64,
    pub sc_mode: String,
    pub early_termination: EarlyTermination,
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub workers: usize,
    pub partial: bool,
    pub results: String,
    pub settings: SweepSettings,
}

fn sc_name(c: ScChoice) -> &'static str {
    match c {
        ScChoice::Fast => "fast",
        ScChoice::Exact => "exact",
        ScChoice::Pure => "pure",
    }
}

fn sc_mode(name: &str) -> Result<ScMode> {
    Ok(match name {
        "fast" => ScMode::Fast(FastConfig::default()),
        "exact" => ScMode::Fast(FastConfig::exact_only()),
        "pure" => ScMode::Pure,
        other => bail!("unknown SC mode {other:?}"),
    })
}

fn settings_from_args(a: &SimulateArgs) -> Result<SweepSettings> {
    let spec_path = a.spec.as_ref().expect("clap requires --spec without --manifest");
    let spec = load_spec(spec_path).with_context(|| format!("loading {}", spec_path.display()))?;
    let esn0_db = parse_snr_range(a.esn0.as_deref().expect("clap requires --esn0 without --manifest"))?;
    let schedule = match &a.schedule {
        Some(p) => DampingSchedule::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => DampingSchedule::shipped_default(),
    };
    Ok(SweepSettings {
        spec: spec.to_file_format(),
        spec_source: Some(spec_path.display().to_string()),
        esn0_db,
        t_max: a.tmax,
        quant: a.quant.to_string(),
        schedule: schedule.entries(),
        seed: a.seed,
        max_frames: a.max_frames,
        target_block_errors: a.target_errors,
        sc_mode: sc_name(a.sc).to_string(),
        early_termination: match a.et {
            EtChoice::BothGraphs => EarlyTermination::BothGraphs,
            EtChoice::CurrentGraph => EarlyTermination::CurrentGraph,
            EtChoice::Off => EarlyTermination::Off,
        },
        timing: a.timing,
    })
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn sim_config(s: &SweepSettings, workers: usize) -> Result<SimConfig> {
    let spec = CodeSpec::from_file_format(s.spec.clone(), "settings.spec")?;
    let quant: QuantSpec = s.quant.parse()?;
    let mut cfg = SimConfig::new(Arc::new(spec), quant, s.t_max, s.esn0_db.clone());
    cfg.schedule = DampingSchedule::from_entries(s.schedule.clone(), "settings.schedule")?;
    cfg.seed = s.seed;
    cfg.max_frames = s.max_frames;
    cfg.target_block_errors = s.target_block_errors;
    cfg.worker_count = workers;
    cfg.sc_mode = sc_mode(&s.sc_mode)?;
    cfg.early_termination = s.early_termination;
    Ok(cfg)
}

fn create_run_dir(parent: &Path, stamp: &str, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    let base = format!("{stamp}_seed{seed}");
    for n in 1u32.. {
        let name = if n == 1 { base.clone() } else { format!("{base}-{n}") };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}

pub fn run(a: SimulateArgs) -> Result<ExitCode> {
    let settings = match &a.manifest {
        Some(p) => load_manifest(p)?.settings,
        None => settings_from_args(&a)?,
    };
    let cfg = sim_config(&settings, a.workers)?;

    let cancel = Arc::new(AtomicBool::new(false));
    {
        let cancel = cancel.clone();
        // A second handler registration fails only when one already exists.
        let _ = ctrlc::set_handler(move || cancel.store(true, Ordering::Relaxed));
    }

    let started = Utc::now();
    let run_dir = create_run_dir(&a.out, &started.format("%Y%m%dT%H%M%SZ").to_string(), settings.seed)?;
    eprintln!(
        "run {}: N={} K={} {} t_max={} points={}",
        run_dir.display(),
        cfg.spec.n(),
        cfg.spec.k_total(),
        settings.quant,
        settings.t_max,
        settings.esn0_db.len()
    );
    let report = run_sweep_with(&cfg, &cancel, |p| {
        eprintln!(
            "  {:>6} dB  frames {:>8}  blk_err {:>6}  bler {:.3e}  skip {:.3}",
            p.esn0_db,
            p.frames,
            p.block_errors,
            p.bler(),
            p.skip_fraction()
        );
    })?;

    let csv = report.to_csv_string(settings.timing);
    fs::write(run_dir.join(RESULTS_FILE), &csv)?;
    let manifest = RunManifest {
        tool: "gncoset".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "simulate".into(),
        started_utc: started.to_rfc3339(),
        finished_utc: Utc::now().to_rfc3339(),
        workers: a.workers,
        partial: report.partial,
        results: RESULTS_FILE.into(),
        settings,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(run_dir.join(MANIFEST_FILE), text)?;
    print!("{csv}");
    eprintln!("results: {}", run_dir.join(RESULTS_FILE).display());
    if report.partial {
        eprintln!("interrupted: partial results written");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
