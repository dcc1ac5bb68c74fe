//! Command-line pipelines: scene and episode generation, label adjudication,
//! rollouts, evaluation and comparison. Every command that writes files also
//! writes a manifest from which `rerun` reproduces the same bytes.

use crate::metrics::{self, Comparison, EpisodeResult, MetricsReport};
use crate::rove::{
    dataset_stats, export_adjudication, generate_episode, import_adjudication, label_scene, verify_episode,
    AdjudicationItem, EpisodeConfig, EpisodeError, EpisodeSpec, LabelSource, MockClassifier, MockRecognizer,
    SignatureTable,
};
use crate::rove::rtsa::{apply_resolutions, label_quality, pending_items, RegionLabeling};
use crate::seed;
use crate::spe::{self, plan_blockage, Mode, Policy, RolloutConfig};
use crate::world::{generate_scene_with_id, SceneGraph, SceneParams};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// Generation ran but every attempted episode was rejected.
pub const EXIT_REJECTED: i32 = 3;

pub const CONFIG_ENV: &str = "RELAYNAV_CONFIG";
pub const MANIFEST: &str = "manifest.json";
pub const RESULTS: &str = "results.jsonl";
pub const LABELS: &str = "labels.jsonl";
pub const METRICS: &str = "metrics.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Rejected(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Rejected(_) => EXIT_REJECTED,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn rt(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Every tunable of the pipeline. Missing keys in a config file take defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub scene: SceneParams,
    pub labeling: LabelingConfig,
    pub episode: EpisodeConfig,
    pub rollout: RolloutConfig,
}

/// Accuracies of the two mock panorama classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelingConfig {
    pub p_a: f64,
    pub p_b: f64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self { p_a: 0.885, p_b: 0.850 }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "relaynav", version, about = "Relay navigation simulator and episode generator")]
pub struct Cli {
    /// TOML file with `scene`, `labeling`, `episode` and `rollout` tables.
    #[arg(long, env = CONFIG_ENV, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate and label scenes.
    GenScenes {
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate verified episodes from a scene directory.
    GenEpisodes {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, default_value_t = 1)]
        per_scene: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export disputed room labels for review, or import the reviewed file.
    Adjudicate {
        #[command(subcommand)]
        action: Adjudicate,
    },
    /// Roll out every episode of a file.
    Run(RunArgs),
    /// Aggregate the results of a run.
    Eval {
        #[arg(long)]
        results: PathBuf,
        /// Defaults to the results directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative change from run A to run B.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Defaults to B's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics, plus label quality when scenes are given.
    Stats {
        #[arg(long)]
        episodes: Option<PathBuf>,
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Re-execute the command recorded in a manifest and check the outputs match.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum Adjudicate {
    Export {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Import {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lockstep,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Deconav,
    Static,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub episodes: PathBuf,
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long)]
    pub tau: Option<u64>,
    #[arg(long)]
    pub t_max: Option<u64>,
    /// Distributed mode only, ticks.
    #[arg(long)]
    pub latency: Option<u64>,
    #[arg(long)]
    pub jitter: Option<u64>,
    #[arg(long)]
    pub drop: Option<f64>,
    /// Close one corridor on a ground-truth route mid-rollout.
    #[arg(long)]
    pub blockage: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// A fully resolved command, as stored in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    GenScenes { count: u64, seed: u64 },
    GenEpisodes { scenes: PathBuf, per_scene: u64, seed: u64 },
    AdjudicateExport { scenes: PathBuf },
    AdjudicateImport { scenes: PathBuf, file: PathBuf },
    Run { episodes: PathBuf, scenes: PathBuf, blockage: bool, seed: u64 },
    Eval { results: PathBuf },
    Compare { a: PathBuf, b: PathBuf },
}

impl Invocation {
    /// Where the manifest goes for an output path of this command.
    pub fn manifest_path(&self, out: &Path) -> PathBuf {
        match self {
            Invocation::GenEpisodes { .. } | Invocation::AdjudicateExport { .. } => out.with_extension(MANIFEST),
            Invocation::Eval { .. } => out.join("metrics.manifest.json"),
            Invocation::Compare { .. } => out.join("comparison.manifest.json"),
            _ => out.join(MANIFEST),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub invocation: Invocation,
    pub config: Config,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(at(path))?;
        serde_json::from_str(&text).map_err(|e| rt(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(at(path))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// What a command wrote, and whether it only produced rejections.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub rejection_only: bool,
    pub summary: String,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            if !out.summary.is_empty() {
                print!("{}", out.summary);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("relaynav: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let (inv, out) = match cli.command {
        Command::GenScenes { count, seed, out } => (Invocation::GenScenes { count, seed }, out),
        Command::GenEpisodes {
            scenes,
            per_scene,
            seed,
            out,
        } => (
            Invocation::GenEpisodes {
                scenes: absolute(&scenes)?,
                per_scene,
                seed,
            },
            out,
        ),
        Command::Adjudicate {
            action: Adjudicate::Export { scenes, out },
        } => (Invocation::AdjudicateExport { scenes: absolute(&scenes)? }, out),
        Command::Adjudicate {
            action: Adjudicate::Import { scenes, file, out },
        } => (
            Invocation::AdjudicateImport {
                scenes: absolute(&scenes)?,
                file: absolute(&file)?,
            },
            out,
        ),
        Command::Run(args) => {
            apply_run_flags(&mut cfg.rollout, &args)?;
            (
                Invocation::Run {
                    episodes: absolute(&args.episodes)?,
                    scenes: absolute(&args.scenes)?,
                    blockage: args.blockage,
                    seed: args.seed,
                },
                args.out,
            )
        }
        Command::Eval { results, out } => {
            let out = out.unwrap_or_else(|| results.clone());
            (Invocation::Eval { results: absolute(&results)? }, out)
        }
        Command::Compare { a, b, out } => {
            let out = out.unwrap_or_else(|| b.clone());
            (
                Invocation::Compare {
                    a: absolute(&a)?,
                    b: absolute(&b)?,
                },
                out,
            )
        }
        Command::Stats { episodes, scenes, json } => return cmd_stats(episodes.as_deref(), scenes.as_deref(), json),
        Command::Rerun { manifest, out } => return rerun(&manifest, &out),
    };
    execute(&inv, &cfg, &out)
}

fn absolute(p: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(p).map_err(at(p))
}

/// Folds run flags into the rollout config. Transport flags need distributed mode.
pub fn apply_run_flags(rc: &mut RolloutConfig, args: &RunArgs) -> Result<(), CliError> {
    if let Some(m) = args.mode {
        rc.mode = match m {
            ModeArg::Lockstep => Mode::Lockstep,
            ModeArg::Distributed => Mode::Distributed,
        };
    }
    if let Some(p) = args.policy {
        rc.policy = match p {
            PolicyArg::Deconav => Policy::Deconav,
            PolicyArg::Static => Policy::Static,
        };
    }
    if let Some(t) = args.tau {
        rc.tau = t;
    }
    if let Some(t) = args.t_max {
        rc.t_max = t;
    }
    let transport_flags = args.latency.is_some() || args.jitter.is_some() || args.drop.is_some();
    if transport_flags && rc.mode != Mode::Distributed {
        return Err(CliError::Usage(
            "--latency, --jitter and --drop need --mode distributed".into(),
        ));
    }
    if let Some(l) = args.latency {
        rc.transport.latency = l;
    }
    if let Some(j) = args.jitter {
        rc.transport.jitter = j;
    }
    if let Some(d) = args.drop {
        rc.transport.drop_prob = d;
    }
    rc.validate().map_err(|e| CliError::Usage(e.to_string()))
}

/// Runs a resolved command into `out` and writes its manifest.
pub fn execute(inv: &Invocation, cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let outcome = match inv {
        Invocation::GenScenes { count, seed } => gen_scenes(*count, *seed, cfg, out)?,
        Invocation::GenEpisodes { scenes, per_scene, seed } => gen_episodes(scenes, *per_scene, *seed, cfg, out)?,
        Invocation::AdjudicateExport { scenes } => adjudicate_export(scenes, out)?,
        Invocation::AdjudicateImport { scenes, file } => adjudicate_import(scenes, file, out)?,
        Invocation::Run {
            episodes,
            scenes,
            blockage,
            seed,
        } => run_episodes(episodes, scenes, *blockage, *seed, &cfg.rollout, out)?,
        Invocation::Eval { results } => eval(results, out)?,
        Invocation::Compare { a, b } => compare(a, b, out)?,
    };
    let manifest_path = inv.manifest_path(out);
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut artifacts = Vec::with_capacity(outcome.files.len());
    for f in &outcome.files {
        let rel = f.strip_prefix(base).unwrap_or(f);
        artifacts.push(Artifact {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_file(f)?,
        });
    }
    let manifest = RunManifest {
        tool_version: crate::VERSION.to_string(),
        invocation: inv.clone(),
        config: cfg.clone(),
        artifacts,
    };
    write_json_pretty(&manifest_path, &manifest)?;
    if outcome.rejection_only {
        return Err(CliError::Rejected(format!(
            "every episode was rejected; see {}",
            rejection_log_path(out).display()
        )));
    }
    Ok(outcome)
}

/// Re-executes a manifest into `out` and checks each artifact hash.
pub fn rerun(manifest_path: &Path, out: &Path) -> Result<Outcome, CliError> {
    let manifest = RunManifest::load(manifest_path)?;
    let outcome = match execute(&manifest.invocation, &manifest.config, out) {
        Err(CliError::Rejected(_)) => Outcome::default(),
        other => other?,
    };
    let base = manifest.invocation.manifest_path(out);
    let base = base.parent().unwrap_or(Path::new("."));
    let mut mismatched = Vec::new();
    for a in &manifest.artifacts {
        let p = base.join(&a.path);
        if !p.exists() || sha256_file(&p)? != a.sha256 {
            mismatched.push(a.path.clone());
        }
    }
    if !mismatched.is_empty() {
        return Err(rt(format!("rerun differs in {}", mismatched.join(", "))));
    }
    Ok(Outcome {
        summary: format!(
            "{}reproduced {} artifacts\n",
            outcome.summary,
            manifest.artifacts.len()
        ),
        ..outcome
    })
}

fn write_json_pretty<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).map_err(rt)?;
    text.push('\n');
    write(path, text)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(at(parent))?;
    }
    fs::write(path, contents).map_err(at(path))
}

fn write_lines<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).map_err(rt)?);
        text.push('\n');
    }
    write(path, text)
}

pub fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(at(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| rt(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn scene_file_name(i: u64) -> String {
    format!("scene_{i:04}.json")
}

/// Scenes of a directory in file-name order.
pub fn load_scenes(dir: &Path) -> Result<Vec<(String, SceneGraph)>, CliError> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(at(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("scene_") && n.ends_with(".json"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let p = dir.join(&n);
            SceneGraph::load(&p)
                .map(|s| (n, s))
                .map_err(|e| rt(format!("{}: {e}", p.display())))
        })
        .collect()
}

fn load_labelings(dir: &Path) -> Result<Vec<RegionLabeling>, CliError> {
    let p = dir.join(LABELS);
    if p.exists() {
        read_lines(&p)
    } else {
        Ok(Vec::new())
    }
}

fn classifiers(root: u64, cfg: &LabelingConfig) -> (MockClassifier, MockClassifier) {
    (
        MockClassifier::new(LabelSource::ClassifierA, cfg.p_a, seed::derive(root, "classifier", 0)),
        MockClassifier::new(LabelSource::ClassifierB, cfg.p_b, seed::derive(root, "classifier", 1)),
    )
}

fn gen_scenes(count: u64, root: u64, cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    fs::create_dir_all(out).map_err(at(out))?;
    let labeled: Vec<(SceneGraph, Vec<RegionLabeling>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let id = format!("scene-{i:04}");
            let mut scene = generate_scene_with_id(&id, seed::derive(root, "scene", i), &cfg.scene).map_err(rt)?;
            let (mut a, mut b) = classifiers(root, &cfg.labeling);
            a.learn_scene(&scene);
            b.learn_scene(&scene);
            let labels = label_scene(&mut scene, &SignatureTable::default(), &a, &b);
            Ok((scene, labels))
        })
        .collect::<Result<_, CliError>>()?;
    let mut files = Vec::new();
    let mut all_labels = Vec::new();
    for (i, (scene, labels)) in labeled.into_iter().enumerate() {
        let p = out.join(scene_file_name(i as u64));
        scene.save(&p).map_err(rt)?;
        files.push(p);
        all_labels.extend(labels);
    }
    if count > 0 {
        let p = out.join(LABELS);
        write_lines(&p, &all_labels)?;
        files.push(p);
    }
    let scenes: Vec<SceneGraph> = load_scenes(out)?.into_iter().map(|(_, s)| s).collect();
    let q = label_quality(&scenes);
    Ok(Outcome {
        summary: format!(
            "{count} scenes, {} regions, label coverage {:.1}%\n",
            q.total_regions,
            q.coverage * 100.0
        ),
        files,
        rejection_only: false,
    })
}

pub fn rejection_log_path(episodes_file: &Path) -> PathBuf {
    episodes_file.with_extension("rejections.jsonl")
}

enum Generated {
    Episode(Box<EpisodeSpec>),
    Rejected(serde_json::Value),
}

fn gen_episodes(scenes_dir: &Path, per_scene: u64, root: u64, cfg: &Config, out: &Path) -> Result<Outcome, CliError> {
    let scenes = load_scenes(scenes_dir)?;
    let scorer = MockRecognizer {
        max_range: cfg.episode.trigate.max_range,
    };
    let jobs: Vec<(&SceneGraph, u64)> = scenes
        .iter()
        .flat_map(|(_, s)| (0..per_scene).map(move |k| (s, k)))
        .collect();
    let generated: Vec<Generated> = jobs
        .par_iter()
        .map(|(scene, k)| {
            let sid = scene.scene_id();
            let id = format!("{sid}-ep{k:02}");
            let s = seed::derive_keyed(root, &["episode", sid], *k);
            match generate_episode(scene, s, &id, &cfg.episode, &scorer) {
                Ok(ep) => {
                    verify_episode(&ep, scene, &cfg.episode, &scorer)
                        .map_err(|e| rt(format!("{id} failed re-verification: {e}")))?;
                    Ok(Generated::Episode(Box::new(ep)))
                }
                Err(EpisodeError::Rejected(r)) => Ok(Generated::Rejected(serde_json::to_value(&*r).map_err(rt)?)),
                Err(EpisodeError::Precondition { scene_id, reason }) => Ok(Generated::Rejected(serde_json::json!({
                    "episode_id": id,
                    "scene_id": scene_id,
                    "stop": null,
                    "reason": reason,
                }))),
                Err(e) => Err(rt(format!("{id}: {e}"))),
            }
        })
        .collect::<Result<_, CliError>>()?;
    let mut episodes = Vec::new();
    let mut rejections = Vec::new();
    for g in generated {
        match g {
            Generated::Episode(e) => episodes.push(*e),
            Generated::Rejected(r) => rejections.push(r),
        }
    }
    let mut text = String::new();
    for e in &episodes {
        text.push_str(&e.to_json_line());
        text.push('\n');
    }
    write(out, text)?;
    let log = rejection_log_path(out);
    write_lines(&log, &rejections)?;
    Ok(Outcome {
        summary: format!("{} episodes, {} rejections\n", episodes.len(), rejections.len()),
        files: vec![out.to_path_buf(), log],
        rejection_only: episodes.is_empty() && !rejections.is_empty(),
    })
}

type Pending = (Vec<(String, SceneGraph)>, Vec<RegionLabeling>, Vec<AdjudicationItem>);

fn pending_for(scenes_dir: &Path) -> Result<Pending, CliError> {
    let named = load_scenes(scenes_dir)?;
    let labelings = load_labelings(scenes_dir)?;
    let scenes: Vec<SceneGraph> = named.iter().map(|(_, s)| s.clone()).collect();
    let pending = pending_items(&scenes, &labelings);
    Ok((named, labelings, pending))
}

fn adjudicate_export(scenes_dir: &Path, out: &Path) -> Result<Outcome, CliError> {
    let (_, _, pending) = pending_for(scenes_dir)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(at(parent))?;
    }
    let n = export_adjudication(&pending, out).map_err(rt)?;
    Ok(Outcome {
        summary: format!("{n} regions need adjudication\n"),
        files: vec![out.to_path_buf()],
        rejection_only: false,
    })
}

fn adjudicate_import(scenes_dir: &Path, file: &Path, out: &Path) -> Result<Outcome, CliError> {
    let (named, labelings, pending) = pending_for(scenes_dir)?;
    let resolved = import_adjudication(file, &pending).map_err(rt)?;
    let (names, mut scenes): (Vec<String>, Vec<SceneGraph>) = named.into_iter().unzip();
    let changed = apply_resolutions(&mut scenes, &resolved);
    fs::create_dir_all(out).map_err(at(out))?;
    let mut files = Vec::new();
    for (name, scene) in names.iter().zip(&scenes) {
        let p = out.join(name);
        scene.save(&p).map_err(rt)?;
        files.push(p);
    }
    if !labelings.is_empty() {
        let p = out.join(LABELS);
        write_lines(&p, &labelings)?;
        files.push(p);
    }
    let q = label_quality(&scenes);
    Ok(Outcome {
        summary: format!(
            "{changed} labels applied, coverage {:.1}%, correctness {:.1}%\n",
            q.coverage * 100.0,
            q.correctness * 100.0
        ),
        files,
        rejection_only: false,
    })
}

/// Per-episode rollout config: the run's config with seeds derived from the
/// root seed and episode id, plus the planned blockage when requested.
pub fn episode_rollout_config(base: &RolloutConfig, root: u64, scene: &SceneGraph, ep: &EpisodeSpec, blockage: bool) -> RolloutConfig {
    let mut rc = base.clone();
    rc.seed = seed::derive_keyed(root, &["rollout", &ep.episode_id], 0);
    rc.transport.seed = seed::derive_keyed(root, &["transport", &ep.episode_id], 0);
    if blockage {
        if let Some(plan) = plan_blockage(scene, ep) {
            rc.blockages.push(plan.blockage);
        }
    }
    rc
}

#[derive(Debug, Serialize)]
struct Trajectory<'a> {
    episode_id: &'a str,
    fh: Vec<(i32, i32)>,
    sh: Vec<(i32, i32)>,
}

fn run_episodes(
    episodes_file: &Path,
    scenes_dir: &Path,
    blockage: bool,
    root: u64,
    base: &RolloutConfig,
    out: &Path,
) -> Result<Outcome, CliError> {
    let episodes: Vec<EpisodeSpec> = read_lines(episodes_file)?;
    let scenes: BTreeMap<String, SceneGraph> = load_scenes(scenes_dir)?
        .into_iter()
        .map(|(_, s)| (s.scene_id().to_string(), s))
        .collect();
    let traces_dir = out.join("traces");
    fs::create_dir_all(&traces_dir).map_err(at(&traces_dir))?;
    let rows: Vec<(EpisodeResult, PathBuf, String)> = episodes
        .par_iter()
        .map(|ep| {
            let scene = scenes
                .get(&ep.scene_id)
                .ok_or_else(|| rt(format!("{}: scene {} not found", ep.episode_id, ep.scene_id)))?;
            let rc = episode_rollout_config(base, root, scene, ep, blockage);
            let rollout = spe::run(scene, ep, &rc).map_err(|e| rt(format!("{}: {e}", ep.episode_id)))?;
            let path = traces_dir.join(format!("{}.jsonl", ep.episode_id));
            spe::emit_trace(&rollout.trace, &path).map_err(rt)?;
            let res = scene.resolution();
            let cells = |i: usize| -> Vec<(i32, i32)> {
                rollout
                    .trace
                    .iter()
                    .map(|r| {
                        let c = r.robots[i].pose.cell(res);
                        (c.x, c.y)
                    })
                    .collect()
            };
            let traj = serde_json::to_string(&Trajectory {
                episode_id: &ep.episode_id,
                fh: cells(0),
                sh: cells(1),
            })
            .map_err(rt)?;
            let scored = metrics::score_episode(&rollout.result, ep).map_err(rt)?;
            Ok((scored, path, traj))
        })
        .collect::<Result<_, CliError>>()?;
    let mut files = Vec::new();
    let mut results = Vec::new();
    let mut trajectories = String::new();
    for (r, p, t) in rows {
        results.push(r);
        files.push(p);
        trajectories.push_str(&t);
        trajectories.push('\n');
    }
    let rp = out.join(RESULTS);
    write_lines(&rp, &results)?;
    let tp = out.join("trajectories.jsonl");
    write(&tp, trajectories)?;
    files.push(rp);
    files.push(tp);
    let summary = match metrics::aggregate(&results) {
        Ok(m) => format!("{} episodes\n{}", results.len(), metrics_table(&m)),
        Err(_) => "0 episodes\n".to_string(),
    };
    Ok(Outcome {
        summary,
        files,
        rejection_only: false,
    })
}

pub fn metrics_table(m: &MetricsReport) -> String {
    format!(
        "{:>8}{:>8}{:>8}{:>8}{:>8}\n{:>8.4}{:>8.4}{:>8.4}{:>8.4}{:>8.3}\n",
        "SR", "BSR", "ISR", "SPL", "NE", m.sr, m.bsr, m.isr, m.spl, m.ne
    )
}

pub fn comparison_table(c: &Comparison) -> String {
    let mut s = format!("{:<6}{:>10}{:>10}{:>10}{:>12}\n", "", "A", "B", "delta", "relative");
    for (name, d) in c.rows() {
        let rel = d.rel.map_or("undefined".to_string(), |r| format!("{:+.1}%", r * 100.0));
        s.push_str(&format!("{name:<6}{:>10.4}{:>10.4}{:>+10.4}{rel:>12}\n", d.a, d.b, d.abs));
    }
    s
}

fn report_of(dir: &Path) -> Result<MetricsReport, CliError> {
    let results: Vec<EpisodeResult> = read_lines(&dir.join(RESULTS))?;
    metrics::aggregate(&results).map_err(|e| rt(format!("{}: {e}", dir.display())))
}

fn eval(results_dir: &Path, out: &Path) -> Result<Outcome, CliError> {
    let report = report_of(results_dir)?;
    let jp = out.join(METRICS);
    write_json_pretty(&jp, &report)?;
    let table = metrics_table(&report);
    let tp = out.join("metrics.txt");
    write(&tp, &table)?;
    Ok(Outcome {
        summary: table,
        files: vec![jp, tp],
        rejection_only: false,
    })
}

fn compare(a: &Path, b: &Path, out: &Path) -> Result<Outcome, CliError> {
    let c = metrics::compare(&report_of(a)?, &report_of(b)?);
    let jp = out.join("comparison.json");
    write_json_pretty(&jp, &c)?;
    let table = comparison_table(&c);
    let tp = out.join("comparison.txt");
    write(&tp, &table)?;
    Ok(Outcome {
        summary: table,
        files: vec![jp, tp],
        rejection_only: false,
    })
}

fn cmd_stats(episodes: Option<&Path>, scenes: Option<&Path>, json: bool) -> Result<Outcome, CliError> {
    if episodes.is_none() && scenes.is_none() {
        return Err(CliError::Usage("stats needs --episodes, --scenes or both".into()));
    }
    let mut record = serde_json::Map::new();
    let mut text = String::new();
    if let Some(p) = episodes {
        let eps: Vec<EpisodeSpec> = read_lines(p)?;
        let stats = dataset_stats(&eps).map_err(|e| rt(format!("{}: {e}", p.display())))?;
        text.push_str(&stats.to_table());
        record.insert("dataset".into(), serde_json::to_value(&stats).map_err(rt)?);
    }
    if let Some(d) = scenes {
        let scenes: Vec<SceneGraph> = load_scenes(d)?.into_iter().map(|(_, s)| s).collect();
        let q = label_quality(&scenes);
        text.push_str(&format!("{:<22}{:>9}\n", "Regions", q.total_regions));
        text.push_str(&format!("{:<22}{:>8.1}%\n", "Coverage", q.coverage * 100.0));
        text.push_str(&format!("{:<22}{:>8.1}%\n", "Correctness", q.correctness * 100.0));
        record.insert("labels".into(), serde_json::to_value(q).map_err(rt)?);
    }
    let summary = if json {
        let mut s = serde_json::to_string_pretty(&record).map_err(rt)?;
        s.push('\n');
        s
    } else {
        text
    };
    Ok(Outcome {
        summary,
        ..Outcome::default()
    })
}
