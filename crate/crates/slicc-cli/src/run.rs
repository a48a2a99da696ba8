//! The `train` subcommand: turn an experiment file (or built-in defaults)
//! into run directories full of reproducible artifacts.
//!
//! Every file a run writes is listed in its manifest with a sha256, so two
//! invocations can be compared without diffing the payloads themselves.
//! Timestamps are the one impurity; `--fixed-timestamp` pins them to zero.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use slicc_core::reward::RewardPrototype;
use slicc_core::trainer::{self, Algorithm, EpisodeStats, EvalPoint, TrainConfig, TrainEvent};

use crate::config::{load_spec, ExperimentSpec, RunSnapshot, VariantSpec};
use crate::report::{self, METRICS_HEADER};
use crate::Failure;

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum AlgorithmArg {
    Slicc,
    Centralized,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Slicc => Algorithm::Slicc,
            AlgorithmArg::Centralized => Algorithm::Centralized,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum PrototypeArg {
    Alpha,
    Beta,
    #[value(name = "centralized_g", alias = "centralized-g")]
    CentralizedG,
}

impl From<PrototypeArg> for RewardPrototype {
    fn from(p: PrototypeArg) -> Self {
        match p {
            PrototypeArg::Alpha => RewardPrototype::Alpha,
            PrototypeArg::Beta => RewardPrototype::Beta,
            PrototypeArg::CentralizedG => RewardPrototype::CentralizedG,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    /// Experiment file, TOML or JSON. Without it a single run on built-in
    /// defaults is trained.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Train this seed only, replacing whatever the experiment lists.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output root; runs land in <out>/<experiment>/<variant>-s<seed>/.
    /// Falls back to the experiment's out_dir, then $SLICC_OUT, then "runs".
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep only variants using this algorithm (ad hoc: select it).
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    /// Keep only variants using this reward prototype (ad hoc: select it).
    #[arg(long, value_enum)]
    pub prototype: Option<PrototypeArg>,
    /// Override the episode count of every selected run.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Write manifests with created_unix = 0 so repeat runs byte-match.
    #[arg(long)]
    pub fixed_timestamp: bool,
}

struct RunPlan {
    variant: String,
    config: TrainConfig,
}

struct Plan {
    experiment: String,
    out_root: PathBuf,
    plots: bool,
    runs: Vec<RunPlan>,
}

fn out_root(args: &TrainArgs, spec_dir: Option<&Path>) -> PathBuf {
    if let Some(out) = &args.out {
        return out.clone();
    }
    if let Some(dir) = spec_dir {
        return dir.to_owned();
    }
    if let Some(env) = std::env::var_os("SLICC_OUT") {
        return PathBuf::from(env);
    }
    PathBuf::from("runs")
}

fn adhoc_plan(args: &TrainArgs) -> Result<Plan> {
    let mut cfg = TrainConfig::default();
    if let Some(a) = args.algorithm {
        cfg.algorithm = a.into();
    }
    // The default prototype follows the algorithm unless pinned explicitly.
    cfg.prototype = match (args.prototype, cfg.algorithm) {
        (Some(p), _) => p.into(),
        (None, Algorithm::Slicc) => RewardPrototype::Alpha,
        (None, Algorithm::Centralized) => RewardPrototype::CentralizedG,
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.episodes {
        cfg.episodes = e;
    }
    cfg.validate().context("ad hoc run configuration")?;
    let variant = match cfg.algorithm {
        Algorithm::Slicc => "slicc",
        Algorithm::Centralized => "centralized",
    };
    Ok(Plan {
        experiment: "adhoc".to_owned(),
        out_root: out_root(args, None),
        plots: true,
        runs: vec![RunPlan {
            variant: variant.to_owned(),
            config: cfg,
        }],
    })
}

fn variant_matches(spec: &ExperimentSpec, v: &VariantSpec, args: &TrainArgs) -> bool {
    let algorithm = v.algorithm.unwrap_or(spec.base.algorithm);
    let prototype = v.prototype.unwrap_or(spec.base.prototype);
    args.algorithm.is_none_or(|a| algorithm == a.into())
        && args.prototype.is_none_or(|p| prototype == p.into())
}

fn spec_plan(args: &TrainArgs, path: &Path) -> Result<Plan> {
    let mut spec = load_spec(path)?;
    if let Some(e) = args.episodes {
        spec.base.episodes = e;
        spec.validate()
            .context("experiment is invalid with the overridden episode count")?;
    }
    let mut runs = Vec::new();
    for v in &spec.variants {
        if !variant_matches(&spec, v, args) {
            continue;
        }
        let seeds: Vec<u64> = match args.seed {
            Some(s) => vec![s],
            None => v.seeds.clone(),
        };
        for seed in seeds {
            runs.push(RunPlan {
                variant: v.name.clone(),
                config: spec.resolved(v, seed),
            });
        }
    }
    if runs.is_empty() {
        bail!(
            "no variant in {} matches the --algorithm/--prototype filters",
            path.display()
        );
    }
    Ok(Plan {
        experiment: spec.name.clone(),
        out_root: out_root(args, spec.out_dir.as_deref()),
        plots: spec.plots,
        runs,
    })
}

fn metrics_csv(stats: &[EpisodeStats]) -> String {
    let mut out = String::with_capacity(stats.len() * 40 + 64);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.episode,
            s.r_p,
            s.r_i,
            s.r_combined,
            u8::from(s.success),
            s.length,
            s.epsilon
        ));
    }
    out
}

pub const EVAL_HEADER: &str = "after_episode,avg_combined,success_ratio,avg_return_p,avg_return_i";

fn eval_csv(points: &[EvalPoint]) -> String {
    let mut out = String::new();
    out.push_str(EVAL_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.after_episode,
            p.summary.avg_combined,
            p.summary.success_ratio,
            p.summary.avg_return_p,
            p.summary.avg_return_i
        ));
    }
    out
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    experiment: String,
    variant: String,
    seed: u64,
    created_unix: u64,
    tool: String,
    files: Vec<ManifestFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn write_run_dir(
    dir: &Path,
    experiment: &str,
    variant: &str,
    snapshot: &RunSnapshot,
    stats: &[EpisodeStats],
    evals: &[EvalPoint],
    nets: &slicc_core::trainer::TrainedNets,
    fixed_timestamp: bool,
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut config_json = serde_json::to_string_pretty(snapshot).context("encoding config")?;
    config_json.push('\n');
    files.push(("config.json", config_json.into_bytes()));
    files.push(("metrics.csv", metrics_csv(stats).into_bytes()));
    if !evals.is_empty() {
        files.push(("eval.csv", eval_csv(evals).into_bytes()));
    }
    let mut checkpoint = serde_json::to_string(nets).context("encoding checkpoint")?;
    checkpoint.push('\n');
    files.push(("checkpoint.json", checkpoint.into_bytes()));

    let mut entries = Vec::new();
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes)
            .with_context(|| format!("writing {}", dir.join(name).display()))?;
        entries.push(ManifestFile {
            path: (*name).to_owned(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let created_unix = if fixed_timestamp {
        0
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    };
    let manifest = Manifest {
        experiment: experiment.to_owned(),
        variant: variant.to_owned(),
        seed: snapshot.config.seed,
        created_unix,
        tool: format!("slicc {}", env!("CARGO_PKG_VERSION")),
        files: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).context("encoding manifest")?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)
        .with_context(|| format!("writing {}", dir.join("manifest.json").display()))?;
    Ok(())
}

fn execute(plan: &Plan, fixed_timestamp: bool) -> Result<()> {
    let experiment_dir = plan.out_root.join(&plan.experiment);
    let mut loaded = Vec::new();
    for run in &plan.runs {
        let cfg = &run.config;
        let label = format!("{}/{}-s{}", plan.experiment, run.variant, cfg.seed);
        eprintln!("[{label}] training {} episodes", cfg.episodes);
        let heartbeat = (cfg.episodes / 4).max(1);
        let mut stats = Vec::with_capacity(cfg.episodes);
        let mut evals = Vec::new();
        let outcome = trainer::train(cfg, |event| match event {
            TrainEvent::Episode(s) => {
                if (s.episode + 1) % heartbeat == 0 {
                    eprintln!(
                        "[{label}] episode {}/{} r={:.3} eps={:.3}",
                        s.episode + 1,
                        cfg.episodes,
                        s.r_combined,
                        s.epsilon
                    );
                }
                stats.push(s);
            }
            TrainEvent::Eval(p) => {
                eprintln!(
                    "[{label}] eval after {}: reward {:.3}, success {:.2}",
                    p.after_episode,
                    p.summary.avg_combined,
                    p.summary.success_ratio
                );
                evals.push(p);
            }
        })
        .with_context(|| format!("training {label}"))?;
        let snapshot = RunSnapshot {
            experiment: plan.experiment.clone(),
            variant: run.variant.clone(),
            config: cfg.clone(),
        };
        let dir = experiment_dir.join(format!("{}-s{}", run.variant, cfg.seed));
        write_run_dir(
            &dir,
            &plan.experiment,
            &run.variant,
            &snapshot,
            &stats,
            &evals,
            &outcome.nets,
            fixed_timestamp,
        )?;
        eprintln!("[{label}] wrote {}", dir.display());
        loaded.push(report::LoadedRun { snapshot, stats });
    }
    let window = plan
        .runs
        .iter()
        .map(|r| r.config.episodes)
        .min()
        .unwrap_or(1)
        .min(500);
    let summary = report::build_report(&loaded, window)?;
    std::fs::write(
        experiment_dir.join("report.json"),
        report::report_json(&summary),
    )
    .context("writing report.json")?;
    if plan.plots {
        let (reward, success) = report::render_plots(&loaded);
        std::fs::write(experiment_dir.join("reward.svg"), reward)
            .context("writing reward.svg")?;
        std::fs::write(experiment_dir.join("success.svg"), success)
            .context("writing success.svg")?;
    }
    eprintln!(
        "[{}] report under {}",
        plan.experiment,
        experiment_dir.display()
    );
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let plan = match &args.config {
        Some(path) => spec_plan(args, path),
        None => adhoc_plan(args),
    }
    .map_err(Failure::Config)?;
    execute(&plan, args.fixed_timestamp).map_err(Failure::Runtime)
}
