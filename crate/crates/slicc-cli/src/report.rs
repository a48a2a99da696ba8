//! Run-directory loading and cross-run aggregation. Every collection in
//! the report is sorted, so the JSON bytes do not depend on the order the
//! directories were passed in.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use slicc_core::reward::RewardPrototype;
use slicc_core::trainer::{Algorithm, EpisodeStats, TrainConfig};

use crate::config::RunSnapshot;
use crate::svg::{self, Series};
use crate::Failure;

pub const METRICS_HEADER: &str = "episode,r_P,r_I,r_combined,success,length,epsilon";
/// Plot smoothing; reported numbers use the report window instead.
pub const PLOT_SMOOTH_WINDOW: usize = 50;

pub struct LoadedRun {
    pub snapshot: RunSnapshot,
    pub stats: Vec<EpisodeStats>,
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpisodeStats>> {
    let mut lines = text.lines();
    let header = lines.next().context("metrics file is empty")?;
    if header != METRICS_HEADER {
        bail!("unexpected metrics header {header:?}");
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            bail!("metrics row {} has {} fields, wanted 7", n + 2, fields.len());
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .with_context(|| format!("metrics row {}: bad {what} {s:?}", n + 2))
        };
        let success = match fields[4] {
            "0" => false,
            "1" => true,
            other => bail!("metrics row {}: bad success flag {other:?}", n + 2),
        };
        out.push(EpisodeStats {
            episode: fields[0]
                .parse()
                .with_context(|| format!("metrics row {}: bad episode", n + 2))?,
            r_p: parse_f(fields[1], "r_P")?,
            r_i: parse_f(fields[2], "r_I")?,
            r_combined: parse_f(fields[3], "r_combined")?,
            success,
            length: fields[5]
                .parse()
                .with_context(|| format!("metrics row {}: bad length", n + 2))?,
            epsilon: parse_f(fields[6], "epsilon")?,
        });
    }
    if out.is_empty() {
        bail!("metrics file holds no episodes");
    }
    Ok(out)
}

pub fn read_run_dir(dir: &Path) -> Result<LoadedRun> {
    let config_path = dir.join("config.json");
    let text = std::fs::read_to_string(&config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let snapshot: RunSnapshot = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    let metrics_path = dir.join("metrics.csv");
    let text = std::fs::read_to_string(&metrics_path)
        .with_context(|| format!("reading {}", metrics_path.display()))?;
    let stats =
        parse_metrics_csv(&text).with_context(|| format!("parsing {}", metrics_path.display()))?;
    Ok(LoadedRun { snapshot, stats })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub trailing_combined: f64,
    pub trailing_success: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VariantReport {
    pub name: String,
    pub algorithm: Algorithm,
    pub prototype: RewardPrototype,
    pub episodes: usize,
    pub runs: Vec<RunSummary>,
    pub mean_trailing_combined: f64,
    /// Sample standard deviation across seeds; zero for a single run.
    pub stddev_trailing_combined: f64,
    pub mean_trailing_success: f64,
}

/// Head-to-head tally over the seeds two variants share, on trailing
/// combined reward.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PairTally {
    pub a: String,
    pub b: String,
    pub seeds: Vec<u64>,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComparisonReport {
    pub window: usize,
    pub variants: Vec<VariantReport>,
    pub pairwise: Vec<PairTally>,
}

fn trailing_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len() - window..];
    tail.iter().sum::<f64>() / window as f64
}

fn sample_stddev(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// A variant's runs must be the same experiment cell: identical configs
/// except for the seed.
fn config_key(cfg: &TrainConfig) -> TrainConfig {
    let mut k = cfg.clone();
    k.seed = 0;
    k
}

pub fn build_report(runs: &[LoadedRun], window: usize) -> Result<ComparisonReport> {
    if runs.is_empty() {
        bail!("no runs to report on");
    }
    if window == 0 {
        bail!("window must be positive");
    }
    let mut groups: BTreeMap<&str, Vec<&LoadedRun>> = BTreeMap::new();
    for run in runs {
        groups.entry(&run.snapshot.variant).or_default().push(run);
    }
    let mut variants = Vec::new();
    for (name, mut group) in groups {
        group.sort_by_key(|r| r.snapshot.config.seed);
        let key = config_key(&group[0].snapshot.config);
        for r in &group {
            if config_key(&r.snapshot.config) != key {
                bail!("variant {name:?} mixes different configs; refusing to aggregate");
            }
            if r.stats.len() != r.snapshot.config.episodes {
                bail!(
                    "variant {name:?} seed {}: {} episodes in metrics, config says {}",
                    r.snapshot.config.seed,
                    r.stats.len(),
                    r.snapshot.config.episodes
                );
            }
            if window > r.stats.len() {
                bail!(
                    "window {window} exceeds the {} episodes of variant {name:?}",
                    r.stats.len()
                );
            }
        }
        for pair in group.windows(2) {
            if pair[0].snapshot.config.seed == pair[1].snapshot.config.seed {
                bail!(
                    "variant {name:?} was given seed {} twice",
                    pair[0].snapshot.config.seed
                );
            }
        }
        let summaries: Vec<RunSummary> = group
            .iter()
            .map(|r| {
                let combined: Vec<f64> = r.stats.iter().map(|s| s.r_combined).collect();
                let success: Vec<f64> =
                    r.stats.iter().map(|s| f64::from(u8::from(s.success))).collect();
                RunSummary {
                    seed: r.snapshot.config.seed,
                    trailing_combined: trailing_mean(&combined, window),
                    trailing_success: trailing_mean(&success, window),
                    episodes: r.stats.len(),
                }
            })
            .collect();
        let vals: Vec<f64> = summaries.iter().map(|s| s.trailing_combined).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let succ: Vec<f64> = summaries.iter().map(|s| s.trailing_success).collect();
        variants.push(VariantReport {
            name: name.to_owned(),
            algorithm: group[0].snapshot.config.algorithm,
            prototype: group[0].snapshot.config.prototype,
            episodes: group[0].snapshot.config.episodes,
            mean_trailing_combined: mean,
            stddev_trailing_combined: sample_stddev(&vals, mean),
            mean_trailing_success: succ.iter().sum::<f64>() / succ.len() as f64,
            runs: summaries,
        });
    }
    let mut pairwise = Vec::new();
    for i in 0..variants.len() {
        for j in i + 1..variants.len() {
            let (a, b) = (&variants[i], &variants[j]);
            let mut tally = PairTally {
                a: a.name.clone(),
                b: b.name.clone(),
                seeds: Vec::new(),
                wins_a: 0,
                wins_b: 0,
                ties: 0,
            };
            for ra in &a.runs {
                if let Some(rb) = b.runs.iter().find(|r| r.seed == ra.seed) {
                    tally.seeds.push(ra.seed);
                    if ra.trailing_combined > rb.trailing_combined {
                        tally.wins_a += 1;
                    } else if ra.trailing_combined < rb.trailing_combined {
                        tally.wins_b += 1;
                    } else {
                        tally.ties += 1;
                    }
                }
            }
            if !tally.seeds.is_empty() {
                pairwise.push(tally);
            }
        }
    }
    Ok(ComparisonReport {
        window,
        variants,
        pairwise,
    })
}

pub fn report_json(report: &ComparisonReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Per-variant curves: mean across seeds episode by episode, then a
/// trailing-window smooth for presentation.
fn variant_curve(runs: &[&LoadedRun], pick: impl Fn(&EpisodeStats) -> f64) -> Vec<f64> {
    let episodes = runs.iter().map(|r| r.stats.len()).min().unwrap_or(0);
    let mut curve = Vec::with_capacity(episodes);
    for t in 0..episodes {
        let sum: f64 = runs.iter().map(|r| pick(&r.stats[t])).sum();
        curve.push(sum / runs.len() as f64);
    }
    svg::smooth(&curve, PLOT_SMOOTH_WINDOW)
}

pub fn render_plots(runs: &[LoadedRun]) -> (String, String) {
    let mut groups: BTreeMap<&str, Vec<&LoadedRun>> = BTreeMap::new();
    for run in runs {
        groups.entry(&run.snapshot.variant).or_default().push(run);
    }
    let mut reward_series = Vec::new();
    let mut success_series = Vec::new();
    for (name, mut group) in groups {
        group.sort_by_key(|r| r.snapshot.config.seed);
        let to_points = |curve: Vec<f64>| -> Vec<(f64, f64)> {
            curve
                .into_iter()
                .enumerate()
                .map(|(t, v)| (t as f64, v))
                .collect()
        };
        reward_series.push(Series {
            label: name.to_owned(),
            points: to_points(variant_curve(&group, |s| s.r_combined)),
        });
        success_series.push(Series {
            label: name.to_owned(),
            points: to_points(variant_curve(&group, |s| f64::from(u8::from(s.success)))),
        });
    }
    let reward = svg::line_chart(
        "Combined reward per episode",
        "episode",
        "reward (trailing mean)",
        &reward_series,
    );
    let success = svg::line_chart(
        "Success ratio",
        "episode",
        "success (trailing mean)",
        &success_series,
    );
    (reward, success)
}

#[derive(clap::Args, Debug)]
pub struct ReportArgs {
    /// Run directories produced by `slicc train`.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    /// Trailing-episode window for the reported means.
    #[arg(long, default_value_t = 500)]
    pub window: usize,
    /// Also write report.json, reward.svg, and success.svg here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_report(args: &ReportArgs) -> Result<(), Failure> {
    let mut runs = Vec::new();
    for dir in &args.dirs {
        runs.push(read_run_dir(dir).map_err(Failure::Config)?);
    }
    let report = build_report(&runs, args.window).map_err(Failure::Config)?;
    let json = report_json(&report);
    print!("{json}");
    if let Some(out) = &args.out {
        let write_all = || -> Result<()> {
            std::fs::create_dir_all(out)
                .with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(out.join("report.json"), &json).context("writing report.json")?;
            let (reward, success) = render_plots(&runs);
            std::fs::write(out.join("reward.svg"), reward).context("writing reward.svg")?;
            std::fs::write(out.join("success.svg"), success).context("writing success.svg")?;
            Ok(())
        };
        write_all().map_err(Failure::Runtime)?;
    }
    Ok(())
}
