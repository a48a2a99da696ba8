//! Command line for training, inspecting, and comparing runs.
//!
//! Exit codes: 0 success, 1 usage, 2 bad configuration or inputs,
//! 3 failure while running.

mod config;
mod report;
mod run;
mod svg;

use std::io::Read as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use slicc_core::env::{self, WorldState};
use slicc_core::stackelberg::{ActionPair, PayoffBimatrix};
use slicc_core::trainer::{self, TrainConfig, TrainedNets};
use slicc_core::{ChaCha8Rng, SeedableRng};

use crate::config::RunSnapshot;
use crate::report::ReportArgs;
use crate::run::TrainArgs;

/// Classified command failure; clap usage errors exit 1 before this exists.
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

#[derive(Parser)]
#[command(
    name = "slicc",
    version,
    about = "Stackelberg-learning harness for two-robot cooperative transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run, or every variant of an experiment file.
    Train(TrainArgs),
    /// Solve one bimatrix game, JSON on stdin to JSON on stdout.
    SolveGame,
    /// Summarize finished run directories into one comparison report.
    Report(ReportArgs),
    /// Roll one episode and write a JSON line per step.
    DumpTrajectory(DumpArgs),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GameInput {
    leader: Vec<Vec<f64>>,
    follower: Vec<f64>,
}

#[derive(Serialize)]
struct GameOutput {
    leader_action: usize,
    follower_action: usize,
    expected: [usize; 2],
}

fn cmd_solve_game() -> Result<(), Failure> {
    let mut text = String::new();
    std::io::stdin()
        .read_to_string(&mut text)
        .context("reading the game from stdin")
        .map_err(Failure::Runtime)?;
    let input: GameInput = serde_json::from_str(&text)
        .context("parsing the game")
        .map_err(Failure::Config)?;
    let game = PayoffBimatrix::from_rows(input.leader, input.follower)
        .context("building the game")
        .map_err(Failure::Config)?;
    let expected = game.expected_action_pair();
    let pair = game.stackelberg_step();
    let out = GameOutput {
        leader_action: pair.leader_action,
        follower_action: pair.follower_action,
        expected: [expected.leader_action, expected.follower_action],
    };
    println!("{}", serde_json::to_string(&out).expect("fixed shape"));
    Ok(())
}

#[derive(clap::Args, Debug)]
struct DumpArgs {
    /// Run directory with config.json and checkpoint.json; its greedy
    /// policy drives the episode. Without it both robots hold action 0.
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Steps to roll, at most the episode horizon (the default).
    #[arg(long)]
    steps: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct TrajectoryRow {
    step: usize,
    #[serde(rename = "xP")]
    x_p: f64,
    #[serde(rename = "yP")]
    y_p: f64,
    #[serde(rename = "thetaP")]
    theta_p: f64,
    #[serde(rename = "vP")]
    v_p: f64,
    #[serde(rename = "xI")]
    x_i: f64,
    #[serde(rename = "yI")]
    y_i: f64,
    #[serde(rename = "thetaI")]
    theta_i: f64,
    #[serde(rename = "vI")]
    v_i: f64,
}

impl TrajectoryRow {
    fn from_world(step: usize, w: &WorldState) -> Self {
        TrajectoryRow {
            step,
            x_p: w.prosocial.x,
            y_p: w.prosocial.y,
            theta_p: w.prosocial.theta,
            v_p: w.prosocial.v,
            x_i: w.introspective.x,
            y_i: w.introspective.y,
            theta_i: w.introspective.theta,
            v_i: w.introspective.v,
        }
    }
}

fn load_run(dir: &Path) -> Result<(TrainConfig, TrainedNets)> {
    let path = dir.join("config.json");
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let snapshot: RunSnapshot =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let path = dir.join("checkpoint.json");
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let nets: TrainedNets =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match &nets {
        TrainedNets::Slicc {
            prosocial,
            introspective,
        } => {
            prosocial.validate().context("checkpoint leader net")?;
            introspective.validate().context("checkpoint follower net")?;
        }
        TrainedNets::Centralized { joint } => {
            joint.validate().context("checkpoint joint net")?;
        }
    }
    Ok((snapshot.config, nets))
}

fn cmd_dump_trajectory(args: &DumpArgs) -> Result<(), Failure> {
    let (cfg, nets) = match &args.run {
        Some(dir) => {
            let (cfg, nets) = load_run(dir).map_err(Failure::Config)?;
            (cfg, Some(nets))
        }
        None => (TrainConfig::default(), None),
    };
    let horizon = cfg.env.horizon;
    let steps = args.steps.unwrap_or(horizon);
    if steps > horizon {
        return Err(Failure::Config(anyhow!(
            "--steps {steps} exceeds the episode horizon {horizon}"
        )));
    }
    let scale = cfg.obs_scale.resolve(&cfg.env);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut w = env::reset(&cfg.env, &mut rng);
    let mut lines = String::new();
    let mut emit = |step: usize, w: &WorldState| {
        let row = TrajectoryRow::from_world(step, w);
        lines.push_str(&serde_json::to_string(&row).expect("fixed shape"));
        lines.push('\n');
    };
    emit(0, &w);
    for _ in 0..steps {
        let pair = match &nets {
            Some(nets) => {
                let o_p = trainer::scale8(env::observe_prosocial(&w), &scale);
                let o_i = trainer::scale4(env::observe_introspective(&w), &scale);
                trainer::greedy_pair(nets, &o_p, &o_i)
                    .context("evaluating the checkpoint policy")
                    .map_err(Failure::Runtime)?
            }
            None => ActionPair {
                leader_action: 0,
                follower_action: 0,
            },
        };
        let a_p = env::decode_action(pair.leader_action, &cfg.env)
            .context("decoding the leader action")
            .map_err(Failure::Runtime)?;
        let a_i = env::decode_action(pair.follower_action, &cfg.env)
            .context("decoding the follower action")
            .map_err(Failure::Runtime)?;
        w = env::world_step(&w, a_p, a_i, &mut rng, &cfg.env)
            .context("stepping the world")
            .map_err(Failure::Runtime)?;
        emit(w.step_index, &w);
    }
    drop(emit);
    match &args.out {
        Some(path) => std::fs::write(path, lines)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Runtime)?,
        None => print!("{lines}"),
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match &cli.command {
        Command::Train(args) => run::cmd_train(args),
        Command::SolveGame => cmd_solve_game(),
        Command::Report(args) => report::cmd_report(args),
        Command::DumpTrajectory(args) => cmd_dump_trajectory(args),
    };
    match outcome {
        Ok(()) => {}
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            std::process::exit(2);
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(3);
        }
    }
}
