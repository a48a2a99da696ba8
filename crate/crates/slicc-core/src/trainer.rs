//! Training loops: the SLiCC leader/follower learner and the centralized
//! joint-action baseline, plus greedy evaluation.
//!
//! Everything here is deterministic given `TrainConfig::seed`. One ChaCha8
//! stream drives a whole run, and the per-step draw order is part of the
//! trained format: action selection first (leader explore check, leader
//! index if exploring, follower check, follower index; a single check when
//! joint exploration is on; one check plus one index for the centralized
//! learner), then the eight dynamics noise draws, then the mini-batch index
//! draws once the buffer is warm. `reset` consumes four draws at episode
//! start. Changing any of this invalidates recorded runs.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{
    self, decode_action, is_failure, observe_introspective, observe_prosocial, world_step,
    EnvConfig, WorldState, N_ACTIONS,
};
use crate::error::SliccError;
use crate::fmath;
use crate::mlp::{joint_index, joint_pair, MlpParams, Optimizer, TrainSample};
use crate::replay::{JointTransition, ReplayBuffer};
use crate::reward::{alpha_pair, compose, ComposedReward, RewardParams, RewardPrototype};
use crate::stackelberg::{ActionPair, PayoffBimatrix};

/// Which learner runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Algorithm {
    Slicc,
    Centralized,
}

/// Epsilon decay shape. Both reach `epsilon_end` halfway through the run
/// and hold it there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EpsilonDecay {
    Exponential,
    Linear,
}

/// How raw observations are divided before they reach a network.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ObsScaling {
    /// Feed raw state components.
    Raw,
    /// Positions by 1, headings by pi, speeds by v_max.
    Standard,
    /// Explicit per-component divisors for (x, y, theta, v).
    Custom([f64; 4]),
}

impl ObsScaling {
    /// Concrete per-component divisors for (x, y, theta, v).
    pub fn resolve(&self, env: &EnvConfig) -> [f64; 4] {
        match self {
            ObsScaling::Raw => [1.0, 1.0, 1.0, 1.0],
            ObsScaling::Standard => [1.0, 1.0, core::f64::consts::PI, env.v_max],
            ObsScaling::Custom(s) => *s,
        }
    }
}

/// Optimizer choice as configuration; the stateful `Optimizer` is built
/// per network once shapes are known.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OptimizerKind {
    Sgd { lr: f64 },
    Adam { lr: f64 },
}

impl OptimizerKind {
    fn build(&self, shape_like: &MlpParams) -> Result<Optimizer, SliccError> {
        match *self {
            OptimizerKind::Sgd { lr } => Optimizer::sgd(lr),
            OptimizerKind::Adam { lr } => Optimizer::adam(lr, shape_like),
        }
    }

    fn lr(&self) -> f64 {
        match *self {
            OptimizerKind::Sgd { lr } | OptimizerKind::Adam { lr } => lr,
        }
    }
}

/// Full description of a training run. The episode horizon lives in `env`;
/// duplicating it here would let the two drift apart.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub prototype: RewardPrototype,
    pub episodes: usize,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: EpsilonDecay,
    pub optimizer: OptimizerKind,
    pub hidden_dim: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub env: EnvConfig,
    pub reward: RewardParams,
    pub obs_scale: ObsScaling,
    /// When set, both agents explore together on one check instead of
    /// independently.
    pub joint_exploration: bool,
    /// Run a greedy evaluation every this many episodes.
    pub eval_every: Option<usize>,
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        let reward = RewardParams::default().with_env(&env);
        Self {
            algorithm: Algorithm::Slicc,
            prototype: RewardPrototype::Alpha,
            episodes: 3000,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: EpsilonDecay::Exponential,
            optimizer: OptimizerKind::Adam { lr: 1e-3 },
            hidden_dim: 128,
            replay_capacity: 50_000,
            batch_size: 64,
            seed: 0,
            env,
            reward,
            obs_scale: ObsScaling::Standard,
            joint_exploration: false,
            eval_every: None,
            eval_episodes: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SliccError> {
        self.env.validate()?;
        self.reward.validate()?;
        if self.episodes == 0 {
            return Err(SliccError::BadConfig("episodes must be positive"));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(SliccError::BadConfig("gamma must lie in [0, 1)"));
        }
        let eps_ok = |e: f64| (0.0..=1.0).contains(&e);
        if !(eps_ok(self.epsilon_start) && eps_ok(self.epsilon_end)) {
            return Err(SliccError::BadConfig("epsilon must lie in [0, 1]"));
        }
        if self.epsilon_end > self.epsilon_start {
            return Err(SliccError::BadConfig("epsilon must not grow"));
        }
        if !(self.optimizer.lr() > 0.0 && self.optimizer.lr().is_finite()) {
            return Err(SliccError::BadConfig("learning rate must be positive"));
        }
        if self.hidden_dim == 0 {
            return Err(SliccError::BadConfig("hidden_dim must be positive"));
        }
        if self.batch_size == 0 {
            return Err(SliccError::BadConfig("batch_size must be positive"));
        }
        if self.replay_capacity < self.batch_size {
            return Err(SliccError::BadConfig("replay_capacity must hold a batch"));
        }
        if let ObsScaling::Custom(s) = self.obs_scale {
            if !s.iter().all(|x| *x > 0.0 && x.is_finite()) {
                return Err(SliccError::BadConfig("obs divisors must be positive"));
            }
        }
        if let Some(k) = self.eval_every {
            if k == 0 {
                return Err(SliccError::BadConfig("eval_every must be positive"));
            }
            if self.eval_episodes == 0 {
                return Err(SliccError::BadConfig("eval_episodes must be positive"));
            }
        }
        Ok(())
    }

    /// Exploration rate for a given episode index. Decays from
    /// `epsilon_start` to `epsilon_end` over the first half of the run,
    /// then stays flat.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let (s, e) = (self.epsilon_start, self.epsilon_end);
        if s <= e {
            return e;
        }
        let half = (self.episodes / 2).max(1) as f64;
        let frac = episode as f64 / half;
        if frac >= 1.0 {
            return e;
        }
        let v = match self.epsilon_decay {
            EpsilonDecay::Exponential => s * fmath::powf(e / s, frac),
            EpsilonDecay::Linear => s + (e - s) * frac,
        };
        if v < e {
            e
        } else {
            v
        }
    }
}

/// Per-episode training record.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeStats {
    pub episode: usize,
    pub r_p: f64,
    pub r_i: f64,
    pub r_combined: f64,
    pub success: bool,
    pub length: usize,
    pub epsilon: f64,
}

/// Greedy evaluation summary, averaged over the evaluated episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalSummary {
    pub avg_combined: f64,
    pub success_ratio: f64,
    pub avg_return_p: f64,
    pub avg_return_i: f64,
}

/// An `EvalSummary` tagged with when it was taken.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalPoint {
    pub after_episode: usize,
    pub summary: EvalSummary,
}

/// Stream of things a run reports as it goes.
#[derive(Debug, Clone, Copy)]
pub enum TrainEvent {
    Episode(EpisodeStats),
    Eval(EvalPoint),
}

/// Final network weights of a run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrainedNets {
    Slicc {
        prosocial: MlpParams,
        introspective: MlpParams,
    },
    Centralized { joint: MlpParams },
}

/// What `train` hands back: weights, the full stats series (also streamed
/// through the event callback), and how full the buffer ended up.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub nets: TrainedNets,
    pub stats: Vec<EpisodeStats>,
    pub replay_len: usize,
}

/// Observation scaling for the prosocial view. Trained nets only ever see
/// scaled inputs, so anything replaying a checkpoint must apply the same
/// factors.
pub fn scale8(o: [f64; 8], s: &[f64; 4]) -> [f64; 8] {
    let mut out = o;
    for (k, slot) in out.iter_mut().enumerate() {
        *slot /= s[k % 4];
    }
    out
}

/// Observation scaling for the introspective view.
pub fn scale4(o: [f64; 4], s: &[f64; 4]) -> [f64; 4] {
    let mut out = o;
    for (k, slot) in out.iter_mut().enumerate() {
        *slot /= s[k];
    }
    out
}

/// Lowest index wins ties, matching the solver's convention.
fn flat_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// The bimatrix game both selection and the leader's target bootstrap see:
/// leader payoffs from the prosocial net, follower payoffs from the
/// introspective net. The leader touches only the follower's Q output,
/// never its observation.
pub fn induced_game(
    q_p: &MlpParams,
    q_i: &MlpParams,
    o_p: &[f64],
    o_i: &[f64],
) -> Result<PayoffBimatrix, SliccError> {
    let follower = q_i.forward(o_i)?;
    let n_i = follower.len();
    let leader = q_p.forward(o_p)?;
    if leader.len() % n_i != 0 {
        return Err(SliccError::DimMismatch {
            expected: n_i,
            got: leader.len(),
        });
    }
    let n_p = leader.len() / n_i;
    PayoffBimatrix::from_flat(n_p, n_i, leader, follower)
}

/// Each agent independently keeps its greedy Stackelberg action with
/// probability 1-epsilon and otherwise plays uniformly. Draw order: leader
/// check, leader index (only if exploring), follower check, follower index.
pub fn select_actions_slicc<R: Rng + ?Sized>(
    o_p: &[f64],
    o_i: &[f64],
    q_p: &MlpParams,
    q_i: &MlpParams,
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionPair, SliccError> {
    let game = induced_game(q_p, q_i, o_p, o_i)?;
    let greedy = game.stackelberg_step();
    let leader_action = if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..game.n_p())
    } else {
        greedy.leader_action
    };
    let follower_action = if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..game.n_i())
    } else {
        greedy.follower_action
    };
    Ok(ActionPair {
        leader_action,
        follower_action,
    })
}

/// Ablation variant: one exploration check covers both agents.
pub fn select_actions_slicc_joint<R: Rng + ?Sized>(
    o_p: &[f64],
    o_i: &[f64],
    q_p: &MlpParams,
    q_i: &MlpParams,
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionPair, SliccError> {
    let game = induced_game(q_p, q_i, o_p, o_i)?;
    if rng.gen::<f64>() < epsilon {
        Ok(ActionPair {
            leader_action: rng.gen_range(0..game.n_p()),
            follower_action: rng.gen_range(0..game.n_i()),
        })
    } else {
        Ok(game.stackelberg_step())
    }
}

/// Epsilon-greedy over the joint space: one check, one flat index decoded
/// row-major to (leader, follower).
pub fn select_action_centralized<R: Rng + ?Sized>(
    o_joint: &[f64],
    q_c: &MlpParams,
    epsilon: f64,
    rng: &mut R,
) -> Result<ActionPair, SliccError> {
    let out = q_c.forward(o_joint)?;
    let k = if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..out.len())
    } else {
        flat_argmax(&out)
    };
    let (leader_action, follower_action) = joint_pair(k, N_ACTIONS);
    Ok(ActionPair {
        leader_action,
        follower_action,
    })
}

fn target_prosocial_with(
    t: &JointTransition,
    q_p: &MlpParams,
    q_i: &MlpParams,
    gamma: f64,
    hid_p: &mut [f64],
    hid_i: &mut [f64],
) -> f64 {
    if t.terminal {
        return t.r_p;
    }
    q_i.hidden_into(&t.o_i_next, hid_i);
    let mut col = 0;
    let mut col_v = q_i.output_component(hid_i, 0);
    for a in 1..q_i.out_dim() {
        let v = q_i.output_component(hid_i, a);
        if v > col_v {
            col = a;
            col_v = v;
        }
    }
    let n_i = q_i.out_dim();
    q_p.hidden_into(&t.o_p_next, hid_p);
    let rows = q_p.out_dim() / n_i;
    let mut best = q_p.output_component(hid_p, joint_index(0, col, n_i));
    for row in 1..rows {
        let v = q_p.output_component(hid_p, joint_index(row, col, n_i));
        if v > best {
            best = v;
        }
    }
    t.r_p + gamma * best
}

fn target_introspective_with(
    t: &JointTransition,
    q_i: &MlpParams,
    gamma: f64,
    hid_i: &mut [f64],
) -> f64 {
    if t.terminal {
        return t.r_i;
    }
    q_i.hidden_into(&t.o_i_next, hid_i);
    let mut best = q_i.output_component(hid_i, 0);
    for a in 1..q_i.out_dim() {
        let v = q_i.output_component(hid_i, a);
        if v > best {
            best = v;
        }
    }
    t.r_i + gamma * best
}

/// Leader bootstrap: the follower's greedy action at the next observation
/// fixes a column, the leader maximizes its own next-state row over that
/// column. Terminal transitions use the raw reward unchanged.
pub fn compute_target_prosocial(
    t: &JointTransition,
    q_p: &MlpParams,
    q_i: &MlpParams,
    gamma: f64,
) -> f64 {
    let mut hid_p = vec![0.0; q_p.hidden_dim()];
    let mut hid_i = vec![0.0; q_i.hidden_dim()];
    target_prosocial_with(t, q_p, q_i, gamma, &mut hid_p, &mut hid_i)
}

/// Follower bootstrap: plain max over its own next-state values. Terminal
/// transitions use the raw reward unchanged.
pub fn compute_target_introspective(t: &JointTransition, q_i: &MlpParams, gamma: f64) -> f64 {
    let mut hid_i = vec![0.0; q_i.hidden_dim()];
    target_introspective_with(t, q_i, gamma, &mut hid_i)
}

/// Discounted return, folded back to front so V = r_0 + g*(r_1 + g*(...)).
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut v = 0.0;
    for r in rewards.iter().rev() {
        v = r + gamma * v;
    }
    v
}

/// Greedy joint action for trained weights, however they were trained.
pub fn greedy_pair(
    nets: &TrainedNets,
    o_p: &[f64],
    o_i: &[f64],
) -> Result<ActionPair, SliccError> {
    match nets {
        TrainedNets::Slicc {
            prosocial,
            introspective,
        } => Ok(induced_game(prosocial, introspective, o_p, o_i)?.stackelberg_step()),
        TrainedNets::Centralized { joint } => {
            let out = joint.forward(o_p)?;
            let (leader_action, follower_action) = joint_pair(flat_argmax(&out), N_ACTIONS);
            Ok(ActionPair {
                leader_action,
                follower_action,
            })
        }
    }
}

/// Training rewards for one step plus the combined figure logged with it.
/// The centralized scalar decomposes exactly into the per-agent pair, so
/// the same three numbers are comparable across algorithms.
fn step_rewards(
    cfg: &TrainConfig,
    w: &WorldState,
    a_p: &env::ActionIncrement,
    a_i: &env::ActionIncrement,
    prev_av_p: f64,
    prev_av_i: f64,
) -> (f64, f64, f64) {
    match compose(
        cfg.prototype,
        w,
        a_p,
        a_i,
        prev_av_p,
        prev_av_i,
        &cfg.reward,
    ) {
        ComposedReward::PerAgent { r_p, r_i } => (r_p, r_i, r_p + r_i),
        ComposedReward::Global(g) => {
            let (r_p, r_i) = alpha_pair(w, a_p, a_i, prev_av_p, prev_av_i, &cfg.reward);
            (r_p, r_i, g)
        }
    }
}

/// Learner state behind the shared episode loop. Scratch buffers live here
/// so the hot path allocates only the per-update sample vectors.
enum Learner {
    Slicc {
        q_p: MlpParams,
        q_i: MlpParams,
        opt_p: Optimizer,
        opt_i: Optimizer,
        grads_p: MlpParams,
        grads_i: MlpParams,
        hid_p: Vec<f64>,
        hid_i: Vec<f64>,
        scratch: Vec<f64>,
        targets_p: Vec<f64>,
        targets_i: Vec<f64>,
    },
    Centralized {
        q_c: MlpParams,
        opt_c: Optimizer,
        grads_c: MlpParams,
        hid_c: Vec<f64>,
        scratch: Vec<f64>,
        targets_c: Vec<f64>,
    },
}

impl Learner {
    /// Network seeds come off the master stream before anything else:
    /// leader then follower for SLiCC, a single seed for the baseline.
    fn new(cfg: &TrainConfig, master: &mut ChaCha8Rng) -> Result<Self, SliccError> {
        let h = cfg.hidden_dim;
        match cfg.algorithm {
            Algorithm::Slicc => {
                let q_p = MlpParams::init(master.next_u64(), 8, h, N_ACTIONS * N_ACTIONS);
                let q_i = MlpParams::init(master.next_u64(), 4, h, N_ACTIONS);
                let opt_p = cfg.optimizer.build(&q_p)?;
                let opt_i = cfg.optimizer.build(&q_i)?;
                let grads_p = MlpParams::zeros(8, h, N_ACTIONS * N_ACTIONS);
                let grads_i = MlpParams::zeros(4, h, N_ACTIONS);
                Ok(Learner::Slicc {
                    q_p,
                    q_i,
                    opt_p,
                    opt_i,
                    grads_p,
                    grads_i,
                    hid_p: vec![0.0; h],
                    hid_i: vec![0.0; h],
                    scratch: Vec::new(),
                    targets_p: Vec::new(),
                    targets_i: Vec::new(),
                })
            }
            Algorithm::Centralized => {
                let q_c = MlpParams::init(master.next_u64(), 8, h, N_ACTIONS * N_ACTIONS);
                let opt_c = cfg.optimizer.build(&q_c)?;
                let grads_c = MlpParams::zeros(8, h, N_ACTIONS * N_ACTIONS);
                Ok(Learner::Centralized {
                    q_c,
                    opt_c,
                    grads_c,
                    hid_c: vec![0.0; h],
                    scratch: Vec::new(),
                    targets_c: Vec::new(),
                })
            }
        }
    }

    fn select<R: Rng + ?Sized>(
        &self,
        o_p: &[f64; 8],
        o_i: &[f64; 4],
        epsilon: f64,
        joint: bool,
        rng: &mut R,
    ) -> Result<ActionPair, SliccError> {
        match self {
            Learner::Slicc { q_p, q_i, .. } => {
                if joint {
                    select_actions_slicc_joint(o_p, o_i, q_p, q_i, epsilon, rng)
                } else {
                    select_actions_slicc(o_p, o_i, q_p, q_i, epsilon, rng)
                }
            }
            Learner::Centralized { q_c, .. } => select_action_centralized(o_p, q_c, epsilon, rng),
        }
    }

    /// One mini-batch step. All targets are computed from the weights as
    /// they stand on entry; the leader then updates before the follower.
    fn update(&mut self, batch: &[&JointTransition], gamma: f64) -> Result<(), SliccError> {
        match self {
            Learner::Slicc {
                q_p,
                q_i,
                opt_p,
                opt_i,
                grads_p,
                grads_i,
                hid_p,
                hid_i,
                scratch,
                targets_p,
                targets_i,
            } => {
                targets_p.clear();
                targets_i.clear();
                for t in batch {
                    targets_p.push(target_prosocial_with(t, q_p, q_i, gamma, hid_p, hid_i));
                    targets_i.push(target_introspective_with(t, q_i, gamma, hid_i));
                }
                let batch_p: Vec<TrainSample<'_>> = batch
                    .iter()
                    .zip(targets_p.iter())
                    .map(|(t, target)| TrainSample {
                        obs: &t.o_p,
                        action: joint_index(t.a_p, t.a_i, N_ACTIONS),
                        target: *target,
                    })
                    .collect();
                let loss_p = q_p.loss_and_grad_into(&batch_p, grads_p, scratch)?;
                if !loss_p.is_finite() {
                    return Err(SliccError::NonFinite("leader training loss"));
                }
                opt_p.apply_update(q_p, grads_p);
                let batch_i: Vec<TrainSample<'_>> = batch
                    .iter()
                    .zip(targets_i.iter())
                    .map(|(t, target)| TrainSample {
                        obs: &t.o_i,
                        action: t.a_i,
                        target: *target,
                    })
                    .collect();
                let loss_i = q_i.loss_and_grad_into(&batch_i, grads_i, scratch)?;
                if !loss_i.is_finite() {
                    return Err(SliccError::NonFinite("follower training loss"));
                }
                opt_i.apply_update(q_i, grads_i);
                Ok(())
            }
            Learner::Centralized {
                q_c,
                opt_c,
                grads_c,
                hid_c,
                scratch,
                targets_c,
            } => {
                targets_c.clear();
                for t in batch {
                    // The global reward is recovered as the exact sum of
                    // the stored pair; compose() groups it that way.
                    let r_g = t.r_p + t.r_i;
                    let target = if t.terminal {
                        r_g
                    } else {
                        q_c.hidden_into(&t.o_p_next, hid_c);
                        let mut best = q_c.output_component(hid_c, 0);
                        for k in 1..q_c.out_dim() {
                            let v = q_c.output_component(hid_c, k);
                            if v > best {
                                best = v;
                            }
                        }
                        r_g + gamma * best
                    };
                    targets_c.push(target);
                }
                let batch_c: Vec<TrainSample<'_>> = batch
                    .iter()
                    .zip(targets_c.iter())
                    .map(|(t, target)| TrainSample {
                        obs: &t.o_p,
                        action: joint_index(t.a_p, t.a_i, N_ACTIONS),
                        target: *target,
                    })
                    .collect();
                let loss_c = q_c.loss_and_grad_into(&batch_c, grads_c, scratch)?;
                if !loss_c.is_finite() {
                    return Err(SliccError::NonFinite("centralized training loss"));
                }
                opt_c.apply_update(q_c, grads_c);
                Ok(())
            }
        }
    }

    fn nets(&self) -> TrainedNets {
        match self {
            Learner::Slicc { q_p, q_i, .. } => TrainedNets::Slicc {
                prosocial: q_p.clone(),
                introspective: q_i.clone(),
            },
            Learner::Centralized { q_c, .. } => TrainedNets::Centralized { joint: q_c.clone() },
        }
    }
}

/// Run a full training job. Emits one `TrainEvent::Episode` per episode
/// (plus `Eval` points at the configured cadence) and returns the weights,
/// the whole stats series, and the final buffer fill.
pub fn train(
    cfg: &TrainConfig,
    mut on_event: impl FnMut(TrainEvent),
) -> Result<TrainOutcome, SliccError> {
    cfg.validate()?;
    let scale = cfg.obs_scale.resolve(&cfg.env);
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut learner = Learner::new(cfg, &mut master)?;
    let mut eval_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
    let mut buf = ReplayBuffer::new(cfg.replay_capacity)?;
    let mut stats = Vec::with_capacity(cfg.episodes);
    let mut traj: Vec<WorldState> = Vec::with_capacity(cfg.env.horizon + 1);
    for episode in 0..cfg.episodes {
        let epsilon = cfg.epsilon_at(episode);
        let mut w = env::reset(&cfg.env, &mut master);
        traj.clear();
        traj.push(w);
        let (mut prev_av_p, mut prev_av_i) = (0.0, 0.0);
        let (mut sum_p, mut sum_i, mut sum_c) = (0.0, 0.0, 0.0);
        loop {
            let o_p = scale8(observe_prosocial(&w), &scale);
            let o_i = scale4(observe_introspective(&w), &scale);
            let pair = learner.select(&o_p, &o_i, epsilon, cfg.joint_exploration, &mut master)?;
            let act_p = decode_action(pair.leader_action, &cfg.env)?;
            let act_i = decode_action(pair.follower_action, &cfg.env)?;
            // Rewards are functions of the pre-step state and the actions
            // chosen in it.
            let (r_p, r_i, r_step) = step_rewards(cfg, &w, &act_p, &act_i, prev_av_p, prev_av_i);
            let w2 = world_step(&w, act_p, act_i, &mut master, &cfg.env)?;
            let terminal = is_failure(&w2, &cfg.env) || w2.step_index >= cfg.env.horizon;
            buf.push(JointTransition {
                o_p,
                a_p: pair.leader_action,
                r_p,
                o_p_next: scale8(observe_prosocial(&w2), &scale),
                o_i,
                a_i: pair.follower_action,
                r_i,
                o_i_next: scale4(observe_introspective(&w2), &scale),
                terminal,
            });
            sum_p += r_p;
            sum_i += r_i;
            sum_c += r_step;
            prev_av_p = act_p.a_v;
            prev_av_i = act_i.a_v;
            traj.push(w2);
            if buf.len() >= cfg.batch_size {
                let batch = buf.sample(&mut master, cfg.batch_size)?;
                learner.update(&batch, cfg.gamma)?;
            }
            w = w2;
            if terminal {
                break;
            }
        }
        let s = EpisodeStats {
            episode,
            r_p: sum_p,
            r_i: sum_i,
            r_combined: sum_c,
            success: env::check_success(&traj, &cfg.env)?,
            length: traj.len() - 1,
            epsilon,
        };
        on_event(TrainEvent::Episode(s));
        stats.push(s);
        if let Some(k) = cfg.eval_every {
            if (episode + 1) % k == 0 {
                let summary = evaluate(&learner.nets(), cfg, cfg.eval_episodes, &mut eval_rng)?;
                on_event(TrainEvent::Eval(EvalPoint {
                    after_episode: episode + 1,
                    summary,
                }));
            }
        }
    }
    Ok(TrainOutcome {
        nets: learner.nets(),
        stats,
        replay_len: buf.len(),
    })
}

/// Greedy rollouts (epsilon 0) with environment noise still on. Returns
/// means over the episodes; the discounted returns use the same per-agent
/// rewards the stats log.
pub fn evaluate(
    nets: &TrainedNets,
    cfg: &TrainConfig,
    n_episodes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalSummary, SliccError> {
    if n_episodes == 0 {
        return Err(SliccError::BadConfig("eval needs at least one episode"));
    }
    let scale = cfg.obs_scale.resolve(&cfg.env);
    let mut traj: Vec<WorldState> = Vec::with_capacity(cfg.env.horizon + 1);
    let (mut rp_seq, mut ri_seq) = (Vec::new(), Vec::new());
    let (mut combined, mut successes, mut v_p, mut v_i) = (0.0, 0usize, 0.0, 0.0);
    for _ in 0..n_episodes {
        let mut w = env::reset(&cfg.env, rng);
        traj.clear();
        traj.push(w);
        rp_seq.clear();
        ri_seq.clear();
        let (mut prev_av_p, mut prev_av_i) = (0.0, 0.0);
        loop {
            let o_p = scale8(observe_prosocial(&w), &scale);
            let o_i = scale4(observe_introspective(&w), &scale);
            let pair = greedy_pair(nets, &o_p, &o_i)?;
            let act_p = decode_action(pair.leader_action, &cfg.env)?;
            let act_i = decode_action(pair.follower_action, &cfg.env)?;
            let (r_p, r_i, r_step) = step_rewards(cfg, &w, &act_p, &act_i, prev_av_p, prev_av_i);
            let w2 = world_step(&w, act_p, act_i, rng, &cfg.env)?;
            rp_seq.push(r_p);
            ri_seq.push(r_i);
            combined += r_step;
            prev_av_p = act_p.a_v;
            prev_av_i = act_i.a_v;
            traj.push(w2);
            w = w2;
            if is_failure(&w, &cfg.env) || w.step_index >= cfg.env.horizon {
                break;
            }
        }
        if env::check_success(&traj, &cfg.env)? {
            successes += 1;
        }
        v_p += discounted_return(&rp_seq, cfg.gamma);
        v_i += discounted_return(&ri_seq, cfg.gamma);
    }
    let n = n_episodes as f64;
    Ok(EvalSummary {
        avg_combined: combined / n,
        success_ratio: successes as f64 / n,
        avg_return_p: v_p / n,
        avg_return_i: v_i / n,
    })
}
