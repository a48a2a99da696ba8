//! Two-robot transport environment.
//!
//! Each robot follows unicycle kinematics in discrete time:
//!
//!   x' = x + v cos(th) dt + e_x
//!   y' = y + v sin(th) dt + e_y
//!   th' = wrap(th + a_w dt + e_th)
//!   v' = clamp(v + a_v + e_v, -v_max, v_max)
//!
//! The angular action a_w is a rate held for the step; the linear action a_v
//! is an instantaneous velocity increment, so it carries no dt factor.
//! Noise is zero-mean Gaussian per component, drawn prosocial-first in a
//! fixed order so trajectories are a pure function of (config, seed,
//! actions). The carried object appears only through the distance-keeping
//! terms; there is no contact model and no arena boundary.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::SliccError;
use crate::fmath;

/// Number of discrete actions per agent.
pub const N_ACTIONS: usize = 9;

/// Pose and speed of one robot. theta stays in (-pi, pi]; |v| <= v_max.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl RobotState {
    pub const fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self { x, y, theta, v }
    }
}

/// Joint state of the pair plus the number of steps taken so far.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldState {
    pub prosocial: RobotState,
    pub introspective: RobotState,
    pub step_index: usize,
}

/// One discrete action: at most one of the two channels is nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionIncrement {
    pub index: usize,
    pub a_omega: f64,
    pub a_v: f64,
}

/// Environment parameters. Success tolerances and initial poses live here so
/// a config value fully determines an episode given a seed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EnvConfig {
    pub dt: f64,
    pub delta_a_v: f64,
    pub delta_a_theta: f64,
    /// Standard deviations for (e_x, e_y, e_th, e_v).
    pub noise_std: [f64; 4],
    pub v_max: f64,
    pub horizon: usize,
    /// Desired inter-robot distance, meters.
    pub sigma: f64,
    pub target_v: f64,
    pub target_theta: f64,
    pub tol_dist: f64,
    pub tol_goal: f64,
    pub min_steps: usize,
    pub init_prosocial: RobotState,
    pub init_introspective: RobotState,
    /// Gaussian jitter applied to both robots' (x, y) at reset.
    pub init_jitter_std: f64,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let sigma = 0.5;
        Self {
            dt: 0.1,
            delta_a_v: 0.02,
            delta_a_theta: 0.2,
            noise_std: [0.001, 0.001, 0.002, 0.001],
            v_max: 0.22,
            horizon: 200,
            sigma,
            target_v: 0.15,
            target_theta: 0.0,
            tol_dist: 0.1,
            tol_goal: 0.1,
            min_steps: 100,
            init_prosocial: RobotState::new(0.0, sigma / 2.0, 0.0, 0.0),
            init_introspective: RobotState::new(0.0, -sigma / 2.0, 0.0, 0.0),
            init_jitter_std: 0.0,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), SliccError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SliccError::BadConfig("dt must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(SliccError::BadConfig("sigma must be positive"));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(SliccError::BadConfig("v_max must be positive"));
        }
        if !self.noise_std.iter().all(|s| *s >= 0.0 && s.is_finite()) {
            return Err(SliccError::BadConfig("noise_std must be non-negative"));
        }
        if !(self.delta_a_v >= 0.0 && self.delta_a_theta >= 0.0) {
            return Err(SliccError::BadConfig("action increments must be non-negative"));
        }
        if self.horizon < self.min_steps {
            return Err(SliccError::BadConfig("horizon must be at least min_steps"));
        }
        if self.horizon == 0 {
            return Err(SliccError::BadConfig("horizon must be positive"));
        }
        if !(self.tol_dist >= 0.0 && self.tol_goal >= 0.0) {
            return Err(SliccError::BadConfig("tolerances must be non-negative"));
        }
        if !(self.init_jitter_std >= 0.0 && self.init_jitter_std.is_finite()) {
            return Err(SliccError::BadConfig("init_jitter_std must be non-negative"));
        }
        Ok(())
    }

    /// Episode cut-off for failed formations: three distance tolerances.
    pub fn failure_cutoff(&self) -> f64 {
        3.0 * self.tol_dist
    }
}

/// Reduce an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    use core::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut t = theta % two_pi;
    if t <= -PI {
        t += two_pi;
    } else if t > PI {
        t -= two_pi;
    }
    t
}

/// Decode a discrete action index with the configured increments.
///
/// The table is {0, -2dv, -dv, +dv, +2dv, -2dw, -dw, +dw, +2dw}: indices
/// 1..=4 drive the linear channel, 5..=8 the angular channel.
pub fn decode_action(index: usize, cfg: &EnvConfig) -> Result<ActionIncrement, SliccError> {
    let dv = cfg.delta_a_v;
    let dw = cfg.delta_a_theta;
    let (a_omega, a_v) = match index {
        0 => (0.0, 0.0),
        1 => (0.0, -2.0 * dv),
        2 => (0.0, -dv),
        3 => (0.0, dv),
        4 => (0.0, 2.0 * dv),
        5 => (-2.0 * dw, 0.0),
        6 => (-dw, 0.0),
        7 => (dw, 0.0),
        8 => (2.0 * dw, 0.0),
        _ => {
            return Err(SliccError::DimMismatch {
                expected: N_ACTIONS,
                got: index,
            })
        }
    };
    Ok(ActionIncrement { index, a_omega, a_v })
}

/// Advance one robot by one step with explicit noise draws (e_x, e_y, e_th,
/// e_v).
pub fn step_dynamics(s: &RobotState, a_omega: f64, a_v: f64, noise: [f64; 4], cfg: &EnvConfig) -> RobotState {
    RobotState {
        x: s.x + s.v * fmath::cos(s.theta) * cfg.dt + noise[0],
        y: s.y + s.v * fmath::sin(s.theta) * cfg.dt + noise[1],
        theta: wrap_angle(s.theta + a_omega * cfg.dt + noise[2]),
        v: (s.v + a_v + noise[3]).clamp(-cfg.v_max, cfg.v_max),
    }
}

fn draw_noise<R: Rng + ?Sized>(rng: &mut R, cfg: &EnvConfig) -> [f64; 4] {
    // Scaling a standard draw keeps the stream layout identical whether or
    // not a component's std is zero, and makes std 0 an exact zero.
    let mut out = [0.0; 4];
    for (slot, std) in out.iter_mut().zip(cfg.noise_std) {
        let z: f64 = rng.sample(StandardNormal);
        *slot = std * z;
    }
    out
}

/// Advance the world one step: prosocial robot first, then introspective,
/// each with its own four noise draws.
pub fn world_step<R: Rng + ?Sized>(
    w: &WorldState,
    a_p: ActionIncrement,
    a_i: ActionIncrement,
    rng: &mut R,
    cfg: &EnvConfig,
) -> Result<WorldState, SliccError> {
    if w.step_index >= cfg.horizon {
        return Err(SliccError::BadState("episode already at horizon"));
    }
    let noise_p = draw_noise(rng, cfg);
    let noise_i = draw_noise(rng, cfg);
    Ok(WorldState {
        prosocial: step_dynamics(&w.prosocial, a_p.a_omega, a_p.a_v, noise_p, cfg),
        introspective: step_dynamics(&w.introspective, a_i.a_omega, a_i.a_v, noise_i, cfg),
        step_index: w.step_index + 1,
    })
}

/// Place both robots at their configured poses with optional position
/// jitter. Four draws are consumed in a fixed order (prosocial x, y, then
/// introspective x, y) regardless of the jitter std.
pub fn reset<R: Rng + ?Sized>(cfg: &EnvConfig, rng: &mut R) -> WorldState {
    let mut jitter = [0.0f64; 4];
    for slot in jitter.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *slot = cfg.init_jitter_std * z;
    }
    let mut p = cfg.init_prosocial;
    p.x += jitter[0];
    p.y += jitter[1];
    let mut i = cfg.init_introspective;
    i.x += jitter[2];
    i.y += jitter[3];
    WorldState {
        prosocial: p,
        introspective: i,
        step_index: 0,
    }
}

/// Prosocial observation: own state then the partner's, (x, y, th, v) each.
pub fn observe_prosocial(w: &WorldState) -> [f64; 8] {
    [
        w.prosocial.x,
        w.prosocial.y,
        w.prosocial.theta,
        w.prosocial.v,
        w.introspective.x,
        w.introspective.y,
        w.introspective.theta,
        w.introspective.v,
    ]
}

/// Introspective observation: own state only.
pub fn observe_introspective(w: &WorldState) -> [f64; 4] {
    [
        w.introspective.x,
        w.introspective.y,
        w.introspective.theta,
        w.introspective.v,
    ]
}

/// Distance between the two robots.
pub fn inter_robot_distance(w: &WorldState) -> f64 {
    fmath::hypot(
        w.prosocial.x - w.introspective.x,
        w.prosocial.y - w.introspective.y,
    )
}

/// How far the formation is from the desired distance.
pub fn distance_deviation(w: &WorldState, cfg: &EnvConfig) -> f64 {
    fmath::abs(inter_robot_distance(w) - cfg.sigma)
}

/// Distance of one robot's (v, th) from the target, with the angular gap
/// wrapped so equivalent headings compare as equal.
pub fn goal_deviation(s: &RobotState, cfg: &EnvConfig) -> f64 {
    fmath::hypot(s.v - cfg.target_v, wrap_angle(s.theta - cfg.target_theta))
}

/// True when the formation has drifted past the failure cut-off.
pub fn is_failure(w: &WorldState, cfg: &EnvConfig) -> bool {
    distance_deviation(w, cfg) > cfg.failure_cutoff()
}

/// Episode success over a full trajectory (initial state included; n states
/// record n-1 steps). All three conditions must hold:
///   1. distance deviation <= tol_dist at every state;
///   2. both robots' (v, th) within tol_goal of the target at the last state;
///   3. at least min_steps steps.
/// Comparisons are inclusive.
pub fn check_success(trajectory: &[WorldState], cfg: &EnvConfig) -> Result<bool, SliccError> {
    if trajectory.is_empty() {
        return Err(SliccError::BadState("empty trajectory"));
    }
    if trajectory.len() - 1 < cfg.min_steps {
        return Ok(false);
    }
    for w in trajectory {
        if distance_deviation(w, cfg) > cfg.tol_dist {
            return Ok(false);
        }
    }
    let last = trajectory.last().expect("non-empty");
    Ok(goal_deviation(&last.prosocial, cfg) <= cfg.tol_goal
        && goal_deviation(&last.introspective, cfg) <= cfg.tol_goal)
}
