//! Reward components and their prototype compositions.
//!
//! Three ingredients: r_int keeps the pair at the carrying distance, r_goal
//! pulls a robot's (v, theta) to the target, r_ap pays a small bonus for
//! smooth consecutive linear-velocity increments and a smaller penalty for
//! jerky ones. Prototypes wire them up per agent; the centralized variant
//! sums everything into one scalar.

use crate::env::{ActionIncrement, RobotState, WorldState};
use crate::error::SliccError;
use crate::fmath;

/// Parameters shared by all reward components. sigma and the targets mirror
/// the environment's values; keeping them here makes the reward a pure
/// function of its arguments.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RewardParams {

    pub mu_upper: f64,
    pub mu_lower: f64,
    pub zeta: f64,
    pub sigma: f64,
    pub target_v: f64,
    pub target_theta: f64,
    /// Diagonal weights on r_goal's (v, theta) discrepancy. Identity by
    /// default, matching the unweighted norm.
    pub weight_v: f64,
    pub weight_theta: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            mu_upper: 0.05,
            mu_lower: 0.02,
            zeta: 0.03,
            sigma: 0.5,
            target_v: 0.15,
            target_theta: 0.0,
            weight_v: 1.0,
            weight_theta: 1.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), SliccError> {
        if !(self.mu_upper > 0.0 && self.mu_upper.is_finite()) {
            return Err(SliccError::BadConfig("mu_upper must be positive"));
        }
        if !(self.mu_lower > 0.0 && self.mu_lower.is_finite()) {
            return Err(SliccError::BadConfig("mu_lower must be positive"));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(SliccError::BadConfig("zeta must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(SliccError::BadConfig("sigma must be positive"));
        }
        if !(self.weight_v > 0.0 && self.weight_theta > 0.0) {
            return Err(SliccError::BadConfig("goal weights must be positive"));
        }
        if !(self.target_v.is_finite() && self.target_theta.is_finite()) {
            return Err(SliccError::BadConfig("targets must be finite"));
        }
        Ok(())
    }

    /// Copy the geometry- and goal-related fields from an environment
    /// config so the two cannot drift apart.
    pub fn with_env(mut self, env: &crate::env::EnvConfig) -> Self {
        self.sigma = env.sigma;
        self.target_v = env.target_v;
        self.target_theta = env.target_theta;
        self
    }
}

/// Which composition the agents are trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RewardPrototype {
    /// r^P = r_goal + r_int + r_ap, r^I = r_goal + r_ap.
    Alpha,
    /// r^P = r_int + r_ap, r^I = r_goal + r_ap.
    Beta,
    /// One scalar: r_int plus both agents' r_goal and r_ap.
    CentralizedG,
}

/// Per-agent rewards, or the single centralized scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComposedReward {
    PerAgent { r_p: f64, r_i: f64 },
    Global(f64),
}

/// Interaction term: -| distance - sigma |. Zero exactly at the carrying
/// distance, negative everywhere else.
pub fn r_int(w: &WorldState, params: &RewardParams) -> f64 {
    let d = fmath::hypot(
        w.prosocial.x - w.introspective.x,
        w.prosocial.y - w.introspective.y,
    );
    -fmath::abs(d - params.sigma)
}

/// Goal term: -|| W ((v, theta) - target) ||, angular gap wrapped so
/// equivalent headings score alike. Zero exactly on target.
pub fn r_goal(s: &RobotState, params: &RewardParams) -> f64 {
    let dv = params.weight_v * (s.v - params.target_v);
    let dth = params.weight_theta * crate::env::wrap_angle(s.theta - params.target_theta);
    -fmath::hypot(dv, dth)
}

/// Action-smoothness term over consecutive linear-velocity increments.
/// Within zeta (inclusive) pays +mu_upper, beyond it costs mu_lower.
/// Angular actions decode to a_v = 0, so turning in place counts as smooth.
pub fn r_ap(a_v_now: f64, a_v_prev: f64, params: &RewardParams) -> f64 {
    if fmath::abs(a_v_now - a_v_prev) <= params.zeta {
        params.mu_upper
    } else {
        -params.mu_lower
    }
}

/// Both agents' rewards under the given prototype, evaluated at the state
/// the actions were taken in. prev_a_v are the previous step's linear
/// increments (zero at the first step: the robots start at rest).
///
/// The alpha composition is grouped as r_goal + (r_int + r_ap) so that the
/// beta identity r_beta^P + r_goal^P == r_alpha^P holds bit-exactly, and
/// the centralized scalar is the exact sum of alpha's pair.
pub fn compose(
    proto: RewardPrototype,
    w: &WorldState,
    a_p: &ActionIncrement,
    a_i: &ActionIncrement,
    prev_a_v_p: f64,
    prev_a_v_i: f64,
    params: &RewardParams,
) -> ComposedReward {
    let interaction = r_int(w, params);
    let ap_p = r_ap(a_p.a_v, prev_a_v_p, params);
    let ap_i = r_ap(a_i.a_v, prev_a_v_i, params);
    let shared_p = interaction + ap_p;
    let r_i_val = r_goal(&w.introspective, params) + ap_i;
    match proto {
        RewardPrototype::Alpha => ComposedReward::PerAgent {
            r_p: r_goal(&w.prosocial, params) + shared_p,
            r_i: r_i_val,
        },
        RewardPrototype::Beta => ComposedReward::PerAgent {
            r_p: shared_p,
            r_i: r_i_val,
        },
        RewardPrototype::CentralizedG => {
            ComposedReward::Global((r_goal(&w.prosocial, params) + shared_p) + r_i_val)
        }
    }
}

/// Alpha's per-agent pair regardless of prototype; the centralized scalar
/// is their sum. Used for uniform metrics across algorithms.
pub fn alpha_pair(
    w: &WorldState,
    a_p: &ActionIncrement,
    a_i: &ActionIncrement,
    prev_a_v_p: f64,
    prev_a_v_i: f64,
    params: &RewardParams,
) -> (f64, f64) {
    match compose(
        RewardPrototype::Alpha,
        w,
        a_p,
        a_i,
        prev_a_v_p,
        prev_a_v_i,
        params,
    ) {
        ComposedReward::PerAgent { r_p, r_i } => (r_p, r_i),
        ComposedReward::Global(_) => unreachable!("alpha composes per agent"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{decode_action, EnvConfig, RobotState, WorldState};

    fn params() -> RewardParams {
        RewardParams::default()
    }

    fn world(px: f64, py: f64, ix: f64, iy: f64) -> WorldState {
        WorldState {
            prosocial: RobotState::new(px, py, 0.0, 0.0),
            introspective: RobotState::new(ix, iy, 0.0, 0.0),
            step_index: 0,
        }
    }

    #[test]
    fn interaction_zero_at_sigma_and_symmetric() {
        let p = params();
        assert_eq!(r_int(&world(0.0, 0.25, 0.0, -0.25), &p), 0.0);
        // 0.2 beyond sigma and 0.2 short of it score the same penalty.
        let far = r_int(&world(0.0, 0.35, 0.0, -0.35), &p);
        let near = r_int(&world(0.0, 0.15, 0.0, -0.15), &p);
        assert!((far + 0.2).abs() < 1e-15);
        assert!((near + 0.2).abs() < 1e-15);
        assert!(far < 0.0 && near < 0.0);
    }

    #[test]
    fn goal_zero_on_target_and_pythagorean() {
        let p = params();
        let on_target = RobotState::new(5.0, -3.0, 0.0, 0.15);
        assert_eq!(r_goal(&on_target, &p), 0.0);
        let v_off = RobotState::new(0.0, 0.0, 0.0, 0.25);
        assert!((r_goal(&v_off, &p) + 0.1).abs() < 1e-15);
        // 3-4-5 triangle: v off by 0.3, theta off by 0.4.
        let both_off = RobotState::new(0.0, 0.0, 0.4, 0.45);
        assert!((r_goal(&both_off, &p) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn goal_wraps_heading_gap() {
        let mut p = params();
        p.target_theta = core::f64::consts::PI;
        // theta just past -pi is the same heading as just past +pi.
        let s = RobotState::new(0.0, 0.0, -core::f64::consts::PI + 0.01, 0.15);
        assert!((r_goal(&s, &p) + 0.01).abs() < 1e-12);
    }

    #[test]
    fn goal_weights_scale_components() {
        let mut p = params();
        p.weight_theta = 2.0;
        let s = RobotState::new(0.0, 0.0, 0.3, 0.15);
        assert!((r_goal(&s, &p) + 0.6).abs() < 1e-15);
    }

    #[test]
    fn smoothness_band_is_inclusive() {
        let p = params();
        assert_eq!(r_ap(0.02, 0.01, &p), 0.05);
        assert_eq!(r_ap(0.04, -0.01, &p), -0.02);
        assert_eq!(r_ap(0.03, 0.0, &p), 0.05);
        assert_eq!(r_ap(0.0, 0.0, &p), 0.05);
    }

    #[test]
    fn alpha_at_ideal_state_pays_double_bonus() {
        let p = params();
        let cfg = EnvConfig::default();
        let mut w = world(0.0, 0.25, 0.0, -0.25);
        w.prosocial.v = 0.15;
        w.introspective.v = 0.15;
        let hold = decode_action(0, &cfg).unwrap();
        match compose(RewardPrototype::Alpha, &w, &hold, &hold, 0.0, 0.0, &p) {
            ComposedReward::PerAgent { r_p, r_i } => {
                assert_eq!(r_p, 0.05);
                assert_eq!(r_i, 0.05);
            }
            _ => panic!("alpha is per-agent"),
        }
        match compose(RewardPrototype::CentralizedG, &w, &hold, &hold, 0.0, 0.0, &p) {
            ComposedReward::Global(g) => assert_eq!(g, 0.1),
            _ => panic!("centralized is global"),
        }
    }

    #[test]
    fn beta_drops_exactly_the_prosocial_goal_term() {
        let p = params();
        let cfg = EnvConfig::default();
        let w = WorldState {
            prosocial: RobotState::new(0.3, 0.4, 0.7, 0.11),
            introspective: RobotState::new(-0.2, 0.1, -0.3, 0.08),
            step_index: 3,
        };
        let a_p = decode_action(4, &cfg).unwrap();
        let a_i = decode_action(7, &cfg).unwrap();
        let alpha = compose(RewardPrototype::Alpha, &w, &a_p, &a_i, 0.1, -0.02, &p);
        let beta = compose(RewardPrototype::Beta, &w, &a_p, &a_i, 0.1, -0.02, &p);
        match (alpha, beta) {
            (
                ComposedReward::PerAgent { r_p: ap, r_i: ai },
                ComposedReward::PerAgent { r_p: bp, r_i: bi },
            ) => {
                assert_eq!(ai.to_bits(), bi.to_bits());
                assert_eq!((bp + r_goal(&w.prosocial, &p)).to_bits(), ap.to_bits());
            }
            _ => panic!("both are per-agent"),
        }
    }

    #[test]
    fn centralized_is_exact_sum_of_alpha_pair() {
        let p = params();
        let cfg = EnvConfig::default();
        let w = WorldState {
            prosocial: RobotState::new(1.3, -0.4, 2.1, -0.05),
            introspective: RobotState::new(0.9, 0.6, -1.7, 0.2),
            step_index: 9,
        };
        let a_p = decode_action(1, &cfg).unwrap();
        let a_i = decode_action(8, &cfg).unwrap();
        let (r_p, r_i) = alpha_pair(&w, &a_p, &a_i, -0.04, 0.0, &p);
        match compose(RewardPrototype::CentralizedG, &w, &a_p, &a_i, -0.04, 0.0, &p) {
            ComposedReward::Global(g) => assert_eq!(g.to_bits(), (r_p + r_i).to_bits()),
            _ => panic!("centralized is global"),
        }
    }

    #[test]
    fn params_validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.zeta = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.mu_lower = -0.01;
        assert!(p.validate().is_err());
        let mut p = params();
        p.weight_v = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn with_env_copies_shared_fields() {
        let env = EnvConfig {
            sigma: 0.75,
            target_v: 0.1,
            target_theta: 0.5,
            ..EnvConfig::default()
        };
        let p = RewardParams::default().with_env(&env);
        assert_eq!(p.sigma, 0.75);
        assert_eq!(p.target_v, 0.1);
        assert_eq!(p.target_theta, 0.5);
        assert_eq!(p.mu_upper, 0.05);
    }
}
