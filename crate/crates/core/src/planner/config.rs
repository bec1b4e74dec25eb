use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub v_max: f64,
    /// Primitive horizon in seconds; also the pedestrian prediction horizon.
    pub horizon: f64,
    /// Fraction of the horizon that must be collision-free outright.
    pub safe_fraction: f64,
    /// Candidates per cycle, including the stop primitive.
    pub k: usize,
    pub w_idp: f64,
    pub w_fdp: f64,
    pub w_base: f64,
    pub decay_rate: f64,
    pub carry_threshold: f64,
    pub a_max: f64,
    pub omega_max: f64,
    /// Extra clearance demanded by the safety filter, meters.
    pub safety_margin: f64,
    /// Trajectory samples per pedestrian in the reaction game.
    pub idp_samples: usize,
    pub idp_eps: f64,
    pub idp_max_iters: usize,
    /// When false the individual-disturbance term is skipped entirely.
    pub idp_enabled: bool,
    /// Pedestrians farther than this from the robot's reachable disc stay
    /// out of the reaction game.
    pub game_radius: f64,
    /// Flow map horizon in seconds.
    pub flow_horizon: f64,
    /// Resolution of the cost-to-go grid.
    pub cost_to_go_resolution: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            v_max: 1.2,
            horizon: 4.0,
            safe_fraction: 0.5,
            k: 24,
            w_idp: 5.0,
            w_fdp: 1.0,
            w_base: 10.0,
            decay_rate: 0.85,
            carry_threshold: 0.3,
            a_max: 1.5,
            omega_max: 1.5,
            safety_margin: 0.1,
            idp_samples: 16,
            idp_eps: 0.05,
            idp_max_iters: 10,
            idp_enabled: true,
            game_radius: 8.0,
            flow_horizon: 8.0,
            cost_to_go_resolution: 0.25,
        }
    }
}

impl PlannerConfig {
    /// Disturbance-agnostic variant: same sampler and safety, no IDP/FDP.
    pub fn baseline() -> Self {
        PlannerConfig { w_idp: 0.0, w_fdp: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.v_max) || !pos(self.a_max) || !pos(self.omega_max) {
            return Err(invalid("v_max, a_max and omega_max must be positive"));
        }
        if !(self.horizon >= 0.25 && self.horizon <= 20.0) {
            return Err(invalid("horizon must lie in [0.25, 20] s"));
        }
        if !(self.safe_fraction > 0.0 && self.safe_fraction < 1.0) {
            return Err(invalid("safe_fraction must lie strictly between 0 and 1"));
        }
        if self.k < 4 {
            return Err(invalid("at least 4 candidates per cycle are required"));
        }
        if ![self.w_idp, self.w_fdp, self.w_base, self.safety_margin].iter().all(|w| *w >= 0.0 && w.is_finite()) {
            return Err(invalid("weights and margins must be non-negative"));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) || !(0.0..=1.0).contains(&self.carry_threshold) {
            return Err(invalid("decay_rate must lie in (0, 1] and carry_threshold in [0, 1]"));
        }
        if self.idp_samples < 2 || !pos(self.idp_eps) || self.idp_max_iters == 0 {
            return Err(invalid("reaction game needs >= 2 samples, positive eps and iterations"));
        }
        if !(self.flow_horizon >= self.horizon) || !pos(self.game_radius) || !pos(self.cost_to_go_resolution) {
            return Err(invalid("flow horizon must cover the planning horizon"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: PlannerConfig = crate::crowdsim::parse_config_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub(crate) fn uses_idp(&self) -> bool {
        self.idp_enabled && self.w_idp > 0.0
    }

    pub(crate) fn uses_fdp(&self) -> bool {
        self.w_fdp > 0.0
    }
}
