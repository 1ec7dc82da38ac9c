//! Deterministic kinematic environments with interchangeable dynamics
//! variants, transition-based rewards, and hand-crafted demonstration
//! policies.
//!
//! Environments are stateless value objects: [`EnvSpec::step`] and
//! [`EnvSpec::reward`] are pure functions of their arguments, and every
//! rollout is fully determined by `(spec, seed, policy)`.

mod driving;
mod reacher;

pub use driving::{Driving2DParams, DrivingVariant, Rect};
pub use reacher::{Reacher1JParams, RotationSign};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::traj::{Action, SetRole, SourceTag, State, Trajectory, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvFamily {
    Driving2d,
    Reacher1j,
}

impl EnvFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnvFamily::Driving2d => "driving2d",
            EnvFamily::Reacher1j => "reacher1j",
        }
    }
}

/// Family-specific parameters; carries the dynamics-variant label.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    Driving2d(Driving2DParams),
    Reacher1j(Reacher1JParams),
}

/// Environment description: family parameters plus horizon, step size,
/// discount, and the seed namespace for initial-state draws.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Steps per episode.
    pub horizon: usize,
    /// Integration step, time units.
    pub dt: f64,
    /// Discount factor used when scoring returns.
    pub gamma: f64,
    pub seed: u64,
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TerminationCause {
    Goal,
    Obstacle,
    OutOfBounds,
    Timeout,
}

impl TerminationCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationCause::Goal => "goal",
            TerminationCause::Obstacle => "obstacle",
            TerminationCause::OutOfBounds => "out-of-bounds",
            TerminationCause::Timeout => "timeout",
        }
    }
}

impl EnvSpec {
    pub fn family(&self) -> EnvFamily {
        match self.kind {
            EnvKind::Driving2d(_) => EnvFamily::Driving2d,
            EnvKind::Reacher1j(_) => EnvFamily::Reacher1j,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match &self.kind {
            EnvKind::Driving2d(p) => p.variant.as_str(),
            EnvKind::Reacher1j(p) => p.rotation_sign.as_str(),
        }
    }

    /// `family/variant`, used to tag models with the dynamics they fit.
    pub fn dynamics_tag(&self) -> String {
        format!("{}/{}", self.family().as_str(), self.variant_name())
    }

    pub fn state_dim(&self) -> usize {
        3
    }

    pub fn action_dim(&self) -> usize {
        1
    }

    /// Half-width of the symmetric action box, per action dimension.
    pub fn action_scale(&self) -> Vec<f64> {
        match &self.kind {
            EnvKind::Driving2d(p) => vec![p.steer_limit],
            EnvKind::Reacher1j(p) => vec![p.angular_speed_limit],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config("gamma must be in (0, 1]".into()));
        }
        match &self.kind {
            EnvKind::Driving2d(p) => p.validate(),
            EnvKind::Reacher1j(p) => p.validate(),
        }
    }

    /// Draws an initial state. The seed fully determines the output.
    pub fn reset(&self, rng_seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        match &self.kind {
            EnvKind::Driving2d(p) => p.reset(&mut rng),
            EnvKind::Reacher1j(p) => p.reset(&mut rng),
        }
    }

    /// Clips an action into the variant's executable set (box bounds plus
    /// any sign restriction). This is the action the environment executes.
    pub fn clip_action(&self, a: &Action) -> Result<Action> {
        if a.dim() != self.action_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.action_dim(),
                got: a.dim(),
            });
        }
        if !a.is_finite() {
            return Err(Error::InvalidAction("non-finite action".into()));
        }
        Ok(match &self.kind {
            EnvKind::Driving2d(p) => p.clip_action(a),
            EnvKind::Reacher1j(p) => p.clip_action(a),
        })
    }

    /// Advances one step. Out-of-box actions are clipped. Returns the next
    /// state and `Some(cause)` when the episode should end.
    pub fn step(&self, s: &State, a: &Action) -> Result<(State, Option<TerminationCause>)> {
        if s.dim() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                got: s.dim(),
            });
        }
        if !s.is_finite() {
            return Err(Error::InvalidState("non-finite state".into()));
        }
        let a = self.clip_action(a)?;
        Ok(match &self.kind {
            EnvKind::Driving2d(p) => p.step(self.dt, s, &a),
            EnvKind::Reacher1j(p) => p.step(self.dt, s, &a),
        })
    }

    /// Transition reward; a pure function of `(s, s_next)`.
    pub fn reward(&self, s: &State, s_next: &State) -> f64 {
        match &self.kind {
            EnvKind::Driving2d(p) => p.reward(s, s_next),
            EnvKind::Reacher1j(p) => p.reward(s, s_next),
        }
    }
}

/// A controller queried once per step. The rollout supplies the RNG so
/// stochastic policies stay reproducible.
pub trait ActionPolicy {
    /// Called once before each rollout; stateful controllers reset here.
    fn begin_episode(&mut self) {}
    fn action(&mut self, s: &State, rng: &mut ChaCha8Rng) -> Action;
}

/// Uniform draws from the action box.
pub struct RandomPolicy {
    scale: Vec<f64>,
}

impl RandomPolicy {
    pub fn new(spec: &EnvSpec) -> Self {
        RandomPolicy {
            scale: spec.action_scale(),
        }
    }
}

impl ActionPolicy for RandomPolicy {
    fn action(&mut self, _s: &State, rng: &mut ChaCha8Rng) -> Action {
        Action::new(self.scale.iter().map(|b| rng.gen_range(-b..=*b)).collect())
    }
}

/// Demonstration quality for [`demo_policy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemoQuality {
    Optimal,
    /// Optimal controller corrupted with action noise and no-op segments.
    /// `noise_level` in [0, 1] spans near-optimal to near-random.
    Suboptimal { noise_level: f64 },
}

/// Hand-crafted controller for a family, optionally corrupted.
pub struct DemoController {
    spec: EnvSpec,
    noise_level: f64,
    noop_left: usize,
}

/// Builds the hand-crafted demonstration policy for the environment.
pub fn demo_policy(spec: &EnvSpec, quality: DemoQuality) -> Result<DemoController> {
    let noise_level = match quality {
        DemoQuality::Optimal => 0.0,
        DemoQuality::Suboptimal { noise_level } => {
            if !(0.0..=1.0).contains(&noise_level) {
                return Err(Error::UnsupportedQuality(format!(
                    "suboptimal noise level {noise_level} outside [0, 1]"
                )));
            }
            noise_level
        }
    };
    Ok(DemoController {
        spec: spec.clone(),
        noise_level,
        noop_left: 0,
    })
}

impl ActionPolicy for DemoController {
    fn begin_episode(&mut self) {
        self.noop_left = 0;
    }

    fn action(&mut self, s: &State, rng: &mut ChaCha8Rng) -> Action {
        let base = match &self.spec.kind {
            EnvKind::Driving2d(p) => p.optimal_action(self.spec.dt, s),
            EnvKind::Reacher1j(p) => p.optimal_action(self.spec.dt, s),
        };
        if self.noise_level == 0.0 {
            return base;
        }
        // Corruption: occasional no-op segments plus uniform action noise,
        // both scaled by the per-trajectory level.
        if self.noop_left > 0 {
            self.noop_left -= 1;
            // Still consume the noise draw so segment starts do not shift
            // the remaining stream.
            let _ = rng.gen::<f64>();
            return Action::new(vec![0.0; base.dim()]);
        }
        if rng.gen::<f64>() < 0.25 * self.noise_level {
            self.noop_left = rng.gen_range(2..=8);
            return Action::new(vec![0.0; base.dim()]);
        }
        let scale = self.spec.action_scale();
        let values = base
            .values()
            .iter()
            .zip(&scale)
            .map(|(v, b)| {
                let amp = 1.5 * self.noise_level * b;
                v + rng.gen_range(-amp..=amp)
            })
            .collect();
        Action::new(values)
    }
}

/// Runs one episode. The seed determines both the initial state and any
/// policy noise. Episodes end early on a terminal step; the step budget
/// otherwise exhausts at `spec.horizon`.
pub fn rollout(
    spec: &EnvSpec,
    policy: &mut dyn ActionPolicy,
    seed: u64,
    record_actions: bool,
    tag: SourceTag,
) -> Result<(Trajectory, TerminationCause)> {
    let mut s = spec.reset(derive_seed(seed, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    policy.begin_episode();

    let mut states = vec![s.clone()];
    let mut actions = record_actions.then(Vec::new);
    let mut cause = TerminationCause::Timeout;
    for _ in 0..spec.horizon {
        let proposed = policy.action(&s, &mut rng);
        let executed = spec.clip_action(&proposed)?;
        let (next, term) = spec.step(&s, &executed)?;
        if let Some(acts) = actions.as_mut() {
            acts.push(executed);
        }
        states.push(next.clone());
        s = next;
        if let Some(c) = term {
            cause = c;
            break;
        }
    }
    Ok((Trajectory::new(states, actions, tag, seed)?, cause))
}

/// Collects `n` rollouts into a set. Each episode gets its own derived
/// seed, so the whole set is a pure function of `(spec, policy, seed)`.
pub fn collect(
    spec: &EnvSpec,
    policy: &mut dyn ActionPolicy,
    n: usize,
    record_actions: bool,
    seed: u64,
    role: SetRole,
    tag: SourceTag,
) -> Result<TrajectorySet> {
    let mut trajectories = Vec::with_capacity(n);
    for i in 0..n {
        let (t, _) = rollout(spec, policy, derive_seed(seed, i as u64), record_actions, tag)?;
        trajectories.push(t);
    }
    TrajectorySet::new(trajectories, role)
}

/// Standard slow/fast driving environment used throughout the examples
/// and tests. The two start regions sit at different distances from the
/// goal, so best-achievable returns depend on where an episode begins.
pub fn standard_driving(variant: DrivingVariant) -> EnvSpec {
    EnvSpec {
        kind: EnvKind::Driving2d(Driving2DParams::standard(variant)),
        horizon: 100,
        dt: 0.1,
        gamma: 0.99,
        seed: 0,
    }
}

/// Two-region driving scenario with the far region placed beyond reach
/// of the goal within the step budget. Every far-start episode earns the
/// same return, which makes best-in-neighborhood scoring exact there.
pub fn two_region_driving(variant: DrivingVariant) -> EnvSpec {
    EnvSpec {
        kind: EnvKind::Driving2d(Driving2DParams::two_region(variant)),
        horizon: 100,
        dt: 0.1,
        gamma: 0.99,
        seed: 0,
    }
}

/// Standard one-joint reacher with direction-restricted rotation.
pub fn standard_reacher(sign: RotationSign) -> EnvSpec {
    EnvSpec {
        kind: EnvKind::Reacher1j(Reacher1JParams::standard(sign)),
        horizon: 80,
        dt: 0.05,
        gamma: 0.99,
        seed: 0,
    }
}
