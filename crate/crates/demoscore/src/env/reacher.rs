//! One-joint reacher: a single link rotating about the origin, with the
//! rotation direction restricted by the dynamics variant. State is
//! `[joint_angle, goal_x, goal_y]`; the goal never moves within an
//! episode. The action is the angular velocity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::traj::{Action, State};

use super::TerminationCause;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationSign {
    /// Joint angle can only decrease.
    Clockwise,
    /// Joint angle can only increase.
    Counterclockwise,
}

impl RotationSign {
    pub fn as_str(&self) -> &'static str {
        match self {
            RotationSign::Clockwise => "clockwise",
            RotationSign::Counterclockwise => "counterclockwise",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "clockwise" => Ok(RotationSign::Clockwise),
            "counterclockwise" => Ok(RotationSign::Counterclockwise),
            other => Err(Error::Config(format!("unknown rotation sign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reacher1JParams {
    pub rotation_sign: RotationSign,
    pub link_length: f64,
    /// Symmetric joint travel allowed on each side of the start angle.
    pub joint_limit: f64,
    /// Goals are sampled in two wedges around the vertical axis, each
    /// spanning this half-angle on either side.
    pub goal_wedge_halfangle: f64,
    pub angular_speed_limit: f64,
    pub start_angle: f64,
}

impl Reacher1JParams {
    pub fn standard(rotation_sign: RotationSign) -> Self {
        Reacher1JParams {
            rotation_sign,
            link_length: 1.0,
            joint_limit: 150.0f64.to_radians(),
            goal_wedge_halfangle: (0.5f64).atan(),
            angular_speed_limit: 2.0,
            start_angle: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.link_length > 0.0) {
            return Err(Error::Config("link length must be positive".into()));
        }
        if !(self.joint_limit > 0.0 && self.joint_limit <= std::f64::consts::PI) {
            return Err(Error::Config("joint limit must be in (0, pi]".into()));
        }
        if !(self.goal_wedge_halfangle > 0.0
            && self.goal_wedge_halfangle < std::f64::consts::FRAC_PI_2)
        {
            return Err(Error::Config("wedge half-angle must be in (0, pi/2)".into()));
        }
        if !(self.angular_speed_limit > 0.0) {
            return Err(Error::Config("angular speed limit must be positive".into()));
        }
        if !self.start_angle.is_finite() {
            return Err(Error::Config("start angle must be finite".into()));
        }
        Ok(())
    }

    fn joint_bounds(&self) -> (f64, f64) {
        (
            self.start_angle - self.joint_limit,
            self.start_angle + self.joint_limit,
        )
    }

    pub(super) fn reset(&self, rng: &mut ChaCha8Rng) -> State {
        let axis = if rng.gen_range(0..2) == 0 {
            std::f64::consts::FRAC_PI_2
        } else {
            -std::f64::consts::FRAC_PI_2
        };
        let offset = rng.gen_range(-self.goal_wedge_halfangle..=self.goal_wedge_halfangle);
        let angle = axis + offset;
        // Goals sit on the circle the end effector moves along, so any
        // goal whose angle is reachable can be hit exactly.
        let gx = self.link_length * angle.cos();
        let gy = self.link_length * angle.sin();
        State::new(vec![self.start_angle, gx, gy])
    }

    pub(super) fn clip_action(&self, a: &Action) -> Action {
        let mut v = a.values()[0].clamp(-self.angular_speed_limit, self.angular_speed_limit);
        v = match self.rotation_sign {
            RotationSign::Clockwise => v.min(0.0),
            RotationSign::Counterclockwise => v.max(0.0),
        };
        Action::new(vec![v])
    }

    pub(super) fn step(&self, dt: f64, s: &State, a: &Action) -> (State, Option<TerminationCause>) {
        let (phi, gx, gy) = (s.values()[0], s.values()[1], s.values()[2]);
        let omega = a.values()[0];
        let (lo, hi) = self.joint_bounds();
        let nphi = (phi + omega * dt).clamp(lo, hi);
        // Fixed-length episodes: the reward is already shaped by distance,
        // so there is no terminal event before the step budget runs out.
        (State::new(vec![nphi, gx, gy]), None)
    }

    pub(super) fn reward(&self, _s: &State, s_next: &State) -> f64 {
        let (phi, gx, gy) = (s_next.values()[0], s_next.values()[1], s_next.values()[2]);
        let ex = self.link_length * phi.cos();
        let ey = self.link_length * phi.sin();
        -((ex - gx).powi(2) + (ey - gy).powi(2)).sqrt()
    }

    /// Rotates toward the joint angle that minimizes end-effector
    /// distance to the goal, among angles reachable under the direction
    /// restriction and joint limits. May go "the long way around" when
    /// that ends up closer.
    pub(super) fn optimal_action(&self, dt: f64, s: &State) -> Action {
        let (phi, gx, gy) = (s.values()[0], s.values()[1], s.values()[2]);
        let goal_angle = gy.atan2(gx);
        let (lo, hi) = self.joint_bounds();
        let reachable = match self.rotation_sign {
            RotationSign::Clockwise => (lo, phi),
            RotationSign::Counterclockwise => (phi, hi),
        };

        let ang_dist = |a: f64| {
            let d = (a - goal_angle) % std::f64::consts::TAU;
            let d = d.abs();
            d.min(std::f64::consts::TAU - d)
        };
        let mut best = phi;
        let mut best_key = (ang_dist(phi), 0.0f64);
        for k in [-1.0f64, 0.0, 1.0] {
            let cand = (goal_angle + k * std::f64::consts::TAU).clamp(reachable.0, reachable.1);
            let key = (ang_dist(cand), (cand - phi).abs());
            if key.0 < best_key.0 - 1e-12
                || (key.0 < best_key.0 + 1e-12 && key.1 < best_key.1)
            {
                best = cand;
                best_key = key;
            }
        }
        Action::new(vec![
            ((best - phi) / dt).clamp(-self.angular_speed_limit, self.angular_speed_limit),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_params(sign: RotationSign) -> Reacher1JParams {
        Reacher1JParams::standard(sign)
    }

    #[test]
    fn standard_params_validate() {
        spec_params(RotationSign::Clockwise).validate().unwrap();
        spec_params(RotationSign::Counterclockwise).validate().unwrap();
    }

    #[test]
    fn joint_clamps_at_limit() {
        let p = spec_params(RotationSign::Counterclockwise);
        let near_limit = p.joint_limit - 0.01;
        let s = State::new(vec![near_limit, 0.0, 1.0]);
        let (next, _) = p.step(0.05, &s, &Action::new(vec![2.0]));
        assert_eq!(next.values()[0], p.joint_limit);
    }

    #[test]
    fn optimal_rotates_toward_reachable_goal() {
        let p = spec_params(RotationSign::Counterclockwise);
        let goal_angle = 1.2f64;
        let s = State::new(vec![0.0, goal_angle.cos(), goal_angle.sin()]);
        let a = p.optimal_action(0.05, &s);
        assert!(a.values()[0] > 0.0);
    }

    #[test]
    fn optimal_stays_still_for_unreachable_goal() {
        // Counterclockwise-only, goal slightly below the +x axis: rotating
        // counterclockwise to the limit ends farther than staying.
        let p = spec_params(RotationSign::Counterclockwise);
        let goal_angle = -1.2f64;
        let s = State::new(vec![0.0, goal_angle.cos(), goal_angle.sin()]);
        let a = p.optimal_action(0.05, &s);
        assert_eq!(a.values()[0], 0.0);
    }

    #[test]
    fn optimal_takes_long_way_when_closer() {
        // Goal just above the negative x-axis is nearer to +150 degrees
        // than to 0, so a counterclockwise-only agent should move.
        let p = spec_params(RotationSign::Counterclockwise);
        let goal_angle = std::f64::consts::PI - 0.1;
        let s = State::new(vec![0.0, goal_angle.cos(), goal_angle.sin()]);
        let a = p.optimal_action(0.05, &s);
        assert!(a.values()[0] > 0.0);
    }
}
