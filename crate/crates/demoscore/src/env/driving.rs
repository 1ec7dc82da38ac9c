//! 2D driving: a car at fixed speed steered toward a goal disc while
//! avoiding an axis-aligned obstacle. State is `[x, y, heading]`, the
//! action is the steering rate. Dynamics variants differ only in speed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::traj::{Action, State};

use super::TerminationCause;

/// Clearance band used when testing whether a straight leg passes the
/// obstacle, and the extra margin for detour waypoints.
const CLEARANCE: f64 = 0.25;
const WAYPOINT_MARGIN: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivingVariant {
    Slow,
    Fast,
}

impl DrivingVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            DrivingVariant::Slow => "slow",
            DrivingVariant::Fast => "fast",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "slow" => Ok(DrivingVariant::Slow),
            "fast" => Ok(DrivingVariant::Fast),
            other => Err(Error::Config(format!("unknown driving variant `{other}`"))),
        }
    }

    pub fn default_speed(&self) -> f64 {
        match self {
            DrivingVariant::Slow => 1.0,
            DrivingVariant::Fast => 2.0,
        }
    }
}

/// Axis-aligned rectangle, inclusive on its boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn inflate(&self, by: f64) -> Rect {
        Rect {
            min: [self.min[0] - by, self.min[1] - by],
            max: [self.max[0] + by, self.max[1] + by],
        }
    }

    fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.min[0], self.min[1]],
            [self.max[0], self.min[1]],
            [self.min[0], self.max[1]],
            [self.max[0], self.max[1]],
        ]
    }

    /// Distance from a point to the rectangle (zero inside).
    fn distance_to(&self, p: [f64; 2]) -> f64 {
        let cx = p[0].clamp(self.min[0], self.max[0]);
        let cy = p[1].clamp(self.min[1], self.max[1]);
        ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
    }

    fn is_valid(&self) -> bool {
        self.min[0] <= self.max[0] && self.min[1] <= self.max[1]
    }

    fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }
}

/// Liang-Barsky segment/rectangle intersection test.
fn segment_intersects_rect(a: [f64; 2], b: [f64; 2], r: &Rect) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-dx, a[0] - r.min[0]),
        (dx, r.max[0] - a[0]),
        (-dy, a[1] - r.min[1]),
        (dy, r.max[1] - a[1]),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

fn wrap_to_pi(angle: f64) -> f64 {
    angle - std::f64::consts::TAU * (angle / std::f64::consts::TAU).round()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Driving2DParams {
    pub variant: DrivingVariant,
    /// Forward speed, length units per time unit. Fixed per variant; the
    /// agent only steers.
    pub speed: f64,
    /// Bound on the steering rate, radians per time unit.
    pub steer_limit: f64,
    pub goal_center: [f64; 2],
    pub goal_radius: f64,
    pub obstacle: Rect,
    pub world_bounds: Rect,
    /// Initial positions are drawn uniformly from one of these regions
    /// (region chosen uniformly at random).
    pub start_regions: Vec<Rect>,
    /// Initial headings are drawn uniformly from this closed interval.
    pub heading_range: (f64, f64),
    /// Reward weights for the goal, obstacle, and out-of-bounds
    /// indicators plus the per-step constant.
    pub alpha: [f64; 4],
}

impl Driving2DParams {
    pub fn standard(variant: DrivingVariant) -> Self {
        Driving2DParams {
            variant,
            speed: variant.default_speed(),
            steer_limit: 4.0,
            goal_center: [7.0, 7.0],
            goal_radius: 0.6,
            obstacle: Rect {
                min: [3.0, 3.0],
                max: [4.4, 4.4],
            },
            world_bounds: Rect {
                min: [0.0, 0.0],
                max: [10.0, 10.0],
            },
            start_regions: vec![
                Rect {
                    min: [4.8, 4.8],
                    max: [5.8, 5.8],
                },
                Rect {
                    min: [1.0, 1.0],
                    max: [2.0, 2.0],
                },
            ],
            heading_range: (0.0, std::f64::consts::TAU),
            alpha: [100.0, -50.0, -50.0, -1.0],
        }
    }

    /// Variant geometry where the far region cannot reach the goal within
    /// a 100-step budget at slow speed, while the near region is a few
    /// steps away. The obstacle sits off every start-to-goal line.
    pub fn two_region(variant: DrivingVariant) -> Self {
        Driving2DParams {
            variant,
            speed: variant.default_speed(),
            steer_limit: 4.0,
            goal_center: [8.6, 8.6],
            goal_radius: 0.3,
            obstacle: Rect {
                min: [2.0, 6.0],
                max: [3.0, 7.0],
            },
            world_bounds: Rect {
                min: [0.0, 0.0],
                max: [10.0, 10.0],
            },
            start_regions: vec![
                Rect {
                    min: [7.5, 7.5],
                    max: [7.9, 7.9],
                },
                Rect {
                    min: [0.6, 0.6],
                    max: [1.2, 1.2],
                },
            ],
            heading_range: (0.0, std::f64::consts::TAU),
            alpha: [100.0, -50.0, -50.0, -1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0) {
            return Err(Error::Config("driving speed must be positive".into()));
        }
        if !(self.steer_limit > 0.0) {
            return Err(Error::Config("steer limit must be positive".into()));
        }
        if !(self.goal_radius > 0.0) {
            return Err(Error::Config("goal radius must be positive".into()));
        }
        if !self.world_bounds.is_valid() || !self.obstacle.is_valid() {
            return Err(Error::Config("degenerate rectangle".into()));
        }
        let goal_box = Rect {
            min: [
                self.goal_center[0] - self.goal_radius,
                self.goal_center[1] - self.goal_radius,
            ],
            max: [
                self.goal_center[0] + self.goal_radius,
                self.goal_center[1] + self.goal_radius,
            ],
        };
        if !self.world_bounds.contains_rect(&goal_box) {
            return Err(Error::Config("goal region outside world bounds".into()));
        }
        if !self.world_bounds.contains_rect(&self.obstacle) {
            return Err(Error::Config("obstacle outside world bounds".into()));
        }
        if self.obstacle.distance_to(self.goal_center) <= self.goal_radius {
            return Err(Error::Config("goal region intersects obstacle".into()));
        }
        if self.start_regions.is_empty() {
            return Err(Error::Config("no start regions declared".into()));
        }
        for r in &self.start_regions {
            if !r.is_valid() || !self.world_bounds.contains_rect(r) {
                return Err(Error::Config("start region outside world bounds".into()));
            }
        }
        if self.heading_range.1 < self.heading_range.0 {
            return Err(Error::Config("empty heading range".into()));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("non-finite reward weight".into()));
        }
        Ok(())
    }

    pub(super) fn reset(&self, rng: &mut ChaCha8Rng) -> State {
        let region = &self.start_regions[rng.gen_range(0..self.start_regions.len())];
        let x = rng.gen_range(region.min[0]..=region.max[0]);
        let y = rng.gen_range(region.min[1]..=region.max[1]);
        let heading = rng.gen_range(self.heading_range.0..=self.heading_range.1);
        State::new(vec![x, y, heading])
    }

    pub(super) fn clip_action(&self, a: &Action) -> Action {
        Action::new(vec![a.values()[0].clamp(-self.steer_limit, self.steer_limit)])
    }

    pub(super) fn step(&self, dt: f64, s: &State, a: &Action) -> (State, Option<TerminationCause>) {
        let (x, y, theta) = (s.values()[0], s.values()[1], s.values()[2]);
        let steer = a.values()[0];
        let nx = x + self.speed * theta.cos() * dt;
        let ny = y + self.speed * theta.sin() * dt;
        let ntheta = theta + steer * dt;
        let next = State::new(vec![nx, ny, ntheta]);
        (next, self.terminal_at([nx, ny]))
    }

    fn terminal_at(&self, p: [f64; 2]) -> Option<TerminationCause> {
        if self.in_goal(p) {
            Some(TerminationCause::Goal)
        } else if self.obstacle.contains(p) {
            Some(TerminationCause::Obstacle)
        } else if !self.world_bounds.contains(p) {
            Some(TerminationCause::OutOfBounds)
        } else {
            None
        }
    }

    fn in_goal(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.goal_center[0];
        let dy = p[1] - self.goal_center[1];
        (dx * dx + dy * dy).sqrt() <= self.goal_radius
    }

    pub(super) fn reward(&self, _s: &State, s_next: &State) -> f64 {
        let p = [s_next.values()[0], s_next.values()[1]];
        let goal = if self.in_goal(p) { 1.0 } else { 0.0 };
        let obstacle = if self.obstacle.contains(p) { 1.0 } else { 0.0 };
        let out = if !self.world_bounds.contains(p) { 1.0 } else { 0.0 };
        self.alpha[0] * goal + self.alpha[1] * obstacle + self.alpha[2] * out + self.alpha[3]
    }

    /// Pure-pursuit steering toward the goal, detouring around the
    /// obstacle via an inflated corner when the direct line is blocked.
    pub(super) fn optimal_action(&self, dt: f64, s: &State) -> Action {
        let p = [s.values()[0], s.values()[1]];
        let theta = s.values()[2];
        let target = self.steer_target(p);
        let desired = (target[1] - p[1]).atan2(target[0] - p[0]);
        let turn = wrap_to_pi(desired - theta);
        Action::new(vec![(turn / dt).clamp(-self.steer_limit, self.steer_limit)])
    }

    fn steer_target(&self, p: [f64; 2]) -> [f64; 2] {
        let clearance = self.obstacle.inflate(CLEARANCE);
        if !segment_intersects_rect(p, self.goal_center, &clearance) {
            return self.goal_center;
        }
        let corners = self.obstacle.inflate(WAYPOINT_MARGIN).corners();
        let leg_len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let mut best: Option<(bool, f64, [f64; 2])> = None;
        for c in corners {
            let clears = !segment_intersects_rect(p, c, &clearance)
                && !segment_intersects_rect(c, self.goal_center, &clearance);
            let total = leg_len(p, c) + leg_len(c, self.goal_center);
            // Prefer corners with both legs clear, then shortest total.
            let candidate = (clears, total, c);
            best = Some(match best {
                None => candidate,
                Some(cur) => {
                    if (candidate.0 && !cur.0) || (candidate.0 == cur.0 && candidate.1 < cur.1) {
                        candidate
                    } else {
                        cur
                    }
                }
            });
        }
        best.map(|(_, _, c)| c).unwrap_or(self.goal_center)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_rect_intersection() {
        let r = Rect {
            min: [1.0, 1.0],
            max: [2.0, 2.0],
        };
        assert!(segment_intersects_rect([0.0, 0.0], [3.0, 3.0], &r));
        assert!(!segment_intersects_rect([0.0, 0.0], [3.0, 0.5], &r));
        assert!(segment_intersects_rect([1.5, 1.5], [5.0, 5.0], &r));
        assert!(!segment_intersects_rect([0.0, 3.0], [3.0, 3.0], &r));
    }

    #[test]
    fn wrap_angle_principal_value() {
        // 3*pi is equivalent to pi; either sign of the boundary is fine.
        assert!((wrap_to_pi(3.0 * std::f64::consts::PI).abs() - std::f64::consts::PI).abs() < 1e-12);
        assert!(wrap_to_pi(0.5) == 0.5);
        assert!((wrap_to_pi(-7.0) - (-7.0 + std::f64::consts::TAU)).abs() < 1e-12);
        for x in [-10.0, -3.2, 0.0, 1.0, 9.9] {
            let w = wrap_to_pi(x);
            assert!(w.abs() <= std::f64::consts::PI + 1e-12);
            assert!(((x - w) / std::f64::consts::TAU).round() * std::f64::consts::TAU - (x - w) < 1e-9);
        }
    }

    #[test]
    fn standard_params_validate() {
        Driving2DParams::standard(DrivingVariant::Slow).validate().unwrap();
        Driving2DParams::standard(DrivingVariant::Fast).validate().unwrap();
        Driving2DParams::two_region(DrivingVariant::Slow).validate().unwrap();
    }

    #[test]
    fn validation_rejects_goal_on_obstacle() {
        let mut p = Driving2DParams::standard(DrivingVariant::Slow);
        p.goal_center = [3.5, 3.5];
        assert!(p.validate().is_err());
    }

    #[test]
    fn blocked_line_gets_a_waypoint() {
        let p = Driving2DParams::standard(DrivingVariant::Slow);
        // Far-region start: the diagonal to the goal crosses the obstacle.
        let target = p.steer_target([1.5, 1.5]);
        assert_ne!(target, p.goal_center);
        // Near-region start has a clear line.
        let target = p.steer_target([5.3, 5.3]);
        assert_eq!(target, p.goal_center);
    }
}
