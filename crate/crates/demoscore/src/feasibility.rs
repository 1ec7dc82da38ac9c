//! Feasibility scoring: replay each demonstration through the target's
//! inverse dynamics, measure how far the replay drifts, and normalize
//! that distance into a weight in [0, 1].
//!
//! The normalization range is calibrated from the feasible sample set:
//! the lower threshold is the smallest replay distance any feasible
//! trajectory achieves, and the upper threshold is the largest distance
//! reached when the replay is additionally perturbed by a bounded amount
//! at every step. A distance below the range means "as trackable as a
//! feasible trajectory"; above it, "further off than any feasible
//! trajectory even with slack".

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::invdyn::{replay, InverseModel};
use crate::seeding::derive_seed;
use crate::traj::{
    fingerprint_set, mean_pairwise_distance, State, Trajectory, TrajectorySet,
};

/// Calibrated distance thresholds for the feasibility weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCalibration {
    pub min_distance: f64,
    pub max_distance: f64,
    /// Per-coordinate bound on the calibration perturbation.
    pub perturbation_scale: f64,
    pub seed: u64,
    /// Fingerprint of the feasible set the thresholds came from.
    pub source_fingerprint: String,
}

/// Replays like [`replay`], but after every environment step adds an
/// independent per-coordinate perturbation drawn uniformly from
/// `[-scale, +scale]`. The perturbed state is recorded and fed back as
/// the next replay state, so perturbations compound through dynamics.
pub fn perturbed_replay(
    model: &dyn InverseModel,
    target: &EnvSpec,
    demo: &Trajectory,
    scale: f64,
    seed: u64,
) -> Result<Trajectory> {
    if demo.states().len() < 2 {
        return Err(Error::InvalidTrajectory(
            "replay needs at least one transition".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = demo.len();
    let mut states = Vec::with_capacity(n + 1);
    states.push(demo.states()[0].clone());
    let mut current = demo.states()[0].clone();
    for t in 1..=n {
        let action = model.infer(&current, &demo.states()[t])?;
        if !action.is_finite() {
            return Err(Error::ReplayFailed { step: t });
        }
        let (next, _terminal) = target.step(&current, &action)?;
        let perturbed = State::new(
            next.values()
                .iter()
                .map(|v| v + rng.gen_range(-scale..=scale))
                .collect(),
        );
        states.push(perturbed.clone());
        current = perturbed;
    }
    Trajectory::new(states, None, demo.source_tag, demo.seed)
}

/// Calibrates the distance thresholds from the feasible set.
///
/// The lower threshold is the minimum replay distance over the set; the
/// upper threshold is the maximum perturbed-replay distance. Errors when
/// the two collapse (for example with a zero perturbation and an exact
/// model, where both are zero).
pub fn calibrate(
    model: &dyn InverseModel,
    target: &EnvSpec,
    feasible: &TrajectorySet,
    perturbation_scale: f64,
    seed: u64,
) -> Result<FeasibilityCalibration> {
    if feasible.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut min_distance = f64::INFINITY;
    let mut max_distance = f64::NEG_INFINITY;
    for (i, t) in feasible.trajectories.iter().enumerate() {
        let plain = replay(model, target, t)?;
        min_distance = min_distance.min(mean_pairwise_distance(t, &plain)?);
        let shaken = perturbed_replay(
            model,
            target,
            t,
            perturbation_scale,
            derive_seed(seed, i as u64),
        )?;
        max_distance = max_distance.max(mean_pairwise_distance(t, &shaken)?);
    }
    if !(max_distance > min_distance) {
        return Err(Error::DegenerateCalibration {
            min_distance,
            max_distance,
        });
    }
    Ok(FeasibilityCalibration {
        min_distance,
        max_distance,
        perturbation_scale,
        seed,
        source_fingerprint: fingerprint_set(feasible),
    })
}

/// The piecewise-linear map from replay distance to weight: 1 below the
/// calibrated range, 0 above it, linear in between (closed interval).
pub fn weight_from_distance(calib: &FeasibilityCalibration, distance: f64) -> f64 {
    if distance < calib.min_distance {
        1.0
    } else if distance > calib.max_distance {
        0.0
    } else {
        1.0 - (distance - calib.min_distance) / (calib.max_distance - calib.min_distance)
    }
}

/// Per-trajectory feasibility with the raw replay distance kept for
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFeasibility {
    pub id: usize,
    pub weight: f64,
    pub distance: f64,
}

/// Replay distance and weight for one demonstration.
pub fn feasibility_score(
    model: &dyn InverseModel,
    target: &EnvSpec,
    calib: &FeasibilityCalibration,
    demo: &Trajectory,
) -> Result<f64> {
    let replayed = replay(model, target, demo)?;
    let distance = mean_pairwise_distance(demo, &replayed)?;
    Ok(weight_from_distance(calib, distance))
}

/// Scores every trajectory in the set, preserving order. Ids are the
/// positions in the set.
pub fn score_set(
    model: &dyn InverseModel,
    target: &EnvSpec,
    calib: &FeasibilityCalibration,
    demos: &TrajectorySet,
) -> Result<Vec<TrajectoryFeasibility>> {
    if demos.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut out = Vec::with_capacity(demos.len());
    for (id, demo) in demos.trajectories.iter().enumerate() {
        let replayed = replay(model, target, demo)?;
        let distance = mean_pairwise_distance(demo, &replayed)?;
        out.push(TrajectoryFeasibility {
            id,
            weight: weight_from_distance(calib, distance),
            distance,
        });
    }
    Ok(out)
}
