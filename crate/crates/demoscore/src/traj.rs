//! Trajectory and transition data model shared by every other module.
//!
//! Demonstrations are sequences of states; actions are optional and only
//! ever present on sets used to fit the inverse dynamics model. All types
//! are immutable after construction.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A fixed-length vector of finite reals in environment-specific units.
#[derive(Debug, Clone, PartialEq)]
pub struct State(Vec<f64>);

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        State(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// A fixed-length action vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Action(Vec<f64>);

impl Action {
    pub fn new(values: Vec<f64>) -> Self {
        Action(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Euclidean distance between two states of equal dimension.
pub fn l2_distance(a: &State, b: &State) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sq.sqrt())
}

/// Where a demonstration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SourceTag {
    TargetOptimal,
    TargetSuboptimal,
    OtherDynamics,
    Unknown,
}

impl SourceTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceTag::TargetOptimal => "target-optimal",
            SourceTag::TargetSuboptimal => "target-suboptimal",
            SourceTag::OtherDynamics => "other-dynamics",
            SourceTag::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "target-optimal" => Ok(SourceTag::TargetOptimal),
            "target-suboptimal" => Ok(SourceTag::TargetSuboptimal),
            "other-dynamics" => Ok(SourceTag::OtherDynamics),
            "unknown" => Ok(SourceTag::Unknown),
            other => Err(Error::Config(format!("unknown source tag `{other}`"))),
        }
    }
}

impl std::fmt::Display for SourceTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An ordered sequence of states, optionally with the actions that
/// produced each transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<State>,
    actions: Option<Vec<Action>>,
    pub source_tag: SourceTag,
    pub seed: u64,
}

impl Trajectory {
    /// Builds a trajectory, checking finiteness and shape invariants.
    /// When actions are present there must be exactly one per transition.
    pub fn new(
        states: Vec<State>,
        actions: Option<Vec<Action>>,
        source_tag: SourceTag,
        seed: u64,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidTrajectory("no states".into()));
        }
        let dim = states[0].dim();
        for (i, s) in states.iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
            if !s.is_finite() {
                return Err(Error::InvalidTrajectory(format!(
                    "non-finite state at step {i}"
                )));
            }
        }
        if let Some(acts) = &actions {
            if acts.len() != states.len() - 1 {
                return Err(Error::InvalidTrajectory(format!(
                    "{} actions for {} states",
                    acts.len(),
                    states.len()
                )));
            }
            let adim = acts.first().map(|a| a.dim()).unwrap_or(0);
            for (i, a) in acts.iter().enumerate() {
                if a.dim() != adim {
                    return Err(Error::DimensionMismatch {
                        expected: adim,
                        got: a.dim(),
                    });
                }
                if !a.is_finite() {
                    return Err(Error::InvalidTrajectory(format!(
                        "non-finite action at step {i}"
                    )));
                }
            }
        }
        Ok(Trajectory {
            states,
            actions,
            source_tag,
            seed,
        })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn actions(&self) -> Option<&[Action]> {
        self.actions.as_deref()
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actions
            .as_ref()
            .and_then(|a| a.first())
            .map(|a| a.dim())
            .unwrap_or(0)
    }

    /// Number of transitions (one less than the number of states).
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A copy with the action sequence removed.
    pub fn without_actions(&self) -> Trajectory {
        Trajectory {
            states: self.states.clone(),
            actions: None,
            source_tag: self.source_tag,
            seed: self.seed,
        }
    }
}

/// The consecutive state pairs of a trajectory, in order.
pub fn transitions(t: &Trajectory) -> Result<Vec<(&State, &State)>> {
    if t.states.len() < 2 {
        return Err(Error::InvalidTrajectory(
            "fewer than 2 states: no transition exists".into(),
        ));
    }
    Ok(t.states.windows(2).map(|w| (&w[0], &w[1])).collect())
}

/// Mean L2 distance between states at matching steps, taken over the
/// common prefix when lengths differ.
pub fn mean_pairwise_distance(x: &Trajectory, y: &Trajectory) -> Result<f64> {
    let m = x.states.len().min(y.states.len());
    let mut total = 0.0;
    for t in 0..m {
        total += l2_distance(&x.states[t], &y.states[t])?;
    }
    Ok(total / m as f64)
}

/// Which role a set of trajectories plays in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRole {
    /// The demonstrations to be scored and imitated.
    Demonstrations,
    /// Random rollouts from the target environment, with actions, used to
    /// fit the inverse dynamics model and calibrate distances.
    FeasibleSamples,
}

impl SetRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            SetRole::Demonstrations => "demonstrations",
            SetRole::FeasibleSamples => "feasible-samples",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "demonstrations" => Ok(SetRole::Demonstrations),
            "feasible-samples" => Ok(SetRole::FeasibleSamples),
            other => Err(Error::Config(format!("unknown set role `{other}`"))),
        }
    }
}

/// A collection of trajectories with a declared role.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub trajectories: Vec<Trajectory>,
    pub role: SetRole,
}

impl TrajectorySet {
    pub fn new(trajectories: Vec<Trajectory>, role: SetRole) -> Result<Self> {
        if role == SetRole::FeasibleSamples {
            for (i, t) in trajectories.iter().enumerate() {
                if t.actions.is_none() {
                    return Err(Error::MissingActions(format!(
                        "feasible-samples trajectory {i} has no actions"
                    )));
                }
            }
        }
        Ok(TrajectorySet { trajectories, role })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

// ---------------------------------------------------------------------------
// File format
//
// Line-oriented text. A set-level header, then per trajectory a header line
// followed by one line per step. Values are printed with Rust's shortest
// round-trip decimal formatting, so parsing recovers them bit-exactly.
//
//   set role=demonstrations count=2
//   traj len=3 state_dim=2 action_dim=1 source_tag=target-optimal seed=7
//   0.1 0.2 0.5        <- state_0, then the action taken from it
//   0.3 0.4 -0.5
//   0.5 0.6            <- final state, no action
//   ...
// ---------------------------------------------------------------------------

fn fmt_values(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
}

pub fn write_trajectory_set<W: Write>(w: &mut W, set: &TrajectorySet) -> Result<()> {
    let mut buf = String::new();
    let _ = writeln!(buf, "set role={} count={}", set.role.as_str(), set.len());
    for t in &set.trajectories {
        let _ = writeln!(
            buf,
            "traj len={} state_dim={} action_dim={} source_tag={} seed={}",
            t.states.len(),
            t.state_dim(),
            t.action_dim(),
            t.source_tag,
            t.seed
        );
        let n = t.states.len();
        for (i, s) in t.states.iter().enumerate() {
            let mut line = String::new();
            fmt_values(&mut line, s.values());
            if let Some(acts) = &t.actions {
                if i < n - 1 {
                    line.push(' ');
                    fmt_values(&mut line, acts[i].values());
                }
            }
            let _ = writeln!(buf, "{line}");
        }
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn save_trajectory_set(path: &Path, set: &TrajectorySet) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_trajectory_set(&mut f, set)
}

struct LineParser<'a> {
    path: &'a str,
    line_no: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: self.line_no,
            message: message.into(),
        }
    }

    fn kv<'b>(&self, field: &str, token: Option<&'b str>, key: &str) -> Result<&'b str> {
        let token = token.ok_or_else(|| self.err(format!("missing `{key}` in {field}")))?;
        token
            .strip_prefix(&format!("{key}="))
            .ok_or_else(|| self.err(format!("expected `{key}=...`, got `{token}`")))
    }
}

pub fn read_trajectory_set<R: Read>(r: R, path: &str) -> Result<TrajectorySet> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let mut p = LineParser { path, line_no: 0 };

    let mut next_line = |p: &mut LineParser| -> Result<Option<String>> {
        p.line_no += 1;
        match lines.next() {
            None => Ok(None),
            Some(Ok(l)) => Ok(Some(l)),
            Some(Err(e)) => Err(Error::Io(e)),
        }
    };

    let header = next_line(&mut p)?.ok_or_else(|| p.err("empty file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("set") {
        return Err(p.err("expected `set` header"));
    }
    let role = SetRole::parse(p.kv("set header", toks.next(), "role")?)?;
    let count: usize = p
        .kv("set header", toks.next(), "count")?
        .parse()
        .map_err(|_| p.err("bad count"))?;

    let mut trajectories = Vec::with_capacity(count);
    for _ in 0..count {
        let th = next_line(&mut p)?.ok_or_else(|| p.err("missing trajectory header"))?;
        let mut toks = th.split_whitespace();
        if toks.next() != Some("traj") {
            return Err(p.err("expected `traj` header"));
        }
        let len: usize = p
            .kv("traj header", toks.next(), "len")?
            .parse()
            .map_err(|_| p.err("bad len"))?;
        let state_dim: usize = p
            .kv("traj header", toks.next(), "state_dim")?
            .parse()
            .map_err(|_| p.err("bad state_dim"))?;
        let action_dim: usize = p
            .kv("traj header", toks.next(), "action_dim")?
            .parse()
            .map_err(|_| p.err("bad action_dim"))?;
        let source_tag = SourceTag::parse(p.kv("traj header", toks.next(), "source_tag")?)?;
        let seed: u64 = p
            .kv("traj header", toks.next(), "seed")?
            .parse()
            .map_err(|_| p.err("bad seed"))?;

        let mut states = Vec::with_capacity(len);
        let mut actions = if action_dim > 0 {
            Some(Vec::with_capacity(len.saturating_sub(1)))
        } else {
            None
        };
        for i in 0..len {
            let line = next_line(&mut p)?.ok_or_else(|| p.err("missing step line"))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| p.err(format!("bad number: {e}")))?;
            let expected = if action_dim > 0 && i < len - 1 {
                state_dim + action_dim
            } else {
                state_dim
            };
            if values.len() != expected {
                return Err(p.err(format!(
                    "expected {expected} values, got {}",
                    values.len()
                )));
            }
            states.push(State::new(values[..state_dim].to_vec()));
            if action_dim > 0 && i < len - 1 {
                actions
                    .as_mut()
                    .unwrap()
                    .push(Action::new(values[state_dim..].to_vec()));
            }
        }
        trajectories.push(Trajectory::new(states, actions, source_tag, seed)?);
    }
    TrajectorySet::new(trajectories, role)
}

pub fn load_trajectory_set(path: &Path) -> Result<TrajectorySet> {
    let f = std::fs::File::open(path)?;
    read_trajectory_set(f, &path.display().to_string())
}

/// SHA-256 over the set's serialized form, as lowercase hex. Used to pin
/// datasets in manifests and calibration records.
pub fn fingerprint_set(set: &TrajectorySet) -> String {
    use sha2::{Digest, Sha256};
    let mut buf = Vec::new();
    write_trajectory_set(&mut buf, set).expect("in-memory write");
    hex::encode(Sha256::digest(&buf))
}
