//! Event-driven evolution of the hard-point system.
//!
//! Between collisions every particle moves freely. The engine repeatedly
//! finds the earliest contact of an approaching adjacent pair, advances the
//! whole system to that instant and applies the elastic two-body law to
//! every pair colliding then. Pair indices are 1-based: pair `i` is the
//! particles `i` and `i + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{ArithmeticMode, Scalar};
use crate::state::{MassVector, PhaseState};

/// What to do when contacts at adjacent pairs coincide (three or more
/// particles meeting at one point).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriplePolicy {
    /// Stop with [`Termination::TripleCollision`].
    Error,
    /// Legal only when all masses in the cluster are equal: resolve the
    /// cluster by pairwise exchanges (leftmost approaching pair first) until
    /// it separates. The set of velocities is unchanged.
    EqualMassExchange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<S> {
    /// Events within this time of the earliest one are treated as
    /// simultaneous. Must be zero in exact arithmetic.
    pub tie_tolerance: S,
    pub max_events: usize,
    pub triple_policy: TriplePolicy,
}

impl<S: Scalar> SimConfig<S> {
    /// Defaults for an `n`-particle system: exact ties (or 1e-12 in float
    /// mode), event cap `4 * C(n+1, 3) + 16`, triple collisions rejected.
    pub fn for_particles(n: usize) -> Self {
        let tie_tolerance = match S::MODE {
            ArithmeticMode::Exact => S::zero(),
            ArithmeticMode::Float => S::from_f64(1e-12).expect("finite"),
        };
        SimConfig {
            tie_tolerance,
            max_events: default_event_cap(n),
            triple_policy: TriplePolicy::Error,
        }
    }

    pub fn with_policy(mut self, policy: TriplePolicy) -> Self {
        self.triple_policy = policy;
        self
    }

    pub fn with_max_events(mut self, max_events: usize) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tie_tolerance.is_negative() {
            return Err(Error::field("tie_tolerance", "must be non-negative"));
        }
        if S::MODE == ArithmeticMode::Exact && !self.tie_tolerance.is_zero() {
            return Err(Error::field(
                "tie_tolerance",
                "must be zero in exact arithmetic",
            ));
        }
        if self.max_events == 0 {
            return Err(Error::field("max_events", "must be positive"));
        }
        Ok(())
    }
}

pub fn default_event_cap(n: usize) -> usize {
    4 * binomial(n as u64 + 1, 3) as usize + 16
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEvent<S> {
    /// 1-based position in the log.
    pub ordinal: usize,
    pub time: S,
    /// 1-based pair index `i`: particles `i` and `i + 1`.
    pub pair: usize,
    pub v_pre: (S, S),
    pub v_post: (S, S),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    FreeState,
    EventCapReached,
    #[serde(rename = "TripleCollisionError")]
    TripleCollision,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::FreeState => "FreeState",
            Termination::EventCapReached => "EventCapReached",
            Termination::TripleCollision => "TripleCollisionError",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "FreeState" => Some(Termination::FreeState),
            "EventCapReached" => Some(Termination::EventCapReached),
            "TripleCollisionError" => Some(Termination::TripleCollision),
            _ => None,
        }
    }
}

/// Complete record of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog<S> {
    pub masses: MassVector<S>,
    pub initial: PhaseState<S>,
    pub events: Vec<CollisionEvent<S>>,
    /// State right after the last applied event (or the initial state when
    /// nothing happened).
    pub final_state: PhaseState<S>,
    pub termination: Termination,
}

impl<S: Scalar> EventLog<S> {
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn count(&self) -> usize {
        self.events.len()
    }

    pub fn pair_sequence(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.pair).collect()
    }

    pub fn last_time(&self) -> S {
        self.events
            .last()
            .map(|e| e.time.clone())
            .unwrap_or_else(|| self.initial.t0.clone())
    }

    /// Rebuilds the final state from the initial state and the logged
    /// post-collision velocities.
    pub fn replay(&self) -> Result<PhaseState<S>> {
        let mut state = self.initial.clone();
        for event in &self.events {
            let dt = event.time.clone() - state.t0.clone();
            state = advance(&state, &dt)?;
            let i = event.pair - 1;
            state.v[i] = event.v_post.0.clone();
            state.v[i + 1] = event.v_post.1.clone();
        }
        Ok(state)
    }

    /// Largest position reached by particle `k` (1-based) on `[t0, t_end]`.
    /// Trajectories are piecewise linear, so only the vertices matter.
    pub fn max_position(&self, k: usize, t_end: &S) -> S {
        self.trajectory(k, t_end)
            .1
            .into_iter()
            .reduce(|a, b| S::max_of(&a, &b))
            .expect("trajectory has at least one vertex")
    }

    /// Polyline vertices `(t, q)` of particle `k` (1-based): the initial
    /// point, every collision it takes part in up to `t_end`, and the point
    /// at `t_end` itself.
    pub fn polyline(&self, k: usize, t_end: &S) -> Vec<(S, S)> {
        let (times, positions) = self.trajectory(k, t_end);
        times.into_iter().zip(positions).collect()
    }

    fn trajectory(&self, k: usize, t_end: &S) -> (Vec<S>, Vec<S>) {
        let i = k - 1;
        let mut t = self.initial.t0.clone();
        let mut q = self.initial.q[i].clone();
        let mut v = self.initial.v[i].clone();
        let mut times = vec![t.clone()];
        let mut positions = vec![q.clone()];
        for event in &self.events {
            if event.time > *t_end {
                break;
            }
            let side = if event.pair == k {
                Some(event.v_post.0.clone())
            } else if event.pair + 1 == k {
                Some(event.v_post.1.clone())
            } else {
                None
            };
            if let Some(v_new) = side {
                q = q + v.clone() * (event.time.clone() - t.clone());
                t = event.time.clone();
                v = v_new;
                times.push(t.clone());
                positions.push(q.clone());
            }
        }
        if *t_end > t {
            q = q + v * (t_end.clone() - t);
            times.push(t_end.clone());
            positions.push(q);
        }
        (times, positions)
    }

    /// Momentum and energy differences between final and initial states.
    pub fn drift(&self) -> (S, S) {
        let m = &self.masses;
        let dp = m.momentum(&self.final_state.v) - m.momentum(&self.initial.v);
        let de = m.energy(&self.final_state.v) - m.energy(&self.initial.v);
        (dp, de)
    }
}

/// Elastic two-body collision law.
///
/// Returns the post-collision velocities of a pair with masses `m_i`, `m_j`
/// and incoming velocities `v_i`, `v_j`.
pub fn collide_pair<S: Scalar>(m_i: &S, m_j: &S, v_i: &S, v_j: &S) -> Result<(S, S)> {
    if !m_i.is_positive() {
        return Err(Error::NonPositiveMass { index: 0 });
    }
    if !m_j.is_positive() {
        return Err(Error::NonPositiveMass { index: 1 });
    }
    let total = m_i.clone() + m_j.clone();
    let two = S::from_int(2);
    let left = ((m_i.clone() - m_j.clone()) * v_i.clone() + two.clone() * m_j.clone() * v_j.clone())
        / total.clone();
    let right = ((m_j.clone() - m_i.clone()) * v_j.clone() + two * m_i.clone() * v_i.clone()) / total;
    Ok((left, right))
}

/// Updates the velocity differences `Δv_k = v_{k+1} - v_k` for a collision
/// at pair `i` (1-based), without going through the velocities.
pub fn delta_transform<S: Scalar>(deltas: &[S], i: usize, masses: &MassVector<S>) -> Result<Vec<S>> {
    if deltas.len() + 1 != masses.len() {
        return Err(Error::InvalidState(format!(
            "{} differences for {} masses",
            deltas.len(),
            masses.len()
        )));
    }
    if i == 0 || i > deltas.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            max: deltas.len(),
        });
    }
    let m_i = masses.get(i).clone();
    let m_j = masses.get(i + 1).clone();
    let total = m_i.clone() + m_j.clone();
    let two = S::from_int(2);
    let d = deltas[i - 1].clone();
    let mut out = deltas.to_vec();
    out[i - 1] = -d.clone();
    if i >= 2 {
        out[i - 2] = deltas[i - 2].clone() + two.clone() * m_j / total.clone() * d.clone();
    }
    if i < deltas.len() {
        out[i] = deltas[i].clone() + two * m_i / total * d;
    }
    Ok(out)
}

/// Earliest future contact time among approaching adjacent pairs, with every
/// pair (1-based) that collides at that instant.
pub fn next_event<S: Scalar>(state: &PhaseState<S>, config: &SimConfig<S>) -> Option<(S, Vec<usize>)> {
    let candidates: Vec<(usize, S)> = (0..state.n().saturating_sub(1))
        .filter(|&k| state.v[k] > state.v[k + 1])
        .map(|k| {
            let gap = state.q[k + 1].clone() - state.q[k].clone();
            let gap = if gap.is_negative() { S::zero() } else { gap };
            let closing = state.v[k].clone() - state.v[k + 1].clone();
            (k + 1, state.t0.clone() + gap / closing)
        })
        .collect();
    let earliest = candidates
        .iter()
        .map(|(_, t)| t)
        .fold(None::<&S>, |best, t| match best {
            Some(b) if b <= t => Some(b),
            _ => Some(t),
        })?
        .clone();
    let limit = earliest.clone() + config.tie_tolerance.clone();
    let pairs = candidates
        .into_iter()
        .filter(|(_, t)| *t <= limit)
        .map(|(pair, _)| pair)
        .collect();
    Some((earliest, pairs))
}

/// Free flight over `dt`.
pub fn advance<S: Scalar>(state: &PhaseState<S>, dt: &S) -> Result<PhaseState<S>> {
    if dt.is_negative() {
        return Err(Error::Domain("cannot advance by a negative time".into()));
    }
    let q: Vec<S> = state
        .q
        .iter()
        .zip(&state.v)
        .map(|(q, v)| q.clone() + v.clone() * dt.clone())
        .collect();
    if let Some(k) = q.windows(2).position(|w| !w[0].approx_le(&w[1])) {
        return Err(Error::OrderingViolated {
            left: k + 1,
            right: k + 2,
        });
    }
    Ok(PhaseState {
        t0: state.t0.clone() + dt.clone(),
        q,
        v: state.v.clone(),
    })
}

/// True when no adjacent pair approaches: `v_1 <= v_2 <= ... <= v_n`.
pub fn is_free<S: Scalar>(state: &PhaseState<S>) -> bool {
    state.v.windows(2).all(|w| w[0] <= w[1])
}

/// Runs the system until it is free, the event cap is hit, or an illegal
/// multi-particle contact occurs.
pub fn simulate<S: Scalar>(
    state: &PhaseState<S>,
    masses: &MassVector<S>,
    config: &SimConfig<S>,
) -> Result<EventLog<S>> {
    config.validate()?;
    if state.n() != masses.len() {
        return Err(Error::InvalidState(format!(
            "{} particles but {} masses",
            state.n(),
            masses.len()
        )));
    }
    let mut log = Recorder {
        masses,
        events: Vec::new(),
        cap: config.max_events,
    };
    let mut current = state.clone();
    let termination = loop {
        if is_free(&current) {
            break Termination::FreeState;
        }
        if log.full() {
            break Termination::EventCapReached;
        }
        let Some((time, pairs)) = next_event(&current, config) else {
            break Termination::FreeState;
        };
        let dt = time.clone() - current.t0.clone();
        current = advance(&current, &dt)?;
        match log.apply_group(&mut current, &time, &pairs, config.triple_policy)? {
            GroupOutcome::Applied => {}
            GroupOutcome::Capped => break Termination::EventCapReached,
            GroupOutcome::Illegal => break Termination::TripleCollision,
        }
    };
    Ok(EventLog {
        masses: masses.clone(),
        initial: state.clone(),
        events: log.events,
        final_state: current,
        termination,
    })
}

enum GroupOutcome {
    Applied,
    Capped,
    Illegal,
}

struct Recorder<'a, S> {
    masses: &'a MassVector<S>,
    events: Vec<CollisionEvent<S>>,
    cap: usize,
}

impl<S: Scalar> Recorder<'_, S> {
    fn full(&self) -> bool {
        self.events.len() >= self.cap
    }

    fn collide(&mut self, state: &mut PhaseState<S>, time: &S, pair: usize) -> Result<()> {
        let i = pair - 1;
        let v_pre = (state.v[i].clone(), state.v[i + 1].clone());
        let v_post = collide_pair(
            self.masses.get(pair),
            self.masses.get(pair + 1),
            &v_pre.0,
            &v_pre.1,
        )?;
        state.v[i] = v_post.0.clone();
        state.v[i + 1] = v_post.1.clone();
        self.events.push(CollisionEvent {
            ordinal: self.events.len() + 1,
            time: time.clone(),
            pair,
            v_pre,
            v_post,
        });
        Ok(())
    }

    /// Applies all contacts found at one instant. Runs of consecutive pair
    /// indices share particles and go through the triple policy; isolated
    /// pairs touch disjoint velocity slots and commute.
    fn apply_group(
        &mut self,
        state: &mut PhaseState<S>,
        time: &S,
        pairs: &[usize],
        policy: TriplePolicy,
    ) -> Result<GroupOutcome> {
        let runs = consecutive_runs(pairs);
        if policy == TriplePolicy::Error && runs.iter().any(|r| r.len() > 1) {
            return Ok(GroupOutcome::Illegal);
        }
        for run in runs {
            if run.len() == 1 {
                if self.full() {
                    return Ok(GroupOutcome::Capped);
                }
                self.collide(state, time, run[0])?;
                continue;
            }
            let first = run[0];
            let last = *run.last().expect("non-empty run") + 1;
            let m0 = self.masses.get(first);
            if (first..=last).any(|k| self.masses.get(k) != m0) {
                return Ok(GroupOutcome::Illegal);
            }
            // Bubble the cluster's velocities into order, one exchange at a
            // time.
            while let Some(pair) = (first..last).find(|&p| state.v[p - 1] > state.v[p]) {
                if self.full() {
                    return Ok(GroupOutcome::Capped);
                }
                self.collide(state, time, pair)?;
            }
        }
        Ok(GroupOutcome::Applied)
    }
}

fn consecutive_runs(pairs: &[usize]) -> Vec<Vec<usize>> {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    for p in sorted {
        match runs.last_mut() {
            Some(run) if *run.last().expect("non-empty") + 1 == p => run.push(p),
            _ => runs.push(vec![p]),
        }
    }
    runs
}
