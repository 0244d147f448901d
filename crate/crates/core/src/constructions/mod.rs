//! Builders for mass vectors and initial states with a prescribed number of
//! collisions: `n - 1` (increasing chain), `C(n, 2)` (perturbed equal
//! masses) and `C(n + 1, 3)` (cascading chain, plain or alternating sides).
//!
//! The chain builders are inductive: the `(k-1)`-particle system is
//! simulated, its last collision time `T` and the reach `Q` of its outermost
//! particle on `[0, T]` are read off the log, and particle `k` is placed
//! beyond `Q` with a velocity chosen from the case's admissible range. Every
//! result is verified by simulation before it is returned.

mod case1;
mod case2;
mod case3;
mod certify;

pub use case1::{build_case1, case1_masses, case1_position_bound, case1_velocity_interval, PlacementBounds};
pub use case2::{build_case2, sample_u_state};
pub use case3::{build_case3, build_case3_alternating, case3_masses, alternating_masses, alternating_sides, Side};
pub use certify::{certify_open, perturb};

use serde::{Deserialize, Serialize};

use crate::dynamics::{binomial, simulate, EventLog, SimConfig, Termination};
use crate::error::{Error, Result};
use crate::scalar::{ArithmeticMode, Scalar};
use crate::state::{MassVector, PhaseState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    Case1,
    Case2,
    Case3,
    Case3Alternating,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::Case1 => "Case1",
            CaseTag::Case2 => "Case2",
            CaseTag::Case3 => "Case3",
            CaseTag::Case3Alternating => "Case3Alternating",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Case1" | "1" => Some(CaseTag::Case1),
            "Case2" | "2" => Some(CaseTag::Case2),
            "Case3" | "3" => Some(CaseTag::Case3),
            "Case3Alternating" | "3alt" => Some(CaseTag::Case3Alternating),
            _ => None,
        }
    }

    /// Number of collisions the case realises with `n` particles.
    pub fn predicted_count(&self, n: usize) -> usize {
        let n = n as u64;
        (match self {
            CaseTag::Case1 => n - 1,
            CaseTag::Case2 => binomial(n, 2),
            CaseTag::Case3 | CaseTag::Case3Alternating => binomial(n + 1, 3),
        }) as usize
    }
}

/// Knobs shared by the builders.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionParams<S> {
    pub n: usize,
    /// Masses stay inside `(1 - ε, 1 + ε)`.
    pub epsilon: S,
    /// Seed ratio `m_2 / m_1`; `None` picks a default that keeps every ratio
    /// below `δ = (1 + ε)^(1/(n-1))`.
    pub r: Option<S>,
    /// Case 1: how far into the admissible ratio range each step goes.
    pub theta: S,
    /// Case 3: initial dominance factor of the incoming particle.
    pub kappa: S,
    /// Multiplicative slack on the placement reach `Q`.
    pub slack: S,
    /// Case 3: how many times the incoming speed may be doubled.
    pub max_doublings: u32,
    pub seed: u64,
}

impl<S: Scalar> ConstructionParams<S> {
    pub fn new(n: usize, epsilon: S) -> Self {
        ConstructionParams {
            n,
            epsilon,
            r: None,
            theta: S::from_ratio(1, 2),
            kappa: S::from_int(8),
            slack: S::from_ratio(17, 16),
            max_doublings: 64,
            seed: 0,
        }
    }

    pub fn with_r(mut self, r: S) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_theta(mut self, theta: S) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_kappa(mut self, kappa: S) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::field("n", "need at least two particles"));
        }
        if !self.epsilon.is_positive() {
            return Err(Error::field("epsilon", "must be positive"));
        }
        if !(self.theta.is_positive() && self.theta < S::one()) {
            return Err(Error::field("theta", "must lie in (0, 1)"));
        }
        if self.kappa <= S::one() {
            return Err(Error::field("kappa", "must exceed 1"));
        }
        if self.slack <= S::one() {
            return Err(Error::field("slack", "must exceed 1"));
        }
        if let Some(r) = &self.r {
            let upper = S::from_ratio(self.n as i64 + 1, self.n as i64);
            if !(*r > S::one() && *r < upper) {
                return Err(Error::field("r", format!("must lie in (1, {upper})")));
            }
        }
        Ok(())
    }

    /// `x < δ`, decided as `x^(n-1) < 1 + ε` (exact in rational mode).
    pub fn below_delta(&self, x: &S) -> bool {
        x.is_positive() && x.powi(self.n as u32 - 1) < S::one() + self.epsilon.clone()
    }

    /// The seed ratio: the user's `r`, or the largest convenient value for
    /// which the outermost ratio of the chain stays below `δ`. `spread` is
    /// the factor by which ratios may grow along the chain (`2^(n-2)` for
    /// the cascading chain, whose ratios are bounded by `g_{n-2}(r)`).
    pub(crate) fn seed_ratio(&self, spread: u32) -> Result<S> {
        let n = self.n as i64;
        let cap = S::one() + S::from_ratio(1, 2 * n);
        let outermost = |r: &S| S::two_pow(spread) * (r.clone() - S::one()) + S::one();
        if let Some(r) = &self.r {
            if !self.below_delta(&outermost(r)) {
                return Err(Error::Construction(format!(
                    "seed ratio {r} pushes adjacent mass ratios past (1 + ε)^(1/(n-1)); choose a smaller r"
                )));
            }
            return Ok(r.clone());
        }
        let delta = (1.0 + self.epsilon.to_f64()).powf(1.0 / (self.n as f64 - 1.0));
        let room = (delta - 1.0) / f64::powi(2.0, spread as i32);
        let mut hi = S::from_f64(room * 0.75).filter(|x| x.is_positive()).ok_or_else(|| {
            Error::Construction("epsilon too small to seed a mass ratio".into())
        })?;
        for _ in 0..64 {
            let lo = hi.clone() / S::from_int(2);
            let r = S::one() + S::simplest_between(&lo, &hi);
            let r = if r < cap { r } else { S::simplest_between(&S::one(), &cap) };
            if r > S::one() && self.below_delta(&outermost(&r)) {
                return Ok(r);
            }
            hi = lo;
        }
        Err(Error::Construction(
            "could not find a representable seed ratio; use exact arithmetic".into(),
        ))
    }
}

/// A certified instance: masses, initial state and what simulating it gives.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionResult<S> {
    pub case_tag: CaseTag,
    pub n: usize,
    pub epsilon: S,
    pub r: Option<S>,
    pub theta: Option<S>,
    pub kappa: Option<S>,
    pub seed: u64,
    pub masses: MassVector<S>,
    pub state: PhaseState<S>,
    pub predicted_count: usize,
    pub expected_sequence: Option<Vec<usize>>,
    /// Radius of the ∞-norm ball around `(masses, q, v)` on which sampling
    /// found the count preserved; zero until certified.
    pub certified_radius: S,
    /// Case 2 only: mass-perturbation radius found by probing.
    pub mass_radius: Option<S>,
}

impl<S: Scalar> ConstructionResult<S> {
    /// Simulates the instance with the strict default configuration.
    pub fn simulate(&self) -> Result<EventLog<S>> {
        simulate(&self.state, &self.masses, &SimConfig::for_particles(self.n))
    }

    /// Checks the count (and sequence, when recorded) by simulation.
    pub fn verify(&self) -> Result<EventLog<S>> {
        let log = self.simulate()?;
        if log.termination != Termination::FreeState || log.count() != self.predicted_count {
            return Err(Error::Inconsistent(format!(
                "{} with n = {} gives {} collisions ({}), expected {}",
                self.case_tag.as_str(),
                self.n,
                log.count(),
                log.termination.as_str(),
                self.predicted_count
            )));
        }
        if let Some(expected) = &self.expected_sequence {
            if log.pair_sequence() != *expected {
                return Err(Error::Inconsistent(format!(
                    "{} collision sequence differs from the recorded one",
                    self.case_tag.as_str()
                )));
            }
        }
        Ok(log)
    }
}

/// Two touching-free particles, the left one moving right at unit speed.
pub(crate) fn base_pair<S: Scalar>() -> PhaseState<S> {
    PhaseState::new(S::zero(), vec![S::zero(), S::one()], vec![S::one(), S::zero()])
        .expect("valid base state")
}

/// A simple value in the middle half of `(lo, hi)`.
pub(crate) fn interior_point<S: Scalar>(lo: &S, hi: &S) -> S {
    let quarter = (hi.clone() - lo.clone()) / S::from_int(4);
    S::simplest_between(&(lo.clone() + quarter.clone()), &(hi.clone() - quarter))
}

/// Position for a particle appended on the right that must stay clear of
/// particle `k` (the current last one) until `t_end` while moving at
/// `v_new`: beyond the reach `Q` of particle `k` on `[t0, t_end]` both at
/// `t0` and at `t_end`, with multiplicative slack, rounded up to an integer.
pub(crate) fn place_right<S: Scalar>(
    log: &EventLog<S>,
    k: usize,
    t_end: &S,
    v_new: &S,
    slack: &S,
) -> S {
    let reach = log.max_position(k, t_end);
    let elapsed = t_end.clone() - log.initial.t0().clone();
    let at_end = reach.clone() - v_new.clone() * elapsed;
    let need = S::max_of(&reach, &at_end);
    let margin = (slack.clone() - S::one()) * (S::one() + need.abs());
    (need + margin).ceil() + S::one()
}

pub(crate) fn float_hint<S: Scalar>() -> &'static str {
    match S::MODE {
        ArithmeticMode::Float => "; float precision is likely insufficient, use exact arithmetic",
        ArithmeticMode::Exact => "",
    }
}
