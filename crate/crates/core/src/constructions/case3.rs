//! Cascading chain with exactly `C(n + 1, 3)` collisions.
//!
//! Each new particle arrives after the smaller system has finished, far
//! faster than any relative motion inside it. It sets off a cascade that
//! runs through the whole chain down to particle 1 (`k - 1` collisions),
//! after which particles `2..=k` are all mutually approaching and collide
//! `C(k - 1, 2)` more times. Stage `k` therefore adds `C(k, 2)` collisions.
//!
//! The cascade only reverses when every triple of consecutive masses
//! satisfies `4 m_a m_c > (m_a + m_b)(m_b + m_c)`, i.e. the outward ratio
//! exceeds `f` of the inner one.

use super::{base_pair, float_hint, interior_point, place_right, CaseTag, ConstructionParams, ConstructionResult};
use crate::bounds::{f_step, g_step};
use crate::dynamics::{binomial, simulate, EventLog, SimConfig, Termination};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{MassVector, PhaseState};

/// Next outward ratio: inside `(f(x), g(x))`, which keeps the cascade mass
/// condition strict and the chain below `g_k(r)`.
fn next_ratio<S: Scalar>(x: &S) -> Result<S> {
    let lo = f_step(x)?;
    let hi = g_step(x);
    if lo >= hi {
        return Err(Error::Construction(format!(
            "ratio {x} leaves no room between f and g{}",
            float_hint::<S>()
        )));
    }
    Ok(interior_point(&lo, &hi))
}

/// `m_1 = 1`, `m_2 = r`, then each ratio strictly between `f` and `g` of the
/// previous one.
pub fn case3_masses<S: Scalar>(params: &ConstructionParams<S>, r: &S) -> Result<MassVector<S>> {
    let mut masses = vec![S::one(), r.clone()];
    let mut ratio = r.clone();
    for k in 3..=params.n {
        ratio = next_ratio(&ratio)?;
        let next = masses[k - 2].clone() * ratio.clone();
        masses.push(next);
    }
    check_ratios(params, &MassVector::new(masses)?)
}

fn check_ratios<S: Scalar>(params: &ConstructionParams<S>, masses: &MassVector<S>) -> Result<MassVector<S>> {
    for (k, ratio) in masses.ratios().iter().enumerate() {
        let outward = if *ratio >= S::one() { ratio.clone() } else { S::one() / ratio.clone() };
        if !params.below_delta(&outward) {
            return Err(Error::Construction(format!(
                "ratio m_{}/m_{} = {ratio} is not within (1 + ε)^(±1/(n-1))",
                k + 2,
                k + 1
            )));
        }
    }
    Ok(masses.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Order in which the alternating builder attaches particles 3..=n:
/// right, left, right, …
pub fn alternating_sides(n: usize) -> Vec<Side> {
    (3..=n)
        .map(|k| if k % 2 == 1 { Side::Right } else { Side::Left })
        .collect()
}

/// Valley-shaped masses `m_1 > … > m_v < … < m_n`. Both sides grow outward
/// from the lightest particle along their own ratio chain seeded with `r`.
pub fn alternating_masses<S: Scalar>(params: &ConstructionParams<S>, r: &S) -> Result<MassVector<S>> {
    let mut left: Vec<S> = Vec::new();
    let mut right = vec![S::one(), r.clone()];
    let mut right_ratio = r.clone();
    let mut left_ratio: Option<S> = None;
    for side in alternating_sides(params.n) {
        match side {
            Side::Right => {
                right_ratio = next_ratio(&right_ratio)?;
                let next = right.last().expect("non-empty").clone() * right_ratio.clone();
                right.push(next);
            }
            Side::Left => {
                let ratio = match &left_ratio {
                    None => r.clone(),
                    Some(x) => next_ratio(x)?,
                };
                let inner = left.last().cloned().unwrap_or_else(S::one);
                left.push(inner * ratio.clone());
                left_ratio = Some(ratio);
            }
        }
    }
    let masses: Vec<S> = left.into_iter().rev().chain(right).collect();
    check_ratios(params, &MassVector::new(masses)?)
}

/// Attaches one particle on the right of `state` (whose free evolution is
/// `prev`) so that the enlarged system realises `C(k + 1, 3)` collisions,
/// `k` being the new particle count. The incoming velocity starts at
/// `κ · max Δv` below the last particle's final velocity and is doubled
/// until the simulated stage has the cascade structure.
fn attach_right<S: Scalar>(
    masses: &MassVector<S>,
    state: &PhaseState<S>,
    prev: &EventLog<S>,
    params: &ConstructionParams<S>,
) -> Result<(PhaseState<S>, EventLog<S>)> {
    let k = masses.len();
    let final_v = prev.final_state.v();
    let spread = prev
        .final_state
        .deltas()
        .into_iter()
        .fold(S::zero(), |acc, d| S::max_of(&acc, &d.abs()));
    let spread = if spread.is_zero() { S::one() } else { spread };
    let t_end = prev.last_time();
    let target = binomial(k as u64 + 1, 3) as usize;
    let prefix = prev.pair_sequence();

    let mut push = params.kappa.clone() * spread;
    for _ in 0..=params.max_doublings {
        let v_new = (final_v[k - 2].clone() - push.clone()).floor();
        let q_new = place_right(prev, k - 1, &t_end, &v_new, &params.slack);
        let candidate = state.pushed(q_new, v_new)?;
        let log = simulate(&candidate, masses, &SimConfig::for_particles(k))?;
        if stage_is_cascade(&log, &prefix, k, target) {
            return Ok((candidate, log));
        }
        push = push * S::from_int(2);
    }
    Err(Error::Construction(format!(
        "no incoming velocity for particle {k} produced the cascade (gave up at {}){}",
        -push,
        float_hint::<S>()
    )))
}

fn stage_is_cascade<S: Scalar>(log: &EventLog<S>, prefix: &[usize], k: usize, target: usize) -> bool {
    if log.termination != Termination::FreeState || log.count() != target {
        return false;
    }
    let seq = log.pair_sequence();
    if !seq.starts_with(prefix) {
        return false;
    }
    let stage = &seq[prefix.len()..];
    stage.first() == Some(&(k - 1)) && stage.iter().filter(|&&p| p == 1).count() == 1
}

fn finish<S: Scalar>(
    tag: CaseTag,
    params: &ConstructionParams<S>,
    r: S,
    masses: MassVector<S>,
    state: PhaseState<S>,
) -> Result<ConstructionResult<S>> {
    let n = params.n;
    let mut result = ConstructionResult {
        case_tag: tag,
        n,
        epsilon: params.epsilon.clone(),
        r: Some(r),
        theta: None,
        kappa: Some(params.kappa.clone()),
        seed: params.seed,
        masses,
        state,
        predicted_count: tag.predicted_count(n),
        expected_sequence: None,
        certified_radius: S::zero(),
        mass_radius: None,
    };
    let log = result.verify()?;
    result.expected_sequence = Some(log.pair_sequence());
    Ok(result)
}

pub fn build_case3<S: Scalar>(params: &ConstructionParams<S>) -> Result<ConstructionResult<S>> {
    params.validate()?;
    let n = params.n;
    let r = params.seed_ratio(n.saturating_sub(2) as u32)?;
    let masses = case3_masses(params, &r)?;
    let mut state = base_pair::<S>();
    let mut log = simulate(&state, &masses.prefix(2)?, &SimConfig::for_particles(2))?;
    for k in 3..=n {
        (state, log) = attach_right(&masses.prefix(k)?, &state, &log, params)?;
    }
    finish(CaseTag::Case3, params, r, masses, state)
}

/// Cascading chain grown alternately on the right and on the left of the
/// lightest particle. Left attachments run the right-hand procedure on the
/// mirror image of the system.
pub fn build_case3_alternating<S: Scalar>(params: &ConstructionParams<S>) -> Result<ConstructionResult<S>> {
    params.validate()?;
    let n = params.n;
    if n < 3 {
        return Err(Error::field("n", "the alternating chain needs at least three particles"));
    }
    let sides = alternating_sides(n);
    let rights = 1 + sides.iter().filter(|s| **s == Side::Right).count() as u32;
    let r = params.seed_ratio(rights.saturating_sub(1))?;
    let masses = alternating_masses(params, &r)?;
    let lefts = n - 1 - rights as usize;
    let all = masses.as_slice();

    // Current window [lo, hi) into the final mass vector.
    let (mut lo, mut hi) = (lefts, lefts + 2);
    let mut state = base_pair::<S>();
    for side in sides {
        match side {
            Side::Right => {
                hi += 1;
                let window = MassVector::new(all[lo..hi].to_vec())?;
                let prev = simulate(&state, &window.prefix(hi - lo - 1)?, &SimConfig::for_particles(hi - lo - 1))?;
                state = attach_right(&window, &state, &prev, params)?.0;
            }
            Side::Left => {
                lo -= 1;
                let window = MassVector::new(all[lo..hi].to_vec())?.reversed();
                let mirrored = state.mirrored();
                let prev = simulate(&mirrored, &window.prefix(hi - lo - 1)?, &SimConfig::for_particles(hi - lo - 1))?;
                state = attach_right(&window, &mirrored, &prev, params)?.0.mirrored();
            }
        }
    }
    finish(CaseTag::Case3Alternating, params, r, masses, state)
}
