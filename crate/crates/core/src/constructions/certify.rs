//! Sampling surrogate for openness: the count is checked on random points of
//! an ∞-norm ball around `(masses, q, v)` whose radius is halved until every
//! sample agrees.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ConstructionResult;
use crate::dynamics::{simulate, SimConfig, Termination};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{MassVector, PhaseState};

const GRID: i64 = 1 << 20;
const MAX_HALVINGS: u32 = 60;

/// Uniform grid point of the open interval `(lo, hi)`.
fn inside<S: Scalar>(lo: &S, hi: &S, rng: &mut impl Rng) -> S {
    let w = S::from_ratio(rng.gen_range(1..GRID), GRID);
    lo.clone() + w * (hi.clone() - lo.clone())
}

/// One perturbed copy of the instance. Positions and velocities move by at
/// most `radius`; masses are also kept inside `(1 - ε, 1 + ε)`. The result
/// may violate the ordering of positions, which callers treat as a failure.
pub fn perturb<S: Scalar>(
    result: &ConstructionResult<S>,
    radius: &S,
    rng: &mut impl Rng,
) -> (Vec<S>, Vec<S>, Vec<S>) {
    let floor = S::max_of(&(S::one() - result.epsilon.clone()), &S::zero());
    let ceil = S::one() + result.epsilon.clone();
    let masses = result
        .masses
        .as_slice()
        .iter()
        .map(|m| {
            let lo = S::max_of(&(m.clone() - radius.clone()), &floor);
            let hi = S::min_of(&(m.clone() + radius.clone()), &ceil);
            inside(&lo, &hi, rng)
        })
        .collect();
    let mut shift = |xs: &[S]| -> Vec<S> {
        xs.iter()
            .map(|x| inside(&(x.clone() - radius.clone()), &(x.clone() + radius.clone()), rng))
            .collect()
    };
    let q = shift(result.state.q());
    let v = shift(result.state.v());
    (masses, q, v)
}

fn reproduces<S: Scalar>(result: &ConstructionResult<S>, masses: Vec<S>, q: Vec<S>, v: Vec<S>) -> bool {
    let Ok(masses) = MassVector::new(masses) else { return false };
    let Ok(state) = PhaseState::new(result.state.t0().clone(), q, v) else { return false };
    match simulate(&state, &masses, &SimConfig::for_particles(result.n)) {
        Ok(log) => log.termination == Termination::FreeState && log.count() == result.predicted_count,
        Err(_) => false,
    }
}

/// Largest radius `radius / 2^j` on which all `samples` perturbations give
/// the predicted count. A zero radius only verifies the centre.
pub fn certify_open<S: Scalar>(result: &ConstructionResult<S>, samples: usize, radius: &S) -> Result<S> {
    result.verify()?;
    if radius.is_negative() {
        return Err(Error::field("radius", "must be non-negative"));
    }
    if radius.is_zero() {
        return Ok(S::zero());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(result.seed);
    let mut rho = radius.clone();
    for _ in 0..=MAX_HALVINGS {
        let points: Vec<_> = (0..samples).map(|_| perturb(result, &rho, &mut rng)).collect();
        let ok = points
            .into_par_iter()
            .all(|(m, q, v)| reproduces(result, m, q, v));
        if ok {
            return Ok(rho);
        }
        rho = rho / S::from_int(2);
    }
    Err(Error::Construction(format!(
        "count still unstable at radius {rho}"
    )))
}
