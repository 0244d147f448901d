//! Perturbed equal masses on the all-approaching set: exactly `C(n, 2)`
//! collisions.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CaseTag, ConstructionResult};
use crate::dynamics::{binomial, simulate, SimConfig, Termination};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{MassVector, PhaseState};

const GRID: i64 = 1 << 16;
const MAX_HALVINGS: u32 = 40;
const MAX_RESAMPLES: usize = 16;

/// A state with `q` strictly increasing and `v` strictly decreasing: every
/// pair of particles approaches. Gaps lie in `[1/2, 3/2)`, velocity steps in
/// `[1/4, 5/4)`, and `v_n` in `[-1, 1)`, all on a `2^-16` grid.
pub fn sample_u_state<S: Scalar>(n: usize, rng: &mut impl Rng) -> Result<PhaseState<S>> {
    let mut unit = || S::from_ratio(rng.gen_range(0..GRID), GRID);
    let mut q = vec![S::zero()];
    for k in 1..n {
        let next = q[k - 1].clone() + S::from_ratio(1, 2) + unit();
        q.push(next);
    }
    // Built right to left: v_n first, then increasing steps.
    let mut v = vec![S::from_int(2) * unit() - S::one()];
    for _ in 1..n {
        let next = v.last().expect("non-empty").clone() + S::from_ratio(1, 4) + unit();
        v.push(next);
    }
    v.reverse();
    PhaseState::new(S::zero(), q, v)
}

fn count_of<S: Scalar>(state: &PhaseState<S>, masses: &MassVector<S>) -> Result<Option<usize>> {
    let log = simulate(state, masses, &SimConfig::for_particles(state.n()))?;
    Ok((log.termination == Termination::FreeState).then_some(log.count()))
}

/// Equal masses are perturbed into `(1 - ρ_m, 1 + ρ_m)` where `ρ_m ≤ ε` is
/// halved until the count survives `2n + 1` probes (the centre and each mass
/// moved to `1 ± ρ_m` alone).
pub fn build_case2<S: Scalar>(n: usize, epsilon: &S, seed: u64) -> Result<ConstructionResult<S>> {
    if n < 2 {
        return Err(Error::field("n", "need at least two particles"));
    }
    if !epsilon.is_positive() {
        return Err(Error::field("epsilon", "must be positive"));
    }
    let target = binomial(n as u64, 2) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let equal = MassVector::<S>::equal(n)?;

    let mut state = None;
    for _ in 0..MAX_RESAMPLES {
        let candidate = sample_u_state::<S>(n, &mut rng)?;
        if count_of(&candidate, &equal)? == Some(target) {
            state = Some(candidate);
            break;
        }
    }
    let state = state.ok_or_else(|| {
        Error::Construction("no sampled all-approaching state avoided multi-particle contact".into())
    })?;

    let mut radius = S::min_of(epsilon, &S::from_ratio(1, 2));
    for _ in 0..MAX_HALVINGS {
        if probes_pass(&state, n, &radius, target)? {
            let masses = MassVector::new(
                (0..n)
                    .map(|_| {
                        let u = S::from_ratio(2 * rng.gen_range(0..GRID) - GRID + 1, GRID);
                        S::one() + u * radius.clone() / S::from_int(2)
                    })
                    .collect(),
            )?;
            if count_of(&state, &masses)? == Some(target) {
                return Ok(ConstructionResult {
                    case_tag: CaseTag::Case2,
                    n,
                    epsilon: epsilon.clone(),
                    r: None,
                    theta: None,
                    kappa: None,
                    seed,
                    masses,
                    state,
                    predicted_count: target,
                    expected_sequence: None,
                    certified_radius: S::zero(),
                    mass_radius: Some(radius),
                });
            }
        }
        radius = radius / S::from_int(2);
    }
    Err(Error::Construction(format!(
        "mass probes still change the count at radius {radius}"
    )))
}

fn probes_pass<S: Scalar>(state: &PhaseState<S>, n: usize, radius: &S, target: usize) -> Result<bool> {
    let mut probes = vec![vec![S::one(); n]];
    for k in 0..n {
        for sign in [-1, 1] {
            let mut m = vec![S::one(); n];
            m[k] = S::one() + S::from_int(sign) * radius.clone();
            probes.push(m);
        }
    }
    for m in probes {
        if count_of(state, &MassVector::new(m)?)? != Some(target) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational as Q;

    #[test]
    fn sampled_states_are_all_approaching() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=8 {
            let s = sample_u_state::<Q>(n, &mut rng).unwrap();
            assert!(s.q().windows(2).all(|w| w[0] < w[1]));
            assert!(s.v().windows(2).all(|w| w[0] > w[1]));
            assert!(s.v()[n - 1] >= Q::from_int(-1) && s.v()[n - 1] < Q::one());
        }
    }

    #[test]
    fn small_cases_count() {
        let two = build_case2::<Q>(2, &Q::from_ratio(1, 2), 1).unwrap();
        assert_eq!(two.verify().unwrap().count(), 1);
        let four = build_case2::<Q>(4, &Q::from_ratio(1, 2), 3).unwrap();
        assert_eq!(four.verify().unwrap().count(), 6);
        let rho = four.mass_radius.clone().unwrap();
        assert!(rho.is_positive() && rho <= Q::from_ratio(1, 2));
        for m in four.masses.as_slice() {
            assert!((m.clone() - Q::one()).abs() < rho);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_case2::<Q>(1, &Q::one(), 0).is_err());
        assert!(build_case2::<Q>(3, &Q::zero(), 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let a = build_case2::<Q>(5, &Q::from_ratio(1, 4), 11).unwrap();
        let b = build_case2::<Q>(5, &Q::from_ratio(1, 4), 11).unwrap();
        assert_eq!(a, b);
    }
}
