//! Increasing chain with exactly `n - 1` collisions, in the order
//! `(1,2), (2,3), …, (n-1,n)`.

use super::{base_pair, float_hint, interior_point, place_right, CaseTag, ConstructionParams, ConstructionResult};
use crate::bounds::f_step;
use crate::dynamics::{simulate, SimConfig, Termination};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::MassVector;

/// `m_1 = 1`, `m_2 = r`, and `m_k / m_{k-1} = 1 + θ (f(m_{k-1}/m_{k-2}) - 1)`,
/// strictly inside the admissible range `(1, f(previous ratio)]`.
pub fn case1_masses<S: Scalar>(params: &ConstructionParams<S>, r: &S) -> Result<MassVector<S>> {
    let mut masses = vec![S::one(), r.clone()];
    let mut ratio = r.clone();
    for k in 3..=params.n {
        ratio = S::one() + params.theta.clone() * (f_step(&ratio)? - S::one());
        if ratio <= S::one() {
            return Err(Error::Construction(format!(
                "mass ratio at particle {k} collapsed to 1{}",
                float_hint::<S>()
            )));
        }
        let next = masses[k - 2].clone() * ratio.clone();
        masses.push(next);
    }
    for (k, ratio) in MassVector::new(masses.clone())?.ratios().iter().enumerate() {
        if !params.below_delta(ratio) {
            return Err(Error::Construction(format!(
                "ratio m_{}/m_{} = {ratio} is not below (1 + ε)^(1/(n-1))",
                k + 2,
                k + 1
            )));
        }
    }
    MassVector::new(masses)
}

/// Admissible open interval for the velocity of the new last particle.
///
/// `masses` ends with `(m_{n-2}, m_{n-1}, m_n)`; `v_prev` is the initial
/// velocity of particle `n-1` and `v_prevprev` the velocity particle `n-2`
/// carries into its collision with `n-1`. The interval is non-empty exactly
/// when `m_n < m_{n-1} (m_{n-1} + m_{n-2}) / (3 m_{n-2} - m_{n-1})`.
pub fn case1_velocity_interval<S: Scalar>(
    masses: &MassVector<S>,
    v_prev: &S,
    v_prevprev: &S,
) -> Result<(S, S)> {
    let n = masses.len();
    if n < 3 {
        return Err(Error::Domain("need at least three masses".into()));
    }
    if v_prevprev <= v_prev {
        return Err(Error::Domain(
            "particle n-2 must approach particle n-1 (v_prevprev > v_prev)".into(),
        ));
    }
    let a = masses.get(n - 2).clone();
    let b = masses.get(n - 1).clone();
    let c = masses.get(n).clone();
    let two = S::from_int(2);
    let pair = two.clone() * (a.clone() + b.clone());
    let tail = b.clone() / (two * c);
    let coef_prev = (S::from_int(3) * b.clone() - a.clone()) / pair.clone() + tail.clone();
    let coef_prevprev = (S::from_int(3) * a - b) / pair - tail;
    let lo = coef_prev * v_prev.clone() + coef_prevprev * v_prevprev.clone();
    let hi = v_prev.clone();
    if lo >= hi {
        return Err(Error::Domain(format!(
            "empty velocity interval ({lo}, {hi}): mass condition violated"
        )));
    }
    Ok((lo, hi))
}

/// Interval bounds on the neighbours of the new particle, as used by the
/// explicit lower limit for its position.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementBounds<S> {
    /// Upper bound on `q_{n-1}`.
    pub q_prev_upper: S,
    /// Lower bound on `q_{n-1}`.
    pub q_prev_lower: S,
    /// Lower bound on `q_{n-2}`.
    pub q_prevprev_lower: S,
    /// Lower bound on `v_{n-2}`.
    pub v_prevprev_lower: S,
    /// Upper bound on `v_{n-1}`.
    pub v_prev_upper: S,
    /// Lower bound on `v_{n-1}`.
    pub v_prev_lower: S,
    /// Upper bound on `v_n`.
    pub v_new_upper: S,
}

/// Lower limit for the position of the new particle:
/// `(q̄_{n-1} - q_{n-2}) / (v_{n-2} - v̄_{n-1}) · (v_{n-1} - v̄_n) + q_{n-1}`
/// with lower/upper bounds as in [`PlacementBounds`].
pub fn case1_position_bound<S: Scalar>(b: &PlacementBounds<S>) -> Result<S> {
    let den = b.v_prevprev_lower.clone() - b.v_prev_upper.clone();
    if den.is_zero() {
        return Err(Error::Construction(
            "velocity bounds leave no closing speed between particles n-2 and n-1".into(),
        ));
    }
    Ok((b.q_prev_upper.clone() - b.q_prevprev_lower.clone()) / den
        * (b.v_prev_lower.clone() - b.v_new_upper.clone())
        + b.q_prev_lower.clone())
}

pub fn build_case1<S: Scalar>(params: &ConstructionParams<S>) -> Result<ConstructionResult<S>> {
    params.validate()?;
    let n = params.n;
    let r = params.seed_ratio(0)?;
    let masses = case1_masses(params, &r)?;
    let mut state = base_pair::<S>();
    for k in 3..=n {
        let sub = masses.prefix(k - 1)?;
        let log = simulate(&state, &sub, &SimConfig::for_particles(k - 1))?;
        let chain: Vec<usize> = (1..k - 1).collect();
        if log.termination != Termination::FreeState || log.pair_sequence() != chain {
            return Err(Error::Construction(format!(
                "the {}-particle chain lost its collision order{}",
                k - 1,
                float_hint::<S>()
            )));
        }
        let last = log.events.last().expect("chain has events");
        let t_last = last.time.clone();
        let v_prevprev = last.v_pre.0.clone();
        let v_prev = state.v()[k - 2].clone();
        let (lo, hi) = case1_velocity_interval(&masses.prefix(k)?, &v_prev, &v_prevprev)
            .map_err(|e| Error::Construction(format!("particle {k}: {e}{}", float_hint::<S>())))?;
        let v_new = interior_point(&lo, &hi);
        let q_new = place_right(&log, k - 1, &t_last, &v_new, &params.slack);
        state = state.pushed(q_new, v_new)?;
    }
    let result = ConstructionResult {
        case_tag: CaseTag::Case1,
        n,
        epsilon: params.epsilon.clone(),
        r: Some(r),
        theta: Some(params.theta.clone()),
        kappa: None,
        seed: params.seed,
        masses,
        state,
        predicted_count: n - 1,
        expected_sequence: Some((1..n).collect()),
        certified_radius: S::zero(),
        mass_radius: None,
    };
    result
        .verify()
        .map_err(|e| Error::Construction(format!("{e}{}", float_hint::<S>())))?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational as Q;

    fn q(s: &str) -> Q {
        Q::parse_str(s).unwrap()
    }

    fn mv(xs: &[&str]) -> MassVector<Q> {
        MassVector::new(xs.iter().map(|s| q(s)).collect()).unwrap()
    }

    #[test]
    fn equal_masses_give_an_empty_interval() {
        let err = case1_velocity_interval(&mv(&["1", "1", "1"]), &q("0"), &q("1")).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn admissible_masses_give_a_negative_lower_limit() {
        let (lo, hi) = case1_velocity_interval(&mv(&["1", "1.05", "1.08"]), &q("0"), &q("1")).unwrap();
        assert!(lo < Q::zero());
        assert_eq!(hi, Q::zero());
        // Direct substitution of the coefficient of v_prevprev.
        let (a, b, c) = (q("1"), q("1.05"), q("1.08"));
        let want = (q("3") * a.clone() - b.clone()) / (q("2") * (a + b.clone())) - b / (q("2") * c);
        assert_eq!(lo, want);
    }

    #[test]
    fn interval_scales_with_velocities() {
        let m = mv(&["1", "1.05", "1.08"]);
        let (lo, hi) = case1_velocity_interval(&m, &q("1/3"), &q("2")).unwrap();
        let c = q("7/2");
        let (lo_c, hi_c) = case1_velocity_interval(&m, &(q("1/3") * c.clone()), &(q("2") * c.clone())).unwrap();
        assert_eq!(lo_c, lo * c.clone());
        assert_eq!(hi_c, hi * c);
    }

    #[test]
    fn interval_requires_approach() {
        assert!(case1_velocity_interval(&mv(&["1", "1.05", "1.08"]), &q("1"), &q("1")).is_err());
    }

    #[test]
    fn position_bound_degenerate_cases() {
        let b = PlacementBounds {
            q_prev_upper: q("2"),
            q_prev_lower: q("3/2"),
            q_prevprev_lower: q("2"),
            v_prevprev_lower: q("1"),
            v_prev_upper: q("0"),
            v_prev_lower: q("-1"),
            v_new_upper: q("-2"),
        };
        assert_eq!(case1_position_bound(&b).unwrap(), q("3/2"));
        let b2 = PlacementBounds { q_prevprev_lower: q("0"), v_new_upper: q("-1"), ..b.clone() };
        assert_eq!(case1_position_bound(&b2).unwrap(), q("3/2"));
        let b3 = PlacementBounds { v_prevprev_lower: q("0"), ..b };
        assert!(case1_position_bound(&b3).is_err());
    }

    #[test]
    fn two_particles_collide_once() {
        let res = build_case1(&ConstructionParams::<Q>::new(2, q("1/2"))).unwrap();
        assert_eq!(res.predicted_count, 1);
        assert_eq!(res.state.q(), &[q("0"), q("1")]);
        assert_eq!(res.verify().unwrap().count(), 1);
    }

    #[test]
    fn three_particles_with_seed_ratio() {
        let params = ConstructionParams::<Q>::new(3, q("1/2")).with_r(q("11/10"));
        let res = build_case1(&params).unwrap();
        let m = res.masses.as_slice();
        assert_eq!(m[..2], [q("1"), q("11/10")]);
        // 1 + (f(1.1) - 1)/2 with f(1.1) = 2.1/1.9.
        assert_eq!(m[2].clone() / m[1].clone(), q("1") + (q("21/19") - q("1")) / q("2"));
        let log = res.verify().unwrap();
        assert_eq!(log.pair_sequence(), vec![1, 2]);
    }

    #[test]
    fn rejects_seed_beyond_delta() {
        // δ = 1.01^(1/2) < 1.1
        let params = ConstructionParams::<Q>::new(3, q("1/100")).with_r(q("11/10"));
        assert!(matches!(build_case1(&params), Err(Error::Construction(_))));
    }
}
