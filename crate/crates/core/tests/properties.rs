use std::collections::HashSet;

use hardline_core::bounds::{f_k, g_k};
use hardline_core::{
    collide_pair, delta_transform, simulate, EventLog, MassVector, PhaseState, Rational as Q, Scalar,
    SimConfig, Termination,
};
use proptest::prelude::*;

fn ratio(num: i64, den: i64) -> Q {
    Q::from_ratio(num, den)
}

/// Rational instances: masses in [1/2, 2], unit-order gaps, velocities in
/// [-4, 4], all with small denominators.
fn instance(min_n: usize, max_n: usize) -> impl Strategy<Value = (MassVector<Q>, PhaseState<Q>)> {
    (min_n..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(8i64..=32, n),
            prop::collection::vec(1i64..=24, n - 1),
            prop::collection::vec(-48i64..=48, n),
        )
            .prop_map(|(m, gaps, v)| {
                let masses = MassVector::new(m.into_iter().map(|x| ratio(x, 16)).collect()).unwrap();
                let mut q = vec![Q::zero()];
                for g in gaps {
                    let next = q.last().unwrap().clone() + ratio(g, 8);
                    q.push(next);
                }
                let v = v.into_iter().map(|x| ratio(x, 12)).collect();
                (masses, PhaseState::new(Q::zero(), q, v).unwrap())
            })
    })
}

fn run(m: &MassVector<Q>, s: &PhaseState<Q>) -> EventLog<Q> {
    simulate(s, m, &SimConfig::for_particles(s.n()).with_max_events(100_000)).unwrap()
}

fn distinct_times(log: &EventLog<Q>) -> bool {
    log.events.windows(2).all(|w| w[0].time != w[1].time)
}

/// Rational in the open interval `(lo, hi)` at position `i / (den + 1)`.
fn inside(lo: &Q, hi: &Q, i: i64, den: i64) -> Q {
    lo.clone() + (hi.clone() - lo.clone()) * ratio(i, den + 1)
}

/// The one-step lower bound, written out independently of the library.
fn f_once(x: &Q) -> Q {
    (Q::one() + x.clone()) / (Q::from_int(3) - x.clone())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn momentum_and_energy_are_conserved_exactly((m, s) in instance(2, 6)) {
        let log = run(&m, &s);
        prop_assume!(log.termination == Termination::FreeState);
        let (dp, de) = log.drift();
        prop_assert!(dp.is_zero());
        prop_assert!(de.is_zero());
    }

    #[test]
    fn float_drift_is_tiny((m, s) in instance(2, 6)) {
        let (mf, sf) = (m.convert::<f64>(), s.convert::<f64>());
        let log = simulate(&sf, &mf, &SimConfig::for_particles(sf.n()).with_max_events(100_000)).unwrap();
        prop_assume!(log.termination == Termination::FreeState);
        let (dp, de) = log.drift();
        let p_scale = mf.as_slice().iter().zip(sf.v()).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1.0);
        let e_scale = mf.energy(sf.v()).max(1.0);
        prop_assert!(dp.abs() <= 1e-9 * p_scale);
        prop_assert!(de.abs() <= 1e-9 * e_scale);
    }

    #[test]
    fn positions_stay_ordered_through_every_event((m, s) in instance(2, 6)) {
        let log = run(&m, &s);
        let mut state = log.initial.clone();
        for e in &log.events {
            let dt = e.time.clone() - state.t0().clone();
            state = hardline_core::advance(&state, &dt).unwrap();
            prop_assert!(state.q().windows(2).all(|w| w[0] <= w[1]));
            let mut v = state.v().to_vec();
            v[e.pair - 1] = e.v_post.0.clone();
            v[e.pair] = e.v_post.1.clone();
            state = PhaseState::new_touching(e.time.clone(), state.q().to_vec(), v).unwrap();
        }
        prop_assert_eq!(state, log.replay().unwrap());
    }

    #[test]
    fn equal_masses_permute_velocities((_, s) in instance(2, 6)) {
        let m = MassVector::<Q>::equal(s.n()).unwrap();
        let log = run(&m, &s);
        prop_assume!(log.termination == Termination::FreeState);
        let mut before = s.v().to_vec();
        let mut after = log.final_state.v().to_vec();
        before.sort_by(|a, b| a.partial_cmp(b).unwrap());
        after.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(before, after);
    }

    #[test]
    fn equal_mass_collision_exchanges(m in 1i64..100, a in -50i64..50, b in -50i64..50) {
        let (m, a, b) = (ratio(m, 7), ratio(a, 3), ratio(b, 5));
        prop_assert_eq!(collide_pair(&m, &m, &a, &b).unwrap(), (b, a));
    }

    #[test]
    fn reversing_velocities_reverses_the_sequence((m, s) in instance(2, 5)) {
        let log = run(&m, &s);
        prop_assume!(log.termination == Termination::FreeState && distinct_times(&log));
        let back = run(&m, &log.final_state.time_reversed());
        let mut expected = log.pair_sequence();
        expected.reverse();
        // The reversed run goes on into the past of the initial state.
        prop_assert!(back.pair_sequence().starts_with(&expected));
        if hardline_core::is_free(&s.time_reversed()) {
            prop_assert_eq!(back.pair_sequence(), expected);
        }
    }

    #[test]
    fn difference_update_matches_velocity_update((m, s) in instance(2, 6)) {
        let log = run(&m, &s);
        let mut v = s.v().to_vec();
        for e in &log.events {
            let deltas: Vec<Q> = v.windows(2).map(|w| w[1].clone() - w[0].clone()).collect();
            v[e.pair - 1] = e.v_post.0.clone();
            v[e.pair] = e.v_post.1.clone();
            let direct: Vec<Q> = v.windows(2).map(|w| w[1].clone() - w[0].clone()).collect();
            prop_assert_eq!(delta_transform(&deltas, e.pair, &m).unwrap(), direct);
        }
    }

    #[test]
    fn all_approaching_states_see_every_pair((m, s) in instance(2, 6)) {
        let mut v = s.v().to_vec();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v.dedup();
        prop_assume!(v.len() == s.n());
        let s = PhaseState::new(Q::zero(), s.q().to_vec(), v).unwrap();
        let log = run(&m, &s);
        prop_assume!(log.termination == Termination::FreeState);
        let pairs: HashSet<usize> = log.pair_sequence().into_iter().collect();
        prop_assert_eq!(pairs.len(), s.n() - 1);
        prop_assert!(log.count() >= s.n() - 1);
    }

    #[test]
    fn a_missing_pair_decouples_the_system((m, s) in instance(3, 6)) {
        let log = run(&m, &s);
        prop_assume!(log.termination == Termination::FreeState);
        let seq = log.pair_sequence();
        for k in 1..s.n() {
            if !seq.contains(&k) {
                let v = log.final_state.v();
                prop_assert!(v[k] >= v[k - 1]);
                // Dropping the other side leaves the events of each half intact.
                if k >= 2 {
                    let left: Vec<usize> = seq.iter().copied().filter(|&p| p < k).collect();
                    let sub = run(&m.prefix(k).unwrap(), &s.prefix(k));
                    prop_assert_eq!(sub.pair_sequence(), left);
                }
            }
        }
    }

    #[test]
    fn simulations_terminate_free((m, s) in instance(2, 6)) {
        let log = run(&m, &s);
        prop_assert!(log.termination != Termination::EventCapReached);
    }

    #[test]
    fn bounds_are_ordered(k in 1u32..=12, i in 1i64..=64) {
        let x = inside(&Q::one(), &ratio(k as i64 + 1, k as i64), i, 64);
        let f = f_k(&x, k).unwrap();
        prop_assert!(g_k(&x, k) > f);
        prop_assert!(f > x);
    }

    #[test]
    fn f_k_is_increasing(k in 1u32..=12, i in 1i64..=63, j in 1i64..=32) {
        let hi = ratio(k as i64 + 2, k as i64);
        let a = inside(&Q::one(), &hi, i, 64);
        let b = inside(&a, &hi, j, 32);
        prop_assert!(f_k(&b, k).unwrap() > f_k(&a, k).unwrap());
    }

    #[test]
    fn f_k_is_convex(k in 1u32..=12, i in 1i64..=20, j in 1i64..=20, l in 1i64..=20) {
        let hi = ratio(k as i64 + 2, k as i64);
        let x1 = inside(&Q::one(), &hi, i, 20);
        let x2 = inside(&x1, &hi, j, 20);
        let x3 = inside(&x2, &hi, l, 20);
        let chord = ((x3.clone() - x2.clone()) * f_k(&x1, k).unwrap()
            + (x2.clone() - x1.clone()) * f_k(&x3, k).unwrap())
            / (x3 - x1);
        prop_assert!(f_k(&x2, k).unwrap() <= chord);
    }

    #[test]
    fn iterates_compose(k in 1u32..=10, i in 1i64..=50) {
        // Below the pole of f_(k+1), where f_k(x) < 3.
        let x = inside(&Q::one(), &ratio(k as i64 + 3, k as i64 + 1), i, 50);
        let fk = f_k(&x, k).unwrap();
        prop_assert_eq!(f_k(&x, k + 1).unwrap(), f_once(&fk));
        prop_assert_eq!(g_k(&x, k + 1), Q::from_int(2) * g_k(&x, k) - Q::one());
    }
}
