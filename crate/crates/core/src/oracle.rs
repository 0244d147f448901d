//! Brute-force fixed-step integrator used to cross-check the event-driven
//! engine. It shares no collision-time code with it: crossings are found as
//! overlaps at step ends, located by bisection, and resolved with the
//! centre-of-mass form of the elastic law.

use serde::{Deserialize, Serialize};

use crate::dynamics::{CollisionEvent, EventLog, Termination};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{MassVector, PhaseState};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub dt: f64,
    pub t_max: f64,
    pub refinement_depth: u32,
    /// How often a step may be halved while two crossings share it.
    pub max_halvings: u32,
    /// Hard bound on the number of accepted steps.
    pub max_steps: usize,
}

impl OracleConfig {
    /// `dt = min gap / (64 · velocity spread)`, unbounded horizon.
    pub fn auto<S: Scalar>(state: &PhaseState<S>) -> Self {
        let q: Vec<f64> = state.q().iter().map(Scalar::to_f64).collect();
        let v: Vec<f64> = state.v().iter().map(Scalar::to_f64).collect();
        let gap = q
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let gap = if gap.is_finite() { gap } else { 1.0 };
        let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min);
        let dt = if spread > 0.0 { gap / (64.0 * spread) } else { 1.0 };
        OracleConfig {
            dt,
            t_max: f64::INFINITY,
            refinement_depth: 40,
            max_halvings: 40,
            max_steps: 10_000_000,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

fn crossed(q: &[f64], v: &[f64], i: usize, h: f64) -> bool {
    v[i] > v[i + 1] && q[i] + v[i] * h >= q[i + 1] + v[i + 1] * h
}

fn crossings(q: &[f64], v: &[f64], h: f64) -> Vec<usize> {
    (0..q.len() - 1).filter(|&i| crossed(q, v, i, h)).collect()
}

fn bounce(m_i: f64, m_j: f64, v_i: f64, v_j: f64) -> (f64, f64) {
    let centre = (m_i * v_i + m_j * v_j) / (m_i + m_j);
    (2.0 * centre - v_i, 2.0 * centre - v_j)
}

/// Simulates with fixed steps of `oc.dt`, halving a step while it contains
/// more than one crossing. Always runs in `f64`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
pub fn oracle_simulate<S: Scalar>(
    state: &PhaseState<S>,
    masses: &MassVector<S>,
    oc: &OracleConfig,
) -> Result<EventLog<f64>> {
    if !(oc.dt > 0.0) {
        return Err(Error::field("dt", "must be positive"));
    }
    if masses.len() != state.n() {
        return Err(Error::Incompatible("mass and state lengths differ".into()));
    }
    let state = state.convert::<f64>();
    let masses = masses.convert::<f64>();
    let m = masses.as_slice();
    let mut t = *state.t0();
    let mut q = state.q().to_vec();
    let mut v = state.v().to_vec();
    let mut events = Vec::new();
    let mut termination = Termination::EventCapReached;

    for _ in 0..oc.max_steps {
        if v.windows(2).all(|w| w[0] <= w[1]) {
            termination = Termination::FreeState;
            break;
        }
        if t >= oc.t_max {
            break;
        }
        let mut h = oc.dt.min(oc.t_max - t);
        let mut hits = crossings(&q, &v, h);
        let mut halvings = 0;
        while hits.len() > 1 {
            if halvings == oc.max_halvings {
                return Err(Error::OracleStep { time: t });
            }
            h /= 2.0;
            halvings += 1;
            hits = crossings(&q, &v, h);
        }
        let Some(&i) = hits.first() else {
            for (x, u) in q.iter_mut().zip(&v) {
                *x += u * h;
            }
            t += h;
            continue;
        };
        let (mut lo, mut hi) = (0.0, h);
        for _ in 0..oc.refinement_depth {
            let mid = 0.5 * (lo + hi);
            if crossed(&q, &v, i, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        for (x, u) in q.iter_mut().zip(&v) {
            *x += u * hi;
        }
        t += hi;
        let contact = 0.5 * (q[i] + q[i + 1]);
        q[i] = contact;
        q[i + 1] = contact;
        let pre = (v[i], v[i + 1]);
        let post = bounce(m[i], m[i + 1], pre.0, pre.1);
        v[i] = post.0;
        v[i + 1] = post.1;
        events.push(CollisionEvent {
            ordinal: events.len() + 1,
            time: t,
            pair: i + 1,
            v_pre: pre,
            v_post: post,
        });
    }
    Ok(EventLog {
        masses,
        initial: state,
        events,
        final_state: PhaseState::new_touching(t, q, v)?,
        termination,
    })
}

pub fn count_collisions<S: Scalar>(log: &EventLog<S>) -> usize {
    log.count()
}

pub fn verify_sequence<S: Scalar>(log: &EventLog<S>, expected: &[usize]) -> bool {
    log.pair_sequence() == expected
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Largest absolute momentum change over both logs.
    pub momentum_drift: f64,
    /// Largest absolute energy change over both logs.
    pub energy_drift: f64,
    pub count_match: bool,
    pub sequence_match: bool,
    /// 1-based ordinal of the first event whose pair differs.
    pub first_divergence: Option<usize>,
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

/// Compares two logs of the same instance, possibly produced in different
/// arithmetic.
pub fn audit<A: Scalar, B: Scalar>(a: &EventLog<A>, b: &EventLog<B>, tol: f64) -> Result<AuditReport> {
    if a.n() != b.n() {
        return Err(Error::Incompatible(format!("logs have {} and {} particles", a.n(), b.n())));
    }
    let f64s = |xs: &[A]| xs.iter().map(Scalar::to_f64).collect::<Vec<_>>();
    let g64s = |xs: &[B]| xs.iter().map(Scalar::to_f64).collect::<Vec<_>>();
    let pairs = [
        ("masses", f64s(a.masses.as_slice()), g64s(b.masses.as_slice())),
        ("q", f64s(a.initial.q()), g64s(b.initial.q())),
        ("v", f64s(a.initial.v()), g64s(b.initial.v())),
    ];
    for (name, x, y) in &pairs {
        if !close(x, y, tol) {
            return Err(Error::Incompatible(format!("initial {name} differ beyond {tol}")));
        }
    }
    let (pa, ea) = a.drift();
    let (pb, eb) = b.drift();
    let sa = a.pair_sequence();
    let sb = b.pair_sequence();
    let first_divergence = sa
        .iter()
        .zip(&sb)
        .position(|(x, y)| x != y)
        .or_else(|| (sa.len() != sb.len()).then(|| sa.len().min(sb.len())))
        .map(|i| i + 1);
    Ok(AuditReport {
        momentum_drift: pa.to_f64().abs().max(pb.to_f64().abs()),
        energy_drift: ea.to_f64().abs().max(eb.to_f64().abs()),
        count_match: sa.len() == sb.len(),
        sequence_match: sa == sb,
        first_divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, SimConfig};
    use crate::Rational as Q;

    fn fstate(q: &[f64], v: &[f64]) -> PhaseState<f64> {
        PhaseState::new(0.0, q.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn single_exchange() {
        let s = fstate(&[0.0, 1.0], &[1.0, 0.0]);
        let m = MassVector::<f64>::equal(2).unwrap();
        let log = oracle_simulate(&s, &m, &OracleConfig::auto(&s).with_dt(1.0 / 64.0)).unwrap();
        assert_eq!(log.count(), 1);
        assert!((log.events[0].time - 1.0).abs() <= 1.0 / 64.0);
        assert_eq!(log.final_state.v(), &[0.0, 1.0]);
        assert_eq!(log.termination, Termination::FreeState);
    }

    #[test]
    fn three_equal_masses_agree_with_engine() {
        let s = fstate(&[0.0, 1.0, 2.5], &[2.0, 0.5, -1.0]);
        let m = MassVector::<f64>::equal(3).unwrap();
        let oracle = oracle_simulate(&s, &m, &OracleConfig::auto(&s)).unwrap();
        let engine = simulate(&s, &m, &SimConfig::for_particles(3)).unwrap();
        assert_eq!(oracle.count(), 3);
        assert!(verify_sequence(&oracle, &engine.pair_sequence()));
    }

    #[test]
    fn rejects_bad_step() {
        let s = fstate(&[0.0, 1.0], &[1.0, 0.0]);
        let m = MassVector::<f64>::equal(2).unwrap();
        let oc = OracleConfig::auto(&s).with_dt(0.0);
        assert!(oracle_simulate(&s, &m, &oc).is_err());
    }

    #[test]
    fn audit_of_identical_logs() {
        let s = PhaseState::<Q>::new(Q::zero(), vec![Q::zero(), Q::one()], vec![Q::one(), Q::zero()]).unwrap();
        let m = MassVector::new(vec![Q::one(), Q::from_int(2)]).unwrap();
        let log = simulate(&s, &m, &SimConfig::for_particles(2)).unwrap();
        let report = audit(&log, &log, 0.0).unwrap();
        assert!(report.count_match && report.sequence_match);
        assert_eq!(report.first_divergence, None);
        assert_eq!(report.momentum_drift, 0.0);
        assert_eq!(report.energy_drift, 0.0);
    }

    #[test]
    fn audit_finds_divergence_and_rejects_mismatch() {
        let s = fstate(&[0.0, 1.0, 2.5], &[2.0, 0.5, -1.0]);
        let m = MassVector::<f64>::equal(3).unwrap();
        let log = simulate(&s, &m, &SimConfig::for_particles(3)).unwrap();
        let mut other = log.clone();
        other.events[1].pair = if other.events[1].pair == 1 { 2 } else { 1 };
        assert_eq!(audit(&log, &other, 1e-12).unwrap().first_divergence, Some(2));
        other.events.pop();
        let r = audit(&log, &other, 1e-12).unwrap();
        assert!(!r.count_match);
        let moved = fstate(&[0.0, 1.5, 2.5], &[2.0, 0.5, -1.0]);
        let log2 = simulate(&moved, &m, &SimConfig::for_particles(3)).unwrap();
        assert!(matches!(audit(&log, &log2, 1e-9), Err(Error::Incompatible(_))));
        assert_eq!(count_collisions(&log), 3);
        let apart = fstate(&[0.0, 1.0, 2.0], &[-1.0, 0.0, 1.0]);
        let empty = simulate(&apart, &m, &SimConfig::for_particles(3)).unwrap();
        assert!(verify_sequence(&empty, &[]));
        assert!(!verify_sequence(&log, &[]));
    }
}
