//! Masses and phase-space states of the particle system.

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};

/// Positive masses `m_1..m_n`, `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector<S>(Vec<S>);

impl<S: Scalar> MassVector<S> {
    pub fn new(masses: Vec<S>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::InvalidState(format!(
                "need at least two masses, got {}",
                masses.len()
            )));
        }
        if let Some(index) = masses.iter().position(|m| !m.is_positive()) {
            return Err(Error::NonPositiveMass { index });
        }
        Ok(MassVector(masses))
    }

    /// `n` unit masses.
    pub fn equal(n: usize) -> Result<Self> {
        Self::new(vec![S::one(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }

    /// Mass of particle `k`, 1-based.
    pub fn get(&self, k: usize) -> &S {
        &self.0[k - 1]
    }

    /// `m_k / m_{k-1}` for `k = 2..=n`.
    pub fn ratios(&self) -> Vec<S> {
        self.0
            .windows(2)
            .map(|w| w[1].clone() / w[0].clone())
            .collect()
    }

    /// The first `k` masses.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Self::new(self.0[..k].to_vec())
    }

    /// Masses listed right-to-left, for mirrored systems.
    pub fn reversed(&self) -> Self {
        MassVector(self.0.iter().rev().cloned().collect())
    }

    pub fn convert<T: Scalar>(&self) -> MassVector<T> {
        MassVector(self.0.iter().map(convert).collect())
    }

    pub fn momentum(&self, v: &[S]) -> S {
        self.0
            .iter()
            .zip(v)
            .fold(S::zero(), |acc, (m, v)| acc + m.clone() * v.clone())
    }

    pub fn energy(&self, v: &[S]) -> S {
        let twice = self
            .0
            .iter()
            .zip(v)
            .fold(S::zero(), |acc, (m, v)| acc + m.clone() * v.clone() * v.clone());
        twice / S::from_int(2)
    }
}

/// Positions and velocities at reference time `t0`.
///
/// Constructed states have strictly increasing positions; states produced
/// by [`crate::dynamics::advance`] may have touching neighbours at collision
/// instants.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<S> {
    pub(crate) t0: S,
    pub(crate) q: Vec<S>,
    pub(crate) v: Vec<S>,
}

impl<S: Scalar> PhaseState<S> {
    pub fn new(t0: S, q: Vec<S>, v: Vec<S>) -> Result<Self> {
        let state = PhaseState { t0, q, v };
        state.check_shape()?;
        if let Some(k) = state.q.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidState(format!(
                "positions must be strictly increasing: q_{} >= q_{}",
                k + 1,
                k + 2
            )));
        }
        Ok(state)
    }

    /// Like [`PhaseState::new`] but admits touching neighbours
    /// (`q_k <= q_{k+1}`), as found in logged states at collision instants.
    pub fn new_touching(t0: S, q: Vec<S>, v: Vec<S>) -> Result<Self> {
        let state = PhaseState { t0, q, v };
        state.check_shape()?;
        if let Some(k) = state.q.windows(2).position(|w| !w[0].approx_le(&w[1])) {
            return Err(Error::InvalidState(format!(
                "positions out of order: q_{} > q_{}",
                k + 1,
                k + 2
            )));
        }
        Ok(state)
    }

    fn check_shape(&self) -> Result<()> {
        if self.q.len() != self.v.len() {
            return Err(Error::InvalidState(format!(
                "{} positions but {} velocities",
                self.q.len(),
                self.v.len()
            )));
        }
        if self.q.is_empty() {
            return Err(Error::InvalidState("empty state".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn t0(&self) -> &S {
        &self.t0
    }

    pub fn q(&self) -> &[S] {
        &self.q
    }

    pub fn v(&self) -> &[S] {
        &self.v
    }

    /// Velocity differences `Δv_k = v_{k+1} - v_k`, `k = 1..n-1`.
    /// Negative entries mark approaching pairs.
    pub fn deltas(&self) -> Vec<S> {
        self.v
            .windows(2)
            .map(|w| w[1].clone() - w[0].clone())
            .collect()
    }

    /// Same positions, all velocities negated.
    pub fn time_reversed(&self) -> Self {
        PhaseState {
            t0: self.t0.clone(),
            q: self.q.clone(),
            v: self.v.iter().map(|v| -v.clone()).collect(),
        }
    }

    /// Reflection `x -> -x` with particle labels reversed, so the result is
    /// again ordered left to right.
    pub fn mirrored(&self) -> Self {
        PhaseState {
            t0: self.t0.clone(),
            q: self.q.iter().rev().map(|q| -q.clone()).collect(),
            v: self.v.iter().rev().map(|v| -v.clone()).collect(),
        }
    }

    pub fn convert<T: Scalar>(&self) -> PhaseState<T> {
        PhaseState {
            t0: convert(&self.t0),
            q: self.q.iter().map(convert).collect(),
            v: self.v.iter().map(convert).collect(),
        }
    }

    /// Restriction to particles `1..=k`.
    pub fn prefix(&self, k: usize) -> Self {
        PhaseState {
            t0: self.t0.clone(),
            q: self.q[..k].to_vec(),
            v: self.v[..k].to_vec(),
        }
    }

    /// Appends a particle on the right; it must lie strictly right of the
    /// current last particle.
    pub fn pushed(&self, q: S, v: S) -> Result<Self> {
        let mut next = self.clone();
        if let Some(last) = next.q.last() {
            if q <= *last {
                return Err(Error::InvalidState(
                    "appended particle must lie right of the last one".into(),
                ));
            }
        }
        next.q.push(q);
        next.v.push(v);
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::BigRational;

    type Q = BigRational;

    fn ints(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| Q::from_int(x)).collect()
    }

    #[test]
    fn rejects_non_positive_masses() {
        let err = MassVector::new(ints(&[1, 0, 2])).unwrap_err();
        assert!(matches!(err, Error::NonPositiveMass { index: 1 }));
        assert!(MassVector::new(ints(&[1])).is_err());
    }

    #[test]
    fn rejects_unordered_positions() {
        assert!(PhaseState::new(Q::zero(), ints(&[0, 0]), ints(&[1, 0])).is_err());
        assert!(PhaseState::new(Q::zero(), ints(&[0, 1]), ints(&[1])).is_err());
        assert!(PhaseState::new_touching(Q::zero(), ints(&[0, 0]), ints(&[1, 0])).is_ok());
    }

    #[test]
    fn mirror_is_an_involution_and_keeps_order() {
        let s = PhaseState::new(Q::zero(), ints(&[0, 1, 5]), ints(&[3, -1, 2])).unwrap();
        let m = s.mirrored();
        assert_eq!(m.q, ints(&[-5, -1, 0]));
        assert_eq!(m.v, ints(&[-2, 1, -3]));
        assert_eq!(m.mirrored(), s);
    }

    #[test]
    fn conserved_totals() {
        let m = MassVector::new(ints(&[1, 3])).unwrap();
        assert_eq!(m.momentum(&ints(&[1, 0])), Q::one());
        assert_eq!(m.energy(&ints(&[1, 0])), Q::from_ratio(1, 2));
    }
}
