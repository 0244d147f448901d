//! Bound functions on adjacent mass ratios.
//!
//! `g(x) = 2x - 1` and `f(x) = (1 + x) / (3 - x)` and their iterates
//! `g_k = g∘…∘g`, `f_k = f∘…∘f` bracket the admissible growth of the ratio
//! `m_k / m_{k-1}` along a chain of particles. Both are evaluated through
//! their closed forms.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One step of the lower bound: `f(x) = (1 + x) / (3 - x)`.
pub fn f_step<S: Scalar>(x: &S) -> Result<S> {
    f_k(x, 1)
}

/// One step of the upper bound: `g(x) = 2x - 1`.
pub fn g_step<S: Scalar>(x: &S) -> S {
    g_k(x, 1)
}

/// `g_k(x) = 2^k (x - 1) + 1`.
pub fn g_k<S: Scalar>(x: &S, k: u32) -> S {
    S::two_pow(k) * (x.clone() - S::one()) + S::one()
}

/// `f_k(x) = (k(x - 1) - 2x) / (k(x - 1) - 2)`, with a pole at `(k + 2) / k`.
pub fn f_k<S: Scalar>(x: &S, k: u32) -> Result<S> {
    if k == 0 {
        return Err(Error::Domain("bound functions are indexed from k = 1".into()));
    }
    let kk = S::from_int(k as i64);
    let shifted = kk * (x.clone() - S::one());
    let den = shifted.clone() - S::from_int(2);
    if den.is_zero() {
        return Err(Error::Domain(format!("f_{k} has a pole at x = {x}")));
    }
    Ok((shifted - S::from_int(2) * x.clone()) / den)
}

/// The point where `f_k` and `g_k` cross, and their common value:
/// `x = (k + 2 - 2^(1-k)) / k`, `f_k(x) = g_k(x) = (k + 2^(k+1) - 2) / k`.
pub fn coincidence_point<S: Scalar>(k: u32) -> Result<(S, S)> {
    if k == 0 {
        return Err(Error::Domain("bound functions are indexed from k = 1".into()));
    }
    let kk = S::from_int(k as i64);
    let x = (kk.clone() + S::from_int(2) - S::from_int(2) / S::two_pow(k)) / kk.clone();
    let value = (kk.clone() + S::two_pow(k + 1) - S::from_int(2)) / kk;
    Ok((x, value))
}
