//! Exact event-driven simulation of elastic point particles on a line,
//! together with builders for nearly-equal-mass systems that realise
//! `n - 1`, `C(n, 2)` and `C(n + 1, 3)` collisions.

pub mod bounds;
pub mod constructions;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod io;
pub mod massmap;
pub mod oracle;
pub mod scalar;
pub mod state;

pub use dynamics::{
    advance, collide_pair, delta_transform, is_free, next_event, simulate, CollisionEvent, EventLog,
    SimConfig, Termination, TriplePolicy,
};
pub use error::{Error, Result};
pub use scalar::{ArithmeticMode, Scalar};
pub use state::{MassVector, PhaseState};

/// Exact rational scalar.
pub type Rational = num::rational::BigRational;
