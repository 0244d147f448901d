//! Plot-ready space-time data: one polyline per particle.

use std::io::Write;

use crate::dynamics::EventLog;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `t0 + 5/4 (T - t0)` with `T` the last event time, so the free flight
/// after the last collision stays visible; one time unit when nothing
/// happens.
pub fn default_horizon<S: Scalar>(log: &EventLog<S>) -> S {
    let t0 = log.initial.t0().clone();
    let span = log.last_time() - t0.clone();
    if span.is_positive() {
        t0 + span * S::from_ratio(5, 4)
    } else {
        t0 + S::one()
    }
}

/// Rows `particle_index, t, q` (1-based index, decimal values). Each
/// particle contributes its start point, one vertex per collision it takes
/// part in, and its position at `t_end`.
pub fn write_spacetime_csv<S: Scalar, W: Write>(log: &EventLog<S>, t_end: &S, out: W) -> Result<()> {
    if t_end < log.initial.t0() {
        return Err(Error::field("t_end", "must not precede the initial time"));
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["particle_index", "t", "q"]).map_err(io)?;
    for k in 1..=log.n() {
        for (t, q) in log.polyline(k, t_end) {
            w.write_record([k.to_string(), t.to_f64().to_string(), q.to_f64().to_string()])
                .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}
