//! Collision counts over a two-dimensional slice of mass space around the
//! equal-mass diagonal.
//!
//! Masses are parametrised by adjacent ratios `m_{k+1}/m_k` with `m_1 = 1`.
//! Two ratios are gridded over `(1 - ε, 1 + ε)`; the rest stay at their base
//! value (1 for a fixed state, the constructed ratios for a family).

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constructions::{build_case1, build_case3, ConstructionParams};
use crate::dynamics::{binomial, simulate, SimConfig, Termination};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{MassVector, PhaseState};
use crate::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily<S> {
    FixedState(PhaseState<S>),
    /// State (and base ratios) of the default increasing-chain construction.
    Case1Family,
    /// State (and base ratios) of the default cascading construction.
    Case3Family,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<S> {
    pub n: usize,
    pub epsilon: S,
    /// 1-based ratio indices; ratio `a` is `m_{a+1} / m_a`.
    pub axes: (usize, usize),
    /// Points per axis.
    pub grid: usize,
    pub state_family: StateFamily<S>,
    pub config: SimConfig<S>,
}

impl<S: Scalar> SweepSpec<S> {
    pub fn new(n: usize, epsilon: S, grid: usize, state_family: StateFamily<S>) -> Self {
        SweepSpec {
            n,
            epsilon,
            axes: (1, 2.min(n.saturating_sub(1)).max(1)),
            grid,
            state_family,
            config: SimConfig::for_particles(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::field("n", "need at least two particles"));
        }
        if !(self.epsilon.is_positive() && self.epsilon < S::one()) {
            return Err(Error::field("epsilon", "must lie in (0, 1)"));
        }
        if self.grid < 2 {
            return Err(Error::field("grid", "need at least two points per axis"));
        }
        let (a, b) = self.axes;
        let max = self.n - 1;
        if a == 0 || a > max || b == 0 || b > max {
            return Err(Error::field("axes", format!("ratio indices must lie in 1..={max}")));
        }
        if a == b && self.n > 2 {
            return Err(Error::field("axes", "the two axes must differ"));
        }
        if let StateFamily::FixedState(s) = &self.state_family {
            if s.n() != self.n {
                return Err(Error::field("state_family", format!("state has {} particles, expected {}", s.n(), self.n)));
            }
        }
        self.config.validate()
    }

    /// Grid coordinate `i` (0-based): `1 - ε + 2ε (i + 1) / (grid + 1)`.
    /// With an odd grid the middle point is exactly 1.
    pub fn coordinate(&self, i: usize) -> S {
        let step = S::from_ratio(2 * (i as i64 + 1), self.grid as i64 + 1);
        S::one() - self.epsilon.clone() + step * self.epsilon.clone()
    }

    fn base(&self) -> Result<(PhaseState<S>, Vec<S>)> {
        let n = self.n;
        let built = match &self.state_family {
            StateFamily::FixedState(s) => return Ok((s.clone(), vec![S::one(); n - 1])),
            StateFamily::Case1Family | StateFamily::Case3Family => {
                let params = ConstructionParams::<Rational>::new(n, crate::scalar::convert(&self.epsilon));
                if matches!(self.state_family, StateFamily::Case1Family) {
                    build_case1(&params)?
                } else {
                    build_case3(&params)?
                }
            }
        };
        let ratios = built.masses.ratios().iter().map(crate::scalar::convert).collect();
        Ok((built.state.convert(), ratios))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CountClass {
    UnderQuadratic,
    Quadratic,
    OverQuadratic,
    Unclassified,
}

impl CountClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountClass::UnderQuadratic => "UnderQuadratic",
            CountClass::Quadratic => "Quadratic",
            CountClass::OverQuadratic => "OverQuadratic",
            CountClass::Unclassified => "Unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub count: usize,
    pub class: CountClass,
    pub termination: Termination,
}

/// Count relative to `C(n, 2)`. Runs that hit the event cap or a triple
/// contact are `Unclassified`.
pub fn classify<S: Scalar>(masses: &MassVector<S>, state: &PhaseState<S>, config: &SimConfig<S>) -> Result<Classification> {
    let log = simulate(state, masses, config)?;
    let quadratic = binomial(state.n() as u64, 2) as usize;
    let class = match log.termination {
        Termination::FreeState => match log.count().cmp(&quadratic) {
            std::cmp::Ordering::Less => CountClass::UnderQuadratic,
            std::cmp::Ordering::Equal => CountClass::Quadratic,
            std::cmp::Ordering::Greater => CountClass::OverQuadratic,
        },
        _ => CountClass::Unclassified,
    };
    Ok(Classification { count: log.count(), class, termination: log.termination })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell<S> {
    /// 0-based grid indices along the two axes.
    pub index: (usize, usize),
    pub ratios: (S, S),
    pub masses: MassVector<S>,
    pub count: usize,
    pub class: CountClass,
    pub termination: Termination,
    /// Whether every mass lies in `(1 - ε, 1 + ε)`.
    pub in_box: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<S> {
    pub n: usize,
    pub grid: usize,
    pub axes: (usize, usize),
    /// Row-major: `cells[i * grid + j]` has index `(i, j)`.
    pub cells: Vec<SweepCell<S>>,
    pub histogram: BTreeMap<usize, usize>,
}

pub fn sweep<S: Scalar>(spec: &SweepSpec<S>) -> Result<SweepResult<S>> {
    spec.validate()?;
    let (state, base) = spec.base()?;
    let g = spec.grid;
    let lo = S::one() - spec.epsilon.clone();
    let hi = S::one() + spec.epsilon.clone();
    let cells = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / g, idx % g);
            let (x, y) = (spec.coordinate(i), spec.coordinate(j));
            let mut ratios = base.clone();
            ratios[spec.axes.0 - 1] = x.clone();
            if spec.axes.1 != spec.axes.0 {
                ratios[spec.axes.1 - 1] = y.clone();
            }
            let mut masses = vec![S::one()];
            for r in &ratios {
                let next = masses.last().expect("non-empty").clone() * r.clone();
                masses.push(next);
            }
            let in_box = masses.iter().all(|m| *m > lo && *m < hi);
            let masses = MassVector::new(masses)?;
            let c = classify(&masses, &state, &spec.config)?;
            Ok(SweepCell {
                index: (i, j),
                ratios: (x, y),
                masses,
                count: c.count,
                class: c.class,
                termination: c.termination,
                in_box,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut histogram = BTreeMap::new();
    for cell in &cells {
        *histogram.entry(cell.count).or_insert(0) += 1;
    }
    Ok(SweepResult { n: spec.n, grid: g, axes: spec.axes, cells, histogram })
}

impl<S: Scalar> SweepResult<S> {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell<S> {
        &self.cells[i * self.grid + j]
    }

    pub fn classes(&self) -> BTreeMap<CountClass, usize> {
        let mut tally = BTreeMap::new();
        for cell in &self.cells {
            *tally.entry(cell.class).or_insert(0) += 1;
        }
        tally
    }

    /// Columns `axis1_ratio, axis2_ratio, count, class, termination, in_box`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["axis1_ratio", "axis2_ratio", "count", "class", "termination", "in_box"])
            .map_err(csv_error)?;
        for c in &self.cells {
            w.write_record([
                c.ratios.0.to_f64().to_string(),
                c.ratios.1.to_f64().to_string(),
                c.count.to_string(),
                c.class.as_str().to_string(),
                c.termination.as_str().to_string(),
                c.in_box.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> Value {
        let histogram: BTreeMap<String, usize> = self.histogram.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let classes: BTreeMap<&str, usize> = self.classes().iter().map(|(k, v)| (k.as_str(), *v)).collect();
        json!({
            "n": self.n,
            "grid": self.grid,
            "axes": [self.axes.0, self.axes.1],
            "cells": self.cells.len(),
            "out_of_box": self.cells.iter().filter(|c| !c.in_box).count(),
            "histogram": histogram,
            "classes": classes,
        })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
