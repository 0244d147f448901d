//! JSON documents. Exact values are written as `"p/q"` strings and floats as
//! numbers; a reader infers the arithmetic from which of the two it finds.
//! Schema errors name the offending field by its path.

use serde_json::{json, Map, Value};

use crate::constructions::{CaseTag, ConstructionResult};
use crate::dynamics::{CollisionEvent, EventLog, SimConfig, Termination, TriplePolicy};
use crate::error::{Error, Result};
use crate::massmap::{StateFamily, SweepSpec};
use crate::scalar::{ArithmeticMode, Scalar};
use crate::state::{MassVector, PhaseState};

fn field<'a>(v: &'a Value, path: &str, key: &str) -> Result<&'a Value> {
    v.as_object()
        .ok_or_else(|| Error::field(path_or_root(path), "expected an object"))?
        .get(key)
        .ok_or_else(|| Error::field(join(path, key), "missing"))
}

fn optional<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    v.get(key).filter(|x| !x.is_null())
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn path_or_root(path: &str) -> String {
    if path.is_empty() { "<root>".into() } else { path.to_string() }
}

fn scalar<S: Scalar>(v: &Value, path: &str) -> Result<S> {
    S::from_json(v).map_err(|e| Error::field(path, e.to_string()))
}

fn scalars<S: Scalar>(v: &Value, path: &str) -> Result<Vec<S>> {
    v.as_array()
        .ok_or_else(|| Error::field(path, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, x)| scalar(x, &format!("{path}[{i}]")))
        .collect()
}

fn pair<S: Scalar>(v: &Value, path: &str) -> Result<(S, S)> {
    let xs = scalars::<S>(v, path)?;
    match <[S; 2]>::try_from(xs) {
        Ok([a, b]) => Ok((a, b)),
        Err(_) => Err(Error::field(path, "expected exactly two values")),
    }
}

fn uint(v: &Value, path: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::field(path, "expected a non-negative integer"))
}

fn string<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::field(path, "expected a string"))
}

fn write_all<S: Scalar>(xs: &[S]) -> Value {
    Value::Array(xs.iter().map(Scalar::to_json).collect())
}

/// Exact if the first scalar found under `masses` is a string.
pub fn detect_mode(doc: &Value) -> ArithmeticMode {
    let first = doc
        .get("masses")
        .and_then(|m| m.as_array())
        .and_then(|m| m.first());
    match first {
        Some(Value::Number(_)) => ArithmeticMode::Float,
        _ => ArithmeticMode::Exact,
    }
}

fn with_context(e: Error, prefix: &str) -> Error {
    match e {
        Error::Field { field, message } => Error::field(join(prefix, &field), message),
        Error::InvalidState(message) => Error::field(path_or_root(prefix), message),
        Error::NonPositiveMass { index } => Error::field(format!("{prefix}[{index}]"), "mass must be positive"),
        other => other,
    }
}

pub fn state_to_json<S: Scalar>(s: &PhaseState<S>) -> Value {
    json!({ "t0": s.t0().to_json(), "q": write_all(s.q()), "v": write_all(s.v()) })
}

/// Strictly ordered positions unless `touching` is set.
pub fn state_from_json<S: Scalar>(v: &Value, path: &str, touching: bool) -> Result<PhaseState<S>> {
    let t0 = match optional(v, "t0") {
        Some(t) => scalar(t, &join(path, "t0"))?,
        None => S::zero(),
    };
    let q = scalars(field(v, path, "q")?, &join(path, "q"))?;
    let vel = scalars(field(v, path, "v")?, &join(path, "v"))?;
    let built = if touching { PhaseState::new_touching(t0, q, vel) } else { PhaseState::new(t0, q, vel) };
    built.map_err(|e| with_context(e, path))
}

pub fn masses_from_json<S: Scalar>(v: &Value, path: &str) -> Result<MassVector<S>> {
    MassVector::new(scalars(v, path)?).map_err(|e| with_context(e, path))
}

fn check_len(path: &str, got: usize, n: usize) -> Result<()> {
    if got != n {
        return Err(Error::field(path, format!("has {got} entries, expected {n}")));
    }
    Ok(())
}

/// `{masses, state}` as read by `simulate`.
pub fn instance_from_json<S: Scalar>(doc: &Value) -> Result<(MassVector<S>, PhaseState<S>)> {
    let masses = masses_from_json(field(doc, "", "masses")?, "masses")?;
    let state = state_from_json(field(doc, "", "state")?, "state", true)?;
    check_len("state.q", state.n(), masses.len())?;
    Ok((masses, state))
}

pub fn instance_to_json<S: Scalar>(masses: &MassVector<S>, state: &PhaseState<S>) -> Value {
    json!({ "masses": write_all(masses.as_slice()), "state": state_to_json(state) })
}

pub fn log_to_json<S: Scalar>(log: &EventLog<S>) -> Value {
    let events: Vec<Value> = log
        .events
        .iter()
        .map(|e| {
            json!({
                "t": e.time.to_json(),
                "pair": e.pair,
                "v_pre": [e.v_pre.0.to_json(), e.v_pre.1.to_json()],
                "v_post": [e.v_post.0.to_json(), e.v_post.1.to_json()],
            })
        })
        .collect();
    json!({
        "n": log.n(),
        "masses": write_all(log.masses.as_slice()),
        "initial": state_to_json(&log.initial),
        "events": events,
        "final": state_to_json(&log.final_state),
        "termination": log.termination.as_str(),
    })
}

pub fn log_from_json<S: Scalar>(doc: &Value) -> Result<EventLog<S>> {
    let n = uint(field(doc, "", "n")?, "n")? as usize;
    let masses = masses_from_json(field(doc, "", "masses")?, "masses")?;
    check_len("masses", masses.len(), n)?;
    let initial = state_from_json(field(doc, "", "initial")?, "initial", true)?;
    check_len("initial.q", initial.n(), n)?;
    let final_state = state_from_json(field(doc, "", "final")?, "final", true)?;
    check_len("final.q", final_state.n(), n)?;
    let raw = field(doc, "", "events")?
        .as_array()
        .ok_or_else(|| Error::field("events", "expected an array"))?;
    let mut events = Vec::with_capacity(raw.len());
    for (i, e) in raw.iter().enumerate() {
        let path = format!("events[{i}]");
        let pair = uint(field(e, &path, "pair")?, &join(&path, "pair"))? as usize;
        if pair == 0 || pair >= n {
            return Err(Error::field(join(&path, "pair"), format!("must lie in 1..={}", n - 1)));
        }
        events.push(CollisionEvent {
            ordinal: i + 1,
            time: scalar(field(e, &path, "t")?, &join(&path, "t"))?,
            pair,
            v_pre: pair_of(e, &path, "v_pre")?,
            v_post: pair_of(e, &path, "v_post")?,
        });
    }
    let termination = string(field(doc, "", "termination")?, "termination")?;
    let termination = Termination::parse(termination)
        .ok_or_else(|| Error::field("termination", format!("unknown value `{termination}`")))?;
    Ok(EventLog { masses, initial, events, final_state, termination })
}

fn pair_of<S: Scalar>(e: &Value, path: &str, key: &str) -> Result<(S, S)> {
    pair(field(e, path, key)?, &join(path, key))
}

fn opt_json<S: Scalar>(x: &Option<S>) -> Value {
    x.as_ref().map(Scalar::to_json).unwrap_or(Value::Null)
}

pub fn construction_to_json<S: Scalar>(c: &ConstructionResult<S>) -> Value {
    let mut doc = json!({
        "case_tag": c.case_tag.as_str(),
        "n": c.n,
        "epsilon": c.epsilon.to_json(),
        "params": {
            "r": opt_json(&c.r),
            "theta": opt_json(&c.theta),
            "kappa": opt_json(&c.kappa),
            "seed": c.seed,
        },
        "masses": write_all(c.masses.as_slice()),
        "state": state_to_json(&c.state),
        "predicted_count": c.predicted_count,
        "certified_radius": c.certified_radius.to_json(),
    });
    let obj = doc.as_object_mut().expect("object");
    if let Some(seq) = &c.expected_sequence {
        obj.insert("expected_sequence".into(), json!(seq));
    }
    if let Some(rho) = &c.mass_radius {
        obj.insert("mass_radius".into(), rho.to_json());
    }
    doc
}

pub fn construction_from_json<S: Scalar>(doc: &Value) -> Result<ConstructionResult<S>> {
    let tag = string(field(doc, "", "case_tag")?, "case_tag")?;
    let case_tag = CaseTag::parse(tag).ok_or_else(|| Error::field("case_tag", format!("unknown case `{tag}`")))?;
    let n = uint(field(doc, "", "n")?, "n")? as usize;
    let params = field(doc, "", "params")?;
    let opt = |key: &str| -> Result<Option<S>> {
        optional(params, key).map(|x| scalar(x, &join("params", key))).transpose()
    };
    let masses = masses_from_json(field(doc, "", "masses")?, "masses")?;
    check_len("masses", masses.len(), n)?;
    let state = state_from_json(field(doc, "", "state")?, "state", false)?;
    check_len("state.q", state.n(), n)?;
    let expected_sequence = match optional(doc, "expected_sequence") {
        None => None,
        Some(seq) => Some(
            seq.as_array()
                .ok_or_else(|| Error::field("expected_sequence", "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, p)| uint(p, &format!("expected_sequence[{i}]")).map(|p| p as usize))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(ConstructionResult {
        case_tag,
        n,
        epsilon: scalar(field(doc, "", "epsilon")?, "epsilon")?,
        r: opt("r")?,
        theta: opt("theta")?,
        kappa: opt("kappa")?,
        seed: optional(params, "seed").map(|s| uint(s, "params.seed")).transpose()?.unwrap_or(0),
        masses,
        state,
        predicted_count: uint(field(doc, "", "predicted_count")?, "predicted_count")? as usize,
        expected_sequence,
        certified_radius: scalar(field(doc, "", "certified_radius")?, "certified_radius")?,
        mass_radius: optional(doc, "mass_radius").map(|x| scalar(x, "mass_radius")).transpose()?,
    })
}

pub fn config_from_json<S: Scalar>(v: Option<&Value>, n: usize) -> Result<SimConfig<S>> {
    let mut config = SimConfig::<S>::for_particles(n);
    let Some(v) = v else { return Ok(config) };
    if let Some(t) = optional(v, "tie_tolerance") {
        config.tie_tolerance = scalar(t, "config.tie_tolerance")?;
    }
    if let Some(m) = optional(v, "max_events") {
        config.max_events = uint(m, "config.max_events")? as usize;
    }
    if let Some(p) = optional(v, "triple_policy") {
        config.triple_policy = match string(p, "config.triple_policy")? {
            "Error" => TriplePolicy::Error,
            "EqualMassExchange" => TriplePolicy::EqualMassExchange,
            other => return Err(Error::field("config.triple_policy", format!("unknown policy `{other}`"))),
        };
    }
    config.validate().map_err(|e| with_context(e, "config"))?;
    Ok(config)
}

/// `{n, epsilon, axes: [a, b], grid, state_family, config?}` where
/// `state_family` is `"Case1Family"`, `"Case3Family"` or
/// `{"FixedState": {t0, q, v}}`.
pub fn sweep_spec_from_json<S: Scalar>(doc: &Value) -> Result<SweepSpec<S>> {
    let n = uint(field(doc, "", "n")?, "n")? as usize;
    let epsilon = scalar(field(doc, "", "epsilon")?, "epsilon")?;
    let grid = uint(field(doc, "", "grid")?, "grid")? as usize;
    let family = field(doc, "", "state_family")?;
    let state_family = match family {
        Value::String(s) if s == "Case1Family" => StateFamily::Case1Family,
        Value::String(s) if s == "Case3Family" => StateFamily::Case3Family,
        Value::Object(obj) if obj.contains_key("FixedState") => StateFamily::FixedState(state_from_json(
            &obj["FixedState"],
            "state_family.FixedState",
            false,
        )?),
        _ => {
            return Err(Error::field(
                "state_family",
                "expected \"Case1Family\", \"Case3Family\" or {\"FixedState\": state}",
            ))
        }
    };
    let mut spec = SweepSpec::new(n, epsilon, grid, state_family);
    if let Some(axes) = optional(doc, "axes") {
        let a = axes.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::field("axes", "expected two ratio indices"))?;
        spec.axes = (uint(&a[0], "axes[0]")? as usize, uint(&a[1], "axes[1]")? as usize);
    }
    spec.config = config_from_json(optional(doc, "config"), n)?;
    spec.validate()?;
    Ok(spec)
}

pub fn sweep_spec_to_json<S: Scalar>(spec: &SweepSpec<S>) -> Value {
    let family = match &spec.state_family {
        StateFamily::FixedState(s) => json!({ "FixedState": state_to_json(s) }),
        StateFamily::Case1Family => json!("Case1Family"),
        StateFamily::Case3Family => json!("Case3Family"),
    };
    let mut config = Map::new();
    config.insert("tie_tolerance".into(), spec.config.tie_tolerance.to_json());
    config.insert("max_events".into(), json!(spec.config.max_events));
    config.insert(
        "triple_policy".into(),
        json!(match spec.config.triple_policy {
            TriplePolicy::Error => "Error",
            TriplePolicy::EqualMassExchange => "EqualMassExchange",
        }),
    );
    json!({
        "n": spec.n,
        "epsilon": spec.epsilon.to_json(),
        "axes": [spec.axes.0, spec.axes.1],
        "grid": spec.grid,
        "state_family": family,
        "config": Value::Object(config),
    })
}
