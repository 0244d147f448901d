use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hardline_core::constructions::{
    build_case1, build_case2, build_case3, build_case3_alternating, certify_open, CaseTag, ConstructionParams,
};
use hardline_core::export::{default_horizon, write_spacetime_csv};
use hardline_core::io;
use hardline_core::massmap::{sweep, StateFamily, SweepSpec};
use hardline_core::{simulate, ArithmeticMode, Error, Rational, Scalar, SimConfig, TriplePolicy};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hardline", version, about = "Elastic point particles on a line: simulate, construct, certify, sweep")]
struct Cli {
    /// Arithmetic: exact rationals or f64. Defaults to the input's own
    /// encoding, or exact when there is no input.
    #[arg(long, global = true, env = "HARDLINE_MODE")]
    mode: Option<ArithmeticMode>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate `{masses, state}` and write the event log.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
        #[command(flatten)]
        out: Out,
    },
    /// Build an instance with a prescribed collision count.
    Construct {
        /// 1, 2, 3 or 3alt.
        #[arg(long = "case")]
        case: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        /// Seed ratio m_2/m_1.
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
    /// Estimate the perturbation radius on which a construction keeps its count.
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Starting radius, halved until every sample agrees.
        #[arg(long, default_value = "1/8")]
        radius: String,
        /// Overrides the seed stored in the construction.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
    /// Classify collision counts over a grid of two mass ratios.
    Sweep {
        /// Sweep specification; flags below override its fields.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
        /// Two 1-based ratio indices, e.g. `1,2`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        axes: Option<Vec<usize>>,
        /// case1 or case3, when no fixed state is given.
        #[arg(long)]
        family: Option<String>,
        /// Fixed initial state `{t0, q, v}`.
        #[arg(long)]
        state: Option<PathBuf>,
        #[command(flatten)]
        sim: SimFlags,
        /// CSV of cells.
        #[command(flatten)]
        out: Out,
        /// Summary JSON; defaults to the CSV path with a `.json` extension.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write per-particle space-time polylines of an event log as CSV.
    PlotData {
        #[arg(long)]
        input: PathBuf,
        /// Horizon; defaults to 5/4 of the last event time.
        #[arg(long)]
        t_end: Option<String>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Args, Clone, Default)]
struct SimFlags {
    /// Events closer than this in time are simultaneous (float mode only).
    #[arg(long = "tie-tol")]
    tie_tol: Option<String>,
    #[arg(long = "max-events")]
    max_events: Option<usize>,
    /// error or exchange.
    #[arg(long = "triple-policy")]
    triple_policy: Option<String>,
}

#[derive(Args, Clone)]
struct Out {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mode = cli.mode;
    match cli.command {
        Command::Simulate { input, sim, out } => {
            let doc = read_json(&input)?;
            dispatch!(mode.unwrap_or(io::detect_mode(&doc)), simulate_cmd(&doc, &sim, &out))
        }
        Command::Construct { case, n, epsilon, r, theta, kappa, seed, out } => {
            let tag = CaseTag::parse(&case).ok_or_else(|| Error::field("case", format!("unknown case `{case}`")))?;
            let args = ConstructArgs { tag, n, epsilon, r, theta, kappa, seed };
            dispatch!(mode.unwrap_or(ArithmeticMode::Exact), construct_cmd(&args, &out))
        }
        Command::Certify { input, samples, radius, seed, out } => {
            let doc = read_json(&input)?;
            dispatch!(mode.unwrap_or(io::detect_mode(&doc)), certify_cmd(&doc, samples, &radius, seed, &out))
        }
        Command::Sweep { input, n, epsilon, grid, axes, family, state, sim, out, summary } => {
            let doc = input.as_deref().map(read_json).transpose()?;
            let state = state.as_deref().map(read_json).transpose()?;
            let args = SweepArgs { doc, n, epsilon, grid, axes, family, state, sim };
            let inferred = args.doc.as_ref().map(infer_sweep_mode).unwrap_or(ArithmeticMode::Exact);
            dispatch!(mode.unwrap_or(inferred), sweep_cmd(&args, &out, summary.as_deref()))
        }
        Command::PlotData { input, t_end, out } => {
            let doc = read_json(&input)?;
            dispatch!(mode.unwrap_or(io::detect_mode(&doc)), plot_cmd(&doc, t_end.as_deref(), &out))
        }
    }
}

/// Runs a generic command in the requested arithmetic.
macro_rules! dispatch {
    ($mode:expr, $f:ident($($arg:expr),*)) => {
        match $mode {
            ArithmeticMode::Exact => $f::<Rational>($($arg),*),
            ArithmeticMode::Float => $f::<f64>($($arg),*),
        }
    };
}
use dispatch;

fn infer_sweep_mode(doc: &Value) -> ArithmeticMode {
    match doc.get("epsilon") {
        Some(Value::Number(_)) => ArithmeticMode::Float,
        _ => ArithmeticMode::Exact,
    }
}

fn read_json(path: &Path) -> Result<Value, Error> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn parse_scalar<S: Scalar>(field: &str, raw: &str) -> Result<S, Error> {
    S::parse_str(raw).map_err(|e| Error::field(field, e.to_string()))
}

/// Writes to a temporary file next to the target and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(out: &Out, bytes: &[u8]) -> Result<(), Error> {
    match &out.out {
        Some(path) => write_atomic(path, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn emit_json(out: &Out, doc: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn apply_sim_flags<S: Scalar>(mut config: SimConfig<S>, flags: &SimFlags) -> Result<SimConfig<S>, Error> {
    if let Some(t) = &flags.tie_tol {
        config.tie_tolerance = parse_scalar("tie-tol", t)?;
    }
    if let Some(m) = flags.max_events {
        config.max_events = m;
    }
    if let Some(p) = &flags.triple_policy {
        config.triple_policy = match p.as_str() {
            "error" => TriplePolicy::Error,
            "exchange" => TriplePolicy::EqualMassExchange,
            other => return Err(Error::field("triple-policy", format!("unknown policy `{other}` (error|exchange)"))),
        };
    }
    config.validate()?;
    Ok(config)
}

fn simulate_cmd<S: Scalar>(doc: &Value, sim: &SimFlags, out: &Out) -> Result<(), Error> {
    let (masses, state) = io::instance_from_json::<S>(doc)?;
    let config = apply_sim_flags(SimConfig::for_particles(state.n()), sim)?;
    let log = simulate(&state, &masses, &config)?;
    emit_json(out, &io::log_to_json(&log))
}

struct ConstructArgs {
    tag: CaseTag,
    n: usize,
    epsilon: String,
    r: Option<String>,
    theta: Option<String>,
    kappa: Option<String>,
    seed: u64,
}

fn construct_cmd<S: Scalar>(args: &ConstructArgs, out: &Out) -> Result<(), Error> {
    let epsilon: S = parse_scalar("epsilon", &args.epsilon)?;
    let mut params = ConstructionParams::new(args.n, epsilon.clone()).with_seed(args.seed);
    if let Some(r) = &args.r {
        params = params.with_r(parse_scalar("r", r)?);
    }
    if let Some(t) = &args.theta {
        params = params.with_theta(parse_scalar("theta", t)?);
    }
    if let Some(k) = &args.kappa {
        params = params.with_kappa(parse_scalar("kappa", k)?);
    }
    let result = match args.tag {
        CaseTag::Case1 => build_case1(&params)?,
        CaseTag::Case2 => build_case2(args.n, &epsilon, args.seed)?,
        CaseTag::Case3 => build_case3(&params)?,
        CaseTag::Case3Alternating => build_case3_alternating(&params)?,
    };
    emit_json(out, &io::construction_to_json(&result))
}

fn certify_cmd<S: Scalar>(doc: &Value, samples: usize, radius: &str, seed: Option<u64>, out: &Out) -> Result<(), Error> {
    let mut result = io::construction_from_json::<S>(doc)?;
    if let Some(seed) = seed {
        result.seed = seed;
    }
    let radius: S = parse_scalar("radius", radius)?;
    result.certified_radius = certify_open(&result, samples, &radius)?;
    emit_json(out, &io::construction_to_json(&result))
}

struct SweepArgs {
    doc: Option<Value>,
    n: Option<usize>,
    epsilon: Option<String>,
    grid: Option<usize>,
    axes: Option<Vec<usize>>,
    family: Option<String>,
    state: Option<Value>,
    sim: SimFlags,
}

fn sweep_spec<S: Scalar>(args: &SweepArgs) -> Result<SweepSpec<S>, Error> {
    let mut spec = match &args.doc {
        Some(doc) => io::sweep_spec_from_json::<S>(doc)?,
        None => {
            let n = args.n.ok_or_else(|| Error::field("n", "required without --input"))?;
            SweepSpec::new(n, S::from_ratio(1, 2), 21, StateFamily::Case1Family)
        }
    };
    if let Some(n) = args.n {
        if n != spec.n {
            spec = SweepSpec { n, config: SimConfig::for_particles(n), ..spec };
            spec.axes = SweepSpec::<S>::new(n, spec.epsilon.clone(), spec.grid, StateFamily::Case1Family).axes;
        }
    }
    if let Some(e) = &args.epsilon {
        spec.epsilon = parse_scalar("epsilon", e)?;
    }
    if let Some(g) = args.grid {
        spec.grid = g;
    }
    if let Some(a) = &args.axes {
        spec.axes = (a[0], a[1]);
    }
    if let Some(f) = &args.family {
        spec.state_family = match f.as_str() {
            "case1" => StateFamily::Case1Family,
            "case3" => StateFamily::Case3Family,
            other => return Err(Error::field("family", format!("unknown family `{other}` (case1|case3)"))),
        };
    }
    if let Some(state) = &args.state {
        let state = state.get("state").unwrap_or(state);
        spec.state_family = StateFamily::FixedState(io::state_from_json(state, "state", false)?);
    }
    spec.config = apply_sim_flags(spec.config, &args.sim)?;
    spec.validate()?;
    Ok(spec)
}

fn sweep_cmd<S: Scalar>(args: &SweepArgs, out: &Out, summary: Option<&Path>) -> Result<(), Error> {
    let spec = sweep_spec::<S>(args)?;
    let result = sweep(&spec)?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    let mut doc = result.summary();
    doc["spec"] = io::sweep_spec_to_json(&spec);
    let summary = summary
        .map(Path::to_path_buf)
        .or_else(|| out.out.as_ref().map(|p| p.with_extension("json")));
    emit(out, &csv)?;
    match summary {
        Some(path) => emit_json(&Out { out: Some(path) }, &doc),
        None => emit_json(out, &doc),
    }
}

fn plot_cmd<S: Scalar>(doc: &Value, t_end: Option<&str>, out: &Out) -> Result<(), Error> {
    let log = io::log_from_json::<S>(doc)?;
    let horizon = match t_end {
        Some(t) => parse_scalar("t-end", t)?,
        None => default_horizon(&log),
    };
    let mut csv = Vec::new();
    write_spacetime_csv(&log, &horizon, &mut csv)?;
    emit(out, &csv)
}
