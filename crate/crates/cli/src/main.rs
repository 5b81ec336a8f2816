//! Command surface. Every subcommand parses its specs (inline JSON or file
//! paths), runs one core operation, and emits a RunReport. Exit codes:
//! 0 success, 1 inequality-check failure, 2 input error, 3 quadrature
//! tolerance failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use slicelab_core::report::{num17, value_with_error_json, vec17};
use slicelab_core::{
    BodySpec, DensitySpec, IntegrationConfig, RunReport, StarBody, Status, ValueWithError, Witness,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "slicelab", version, about = "moment and slicing laboratory for star bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for every randomized quadrature stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sphere direction budget; section budgets scale with it (4x).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Relative tolerance target; estimates above it flag the run (exit 3).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Full integration config as inline JSON or a file path; flag overrides
    /// (--seed/--samples/--tol) still apply on top.
    #[arg(long, global = true)]
    cfg: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Gauge and radial value of a body at a point.
    EvalGauge {
        #[arg(long)]
        body: String,
        /// Point as a JSON array or axis:i.
        #[arg(long)]
        x: String,
    },
    /// Quadrature volume of a body (closed form echoed when available).
    Volume {
        #[arg(long)]
        body: String,
    },
    /// Directional absolute p-moment of a density over a body.
    Moment {
        #[arg(long)]
        body: String,
        #[arg(long)]
        density: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        xi: String,
    },
    /// Minimum of the directional p-moment over the sphere.
    MinMoment {
        #[arg(long)]
        body: String,
        #[arg(long)]
        density: String,
        #[arg(long)]
        p: f64,
    },
    /// Normalized moment ratio whose sup defines the gamma constant.
    Gamma {
        #[arg(long)]
        body: String,
        #[arg(long)]
        density: String,
        #[arg(long)]
        p: f64,
    },
    /// Supremum of hyperplane section integrals (central or affine).
    SliceSup {
        #[arg(long)]
        body: String,
        #[arg(long)]
        density: String,
        #[arg(long, default_value = "central")]
        mode: String,
    },
    /// Slicing constant: mass over max section times |K|^{1/n}.
    SlicingConstant {
        #[arg(long)]
        body: String,
        #[arg(long)]
        density: String,
        #[arg(long, default_value = "central")]
        mode: String,
    },
    /// Sup-section moment bound along a fixed direction.
    Lemma16 {
        #[arg(long)]
        body: String,
        #[arg(long)]
        density: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        xi: String,
    },
    /// q-moment functional of a [0,1]-valued profile over a q grid.
    MonotonicQ {
        /// Profile spec, inline JSON or file path.
        #[arg(long)]
        g: String,
        /// Grid as start:end:step.
        #[arg(long, default_value = "0:8:0.5")]
        qgrid: String,
    },
    /// Outer-volume-ratio distance upper bound via containment witnesses.
    Dovr {
        #[arg(long)]
        body: String,
        #[arg(long)]
        p: f64,
        /// One or more witness specs.
        #[arg(long, num_args = 1.., required = true)]
        witnesses: Vec<String>,
    },
    /// Homothety scaling bound between two bodies (optionally refined over
    /// diagonal maps).
    Dbm {
        #[arg(long = "M")]
        m: String,
        #[arg(long = "D")]
        d: String,
        /// Coordinate-descent sweeps over diagonal linear maps.
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Moment-domination mass transfer: K's moments under M's imply a mass
    /// comparison after the homothety factor to D.
    BpCompare {
        #[arg(long = "K")]
        k: String,
        #[arg(long = "M")]
        m: String,
        #[arg(long)]
        density: String,
        #[arg(long)]
        p: f64,
        #[arg(long = "D")]
        d: String,
    },
    /// Spherical-mean convexity check for the gauge.
    Jensen {
        #[arg(long)]
        body: String,
        #[arg(long)]
        p: f64,
    },
    /// Run the bundled verification suite.
    VerifySuite {
        #[arg(long, default_value = "quick")]
        budget: String,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SLICELAB_THREADS") {
        match threads.parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => {
                eprintln!("error: SLICELAB_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// Spec plumbing
// ---------------------------------------------------------------------------

/// Inline JSON (starts with '{' or '[') passes through; anything else is
/// read as a file path.
fn load_spec(arg: &str) -> Result<String, String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(arg.to_string());
    }
    std::fs::read_to_string(arg).map_err(|e| format!("cannot read spec file `{arg}`: {e}"))
}

fn parse_body(arg: &str) -> Result<(StarBody, Value), String> {
    let text = load_spec(arg)?;
    let spec = BodySpec::from_json(&text).map_err(|e| e.to_string())?;
    let body = spec.build().map_err(|e| e.to_string())?;
    let echo = serde_json::to_value(&spec).map_err(|e| e.to_string())?;
    Ok((body, canon17(echo)))
}

fn parse_density(arg: &str, n: usize) -> Result<(slicelab_core::Density, Value), String> {
    let text = load_spec(arg)?;
    let spec = DensitySpec::from_json(&text).map_err(|e| e.to_string())?;
    let f = spec.build(n).map_err(|e| e.to_string())?;
    let echo = serde_json::to_value(&spec).map_err(|e| e.to_string())?;
    Ok((f, canon17(echo)))
}

/// Directions and points: `axis:i` or a JSON array.
fn parse_vector(arg: &str, n: usize) -> Result<Vec<f64>, String> {
    if let Some(i) = arg.strip_prefix("axis:") {
        let i: usize = i.parse().map_err(|_| format!("bad axis index in `{arg}`"))?;
        if i >= n {
            return Err(format!("axis {i} out of range for dimension {n}"));
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        return Ok(v);
    }
    let v: Vec<f64> =
        serde_json::from_str(arg).map_err(|e| format!("vector `{arg}` must be a JSON array or axis:i: {e}"))?;
    if v.len() != n {
        return Err(format!("vector has length {}, body has dimension {n}", v.len()));
    }
    Ok(v)
}

fn unit_direction(arg: &str, n: usize) -> Result<Vec<f64>, String> {
    let v = parse_vector(arg, n)?;
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err("direction must be a nonzero finite vector".into());
    }
    Ok(v.into_iter().map(|c| c / norm).collect())
}

/// Witness wire format, dispatching on `type` like the body specs:
/// {"type":"lq_ball","n":2,"q":1,"scale":1.0}
/// {"type":"euclidean_ball","n":2,"radius":1.0}
/// {"type":"ellipsoid","axes":[1.0,2.0]}
/// The moment exponent comes from the command's --p.
fn parse_witness(arg: &str, p: f64) -> Result<(Witness, Value), String> {
    let text = load_spec(arg)?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| format!("witness spec: {e}"))?;
    let obj = value
        .as_object_mut()
        .ok_or("witness spec must be a JSON object")?;
    let echo = Value::Object(obj.clone());
    let tag = obj
        .remove("type")
        .and_then(|t| t.as_str().map(str::to_string))
        .ok_or("witness spec needs a string `type` field")?;
    let get = |obj: &serde_json::Map<String, Value>, key: &str| -> Result<f64, String> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or(format!("witness `{tag}` needs numeric field `{key}`"))
    };
    let get_n = |obj: &serde_json::Map<String, Value>| -> Result<usize, String> {
        obj.get("n")
            .and_then(Value::as_u64)
            .map(|n| n as usize)
            .ok_or(format!("witness `{tag}` needs integer field `n`"))
    };
    let w = match tag.as_str() {
        "lq_ball" => {
            let n = get_n(obj)?;
            let q = get(obj, "q")?;
            let scale = obj.get("scale").and_then(Value::as_f64).unwrap_or(1.0);
            // Self-certified at exponent q; dovr rejects it if q != --p.
            Witness::lp_ball(n, q, scale)
        }
        "euclidean_ball" => {
            let n = get_n(obj)?;
            let radius = obj.get("radius").and_then(Value::as_f64).unwrap_or(1.0);
            Witness::euclidean_ball(n, p, radius)
        }
        "ellipsoid" => {
            let axes: Vec<f64> = obj
                .get("axes")
                .and_then(|a| serde_json::from_value(a.clone()).ok())
                .ok_or(format!("witness `{tag}` needs array field `axes`"))?;
            Witness::ellipsoid(&axes, p)
        }
        other => return Err(format!("unknown witness type `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    Ok((w, canon17(echo)))
}

/// 17-significant-digit canonical floats, recursively; integers unchanged.
fn canon17(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                Value::Number(n)
            } else if let Some(x) = n.as_f64() {
                num17(x)
            } else {
                Value::Number(n)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canon17).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canon17(v))).collect()),
        other => other,
    }
}

fn build_cfg(common: &Common) -> Result<IntegrationConfig, String> {
    let mut cfg = match &common.cfg {
        Some(arg) => {
            let text = load_spec(arg)?;
            serde_json::from_str::<IntegrationConfig>(&text)
                .map_err(|e| format!("integration config: {e}"))?
        }
        None => IntegrationConfig::default(),
    };
    cfg.seed = common.seed;
    if let Some(s) = common.samples {
        if s == 0 {
            return Err("--samples must be positive".into());
        }
        cfg.sphere_samples = s;
        cfg.mc_samples = s.saturating_mul(4);
    }
    if let Some(t) = common.tol {
        if !(t > 0.0) || !t.is_finite() {
            return Err("--tol must be positive and finite".into());
        }
        cfg.rel_tol_target = t;
    }
    Ok(cfg)
}

fn parse_mode(s: &str) -> Result<slicelab_core::SliceMode, String> {
    match s {
        "central" => Ok(slicelab_core::SliceMode::Central),
        "affine" => Ok(slicelab_core::SliceMode::Affine),
        other => Err(format!("mode must be central or affine, got `{other}`")),
    }
}

fn parse_qgrid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("qgrid `{s}` must be start:end:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| format!("bad number `{p}` in qgrid")))
        .collect::<Result<_, _>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start || !start.is_finite() || !end.is_finite() {
        return Err(format!("qgrid `{s}` must satisfy start <= end, step > 0"));
    }
    if start <= -1.0 {
        return Err("qgrid starts at q <= -1; the functional needs q > -1".into());
    }
    let count = ((end - start) / step).round() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

/// Exit-code folding for one report: inequality failures dominate, then
/// unmet quadrature tolerances.
struct Outcome {
    report: RunReport,
    violated: bool,
    tolerance_failed: bool,
}

impl Outcome {
    fn new(report: RunReport) -> Outcome {
        Outcome {
            report,
            violated: false,
            tolerance_failed: false,
        }
    }

    fn track(&mut self, v: &ValueWithError) {
        if v.status != Status::Ok {
            self.tolerance_failed = true;
        }
    }

    fn code(&self) -> u8 {
        if self.violated {
            1
        } else if self.tolerance_failed {
            3
        } else {
            0
        }
    }
}

fn emit(common: &Common, outcome: &Outcome) -> Result<u8, String> {
    let text = match common.format {
        Format::Json => outcome.report.to_json(),
        Format::Csv => outcome.report.to_csv(),
    };
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(outcome.code())
}

fn run(cli: Cli) -> Result<u8, String> {
    let common = cli.common.clone();
    let cfg = build_cfg(&common)?;
    let cfg_echo = canon17(serde_json::to_value(&cfg).map_err(|e| e.to_string())?);
    let mut outcome = match cli.command {
        Command::EvalGauge { body, x } => cmd_eval_gauge(&body, &x, &cfg)?,
        Command::Volume { body } => cmd_volume(&body, &cfg)?,
        Command::Moment { body, density, p, xi } => cmd_moment(&body, &density, p, &xi, &cfg)?,
        Command::MinMoment { body, density, p } => cmd_min_moment(&body, &density, p, &cfg)?,
        Command::Gamma { body, density, p } => cmd_gamma(&body, &density, p, &cfg)?,
        Command::SliceSup { body, density, mode } => cmd_slice_sup(&body, &density, &mode, &cfg)?,
        Command::SlicingConstant { body, density, mode } => {
            cmd_slicing_constant(&body, &density, &mode, &cfg)?
        }
        Command::Lemma16 { body, density, p, xi } => cmd_lemma16(&body, &density, p, &xi, &cfg)?,
        Command::MonotonicQ { g, qgrid } => cmd_monotonic_q(&g, &qgrid, &cfg)?,
        Command::Dovr { body, p, witnesses } => cmd_dovr(&body, p, &witnesses, &cfg)?,
        Command::Dbm { m, d, refine } => cmd_dbm(&m, &d, refine, &cfg)?,
        Command::BpCompare { k, m, density, p, d } => cmd_bp_compare(&k, &m, &density, p, &d, &cfg)?,
        Command::Jensen { body, p } => cmd_jensen(&body, p, &cfg)?,
        Command::VerifySuite { budget } => cmd_verify_suite(&budget, &cfg)?,
    };
    outcome.report.input("cfg", cfg_echo);
    emit(&common, &outcome)
}

fn report(command: &str, cfg: &IntegrationConfig) -> RunReport {
    RunReport::new(command, cfg.seed, VERSION)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_eval_gauge(body: &str, x: &str, cfg: &IntegrationConfig) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let point = parse_vector(x, b.dim())?;
    let gauge = b.gauge(&point).map_err(|e| e.to_string())?;
    let radial = if gauge > 0.0 { 1.0 / gauge } else { f64::INFINITY };
    let mut rep = report("eval-gauge", cfg);
    rep.input("body", echo);
    rep.input("x", vec17(&point));
    rep.result_f64("gauge", gauge);
    rep.result_f64("radial", radial);
    Ok(Outcome::new(rep))
}

fn cmd_volume(body: &str, cfg: &IntegrationConfig) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let vol = b.volume(cfg);
    let mut rep = report("volume", cfg);
    rep.input("body", echo);
    rep.result("volume", value_with_error_json(&vol));
    if let Some(exact) = b.exact_volume() {
        rep.result("exact_volume", num17(exact));
    }
    let mut out = Outcome::new(rep);
    out.track(&vol);
    Ok(out)
}

fn cmd_moment(
    body: &str,
    density: &str,
    p: f64,
    xi: &str,
    cfg: &IntegrationConfig,
) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let (f, fecho) = parse_density(density, b.dim())?;
    let dir = unit_direction(xi, b.dim())?;
    let value = slicelab_core::moment(&b, &f, p, &dir, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("moment", cfg);
    rep.input("body", echo);
    rep.input("density", fecho);
    rep.input("p", num17(p));
    rep.input("xi", vec17(&dir));
    rep.result("moment", value_with_error_json(&value));
    let mut out = Outcome::new(rep);
    out.track(&value);
    Ok(out)
}

fn cmd_min_moment(
    body: &str,
    density: &str,
    p: f64,
    cfg: &IntegrationConfig,
) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let (f, fecho) = parse_density(density, b.dim())?;
    let res = slicelab_core::min_moment(&b, &f, p, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("min-moment", cfg);
    rep.input("body", echo);
    rep.input("density", fecho);
    rep.input("p", num17(p));
    rep.result("min_moment", value_with_error_json(&res.value));
    rep.result("direction", vec17(&res.direction));
    rep.result("normalized_gamma", num17(res.normalized_gamma));
    rep.result("start_spread", num17(res.start_spread));
    let mut out = Outcome::new(rep);
    out.track(&res.value);
    Ok(out)
}

fn cmd_gamma(body: &str, density: &str, p: f64, cfg: &IntegrationConfig) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let (f, fecho) = parse_density(density, b.dim())?;
    let value = slicelab_core::gamma_ratio(&b, &f, p, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("gamma", cfg);
    rep.input("body", echo);
    rep.input("density", fecho);
    rep.input("p", num17(p));
    rep.result("gamma_ratio", num17(value));
    Ok(Outcome::new(rep))
}

fn cmd_slice_sup(
    body: &str,
    density: &str,
    mode: &str,
    cfg: &IntegrationConfig,
) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let (f, fecho) = parse_density(density, b.dim())?;
    let m = parse_mode(mode)?;
    let sec = slicelab_core::max_section(&b, &f, m, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("slice-sup", cfg);
    rep.input("body", echo);
    rep.input("density", fecho);
    rep.input("mode", Value::String(mode.to_string()));
    rep.result("direction", vec17(&sec.direction));
    rep.result("offset", num17(sec.offset));
    rep.result("section", value_with_error_json(&sec.value));
    let mut out = Outcome::new(rep);
    out.track(&sec.value);
    Ok(out)
}

fn cmd_slicing_constant(
    body: &str,
    density: &str,
    mode: &str,
    cfg: &IntegrationConfig,
) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let (f, fecho) = parse_density(density, b.dim())?;
    let m = parse_mode(mode)?;
    let r = slicelab_core::slicing_constant(&b, &f, m, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("slicing-constant", cfg);
    rep.input("body", echo);
    rep.input("density", fecho);
    rep.input("mode", Value::String(mode.to_string()));
    rep.result("s_hat", num17(r.s_hat));
    rep.result("central_constant", num17(r.central_constant));
    if let Some(a) = r.affine_constant {
        rep.result("affine_constant", num17(a));
    }
    rep.result("direction", vec17(&r.maximizing_direction));
    rep.result("offset", num17(r.maximizing_offset));
    rep.result("max_section", value_with_error_json(&r.max_section));
    rep.result("mass", value_with_error_json(&r.mass));
    rep.result("volume", value_with_error_json(&r.volume));
    let mut out = Outcome::new(rep);
    out.track(&r.max_section);
    out.track(&r.mass);
    Ok(out)
}

fn cmd_lemma16(
    body: &str,
    density: &str,
    p: f64,
    xi: &str,
    cfg: &IntegrationConfig,
) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let (f, fecho) = parse_density(density, b.dim())?;
    let dir = unit_direction(xi, b.dim())?;
    let r = slicelab_core::section_moment_bound(&b, &f, p, &dir, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("lemma16", cfg);
    rep.input("body", echo);
    rep.input("density", fecho);
    rep.input("p", num17(p));
    rep.input("xi", vec17(&dir));
    rep.result("lhs", num17(r.lhs));
    rep.result("rhs", num17(r.rhs));
    rep.result("margin", num17(r.margin));
    rep.result("combined_error", num17(r.combined_error));
    rep.result("holds", Value::Bool(r.holds));
    rep.result("sup_section", value_with_error_json(&r.sup_section));
    rep.result("sup_offset", num17(r.sup_offset));
    rep.result("moment", value_with_error_json(&r.moment));
    rep.result("mass", value_with_error_json(&r.mass));
    let mut out = Outcome::new(rep);
    out.violated = !r.holds;
    out.track(&r.sup_section);
    out.track(&r.moment);
    out.track(&r.mass);
    Ok(out)
}

fn cmd_monotonic_q(g: &str, qgrid: &str, cfg: &IntegrationConfig) -> Result<Outcome, String> {
    let text = load_spec(g)?;
    let spec = slicelab_core::ProfileSpec::from_json(&text).map_err(|e| e.to_string())?;
    let profile = spec.build().map_err(|e| e.to_string())?;
    let qs = parse_qgrid(qgrid)?;
    let values: Vec<f64> = qs
        .iter()
        .map(|&q| slicelab_core::moment_functional(&profile, q).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    // slack floor for pure rounding on exactly-flat profiles
    let mut monotone = true;
    let mut min_step = f64::INFINITY;
    let mut worst_pair = 0usize;
    for i in 1..values.len() {
        let step = values[i] - values[i - 1];
        if step < min_step {
            min_step = step;
            worst_pair = i;
        }
        if step < -1e-9 * (1.0 + values[i - 1].abs()) {
            monotone = false;
        }
    }
    let mut rep = report("monotonic-q", cfg);
    rep.input("g", canon17(serde_json::to_value(&spec).map_err(|e| e.to_string())?));
    rep.input("qgrid", Value::String(qgrid.to_string()));
    rep.result("q", vec17(&qs));
    rep.result("values", vec17(&values));
    rep.result("monotone", Value::Bool(monotone));
    if values.len() > 1 {
        rep.result("min_step", num17(min_step));
        rep.result("min_step_at_q", num17(qs[worst_pair]));
    }
    let mut out = Outcome::new(rep);
    out.violated = !monotone;
    Ok(out)
}

fn cmd_dovr(
    body: &str,
    p: f64,
    witnesses: &[String],
    cfg: &IntegrationConfig,
) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let mut ws = Vec::new();
    let mut wechos = Vec::new();
    for arg in witnesses {
        let (w, wecho) = parse_witness(arg, p)?;
        ws.push(w);
        wechos.push(wecho);
    }
    let r = slicelab_core::dovr_upper(&b, p, &ws, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("dovr", cfg);
    rep.input("body", echo);
    rep.input("p", num17(p));
    rep.input("witnesses", Value::Array(wechos));
    rep.result("dovr_upper", num17(r.dovr_upper));
    rep.result("best_witness", Value::String(r.best_witness_tag.clone()));
    rep.result("scaling_used", num17(r.scaling_used));
    rep.result("dbm_upper", num17(r.dbm_upper));
    Ok(Outcome::new(rep))
}

fn cmd_dbm(m: &str, d: &str, refine: Option<usize>, cfg: &IntegrationConfig) -> Result<Outcome, String> {
    let (mb, mecho) = parse_body(m)?;
    let (db, decho) = parse_body(d)?;
    let mut rep = report("dbm", cfg);
    rep.input("M", mecho);
    rep.input("D", decho);
    match refine {
        None => {
            let bound = slicelab_core::dbm_scaling(&mb, &db, cfg).map_err(|e| e.to_string())?;
            rep.result("dbm_upper", num17(bound));
        }
        Some(sweeps) => {
            let (bound, diag) =
                slicelab_core::dbm_scaling_refined(&mb, &db, cfg, sweeps).map_err(|e| e.to_string())?;
            rep.input("refine_sweeps", Value::from(sweeps));
            rep.result("dbm_upper", num17(bound));
            rep.result("diagonal_map", vec17(&diag));
        }
    }
    Ok(Outcome::new(rep))
}

fn cmd_bp_compare(
    k: &str,
    m: &str,
    density: &str,
    p: f64,
    d: &str,
    cfg: &IntegrationConfig,
) -> Result<Outcome, String> {
    let (kb, kecho) = parse_body(k)?;
    let (mb, mecho) = parse_body(m)?;
    let (db, decho) = parse_body(d)?;
    let (f, fecho) = parse_density(density, kb.dim())?;
    let r = slicelab_core::moment_domination(&kb, &mb, &f, p, &db, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("bp-compare", cfg);
    rep.input("K", kecho);
    rep.input("M", mecho);
    rep.input("density", fecho);
    rep.input("p", num17(p));
    rep.input("D", decho);
    let status = match r.status {
        slicelab_core::DominationStatus::Ok => "ok",
        slicelab_core::DominationStatus::HypothesisViolated => "hypothesis_violated",
    };
    rep.result("status", Value::String(status.into()));
    rep.result("worst_margin", num17(r.worst_margin));
    rep.result("worst_direction", vec17(&r.worst_direction));
    rep.result("worst_error", num17(r.worst_error));
    rep.result("grid_size", Value::from(r.grid_size));
    rep.result("scaling", num17(r.scaling));
    rep.result("mass_K", value_with_error_json(&r.mass_k));
    rep.result("mass_M", value_with_error_json(&r.mass_m));
    rep.result("conclusion_lhs", num17(r.conclusion_lhs));
    rep.result("conclusion_rhs", num17(r.conclusion_rhs));
    rep.result("conclusion_error", num17(r.conclusion_error));
    rep.result("conclusion_holds", Value::Bool(r.conclusion_holds));
    let mut out = Outcome::new(rep);
    out.violated =
        r.status == slicelab_core::DominationStatus::HypothesisViolated || !r.conclusion_holds;
    out.track(&r.mass_k);
    out.track(&r.mass_m);
    Ok(out)
}

fn cmd_jensen(body: &str, p: f64, cfg: &IntegrationConfig) -> Result<Outcome, String> {
    let (b, echo) = parse_body(body)?;
    let r = slicelab_core::jensen_check(&b, p, cfg).map_err(|e| e.to_string())?;
    let mut rep = report("jensen", cfg);
    rep.input("body", echo);
    rep.input("p", num17(p));
    rep.result("lhs", num17(r.lhs));
    rep.result("rhs", num17(r.rhs));
    rep.result("lhs_error", num17(r.lhs_error));
    rep.result("rhs_error", num17(r.rhs_error));
    rep.result("holds", Value::Bool(r.holds));
    let mut out = Outcome::new(rep);
    out.violated = !r.holds;
    Ok(out)
}

fn cmd_verify_suite(budget: &str, cfg: &IntegrationConfig) -> Result<Outcome, String> {
    let profile: slicelab_core::BudgetProfile = budget.parse()?;
    let summary = slicelab_core::verify_suite(cfg.seed, profile);
    for line in summary.lines() {
        eprintln!("{line}");
    }
    let mut rep = report("verify-suite", cfg);
    rep.input("budget", Value::String(budget.to_string()));
    rep.result("suite", summary.to_json_value());
    let mut out = Outcome::new(rep);
    out.violated = !summary.all_passed;
    Ok(out)
}
