//! The `quadlab` command-line surface: seeded verification sweeps, fiber
//! certification, reduction traces (optionally rendered to SVG), the
//! perpendicular-diagonal sweep, and the opposite-angle perturbation demo.
//!
//! Exit codes are stable: 0 success, 1 verification failure, 2 usage or
//! configuration error. All outputs are deterministic given (flags, seed);
//! the only wall-clock field is a metadata timestamp, suppressed under
//! `--reproducible`. Sample sweeps fan out across up to `QUADLAB_THREADS`
//! workers (0 = sequential) and are merged in sample order, so the thread
//! count never changes the bytes written.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::fiber::{FiberError, FiberSlopes};
use crate::quad::{snap_arc, CircleQuad};
use crate::reduction::{
    check_trace, perpendicular_check, random_perpendicular, reduce_to_square, ReductionError,
};
use crate::scalar::{Mode, Scalar};
use crate::svg;
use crate::tol;
use crate::transforms::{
    feasible_interval, morph, perturb_opposite_angles, recut, DiagonalChoice, MorphParams,
    OppositePair,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "quadlab",
    version,
    about = "Verification sweeps, fiber certificates and reduction traces for cyclic quadrilaterals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Omit the metadata timestamp so outputs are byte-reproducible.
    #[arg(long, global = true)]
    pub reproducible: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the quad/transform invariance sweeps and write a JSON summary.
    Verify(VerifyArgs),
    /// Certify A ∝ xy and B² ∝ (xy)² for one slope pair.
    Fiber(FiberArgs),
    /// Reduce a quad to a square and write the trace (optionally SVG frames).
    Reduce(ReduceArgs),
    /// Sweep the perpendicular-diagonal identity check.
    Perp(PerpArgs),
    /// Sweep exact opposite-angle perturbations.
    Perturb(PerturbArgs),
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Quads per check.
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest arc allowed in sampled quads.
    #[arg(long, default_value_t = 0.05)]
    pub min_arc: f64,
    /// Override a named tolerance, e.g. --tol brahmagupta_c=1e-9.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = parse_tol_override)]
    pub tol: Vec<TolOverride>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct FiberArgs {
    /// Slope ρ: "p/q" (required form under --exact) or a decimal.
    #[arg(long)]
    pub rho: String,
    /// Slope σ.
    #[arg(long)]
    pub sigma: String,
    /// Certify in exact rational arithmetic (requires Pythagorean slopes).
    #[arg(long)]
    pub exact: bool,
    /// Half-width of the sample grid {-r..r}²; must be at least 2.
    #[arg(long, default_value_t = 2)]
    pub grid_radius: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    /// Start from the seeded random convex quad with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start from a CircleQuad JSON file instead.
    #[arg(long)]
    pub quad: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub max_rounds: u32,
    /// Square-detection tolerance on the arcs.
    #[arg(long, default_value_t = tol::SQUARE_TOL)]
    pub square_tol: f64,
    /// Smallest arc in the seeded start quad.
    #[arg(long, default_value_t = 0.05)]
    pub min_arc: f64,
    /// Also write one SVG frame per trace state (requires --out DIR).
    #[arg(long)]
    pub svg: bool,
    /// Output file, or output directory under --svg.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PerpArgs {
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Clone, Debug)]
pub struct TolOverride {
    pub name: String,
    pub value: f64,
}

fn parse_tol_override(raw: &str) -> Result<TolOverride, String> {
    let (name, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {raw:?}"))?;
    if tol::default_for(name).is_none() {
        let known: Vec<&str> = tol::OVERRIDABLE.iter().map(|(n, _)| *n).collect();
        return Err(format!(
            "unknown tolerance {name:?}; known names: {}",
            known.join(", ")
        ));
    }
    let value: f64 = value
        .parse()
        .map_err(|_| format!("tolerance value {value:?} is not a number"))?;
    if value <= 0.0 || !value.is_finite() {
        return Err(format!(
            "tolerance must be positive and finite, got {value}"
        ));
    }
    Ok(TolOverride {
        name: name.to_string(),
        value,
    })
}

/// Worker cap from QUADLAB_THREADS: 0 or unset parse failures mean
/// sequential; unset defaults to the machine's parallelism, capped at 8.
pub fn worker_count() -> usize {
    match std::env::var("QUADLAB_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) | Err(_) => 1,
            Ok(n) => n,
        },
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get().min(8))
            .unwrap_or(1),
    }
}

/// Evaluate `f` over 0..count, possibly on several workers, and merge the
/// results in index order so the output is independent of the worker count.
pub fn par_map<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let workers = worker_count().min(count.max(1) as usize).max(1);
    if workers <= 1 {
        return (0..count).map(f).collect();
    }
    let chunk = count.div_ceil(workers as u64);
    let mut chunks: Vec<Vec<T>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers as u64 {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(count);
            let f = &f;
            handles.push(scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>()));
        }
        chunks = handles.into_iter().map(|h| h.join().unwrap()).collect();
    });
    chunks.into_iter().flatten().collect()
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Verify(args) => cmd_verify(args, cli.reproducible),
        Command::Fiber(args) => cmd_fiber(args, cli.reproducible),
        Command::Reduce(args) => cmd_reduce(args, cli.reproducible),
        Command::Perp(args) => cmd_perp(args, cli.reproducible),
        Command::Perturb(args) => cmd_perturb(args, cli.reproducible),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("quadlab: {err}");
            EXIT_USAGE
        }
    }
}

fn timestamp_field(reproducible: bool, obj: &mut serde_json::Map<String, Value>) {
    if !reproducible {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        obj.insert("timestamp".into(), json!(secs));
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(path, text)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn to_text(value: &Value) -> String {
    let mut out = String::new();
    if let Some(checks) = value.get("checks").and_then(|c| c.as_array()) {
        for check in checks {
            out.push_str(&format!(
                "{:<24} samples={:<8} max_error={:<12.3e} tol={:<9.1e} {}\n",
                check["name"].as_str().unwrap_or("?"),
                check["samples"].as_u64().unwrap_or(0),
                check["max_error"].as_f64().unwrap_or(f64::NAN),
                check["tolerance"].as_f64().unwrap_or(f64::NAN),
                if check["pass"].as_bool() == Some(true) {
                    "PASS"
                } else {
                    "FAIL"
                },
            ));
        }
    }
    out.push_str(&format!(
        "overall: {}\n",
        if value["pass"].as_bool() == Some(true) {
            "PASS"
        } else {
            "FAIL"
        }
    ));
    out
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckResult {
    name: &'static str,
    samples: u64,
    max_error: f64,
    tolerance: f64,
}

impl CheckResult {
    fn pass(&self) -> bool {
        self.max_error <= self.tolerance
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "samples": self.samples,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "pass": self.pass(),
        })
    }
}

fn cmd_verify(args: &VerifyArgs, reproducible: bool) -> Result<i32, CliError> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    if !args.min_arc.is_finite()
        || args.min_arc <= 0.0
        || args.min_arc >= std::f64::consts::FRAC_PI_2
    {
        return Err(CliError::Usage("--min-arc must lie in (0, π/2)".into()));
    }
    let mut tols: BTreeMap<&str, f64> = tol::OVERRIDABLE.iter().copied().collect();
    for t in &args.tol {
        if let Some(slot) = tols.get_mut(t.name.as_str()) {
            *slot = t.value;
        }
    }
    let checks = run_verify_checks(args.seed, args.samples, args.min_arc, &tols);
    let pass = checks.iter().all(CheckResult::pass);

    let mut obj = serde_json::Map::new();
    obj.insert("command".into(), json!("verify"));
    obj.insert("seed".into(), json!(args.seed));
    obj.insert("samples".into(), json!(args.samples));
    obj.insert("min_arc".into(), json!(args.min_arc));
    obj.insert(
        "checks".into(),
        Value::Array(checks.iter().map(CheckResult::to_json).collect()),
    );
    obj.insert("pass".into(), json!(pass));
    timestamp_field(reproducible, &mut obj);
    let value = Value::Object(obj);

    let text = match args.format {
        OutputFormat::Json => format!("{}\n", serde_json::to_string_pretty(&value).unwrap()),
        OutputFormat::Text => to_text(&value),
    };
    emit(&args.out, &text)?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn run_verify_checks(
    seed: u64,
    samples: u64,
    min_arc: f64,
    tols: &BTreeMap<&str, f64>,
) -> Vec<CheckResult> {
    let quad_at = |k: u64| CircleQuad::random_convex(seed.wrapping_add(k), min_arc);
    let fold_max = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max);
    let count_fail = |v: Vec<bool>| v.into_iter().filter(|ok| !ok).count() as f64;
    let mut out = Vec::new();

    // |C - 1| on random convex quads.
    out.push(CheckResult {
        name: "brahmagupta_c",
        samples,
        max_error: fold_max(par_map(samples, |k| {
            (quad_at(k).metrics().ratio_c.unwrap() - 1.0).abs()
        })),
        tolerance: tols["brahmagupta_c"],
    });

    // Triangle degeneration: merge the last two arcs so s₄ = 0.
    out.push(CheckResult {
        name: "heron_degeneration",
        samples,
        max_error: fold_max(par_map(samples, |k| {
            let q = quad_at(k);
            let a = q.arcs();
            let tri = CircleQuad::new(q.diameter(), q.base_angle(), [a[0], a[1], a[2] + a[3], 0.0])
                .expect("merged arcs stay valid");
            let m = tri.metrics();
            let sides: Vec<f64> = m.sides.iter().copied().filter(|s| *s != 0.0).collect();
            let s = m.semiperimeter;
            let heron = s * (s - sides[0]) * (s - sides[1]) * (s - sides[2]);
            (m.area * m.area - heron).abs() / heron.abs().max(tol::B2_GUARD)
        })),
        tolerance: tols["heron"],
    });

    // Chord lengths from arcs vs. the planar embedding.
    out.push(CheckResult {
        name: "chord_consistency",
        samples,
        max_error: fold_max(par_map(samples, |k| {
            let q = quad_at(k);
            let v = q.vertices();
            let m = q.metrics();
            let mut worst = 0.0f64;
            for i in 0..4 {
                let p = &v[i];
                let r = &v[(i + 1) % 4];
                let chord = (p.x.to_f64() - r.x.to_f64()).hypot(p.y.to_f64() - r.y.to_f64());
                worst = worst.max((chord - m.sides[i]).abs() / m.sides[i].max(1.0));
            }
            worst
        })),
        tolerance: tols["chord"],
    });

    // Recutting preserves C (both diagonals).
    out.push(CheckResult {
        name: "recut_preserves_c",
        samples,
        max_error: fold_max(par_map(samples, |k| {
            let q = quad_at(k);
            let c0 = q.metrics().ratio_c.unwrap();
            [DiagonalChoice::D13, DiagonalChoice::D24]
                .into_iter()
                .map(|d| (recut(&q, d).unwrap().metrics().ratio_c.unwrap() - c0).abs())
                .fold(0.0f64, f64::max)
        })),
        tolerance: tols["recut_c"],
    });

    // Recut structure: exact involution and exact side multiset.
    out.push(CheckResult {
        name: "recut_exact_structure",
        samples,
        max_error: count_fail(par_map(samples, |k| {
            let q = quad_at(k);
            [DiagonalChoice::D13, DiagonalChoice::D24]
                .into_iter()
                .all(|d| {
                    let once = recut(&q, d).unwrap();
                    let twice = recut(&once, d).unwrap();
                    let mut s0 = q.metrics().sides;
                    let mut s1 = once.metrics().sides;
                    s0.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    s1.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    twice == q && s0 == s1
                })
        })),
        tolerance: 0.0,
    });

    // Morphing preserves interior angles bit-exactly.
    out.push(CheckResult {
        name: "morph_preserves_angles",
        samples,
        max_error: count_fail(par_map(samples, |k| {
            let q = quad_at(k);
            let (lo, hi) = feasible_interval(&q);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k) ^ 0x6d6f7270);
            (0..3).all(|_| {
                let t = lo + (hi - lo) * rng.random_range(0.0..1.0);
                let m = morph(&q, &MorphParams::shift(t)).unwrap();
                m.interior_angles() == q.interior_angles()
            })
        })),
        tolerance: 0.0,
    });

    // Morphing preserves C.
    out.push(CheckResult {
        name: "morph_preserves_c",
        samples,
        max_error: fold_max(par_map(samples, |k| {
            let q = quad_at(k);
            let c0 = q.metrics().ratio_c.unwrap();
            let (lo, hi) = feasible_interval(&q);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k) ^ 0x6d6f7270);
            (0..3)
                .map(|_| {
                    let t = lo + (hi - lo) * rng.random_range(0.0..1.0);
                    let m = morph(&q, &MorphParams::shift(t)).unwrap();
                    m.metrics().ratio_c.map_or(0.0, |c| (c - c0).abs())
                })
                .fold(0.0f64, f64::max)
        })),
        tolerance: tols["morph_c"],
    });

    // Opposite-angle perturbation: exact (+δ, −δ) on the chosen pair.
    out.push(CheckResult {
        name: "perturb_exact_deltas",
        samples,
        max_error: count_fail(par_map(samples, |k| {
            let q = quad_at(k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k) ^ 0x70657274);
            let pair = if rng.random_range(0..2) == 0 {
                OppositePair::P1P3
            } else {
                OppositePair::P2P4
            };
            let positive = rng.random_range(0..2) == 0;
            let s = q.arcs();
            let cap = match (pair, positive) {
                (OppositePair::P1P3, true) => s[0].min(s[3]),
                (OppositePair::P1P3, false) => s[1].min(s[2]),
                (OppositePair::P2P4, true) => s[2].min(s[3]),
                (OppositePair::P2P4, false) => s[0].min(s[1]),
            };
            let delta =
                snap_arc(cap * rng.random_range(0.05..0.8) * if positive { 1.0 } else { -1.0 });
            let p = match perturb_opposite_angles(&q, pair, delta) {
                Ok(p) => p,
                Err(_) => return false,
            };
            let before = q.interior_angles();
            let after = p.interior_angles();
            match pair {
                OppositePair::P1P3 => {
                    after[0] == before[0] + delta
                        && after[2] == before[2] - delta
                        && after[1] == before[1]
                        && after[3] == before[3]
                }
                OppositePair::P2P4 => {
                    after[3] == before[3] + delta
                        && after[1] == before[1] - delta
                        && after[0] == before[0]
                        && after[2] == before[2]
                }
            }
        })),
        tolerance: 0.0,
    });

    // φ from arcs against its diagonal/diameter definition.
    out.push(CheckResult {
        name: "phi_definition",
        samples,
        max_error: fold_max(par_map(samples, |k| {
            let q = quad_at(k);
            let m = q.metrics();
            let from_diag = (m.diagonals.0.powi(2) + m.diagonals.1.powi(2)) / q.diameter().powi(2);
            (m.phi - from_diag).abs() / m.phi.max(1.0)
        })),
        tolerance: tols["chord"],
    });

    out
}

// ---------------------------------------------------------------------------
// fiber
// ---------------------------------------------------------------------------

fn cmd_fiber(args: &FiberArgs, reproducible: bool) -> Result<i32, CliError> {
    if args.grid_radius < 2 {
        return Err(CliError::Usage("--grid-radius must be at least 2".into()));
    }
    let mode = if args.exact {
        Mode::Exact
    } else {
        Mode::Approx
    };
    let parse = |name: &str, raw: &str| {
        Scalar::parse(raw, mode).map_err(|e| CliError::Usage(format!("--{name}: {e}")))
    };
    let rho = parse("rho", &args.rho)?;
    let sigma = parse("sigma", &args.sigma)?;
    let slopes = FiberSlopes::new(rho, sigma).map_err(|e| match e {
        FiberError::NonPythagoreanExact { .. } => CliError::Usage(e.to_string()),
        other => CliError::Usage(other.to_string()),
    })?;
    let report = crate::fiber::interpolate_fiber_polynomials(slopes, args.grid_radius)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let pass = report.passes(tol::FIBER_OFFDIAG_REL);

    let mut obj = match report.to_json() {
        Value::Object(map) => map,
        _ => unreachable!("report serializes to an object"),
    };
    obj.insert("command".into(), json!("fiber"));
    obj.insert("pass".into(), json!(pass));
    timestamp_field(reproducible, &mut obj);
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&Value::Object(obj)).unwrap()
    );
    emit(&args.out, &text)?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------------
// reduce
// ---------------------------------------------------------------------------

fn cmd_reduce(args: &ReduceArgs, reproducible: bool) -> Result<i32, CliError> {
    let start = match (&args.seed, &args.quad) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "pass either --seed or --quad, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "pass a quad source: --seed N or --quad FILE".into(),
            ))
        }
        (Some(seed), None) => {
            if !args.min_arc.is_finite()
                || args.min_arc <= 0.0
                || args.min_arc >= std::f64::consts::FRAC_PI_2
            {
                return Err(CliError::Usage("--min-arc must lie in (0, π/2)".into()));
            }
            CircleQuad::random_convex(*seed, args.min_arc)
        }
        (None, Some(path)) => {
            let raw = fs::read_to_string(path)?;
            serde_json::from_str::<CircleQuad>(&raw)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
    };
    if args.max_rounds == 0 {
        return Err(CliError::Usage("--max-rounds must be at least 1".into()));
    }

    let (trace, limit_hit) = match reduce_to_square(&start, args.max_rounds, args.square_tol) {
        Ok(trace) => (trace, false),
        Err(ReductionError::RoundLimitExceeded { trace, .. }) => (*trace, true),
        Err(ReductionError::NotPerpendicular(_)) => unreachable!("reduce never raises this"),
    };
    let check = check_trace(&trace, args.square_tol);
    let pass = !limit_hit && check.terminated && check.growth_ok && check.ends_square;

    let mut obj = match serde_json::to_value(&trace).unwrap() {
        Value::Object(map) => map,
        _ => unreachable!("trace serializes to an object"),
    };
    obj.insert("check".into(), serde_json::to_value(&check).unwrap());
    obj.insert("pass".into(), json!(pass));
    timestamp_field(reproducible, &mut obj);
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&Value::Object(obj)).unwrap()
    );

    if args.svg {
        let dir = args
            .out
            .clone()
            .ok_or_else(|| CliError::Usage("--svg needs --out DIR".into()))?;
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("trace.json"), &text)?;
        let frame = |idx: usize, quad: &CircleQuad, label: &str| -> Result<(), CliError> {
            let path = dir.join(format!("step_{idx:03}.svg"));
            fs::write(path, svg::quad_frame(quad, label))?;
            Ok(())
        };
        frame(0, &trace.start, "start")?;
        for (i, step) in trace.steps.iter().enumerate() {
            let label = format!(
                "{:?} phi={:.6} diag_angle={:.6}",
                step.kind, step.phi, step.diag_angle
            );
            frame(i + 1, &step.quad, &label)?;
        }
    } else {
        emit(&args.out, &text)?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------------
// perp
// ---------------------------------------------------------------------------

fn cmd_perp(args: &PerpArgs, reproducible: bool) -> Result<i32, CliError> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let residuals = par_map(args.samples, |k| {
        let q = random_perpendicular(args.seed.wrapping_add(k), 0.05);
        let c = perpendicular_check(&q).expect("constructed quads are perpendicular");
        (c.identity_residual, c.area_diagonal_residual)
    });
    let max_identity = residuals.iter().map(|r| r.0).fold(0.0f64, f64::max);
    let max_area_diag = residuals.iter().map(|r| r.1).fold(0.0f64, f64::max);
    let pass = max_identity <= tol::PERP_RESIDUAL_TOL && max_area_diag <= tol::PERP_RESIDUAL_TOL;

    let mut obj = serde_json::Map::new();
    obj.insert("command".into(), json!("perp"));
    obj.insert("seed".into(), json!(args.seed));
    obj.insert("samples".into(), json!(args.samples));
    obj.insert("max_identity_residual".into(), json!(max_identity));
    obj.insert("max_area_diagonal_residual".into(), json!(max_area_diag));
    obj.insert("tolerance".into(), json!(tol::PERP_RESIDUAL_TOL));
    obj.insert("pass".into(), json!(pass));
    timestamp_field(reproducible, &mut obj);
    emit(
        &args.out,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&Value::Object(obj)).unwrap()
        ),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------------
// perturb
// ---------------------------------------------------------------------------

fn cmd_perturb(args: &PerturbArgs, reproducible: bool) -> Result<i32, CliError> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let failures: f64 = {
        let tols: BTreeMap<&str, f64> = tol::OVERRIDABLE.iter().copied().collect();
        let checks = run_verify_checks(args.seed, args.samples, 0.05, &tols);
        checks
            .iter()
            .find(|c| c.name == "perturb_exact_deltas")
            .map(|c| c.max_error)
            .unwrap_or(f64::NAN)
    };
    let pass = failures == 0.0;
    let mut obj = serde_json::Map::new();
    obj.insert("command".into(), json!("perturb"));
    obj.insert("seed".into(), json!(args.seed));
    obj.insert("samples".into(), json!(args.samples));
    obj.insert("exact_failures".into(), json!(failures));
    obj.insert("pass".into(), json!(pass));
    timestamp_field(reproducible, &mut obj);
    emit(
        &args.out,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&Value::Object(obj)).unwrap()
        ),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}
