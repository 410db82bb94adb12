//! The `jsq` command line.
//!
//! Exit status is 0 on success, 1 on usage or input errors and 2 when
//! `verify` finds a check outside its tolerance.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::asymmetric::{
    asym_boundaries_oracle, asym_boundaries_truncated, asym_functional_residual, asym_normalization_check,
    asym_reconstruct, asym_reconstruct_window, small_x_radius,
};
use crate::blocking::{blocking_asymptotics, blocking_probability, blocking_probability_odd, Regime};
use crate::cohen_chain::{boundary_coeffs_infinite, ProductState, DEFAULT_TOL};
use crate::convkernel::{g_pow, ConvTable, PowMethod};
use crate::error::{JsqError, Result};
use crate::finite_dist::{boundary_from_blocking, stationary_finite, stationary_finite_guarded};
use crate::infinite_dist::{default_window, stationary_infinite, t_seq};
use crate::model::{asymmetric_generator, symmetric_generator, AsymmetricParams, Capacity, JointDist, SymmetricParams};
use crate::oracle::{balance_residual, power_iteration, solve_balance_dense, stationary_vector, tail_bound, DIMENSION_CAP};
use crate::scalar::{parse_rational, Field};
use crate::simulator::{merge, simulate_replicas};
use crate::totals_bounds::{
    mean_total, mean_total_bounds, mean_total_bounds_infinite, order_chain, parse_grid, total_dist, uniform_gap_report,
    write_ratio_csv,
};

/// Version tag of every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// Truncation level for unbounded asymmetric queues.
pub const ASYM_TRUNCATION: usize = 60;

/// Largest capacity served by the rational backend.
pub const RATIONAL_MAX_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Float64,
    Rational,
}

impl Backend {
    /// From `JSQ_BACKEND` (`float64` or `rational`), float by default.
    pub fn from_env() -> Result<Self> {
        match std::env::var("JSQ_BACKEND") {
            Err(_) => Ok(Backend::Float64),
            Ok(v) => match v.trim() {
                "" | "float64" => Ok(Backend::Float64),
                "rational" => Ok(Backend::Rational),
                other => Err(JsqError::param("JSQ_BACKEND", format!("expected float64 or rational, got {other:?}"))),
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "jsq", version, about = "Exact analysis of two queues under join-the-shortest-queue routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Blocking probability pi_K(K, K).
    Blocking(BlockingArgs),
    /// Stationary distribution as CSV (or JSON).
    Dist(DistArgs),
    /// Convolution powers of the kernel g.
    Kernel(KernelArgs),
    /// Mean total occupancy and its bounds.
    Bounds(BoundsArgs),
    /// Blocking ratios against the comparison queues over a grid of loads.
    Compare(CompareArgs),
    /// Product form of the boundary generating function (unbounded queues).
    Cohen(CohenArgs),
    /// Asymmetric model from a direct boundary solve.
    Asym(AsymArgs),
    /// Direct solve of the balance equations.
    Oracle(OracleArgs),
    /// Coupled simulation with pathwise order checks.
    Simulate(SimulateArgs),
    /// Cross-checks of the closed forms against direct solves.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct BlockingArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: String,
    #[arg(long, required_unless_present = "total_cap")]
    cap: Option<usize>,
    /// Variant holding at most 2K - 1 customers.
    #[arg(long, conflicts_with = "total_cap")]
    odd: bool,
    /// Constraint on the total number of customers instead of per queue.
    #[arg(long, conflicts_with = "cap")]
    total_cap: Option<usize>,
    /// Also print the leading term in a regime: rho_to_0, rho_to_inf, K_to_inf.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct DistArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: String,
    #[arg(long)]
    cap: Capacity,
    /// Window for unbounded queues.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Iterated,
    Binomial,
    SigmaShift,
}

impl From<MethodArg> for PowMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Iterated => PowMethod::Iterated,
            MethodArg::Binomial => PowMethod::Binomial,
            MethodArg::SigmaShift => PowMethod::SigmaShift,
        }
    }
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    /// Largest convolution power.
    #[arg(long, default_value_t = 1)]
    kmax: usize,
    #[arg(long, default_value_t = 10)]
    jmax: usize,
    #[arg(long, value_enum, default_value = "iterated")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long)]
    cap: Capacity,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    cap: usize,
    /// `lo:hi:n`.
    #[arg(long, default_value = "0.01:6:600")]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CohenArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    /// Evaluate A at a real point.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "coeffs")]
    eval: Option<f64>,
    /// Print pi(0, k) for k <= KMAX.
    #[arg(long)]
    coeffs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct AsymArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    mu1: f64,
    #[arg(long, allow_hyphen_values = true)]
    mu2: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    p1: f64,
    #[arg(long)]
    cap: Capacity,
    /// Window for unbounded queues.
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Check the reconstruction and the functional relations.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, allow_hyphen_values = true, required_unless_present = "asym")]
    rho: Option<f64>,
    #[arg(long)]
    cap: usize,
    /// Solve the asymmetric model given by --lambda, --mu1, --mu2, --p1.
    #[arg(long, requires_all = ["lambda", "mu1", "mu2"], conflicts_with = "rho")]
    asym: bool,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu2: Option<f64>,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    p1: f64,
    /// Cross-check with uniformized power iteration.
    #[arg(long)]
    power: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long)]
    cap: usize,
    #[arg(long, default_value_t = 1_000_000)]
    events: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long)]
    cap: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

/// Formats with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let v: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    let a = v.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn num(x: f64) -> Value {
    Value::String(fmt_num(x))
}

fn doc(command: &str, fields: Value) -> Value {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    if let Value::Object(f) = fields {
        m.extend(f);
    }
    Value::Object(m)
}

enum Outcome {
    Ok,
    ChecksFailed,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match Backend::from_env().and_then(|b| dispatch(cli.command, b, out)) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::ChecksFailed) => 2,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command, backend: Backend, out: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Blocking(a) => cmd_blocking(a, backend, out),
        Command::Dist(a) => cmd_dist(a, backend, out),
        Command::Kernel(a) => cmd_kernel(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Cohen(a) => cmd_cohen(a, out),
        Command::Asym(a) => cmd_asym(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn parse_rho(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| JsqError::param("rho", format!("not a number: {s:?}")))
}

fn use_rational(backend: Backend, cap: usize) -> bool {
    backend == Backend::Rational && cap <= RATIONAL_MAX_CAP
}

fn cmd_blocking(a: BlockingArgs, backend: Backend, out: &mut dyn Write) -> Result<Outcome> {
    let rho = parse_rho(&a.rho)?;
    let (cap, odd) = match (a.cap, a.total_cap) {
        (_, Some(m)) => ((m + 1) / 2, m % 2 == 1),
        (Some(k), None) => (k, a.odd),
        (None, None) => return Err(JsqError::param("cap", "required")),
    };
    let p = SymmetricParams::finite(rho, cap)?;
    let (value, exact) = if use_rational(backend, cap) {
        let pr = SymmetricParams::finite(parse_rational(&a.rho)?, cap)?;
        let v: BigRational = if odd { blocking_probability_odd(&pr)? } else { blocking_probability(&pr)? };
        (v.approx(), Some(v.to_string()))
    } else if odd {
        (blocking_probability_odd(&p)?, None)
    } else {
        (blocking_probability(&p)?, None)
    };
    let leading = match &a.regime {
        Some(r) => Some(blocking_asymptotics(&p, r.parse::<Regime>()?)?),
        None => None,
    };
    if a.json {
        let mut v = doc(
            "blocking",
            json!({"rho": num(rho), "cap": cap, "odd": odd, "blocking": num(value)}),
        );
        if let Some(e) = exact {
            v["exact"] = json!(e);
        }
        if let Some(l) = leading {
            v["leading_term"] = num(l);
        }
        writeln!(out, "{v}")?;
    } else {
        match exact {
            Some(e) => writeln!(out, "{} ({e})", fmt_num(value))?,
            None => writeln!(out, "{}", fmt_num(value))?,
        }
        if let Some(l) = leading {
            writeln!(out, "leading term: {}", fmt_num(l))?;
        }
    }
    Ok(Outcome::Ok)
}

fn emit_dist(d: &JointDist<f64>, path: Option<&PathBuf>, as_json: bool, out: &mut dyn Write) -> Result<()> {
    match (path, as_json) {
        (Some(p), false) => d.write_csv(BufWriter::new(File::create(p)?)),
        (Some(p), true) => Ok(std::fs::write(p, d.to_json()?)?),
        (None, false) => d.write_csv(out),
        (None, true) => Ok(writeln!(out, "{}", d.to_json()?)?),
    }
}

fn cmd_dist(a: DistArgs, backend: Backend, out: &mut dyn Write) -> Result<Outcome> {
    let rho = parse_rho(&a.rho)?;
    let d = match a.cap {
        Capacity::Infinite => {
            SymmetricParams::infinite(rho)?;
            stationary_infinite(rho, a.window.unwrap_or_else(|| default_window(rho)))?
        }
        Capacity::Finite(k) if use_rational(backend, k) => {
            stationary_finite(&SymmetricParams::finite(parse_rational(&a.rho)?, k)?)?.to_f64()
        }
        Capacity::Finite(k) => stationary_finite_guarded(&SymmetricParams::finite(rho, k)?)?,
    };
    emit_dist(&d, a.out.as_ref(), a.json, out)?;
    if let Some(p) = &a.out {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(Outcome::Ok)
}

fn cmd_kernel(a: KernelArgs, out: &mut dyn Write) -> Result<Outcome> {
    if !(a.rho > 0.0) {
        return Err(JsqError::param("rho", "must be positive"));
    }
    if a.kmax == 0 {
        return Err(JsqError::param("kmax", "convolution powers start at k = 1"));
    }
    let rows = (1..=a.kmax)
        .map(|k| g_pow(&a.rho, k, a.jmax, a.method.into()))
        .collect::<Result<Vec<_>>>()?;
    if a.format == Format::Json {
        let values: Vec<Vec<Value>> = rows.iter().map(|r| r.iter().map(|&x| num(x)).collect()).collect();
        let v = doc("kernel", json!({"rho": num(a.rho), "kmax": a.kmax, "jmax": a.jmax, "values": values}));
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "k,j,value")?;
        for (k, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(out, "{},{j},{}", k + 1, fmt_num(*v))?;
            }
        }
    }
    Ok(Outcome::Ok)
}

fn cmd_bounds(a: BoundsArgs, out: &mut dyn Write) -> Result<Outcome> {
    let (exact, lower, upper) = match a.cap {
        Capacity::Finite(k) => {
            let p = SymmetricParams::finite(a.rho, k)?;
            let (lo, hi) = mean_total_bounds(&p)?;
            (Some(mean_total(&p)?), lo, hi)
        }
        Capacity::Infinite => {
            let (lo, hi) = mean_total_bounds_infinite(a.rho)?;
            (None, lo, hi)
        }
    };
    if a.json {
        let mut v = doc(
            "bounds",
            json!({"rho": num(a.rho), "cap": a.cap.to_string(), "lower": num(lower), "upper": num(upper)}),
        );
        if let Some(e) = exact {
            v["mean"] = num(e);
        }
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "lower {}", fmt_num(lower))?;
        if let Some(e) = exact {
            writeln!(out, "mean  {}", fmt_num(e))?;
        }
        writeln!(out, "upper {}", fmt_num(upper))?;
    }
    Ok(Outcome::Ok)
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write) -> Result<Outcome> {
    let grid = parse_grid(&a.grid)?;
    let report = uniform_gap_report(a.cap, &grid)?;
    if let Some(p) = &a.out {
        write_ratio_csv(&report.rows, BufWriter::new(File::create(p)?))?;
    }
    let gaps = [("mm1k", &report.mm1k_gap), ("mm2_2k", &report.mm2_2k_gap)];
    if a.json {
        let mut v = doc("compare", json!({"cap": a.cap, "points": grid.len()}));
        for (name, g) in gaps {
            v[name] = json!({
                "sup": num(g.sup), "argmax": num(g.argmax),
                "lower": num(g.lower), "upper": num(g.upper), "within": g.within(),
            });
        }
        writeln!(out, "{v}")?;
    } else {
        if a.out.is_none() {
            write_ratio_csv(&report.rows, &mut *out)?;
        }
        for (name, g) in gaps {
            writeln!(
                out,
                "{name}: sup {} at rho {} in [{}, {}]: {}",
                fmt_num(g.sup),
                fmt_num(g.argmax),
                fmt_num(g.lower),
                fmt_num(g.upper),
                if g.within() { "ok" } else { "OUTSIDE" }
            )?;
        }
    }
    Ok(Outcome::Ok)
}

fn cmd_cohen(a: CohenArgs, out: &mut dyn Write) -> Result<Outcome> {
    let state = ProductState::adaptive(a.rho, a.tol)?;
    if let Some(kmax) = a.coeffs {
        let b = boundary_coeffs_infinite(a.rho, kmax, Some(state.terms()))?;
        if a.json {
            let v = doc(
                "cohen",
                json!({"rho": num(a.rho), "terms": state.terms(), "coeffs": b.values.iter().map(|&x| num(x)).collect::<Vec<_>>()}),
            );
            writeln!(out, "{v}")?;
        } else {
            writeln!(out, "k,prob")?;
            for (k, p) in b.values.iter().enumerate() {
                writeln!(out, "{k},{}", fmt_num(*p))?;
            }
        }
        return Ok(Outcome::Ok);
    }
    let y = a.eval.unwrap_or(1.0);
    let (value, error) = state.eval(Complex64::new(y, 0.0))?;
    if a.json {
        let v = doc(
            "cohen",
            json!({"rho": num(a.rho), "y": num(y), "value": num(value.re), "error": num(error), "terms": state.terms(), "constant": num(state.c)}),
        );
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "{} (error {}, {} factors)", fmt_num(value.re), fmt_num(error), state.terms())?;
    }
    Ok(Outcome::Ok)
}

fn cmd_asym(a: AsymArgs, out: &mut dyn Write) -> Result<Outcome> {
    let p = AsymmetricParams::new(a.lambda, a.mu1, a.mu2, a.p1, a.cap)?;
    let (b, d, cap) = match a.cap {
        Capacity::Finite(cap) => {
            let b = asym_boundaries_oracle(&p)?;
            let d = asym_reconstruct(&p, &b)?;
            (b, d, cap)
        }
        Capacity::Infinite => {
            let b = asym_boundaries_truncated(&p, ASYM_TRUNCATION.max(2 * a.window + 1))?;
            let d = asym_reconstruct_window(&p, &b, a.window)?;
            (b, d, a.window)
        }
    };
    let mut checks = Vec::new();
    if a.verify {
        let q = asymmetric_generator(&p, b.capacity());
        let o = JointDist::from_state_vector(&q, &stationary_vector(&q)?);
        checks.push(("reconstruction", d.max_abs_diff(&o.window(cap)), if p.capacity.is_infinite() { 1e-7 } else { 1e-9 }));
        if let Capacity::Finite(_) = a.cap {
            checks.push(("normalization", asym_normalization_check(&p, &o), 1e-10));
            let r = small_x_radius(&p);
            let mut worst = 0.0f64;
            for t in 1..=10 {
                let x = Complex64::from_polar(r * t as f64 / 10.0, 0.9 * t as f64);
                let (e1, e2) = asym_functional_residual(&p, &o, x)?;
                worst = worst.max(e1.norm()).max(e2.norm());
            }
            checks.push(("functional", worst, 1e-9));
        }
    }
    let failed = checks.iter().any(|c| !(c.1 <= c.2));
    if let Some(path) = &a.out {
        d.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let blocking = if p.capacity.is_infinite() { None } else { Some(d.get(cap, cap)) };
    if a.json {
        let mut v = doc(
            "asym",
            json!({
                "lambda": num(a.lambda), "mu1": num(a.mu1), "mu2": num(a.mu2), "p1": num(a.p1), "cap": a.cap.to_string(),
                "row": b.row.iter().take(cap + 1).map(|&x| num(x)).collect::<Vec<_>>(),
                "col": b.col.iter().take(cap + 1).map(|&x| num(x)).collect::<Vec<_>>(),
            }),
        );
        if let Some(bl) = blocking {
            v["blocking"] = num(bl);
        }
        for (name, value, tol) in &checks {
            v[*name] = json!({"residual": num(*value), "tol": num(*tol), "ok": *value <= *tol});
        }
        writeln!(out, "{v}")?;
    } else {
        if let Some(bl) = blocking {
            writeln!(out, "blocking {}", fmt_num(bl))?;
        }
        if a.out.is_none() && !a.verify {
            d.write_csv(&mut *out)?;
        }
        report_checks(&checks, out)?;
    }
    Ok(if failed { Outcome::ChecksFailed } else { Outcome::Ok })
}

fn report_checks(checks: &[(&str, f64, f64)], out: &mut dyn Write) -> Result<()> {
    for (name, value, tol) in checks {
        let status = if *value <= *tol { "ok" } else { "FAIL" };
        writeln!(out, "{status} {name}: {} (tol {})", fmt_num(*value), fmt_num(*tol))?;
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs, out: &mut dyn Write) -> Result<Outcome> {
    let q = match (a.asym, a.rho, a.lambda, a.mu1, a.mu2) {
        (true, _, Some(l), Some(m1), Some(m2)) => {
            asymmetric_generator(&AsymmetricParams::new(l, m1, m2, a.p1, Capacity::Finite(a.cap))?, a.cap)
        }
        (false, Some(rho), ..) if rho > 0.0 => symmetric_generator(&rho, a.cap),
        _ => return Err(JsqError::param("rho", "must be positive")),
    };
    if q.dim() > DIMENSION_CAP {
        return Err(JsqError::DimensionCap {
            states: q.dim(),
            cap: DIMENSION_CAP,
        });
    }
    let pi = stationary_vector(&q)?;
    let d = JointDist::from_state_vector(&q, &pi);
    let residual = balance_residual(&q, &pi);
    let power_gap = if a.power {
        let pw = power_iteration(&q, 1e-13, 2_000_000);
        Some(pi.iter().zip(&pw).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    } else {
        None
    };
    if let Some(path) = &a.out {
        d.write_csv(BufWriter::new(File::create(path)?))?;
    }
    if a.json {
        let mut v = doc(
            "oracle",
            json!({"cap": a.cap, "blocking": num(d.get(a.cap, a.cap)), "residual": num(residual)}),
        );
        if let Some(rho) = a.rho {
            v["rho"] = num(rho);
        }
        if let Some(g) = power_gap {
            v["power_gap"] = num(g);
        }
        writeln!(out, "{v}")?;
    } else {
        if a.out.is_none() {
            d.write_csv(&mut *out)?;
        }
        writeln!(out, "residual {}", fmt_num(residual))?;
        if let Some(g) = power_gap {
            writeln!(out, "power iteration gap {}", fmt_num(g))?;
        }
    }
    Ok(Outcome::Ok)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<Outcome> {
    let p = SymmetricParams::finite(a.rho, a.cap)?;
    let reports = simulate_replicas(&p, a.events, a.seed, a.replicas)?;
    if a.json {
        let v = if reports.len() == 1 {
            let mut v = serde_json::to_value(&reports[0])?;
            v["schema_version"] = json!(SCHEMA_VERSION);
            v["command"] = json!("simulate");
            v
        } else {
            let m = merge(&reports);
            let mut v = serde_json::to_value(&m)?;
            v["schema_version"] = json!(SCHEMA_VERSION);
            v["command"] = json!("simulate");
            v
        };
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        let m = merge(&reports);
        writeln!(out, "events {}", m.events)?;
        writeln!(out, "violations {}", m.violations)?;
        writeln!(
            out,
            "jsq blocking {} +- {}",
            fmt_num(m.jsq_blocking.mean),
            fmt_num(m.jsq_blocking.half_width)
        )?;
        writeln!(out, "closed form  {}", fmt_num(blocking_probability(&p)?))?;
        let names = ["jsq", "mm1k", "mm2_2k", "mm1_2k"];
        for (n, o) in names.iter().zip(m.mean_occupancy) {
            writeln!(out, "mean occupancy {n} {}", fmt_num(o))?;
        }
    }
    Ok(if reports.iter().any(|r| r.violations > 0) { Outcome::ChecksFailed } else { Outcome::Ok })
}

/// Named residuals against their tolerances for one parameter point.
pub fn verify_checks(rho: f64, cap: usize, tol: f64) -> Result<Vec<(&'static str, f64, f64)>> {
    let p = SymmetricParams::finite(rho, cap)?;
    if (cap + 1) * (cap + 1) > DIMENSION_CAP {
        return Err(JsqError::DimensionCap {
            states: (cap + 1) * (cap + 1),
            cap: DIMENSION_CAP,
        });
    }
    let o = solve_balance_dense(&symmetric_generator(&rho, cap))?;
    let mut checks = Vec::new();
    checks.push(("blocking", (blocking_probability(&p)? - o.get(cap, cap)).abs(), tol));
    let d = stationary_finite_guarded(&p)?;
    checks.push(("distribution", d.max_abs_diff(&o), tol));
    checks.push(("mass", (d.total_mass() - 1.0).abs(), tol));
    let b = boundary_from_blocking(&p)?;
    let a1 = 1.0 - rho * (1.0 - o.get(cap, cap));
    checks.push(("boundary_sum", (b.sum() - a1).abs(), tol));
    let t = ConvTable::symmetric(&rho, cap + 1, cap + 2);
    checks.push(("kernel_recursion", t.column_recursion_residual(), tol));
    let c = order_chain(rho, cap)?;
    let order = c.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    checks.push(("stochastic_order", order, 1e-12));
    let td = total_dist(&p)?;
    let (lo, hi) = mean_total_bounds(&p)?;
    let e = td.mean();
    checks.push(("mean_sandwich", (lo - e).max(e - hi).max(0.0), 1e-9));
    if rho < 1.0 {
        let state = ProductState::adaptive(rho, DEFAULT_TOL)?;
        let (ainv, _) = state.eval(Complex64::new(1.0 / rho, 0.0))?;
        checks.push(("product_at_inv_rho", (ainv.re - (2.0 - rho) * (1.0 - rho)).abs(), 1e-8));
        let w = default_window(rho);
        if tail_bound(rho, w) <= crate::infinite_dist::T_SEQ_TOL {
            let di = stationary_infinite(rho, w)?;
            let ts = t_seq(rho, &di, 10.min(w - 1))?;
            checks.push(("t_recursion", ts.max_residual(), 1e-7));
            checks.push(("t0", (ts.values[0] - 1.0 / (1.0 + 2.0 * rho)).abs(), 1e-7));
        }
    }
    Ok(checks)
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<Outcome> {
    let checks = verify_checks(a.rho, a.cap, a.tol)?;
    let failed = checks.iter().any(|c| !(c.1 <= c.2));
    if a.json {
        let mut v = doc("verify", json!({"rho": num(a.rho), "cap": a.cap, "ok": !failed}));
        for (name, value, tol) in &checks {
            v[*name] = json!({"residual": num(*value), "tol": num(*tol), "ok": *value <= *tol});
        }
        writeln!(out, "{v}")?;
    } else {
        report_checks(&checks, out)?;
    }
    Ok(if failed { Outcome::ChecksFailed } else { Outcome::Ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("jsq").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn numbers() {
        assert_eq!(fmt_num(0.4), "0.4");
        assert_eq!(fmt_num(4.0 / 17.0), "0.235294117647059");
        assert_eq!(fmt_num(2e-9), "2e-9");
        assert_eq!(fmt_num(0.0), "0");
    }

    #[test]
    fn blocking_and_errors() {
        assert_eq!(call(&["blocking", "--rho", "1", "--cap", "1"]), (0, "0.4\n".into(), String::new()));
        let (code, _, err) = call(&["blocking", "--rho", "-1", "--cap", "2"]);
        assert_eq!(code, 1);
        assert!(err.contains("rho"));
        let (code, _, err) = call(&["blocking", "--rho", "1", "--capp", "2"]);
        assert_eq!(code, 1);
        assert!(err.contains("--capp"));
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn verify_passes() {
        let (code, out, _) = call(&["verify", "--rho", "0.5", "--cap", "4"]);
        assert_eq!(code, 0, "{out}");
        assert!(!out.contains("FAIL"));
        let (code, _, _) = call(&["verify", "--rho", "2", "--cap", "3", "--tol", "0"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn json_has_schema() {
        let (code, out, _) = call(&["bounds", "--rho", "1", "--cap", "5", "--json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "bounds");
    }
}
