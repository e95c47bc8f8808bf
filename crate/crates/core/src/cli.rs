//! Command-line front end. Every command prints one JSON document holding
//! the tool version, the resolved configuration and the result.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{limit_estimates, sweep, weyl_verdict, write_csv, AlphaGrid, SweepOptions};
use crate::bounds::{
    bargmann_check, empirical_constant, lieb_thirring_check, BoundValue, Bounds, Observation,
};
use crate::channels::{Channels, SandwichReport};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::potential::{
    first_moment_side, integral_j, integral_logweight, load_spec, LogPotential, RadialPotential, SpecFile,
};
use crate::spectral1d::{count_below, threshold_energy, BoundaryMode, Grid, Method};
use crate::weakseq::{classify, delta_estimates, ell1_norm, quasinorm_weak, zeta_sequence, ClassifyTol};

pub const THREADS_ENV: &str = "WEYLCOUNT_THREADS";

#[derive(Debug, Parser, Serialize)]
#[command(name = "weylcount", version, about = "Bound-state counts and Weyl-law diagnostics for radial 2D potentials")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// JSON file of tolerances; the flags below override single entries
    #[arg(long, global = true)]
    pub tolerances: Option<PathBuf>,
    #[arg(long, global = true)]
    pub quad_abs: Option<f64>,
    #[arg(long, global = true)]
    pub quad_rel: Option<f64>,
    #[arg(long, global = true)]
    pub tail_tol_rel: Option<f64>,
    #[arg(long, global = true)]
    pub threshold_rel: Option<f64>,
    #[arg(long, global = true)]
    pub eig_tol: Option<f64>,
    #[arg(long, global = true)]
    pub near_threshold_rel: Option<f64>,
    #[arg(long, global = true)]
    pub fd_resolution: Option<f64>,
    /// Worker threads (default: WEYLCOUNT_THREADS, then all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized checks
    #[arg(long, global = true, default_value_t = 20240601)]
    pub seed: u64,
    /// Wall-clock cap for sweeps
    #[arg(long, global = true)]
    pub budget_seconds: Option<f64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Inspect a potential spec
    #[command(subcommand)]
    Potential(PotentialCmd),
    /// Block sequence and weak-ℓ1 verdict
    Seq(SeqArgs),
    /// One-dimensional count below an energy
    Count1d(Count1dArgs),
    /// Planar count by angular-momentum channels
    Count(CountArgs),
    /// Closed-form upper bounds
    Bounds(BoundsArgs),
    /// Sweep the coupling
    Sweep(SweepArgs),
    /// Run all consistency checks; exits 1 on any failure
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialCmd {
    Show(SpecArg),
    Integrals(IntegralsArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SpecArg {
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IntegralsArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long = "R", default_value_t = 1.0)]
    pub radius: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SeqArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long = "K", default_value_t = 200)]
    pub k: usize,
    /// Accepted for compatibility; output is always JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct Count1dArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Defaults to the threshold `-ε`
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    #[arg(long, default_value = "whole-line")]
    pub mode: String,
    /// pruefer, fd or both
    #[arg(long, default_value = "pruefer")]
    pub method: String,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    /// Include per-channel counts
    #[arg(long)]
    pub breakdown: bool,
    /// sandwich or duality; repeatable
    #[arg(long)]
    pub check: Vec<String>,
    #[arg(long, default_value = "pruefer")]
    pub method: String,
    /// Recount every channel with the other engine
    #[arg(long)]
    pub cross_check: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "R", conflicts_with = "min_r")]
    pub radius: Option<f64>,
    /// Report the logarithmic bound at the best radius of the grid
    #[arg(long = "minR")]
    pub min_r: bool,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub alpha_min: f64,
    #[arg(long)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 6)]
    pub per_decade: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value = "pruefer")]
    pub method: String,
    /// Distance of the tail ratios from the Weyl coefficient counted as converged
    #[arg(long, default_value_t = 0.02)]
    pub weyl_tol: f64,
    #[arg(long = "K", default_value_t = 200)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Couplings for the channel checks
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 20.0, 80.0])]
    pub alpha: Vec<f64>,
    /// Randomized one-dimensional instances for the engine comparison
    #[arg(long, default_value_t = 24)]
    pub instances: usize,
}

#[derive(Debug, Serialize)]
struct Resolved<'a> {
    command: &'a Command,
    tolerances: Tolerances,
    seed: u64,
    threads: Option<usize>,
    budget_seconds: Option<f64>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a Resolved<'a>,
    result: T,
}

/// Outcome of a command: the JSON result and whether a check failed.
struct Outcome {
    result: Value,
    failed: bool,
}

impl Outcome {
    fn ok(result: impl Serialize) -> Result<Self> {
        Ok(Self {
            result: serde_json::to_value(result)?,
            failed: false,
        })
    }
}

/// Runs the tool on `args` (including the program name), writing the report
/// to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(false) => 0,
        Ok(true) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownKind(_)
        | Error::InvalidParam { .. }
        | Error::NegativeSample { .. }
        | Error::InvalidArgument(_)
        | Error::Spec(_)
        | Error::Json(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn resolve_tolerances(g: &Global) -> Result<Tolerances> {
    let mut t = match &g.tolerances {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?,
        None => Tolerances::default(),
    };
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut t.quad.abs, g.quad_abs);
    set(&mut t.quad.rel, g.quad_rel);
    set(&mut t.tail_tol_rel, g.tail_tol_rel);
    set(&mut t.threshold_rel, g.threshold_rel);
    set(&mut t.eig_tol, g.eig_tol);
    set(&mut t.near_threshold_rel, g.near_threshold_rel);
    set(&mut t.fd_resolution, g.fd_resolution);
    t.validate()?;
    Ok(t)
}

fn thread_count(g: &Global) -> Result<Option<usize>> {
    if let Some(n) = g.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    let tol = resolve_tolerances(&cli.global)?;
    let threads = thread_count(&cli.global)?;
    if threads == Some(0) {
        return Err(Error::InvalidArgument("thread count must be positive".into()));
    }
    if let Some(b) = cli.global.budget_seconds {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("budget {b} s must be positive")));
        }
    }
    let resolved = Resolved {
        command: &cli.command,
        tolerances: tol,
        seed: cli.global.seed,
        threads,
        budget_seconds: cli.global.budget_seconds,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let outcome = pool.install(|| dispatch(cli, &tol))?;
    let envelope = Envelope {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &resolved,
        result: outcome.result,
    };
    let text = serde_json::to_string_pretty(&envelope)? + "\n";
    match &cli.command {
        Command::Sweep(SweepArgs { json: Some(path), .. }) => std::fs::write(path, text)?,
        _ => out.write_all(text.as_bytes())?,
    }
    Ok(outcome.failed)
}

fn dispatch(cli: &Cli, tol: &Tolerances) -> Result<Outcome> {
    match &cli.command {
        Command::Potential(PotentialCmd::Show(a)) => potential_show(&a.spec, tol),
        Command::Potential(PotentialCmd::Integrals(a)) => potential_integrals(a, tol),
        Command::Seq(a) => seq(a, tol),
        Command::Count1d(a) => count1d(a, tol),
        Command::Count(a) => count(a, tol),
        Command::Bounds(a) => bounds(a, tol),
        Command::Sweep(a) => run_sweep(a, cli.global.budget_seconds, tol),
        Command::Verify(a) => verify(a, cli.global.seed, tol),
    }
}

fn load(path: &Path) -> Result<RadialPotential> {
    load_spec(path).map_err(|e| match e {
        Error::Io(io) => Error::InvalidArgument(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn method(s: &str) -> Result<Method> {
    s.parse()
}

fn potential_show(path: &Path, tol: &Tolerances) -> Result<Outcome> {
    let p = load(path)?;
    let (r_lo, r_hi) = p.support();
    let log = match LogPotential::from_radial(&p, tol.tail_tol_rel, &tol.quad) {
        Ok(g) => json!({
            "domain": g.domain_hint(),
            "g_max": g.g_max(),
            "mass": g.total_mass().value,
            "truncated_mass": g.truncated_mass(),
        }),
        Err(Error::NonIntegrable) => json!({ "domain": null, "note": "∫ r F dr diverges" }),
        Err(e) => return Err(e),
    };
    Outcome::ok(json!({
        "spec": SpecFile::from_potential(&p),
        "support": [BoundValue(r_lo), BoundValue(r_hi)],
        "singular_at_zero": p.singular_at_zero(),
        "log_profile": log,
    }))
}

fn potential_integrals(a: &IntegralsArgs, tol: &Tolerances) -> Result<Outcome> {
    let p = load(&a.spec)?;
    Outcome::ok(json!({
        "R": a.radius,
        "j": BoundValue(integral_j(&p, &tol.quad)?.value),
        "log_moment_R": BoundValue(integral_logweight(&p, a.radius, &tol.quad)?.value),
        "log_moment_1": BoundValue(integral_logweight(&p, 1.0, &tol.quad)?.value),
        "first_moment_outer": BoundValue(first_moment_side(&p, 1.0, &tol.quad)?.value),
        "first_moment_inner": BoundValue(first_moment_side(&p, -1.0, &tol.quad)?.value),
    }))
}

fn seq(a: &SeqArgs, tol: &Tolerances) -> Result<Outcome> {
    let p = load(&a.spec)?;
    let z = zeta_sequence(&p, a.k, &tol.quad, p.description())?;
    let verdict = classify(&z, &ClassifyTol::default());
    let (lo, hi) = (a.k / 2 + 1, a.k + 1);
    let (max, min) = delta_estimates(&z.values, lo..=hi)?;
    Outcome::ok(json!({
        "K": a.k,
        "zeta": z.values,
        "tail": z.tail_note,
        "quasinorm": quasinorm_weak(&z.values),
        "ell1": ell1_norm(&z.values),
        "delta_window": { "ranks": [lo, hi], "max": max, "min": min },
        "verdict": verdict,
    }))
}

fn count1d(a: &Count1dArgs, tol: &Tolerances) -> Result<Outcome> {
    let p = load(&a.spec)?;
    let g = LogPotential::from_radial(&p, tol.tail_tol_rel, &tol.quad)?;
    let mode: BoundaryMode = a.mode.parse()?;
    let energy = a.energy.unwrap_or_else(|| threshold_energy(&g, a.alpha, tol));
    if a.method == "both" {
        let pr = count_below(&g, a.alpha, energy, mode, Method::Pruefer, tol)?;
        let fd = count_below(&g, a.alpha, energy, mode, Method::FdInertia, tol)?;
        let agree = pr.count.abs_diff(fd.count) <= pr.uncertainty + fd.uncertainty;
        return Ok(Outcome {
            result: json!({ "pruefer": pr, "fd": fd, "agree": agree }),
            failed: !agree,
        });
    }
    Outcome::ok(count_below(&g, a.alpha, energy, mode, method(&a.method)?, tol)?)
}

fn count(a: &CountArgs, tol: &Tolerances) -> Result<Outcome> {
    let p = load(&a.spec)?;
    let c = Channels::new(&p, tol)?;
    let m = method(&a.method)?;
    let b = c.total_count(a.alpha, m, a.cross_check)?;
    let mut failed = !b.cross_check_failures.is_empty();
    let mut checks = serde_json::Map::new();
    for name in &a.check {
        let v = match name.as_str() {
            "sandwich" => {
                let r = SandwichReport::from_breakdown(&b);
                failed |= !r.holds;
                serde_json::to_value(r)?
            }
            "duality" => {
                let r = c.bs_duality_check(a.alpha, &Grid::default(), m)?;
                failed |= !r.holds;
                serde_json::to_value(r)?
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown check `{other}` (expected sandwich or duality)"
                )))
            }
        };
        checks.insert(name.clone(), v);
    }
    let mut result = json!({
        "alpha": b.alpha,
        "total": b.total,
        "radial_dirichlet_count": b.radial_dirichlet_count,
        "nonradial": b.nonradial,
        "m_max": b.m_max,
        "uncertainty": b.uncertainty,
        "method": b.method,
    });
    if a.breakdown {
        result["breakdown"] = serde_json::to_value(&b)?;
    }
    if !checks.is_empty() {
        result["checks"] = Value::Object(checks);
    }
    Ok(Outcome { result, failed })
}

fn bounds(a: &BoundsArgs, tol: &Tolerances) -> Result<Outcome> {
    let p = load(&a.spec)?;
    let b = Bounds::new(&p, tol)?;
    let radius = if a.min_r {
        b.chad_min_over_r(a.alpha)?.radius
    } else {
        a.radius.unwrap_or(1.0)
    };
    Outcome::ok(b.report(a.alpha, radius, a.c)?)
}

fn run_sweep(a: &SweepArgs, budget: Option<f64>, tol: &Tolerances) -> Result<Outcome> {
    let p = load(&a.spec)?;
    let alphas = AlphaGrid {
        min: a.alpha_min,
        max: a.alpha_max,
        per_decade: a.per_decade,
    }
    .values()?;
    let opts = SweepOptions {
        method: method(&a.method)?,
        c: a.c,
        budget: budget.map(Duration::from_secs_f64),
    };
    let table = sweep(&p, &alphas, &opts, tol)?;
    if let Some(path) = &a.csv {
        write_csv(&table, std::fs::File::create(path)?)?;
    }
    let sequence = classify(&zeta_sequence(&p, a.k, &tol.quad, p.description())?, &ClassifyTol::default());
    let (weyl, limits) = if table.rows.is_empty() {
        (Value::Null, Value::Null)
    } else {
        let (hi, lo) = limit_estimates(&table)?;
        (
            serde_json::to_value(weyl_verdict(&sequence, &table, a.weyl_tol)?)?,
            json!({ "upper": hi, "lower": lo }),
        )
    };
    let quasinorm = quasinorm_weak(&zeta_sequence(&p, a.k, &tol.quad, p.description())?.values);
    let obs: Vec<Observation> = table
        .rows
        .iter()
        .map(|r| Observation {
            alpha: r.alpha,
            count: r.total,
            j: table.weyl_coefficient * 2.0,
            quasinorm,
        })
        .collect();
    let failed = table.rows.iter().any(|r| !(r.sandwich_holds && r.bounds_hold));
    Ok(Outcome {
        result: json!({
            "table": table,
            "limit_estimates": limits,
            "weyl": weyl,
            "sequence": sequence,
            "empirical_constant": BoundValue(empirical_constant(&obs)),
        }),
        failed,
    })
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    alpha: Option<f64>,
    passed: bool,
    detail: Value,
}

fn verify(a: &VerifyArgs, seed: u64, tol: &Tolerances) -> Result<Outcome> {
    let p = load(&a.spec)?;
    let c = Channels::new(&p, tol)?;
    let b = Bounds::new(&p, tol)?;
    let mut checks = vec![];
    for &alpha in &a.alpha {
        let br = c.total_count(alpha, Method::Pruefer, true)?;
        checks.push(Check {
            name: "channel-engines",
            alpha: Some(alpha),
            passed: br.cross_check_failures.is_empty(),
            detail: json!({ "per_channel": br.per_channel, "failures": br.cross_check_failures }),
        });
        let s = SandwichReport::from_breakdown(&br);
        checks.push(Check {
            name: "sandwich",
            alpha: Some(alpha),
            passed: s.holds,
            detail: serde_json::to_value(&s)?,
        });
        let d = c.bs_duality_check(alpha, &Grid::default(), Method::Pruefer)?;
        checks.push(Check {
            name: "duality",
            alpha: Some(alpha),
            passed: d.holds,
            detail: serde_json::to_value(&d)?,
        });
        let r = b.report(alpha, 1.0, 1.0)?;
        let ok = r.chad_sharp.admits(br.total) && r.chad_sharp <= r.chad && r.lt_nonradial.admits(br.nonradial);
        checks.push(Check {
            name: "bounds",
            alpha: Some(alpha),
            passed: ok,
            detail: json!({
                "total": br.total,
                "nonradial": br.nonradial,
                "chad_sharp": r.chad_sharp,
                "chad": r.chad,
                "lt_nonradial": r.lt_nonradial,
            }),
        });
        let lt = lieb_thirring_check(&c, alpha, tol)?;
        checks.push(Check {
            name: "lieb-thirring",
            alpha: Some(alpha),
            passed: lt.holds,
            detail: serde_json::to_value(&lt)?,
        });
        let bg = bargmann_check(&p, &c, alpha, tol)?;
        checks.push(Check {
            name: "bargmann",
            alpha: Some(alpha),
            passed: bg.holds,
            detail: serde_json::to_value(&bg)?,
        });
    }
    let (passed, detail) = engine_suite(c.log_potential(), a.instances, seed, tol)?;
    checks.push(Check {
        name: "oracle-equivalence",
        alpha: None,
        passed,
        detail,
    });
    let all = checks.iter().all(|c| c.passed);
    Ok(Outcome {
        result: json!({ "passed": all, "checks": checks }),
        failed: !all,
    })
}

/// Prüfer and finite-difference counts on random `(α, E, mode)`.
fn engine_suite(g: &LogPotential, n: usize, seed: u64, tol: &Tolerances) -> Result<(bool, Value)> {
    const MODES: [BoundaryMode; 3] = [
        BoundaryMode::WholeLine,
        BoundaryMode::HalfLineDirichlet,
        BoundaryMode::WholeLineDirichletAt0,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![];
    let mut ok = true;
    for _ in 0..n {
        let alpha = 10f64.powf(rng.gen_range(0.0..2.0));
        let mode = MODES[rng.gen_range(0..3)];
        let energy = if rng.gen_bool(0.3) || g.is_zero() {
            threshold_energy(g, alpha, tol)
        } else {
            -alpha * g.g_max() * 10f64.powf(rng.gen_range(-4.0..-0.3))
        };
        let pr = count_below(g, alpha, energy, mode, Method::Pruefer, tol)?;
        let fd = count_below(g, alpha, energy, mode, Method::FdInertia, tol)?;
        let agree = pr.count.abs_diff(fd.count) <= pr.uncertainty + fd.uncertainty;
        ok &= agree;
        rows.push(json!({
            "alpha": alpha,
            "energy": energy,
            "mode": mode,
            "pruefer": [pr.count, pr.uncertainty],
            "fd": [fd.count, fd.uncertainty],
            "agree": agree,
        }));
    }
    Ok((ok, Value::Array(rows)))
}
