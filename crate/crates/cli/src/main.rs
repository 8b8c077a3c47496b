//! `torus-critic`: grid scans, threshold bisection, rotation numbers and
//! self-checks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use torus_critic::birkhoff::{rho_scan_each, verdict_from_scan, write_samples_file, ReducedSystem, RotationSample, TorusVerdict, VerdictSettings, INTEG_TOL, ORBIT_LENGTH};
use torus_critic::scan::{bisect_threshold, run_grid_to, sidecar_path, Axis, Bracket, Family, Method, MethodSettings, Ray, ScanConfig, Status, DEFAULT_MU3};
use torus_critic::verify;

mod args;
mod layers;
mod scenario;

use args::{MethodArgs, Res, Span, Triple};
use layers::Layers;
use scenario::{MethodName, Scenario, ScenarioName};

/// Failure classes, one exit code each.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, ranges or config files (exit 2).
    Usage(String),
    /// A numerical precondition failed or a check did not pass (exit 3).
    Numeric(String),
    /// Files could not be read or written (exit 1).
    Io(String),
}

impl From<torus_critic::Error> for CliError {
    fn from(e: torus_critic::Error) -> Self {
        use torus_critic::Error as E;
        match e {
            E::Config(_) => Self::Usage(e.to_string()),
            E::Io(_) | E::Csv(_) | E::Json(_) => Self::Io(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "torus-critic", version, about = "Critical surfaces for the breakup of invariant tori")]
struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG also works
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify every cell of a (mu1, mu2) grid; resumable CSV output
    Scan(ScanArgs),
    /// Bisect the converged/diverged threshold along a ray in parameter space
    Bisect(BisectArgs),
    /// Rotation numbers of the reduced three-dimensional system over A0
    Rotnum(RotnumArgs),
    /// Run the built-in invariant checks
    Verify,
}

/// Options every computing command shares.
#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` file with defaults for any long option
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Take every parameter from the JSON provenance file of an earlier run
    #[arg(long, value_name = "FILE")]
    replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Hamiltonian family: golden2d or spiral3d
    #[arg(long, value_name = "NAME")]
    scenario: Option<ScenarioName>,
    /// renorm-time1, renorm-adaptive or conjugation
    #[arg(long, value_name = "METHOD")]
    method: Option<MethodName>,
    /// lo:hi
    #[arg(long, value_name = "LO:HI")]
    mu1_range: Option<Span>,
    /// lo:hi
    #[arg(long, value_name = "LO:HI")]
    mu2_range: Option<Span>,
    /// Fixed third amplitude (spiral3d)
    #[arg(long)]
    mu3: Option<f64>,
    /// Grid resolution NxM (N values of mu1, M of mu2)
    #[arg(long, value_name = "NxM")]
    res: Option<Res>,
    /// Output CSV; a JSON sidecar is written next to it
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads (0: one per core); overrides TORUS_CRITIC_WORKERS
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    method_args: MethodArgs,
}

#[derive(Debug, Args)]
struct BisectArgs {
    /// Hamiltonian family: golden2d or spiral3d
    #[arg(long, value_name = "NAME")]
    scenario: Option<ScenarioName>,
    /// renorm-time1, renorm-adaptive or conjugation
    #[arg(long, value_name = "METHOD")]
    method: Option<MethodName>,
    /// Direction c of the ray mu = c eps + offset, as c1,c2[,c3]
    #[arg(long, value_name = "C1,C2[,C3]", allow_hyphen_values = true)]
    ray: Option<Triple>,
    /// Fixed part of the ray, as o1,o2[,o3] (default: the scenario's mu3)
    #[arg(long, value_name = "O1,O2[,O3]", allow_hyphen_values = true)]
    ray_offset: Option<Triple>,
    /// eps range lo:hi; converged at lo, diverged at hi
    #[arg(long, value_name = "LO:HI")]
    range: Option<Span>,
    /// Stop once eps_hi - eps_lo < tol
    #[arg(long)]
    tol: Option<f64>,
    /// Output JSON (also printed)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    method_args: MethodArgs,
}

#[derive(Debug, Args)]
struct RotnumArgs {
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
    /// Third amplitude
    #[arg(long)]
    mu3: Option<f64>,
    /// Initial actions lo:hi
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true)]
    a0_range: Option<Span>,
    /// Number of initial actions
    #[arg(long)]
    samples: Option<usize>,
    /// Strobe steps S per orbit
    #[arg(long)]
    orbit_length: Option<usize>,
    /// Integrator tolerance
    #[arg(long)]
    integ_tol: Option<f64>,
    /// Also decide whether the torus with rotation number -1/nu2 is present
    #[arg(long)]
    verdict: bool,
    /// Output CSV (A0,rho,S,tail_gap); a JSON sidecar is written next to it
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads (0: one per core); overrides TORUS_CRITIC_WORKERS
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Scan(a) => scan(a),
        Command::Bisect(a) => bisect(a),
        Command::Rotnum(a) => rotnum(a),
        Command::Verify => run_verify(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, msg) = match e {
                CliError::Usage(m) => (2, m),
                CliError::Numeric(m) => (3, m),
                CliError::Io(m) => (1, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

/// Flag, then TORUS_CRITIC_WORKERS, then the config file, then 0.
fn workers(layers: &mut Layers, flag: Option<usize>) -> Result<usize, CliError> {
    let from_file = layers.pick::<usize>(None, "workers")?;
    if let Some(w) = flag {
        return Ok(w);
    }
    if let Ok(v) = std::env::var("TORUS_CRITIC_WORKERS") {
        return v.trim().parse().map_err(|_| CliError::Usage(format!("TORUS_CRITIC_WORKERS = `{v}` is not a count")));
    }
    Ok(from_file.unwrap_or(0))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{} is not a provenance file of this command: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Scenario from the flag or config; required unless a replay file is given.
fn scenario(layers: &mut Layers, flag: Option<ScenarioName>, replayed: Option<Family>) -> Result<Option<Family>, CliError> {
    let named = layers.pick(flag, "scenario")?.map(|s| s.0);
    match (named, replayed) {
        (Some(a), Some(b)) if a != b => Err(CliError::Usage(format!("scenario {a} conflicts with the replayed {b} run"))),
        (None, None) => Err(CliError::Usage("--scenario is required (golden2d or spiral3d)".into())),
        (a, b) => Ok(a.or(b)),
    }
}

fn axis(span: Span, n: usize, name: &str) -> Result<Axis, CliError> {
    Axis::new(span.0, span.1, n).map_err(|e| CliError::Usage(format!("{name}: {e}")))
}

fn scan(a: ScanArgs) -> Result<(), CliError> {
    let mut l = Layers::load(a.common.config.as_deref())?;
    let workers = workers(&mut l, a.workers)?;
    let out: PathBuf = l.pick(a.out, "out")?.ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let replay: Option<PathBuf> = l.pick(a.common.replay, "replay")?;
    let base: Option<ScanConfig> = replay.as_deref().map(read_json).transpose()?;
    let family = scenario(&mut l, a.scenario, base.as_ref().map(|c| c.family))?.expect("scenario resolved");
    let mut cfg = match base {
        Some(c) => c,
        None => {
            let s = Scenario::get(family);
            let mut c = ScanConfig::new(family, s.method, axis(Span(s.mu1.0, s.mu1.1), s.res.0, "mu1")?, axis(Span(s.mu2.0, s.mu2.1), s.res.1, "mu2")?);
            c.mu3 = s.mu3;
            c.settings = s.settings;
            c
        }
    };
    if let Some(m) = l.pick(a.method, "method")? {
        cfg.method = m.0;
    }
    let mu1 = l.pick(a.mu1_range, "mu1-range")?.unwrap_or(Span(cfg.mu1.lo, cfg.mu1.hi));
    let mu2 = l.pick(a.mu2_range, "mu2-range")?.unwrap_or(Span(cfg.mu2.lo, cfg.mu2.hi));
    let res = l.pick(a.res, "res")?.unwrap_or(Res(cfg.mu1.n, cfg.mu2.n));
    cfg.mu1 = axis(mu1, res.0, "mu1")?;
    cfg.mu2 = axis(mu2, res.1, "mu2")?;
    if let Some(m) = l.pick(a.mu3, "mu3")? {
        cfg.mu3 = m;
    }
    cfg.settings = a.method_args.apply(&mut l, cfg.settings)?;
    l.finish()?;
    cfg.validate()?;

    let cells = run_grid_to(&cfg, workers, &out)?;
    let count = |s: Status| cells.iter().filter(|c| c.status == s).count();
    println!(
        "{} cells to {} (converged {}, diverged {}, indeterminate {}, error {}); config in {}",
        cells.len(),
        out.display(),
        count(Status::Converged),
        count(Status::Diverged),
        count(Status::Indeterminate),
        count(Status::Error),
        sidecar_path(&out).display()
    );
    Ok(())
}

/// Everything that determines a bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BisectConfig {
    family: Family,
    method: Method,
    ray: Ray,
    range: (f64, f64),
    tol: f64,
    settings: MethodSettings,
}

#[derive(Debug, Serialize)]
struct BisectRecord<'a> {
    #[serde(flatten)]
    bracket: &'a Bracket,
    config: &'a BisectConfig,
}

#[derive(Debug, Deserialize)]
struct BisectReplay {
    config: BisectConfig,
}

fn bisect(a: BisectArgs) -> Result<(), CliError> {
    let mut l = Layers::load(a.common.config.as_deref())?;
    let out: Option<PathBuf> = l.pick(a.out, "out")?;
    let replay: Option<PathBuf> = l.pick(a.common.replay, "replay")?;
    let base: Option<BisectConfig> = replay.as_deref().map(read_json::<BisectReplay>).transpose()?.map(|r| r.config);
    let family = scenario(&mut l, a.scenario, base.as_ref().map(|c| c.family))?.expect("scenario resolved");
    let mut cfg = base.unwrap_or_else(|| {
        let s = Scenario::get(family);
        BisectConfig { family, method: s.method, ray: s.ray, range: s.ray_range, tol: s.tol, settings: s.settings }
    });
    if let Some(m) = l.pick(a.method, "method")? {
        cfg.method = m.0;
    }
    if let Some(d) = l.pick(a.ray, "ray")? {
        cfg.ray.direction = d.0;
    }
    if let Some(o) = l.pick(a.ray_offset, "ray-offset")? {
        cfg.ray.offset = o.0;
    }
    if let Some(r) = l.pick(a.range, "range")? {
        cfg.range = (r.0, r.1);
    }
    if let Some(t) = l.pick(a.tol, "tol")? {
        cfg.tol = t;
    }
    cfg.settings = a.method_args.apply(&mut l, cfg.settings)?;
    l.finish()?;
    if cfg.family == Family::Golden2d && (cfg.ray.direction[2] != 0.0 || cfg.ray.offset[2] != 0.0) {
        return Err(CliError::Usage("the golden2d family has no mu3; the ray must have a zero third component".into()));
    }
    if !(cfg.tol > 0.0) || !(cfg.range.0 < cfg.range.1) {
        return Err(CliError::Usage("bisection needs lo < hi and tol > 0".into()));
    }

    let bracket = bisect_threshold(cfg.family, cfg.method, &cfg.settings, cfg.ray, cfg.range, cfg.tol).map_err(|e| match e {
        torus_critic::Error::Bracket(m) => CliError::Numeric(format!("bracket failure: {m}")),
        other => other.into(),
    })?;
    let text = serde_json::to_string_pretty(&BisectRecord { bracket: &bracket, config: &cfg })? + "\n";
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

/// Everything that determines a rotation-number scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RotnumConfig {
    mu: [f64; 3],
    a0_range: (f64, f64),
    samples: usize,
    orbit_length: usize,
    integ_tol: f64,
    verdict: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct RotnumRecord {
    config: RotnumConfig,
    /// Initial actions whose orbit could not be integrated, with the reason.
    failures: Vec<(f64, String)>,
    verdict: Option<TorusVerdict>,
}

fn rotnum(a: RotnumArgs) -> Result<(), CliError> {
    let mut l = Layers::load(a.common.config.as_deref())?;
    let workers = workers(&mut l, a.workers)?;
    let out: PathBuf = l.pick(a.out, "out")?.ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let replay: Option<PathBuf> = l.pick(a.common.replay, "replay")?;
    let base: Option<RotnumConfig> = replay.as_deref().map(read_json::<RotnumRecord>).transpose()?.map(|r| r.config);
    let mu1 = l.pick(a.mu1, "mu1")?.or(base.as_ref().map(|c| c.mu[0]));
    let mu2 = l.pick(a.mu2, "mu2")?.or(base.as_ref().map(|c| c.mu[1]));
    let (Some(mu1), Some(mu2)) = (mu1, mu2) else {
        return Err(CliError::Usage("--mu1 and --mu2 are required".into()));
    };
    let defaults = VerdictSettings::default();
    let base = base.unwrap_or(RotnumConfig {
        mu: [mu1, mu2, DEFAULT_MU3],
        a0_range: defaults.range,
        samples: defaults.samples,
        orbit_length: ORBIT_LENGTH,
        integ_tol: INTEG_TOL,
        verdict: false,
    });
    let verdict_flag = if a.verdict { Some(true) } else { None };
    let cfg = RotnumConfig {
        mu: [mu1, mu2, l.pick(a.mu3, "mu3")?.unwrap_or(base.mu[2])],
        a0_range: l.pick(a.a0_range, "a0-range")?.map_or(base.a0_range, |s| (s.0, s.1)),
        samples: l.pick(a.samples, "samples")?.unwrap_or(base.samples),
        orbit_length: l.pick(a.orbit_length, "orbit-length")?.unwrap_or(base.orbit_length),
        integ_tol: l.pick(a.integ_tol, "integ-tol")?.unwrap_or(base.integ_tol),
        verdict: l.pick(verdict_flag, "verdict")?.unwrap_or(base.verdict),
    };
    l.finish()?;
    if cfg.orbit_length < 100 {
        return Err(CliError::Usage(format!("orbit length must be at least 100 (got {})", cfg.orbit_length)));
    }
    let sys = ReducedSystem::spiral(cfg.mu[0], cfg.mu[1], cfg.mu[2])?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let (samples, failures, verdict) = pool.install(|| -> Result<_, CliError> {
        let each = rho_scan_each(&sys, cfg.a0_range, cfg.samples, cfg.orbit_length, cfg.integ_tol)?;
        let mut samples = Vec::new();
        let mut failures = Vec::new();
        for (a0, r) in each {
            match r {
                Ok(s) => samples.push(s),
                Err(e) => {
                    log::warn!("orbit from A0 = {a0} failed: {e}");
                    failures.push((a0, e.to_string()));
                    samples.push(RotationSample { a0, rho: f64::NAN, s: cfg.orbit_length, tail_gap: f64::NAN });
                }
            }
        }
        let verdict = if cfg.verdict {
            let vs = VerdictSettings { range: cfg.a0_range, samples: cfg.samples, orbit_length: cfg.orbit_length, integ_tol: cfg.integ_tol, ..defaults };
            let good: Vec<RotationSample> = samples.iter().copied().filter(|s| s.rho.is_finite()).collect();
            let mut v = verdict_from_scan(&sys, &good, &vs)?;
            v.evaluations += samples.len();
            Some(v)
        } else {
            None
        };
        Ok((samples, failures, verdict))
    })?;

    write_samples_file(&samples, &out)?;
    let sidecar = sidecar_path(&out);
    println!("{} samples to {} ({} failed); config in {}", samples.len(), out.display(), failures.len(), sidecar.display());
    if let Some(v) = &verdict {
        println!("torus with rho = {:.6}: {} (margin {:.3})", sys.target_rho(), if v.present { "present" } else { "absent" }, v.margin);
    }
    write_json(&sidecar, &RotnumRecord { config: cfg, failures, verdict })
}

fn run_verify() -> Result<(), CliError> {
    let checks = verify::run_all();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Numeric(format!("{failed} of {} checks failed", checks.len())));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
