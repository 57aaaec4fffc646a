use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::Serialize;
use serde_json::json;

use longwave::bo::{gaussian_profile, run_to, BOState, TraceRow};
use longwave::harness::{
    residual_sweep, run_validation, write_residual_outputs, write_validation_outputs, EpsilonPlan, RunStatus,
    ValidationConfig,
};
use longwave::lattice::{FarField, Integrator, Lattice, LatticeConfig, LatticeState};
use longwave::specfun::{eta_integral, eta_riemann, find_alpha_star, make_alpha_params};
use longwave::spectral::PeriodicGrid;
use longwave::{AlphaParams64, Error};

use crate::args::{Cli, Command, DumpFormat, FarFieldArg, SimulateLattice, SolveBo, Sweep};
use crate::manifest::RunManifest;

/// Why a command stopped; maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input, bad configuration or an I/O problem (exit 1).
    Input(String),
    /// The evolution left the admissible regime (exit 2).
    BlowUp {
        alpha: f64,
        epsilon: Option<f64>,
        t: f64,
        message: String,
    },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::BlowUp { .. } => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(msg) => write!(f, "{}", msg),
            Failure::BlowUp { alpha, epsilon, t, message } => {
                write!(f, "blow-up at alpha = {}", alpha)?;
                if let Some(e) = epsilon {
                    write!(f, ", epsilon = {}", e)?;
                }
                write!(f, ", t = {}: {}", t, message)
            }
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("i/o error: {}", e))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(format!("csv error: {}", e))
    }
}

type Outcome = Result<(), Failure>;

/// Prints to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Outcome {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn run(cli: &Cli) -> Outcome {
    if cli.seed.is_some() {
        log::info!("--seed has no effect: every pipeline is deterministic");
    }
    match &cli.command {
        Command::Constants { alpha, tol } => {
            let p = make_alpha_params(*alpha, *tol)?;
            emit(&(to_json(&p)? + "\n"))
        }
        Command::AlphaStar { tol } => {
            emit(&format!("{}\n", find_alpha_star(*tol)?))
        }
        Command::EtaRates { alpha, h_list, tol } => eta_rates(cli, *alpha, h_list, *tol),
        Command::SolveBo(args) => solve_bo(cli, args),
        Command::SimulateLattice(args) => simulate_lattice(cli, args),
        Command::ResidualSweep(args) => sweep(cli, args, false),
        Command::Validate(args) => sweep(cli, args, true),
    }
}

fn to_json<S: Serialize>(value: &S) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))
}

fn to_value<S: Serialize>(value: &S) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(value).map_err(|e| Failure::Input(e.to_string()))
}

fn jobs(cli: &Cli) -> usize {
    cli.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

/// Directory that receives the manifest for a single output file.
fn parent_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn eta_rates(cli: &Cli, alpha: f64, hs: &[f64], tol: f64) -> Outcome {
    let started = Utc::now();
    let exact = eta_integral(alpha, tol)?;
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let eta_h = eta_riemann(alpha, h, tol)?;
        rows.push((h, eta_h, (eta_h - exact).abs()));
    }
    let mut text = String::from("h,eta_h,abs_err\n");
    for (h, e, err) in &rows {
        text.push_str(&format!("{},{},{}\n", h, e, err));
    }
    match &cli.out {
        Some(path) if !cli.dry_run => {
            fs::create_dir_all(parent_dir(path))?;
            fs::write(path, &text)?;
            let config = json!({"alpha": alpha, "h_list": hs, "tol": tol});
            RunManifest::new("eta-rates", config, started, vec![path.clone()]).write(&parent_dir(path))?;
        }
        _ => emit(&text)?,
    }
    Ok(())
}

fn solve_bo(cli: &Cli, args: &SolveBo) -> Outcome {
    let started = Utc::now();
    let width = args.width.unwrap_or(args.period / 20.0);
    let config = json!({
        "alpha": args.alpha, "n": args.n, "period": args.period, "dtau": args.dtau,
        "tau_end": args.tau_end, "amplitude": args.amplitude, "width": width,
        "checkpoints": args.checkpoints, "dump": format!("{:?}", args.dump).to_lowercase(),
    });
    if args.checkpoints == 0 {
        return Err(Failure::Input("checkpoints must be at least 1".into()));
    }
    let params = AlphaParams64::new(args.alpha, 1e-12)?;
    let grid = PeriodicGrid::new(args.period, args.n)?;
    let bo = longwave::bo::BOConfig::new(params, args.dtau);
    bo.validate()?;
    let trace_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("out/bo_trace.csv"));
    if cli.dry_run {
        return emit(&format!("{}\ntrace -> {}\n", to_json(&config)?, trace_path.display()));
    }
    let dir = parent_dir(&trace_path);
    fs::create_dir_all(&dir)?;
    let stem = trace_path.file_stem().and_then(|s| s.to_str()).unwrap_or("bo").to_string();

    let mut state = BOState::new(gaussian_profile(&grid, args.amplitude, width), 0.0);
    let mut rows: Vec<TraceRow<f64>> = vec![TraceRow::of(&state)];
    let mut outputs = vec![trace_path.clone()];
    outputs.push(dump_field(&dir, &stem, 0, &state, args.dump)?);
    for i in 1..=args.checkpoints {
        let tau = args.tau_end * i as f64 / args.checkpoints as f64;
        let (next, _) = run_to(&state, tau, &bo).map_err(|e| match e {
            Error::BlowUp { time } => Failure::BlowUp {
                alpha: args.alpha,
                epsilon: None,
                t: time,
                message: "BO solution stopped being finite".into(),
            },
            other => other.into(),
        })?;
        state = next;
        rows.push(TraceRow::of(&state));
        outputs.push(dump_field(&dir, &stem, i, &state, args.dump)?);
    }
    let mut w = csv::Writer::from_path(&trace_path)?;
    w.write_record(["tau", "mean", "l2", "h6"])?;
    for r in &rows {
        w.write_record([r.tau, r.mean, r.l2, r.h6].iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    RunManifest::new("solve-bo", config, started, outputs).write(&dir)?;
    Ok(())
}

fn dump_field(dir: &Path, stem: &str, i: usize, state: &BOState<f64>, format: DumpFormat) -> Result<PathBuf, Failure> {
    let ext = match format {
        DumpFormat::Csv => "csv",
        DumpFormat::Binary => "bin",
    };
    let path = dir.join(format!("{}_u{:04}.{}", stem, i, ext));
    let mut w = BufWriter::new(File::create(&path)?);
    match format {
        DumpFormat::Csv => state.u.write_csv(&mut w)?,
        DumpFormat::Binary => state.u.write_binary(&mut w)?,
    }
    w.flush()?;
    Ok(path)
}

/// Small right-moving bump: `r` a mean-free Gaussian, `p = -c r`.
fn default_lattice_state(n: usize, alpha: f64) -> Result<LatticeState<f64>, Failure> {
    let c = AlphaParams64::new(alpha, 1e-12)?.c;
    let centre = n as f64 / 2.0;
    let width = (n as f64 / 20.0).max(1.0);
    let raw: Vec<f64> = (0..n).map(|j| 0.01 * (-((j as f64 - centre) / width).powi(2)).exp()).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let r: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let p = r.iter().map(|v| -c * v).collect();
    Ok(LatticeState { r, p, t: 0.0 })
}

fn read_lattice_state(path: &Path, n: usize) -> Result<LatticeState<f64>, Failure> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Failure::Input(format!("{}: missing column '{}'", path.display(), name)))
    };
    let (ir, ip) = (column("r")?, column("p")?);
    let (mut r, mut p) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<f64, Failure> {
            record
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Failure::Input(format!("{}: bad number on data row {}", path.display(), line + 1)))
        };
        r.push(field(ir)?);
        p.push(field(ip)?);
    }
    if r.len() != n {
        return Err(Failure::Input(format!(
            "{} holds {} sites but --n is {}",
            path.display(),
            r.len(),
            n
        )));
    }
    Ok(LatticeState { r, p, t: 0.0 })
}

/// Writes records as CSV `t,j,r,p` rows or as little-endian `f64` words:
/// a header `n`, then `t, r[0..n], p[0..n]` per record.
enum TrajectoryWriter {
    Csv(csv::Writer<File>),
    Binary(BufWriter<File>),
}

impl TrajectoryWriter {
    fn create(path: &Path, format: DumpFormat, n: usize) -> Result<Self, Failure> {
        Ok(match format {
            DumpFormat::Csv => {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["t", "j", "r", "p"])?;
                TrajectoryWriter::Csv(w)
            }
            DumpFormat::Binary => {
                let mut w = BufWriter::new(File::create(path)?);
                w.write_all(&(n as f64).to_le_bytes())?;
                TrajectoryWriter::Binary(w)
            }
        })
    }

    fn record(&mut self, s: &LatticeState<f64>) -> Outcome {
        match self {
            TrajectoryWriter::Csv(w) => {
                for (j, (r, p)) in s.r.iter().zip(&s.p).enumerate() {
                    w.write_record([s.t.to_string(), j.to_string(), r.to_string(), p.to_string()])?;
                }
            }
            TrajectoryWriter::Binary(w) => {
                for v in std::iter::once(&s.t).chain(&s.r).chain(&s.p) {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Outcome {
        match self {
            TrajectoryWriter::Csv(mut w) => w.flush()?,
            TrajectoryWriter::Binary(mut w) => w.flush()?,
        }
        Ok(())
    }
}

fn simulate_lattice(cli: &Cli, args: &SimulateLattice) -> Outcome {
    let started = Utc::now();
    let every = args.every.unwrap_or((args.steps / 10).max(1));
    if every == 0 {
        return Err(Failure::Input("--every must be positive".into()));
    }
    let mut cfg = LatticeConfig::new(args.n, args.alpha, args.cutoff, args.dt);
    cfg.far_field = match args.far_field {
        FarFieldArg::Truncated => FarField::Truncated,
        FarFieldArg::LinearTail => FarField::LinearTail,
    };
    cfg.validate()?;
    let default_name = match args.format {
        DumpFormat::Csv => "out/traj.csv",
        DumpFormat::Binary => "out/traj.bin",
    };
    let path = cli.out.clone().unwrap_or_else(|| PathBuf::from(default_name));
    let config = json!({
        "alpha": args.alpha, "n": args.n, "cutoff": args.cutoff, "dt": args.dt, "steps": args.steps,
        "every": every, "init": args.init, "far_field": to_value(&cfg.far_field)?,
        "format": format!("{:?}", args.format).to_lowercase(),
    });
    let state = match &args.init {
        Some(p) => read_lattice_state(p, args.n)?,
        None => default_lattice_state(args.n, args.alpha)?,
    };
    if cli.dry_run {
        return emit(&format!("{}\ntrajectory -> {}\n", to_json(&config)?, path.display()));
    }
    let lattice = Lattice::new(cfg)?;
    let dir = parent_dir(&path);
    fs::create_dir_all(&dir)?;
    let mut out = TrajectoryWriter::create(&path, args.format, args.n)?;
    let mut integ = Integrator::new(&lattice, state)?;
    out.record(integ.state())?;
    let mut done = 0;
    while done < args.steps {
        let chunk = every.min(args.steps - done);
        if let Err(e) = integ.advance(chunk) {
            out.finish()?;
            return Err(lattice_failure(e, args.alpha, None, integ.state().t));
        }
        done += chunk;
        out.record(integ.state())?;
    }
    out.finish()?;
    RunManifest::new("simulate-lattice", config, started, vec![path]).write(&dir)?;
    Ok(())
}

fn lattice_failure(e: Error, alpha: f64, epsilon: Option<f64>, t: f64) -> Failure {
    match e {
        Error::BlowUp { time } => Failure::BlowUp {
            alpha,
            epsilon,
            t: time,
            message: "state stopped being finite".into(),
        },
        Error::Collision { .. } => Failure::BlowUp {
            alpha,
            epsilon,
            t,
            message: e.to_string(),
        },
        Error::Precondition(msg) => Failure::BlowUp { alpha, epsilon, t, message: msg },
        other => other.into(),
    }
}

/// Base config from `--config` (or defaults) with flags applied on top.
pub fn resolve_config(cli: &Cli, args: &Sweep) -> Result<ValidationConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read {}: {}", path.display(), e)))?;
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {}", path.display(), e)))?
        }
        None => ValidationConfig::default(),
    };
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(e) = &args.epsilons {
        cfg.epsilons = e.clone();
    }
    if let Some(t) = args.tau0 {
        cfg.tau0 = t;
    }
    if let Some(c) = args.checkpoints {
        cfg.checkpoints = c;
    }
    if let Some(dt) = args.dt {
        cfg.lattice.dt = dt;
    }
    if let Some(n) = args.n {
        cfg.bo.n = n;
    }
    if args.bidirectional {
        cfg.bidirectional = true;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_plan(cfg: &ValidationConfig, plans: &[EpsilonPlan]) -> Outcome {
    let mut text = format!(
        "alpha = {}, tau0 = {}, bidirectional = {}\nrequested_epsilon,epsilon,n_sites,cutoff,dt,steps\n",
        cfg.alpha, cfg.tau0, cfg.bidirectional
    );
    for p in plans {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.requested_epsilon, p.epsilon, p.n_sites, p.cutoff, p.dt, p.steps
        ));
    }
    emit(&text)
}

fn blow_up(alpha: f64, epsilon: f64, status: &RunStatus) -> Option<Failure> {
    match status {
        RunStatus::Completed => None,
        RunStatus::BlowUp { time, message } => Some(Failure::BlowUp {
            alpha,
            epsilon: Some(epsilon),
            t: *time,
            message: message.clone(),
        }),
        RunStatus::Failed { message } => Some(Failure::Input(format!("epsilon = {}: {}", epsilon, message))),
    }
}

fn sweep(cli: &Cli, args: &Sweep, validate: bool) -> Outcome {
    let started = Utc::now();
    let cfg = resolve_config(cli, args)?;
    let plans = cfg.plan()?;
    if cli.dry_run {
        return print_plan(&cfg, &plans);
    }
    let dir = cfg.output.clone();
    let config = to_value(&cfg)?;
    let (command, outputs, statuses, summary) = if validate {
        let rep = run_validation(&cfg, jobs(cli))?;
        let outputs = write_validation_outputs(&dir, &rep)?;
        let statuses: Vec<_> = rep.runs.iter().map(|r| (r.plan.epsilon, r.status.clone())).collect();
        let summary = [("mu", &rep.mu), ("nu", &rep.nu)]
            .iter()
            .filter_map(|(q, r)| r.as_ref().map(|r| format!("{} slope {:.3} (target {})", q, r.slope, r.target_exponent)))
            .collect::<Vec<_>>()
            .join(", ");
        ("validate", outputs, statuses, summary)
    } else {
        let sw = residual_sweep(&cfg, jobs(cli))?;
        let outputs = write_residual_outputs(&dir, &sw)?;
        let statuses: Vec<_> = sw.runs.iter().map(|r| (r.plan.epsilon, r.status.clone())).collect();
        let summary = sw
            .report
            .as_ref()
            .map(|r| format!("residual slope {:.3} (target {})", r.slope, r.target_exponent))
            .unwrap_or_default();
        ("residual-sweep", outputs, statuses, summary)
    };
    RunManifest::new(command, config, started, outputs).write(&dir)?;
    if !summary.is_empty() {
        emit(&format!("alpha = {}: {}\n", cfg.alpha, summary))?;
    }
    match statuses.iter().find_map(|(e, s)| blow_up(cfg.alpha, *e, s)) {
        Some(f) => Err(f),
        None => Ok(()),
    }
}
