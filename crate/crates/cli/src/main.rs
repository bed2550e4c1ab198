//! `modkg`: batch front-end for the spectral Klein-Gordon toolkit.
//!
//! Subcommands: decompose, norm, propagate, solve, admissible, verify,
//! decay. Exit codes: 0 success, 2 for violated hypotheses / not-covered
//! parameter ranges, 1 for everything else. Identical invocations (same
//! flags, config, seed) produce byte-identical artifacts.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{fill, parse_length, ConfigMap};
use modkg_core::admissible::{self, Exponent, ProblemParams, Value};
use modkg_core::ops::HartreeSquare;
use modkg_core::solver::{
    duhamel_picard, reference_integrator, residual, CauchyData, Nonlinearity, SolverConfig,
    Trajectory,
};
use modkg_core::verify::{run_inequality, RatioReport, RunOptions, INEQUALITY_IDS};
use modkg_core::{
    build_windows, read_mkgf, write_mkgf, Complex64, Field, GridSpec, ModkgError, NormOrder,
    SpaceParams, TimeSpaceParams,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "modkg", version, about = "Spectral toolkit for Klein-Gordon equations on periodic grids")]
struct Cli {
    /// INI-style config file; CLI flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread cap (env MODKG_THREADS; the flag wins).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Split a field into its frequency-uniform band pieces.
    Decompose(DecomposeArgs),
    /// Modulation / Besov / Sobolev norms of a field or trajectory.
    Norm(NormArgs),
    /// Apply a propagator or potential to a field.
    Propagate(PropagateArgs),
    /// Solve the (nonlinear) Klein-Gordon equation.
    Solve(SolveArgs),
    /// Check well-posedness parameter conditions.
    Admissible(AdmissibleArgs),
    /// Measure a norm inequality over a deterministic ensemble.
    Verify(VerifyArgs),
    /// Propagator decay fit (alias for `verify --inequality 3.1`).
    Decay(DecayArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Window bump steepness.
    #[arg(long, default_value_t = 1.0)]
    smoothness: f64,
}

#[derive(Args)]
struct NormArgs {
    /// A .mkgf field, or a trajectory directory containing index.csv.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, conflicts_with = "sobolev")]
    besov: bool,
    #[arg(long)]
    sobolev: bool,
    /// Time exponent for trajectory norms.
    #[arg(long)]
    r: Option<f64>,
    /// Norm order for trajectory norms: seq or time.
    #[arg(long)]
    order: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    smoothness: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PropagateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// K (sine propagator), Kp (cosine), J (Bessel potential), Riesz.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long = "N")]
    points: Option<usize>,
    /// Box edge length; accepts `<mult>pi`.
    #[arg(long = "L")]
    length: Option<String>,
    #[arg(long)]
    nonlinearity: Option<String>,
    #[arg(long)]
    k: Option<f64>,
    /// Right-hand-side sign of the power term: + or -.
    #[arg(long)]
    sign: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long = "M")]
    steps: Option<usize>,
    #[arg(long)]
    eps_picard: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// picard | reference | both
    #[arg(long, default_value = "picard")]
    solver: String,
    /// Integer lattice frequency of a plane-wave initial datum, e.g. "3" or "3,1,0".
    #[arg(long)]
    plane_wave: Option<String>,
    #[arg(long)]
    gaussian_amp: Option<f64>,
    #[arg(long)]
    gaussian_sigma: Option<f64>,
    #[arg(long)]
    in_u0: Option<PathBuf>,
    #[arg(long)]
    in_u1: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Skip writing per-frame field files.
    #[arg(long)]
    no_frames: bool,
    #[arg(long, default_value_t = 1.0)]
    smoothness: f64,
}

#[derive(Args)]
struct AdmissibleArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Restrict to one check (theorem1, corollary1, theorem2, theorem3,
    /// theorem4, lemma3).
    #[arg(long)]
    check: Option<String>,
    /// `std` for the built-in 200-tuple sweep, or a grid INI file.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    inequality: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    adversarial: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    /// Skip the grid-refinement pass.
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecayArgs {
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("MODKG_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let cfg = match &cli.config {
        Some(path) => match config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => ConfigMap::new(),
    };
    let outcome = match cli.cmd {
        Cmd::Decompose(a) => cmd_decompose(a),
        Cmd::Norm(a) => cmd_norm(a),
        Cmd::Propagate(a) => cmd_propagate(a),
        Cmd::Solve(a) => cmd_solve(a, &cfg),
        Cmd::Admissible(a) => cmd_admissible(a, &cfg),
        Cmd::Verify(a) => cmd_verify(a, &cfg),
        Cmd::Decay(a) => cmd_decay(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                ModkgError::HypothesisViolated { .. } => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<u8, ModkgError>;

fn read_field(path: &Path) -> Result<Field, ModkgError> {
    let mut file = fs::File::open(path)?;
    read_mkgf(&mut file)
}

fn write_field(path: &Path, f: &Field) -> Result<(), ModkgError> {
    let mut file = fs::File::create(path)?;
    write_mkgf(f, &mut file)
}

fn write_text(path: Option<&PathBuf>, text: &str) -> Result<(), ModkgError> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
        }
        None => {
            print!("{text}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------

fn cmd_decompose(a: DecomposeArgs) -> CmdResult {
    let f = read_field(&a.input)?;
    let wf = build_windows(f.spec, a.smoothness)?;
    let d = wf.decompose(&f)?;
    fs::create_dir_all(&a.out)?;

    let mut windows = fs::File::create(a.out.join("windows.csv"))?;
    wf.write_window_csv(&mut windows)?;

    let mut summary = String::from("k0,k1,k2,l2_norm,file\n");
    for (k, patch) in d.patches() {
        let name = format!("band_{}_{}_{}.mkgf", k[0], k[1], k[2]);
        let band = d.band_field(k).expect("band exists");
        write_field(&a.out.join(&name), &band)?;
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            k[0],
            k[1],
            k[2],
            patch.l2_norm_sqr().sqrt(),
            name
        ));
    }
    fs::write(a.out.join("bands.csv"), summary)?;

    let back = d.reconstruct();
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in f.values().iter().zip(back.values()) {
        num += (x - y).norm_sqr();
        den += x.norm_sqr();
    }
    let defect = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    println!("bands: {}  reconstruction_defect: {defect:e}", d.patches().len());
    Ok(0)
}

fn norm_csv_row(kind: &str, pi: Option<&SpaceParams>, r: &str, t: &str, order: &str, value: f64) -> String {
    let (s, p, q) = match pi {
        Some(pi) => (format!("{}", pi.s), format!("{}", pi.p), format!("{}", pi.q)),
        None => (String::new(), String::new(), String::new()),
    };
    format!("norm_kind,s,p,q,r,T,order,value\n{kind},{s},{p},{q},{r},{t},{order},{value}\n")
}

fn read_trajectory_dir(dir: &Path) -> Result<(Vec<Field>, f64), ModkgError> {
    let index = fs::read_to_string(dir.join("index.csv"))?;
    let mut frames = Vec::new();
    let mut horizon = 0.0f64;
    for line in index.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            continue;
        }
        let t: f64 = cols[1]
            .parse()
            .map_err(|_| ModkgError::Parse(format!("bad time in index: {line}")))?;
        horizon = horizon.max(t);
        frames.push(read_field(&dir.join(cols[2]))?);
    }
    if frames.is_empty() {
        return Err(ModkgError::EmptyTrajectory);
    }
    Ok((frames, horizon))
}

fn cmd_norm(a: NormArgs) -> CmdResult {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| ModkgError::Parse(format!("missing --{name}")))
    };
    if a.input.is_dir() {
        let (frames, horizon) = read_trajectory_dir(&a.input)?;
        let wf = build_windows(frames[0].spec, a.smoothness)?;
        let pi = SpaceParams::new(need(a.s, "s")?, need(a.p, "p")?, need(a.q, "q")?)?;
        let r = need(a.r, "r")?;
        let order = match a.order.as_deref() {
            Some("time") => NormOrder::TimeOutside,
            _ => NormOrder::SequenceOutside,
        };
        let tp = TimeSpaceParams::new(pi, r, horizon.max(f64::MIN_POSITIVE), order)?;
        let value = modkg_core::timespace_norm(&wf, &frames, &tp)?;
        let order_name = if matches!(order, NormOrder::TimeOutside) { "time" } else { "seq" };
        write_text(
            a.out.as_ref(),
            &norm_csv_row("timespace", Some(&pi), &format!("{r}"), &format!("{horizon}"), order_name, value),
        )?;
        return Ok(0);
    }
    let f = read_field(&a.input)?;
    if a.sobolev {
        let s = need(a.s, "s")?;
        let value = modkg_core::sobolev_norm(&f, s);
        write_text(
            a.out.as_ref(),
            &format!("norm_kind,s,p,q,r,T,order,value\nsobolev,{s},2,2,,,,{value}\n"),
        )?;
        return Ok(0);
    }
    let wf = build_windows(f.spec, a.smoothness)?;
    let pi = SpaceParams::new(need(a.s, "s")?, need(a.p, "p")?, need(a.q, "q")?)?;
    let (kind, value) = if a.besov {
        ("besov", modkg_core::besov_norm(&wf, &f, &pi)?)
    } else {
        ("modulation", modkg_core::modulation_norm(&wf, &f, &pi)?)
    };
    write_text(a.out.as_ref(), &norm_csv_row(kind, Some(&pi), "", "", "", value))?;
    Ok(0)
}

fn cmd_propagate(a: PropagateArgs) -> CmdResult {
    let f = read_field(&a.input)?;
    let out = match a.kind.as_str() {
        "K" => {
            let t = a.t.ok_or_else(|| ModkgError::Parse("K needs --t".into()))?;
            modkg_core::ops::kg_sine(&f, t)
        }
        "Kp" => {
            let t = a.t.ok_or_else(|| ModkgError::Parse("Kp needs --t".into()))?;
            modkg_core::ops::kg_cosine(&f, t)
        }
        "J" => {
            let sigma = a.sigma.ok_or_else(|| ModkgError::Parse("J needs --sigma".into()))?;
            modkg_core::ops::bessel_potential(&f, sigma)
        }
        "Riesz" => {
            let alpha = a.alpha.ok_or_else(|| ModkgError::Parse("Riesz needs --alpha".into()))?;
            modkg_core::ops::riesz_potential(&f, alpha)?
        }
        other => return Err(ModkgError::Parse(format!("unknown kind {other}"))),
    };
    write_field(&a.out, &out)?;
    Ok(0)
}

fn parse_lattice(s: &str) -> Result<[i64; 3], ModkgError> {
    let mut k = [0i64; 3];
    for (i, part) in s.split(',').enumerate() {
        if i >= 3 {
            return Err(ModkgError::Parse("at most 3 lattice components".into()));
        }
        k[i] = part
            .trim()
            .parse()
            .map_err(|_| ModkgError::Parse(format!("bad lattice component {part}")))?;
    }
    Ok(k)
}

fn default_points(dim: usize) -> usize {
    match dim {
        1 => 1024,
        2 => 256,
        _ => 64,
    }
}

fn write_trajectory(
    dir: &Path,
    traj: &Trajectory,
    data: &CauchyData,
    cfg: &SolverConfig,
    write_frames: bool,
) -> Result<f64, ModkgError> {
    fs::create_dir_all(dir)?;
    let times = traj.times();
    let mut index = String::from("frame,time,file_u,file_ut\n");
    for (m, t) in times.iter().enumerate() {
        let (fu, fut) = (format!("u_{m:04}.mkgf"), format!("ut_{m:04}.mkgf"));
        if write_frames {
            write_field(&dir.join(&fu), &traj.u[m])?;
            write_field(&dir.join(&fut), &traj.ut[m])?;
        }
        index.push_str(&format!("{m},{t},{fu},{fut}\n"));
    }
    fs::write(dir.join("index.csv"), index)?;

    let res = residual(traj, data, cfg)?;
    let energy = &traj.diagnostics.energy;
    let drift = if energy.len() >= 2 && energy[0] != 0.0 {
        (energy.last().unwrap() - energy[0]).abs() / energy[0].abs()
    } else {
        0.0
    };
    let mut diag = String::from("sweep,contraction_ratio,residual,energy_drift\n");
    let sweeps = traj.diagnostics.sweeps.max(1);
    for s in 1..=sweeps {
        let ratio = if s >= 2 {
            traj.diagnostics
                .contraction_ratios
                .get(s - 2)
                .map(|r| format!("{r}"))
                .unwrap_or_default()
        } else {
            String::new()
        };
        let (rescol, driftcol) = if s == sweeps {
            (format!("{res}"), format!("{drift}"))
        } else {
            (String::new(), String::new())
        };
        diag.push_str(&format!("{s},{ratio},{rescol},{driftcol}\n"));
    }
    fs::write(dir.join("diagnostics.csv"), diag)?;
    Ok(res)
}

fn cmd_solve(mut a: SolveArgs, cfg_map: &ConfigMap) -> CmdResult {
    fill(&mut a.points, cfg_map, "N");
    fill(&mut a.length, cfg_map, "L");
    fill(&mut a.nonlinearity, cfg_map, "nonlinearity");
    fill(&mut a.k, cfg_map, "k");
    fill(&mut a.sign, cfg_map, "sign");
    fill(&mut a.mu, cfg_map, "mu");
    fill(&mut a.horizon, cfg_map, "T");
    fill(&mut a.steps, cfg_map, "M");
    fill(&mut a.eps_picard, cfg_map, "eps_picard");
    fill(&mut a.max_sweeps, cfg_map, "max_sweeps");

    let length = match &a.length {
        Some(s) => parse_length(s).ok_or_else(|| ModkgError::Parse(format!("bad length {s}")))?,
        None => 16.0 * std::f64::consts::PI,
    };
    let spec = GridSpec::new(a.n, length, a.points.unwrap_or_else(|| default_points(a.n)))?;
    let wf = build_windows(spec, a.smoothness)?;

    let nl = match a.nonlinearity.as_deref().unwrap_or("none") {
        "none" => Nonlinearity::None,
        "power" => {
            let k = a.k.ok_or_else(|| ModkgError::Parse("power needs --k".into()))?;
            let sign = match a.sign.as_deref().unwrap_or("-") {
                "+" | "+1" => 1.0,
                "-" | "-1" => -1.0,
                other => return Err(ModkgError::Parse(format!("bad sign {other}"))),
            };
            if sign > 0.0 {
                eprintln!("note: focusing sign (+); only finite-horizon behavior is meaningful");
            }
            Nonlinearity::Power { k, sign }
        }
        "hartree" => {
            let mu = a.mu.ok_or_else(|| ModkgError::Parse("hartree needs --mu".into()))?;
            Nonlinearity::Hartree { mu, square: HartreeSquare::ModulusSquared }
        }
        other => return Err(ModkgError::Parse(format!("unknown nonlinearity {other}"))),
    };

    let u0 = if let Some(path) = &a.in_u0 {
        read_field(path)?
    } else if let Some(pw) = &a.plane_wave {
        Field::plane_wave(spec, parse_lattice(pw)?)?
    } else {
        let amp = a.gaussian_amp.unwrap_or(1e-3);
        let sigma = a.gaussian_sigma.unwrap_or(1.0);
        Field::from_fn(spec, |x| {
            let r2: f64 = (0..spec.dim).map(|i| x[i] * x[i]).sum();
            Complex64::new(amp * (-0.5 * r2 / (sigma * sigma)).exp(), 0.0)
        })?
    };
    let u1 = match &a.in_u1 {
        Some(path) => read_field(path)?,
        None => Field::zeros(spec),
    };
    let data = CauchyData::new(u0, u1)?;

    let mut solver_cfg = SolverConfig::new(a.horizon.unwrap_or(1.0), a.steps.unwrap_or(64), nl)?;
    if let Some(eps) = a.eps_picard {
        solver_cfg.eps_picard = eps;
    }
    if let Some(ms) = a.max_sweeps {
        solver_cfg.max_sweeps = ms;
    }

    let run_picard = matches!(a.solver.as_str(), "picard" | "both");
    let run_reference = matches!(a.solver.as_str(), "reference" | "both");
    if !run_picard && !run_reference {
        return Err(ModkgError::Parse(format!("unknown solver {}", a.solver)));
    }
    if run_picard {
        let traj = duhamel_picard(&wf, &data, &solver_cfg)?;
        let dir = if run_reference { a.out.join("picard") } else { a.out.clone() };
        let res = write_trajectory(&dir, &traj, &data, &solver_cfg, !a.no_frames)?;
        println!(
            "picard: sweeps {} residual {res:e} frames {}",
            traj.diagnostics.sweeps,
            traj.u.len()
        );
    }
    if run_reference {
        let traj = reference_integrator(&wf, &data, &solver_cfg)?;
        let dir = if run_picard { a.out.join("reference") } else { a.out.clone() };
        let res = write_trajectory(&dir, &traj, &data, &solver_cfg, !a.no_frames)?;
        println!("reference: residual {res:e} frames {}", traj.u.len());
    }
    Ok(0)
}

fn parse_value(name: &str, raw: &str) -> Result<Value, ModkgError> {
    Value::parse(raw).ok_or_else(|| ModkgError::Parse(format!("bad value for {name}: {raw}")))
}

fn parse_exponent(name: &str, raw: &str) -> Result<Exponent, ModkgError> {
    Exponent::parse(raw).ok_or_else(|| ModkgError::Parse(format!("bad exponent for {name}: {raw}")))
}

fn build_params(a: &AdmissibleArgs, cfg: &ConfigMap) -> Result<ProblemParams, ModkgError> {
    let pick = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone().or_else(|| cfg.get(key).cloned())
    };
    let n = a
        .n
        .or_else(|| cfg.get("n").and_then(|v| v.parse().ok()))
        .ok_or_else(|| ModkgError::Parse("missing --n".into()))?;
    let mut pi = ProblemParams::new(n);
    if let Some(v) = pick(&a.k, "k") {
        pi.k = Some(parse_value("k", &v)?);
    }
    if let Some(v) = pick(&a.s, "s") {
        pi.s = Some(parse_value("s", &v)?);
    }
    if let Some(v) = pick(&a.p, "p") {
        pi.p = Some(parse_exponent("p", &v)?);
    }
    if let Some(v) = pick(&a.q, "q") {
        pi.q = Some(parse_exponent("q", &v)?);
    }
    if let Some(v) = pick(&a.theta, "theta") {
        pi.theta = Some(parse_value("theta", &v)?);
    }
    if let Some(v) = pick(&a.mu, "mu") {
        pi.mu = Some(parse_value("mu", &v)?);
    }
    if let Some(v) = pick(&a.r, "r") {
        pi.r = Some(parse_value("r", &v)?);
    }
    if let Some(v) = pick(&a.gamma, "gamma") {
        pi.gamma = Some(parse_exponent("gamma", &v)?);
    }
    Ok(pi)
}

fn sweep_rows_from_ini(cfg: &ConfigMap) -> Result<Vec<ProblemParams>, ModkgError> {
    let lists: Vec<(&str, Vec<String>)> = ["n", "k", "s", "p", "q", "theta", "mu", "r", "gamma"]
        .iter()
        .map(|key| {
            let vals = cfg
                .get(*key)
                .map(|raw| raw.split(',').map(|s| s.trim().to_string()).collect())
                .unwrap_or_default();
            (*key, vals)
        })
        .collect();
    let n_list = &lists[0].1;
    if n_list.is_empty() {
        return Err(ModkgError::Parse("sweep grid needs n = ...".into()));
    }
    let mut rows = vec![];
    // cross product in canonical key order
    fn expand(
        lists: &[(&str, Vec<String>)],
        idx: usize,
        current: &mut Vec<(String, String)>,
        rows: &mut Vec<Vec<(String, String)>>,
    ) {
        if idx == lists.len() {
            rows.push(current.clone());
            return;
        }
        let (key, vals) = &lists[idx];
        if vals.is_empty() {
            expand(lists, idx + 1, current, rows);
            return;
        }
        for v in vals {
            current.push((key.to_string(), v.clone()));
            expand(lists, idx + 1, current, rows);
            current.pop();
        }
    }
    let mut combos = Vec::new();
    expand(&lists, 0, &mut Vec::new(), &mut combos);
    for combo in combos {
        let mut n = None;
        let mut pi_fields: Vec<(String, String)> = Vec::new();
        for (k, v) in combo {
            if k == "n" {
                n = v.parse::<u32>().ok();
            } else {
                pi_fields.push((k, v));
            }
        }
        let n = n.ok_or_else(|| ModkgError::Parse("bad n in sweep".into()))?;
        let mut pi = ProblemParams::new(n);
        for (k, v) in pi_fields {
            match k.as_str() {
                "k" => pi.k = Some(parse_value("k", &v)?),
                "s" => pi.s = Some(parse_value("s", &v)?),
                "p" => pi.p = Some(parse_exponent("p", &v)?),
                "q" => pi.q = Some(parse_exponent("q", &v)?),
                "theta" => pi.theta = Some(parse_value("theta", &v)?),
                "mu" => pi.mu = Some(parse_value("mu", &v)?),
                "r" => pi.r = Some(parse_value("r", &v)?),
                "gamma" => pi.gamma = Some(parse_exponent("gamma", &v)?),
                _ => {}
            }
        }
        rows.push(pi);
    }
    Ok(rows)
}

fn cmd_admissible(a: AdmissibleArgs, cfg: &ConfigMap) -> CmdResult {
    if let Some(sweep) = &a.sweep {
        let rows = if sweep == "std" {
            admissible::standard_sweep()
        } else {
            sweep_rows_from_ini(&config::load(Path::new(sweep))?)?
        };
        let csv = admissible::sweep_csv(&rows);
        write_text(a.out.as_ref(), &csv)?;
        return Ok(0);
    }
    let pi = build_params(&a, cfg)?;
    let report = admissible::full_report(&pi);
    let filtered = match &a.check {
        Some(name) => {
            let mut r = report.clone();
            r.results.retain(|c| c.name == name);
            if r.results.is_empty() {
                return Err(ModkgError::Parse(format!("unknown check {name}")));
            }
            r
        }
        None => report,
    };
    write_text(a.out.as_ref(), &(filtered.to_json() + "\n"))?;
    if filtered.any_pass() {
        Ok(0)
    } else {
        Ok(2)
    }
}

fn report_csv(report: &RatioReport) -> String {
    format!("{}{}", RatioReport::csv_header(), report.csv_row())
}

fn cmd_verify(a: VerifyArgs, cfg: &ConfigMap) -> CmdResult {
    if !INEQUALITY_IDS.contains(&a.inequality.as_str()) {
        return Err(ModkgError::Parse(format!(
            "unknown inequality {}; known: {}",
            a.inequality,
            INEQUALITY_IDS.join(",")
        )));
    }
    let mut opts = RunOptions::default();
    if let Some(seed) = a.seed.or_else(|| cfg.get("seed").and_then(|v| v.parse().ok())) {
        opts.seed = seed;
    }
    if let Some(c) = a.count {
        opts.count = c;
    }
    if let Some(adv) = a.adversarial {
        opts.adversarial = adv;
    }
    opts.theta = a.theta;
    opts.refine = !a.no_refine;
    let report = run_inequality(&a.inequality, &opts)?;
    write_text(a.out.as_ref(), &report_csv(&report))?;
    Ok(0)
}

fn cmd_decay(a: DecayArgs) -> CmdResult {
    let mut opts = RunOptions::default();
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    opts.theta = a.theta.or(Some(1.0));
    let report = run_inequality("3.1", &opts)?;
    let mut out = report_csv(&report);
    if let Some((slope, r2)) = report.fitted {
        out.push_str(&format!("# fitted_exponent = {slope}, r2 = {r2}\n"));
    }
    write_text(a.out.as_ref(), &out)?;
    Ok(0)
}
