//! Command-line front end behind the `billiards` binary.
//!
//! Exit codes: 0 valid billiard or success, 3 ghost, 4 edge in subspace,
//! 5 non-generic ray, 64 usage or bad input, 65 malformed data file,
//! 70 solver failure, 74 I/O failure.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::arrangement::{Arrangement, Itinerary, Point};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::generating::{minimize, Classification, SolverOptions};
use crate::nbody;
use crate::origami;
use crate::scattering::{self, PatchGrid};
use crate::symmetry;
use crate::thickened::{self, ThickenedOptions, ThickenedTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GHOST: i32 = 3;
pub const EXIT_EDGE_IN_SUBSPACE: i32 = 4;
pub const EXIT_NON_GENERIC: i32 = 5;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_SOFTWARE: i32 = 70;
pub const EXIT_IO: i32 = 74;

#[derive(Parser, Debug)]
#[command(name = "billiards", version, about = "Linear billiard trajectories in subspace arrangements")]
pub struct Cli {
    /// Arrangement JSON: {"dim": n, "subspaces": [{"name", "basis", "sigma"}]}.
    #[arg(long, global = true)]
    pub arrangement: Option<PathBuf>,
    /// Built-in problem: mirror, total-collision, two-lines-60, two-lines-30, ghost.
    #[arg(long, global = true)]
    pub fixture: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Relative gradient tolerance of the solver.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Problem {
    /// Comma-separated subspace names; an empty string is the free itinerary.
    #[arg(long, allow_hyphen_values = true)]
    pub itinerary: Option<String>,
    /// Start point, comma-separated coordinates.
    #[arg(long = "a", allow_hyphen_values = true)]
    pub a: Option<String>,
    /// End point, comma-separated coordinates.
    #[arg(long = "b", allow_hyphen_values = true)]
    pub b: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Minimize the path length for one itinerary and anchor pair.
    Solve {
        #[command(flatten)]
        problem: Problem,
        /// Rotation generators as coordinate planes "i:j" (0-based), comma-separated.
        #[arg(long)]
        generators: Option<String>,
    },
    /// Sample the scattering relation on a grid of anchors around (A, B).
    Scatter {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 1e-2)]
        spacing: f64,
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
    /// Thickened billiard: minimize for one radius, or an r-family.
    Thicken {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        r: Option<f64>,
        /// Comma-separated radii.
        #[arg(long = "r-list")]
        r_list: Option<String>,
        #[arg(long = "max-events", default_value_t = 100)]
        max_events: usize,
        #[arg(long = "t-max", default_value_t = 1e3)]
        t_max: f64,
        /// Simulate from A with this velocity instead of minimizing.
        #[arg(long, allow_hyphen_values = true)]
        velocity: Option<String>,
    },
    /// Unfold a solution and search for realizable itineraries.
    Origami {
        #[command(flatten)]
        problem: Problem,
        #[arg(long = "max-len")]
        max_len: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Planar three-body scattering slice.
    Threebody {
        #[arg(long = "n-phi", default_value_t = 36)]
        n_phi: usize,
        #[arg(long = "n-psi", default_value_t = 36)]
        n_psi: usize,
        /// Number of slice points re-solved by the generic solver.
        #[arg(long = "cross-validate", default_value_t = 200)]
        cross_validate: usize,
    },
    /// List repeat-free itineraries with the angle filter verdict.
    Enumerate {
        #[arg(long = "max-len")]
        max_len: Option<usize>,
    },
}

/// Parses and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_SOFTWARE;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Precondition(_) => EXIT_USAGE,
        Error::Json(_) => EXIT_DATA,
        Error::NonSmoothPoint(..) | Error::MaxIterations { .. } | Error::CornerCollision { .. } => EXIT_SOFTWARE,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
    }
}

pub fn classification_code(c: Classification) -> i32 {
    match c {
        Classification::ValidBilliard => EXIT_OK,
        Classification::Ghost => EXIT_GHOST,
        Classification::EdgeInSubspace => EXIT_EDGE_IN_SUBSPACE,
        Classification::NonGenericRay => EXIT_NON_GENERIC,
    }
}

/// Collects human-readable lines for `run.log`.
struct RunLog {
    lines: String,
}

impl RunLog {
    fn new(command: &str, cli: &Cli) -> Self {
        let mut log = RunLog { lines: String::new() };
        log.line(format!("command: {command}"));
        log.line(format!("seed: {}", cli.seed));
        log
    }

    fn line(&mut self, s: impl AsRef<str>) {
        log::info!("{}", s.as_ref());
        let _ = writeln!(self.lines, "{}", s.as_ref());
    }

    fn write(&self, out: &Path) -> Result<()> {
        fs::write(out.join("run.log"), &self.lines)?;
        Ok(())
    }
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Input(format!("cannot parse {what} entry {t:?}"))))
        .collect()
}

fn parse_point(s: &str, what: &str) -> Result<Point> {
    Ok(Point::from_vec(parse_floats(s, what)?))
}

fn fixture(name: &str) -> Result<fixtures::Fixture> {
    Ok(match name {
        "mirror" => fixtures::mirror(),
        "total-collision" => fixtures::total_collision(),
        "two-lines-60" => fixtures::two_lines(PI / 3.0),
        "two-lines-30" => fixtures::two_lines(PI / 6.0),
        "ghost" => fixtures::ghost_lines(),
        other => return Err(Error::Input(format!("unknown fixture {other:?}"))),
    })
}

fn load_arrangement(cli: &Cli) -> Result<(Arrangement, Option<fixtures::Fixture>)> {
    let fx = cli.fixture.as_deref().map(fixture).transpose()?;
    let arr = match (&cli.arrangement, &fx) {
        (Some(path), _) => Arrangement::load(path)?,
        (None, Some(f)) => f.0.clone(),
        (None, None) => return Err(Error::input("either --arrangement or --fixture is required")),
    };
    Ok((arr, fx))
}

fn resolve(cli: &Cli, problem: &Problem) -> Result<(Arrangement, Itinerary, Point, Point)> {
    let (arr, fx) = load_arrangement(cli)?;
    let itinerary = match (&problem.itinerary, &fx) {
        (Some(s), _) if s.trim().is_empty() => Itinerary::free(),
        (Some(s), _) => Itinerary::from_names(&arr, &s.split(',').map(str::trim).collect::<Vec<_>>())?,
        (None, Some(f)) => f.1.clone(),
        (None, None) => return Err(Error::input("--itinerary is required")),
    };
    let a = match (&problem.a, &fx) {
        (Some(s), _) => parse_point(s, "A")?,
        (None, Some(f)) => f.2.clone(),
        (None, None) => return Err(Error::input("--a is required")),
    };
    let b = match (&problem.b, &fx) {
        (Some(s), _) => parse_point(s, "B")?,
        (None, Some(f)) => f.3.clone(),
        (None, None) => return Err(Error::input("--b is required")),
    };
    if a.len() != arr.dim() || b.len() != arr.dim() {
        return Err(Error::Input(format!("anchors must have dimension {}", arr.dim())));
    }
    itinerary.check_against(&arr)?;
    Ok((arr, itinerary, a, b))
}

fn solver_options(cli: &Cli) -> SolverOptions {
    let mut opts = SolverOptions { seed: cli.seed, ..SolverOptions::default() };
    if let Some(t) = cli.tol {
        opts.grad_tol = t;
    }
    opts
}

fn vec_of(p: &Point) -> Vec<f64> {
    p.iter().copied().collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Solve { problem, generators } => {
            let input = resolve(cli, problem)?;
            let gens = generators.as_deref().map(parse_generators).transpose()?;
            fs::create_dir_all(out)?;
            cmd_solve(cli, input, gens.unwrap_or_default(), out)
        }
        Command::Scatter { problem, spacing, n } => {
            let input = resolve(cli, problem)?;
            fs::create_dir_all(out)?;
            cmd_scatter(cli, input, *spacing, *n, out)
        }
        Command::Thicken { problem, r, r_list, max_events, t_max, velocity } => {
            let input = resolve(cli, problem)?;
            let r_list = r_list.as_deref().map(|s| parse_floats(s, "r-list")).transpose()?;
            let velocity = velocity.as_deref().map(|s| parse_point(s, "velocity")).transpose()?;
            fs::create_dir_all(out)?;
            cmd_thicken(cli, input, *r, r_list, *max_events, *t_max, velocity, out)
        }
        Command::Origami { problem, max_len, budget } => {
            let input = resolve(cli, problem)?;
            fs::create_dir_all(out)?;
            cmd_origami(cli, input, *max_len, *budget, out)
        }
        Command::Threebody { n_phi, n_psi, cross_validate } => {
            if *n_phi == 0 || *n_psi == 0 {
                return Err(Error::input("grids must be non-empty"));
            }
            fs::create_dir_all(out)?;
            cmd_threebody(cli, *n_phi, *n_psi, *cross_validate, out)
        }
        Command::Enumerate { max_len } => {
            let (arr, _) = load_arrangement(cli)?;
            fs::create_dir_all(out)?;
            cmd_enumerate(cli, &arr, *max_len, out)
        }
    }
}

fn parse_generators(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|t| {
            let (i, j) = t
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Input(format!("generator {t:?} is not of the form i:j")))?;
            let p = |x: &str| x.parse::<usize>().map_err(|_| Error::Input(format!("bad generator index {x:?}")));
            Ok((p(i)?, p(j)?))
        })
        .collect()
}

#[derive(Serialize)]
struct SolveReport {
    classification: Classification,
    exit_code: i32,
    length: f64,
    grad_norm: f64,
    iterations: usize,
    used_fallback: bool,
    hessian_min_eig: Option<f64>,
    itinerary: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    chain: Vec<Vec<f64>>,
    max_reflection_residual: Option<f64>,
}

fn cmd_solve(cli: &Cli, (arr, itin, a, b): (Arrangement, Itinerary, Point, Point), gens: Vec<(usize, usize)>, out: &Path) -> Result<i32> {
    let mut log = RunLog::new("solve", cli);
    let opts = solver_options(cli);
    let r = minimize(&arr, &itin, &a, &b, &opts)?;
    let code = classification_code(r.classification);
    let report = SolveReport {
        classification: r.classification,
        exit_code: code,
        length: r.value,
        grad_norm: r.grad_norm,
        iterations: r.iterations,
        used_fallback: r.used_fallback,
        hessian_min_eig: r.hessian_min_eig,
        itinerary: itin.names(&arr).iter().map(|s| s.to_string()).collect(),
        a: vec_of(&a),
        b: vec_of(&b),
        chain: r.chain.points().iter().map(vec_of).collect(),
        max_reflection_residual: r.trajectory.as_ref().map(|t| t.max_reflection_residual(&arr)),
    };
    write_json(&out.join("result.json"), &report)?;
    log.line(format!("classification: {}", r.classification));
    log.line(format!("length: {:.17e}", r.value));
    if let Some(t) = &r.trajectory {
        fs::write(out.join("trajectory.json"), t.to_json(&arr) + "\n")?;
        let generators = gens
            .iter()
            .map(|&(i, j)| symmetry::RotationGenerator::plane(arr.dim(), i, j))
            .collect::<Result<Vec<_>>>()?;
        let cons = symmetry::conservation_report(&arr, t, &generators)?;
        write_json(&out.join("conservation.json"), &cons)?;
        log.line(format!("conservation max deviation: {:e}", cons.max_deviation()));
    }
    log.write(out)?;
    println!("{} length={:.12} exit={code}", r.classification, r.value);
    Ok(code)
}

fn cmd_scatter(cli: &Cli, (arr, itin, a, b): (Arrangement, Itinerary, Point, Point), spacing: f64, n: usize, out: &Path) -> Result<i32> {
    let mut log = RunLog::new("scatter", cli);
    let opts = solver_options(cli);
    let grid = PatchGrid::full(&a, &b, spacing, n);
    let patch = scattering::sample_relation(&arr, &itin, &grid, &opts)?;
    scattering::write_patch_csv(&patch, &arr, fs::File::create(out.join("patch.csv"))?)?;
    log.line(format!("grid: {} nodes, spacing {spacing:e}, {} valid", grid.len(), patch.n_valid()));
    let lag = scattering::lagrangian_residual(&patch).ok();
    let theta = if itin.len() > 1 { scattering::legendrian_theta_residual(&patch, false).ok() } else { None };
    write_json(
        &out.join("scatter_summary.json"),
        &serde_json::json!({
            "nodes": grid.len(),
            "valid": patch.n_valid(),
            "spacing": spacing,
            "lagrangian_residual": lag,
            "theta_residual": theta,
        }),
    )?;
    log.line(format!("lagrangian residual: {lag:?}"));
    log.line(format!("theta residual: {theta:?}"));
    let d = arr.dim();
    let script = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'A0'\nset ylabel 'vA0'\nplot 'patch.csv' using 1:{} with points title 'incoming direction', \\\n     'patch.csv' using {}:{} with points title 'outgoing direction'\n",
        2 * d + 2,
        d + 1,
        3 * d + 2
    );
    fs::write(out.join("patch.gp"), script)?;
    log.write(out)?;
    println!("valid {}/{} lagrangian={lag:?}", patch.n_valid(), grid.len());
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_thicken(
    cli: &Cli,
    (arr, itin, a, b): (Arrangement, Itinerary, Point, Point),
    r: Option<f64>,
    r_list: Option<Vec<f64>>,
    max_events: usize,
    t_max: f64,
    velocity: Option<Point>,
    out: &Path,
) -> Result<i32> {
    let mut log = RunLog::new("thicken", cli);
    let solver = solver_options(cli);
    let topts = ThickenedOptions { seed: cli.seed, ..ThickenedOptions::default() };
    if let Some(list) = r_list {
        let family = thickened::r_family(&arr, &itin, &a, &b, &list, &solver, &topts)?;
        let mut w = csv::Writer::from_path(out.join("r_family.csv"))?;
        w.write_record(["r", "deviation", "honest", "itinerary_match", "length"])?;
        for e in &family {
            let (honest, len) = match &e.result {
                Ok(m) => (m.is_honest(), format!("{:.17e}", m.value)),
                Err(msg) => {
                    log.line(format!("r = {:e}: {msg}", e.r));
                    (false, String::new())
                }
            };
            w.write_record([
                format!("{:e}", e.r),
                e.deviation.map(|d| format!("{d:.17e}")).unwrap_or_default(),
                honest.to_string(),
                e.itinerary_match.to_string(),
                len,
            ])?;
        }
        w.flush()?;
        fs::write(
            out.join("r_family.gp"),
            "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nset xlabel 'r'\nset ylabel 'max vertex deviation'\nplot 'r_family.csv' using 1:2 with linespoints\n",
        )?;
        log.line(format!("r-family over {} radii", family.len()));
        log.write(out)?;
        return Ok(EXIT_OK);
    }
    let r = r.ok_or_else(|| Error::input("thicken needs --r or --r-list"))?;
    let table = ThickenedTable::new(arr.clone(), r)?;
    let (path, code) = match velocity {
        Some(v) => {
            let v = v.normalize();
            (table.simulate(&a, &v, max_events, t_max), EXIT_OK)
        }
        None => {
            let m = thickened::minimize_thickened(&table, &itin, &a, &b, &topts)?;
            log.line(format!("thickened classification: {}", m.classification));
            log.line(format!("length: {:.17e}, kkt residual {:e}", m.value, m.kkt_residual));
            write_json(
                &out.join("thickened.json"),
                &serde_json::json!({
                    "r": r,
                    "classification": m.classification,
                    "length": m.value,
                    "kkt_residual": m.kkt_residual,
                    "multipliers": m.multipliers,
                    "chain": m.chain.iter().map(vec_of).collect::<Vec<_>>(),
                }),
            )?;
            let code = classification_code(m.classification);
            (thickened::replay(&table, &a, &m), code)
        }
    };
    let path = match path {
        Ok(p) => p,
        Err(Error::CornerCollision { partial, time, first, second }) => {
            log.line(format!("corner collision at t = {time} between {first} and {second}"));
            *partial
        }
        Err(e) => return Err(e),
    };
    write_events(&path, &arr, out)?;
    log.line(format!("{} events, termination {:?}", path.events.len(), path.termination));
    fs::write(
        out.join("events.gp"),
        "set datafile separator ','\nset key autotitle columnhead\nset size ratio -1\nplot 'events.csv' using 4:5 with linespoints title 'hit points'\n",
    )?;
    log.write(out)?;
    Ok(code)
}

fn write_events(path: &thickened::ThickenedPath, arr: &Arrangement, out: &Path) -> Result<()> {
    let d = arr.dim();
    let mut w = csv::Writer::from_path(out.join("events.csv"))?;
    let mut header = vec!["time".to_string(), "label".to_string(), "name".to_string()];
    for p in ["x", "v_before", "v_after"] {
        header.extend((0..d).map(|i| format!("{p}{i}")));
    }
    w.write_record(&header)?;
    for e in &path.events {
        let mut row = vec![format!("{:.17e}", e.time), e.label.to_string(), arr.subspace(e.label).name().to_string()];
        for v in [&e.point, &e.v_before, &e.v_after] {
            row.extend(v.iter().map(|x| format!("{x:.17e}")));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_origami(cli: &Cli, (arr, itin, a, b): (Arrangement, Itinerary, Point, Point), max_len: Option<usize>, budget: usize, out: &Path) -> Result<i32> {
    let mut log = RunLog::new("origami", cli);
    let opts = solver_options(cli);
    let bound = origami::itinerary_bound(&arr).ok();
    log.line(format!("itinerary length bound: {bound:?}"));
    let mut summary = serde_json::Map::new();
    summary.insert("bound".into(), serde_json::json!(bound));
    if !itin.is_empty() {
        let r = minimize(&arr, &itin, &a, &b, &opts)?;
        if let Some(t) = &r.trajectory {
            match (origami::unfold(t), origami::develop(t)) {
                (Ok(u), Ok(dev)) => {
                    log.line(format!("angle sum {:.17e}, beta {:.17e}", u.angle_sum(), u.beta));
                    summary.insert("unfolding".into(), serde_json::to_value(&u)?);
                    summary.insert("development".into(), serde_json::to_value(&dev)?);
                    summary.insert("law_of_sines_residual".into(), serde_json::json!(origami::law_of_sines_residual(t).ok()));
                }
                (Err(e), _) | (_, Err(e)) => log.line(format!("no unfolding: {e}")),
            }
        } else {
            log.line(format!("solution is {}, no unfolding", r.classification));
        }
    }
    let max_len = match (max_len, bound) {
        (Some(m), _) => m,
        (None, Some(b)) => b + 1,
        (None, None) => return Err(Error::input("--max-len is required when no bound is available")),
    };
    let rows = origami::search_realizable(&arr, max_len, budget, cli.seed, &opts)?;
    let mut w = csv::Writer::from_path(out.join("realizability.csv"))?;
    w.write_record(["itinerary", "length", "status", "samples", "A", "B", "chain"])?;
    let fmt = |p: &Point| p.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(" ");
    let mut max_realized = 0;
    for row in &rows {
        if row.status == origami::SearchStatus::Realized {
            max_realized = max_realized.max(row.itinerary.len());
        }
        let (wa, wb, wc) = match &row.witness {
            Some((a, b, c)) => (fmt(a), fmt(b), c.iter().map(fmt).collect::<Vec<_>>().join(";")),
            None => Default::default(),
        };
        w.write_record([
            row.itinerary.names(&arr).join("-"),
            row.itinerary.len().to_string(),
            row.status.as_str().to_string(),
            row.samples_used.to_string(),
            wa,
            wb,
            wc,
        ])?;
    }
    w.flush()?;
    summary.insert("max_realized_length".into(), serde_json::json!(max_realized));
    write_json(&out.join("origami.json"), &summary)?;
    log.line(format!("longest realized itinerary: {max_realized}"));
    log.write(out)?;
    println!("bound={bound:?} max_realized={max_realized}");
    Ok(EXIT_OK)
}

fn cmd_threebody(cli: &Cli, n_phi: usize, n_psi: usize, budget: usize, out: &Path) -> Result<i32> {
    let mut log = RunLog::new("threebody", cli);
    log.line(nbody::w_norm_note());
    let (phi, psi) = nbody::default_grids(n_phi, n_psi);
    let slice = nbody::three_body_slice(&phi, &psi);
    nbody::write_slice_csv(&slice, fs::File::create(out.join("slice.csv"))?)?;
    log.line(format!(
        "{} grid points, momentum residual {:e}, energy residual {:e}",
        slice.points.len(),
        slice.max_momentum_residual(),
        slice.max_energy_residual()
    ));
    let cv = nbody::cross_validate_slice(&slice, budget, cli.seed, &solver_options(cli))?;
    log.line(format!(
        "cross-validation: {} sampled, {} excluded, chain deviation {:e}, reflection residual {:e}",
        cv.n_sampled, cv.n_excluded, cv.max_chain_deviation, cv.max_reflection_residual
    ));
    write_json(
        &out.join("threebody_summary.json"),
        &serde_json::json!({
            "w_norm": nbody::slice_w_norm(),
            "w_norm_stated": nbody::STATED_W_NORM,
            "max_momentum_residual": slice.max_momentum_residual(),
            "max_energy_residual": slice.max_energy_residual(),
            "cross_validation": cv,
        }),
    )?;
    fs::write(
        out.join("slice.gp"),
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'arg v1+'\nset ylabel 'arg v2+'\nset zlabel 'arg v3+'\nsplot 'slice.csv' using 4:5:6 with points pointtype 7 pointsize 0.3\n",
    )?;
    log.write(out)?;
    println!("points={} chain_deviation={:e}", slice.points.len(), cv.max_chain_deviation);
    Ok(EXIT_OK)
}

fn cmd_enumerate(cli: &Cli, arr: &Arrangement, max_len: Option<usize>, out: &Path) -> Result<i32> {
    let mut log = RunLog::new("enumerate", cli);
    let bound = origami::itinerary_bound(arr).ok();
    let max_len = max_len.or(bound).ok_or_else(|| Error::input("--max-len is required when no bound is available"))?;
    let mut w = csv::Writer::from_path(out.join("itineraries.csv"))?;
    w.write_record(["itinerary", "length", "min_sector_sum", "filtered"])?;
    let all = origami::enumerate_itineraries(arr.len(), max_len);
    for it in &all {
        let sum = origami::min_sector_sum(arr, it);
        let names = it.names(arr).join("-");
        println!("{names}");
        w.write_record([
            names,
            it.len().to_string(),
            sum.map(|s| format!("{s:.17e}")).unwrap_or_default(),
            origami::angle_filter_rejects(arr, it).to_string(),
        ])?;
    }
    w.flush()?;
    log.line(format!("{} itineraries up to length {max_len}", all.len()));
    log.write(out)?;
    Ok(EXIT_OK)
}
