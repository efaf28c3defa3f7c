//! The `rotset` command line: subcommands, reports, output files and the
//! result cache.
//!
//! Exit codes: 0 success, 2 parse or configuration error, 3 numerical
//! non-convergence, 1 anything else (I/O).

mod potential_file;
mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annealing::{ground_state, GroundStateOptions};
use crate::error::Error;
use crate::example1::{
    check_symmetry, example1_potential, label_point, monotonicity_check, vertex_formula,
    vertex_slope, Example1Params,
};
use crate::geometry::rotation_polytope_periodic;
use crate::localized::{localized_entropy, LocalizedEntropyOptions};
use crate::symbolic::{Direction, PotentialTable};
use crate::transfer::{
    measure_entropy, measure_integral, solve_transfer, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

pub use potential_file::{parse_potential, read_potential, write_potential};
pub use render::{ANNEAL_CSV_HEADER, ROTSET_CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: {msg}")]
    Parse { origin: String, msg: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Core(Error::Iteration { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rotset",
    version,
    about = "Pressure, rotation sets and zero-temperature limits of finite-range potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
struct Source {
    /// Potential file (TOML).
    #[arg(long)]
    potential: Option<PathBuf>,
    /// Built-in example parameters: prop55 or prop56.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Truncation depth for presets.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Output directory for CSV/SVG files and the result cache.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ignore and do not write the result cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pressure, entropy and rotation vector of the equilibrium state of t·(α·Φ).
    Pressure(ThermoArgs),
    /// The equilibrium Markov chain of t·(α·Φ).
    Equilibrium(ThermoArgs),
    /// Inner approximation of the rotation set from periodic orbits.
    Rotset(RotsetArgs),
    /// Zero-temperature limit in a direction.
    Anneal(AnnealArgs),
    /// Localized entropy at an interior point of the rotation set.
    LocalizedEntropy(LocalizedArgs),
    /// Closed-form checks for the built-in example.
    Example1(Example1Args),
}

#[derive(Debug, Args, Serialize)]
struct ThermoArgs {
    #[command(flatten)]
    common: Common,
    /// Direction α as comma-separated components (normalized).
    #[arg(long)]
    direction: Option<String>,
    /// Inverse temperature.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
}

#[derive(Debug, Args, Serialize)]
struct RotsetArgs {
    #[command(flatten)]
    common: Common,
    /// Largest orbit period used for the hull.
    #[arg(long, default_value_t = 8)]
    max_period: usize,
    /// Also write an SVG drawing.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args, Serialize)]
struct AnnealArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    direction: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long, default_value_t = 1.5)]
    t_growth: f64,
    #[arg(long, default_value_t = 400.0)]
    t_max: f64,
    /// Period for the polygon the face is taken from (planar potentials).
    #[arg(long, default_value_t = 8)]
    max_period: usize,
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args, Serialize)]
struct LocalizedArgs {
    #[command(flatten)]
    common: Common,
    /// The point w, comma-separated.
    #[arg(long)]
    point: String,
    /// Period of the polygon used for the interior check.
    #[arg(long, default_value_t = 6)]
    max_period: usize,
}

#[derive(Debug, Args, Serialize)]
struct Example1Args {
    #[arg(long, default_value = "prop55")]
    preset: String,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Largest j for which w_i(j) is listed.
    #[arg(long, default_value_t = 12)]
    max_j: usize,
    /// Upper end of the monotonicity check.
    #[arg(long, default_value_t = 1000)]
    j_max: usize,
}

// ---- reports ---------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PressureReport {
    t: f64,
    direction: Vec<f64>,
    pressure: f64,
    entropy: f64,
    rv: Vec<f64>,
    iterations: usize,
    residual: f64,
    flags: Vec<String>,
}

#[derive(Debug, Serialize)]
struct EquilibriumReport {
    t: f64,
    direction: Vec<f64>,
    pressure: f64,
    entropy: f64,
    rv: Vec<f64>,
    alphabet_size: usize,
    range: usize,
    stationary: Vec<f64>,
    transition: Vec<f64>,
    row_defect: f64,
    stationarity_defect: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexRow {
    pub x: f64,
    pub y: f64,
    pub label: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RotsetSummary {
    pub max_period: usize,
    pub kind: String,
    pub degenerate: bool,
    pub vertices: Vec<VertexRow>,
    /// Closed-form vertex positions, for presets.
    pub predictions: Vec<Prediction>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub rv: Vec<f64>,
    pub entropy: f64,
    pub pressure: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassRow {
    pub size: usize,
    pub symbols: Vec<u8>,
    pub mass: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnealSummary {
    pub direction: Vec<f64>,
    pub converged: bool,
    pub limit_rv: Vec<f64>,
    pub limit_entropy: f64,
    pub support: f64,
    pub face: Option<Vec<[f64; 2]>>,
    pub face_entropy: Option<f64>,
    pub closed_class_weights: Vec<ClassRow>,
    pub transient_mass: f64,
    pub accumulation_points: Vec<Vec<f64>>,
    pub flags: Vec<String>,
    pub trace: Vec<TraceRow>,
    /// Polygon the trajectory is drawn over.
    pub polygon: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize)]
struct Example1Report {
    preset: String,
    params: Example1Params,
    hypotheses: crate::example1::HypothesisAudit,
    symmetric: bool,
    truncation_bound: f64,
    vertices: Vec<Prediction>,
    monotonicity: crate::example1::MonotonicityReport,
    slopes: Vec<(usize, f64)>,
}

// ---- helpers ---------------------------------------------------------------

fn load(common: &Common) -> Result<(PotentialTable, Option<Example1Params>), CliError> {
    match (&common.source.potential, &common.source.preset) {
        (Some(path), None) => Ok((read_potential(path)?, None)),
        (None, Some(name)) => {
            let p = Example1Params::preset(name, common.depth)?;
            Ok((example1_potential(&p)?.table, Some(p)))
        }
        _ => Err(CliError::Config(
            "give exactly one of --potential or --preset".into(),
        )),
    }
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("{what} component {c:?}: {e}")))
        })
        .collect()
}

fn direction(arg: &Option<String>, dim: usize) -> Result<Direction, CliError> {
    let v = match arg {
        Some(s) => parse_vector(s, "direction")?,
        None if dim == 1 => vec![1.0],
        None => {
            return Err(CliError::Config(format!(
                "--direction is required for dim = {dim}"
            )))
        }
    };
    if v.len() != dim {
        return Err(CliError::Config(format!(
            "direction has {} components, potential has dim = {dim}",
            v.len()
        )));
    }
    Ok(Direction::new(&v)?)
}

fn cache_key(
    command: &str,
    phi: &PotentialTable,
    config: &impl Serialize,
) -> Result<String, CliError> {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for n in [phi.alphabet_size(), phi.range(), phi.dim()] {
        h.update((n as u64).to_le_bytes());
    }
    for x in phi.values() {
        h.update(x.to_bits().to_le_bytes());
    }
    h.update(serde_json::to_vec(config).map_err(|e| CliError::Config(e.to_string()))?);
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    Ok(hex::encode(h.finalize()))
}

/// Advisory cache: `<out>/cache/<sha256>.json`. Unreadable entries are
/// recomputed.
fn cached<T, F>(common: &Common, key: String, compute: F) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<T, CliError>,
{
    let path = match (&common.out, common.no_cache) {
        (Some(out), false) => out.join("cache").join(format!("{key}.json")),
        _ => return compute(),
    };
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(v) = serde_json::from_str(&text) {
            return Ok(v);
        }
    }
    let v = compute()?;
    std::fs::create_dir_all(path.parent().expect("cache dir"))?;
    let text = serde_json::to_string(&v).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(v)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn emit(stdout: &mut dyn Write, report: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn flag_names<T: std::fmt::Debug>(flags: &[T]) -> Vec<String> {
    flags.iter().map(|f| format!("{f:?}")).collect()
}

// ---- commands --------------------------------------------------------------

fn cmd_thermo(a: &ThermoArgs, chain: bool, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (phi, _) = load(&a.common)?;
    let alpha = direction(&a.direction, phi.dim())?;
    if !a.t.is_finite() {
        return Err(CliError::Config("--t must be finite".into()));
    }
    let sol = solve_transfer(&phi.contract(&alpha, a.t)?, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let rv = measure_integral(&sol.markov, &phi)?;
    let entropy = measure_entropy(&sol.markov);
    if chain {
        let (row_defect, stationarity_defect) = sol.markov.defects();
        emit(
            stdout,
            &EquilibriumReport {
                t: a.t,
                direction: alpha.components().to_vec(),
                pressure: sol.pressure,
                entropy,
                rv,
                alphabet_size: phi.alphabet_size(),
                range: phi.range(),
                stationary: sol.markov.stationary().to_vec(),
                transition: sol.markov.transition().to_vec(),
                row_defect,
                stationarity_defect,
            },
        )?;
    } else {
        let report = PressureReport {
            t: a.t,
            direction: alpha.components().to_vec(),
            pressure: sol.pressure,
            entropy,
            rv,
            iterations: sol.iterations,
            residual: sol.residual,
            flags: flag_names(&sol.flags),
        };
        if let Some(out) = &a.common.out {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["t".to_string(), "pressure".into(), "entropy".into()];
            header.extend((1..=report.rv.len()).map(|i| format!("rv{i}")));
            let mut row = vec![
                render::num(report.t),
                render::num(report.pressure),
                render::num(report.entropy),
            ];
            row.extend(report.rv.iter().map(|&x| render::num(x)));
            let err = |e: csv::Error| CliError::Config(e.to_string());
            w.write_record(&header).map_err(err)?;
            w.write_record(&row).map_err(err)?;
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Config(e.to_string()))?;
            write_file(out, "pressure.csv", &String::from_utf8_lossy(&bytes))?;
        }
        emit(stdout, &report)?;
    }
    Ok(0)
}

fn cmd_rotset(a: &RotsetArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (phi, params) = load(&a.common)?;
    if phi.dim() != 2 {
        return Err(CliError::Config(format!(
            "rotset draws planar rotation sets; the potential has dim = {}",
            phi.dim()
        )));
    }
    let key = cache_key("rotset", &phi, &(a.max_period, &params))?;
    let summary = cached(&a.common, key, || {
        let poly = rotation_polytope_periodic(&phi, a.max_period)?;
        let label = |v: [f64; 2]| {
            params
                .as_ref()
                .and_then(|p| label_point(p, v, a.max_period.max(p.lambda), 1e-9))
        };
        let mut predictions = Vec::new();
        if let Some(p) = &params {
            predictions.push(Prediction {
                label: "w(0)".into(),
                x: p.w0()[0],
                y: p.w0()[1],
            });
            for i in 1..=2 {
                for j in p.lambda..=a.max_period.max(p.lambda) {
                    let w = vertex_formula(i, j, p)?;
                    predictions.push(Prediction {
                        label: format!("w{i}({j})"),
                        x: w[0],
                        y: w[1],
                    });
                }
                let w = p.w_inf(i)?;
                predictions.push(Prediction {
                    label: format!("w{i}(inf)"),
                    x: w[0],
                    y: w[1],
                });
            }
        }
        Ok(RotsetSummary {
            max_period: a.max_period,
            kind: format!("{:?}", poly.kind()).to_lowercase(),
            degenerate: poly.is_degenerate(),
            vertices: poly
                .vertices()
                .iter()
                .map(|&v| VertexRow {
                    x: v[0],
                    y: v[1],
                    label: label(v),
                })
                .collect(),
            predictions,
        })
    })?;
    if let Some(out) = &a.common.out {
        write_file(out, "rotset.csv", &render::rotset_csv(&summary)?)?;
        if a.svg {
            write_file(out, "rotset.svg", &render::rotset_svg(&summary))?;
        }
    }
    emit(stdout, &summary)?;
    Ok(0)
}

fn cmd_anneal(a: &AnnealArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (phi, params) = load(&a.common)?;
    let alpha = direction(&a.direction, phi.dim())?;
    let key = cache_key(
        "anneal",
        &phi,
        &(
            alpha.components(),
            a.t0,
            a.t_growth,
            a.t_max,
            a.max_period,
            &params,
        ),
    )?;
    let summary = cached(&a.common, key, || {
        let polygon = if phi.dim() == 2 {
            Some(rotation_polytope_periodic(&phi, a.max_period)?)
        } else {
            None
        };
        let opts = GroundStateOptions {
            t0: a.t0,
            growth: a.t_growth,
            t_max: a.t_max,
            polygon: polygon.clone(),
            ..Default::default()
        };
        let rep = ground_state(&phi, &alpha, &opts)?;
        Ok(AnnealSummary {
            direction: alpha.components().to_vec(),
            converged: rep.converged,
            limit_rv: rep.limit_rv,
            limit_entropy: rep.limit_entropy,
            support: rep.support,
            face: rep.face.map(|f| f.points),
            face_entropy: rep.face_entropy,
            closed_class_weights: rep
                .closed_class_weights
                .into_iter()
                .map(|c| ClassRow {
                    size: c.states.len(),
                    symbols: c.symbols,
                    mass: c.mass,
                })
                .collect(),
            transient_mass: rep.transient_mass,
            accumulation_points: rep.accumulation_points,
            flags: flag_names(&rep.flags),
            trace: rep
                .trace
                .into_iter()
                .map(|p| TraceRow {
                    t: p.t,
                    rv: p.rv,
                    entropy: p.entropy,
                    pressure: p.pressure,
                    distance: p.distance,
                })
                .collect(),
            polygon: polygon.map(|p| p.vertices().to_vec()),
        })
    })?;
    if let Some(out) = &a.common.out {
        write_file(out, "anneal.csv", &render::anneal_csv(&summary)?)?;
        if a.svg && summary.limit_rv.len() == 2 {
            write_file(out, "anneal.svg", &render::anneal_svg(&summary))?;
        }
    }
    emit(stdout, &summary)?;
    Ok(if summary.converged { 0 } else { 3 })
}

fn cmd_localized(a: &LocalizedArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (phi, _) = load(&a.common)?;
    let w = parse_vector(&a.point, "point")?;
    let opts = LocalizedEntropyOptions {
        interior_period: a.max_period,
        ..Default::default()
    };
    let res = localized_entropy(&phi, &w, &opts)?;
    #[derive(Serialize)]
    struct Report<'a> {
        point: &'a [f64],
        #[serde(flatten)]
        result: crate::localized::LocalizedEntropy,
    }
    emit(
        stdout,
        &Report {
            point: &w,
            result: res,
        },
    )?;
    Ok(0)
}

fn cmd_example1(a: &Example1Args, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let p = Example1Params::preset(&a.preset, a.depth)?;
    let pot = example1_potential(&p)?;
    let mut vertices = Vec::new();
    for i in 1..=2 {
        for j in p.lambda..=a.max_j.max(p.lambda) {
            let w = vertex_formula(i, j, &p)?;
            vertices.push(Prediction {
                label: format!("w{i}({j})"),
                x: w[0],
                y: w[1],
            });
        }
        let w = p.w_inf(i)?;
        vertices.push(Prediction {
            label: format!("w{i}(inf)"),
            x: w[0],
            y: w[1],
        });
    }
    let mut slopes = Vec::new();
    let mut j = p.lambda + 1;
    while j <= 100_000 {
        slopes.push((j, vertex_slope(1, j, &p)?));
        j *= 10;
    }
    let report = Example1Report {
        preset: a.preset.clone(),
        hypotheses: p.audit(),
        symmetric: check_symmetry(&pot.table),
        truncation_bound: pot.truncation_bound,
        vertices,
        monotonicity: monotonicity_check(&p, p.lambda + 1..=a.j_max)?,
        slopes,
        params: p,
    };
    emit(stdout, &report)?;
    Ok(0)
}

/// Parse `args` and run; the report goes to `stdout`. Help and version
/// requests print and return 0; usage errors return 2.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<i32, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if e.use_stderr() {
                eprint!("{e}");
            } else {
                write!(stdout, "{e}")?;
            }
            return Ok(code);
        }
    };
    match &cli.command {
        Command::Pressure(a) => cmd_thermo(a, false, stdout),
        Command::Equilibrium(a) => cmd_thermo(a, true, stdout),
        Command::Rotset(a) => cmd_rotset(a, stdout),
        Command::Anneal(a) => cmd_anneal(a, stdout),
        Command::LocalizedEntropy(a) => cmd_localized(a, stdout),
        Command::Example1(a) => cmd_example1(a, stdout),
    }
}

/// Process entry point: returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(args, &mut lock) {
        Ok(code) => code,
        // a closed reader (e.g. `| head`) is not a failure
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
