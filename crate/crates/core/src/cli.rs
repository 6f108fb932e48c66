//! The `vemlab` command line. Every command is described by a serializable
//! [`RunConfig`], which is written into the header of each output so that a
//! run can be replayed with `vemlab --config <file>`.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};
use crate::mesh::{
    generate_collapsing_quad, generate_square_mesh, random_convex_polygon, read_mesh,
    regular_polygon, write_mesh, Point2, Polygon, PolygonalMesh, Rect,
};
use crate::oracle::OracleConfig;
use crate::solver::{
    run_convergence_study, solve_manufactured, ConvergenceRow, Discretization, LinearSolver,
    Manufactured,
};
use crate::space::{SpaceFamily, SpaceKind};
use crate::stab::StabKind;
use crate::stabilitylab::{
    collapse_sweep, decades, h_sweep, interp_bound_check, p_sweep, quasi_optimality_check,
    StabilityReport, SweepRow,
};

pub const VERSION_LINE: &str = concat!("# vemlab v", env!("CARGO_PKG_VERSION"));

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vemlab", version, about = "Virtual element solves and stability measurements")]
pub struct Cli {
    /// Replay a serialized run configuration instead of a subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh generation.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Manufactured-solution solve on a mesh file.
    Solve(SolveConfig),
    /// Convergence study on square meshes with n = 4, 8, 16, ...
    Converge(ConvergeConfig),
    /// Stability-constant sweeps.
    Stab(StabConfig),
    /// Interpolation estimates on one element.
    Interp(InterpConfig),
}

#[derive(Debug, Subcommand)]
pub enum MeshAction {
    Gen(MeshGenConfig),
}

/// Everything needed to reproduce one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    MeshGen(MeshGenConfig),
    Solve(SolveConfig),
    Converge(ConvergeConfig),
    Stab(StabConfig),
    Interp(InterpConfig),
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// The two comment lines that open every CSV output.
    pub fn header(&self) -> String {
        format!("{VERSION_LINE}\n# config: {}\n", self.to_json())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Square,
    Collapse,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MeshGenConfig {
    #[arg(long, value_enum)]
    pub kind: MeshKind,
    /// Cells per side (square).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
    /// Height of the short side (collapse), in (0, 1].
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Cg,
    Direct,
}

/// Linear solver flags shared by `solve` and `converge`.
#[derive(Debug, Clone, Copy, PartialEq, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "cg")]
    pub solver: SolverChoice,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
}

impl SolverArgs {
    pub fn linear_solver(&self) -> LinearSolver {
        match self.solver {
            SolverChoice::Cg => LinearSolver::Cg {
                tol: self.tol,
                max_iter: self.max_iter,
            },
            SolverChoice::Direct => LinearSolver::Direct,
        }
    }
}

/// Oracle flags shared by `stab` and `interp`.
#[derive(Debug, Clone, Copy, PartialEq, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 4)]
    pub oracle_level: usize,
    #[arg(long, default_value_t = 2)]
    pub fem_degree: usize,
}

impl OracleArgs {
    pub fn config(&self) -> OracleConfig {
        OracleConfig {
            level: self.oracle_level,
            fem_degree: self.fem_degree,
        }
    }
}

fn parse_space(s: &str) -> std::result::Result<SpaceFamily, String> {
    SpaceFamily::from_tag(s).ok_or_else(|| format!("unknown space '{s}' (conf, enh, nonconf, nonconf-enh)"))
}

fn parse_stab(s: &str) -> std::result::Result<StabKind, String> {
    StabKind::from_tag(s).ok_or_else(|| format!("unknown stabilization '{s}' (dofi, proj)"))
}

fn parse_degree(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(p) if p >= 1 => Ok(p),
        _ => Err(format!("degree must be a positive integer, got '{s}'")),
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveConfig {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, value_parser = parse_space, default_value = "conf")]
    pub space: SpaceFamily,
    #[arg(long, value_parser = parse_stab, default_value = "dofi")]
    pub stab: StabKind,
    #[arg(long, value_parser = parse_degree)]
    pub p: usize,
    #[arg(long, default_value = "sinsin")]
    pub mms: Manufactured,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON destination.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ConvergeConfig {
    #[arg(long, value_parser = parse_degree)]
    pub p: usize,
    /// Number of meshes, n = 4·2^i for i < levels.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub levels: u32,
    #[arg(long, value_parser = parse_space, default_value = "conf")]
    pub space: SpaceFamily,
    #[arg(long, value_parser = parse_stab, default_value = "dofi")]
    pub stab: StabKind,
    #[arg(long, default_value = "sinsin")]
    pub mms: Manufactured,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    H,
    P,
    Collapse,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct StabConfig {
    #[arg(long, value_enum)]
    pub sweep: SweepKind,
    #[arg(long, value_parser = parse_space, default_value = "conf")]
    pub space: SpaceFamily,
    #[arg(long, value_parser = parse_stab, default_value = "dofi")]
    pub stab: StabKind,
    /// Degree for the h and collapse sweeps.
    #[arg(long, value_parser = parse_degree, default_value = "2")]
    pub p: usize,
    /// Highest degree of the p sweep (which starts at 1).
    #[arg(long, value_parser = parse_degree, default_value = "6")]
    pub pmax: usize,
    /// Smallest eps of the collapse sweep (decades from 1).
    #[arg(long, default_value_t = 1e-5)]
    pub eps_min: f64,
    /// Number of element sizes h = 1, 1/2, ... in the h sweep.
    #[arg(long, default_value_t = 3)]
    pub h_levels: usize,
    /// Element of the p sweep.
    #[arg(long, default_value = "square")]
    pub geom: Geometry,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Smooth functions for the interpolation checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TestFunction {
    SinSin,
    /// `exp(x + y)`
    Exp,
    Poly(usize),
}

impl TestFunction {
    pub fn eval(self, x: Point2) -> f64 {
        match self {
            Self::SinSin => Manufactured::SinSin.solution().u(x),
            Self::Exp => (x.x + x.y).exp(),
            Self::Poly(d) => Manufactured::Poly(d).solution().u(x),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SinSin => f.write_str("sinsin"),
            Self::Exp => f.write_str("exp"),
            Self::Poly(d) => write!(f, "poly:{d}"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sinsin" => Ok(Self::SinSin),
            "exp" => Ok(Self::Exp),
            _ => match s.parse::<Manufactured>() {
                Ok(Manufactured::Poly(d)) => Ok(Self::Poly(d)),
                _ => Err(format!("unknown function '{s}' (sinsin, exp, poly:<deg>)")),
            },
        }
    }
}

impl TryFrom<String> for TestFunction {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<TestFunction> for String {
    fn from(v: TestFunction) -> String {
        v.to_string()
    }
}

/// Single test elements addressed by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Geometry {
    /// The unit square.
    Square,
    /// Regular pentagon of circumradius 1.
    Pentagon,
    /// Random convex hexagon with the given seed.
    Hexagon(u64),
    /// `(0,0), (1,0), (1,eps), (0,1)`.
    Collapse(f64),
}

impl Geometry {
    pub fn polygon(self) -> Result<Polygon> {
        match self {
            Self::Square => generate_collapsing_quad(1.0),
            Self::Pentagon => regular_polygon(5, Point2::new(0.0, 0.0), 1.0, 0.0),
            Self::Hexagon(seed) => random_convex_polygon(6, seed),
            Self::Collapse(eps) => generate_collapsing_quad(eps),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Square => f.write_str("square"),
            Self::Pentagon => f.write_str("pentagon"),
            Self::Hexagon(seed) => write!(f, "hexagon:{seed}"),
            Self::Collapse(eps) => write!(f, "collapse:{eps}"),
        }
    }
}

impl FromStr for Geometry {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        let bad = || format!("bad geometry '{s}' (square, pentagon, hexagon[:seed], collapse:<eps>)");
        match (name, arg) {
            ("square", None) => Ok(Self::Square),
            ("pentagon", None) => Ok(Self::Pentagon),
            ("hexagon", None) => Ok(Self::Hexagon(7)),
            ("hexagon", Some(a)) => a.parse().map(Self::Hexagon).map_err(|_| bad()),
            ("collapse", Some(a)) => match a.parse::<f64>() {
                Ok(e) if e > 0.0 && e <= 1.0 => Ok(Self::Collapse(e)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Geometry {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Geometry> for String {
    fn from(g: Geometry) -> String {
        g.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InterpConfig {
    #[arg(long, value_parser = parse_degree)]
    pub p: usize,
    #[arg(long, default_value = "sinsin")]
    pub v: TestFunction,
    #[arg(long, default_value = "square")]
    pub geom: Geometry,
    /// Stabilization whose constants enter the conforming bound.
    #[arg(long, value_parser = parse_stab, default_value = "dofi")]
    pub stab: StabKind,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What went wrong, mapped onto the exit code contract.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<VemError> for CliError {
    fn from(e: VemError) -> Self {
        match e {
            VemError::Io(_) | VemError::Json(_) | VemError::Schema { .. } => Self::Usage(e.to_string()),
            other => Self::Numerical(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

impl From<Command> for RunConfig {
    fn from(c: Command) -> Self {
        match c {
            Command::Mesh {
                action: MeshAction::Gen(m),
            } => Self::MeshGen(m),
            Command::Solve(s) => Self::Solve(s),
            Command::Converge(c) => Self::Converge(c),
            Command::Stab(s) => Self::Stab(s),
            Command::Interp(i) => Self::Interp(i),
        }
    }
}

/// Runs a configuration, writing its outputs; returns the exit code.
pub fn execute(config: &RunConfig) -> i32 {
    let res = match config {
        RunConfig::MeshGen(c) => cmd_mesh(config, c),
        RunConfig::Solve(c) => cmd_solve(config, c),
        RunConfig::Converge(c) => cmd_converge(config, c),
        RunConfig::Stab(c) => cmd_stab(config, c),
        RunConfig::Interp(c) => cmd_interp(config, c),
    };
    match res {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NUMERICAL
        }
    }
}

/// Entry point of the `vemlab` binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let config = match (cli.config, cli.command) {
        (Some(path), None) => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            };
            match serde_json::from_str::<RunConfig>(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: invalid run configuration: {e}");
                    return EXIT_USAGE;
                }
            }
        }
        (None, Some(cmd)) => cmd.into(),
        (Some(_), Some(_)) => {
            eprintln!("error: --config replaces the subcommand; give one or the other");
            return EXIT_USAGE;
        }
        (None, None) => {
            eprintln!("error: a subcommand or --config is required (see --help)");
            return EXIT_USAGE;
        }
    };
    execute(&config)
}

pub fn build_mesh(c: &MeshGenConfig) -> CliResult<PolygonalMesh> {
    match c.kind {
        MeshKind::Square => {
            let n = c.n.ok_or_else(|| CliError::Usage("--kind square needs --n".into()))?;
            Ok(generate_square_mesh(n as usize, Rect::UNIT)?)
        }
        MeshKind::Collapse => {
            let eps = c.eps.ok_or_else(|| CliError::Usage("--kind collapse needs --eps".into()))?;
            let poly = generate_collapsing_quad(eps).map_err(|e| CliError::Usage(e.to_string()))?;
            let n = poly.n_vertices();
            Ok(PolygonalMesh::new(poly.vertices().to_vec(), vec![(0..n).collect()])?)
        }
    }
}

fn cmd_mesh(config: &RunConfig, c: &MeshGenConfig) -> CliResult<i32> {
    let mesh = build_mesh(c)?;
    match &c.out {
        Some(path) => {
            write_mesh(&mesh, path)?;
            // the mesh schema is closed, so the configuration goes next to it
            let side = sidecar_path(path);
            emit(Some(&side), &format!("{{\"version\":\"{}\",\"config\":{}}}\n", env!("CARGO_PKG_VERSION"), config.to_json()))?;
        }
        None => emit(None, &crate::mesh::mesh_to_json(&mesh))?,
    }
    Ok(EXIT_OK)
}

/// `mesh.json` → `mesh.json.config.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn discretization(family: SpaceFamily, p: usize, stab: StabKind) -> Discretization {
    Discretization::new(SpaceKind::new(family, p), stab)
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    version: &'static str,
    config: &'a RunConfig,
    n_cells: usize,
    n_dof: usize,
    n_free: usize,
    h_max: f64,
    iterations: usize,
    relative_residual: f64,
    err_h1_proj: f64,
}

fn cmd_solve(config: &RunConfig, c: &SolveConfig) -> CliResult<i32> {
    let mesh = read_mesh(&c.mesh)?;
    let disc = discretization(c.space, c.p, c.stab);
    let sol = c.mms.solution();
    let (system, result, err) = solve_manufactured(&mesh, disc, &sol, c.solver.linear_solver())?;
    let row = ConvergenceRow {
        run_id: format!("{}-{}-p{}", c.space.tag(), c.stab.tag(), c.p),
        kind: c.space.tag().into(),
        stab: c.stab.tag().into(),
        p: c.p,
        h_max: mesh.h_max(),
        n_dof: system.dof_map.n_global,
        err_h1_proj: err.global,
        rate: None,
    };
    let csv = format!("{}{}\n{}\n", config.header(), ConvergenceRow::CSV_HEADER, row.to_csv());
    emit(c.out.as_deref(), &csv)?;
    if let Some(path) = &c.summary {
        let summary = SolveSummary {
            version: env!("CARGO_PKG_VERSION"),
            config,
            n_cells: mesh.n_cells(),
            n_dof: system.dof_map.n_global,
            n_free: result.n_free,
            h_max: mesh.h_max(),
            iterations: result.iterations,
            relative_residual: result.relative_residual,
            err_h1_proj: err.global,
        };
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        emit(Some(path), &(text + "\n"))?;
    }
    Ok(EXIT_OK)
}

fn cmd_converge(config: &RunConfig, c: &ConvergeConfig) -> CliResult<i32> {
    let meshes = (0..c.levels)
        .map(|i| generate_square_mesh(4 << i, Rect::UNIT))
        .collect::<Result<Vec<_>>>()?;
    let disc = discretization(c.space, c.p, c.stab);
    let rows = run_convergence_study(&meshes, disc, &c.mms.solution(), c.solver.linear_solver())?;
    let mut csv = config.header();
    csv.push_str(ConvergenceRow::CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    emit(c.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

/// Runs the sweep described by a `stab` configuration.
pub fn stab_rows(c: &StabConfig) -> CliResult<Vec<SweepRow>> {
    let cfg = c.oracle.config();
    Ok(match c.sweep {
        SweepKind::H => {
            let hs: Vec<f64> = (0..c.h_levels).map(|i| 0.5f64.powi(i as i32)).collect();
            h_sweep(SpaceKind::new(c.space, c.p), c.stab, &hs, cfg)?
        }
        SweepKind::P => {
            let poly = c.geom.polygon().map_err(|e| CliError::Usage(e.to_string()))?;
            p_sweep(&poly, &c.geom.to_string(), c.space, c.stab, 1..=c.pmax, cfg)
        }
        SweepKind::Collapse => {
            if !(c.eps_min > 0.0 && c.eps_min <= 1.0) {
                return Err(CliError::Usage("--eps-min must lie in (0, 1]".into()));
            }
            collapse_sweep(&decades(c.eps_min), SpaceKind::new(c.space, c.p), c.stab, cfg)
        }
    })
}

fn cmd_stab(config: &RunConfig, c: &StabConfig) -> CliResult<i32> {
    let rows = stab_rows(c)?;
    let mut csv = config.header();
    csv.push_str(StabilityReport::CSV_HEADER);
    csv.push('\n');
    let mut ok = 0;
    for r in &rows {
        match r {
            Ok(rep) => {
                ok += 1;
                csv.push_str(&rep.to_csv());
            }
            Err(skip) => {
                eprintln!("warning: skipped {}: {}", skip.label, skip.reason);
                csv.push_str(&format!("# skipped: {}: {}", skip.label, skip.reason.replace('\n', " ")));
            }
        }
        csv.push('\n');
    }
    emit(c.out.as_deref(), &csv)?;
    Ok(if ok == 0 && !rows.is_empty() { EXIT_NUMERICAL } else { EXIT_OK })
}

pub const INTERP_CSV_HEADER: &str = "check,kind,stab,p,v,geom,lhs,rhs,best_error,seminorm,pass";

fn cmd_interp(config: &RunConfig, c: &InterpConfig) -> CliResult<i32> {
    let poly = c.geom.polygon().map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = c.oracle.config();
    let v = c.v;
    let f = move |x: Point2| v.eval(x);
    let bound = interp_bound_check(&poly, SpaceKind::conforming(c.p), c.stab, &f, cfg)?;
    let quasi = quasi_optimality_check(&poly, SpaceKind::nonconforming(c.p), &f, cfg)?;
    let mut csv = config.header();
    csv.push_str(INTERP_CSV_HEADER);
    csv.push('\n');
    csv.push_str(&format!(
        "stability_bound,conf,{},{},{},{},{:e},{:e},{:e},{:e},{}\n",
        c.stab.tag(),
        c.p,
        c.v,
        c.geom,
        bound.lhs,
        bound.rhs,
        bound.best_error,
        bound.seminorm,
        bound.pass
    ));
    csv.push_str(&format!(
        "quasi_optimality,nonconf,,{},{},{},{:e},{:e},{:e},{:e},{}\n",
        c.p, c.v, c.geom, quasi.lhs, quasi.best_error, quasi.best_error, quasi.seminorm, quasi.pass
    ));
    emit(c.out.as_deref(), &csv)?;
    if bound.pass && quasi.pass {
        Ok(EXIT_OK)
    } else {
        eprintln!("error: interpolation estimate violated");
        Ok(EXIT_NUMERICAL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers_round_trip() {
        for g in ["square", "pentagon", "hexagon:3", "collapse:0.1"] {
            assert_eq!(g.parse::<Geometry>().unwrap().to_string(), g);
        }
        assert!("collapse:0".parse::<Geometry>().is_err());
        assert!("collapse".parse::<Geometry>().is_err());
        for v in ["sinsin", "exp", "poly:2"] {
            assert_eq!(v.parse::<TestFunction>().unwrap().to_string(), v);
        }
    }

    #[test]
    fn config_json_round_trip() {
        let cli = Cli::try_parse_from(["vemlab", "stab", "--sweep", "collapse", "--eps-min", "1e-3"]).unwrap();
        let rc: RunConfig = cli.command.unwrap().into();
        let back: RunConfig = serde_json::from_str(&rc.to_json()).unwrap();
        assert_eq!(rc, back);
        assert!(rc.header().starts_with("# vemlab v"));
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(main_with_args(["vemlab", "mesh", "gen", "--kind", "square", "--n", "0"]), EXIT_USAGE);
        assert_eq!(main_with_args(["vemlab", "solve", "--p", "1"]), EXIT_USAGE);
        assert_eq!(main_with_args(["vemlab"]), EXIT_USAGE);
        assert_eq!(main_with_args(["vemlab", "interp", "--p", "1", "--geom", "circle"]), EXIT_USAGE);
    }
}
