//! Subcommand implementations.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use shapeflow_core::flow::{self, FlowConfig, FlowError, Termination};
use shapeflow_core::levelset::{
    add_noise, rasterize, read_sdf1, write_sdf1, AnalyticField, DataEncoding, FieldSource,
    GridField, GridSpec, NoiseModel, NoiseSpec, Phantom, Sdf1Error,
};
use shapeflow_core::mcubes::{marching_cubes, mc_report};
use shapeflow_core::mesh::{read_obj, write_obj, write_obj_raw, write_ply, MeshIoError};
use shapeflow_core::metrics::compute_metrics;
use shapeflow_core::{Real, ScalarGrid};

use crate::manifest::write_manifest;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration (exit 2).
    Args(String),
    /// Filesystem or file-format failure (exit 3).
    Io(String),
    /// Numerical abort (exit 4).
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Args(m) | CliError::Io(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Args(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<Sdf1Error> for CliError {
    fn from(e: Sdf1Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<MeshIoError> for CliError {
    fn from(e: MeshIoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::InvalidConfig(m) => CliError::Args(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeArg {
    Sphere,
    Ellipsoid,
    Fused,
    Cylinder,
}

impl ShapeArg {
    fn phantom(self) -> Phantom {
        match self {
            ShapeArg::Sphere => Phantom::Sphere,
            ShapeArg::Ellipsoid => Phantom::Ellipsoid,
            ShapeArg::Fused => Phantom::FusedSpheres,
            ShapeArg::Cylinder => Phantom::Cylinder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseArg {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataArg {
    Le64,
    Ascii,
}

// ---------------------------------------------------------------- phantom

#[derive(Args, Serialize)]
pub struct PhantomArgs {
    /// Shape to rasterize.
    #[arg(long, value_enum)]
    pub shape: ShapeArg,
    /// Nodes per axis.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Domain lower bound (cubic domain).
    #[arg(long, default_value_t = -2.5, allow_negative_numbers = true)]
    pub min: f64,
    /// Domain upper bound.
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub max: f64,
    /// Noise model; requires --snr.
    #[arg(long, value_enum, requires = "snr")]
    pub noise: Option<NoiseArg>,
    /// Signal-to-noise ratio in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub snr: Option<f64>,
    /// RNG seed for the noise stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Payload encoding.
    #[arg(long, value_enum, default_value_t = DataArg::Le64)]
    pub data: DataArg,
    /// Output SDF1 path.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_phantom(args: &PhantomArgs) -> Result<(), CliError> {
    let spec = GridSpec::<Real>::cube(args.min, args.max, args.n)
        .map_err(|e| CliError::Args(e.to_string()))?;
    let mut grid = rasterize(args.shape.phantom(), &spec);
    if let Some(model) = args.noise {
        let noise = NoiseSpec {
            model: match model {
                NoiseArg::Gaussian => NoiseModel::Gaussian,
                NoiseArg::Uniform => NoiseModel::Uniform,
            },
            snr_db: args.snr.expect("clap enforces --snr with --noise"),
            seed: args.seed,
        };
        grid = add_noise(&grid, &noise).map_err(|e| CliError::Args(e.to_string()))?;
    }
    let encoding = match args.data {
        DataArg::Le64 => DataEncoding::Le64,
        DataArg::Ascii => DataEncoding::Ascii,
    };
    write_sdf1(&grid, encoding, &args.out)?;
    write_manifest(
        "phantom",
        args,
        &[&args.out],
        &manifest_path(&args.out),
    )
}

// ----------------------------------------------------------------- evolve

#[derive(Args, Serialize)]
pub struct EvolveArgs {
    /// SDF1 grid to reconstruct from (the data path).
    #[arg(long, conflicts_with = "analytic", required_unless_present = "analytic")]
    pub grid: Option<PathBuf>,
    /// Analytic phantom backend (oracle-grade, bypasses rasterization).
    #[arg(long, value_enum)]
    pub analytic: Option<ShapeArg>,
    /// Weight of the φ² attachment term.
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Weight of the tangential smoothing term.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Descent step size.
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub dt: f64,
    /// Iteration budget (at least 1).
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    pub iters: u32,
    /// Icosphere subdivision level of the initial surface.
    #[arg(long, default_value_t = 4)]
    pub subdiv: u32,
    /// Initial sphere radius.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    /// Relative energy-change stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Write a mesh snapshot every N iterations (0 = never).
    #[arg(long = "export-every", default_value_t = 0)]
    pub export_every: u32,
    /// Output prefix for .obj/.curv.ply/.energy.csv/.manifest.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_evolve(args: &EvolveArgs) -> Result<(), CliError> {
    let config = FlowConfig::<Real> {
        alpha: args.alpha,
        beta: args.beta,
        dt: args.dt,
        max_iters: args.iters,
        rel_energy_tol: args.tol,
        initial_radius: args.radius,
        subdiv: args.subdiv,
        export_every: args.export_every,
        abs_energy_tol: None,
    };
    config.validate().map_err(CliError::from)?;

    let result = if let Some(path) = &args.grid {
        let grid: ScalarGrid = read_sdf1(path)?;
        evolve_with(&config, &GridField::new(&grid), args)?
    } else {
        let shape = args
            .analytic
            .expect("clap enforces one of --grid/--analytic");
        evolve_with(&config, &AnalyticField::new(shape.phantom().field()), args)?
    };

    let obj_path = suffixed(&args.out, ".obj");
    let ply_path = suffixed(&args.out, ".curv.ply");
    let csv_path = suffixed(&args.out, ".energy.csv");
    let manifest = suffixed(&args.out, ".manifest");

    write_obj(&result.mesh, &obj_path)?;
    let csv = File::create(&csv_path)?;
    result.trace.write_csv(BufWriter::new(csv))?;

    // best-effort curvature coloring; an aborted run may not support it
    let curv_ok = write_curvature_ply(&result.mesh, &ply_path).is_ok();

    let mut outputs: Vec<&Path> = vec![&obj_path, &csv_path];
    if curv_ok {
        outputs.push(&ply_path);
    }
    write_manifest("evolve", args, &outputs, &manifest)?;

    match &result.termination {
        Termination::Aborted { iteration, message } => Err(CliError::Numeric(format!(
            "evolution aborted at iteration {iteration}: {message} (partial outputs written)"
        ))),
        _ => Ok(()),
    }
}

fn evolve_with<F: FieldSource<Real>>(
    config: &FlowConfig<Real>,
    src: &F,
    args: &EvolveArgs,
) -> Result<flow::FlowResult<Real>, CliError> {
    let every = args.export_every;
    let out = args.out.clone();
    let result = flow::run_with_observer(config, src, move |iter, mesh| {
        if every > 0 && iter > 0 && iter % every == 0 {
            let path = suffixed(&out, &format!(".iter{iter:04}.obj"));
            if let Err(e) = write_obj(mesh, &path) {
                eprintln!("shapeflow: snapshot {} failed: {e}", path.display());
            }
        }
    })?;
    Ok(result)
}

fn write_curvature_ply(mesh: &shapeflow_core::TriMesh, path: &Path) -> Result<(), CliError> {
    let normals = shapeflow_core::mesh::vertex_normals(mesh)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let curv = shapeflow_core::curvature::curvature_field(mesh, &normals)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let h: Vec<Real> = curv.iter().map(|c| c.mean).collect();
    write_ply(mesh, &h, path)?;
    Ok(())
}

// ----------------------------------------------------------------- mcubes

#[derive(Args, Serialize)]
pub struct McubesArgs {
    /// SDF1 grid to extract from.
    #[arg(long)]
    pub grid: PathBuf,
    /// Iso level.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub iso: f64,
    /// Output OBJ path.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    /// Optional JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run_mcubes(args: &McubesArgs) -> Result<(), CliError> {
    let grid: ScalarGrid = read_sdf1(&args.grid)?;
    let surface = marching_cubes(&grid, args.iso);
    if surface.is_empty() {
        eprintln!("shapeflow: no sign change at iso {}; writing empty mesh", args.iso);
    }
    write_obj_raw(&surface.vertices, &surface.faces, &args.out)?;

    let mut outputs: Vec<&Path> = vec![&args.out];
    if let Some(report_path) = &args.report {
        let src = GridField::new(&grid);
        let report = mc_report(&surface, &src).map_err(CliError::from)?;
        std::fs::write(
            report_path,
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        )?;
        outputs.push(report_path);
    }
    write_manifest("mcubes", args, &outputs, &manifest_path(&args.out))
}

// -------------------------------------------------------------- curvature

#[derive(Args, Serialize)]
pub struct CurvatureArgs {
    /// Input OBJ mesh (closed, outward-oriented).
    #[arg(long)]
    pub mesh: PathBuf,
    /// Output PLY path (mean curvature in the quality channel).
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_curvature(args: &CurvatureArgs) -> Result<(), CliError> {
    let mesh: shapeflow_core::TriMesh = read_obj(&args.mesh)?;
    write_curvature_ply(&mesh, &args.out)?;
    write_manifest("curvature", args, &[&args.out], &manifest_path(&args.out))
}

// ---------------------------------------------------------------- metrics

#[derive(Args, Serialize)]
pub struct MetricsArgs {
    /// Input OBJ mesh.
    #[arg(long)]
    pub mesh: PathBuf,
    /// SDF1 grid the mesh is measured against.
    #[arg(long)]
    pub grid: PathBuf,
    /// Output JSON path.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_metrics(args: &MetricsArgs) -> Result<(), CliError> {
    let mesh: shapeflow_core::TriMesh = read_obj(&args.mesh)?;
    let grid: ScalarGrid = read_sdf1(&args.grid)?;
    let src = GridField::new(&grid);
    let metrics = compute_metrics(&mesh, &src).map_err(CliError::from)?;
    std::fs::write(
        &args.out,
        serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n",
    )?;
    write_manifest("metrics", args, &[&args.out], &manifest_path(&args.out))
}

// ----------------------------------------------------------------- shared

fn manifest_path(out: &Path) -> PathBuf {
    suffixed(out, ".manifest")
}

fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
