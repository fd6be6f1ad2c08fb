//! `krigmorph`: select morphing nodes on a surface mesh, persist the
//! parametrization, and use it to morph meshes or export variance fields.
//!
//! Exit codes: 0 success, 2 flag or input validation, 3 file parse
//! failure, 4 numerical failure.

use clap::{Parser, Subcommand, ValueEnum};
use krigmorph::mesh::{read_mesh, write_mesh_as, Mesh, MeshFormat};
use krigmorph::{
    mprm, DisplacementVector, Error, FixedGeometry, KernelFamily, KernelSpec, Parametrization,
    StopRule,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "krigmorph",
    version,
    about = "Kriging-based mesh morphing: node selection, displacement, variance maps"
)]
struct Cli {
    /// Logging verbosity on standard error.
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    log_level: LogLevel,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Select morphing nodes on a surface mesh and precompute weights.
    Select(SelectArgs),
    /// Apply node displacements to a mesh through a stored parametrization.
    Apply(ApplyArgs),
    /// Evaluate the posterior variance at every mesh point and write it
    /// as a "variance" scalar field (VTK output only).
    Variance(VarianceArgs),
    /// Summarize a parametrization file.
    Info(InfoArgs),
}

#[derive(clap::Args)]
struct SelectArgs {
    /// Surface mesh supplying the selection candidates (.vtk/.obj/.xyz).
    #[arg(long)]
    surface: PathBuf,

    /// Additional mesh to precompute weights for; repeatable.
    #[arg(long = "mesh")]
    meshes: Vec<PathBuf>,

    /// Kernel family: gaussian, matern32, or matern52.
    #[arg(long)]
    kernel: KernelFamily,

    /// Kernel influence radius (length units of the mesh, > 0).
    #[arg(long)]
    theta: f64,

    /// Stop after this many nodes.
    #[arg(long)]
    max_nodes: Option<usize>,

    /// Stop once the largest remaining variance drops below this.
    #[arg(long)]
    variance_tol: Option<f64>,

    /// JSON file describing the fixed (zero-displacement) region.
    #[arg(long)]
    fixed: Option<PathBuf>,

    /// Points per block during weight assembly (memory/speed trade-off).
    #[arg(long, default_value_t = 4096)]
    chunk: usize,

    /// Output parametrization file (.mprm).
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ApplyArgs {
    /// Parametrization file written by `select`.
    #[arg(long)]
    param: PathBuf,

    /// CSV of node displacements: one x,y,z row per node in selection
    /// order; a header row is allowed.
    #[arg(long)]
    disp: PathBuf,

    /// Which stored weight block to use.
    #[arg(long)]
    mesh_id: String,

    /// Mesh file to morph (must match the block's point count).
    #[arg(long)]
    mesh: PathBuf,

    /// Output mesh file (written in the input mesh's format).
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct VarianceArgs {
    /// Parametrization file written by `select`.
    #[arg(long)]
    param: PathBuf,

    /// Mesh whose points are evaluated.
    #[arg(long)]
    mesh: PathBuf,

    /// Output VTK file carrying the "variance" point field.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct InfoArgs {
    /// Parametrization file to summarize.
    #[arg(long)]
    param: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level.filter())
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad flags or inputs, 3 for unreadable/unparsable files, 4 for
/// numerical failures.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MeshParse { .. } | Error::ParamFile(_) | Error::Io(_) => 3,
        Error::SingularMatrix { .. }
        | Error::ZeroPosteriorVariance(_)
        | Error::NoSelectableCandidate
        | Error::DegenerateFit
        | Error::Internal(_) => 4,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Select(args) => cmd_select(args),
        Command::Apply(args) => cmd_apply(args),
        Command::Variance(args) => cmd_variance(args),
        Command::Info(args) => cmd_info(args),
    }
}

/// Fail-fast check that every input file named on the command line exists.
fn require_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), Error> {
    for path in paths {
        if !path.is_file() {
            return Err(Error::InvalidArgument(format!(
                "input file '{}' does not exist",
                path.display()
            )));
        }
    }
    Ok(())
}

fn mesh_points(mesh: &Mesh) -> Vec<krigmorph::Point3> {
    mesh.points.clone()
}

fn cmd_select(args: SelectArgs) -> Result<(), Error> {
    if args.max_nodes == Some(0) {
        return Err(Error::InvalidArgument("max-nodes must be positive".into()));
    }
    if args.max_nodes.is_none() && args.variance_tol.is_none() {
        return Err(Error::InvalidArgument(
            "at least one of --max-nodes / --variance-tol is required".into(),
        ));
    }
    if let Some(tol) = args.variance_tol {
        if tol >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "variance-tol {tol} must be below kappa(0) = 1, or no node could ever be selected"
            )));
        }
    }
    let mut inputs: Vec<&Path> = vec![&args.surface];
    inputs.extend(args.meshes.iter().map(PathBuf::as_path));
    if let Some(fixed) = &args.fixed {
        inputs.push(fixed);
    }
    require_files(inputs)?;

    let fixed = args.fixed.as_deref().map(read_fixed).transpose()?;
    let kernel = KernelSpec::new(args.kernel, args.theta, fixed)?;
    let surface = read_mesh(&args.surface)?;
    let volumes: Vec<Mesh> = args
        .meshes
        .iter()
        .map(read_mesh)
        .collect::<Result<_, _>>()?;

    let stop = StopRule {
        max_nodes: args.max_nodes,
        variance_tol: args.variance_tol,
    };
    let (state, nodes) = krigmorph::select_nodes(&kernel, &surface.points, stop)?;

    println!(
        "{:>6} {:>8} {:>16} {:>16} {:>16} {:>14}",
        "step", "index", "x", "y", "z", "variance"
    );
    for (step, t) in state.trace().iter().enumerate() {
        let p = surface.points[t.index];
        println!(
            "{:>6} {:>8} {:>16} {:>16} {:>16} {:>14}",
            step + 1,
            t.index,
            format!("{:.6e}", p.x()),
            format!("{:.6e}", p.y()),
            format!("{:.6e}", p.z()),
            format!("{:.6e}", t.variance),
        );
    }
    println!(
        "selected {} of {} candidates; max residual variance {:.6e}",
        nodes.len(),
        surface.point_count(),
        state.max_residual_variance()
    );

    let mut param = Parametrization::from_selection(state)?;
    param.add_mesh(&surface.id, &mesh_points(&surface), args.chunk)?;
    for mesh in &volumes {
        param.add_mesh(&mesh.id, &mesh_points(mesh), args.chunk)?;
    }
    mprm::save_path(&param, &args.out)?;
    for block in param.meshes() {
        println!(
            "weights '{}': {} nodes x {} points",
            block.id(),
            param.node_count(),
            block.point_count()
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn read_fixed(path: &Path) -> Result<FixedGeometry, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::MeshParse {
        path: path.display().to_string(),
        line: e.line(),
        msg: format!("invalid fixed-region description: {e}"),
    })
}

fn cmd_apply(args: ApplyArgs) -> Result<(), Error> {
    require_files([
        args.param.as_path(),
        args.disp.as_path(),
        args.mesh.as_path(),
    ])?;
    let param = mprm::load_path(&args.param)?;
    let displacement = read_displacements(&args.disp)?;
    let mesh = read_mesh(&args.mesh)?;

    let block = param.mesh(&args.mesh_id).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "unknown mesh id '{}' (available: {})",
            args.mesh_id,
            param
                .meshes()
                .iter()
                .map(|m| m.id())
                .collect::<Vec<_>>()
                .join(", ")
        ))
    })?;
    if mesh.point_count() != block.point_count() {
        return Err(Error::InvalidArgument(format!(
            "mesh '{}' has {} points but weight block '{}' was built for {}",
            args.mesh.display(),
            mesh.point_count(),
            args.mesh_id,
            block.point_count()
        )));
    }
    let moved = mesh.displaced(param.displace(&args.mesh_id, &displacement)?.view())?;
    // the morphed mesh keeps the input's format regardless of the output
    // file name, so connectivity survives unchanged
    write_mesh_as(&moved, &args.out, MeshFormat::from_path(&args.mesh)?)?;
    println!(
        "displaced {} points of '{}'; wrote {}",
        moved.point_count(),
        args.mesh_id,
        args.out.display()
    );
    Ok(())
}

/// Node displacements as CSV: three numeric columns, one row per node, an
/// optional single header row.
fn read_displacements(path: &Path) -> Result<DisplacementVector, Error> {
    let err = |line: u64, msg: String| Error::MeshParse {
        path: path.display().to_string(),
        line: line as usize,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| err(0, e.to_string()))?;
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(0, e.to_string()))?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let fields: Vec<&str> = record.iter().collect();
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        let parsed: Option<Vec<f64>> = fields
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(values) if values.len() == 3 => rows.push([values[0], values[1], values[2]]),
            Some(values) => {
                return Err(err(
                    line,
                    format!("expected 3 displacement columns, found {}", values.len()),
                ))
            }
            None if i == 0 => continue, // header row
            None => return Err(err(line, format!("non-numeric row '{}'", fields.join(",")))),
        }
    }
    if rows.is_empty() {
        return Err(err(1, "no displacement rows found".into()));
    }
    DisplacementVector::from_rows(&rows)
}

fn cmd_variance(args: VarianceArgs) -> Result<(), Error> {
    require_files([args.param.as_path(), args.mesh.as_path()])?;
    let out_format = MeshFormat::from_path(&args.out)?;
    if out_format != MeshFormat::VtkLegacyAscii {
        return Err(Error::UnsupportedWrite {
            id: args.out.display().to_string(),
            format: out_format.name(),
            msg: "the variance field needs VTK output (use a .vtk path)".into(),
        });
    }
    let param = mprm::load_path(&args.param)?;
    let mesh = read_mesh(&args.mesh)?;
    let variance = param.variance_at(&mesh.points)?;
    let with_field = mesh.with_field("variance", variance)?;
    write_mesh_as(&with_field, &args.out, out_format)?;
    println!(
        "wrote {} with variance for {} points",
        args.out.display(),
        with_field.point_count()
    );
    Ok(())
}

fn cmd_info(args: InfoArgs) -> Result<(), Error> {
    require_files([args.param.as_path()])?;
    let param = mprm::load_path(&args.param)?;
    println!("kernel: {}", param.kernel().family());
    println!("theta: {}", param.kernel().theta());
    match param.kernel().fixed() {
        Some(f) => println!("fixed: {} primitive(s)", f.primitives().len()),
        None => println!("fixed: none"),
    }
    println!("nodes: {}", param.node_count());
    if let Some(last) = param.selection_trace().last() {
        println!("final selection variance: {:.6e}", last.variance);
    }
    println!("jitter: {:e}", param.chol().jitter());
    println!("meshes: {}", param.meshes().len());
    let mut total = 0usize;
    for block in param.meshes() {
        println!(
            "  {}: {} points, {} bytes",
            block.id(),
            block.point_count(),
            block.payload_bytes()
        );
        total += block.payload_bytes();
    }
    println!("total weight payload: {total} bytes");
    Ok(())
}
