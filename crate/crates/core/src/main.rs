use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use malleable_workspace::calibration::{distances_from_markers, MarkerFrame};
use malleable_workspace::datasets;
use malleable_workspace::distance::{
    cm_det_3, cm_det_5, is_embeddable, project, Branch, DistanceSet, Projection, Simplex,
    EMBED_TOLERANCE, DEFAULT_PROJECTION_LIMIT,
};
use malleable_workspace::formats::{parse_markers, CloudRecord, CloudWriter, DistanceFile, MeshOutput};
use malleable_workspace::kinematics::{azimuth_deg, wedge_mask, AzimuthRange, JointLimits, SweepCloud, Sweeper};
use malleable_workspace::surface::{classify, extract_coefficients, Topology, DEFAULT_TAU};
use malleable_workspace::Error;

const OUT_DIR_ENV: &str = "MALLEABLE_OUT_DIR";

#[derive(Parser)]
#[command(name = "malleable", version, about = "Workspace analysis for two-joint malleable robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the workspace and print its canonical parameters.
    Classify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_TAU, value_parser = parse_tau)]
        tau: f64,
    },
    /// Print the six normalised quartic coefficients.
    Coeffs {
        #[command(flatten)]
        input: Input,
    },
    /// Sweep the joints and write the end-effector cloud.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Sweep the joints and write a triangulated mesh.
    Mesh {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Convert a marker file into a distance-set file.
    Calibrate {
        markers: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report embeddability and how far the consistency projection moves the data.
    Check {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Bundled configuration name (fig5_a .. fig5_l) or distance-set file.
    source: Option<String>,
    /// Distances as `d12=..,d13=..,...` (mm).
    #[arg(long)]
    inline: Option<String>,
    /// Marker file with `P1 x y z` rows.
    #[arg(long)]
    markers: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Joint ranges in degrees, `t1min:t1max,t2min:t2max`.
    #[arg(long, default_value = "10:350,53:307")]
    limits: String,
    /// Joint step in degrees.
    #[arg(long, default_value_t = JointLimits::PROTOTYPE.step)]
    step: f64,
    /// Keep every n-th grid sample along each joint.
    #[arg(long, default_value_t = malleable_workspace::kinematics::DEFAULT_DECIMATION)]
    decimation: usize,
    /// Full resolution (decimation 1), streamed to disk.
    #[arg(long, conflicts_with = "decimation")]
    full: bool,
    /// Drop points whose azimuth lies in `start:end` degrees.
    #[arg(long)]
    wedge: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Largest acceptable scaled residual.
    #[arg(long, default_value_t = 1e-6)]
    residual_bound: f64,
    #[arg(long, value_enum, default_value_t = BranchArg::Positive)]
    branch: BranchArg,
    /// Largest length change, relative to L, the consistency projection may make.
    #[arg(long, default_value_t = DEFAULT_PROJECTION_LIMIT)]
    projection_limit: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Ply,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Positive,
    Negative,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Positive => Branch::Positive,
            BranchArg::Negative => Branch::Negative,
        }
    }
}

fn parse_tau(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("tau must lie in (0, 1), got {v}"))
    }
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn write(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure::new(4, format!("cannot write {}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::MissingMarker(_)
            | Error::InvalidDistances(_)
            | Error::InvalidLimits(_) => 2,
            Error::NotEmbeddable { .. } | Error::ProjectionTooFar { .. } => 3,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

struct Loaded {
    name: String,
    file: DistanceFile,
}

fn load(input: &Input) -> CliResult<Loaded> {
    if let Some(text) = &input.inline {
        let toml = text.replace(',', "\n");
        return Ok(Loaded {
            name: "inline".into(),
            file: DistanceFile::parse(&toml, "--inline")?,
        });
    }
    if let Some(path) = &input.markers {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let frame = parse_markers(&text, &path.display().to_string())?;
        let md = distances_from_markers(&frame)?;
        md.distances.validate()?;
        return Ok(Loaded {
            name: stem(path),
            file: DistanceFile {
                name: None,
                distances: md.distances,
                d15: Some(md.d15()),
                d25: Some(md.d25()),
            },
        });
    }
    let source = input.source.as_deref().expect("clap enforces one input");
    if let Some(b) = datasets::find(source) {
        return Ok(Loaded {
            name: b.name.into(),
            file: b.load(),
        });
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(Failure::new(
            2,
            format!("{source}: neither a bundled configuration nor a readable file"),
        ));
    }
    Ok(Loaded {
        name: stem(path),
        file: DistanceFile::read(path)?,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

/// Embeds the distances, falling back to the consistency projection for
/// measured data. A set the projection cannot repair is reported by the
/// simplex that fails.
fn prepare(ds: &DistanceSet, branch: Branch, limit: f64) -> CliResult<Projection> {
    match project(ds, branch, limit) {
        Ok(p) => Ok(p),
        Err(e @ Error::ProjectionTooFar { .. }) => {
            let report = is_embeddable(ds);
            match report.violation() {
                Some(v) => Err(Error::NotEmbeddable {
                    simplex: v.simplex,
                    value: v.value,
                    tolerance: v.tolerance,
                }
                .into()),
                None => Err(e.into()),
            }
        }
        Err(e) => Err(e.into()),
    }
}

fn describe_projection(p: &Projection) -> String {
    if p.strict.embeddable {
        format!("strict (max length change {:.6} mm)", p.max_delta)
    } else {
        format!("clamped (max length change {:.6} mm)", p.max_delta)
    }
}

fn run_classify(input: &Input, tau: f64) -> CliResult {
    let loaded = load(input)?;
    let p = prepare(&loaded.file.distances, Branch::Positive, DEFAULT_PROJECTION_LIMIT)?;
    let tc = classify(&p.embedding, tau);
    println!("input: {}", loaded.name);
    match tc.topology {
        Topology::Spherical { radius } => println!("category: Spherical, radius = {radius:.6}"),
        Topology::PumaLike {
            centre_height,
            radius,
        } => println!("category: PumaLike, centre = (0, 0, {centre_height:.6}), radius = {radius:.6}"),
        Topology::Scara { plane_height } => {
            println!("category: Scara, plane z = {plane_height:.6}")
        }
        Topology::GeneralArticulated(t) => {
            println!(
                "category: GeneralArticulated, tube radius = {:.6}, circle centre = ({:.6}, {:.6}, {:.6}){}",
                t.tube_radius,
                t.circle_centre.x,
                t.circle_centre.y,
                t.circle_centre.z,
                if t.degenerate_tube { ", degenerate tube" } else { "" }
            )
        }
    }
    println!("tau: {tau}");
    println!("scale L: {:.6}", tc.scale);
    println!("common normal g: {:.6}", tc.axes.common_normal);
    println!("g / L: {:.6}", tc.axes.common_normal / tc.scale);
    println!("alpha: {:.6} deg", tc.axes.alpha.to_degrees());
    match tc.axes.foot_height {
        Some(z) => println!("foot height z*: {z:.6}"),
        None => println!("foot height z*: none (parallel axes)"),
    }
    println!("embedding: {}", describe_projection(&p));
    Ok(())
}

fn run_coeffs(input: &Input) -> CliResult {
    let loaded = load(input)?;
    let p = prepare(&loaded.file.distances, Branch::Positive, DEFAULT_PROJECTION_LIMIT)?;
    let c = extract_coefficients(&p.distances)?;
    println!("# basis: r^4, d12*z*r^2, x^2+y^2, z^2, d12*z, 1 (r^2 = x^2+y^2+z^2, mm)");
    for (i, q) in c.q.iter().enumerate() {
        println!("q{i} {q:.17e}");
    }
    println!("d12 {:.17e}", c.d12);
    println!("scale {:.17e}", c.scale);
    println!("normalization {:.17e}", c.normalization);
    println!("holdout_residual {:.3e}", c.holdout_residual);
    println!("condition {:.3e}", c.condition);
    Ok(())
}

fn parse_range(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once(':')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn parse_limits(s: &str, step: f64) -> CliResult<JointLimits> {
    let bad = || Failure::new(2, format!("invalid --limits {s:?}; expected t1min:t1max,t2min:t2max"));
    let (j1, j2) = s.split_once(',').ok_or_else(bad)?;
    let (theta1_min, theta1_max) = parse_range(j1).ok_or_else(bad)?;
    let (theta2_min, theta2_max) = parse_range(j2).ok_or_else(bad)?;
    let limits = JointLimits {
        theta1_min,
        theta1_max,
        theta2_min,
        theta2_max,
        step,
    };
    limits.validate()?;
    Ok(limits)
}

/// `-o` relative to the output directory override, or a default name there.
fn output_path(given: Option<&Path>, default_name: String) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match (given, dir) {
        (Some(p), Some(d)) if p.is_relative() => d.join(p),
        (Some(p), _) => p.to_path_buf(),
        (None, Some(d)) => d.join(default_name),
        (None, None) => PathBuf::from(default_name),
    }
}

fn run_sweep(input: &Input, args: &SweepArgs, mesh: bool) -> CliResult {
    let loaded = load(input)?;
    let limits = parse_limits(&args.limits, args.step)?;
    let wedge = args
        .wedge
        .as_deref()
        .map(|w| {
            let (a, b) = parse_range(w)
                .ok_or_else(|| Failure::new(2, format!("invalid --wedge {w:?}; expected start:end")))?;
            AzimuthRange::new(a, b).map_err(Failure::from)
        })
        .transpose()?;
    let format = args.format.unwrap_or(if mesh { Format::Ply } else { Format::Csv });
    let ext = match format {
        Format::Csv => "csv",
        Format::Ply => "ply",
    };
    let kind = if mesh { "mesh" } else { "sweep" };
    let path = output_path(args.output.as_deref(), format!("{}_{kind}.{ext}", loaded.name));

    let p = prepare(&loaded.file.distances, args.branch.into(), args.projection_limit)?;
    let decimation = if args.full { 1 } else { args.decimation };
    let sweeper = Sweeper::new(&p.embedding, limits, decimation)?;
    let (rows, cols) = sweeper.grid_shape();

    let file = File::create(&path).map_err(|e| Failure::write(&path, e))?;
    let out = BufWriter::new(file);
    let (kept, stats) = if args.full {
        if !matches!(format, Format::Csv) {
            return Err(Failure::new(2, "--full streams CSV only; use --format csv"));
        }
        let mut writer = CloudWriter::new(out).map_err(|e| Failure::write(&path, e))?;
        let mut kept = 0usize;
        let stats = sweeper
            .for_each_chunk(16, |row| {
                for pt in row {
                    if wedge.is_some_and(|w| w.contains(azimuth_deg(&pt.position))) {
                        continue;
                    }
                    kept += 1;
                    writer.write(&CloudRecord::from(pt))?;
                }
                Ok::<_, std::io::Error>(())
            })
            .map_err(|e| Failure::write(&path, e))?;
        writer
            .finish()
            .and_then(|mut w| w.flush())
            .map_err(|e| Failure::write(&path, e))?;
        (kept, stats)
    } else {
        let mut cloud: SweepCloud = sweeper.run();
        let stats = cloud.stats;
        if let Some(w) = wedge {
            cloud = wedge_mask(&cloud, w);
        }
        let result = match format {
            Format::Csv => {
                let mut writer = CloudWriter::new(out).map_err(|e| Failure::write(&path, e))?;
                cloud
                    .points
                    .iter()
                    .try_for_each(|pt| writer.write(&pt.into()))
                    .and_then(|_| writer.finish())
            }
            Format::Ply => {
                let m = if mesh {
                    MeshOutput::from_sweep(&cloud)
                } else {
                    MeshOutput::points(&cloud)
                };
                m.write_ply(out)
            }
        };
        result
            .and_then(|mut w| w.flush())
            .map_err(|e| Failure::write(&path, e))?;
        (cloud.points.len(), stats)
    };

    println!("input: {}", loaded.name);
    println!("embedding: {}", describe_projection(&p));
    println!("grid: {rows} x {cols}");
    println!("points written: {kept} (wedge removed {})", rows * cols - kept);
    println!("scaled residual: max {:.3e}, mean {:.3e}", stats.max, stats.mean);
    println!("output: {}", path.display());
    if !(stats.max <= args.residual_bound) {
        return Err(Failure::new(
            5,
            format!(
                "scaled residual {:.3e} exceeds bound {:.3e}",
                stats.max, args.residual_bound
            ),
        ));
    }
    Ok(())
}

fn run_calibrate(markers: &Path, output: Option<&Path>) -> CliResult {
    let text = std::fs::read_to_string(markers).map_err(|e| Error::io(markers, e))?;
    let frame: MarkerFrame = parse_markers(&text, &markers.display().to_string())?;
    let md = distances_from_markers(&frame)?;
    let file = DistanceFile {
        name: Some(stem(markers)),
        distances: md.distances,
        d15: Some(md.d15()),
        d25: Some(md.d25()),
    };
    let path = output_path(output, format!("{}.dist", stem(markers)));
    file.write(&path).map_err(|e| Failure::write(&path, e))?;
    for (key, d) in DistanceSet::KEYS.iter().zip(md.distances.lengths()) {
        println!("{key} {d:.6}");
    }
    println!("d15 {:.6} (pose-dependent)", md.d15());
    println!("d25 {:.6} (pose-dependent)", md.d25());
    if md.distances.s34 == 0.0 {
        println!("warning: P3 and P4 coincide; the second joint axis is undefined");
    }
    println!("output: {}", path.display());
    Ok(())
}

fn run_check(input: &Input) -> CliResult {
    let loaded = load(input)?;
    let ds = &loaded.file.distances;
    let report = is_embeddable(ds);
    println!("input: {}", loaded.name);
    println!("embeddable: {}", if report.embeddable { "yes" } else { "no" });
    for c in &report.checks {
        println!(
            "  {}: {:.6e} (tolerance {:.3e}){}",
            c.simplex,
            c.value,
            c.tolerance,
            if c.passed() { "" } else { "  VIOLATED" }
        );
    }
    if let Some(v) = report.violation() {
        println!("violated simplex: {}", v.simplex);
    }
    match project(ds, Branch::Positive, f64::INFINITY) {
        Ok(p) => println!(
            "projection: max length change {:.6} mm ({:.4}% of L; limit {}%)",
            p.max_delta,
            100.0 * p.max_delta / ds.scale(),
            100.0 * DEFAULT_PROJECTION_LIMIT
        ),
        Err(e) => println!("projection: failed ({e})"),
    }
    if let (Some(d15), Some(d25)) = (loaded.file.d15, loaded.file.d25) {
        check_reference(ds, d15, d25);
    }
    Ok(())
}

/// Checks the recorded pose-dependent distances against the structure.
fn check_reference(ds: &DistanceSet, d15: f64, d25: f64) {
    let table = ds.table(d15 * d15, d25 * d25);
    let l = table.scale();
    let mut bad = Vec::new();
    for idx in [[1, 2, 5], [1, 3, 5], [1, 4, 5], [2, 3, 5], [2, 4, 5]] {
        let mut s = [[0.0; 3]; 3];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                s[a][b] = table.s(i, j);
            }
        }
        if cm_det_3(&s) < -EMBED_TOLERANCE * l.powi(4) {
            bad.push(Simplex::Triangle(idx.map(|v| v as u8)).to_string());
        }
    }
    if bad.is_empty() {
        let gamma = cm_det_5(&table) / l.powi(8);
        println!("reference d15/d25: consistent triangles, scaled five-point value {gamma:.3e}");
    } else {
        println!(
            "reference d15/d25: INCONSISTENT, {} violated (d15 = {d15}, d25 = {d25})",
            bad.join(", ")
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify { input, tau } => run_classify(input, *tau),
        Command::Coeffs { input } => run_coeffs(input),
        Command::Sweep { input, sweep } => run_sweep(input, sweep, false),
        Command::Mesh { input, sweep } => run_sweep(input, sweep, true),
        Command::Calibrate { markers, output } => run_calibrate(markers, output.as_deref()),
        Command::Check { input } => run_check(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
