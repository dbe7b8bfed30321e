//! `pasym`: generate, voxelize, detect symmetries, export reflection maps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pasym::detector::{detect_all, reflection_distortion_map, DetectionConfig, DetectionReport};
use pasym::shapes::{
    box_mesh, gen_primitive, platonic_mesh, read_mesh, voxelize_mesh, Primitive, VoxelizeOptions,
    DEFAULT_MAX_DIM, MIN_GRID_DIM,
};
use pasym::volume::{auto_truncation, read_pasvol, write_pasvol, ShapeRepresentation};
use pasym::{Error, Volume};

/// Complexity targeted by `--truncation auto`.
const AUTO_TARGET: f64 = 3.0;
const MIN_DIRECTIONS: usize = 10;

#[derive(Parser, Debug)]
#[command(
    name = "pasym",
    version,
    about = "Global symmetry detection for voxel shapes"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write a synthetic solid as a PASVOL volume.
    Gen(GenArgs),
    /// Voxelize a closed OFF/OBJ mesh into a PASVOL volume.
    Voxelize(VoxelizeArgs),
    /// Detect all approximate symmetries of a PASVOL volume.
    Detect(DetectArgs),
    /// Reflection distortion over hemisphere directions, as CSV.
    ReflMap(ReflMapArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ShapeKind {
    Ball,
    Box,
    Cylinder,
    Icosahedron,
    Dodecahedron,
    Lattice,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    shape: ShapeKind,
    #[arg(long)]
    out: PathBuf,
    /// Voxels across the longest side of the solid.
    #[arg(long, default_value_t = 128)]
    max_dim: usize,
    /// Ball/cylinder radius, platonic circumradius, lattice half side.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Box half extents.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0])]
    half_extents: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    half_height: f64,
    #[arg(long, default_value_t = 8)]
    cells: usize,
    #[arg(long, default_value_t = 0.05)]
    strut: f64,
    /// Also write the solid as a mesh (box and platonic solids only).
    #[arg(long)]
    mesh_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VoxelizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
    max_dim: usize,
    /// Rotate the mesh randomly (from --seed) before rasterizing.
    #[arg(long)]
    random_rotate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Truncation {
    Auto,
    Fixed(f64),
}

impl FromStr for Truncation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Truncation::Auto);
        }
        match s.parse::<f64>() {
            Ok(k) if k >= 0.0 && k.is_finite() => Ok(Truncation::Fixed(k)),
            _ => Err(format!(
                "expected `auto` or a non-negative number, got {s:?}"
            )),
        }
    }
}

#[derive(Args, Debug)]
struct ShapeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `auto` (target complexity 3) or a truncation distance in world units.
    #[arg(long, default_value = "auto")]
    truncation: Truncation,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.01)]
    prob: f64,
    #[arg(long, default_value_t = 20)]
    max_fold: usize,
    #[arg(long, default_value_t = 10.0)]
    carve_deg: f64,
    #[arg(long, default_value_t = 0.25)]
    coarse_delta: f64,
    #[arg(long, default_value_t = 1024)]
    max_survivors: usize,
    /// Single-level search over the full net at --delta.
    #[arg(long, conflicts_with = "bnb")]
    flat: bool,
    /// Coarse-to-fine search starting at --coarse-delta (default).
    #[arg(long)]
    bnb: bool,
}

#[derive(Args, Debug)]
struct ReflMapArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    directions: usize,
    /// Voxel-exact distortions instead of sampled estimates.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.01)]
    prob: f64,
}

/// Failure with a dedicated exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Exit(2, msg.into()).into()
}

fn require_file(path: &Path) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(usage(format!("no such file: {}", path.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Exit>() {
                Some(Exit(code, _)) => ExitCode::from(*code),
                None => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Voxelize(a) => cmd_voxelize(a),
        Cmd::Detect(a) => cmd_detect(a),
        Cmd::ReflMap(a) => cmd_refl_map(a),
    }
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    if a.half_extents.len() != 3 {
        return Err(usage(format!(
            "--half-extents takes 3 values, got {}",
            a.half_extents.len()
        )));
    }
    let prim = match a.shape {
        ShapeKind::Ball => Primitive::Ball { radius: a.radius },
        ShapeKind::Box => Primitive::Box {
            half_extents: [a.half_extents[0], a.half_extents[1], a.half_extents[2]],
        },
        ShapeKind::Cylinder => Primitive::Cylinder {
            radius: a.radius,
            half_height: a.half_height,
        },
        ShapeKind::Icosahedron => Primitive::icosahedron(a.radius),
        ShapeKind::Dodecahedron => Primitive::dodecahedron(a.radius),
        ShapeKind::Lattice => Primitive::Lattice {
            half: a.radius,
            cells: a.cells,
            strut: a.strut,
        },
    };
    if let Err(e) = prim.validate() {
        return Err(usage(e.to_string()));
    }
    if a.max_dim < MIN_GRID_DIM {
        return Err(usage(format!("--max-dim must be >= {MIN_GRID_DIM}")));
    }
    let vol: Volume = gen_primitive(&prim, a.max_dim)?;
    write_pasvol(&vol, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.mesh_out {
        let mesh = match prim {
            Primitive::Box { half_extents } => box_mesh::<f64>(half_extents)?,
            Primitive::Platonic {
                solid,
                circumradius,
            } => platonic_mesh::<f64>(solid, circumradius)?,
            _ => bail!("--mesh-out is only available for box and platonic solids"),
        };
        mesh.write(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", volume_stats(&vol)?);
    Ok(())
}

fn volume_stats(vol: &Volume) -> anyhow::Result<String> {
    let (centered, _) = vol.recenter()?;
    let voxels = vol
        .values()
        .iter()
        .filter(|v| (**v - vol.background()).abs() > 0.5)
        .count();
    Ok(serde_json::json!({
        "r": centered.support_radius(),
        "voxels": voxels,
        "dims": vol.dims(),
        "spacing": vol.spacing(),
    })
    .to_string())
}

fn cmd_voxelize(a: VoxelizeArgs) -> anyhow::Result<()> {
    if a.max_dim < 2 {
        return Err(usage("--max-dim must be >= 2"));
    }
    require_file(&a.input)?;
    if a.max_dim < MIN_GRID_DIM {
        eprintln!(
            "warning: --max-dim {} is coarse; fine features will be lost",
            a.max_dim
        );
    }
    let mesh =
        read_mesh::<f64>(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let opts = VoxelizeOptions {
        random_rotation: a.random_rotate.then_some(a.seed),
    };
    let vol = voxelize_mesh(&mesh, a.max_dim, opts)?;
    write_pasvol(&vol, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}", volume_stats(&vol)?);
    Ok(())
}

fn load_shape(a: &ShapeArgs) -> anyhow::Result<ShapeRepresentation<f64>> {
    require_file(&a.input)?;
    let vol: Volume =
        read_pasvol(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    Ok(match a.truncation {
        Truncation::Auto => {
            let auto = auto_truncation(&vol, AUTO_TARGET)?;
            if !auto.reached {
                eprintln!(
                    "warning: complexity {:.3} stays above {AUTO_TARGET} even at K = r",
                    auto.shape.complexity()
                );
            }
            auto.shape
        }
        Truncation::Fixed(k) => ShapeRepresentation::truncated(&vol, k)?,
    })
}

fn cmd_detect(a: DetectArgs) -> anyhow::Result<()> {
    let cfg = DetectionConfig {
        delta: a.delta,
        p: a.prob,
        max_fold: a.max_fold,
        carve_deg: a.carve_deg,
        identity_carve_deg: a.carve_deg,
        seed: a.shape.seed,
        coarse_delta: a.coarse_delta.max(a.delta),
        max_survivors: a.max_survivors,
        use_bnb: !a.flat,
        ..DetectionConfig::default()
    };
    if let Err(e) = cfg.validate() {
        return Err(usage(e.to_string()));
    }
    let shape = load_shape(&a.shape)?;
    let report = match detect_all(&shape, &cfg) {
        Err(Error::ExcessiveNetSize { projected, cap }) => bail!(
            "net of {projected} elements exceeds the cap of {cap}; use a larger --delta or a larger --truncation"
        ),
        r => r?,
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&a.out, json + "\n").with_context(|| format!("writing {}", a.out.display()))?;
    print!("{}", summary(&report));
    Ok(())
}

fn summary(rep: &DetectionReport) -> String {
    let s = &rep.shape;
    let mut out = format!(
        "r = {:.4}  V_S = {:.4}  K = {:.4}  C = {:.3}  net = {}  evaluations = {}\n",
        s.r, s.total_variation, s.truncation, s.complexity, rep.net_size, rep.evaluations
    );
    let _ = writeln!(
        out,
        "{:<4} {:<16} {:>5} {:>24} {:>9} {:>10}",
        "#", "kind", "fold", "axis", "angle", "distortion"
    );
    for (i, r) in rep.symmetries.iter().enumerate() {
        let axis = r.class.axis.map_or("-".to_string(), |a| {
            format!("({:+.3},{:+.3},{:+.3})", a[0], a[1], a[2])
        });
        let fold = match r.fold {
            0 => "cont".to_string(),
            n => n.to_string(),
        };
        let _ = writeln!(
            out,
            "{:<4} {:<16} {:>5} {:>24} {:>9.2} {:>10.5}{}",
            i + 1,
            r.class.kind.label(),
            fold,
            axis,
            r.class.angle.to_degrees(),
            r.distortion,
            if r.certified { "" } else { "  indeterminate" }
        );
    }
    let _ = writeln!(
        out,
        "{} certified, {} indeterminate, stop: {:?}, {:.0} ms",
        rep.symmetries.len() - rep.indeterminate_count(),
        rep.indeterminate_count(),
        rep.stop_reason,
        rep.wall_ms
    );
    for l in &rep.reflection_families {
        let _ = writeln!(
            out,
            "reflection family around ({:+.3},{:+.3},{:+.3})",
            l[0], l[1], l[2]
        );
    }
    out
}

/// `n` directions of a Fibonacci lattice on the upper hemisphere.
fn hemisphere_directions(n: usize) -> Vec<[f64; 3]> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

fn cmd_refl_map(a: ReflMapArgs) -> anyhow::Result<()> {
    if a.directions < MIN_DIRECTIONS {
        return Err(usage(format!(
            "--directions must be >= {MIN_DIRECTIONS}, got {}",
            a.directions
        )));
    }
    let cfg = DetectionConfig {
        delta: a.delta,
        p: a.prob,
        seed: a.shape.seed,
        ..DetectionConfig::with_delta(a.delta)
    };
    if let Err(e) = cfg.validate() {
        return Err(usage(e.to_string()));
    }
    let shape = load_shape(&a.shape)?;
    let map =
        reflection_distortion_map(&shape, &hemisphere_directions(a.directions), &cfg, a.exact)?;
    let mut csv = String::from("nx,ny,nz,distortion\n");
    for (n, d) in map {
        let _ = writeln!(csv, "{:.6},{:.6},{:.6},{:.6}", n[0], n[1], n[2], d);
    }
    std::fs::write(&a.out, csv).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} directions to {}", a.directions, a.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hemisphere_is_unit_and_upper() {
        let d = hemisphere_directions(500);
        assert!(d.iter().all(|v| v[2] > 0.0
            && ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn truncation_parses() {
        assert_eq!("auto".parse::<Truncation>(), Ok(Truncation::Auto));
        assert_eq!("0.5".parse::<Truncation>(), Ok(Truncation::Fixed(0.5)));
        assert!("-1".parse::<Truncation>().is_err());
    }
}
