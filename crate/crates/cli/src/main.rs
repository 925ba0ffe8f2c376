//! `tfem`: sweeps, mesh utilities and system dumps.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tfem_core::assembly::{assemble_fem, assemble_tfem, JacobianMode, TfemOptions};
use tfem_core::experiment::{emit_plot_data, parse_d_values, run_experiment, ExperimentConfig, MeshSource, Method};
use tfem_core::mesh::{load_mesh, save_mesh, validate_mesh, BoundarySpec, ExactSolution, Family, Mesh};
use tfem_core::tangle::{classify_mesh, extract_fold_surface};
use tfem_core::MeshError;

#[derive(Parser)]
#[command(name = "tfem", version, about = "Tangled finite elements for Laplace problems on hex meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a mesh family over d and write one CSV row per (d, method).
    Run(RunArgs),
    /// Generate, check or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Write the unreduced K, C̃ and f of one mesh as JSON triplets.
    DumpSystem(DumpArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_family, required_unless_present = "mesh")]
    family: Option<Family>,
    /// Mesh file to use instead of a generated family.
    #[arg(long, conflicts_with = "family")]
    mesh: Option<PathBuf>,
    /// `lo:hi:step` or a comma-separated list.
    #[arg(long, value_parser = parse_d, default_value = "0.3")]
    d: DValues,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "fem_signed,tfem")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 7)]
    depth: u32,
    /// Fold samples per concave element.
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[arg(long, default_value_t = 2)]
    gauss: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-family `d max_rel_error` series.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Write zero wall times so reruns produce identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct MeshSelect {
    #[arg(long, value_parser = parse_family, required_unless_present = "mesh")]
    family: Option<Family>,
    #[arg(long, default_value_t = 0.3)]
    d: f64,
    #[arg(long, conflicts_with = "family")]
    mesh: Option<PathBuf>,
}

impl MeshSelect {
    fn load(&self) -> Result<Mesh> {
        match (&self.mesh, self.family) {
            (Some(path), _) => load_mesh(path).with_context(|| format!("loading {}", path.display())),
            (None, Some(f)) => Ok(f.generate(self.d)?),
            (None, None) => bail!("either --family or --mesh is required"),
        }
    }
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write a benchmark mesh as JSON.
    Gen {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a mesh file and list its concave elements.
    Validate { path: PathBuf },
    /// Triangulate the detJ = 0 surface of concave elements, one triangle
    /// (9 reals) per line.
    FoldSurface {
        #[command(flatten)]
        select: MeshSelect,
        /// Element index (0-based); all concave elements when omitted.
        #[arg(long)]
        element: Option<usize>,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    select: MeshSelect,
    #[arg(long, value_parser = parse_method, default_value = "tfem")]
    method: Method,
    #[arg(long, default_value_t = 5)]
    depth: u32,
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[arg(long, default_value_t = 2)]
    gauss: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct DValues(Vec<f64>);

fn parse_d(s: &str) -> Result<DValues, String> {
    parse_d_values(s).map(DValues)
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let source = match (&args.mesh, args.family) {
        (Some(path), _) => MeshSource::File(path.clone()),
        (None, Some(f)) => MeshSource::Family(f),
        (None, None) => bail!("either --family or --mesh is required"),
    };
    let config = ExperimentConfig {
        depth: args.depth,
        constraint_samples: args.samples,
        gauss_order: args.gauss,
        seed: args.seed,
        output: args.out.clone(),
        record_timing: !args.no_timing,
        ..ExperimentConfig::new(source, args.d.0.clone(), args.methods.clone())
    };
    let reports = run_experiment(&config)?;
    println!(
        "{:<11} {:>6} {:<10} {:>5} {:>4} {:>3} {:>12} {:>12} {:>10} {:>9}",
        "family", "d", "method", "depth", "dofs", "m", "max_rel", "mean_rel", "residual", "time_s"
    );
    let mut failures = 0;
    for r in &reports {
        let d = r.d.map(|d| format!("{d}")).unwrap_or_else(|| "-".into());
        match &r.error_code {
            Some(code) => {
                failures += 1;
                println!("{:<11} {:>6} {:<10} failed: {code}", r.family, d, r.method);
            }
            None => println!(
                "{:<11} {:>6} {:<10} {:>5} {:>4} {:>3} {:>12.3e} {:>12.3e} {:>10.1e} {:>9.3}",
                r.family,
                d,
                r.method,
                r.depth,
                r.dofs,
                r.constraints,
                r.max_rel_error,
                r.mean_rel_error,
                r.solve_residual,
                r.wall_time_s
            ),
        }
        for w in &r.warnings {
            eprintln!("warning: {} d={} {}: {w}", r.family, d, r.method);
        }
    }
    if let Some(dir) = &args.plot_dir {
        for path in emit_plot_data(&reports, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(if failures > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn validate(path: &PathBuf) -> Result<ExitCode> {
    match load_mesh(path) {
        Ok(mesh) => {
            debug_assert!(validate_mesh(&mesh).is_empty());
            let classes = classify_mesh(&mesh)?;
            let concave: Vec<usize> = (0..classes.len()).filter(|&e| classes[e].is_concave()).collect();
            println!(
                "valid: {} nodes, {} elements, concave elements {:?}",
                mesh.nodes.len(),
                mesh.elements.len(),
                concave
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(MeshError::Invalid(violations)) => {
            for v in &violations {
                println!("{v}");
            }
            println!("{} violation(s)", violations.len());
            Ok(ExitCode::FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn fold_surface(select: &MeshSelect, element: Option<usize>, resolution: usize, out: Option<&PathBuf>) -> Result<()> {
    let mesh = select.load()?;
    let elements: Vec<usize> = match element {
        Some(e) if e < mesh.elements.len() => vec![e],
        Some(e) => bail!("element {e} out of range (mesh has {})", mesh.elements.len()),
        None => {
            let classes = classify_mesh(&mesh)?;
            (0..classes.len()).filter(|&e| classes[e].is_concave()).collect()
        }
    };
    let mut text = String::new();
    for e in elements {
        let s = extract_fold_surface(&mesh, e, resolution)?;
        eprintln!("element {e}: {} triangles", s.triangles.len());
        text.push_str(&s.to_text());
    }
    write_or_print(out, &text)
}

fn dump(args: &DumpArgs) -> Result<()> {
    let mesh = args.select.load()?;
    let bc = BoundarySpec::left_dirichlet(&mesh);
    let exact = ExactSolution::benchmark();
    let sys = match args.method {
        Method::FemSigned => assemble_fem(&mesh, &bc, &exact, JacobianMode::Signed, args.gauss)?,
        Method::FemAbs => assemble_fem(&mesh, &bc, &exact, JacobianMode::Absolute, args.gauss)?,
        Method::Tfem => {
            let opts = TfemOptions {
                depth: args.depth,
                gauss_order: args.gauss,
                samples: args.samples,
                seed: args.seed,
                ..TfemOptions::default()
            };
            assemble_tfem(&mesh, &bc, &exact, &opts)?
        }
    };
    for w in &sys.warnings {
        eprintln!("warning: {w}");
    }
    let text = serde_json::to_string_pretty(&sys.to_json())? + "\n";
    write_or_print(args.out.as_ref(), &text)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Mesh(MeshCommand::Gen { family, d, out }) => {
            save_mesh(&family.generate(d)?, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Mesh(MeshCommand::Validate { path }) => validate(&path),
        Command::Mesh(MeshCommand::FoldSurface {
            select,
            element,
            resolution,
            out,
        }) => {
            fold_surface(&select, element, resolution, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpSystem(args) => {
            dump(&args)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
