//! Parameter sweeps comparing the baseline and tangled solvers.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_fem, assemble_tfem, solve_system, JacobianMode, TfemOptions};
use crate::error::{Error, Result};
use crate::mesh::{load_mesh, BoundarySpec, ExactSolution, Family, Mesh};

/// Guard on the denominator of the relative error.
pub const ERROR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FemSigned,
    FemAbs,
    Tfem,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FemSigned => "fem_signed",
            Method::FemAbs => "fem_abs",
            Method::Tfem => "tfem",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fem_signed" | "fem-signed" => Ok(Method::FemSigned),
            "fem_abs" | "fem-abs" => Ok(Method::FemAbs),
            "tfem" => Ok(Method::Tfem),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

/// Where the meshes of a sweep come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Family(Family),
    /// A single mesh; `d_values` are ignored.
    File(PathBuf),
}

impl MeshSource {
    pub fn name(&self) -> &str {
        match self {
            MeshSource::Family(f) => f.name(),
            MeshSource::File(_) => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: MeshSource,
    pub d_values: Vec<f64>,
    pub methods: Vec<Method>,
    pub depth: u32,
    pub constraint_samples: usize,
    pub gauss_order: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// When false, `wall_time_s` is written as 0 so that reruns are
    /// byte-identical.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(source: MeshSource, d_values: Vec<f64>, methods: Vec<Method>) -> Self {
        let t = TfemOptions::default();
        ExperimentConfig {
            source,
            d_values,
            methods,
            depth: t.depth,
            constraint_samples: t.samples,
            gauss_order: t.gauss_order,
            seed: t.seed,
            output: None,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=9).contains(&self.depth) {
            return Err(Error::Precondition(format!("depth {} outside [3, 9]", self.depth)));
        }
        if self.methods.is_empty() {
            return Err(Error::Precondition("no methods selected".into()));
        }
        if let MeshSource::Family(f) = self.source {
            if self.d_values.is_empty() {
                return Err(Error::Precondition("no d values".into()));
            }
            let (lo, hi) = f.d_range();
            if let Some(d) = self.d_values.iter().find(|&&d| !(d > lo && d <= hi)) {
                return Err(Error::Precondition(format!("d = {d} outside ({lo}, {hi}] for {f}")));
            }
        }
        Ok(())
    }

    pub fn tfem_options(&self) -> TfemOptions {
        TfemOptions {
            depth: self.depth,
            gauss_order: self.gauss_order,
            samples: self.constraint_samples,
            seed: self.seed,
            ..TfemOptions::default()
        }
    }
}

/// One row of a sweep. Failed runs carry `error_code` and NaN metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub family: String,
    pub d: Option<f64>,
    pub method: Method,
    pub depth: u32,
    pub dofs: usize,
    pub constraints: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub solve_residual: f64,
    pub wall_time_s: f64,
    pub error_code: Option<String>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "family",
    "d",
    "method",
    "depth",
    "dofs",
    "constraints",
    "max_rel_error",
    "mean_rel_error",
    "solve_residual",
    "wall_time_s",
    "error_code",
];

/// Max and mean over all nodes of `|u_ex − û| / max(|u_ex|, 1e-12)`.
///
/// Panics if `u_hat` does not have one value per node.
pub fn compute_error(u_hat: &[f64], mesh: &Mesh, exact: &ExactSolution) -> (f64, f64) {
    assert_eq!(u_hat.len(), mesh.nodes.len(), "one value per node");
    if u_hat.is_empty() {
        return (0.0, 0.0);
    }
    let (mut max, mut sum) = (0.0f64, 0.0);
    for (i, u) in u_hat.iter().enumerate() {
        let ex = exact.value(&mesh.coords(i));
        let e = (ex - u).abs() / ex.abs().max(ERROR_FLOOR);
        max = max.max(e);
        sum += e;
    }
    (max, sum / u_hat.len() as f64)
}

/// Solves one mesh with one method.
pub fn run_single(mesh: &Mesh, method: Method, config: &ExperimentConfig) -> Result<ErrorReport> {
    let bc = BoundarySpec::left_dirichlet(mesh);
    let exact = ExactSolution::benchmark();
    let start = Instant::now();
    let sys = match method {
        Method::FemSigned => assemble_fem(mesh, &bc, &exact, JacobianMode::Signed, config.gauss_order)?,
        Method::FemAbs => assemble_fem(mesh, &bc, &exact, JacobianMode::Absolute, config.gauss_order)?,
        Method::Tfem => assemble_tfem(mesh, &bc, &exact, &config.tfem_options())?,
    };
    let sol = solve_system(&sys, mesh, &bc, &exact)?;
    let elapsed = start.elapsed().as_secs_f64();
    let (max_rel_error, mean_rel_error) = compute_error(&sol.u_hat, mesh, &exact);
    let mut warnings = sys.warnings;
    if sol.flagged {
        warnings.push(format!("solve residual {:e} above tolerance", sol.residual));
    }
    Ok(ErrorReport {
        family: config.source.name().to_string(),
        d: None,
        method,
        depth: config.depth,
        dofs: sol.dofs,
        constraints: sol.constraints,
        max_rel_error,
        mean_rel_error,
        solve_residual: sol.residual,
        wall_time_s: if config.record_timing { elapsed } else { 0.0 },
        error_code: None,
        warnings,
    })
}

fn failed(config: &ExperimentConfig, d: Option<f64>, method: Method, err: &Error) -> ErrorReport {
    ErrorReport {
        family: config.source.name().to_string(),
        d,
        method,
        depth: config.depth,
        dofs: 0,
        constraints: 0,
        max_rel_error: f64::NAN,
        mean_rel_error: f64::NAN,
        solve_residual: f64::NAN,
        wall_time_s: 0.0,
        error_code: Some(err.code().to_string()),
        warnings: vec![err.to_string()],
    }
}

/// Runs every `(d, method)` pair in config order. A failing run becomes a
/// row with an error code; the rest continue. Writes the CSV when
/// `config.output` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ErrorReport>> {
    config.validate()?;
    let meshes: Vec<(Option<f64>, Result<Mesh>)> = match &config.source {
        MeshSource::Family(f) => config
            .d_values
            .iter()
            .map(|&d| (Some(d), f.generate(d).map_err(Error::from)))
            .collect(),
        MeshSource::File(path) => vec![(None, load_mesh(path).map_err(Error::from))],
    };
    let mut reports = Vec::with_capacity(meshes.len() * config.methods.len());
    for (d, mesh) in &meshes {
        for &method in &config.methods {
            reports.push(match mesh {
                Ok(m) => run_single(m, method, config)
                    .map(|r| ErrorReport { d: *d, ..r })
                    .unwrap_or_else(|e| failed(config, *d, method, &e)),
                Err(e) => failed(config, *d, method, e),
            });
        }
    }
    if let Some(path) = &config.output {
        let file = fs::File::create(path)?;
        write_csv(&reports, file)?;
    }
    Ok(reports)
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

pub fn write_csv<W: Write>(reports: &[ErrorReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.family.clone(),
            r.d.map(|d| d.to_string()).unwrap_or_default(),
            r.method.to_string(),
            r.depth.to_string(),
            r.dofs.to_string(),
            r.constraints.to_string(),
            fmt_f64(r.max_rel_error),
            fmt_f64(r.mean_rel_error),
            fmt_f64(r.solve_residual),
            r.wall_time_s.to_string(),
            r.error_code.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<dir>/<family>.dat` per family: one block per method of
/// `d max_rel_error` lines sorted by `d`, blocks separated by two blank
/// lines. Failed runs are left out.
pub fn emit_plot_data(reports: &[ErrorReport], dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::Precondition("no reports to plot".into()));
    }
    fs::create_dir_all(dir)?;
    let mut families: Vec<&str> = reports.iter().map(|r| r.family.as_str()).collect();
    families.sort_unstable();
    families.dedup();
    let mut written = Vec::new();
    for family in families {
        let mut methods: Vec<Method> = reports.iter().filter(|r| r.family == family).map(|r| r.method).collect();
        methods.sort_unstable();
        methods.dedup();
        let mut text = String::new();
        for (k, method) in methods.iter().enumerate() {
            let mut series: Vec<(f64, f64)> = reports
                .iter()
                .filter(|r| r.family == family && r.method == *method && r.error_code.is_none())
                .map(|r| (r.d.unwrap_or(f64::NAN), r.max_rel_error))
                .collect();
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            if k > 0 {
                text.push_str("\n\n");
            }
            text.push_str(&format!("# {method}\n# d max_rel_error\n"));
            for (d, e) in series {
                text.push_str(&format!("{d} {e:e}\n"));
            }
        }
        let path = dir.join(format!("{family}.dat"));
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

/// Parses `lo:hi:step` (inclusive, rounded to the step's decimals) or a
/// comma-separated list.
pub fn parse_d_values(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"));
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || hi < lo {
                return Err(format!("bad range `{s}`"));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            let decimals = parts[2].trim().split('.').nth(1).map_or(0, str::len) as i32;
            let scale = 10f64.powi(decimals.max(parts[0].trim().split('.').nth(1).map_or(0, str::len) as i32));
            Ok((0..=n).map(|i| ((lo + i as f64 * step) * scale).round() / scale).collect())
        }
        _ => Err(format!("bad d specification `{s}`")),
    }
}
