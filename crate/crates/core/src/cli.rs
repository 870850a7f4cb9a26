// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. The binary is a thin wrapper around [`run`].
//!
//! Exit codes: 0 success, 2 usage, 3 format or i/o, 4 numeric (including
//! benchmark result mismatches), 5 memory cap exceeded.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, Workload};
use crate::error::{Error, Result};
use crate::filters::{self, ExecConfig};
use crate::kernels::{gaussian_kernel, GaussianParams, SigmaRPolicy, DEFAULT_SIGMA_R_FLOOR};
use crate::melt::{melt_with_cap, OperatorSpec, PaddingMode, DEFAULT_MEMORY_CAP};
use crate::tensor::{export_pgm, import_pgm, read_tensor, write_tensor, DenseTensor};

#[derive(Debug, Parser)]
#[command(name = "melt-tensor", version, about = "Melt-matrix tensor filters, curvature and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print rank, shape and value summary of a tensor file
    Info(InfoArgs),
    /// Report the melt matrix dimensions for an operator
    Melt(MeltArgs),
    /// Gaussian or bilateral filtering
    Filter(FilterArgs),
    /// Gaussian curvature, native n-D or stacked 2-D slices
    Curvature(CurvatureArgs),
    /// Time element-wise, vector-wise and broadcast kernel application (CSV on stdout)
    BenchParadigms(BenchParadigmsArgs),
    /// Time the row-parallel executor for 1..=max-workers (CSV on stdout)
    BenchParallel(BenchParallelArgs),
}

#[derive(Debug, Args)]
struct InfoArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PaddingArg {
    Valid,
    Zero,
    Reflect,
}

impl From<PaddingArg> for PaddingMode {
    fn from(p: PaddingArg) -> Self {
        match p {
            PaddingArg::Valid => PaddingMode::Valid,
            PaddingArg::Zero => PaddingMode::SameZero,
            PaddingArg::Reflect => PaddingMode::SameReflect,
        }
    }
}

#[derive(Debug, Args)]
struct WindowArgs {
    /// Odd window extent per axis; a single value applies to every axis
    #[arg(long, value_delimiter = ',', default_value = "3")]
    extent: Vec<usize>,
    /// Stride per axis; a single value applies to every axis
    #[arg(long, value_delimiter = ',', default_value = "1")]
    stride: Vec<usize>,
    #[arg(long, value_enum, default_value = "reflect")]
    padding: PaddingArg,
    /// Largest melt matrix allowed, in bytes
    #[arg(long, default_value_t = DEFAULT_MEMORY_CAP)]
    memory_cap: u64,
}

impl WindowArgs {
    fn operator(&self, rank: usize) -> Result<OperatorSpec> {
        OperatorSpec::new(
            broadcast(&self.extent, rank, "--extent")?,
            broadcast(&self.stride, rank, "--stride")?,
            self.padding.into(),
        )
    }
}

#[derive(Debug, Args)]
struct MeltArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterKind {
    Gaussian,
    Bilateral,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output path; `.pgm` writes an 8-bit image, anything else MELT1
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: FilterKind,
    #[command(flatten)]
    window: WindowArgs,
    /// Spatial standard deviation per axis, or a MELT1 file holding the full covariance
    #[arg(long)]
    sigma_d: Option<String>,
    /// Range deviation: a positive number, `adaptive` or `adaptive:FLOOR`
    #[arg(long, default_value = "adaptive")]
    sigma_r: String,
    /// Worker count; defaults to the available parallelism
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CurvatureMode {
    Native,
    Stacked2d,
}

#[derive(Debug, Args)]
struct CurvatureArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Grid step per axis; a single value applies to every axis
    #[arg(long, value_delimiter = ',', default_value = "1")]
    spacing: Vec<f64>,
    #[arg(long, value_enum, default_value = "native")]
    mode: CurvatureMode,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MEMORY_CAP)]
    memory_cap: u64,
}

#[derive(Debug, Args)]
struct WorkloadArgs {
    /// Tensor extents; a single value gives a cube
    #[arg(long, value_delimiter = ',', default_value = "64")]
    size: Vec<usize>,
    #[arg(long, default_value_t = bench::DEFAULT_EXTENT)]
    extent: usize,
    #[arg(long, default_value_t = bench::DEFAULT_REPETITIONS)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MEMORY_CAP)]
    memory_cap: u64,
}

impl WorkloadArgs {
    fn workload(&self) -> Result<Workload> {
        let dims = if self.size.len() == 1 {
            vec![self.size[0]; 3]
        } else {
            self.size.clone()
        };
        Workload::gaussian(&dims, self.extent, self.seed, self.memory_cap)
    }
}

#[derive(Debug, Args)]
struct BenchParadigmsArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
}

#[derive(Debug, Args)]
struct BenchParallelArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    #[arg(long, default_value_t = 4)]
    max_workers: usize,
}

fn broadcast<T: Copy>(values: &[T], rank: usize, flag: &str) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; rank]),
        n if n == rank => Ok(values.to_vec()),
        n => Err(Error::Shape(format!("{flag} has {n} values for a rank-{rank} input"))),
    }
}

fn parse_sigma_r(s: &str) -> Result<SigmaRPolicy> {
    let bad = || Error::Param(format!("--sigma-r expects a number, adaptive or adaptive:FLOOR, got {s:?}"));
    if let Some(rest) = s.strip_prefix("adaptive") {
        let floor = match rest.strip_prefix(':') {
            Some(f) => f.parse().map_err(|_| bad())?,
            None if rest.is_empty() => DEFAULT_SIGMA_R_FLOOR,
            None => return Err(bad()),
        };
        SigmaRPolicy::adaptive(floor)
    } else {
        SigmaRPolicy::constant(s.parse().map_err(|_| bad())?)
    }
}

fn parse_sigma_d(arg: Option<&str>, op: &OperatorSpec) -> Result<GaussianParams> {
    let Some(arg) = arg else {
        return Ok(GaussianParams::default_spatial(op));
    };
    let rank = op.rank();
    let parsed: std::result::Result<Vec<f64>, _> = arg.split(',').map(str::parse::<f64>).collect();
    match parsed {
        Ok(sigmas) => {
            let sigmas = broadcast(&sigmas, rank, "--sigma-d")?;
            if sigmas.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::Param("--sigma-d values must be positive".into()));
            }
            let variances: Vec<f64> = sigmas.iter().map(|s| s * s).collect();
            GaussianParams::centered_diagonal(&variances)
        }
        Err(_) => {
            let cov = load_tensor(Path::new(arg))?;
            if cov.shape().dims() != [rank, rank] {
                return Err(Error::Shape(format!(
                    "covariance file has shape {}, expected {rank}x{rank}",
                    cov.shape()
                )));
            }
            GaussianParams::new(vec![0.0; rank], cov.into_data())
        }
    }
}

/// Loads MELT1 or binary PGM, chosen by the leading bytes.
pub fn load_tensor(path: &Path) -> Result<DenseTensor> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(&crate::tensor::MAGIC) {
        read_tensor(bytes.as_slice())
    } else if bytes.first() == Some(&b'P') {
        import_pgm(bytes.as_slice())
    } else {
        Err(Error::Format(format!("{} is neither MELT1 nor PGM", path.display())))
    }
}

/// Saves as PGM when the extension is `.pgm`, MELT1 otherwise.
pub fn save_tensor(t: &DenseTensor, path: &Path) -> Result<()> {
    let mut sink = BufWriter::new(File::create(path)?);
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        export_pgm(t, 255, &mut sink)
    } else {
        write_tensor(t, &mut sink)
    }
}

/// Rejects outputs that cannot be created before any work is done.
fn check_output_path(path: &Path) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::Param("--output must not be empty".into()));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("output directory {} does not exist", dir.display()),
        ))),
        _ => Ok(()),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Shape(_) | Error::Param(_) | Error::Partition(_) => 2,
        Error::Format(_) | Error::Io(_) | Error::Index(_) | Error::Data(_) => 3,
        Error::Numeric { .. } | Error::Mismatch(_) => 4,
        Error::MemoryCap { .. } => 5,
    }
}

fn info(args: &InfoArgs, out: &mut dyn Write) -> Result<()> {
    let t = load_tensor(&args.input)?;
    writeln!(
        out,
        "rank={} shape={} count={} min={} max={} mean={}",
        t.rank(),
        t.shape(),
        t.len(),
        t.min(),
        t.max(),
        t.mean()
    )?;
    Ok(())
}

fn melt_cmd(args: &MeltArgs, out: &mut dyn Write) -> Result<()> {
    let t = load_tensor(&args.input)?;
    let op = args.window.operator(t.rank())?;
    let m = melt_with_cap(&t, &op, args.window.memory_cap)?;
    writeln!(
        out,
        "rows={} cols={} grid={} source={} bytes={}",
        m.rows(),
        m.cols(),
        m.grid_shape(),
        m.source_shape(),
        m.data().len() * 8
    )?;
    Ok(())
}

fn filter_cmd(args: &FilterArgs, err: &mut dyn Write) -> Result<()> {
    let policy = parse_sigma_r(&args.sigma_r)?;
    check_output_path(&args.output)?;
    let t = load_tensor(&args.input)?;
    let op = args.window.operator(t.rank())?;
    let spatial = parse_sigma_d(args.sigma_d.as_deref(), &op)?;
    let cfg = ExecConfig {
        workers: args.workers.unwrap_or_else(default_workers).max(1),
        memory_cap: args.window.memory_cap,
    };
    let start = Instant::now();
    let result = match args.kind {
        FilterKind::Gaussian => {
            let kernel = gaussian_kernel(&op, &spatial)?;
            filters::convolve_global_with(&t, &op, &kernel, &cfg)?
        }
        FilterKind::Bilateral => filters::bilateral_filter_with(&t, &op, &spatial, policy, &cfg)?,
    };
    let elapsed = start.elapsed();
    save_tensor(&result, &args.output)?;
    writeln!(
        err,
        "grid={} elapsed_ms={:.3}",
        result.shape(),
        elapsed.as_secs_f64() * 1e3
    )?;
    Ok(())
}

fn curvature_cmd(args: &CurvatureArgs, err: &mut dyn Write) -> Result<()> {
    check_output_path(&args.output)?;
    let t = load_tensor(&args.input)?;
    let cfg = ExecConfig {
        workers: args.workers.unwrap_or_else(default_workers).max(1),
        memory_cap: args.memory_cap,
    };
    let start = Instant::now();
    let field = match args.mode {
        CurvatureMode::Native => {
            let spacing = broadcast(&args.spacing, t.rank(), "--spacing")?;
            filters::gaussian_curvature_with(&t, &spacing, &cfg)?
        }
        CurvatureMode::Stacked2d => {
            let spacing = broadcast(&args.spacing, 2, "--spacing")?;
            filters::stacked_2d_curvature(&t, &spacing)?
        }
    };
    let elapsed = start.elapsed();
    save_tensor(&field.tensor, &args.output)?;
    writeln!(
        err,
        "grid={} elapsed_ms={:.3}",
        field.tensor.shape(),
        elapsed.as_secs_f64() * 1e3
    )?;
    Ok(())
}

fn bench_paradigms_cmd(args: &BenchParadigmsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let w = args.workload.workload()?;
    let records = bench::bench_paradigms(&w, args.workload.repetitions)?;
    bench::write_csv(&records, out)?;
    writeln!(err, "{}", bench::paradigm_summary(&records))?;
    Ok(())
}

fn bench_parallel_cmd(args: &BenchParallelArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let w = args.workload.workload()?;
    let records = bench::bench_parallel(&w, args.max_workers, args.workload.repetitions)?;
    bench::write_csv(&records, out)?;
    writeln!(err, "{}", bench::parallel_summary(&records))?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Info(a) => info(a, out),
        Command::Melt(a) => melt_cmd(a, out),
        Command::Filter(a) => filter_cmd(a, err),
        Command::Curvature(a) => curvature_cmd(a, err),
        Command::BenchParadigms(a) => bench_paradigms_cmd(a, out, err),
        Command::BenchParallel(a) => bench_parallel_cmd(a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(err, "error[{code}]: {e}");
            code
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    run_with(args, &mut out, &mut err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_r_parsing() {
        assert_eq!(parse_sigma_r("0.5").unwrap(), SigmaRPolicy::Constant(0.5));
        assert_eq!(parse_sigma_r("1e9").unwrap(), SigmaRPolicy::Constant(1e9));
        assert_eq!(
            parse_sigma_r("adaptive").unwrap(),
            SigmaRPolicy::Adaptive { floor: DEFAULT_SIGMA_R_FLOOR }
        );
        assert_eq!(parse_sigma_r("adaptive:0.01").unwrap(), SigmaRPolicy::Adaptive { floor: 0.01 });
        for bad in ["adaptivex", "adaptive:", "-1", "0", "abc"] {
            assert!(parse_sigma_r(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn sigma_d_parsing() {
        let op = OperatorSpec::cube(2, 5, PaddingMode::SameReflect).unwrap();
        assert_eq!(parse_sigma_d(None, &op).unwrap(), GaussianParams::default_spatial(&op));
        let p = parse_sigma_d(Some("2"), &op).unwrap();
        assert_eq!(p.covariance(), &[4.0, 0.0, 0.0, 4.0]);
        let p = parse_sigma_d(Some("1,3"), &op).unwrap();
        assert_eq!(p.covariance(), &[1.0, 0.0, 0.0, 9.0]);
        assert!(parse_sigma_d(Some("1,2,3"), &op).is_err());
        assert!(parse_sigma_d(Some("0"), &op).is_err());
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code(&Error::Shape(String::new())), 2);
        assert_eq!(exit_code(&Error::Format(String::new())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::ErrorKind::NotFound.into())), 3);
        assert_eq!(exit_code(&Error::Numeric { index: vec![], detail: String::new() }), 4);
        assert_eq!(exit_code(&Error::Mismatch(String::new())), 4);
        assert_eq!(exit_code(&Error::MemoryCap { requested: 2, cap: 1 }), 5);
    }
}
