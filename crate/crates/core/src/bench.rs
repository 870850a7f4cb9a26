// SPDX-License-Identifier: Apache-2.0

//! Benchmark harness for applying a Gaussian kernel to a melt matrix.
//!
//! Two experiments are provided: the same weighted row sums written in
//! three iteration styles, and the row-parallel executor at increasing
//! worker counts. Both check that every variant produces the same numbers
//! before any timing is recorded, and refuse to report timings otherwise.
//!
//! Records serialize as CSV with the fixed header
//! `paradigm,workers,repetition,nanos`.

use std::fmt::Write as _;
use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fixtures::random_tensor;
use crate::kernels::{dot, gaussian_kernel, GaussianParams, KernelVector};
use crate::melt::{melt_with_cap, MeltMatrix, OperatorSpec, PaddingMode};
use crate::partition::parallel_map_rows;

pub const DEFAULT_REPETITIONS: usize = 20;
pub const DEFAULT_SIZE: usize = 64;
pub const DEFAULT_EXTENT: usize = 3;
pub const CSV_HEADER: &str = "paradigm,workers,repetition,nanos";

/// Paradigm outputs must agree to this before timings are reported.
pub const PARADIGM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Paradigm {
    ElementWise,
    VectorWise,
    MatBroadcast,
    Parallel,
}

impl Paradigm {
    pub const SERIAL: [Paradigm; 3] = [Paradigm::ElementWise, Paradigm::VectorWise, Paradigm::MatBroadcast];

    pub fn label(self) -> &'static str {
        match self {
            Paradigm::ElementWise => "ELEMENT_WISE",
            Paradigm::VectorWise => "VECTOR_WISE",
            Paradigm::MatBroadcast => "MAT_BROADCAST",
            Paradigm::Parallel => "PARALLEL",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [Paradigm::ElementWise, Paradigm::VectorWise, Paradigm::MatBroadcast, Paradigm::Parallel]
            .into_iter()
            .find(|p| p.label() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    pub paradigm: Paradigm,
    pub workers: usize,
    /// 1-based.
    pub repetition: usize,
    pub nanos: u64,
}

/// A melt matrix of a seeded random tensor plus a normalized Gaussian
/// kernel over its window.
#[derive(Debug, Clone)]
pub struct Workload {
    pub melt: MeltMatrix,
    pub kernel: KernelVector,
}

impl Workload {
    pub fn gaussian(dims: &[usize], extent: usize, seed: u64, memory_cap: u64) -> Result<Self> {
        let t = random_tensor(dims, seed)?;
        let op = OperatorSpec::cube(dims.len(), extent, PaddingMode::SameReflect)?;
        let kernel = gaussian_kernel(&op, &GaussianParams::default_spatial(&op))?;
        let melt = melt_with_cap(&t, &op, memory_cap)?;
        Ok(Workload { melt, kernel })
    }
}

/// Visits the matrix one element at a time by flat index, splitting each
/// index into (row, column) and accumulating into the row's output slot.
pub fn element_wise(m: &MeltMatrix, k: &KernelVector) -> Result<Vec<f64>> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut out = vec![0.0; rows];
    for e in 0..rows * cols {
        let (r, c) = (e / cols, e % cols);
        out[r] += m.get(r, c)? * k.weights[c];
    }
    Ok(out)
}

/// One dot product per row.
pub fn vector_wise(m: &MeltMatrix, k: &KernelVector) -> Vec<f64> {
    m.iter_rows().map(|row| dot(&k.weights, row)).collect()
}

/// Whole-matrix product: the matrix is viewed as an array of fixed-width
/// rows and the kernel applied across it in one sweep. Widths of the usual
/// cubic windows are monomorphized; others take a 4-row tile. Each row still
/// accumulates its columns in order, so results equal [`vector_wise`] bit
/// for bit.
pub fn mat_broadcast(m: &MeltMatrix, k: &KernelVector) -> Vec<f64> {
    let w = &k.weights[..m.cols()];
    let d = m.data();
    match m.cols() {
        3 => sweep::<3>(d, w),
        5 => sweep::<5>(d, w),
        7 => sweep::<7>(d, w),
        9 => sweep::<9>(d, w),
        25 => sweep::<25>(d, w),
        27 => sweep::<27>(d, w),
        49 => sweep::<49>(d, w),
        81 => sweep::<81>(d, w),
        125 => sweep::<125>(d, w),
        _ => sweep_tiled(d, w),
    }
}

fn sweep<const N: usize>(data: &[f64], w: &[f64]) -> Vec<f64> {
    let w: &[f64; N] = w.try_into().expect("kernel width equals column count");
    let (rows, _) = data.as_chunks::<N>();
    rows.iter()
        .map(|row| {
            let mut acc = 0.0;
            for c in 0..N {
                acc += w[c] * row[c];
            }
            acc
        })
        .collect()
}

const TILE: usize = 4;

fn sweep_tiled(data: &[f64], w: &[f64]) -> Vec<f64> {
    let cols = w.len();
    let mut out = vec![0.0; data.len() / cols];
    let mut tiles = data.chunks_exact(TILE * cols);
    let mut out_tiles = out.chunks_exact_mut(TILE);
    for (block, dst) in (&mut tiles).zip(&mut out_tiles) {
        let rows: [&[f64]; TILE] = std::array::from_fn(|i| &block[i * cols..(i + 1) * cols]);
        let mut acc = [0.0f64; TILE];
        for (c, &wc) in w.iter().enumerate() {
            for i in 0..TILE {
                acc[i] += wc * rows[i][c];
            }
        }
        dst.copy_from_slice(&acc);
    }
    for (row, dst) in tiles.remainder().chunks_exact(cols).zip(out_tiles.into_remainder()) {
        *dst = dot(w, row);
    }
    out
}

/// Fails with [`Error::Mismatch`] when `candidate` differs from `reference`
/// by more than `tol` anywhere.
pub fn ensure_close(reference: &[f64], candidate: &[f64], tol: f64, label: &str) -> Result<()> {
    if reference.len() != candidate.len() {
        return Err(Error::Mismatch(format!(
            "{label}: {} values against {}",
            candidate.len(),
            reference.len()
        )));
    }
    let worst = reference
        .iter()
        .zip(candidate)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst > tol || reference.iter().zip(candidate).any(|(a, b)| a.is_nan() != b.is_nan()) {
        return Err(Error::Mismatch(format!(
            "{label}: max abs difference {worst:e} exceeds {tol:e}"
        )));
    }
    Ok(())
}

fn ensure_bitwise(reference: &[f64], candidate: &[f64], label: &str) -> Result<()> {
    let same = reference.len() == candidate.len()
        && reference.iter().zip(candidate).all(|(a, b)| a.to_bits() == b.to_bits());
    if !same {
        return Err(Error::Mismatch(format!("{label}: output is not bitwise identical")));
    }
    Ok(())
}

fn run_paradigm(p: Paradigm, w: &Workload) -> Result<Vec<f64>> {
    Ok(match p {
        Paradigm::ElementWise => element_wise(&w.melt, &w.kernel)?,
        Paradigm::VectorWise => vector_wise(&w.melt, &w.kernel),
        Paradigm::MatBroadcast => mat_broadcast(&w.melt, &w.kernel),
        Paradigm::Parallel => parallel_map_rows(&w.melt, |r| dot(&w.kernel.weights, r), 1)?.0,
    })
}

/// Times the three serial paradigms, `repetitions` runs each, interleaved.
/// The element-wise result is the reference all others must match.
pub fn bench_paradigms(w: &Workload, repetitions: usize) -> Result<Vec<BenchRecord>> {
    let reference = element_wise(&w.melt, &w.kernel)?;
    for p in [Paradigm::VectorWise, Paradigm::MatBroadcast] {
        ensure_close(&reference, &run_paradigm(p, w)?, PARADIGM_TOLERANCE, p.label())?;
    }
    let mut records = Vec::with_capacity(repetitions * 3);
    for rep in 1..=repetitions {
        for p in Paradigm::SERIAL {
            let t = Instant::now();
            black_box(run_paradigm(p, black_box(w))?);
            records.push(BenchRecord {
                paradigm: p,
                workers: 1,
                repetition: rep,
                nanos: t.elapsed().as_nanos() as u64,
            });
        }
    }
    Ok(records)
}

pub fn bench_parallel(w: &Workload, max_workers: usize, repetitions: usize) -> Result<Vec<BenchRecord>> {
    bench_parallel_rows(&w.melt, |r| dot(&w.kernel.weights, r), max_workers, repetitions)
}

/// Times [`parallel_map_rows`] for 1..=`max_workers` workers. Recorded
/// durations are the slowest block's compute time, so partitioning,
/// allocation and thread start-up are excluded. Every worker count must
/// first reproduce the single-worker output bitwise.
pub fn bench_parallel_rows<F>(
    m: &MeltMatrix,
    rowfn: F,
    max_workers: usize,
    repetitions: usize,
) -> Result<Vec<BenchRecord>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if max_workers == 0 {
        return Err(Error::Partition("max workers must be positive".into()));
    }
    let (reference, _) = parallel_map_rows(m, &rowfn, 1)?;
    for workers in 1..=max_workers {
        let (out, _) = parallel_map_rows(m, &rowfn, workers)?;
        ensure_bitwise(&reference, &out, &format!("{workers} workers"))?;
    }
    let mut records = Vec::with_capacity(repetitions * max_workers);
    for rep in 1..=repetitions {
        for workers in 1..=max_workers {
            let (out, report) = parallel_map_rows(m, &rowfn, workers)?;
            black_box(out);
            records.push(BenchRecord {
                paradigm: Paradigm::Parallel,
                workers,
                repetition: rep,
                nanos: report.compute_nanos(),
            });
        }
    }
    Ok(records)
}

pub fn write_csv<W: Write>(records: &[BenchRecord], mut sink: W) -> Result<()> {
    let mut text = String::with_capacity(32 * (records.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in records {
        let _ = writeln!(text, "{},{},{},{}", r.paradigm.label(), r.workers, r.repetition, r.nanos);
    }
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// Median duration of the matching records (lower median for even counts).
pub fn median_nanos(records: &[BenchRecord], paradigm: Paradigm, workers: usize) -> Option<u64> {
    let mut v: Vec<u64> = records
        .iter()
        .filter(|r| r.paradigm == paradigm && r.workers == workers)
        .map(|r| r.nanos)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

/// Human-readable medians and speedups for a paradigm run.
pub fn paradigm_summary(records: &[BenchRecord]) -> String {
    let med = |p| median_nanos(records, p, 1).unwrap_or(0);
    let (e, v, b) = (med(Paradigm::ElementWise), med(Paradigm::VectorWise), med(Paradigm::MatBroadcast));
    let ratio = |num: u64, den: u64| num as f64 / den.max(1) as f64;
    format!(
        "median ns: ELEMENT_WISE={e} VECTOR_WISE={v} MAT_BROADCAST={b}\n\
         speedup: vector/element={:.2}x broadcast/vector={:.2}x broadcast/element={:.2}x\n\
         ordering broadcast <= vector <= element: {}",
        ratio(e, v),
        ratio(v, b),
        ratio(e, b),
        if b <= v && v <= e { "yes" } else { "no" }
    )
}

/// Median per worker count and whether the medians decline monotonically.
pub fn parallel_summary(records: &[BenchRecord]) -> String {
    let mut workers: Vec<usize> = records.iter().map(|r| r.workers).collect();
    workers.sort_unstable();
    workers.dedup();
    let medians: Vec<u64> = workers
        .iter()
        .map(|&w| median_nanos(records, Paradigm::Parallel, w).unwrap_or(0))
        .collect();
    let mut s = String::from("median ns by workers:");
    for (w, m) in workers.iter().zip(&medians) {
        let _ = write!(s, " {w}={m}");
    }
    let monotone = medians.windows(2).all(|p| p[1] <= p[0]);
    let _ = write!(s, "\nmonotone decline: {}", if monotone { "yes" } else { "no" });
    s
}
