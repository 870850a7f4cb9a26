// SPDX-License-Identifier: Apache-2.0

//! Row partitions of a melt matrix and a fork-join row executor.
//!
//! A partition `P = {P1, .., Ps}` of an `n`-row matrix is valid when
//!
//! 1. every block is nonempty and the block sizes add up to `n`,
//! 2. no row belongs to two blocks,
//! 3. stacking the blocks and applying an invertible reordering gives back
//!    the original rows. Here the reordering is always a permutation, and
//!    for contiguous blocks in order it is the identity.
//!
//! [`parallel_map_rows`] runs one worker per block of
//! [`partition_rows`]`(R, workers)`. Each worker writes only its own slice
//! of the output, so the result does not depend on scheduling.

use std::collections::BTreeSet;
use std::ops::Range;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::melt::MeltMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowPartition {
    total_rows: usize,
    blocks: Vec<Range<usize>>,
}

impl RowPartition {
    /// Wraps arbitrary blocks without checking them; see
    /// [`validate_partition`].
    pub fn from_blocks(total_rows: usize, blocks: Vec<Range<usize>>) -> Self {
        RowPartition { total_rows, blocks }
    }

    pub fn total_rows(&self) -> usize {
        self.total_rows
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Row indices in stacked order: entry `i` of the stacked blocks is row
    /// `permutation()[i]` of the original matrix.
    pub fn permutation(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| b.clone()).collect()
    }

    /// Undoes the stacking: `out[permutation[i]] = stacked[i]`.
    pub fn reassemble<T: Copy + Default>(&self, stacked: &[T]) -> Result<Vec<T>> {
        let perm = self.permutation();
        if stacked.len() != perm.len() {
            return Err(Error::Partition(format!(
                "{} stacked values for {} partitioned rows",
                stacked.len(),
                perm.len()
            )));
        }
        let mut out = vec![T::default(); self.total_rows];
        for (&row, &v) in perm.iter().zip(stacked) {
            if row >= self.total_rows {
                return Err(Error::Partition(format!("row {row} outside partition")));
            }
            out[row] = v;
        }
        Ok(out)
    }
}

/// Balanced contiguous split of `n` rows into `s` blocks: the first
/// `n mod s` blocks get one extra row.
pub fn partition_rows(n: usize, s: usize) -> Result<RowPartition> {
    if n == 0 {
        return Err(Error::Partition("cannot partition zero rows".into()));
    }
    if s == 0 || s > n {
        return Err(Error::Partition(format!(
            "block count {s} must be between 1 and {n}"
        )));
    }
    let base = n / s;
    let extra = n % s;
    let mut blocks = Vec::with_capacity(s);
    let mut start = 0;
    for i in 0..s {
        let len = base + usize::from(i < extra);
        blocks.push(start..start + len);
        start += len;
    }
    Ok(RowPartition {
        total_rows: n,
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyBlock { block: usize },
    SizeMismatch { sum: usize, total: usize },
    Overlap { first: usize, second: usize },
    OutOfRange { block: usize },
    Unassigned { row: usize },
}

impl Violation {
    /// Which of the three partition conditions this breaks.
    pub fn condition(&self) -> u8 {
        match self {
            Violation::EmptyBlock { .. } | Violation::SizeMismatch { .. } => 1,
            Violation::Overlap { .. } => 2,
            Violation::OutOfRange { .. } | Violation::Unassigned { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated_conditions(&self) -> BTreeSet<u8> {
        self.violations.iter().map(Violation::condition).collect()
    }
}

pub fn validate_partition(p: &RowPartition) -> Verdict {
    let mut violations = Vec::new();
    let n = p.total_rows;

    let mut sum = 0usize;
    for (i, b) in p.blocks.iter().enumerate() {
        if b.is_empty() {
            violations.push(Violation::EmptyBlock { block: i });
        }
        if b.end > n {
            violations.push(Violation::OutOfRange { block: i });
        }
        sum += b.len();
    }
    if sum != n {
        violations.push(Violation::SizeMismatch { sum, total: n });
    }

    let mut order: Vec<usize> = (0..p.blocks.len()).filter(|&i| !p.blocks[i].is_empty()).collect();
    order.sort_by_key(|&i| (p.blocks[i].start, p.blocks[i].end));
    for w in order.windows(2) {
        let (a, b) = (&p.blocks[w[0]], &p.blocks[w[1]]);
        if b.start < a.end {
            violations.push(Violation::Overlap {
                first: w[0].min(w[1]),
                second: w[0].max(w[1]),
            });
        }
    }

    let mut covered = vec![false; n];
    for b in &p.blocks {
        for r in b.start.min(n)..b.end.min(n) {
            covered[r] = true;
        }
    }
    if let Some(row) = covered.iter().position(|&c| !c) {
        violations.push(Violation::Unassigned { row });
    }

    Verdict { violations }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionReport {
    pub workers: usize,
    /// Compute time of each block, measured inside its worker.
    pub per_block_nanos: Vec<u64>,
    /// Partitioning and output allocation before any worker starts.
    pub setup_nanos: u64,
    /// Wall time of the whole call.
    pub total_nanos: u64,
    pub rows_processed: usize,
}

impl ExecutionReport {
    /// Critical-path compute time: the slowest block.
    pub fn compute_nanos(&self) -> u64 {
        self.per_block_nanos.iter().copied().max().unwrap_or(0)
    }
}

fn nanos(d: Duration) -> u64 {
    u64::try_from(d.as_nanos()).unwrap_or(u64::MAX)
}

/// Evaluates `rowfn` on every row using `workers` concurrent blocks.
/// `result[r] = rowfn(row r)` regardless of the worker count.
pub fn parallel_map_rows<F>(
    m: &MeltMatrix,
    rowfn: F,
    workers: usize,
) -> Result<(Vec<f64>, ExecutionReport)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    parallel_map_rows_with(m, workers, || (), |_, row| Ok(rowfn(row)))
}

/// Like [`parallel_map_rows`], with per-worker scratch state from `init`
/// and a fallible row function. Errors and non-finite outputs are reported
/// as [`Error::Numeric`] carrying the row index; with several failures the
/// lowest row wins.
pub fn parallel_map_rows_with<S, I, F>(
    m: &MeltMatrix,
    workers: usize,
    init: I,
    rowfn: F,
) -> Result<(Vec<f64>, ExecutionReport)>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &[f64]) -> Result<f64> + Sync,
{
    let start = Instant::now();
    if workers == 0 {
        return Err(Error::Partition("worker count must be positive".into()));
    }
    let partition = partition_rows(m.rows(), workers)?;
    let mut out = vec![0.0; m.rows()];
    let setup_nanos = nanos(start.elapsed());

    let run_block = |range: Range<usize>, dst: &mut [f64]| -> (u64, Result<()>) {
        let t = Instant::now();
        let mut state = init();
        let mut status = Ok(());
        for (r, slot) in range.zip(dst.iter_mut()) {
            match rowfn(&mut state, m.row(r)) {
                Ok(v) if v.is_finite() => *slot = v,
                Ok(v) => {
                    status = Err(Error::Numeric {
                        index: vec![r],
                        detail: format!("row function returned {v}"),
                    });
                    break;
                }
                Err(e) => {
                    status = Err(Error::Numeric {
                        index: vec![r],
                        detail: e.to_string(),
                    });
                    break;
                }
            }
        }
        (nanos(t.elapsed()), status)
    };

    let results: Vec<(u64, Result<()>)> = if workers == 1 {
        vec![run_block(0..m.rows(), &mut out)]
    } else {
        let mut slices = Vec::with_capacity(workers);
        let mut rest = out.as_mut_slice();
        for b in partition.blocks() {
            let (head, tail) = rest.split_at_mut(b.len());
            slices.push((b.clone(), head));
            rest = tail;
        }
        std::thread::scope(|scope| {
            let handles: Vec<_> = slices
                .into_iter()
                .map(|(range, dst)| scope.spawn(|| run_block(range, dst)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("row worker panicked"))
                .collect()
        })
    };

    let mut per_block_nanos = Vec::with_capacity(workers);
    let mut first_err = None;
    for (ns, status) in results {
        per_block_nanos.push(ns);
        if let (None, Err(e)) = (&first_err, status) {
            first_err = Some(e);
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    let report = ExecutionReport {
        workers,
        per_block_nanos,
        setup_nanos,
        total_nanos: nanos(start.elapsed()),
        rows_processed: m.rows(),
    };
    Ok((out, report))
}
