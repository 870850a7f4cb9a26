// SPDX-License-Identifier: Apache-2.0

//! The melt matrix: every neighborhood of a tensor laid out as one row.
//!
//! [`quasi_grid`] decides which source positions an operator visits,
//! [`melt`] gathers the window around each of them into a row of a dense
//! `R x C` matrix, and [`aggregate`] folds one value per row back into a
//! tensor shaped like the grid. Rows never depend on each other, which is
//! what lets [`crate::partition`] split the matrix across workers.
//!
//! Rows follow the row-major order of the grid; columns follow the
//! row-major order of the window.

use crate::error::{Error, Result};
use crate::tensor::{increment, unravel_into, DenseTensor, Shape};

/// Default ceiling for a melt allocation: 4 GiB.
pub const DEFAULT_MEMORY_CAP: u64 = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PaddingMode {
    /// No padding, the grid shrinks so every window fits.
    Valid,
    /// Out-of-range reads are zero.
    SameZero,
    /// Out-of-range reads mirror about the edge without repeating it.
    #[default]
    SameReflect,
}

impl PaddingMode {
    pub fn is_same(self) -> bool {
        !matches!(self, PaddingMode::Valid)
    }
}

/// Neighborhood window: odd extent and positive stride per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSpec {
    extents: Shape,
    strides: Vec<usize>,
    padding: PaddingMode,
}

impl OperatorSpec {
    pub fn new(extents: Vec<usize>, strides: Vec<usize>, padding: PaddingMode) -> Result<Self> {
        let extents = Shape::new(extents)?;
        if strides.len() != extents.rank() {
            return Err(Error::Shape(format!(
                "{} strides given for a rank-{} operator",
                strides.len(),
                extents.rank()
            )));
        }
        if let Some(axis) = extents.dims().iter().position(|k| k % 2 == 0) {
            return Err(Error::Shape(format!(
                "operator extent {} on axis {axis} is even; extents must be odd",
                extents.dims()[axis]
            )));
        }
        if strides.contains(&0) {
            return Err(Error::Shape("operator strides must be positive".into()));
        }
        Ok(OperatorSpec {
            extents,
            strides,
            padding,
        })
    }

    /// Unit-stride operator with the same odd `extent` on every axis.
    pub fn cube(rank: usize, extent: usize, padding: PaddingMode) -> Result<Self> {
        OperatorSpec::new(vec![extent; rank], vec![1; rank], padding)
    }

    pub fn extents(&self) -> &Shape {
        &self.extents
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn padding(&self) -> PaddingMode {
        self.padding
    }

    pub fn rank(&self) -> usize {
        self.extents.rank()
    }

    /// Number of columns a melt with this operator produces.
    pub fn window_len(&self) -> usize {
        self.extents.count()
    }

    /// Column holding the window center.
    pub fn center(&self) -> usize {
        (self.window_len() - 1) / 2
    }

    /// Window offsets relative to the center, in row-major column order.
    pub fn offsets(&self) -> Vec<Vec<isize>> {
        let dims = self.extents.dims();
        let half: Vec<isize> = dims.iter().map(|&k| (k / 2) as isize).collect();
        let mut out = Vec::with_capacity(self.window_len());
        let mut w = vec![0usize; dims.len()];
        loop {
            out.push(w.iter().zip(&half).map(|(&x, &h)| x as isize - h).collect());
            if !increment(&mut w, dims) {
                break;
            }
        }
        out
    }
}

/// Output grid of an operator and the affine map back to source positions:
/// `origin = grid_index * stride + base_offset`, per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    grid_shape: Shape,
    strides: Vec<usize>,
    base_offset: Vec<usize>,
}

impl GridMap {
    pub fn grid_shape(&self) -> &Shape {
        &self.grid_shape
    }

    pub fn base_offset(&self) -> &[usize] {
        &self.base_offset
    }

    pub fn origin_of(&self, grid_index: &[usize]) -> Vec<usize> {
        grid_index
            .iter()
            .zip(&self.strides)
            .zip(&self.base_offset)
            .map(|((&g, &s), &b)| g * s + b)
            .collect()
    }
}

/// Computes the grid an operator visits on a tensor of `input` shape.
///
/// VALID grids have `floor((d - k) / s) + 1` points per axis and start at
/// the first fully covered center. SAME grids start at zero and have
/// `floor((d - 1) / s) + 1` points, which is `d` for unit strides.
pub fn quasi_grid(input: &Shape, op: &OperatorSpec) -> Result<GridMap> {
    if input.rank() != op.rank() {
        return Err(Error::Shape(format!(
            "rank-{} operator applied to rank-{} tensor",
            op.rank(),
            input.rank()
        )));
    }
    let mut grid = Vec::with_capacity(input.rank());
    let mut base = Vec::with_capacity(input.rank());
    for (axis, ((&d, &k), &s)) in input
        .dims()
        .iter()
        .zip(op.extents().dims())
        .zip(op.strides())
        .enumerate()
    {
        match op.padding() {
            PaddingMode::Valid => {
                if k > d {
                    return Err(Error::Shape(format!(
                        "window extent {k} exceeds input extent {d} on axis {axis}"
                    )));
                }
                grid.push((d - k) / s + 1);
                base.push((k - 1) / 2);
            }
            PaddingMode::SameZero | PaddingMode::SameReflect => {
                if k > 2 * d - 1 {
                    return Err(Error::Shape(format!(
                        "window extent {k} exceeds 2*{d}-1 on axis {axis}"
                    )));
                }
                grid.push((d - 1) / s + 1);
                base.push(0);
            }
        }
    }
    Ok(GridMap {
        grid_shape: Shape::new(grid)?,
        strides: op.strides().to_vec(),
        base_offset: base,
    })
}

/// Row-decoupled neighborhood matrix of a tensor.
#[derive(Debug, Clone)]
pub struct MeltMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    grid: GridMap,
    extents: Shape,
    offsets: Vec<Vec<isize>>,
    source_shape: Shape,
    padding: PaddingMode,
}

impl MeltMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.cols)
    }

    /// Checked element access.
    pub fn get(&self, r: usize, c: usize) -> Result<f64> {
        if r >= self.rows || c >= self.cols {
            return Err(Error::Index(format!(
                "({r}, {c}) outside {}x{} melt matrix",
                self.rows, self.cols
            )));
        }
        Ok(self.data[r * self.cols + c])
    }

    /// The whole matrix, row-major.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn grid(&self) -> &GridMap {
        &self.grid
    }

    pub fn grid_shape(&self) -> &Shape {
        self.grid.grid_shape()
    }

    pub fn extents(&self) -> &Shape {
        &self.extents
    }

    pub fn offsets(&self) -> &[Vec<isize>] {
        &self.offsets
    }

    pub fn center(&self) -> usize {
        (self.cols - 1) / 2
    }

    pub fn source_shape(&self) -> &Shape {
        &self.source_shape
    }

    pub fn padding(&self) -> PaddingMode {
        self.padding
    }

    /// Grid multi-index of row `r`.
    pub fn grid_index(&self, r: usize) -> Vec<usize> {
        let mut coords = vec![0; self.grid_shape().rank()];
        unravel_into(r, self.grid_shape().dims(), &mut coords);
        coords
    }

    /// Rows `[start, end)` as one contiguous row-major block.
    pub fn slice_rows(&self, start: usize, end: usize) -> &[f64] {
        &self.data[start * self.cols..end * self.cols]
    }
}

/// Bytes a melt of `t` under `op` would allocate.
pub fn melt_size_bytes(input: &Shape, op: &OperatorSpec) -> Result<u128> {
    let grid = quasi_grid(input, op)?;
    Ok(grid.grid_shape().count() as u128 * op.window_len() as u128 * 8)
}

pub fn melt(t: &DenseTensor, op: &OperatorSpec) -> Result<MeltMatrix> {
    melt_with_cap(t, op, DEFAULT_MEMORY_CAP)
}

/// Like [`melt`], failing with [`Error::MemoryCap`] when the matrix would
/// need more than `cap` bytes.
pub fn melt_with_cap(t: &DenseTensor, op: &OperatorSpec, cap: u64) -> Result<MeltMatrix> {
    let grid = quasi_grid(t.shape(), op)?;
    let rows = grid.grid_shape().count();
    let cols = op.window_len();
    let requested = rows as u128 * cols as u128 * 8;
    if requested > cap as u128 {
        return Err(Error::MemoryCap { requested, cap });
    }

    let rank = t.rank();
    let src_dims = t.shape().dims();
    let src_strides = t.shape().strides();
    let ext = op.extents().dims();

    // Per axis, per (grid coordinate, window coordinate): the element offset
    // contributed by that axis, or None for a zero-padded read.
    let luts: Vec<Vec<Option<usize>>> = (0..rank)
        .map(|a| {
            let g_n = grid.grid_shape().dims()[a];
            let k = ext[a];
            let half = (k / 2) as isize;
            let d = src_dims[a] as isize;
            let mut lut = Vec::with_capacity(g_n * k);
            for g in 0..g_n {
                let origin = (g * grid.strides[a] + grid.base_offset[a]) as isize;
                for w in 0..k {
                    let mut p = origin + w as isize - half;
                    let inside = (0..d).contains(&p);
                    let coord = match op.padding() {
                        _ if inside => Some(p),
                        PaddingMode::SameReflect => {
                            if p < 0 {
                                p = -p;
                            } else {
                                p = 2 * (d - 1) - p;
                            }
                            Some(p)
                        }
                        _ => None,
                    };
                    lut.push(coord.map(|p| p as usize * src_strides[a]));
                }
            }
            lut
        })
        .collect();

    let offsets = op.offsets();
    let windows: Vec<Vec<usize>> = offsets
        .iter()
        .map(|o| {
            o.iter()
                .zip(ext)
                .map(|(&x, &k)| (x + (k / 2) as isize) as usize)
                .collect()
        })
        .collect();

    let src = t.data();
    let mut data = Vec::with_capacity(rows * cols);
    let mut g = vec![0usize; rank];
    for _ in 0..rows {
        for w in &windows {
            let mut offset = 0usize;
            let mut valid = true;
            for a in 0..rank {
                match luts[a][g[a] * ext[a] + w[a]] {
                    Some(o) => offset += o,
                    None => {
                        valid = false;
                        break;
                    }
                }
            }
            data.push(if valid { src[offset] } else { 0.0 });
        }
        increment(&mut g, grid.grid_shape().dims());
    }

    Ok(MeltMatrix {
        data,
        rows,
        cols,
        grid,
        extents: op.extents().clone(),
        offsets,
        source_shape: t.shape().clone(),
        padding: op.padding(),
    })
}

/// Places one result per row back onto the grid.
pub fn aggregate(m: &MeltMatrix, row_results: Vec<f64>) -> Result<DenseTensor> {
    if row_results.len() != m.rows() {
        return Err(Error::Shape(format!(
            "{} row results for a melt matrix with {} rows",
            row_results.len(),
            m.rows()
        )));
    }
    if let Some(r) = row_results.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            index: m.grid_index(r),
            detail: format!("row result {}", row_results[r]),
        });
    }
    DenseTensor::new(m.grid_shape().clone(), row_results)
}

/// Applies `reducer` to every row and aggregates. Equivalent to mapping the
/// rows in any order; see [`crate::partition::parallel_map_rows`] for the
/// concurrent version.
pub fn reduce_rows<F>(m: &MeltMatrix, reducer: F) -> Result<DenseTensor>
where
    F: Fn(&[f64]) -> f64,
{
    let mut out = Vec::with_capacity(m.rows());
    for (r, row) in m.iter_rows().enumerate() {
        let v = reducer(row);
        if !v.is_finite() {
            return Err(Error::Numeric {
                index: m.grid_index(r),
                detail: format!("reducer returned {v}"),
            });
        }
        out.push(v);
    }
    aggregate(m, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tensor(dims: &[usize], data: &[f64]) -> DenseTensor {
        DenseTensor::new(Shape::new(dims.to_vec()).unwrap(), data.to_vec()).unwrap()
    }

    fn op(ext: &[usize], stride: &[usize], pad: PaddingMode) -> OperatorSpec {
        OperatorSpec::new(ext.to_vec(), stride.to_vec(), pad).unwrap()
    }

    #[test]
    fn quasi_grid_examples() {
        let s55 = Shape::new(vec![5, 5]).unwrap();
        let same = quasi_grid(&s55, &op(&[3, 3], &[1, 1], PaddingMode::SameZero)).unwrap();
        assert_eq!(same.grid_shape().dims(), &[5, 5]);
        assert_eq!(same.origin_of(&[2, 4]), vec![2, 4]);

        let valid = quasi_grid(&s55, &op(&[3, 3], &[1, 1], PaddingMode::Valid)).unwrap();
        assert_eq!(valid.grid_shape().dims(), &[3, 3]);
        assert_eq!(valid.origin_of(&[0, 0]), vec![1, 1]);

        let s468 = Shape::new(vec![4, 6, 8]).unwrap();
        let strided = quasi_grid(&s468, &op(&[3, 3, 3], &[2, 2, 2], PaddingMode::Valid)).unwrap();
        assert_eq!(strided.grid_shape().dims(), &[1, 2, 3]);
        assert_eq!(strided.origin_of(&[0, 1, 2]), vec![1, 3, 5]);
    }

    #[test]
    fn quasi_grid_errors() {
        let s = Shape::new(vec![2, 5]).unwrap();
        assert!(matches!(
            quasi_grid(&s, &op(&[3], &[1], PaddingMode::Valid)),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            quasi_grid(&s, &op(&[3, 3], &[1, 1], PaddingMode::Valid)),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            quasi_grid(&s, &op(&[5, 3], &[1, 1], PaddingMode::SameReflect)),
            Err(Error::Shape(_))
        ));
        assert!(quasi_grid(&s, &op(&[3, 3], &[1, 1], PaddingMode::SameReflect)).is_ok());
    }

    #[test]
    fn operator_rejects_even_or_zero() {
        assert!(OperatorSpec::new(vec![2], vec![1], PaddingMode::Valid).is_err());
        assert!(OperatorSpec::new(vec![3], vec![0], PaddingMode::Valid).is_err());
        assert!(OperatorSpec::new(vec![3, 3], vec![1], PaddingMode::Valid).is_err());
        let o = op(&[3, 3], &[1, 1], PaddingMode::Valid);
        assert_eq!(o.offsets()[o.center()], vec![0, 0]);
        assert_eq!(o.offsets()[0], vec![-1, -1]);
        assert_eq!(o.offsets()[5], vec![0, 1]);
    }

    #[test]
    fn melt_examples() {
        let t = tensor(&[5], &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let m = melt(&t, &op(&[3], &[1], PaddingMode::Valid)).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 3));
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0, 3.0, 4.0, 5.0]);

        let t = tensor(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let m = melt(&t, &op(&[3, 3], &[1, 1], PaddingMode::SameZero)).unwrap();
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 3.0, 4.0]);

        let t = tensor(&[3], &[1.0, 2.0, 3.0]);
        let m = melt(&t, &op(&[3], &[1], PaddingMode::SameReflect)).unwrap();
        assert_eq!(m.row(0), &[2.0, 1.0, 2.0]);
        assert_eq!(m.row(2), &[2.0, 3.0, 2.0]);
    }

    #[test]
    fn reflect_reaches_full_mirror() {
        // extent 5 on length 3 is the largest window reflect supports
        let t = tensor(&[3], &[1.0, 2.0, 3.0]);
        let m = melt(&t, &op(&[5], &[1], PaddingMode::SameReflect)).unwrap();
        assert_eq!(m.row(0), &[3.0, 2.0, 1.0, 2.0, 3.0]);
        assert_eq!(m.row(2), &[1.0, 2.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn memory_cap_is_enforced() {
        let t = DenseTensor::zeros(Shape::new(vec![10, 10]).unwrap());
        let o = op(&[3, 3], &[1, 1], PaddingMode::SameZero);
        assert_eq!(melt_size_bytes(t.shape(), &o).unwrap(), 100 * 9 * 8);
        assert!(matches!(
            melt_with_cap(&t, &o, 7199),
            Err(Error::MemoryCap { requested: 7200, cap: 7199 })
        ));
        assert!(melt_with_cap(&t, &o, 7200).is_ok());
    }

    #[test]
    fn aggregate_examples() {
        let t = DenseTensor::zeros(Shape::new(vec![5, 5]).unwrap());
        let m = melt(&t, &op(&[3, 3], &[1, 1], PaddingMode::Valid)).unwrap();
        let out = aggregate(&m, (1..=9).map(f64::from).collect()).unwrap();
        assert_eq!(out.shape().dims(), &[3, 3]);
        assert_eq!(out.get(&[1, 0]).unwrap(), 4.0);
        assert_eq!(out.get(&[2, 2]).unwrap(), 9.0);

        let t = DenseTensor::zeros(Shape::new(vec![2, 3]).unwrap());
        let m = melt(&t, &op(&[1, 1], &[1, 1], PaddingMode::SameZero)).unwrap();
        assert!(matches!(aggregate(&m, vec![0.0; 5]), Err(Error::Shape(_))));
    }

    #[test]
    fn reduce_rows_examples() {
        let t = tensor(&[3], &[1.0, 5.0, 2.0]);
        let m = melt(&t, &op(&[3], &[1], PaddingMode::SameReflect)).unwrap();
        // windows [5,1,5], [1,5,2], [5,2,5]
        let maxed = reduce_rows(&m, |r| r.iter().copied().fold(f64::MIN, f64::max)).unwrap();
        assert_eq!(maxed.data(), &[5.0, 5.0, 5.0]);

        let c = m.center();
        let t = tensor(&[2, 3], &[0.5, -1.0, 2.0, 3.0, 4.0, 7.5]);
        let m = melt(&t, &op(&[3, 3], &[1, 1], PaddingMode::SameZero)).unwrap();
        assert_eq!(reduce_rows(&m, |r| r[4]).unwrap(), t);
        assert_eq!(c, 1);

        let k = DenseTensor::filled(Shape::new(vec![4, 4]).unwrap(), 2.5).unwrap();
        let m = melt(&k, &op(&[3, 3], &[1, 1], PaddingMode::SameReflect)).unwrap();
        let mean = reduce_rows(&m, |r| r.iter().sum::<f64>() / r.len() as f64).unwrap();
        assert_eq!(mean, k);
    }

    #[test]
    fn reduce_rows_reports_grid_index() {
        let t = tensor(&[2, 2], &[1.0, 2.0, 0.0, 4.0]);
        let m = melt(&t, &op(&[1, 1], &[1, 1], PaddingMode::Valid)).unwrap();
        match reduce_rows(&m, |r| 1.0 / r[0]) {
            Err(Error::Numeric { index, .. }) => assert_eq!(index, vec![1, 0]),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    /// Nested-loop gather used as the independent reference.
    fn gather_oracle(t: &DenseTensor, o: &OperatorSpec) -> Vec<f64> {
        let grid = quasi_grid(t.shape(), o).unwrap();
        let dims = t.shape().dims();
        let mut out = Vec::new();
        for r in 0..grid.grid_shape().count() {
            let g = crate::tensor::unravel_index(r, grid.grid_shape()).unwrap();
            let origin = grid.origin_of(&g.0);
            for off in o.offsets() {
                let mut coords = Vec::new();
                let mut zero = false;
                for a in 0..dims.len() {
                    let p = origin[a] as isize + off[a];
                    let n = dims[a] as isize;
                    let p = if p < 0 || p >= n {
                        match o.padding() {
                            PaddingMode::SameReflect if p < 0 => -p,
                            PaddingMode::SameReflect => 2 * (n - 1) - p,
                            _ => {
                                zero = true;
                                0
                            }
                        }
                    } else {
                        p
                    };
                    coords.push(p as usize);
                }
                out.push(if zero { 0.0 } else { t.get(&coords).unwrap() });
            }
        }
        out
    }

    fn arb_case() -> impl Strategy<Value = (DenseTensor, OperatorSpec)> {
        (1usize..=4)
            .prop_flat_map(|rank| {
                (
                    prop::collection::vec(1usize..=6, rank),
                    prop::collection::vec(0usize..=2, rank),
                    prop::collection::vec(1usize..=2, rank),
                    0u8..3,
                    any::<u64>(),
                )
            })
            .prop_filter_map("window must fit", |(dims, half, strides, pad, seed)| {
                let padding = [PaddingMode::Valid, PaddingMode::SameZero, PaddingMode::SameReflect]
                    [pad as usize];
                let ext: Vec<usize> = half
                    .iter()
                    .zip(&dims)
                    .map(|(&h, &d)| {
                        let max_half = if padding.is_same() { d - 1 } else { (d - 1) / 2 };
                        2 * h.min(max_half) + 1
                    })
                    .collect();
                let o = OperatorSpec::new(ext, strides, padding).ok()?;
                let shape = Shape::new(dims).ok()?;
                let mut x = seed;
                let t = DenseTensor::from_fn(shape, |_| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .ok()?;
                Some((t, o))
            })
    }

    proptest! {
        #[test]
        fn melt_matches_gather_oracle((t, o) in arb_case()) {
            let m = melt(&t, &o).unwrap();
            prop_assert_eq!(m.rows(), m.grid_shape().count());
            prop_assert_eq!(m.cols(), o.extents().count());
            let expect = gather_oracle(&t, &o);
            prop_assert_eq!(m.data(), expect.as_slice());
        }

        #[test]
        fn valid_rows_hold_only_source_values((t, o) in arb_case()) {
            prop_assume!(o.padding() == PaddingMode::Valid);
            let m = melt(&t, &o).unwrap();
            for r in 0..m.rows() {
                let origin = m.grid().origin_of(&m.grid_index(r));
                for (c, off) in m.offsets().iter().enumerate() {
                    let p: Vec<usize> = origin.iter().zip(off).map(|(&a, &b)| (a as isize + b) as usize).collect();
                    prop_assert_eq!(m.row(r)[c], t.get(&p).unwrap());
                }
            }
        }

        #[test]
        fn center_column_reconstructs_input((t, o) in arb_case(), reflect in any::<bool>()) {
            let padding = if reflect { PaddingMode::SameReflect } else { PaddingMode::SameZero };
            let ext: Vec<usize> = o.extents().dims().iter().zip(t.shape().dims()).map(|(&k, &d)| k.min(2 * d - 1)).collect();
            let o = OperatorSpec::new(ext, vec![1; t.rank()], padding).unwrap();
            let m = melt(&t, &o).unwrap();
            let c = m.center();
            prop_assert!(m.offsets()[c].iter().all(|&x| x == 0));
            prop_assert_eq!(reduce_rows(&m, |r| r[c]).unwrap(), t);
        }

        #[test]
        fn row_order_does_not_matter((t, o) in arb_case(), seed in any::<u64>()) {
            let m = melt(&t, &o).unwrap();
            let f = |r: &[f64]| r.iter().enumerate().map(|(i, v)| v * (i as f64 + 0.5)).sum::<f64>();
            let forward = reduce_rows(&m, f).unwrap();
            let mut order: Vec<usize> = (0..m.rows()).collect();
            let mut x = seed;
            for i in (1..order.len()).rev() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
                order.swap(i, (x >> 33) as usize % (i + 1));
            }
            let mut shuffled = vec![0.0; m.rows()];
            for &r in &order {
                shuffled[r] = f(m.row(r));
            }
            prop_assert_eq!(aggregate(&m, shuffled).unwrap(), forward);
        }

        #[test]
        fn valid_unit_stride_grid_arithmetic(
            (dims, ext) in prop::collection::vec(1usize..=9, 1..=4).prop_flat_map(|dims| {
                let ext = dims.iter().map(|&d| (0..=(d - 1) / 2).prop_map(|h| 2 * h + 1)).collect::<Vec<_>>();
                (Just(dims), ext)
            })
        ) {
            let o = OperatorSpec::new(ext.clone(), vec![1; dims.len()], PaddingMode::Valid).unwrap();
            let g = quasi_grid(&Shape::new(dims.clone()).unwrap(), &o).unwrap();
            let expect: Vec<usize> = dims.iter().zip(&ext).map(|(d, e)| d - e + 1).collect();
            prop_assert_eq!(g.grid_shape().dims(), expect.as_slice());
        }
    }
}
