// SPDX-License-Identifier: Apache-2.0

//! Unfolds a small 2-D tensor into its melt matrix and folds a row
//! reduction back onto the grid.

use melt_tensor::{melt, reduce_rows, DenseTensor, OperatorSpec, PaddingMode, Shape};

fn main() -> melt_tensor::Result<()> {
    let t = DenseTensor::from_fn(Shape::new(vec![4, 5])?, |c| (c[0] * 5 + c[1]) as f64)?;

    for padding in [PaddingMode::Valid, PaddingMode::SameZero, PaddingMode::SameReflect] {
        let op = OperatorSpec::cube(2, 3, padding)?;
        let m = melt(&t, &op)?;
        println!("{padding:?}: {} rows x {} cols, grid {}", m.rows(), m.cols(), m.grid_shape());
        println!("  row 0 = {:?}", m.row(0));
    }

    // strided windows sample every other grid point
    let op = OperatorSpec::new(vec![3, 3], vec![2, 2], PaddingMode::SameReflect)?;
    let m = melt(&t, &op)?;
    let local_max = reduce_rows(&m, |row| row.iter().copied().fold(f64::MIN, f64::max))?;
    println!("3x3 max, stride 2 -> {}: {:?}", local_max.shape(), local_max.data());
    Ok(())
}
