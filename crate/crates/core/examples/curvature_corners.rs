// SPDX-License-Identifier: Apache-2.0

//! Gaussian curvature of the bundled square and cube fixtures. Corners
//! carry the strongest response; slicing the cube into 2-D planes gives a
//! different field than the native 3-D operator.

use melt_tensor::filters::{gaussian_curvature, stacked_2d_curvature};
use melt_tensor::fixtures::{fixtures_dir, CUBE_FILE, SQUARE_FILE};
use melt_tensor::tensor::{read_tensor, unravel_index};
use melt_tensor::DenseTensor;

fn load(name: &str) -> melt_tensor::Result<DenseTensor> {
    read_tensor(std::fs::File::open(fixtures_dir().join(name))?)
}

fn strongest(k: &DenseTensor, n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut idx: Vec<usize> = (0..k.len()).collect();
    idx.sort_by(|&a, &b| k.data()[b].abs().total_cmp(&k.data()[a].abs()));
    idx[..n]
        .iter()
        .map(|&i| (unravel_index(i, k.shape()).unwrap().0, k.data()[i]))
        .collect()
}

fn main() -> melt_tensor::Result<()> {
    let square = load(SQUARE_FILE)?;
    let k = gaussian_curvature(&square, &[1.0, 1.0])?.tensor;
    println!("square, 4 largest |K|:");
    for (at, v) in strongest(&k, 4) {
        println!("  {at:?} {v:.4}");
    }

    let cube = load(CUBE_FILE)?;
    let native = gaussian_curvature(&cube, &[1.0; 3])?.tensor;
    println!("cube, 8 largest |K|:");
    for (at, v) in strongest(&native, 8) {
        println!("  {at:?} {v:.4}");
    }
    let stacked = stacked_2d_curvature(&cube, &[1.0, 1.0])?.tensor;
    println!("stacked 2-D strongest: {:?}", strongest(&stacked, 1)[0]);
    println!("native vs stacked max abs diff {:.4}", native.max_abs_diff(&stacked)?);
    Ok(())
}
