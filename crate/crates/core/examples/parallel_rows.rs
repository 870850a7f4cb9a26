// SPDX-License-Identifier: Apache-2.0

//! Splits melt rows into balanced blocks, validates the split, and shows
//! that the parallel map returns the same bits for any worker count.

use melt_tensor::fixtures::random_tensor;
use melt_tensor::kernels::{dot, gaussian_kernel, GaussianParams};
use melt_tensor::partition::{parallel_map_rows, partition_rows, validate_partition, RowPartition};
use melt_tensor::{melt, OperatorSpec, PaddingMode};

fn main() -> melt_tensor::Result<()> {
    let p = partition_rows(10, 3)?;
    println!("10 rows in 3 blocks: {:?}, valid: {}", p.blocks(), validate_partition(&p).is_ok());

    let broken = RowPartition::from_blocks(10, vec![0..4, 3..7, 8..10]);
    let verdict = validate_partition(&broken);
    println!("overlapping blocks break conditions {:?}", verdict.violated_conditions());

    let t = random_tensor(&[32, 32, 32], 1)?;
    let op = OperatorSpec::cube(3, 3, PaddingMode::SameReflect)?;
    let kernel = gaussian_kernel(&op, &GaussianParams::default_spatial(&op))?;
    let m = melt(&t, &op)?;
    let (reference, _) = parallel_map_rows(&m, |r| dot(&kernel.weights, r), 1)?;
    for workers in 1..=4 {
        let (out, report) = parallel_map_rows(&m, |r| dot(&kernel.weights, r), workers)?;
        let same = out.iter().zip(&reference).all(|(a, b)| a.to_bits() == b.to_bits());
        println!(
            "{workers} workers: bitwise equal {same}, setup {} ns, slowest block {} ns",
            report.setup_nanos,
            report.compute_nanos()
        );
    }
    Ok(())
}
