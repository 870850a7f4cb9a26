// SPDX-License-Identifier: Apache-2.0

//! Smooths the bundled random volume with isotropic and anisotropic
//! Gaussian kernels, then writes the middle slice as a PGM image.

use std::fs::File;

use melt_tensor::filters::{convolve_global_with, ExecConfig};
use melt_tensor::fixtures::random_tensor;
use melt_tensor::kernels::{gaussian_kernel, GaussianParams};
use melt_tensor::tensor::export_pgm;
use melt_tensor::{DenseTensor, OperatorSpec, PaddingMode, Shape};

fn spread(t: &DenseTensor) -> f64 {
    let mean = t.mean();
    (t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t.len() as f64).sqrt()
}

fn main() -> melt_tensor::Result<()> {
    let t = random_tensor(&[16, 16, 16], 0)?;
    let op = OperatorSpec::cube(3, 5, PaddingMode::SameReflect)?;
    let cfg = ExecConfig { workers: 2, ..ExecConfig::default() };

    let iso = gaussian_kernel(&op, &GaussianParams::default_spatial(&op))?;
    let smooth = convolve_global_with(&t, &op, &iso, &cfg)?;

    // long along the last axis only
    let aniso = gaussian_kernel(&op, &GaussianParams::centered_diagonal(&[0.1, 0.1, 4.0])?)?;
    let streaked = convolve_global_with(&t, &op, &aniso, &cfg)?;

    println!("std dev: input {:.4}, isotropic {:.4}, anisotropic {:.4}", spread(&t), spread(&smooth), spread(&streaked));

    let slice = DenseTensor::new(Shape::new(vec![16, 16])?, smooth.data()[8 * 256..9 * 256].to_vec())?;
    let path = std::env::temp_dir().join("gaussian_slice.pgm");
    export_pgm(&slice, 255, File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
