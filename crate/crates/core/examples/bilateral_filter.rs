// SPDX-License-Identifier: Apache-2.0

//! A noisy step edge through Gaussian and bilateral smoothing. The
//! bilateral filter keeps the step while removing the noise.

use melt_tensor::filters::{bilateral_filter, convolve_global};
use melt_tensor::kernels::{gaussian_kernel, GaussianParams, SigmaRPolicy};
use melt_tensor::{DenseTensor, OperatorSpec, PaddingMode, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn row(t: &DenseTensor, r: usize) -> Vec<String> {
    let w = t.shape().dims()[1];
    t.data()[r * w..(r + 1) * w].iter().map(|v| format!("{v:.2}")).collect()
}

fn main() -> melt_tensor::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = DenseTensor::from_fn(Shape::new(vec![12, 12])?, |c| {
        let step = if c[1] < 6 { 0.0 } else { 1.0 };
        step + rng.random_range(-0.05..0.05)
    })?;
    let op = OperatorSpec::cube(2, 5, PaddingMode::SameReflect)?;
    let spatial = GaussianParams::isotropic(2, 1.5)?;

    let gauss = convolve_global(&t, &op, &gaussian_kernel(&op, &spatial)?)?;
    let bil = bilateral_filter(&t, &op, &spatial, SigmaRPolicy::constant(0.1)?)?;
    let adaptive = bilateral_filter(&t, &op, &spatial, SigmaRPolicy::adaptive(1e-6)?)?;
    let wide = bilateral_filter(&t, &op, &spatial, SigmaRPolicy::constant(1e9)?)?;

    println!("input     {}", row(&t, 6).join(" "));
    println!("gaussian  {}", row(&gauss, 6).join(" "));
    println!("bilateral {}", row(&bil, 6).join(" "));
    println!("adaptive  {}", row(&adaptive, 6).join(" "));
    println!("sigma_r = 1e9 vs gaussian: max abs diff {:e}", wide.max_abs_diff(&gauss)?);
    Ok(())
}
