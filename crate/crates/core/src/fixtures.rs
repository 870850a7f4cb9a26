// SPDX-License-Identifier: Apache-2.0

//! Synthetic inputs shipped under `fixtures/` and used by the demos.
//!
//! The files are produced by `cargo run --example write_fixtures`; tests
//! check that they still match these generators.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::tensor::{DenseTensor, Shape};

pub const SQUARE_FILE: &str = "square_64.melt";
pub const CUBE_FILE: &str = "cube_13.melt";
pub const RANDOM_FILE: &str = "random_16.melt";

/// Directory holding the bundled fixture files.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// `size x size` zeros with a centered square of ones spanning half the
/// side: rows and columns `[size/4, 3*size/4)`.
pub fn square_mask(size: usize) -> Result<DenseTensor> {
    let (lo, hi) = (size / 4, 3 * size / 4);
    DenseTensor::from_fn(Shape::new(vec![size, size])?, |c| {
        if c.iter().all(|&x| (lo..hi).contains(&x)) {
            1.0
        } else {
            0.0
        }
    })
}

/// Inclusive index range of the square in [`square_mask`].
pub fn square_bounds(size: usize) -> (usize, usize) {
    (size / 4, 3 * size / 4 - 1)
}

/// `size^3` zeros with a centered solid cube of ones with side `side`.
/// `size - side` must be even.
pub fn cube_field(size: usize, side: usize) -> Result<DenseTensor> {
    let (lo, hi) = cube_bounds(size, side);
    DenseTensor::from_fn(Shape::new(vec![size; 3])?, |c| {
        if c.iter().all(|&x| (lo..=hi).contains(&x)) {
            1.0
        } else {
            0.0
        }
    })
}

/// Inclusive index range of the cube in [`cube_field`].
pub fn cube_bounds(size: usize, side: usize) -> (usize, usize) {
    let lo = (size - side) / 2;
    (lo, lo + side - 1)
}

/// Uniform `[0, 1)` samples from a ChaCha8 stream seeded with `seed`.
pub fn random_tensor(dims: &[usize], seed: u64) -> Result<DenseTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseTensor::from_fn(Shape::new(dims.to_vec())?, |_| rng.random::<f64>())
}

/// The three bundled fixtures with their file names.
pub fn bundled() -> Result<Vec<(&'static str, DenseTensor)>> {
    Ok(vec![
        (SQUARE_FILE, square_mask(64)?),
        (CUBE_FILE, cube_field(13, 5)?),
        (RANDOM_FILE, random_tensor(&[16, 16, 16], 0)?),
    ])
}
