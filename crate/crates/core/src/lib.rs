// SPDX-License-Identifier: Apache-2.0

//! Dense n-dimensional tensors and dimension-generic neighborhood operators
//! built on the melt matrix.
//!
//! The pipeline every operator in this crate follows:
//!
//! 1. [`melt::quasi_grid`] works out the output grid of an operator window.
//! 2. [`melt::melt`] gathers the window around every grid point into one row
//!    of a [`melt::MeltMatrix`].
//! 3. A pure function is applied to each row, serially
//!    ([`melt::reduce_rows`]) or across workers
//!    ([`partition::parallel_map_rows`]).
//! 4. [`melt::aggregate`] places the per-row results back onto the grid.
//!
//! [`filters`] builds Gaussian and bilateral smoothing, finite-difference
//! gradient/Hessian fields and Gaussian curvature on top of that pipeline;
//! [`kernels`] holds the Gaussian densities and weight generators they use.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod bench;
pub mod cli;
pub mod error;
pub mod filters;
pub mod fixtures;
pub mod kernels;
pub mod melt;
pub mod partition;
pub mod tensor;

pub use error::{Error, Result};
pub use melt::{aggregate, melt, quasi_grid, reduce_rows, MeltMatrix, OperatorSpec, PaddingMode};
pub use tensor::{DenseTensor, MultiIndex, Shape};
