// SPDX-License-Identifier: Apache-2.0

//! Dimension-generic operators built on the melt pipeline.
//!
//! Derivatives use second-order central differences read from a `3^m`
//! reflect-padded melt window. Reflection makes the window look locally
//! even at the border, so first derivatives drop to zero on the outermost
//! cells; that is a boundary artifact of the scheme, not of the data.
//!
//! Spacing vectors give the physical step per index along each axis. All
//! ones reproduces the index-space formulas exactly.

use crate::error::{Error, Result};
use crate::kernels::{dot, BilateralKernel, GaussianParams, KernelVector, SigmaRPolicy};
use crate::melt::{aggregate, melt_with_cap, MeltMatrix, OperatorSpec, PaddingMode, DEFAULT_MEMORY_CAP};
use crate::partition::parallel_map_rows_with;
use crate::tensor::{DenseTensor, Shape, MAX_RANK};

/// Execution knobs shared by the filter entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecConfig {
    pub workers: usize,
    pub memory_cap: u64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            workers: 1,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }
}

/// Maps every row of `m` through `rowfn` and aggregates, translating row
/// indices in errors back to grid indices.
fn map_and_aggregate<S, I, F>(m: &MeltMatrix, cfg: &ExecConfig, init: I, rowfn: F) -> Result<DenseTensor>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &[f64]) -> Result<f64> + Sync,
{
    let workers = cfg.workers.clamp(1, m.rows());
    match parallel_map_rows_with(m, workers, init, rowfn) {
        Ok((values, _)) => aggregate(m, values),
        Err(Error::Numeric { index, detail }) if index.len() == 1 => Err(Error::Numeric {
            index: m.grid_index(index[0]),
            detail,
        }),
        Err(e) => Err(e),
    }
}

pub fn convolve_global(t: &DenseTensor, op: &OperatorSpec, kernel: &KernelVector) -> Result<DenseTensor> {
    convolve_global_with(t, op, kernel, &ExecConfig::default())
}

/// Weighted sum of every melt row with a fixed kernel.
pub fn convolve_global_with(
    t: &DenseTensor,
    op: &OperatorSpec,
    kernel: &KernelVector,
    cfg: &ExecConfig,
) -> Result<DenseTensor> {
    if kernel.len() != op.window_len() {
        return Err(Error::Shape(format!(
            "kernel of length {} for a window of {}",
            kernel.len(),
            op.window_len()
        )));
    }
    let m = melt_with_cap(t, op, cfg.memory_cap)?;
    map_and_aggregate(&m, cfg, || (), |_, row| Ok(dot(&kernel.weights, row)))
}

pub fn bilateral_filter(
    t: &DenseTensor,
    op: &OperatorSpec,
    spatial: &GaussianParams,
    policy: SigmaRPolicy,
) -> Result<DenseTensor> {
    bilateral_filter_with(t, op, spatial, policy, &ExecConfig::default())
}

/// Edge-preserving smoothing: each row is averaged with weights combining
/// the spatial gaussian and a gaussian on the difference to the center value.
pub fn bilateral_filter_with(
    t: &DenseTensor,
    op: &OperatorSpec,
    spatial: &GaussianParams,
    policy: SigmaRPolicy,
    cfg: &ExecConfig,
) -> Result<DenseTensor> {
    if spatial.dim() != t.rank() {
        return Err(Error::Shape(format!(
            "spatial gaussian of dimension {} for a rank-{} tensor",
            spatial.dim(),
            t.rank()
        )));
    }
    let kernel = BilateralKernel::new(&op.offsets(), spatial, policy)?;
    let m = melt_with_cap(t, op, cfg.memory_cap)?;
    map_and_aggregate(
        &m,
        cfg,
        || vec![0.0; kernel.len()],
        |scratch, row| kernel.apply(row, scratch),
    )
}

/// Column indices of the central-difference taps in a `3^m` window.
#[derive(Debug, Clone)]
struct DerivativeStencil {
    rank: usize,
    center: usize,
    step: [usize; MAX_RANK],
}

impl DerivativeStencil {
    fn new(rank: usize) -> Self {
        let mut step = [0; MAX_RANK];
        let mut s = 1;
        for axis in (0..rank).rev() {
            step[axis] = s;
            s *= 3;
        }
        DerivativeStencil {
            rank,
            center: (s - 1) / 2,
            step,
        }
    }

    fn gradient(&self, row: &[f64], spacing: &[f64], out: &mut [f64]) {
        let c = self.center;
        for i in 0..self.rank {
            let s = self.step[i];
            out[i] = (row[c + s] - row[c - s]) / (2.0 * spacing[i]);
        }
    }

    /// Fills the full `m x m` matrix; only `i <= j` is computed.
    fn hessian(&self, row: &[f64], spacing: &[f64], out: &mut [f64]) {
        let m = self.rank;
        let c = self.center;
        for i in 0..m {
            let si = self.step[i];
            out[i * m + i] = (row[c + si] - 2.0 * row[c] + row[c - si]) / (spacing[i] * spacing[i]);
            for j in i + 1..m {
                let sj = self.step[j];
                let v = (row[c + si + sj] - row[c + si - sj] - row[c - si + sj] + row[c - si - sj])
                    / (4.0 * spacing[i] * spacing[j]);
                out[i * m + j] = v;
                out[j * m + i] = v;
            }
        }
    }

    fn curvature(&self, row: &[f64], spacing: &[f64]) -> f64 {
        let m = self.rank;
        let mut grad = [0.0; MAX_RANK];
        let mut hess = [0.0; MAX_RANK * MAX_RANK];
        self.gradient(row, spacing, &mut grad);
        self.hessian(row, spacing, &mut hess[..m * m]);
        let g2: f64 = grad[..m].iter().map(|g| g * g).sum();
        let denom = 1.0 + g2;
        det_small(&hess[..m * m], m) / (denom * denom)
    }
}

fn check_derivative_input(t: &DenseTensor, spacing: &[f64]) -> Result<()> {
    if spacing.len() != t.rank() {
        return Err(Error::Shape(format!(
            "{} spacings for a rank-{} tensor",
            spacing.len(),
            t.rank()
        )));
    }
    if let Some(axis) = t.shape().dims().iter().position(|&d| d < 3) {
        return Err(Error::Shape(format!(
            "axis {axis} has extent {}, derivatives need at least 3",
            t.shape().dims()[axis]
        )));
    }
    if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::Param(format!("spacing must be positive, got {spacing:?}")));
    }
    Ok(())
}

fn derivative_melt(t: &DenseTensor, cap: u64) -> Result<MeltMatrix> {
    let op = OperatorSpec::cube(t.rank(), 3, PaddingMode::SameReflect)?;
    melt_with_cap(t, &op, cap)
}

/// First partial derivatives per grid point, `R x m` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub grid_shape: Shape,
    pub values: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl GradientField {
    pub fn at(&self, r: usize) -> &[f64] {
        let m = self.grid_shape.rank();
        &self.values[r * m..(r + 1) * m]
    }
}

/// Second partial derivatives per grid point, `R x m x m` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianField {
    pub grid_shape: Shape,
    pub values: Vec<f64>,
    pub spacing: Vec<f64>,
}

impl HessianField {
    pub fn at(&self, r: usize) -> &[f64] {
        let m = self.grid_shape.rank();
        &self.values[r * m * m..(r + 1) * m * m]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub tensor: DenseTensor,
}

pub fn gradient_field(t: &DenseTensor, spacing: &[f64]) -> Result<GradientField> {
    check_derivative_input(t, spacing)?;
    let m = derivative_melt(t, DEFAULT_MEMORY_CAP)?;
    let stencil = DerivativeStencil::new(t.rank());
    let rank = t.rank();
    let mut values = vec![0.0; m.rows() * rank];
    for (row, out) in m.iter_rows().zip(values.chunks_exact_mut(rank)) {
        stencil.gradient(row, spacing, out);
    }
    Ok(GradientField {
        grid_shape: m.grid_shape().clone(),
        values,
        spacing: spacing.to_vec(),
    })
}

pub fn hessian_field(t: &DenseTensor, spacing: &[f64]) -> Result<HessianField> {
    check_derivative_input(t, spacing)?;
    let m = derivative_melt(t, DEFAULT_MEMORY_CAP)?;
    let stencil = DerivativeStencil::new(t.rank());
    let rank = t.rank();
    let mut values = vec![0.0; m.rows() * rank * rank];
    for (row, out) in m.iter_rows().zip(values.chunks_exact_mut(rank * rank)) {
        stencil.hessian(row, spacing, out);
    }
    Ok(HessianField {
        grid_shape: m.grid_shape().clone(),
        values,
        spacing: spacing.to_vec(),
    })
}

/// Determinant of a row-major `m x m` matrix by Gaussian elimination with
/// partial pivoting. `m` must not exceed [`MAX_RANK`].
pub fn det_small(mat: &[f64], m: usize) -> f64 {
    assert!(m <= MAX_RANK, "det_small supports up to {MAX_RANK}x{MAX_RANK}");
    assert_eq!(mat.len(), m * m);
    let mut a = [0.0; MAX_RANK * MAX_RANK];
    a[..m * m].copy_from_slice(mat);
    let mut det = 1.0;
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x * m + col].abs().total_cmp(&a[y * m + col].abs()))
            .expect("nonempty range");
        let p = a[pivot * m + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..m {
                a.swap(pivot * m + k, col * m + k);
            }
            det = -det;
        }
        det *= p;
        for r in col + 1..m {
            let f = a[r * m + col] / p;
            if f != 0.0 {
                for k in col + 1..m {
                    a[r * m + k] -= f * a[col * m + k];
                }
            }
        }
    }
    det
}

pub fn gaussian_curvature(t: &DenseTensor, spacing: &[f64]) -> Result<CurvatureField> {
    gaussian_curvature_with(t, spacing, &ExecConfig::default())
}

/// `K = det(H) / (1 + |grad|^2)^2` at every grid point, evaluated straight
/// from the melt rows so the work partitions like any other row map.
pub fn gaussian_curvature_with(t: &DenseTensor, spacing: &[f64], cfg: &ExecConfig) -> Result<CurvatureField> {
    check_derivative_input(t, spacing)?;
    let m = derivative_melt(t, cfg.memory_cap)?;
    let stencil = DerivativeStencil::new(t.rank());
    let tensor = map_and_aggregate(&m, cfg, || (), |_, row| Ok(stencil.curvature(row, spacing)))?;
    Ok(CurvatureField { tensor })
}

/// Applies the 2-D curvature independently to every slice along the last
/// axis of a rank-3 tensor and restacks the results.
pub fn stacked_2d_curvature(t: &DenseTensor, spacing: &[f64]) -> Result<CurvatureField> {
    if t.rank() != 3 {
        return Err(Error::Shape(format!(
            "stacked curvature needs a rank-3 tensor, got rank {}",
            t.rank()
        )));
    }
    if spacing.len() != 2 {
        return Err(Error::Shape(format!(
            "stacked curvature needs 2 in-plane spacings, got {}",
            spacing.len()
        )));
    }
    let [d1, d2, d3] = [t.shape().dims()[0], t.shape().dims()[1], t.shape().dims()[2]];
    let plane = Shape::new(vec![d1, d2])?;
    let src = t.data();
    let mut out = vec![0.0; t.len()];
    for z in 0..d3 {
        let slice: Vec<f64> = (0..d1 * d2).map(|p| src[p * d3 + z]).collect();
        let k = gaussian_curvature(&DenseTensor::new(plane.clone(), slice)?, spacing)?;
        for (p, &v) in k.tensor.data().iter().enumerate() {
            out[p * d3 + z] = v;
        }
    }
    Ok(CurvatureField {
        tensor: DenseTensor::new(t.shape().clone(), out)?,
    })
}
