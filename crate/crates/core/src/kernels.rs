// SPDX-License-Identifier: Apache-2.0

//! Gaussian densities and the weight vectors applied to melt rows.
//!
//! Weight vectors are aligned with melt-matrix column order, so a kernel
//! built from an [`OperatorSpec`] can be dotted directly with any row of a
//! melt taken under the same operator.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::melt::OperatorSpec;

/// Multivariate normal parameters with the inverse covariance and
/// determinant cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    mean: Vec<f64>,
    covariance: Vec<f64>,
    inverse: Vec<f64>,
    determinant: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl GaussianParams {
    /// `covariance` is row-major `k x k` and must be symmetric positive
    /// definite; anything else is a [`Error::Param`].
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let k = mean.len();
        if k == 0 {
            return Err(Error::Param("gaussian of dimension zero".into()));
        }
        if covariance.len() != k * k {
            return Err(Error::Param(format!(
                "covariance needs {} entries for dimension {k}, got {}",
                k * k,
                covariance.len()
            )));
        }
        if mean.iter().chain(&covariance).any(|v| !v.is_finite()) {
            return Err(Error::Param("non-finite gaussian parameter".into()));
        }
        for i in 0..k {
            for j in 0..i {
                if (covariance[i * k + j] - covariance[j * k + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::Param(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = cholesky(&covariance, k)
            .ok_or_else(|| Error::Param("covariance is not positive definite".into()))?;
        let determinant = (0..k).map(|i| chol[i * k + i] * chol[i * k + i]).product();
        let inverse = inverse_from_cholesky(&chol, k);
        Ok(GaussianParams {
            mean,
            covariance,
            inverse,
            determinant,
        })
    }

    /// Zero-mean gaussian with independent axes of the given variances.
    pub fn centered_diagonal(variances: &[f64]) -> Result<Self> {
        let k = variances.len();
        let mut cov = vec![0.0; k * k];
        for (i, &v) in variances.iter().enumerate() {
            cov[i * k + i] = v;
        }
        GaussianParams::new(vec![0.0; k], cov)
    }

    pub fn isotropic(k: usize, sigma: f64) -> Result<Self> {
        GaussianParams::centered_diagonal(&vec![sigma * sigma; k])
    }

    /// Spatial term sized to an operator window: standard deviation
    /// `(extent - 1) / 4` per axis so the window spans two deviations each
    /// way. Axes of extent 1 only ever see offset zero and get variance 1.
    pub fn default_spatial(op: &OperatorSpec) -> Self {
        let variances: Vec<f64> = op
            .extents()
            .dims()
            .iter()
            .map(|&e| {
                if e == 1 {
                    1.0
                } else {
                    let s = (e - 1) as f64 / 4.0;
                    s * s
                }
            })
            .collect();
        GaussianParams::centered_diagonal(&variances).expect("positive diagonal is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn inverse(&self) -> &[f64] {
        &self.inverse
    }

    pub fn determinant(&self) -> f64 {
        self.determinant
    }

    /// `d^T Σ^-1 d`.
    pub fn mahalanobis_sq(&self, d: &[f64]) -> f64 {
        let k = self.dim();
        let mut q = 0.0;
        for i in 0..k {
            let mut row = 0.0;
            for j in 0..k {
                row += self.inverse[i * k + j] * d[j];
            }
            q += d[i] * row;
        }
        q
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "point of dimension {} for a gaussian of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Lower Cholesky factor, or `None` if a pivot is not strictly positive.
fn cholesky(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for j in 0..k {
        let mut d = a[j * k + j];
        for p in 0..j {
            d -= l[j * k + p] * l[j * k + p];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            l[i * k + j] = s / d;
        }
    }
    Some(l)
}

fn inverse_from_cholesky(l: &[f64], k: usize) -> Vec<f64> {
    // L^-1 by forward substitution, then Σ^-1 = L^-T L^-1
    let mut linv = vec![0.0; k * k];
    for col in 0..k {
        for i in col..k {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for p in col..i {
                s -= l[i * k + p] * linv[p * k + col];
            }
            linv[i * k + col] = s / l[i * k + i];
        }
    }
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = 0.0;
            for p in i.max(j)..k {
                s += linv[p * k + i] * linv[p * k + j];
            }
            inv[i * k + j] = s;
            inv[j * k + i] = s;
        }
    }
    inv
}

/// Univariate normal density.
pub fn univariate_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = x - mu;
    (-(z * z) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Derivative of [`univariate_pdf`] with respect to `x`.
pub fn univariate_gradient(x: f64, mu: f64, sigma: f64) -> f64 {
    -(x - mu) / (sigma * sigma) * univariate_pdf(x, mu, sigma)
}

pub fn gaussian_pdf(x: &[f64], p: &GaussianParams) -> Result<f64> {
    p.check_dim(x)?;
    let d: Vec<f64> = x.iter().zip(&p.mean).map(|(a, m)| a - m).collect();
    let norm = (2.0 * PI).powf(-(p.dim() as f64) / 2.0) / p.determinant.sqrt();
    Ok(norm * (-0.5 * p.mahalanobis_sq(&d)).exp())
}

/// Gradient of the density: `-Σ^-1 (x - μ) pdf(x)`.
pub fn gaussian_gradient(x: &[f64], p: &GaussianParams) -> Result<Vec<f64>> {
    let density = gaussian_pdf(x, p)?;
    let k = p.dim();
    let d: Vec<f64> = x.iter().zip(&p.mean).map(|(a, m)| a - m).collect();
    Ok((0..k)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..k {
                s += p.inverse[i * k + j] * d[j];
            }
            -s * density
        })
        .collect())
}

/// How the range deviation of the bilateral filter is chosen per row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRPolicy {
    Constant(f64),
    /// Sample standard deviation of the row, never below `floor`.
    Adaptive { floor: f64 },
}

pub const DEFAULT_SIGMA_R_FLOOR: f64 = 1e-6;

impl SigmaRPolicy {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Param(format!("sigma_r must be positive, got {value}")));
        }
        Ok(SigmaRPolicy::Constant(value))
    }

    pub fn adaptive(floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::Param(format!("sigma_r floor must be positive, got {floor}")));
        }
        Ok(SigmaRPolicy::Adaptive { floor })
    }

    pub fn sigma_for(&self, row: &[f64]) -> f64 {
        match *self {
            SigmaRPolicy::Constant(s) => s,
            SigmaRPolicy::Adaptive { floor } => adaptive_sigma_r(row, floor),
        }
    }
}

impl Default for SigmaRPolicy {
    fn default() -> Self {
        SigmaRPolicy::Adaptive {
            floor: DEFAULT_SIGMA_R_FLOOR,
        }
    }
}

/// `max(floor, s)` where `s` is the unbiased sample standard deviation of
/// `row`. A single-element row has no spread and yields `floor`.
pub fn adaptive_sigma_r(row: &[f64], floor: f64) -> f64 {
    let n = row.len();
    if n < 2 {
        return floor;
    }
    let mean = row.iter().sum::<f64>() / n as f64;
    let ss: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt().max(floor)
}

/// Weights aligned with melt columns.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector {
    pub weights: Vec<f64>,
    pub normalized: bool,
}

impl KernelVector {
    /// Scales `weights` to sum to one.
    pub fn normalize(mut weights: Vec<f64>) -> Result<Self> {
        normalize_in_place(&mut weights)?;
        Ok(KernelVector {
            weights,
            normalized: true,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weighted sum of a melt row.
    pub fn apply(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row)
    }
}

/// Sequential dot product. Every weighted-sum path in the crate goes through
/// this so that equal weights give bitwise-equal outputs.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

fn normalize_in_place(w: &mut [f64]) -> Result<()> {
    let mut total = 0.0;
    for v in w.iter() {
        total += v;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numeric {
            index: Vec::new(),
            detail: format!("weight sum {total} cannot be normalized"),
        });
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    Ok(())
}

/// `-0.5 * o^T Σ^-1 o` for every window offset.
fn spatial_exponents(offsets: &[Vec<isize>], spatial: &GaussianParams) -> Vec<f64> {
    let mut buf = vec![0.0; spatial.dim()];
    offsets
        .iter()
        .map(|o| {
            for (b, &x) in buf.iter_mut().zip(o) {
                *b = x as f64;
            }
            -0.5 * spatial.mahalanobis_sq(&buf)
        })
        .collect()
}

fn check_spatial(rank: usize, spatial: &GaussianParams) -> Result<()> {
    if spatial.dim() != rank {
        return Err(Error::Shape(format!(
            "spatial gaussian of dimension {} for a rank-{rank} operator",
            spatial.dim()
        )));
    }
    if spatial.mean().iter().any(|&m| m != 0.0) {
        return Err(Error::Param("spatial gaussian must have zero mean".into()));
    }
    Ok(())
}

/// Normalized Gaussian weights over the operator window. The density's
/// constant factor cancels under normalization, so only the exponent is
/// evaluated.
pub fn gaussian_kernel(op: &OperatorSpec, spatial: &GaussianParams) -> Result<KernelVector> {
    check_spatial(op.rank(), spatial)?;
    let w = spatial_exponents(&op.offsets(), spatial)
        .into_iter()
        .map(f64::exp)
        .collect();
    KernelVector::normalize(w)
}

/// Uniform weights over the window.
pub fn box_kernel(op: &OperatorSpec) -> KernelVector {
    let n = op.window_len();
    KernelVector {
        weights: vec![1.0 / n as f64; n],
        normalized: true,
    }
}

/// One at the center, zero elsewhere.
pub fn delta_kernel(op: &OperatorSpec) -> KernelVector {
    let mut weights = vec![0.0; op.window_len()];
    weights[op.center()] = 1.0;
    KernelVector {
        weights,
        normalized: true,
    }
}

/// Precomputed bilateral weighting for one operator window.
#[derive(Debug, Clone)]
pub struct BilateralKernel {
    spatial: Vec<f64>,
    center: usize,
    policy: SigmaRPolicy,
}

impl BilateralKernel {
    pub fn new(
        offsets: &[Vec<isize>],
        spatial: &GaussianParams,
        policy: SigmaRPolicy,
    ) -> Result<Self> {
        let rank = offsets.first().map_or(0, Vec::len);
        check_spatial(rank, spatial)?;
        let center = (offsets.len() - 1) / 2;
        if offsets[center].iter().any(|&o| o != 0) {
            return Err(Error::Shape("window offsets have no zero center".into()));
        }
        Ok(BilateralKernel {
            spatial: spatial_exponents(offsets, spatial),
            center,
            policy,
        })
    }

    pub fn len(&self) -> usize {
        self.spatial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spatial.is_empty()
    }

    /// Writes the normalized weights for `row` into `out`.
    pub fn weights_into(&self, row: &[f64], out: &mut [f64]) -> Result<()> {
        let sigma = self.policy.sigma_for(row);
        let denom = 2.0 * sigma * sigma;
        let center = row[self.center];
        for ((w, &s), &v) in out.iter_mut().zip(&self.spatial).zip(row) {
            let d = v - center;
            *w = (s - d * d / denom).exp();
        }
        normalize_in_place(out)
    }

    /// Filtered value of one row; `scratch` must hold `len()` values.
    pub fn apply(&self, row: &[f64], scratch: &mut [f64]) -> Result<f64> {
        self.weights_into(row, scratch)?;
        Ok(dot(scratch, row))
    }
}

/// Normalized bilateral weights for a single melt row.
pub fn bilateral_weights(
    row: &[f64],
    offsets: &[Vec<isize>],
    spatial: &GaussianParams,
    policy: SigmaRPolicy,
) -> Result<KernelVector> {
    if row.len() != offsets.len() {
        return Err(Error::Shape(format!(
            "row of {} values for {} offsets",
            row.len(),
            offsets.len()
        )));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in bilateral row".into()));
    }
    let kernel = BilateralKernel::new(offsets, spatial, policy)?;
    let mut weights = vec![0.0; row.len()];
    kernel.weights_into(row, &mut weights)?;
    Ok(KernelVector {
        weights,
        normalized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::melt::PaddingMode;
    use proptest::prelude::*;

    fn op(ext: &[usize]) -> OperatorSpec {
        OperatorSpec::new(ext.to_vec(), vec![1; ext.len()], PaddingMode::SameReflect).unwrap()
    }

    #[test]
    fn pdf_reference_values() {
        let std1 = GaussianParams::isotropic(1, 1.0).unwrap();
        assert_eq!(gaussian_pdf(&[0.0], &std1).unwrap(), 0.3989422804014327);
        // 1/sqrt(2π)·e^(-1/2), 40-digit reference
        assert!((gaussian_pdf(&[1.0], &std1).unwrap() - 0.24197072451914337).abs() < 1e-16);
        let std2 = GaussianParams::isotropic(2, 1.0).unwrap();
        assert!((gaussian_pdf(&[0.0, 0.0], &std2).unwrap() - 0.15915494309189535).abs() < 1e-16);
        assert!(matches!(gaussian_pdf(&[0.0], &std2), Err(Error::Shape(_))));
    }

    #[test]
    fn gradient_reference_values() {
        let p = GaussianParams::new(vec![0.3, -1.0], vec![2.0, 0.4, 0.4, 1.0]).unwrap();
        assert_eq!(gaussian_gradient(&[0.3, -1.0], &p).unwrap(), vec![0.0, 0.0]);
        let std1 = GaussianParams::isotropic(1, 1.0).unwrap();
        let g = gaussian_gradient(&[1.0], &std1).unwrap();
        assert!((g[0] + 0.24197072451914337).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_covariance() {
        assert!(GaussianParams::new(vec![0.0, 0.0], vec![1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(GaussianParams::new(vec![0.0, 0.0], vec![1.0, 0.1, 0.2, 1.0]).is_err());
        assert!(GaussianParams::new(vec![0.0], vec![0.0]).is_err());
        assert!(GaussianParams::new(vec![0.0], vec![1.0, 0.0]).is_err());
        let p = GaussianParams::new(vec![0.0, 0.0], vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!((p.determinant() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_matches_covariance() {
        let cov = vec![4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0];
        let p = GaussianParams::new(vec![0.0; 3], cov.clone()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|q| cov[i * 3 + q] * p.inverse()[q * 3 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // midpoint rule on ±8σ boxes
        let p1 = GaussianParams::new(vec![0.5], vec![0.7]).unwrap();
        let h = 1e-3;
        let s = 0.7f64.sqrt();
        let total: f64 = (0..(16.0 * s / h) as usize)
            .map(|i| gaussian_pdf(&[0.5 - 8.0 * s + (i as f64 + 0.5) * h], &p1).unwrap() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6);

        let p2 = GaussianParams::new(vec![0.0, 0.0], vec![1.0, 0.3, 0.3, 0.5]).unwrap();
        let h = 0.02;
        let n = (16.0 / h) as usize;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [-8.0 + (i as f64 + 0.5) * h, -8.0 + (j as f64 + 0.5) * h];
                total += gaussian_pdf(&x, &p2).unwrap() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn gaussian_kernel_examples() {
        for ext in [&[1usize][..], &[1, 1], &[1, 1, 1]] {
            let o = op(ext);
            let k = gaussian_kernel(&o, &GaussianParams::default_spatial(&o)).unwrap();
            assert_eq!(k.weights, vec![1.0]);
        }
        let o = op(&[3]);
        let flat = gaussian_kernel(&o, &GaussianParams::isotropic(1, 1e9).unwrap()).unwrap();
        for w in &flat.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-9);
        }
        let unit = gaussian_kernel(&o, &GaussianParams::isotropic(1, 1.0).unwrap()).unwrap();
        let expect = [0.274068619061197, 0.45186276187760605, 0.274068619061197];
        for (w, e) in unit.weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }
        let bad = GaussianParams::new(vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(gaussian_kernel(&o, &bad), Err(Error::Param(_))));
        assert!(matches!(
            gaussian_kernel(&op(&[3, 3]), &unit_params(1)),
            Err(Error::Shape(_))
        ));
    }

    fn unit_params(k: usize) -> GaussianParams {
        GaussianParams::isotropic(k, 1.0).unwrap()
    }

    #[test]
    fn center_weight_is_largest() {
        let o = op(&[5, 3, 7]);
        let p = GaussianParams::centered_diagonal(&[1.0, 0.3, 4.0]).unwrap();
        let k = gaussian_kernel(&o, &p).unwrap();
        let c = k.weights[o.center()];
        assert!(k.weights.iter().all(|&w| w <= c));
    }

    #[test]
    fn adaptive_sigma_examples() {
        assert_eq!(adaptive_sigma_r(&[0.0; 9], 1e-6), 1e-6);
        let r = adaptive_sigma_r(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1e-6);
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(adaptive_sigma_r(&[4.2], 0.5), 0.5);
        let row = [0.1, 0.7, -0.3, 0.25];
        let scaled: Vec<f64> = row.iter().map(|v| v * 3.5).collect();
        assert!(
            (adaptive_sigma_r(&scaled, 1e-6) - 3.5 * adaptive_sigma_r(&row, 1e-6)).abs() < 1e-14
        );
    }

    #[test]
    fn bilateral_on_constant_row_is_gaussian_kernel() {
        let o = op(&[3, 5]);
        let p = GaussianParams::centered_diagonal(&[0.8, 2.0]).unwrap();
        let g = gaussian_kernel(&o, &p).unwrap();
        for policy in [SigmaRPolicy::default(), SigmaRPolicy::Constant(0.01)] {
            let b = bilateral_weights(&[0.42; 15], &o.offsets(), &p, policy).unwrap();
            assert_eq!(b.weights, g.weights);
        }
        let row: Vec<f64> = (0..15).map(|i| (i as f64 * 0.37).sin()).collect();
        let huge = bilateral_weights(&row, &o.offsets(), &p, SigmaRPolicy::Constant(1e9)).unwrap();
        for (a, b) in huge.weights.iter().zip(&g.weights) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bilateral_row_errors() {
        let o = op(&[3]);
        let p = unit_params(1);
        assert!(bilateral_weights(&[1.0, 2.0], &o.offsets(), &p, SigmaRPolicy::default()).is_err());
        assert!(
            bilateral_weights(&[1.0, f64::NAN, 2.0], &o.offsets(), &p, SigmaRPolicy::default())
                .is_err()
        );
        assert!(SigmaRPolicy::constant(0.0).is_err());
        assert!(SigmaRPolicy::adaptive(-1.0).is_err());
    }

    #[test]
    fn anisotropic_kernel_symmetries() {
        let o = op(&[5, 5]);
        let p = GaussianParams::centered_diagonal(&[0.5, 2.0]).unwrap();
        let k = gaussian_kernel(&o, &p).unwrap();
        let at = |i: usize, j: usize| k.weights[i * 5 + j];
        let mut swapped_equal = true;
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(at(i, j), at(4 - i, j));
                assert_eq!(at(i, j), at(i, 4 - j));
                swapped_equal &= at(i, j) == at(j, i);
            }
        }
        assert!(!swapped_equal);
    }

    proptest! {
        #[test]
        fn multivariate_reduces_to_univariate(x in -10.0f64..10.0, mu in -5.0f64..5.0, sigma in 0.2f64..5.0) {
            let p = GaussianParams::new(vec![mu], vec![sigma * sigma]).unwrap();
            let pdf = gaussian_pdf(&[x], &p).unwrap();
            let grad = gaussian_gradient(&[x], &p).unwrap()[0];
            prop_assert!((pdf - univariate_pdf(x, mu, sigma)).abs() <= 1e-14);
            prop_assert!((grad - univariate_gradient(x, mu, sigma)).abs() <= 1e-14);
        }

        #[test]
        fn gradient_matches_central_difference(
            k in 1usize..=4,
            raw in prop::collection::vec(-1.0f64..1.0, 4 + 16 + 4),
        ) {
            // Σ = B Bᵀ + 0.5 I is SPD
            let b = &raw[4..4 + k * k];
            let mut cov = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    cov[i * k + j] = (0..k).map(|q| b[i * k + q] * b[j * k + q]).sum::<f64>()
                        + if i == j { 0.5 } else { 0.0 };
                }
            }
            let p = GaussianParams::new(raw[..k].to_vec(), cov).unwrap();
            let x: Vec<f64> = raw[20..20 + k].iter().zip(p.mean()).map(|(d, m)| m + 1.5 * d).collect();
            let g = gaussian_gradient(&x, &p).unwrap();
            let h = 1e-5;
            let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            prop_assume!(scale > 1e-8);
            for i in 0..k {
                let mut up = x.clone();
                let mut dn = x.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (gaussian_pdf(&up, &p).unwrap() - gaussian_pdf(&dn, &p).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() / scale < 1e-7, "axis {} fd {} analytic {}", i, fd, g[i]);
            }
        }

        #[test]
        fn bilateral_weights_are_normalized(
            row in prop::collection::vec(-3.0f64..3.0, 9),
            sigma in 1e-3f64..10.0,
            adaptive in any::<bool>(),
        ) {
            let o = op(&[3, 3]);
            let policy = if adaptive { SigmaRPolicy::default() } else { SigmaRPolicy::Constant(sigma) };
            let p = GaussianParams::default_spatial(&o);
            let w = bilateral_weights(&row, &o.offsets(), &p, policy).unwrap();
            prop_assert!(w.weights.iter().all(|&v| v >= 0.0));
            prop_assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
