// SPDX-License-Identifier: Apache-2.0

//! Dense row-major tensors of `f64`.
//!
//! A [`DenseTensor`] is immutable once constructed: every constructor checks
//! that the payload length matches the [`Shape`] and that every value is
//! finite, so downstream kernels never have to guard against NaN or infinity
//! coming in through the data.

mod io;
mod pgm;

pub use io::{read_tensor, write_tensor, MAGIC, VERSION};
pub use pgm::{export_pgm, import_pgm};

use std::fmt;

use crate::error::{Error, Result};

/// Highest tensor rank the crate accepts.
pub const MAX_RANK: usize = 8;

/// Per-axis extents of a tensor, outermost axis first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(Error::Shape(format!(
                "rank must be between 1 and {MAX_RANK}, got {}",
                dims.len()
            )));
        }
        if let Some(axis) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Shape(format!("extent of axis {axis} is zero")));
        }
        let mut count: u64 = 1;
        for &d in &dims {
            count = count
                .checked_mul(d as u64)
                .ok_or_else(|| Error::Shape(format!("element count of {dims:?} overflows")))?;
        }
        usize::try_from(count)
            .map_err(|_| Error::Shape(format!("element count of {dims:?} overflows")))?;
        Ok(Shape(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Number of elements, the product of all extents.
    pub fn count(&self) -> usize {
        self.0.iter().product()
    }

    /// Row-major strides in elements.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for axis in (0..self.0.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.0[axis + 1];
        }
        strides
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A position inside a tensor, one coordinate per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(coords: &[usize]) -> Self {
        MultiIndex(coords.to_vec())
    }
}

/// Row-major linear offset of `idx` in `shape`.
pub fn ravel_index(idx: &MultiIndex, shape: &Shape) -> Result<usize> {
    ravel_coords(&idx.0, shape)
}

pub(crate) fn ravel_coords(coords: &[usize], shape: &Shape) -> Result<usize> {
    if coords.len() != shape.rank() {
        return Err(Error::Index(format!(
            "index of rank {} used with shape {shape}",
            coords.len()
        )));
    }
    let mut offset = 0usize;
    for (axis, (&c, &d)) in coords.iter().zip(shape.dims()).enumerate() {
        if c >= d {
            return Err(Error::Index(format!(
                "coordinate {c} out of bounds for axis {axis} of extent {d}"
            )));
        }
        offset = offset * d + c;
    }
    Ok(offset)
}

/// Inverse of [`ravel_index`].
pub fn unravel_index(offset: usize, shape: &Shape) -> Result<MultiIndex> {
    let count = shape.count();
    if offset >= count {
        return Err(Error::Index(format!(
            "offset {offset} out of bounds for {count} elements"
        )));
    }
    let mut coords = vec![0; shape.rank()];
    unravel_into(offset, shape.dims(), &mut coords);
    Ok(MultiIndex(coords))
}

/// Unchecked unravel for hot loops; `coords.len()` must equal `dims.len()`.
pub(crate) fn unravel_into(mut offset: usize, dims: &[usize], coords: &mut [usize]) {
    for axis in (0..dims.len()).rev() {
        coords[axis] = offset % dims[axis];
        offset /= dims[axis];
    }
}

/// Advance `coords` to the next row-major position. Returns `false` after
/// wrapping past the last element.
pub(crate) fn increment(coords: &mut [usize], dims: &[usize]) -> bool {
    for axis in (0..dims.len()).rev() {
        coords[axis] += 1;
        if coords[axis] < dims[axis] {
            return true;
        }
        coords[axis] = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Wraps `data` (row-major) as a tensor of `shape`.
    ///
    /// Fails with [`Error::Shape`] on a length mismatch and with
    /// [`Error::Data`] if any value is NaN or infinite.
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.count() {
            return Err(Error::Shape(format!(
                "shape {shape} needs {} values, got {}",
                shape.count(),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value {} at offset {pos}",
                data[pos]
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn filled(shape: Shape, value: f64) -> Result<Self> {
        let n = shape.count();
        DenseTensor::new(shape, vec![value; n])
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.count();
        DenseTensor {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Builds a tensor by evaluating `f` at every position in row-major order.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.count());
        let mut coords = vec![0; shape.rank()];
        loop {
            data.push(f(&coords));
            if !increment(&mut coords, shape.dims()) {
                break;
            }
        }
        DenseTensor::new(shape, data)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, coords: &[usize]) -> Result<f64> {
        Ok(self.data[ravel_coords(coords, &self.shape)?])
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Largest absolute elementwise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "cannot compare {} with {}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn ravel_examples() {
        let s = shape(&[3, 4]);
        assert_eq!(ravel_index(&MultiIndex(vec![1, 2]), &s).unwrap(), 6);
        assert_eq!(ravel_index(&MultiIndex(vec![2, 3]), &s).unwrap(), 11);
        assert_eq!(
            ravel_index(&MultiIndex(vec![0, 0, 0]), &shape(&[7, 2, 5])).unwrap(),
            0
        );
        assert!(matches!(
            ravel_index(&MultiIndex(vec![3, 0]), &s),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            ravel_index(&MultiIndex(vec![0]), &s),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn unravel_examples() {
        assert_eq!(unravel_index(6, &shape(&[3, 4])).unwrap().0, vec![1, 2]);
        assert_eq!(unravel_index(0, &shape(&[5, 5, 5])).unwrap().0, vec![0, 0, 0]);
        assert_eq!(unravel_index(11, &shape(&[3, 4])).unwrap().0, vec![2, 3]);
        assert!(matches!(
            unravel_index(12, &shape(&[3, 4])),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn shape_rejects_bad_dims() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![2, 0]).is_err());
        assert!(Shape::new(vec![1; 9]).is_err());
        assert!(Shape::new(vec![1usize << 40, 1 << 40]).is_err());
        assert_eq!(shape(&[2, 3, 4]).strides(), vec![12, 4, 1]);
    }

    #[test]
    fn tensor_rejects_non_finite_and_bad_length() {
        assert!(matches!(
            DenseTensor::new(shape(&[2]), vec![1.0, f64::NAN]),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            DenseTensor::new(shape(&[2]), vec![1.0, f64::INFINITY]),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            DenseTensor::new(shape(&[3]), vec![1.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn from_fn_is_row_major() {
        let t = DenseTensor::from_fn(shape(&[2, 3]), |c| (c[0] * 10 + c[1]) as f64).unwrap();
        assert_eq!(t.data(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(t.get(&[1, 2]).unwrap(), 12.0);
    }

    fn arb_shape() -> impl Strategy<Value = Shape> {
        prop::collection::vec(1usize..=7, 1..=5).prop_map(|d| Shape::new(d).unwrap())
    }

    proptest! {
        #[test]
        fn ravel_unravel_bijection(s in arb_shape(), seed in any::<u64>()) {
            let n = s.count();
            let offset = (seed % n as u64) as usize;
            let idx = unravel_index(offset, &s).unwrap();
            prop_assert_eq!(ravel_index(&idx, &s).unwrap(), offset);
            let again = unravel_index(ravel_index(&idx, &s).unwrap(), &s).unwrap();
            prop_assert_eq!(again, idx);
        }

        #[test]
        fn last_axis_is_fastest(s in arb_shape(), seed in any::<u64>()) {
            let offset = (seed % s.count() as u64) as usize;
            let mut idx = unravel_index(offset, &s).unwrap();
            let last = s.rank() - 1;
            prop_assume!(idx.0[last] + 1 < s.dims()[last]);
            idx.0[last] += 1;
            prop_assert_eq!(ravel_index(&idx, &s).unwrap(), offset + 1);
        }
    }
}
