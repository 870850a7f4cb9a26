// SPDX-License-Identifier: Apache-2.0

use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index error: {0}")]
    Index(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parameter error: {0}")]
    Param(String),

    /// A computation produced NaN or infinity. `index` is the grid index
    /// (melt-level operations) or the row index (row executors).
    #[error("numeric error at {}: {detail}", Coords(.index))]
    Numeric { index: Vec<usize>, detail: String },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("melt matrix needs {requested} bytes, memory cap is {cap} bytes")]
    MemoryCap { requested: u128, cap: u64 },

    /// Two execution paths that must agree produced different results.
    #[error("result mismatch: {0}")]
    Mismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

struct Coords<'a>(&'a [usize]);

impl fmt::Display for Coords<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
