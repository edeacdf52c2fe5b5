use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable overriding the cap on total Hilbert-space dimension.
pub const SIZE_CAP_ENV: &str = "NONLOC_SIZE_CAP";
pub const DEFAULT_SIZE_CAP: usize = 1024;

/// Current cap on the side length of any constructed operator.
pub fn size_cap() -> usize {
    std::env::var(SIZE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SIZE_CAP)
}

pub fn check_size(dim: usize) -> Result<()> {
    let cap = size_cap();
    if dim > cap {
        return Err(Error::SizeCapExceeded { dim, cap });
    }
    Ok(())
}

/// `d^m`, or `None` on overflow.
pub fn checked_pow(d: usize, m: usize) -> Option<usize> {
    u32::try_from(m).ok().and_then(|m| d.checked_pow(m))
}

/// `d^m` checked against the size cap.
pub fn capped_pow(d: usize, m: usize) -> Result<usize> {
    let dim = checked_pow(d, m).ok_or(Error::SizeCapExceeded {
        dim: usize::MAX,
        cap: size_cap(),
    })?;
    check_size(dim)?;
    Ok(dim)
}

/// Local dimensions of a multipartite system, party 1 leftmost.
///
/// Internally parties are indexed from 0; the CLI and JSON partition strings
/// use 1-based labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter("shape needs at least one party".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidParameter(format!("local dimension {d} is below 2")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(Error::InvalidParameter("total dimension overflows".into()))?;
        Ok(Self { dims })
    }

    /// `parties` copies of local dimension `d`.
    pub fn uniform(parties: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; parties])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: the index step of party `k`'s digit.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims }
    }

    /// Sub-shape of the given parties, in the given order.
    pub fn select(&self, parties: &[usize]) -> Result<Self> {
        self.check_indices(parties)?;
        Ok(Self {
            dims: parties.iter().map(|&k| self.dims[k]).collect(),
        })
    }

    /// Validates 0-based party indices: in range and pairwise distinct.
    pub fn check_indices(&self, parties: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.dims.len()];
        for &k in parties {
            if k >= self.dims.len() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    parties: self.dims.len(),
                });
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidParameter(format!("party {} repeated", k + 1)));
            }
        }
        Ok(())
    }

    pub(crate) fn check_matrix(&self, rows: usize, cols: usize) -> Result<()> {
        let n = self.total_dim();
        if rows != n || cols != n {
            return Err(Error::DimensionMismatch(format!(
                "shape {:?} needs a {n}x{n} operator, got {rows}x{cols}",
                self.dims
            )));
        }
        Ok(())
    }
}
