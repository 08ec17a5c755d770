use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm};

/// A finite set of arm vectors in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    dim: usize,
    data: Vec<f64>,
}

impl ArmSet {
    pub fn new(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("arm dimension must be at least 1"));
        }
        if rows.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(invalid("arm coordinates must be finite"));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).ok_or(Error::EmptyArmSet)?;
        Self::new(dim, rows)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("arm dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn arm(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize) -> Result<&[f64]> {
        if i < self.len() {
            Ok(self.arm(i))
        } else {
            Err(Error::ArmIndex {
                index: i,
                len: self.len(),
            })
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|a| a.to_vec()).collect()
    }

    /// Arms at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> ArmSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.arm(i));
        }
        ArmSet {
            dim: self.dim,
            data,
        }
    }

    /// `⟨x, θ⟩` for every arm.
    pub fn inner_products(&self, theta: &[f64]) -> Vec<f64> {
        self.iter().map(|a| dot(a, theta)).collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.iter().map(norm).fold(0.0, f64::max)
    }

    /// Each arm extended with a trailing coordinate 1.
    pub fn lifted(&self) -> ArmSet {
        let dim = self.dim + 1;
        let mut data = Vec::with_capacity(self.len() * dim);
        for a in self.iter() {
            data.extend_from_slice(a);
            data.push(1.0);
        }
        ArmSet { dim, data }
    }

    /// Coordinates `Bᵀ(x - origin)` for an orthonormal row basis `B`.
    pub fn project(&self, origin: &[f64], basis: &[Vec<f64>]) -> ArmSet {
        let dim = basis.len();
        let mut data = Vec::with_capacity(self.len() * dim);
        let mut centered = alloc::vec![0.0; self.dim];
        for a in self.iter() {
            for ((c, x), o) in centered.iter_mut().zip(a).zip(origin) {
                *c = x - o;
            }
            data.extend(basis.iter().map(|b| dot(b, &centered)));
        }
        ArmSet { dim, data }
    }
}

/// Index of the largest value; the first one on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_ragged_rows() {
        let err = ArmSet::new(2, &[vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
        assert_eq!(ArmSet::from_rows(&[]).unwrap_err(), Error::EmptyArmSet);
    }

    #[test]
    fn lift_and_subset() {
        let arms = ArmSet::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let sub = arms.subset(&[2, 0]);
        assert_eq!(sub.to_rows(), vec![vec![5.0, 6.0], vec![1.0, 2.0]]);
        assert_eq!(arms.lifted().arm(1), &[3.0, 4.0, 1.0]);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
