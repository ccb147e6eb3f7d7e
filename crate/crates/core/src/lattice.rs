//! Boxes of `Z^d`, nearest-neighbor directions and jump kernels.

use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::rng::unit_f64;

/// A nearest-neighbor direction: `axis` in `0..d`, positive or negative.
///
/// Directions are numbered `2 * axis` (positive) and `2 * axis + 1`
/// (negative), so in one dimension `0` is right and `1` is left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction(pub u8);

impl Direction {
    pub const RIGHT: Direction = Direction(0);
    pub const LEFT: Direction = Direction(1);

    pub fn axis(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn offset(self, dim: usize) -> Vec<i64> {
        let mut v = vec![0; dim];
        v[self.axis()] = if self.is_positive() { 1 } else { -1 };
        v
    }
}

/// An axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]` of lattice sites.
///
/// Sites are addressed either by coordinates or by a linear index in
/// row-major order with the first axis varying fastest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    lo: Vec<i64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

/// The simulated part of the lattice.
pub type Window = LatticeBox;

impl LatticeBox {
    /// Box with inclusive corners `lo` and `hi`.
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(ArwError::InvalidParameter(
                "box corners must have the same positive dimension".into(),
            ));
        }
        let mut shape = Vec::with_capacity(lo.len());
        for (&a, &b) in lo.iter().zip(&hi) {
            if b < a {
                return Err(ArwError::InvalidParameter(format!(
                    "empty box side [{a}, {b}]"
                )));
            }
            shape.push((b - a + 1) as usize);
        }
        let mut strides = Vec::with_capacity(shape.len());
        let mut len = 1usize;
        for &s in &shape {
            strides.push(len);
            len = len
                .checked_mul(s)
                .ok_or_else(|| ArwError::InvalidParameter("box too large".into()))?;
        }
        Ok(Self {
            lo,
            shape,
            strides,
            len,
        })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: i64, hi: i64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// Cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: i64, hi: i64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// Centered cube `[-radius, radius]^dim`.
    pub fn centered(dim: usize, radius: u64) -> Result<Self> {
        let r = radius as i64;
        Self::cube(dim, -r, r)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> Vec<i64> {
        self.lo
            .iter()
            .zip(&self.shape)
            .map(|(&l, &s)| l + s as i64 - 1)
            .collect()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.index_of(site).is_some()
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if site.len() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for (a, &s) in site.iter().enumerate() {
            let c = s - self.lo[a];
            if c < 0 || c as usize >= self.shape[a] {
                return None;
            }
            idx += c as usize * self.strides[a];
        }
        Some(idx)
    }

    pub fn site(&self, idx: usize) -> Vec<i64> {
        (0..self.dim()).map(|a| self.coord(idx, a)).collect()
    }

    /// Coordinate of `idx` along one axis.
    #[inline]
    pub fn coord(&self, idx: usize, axis: usize) -> i64 {
        self.lo[axis] + ((idx / self.strides[axis]) % self.shape[axis]) as i64
    }

    /// Index of the neighbor of `idx` in direction `dir`, or `None` when the
    /// step leaves the box.
    #[inline]
    pub fn neighbor(&self, idx: usize, dir: Direction) -> Option<usize> {
        let a = dir.axis();
        let stride = self.strides[a];
        let c = (idx / stride) % self.shape[a];
        if dir.is_positive() {
            (c + 1 < self.shape[a]).then(|| idx + stride)
        } else {
            (c > 0).then(|| idx - stride)
        }
    }

    /// Whether `other` is a sub-box of `self`.
    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.dim() == self.dim() && self.contains(other.lo()) && self.contains(&other.hi())
    }

    /// Membership mask of `inner` over the indices of `self`.
    pub fn mask_of(&self, inner: &LatticeBox) -> Result<Vec<bool>> {
        if !self.contains_box(inner) {
            return Err(ArwError::RegionNotContained("window"));
        }
        Ok((0..self.len)
            .map(|i| inner.contains(&self.site(i)))
            .collect())
    }
}

impl std::fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let hi = self.hi();
        for (a, (lo, hi)) in self.lo.iter().zip(&hi).enumerate() {
            if a > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{lo}, {hi}]")?;
        }
        Ok(())
    }
}

/// Translation-invariant nearest-neighbor jump distribution `p(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpKernel {
    dim: usize,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl JumpKernel {
    /// Kernel with probabilities indexed by [`Direction`] number.
    pub fn new(dim: usize, probs: Vec<f64>) -> Result<Self> {
        if dim == 0 || probs.len() != 2 * dim {
            return Err(ArwError::InvalidParameter(format!(
                "kernel in dimension {dim} needs {} probabilities",
                2 * dim
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ArwError::InvalidParameter(
                "negative jump probability".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ArwError::InvalidParameter(format!(
                "jump probabilities sum to {total}, not 1"
            )));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Last direction with positive mass absorbs rounding.
        if let Some(last) = probs.iter().rposition(|&p| p > 0.0) {
            for c in cumulative.iter_mut().skip(last) {
                *c = f64::INFINITY;
            }
        }
        Ok(Self {
            dim,
            probs,
            cumulative,
        })
    }

    /// Simple symmetric random walk.
    pub fn symmetric(dim: usize) -> Result<Self> {
        Self::new(dim, vec![1.0 / (2 * dim) as f64; 2 * dim])
    }

    /// One-dimensional walk stepping right with probability `p`.
    pub fn biased_1d(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ArwError::InvalidParameter(format!("p = {p} not in [0, 1]")));
        }
        Self::new(1, vec![p, 1.0 - p])
    }

    /// Totally asymmetric walk: always one step right.
    pub fn totally_asymmetric() -> Self {
        Self::new(1, vec![1.0, 0.0]).expect("valid kernel")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prob(&self, dir: Direction) -> f64 {
        self.probs[dir.0 as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Drift `p - q` of a one-dimensional kernel.
    pub fn drift_1d(&self) -> f64 {
        self.probs[0] - self.probs[1]
    }

    /// Direction for a uniform `x` in `[0, 1)`.
    #[inline]
    pub fn direction_for(&self, x: f64) -> Direction {
        let i = self.cumulative.iter().position(|&c| x < c).unwrap_or(0);
        Direction(i as u8)
    }

    /// Direction for 64 random bits.
    #[inline]
    pub fn direction_from_bits(&self, u: u64) -> Direction {
        self.direction_for(unit_f64(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let b = LatticeBox::new(vec![-2, 3], vec![1, 5]).unwrap();
        assert_eq!(b.len(), 12);
        for i in 0..b.len() {
            assert_eq!(b.index_of(&b.site(i)), Some(i));
        }
        assert_eq!(b.index_of(&[2, 3]), None);
        assert_eq!(b.index_of(&[0]), None);
    }

    #[test]
    fn neighbors_respect_boundary() {
        let b = LatticeBox::cube(2, 0, 2).unwrap();
        let corner = b.index_of(&[0, 0]).unwrap();
        assert_eq!(b.neighbor(corner, Direction(1)), None);
        assert_eq!(b.neighbor(corner, Direction(3)), None);
        assert_eq!(b.neighbor(corner, Direction(0)), b.index_of(&[1, 0]));
        assert_eq!(b.neighbor(corner, Direction(2)), b.index_of(&[0, 1]));
        let edge = b.index_of(&[2, 1]).unwrap();
        assert_eq!(b.neighbor(edge, Direction(0)), None);
    }

    #[test]
    fn sub_boxes() {
        let w = LatticeBox::interval(-5, 5).unwrap();
        let v = LatticeBox::interval(-1, 1).unwrap();
        assert!(w.contains_box(&v));
        assert!(!v.contains_box(&w));
        let mask = w.mask_of(&v).unwrap();
        assert_eq!(mask.iter().filter(|m| **m).count(), 3);
        assert!(LatticeBox::interval(1, 0).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(JumpKernel::new(1, vec![0.5, 0.6]).is_err());
        assert!(JumpKernel::new(1, vec![1.5, -0.5]).is_err());
        assert!(JumpKernel::new(2, vec![0.5, 0.5]).is_err());
        let k = JumpKernel::symmetric(2).unwrap();
        assert_eq!(k.probs().len(), 4);
    }

    #[test]
    fn kernel_sampling_frequencies() {
        let k = JumpKernel::biased_1d(0.8).unwrap();
        let n = 100_000;
        let right = (0..n)
            .filter(|&j| k.direction_from_bits(crate::rng::hash3(1, 2, j)) == Direction::RIGHT)
            .count();
        let f = right as f64 / n as f64;
        assert!((f - 0.8).abs() < 4.0 * (0.16f64 / n as f64).sqrt());
        let t = JumpKernel::totally_asymmetric();
        assert_eq!(t.direction_for(0.999_999), Direction::RIGHT);
        assert_eq!(t.direction_for(0.0), Direction::RIGHT);
    }
}
