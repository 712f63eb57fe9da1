//! Dense real-valued planes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

/// `planes × height × width`, all at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub planes: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(planes: usize, height: usize, width: usize) -> Self {
        Self { planes, height, width }
    }

    /// Single-plane `height × width` image.
    pub const fn image(height: usize, width: usize) -> Self {
        Self::new(1, height, width)
    }

    /// Flat vector of length `n`, stored as one `1 × n` plane.
    pub const fn vector(n: usize) -> Self {
        Self::new(1, 1, n)
    }

    pub const fn len(&self) -> usize {
        self.planes * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane_len(&self) -> usize {
        self.height * self.width
    }

    fn validate(&self) -> Result<()> {
        if self.planes == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::dimension(format!("empty shape {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.planes, self.height, self.width)
    }
}

/// Row-major planes of `f64`, the state vector of every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn zeros(shape: Shape) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        Self { shape, data: vec![value; shape.len()] }
    }

    /// Wraps `data`; fails if the length disagrees with `shape`, the shape is
    /// empty, or any entry is NaN/∞.
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if data.len() != shape.len() {
            return Err(Error::dimension(format!("data length {} does not match shape {shape}", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("entry {i} of input tensor")));
        }
        Ok(Self { shape, data })
    }

    pub fn from_vector(data: Vec<f64>) -> Result<Self> {
        Self::from_vec(Shape::vector(data.len()), data)
    }

    pub fn scalar(v: f64) -> Self {
        Self { shape: Shape::vector(1), data: vec![v] }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for p in 0..shape.planes {
            for i in 0..shape.height {
                for j in 0..shape.width {
                    data.push(f(p, i, j));
                }
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
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

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, p: usize) -> &[f64] {
        let n = self.shape.plane_len();
        &self.data[p * n..(p + 1) * n]
    }

    pub fn plane_mut(&mut self, p: usize) -> &mut [f64] {
        let n = self.shape.plane_len();
        &mut self.data[p * n..(p + 1) * n]
    }

    #[inline]
    pub fn get(&self, p: usize, i: usize, j: usize) -> f64 {
        self.data[self.index(p, i, j)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, i: usize, j: usize, v: f64) {
        let k = self.index(p, i, j);
        self.data[k] = v;
    }

    #[inline]
    fn index(&self, p: usize, i: usize, j: usize) -> usize {
        (p * self.shape.height + i) * self.shape.width + j
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.into()))
        }
    }

    pub fn check_shape(&self, expected: Shape) -> Result<()> {
        if self.shape == expected {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected, actual: self.shape })
        }
    }

    pub fn reshape(mut self, shape: Shape) -> Result<Self> {
        if shape.len() != self.len() {
            return Err(Error::dimension(format!("cannot reshape {} into {shape}", self.shape)));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.shape, other.shape);
        Self { shape: self.shape, data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|v| v.clamp(lo, hi))
    }
}
