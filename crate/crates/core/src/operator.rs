//! Linear operators on [`ImageTensor`]s: circular convolution, s-fold
//! sampling, their compositions, and power iteration for `‖AᵀA‖`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::ConvKernel;
use crate::rng;
use crate::tensor::{ImageTensor, Shape};

/// Default number of power iterations for [`spectral_norm`].
pub const POWER_ITERATIONS: usize = 500;

/// A linear map together with its Euclidean adjoint.
pub trait LinearOperator {
    fn input_shape(&self) -> Shape;
    fn output_shape(&self) -> Shape;
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor>;
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor>;

    /// `AᵀA x`.
    fn normal(&self, x: &ImageTensor) -> Result<ImageTensor> {
        self.apply_adjoint(&self.apply(x)?)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn input_shape(&self) -> Shape {
        (**self).input_shape()
    }
    fn output_shape(&self) -> Shape {
        (**self).output_shape()
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        (**self).apply_adjoint(y)
    }
}

/// `y[i,j] = Σ k[u,v]·x[(i−u) mod H, (j−v) mod W]`, offsets measured from
/// the kernel center, applied plane by plane.
pub fn circ_conv(x: &ImageTensor, k: &ConvKernel) -> Result<ImageTensor> {
    correlate(x, k, -1)
}

/// Exact adjoint of [`circ_conv`]: circular correlation with `k`.
pub fn circ_conv_adjoint(y: &ImageTensor, k: &ConvKernel) -> Result<ImageTensor> {
    correlate(y, k, 1)
}

// sign = -1: convolution, sign = +1: correlation.
fn correlate(x: &ImageTensor, k: &ConvKernel, sign: isize) -> Result<ImageTensor> {
    let shape = x.shape();
    let (h, w) = (shape.height, shape.width);
    if k.height() > h || k.width() > w {
        return Err(Error::dimension(format!(
            "kernel {}x{} larger than image {h}x{w}",
            k.height(),
            k.width()
        )));
    }
    let (cu, cv) = k.center();
    let wrap =
        |i: usize, off: isize, n: usize| -> usize { (i as isize + off).rem_euclid(n as isize) as usize };
    let mut out = ImageTensor::zeros(shape);
    let mut col_index: Vec<usize> = Vec::with_capacity(w);
    for p in 0..shape.planes {
        let src = x.plane(p);
        let dst = out.plane_mut(p);
        for u in 0..k.height() {
            let du = sign * (u as isize - cu as isize);
            for v in 0..k.width() {
                let t = k.tap(u, v);
                if t == 0.0 {
                    continue;
                }
                let dv = sign * (v as isize - cv as isize);
                col_index.clear();
                col_index.extend((0..w).map(|j| wrap(j, dv, w)));
                for i in 0..h {
                    let src_row = &src[wrap(i, du, h) * w..][..w];
                    let dst_row = &mut dst[i * w..][..w];
                    for (d, &jj) in dst_row.iter_mut().zip(&col_index) {
                        *d += t * src_row[jj];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Keeps pixels whose row and column indices are multiples of `s`.
pub fn downsample(x: &ImageTensor, s: usize) -> Result<ImageTensor> {
    let shape = x.shape();
    check_divisible(shape, s)?;
    let out = Shape::new(shape.planes, shape.height / s, shape.width / s);
    Ok(ImageTensor::from_fn(out, |p, i, j| x.get(p, i * s, j * s)))
}

/// Adjoint of [`downsample`]: zero-filled upsampling onto the `s`-grid.
pub fn upsample_adjoint(y: &ImageTensor, s: usize) -> Result<ImageTensor> {
    if s == 0 {
        return Err(Error::dimension("sampling factor must be positive"));
    }
    let shape = y.shape();
    let out = Shape::new(shape.planes, shape.height * s, shape.width * s);
    let mut x = ImageTensor::zeros(out);
    for p in 0..shape.planes {
        for i in 0..shape.height {
            for j in 0..shape.width {
                x.set(p, i * s, j * s, y.get(p, i, j));
            }
        }
    }
    Ok(x)
}

/// Pixel replication: each low-resolution pixel fills its `s × s` block.
pub fn replicate_upsample(y: &ImageTensor, s: usize) -> Result<ImageTensor> {
    if s == 0 {
        return Err(Error::dimension("sampling factor must be positive"));
    }
    let shape = y.shape();
    let out = Shape::new(shape.planes, shape.height * s, shape.width * s);
    Ok(ImageTensor::from_fn(out, |p, i, j| y.get(p, i / s, j / s)))
}

fn check_divisible(shape: Shape, s: usize) -> Result<()> {
    if s == 0 || !shape.height.is_multiple_of(s) || !shape.width.is_multiple_of(s) {
        return Err(Error::dimension(format!(
            "image {}x{} not divisible by sampling factor {s}",
            shape.height, shape.width
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identity {
    pub shape: Shape,
}

impl LinearOperator for Identity {
    fn input_shape(&self) -> Shape {
        self.shape
    }
    fn output_shape(&self) -> Shape {
        self.shape
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        x.check_shape(self.shape)?;
        Ok(x.clone())
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        self.apply(y)
    }
}

/// Circular convolution `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    kernel: ConvKernel,
    shape: Shape,
}

impl Convolution {
    pub fn new(kernel: ConvKernel, shape: Shape) -> Result<Self> {
        if kernel.height() > shape.height || kernel.width() > shape.width {
            return Err(Error::dimension(format!(
                "kernel {}x{} larger than image {}x{}",
                kernel.height(),
                kernel.width(),
                shape.height,
                shape.width
            )));
        }
        Ok(Self { kernel, shape })
    }

    pub fn kernel(&self) -> &ConvKernel {
        &self.kernel
    }
}

impl LinearOperator for Convolution {
    fn input_shape(&self) -> Shape {
        self.shape
    }
    fn output_shape(&self) -> Shape {
        self.shape
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        x.check_shape(self.shape)?;
        circ_conv(x, &self.kernel)
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        y.check_shape(self.shape)?;
        circ_conv_adjoint(y, &self.kernel)
    }
}

/// `S`, the s-fold downsampling matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Downsample {
    factor: usize,
    shape: Shape,
}

impl Downsample {
    pub fn new(factor: usize, shape: Shape) -> Result<Self> {
        check_divisible(shape, factor)?;
        Ok(Self { factor, shape })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }
}

impl LinearOperator for Downsample {
    fn input_shape(&self) -> Shape {
        self.shape
    }
    fn output_shape(&self) -> Shape {
        Shape::new(self.shape.planes, self.shape.height / self.factor, self.shape.width / self.factor)
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        x.check_shape(self.shape)?;
        downsample(x, self.factor)
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        y.check_shape(self.output_shape())?;
        upsample_adjoint(y, self.factor)
    }
}

/// `outer ∘ inner`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compose<Outer, Inner> {
    pub outer: Outer,
    pub inner: Inner,
}

impl<Outer: LinearOperator, Inner: LinearOperator> Compose<Outer, Inner> {
    pub fn new(outer: Outer, inner: Inner) -> Result<Self> {
        if outer.input_shape() != inner.output_shape() {
            return Err(Error::ShapeMismatch { expected: outer.input_shape(), actual: inner.output_shape() });
        }
        Ok(Self { outer, inner })
    }
}

impl<Outer: LinearOperator, Inner: LinearOperator> LinearOperator for Compose<Outer, Inner> {
    fn input_shape(&self) -> Shape {
        self.inner.input_shape()
    }
    fn output_shape(&self) -> Shape {
        self.outer.output_shape()
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        self.outer.apply(&self.inner.apply(x)?)
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        self.inner.apply_adjoint(&self.outer.apply_adjoint(y)?)
    }
}

/// Explicit row-major `m × n` matrix acting on flattened tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    input: Shape,
    output: Shape,
}

impl DenseOperator {
    pub fn new(input: Shape, output: Shape, entries: Vec<f64>) -> Result<Self> {
        let (rows, cols) = (output.len(), input.len());
        if entries.len() != rows * cols {
            return Err(Error::dimension(format!(
                "dense operator {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("dense operator entry".into()));
        }
        Ok(Self { rows, cols, entries, input, output })
    }

    /// Materializes `op` column by column.
    pub fn assemble(op: &(impl LinearOperator + ?Sized)) -> Result<Self> {
        let (input, output) = (op.input_shape(), op.output_shape());
        let (rows, cols) = (output.len(), input.len());
        let mut entries = alloc::vec![0.0; rows * cols];
        let mut e = ImageTensor::zeros(input);
        for c in 0..cols {
            e.data_mut()[c] = 1.0;
            let col = op.apply(&e)?;
            for (r, v) in col.data().iter().enumerate() {
                entries[r * cols + c] = *v;
            }
            e.data_mut()[c] = 0.0;
        }
        Ok(Self { rows, cols, entries, input, output })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }
}

impl LinearOperator for DenseOperator {
    fn input_shape(&self) -> Shape {
        self.input
    }
    fn output_shape(&self) -> Shape {
        self.output
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        x.check_shape(self.input)?;
        let data = self
            .entries
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x.data()).map(|(a, b)| a * b).sum())
            .collect();
        ImageTensor::from_vec(self.output, data)
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        y.check_shape(self.output)?;
        let mut out = alloc::vec![0.0; self.cols];
        for (row, &yr) in self.entries.chunks_exact(self.cols).zip(y.data()) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yr;
            }
        }
        ImageTensor::from_vec(self.input, out)
    }
}

/// Operator given as a pair of closures.
pub struct FnOperator<F, G> {
    pub input: Shape,
    pub output: Shape,
    pub forward: F,
    pub adjoint: G,
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&ImageTensor) -> Result<ImageTensor>,
    G: Fn(&ImageTensor) -> Result<ImageTensor>,
{
    fn input_shape(&self) -> Shape {
        self.input
    }
    fn output_shape(&self) -> Shape {
        self.output
    }
    fn apply(&self, x: &ImageTensor) -> Result<ImageTensor> {
        x.check_shape(self.input)?;
        (self.forward)(x)
    }
    fn apply_adjoint(&self, y: &ImageTensor) -> Result<ImageTensor> {
        y.check_shape(self.output)?;
        (self.adjoint)(y)
    }
}

/// Largest eigenvalue of `AᵀA` (i.e. `‖A‖²`) by power iteration from a
/// seeded Gaussian start, read out as a Rayleigh quotient.
///
/// For a positive semidefinite `AᵀA` the Rayleigh quotients of successive
/// power iterates are nondecreasing, so more iterations never lower the
/// estimate. Returns 0 for the zero operator.
pub fn spectral_norm(op: &(impl LinearOperator + ?Sized), iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(Error::invalid("power iteration needs at least one iteration"));
    }
    let mut x = rng::gaussian_tensor(seed, op.input_shape(), 1.0);
    let n = x.norm();
    if n == 0.0 {
        return Ok(0.0);
    }
    x = x.scale(1.0 / n);
    let mut estimate = 0.0;
    for _ in 0..iters {
        let w = op.normal(&x)?;
        estimate = x.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(0.0);
        }
        x = w.scale(1.0 / wn);
    }
    Ok(estimate)
}

/// Relative mismatch `|⟨Ax, y⟩ − ⟨x, Aᵀy⟩| / (‖Ax‖‖y‖ + ‖x‖‖Aᵀy‖)` for one
/// pair; 0 when both sides vanish.
pub fn adjoint_mismatch(
    op: &(impl LinearOperator + ?Sized),
    x: &ImageTensor,
    y: &ImageTensor,
) -> Result<f64> {
    let ax = op.apply(x)?;
    let aty = op.apply_adjoint(y)?;
    let lhs = ax.dot(y);
    let rhs = x.dot(&aty);
    let scale = ax.norm() * y.norm() + x.norm() * aty.norm();
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
}
