//! Minimal dense row-major matrix and the float abstraction shared by the
//! 32-bit training path and the 64-bit gradient-check path.

use num_traits::Float;

/// Scalar type the network math is generic over. `f32` for training, `f64`
/// for finite-difference verification.
pub trait Real:
    Float + std::fmt::Debug + std::fmt::Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossy conversion from `f64` literals/configuration into the working type.
pub fn real<T: Real>(x: f64) -> T {
    T::from(x).expect("f64 converts to any Real")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// out += self · x
    pub fn matvec_acc(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = T::zero();
            for (w, xv) in row.iter().zip(x) {
                acc = acc + *w * *xv;
            }
            out[r] = out[r] + acc;
        }
    }

    /// out += selfᵀ · u
    pub fn matvec_transpose_acc(&self, u: &[T], out: &mut [T]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            let uv = u[r];
            for (o, w) in out.iter_mut().zip(row) {
                *o = *o + uv * *w;
            }
        }
    }

    /// self += u · vᵀ
    pub fn add_outer(&mut self, u: &[T], v: &[T]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for r in 0..self.rows {
            let uv = u[r];
            for (w, xv) in self.row_mut(r).iter_mut().zip(v) {
                *w = *w + uv * *xv;
            }
        }
    }

    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&x| U::from(x).expect("float cast"))
                .collect(),
        }
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub fn add_assign<T: Real>(a: &mut [T], b: &[T]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x = *x + *y;
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}
