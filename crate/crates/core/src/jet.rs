//! Second-order jets of scalar fields.
//!
//! A [`Jet2`] stores the value, gradient and Hessian of a scalar field at a
//! single point. Storage is inline (no heap allocation) so jets can be
//! produced by the million inside quadrature loops; the dimension is bounded
//! by [`MAX_DIM`].

use std::fmt;

use crate::error::Result;

/// Largest supported dimension of the argument of a jet.
pub const MAX_DIM: usize = 10;

#[derive(Clone, Copy, PartialEq)]
pub struct Jet2 {
    dim: usize,
    value: f64,
    grad: [f64; MAX_DIM],
    hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hess: Vec<&[f64]> = (0..self.dim).map(|i| &self.hess[i][..self.dim]).collect();
        f.debug_struct("Jet2")
            .field("dim", &self.dim)
            .field("value", &self.value)
            .field("gradient", &self.gradient())
            .field("hessian", &hess)
            .finish()
    }
}

impl Jet2 {
    /// The zero jet in `dim` variables.
    ///
    /// Panics if `dim > MAX_DIM`.
    pub fn zero(dim: usize) -> Self {
        assert!(
            dim <= MAX_DIM,
            "jet dimension {dim} exceeds MAX_DIM = {MAX_DIM}"
        );
        Self {
            dim,
            value: 0.0,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut jet = Self::zero(dim);
        jet.value = value;
        jet
    }

    /// The jet of the coordinate function `x ↦ x[index]` evaluated at `x`.
    pub fn coordinate(x: &[f64], index: usize) -> Self {
        let mut jet = Self::zero(x.len());
        jet.value = x[index];
        jet.grad[index] = 1.0;
        jet
    }

    /// Builds a jet from explicit parts; the Hessian is read row-major.
    pub fn from_parts(value: f64, gradient: &[f64], hessian: &[f64]) -> Self {
        let dim = gradient.len();
        assert_eq!(hessian.len(), dim * dim, "hessian must be dim x dim");
        let mut jet = Self::zero(dim);
        jet.value = value;
        jet.grad[..dim].copy_from_slice(gradient);
        for i in 0..dim {
            jet.hess[i][..dim].copy_from_slice(&hessian[i * dim..(i + 1) * dim]);
        }
        jet
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    pub fn gradient(&self) -> &[f64] {
        &self.grad[..self.dim]
    }

    #[inline]
    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[i][j]
    }

    #[inline]
    pub fn hessian_row(&self, i: usize) -> &[f64] {
        &self.hess[i][..self.dim]
    }

    #[inline]
    pub fn set_value(&mut self, value: f64) {
        self.value = value;
    }

    #[inline]
    pub fn set_gradient(&mut self, i: usize, g: f64) {
        self.grad[i] = g;
    }

    /// Sets the symmetric pair `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_hessian(&mut self, i: usize, j: usize, h: f64) {
        self.hess[i][j] = h;
        self.hess[j][i] = h;
    }

    pub fn laplacian(&self) -> f64 {
        (0..self.dim).map(|i| self.hess[i][i]).sum()
    }

    pub fn gradient_norm_sq(&self) -> f64 {
        self.gradient().iter().map(|g| g * g).sum()
    }

    pub fn gradient_norm(&self) -> f64 {
        self.gradient_norm_sq().sqrt()
    }

    /// `vᵀ D²f w`.
    pub fn hessian_bilinear(&self, v: &[f64], w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.hess[i][j] * w[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    pub fn hessian_frobenius(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.hess[i][j] * self.hess[i][j];
            }
        }
        acc.sqrt()
    }

    /// Largest absolute asymmetry `|H_ij − H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.hess[i][j] - self.hess[j][i]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient().iter().all(|g| g.is_finite())
            && (0..self.dim).all(|i| self.hessian_row(i).iter().all(|h| h.is_finite()))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.value *= c;
        for i in 0..self.dim {
            out.grad[i] *= c;
            for j in 0..self.dim {
                out.hess[i][j] *= c;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        out.value += other.value;
        for i in 0..self.dim {
            out.grad[i] += other.grad[i];
            for j in 0..self.dim {
                out.hess[i][j] += other.hess[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Product rule: the jet of `f·g`.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let (f, g) = (self, other);
        let mut out = Self::zero(self.dim);
        out.value = f.value * g.value;
        for i in 0..self.dim {
            out.grad[i] = f.value * g.grad[i] + g.value * f.grad[i];
            for j in 0..self.dim {
                out.hess[i][j] = f.value * g.hess[i][j]
                    + g.value * f.hess[i][j]
                    + f.grad[i] * g.grad[j]
                    + f.grad[j] * g.grad[i];
            }
        }
        out
    }

    /// Chain rule for an outer scalar function given by its value and first
    /// two derivatives at `self.value()`.
    pub fn compose(&self, outer: (f64, f64, f64)) -> Self {
        let (f0, f1, f2) = outer;
        let mut out = Self::zero(self.dim);
        out.value = f0;
        for i in 0..self.dim {
            out.grad[i] = f1 * self.grad[i];
            for j in 0..self.dim {
                out.hess[i][j] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i][j];
            }
        }
        out
    }
}

/// A scalar field on (a subset of) `R^dim` that can report its 2-jet.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn jet(&self, x: &[f64]) -> Result<Jet2>;
}

/// Adapts a closure into a [`ScalarField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> Result<Jet2> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[f64]) -> Result<Jet2> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        (self.f)(x)
    }
}

/// The constant field `c` on `R^dim`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub dim: usize,
    pub value: f64,
}

impl ScalarField for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, _x: &[f64]) -> Result<Jet2> {
        Ok(Jet2::constant(self.dim, self.value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_expanded_polynomial() {
        // f = x0 + 2 x1, g = x0 x1 at (1.5, -0.5); f g = x0² x1 + 2 x0 x1².
        let x = [1.5, -0.5];
        let f = Jet2::coordinate(&x, 0).add(&Jet2::coordinate(&x, 1).scale(2.0));
        let g = Jet2::coordinate(&x, 0).mul(&Jet2::coordinate(&x, 1));
        let fg = f.mul(&g);
        let (a, b) = (x[0], x[1]);
        assert!((fg.value() - (a * a * b + 2.0 * a * b * b)).abs() < 1e-14);
        assert!((fg.gradient()[0] - (2.0 * a * b + 2.0 * b * b)).abs() < 1e-14);
        assert!((fg.gradient()[1] - (a * a + 4.0 * a * b)).abs() < 1e-14);
        assert!((fg.hessian(0, 0) - 2.0 * b).abs() < 1e-14);
        assert!((fg.hessian(0, 1) - (2.0 * a + 4.0 * b)).abs() < 1e-14);
        assert!((fg.hessian(1, 1) - 4.0 * a).abs() < 1e-14);
        assert_eq!(fg.asymmetry(), 0.0);
    }

    #[test]
    fn compose_with_exp() {
        let x = [0.3, 0.7];
        let u = Jet2::coordinate(&x, 0).mul(&Jet2::coordinate(&x, 1));
        let e = u.value().exp();
        let j = u.compose((e, e, e));
        // ∂²/∂x0∂x1 exp(x0 x1) = exp(x0 x1)(1 + x0 x1)
        assert!((j.hessian(0, 1) - e * (1.0 + x[0] * x[1])).abs() < 1e-14);
        assert!((j.hessian(0, 0) - e * x[1] * x[1]).abs() < 1e-14);
    }
}
