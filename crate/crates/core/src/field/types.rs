use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::field::grid::Grid;
use crate::scalar::Real;

/// Nodal values of a scalar quantity on a [`Grid`].
#[derive(Clone, Debug)]
pub struct ScalarField<T: Real> {
    grid: Grid<T>,
    values: Vec<T>,
}

/// Two-component vector field; both components share one grid.
#[derive(Clone, Debug)]
pub struct VectorField<T: Real> {
    pub x: ScalarField<T>,
    pub y: ScalarField<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: &Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Self::from_vec_unchecked(grid, vec![c; grid.len()])
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self::from_vec_unchecked(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_vec_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(
            self.grid.same_as(&other.grid),
            "pointwise operation on fields from different grids"
        );
        Self::from_vec_unchecked(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        self.zip_map(other, |u, v| u + a * v)
    }

    /// Nodal dot product (no quadrature weight).
    pub fn dot(&self, other: &Self) -> T {
        assert!(
            self.grid.same_as(&other.grid),
            "dot product of fields from different grids"
        );
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    /// Quadrature inner product `int f g dx`.
    pub fn inner(&self, other: &Self) -> T {
        self.dot(other) * self.grid.cell_area()
    }

    /// `int f dx`.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.cell_area()
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_count(self.values.len())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    /// Nodal `L^2` norm.
    pub fn l2_norm(&self) -> T {
        self.inner(self).sqrt()
    }
}

impl<T: Real> VectorField<T> {
    pub fn new(x: ScalarField<T>, y: ScalarField<T>) -> Result<Self> {
        x.grid().check_same(y.grid())?;
        Ok(VectorField { x, y })
    }

    pub(crate) fn from_parts_unchecked(x: ScalarField<T>, y: ScalarField<T>) -> Self {
        VectorField { x, y }
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        VectorField {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: &Grid<T>, fx: impl FnMut(T, T) -> T, fy: impl FnMut(T, T) -> T) -> Self {
        VectorField {
            x: ScalarField::from_fn(grid, fx),
            y: ScalarField::from_fn(grid, fy),
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        self.x.grid()
    }

    pub(crate) fn check_components(&self) -> Result<()> {
        self.x.grid().check_same(self.y.grid())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        self.x.ensure_finite(what)?;
        self.y.ensure_finite(what)
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField<T>) -> ScalarField<T>) -> Self {
        VectorField {
            x: f(&self.x),
            y: f(&self.y),
        }
    }

    pub fn scale(&self, a: T) -> Self {
        self.map_components(|c| c.scale(a))
    }

    pub fn axpy(&self, a: T, other: &Self) -> Self {
        VectorField {
            x: self.x.axpy(a, &other.x),
            y: self.y.axpy(a, &other.y),
        }
    }

    /// Multiplies both components by a scalar field, pointwise.
    pub fn scale_by(&self, s: &ScalarField<T>) -> Self {
        VectorField {
            x: &self.x * s,
            y: &self.y * s,
        }
    }

    /// Pointwise `u . w`.
    pub fn dot_pointwise(&self, other: &Self) -> ScalarField<T> {
        &(&self.x * &other.x) + &(&self.y * &other.y)
    }

    pub fn dot(&self, other: &Self) -> T {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    pub fn inner(&self, other: &Self) -> T {
        self.x.inner(&other.x) + self.y.inner(&other.y)
    }

    pub fn l2_norm(&self) -> T {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.x.max_abs().max(self.y.max_abs())
    }
}

/// Access to the scalar components of a field, used by the norm routines.
pub trait Components<T: Real> {
    fn components(&self) -> Vec<&ScalarField<T>>;

    fn grid(&self) -> &Grid<T> {
        self.components()[0].grid()
    }
}

impl<T: Real> Components<T> for ScalarField<T> {
    fn components(&self) -> Vec<&ScalarField<T>> {
        vec![self]
    }
}

impl<T: Real> Components<T> for VectorField<T> {
    fn components(&self) -> Vec<&ScalarField<T>> {
        vec![&self.x, &self.y]
    }
}

macro_rules! impl_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<'a, T: Real> $tr<&'a ScalarField<T>> for &'a ScalarField<T> {
            type Output = ScalarField<T>;
            fn $method(self, rhs: &'a ScalarField<T>) -> ScalarField<T> {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl<'a, T: Real> $tr<&'a VectorField<T>> for &'a VectorField<T> {
            type Output = VectorField<T>;
            fn $method(self, rhs: &'a VectorField<T>) -> VectorField<T> {
                VectorField {
                    x: &self.x $op &rhs.x,
                    y: &self.y $op &rhs.y,
                }
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);

/// Pointwise product. Panics if the grids differ.
impl<'a, T: Real> Mul<&'a ScalarField<T>> for &'a ScalarField<T> {
    type Output = ScalarField<T>;
    fn mul(self, rhs: &'a ScalarField<T>) -> ScalarField<T> {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl<T: Real> Neg for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn neg(self) -> ScalarField<T> {
        self.map(|v| -v)
    }
}

impl<T: Real> Neg for &VectorField<T> {
    type Output = VectorField<T>;
    fn neg(self) -> VectorField<T> {
        self.map_components(|c| -c)
    }
}
