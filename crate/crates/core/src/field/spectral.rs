//! Fourier-space differential operators on the periodic grid.
//!
//! All first derivatives use the Nyquist-free wavenumbers of
//! [`Grid::kx_deriv`], and second/fourth-order operators are built from the
//! same tables, so `div . grad == laplacian` and
//! `laplacian . laplacian == bilaplacian` hold exactly per mode.

use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::grid::{signed_mode, Grid};
use crate::field::types::{ScalarField, VectorField};
use crate::scalar::Real;

/// Scalar or vector field, for the rank-polymorphic entry point
/// [`spectral_derivative`].
#[derive(Clone, Debug)]
pub enum AnyField<T: Real> {
    Scalar(ScalarField<T>),
    Vector(VectorField<T>),
}

impl<T: Real> AnyField<T> {
    fn rank(&self) -> &'static str {
        match self {
            AnyField::Scalar(_) => "scalar",
            AnyField::Vector(_) => "vector",
        }
    }

    pub fn into_scalar(self) -> Option<ScalarField<T>> {
        match self {
            AnyField::Scalar(s) => Some(s),
            AnyField::Vector(_) => None,
        }
    }

    pub fn into_vector(self) -> Option<VectorField<T>> {
        match self {
            AnyField::Vector(v) => Some(v),
            AnyField::Scalar(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    Grad,
    Div,
    Laplacian,
    Bilaplacian,
}

impl FromStr for DerivativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grad" => Ok(DerivativeMode::Grad),
            "div" => Ok(DerivativeMode::Div),
            "laplacian" => Ok(DerivativeMode::Laplacian),
            "bilaplacian" => Ok(DerivativeMode::Bilaplacian),
            other => Err(Error::UnknownSelector(other.to_string())),
        }
    }
}

/// Exact derivative of the trigonometric interpolant.
///
/// `grad` maps scalar to vector, `div` vector to scalar; the Laplacian and
/// bilaplacian act componentwise on vectors.
pub fn spectral_derivative<T: Real>(f: &AnyField<T>, mode: DerivativeMode) -> Result<AnyField<T>> {
    use DerivativeMode::*;
    match (mode, f) {
        (Grad, AnyField::Scalar(s)) => grad(s).map(AnyField::Vector),
        (Div, AnyField::Vector(v)) => div(v).map(AnyField::Scalar),
        (Laplacian, AnyField::Scalar(s)) => laplacian(s).map(AnyField::Scalar),
        (Laplacian, AnyField::Vector(v)) => laplacian_vec(v).map(AnyField::Vector),
        (Bilaplacian, AnyField::Scalar(s)) => bilaplacian(s).map(AnyField::Scalar),
        (Bilaplacian, AnyField::Vector(v)) => {
            v.check_components()?;
            v.ensure_finite("bilaplacian input")?;
            Ok(AnyField::Vector(VectorField::from_parts_unchecked(
                bilaplacian(&v.x)?,
                bilaplacian(&v.y)?,
            )))
        }
        (Grad, other) => Err(Error::InvalidRank {
            op: "grad",
            rank: other.rank(),
        }),
        (Div, other) => Err(Error::InvalidRank {
            op: "div",
            rank: other.rank(),
        }),
    }
}

#[inline]
fn i_times<T: Real>(k: T, c: Complex<T>) -> Complex<T> {
    Complex::new(-k * c.im, k * c.re)
}

/// Multiplies the spectrum of `f` by a real symbol of the derivative wavenumbers.
pub fn apply_symbol<T: Real>(f: &ScalarField<T>, symbol: impl Fn(T, T) -> T) -> ScalarField<T> {
    let g = f.grid();
    let mut hat = g.forward(f.values());
    scale_modes(g, &mut hat, symbol);
    ScalarField::from_vec_unchecked(g, g.inverse(hat))
}

pub(crate) fn scale_modes<T: Real>(
    g: &Grid<T>,
    hat: &mut [Complex<T>],
    symbol: impl Fn(T, T) -> T,
) {
    let (kx, ky) = (g.kx_deriv(), g.ky_deriv());
    let nx = g.nx();
    for (j, row) in hat.chunks_mut(nx).enumerate() {
        for (i, c) in row.iter_mut().enumerate() {
            *c = c.scale(symbol(kx[i], ky[j]));
        }
    }
}

pub fn grad<T: Real>(f: &ScalarField<T>) -> Result<VectorField<T>> {
    f.ensure_finite("grad input")?;
    let g = f.grid();
    let hat = g.forward(f.values());
    Ok(grad_of_spectrum(g, &hat))
}

pub(crate) fn grad_of_spectrum<T: Real>(g: &Grid<T>, hat: &[Complex<T>]) -> VectorField<T> {
    let (kx, ky) = (g.kx_deriv(), g.ky_deriv());
    let nx = g.nx();
    let mut hx = hat.to_vec();
    let mut hy = hat.to_vec();
    for n in 0..hat.len() {
        let (i, j) = (n % nx, n / nx);
        hx[n] = i_times(kx[i], hat[n]);
        hy[n] = i_times(ky[j], hat[n]);
    }
    VectorField::from_parts_unchecked(
        ScalarField::from_vec_unchecked(g, g.inverse(hx)),
        ScalarField::from_vec_unchecked(g, g.inverse(hy)),
    )
}

pub fn div<T: Real>(v: &VectorField<T>) -> Result<ScalarField<T>> {
    v.check_components()?;
    v.ensure_finite("div input")?;
    let g = v.grid();
    let hx = g.forward(v.x.values());
    let hy = g.forward(v.y.values());
    Ok(ScalarField::from_vec_unchecked(
        g,
        g.inverse(div_of_spectra(g, &hx, &hy)),
    ))
}

/// `i kx hx + i ky hy`.
pub(crate) fn div_of_spectra<T: Real>(
    g: &Grid<T>,
    hx: &[Complex<T>],
    hy: &[Complex<T>],
) -> Vec<Complex<T>> {
    let (kx, ky) = (g.kx_deriv(), g.ky_deriv());
    let nx = g.nx();
    (0..hx.len())
        .map(|n| i_times(kx[n % nx], hx[n]) + i_times(ky[n / nx], hy[n]))
        .collect()
}

/// `div(dealias(px), dealias(py))` with one transform per component.
pub(crate) fn dealiased_div<T: Real>(px: &ScalarField<T>, py: &ScalarField<T>) -> ScalarField<T> {
    let g = px.grid();
    let hx = dealiased_spectrum(px);
    let hy = dealiased_spectrum(py);
    ScalarField::from_vec_unchecked(g, g.inverse(div_of_spectra(g, &hx, &hy)))
}

/// Inverse transform of `symbol(k) * hat`.
pub(crate) fn symbol_of_spectrum<T: Real>(
    g: &Grid<T>,
    hat: &[Complex<T>],
    symbol: impl Fn(T, T) -> T,
) -> ScalarField<T> {
    let mut h = hat.to_vec();
    scale_modes(g, &mut h, symbol);
    ScalarField::from_vec_unchecked(g, g.inverse(h))
}

/// Per-mode `I - k k^T / |k|^2` on a pair of spectra.
pub(crate) fn project_spectra<T: Real>(g: &Grid<T>, hx: &mut [Complex<T>], hy: &mut [Complex<T>]) {
    let (kx, ky) = (g.kx_deriv(), g.ky_deriv());
    let nx = g.nx();
    for n in 0..hx.len() {
        let (ax, ay) = (kx[n % nx], ky[n / nx]);
        let k2 = ax * ax + ay * ay;
        if k2 > T::zero() {
            let proj = (hx[n].scale(ax) + hy[n].scale(ay)).unscale(k2);
            hx[n] = hx[n] - proj.scale(ax);
            hy[n] = hy[n] - proj.scale(ay);
        }
    }
}

pub fn laplacian<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    f.ensure_finite("laplacian input")?;
    Ok(apply_symbol(f, |kx, ky| -(kx * kx + ky * ky)))
}

pub fn laplacian_vec<T: Real>(v: &VectorField<T>) -> Result<VectorField<T>> {
    v.check_components()?;
    Ok(VectorField::from_parts_unchecked(
        laplacian(&v.x)?,
        laplacian(&v.y)?,
    ))
}

pub fn bilaplacian<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    f.ensure_finite("bilaplacian input")?;
    Ok(apply_symbol(f, |kx, ky| {
        let k2 = kx * kx + ky * ky;
        k2 * k2
    }))
}

/// Mixed partial derivative `d^ax/dx^ax d^ay/dy^ay f`.
pub fn partial<T: Real>(f: &ScalarField<T>, ax: usize, ay: usize) -> Result<ScalarField<T>> {
    f.ensure_finite("partial derivative input")?;
    let g = f.grid();
    let mut hat = g.forward(f.values());
    partial_in_place(g, &mut hat, ax, ay);
    Ok(ScalarField::from_vec_unchecked(g, g.inverse(hat)))
}

pub(crate) fn partial_in_place<T: Real>(g: &Grid<T>, hat: &mut [Complex<T>], ax: usize, ay: usize) {
    let (kx, ky) = (g.kx_deriv(), g.ky_deriv());
    let nx = g.nx();
    // (i k)^n = k^n * i^n
    let ipow = |n: usize| -> Complex<T> {
        match n % 4 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        }
    };
    let phase = ipow(ax + ay);
    for (n, c) in hat.iter_mut().enumerate() {
        let mag = kx[n % nx].powi(ax as i32) * ky[n / nx].powi(ay as i32);
        *c = *c * phase * mag;
    }
}

/// Helmholtz (Leray) projection onto discretely divergence-free fields.
///
/// Applies `I - k k^T / |k|^2` per mode; modes with `k = 0` pass through.
pub fn leray_project<T: Real>(v: &VectorField<T>) -> Result<VectorField<T>> {
    v.check_components()?;
    v.ensure_finite("leray_project input")?;
    let g = v.grid();
    let mut hx = g.forward(v.x.values());
    let mut hy = g.forward(v.y.values());
    project_spectra(g, &mut hx, &mut hy);
    Ok(VectorField::from_parts_unchecked(
        ScalarField::from_vec_unchecked(g, g.inverse(hx)),
        ScalarField::from_vec_unchecked(g, g.inverse(hy)),
    ))
}

/// True if Fourier slot `(i, j)` survives the 2/3 rule.
#[inline]
pub fn retained_mode(i: usize, j: usize, nx: usize, ny: usize) -> bool {
    let m = signed_mode(i, nx).unsigned_abs() as usize;
    let n = signed_mode(j, ny).unsigned_abs() as usize;
    3 * m <= nx && 3 * n <= ny
}

/// 2/3-rule filter: zeroes modes with `|m| > nx/3` or `|n| > ny/3`.
pub fn dealias<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    let g = f.grid();
    ScalarField::from_vec_unchecked(g, g.inverse(dealiased_spectrum(f)))
}

pub(crate) fn dealiased_spectrum<T: Real>(f: &ScalarField<T>) -> Vec<Complex<T>> {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut hat = g.forward(f.values());
    for (n, c) in hat.iter_mut().enumerate() {
        if !retained_mode(n % nx, n / nx, nx, ny) {
            *c = Complex::new(T::zero(), T::zero());
        }
    }
    hat
}

pub fn dealias_vec<T: Real>(v: &VectorField<T>) -> VectorField<T> {
    v.map_components(dealias)
}

/// Dealiased pointwise product.
pub fn product<T: Real>(a: &ScalarField<T>, b: &ScalarField<T>) -> ScalarField<T> {
    dealias(&(a * b))
}
