use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform periodic grid on the torus `[0, lx) x [0, ly)`.
///
/// Nodal data is stored row-major with `y` as the outer index:
/// node `(i, j)` lives at `j * nx + i` and sits at `(i * lx / nx, j * ly / ny)`.
/// Cloning is cheap; the FFT plans are shared.
#[derive(Clone)]
pub struct Grid<T: Real> {
    inner: Arc<GridInner<T>>,
}

struct GridInner<T: Real> {
    nx: usize,
    ny: usize,
    lx: T,
    ly: T,
    kx: Vec<T>,
    ky: Vec<T>,
    kx_deriv: Vec<T>,
    ky_deriv: Vec<T>,
    r2c_x: Arc<dyn RealToComplex<T>>,
    c2r_x: Arc<dyn ComplexToReal<T>>,
    fft_y: Arc<dyn Fft<T>>,
    ifft_y: Arc<dyn Fft<T>>,
}

/// Signed Fourier index of FFT slot `i` for an `n`-point transform, in `[-n/2, n/2)`.
#[inline]
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl<T: Real> Grid<T> {
    pub fn new(nx: usize, ny: usize, lx: T, ly: T) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be even and >= 8"
                )));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > T::zero()) {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {l} must be positive and finite"
                )));
            }
        }
        let table = |n: usize, l: T, zero_nyquist: bool| -> Vec<T> {
            let scale = T::lit(2.0) * T::PI() / l;
            (0..n)
                .map(|i| {
                    let m = signed_mode(i, n);
                    if zero_nyquist && m == -(n as i64) / 2 {
                        T::zero()
                    } else {
                        scale * T::from_i64(m).unwrap()
                    }
                })
                .collect()
        };
        let mut planner = FftPlanner::new();
        let mut real_planner = RealFftPlanner::new();
        let inner = GridInner {
            nx,
            ny,
            lx,
            ly,
            kx: table(nx, lx, false),
            ky: table(ny, ly, false),
            kx_deriv: table(nx, lx, true),
            ky_deriv: table(ny, ly, true),
            r2c_x: real_planner.plan_fft_forward(nx),
            c2r_x: real_planner.plan_fft_inverse(nx),
            fft_y: planner.plan_fft_forward(ny),
            ifft_y: planner.plan_fft_inverse(ny),
        };
        Ok(Grid {
            inner: Arc::new(inner),
        })
    }

    /// Square `[0, 2pi)^2` grid with `n` nodes per direction.
    pub fn periodic_2pi(n: usize) -> Result<Self> {
        let l = T::lit(2.0) * T::PI();
        Self::new(n, n, l, l)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.inner.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.inner.ny
    }

    #[inline]
    pub fn lx(&self) -> T {
        self.inner.lx
    }

    #[inline]
    pub fn ly(&self) -> T {
        self.inner.ly
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inner.nx * self.inner.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total measure `lx * ly`.
    pub fn area(&self) -> T {
        self.inner.lx * self.inner.ly
    }

    /// Quadrature weight of a single node.
    pub fn cell_area(&self) -> T {
        self.area() / T::from_count(self.len())
    }

    pub fn dx(&self) -> T {
        self.inner.lx / T::from_count(self.inner.nx)
    }

    pub fn dy(&self) -> T {
        self.inner.ly / T::from_count(self.inner.ny)
    }

    pub fn x(&self, i: usize) -> T {
        T::from_count(i) * self.dx()
    }

    pub fn y(&self, j: usize) -> T {
        T::from_count(j) * self.dy()
    }

    /// Wavenumbers `2 pi m / lx`, `m` in `[-nx/2, nx/2)`, in FFT order.
    pub fn kx(&self) -> &[T] {
        &self.inner.kx
    }

    pub fn ky(&self) -> &[T] {
        &self.inner.ky
    }

    /// Wavenumbers used by derivative operators: as [`Grid::kx`] with the
    /// Nyquist entry set to zero, so derivatives of real fields stay real
    /// and `div(grad f) == laplacian(f)` holds mode by mode.
    pub fn kx_deriv(&self) -> &[T] {
        &self.inner.kx_deriv
    }

    pub fn ky_deriv(&self) -> &[T] {
        &self.inner.ky_deriv
    }

    /// Same discretization (node counts and lengths).
    pub fn same_as(&self, other: &Grid<T>) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.nx == other.inner.nx
                && self.inner.ny == other.inner.ny
                && self.inner.lx == other.inner.lx
                && self.inner.ly == other.inner.ly)
    }

    pub(crate) fn check_same(&self, other: &Grid<T>) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Unnormalized forward 2-D DFT of nodal values, full spectrum in the
    /// nodal layout (`ky` outer, `kx` inner).
    pub fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        assert_eq!(
            values.len(),
            self.len(),
            "nodal array length does not match grid"
        );
        let (nx, ny) = (self.inner.nx, self.inner.ny);
        let h = nx / 2 + 1;
        let zero = Complex::new(T::zero(), T::zero());
        let mut row_in = values.to_vec();
        let mut half = vec![zero; ny * h];
        let mut scratch = vec![zero; self.inner.r2c_x.get_scratch_len()];
        for (inp, out) in row_in.chunks_exact_mut(nx).zip(half.chunks_exact_mut(h)) {
            self.inner
                .r2c_x
                .process_with_scratch(inp, out, &mut scratch)
                .expect("buffer sizes match the plan");
        }
        let mut cols = transpose(&half, ny, h);
        self.inner.fft_y.process(&mut cols);
        // columns 0..=nx/2 are stored; the rest follow from Hermitian symmetry
        let mut out = vec![zero; nx * ny];
        for i in 0..h {
            for j in 0..ny {
                out[j * nx + i] = cols[i * ny + j];
            }
        }
        for j in 0..ny {
            let jm = (ny - j) % ny;
            for i in h..nx {
                out[j * nx + i] = out[jm * nx + (nx - i)].conj();
            }
        }
        out
    }

    /// Inverse of [`Grid::forward`] (normalized). The spectrum is assumed
    /// Hermitian, as it is for every operator applied to real data here;
    /// only the `kx >= 0` half is read.
    pub fn inverse(&self, coeffs: Vec<Complex<T>>) -> Vec<T> {
        assert_eq!(
            coeffs.len(),
            self.len(),
            "spectral array length does not match grid"
        );
        let (nx, ny) = (self.inner.nx, self.inner.ny);
        let h = nx / 2 + 1;
        let zero = Complex::new(T::zero(), T::zero());
        let mut cols = vec![zero; h * ny];
        for i in 0..h {
            for j in 0..ny {
                cols[i * ny + j] = coeffs[j * nx + i];
            }
        }
        self.inner.ifft_y.process(&mut cols);
        let mut half = transpose(&cols, h, ny);
        let mut out = vec![T::zero(); nx * ny];
        let mut scratch = vec![zero; self.inner.c2r_x.get_scratch_len()];
        for (inp, row) in half.chunks_exact_mut(h).zip(out.chunks_exact_mut(nx)) {
            inp[0].im = T::zero();
            inp[h - 1].im = T::zero();
            self.inner
                .c2r_x
                .process_with_scratch(inp, row, &mut scratch)
                .expect("buffer sizes match the plan");
        }
        let norm = T::one() / T::from_count(self.len());
        for v in &mut out {
            *v = *v * norm;
        }
        out
    }
}

/// `rows x cols` row-major to `cols x rows` row-major.
fn transpose<C: Copy>(a: &[C], rows: usize, cols: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(a.len());
    for c in 0..cols {
        out.extend((0..rows).map(|r| a[r * cols + c]));
    }
    out
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.inner.nx)
            .field("ny", &self.inner.ny)
            .field("lx", &self.inner.lx)
            .field("ly", &self.inner.ly)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_odd_or_small_sizes() {
        assert!(Grid::<f64>::new(7, 8, 1.0, 1.0).is_err());
        assert!(Grid::<f64>::new(8, 6, 1.0, 1.0).is_err());
        assert!(Grid::<f64>::new(8, 8, 0.0, 1.0).is_err());
        assert!(Grid::<f64>::new(8, 8, 1.0, f64::NAN).is_err());
        assert!(Grid::<f64>::new(8, 8, 1.0, 1.0).is_ok());
    }

    #[test]
    fn wavenumber_tables() {
        let g = Grid::<f64>::new(8, 10, 2.0 * PI, 1.0).unwrap();
        let ms: Vec<i64> = (0..8).map(|i| signed_mode(i, 8)).collect();
        assert_eq!(ms, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for (i, &k) in g.kx().iter().enumerate() {
            assert!((k - ms[i] as f64).abs() < 1e-15);
        }
        assert_eq!(g.kx_deriv()[4], 0.0);
        assert!((g.ky()[5] + 2.0 * PI * 5.0).abs() < 1e-12);
        assert!((g.cell_area() * g.len() as f64 - g.area()).abs() < 1e-15);
    }

    #[test]
    fn fft_round_trip() {
        let g = Grid::<f64>::new(8, 12, 1.0, 3.0).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|n| ((n * 37) % 11) as f64 - 5.0).collect();
        let back = g.inverse(g.forward(&vals));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
