//! Discrete Lebesgue and Sobolev norms with nodal rectangle-rule quadrature.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::grid::Grid;
use crate::field::spectral::{partial_in_place, scale_modes};
use crate::field::types::{Components, ScalarField};
use crate::scalar::Real;

/// Highest derivative order tracked by [`sobolev_norm`].
pub const MAX_ORDER: usize = 4;

fn check_p<T: Real>(p: T) -> Result<()> {
    if p.is_finite() && p >= T::one() {
        Ok(())
    } else {
        Err(Error::param(
            "p",
            format!("integrability exponent must be finite and >= 1, got {p}"),
        ))
    }
}

/// `sum_nodes |f|^p * cell_area`, i.e. the p-th power of the `L^p` norm.
pub fn lp_norm_pow<T: Real>(f: &ScalarField<T>, p: T) -> T {
    let w = f.grid().cell_area();
    let two = T::lit(2.0);
    let twice = p * two;
    let s: T = if p == two {
        f.values().iter().map(|&v| v * v).sum()
    } else if twice == twice.round() && twice < T::lit(64.0) {
        // half-integer exponents: |v|^p = |v|^floor(p) * sqrt(|v|)^(2p mod 2)
        let whole = p.floor().to_i32().unwrap_or(0);
        let half = twice.to_i32().unwrap_or(0) % 2 == 1;
        f.values()
            .iter()
            .map(|&v| {
                let a = v.abs();
                let r = a.powi(whole);
                if half {
                    r * a.sqrt()
                } else {
                    r
                }
            })
            .sum()
    } else {
        f.values().iter().map(|&v| v.abs().powf(p)).sum()
    };
    s * w
}

pub fn lp_norm<T: Real, F: Components<T>>(f: &F, p: T) -> Result<T> {
    check_p(p)?;
    let s: T = f.components().into_iter().map(|c| lp_norm_pow(c, p)).sum();
    Ok(s.powf(T::one() / p))
}

/// p-th power of the `W^{order}_p` norm: sum over all multi-indices
/// `|alpha| <= order` of `||d^alpha f||_p^p`, summed over components.
pub fn sobolev_norm_pow<T: Real, F: Components<T>>(f: &F, p: T, order: usize) -> Result<T> {
    check_p(p)?;
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh(order));
    }
    let mut total = T::zero();
    for c in f.components() {
        c.ensure_finite("sobolev_norm input")?;
        let g = c.grid();
        let hat = g.forward(c.values());
        if p == T::lit(2.0) {
            total = total + parseval_sobolev(g, &hat, order);
            continue;
        }
        for k in 0..=order {
            for ax in 0..=k {
                let ay = k - ax;
                let d = if k == 0 {
                    c.clone()
                } else {
                    let mut h = hat.clone();
                    partial_in_place(g, &mut h, ax, ay);
                    ScalarField::from_vec_unchecked(g, g.inverse(h))
                };
                total = total + lp_norm_pow(&d, p);
            }
        }
    }
    Ok(total)
}

/// Squared `H^order` norm from the spectrum: the same nodal sums as the
/// derivative loop, evaluated mode by mode.
fn parseval_sobolev<T: Real>(g: &Grid<T>, hat: &[Complex<T>], order: usize) -> T {
    let (kx, ky) = (g.kx_deriv(), g.ky_deriv());
    let nx = g.nx();
    let mut s = T::zero();
    for (n, c) in hat.iter().enumerate() {
        let (a2, b2) = (kx[n % nx] * kx[n % nx], ky[n / nx] * ky[n / nx]);
        let mut w = T::zero();
        for k in 0..=order {
            for ax in 0..=k {
                w = w + a2.powi(ax as i32) * b2.powi((k - ax) as i32);
            }
        }
        s = s + c.norm_sqr() * w;
    }
    s * g.cell_area() / T::from_count(hat.len())
}

/// `(sum_{|alpha| <= order} ||d^alpha f||_{L^p}^p)^{1/p}` with spectral
/// derivatives. Orders above 4 are rejected.
pub fn sobolev_norm<T: Real, F: Components<T>>(f: &F, p: T, order: usize) -> Result<T> {
    Ok(sobolev_norm_pow(f, p, order)?.powf(T::one() / p))
}

/// Bessel-potential norm: the `L^p` norm of `(1 + |k|^2)^{s/2} f`.
pub fn fractional_sobolev_norm<T: Real, F: Components<T>>(f: &F, p: T, s: T) -> Result<T> {
    check_p(p)?;
    if !(s >= T::zero()) || !s.is_finite() {
        return Err(Error::param(
            "s",
            format!("smoothness must be finite and >= 0, got {s}"),
        ));
    }
    let half = s / T::lit(2.0);
    let mut total = T::zero();
    for c in f.components() {
        c.ensure_finite("fractional_sobolev_norm input")?;
        let g = c.grid();
        let mut hat = g.forward(c.values());
        scale_modes(g, &mut hat, |kx, ky| {
            (T::one() + kx * kx + ky * ky).powf(half)
        });
        let lifted = ScalarField::from_vec_unchecked(g, g.inverse(hat));
        total = total + lp_norm_pow(&lifted, p);
    }
    Ok(total.powf(T::one() / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::types::VectorField;
    use std::f64::consts::PI;

    fn grid() -> Grid<f64> {
        Grid::periodic_2pi(32).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = grid();
        let z = ScalarField::zeros(&g);
        assert_eq!(sobolev_norm(&z, 2.0, 4).unwrap(), 0.0);
        assert_eq!(fractional_sobolev_norm(&z, 4.5, 3.1).unwrap(), 0.0);
    }

    #[test]
    fn sine_closed_forms() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        // int sin^2 over [0,2pi)^2 = lx*ly/2 = 2 pi^2
        let l2 = sobolev_norm(&f, 2.0, 0).unwrap();
        assert!((l2 - (2.0 * PI * PI).sqrt()).abs() < 1e-12);
        assert!((l2 - PI * 2f64.sqrt()).abs() < 1e-12);
        let h2 = sobolev_norm(&f, 2.0, 2).unwrap();
        assert!((h2 - 3f64.sqrt() * l2).abs() < 1e-11);
        let h1s = fractional_sobolev_norm(&f, 2.0, 1.0).unwrap();
        assert!((h1s - 2f64.sqrt() * PI * 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn constant_fractional_norm() {
        let g = Grid::<f64>::new(16, 8, 2.0, 3.0).unwrap();
        let c = ScalarField::constant(&g, 0.7);
        for &(p, s) in &[(2.0, 0.0), (4.5, 3.11), (1.0, 1.0)] {
            let n = fractional_sobolev_norm(&c, p, s).unwrap();
            assert!((n - 0.7 * 6f64.powf(1.0 / p)).abs() < 1e-12);
        }
    }

    #[test]
    fn order_and_smoothness_guards() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        assert!(matches!(
            sobolev_norm(&f, 2.0, 5),
            Err(Error::OrderTooHigh(5))
        ));
        assert!(fractional_sobolev_norm(&f, 2.0, -0.5).is_err());
        assert!(sobolev_norm(&f, 0.5, 1).is_err());
    }

    #[test]
    fn monotone_in_order() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x, y| (x + 0.3).cos() * (2.0 * y).sin() + 0.1);
        let mut last = 0.0;
        for order in 0..=4 {
            let n = sobolev_norm(&f, 4.5, order).unwrap();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn spectral_h2_sum_matches_derivative_sum() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x, y| {
            (x + (2.0 * y).sin()).cos() + 0.3 * (5.0 * x).sin()
        });
        for order in 0..=MAX_ORDER {
            let mut direct = 0.0;
            for k in 0..=order {
                for ax in 0..=k {
                    direct += lp_norm_pow(&crate::field::partial(&f, ax, k - ax).unwrap(), 2.0);
                }
            }
            let fast = sobolev_norm_pow(&f, 2.0, order).unwrap();
            assert!(
                (fast - direct).abs() <= 1e-12 * direct,
                "{order}: {fast} vs {direct}"
            );
        }
    }

    #[test]
    fn half_integer_exponents_match_powf() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x, y| (x + 0.3).cos() * (2.0 * y).sin() - 0.4 * y.cos());
        for p in [1.5, 3.0, 4.5, 5.5] {
            let direct: f64 =
                f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * g.cell_area();
            assert!((lp_norm_pow(&f, p) - direct).abs() <= 1e-13 * direct);
        }
    }

    #[test]
    fn vector_norm_combines_components() {
        let g = grid();
        let v = VectorField::from_fn(&g, |x, _| x.sin(), |_, y| y.sin());
        let s = sobolev_norm(&v.x, 2.0, 2).unwrap();
        let n = sobolev_norm(&v, 2.0, 2).unwrap();
        assert!((n - 2f64.sqrt() * s).abs() < 1e-11);
    }
}
