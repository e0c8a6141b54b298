//! Physical parameters, constitutive functions and the chemical potential.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dealias, grad, laplacian, ScalarField};
use crate::scalar::Real;

/// Smooth, bounded coefficient function of the order parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constitutive {
    Constant {
        value: f64,
    },
    /// `bar * (1 + amp * tanh(s)) + floor`
    Tanh {
        bar: f64,
        amp: f64,
        floor: f64,
    },
}

impl Constitutive {
    pub fn eval<T: Real>(&self, s: T) -> T {
        match *self {
            Constitutive::Constant { value } => T::lit(value),
            Constitutive::Tanh { bar, amp, floor } => {
                T::lit(bar) * (T::one() + T::lit(amp) * s.tanh()) + T::lit(floor)
            }
        }
    }

    pub fn derivative<T: Real>(&self, s: T) -> T {
        match *self {
            Constitutive::Constant { .. } => T::zero(),
            Constitutive::Tanh { bar, amp, .. } => {
                let t = s.tanh();
                T::lit(bar * amp) * (T::one() - t * t)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Constitutive::Constant { .. })
    }
}

/// Homogeneous free energy density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// `W(s) = (1 - s^2)^2 / 4`
    #[default]
    DoubleWell,
}

impl Potential {
    pub fn w<T: Real>(&self, s: T) -> T {
        match self {
            Potential::DoubleWell => {
                let a = T::one() - s * s;
                a * a / T::lit(4.0)
            }
        }
    }

    pub fn w_prime<T: Real>(&self, s: T) -> T {
        match self {
            Potential::DoubleWell => s * s * s - s,
        }
    }

    pub fn w_second<T: Real>(&self, s: T) -> T {
        match self {
            Potential::DoubleWell => T::lit(3.0) * s * s - T::one(),
        }
    }
}

impl FromStr for Potential {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double_well" => Ok(Potential::DoubleWell),
            other => Err(Error::UnknownSelector(other.to_string())),
        }
    }
}

/// Which coefficient [`coeff_eval`] should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    Rho,
    RhoPrime,
    Eta,
    EtaPrime,
    M,
    MPrime,
    W,
    WPrime,
}

impl FromStr for Coefficient {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rho" => Coefficient::Rho,
            "rho_prime" => Coefficient::RhoPrime,
            "eta" => Coefficient::Eta,
            "eta_prime" => Coefficient::EtaPrime,
            "m" => Coefficient::M,
            "m_prime" => Coefficient::MPrime,
            "W" | "w" => Coefficient::W,
            "W_prime" | "w_prime" => Coefficient::WPrime,
            other => return Err(Error::UnknownSelector(other.to_string())),
        })
    }
}

/// Densities, interface width and constitutive laws.
///
/// Immutable after construction; [`ModelParams::new`] checks the declared
/// lower bounds of viscosity and mobility by dense sampling on `[-2, 2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T: Real> {
    rho1: T,
    rho2: T,
    epsilon: T,
    viscosity: Constitutive,
    mobility: Constitutive,
    potential: Potential,
    eta0_min: T,
    m0_min: T,
}

const BOUND_SAMPLES: usize = 4001;

impl<T: Real> ModelParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rho1: T,
        rho2: T,
        epsilon: T,
        viscosity: Constitutive,
        mobility: Constitutive,
        potential: Potential,
        eta0_min: T,
        m0_min: T,
    ) -> Result<Self> {
        let positive = |name: &'static str, v: T| -> Result<()> {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        positive("rho1", rho1)?;
        positive("rho2", rho2)?;
        positive("epsilon", epsilon)?;
        positive("eta0_min", eta0_min)?;
        positive("m0_min", m0_min)?;
        for n in 0..BOUND_SAMPLES {
            let s = T::lit(-2.0 + 4.0 * n as f64 / (BOUND_SAMPLES - 1) as f64);
            let eta = viscosity.eval(s);
            if !(eta >= eta0_min) {
                return Err(Error::param(
                    "eta",
                    format!("eta({s}) = {eta} is below the declared lower bound {eta0_min}"),
                ));
            }
            let m = mobility.eval(s);
            if !(m >= m0_min) {
                return Err(Error::param(
                    "m",
                    format!("m({s}) = {m} is below the declared lower bound {m0_min}"),
                ));
            }
        }
        Ok(ModelParams {
            rho1,
            rho2,
            epsilon,
            viscosity,
            mobility,
            potential,
            eta0_min,
            m0_min,
        })
    }

    /// rho1 = 1, rho2 = 3, epsilon = 0.1, eta(s) = 1 + 0.5 tanh(s) + 0.1,
    /// m = 1, double-well potential.
    pub fn standard() -> Self {
        Self::new(
            T::one(),
            T::lit(3.0),
            T::lit(0.1),
            Constitutive::Tanh {
                bar: 1.0,
                amp: 0.5,
                floor: 0.1,
            },
            Constitutive::Constant { value: 1.0 },
            Potential::DoubleWell,
            T::lit(0.5),
            T::lit(0.5),
        )
        .expect("standard parameters are valid")
    }

    /// Same parameters with `rho2` replaced by `rho1`.
    pub fn with_matched_density(&self) -> Self {
        ModelParams {
            rho2: self.rho1,
            ..self.clone()
        }
    }

    pub fn rho1(&self) -> T {
        self.rho1
    }

    pub fn rho2(&self) -> T {
        self.rho2
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn viscosity(&self) -> Constitutive {
        self.viscosity
    }

    pub fn mobility(&self) -> Constitutive {
        self.mobility
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn eta0_min(&self) -> T {
        self.eta0_min
    }

    pub fn m0_min(&self) -> T {
        self.m0_min
    }

    pub fn matched_density(&self) -> bool {
        self.rho1 == self.rho2
    }

    /// Affine density `(rho1 + rho2)/2 + (rho2 - rho1)/2 * s`.
    #[inline]
    pub fn rho(&self, s: T) -> T {
        let half = T::lit(0.5);
        (self.rho1 + self.rho2) * half + (self.rho2 - self.rho1) * half * s
    }

    #[inline]
    pub fn rho_prime(&self) -> T {
        (self.rho2 - self.rho1) * T::lit(0.5)
    }

    /// Prefactor `(rho1 - rho2)/2` of the diffusive mass flux.
    #[inline]
    pub fn flux_prefactor(&self) -> T {
        (self.rho1 - self.rho2) * T::lit(0.5)
    }

    #[inline]
    pub fn eta(&self, s: T) -> T {
        self.viscosity.eval(s)
    }

    #[inline]
    pub fn m(&self, s: T) -> T {
        self.mobility.eval(s)
    }

    #[inline]
    pub fn w(&self, s: T) -> T {
        self.potential.w(s)
    }

    #[inline]
    pub fn w_prime(&self, s: T) -> T {
        self.potential.w_prime(s)
    }
}

/// Pointwise evaluation of a coefficient at every node of `phi`.
pub fn coeff_eval<T: Real>(
    which: Coefficient,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
) -> Result<ScalarField<T>> {
    phi.ensure_finite("coeff_eval input")?;
    Ok(match which {
        Coefficient::Rho => phi.map(|s| params.rho(s)),
        Coefficient::RhoPrime => ScalarField::constant(phi.grid(), params.rho_prime()),
        Coefficient::Eta => phi.map(|s| params.viscosity.eval(s)),
        Coefficient::EtaPrime => phi.map(|s| params.viscosity.derivative(s)),
        Coefficient::M => phi.map(|s| params.mobility.eval(s)),
        Coefficient::MPrime => phi.map(|s| params.mobility.derivative(s)),
        Coefficient::W => phi.map(|s| params.potential.w(s)),
        Coefficient::WPrime => phi.map(|s| params.potential.w_prime(s)),
    })
}

/// `mu = -epsilon * laplacian(phi) + W'(phi) / epsilon`, with `W'(phi)` dealiased.
pub fn chemical_potential<T: Real>(
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
) -> Result<ScalarField<T>> {
    let eps = params.epsilon();
    let lap = laplacian(phi)?;
    let wp = dealias(&coeff_eval(Coefficient::WPrime, phi, params)?);
    Ok(lap.scale(-eps).axpy(T::one() / eps, &wp))
}

/// Ginzburg-Landau free energy `int eps |grad phi|^2 / 2 + W(phi) / eps`.
pub fn free_energy<T: Real>(phi: &ScalarField<T>, params: &ModelParams<T>) -> Result<T> {
    let eps = params.epsilon();
    let g = grad(phi)?;
    let w = coeff_eval(Coefficient::W, phi, params)?;
    let half = T::lit(0.5);
    Ok(eps * half * (g.x.dot(&g.x) + g.y.dot(&g.y)) * phi.grid().cell_area() + w.integral() / eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn grid() -> Grid<f64> {
        Grid::periodic_2pi(32).unwrap()
    }

    fn params(rho1: f64, rho2: f64) -> ModelParams<f64> {
        let std = ModelParams::<f64>::standard();
        ModelParams::new(
            rho1,
            rho2,
            0.1,
            std.viscosity(),
            std.mobility(),
            Potential::DoubleWell,
            0.5,
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn density_endpoints() {
        let g = grid();
        let p = params(1.0, 3.0);
        let at = |c: f64| coeff_eval(Coefficient::Rho, &ScalarField::constant(&g, c), &p).unwrap();
        assert_eq!(at(-1.0).values()[0], 1.0);
        assert_eq!(at(1.0).values()[5], 3.0);
        assert_eq!(at(0.0).values()[7], 2.0);
        let rp = coeff_eval(Coefficient::RhoPrime, &ScalarField::constant(&g, 0.3), &p).unwrap();
        assert_eq!(rp.values()[0], 1.0);
    }

    #[test]
    fn density_is_affine() {
        let g = grid();
        let p = params(1.0, 3.0);
        let f1 = ScalarField::from_fn(&g, |x, y| (x + y).sin());
        let f2 = ScalarField::from_fn(&g, |x, _| (2.0 * x).cos());
        let (a, b) = (0.3, -1.7);
        let lhs = coeff_eval(Coefficient::Rho, &f1.scale(a).axpy(b, &f2), &p).unwrap();
        let r1 = coeff_eval(Coefficient::Rho, &f1, &p).unwrap();
        let r2 = coeff_eval(Coefficient::Rho, &f2, &p).unwrap();
        let mid = (p.rho1() + p.rho2()) / 2.0;
        let rhs = r1.scale(a).axpy(b, &r2).map(|v| v + (1.0 - a - b) * mid);
        assert!((&lhs - &rhs).max_abs() < 1e-13);
    }

    #[test]
    fn w_prime_vanishes_at_wells() {
        let g = grid();
        let p = params(1.0, 3.0);
        for c in [-1.0, 1.0] {
            let wp = coeff_eval(Coefficient::WPrime, &ScalarField::constant(&g, c), &p).unwrap();
            assert_eq!(wp.max_abs(), 0.0);
        }
    }

    #[test]
    fn selectors_parse() {
        assert_eq!(
            "eta_prime".parse::<Coefficient>().unwrap(),
            Coefficient::EtaPrime
        );
        assert!(matches!(
            "viscosity".parse::<Coefficient>(),
            Err(Error::UnknownSelector(_))
        ));
        assert!("quartic".parse::<Potential>().is_err());
    }

    #[test]
    fn lower_bounds_enforced() {
        let bad = ModelParams::<f64>::new(
            1.0,
            3.0,
            0.1,
            Constitutive::Tanh {
                bar: 1.0,
                amp: 0.5,
                floor: 0.0,
            },
            Constitutive::Constant { value: 1.0 },
            Potential::DoubleWell,
            0.55,
            0.5,
        );
        assert!(bad.is_err());
        let neg_rho = ModelParams::<f64>::new(
            0.0,
            3.0,
            0.1,
            Constitutive::Constant { value: 1.0 },
            Constitutive::Constant { value: 1.0 },
            Potential::DoubleWell,
            0.5,
            0.5,
        );
        assert!(neg_rho.is_err());
    }

    #[test]
    fn chemical_potential_constants() {
        let g = grid();
        let p = params(1.0, 3.0);
        let mu = chemical_potential(&ScalarField::constant(&g, 0.4), &p).unwrap();
        let expect = (0.4f64.powi(3) - 0.4) / 0.1;
        assert!(mu.values().iter().all(|&v| (v - expect).abs() < 1e-13));
        for c in [-1.0, 1.0] {
            let mu = chemical_potential(&ScalarField::constant(&g, c), &p).unwrap();
            assert!(mu.max_abs() < 1e-14);
        }
    }

    #[test]
    fn chemical_potential_pointwise_oracle() {
        let g = grid();
        let p = params(1.0, 3.0);
        let phi = ScalarField::from_fn(&g, |x, _| 0.1 * x.sin());
        let mu = chemical_potential(&phi, &p).unwrap();
        // W'(0.1 sin x) = 0.001 sin^3 x - 0.1 sin x has modes 1 and 3, both retained
        let oracle = ScalarField::from_fn(&g, |x, _| {
            let s = 0.1 * x.sin();
            -0.1 * (-s) + (s * s * s - s) / 0.1
        });
        assert!((&mu - &oracle).max_abs() < 1e-12);
    }

    #[test]
    fn potential_is_variational_derivative() {
        let g = grid();
        let p = params(1.0, 3.0);
        let phi = ScalarField::from_fn(&g, |x, y| 0.4 * x.sin() + 0.2 * (x + 2.0 * y).cos());
        let psi = ScalarField::from_fn(&g, |x, y| (2.0 * y).sin() - 0.5 * (x - y).cos());
        let mu = chemical_potential(&phi, &p).unwrap();
        let h = 1e-5;
        let ep = free_energy(&phi.axpy(h, &psi), &p).unwrap();
        let em = free_energy(&phi.axpy(-h, &psi), &p).unwrap();
        let fd = (ep - em) / (2.0 * h);
        let exact = mu.inner(&psi);
        assert!(
            (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
            "fd {fd} vs {exact}"
        );
    }
}
