//! Discrete space-time norms of the solution and data spaces, and physical
//! diagnostics (energy, mass, solenoidality).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::norms::{lp_norm_pow, sobolev_norm_pow};
use crate::field::{div, fractional_sobolev_norm, grad, Components, ScalarField, VectorField};
use crate::model::ModelParams;
use crate::operators::{dt_scalar, dt_vector, DataTrajectory, WindowTrajectory};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeQuadrature {
    /// Composite trapezoid over all slots.
    #[default]
    Trapezoid,
    /// Right-endpoint rectangle rule, `dt * sum_{j >= 1}`.
    Rectangle,
}

impl std::str::FromStr for TimeQuadrature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(TimeQuadrature::Trapezoid),
            "rectangle" => Ok(TimeQuadrature::Rectangle),
            other => Err(Error::UnknownSelector(other.to_string())),
        }
    }
}

/// Integrability exponent of the phase component and time quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormConfig<T: Real> {
    p: T,
    pub quadrature: TimeQuadrature,
}

impl<T: Real> NormConfig<T> {
    /// Requires `4 < p < 6`.
    pub fn new(p: T, quadrature: TimeQuadrature) -> Result<Self> {
        if !(p > T::lit(4.0) && p < T::lit(6.0)) {
            return Err(Error::param("p", format!("p = {p} violates 4 < p < 6")));
        }
        Ok(NormConfig { p, quadrature })
    }

    /// Any `p >= 1`; for consistency checks only, production runs use [`NormConfig::new`].
    pub fn unconstrained(p: T, quadrature: TimeQuadrature) -> Result<Self> {
        if !(p >= T::one() && p.is_finite()) {
            return Err(Error::param("p", format!("p = {p} must be >= 1")));
        }
        Ok(NormConfig { p, quadrature })
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// Smoothness `4 - 4/p` of the phase initial-datum norm.
    pub fn initial_smoothness(&self) -> T {
        T::lit(4.0) - T::lit(4.0) / self.p
    }
}

impl<T: Real> Default for NormConfig<T> {
    fn default() -> Self {
        NormConfig {
            p: T::lit(4.5),
            quadrature: TimeQuadrature::Trapezoid,
        }
    }
}

/// `int_0^T h(t) dt` from slot samples `h_0..h_N`.
pub fn time_integral<T: Real>(samples: &[T], dt: T, rule: TimeQuadrature) -> T {
    let n = samples.len();
    if n < 2 {
        return T::zero();
    }
    match rule {
        TimeQuadrature::Trapezoid => {
            let inner: T = samples[1..n - 1].iter().copied().sum();
            dt * (inner + (samples[0] + samples[n - 1]) * T::lit(0.5))
        }
        TimeQuadrature::Rectangle => dt * samples[1..].iter().copied().sum::<T>(),
    }
}

/// Individual contributions to the solution-space norm.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct XtNormParts {
    pub v_time_derivative: f64,
    pub v_h2: f64,
    pub v_initial: f64,
    pub phi_time_derivative: f64,
    pub phi_w4: f64,
    pub phi_initial: f64,
}

impl XtNormParts {
    pub fn v_norm(&self) -> f64 {
        self.v_time_derivative + self.v_h2 + self.v_initial
    }

    pub fn phi_norm(&self) -> f64 {
        self.phi_time_derivative + self.phi_w4 + self.phi_initial
    }

    pub fn total(&self) -> f64 {
        self.v_norm() + self.phi_norm()
    }
}

fn lp_in_time<T: Real, F: Components<T>>(
    series: &[F],
    dt: T,
    p: T,
    rule: TimeQuadrature,
    pow: impl Fn(&F) -> Result<T>,
) -> Result<T> {
    let samples = series.iter().map(pow).collect::<Result<Vec<T>>>()?;
    Ok(time_integral(&samples, dt, rule).powf(T::one() / p))
}

/// Solution-space norm of a pair of series sharing the time step `dt`.
pub fn xt_norm_parts<T: Real>(
    v: &[VectorField<T>],
    phi: &[ScalarField<T>],
    dt: T,
    cfg: &NormConfig<T>,
) -> Result<XtNormParts> {
    let two = T::lit(2.0);
    let p = cfg.p;
    let rule = cfg.quadrature;
    let dtv = dt_vector(v, dt)?;
    let dtphi = dt_scalar(phi, dt)?;
    let v_dt = lp_in_time(&dtv, dt, two, rule, |f| Ok(lp_pow_all(f, two)))?;
    let v_h2 = lp_in_time(v, dt, two, rule, |f| sobolev_norm_pow(f, two, 2))?;
    let v_init = fractional_sobolev_norm(&v[0], two, T::one())?;
    let phi_dt = lp_in_time(&dtphi, dt, p, rule, |f| Ok(lp_norm_pow(f, p)))?;
    let phi_w4 = lp_in_time(phi, dt, p, rule, |f| sobolev_norm_pow(f, p, 4))?;
    let phi_init = fractional_sobolev_norm(&phi[0], p, cfg.initial_smoothness())?;
    Ok(XtNormParts {
        v_time_derivative: v_dt.as_f64(),
        v_h2: v_h2.as_f64(),
        v_initial: v_init.as_f64(),
        phi_time_derivative: phi_dt.as_f64(),
        phi_w4: phi_w4.as_f64(),
        phi_initial: phi_init.as_f64(),
    })
}

fn lp_pow_all<T: Real, F: Components<T>>(f: &F, p: T) -> T {
    f.components().into_iter().map(|c| lp_norm_pow(c, p)).sum()
}

/// `(v_norm, phi_norm)` of a window trajectory.
pub fn xt_norm<T: Real>(traj: &WindowTrajectory<T>, cfg: &NormConfig<T>) -> Result<(f64, f64)> {
    let parts = xt_norm_parts(traj.v(), traj.phi(), traj.dt(), cfg)?;
    Ok((parts.v_norm(), parts.phi_norm()))
}

/// `(y1, y2)`: `L^2(L^2)` norm of the velocity data and `L^p(L^p)` norm of the phase data.
pub fn yt_norm<T: Real>(rhs: &DataTrajectory<T>, dt: T, cfg: &NormConfig<T>) -> Result<(T, T)> {
    let two = T::lit(2.0);
    let y1 = lp_in_time(&rhs.f, dt, two, cfg.quadrature, |f| Ok(lp_pow_all(f, two)))?;
    let y2 = lp_in_time(&rhs.g, dt, cfg.p, cfg.quadrature, |f| {
        Ok(lp_norm_pow(f, cfg.p))
    })?;
    Ok((y1, y2))
}

/// `E = int rho(phi) |v|^2 / 2 + eps |grad phi|^2 / 2 + W(phi) / eps`.
pub fn energy<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
) -> Result<T> {
    let half = T::lit(0.5);
    let eps = params.epsilon();
    let g = grad(phi)?;
    let mut acc = T::zero();
    for n in 0..phi.values().len() {
        let s = phi.values()[n];
        let (vx, vy) = (v.x.values()[n], v.y.values()[n]);
        let (gx, gy) = (g.x.values()[n], g.y.values()[n]);
        acc = acc
            + params.rho(s) * (vx * vx + vy * vy) * half
            + eps * (gx * gx + gy * gy) * half
            + params.w(s) / eps;
    }
    Ok(acc * phi.grid().cell_area())
}

/// `int phi dx`.
pub fn mass<T: Real>(phi: &ScalarField<T>) -> T {
    phi.integral()
}

/// `||div v||_{L^2}`.
pub fn div_residual<T: Real>(v: &VectorField<T>) -> Result<T> {
    Ok(div(v)?.l2_norm())
}

/// Aggregated norms and physical time series of a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct NormReport {
    pub v_norm: f64,
    pub phi_norm: f64,
    pub y1_norm: f64,
    pub y2_norm: f64,
    pub energy: Vec<f64>,
    pub mass: Vec<f64>,
    pub div_residual: Vec<f64>,
    pub max_abs_phi: Vec<f64>,
}

impl NormReport {
    pub fn is_valid(&self) -> bool {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        [self.v_norm, self.phi_norm, self.y1_norm, self.y2_norm]
            .into_iter()
            .all(ok)
            && self
                .energy
                .iter()
                .chain(&self.div_residual)
                .chain(&self.max_abs_phi)
                .all(|&x| ok(x))
            && self.mass.iter().all(|m| m.is_finite())
    }
}

/// Per-state physical diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StateDiagnostics {
    pub energy: f64,
    pub mass: f64,
    pub div_residual: f64,
    pub max_abs_phi: f64,
}

pub fn state_diagnostics<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
) -> Result<StateDiagnostics> {
    Ok(StateDiagnostics {
        energy: energy(v, phi, params)?.as_f64(),
        mass: mass(phi).as_f64(),
        div_residual: div_residual(v)?.as_f64(),
        max_abs_phi: phi.max_abs().as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{leray_project, Grid};
    use crate::operators::Frozen;

    fn grid() -> Grid<f64> {
        Grid::periodic_2pi(16).unwrap()
    }

    #[test]
    fn p_bounds() {
        assert!(NormConfig::<f64>::new(7.0, TimeQuadrature::Trapezoid).is_err());
        assert!(NormConfig::<f64>::new(4.0, TimeQuadrature::Trapezoid).is_err());
        assert!(NormConfig::<f64>::new(4.5, TimeQuadrature::Trapezoid).is_ok());
        assert!(NormConfig::<f64>::unconstrained(2.0, TimeQuadrature::Trapezoid).is_ok());
        let msg = NormConfig::<f64>::new(7.0, TimeQuadrature::Trapezoid)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("4 < p < 6"), "{msg}");
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        let s: Vec<f64> = (0..=4).map(|j| 2.0 + 3.0 * j as f64 * 0.25).collect();
        assert!((time_integral(&s, 0.25, TimeQuadrature::Trapezoid) - (2.0 + 1.5)).abs() < 1e-14);
    }

    #[test]
    fn zero_trajectory_norms() {
        let g = grid();
        let p = ModelParams::standard();
        let frozen = Frozen::from_phi(&ScalarField::zeros(&g), &p).unwrap();
        let t = WindowTrajectory::constant(
            &VectorField::zeros(&g),
            &ScalarField::zeros(&g),
            frozen,
            0.0,
            0.1,
            4,
        )
        .unwrap();
        assert_eq!(xt_norm(&t, &NormConfig::default()).unwrap(), (0.0, 0.0));
        let d = DataTrajectory::zeros(&g, 4);
        assert_eq!(
            yt_norm(&d, 0.1, &NormConfig::default()).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn constant_in_time_scaling() {
        let g = grid();
        let p = ModelParams::standard();
        let cfg = NormConfig::default();
        let v0 = leray_project(&VectorField::from_fn(
            &g,
            |_, y| y.sin(),
            |x, y| (x + y).cos(),
        ))
        .unwrap();
        let phi0 = ScalarField::from_fn(&g, |x, y| 0.5 * (x - y).sin());
        let frozen = Frozen::from_phi(&phi0, &p).unwrap();
        let a = WindowTrajectory::constant(&v0, &phi0, frozen.clone(), 0.0, 0.1, 4).unwrap();
        let b = WindowTrajectory::constant(&v0, &phi0, frozen, 0.0, 0.2, 4).unwrap();
        let pa = xt_norm_parts(a.v(), a.phi(), a.dt(), &cfg).unwrap();
        let pb = xt_norm_parts(b.v(), b.phi(), b.dt(), &cfg).unwrap();
        assert_eq!(pa.v_time_derivative, 0.0);
        assert_eq!(pa.phi_time_derivative, 0.0);
        assert!((pb.v_h2 / pa.v_h2 - 2f64.sqrt()).abs() < 1e-12);
        assert!((pb.phi_w4 / pa.phi_w4 - 2f64.powf(1.0 / 4.5)).abs() < 1e-12);
        assert_eq!(pa.v_initial, pb.v_initial);
    }

    #[test]
    fn y_norm_closed_form_and_p2_consistency() {
        let g = grid();
        let f = VectorField::from_fn(&g, |_, y| y.sin(), |_, _| 0.0);
        let s = ScalarField::from_fn(&g, |x, _| x.cos());
        let d = DataTrajectory {
            f: vec![f.clone(); 5],
            g: vec![s.clone(); 5],
        };
        let cfg2 = NormConfig::unconstrained(2.0, TimeQuadrature::Trapezoid).unwrap();
        let (y1, y2) = yt_norm(&d, 0.05, &cfg2).unwrap();
        let t = 0.2f64;
        assert!((y1 - t.sqrt() * f.l2_norm()).abs() < 1e-12);
        assert!((y2 - t.sqrt() * s.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn energy_closed_forms() {
        let g = grid();
        let p = ModelParams::standard();
        let z = VectorField::zeros(&g);
        assert_eq!(
            energy(&z, &ScalarField::constant(&g, 1.0), &p).unwrap(),
            0.0
        );
        let e0 = energy(&z, &ScalarField::zeros(&g), &p).unwrap();
        assert!((e0 - g.area() / (4.0 * 0.1)).abs() < 1e-10);
    }

    #[test]
    fn projection_does_not_raise_kinetic_energy() {
        let g = grid();
        let p = ModelParams::standard().with_matched_density();
        let phi = ScalarField::constant(&g, 0.3);
        let v = VectorField::from_fn(&g, |x, y| x.sin() + y.cos(), |x, y| (x + y).sin());
        let pv = leray_project(&v).unwrap();
        assert!(energy(&pv, &phi, &p).unwrap() <= energy(&v, &phi, &p).unwrap());
    }

    #[test]
    fn mass_and_divergence() {
        let g = grid();
        assert!((mass(&ScalarField::constant(&g, 0.25)) - 0.25 * g.area()).abs() < 1e-12);
        let v = leray_project(&VectorField::from_fn(
            &g,
            |x, y| x.sin() * y.cos(),
            |x, _| x.cos(),
        ))
        .unwrap();
        assert!(div_residual(&v).unwrap() <= 1e-11);
    }
}
